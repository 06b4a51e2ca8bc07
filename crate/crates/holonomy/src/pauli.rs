//! Exact algebra of phased Pauli strings and conjugation by a fixed
//! Clifford gate set.
//!
//! A [`PauliString`] on `n ≤ 64` qubits is stored as two bit masks plus an
//! integer phase exponent: the operator is `i^phase · Π_q X_q^{x_q} Z_q^{z_q}`.
//! A qubit with both bits set carries the product `XZ = −iY`, so the phase
//! exponent of a string printed with a `Y` letter differs from the stored
//! exponent; the printer and parser account for this so that text forms like
//! `-ZIIIIIIII` or `+iYX` round-trip exactly. No floating point is used in
//! this module: the paper-level sign conventions (e.g. `−Z⊗G̃` starting
//! Hamiltonians) stay bit-exact.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Maximum number of qubits representable by one string (mask width).
pub const MAX_QUBITS: usize = 64;

/// Errors from Pauli-string construction, algebra, and parsing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit counts differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("qubit count {0} exceeds the supported maximum {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("qubit index {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("cannot parse Pauli string: {0}")]
    Parse(String),
}

/// A single-qubit Pauli factor (without phase).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    I,
    X,
    Y,
    Z,
}

impl Factor {
    /// The (x, z) bit pair encoding this factor.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Factor::I => (false, false),
            Factor::X => (true, false),
            Factor::Y => (true, true),
            Factor::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Factor {
        match (x, z) {
            (false, false) => Factor::I,
            (true, false) => Factor::X,
            (true, true) => Factor::Y,
            (false, true) => Factor::Z,
        }
    }

    /// Letter used in the text form.
    pub fn letter(self) -> char {
        match self {
            Factor::I => 'I',
            Factor::X => 'X',
            Factor::Y => 'Y',
            Factor::Z => 'Z',
        }
    }
}

impl FromStr for Factor {
    type Err = PauliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "i" => Ok(Factor::I),
            "X" | "x" => Ok(Factor::X),
            "Y" | "y" => Ok(Factor::Y),
            "Z" | "z" => Ok(Factor::Z),
            other => Err(PauliError::Parse(format!("unknown Pauli factor {other:?}"))),
        }
    }
}

/// A phased tensor product of single-qubit Pauli operators.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    /// Exponent of `i` in the stored form `i^phase · Π X^x Z^z`, mod 4.
    phase: u8,
}

impl PauliString {
    /// The identity operator on `n` qubits.
    ///
    /// Panics if `n > MAX_QUBITS` (a programming error, not an input error).
    pub fn identity(n: usize) -> PauliString {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        PauliString { n, x: 0, z: 0, phase: 0 }
    }

    /// A single non-identity factor on one qubit, identity elsewhere.
    pub fn single(n: usize, qubit: usize, factor: Factor) -> Result<PauliString, PauliError> {
        if n > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        if qubit >= n {
            return Err(PauliError::QubitOutOfRange { qubit, n });
        }
        let mut p = PauliString::identity(n);
        let (bx, bz) = factor.bits();
        if bx {
            p.x |= 1 << qubit;
        }
        if bz {
            p.z |= 1 << qubit;
        }
        if bx && bz {
            // Y is stored as iXZ: i·(XZ) = i·(−iY) = Y.
            p.phase = 1;
        }
        Ok(p)
    }

    /// Build a string from per-qubit factors (qubit 0 first), phase +1.
    pub fn from_factors(factors: &[Factor]) -> Result<PauliString, PauliError> {
        if factors.len() > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(factors.len()));
        }
        let mut p = PauliString::identity(factors.len());
        let mut ys = 0u8;
        for (q, f) in factors.iter().enumerate() {
            let (bx, bz) = f.bits();
            if bx {
                p.x |= 1 << q;
            }
            if bz {
                p.z |= 1 << q;
            }
            if bx && bz {
                ys = ys.wrapping_add(1);
            }
        }
        p.phase = ys % 4;
        Ok(p)
    }

    /// Number of qubits (including identity positions).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bit mask of X components.
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    /// Bit mask of Z components.
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Stored phase exponent: the operator equals `i^phase · Π X^x Z^z`.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    /// Phase exponent of the *printed* form `i^k · Π {I,X,Y,Z}` (Y as a
    /// proper Hermitian factor rather than the internal iXZ product).
    pub fn printed_phase_exponent(&self) -> u8 {
        let ys = (self.x & self.z).count_ones() as u8;
        (self.phase + 3 * (ys % 4)) % 4
    }

    /// The factor on one qubit, ignoring the overall phase.
    pub fn factor(&self, qubit: usize) -> Factor {
        debug_assert!(qubit < self.n);
        Factor::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    /// Number of qubits with a non-identity factor.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Indices of qubits with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut m = self.x | self.z;
        while m != 0 {
            let q = m.trailing_zeros() as usize;
            out.push(q);
            m &= m - 1;
        }
        out
    }

    /// True when both masks are zero (the operator is a phase times I).
    pub fn is_identity_op(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the operator is Hermitian (printed phase ±1).
    pub fn is_hermitian(&self) -> bool {
        self.printed_phase_exponent().is_multiple_of(2)
    }

    /// Group product `self · other` with exact phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        if self.n != other.n {
            return Err(PauliError::DimensionMismatch(self.n, other.n));
        }
        // Reorder (X^a Z^b)(X^c Z^d): each Z in self moving past an X in
        // other contributes −1 = i².
        let swaps = (self.z & other.x).count_ones() as u8;
        Ok(PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + 2 * (swaps % 2)) % 4,
        })
    }

    /// True iff the operators commute (symplectic inner product is even).
    pub fn commutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.n != other.n {
            return Err(PauliError::DimensionMismatch(self.n, other.n));
        }
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        Ok(s.is_multiple_of(2))
    }

    /// The same operator multiplied by −1.
    pub fn negated(&self) -> PauliString {
        let mut p = *self;
        p.phase = (p.phase + 2) % 4;
        p
    }

    /// The same operator multiplied by i.
    pub fn times_i(&self) -> PauliString {
        let mut p = *self;
        p.phase = (p.phase + 1) % 4;
        p
    }

    /// Copy with the stored phase exponent replaced.
    pub fn with_phase_exponent(&self, phase: u8) -> PauliString {
        let mut p = *self;
        p.phase = phase % 4;
        p
    }

    /// Copy with the factor on `qubit` replaced (phase of the remaining
    /// string is kept; the new factor contributes its own Y bookkeeping).
    pub fn with_factor(&self, qubit: usize, factor: Factor) -> PauliString {
        debug_assert!(qubit < self.n);
        let mut p = *self;
        let had_y = (p.x >> qubit) & (p.z >> qubit) & 1 == 1;
        if had_y {
            p.phase = (p.phase + 3) % 4;
        }
        p.x &= !(1 << qubit);
        p.z &= !(1 << qubit);
        let (bx, bz) = factor.bits();
        if bx {
            p.x |= 1 << qubit;
        }
        if bz {
            p.z |= 1 << qubit;
        }
        if bx && bz {
            p.phase = (p.phase + 1) % 4;
        }
        p
    }

    /// Copy with identity on `qubit` (other factors and sign retained).
    pub fn without_qubit(&self, qubit: usize) -> PauliString {
        self.with_factor(qubit, Factor::I)
    }

    /// Embed into a larger register, shifting qubit indices by `offset`.
    pub fn embedded(&self, n: usize, offset: usize) -> Result<PauliString, PauliError> {
        if n > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        if offset + self.n > n {
            return Err(PauliError::QubitOutOfRange { qubit: offset + self.n - 1, n });
        }
        Ok(PauliString { n, x: self.x << offset, z: self.z << offset, phase: self.phase })
    }

    /// Conjugation `g · self · g†` by one Clifford gate.
    pub fn conjugated_by(&self, gate: &CliffordGate) -> Result<PauliString, PauliError> {
        for q in gate.qubits() {
            if q >= self.n {
                return Err(PauliError::QubitOutOfRange { qubit: q, n: self.n });
            }
        }
        let mut p = *self;
        match *gate {
            CliffordGate::H(q) => {
                let m = 1u64 << q;
                let bx = p.x & m != 0;
                let bz = p.z & m != 0;
                // X↔Z; Y → −Y.
                if bx && bz {
                    p.phase = (p.phase + 2) % 4;
                }
                p.x = (p.x & !m) | if bz { m } else { 0 };
                p.z = (p.z & !m) | if bx { m } else { 0 };
            }
            CliffordGate::Phase(q) | CliffordGate::PhaseDag(q) => {
                let m = 1u64 << q;
                if p.x & m != 0 {
                    // P: X→Y, Y→−X; P†: X→−Y, Y→X. In the XZ encoding both
                    // toggle the z bit; they differ by the phase increment.
                    p.z ^= m;
                    let inc = if matches!(gate, CliffordGate::Phase(_)) { 1 } else { 3 };
                    p.phase = (p.phase + inc) % 4;
                }
            }
            CliffordGate::X(q) => {
                if p.z & (1 << q) != 0 {
                    p.phase = (p.phase + 2) % 4;
                }
            }
            CliffordGate::Y(q) => {
                let m = 1u64 << q;
                if ((p.x ^ p.z) & m) != 0 {
                    p.phase = (p.phase + 2) % 4;
                }
            }
            CliffordGate::Z(q) => {
                if p.x & (1 << q) != 0 {
                    p.phase = (p.phase + 2) % 4;
                }
            }
            CliffordGate::Cnot { control, target } => {
                if control == target {
                    return Err(PauliError::Parse("CNOT control equals target".into()));
                }
                let mc = 1u64 << control;
                let mt = 1u64 << target;
                let xc = p.x & mc != 0;
                let zt = p.z & mt != 0;
                // X_c → X_cX_t, Z_t → Z_cZ_t, X_t and Z_c unchanged. In the
                // i^p·X^x·Z^z encoding the reordering into canonical form
                // crosses only commuting factors, so no phase correction.
                if xc {
                    p.x ^= mt;
                }
                if zt {
                    p.z ^= mc;
                }
            }
            CliffordGate::GridRotation { offset } => {
                // Transpose of the 3×3 grid starting at `offset`
                // (qubit offset + 3r + c ↔ offset + 3c + r); a permutation,
                // no phase change.
                let mut x = p.x;
                let mut z = p.z;
                for r in 0..3 {
                    for c in 0..r {
                        let a = offset + 3 * r + c;
                        let b = offset + 3 * c + r;
                        x = swap_bits(x, a, b);
                        z = swap_bits(z, a, b);
                    }
                }
                p.x = x;
                p.z = z;
            }
        }
        Ok(p)
    }
}

fn swap_bits(v: u64, a: usize, b: usize) -> u64 {
    let ba = (v >> a) & 1;
    let bb = (v >> b) & 1;
    let d = ba ^ bb;
    v ^ (d << a) ^ (d << b)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let token = match self.printed_phase_exponent() {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{token}")?;
        for q in 0..self.n {
            write!(f, "{}", self.factor(q).letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Parse the text form: optional phase token (`+`, `-`, `+i`, `-i`)
    /// followed by letters from {I, X, Y, Z}, qubit 0 first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (token, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1u8, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3u8, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0u8, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2u8, r)
        } else {
            (0u8, s)
        };
        if rest.is_empty() {
            return Err(PauliError::Parse(format!("no Pauli letters in {s:?}")));
        }
        let mut factors = Vec::with_capacity(rest.len());
        for ch in rest.chars() {
            factors.push(match ch {
                'I' => Factor::I,
                'X' => Factor::X,
                'Y' => Factor::Y,
                'Z' => Factor::Z,
                other => {
                    return Err(PauliError::Parse(format!("unexpected character {other:?}")))
                }
            });
        }
        let mut p = PauliString::from_factors(&factors)?;
        // from_factors yields printed phase 0; add the parsed token.
        p.phase = (p.phase + token) % 4;
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'d> Deserialize<'d> for PauliString {
    fn deserialize<D: Deserializer<'d>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// The fixed Clifford gate set used by the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordGate {
    /// Hadamard on one qubit.
    H(usize),
    /// Phase gate P = diag(1, i).
    Phase(usize),
    /// Inverse phase gate P† = diag(1, −i).
    PhaseDag(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot { control: usize, target: usize },
    /// 90° rotation (transpose) of a 3×3 grid block starting at `offset`.
    GridRotation { offset: usize },
}

impl CliffordGate {
    /// Qubits the gate touches.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::Phase(q)
            | CliffordGate::PhaseDag(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q) => vec![q],
            CliffordGate::Cnot { control, target } => vec![control, target],
            CliffordGate::GridRotation { offset } => (offset..offset + 9).collect(),
        }
    }
}
