//! Mid-schedule Pauli error injection with syndrome decoding.
//!
//! The register state is a dense vector over all block qubits; schedule
//! propagators act on their (small) support and are cached per injection
//! time, so sweeps over error locations reuse the expensive evolution.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{self, SubsystemCode, Syndrome};
use crate::pauli::{Factor, PauliString};
use crate::schedule::{compile_cnot, compile_single_qubit, EnvelopeKind, GateKind, Schedule};

use super::{evolve_range, DtPolicy, EngineError, SupportUnitary};

/// Dense state vector on `n` qubits (qubit 0 is the most significant
/// index bit, matching the dense-matrix support convention).
#[derive(Clone, Debug)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩.
    pub fn zero(n: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn bit_of(&self, qubit: usize) -> usize {
        self.n - 1 - qubit
    }

    /// Apply a Pauli string (including its phase).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        assert_eq!(p.n(), self.n);
        let mut xbits = 0usize;
        let mut zbits = 0usize;
        for q in 0..self.n {
            let b = 1usize << self.bit_of(q);
            if p.x_mask() & (1 << q) != 0 {
                xbits |= b;
            }
            if p.z_mask() & (1 << q) != 0 {
                zbits |= b;
            }
        }
        let phase = crate::linalg::phase_value(p.phase_exponent());
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            // X^x Z^z |b⟩ = (−1)^{z·b} |b ⊕ x⟩.
            let sign = if ((i & zbits).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            out[i ^ xbits] += phase * Complex64::new(sign, 0.0) * a;
        }
        self.amps = out;
    }

    /// ⟨ψ|P|ψ⟩ (real for Hermitian P).
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let mut copy = self.clone();
        copy.apply_pauli(p);
        self.amps
            .iter()
            .zip(&copy.amps)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Projective measurement of a Hermitian Pauli; returns true for the
    /// −1 outcome and collapses the state.
    pub fn measure(&mut self, p: &PauliString, rng: &mut impl Rng) -> bool {
        let mut pv = self.clone();
        pv.apply_pauli(p);
        let exp: f64 = self
            .amps
            .iter()
            .zip(&pv.amps)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let p_plus = ((1.0 + exp) / 2.0).clamp(0.0, 1.0);
        let minus = rng.gen::<f64>() >= p_plus;
        let sign = if minus { -1.0 } else { 1.0 };
        for (a, b) in self.amps.iter_mut().zip(&pv.amps) {
            *a = (*a + b * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
        }
        let norm = self.norm();
        for a in &mut self.amps {
            *a /= Complex64::new(norm, 0.0);
        }
        minus
    }

    /// Project onto the +1 eigenspace of a Hermitian Pauli and renormalize
    /// (used for preparing codewords).
    pub fn project_plus(&mut self, p: &PauliString) {
        let mut pv = self.clone();
        pv.apply_pauli(p);
        for (a, b) in self.amps.iter_mut().zip(&pv.amps) {
            *a = (*a + b) * Complex64::new(0.5, 0.0);
        }
        let norm = self.norm();
        assert!(norm > 1e-12, "projection annihilated the state");
        for a in &mut self.amps {
            *a /= Complex64::new(norm, 0.0);
        }
    }

    /// Apply a unitary acting on an explicit support list.
    pub fn apply_support_unitary(&mut self, u: &SupportUnitary) {
        let k = u.support.len();
        let dim = 1usize << k;
        assert_eq!(u.matrix.dim(), (dim, dim));
        let shifts: Vec<usize> = u.support.iter().map(|&q| self.bit_of(q)).collect();
        let support_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let scatter = |local: usize| -> usize {
            let mut g = 0usize;
            for (j, &s) in shifts.iter().enumerate() {
                if (local >> (k - 1 - j)) & 1 == 1 {
                    g |= 1 << s;
                }
            }
            g
        };
        let locals: Vec<usize> = (0..dim).map(scatter).collect();
        let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if base & support_mask != 0 {
                continue;
            }
            for (l, g) in locals.iter().enumerate() {
                scratch[l] = self.amps[base | g];
            }
            for (r, gr) in locals.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, s) in scratch.iter().enumerate() {
                    acc += u.matrix[(r, c)] * s;
                }
                self.amps[base | gr] = acc;
            }
        }
    }
}

/// One code block at an offset in the register.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub code: SubsystemCode,
    pub offset: usize,
}

impl BlockLayout {
    fn embedded(&self, p: &PauliString, n: usize) -> PauliString {
        p.embedded(n, self.offset).expect("block fits the register")
    }
}

/// An injected Pauli error at a fractional schedule time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub factor: Factor,
    pub qubit: usize,
    /// Fraction of the total (scaled) schedule duration.
    pub fraction: f64,
}

/// Per-block decoding record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub syndrome: Vec<bool>,
    pub correction: String,
    /// Weight of the correction after reduction by stabilizer/gauge
    /// elements (number of independent physical errors it accounts for).
    pub residual_weight: usize,
    pub consistent: bool,
}

/// Verdict of one injection run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InjectVerdict {
    pub gate: String,
    pub error: String,
    pub fraction: f64,
    pub slowdown: f64,
    pub seed: u64,
    pub logical_fidelity: f64,
    pub blocks: Vec<BlockOutcome>,
    pub pass: bool,
}

/// Reference logical expectations: pairs of logical Pauli labels (one letter
/// per block, `I`/`X`/`Y`/`Z`) and their ideal values.
pub type LogicalReference = Vec<(String, f64)>;

/// Injection runner for a gate given as a list of schedule parts applied in
/// order (each part evolves on its own small support, so transversal gates
/// over many qubits stay tractable). Pre- and post-error propagators are
/// cached per injection time so error sweeps reuse them, and the verdict
/// scores the corrected logical content against the error-free run.
pub struct InjectRunner {
    pub parts: Vec<Schedule>,
    pub blocks: Vec<BlockLayout>,
    pub slowdown: f64,
    pub policy: DtPolicy,
    /// Logical preparation: per block, `+1` logical-Z (|0̄⟩) or `+1`
    /// logical-X (|+̄⟩) eigenstate.
    pub prepare_plus: Vec<bool>,
    pub fidelity_floor: f64,
    n: usize,
    gate: String,
    full: Option<Vec<SupportUnitary>>,
    cache: HashMap<u64, (Vec<SupportUnitary>, Vec<SupportUnitary>)>,
    reference: Option<Vec<f64>>,
}

impl InjectRunner {
    pub fn new(
        parts: Vec<Schedule>,
        gate: impl Into<String>,
        blocks: Vec<BlockLayout>,
        slowdown: f64,
        prepare_plus: Vec<bool>,
    ) -> InjectRunner {
        assert!(!parts.is_empty(), "empty gate");
        let n = parts[0].n;
        assert!(parts.iter().all(|p| p.n == n), "parts on different registers");
        InjectRunner {
            parts,
            blocks,
            slowdown,
            policy: DtPolicy::default(),
            prepare_plus,
            fidelity_floor: 1.0 - 1e-3,
            n,
            gate: gate.into(),
            full: None,
            cache: HashMap::new(),
            reference: None,
        }
    }

    /// Gauge-fixed initial codeword product state.
    fn initial_state(&self) -> StateVector {
        let mut psi = StateVector::zero(self.n);
        for (block, &plus) in self.blocks.iter().zip(&self.prepare_plus) {
            // |0…0⟩ is already a +1 eigenstate of every Z-type stabilizer
            // and gauge generator; fix the X-type ones by projection.
            for g in block.code.stabilizer_gens.iter().chain(&block.code.gauge_gens) {
                if g.x_mask() != 0 {
                    psi.project_plus(&block.embedded(g, self.n));
                }
            }
            if plus {
                psi.project_plus(&block.embedded(&block.code.logical_x, self.n));
            }
        }
        psi
    }

    fn full_parts(&mut self) -> Result<Vec<SupportUnitary>, EngineError> {
        if let Some(full) = &self.full {
            return Ok(full.clone());
        }
        let mut out = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            out.push(super::evolve(p, self.slowdown, &self.policy)?);
        }
        self.full = Some(out.clone());
        Ok(out)
    }

    /// Propagator lists before and after the cut at `fraction` of the total
    /// scaled duration (the cut lands inside exactly one part).
    fn propagators(
        &mut self,
        fraction: f64,
    ) -> Result<(Vec<SupportUnitary>, Vec<SupportUnitary>), EngineError> {
        let key = fraction.to_bits();
        if let Some(pair) = self.cache.get(&key) {
            return Ok(pair.clone());
        }
        let full = self.full_parts()?;
        let durations: Vec<f64> =
            self.parts.iter().map(|p| p.total_duration() * self.slowdown).collect();
        let total: f64 = durations.iter().sum();
        let mut cut = fraction.clamp(0.0, 1.0) * total;
        let mut k = 0;
        while k + 1 < self.parts.len() && cut > durations[k] {
            cut -= durations[k];
            k += 1;
        }
        let mut before: Vec<SupportUnitary> = full[..k].to_vec();
        before.push(evolve_range(&self.parts[k], self.slowdown, &self.policy, 0.0, cut)?);
        let mut after =
            vec![evolve_range(&self.parts[k], self.slowdown, &self.policy, cut, durations[k])?];
        after.extend_from_slice(&full[k + 1..]);
        self.cache.insert(key, (before.clone(), after.clone()));
        Ok((before, after))
    }

    /// Measure every stabilizer generator projectively, decode and correct
    /// per block; returns the per-block records.
    fn decode_blocks(
        &self,
        psi: &mut StateVector,
        rng: &mut impl rand::Rng,
    ) -> Result<Vec<BlockOutcome>, EngineError> {
        let mut blocks_out = Vec::new();
        for block in &self.blocks {
            let mut bits = Vec::new();
            for g in &block.code.stabilizer_gens {
                bits.push(psi.measure(&block.embedded(g, self.n), rng));
            }
            let syndrome = Syndrome { bits: bits.clone() };
            let decoded = codes::decode(&block.code, &syndrome).map_err(ScheduleConv::from)?;
            psi.apply_pauli(&block.embedded(&decoded.correction, self.n));
            let residual_weight = reduced_weight(&block.code, &decoded.correction);
            blocks_out.push(BlockOutcome {
                syndrome: bits,
                correction: decoded.correction.to_string(),
                residual_weight,
                consistent: decoded.consistent,
            });
        }
        Ok(blocks_out)
    }

    /// Logical expectations of the error-free corrected run, in the fixed
    /// label order of [`logical_labels`]; computed once.
    pub fn reference_expectations(&mut self) -> Result<Vec<f64>, EngineError> {
        if let Some(r) = &self.reference {
            return Ok(r.clone());
        }
        let full = self.full_parts()?;
        let mut psi = self.initial_state();
        for u in &full {
            psi.apply_support_unitary(u);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let _ = self.decode_blocks(&mut psi, &mut rng)?;
        let r = self.logical_expectations(&psi);
        self.reference = Some(r.clone());
        Ok(r)
    }

    /// Run one injection: evolve to the error time, apply the Pauli error,
    /// finish the gate, measure every stabilizer generator projectively,
    /// decode and correct per block, and score the corrected logical
    /// content against the error-free run.
    pub fn run(&mut self, event: ErrorEvent, seed: u64) -> Result<InjectVerdict, EngineError> {
        let reference = self.reference_expectations()?;
        let (before, after) = self.propagators(event.fraction)?;
        let mut psi = self.initial_state();
        for u in &before {
            psi.apply_support_unitary(u);
        }
        let err = PauliString::single(self.n, event.qubit, event.factor)
            .map_err(ScheduleConv::from)?;
        psi.apply_pauli(&err);
        for u in &after {
            psi.apply_support_unitary(u);
        }

        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let blocks_out = self.decode_blocks(&mut psi, &mut rng)?;

        // Logical overlap with the error-free run: (1/2^b) Σ_L ⟨L̄⟩·⟨L̄⟩_ref
        // over all logical Pauli labels (the identity label contributes 1).
        let b = self.blocks.len();
        let expectations = self.logical_expectations(&psi);
        let dot: f64 =
            expectations.iter().zip(&reference).map(|(a, r)| a * r).sum::<f64>();
        let logical_fidelity = (1.0 + dot) / (1 << b) as f64;
        let pass = logical_fidelity >= self.fidelity_floor
            && blocks_out.iter().all(|bo| bo.consistent && bo.residual_weight <= 1);
        Ok(InjectVerdict {
            gate: self.gate.clone(),
            error: format!("{}@{}", err, event.qubit),
            fraction: event.fraction,
            slowdown: self.slowdown,
            seed,
            logical_fidelity,
            blocks: blocks_out,
            pass,
        })
    }

    /// All non-identity logical Pauli labels over the blocks, in a fixed
    /// base-4 digit order (I, X, Y, Z per block).
    pub fn logical_labels(&self) -> Vec<String> {
        let b = self.blocks.len();
        let mut out = Vec::with_capacity(4usize.pow(b as u32) - 1);
        for idx in 1..4usize.pow(b as u32) {
            let mut label = String::with_capacity(b);
            let mut v = idx;
            for _ in 0..b {
                label.push(['I', 'X', 'Y', 'Z'][v % 4]);
                v /= 4;
            }
            out.push(label);
        }
        out
    }

    /// ⟨L̄⟩ for every label of [`logical_labels`].
    fn logical_expectations(&self, psi: &StateVector) -> Vec<f64> {
        self.logical_labels()
            .iter()
            .map(|label| psi.expectation(&self.logical_operator(label)))
            .collect()
    }

    fn logical_operator(&self, label: &str) -> PauliString {
        let mut op = PauliString::identity(self.n);
        for (block, ch) in self.blocks.iter().zip(label.chars()) {
            let logical = match ch {
                'I' => continue,
                'X' => block.embedded(&block.code.logical_x, self.n),
                'Z' => block.embedded(&block.code.logical_z, self.n),
                'Y' => {
                    let x = block.embedded(&block.code.logical_x, self.n);
                    let z = block.embedded(&block.code.logical_z, self.n);
                    // Hermitian logical Y = iX̄Z̄.
                    x.mul(&z).expect("same width").times_i()
                }
                other => panic!("bad logical label {other:?}"),
            };
            op = op.mul(&logical).expect("same width");
        }
        op
    }
}

/// Minimal weight of `p` times any product of up to 4 stabilizer/gauge
/// generators — the number of independent physical errors a correction
/// accounts for (a Y correction split across a row and a column reduces
/// back to weight 1).
fn reduced_weight(code: &SubsystemCode, p: &PauliString) -> usize {
    let gens: Vec<PauliString> = code
        .stabilizer_gens
        .iter()
        .chain(&code.gauge_gens)
        .copied()
        .collect();
    let mut best = p.weight();
    if best == 0 {
        return 0;
    }
    let m = gens.len();
    let mut consider = |cand: PauliString| {
        best = best.min(cand.weight());
    };
    for i in 0..m {
        let pi = p.mul(&gens[i]).expect("same width");
        consider(pi);
        for j in i + 1..m {
            let pij = pi.mul(&gens[j]).expect("same width");
            consider(pij);
            for k in j + 1..m {
                let pijk = pij.mul(&gens[k]).expect("same width");
                consider(pijk);
                for gl in &gens[k + 1..] {
                    consider(pijk.mul(gl).expect("same width"));
                }
            }
        }
    }
    best
}

/// Convenience conversion of code/Pauli errors into [`EngineError`].
struct ScheduleConv;

impl ScheduleConv {
    fn from<E: Into<crate::schedule::ScheduleError>>(e: E) -> EngineError {
        EngineError::Schedule(e.into())
    }
}

/// Reference expectations for a single-block gate acting on |0̄⟩.
pub fn single_block_reference(gate: crate::schedule::GateKind) -> LogicalReference {
    use crate::schedule::GateKind;
    // Bloch vector of gate|0⟩ for the supported injection targets.
    match gate {
        GateKind::X | GateKind::Y => vec![("Z".into(), -1.0)],
        GateKind::Z | GateKind::P | GateKind::PDag | GateKind::T | GateKind::TDag => {
            vec![("Z".into(), 1.0)]
        }
        GateKind::W => vec![("X".into(), 1.0)],
    }
}

/// Reference expectations for a CNOT acting on |+̄⟩⊗|0̄⟩ (a logical Bell
/// pair): ⟨X̄X̄⟩ = ⟨Z̄Z̄⟩ = 1, ⟨ȲȲ⟩ = −1.
pub fn cnot_bell_reference() -> LogicalReference {
    vec![("XX".into(), 1.0), ("ZZ".into(), 1.0), ("YY".into(), -1.0)]
}

/// Schedule parts for the logical X on one Bacon-Shor block: physical X
/// loops on the three first-row qubits, each a standalone part.
pub fn logical_x_parts(
    envelope: EnvelopeKind,
) -> Result<Vec<Schedule>, crate::schedule::ScheduleError> {
    let code = codes::bacon_shor();
    let mut gs = codes::GroupState::new(code.n);
    gs.add_code_block(&code, 0)?;
    (1..=3)
        .map(|col| {
            compile_single_qubit(&mut gs, GateKind::X, codes::grid_qubit(1, col))
                .map(|s| s.with_envelope(envelope))
        })
        .collect()
}

/// Schedule parts for the logical Z on one Bacon-Shor block: physical Z
/// loops on the three first-column qubits.
pub fn logical_z_parts(
    envelope: EnvelopeKind,
) -> Result<Vec<Schedule>, crate::schedule::ScheduleError> {
    let code = codes::bacon_shor();
    let mut gs = codes::GroupState::new(code.n);
    gs.add_code_block(&code, 0)?;
    (1..=3)
        .map(|row| {
            compile_single_qubit(&mut gs, GateKind::Z, codes::grid_qubit(row, 1))
                .map(|s| s.with_envelope(envelope))
        })
        .collect()
}

/// Schedule parts for the logical CNOT between two Bacon-Shor blocks
/// (control block at offset 0, target block at offset 9): nine pairwise
/// CNOTs, one per grid position.
pub fn logical_cnot_parts(
    envelope: EnvelopeKind,
) -> Result<Vec<Schedule>, crate::schedule::ScheduleError> {
    let code = codes::bacon_shor();
    let mut gs = codes::GroupState::new(2 * code.n);
    gs.add_code_block(&code, 0)?;
    gs.add_code_block(&code, code.n)?;
    (0..code.n)
        .map(|q| compile_cnot(&mut gs, q, code.n + q).map(|s| s.with_envelope(envelope)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{bacon_shor, grid_qubit};
    use crate::linalg::CMat;
    use crate::schedule::{EnvelopeKind, GateKind};

    #[test]
    fn state_vector_pauli_algebra() {
        let mut psi = StateVector::zero(2);
        // X on qubit 0 (most significant).
        let x0: PauliString = "XI".parse().unwrap();
        psi.apply_pauli(&x0);
        assert!((psi.amps[2].re - 1.0).abs() < 1e-15);
        let z0: PauliString = "ZI".parse().unwrap();
        assert!((psi.expectation(&z0) + 1.0).abs() < 1e-15);
        // Y phase: Y|0⟩ = i|1⟩.
        let mut psi = StateVector::zero(1);
        psi.apply_pauli(&"Y".parse().unwrap());
        assert!((psi.amps[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn support_unitary_application_matches_embedding() {
        // Applying a support unitary equals applying its full embedding.
        let mut m = CMat::from_elem((2, 2), Complex64::new(0.0, 0.0));
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        let su = SupportUnitary { support: vec![1], matrix: m };
        let mut psi = StateVector::zero(3);
        psi.apply_support_unitary(&su);
        // X on qubit 1 of |000⟩ → |010⟩ → index bit 1 (middle).
        assert!((psi.amps[0b010].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn measurement_collapses_and_is_reproducible() {
        let mut psi = StateVector::zero(1);
        // |+⟩.
        psi.amps = vec![
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
        ];
        let z: PauliString = "Z".parse().unwrap();
        let mut rng1 = ChaCha12Rng::seed_from_u64(7);
        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        let a = psi.clone().measure(&z, &mut rng1);
        let b = psi.measure(&z, &mut rng2);
        assert_eq!(a, b);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.expectation(&z).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_correction_reduces_to_weight_one() {
        let code = bacon_shor();
        // The decoded correction for a Y error at (2,2) touches a row and a
        // column qubit but is gauge-equivalent to the single Y.
        let err = PauliString::single(9, grid_qubit(2, 2), Factor::Y).unwrap();
        let syn = codes::syndrome_of(&code, &err).unwrap();
        let dec = codes::decode(&code, &syn).unwrap();
        assert_eq!(reduced_weight(&code, &dec.correction), 1);
    }

    /// Assert the error-free run of `runner` reproduces the analytic
    /// logical expectations.
    fn assert_reference_matches(runner: &mut InjectRunner, analytic: &LogicalReference) {
        let reference = runner.reference_expectations().unwrap();
        let labels = runner.logical_labels();
        for (label, expected) in analytic {
            let i = labels.iter().position(|l| l == label).unwrap();
            assert!(
                (reference[i] - expected).abs() < 1e-3,
                "⟨{label}⟩ = {} vs analytic {expected}",
                reference[i]
            );
        }
    }

    #[test]
    fn injected_error_is_corrected_on_x_gate() {
        let parts = logical_x_parts(EnvelopeKind::Bump).unwrap();
        let code = bacon_shor();
        let mut runner = InjectRunner::new(
            parts,
            "X",
            vec![BlockLayout { code, offset: 0 }],
            17.0,
            vec![false],
        );
        assert_reference_matches(&mut runner, &single_block_reference(GateKind::X));
        for (factor, qubit, fraction) in [
            (Factor::I, grid_qubit(1, 1), 0.5),
            (Factor::Z, grid_qubit(1, 1), 0.31),
            (Factor::X, grid_qubit(2, 3), 0.55),
            (Factor::Y, grid_qubit(3, 2), 0.08),
        ] {
            let v = runner
                .run(ErrorEvent { factor, qubit, fraction }, 11)
                .unwrap();
            assert!(v.pass, "{factor:?}@{qubit}: fidelity {}", v.logical_fidelity);
        }
    }

    #[test]
    fn injected_error_is_corrected_on_cnot() {
        let parts = logical_cnot_parts(EnvelopeKind::Bump).unwrap();
        let code = bacon_shor();
        let mut runner = InjectRunner::new(
            parts,
            "CNOT",
            vec![
                BlockLayout { code: code.clone(), offset: 0 },
                BlockLayout { code, offset: 9 },
            ],
            17.0,
            vec![true, false],
        );
        assert_reference_matches(&mut runner, &cnot_bell_reference());
        let v = runner
            .run(
                ErrorEvent { factor: Factor::Z, qubit: grid_qubit(1, 2), fraction: 0.45 },
                23,
            )
            .unwrap();
        assert!(v.pass, "fidelity {}", v.logical_fidelity);
        // An error on the second block too.
        let v = runner
            .run(
                ErrorEvent { factor: Factor::X, qubit: 9 + grid_qubit(3, 3), fraction: 0.7 },
                29,
            )
            .unwrap();
        assert!(v.pass, "fidelity {}", v.logical_fidelity);
    }
}
