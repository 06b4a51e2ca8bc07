//! Constructive demonstration that a loop holonomy acting as a target gate
//! on the ground space and as the identity (up to phase) on the excited
//! space exists for any excited dimension d₂.
//!
//! A base loop `H(s) = e^{sK} H₀ e^{−sK}` with block-off-diagonal generator
//! `K = [[0, −B†], [B, 0]]`, `B = π u v†`, transports exactly as the
//! reflection `e^K = (1 − 2vv†) ⊕ (1 − 2uu†)` (the adiabatic connection of
//! a block-off-diagonal generator vanishes on each eigenblock). Two such
//! reflections compose to an arbitrary ground-space rotation `A`; choosing
//! `A^{d₂} ∝ W₁` and conjugating the pair by `1 ⊕ C₂ᵏ` for k = 0..d₂−1,
//! where C₂ cyclically permutes the eigenbasis of the excited-block
//! holonomy W₂, averages the excited action to a scalar.

use num_complex::Complex64;

use crate::linalg::{self, CMat, C0, C1};

use super::EngineError;

/// Supported ground-space target gates for the demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma1Target {
    X,
    Hadamard,
}

impl Lemma1Target {
    fn matrix(&self) -> CMat {
        let s2 = 1.0 / 2.0f64.sqrt();
        match self {
            Lemma1Target::X => {
                CMat::from_shape_fn((2, 2), |(i, j)| if i != j { C1 } else { C0 })
            }
            Lemma1Target::Hadamard => CMat::from_shape_fn((2, 2), |(i, j)| {
                Complex64::new(if (i, j) == (1, 1) { -s2 } else { s2 }, 0.0)
            }),
        }
    }

    /// Bloch rotation axis of the gate (X about x̂; Hadamard about
    /// (x̂+ẑ)/√2).
    fn axis(&self) -> [f64; 3] {
        match self {
            Lemma1Target::X => [1.0, 0.0, 0.0],
            Lemma1Target::Hadamard => {
                let s2 = 1.0 / 2.0f64.sqrt();
                [s2, 0.0, s2]
            }
        }
    }
}

/// Outcome of the demonstration: residuals of the evolved holonomy against
/// the block form W₁ ⊕ e^{iα}·1.
#[derive(Clone, Debug)]
pub struct Lemma1Outcome {
    pub d2: usize,
    /// Phase-fitted max-norm distance of the ground block from the target.
    pub ground_residual: f64,
    /// Max-norm distance of the excited block from (tr/d₂)·1.
    pub excited_residual: f64,
    /// Max-norm of the off-diagonal (ground↔excited) blocks.
    pub cross_residual: f64,
    /// Transport steps per sub-loop at self-convergence.
    pub steps: usize,
}

/// Unit vector in C² for the +1 eigenstate of n·σ.
fn bloch_plus(n: [f64; 3]) -> [Complex64; 2] {
    let theta = n[2].acos();
    let phi = n[1].atan2(n[0]);
    [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// e^{sK} for K = [[0, −B†],[B, 0]], B = π u v†, ‖u‖ = ‖v‖ = 1:
/// a rotation by πs in the plane spanned by (v, 0) and (0, u).
fn exp_sk(s: f64, u: &[Complex64], v: &[Complex64; 2], dim: usize) -> CMat {
    let mut k = CMat::from_elem((dim, dim), C0);
    let pi = std::f64::consts::PI;
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            // B = π u v†: excited row block (rows 2.., cols 0..2).
            k[(2 + i, j)] = Complex64::new(pi, 0.0) * ui * vj.conj();
            // −B†.
            k[(j, 2 + i)] = -Complex64::new(pi, 0.0) * vj * ui.conj();
        }
    }
    // K³ = −π²K, so e^{sK} = 1 + sin(πs)/π·K + (1−cos(πs))/π²·K².
    let k2 = k.dot(&k);
    let a = Complex64::new((pi * s).sin() / pi, 0.0);
    let b = Complex64::new((1.0 - (pi * s).cos()) / (pi * pi), 0.0);
    linalg::identity(dim) + &k * a + &k2 * b
}

/// Diagonalize a (normal) unitary: returns the eigenvector columns. The
/// Hermitian and anti-Hermitian parts commute, so a joint eigenbasis is
/// found by diagonalizing the Hermitian part and resolving degeneracies
/// with the anti-Hermitian part within each eigenspace.
fn unitary_eigenbasis(w: &CMat) -> CMat {
    let d = w.dim().0;
    let half = Complex64::new(0.5, 0.0);
    let herm = (w + &linalg::dagger(w)) * half;
    let (vals, vecs) = linalg::hermitian_eigen(&herm);
    // Group degenerate eigenvalues and rediagonalize the anti-Hermitian
    // part inside each group.
    let anti = (w - &linalg::dagger(w)) * Complex64::new(0.0, -0.5);
    let mut basis = vecs;
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && (vals[j] - vals[i]).abs() < 1e-9 {
            j += 1;
        }
        if j - i > 1 {
            // Project the anti-Hermitian part into the degenerate block.
            let cols: Vec<usize> = (i..j).collect();
            let mut block = CMat::from_elem((j - i, j - i), C0);
            for (a, &ca) in cols.iter().enumerate() {
                for (b, &cb) in cols.iter().enumerate() {
                    let mut acc = C0;
                    for r in 0..d {
                        for c in 0..d {
                            acc += basis[(r, ca)].conj() * anti[(r, c)] * basis[(c, cb)];
                        }
                    }
                    block[(a, b)] = acc;
                }
            }
            let (_, sub) = linalg::hermitian_eigen(&block);
            let mut rotated = CMat::from_elem((d, j - i), C0);
            for r in 0..d {
                for b in 0..(j - i) {
                    let mut acc = C0;
                    for (a, &ca) in cols.iter().enumerate() {
                        acc += basis[(r, ca)] * sub[(a, b)];
                    }
                    rotated[(r, b)] = acc;
                }
            }
            for (b, &cb) in cols.iter().enumerate() {
                for r in 0..d {
                    basis[(r, cb)] = rotated[(r, b)];
                }
            }
        }
        i = j;
    }
    basis
}

/// Run the demonstration: build the 2(d₂)-loop composite path, transport it
/// numerically with the discretized projector oracle, and measure the
/// block-structure residuals.
pub fn lemma1_demo(d2: usize, target: Lemma1Target) -> Result<Lemma1Outcome, EngineError> {
    assert!(d2 >= 1, "need at least one excited dimension");
    let dim = 2 + d2;
    // H₀: ground space = span(e₀, e₁) at −1, excited at +1.
    let mut h0 = linalg::identity(dim);
    h0[(0, 0)] = -C1;
    h0[(1, 1)] = -C1;

    // Two reflections composing to the rotation A = exp(−i(π/(2d₂)) m·σ):
    // reflection axes n₁, n₂ with n₁·n₂ = cos(π/(2d₂)) and n₂×n₁ ∝ m.
    let m = target.axis();
    let phi = std::f64::consts::FRAC_PI_2 / d2 as f64;
    // An orthonormal pair (p, q) perpendicular to m with q×p = m.
    let p = if m[2].abs() < 0.9 { orthonormalize([0.0, 0.0, 1.0], m) } else { [1.0, 0.0, 0.0] };
    let q = cross(m, p);
    let n1 = p;
    let n2 = [
        phi.cos() * p[0] + phi.sin() * q[0],
        phi.cos() * p[1] + phi.sin() * q[1],
        phi.cos() * p[2] + phi.sin() * q[2],
    ];
    let v1 = bloch_plus(n1);
    let v2 = bloch_plus(n2);
    // Generic fixed excited vectors.
    let u1 = unit_vec(d2, 0);
    let u2 = unit_vec(d2, 1);

    // Excited-block holonomy of the base pair and its cyclic conjugator.
    let w2 = reflect(d2, &u2).dot(&reflect(d2, &u1));
    let basis = unitary_eigenbasis(&w2);
    let mut c2 = CMat::from_elem((d2, d2), C0);
    for j in 0..d2 {
        let jn = (j + 1) % d2;
        for r in 0..d2 {
            for s in 0..d2 {
                c2[(r, s)] += basis[(r, jn)] * basis[(s, j)].conj();
            }
        }
    }

    // Composite Hamiltonian path: for k = 0..d₂, the conjugated base pair.
    let mut path: Vec<Box<dyn Fn(f64) -> CMat>> = Vec::new();
    for k in 0..d2 {
        let conj = embed_excited(&matrix_power(&c2, k), dim);
        let conj_d = linalg::dagger(&conj);
        for (u, v) in [(u1.clone(), v1), (u2.clone(), v2)] {
            let h0c = h0.clone();
            let conj = conj.clone();
            let conj_d = conj_d.clone();
            path.push(Box::new(move |s: f64| {
                let w = exp_sk(s, &u, &v, dim);
                let h = w.dot(&h0c).dot(&linalg::dagger(&w));
                conj.dot(&h).dot(&conj_d)
            }));
        }
    }

    // Discretized projector transport with per-step polar correction and
    // step doubling.
    let transport = |steps: usize| -> CMat {
        let half = Complex64::new(0.5, 0.0);
        let mut utot = linalg::identity(dim);
        for ham in &path {
            let proj = |s: f64| -> (CMat, CMat) {
                let h = ham(s);
                ((linalg::identity(dim) - &h) * half, (linalg::identity(dim) + &h) * half)
            };
            let (mut p_prev, mut q_prev) = proj(0.0);
            for k in 0..steps {
                let (p_next, q_next) = proj((k + 1) as f64 / steps as f64);
                let f = p_next.dot(&p_prev) + q_next.dot(&q_prev);
                utot = linalg::newton_unitarize(&f).dot(&utot);
                p_prev = p_next;
                q_prev = q_next;
            }
        }
        utot
    };
    let tol = 1e-10;
    let mut steps = 32;
    let mut prev = transport(steps);
    let u = loop {
        let next = transport(steps * 2);
        let diff = linalg::max_abs(&(&next - &prev));
        if diff <= tol {
            steps *= 2;
            break next;
        }
        if steps * 2 >= 1 << 14 {
            return Err(EngineError::NoConvergence { tol, reached: diff, steps: steps * 2 });
        }
        steps *= 2;
        prev = next;
    };

    // Block residuals.
    let wg = target.matrix();
    let mut ug = CMat::from_elem((2, 2), C0);
    for i in 0..2 {
        for j in 0..2 {
            ug[(i, j)] = u[(i, j)];
        }
    }
    let ground_residual = super::transport::phase_fitted_defect(&ug, &wg);
    let mut tr = C0;
    for i in 0..d2 {
        tr += u[(2 + i, 2 + i)];
    }
    let mean = tr / Complex64::new(d2 as f64, 0.0);
    let mut excited_residual = 0.0f64;
    for i in 0..d2 {
        for j in 0..d2 {
            let expect = if i == j { mean } else { C0 };
            excited_residual = excited_residual.max((u[(2 + i, 2 + j)] - expect).norm());
        }
    }
    let mut cross_residual = 0.0f64;
    for i in 0..2 {
        for j in 0..d2 {
            cross_residual = cross_residual.max(u[(i, 2 + j)].norm());
            cross_residual = cross_residual.max(u[(2 + j, i)].norm());
        }
    }
    Ok(Lemma1Outcome { d2, ground_residual, excited_residual, cross_residual, steps })
}

/// 1 − 2uu† on C^{d₂}.
fn reflect(d2: usize, u: &[Complex64]) -> CMat {
    let mut m = linalg::identity(d2);
    for i in 0..d2 {
        for j in 0..d2 {
            m[(i, j)] -= Complex64::new(2.0, 0.0) * u[i] * u[j].conj();
        }
    }
    m
}

/// A fixed generic unit vector in C^{d₂} (deterministic, seed-indexed).
fn unit_vec(d2: usize, which: u64) -> Vec<Complex64> {
    // Simple LCG for reproducible generic directions.
    let mut state = 0x9e3779b97f4a7c15u64.wrapping_add(which.wrapping_mul(0x2545f4914f6cdd1d));
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    let mut v: Vec<Complex64> = (0..d2).map(|_| Complex64::new(next(), next())).collect();
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= Complex64::new(norm, 0.0);
    }
    v
}

fn embed_excited(c: &CMat, dim: usize) -> CMat {
    let d2 = c.dim().0;
    let mut m = linalg::identity(dim);
    for i in 0..d2 {
        for j in 0..d2 {
            m[(2 + i, 2 + j)] = c[(i, j)];
        }
    }
    m
}

fn matrix_power(c: &CMat, k: usize) -> CMat {
    let mut m = linalg::identity(c.dim().0);
    for _ in 0..k {
        m = m.dot(c);
    }
    m
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Component of `v` orthogonal to the unit vector `m`, normalized.
fn orthonormalize(v: [f64; 3], m: [f64; 3]) -> [f64; 3] {
    let dot = v[0] * m[0] + v[1] * m[1] + v[2] * m[2];
    let r = [v[0] - dot * m[0], v[1] - dot * m[1], v[2] - dot * m[2]];
    let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    [r[0] / n, r[1] / n, r[2] / n]
}
