//! Small dense complex-matrix helpers: Kronecker products, Pauli-string
//! matrices on a chosen qubit support, unitarization, and a Jacobi
//! eigensolver for Hermitian matrices.
//!
//! All matrices are `ndarray::Array2<Complex64>`. Qubit-index convention:
//! for a support list `[q0, q1, …]` (ascending), `q0` is the most
//! significant bit of the basis index, so `|q0 q1 …⟩` reads left to right.

use ndarray::Array2;
use num_complex::Complex64;

use crate::pauli::{Factor, PauliString};

/// Dense complex matrix type used throughout the engine.
pub type CMat = Array2<Complex64>;

/// Complex zero.
pub const C0: Complex64 = Complex64::new(0.0, 0.0);
/// Complex one.
pub const C1: Complex64 = Complex64::new(1.0, 0.0);
/// Imaginary unit.
pub const CI: Complex64 = Complex64::new(0.0, 1.0);

/// The d×d identity matrix.
pub fn identity(d: usize) -> CMat {
    Array2::eye(d)
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::from_elem((ra * rb, ca * cb), C0);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    let (r, c) = a.dim();
    let mut out = Array2::from_elem((c, r), C0);
    for i in 0..r {
        for j in 0..c {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

/// Frobenius norm.
pub fn frob_norm(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Trace.
pub fn trace(a: &CMat) -> Complex64 {
    let d = a.dim().0.min(a.dim().1);
    (0..d).map(|i| a[(i, i)]).sum()
}

/// ‖U†U − I‖ as a unitarity defect.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let d = u.dim().0;
    let mut g = dagger(u).dot(u);
    for i in 0..d {
        g[(i, i)] -= C1;
    }
    frob_norm(&g)
}

/// The 2×2 matrix of a single Pauli factor.
pub fn factor_matrix(f: Factor) -> CMat {
    let m = match f {
        Factor::I => [[C1, C0], [C0, C1]],
        Factor::X => [[C0, C1], [C1, C0]],
        Factor::Y => [[C0, -CI], [CI, C0]],
        Factor::Z => [[C1, C0], [C0, -C1]],
    };
    Array2::from_shape_fn((2, 2), |(i, j)| m[i][j])
}

/// Dense matrix of a Pauli string restricted to a qubit support list.
///
/// Every qubit in the string's support must appear in `support`; qubits of
/// `support` where the string acts as identity contribute identity factors.
/// Panics if the string acts outside `support` (a programming error).
pub fn pauli_matrix(p: &PauliString, support: &[usize]) -> CMat {
    for q in p.support() {
        assert!(support.contains(&q), "Pauli acts on qubit {q} outside the support list");
    }
    let mut out = Array2::from_elem((1, 1), phase_value(p.printed_phase_exponent()));
    for &q in support {
        out = kron(&out, &factor_matrix(p.factor(q)));
    }
    out
}

/// i^k as a complex number.
pub fn phase_value(k: u8) -> Complex64 {
    match k % 4 {
        0 => C1,
        1 => CI,
        2 => -C1,
        _ => -CI,
    }
}

/// Project a near-unitary matrix (c·U with 0 < c ≤ ~1.3) onto the unitary
/// group with Newton–Schulz iterations X ← X(3I − X†X)/2.
pub fn newton_unitarize(u: &CMat) -> CMat {
    let d = u.dim().0;
    let mut x = u.clone();
    for _ in 0..200 {
        let g = dagger(&x).dot(&x);
        let mut defect = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let t = g[(i, j)] - if i == j { C1 } else { C0 };
                defect = defect.max(t.norm());
            }
        }
        if defect < 1e-14 {
            break;
        }
        let mut m = identity(d) * Complex64::new(3.0, 0.0);
        m = m - g;
        x = x.dot(&m) * Complex64::new(0.5, 0.0);
    }
    x
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns (eigenvalues ascending, unitary whose columns are the
/// corresponding eigenvectors).
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let d = h.dim().0;
    assert_eq!(h.dim().1, d);
    let mut a = h.clone();
    let mut v = identity(d);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.norm() < 1e-16 {
                    continue;
                }
                // 2×2 Hermitian block [[app, apq], [apq*, aqq]]: rotate by
                // angle θ with phase e^{iφ} = apq/|apq|.
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phi = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let c = Complex64::new(theta.cos(), 0.0);
                let s = phi * Complex64::new(theta.sin(), 0.0);
                // Columns p, q of A and V are mixed by
                // G = [[c, −s], [s̄, c]] acting on the right; rows by G†.
                for i in 0..d {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * s.conj();
                    a[(i, q)] = -aip * s + aiq * c;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * s.conj();
                    v[(i, q)] = -vip * s + viq * c;
                }
                for j in 0..d {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c.conj() * apj + s * aqj;
                    a[(q, j)] = -s.conj() * apj + c * aqj;
                }
            }
        }
    }
    // Sort ascending by eigenvalue.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = Array2::from_elem((d, d), C0);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..d {
            vecs[(r, col)] = v[(r, i)];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        let d = a - b;
        max_abs(&d) < tol
    }

    #[test]
    fn kron_and_pauli_matrix_agree() {
        let zz: PauliString = "ZZ".parse().unwrap();
        let m = pauli_matrix(&zz, &[0, 1]);
        let z = factor_matrix(Factor::Z);
        assert!(close(&m, &kron(&z, &z), 1e-15));
        // Identity padding on an enlarged support.
        let z0: PauliString = "ZI".parse().unwrap();
        let m = pauli_matrix(&z0, &[0, 1]);
        assert!(close(&m, &kron(&z, &identity(2)), 1e-15));
    }

    #[test]
    fn pauli_matrix_phase() {
        let miy: PauliString = "-iY".parse().unwrap();
        let m = pauli_matrix(&miy, &[0]);
        let expected = factor_matrix(Factor::Y) * (-CI);
        assert!(close(&m, &expected, 1e-15));
    }

    #[test]
    fn mul_matches_dense_exhaustively() {
        // All pairs of 2-qubit Pauli strings with all phases.
        let letters = [Factor::I, Factor::X, Factor::Y, Factor::Z];
        let mut strings = Vec::new();
        for a in letters {
            for b in letters {
                for ph in 0..4u8 {
                    let p = PauliString::from_factors(&[a, b]).unwrap().with_phase_exponent(ph);
                    strings.push(p);
                }
            }
        }
        let sup = [0usize, 1];
        for p in &strings {
            for q in &strings {
                let prod = p.mul(q).unwrap();
                let dense = pauli_matrix(p, &sup).dot(&pauli_matrix(q, &sup));
                assert!(
                    close(&pauli_matrix(&prod, &sup), &dense, 1e-12),
                    "{p} * {q} = {prod}"
                );
                let com = p.commutes(q).unwrap();
                let ab = pauli_matrix(p, &sup).dot(&pauli_matrix(q, &sup));
                let ba = pauli_matrix(q, &sup).dot(&pauli_matrix(p, &sup));
                assert_eq!(com, close(&ab, &ba, 1e-12), "commutes({p},{q})");
            }
        }
    }

    #[test]
    fn conjugate_matches_dense() {
        use crate::pauli::CliffordGate;
        let s2 = 1.0 / 2.0f64.sqrt();
        let h = Array2::from_shape_fn((2, 2), |(i, j)| {
            Complex64::new(if (i, j) == (1, 1) { -s2 } else { s2 }, 0.0)
        });
        let pgate = Array2::from_shape_fn((2, 2), |(i, j)| match (i, j) {
            (0, 0) => C1,
            (1, 1) => CI,
            _ => C0,
        });
        let cx = Array2::from_shape_fn((4, 4), |(i, j)| {
            let t = [(0, 0), (1, 1), (2, 3), (3, 2)];
            if t.contains(&(i, j)) {
                C1
            } else {
                C0
            }
        });
        let gates: Vec<(CliffordGate, CMat)> = vec![
            (CliffordGate::H(0), kron(&h, &identity(2))),
            (CliffordGate::Phase(1), kron(&identity(2), &pgate)),
            (CliffordGate::PhaseDag(1), kron(&identity(2), &dagger(&pgate))),
            (CliffordGate::Cnot { control: 0, target: 1 }, cx.clone()),
            (
                CliffordGate::Cnot { control: 1, target: 0 },
                // Reversed CNOT: swap roles via basis reorder H⊗H · CX · H⊗H.
                {
                    let hh = kron(&h, &h);
                    hh.dot(&cx).dot(&hh)
                },
            ),
            (
                CliffordGate::X(0),
                kron(&factor_matrix(Factor::X), &identity(2)),
            ),
            (
                CliffordGate::Y(1),
                kron(&identity(2), &factor_matrix(Factor::Y)),
            ),
            (
                CliffordGate::Z(0),
                kron(&factor_matrix(Factor::Z), &identity(2)),
            ),
        ];
        let letters = [Factor::I, Factor::X, Factor::Y, Factor::Z];
        let sup = [0usize, 1];
        for a in letters {
            for b in letters {
                for ph in 0..4u8 {
                    let p = PauliString::from_factors(&[a, b]).unwrap().with_phase_exponent(ph);
                    for (g, u) in &gates {
                        let conj = p.conjugated_by(g).unwrap();
                        let dense = u.dot(&pauli_matrix(&p, &sup)).dot(&dagger(u));
                        assert!(
                            close(&pauli_matrix(&conj, &sup), &dense, 1e-12),
                            "{g:?} on {p} -> {conj}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn newton_unitarize_recovers_scaled_unitary() {
        let z = factor_matrix(Factor::Z);
        let scaled = z * Complex64::new(0.7, 0.0);
        let u = newton_unitarize(&scaled);
        assert!(close(&u, &factor_matrix(Factor::Z), 1e-12));
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn jacobi_diagonalizes_random_hermitian() {
        // Fixed pseudo-random Hermitian matrix.
        let d = 5;
        let mut h = Array2::from_elem((d, d), C0);
        let mut s = 1u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for i in 0..d {
            for j in i..d {
                let v = if i == j {
                    Complex64::new(rnd(), 0.0)
                } else {
                    Complex64::new(rnd(), rnd())
                };
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let (vals, vecs) = hermitian_eigen(&h);
        // H V = V diag(vals)
        let hv = h.dot(&vecs);
        for c in 0..d {
            for r in 0..d {
                let want = vecs[(r, c)] * vals[c];
                assert!((hv[(r, c)] - want).norm() < 1e-10, "col {c}");
            }
        }
        assert!(unitarity_defect(&vecs) < 1e-10);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }
}
