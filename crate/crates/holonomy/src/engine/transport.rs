//! Independent parallel-transport oracle: discretized projector transport
//! with per-step polar correction and step-doubling self-convergence. The
//! result carries no dynamical phase, so it isolates the geometric content
//! of a schedule.

use num_complex::Complex64;

use crate::linalg::{self, CMat, C1};
use crate::schedule::{BranchPath, Schedule, SegmentOp};

use super::{control_projector, EngineError, SupportUnitary};

/// Transport result with the step count at which self-convergence was
/// reached.
#[derive(Clone, Debug)]
pub struct TransportResult {
    pub unitary: SupportUnitary,
    /// Per-segment steps used when the doubling criterion was met.
    pub steps: usize,
}

/// Discrete projector transport of one branch at a fixed step count:
/// the ordered product of `P(θ_{k+1})P(θ_k) + Q(θ_{k+1})Q(θ_k)` over a
/// uniform grid θ ∈ [0, π/2], each factor replaced by its polar unitary
/// part.
fn branch_transport(branch: &BranchPath, support: &[usize], steps: usize) -> CMat {
    let dim = 1usize << support.len();
    if branch.is_frozen() {
        return linalg::identity(dim);
    }
    let ms = branch.start.matrix(support);
    let me = branch.end.matrix(support);
    let half = Complex64::new(0.5, 0.0);
    let ham = |theta: f64| -> CMat {
        &ms * Complex64::new(theta.cos(), 0.0) + &me * Complex64::new(theta.sin(), 0.0)
    };
    let proj_pair = |h: &CMat| -> (CMat, CMat) {
        let p = (linalg::identity(dim) - h) * half;
        let q = (linalg::identity(dim) + h) * half;
        (p, q)
    };
    let mut u = linalg::identity(dim);
    let dtheta = std::f64::consts::FRAC_PI_2 / steps as f64;
    let (mut p_prev, mut q_prev) = proj_pair(&ham(0.0));
    for k in 0..steps {
        let (p_next, q_next) = proj_pair(&ham((k + 1) as f64 * dtheta));
        let f = p_next.dot(&p_prev) + q_next.dot(&q_prev);
        u = linalg::newton_unitarize(&f).dot(&u);
        p_prev = p_next;
        q_prev = q_next;
    }
    u
}

/// Transport of one segment (branch-resolved for conditioned segments).
fn segment_transport(
    op: &SegmentOp,
    support: &[usize],
    steps: usize,
) -> CMat {
    match op {
        SegmentOp::Plain(b) => branch_transport(b, support, steps),
        SegmentOp::Controlled { control, zero, one } => {
            let u0 = branch_transport(zero, support, steps);
            let u1 = branch_transport(one, support, steps);
            let p0 = control_projector(*control, 0, support);
            let p1 = control_projector(*control, 1, support);
            p0.dot(&u0) + p1.dot(&u1)
        }
    }
}

/// Parallel transport of a whole schedule, doubling the per-segment step
/// count from 16 until two successive refinements agree to `tol` in the
/// max-entry norm.
pub fn parallel_transport(schedule: &Schedule) -> Result<TransportResult, EngineError> {
    parallel_transport_with_tol(schedule, 1e-10)
}

/// [`parallel_transport`] with an explicit self-convergence tolerance.
pub fn parallel_transport_with_tol(
    schedule: &Schedule,
    tol: f64,
) -> Result<TransportResult, EngineError> {
    if schedule.segments.is_empty() {
        return Err(EngineError::Empty);
    }
    let support = schedule.support();
    // Transport each segment on its own (small) support and embed the
    // result; segment Hamiltonians act as the identity outside it.
    let run = |steps: usize| -> CMat {
        let dim = 1usize << support.len();
        let mut u = linalg::identity(dim);
        for seg in &schedule.segments {
            let seg_support = seg.support();
            let local = segment_transport(&seg.op, &seg_support, steps);
            u = super::embed_ordered(&local, &seg_support, &support).dot(&u);
        }
        u
    };
    let mut steps = 16;
    let mut prev = run(steps);
    loop {
        let next_steps = steps * 2;
        let next = run(next_steps);
        let diff = linalg::max_abs(&(&next - &prev));
        if diff <= tol {
            return Ok(TransportResult {
                unitary: SupportUnitary { support, matrix: next },
                steps: next_steps,
            });
        }
        if next_steps >= 4096 {
            return Err(EngineError::NoConvergence { tol, reached: diff, steps: next_steps });
        }
        steps = next_steps;
        prev = next;
    }
}

/// Exact quarter-rotation transport of a plain segment,
/// `(1 − M_S M_E)/√2`, used as an analytic cross-check of the discretized
/// oracle.
pub fn quarter_turn_transport(branch: &BranchPath, support: &[usize]) -> CMat {
    let dim = 1usize << support.len();
    let ms = branch.start.matrix(support);
    let me = branch.end.matrix(support);
    (linalg::identity(dim) - ms.dot(&me)) * Complex64::new(1.0 / 2.0f64.sqrt(), 0.0)
}

/// Phase-fitted distance of U from the embedded target gate:
/// min_φ max-norm of (U − e^{iφ}W), with φ fit on the largest entry.
pub fn phase_fitted_defect(u: &CMat, w: &CMat) -> f64 {
    // Fit the phase on the trace of W†U; fall back to the largest entry
    // ratio when the trace vanishes.
    let t = linalg::trace(&linalg::dagger(w).dot(u));
    let phase = if t.norm() > 1e-12 {
        t / t.norm()
    } else {
        let mut best = (0.0, C1);
        for (a, b) in u.iter().zip(w.iter()) {
            if b.norm() > best.0 && a.norm() > 1e-12 {
                best = (b.norm(), a / b * Complex64::new(b.norm() / a.norm(), 0.0));
            }
        }
        best.1
    };
    linalg::max_abs(&(u - &(w * phase)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{bacon_shor, cat_code, grid_qubit, GroupState};
    use crate::linalg::C0;
    use crate::engine::embed_ordered;
    use crate::schedule::{
        compile_cnot, compile_conditional_clifford, compile_on_block,
        compile_single_qubit, compile_toffoli_conditional, concat_schedules, EnvelopeKind,
        GateKind, TargetGate,
    };

    #[test]
    fn discrete_transport_matches_quarter_turn_form() {
        let code = bacon_shor();
        let (_, s) = compile_on_block(&code, GateKind::T, 1, 1).unwrap();
        let support = s.support();
        for seg in &s.segments {
            if let SegmentOp::Plain(b) = &seg.op {
                let exact = quarter_turn_transport(b, &support);
                let disc = branch_transport(b, &support, 64);
                assert!(linalg::max_abs(&(&disc - &exact)) < 1e-10);
            }
        }
    }

    #[test]
    fn single_qubit_transports_match_targets() {
        let code = bacon_shor();
        for gate in [
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::P,
            GateKind::PDag,
            GateKind::W,
            GateKind::T,
            GateKind::TDag,
        ] {
            let (_, s) = compile_on_block(&code, gate, 1, 1).unwrap();
            let t = parallel_transport(&s).unwrap();
            let (tq, tm) = s.target.unitary().unwrap();
            let w = embed_ordered(&tm, &tq, &t.unitary.support);
            let d = phase_fitted_defect(&t.unitary.matrix, &w);
            assert!(d < 1e-9, "{gate:?}: defect {d}");
        }
    }

    #[test]
    fn transport_is_envelope_independent() {
        // The geometric content does not depend on the envelope family.
        let code = bacon_shor();
        let (_, s) = compile_on_block(&code, GateKind::T, 1, 1).unwrap();
        let a = parallel_transport(&s).unwrap();
        let b = parallel_transport(&s.clone().with_envelope(EnvelopeKind::Bump)).unwrap();
        assert!(linalg::max_abs(&(&a.unitary.matrix - &b.unitary.matrix)) < 1e-12);
    }

    #[test]
    fn cnot_transport_is_exact() {
        let code = bacon_shor();
        let mut gs = GroupState::new(18);
        gs.add_code_block(&code, 0).unwrap();
        gs.add_code_block(&code, 9).unwrap();
        let s = compile_cnot(&mut gs, grid_qubit(1, 1), 9 + grid_qubit(1, 1)).unwrap();
        let t = parallel_transport(&s).unwrap();
        let (tq, tm) = s.target.unitary().unwrap();
        let w = embed_ordered(&tm, &tq, &t.unitary.support);
        let d = phase_fitted_defect(&t.unitary.matrix, &w);
        assert!(d < 1e-9, "defect {d}");
    }

    #[test]
    fn cnot_without_control_correction_needs_phase() {
        // Dropping the P† loop on the control leaves the conditioned
        // holonomy |0⟩⟨0|⊗1 + i|1⟩⟨1|⊗X on (control, target).
        let code = bacon_shor();
        let mut gs = GroupState::new(18);
        gs.add_code_block(&code, 0).unwrap();
        gs.add_code_block(&code, 9).unwrap();
        let control = grid_qubit(1, 1);
        let target = 9 + grid_qubit(1, 1);
        let mut s = compile_cnot(&mut gs, control, target).unwrap();
        s.segments.drain(0..4);
        s.loop_starts = vec![0];
        let t = parallel_transport(&s).unwrap();
        let mut m = CMat::from_elem((4, 4), C0);
        m[(0, 0)] = C1;
        m[(1, 1)] = C1;
        m[(2, 3)] = Complex64::new(0.0, 1.0);
        m[(3, 2)] = Complex64::new(0.0, 1.0);
        let w = embed_ordered(&m, &[control, target], &t.unitary.support);
        let d = phase_fitted_defect(&t.unitary.matrix, &w);
        assert!(d < 1e-9, "defect {d}");
    }

    #[test]
    fn conditional_clifford_transport() {
        let code = bacon_shor();
        let cat = cat_code(2).unwrap();
        let mut gs = GroupState::new(11);
        gs.add_code_block(&code, 0).unwrap();
        gs.add_cat_block(&cat, 9).unwrap();
        let s =
            compile_conditional_clifford(&mut gs, GateKind::X, 9, grid_qubit(1, 1)).unwrap();
        let t = parallel_transport(&s).unwrap();
        let (tq, tm) = s.target.unitary().unwrap();
        let w = embed_ordered(&tm, &tq, &t.unitary.support);
        let d = phase_fitted_defect(&t.unitary.matrix, &w);
        assert!(d < 1e-9, "defect {d}");
    }

    #[test]
    fn toffoli_transport_is_exact() {
        let code = bacon_shor();
        let cat = cat_code(2).unwrap();
        let mut gs = GroupState::new(20);
        gs.add_code_block(&code, 0).unwrap();
        gs.add_code_block(&code, 9).unwrap();
        gs.add_cat_block(&cat, 18).unwrap();
        let (cq, q2, q3) = (18, grid_qubit(1, 1), 9 + grid_qubit(1, 1));
        let parts = compile_toffoli_conditional(&mut gs, cq, q2, q3).unwrap();
        let total = concat_schedules(&parts, TargetGate::Toffoli { control: cq, q2, q3 });
        let t = parallel_transport(&total).unwrap();
        let (tq, tm) = total.target.unitary().unwrap();
        let w = embed_ordered(&tm, &tq, &t.unitary.support);
        let d = phase_fitted_defect(&t.unitary.matrix, &w);
        assert!(d < 1e-8, "defect {d}");
    }

    #[test]
    fn single_qubit_transport_composition() {
        // Composing the X and Z transports gives the Y transport up to a
        // phase (an independent composition check).
        let code = bacon_shor();
        let mut gs = GroupState::new(9);
        gs.add_code_block(&code, 0).unwrap();
        let sx = compile_single_qubit(&mut gs, GateKind::X, 0).unwrap();
        let sz = compile_single_qubit(&mut gs, GateKind::Z, 0).unwrap();
        let ux = parallel_transport(&sx).unwrap();
        let uz = parallel_transport(&sz).unwrap();
        assert_eq!(ux.unitary.support, uz.unitary.support);
        let composed = uz.unitary.matrix.dot(&ux.unitary.matrix);
        let (_, y) = TargetGate::Single { gate: GateKind::Y, qubit: 0 }.unitary().unwrap();
        let w = embed_ordered(&y, &[0], &ux.unitary.support);
        let d = phase_fitted_defect(&composed, &w);
        assert!(d < 1e-9, "defect {d}");
    }
}
