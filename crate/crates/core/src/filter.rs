//! Minimum-norm CBF safety filter.

use crate::barrier::{BarrierConstraint, Cbf};
use crate::dynamics::{InertiaTensor, State, Wrench};
use crate::error::Result;
use crate::qp::{HalfSpace, KktResiduals, QpProblem, QpSolution};
use crate::scalar::Real;

/// Per-barrier values at the filtered step.
#[derive(Debug, Clone, PartialEq)]
pub struct CbfDiagnostics<T: Real> {
    pub constraint: BarrierConstraint<T>,
    /// Whether the constraint is in the optimal active set.
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T: Real> {
    pub u_star: Wrench<T>,
    pub correction_norm: T,
    pub diagnostics: Vec<CbfDiagnostics<T>>,
    pub kkt: KktResiduals<T>,
    /// Largest constraint violation of `u_star` when the constraints could not
    /// all be met; `None` when the QP was feasible.
    pub infeasible: Option<T>,
}

fn constraints<T: Real>(state: &State<T>, cbfs: &[Cbf<T>], inertia: &InertiaTensor<T>) -> Vec<BarrierConstraint<T>> {
    cbfs.iter().map(|c| c.constraint(state, inertia)).collect()
}

fn output<T: Real>(
    u_des: &Wrench<T>,
    cons: Vec<BarrierConstraint<T>>,
    sol: QpSolution<T, 6>,
    infeasible: Option<T>,
) -> FilterOutput<T> {
    let diagnostics = cons
        .into_iter()
        .enumerate()
        .map(|(i, constraint)| CbfDiagnostics {
            constraint,
            active: sol.active_set.contains(&i),
        })
        .collect();
    let u_star = Wrench::from_vector(&sol.u_star);
    FilterOutput {
        correction_norm: (sol.u_star - u_des.to_vector()).norm(),
        u_star,
        diagnostics,
        kkt: sol.kkt,
        infeasible,
    }
}

fn problem<T: Real>(u_des: &Wrench<T>, cons: &[BarrierConstraint<T>]) -> QpProblem<T, 6> {
    QpProblem::new(u_des.to_vector(), cons.iter().map(|c| HalfSpace::new(c.a, c.b)).collect())
}

/// Returns the wrench closest to `u_des` that satisfies every barrier
/// constraint, or [`crate::Error::Infeasible`].
pub fn filter<T: Real>(state: &State<T>, u_des: &Wrench<T>, cbfs: &[Cbf<T>], inertia: &InertiaTensor<T>) -> Result<FilterOutput<T>> {
    let cons = constraints(state, cbfs, inertia);
    let sol = problem(u_des, &cons).solve()?;
    Ok(output(u_des, cons, sol, None))
}

/// Like [`filter`], but an empty feasible set yields the least-violating
/// wrench with [`FilterOutput::infeasible`] set instead of an error.
pub fn filter_relaxed<T: Real>(
    state: &State<T>,
    u_des: &Wrench<T>,
    cbfs: &[Cbf<T>],
    inertia: &InertiaTensor<T>,
) -> Result<FilterOutput<T>> {
    let cons = constraints(state, cbfs, inertia);
    match problem(u_des, &cons).solve_or_relax() {
        Ok(sol) => Ok(output(u_des, cons, sol, None)),
        Err((_, Some(r))) => Ok(output(u_des, cons, r.solution, Some(r.max_violation))),
        Err((e, None)) => Err(e),
    }
}

/// Barrier values with no filtering: `u_star = u_des`, nothing active.
pub fn unfiltered<T: Real>(state: &State<T>, u_des: &Wrench<T>, cbfs: &[Cbf<T>], inertia: &InertiaTensor<T>) -> FilterOutput<T> {
    let cons = constraints(state, cbfs, inertia);
    let u = u_des.to_vector();
    let hs: Vec<_> = cons.iter().map(|c| HalfSpace::new(c.a, c.b)).collect();
    let kkt = crate::qp::residuals(&u, &hs, &u, &vec![T::zero(); hs.len()]);
    FilterOutput {
        u_star: *u_des,
        correction_norm: T::zero(),
        diagnostics: cons
            .into_iter()
            .map(|constraint| CbfDiagnostics { constraint, active: false })
            .collect(),
        kkt,
        infeasible: None,
    }
}

