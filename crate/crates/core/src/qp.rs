//! Minimum-norm projection onto a small polyhedron `{u : aᵢᵀu ≤ bᵢ}` by
//! exact active-set enumeration.

use nalgebra::{DMatrix, DVector, SVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gradients with norm below this are treated as `a = 0`.
pub const VACUOUS_NORM: f64 = 1e-10;
/// Largest number of constraints accepted (the search visits `2^m` subsets).
pub const MAX_CONSTRAINTS: usize = 16;

/// One half-space `aᵀu ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace<T: Real, const N: usize> {
    pub a: SVector<T, N>,
    pub b: T,
}

impl<T: Real, const N: usize> HalfSpace<T, N> {
    pub fn new(a: SVector<T, N>, b: T) -> Self {
        Self { a, b }
    }

    pub fn violation(&self, u: &SVector<T, N>) -> T {
        self.a.dot(u) - self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T: Real, const N: usize> {
    pub u_des: SVector<T, N>,
    pub constraints: Vec<HalfSpace<T, N>>,
}

/// Optimality residuals of a returned point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T: Real> {
    /// `‖u − u_des + Σ λᵢ aᵢ‖`.
    pub stationarity: T,
    /// `max(0, maxᵢ aᵢᵀu − bᵢ)`.
    pub primal: T,
    /// `max(0, −minᵢ λᵢ)`.
    pub dual: T,
    /// `maxᵢ |λᵢ (aᵢᵀu − bᵢ)|`.
    pub complementarity: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T: Real, const N: usize> {
    pub u_star: SVector<T, N>,
    /// Indices of the constraints in the optimal active set, ascending.
    pub active_set: Vec<usize>,
    /// One multiplier per input constraint; zero off the active set.
    pub multipliers: Vec<T>,
    pub correction_norm: T,
    pub kkt: KktResiduals<T>,
    /// Whether some active subset with dependent gradients had to be skipped.
    pub rank_deficient: bool,
}

/// Result of [`solve_or_relax`] when the polyhedron is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed<T: Real, const N: usize> {
    /// Projection onto `{aᵢᵀu ≤ bᵢ + t}` at the smallest feasible `t`.
    pub solution: QpSolution<T, N>,
    pub max_violation: T,
}

fn tolerance<T: Real>() -> T {
    // About 1.5e-9 for f64 and 3e-5 for f32.
    T::eps().sqrt() * T::lit(0.1)
}

impl<T: Real, const N: usize> QpProblem<T, N> {
    pub fn new(u_des: SVector<T, N>, constraints: Vec<HalfSpace<T, N>>) -> Self {
        Self { u_des, constraints }
    }

    fn validate(&self) -> Result<()> {
        if self.constraints.len() > MAX_CONSTRAINTS {
            return Err(Error::param("constraints", format!("at most {MAX_CONSTRAINTS} supported")));
        }
        let finite = self.u_des.iter().all(|x| x.is_finite())
            && self.constraints.iter().all(|c| c.b.is_finite() && c.a.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::param("qp", "non-finite entries"));
        }
        Ok(())
    }

    /// Projects `u_des` onto the feasible polyhedron.
    pub fn solve(&self) -> Result<QpSolution<T, N>> {
        self.validate()?;
        let vacuous = T::lit(VACUOUS_NORM);
        let mut live = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            if c.a.norm() < vacuous {
                if c.b < -vacuous {
                    return Err(Error::Infeasible {
                        max_violation: -c.b.to_subset().unwrap_or(f64::NAN),
                    });
                }
            } else {
                live.push(i);
            }
        }
        match enumerate(&self.u_des, &self.constraints, &live) {
            Some(sol) => Ok(sol),
            None => {
                let worst = self.constraints.iter().map(|c| c.violation(&self.u_des)).fold(T::zero(), |a, b| a.max(b));
                Err(Error::Infeasible {
                    max_violation: worst.to_subset().unwrap_or(f64::NAN),
                })
            }
        }
    }

    /// Like [`solve`](Self::solve), but on an empty polyhedron also returns
    /// the point minimizing the largest violation (the projection of `u_des`
    /// onto the uniformly relaxed set that is just barely nonempty).
    pub fn solve_or_relax(&self) -> std::result::Result<QpSolution<T, N>, (Error, Option<Relaxed<T, N>>)> {
        match self.solve() {
            Ok(sol) => Ok(sol),
            Err(e @ Error::Infeasible { .. }) => {
                let relaxed = self.least_violating();
                let err = match &relaxed {
                    Some(r) => Error::Infeasible {
                        max_violation: r.max_violation.to_subset().unwrap_or(f64::NAN),
                    },
                    None => e,
                };
                Err((err, relaxed))
            }
            Err(e) => Err((e, None)),
        }
    }

    fn least_violating(&self) -> Option<Relaxed<T, N>> {
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        let shifted = |t: T| -> Vec<HalfSpace<T, N>> {
            self.constraints.iter().map(|c| HalfSpace::new(c.a, c.b + t)).collect()
        };
        let mut hi = self
            .constraints
            .iter()
            .map(|c| c.violation(&self.u_des))
            .fold(T::zero(), |a, b| a.max(b));
        let mut lo = T::zero();
        let mut best = enumerate(&self.u_des, &shifted(hi), &all)?;
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if !(mid > lo && mid < hi) {
                break;
            }
            match enumerate(&self.u_des, &shifted(mid), &all) {
                Some(sol) => {
                    hi = mid;
                    best = sol;
                }
                None => lo = mid,
            }
        }
        // Report residuals against the relaxed problem but the true violation.
        let worst = self.constraints.iter().map(|c| c.violation(&best.u_star)).fold(T::zero(), |a, b| a.max(b));
        Some(Relaxed {
            solution: best,
            max_violation: worst,
        })
    }
}

/// Convenience wrapper around [`QpProblem::solve`].
pub fn solve<T: Real, const N: usize>(u_des: &SVector<T, N>, constraints: &[HalfSpace<T, N>]) -> Result<QpSolution<T, N>> {
    QpProblem::new(*u_des, constraints.to_vec()).solve()
}

/// Subsets of `live` in order of size, then lexicographically.
fn subsets(live: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let m = live.len();
    (0..=m).flat_map(move |k| combinations(m, k).into_iter().map(move |c| c.into_iter().map(|j| live[j]).collect()))
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > m {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the equality-constrained projection on `set`; `None` if the
/// gradients are linearly dependent.
fn project_on<T: Real, const N: usize>(
    u_des: &SVector<T, N>,
    cons: &[HalfSpace<T, N>],
    set: &[usize],
) -> Option<(SVector<T, N>, Vec<T>)> {
    let k = set.len();
    if k == 0 {
        return Some((*u_des, Vec::new()));
    }
    if k > N {
        return None;
    }
    let gram = DMatrix::from_fn(k, k, |i, j| cons[set[i]].a.dot(&cons[set[j]].a));
    let scale = (0..k).map(|i| gram[(i, i)]).fold(T::zero(), |a, b| a.max(b));
    let chol = nalgebra::Cholesky::new(gram)?;
    let l = chol.l_dirty();
    let pivot_floor = scale * T::eps().sqrt() * T::lit(1e-2);
    if (0..k).any(|i| l[(i, i)] * l[(i, i)] < pivot_floor) {
        return None;
    }
    let rhs = DVector::from_fn(k, |i, _| cons[set[i]].violation(u_des));
    let lambda = chol.solve(&rhs);
    let mut u = *u_des;
    for (i, &j) in set.iter().enumerate() {
        u -= cons[j].a * lambda[i];
    }
    Some((u, lambda.iter().copied().collect()))
}

fn enumerate<T: Real, const N: usize>(
    u_des: &SVector<T, N>,
    cons: &[HalfSpace<T, N>],
    live: &[usize],
) -> Option<QpSolution<T, N>> {
    let tol = tolerance::<T>();
    let mut rank_deficient = false;
    for set in subsets(live) {
        let Some((u, lambda)) = project_on(u_des, cons, &set) else {
            rank_deficient = true;
            continue;
        };
        if lambda.iter().any(|&l| l < -tol) {
            continue;
        }
        let feasible = live
            .iter()
            .all(|&i| cons[i].violation(&u) <= tol * (T::one() + cons[i].b.abs()));
        if !feasible {
            continue;
        }
        let mut multipliers = vec![T::zero(); cons.len()];
        for (l, &i) in lambda.iter().zip(&set) {
            multipliers[i] = l.max(T::zero());
        }
        let kkt = residuals(u_des, cons, &u, &multipliers);
        return Some(QpSolution {
            u_star: u,
            correction_norm: (u - u_des).norm(),
            active_set: set,
            multipliers,
            kkt,
            rank_deficient,
        });
    }
    None
}

/// KKT residuals of `(u, λ)` for the projection of `u_des`.
pub fn residuals<T: Real, const N: usize>(
    u_des: &SVector<T, N>,
    cons: &[HalfSpace<T, N>],
    u: &SVector<T, N>,
    multipliers: &[T],
) -> KktResiduals<T> {
    let mut grad = u - u_des;
    let mut primal = T::zero();
    let mut dual = T::zero();
    let mut comp = T::zero();
    for (c, &l) in cons.iter().zip(multipliers) {
        grad += c.a * l;
        let v = c.violation(u);
        primal = primal.max(v);
        dual = dual.max(-l);
        comp = comp.max((l * v).abs());
    }
    KktResiduals {
        stationarity: grad.norm(),
        primal,
        dual,
        complementarity: comp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Vector2, Vector6};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v6(rng: &mut ChaCha8Rng, s: f64) -> Vector6<f64> {
        Vector6::from_fn(|_, _| rng.gen_range(-s..s))
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
        let all: Vec<_> = subsets(&[4, 7]).collect();
        assert_eq!(all, vec![vec![], vec![4], vec![7], vec![4, 7]]);
    }

    #[test]
    fn interior_point_is_unchanged() {
        let u = Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let sol = solve(&u, &[HalfSpace::new(Vector6::x(), 10.0)]).unwrap();
        assert_eq!(sol.u_star, u);
        assert!(sol.active_set.is_empty());
        assert_eq!(sol.correction_norm, 0.0);
    }

    #[test]
    fn empty_constraints() {
        let u = Vector6::repeat(0.5);
        assert_eq!(solve(&u, &[]).unwrap().u_star, u);
    }

    #[test]
    fn single_constraint_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let u = v6(&mut rng, 5.0);
            let a = v6(&mut rng, 2.0);
            let b = a.dot(&u) - rng.gen_range(0.01..3.0);
            let expected = u - a * ((a.dot(&u) - b) / a.norm_squared());
            let sol = solve(&u, &[HalfSpace::new(a, b)]).unwrap();
            assert_relative_eq!(sol.u_star, expected, epsilon = 1e-12);
            assert_eq!(sol.active_set, vec![0]);
            assert_relative_eq!(a.dot(&sol.u_star), b, epsilon = 1e-10);
            // No sampled feasible perturbation is closer.
            for _ in 0..50 {
                let cand = sol.u_star + v6(&mut rng, 0.5);
                if a.dot(&cand) <= b {
                    assert!((cand - u).norm() >= sol.correction_norm - 1e-9);
                }
            }
        }
    }

    #[test]
    fn two_constraints_match_lattice_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut both_active = 0;
        for _ in 0..200 {
            let u = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let cons: Vec<_> = (0..2)
                .map(|_| {
                    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let a = Vector2::new(th.cos(), th.sin());
                    HalfSpace::new(a, a.dot(&u) - rng.gen_range(0.05..0.5))
                })
                .collect();
            let Ok(sol) = solve(&u, &cons) else { continue };
            if sol.active_set.len() == 2 {
                both_active += 1;
            }
            // Lattice search: no feasible lattice point is closer than u*.
            let n = 400;
            for i in 0..=n {
                for j in 0..=n {
                    let x = sol.u_star + Vector2::new(-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
                    if cons.iter().all(|c| c.violation(&x) <= 0.0) {
                        assert!((x - u).norm() >= sol.correction_norm - 1e-9);
                    }
                }
            }
            // Dykstra's alternating projections converge to the same point.
            let mut x = u;
            let mut corr = [Vector2::<f64>::zeros(); 2];
            for _ in 0..200_000 {
                for (c, k) in cons.iter().zip(corr.iter_mut()) {
                    let y = x + *k;
                    let excess = c.violation(&y).max(0.0);
                    let proj = y - c.a * (excess / c.a.norm_squared());
                    *k = y - proj;
                    x = proj;
                }
            }
            assert!((x - sol.u_star).norm() < 1e-6, "{x:?} vs {:?}", sol.u_star);
        }
        assert!(both_active > 10);
    }

    #[test]
    fn vacuous_constraints() {
        let u = Vector6::repeat(1.0);
        let sol = solve(&u, &[HalfSpace::new(Vector6::zeros(), 0.0)]).unwrap();
        assert_eq!(sol.u_star, u);
        assert!(matches!(
            solve(&u, &[HalfSpace::new(Vector6::zeros(), -1.0)]),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn empty_polyhedron_returns_least_violating_point() {
        let u = Vector6::zeros();
        let cons = vec![
            HalfSpace::new(Vector6::x(), -1.0),
            HalfSpace::new(-Vector6::x(), -1.0),
        ];
        let (err, relaxed) = QpProblem::new(u, cons).solve_or_relax().unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        let r = relaxed.unwrap();
        assert_relative_eq!(r.max_violation, 1.0, epsilon = 1e-9);
        assert!(r.solution.u_star.norm() < 1e-9);
    }

    #[test]
    fn duplicate_constraints_are_handled() {
        let u = Vector6::repeat(1.0);
        let a = Vector6::x();
        let sol = solve(&u, &[HalfSpace::new(a, 0.0), HalfSpace::new(a * 2.0, 0.0)]).unwrap();
        assert_relative_eq!(sol.u_star[0], 0.0, epsilon = 1e-12);
        assert_eq!(sol.active_set.len(), 1);
    }

    #[test]
    fn rejects_non_finite() {
        let u = Vector6::repeat(f64::NAN);
        assert!(solve(&u, &[]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let u = nalgebra::Vector3::<f32>::new(1.0, 1.0, 0.0);
        let sol = solve(&u, &[HalfSpace::new(nalgebra::Vector3::x(), 0.0)]).unwrap();
        assert!((sol.u_star - nalgebra::Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vector6<f64>, Vec<HalfSpace<f64, 6>>)> {
            let vec6 = proptest::array::uniform6(-3.0f64..3.0).prop_map(Vector6::from);
            let half = (proptest::array::uniform6(-1.0f64..1.0), -2.0f64..2.0)
                .prop_map(|(a, b)| HalfSpace::new(Vector6::from(a), b));
            (vec6, proptest::collection::vec(half, 1..=3))
        }

        proptest! {
            #[test]
            fn idempotent((u, cons) in instance()) {
                if let Ok(sol) = solve(&u, &cons) {
                    let again = solve(&sol.u_star, &cons).unwrap();
                    prop_assert!((again.u_star - sol.u_star).norm() < 1e-10);
                }
            }

            #[test]
            fn relaxing_b_never_increases_correction((u, cons) in instance(), extra in 0.0f64..2.0, which in 0usize..3) {
                if let Ok(sol) = solve(&u, &cons) {
                    let mut loose = cons.clone();
                    let k = which % loose.len();
                    loose[k].b += extra;
                    let sol2 = solve(&u, &loose).unwrap();
                    prop_assert!(sol2.correction_norm <= sol.correction_norm + 1e-10);
                }
            }

            #[test]
            fn kkt_certified((u, cons) in instance()) {
                if let Ok(sol) = solve(&u, &cons) {
                    prop_assert!(sol.kkt.stationarity < 1e-10);
                    prop_assert!(sol.kkt.primal < 1e-8);
                    prop_assert!(sol.kkt.dual == 0.0);
                    prop_assert!(sol.kkt.complementarity < 1e-10);
                }
            }
        }
    }
}
