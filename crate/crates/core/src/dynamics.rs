//! Euler–Poincaré dynamics on SE(3) and one-step integrators in a local exponential chart.
//!
//! The state `(g, ξ)` evolves as `ġ = g ξ^` and `𝕀 ξ̇ = u + ad*_ξ 𝕀 ξ`.
//! On SE(3) with `𝕀 = diag(J, m I₃)` the second equation reads
//! `J ω̇ = Jω × ω + f_ω` and `m v̇ = m v × ω + f_v`.

use crate::error::{Error, Result};
use crate::lie::{coadjoint, exp_so3, hat3, reorthonormalize, stack, Mat3, Mat6, Pose, Twist, Vec3, Vec6};
use crate::scalar::Real;
use nalgebra::{SMatrix, SVector};

/// Block-diagonal inertia `𝕀 = diag(J, m I₃)` with diagonal `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaTensor<T: Real> {
    j: Vec3<T>,
    mass: T,
}

impl<T: Real> InertiaTensor<T> {
    pub fn new(j_diag: Vec3<T>, mass: T) -> Result<Self> {
        if !j_diag.iter().all(|&x| x > T::zero() && x.is_finite()) {
            return Err(Error::param("inertia.j", "diagonal entries must be positive"));
        }
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::param("inertia.mass", "must be positive"));
        }
        Ok(Self { j: j_diag, mass })
    }

    /// Thin disk of radius `r` and mass `m` with symmetry axis along body z:
    /// `J = diag(m r²/4, m r²/4, m r²/2)`.
    pub fn disk(radius: T, mass: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::param("inertia.radius", "must be positive"));
        }
        let jx = mass * radius * radius / T::lit(4.0);
        let jz = mass * radius * radius / T::lit(2.0);
        Self::new(Vec3::new(jx, jx, jz), mass)
    }

    pub fn j_diagonal(&self) -> &Vec3<T> {
        &self.j
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn matrix(&self) -> Mat6<T> {
        Mat6::from_diagonal(&self.diagonal())
    }

    pub fn diagonal(&self) -> Vec6<T> {
        stack(&self.j, &Vec3::repeat(self.mass))
    }

    /// `𝕀 x`.
    pub fn apply(&self, x: &Vec6<T>) -> Vec6<T> {
        x.component_mul(&self.diagonal())
    }

    /// `𝕀⁻¹ x`.
    pub fn solve(&self, x: &Vec6<T>) -> Vec6<T> {
        x.component_div(&self.diagonal())
    }

    /// Smallest eigenvalue of the assembled 6×6 matrix.
    pub fn min_eigenvalue(&self) -> T {
        self.diagonal().min()
    }
}

/// Body-frame wrench `u = (f_ω, f_v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench<T: Real> {
    pub torque: Vec3<T>,
    pub force: Vec3<T>,
}

impl<T: Real> Wrench<T> {
    pub fn new(torque: Vec3<T>, force: Vec3<T>) -> Self {
        Self { torque, force }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    pub fn from_vector(u: &Vec6<T>) -> Self {
        Self {
            torque: u.fixed_rows::<3>(0).into_owned(),
            force: u.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6<T> {
        stack(&self.torque, &self.force)
    }
}

impl<T: Real> std::ops::Add for Wrench<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.torque + rhs.torque, self.force + rhs.force)
    }
}

/// Full state `x = (g, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<T: Real> {
    pub pose: Pose<T>,
    pub twist: Twist<T>,
}

impl<T: Real> State<T> {
    pub fn new(pose: Pose<T>, twist: Twist<T>) -> Self {
        Self { pose, twist }
    }

    pub fn at_rest(pose: Pose<T>) -> Self {
        Self::new(pose, Twist::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.pose.rotation.matrix().iter().all(|x| x.is_finite())
            && self.pose.position.iter().all(|x| x.is_finite())
            && self.twist.to_vector().iter().all(|x| x.is_finite())
    }

    /// World-frame velocity `ṗ = R v`.
    pub fn world_velocity(&self) -> Vec3<T> {
        self.pose.rotation.apply(&self.twist.linear)
    }
}

/// `ξ̇ = 𝕀⁻¹(u + ad*_ξ 𝕀ξ)`.
pub fn acceleration<T: Real>(state: &State<T>, u: &Wrench<T>, inertia: &InertiaTensor<T>) -> Vec6<T> {
    let xi = state.twist.to_vector();
    let momentum = inertia.apply(&xi);
    inertia.solve(&(u.to_vector() + coadjoint(&state.twist) * momentum))
}

/// `E(ξ) = ½ ξᵀ 𝕀 ξ`.
pub fn kinetic_energy<T: Real>(xi: &Twist<T>, inertia: &InertiaTensor<T>) -> T {
    let v = xi.to_vector();
    v.dot(&inertia.apply(&v)) * T::lit(0.5)
}

/// Default integration step [s].
pub const DEFAULT_DT: f64 = 1e-3;

/// Advances the state by `dt` under a constant body wrench.
pub fn step<T: Real>(state: &State<T>, u: &Wrench<T>, inertia: &InertiaTensor<T>, dt: T) -> Result<State<T>> {
    step_with(state, inertia, dt, |_, _| Ok(*u))
}

/// Local exponential chart around a reference attitude `R₀`.
///
/// Coordinates are `y = (φ, p, ξ) ∈ ℝ¹²` with `R = R₀ exp(φ^)`; the pose
/// kinematics become `φ̇ = ω + ½ φ×ω + (1/12) φ×(φ×ω)` (truncated inverse
/// right Jacobian, exact to the order of the integrators below).
struct Chart<'a, T: Real> {
    r0: Mat3<T>,
    inertia: &'a InertiaTensor<T>,
}

type ChartVec<T> = SVector<T, 12>;

impl<'a, T: Real> Chart<'a, T> {
    fn origin(state: &State<T>) -> ChartVec<T> {
        let mut y = ChartVec::zeros();
        y.fixed_rows_mut::<3>(3).copy_from(&state.pose.position);
        y.fixed_rows_mut::<6>(6).copy_from(&state.twist.to_vector());
        y
    }

    fn state(&self, y: &ChartVec<T>) -> State<T> {
        let phi: Vec3<T> = y.fixed_rows::<3>(0).into_owned();
        let rot = crate::lie::Rotation::from_matrix_unchecked(self.r0 * exp_so3(&phi).matrix());
        State::new(
            Pose::new(rot, y.fixed_rows::<3>(3).into_owned()),
            Twist::from_vector(&y.fixed_rows::<6>(6).into_owned()),
        )
    }

    fn field<F>(&self, offset: T, y: &ChartVec<T>, wrench: &mut F) -> Result<ChartVec<T>>
    where
        F: FnMut(T, &State<T>) -> Result<Wrench<T>>,
    {
        let x = self.state(y);
        let u = wrench(offset, &x)?;
        let w = x.twist.omega;
        let phi_hat: Mat3<T> = hat3(&y.fixed_rows::<3>(0).into_owned());
        let dphi = w + phi_hat * w * T::lit(0.5) + phi_hat * phi_hat * w / T::lit(12.0);
        let mut dy = ChartVec::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&dphi);
        dy.fixed_rows_mut::<3>(3).copy_from(&x.world_velocity());
        dy.fixed_rows_mut::<6>(6).copy_from(&acceleration(&x, &u, self.inertia));
        Ok(dy)
    }

    fn finish(&self, y: &ChartVec<T>) -> Result<State<T>> {
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let phi: Vec3<T> = y.fixed_rows::<3>(0).into_owned();
        let rotation = reorthonormalize(&(self.r0 * exp_so3(&phi).matrix())).map_err(|_| Error::NonFiniteState)?;
        let next = State::new(
            Pose::new(rotation, y.fixed_rows::<3>(3).into_owned()),
            Twist::from_vector(&y.fixed_rows::<6>(6).into_owned()),
        );
        if !next.is_finite() {
            return Err(Error::NonFiniteState);
        }
        Ok(next)
    }
}

/// Advances the state by `dt`, querying `wrench(τ, x)` at each of the four
/// Runge–Kutta stages (`τ ∈ {0, dt/2, dt/2, dt}` is the offset into the step).
///
/// The pose is carried in exponential coordinates around the start of the
/// step and `(φ, p, ξ)` is integrated with classical RK4. The result is
/// fourth order in both pose and twist and stays on SO(3) up to
/// reorthonormalization.
pub fn step_with<T, F>(state: &State<T>, inertia: &InertiaTensor<T>, dt: T, mut wrench: F) -> Result<State<T>>
where
    T: Real,
    F: FnMut(T, &State<T>) -> Result<Wrench<T>>,
{
    if !(dt > T::zero()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let chart = Chart { r0: *state.pose.rotation.matrix(), inertia };
    let y0 = Chart::origin(state);
    let h2 = dt * T::lit(0.5);
    let k1 = chart.field(T::zero(), &y0, &mut wrench)?;
    let k2 = chart.field(h2, &(y0 + k1 * h2), &mut wrench)?;
    let k3 = chart.field(h2, &(y0 + k2 * h2), &mut wrench)?;
    let k4 = chart.field(dt, &(y0 + k3 * dt), &mut wrench)?;
    let two = T::lit(2.0);
    chart.finish(&(y0 + (k1 + k2 * two + k3 * two + k4) * (dt / T::lit(6.0))))
}

/// Substep counts of the extrapolation tableau used by [`step_stiff_with`].
const STIFF_SEQUENCE: [usize; 4] = [1, 2, 3, 4];

/// Advances the state by `dt` with an extrapolated linearly implicit Euler
/// scheme and returns the new state with a local error estimate.
///
/// The closed-loop field is linearized once by forward differences in the
/// local chart. Each row of the tableau runs `n` steps of
/// `y ← y + (I − (dt/n) A)⁻¹ (dt/n) f(y)` and the rows are combined by
/// Aitken–Neville extrapolation in the step size, which yields a fourth
/// order result. Every row damps modes with `Re λ dt → −∞`, so the scheme
/// stays usable when feedback makes the loop stiff. The error estimate is
/// the largest component of the difference between the two highest
/// diagonal entries of the tableau.
pub fn step_stiff_with<T, F>(
    state: &State<T>,
    inertia: &InertiaTensor<T>,
    dt: T,
    mut wrench: F,
) -> Result<(State<T>, T)>
where
    T: Real,
    F: FnMut(T, &State<T>) -> Result<Wrench<T>>,
{
    if !(dt > T::zero()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let chart = Chart { r0: *state.pose.rotation.matrix(), inertia };
    let y0 = Chart::origin(state);
    let f0 = chart.field(T::zero(), &y0, &mut wrench)?;

    let mut jac = SMatrix::<T, 12, 12>::zeros();
    let rel = T::eps().sqrt();
    for j in 0..12 {
        let delta = rel * (T::one() + y0[j].abs());
        let mut y = y0;
        y[j] += delta;
        let fj = chart.field(T::zero(), &y, &mut wrench)?;
        jac.set_column(j, &((fj - f0) / delta));
    }

    let mut rows: Vec<ChartVec<T>> = Vec::with_capacity(STIFF_SEQUENCE.len());
    for &n in &STIFF_SEQUENCE {
        let h = dt / T::from_usize(n).expect("small integer");
        let lu = (SMatrix::<T, 12, 12>::identity() - jac * h).lu();
        let mut y = y0;
        for i in 0..n {
            let f = if i == 0 { f0 } else { chart.field(h * T::from_usize(i).expect("small integer"), &y, &mut wrench)? };
            let dy = lu.solve(&(f * h)).ok_or(Error::NonFiniteState)?;
            y += dy;
        }
        rows.push(y);
    }

    // Neville recursion: after pass k, rows[j] holds T_{j,k}.
    let mut previous_top = rows[rows.len() - 1];
    for k in 1..rows.len() {
        previous_top = rows[rows.len() - 1];
        for j in (k..rows.len()).rev() {
            let ratio = T::from_usize(STIFF_SEQUENCE[j]).expect("small integer")
                / T::from_usize(STIFF_SEQUENCE[j - k]).expect("small integer");
            let diff = (rows[j] - rows[j - 1]) / (ratio - T::one());
            rows[j] += diff;
        }
    }
    let best = rows[rows.len() - 1];
    let err = (best - previous_top).amax();
    Ok((chart.finish(&best)?, err))
}
