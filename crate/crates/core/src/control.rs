//! Geometric PD + feedforward tracking controller on SE(3).

use nalgebra::{Cholesky, Matrix3, Matrix6};

use crate::dynamics::{InertiaTensor, State, Wrench};
use crate::error::{Error, Result};
use crate::lie::{adjoint_group, coadjoint, stack, vee3, Mat3, Mat6, Pose, Twist, Vec3, Vec6};
use crate::scalar::Real;

/// Attitude stiffness `K₁`, position stiffness `K₂` and damping `K_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains<T: Real> {
    pub k1: Mat3<T>,
    pub k2: Mat3<T>,
    pub kd: Mat6<T>,
}

fn check_spd<T: Real, const N: usize>(
    name: &str,
    m: &nalgebra::SMatrix<T, N, N>,
) -> Result<()>
where
    nalgebra::Const<N>: nalgebra::DimMin<nalgebra::Const<N>>,
{
    let asym = (m - m.transpose()).norm();
    if !(asym <= T::lit(1e-12) * m.norm().max(T::one())) {
        return Err(Error::param(name, "gain matrix must be symmetric"));
    }
    if Cholesky::new(*m).is_none() {
        return Err(Error::param(name, "gain matrix must be positive definite"));
    }
    Ok(())
}

impl<T: Real> Gains<T> {
    pub fn new(k1: Mat3<T>, k2: Mat3<T>, kd: Mat6<T>) -> Result<Self> {
        check_spd::<T, 3>("gains.k1", &k1)?;
        check_spd::<T, 3>("gains.k2", &k2)?;
        check_spd::<T, 6>("gains.kd", &kd)?;
        Ok(Self { k1, k2, kd })
    }

    pub fn diagonal(k1: Vec3<T>, k2: Vec3<T>, kd: Vec6<T>) -> Result<Self> {
        Self::new(
            Matrix3::from_diagonal(&k1),
            Matrix3::from_diagonal(&k2),
            Matrix6::from_diagonal(&kd),
        )
    }
}

/// Desired pose, body twist and body twist derivative at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint<T: Real> {
    pub pose_d: Pose<T>,
    pub twist_d: Twist<T>,
    pub twist_d_dot: Vec6<T>,
}

impl<T: Real> ReferencePoint<T> {
    pub fn stationary(pose_d: Pose<T>) -> Self {
        Self {
            pose_d,
            twist_d: Twist::zero(),
            twist_d_dot: Vec6::zeros(),
        }
    }
}

/// The three controller terms, kept separate for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTerms<T: Real> {
    pub proportional: Wrench<T>,
    pub damping: Wrench<T>,
    pub feedforward: Wrench<T>,
}

impl<T: Real> ControlTerms<T> {
    pub fn total(&self) -> Wrench<T> {
        self.proportional + self.damping + self.feedforward
    }
}

/// Evaluates `f_P`, `f_D` and `f_F` separately.
pub fn control_terms<T: Real>(
    state: &State<T>,
    reference: &ReferencePoint<T>,
    gains: &Gains<T>,
    inertia: &InertiaTensor<T>,
) -> ControlTerms<T> {
    let r = state.pose.rotation.matrix();
    let rd = reference.pose_d.rotation.matrix();
    let rt = r.transpose();
    let e_p = state.pose.position - reference.pose_d.position;
    let (w, v) = (state.twist.omega, state.twist.linear);
    let (wd, vd) = (reference.twist_d.omega, reference.twist_d.linear);

    let torque_p = -vee3(&(gains.k1 * rd.transpose() * r));
    let force_p = -(rt * (r + rd) * gains.k2 * (rt + rd.transpose()) * e_p);

    let rt_rd = rt * rd;
    let w_err = w - rt_rd * wd;
    let v_err = v - rt_rd * (vd + wd.cross(&(rt * e_p)));
    let damping = -(gains.kd * stack(&w_err, &v_err));

    let relative = state.pose.inverse().compose(&reference.pose_d);
    let ad_rel = adjoint_group(&relative);
    let ff = -(coadjoint(&state.twist) * inertia.apply(&(ad_rel * reference.twist_d.to_vector())))
        + inertia.apply(&(ad_rel * reference.twist_d_dot));

    ControlTerms {
        proportional: Wrench::new(torque_p, force_p),
        damping: Wrench::from_vector(&damping),
        feedforward: Wrench::from_vector(&ff),
    }
}

/// Nominal tracking wrench `u_des = f_P + f_D + f_F`.
pub fn control<T: Real>(
    state: &State<T>,
    reference: &ReferencePoint<T>,
    gains: &Gains<T>,
    inertia: &InertiaTensor<T>,
) -> Wrench<T> {
    control_terms(state, reference, gains, inertia).total()
}
