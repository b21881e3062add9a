//! SO(3) and SE(3) primitives in matrix form.
//!
//! All 6-vectors use angular-first ordering: a twist is `(ω, v)` and a
//! wrench is `(f_ω, f_v)`. The group adjoint and algebra adjoint follow the
//! same block layout:
//!
//! ```text
//! Ad_g = | R     0 |      ad_ξ = | ω^  0  |      ad*_ξ = ad_ξᵀ
//!        | p^R   R |             | v^  ω^ |
//! ```

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec3<T> = Vector3<T>;
pub type Mat3<T> = Matrix3<T>;
pub type Vec6<T> = Vector6<T>;
pub type Mat6<T> = Matrix6<T>;

/// Rodrigues coefficients switch to their Taylor expansions below this angle.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Skew-symmetric matrix with `hat3(w) * x == w × x`.
pub fn hat3<T: Real>(w: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    Mat3::new(z, -w.z, w.y, w.z, z, -w.x, -w.y, w.x, z)
}

/// Inverse of [`hat3`]; for a general matrix returns the vee of its skew part.
pub fn vee3<T: Real>(m: &Mat3<T>) -> Vec3<T> {
    let half = T::lit(0.5);
    Vec3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Skew-symmetric part `(M - Mᵀ)/2`.
pub fn skew<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    (m - m.transpose()) * T::lit(0.5)
}

/// Element of SO(3) stored as an orthonormal matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Real> {
    m: Mat3<T>,
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self { m: Mat3::identity() }
    }

    /// Validates orthonormality and orientation to [`ROTATION_TOL`].
    pub fn from_matrix(m: Mat3<T>) -> Result<Self> {
        let tol = T::lit(ROTATION_TOL);
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        if !(ortho <= tol) {
            return Err(Error::InvalidRotation {
                reason: format!("RᵀR deviates from identity by {ortho:?}"),
            });
        }
        let det = m.determinant();
        if !((det - T::one()).abs() <= tol) {
            return Err(Error::InvalidRotation {
                reason: format!("det(R) = {det:?}"),
            });
        }
        Ok(Self { m })
    }

    /// Wraps a matrix the caller knows to be a rotation.
    pub fn from_matrix_unchecked(m: Mat3<T>) -> Self {
        Self { m }
    }

    /// Rotation by `angle` about the world x axis.
    pub fn about_x(angle: T) -> Self {
        exp_so3(&(Vec3::x() * angle))
    }

    pub fn about_y(angle: T) -> Self {
        exp_so3(&(Vec3::y() * angle))
    }

    pub fn about_z(angle: T) -> Self {
        exp_so3(&(Vec3::z() * angle))
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3<T> {
        &self.m
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { m: self.m * other.m }
    }

    pub fn apply(&self, x: &Vec3<T>) -> Vec3<T> {
        self.m * x
    }

    /// Frobenius norm of `RᵀR - I`.
    pub fn orthonormality_error(&self) -> T {
        (self.m.transpose() * self.m - Mat3::identity()).norm()
    }
}

/// Closed-form exponential map (Rodrigues).
pub fn exp_so3<T: Real>(w: &Vec3<T>) -> Rotation<T> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < T::lit(SMALL_ANGLE) {
        (
            T::one() - theta2 / T::lit(6.0),
            T::lit(0.5) - theta2 / T::lit(24.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let k = hat3(w);
    Rotation {
        m: Mat3::identity() + k * a + k * k * b,
    }
}

/// Logarithm map returning the rotation vector with angle in `[0, π]`.
///
/// When `trace(R) <= -1 + 1e-6` the antisymmetric part no longer determines
/// the axis reliably; the axis is then read from the symmetric part
/// `(R + Rᵀ)/2 = cos θ I + (1 - cos θ) k kᵀ`, with its sign taken from the
/// antisymmetric part where that is still informative.
pub fn log_so3<T: Real>(r: &Rotation<T>) -> Vec3<T> {
    let m = r.matrix();
    let half = T::lit(0.5);
    let anti = vee3(m); // sin θ · k
    let cos = (m.trace() - T::one()) * half;
    let sin = anti.norm();
    let theta = sin.atan2(cos);

    if m.trace() <= T::lit(-1.0 + 1e-6) {
        let sym = (m + m.transpose()) * half;
        let one_minus_cos = T::one() - cos;
        let kk = (sym - Mat3::identity() * cos) / one_minus_cos;
        let mut best = 0;
        for i in 1..3 {
            if kk[(i, i)] > kk[(best, best)] {
                best = i;
            }
        }
        let mut axis: Vec3<T> = kk.column(best).into_owned();
        axis /= axis.norm();
        if axis.dot(&anti) < T::zero() {
            axis = -axis;
        }
        return axis * theta;
    }

    let scale = if theta < T::lit(SMALL_ANGLE) {
        T::one() + theta * theta / T::lit(6.0)
    } else {
        theta / sin
    };
    anti * scale
}

/// Projects a matrix with positive determinant onto SO(3).
///
/// Uses the Newton polar iteration `X ← (X + X⁻ᵀ)/2`, which returns exact
/// rotations untouched.
pub fn reorthonormalize<T: Real>(m: &Mat3<T>) -> Result<Rotation<T>> {
    let det = m.determinant();
    if !(det > T::lit(1e-9)) {
        return Err(Error::DegenerateRotation {
            det: nalgebra::try_convert::<T, f64>(det).unwrap_or(f64::NAN),
        });
    }
    let tol = T::eps() * T::lit(4.0);
    let mut x = *m;
    for _ in 0..32 {
        if (x.transpose() * x - Mat3::identity()).norm() <= tol {
            break;
        }
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => {
                return Err(Error::DegenerateRotation {
                    det: nalgebra::try_convert::<T, f64>(x.determinant()).unwrap_or(f64::NAN),
                })
            }
        };
        x = (x + inv_t) * T::lit(0.5);
    }
    Ok(Rotation { m: x })
}

/// Rigid-body pose `g = (R, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: Rotation<T>,
    pub position: Vec3<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Rotation<T>, position: Vec3<T>) -> Self {
        Self { rotation, position }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vec3::zeros())
    }

    /// `g₁·g₂ = (R₁R₂, R₁p₂ + p₁)`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation.compose(&other.rotation),
            position: self.rotation.apply(&other.position) + self.position,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            position: -rt.apply(&self.position),
            rotation: rt,
        }
    }
}

/// Body-frame twist `ξ = (ω, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist<T: Real> {
    pub omega: Vec3<T>,
    pub linear: Vec3<T>,
}

impl<T: Real> Twist<T> {
    pub fn new(omega: Vec3<T>, linear: Vec3<T>) -> Self {
        Self { omega, linear }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    pub fn from_vector(xi: &Vec6<T>) -> Self {
        Self {
            omega: xi.fixed_rows::<3>(0).into_owned(),
            linear: xi.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6<T> {
        stack(&self.omega, &self.linear)
    }

    pub fn scaled(&self, t: T) -> Self {
        Self::new(self.omega * t, self.linear * t)
    }
}

/// Exponential map of SE(3): the pose reached from the identity by
/// following the constant twist `ξ` for unit time.
pub fn exp_se3<T: Real>(xi: &Twist<T>) -> Pose<T> {
    let theta2 = xi.omega.norm_squared();
    let theta = theta2.sqrt();
    let (b, c) = if theta < T::lit(SMALL_ANGLE) {
        (T::lit(0.5), T::lit(1.0 / 6.0))
    } else {
        (
            (T::one() - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let k = hat3(&xi.omega);
    let left_jacobian = Mat3::identity() + k * b + k * k * c;
    Pose::new(exp_so3(&xi.omega), left_jacobian * xi.linear)
}

pub(crate) fn stack<T: Real>(top: &Vec3<T>, bottom: &Vec3<T>) -> Vec6<T> {
    Vec6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

pub(crate) fn block_matrix<T: Real>(
    tl: &Mat3<T>,
    tr: &Mat3<T>,
    bl: &Mat3<T>,
    br: &Mat3<T>,
) -> Mat6<T> {
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(bl);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    out
}

/// Group adjoint `Ad_g = [[R, 0], [p^R, R]]`.
pub fn adjoint_group<T: Real>(g: &Pose<T>) -> Mat6<T> {
    let r = g.rotation.matrix();
    block_matrix(r, &Mat3::zeros(), &(hat3(&g.position) * r), r)
}

/// Algebra adjoint `ad_ξ = [[ω^, 0], [v^, ω^]]`.
pub fn adjoint_algebra<T: Real>(xi: &Twist<T>) -> Mat6<T> {
    let w = hat3(&xi.omega);
    block_matrix(&w, &Mat3::zeros(), &hat3(&xi.linear), &w)
}

/// Coadjoint `ad*_ξ = ad_ξᵀ`.
pub fn coadjoint<T: Real>(xi: &Twist<T>) -> Mat6<T> {
    adjoint_algebra(xi).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Truncated power series of the matrix exponential.
    fn series_exp(w: &Vec3<f64>) -> Mat3<f64> {
        let k = hat3(w);
        let mut term = Mat3::identity();
        let mut sum = Mat3::identity();
        for n in 1..30 {
            term = term * k / n as f64;
            sum += term;
        }
        sum
    }

    fn vec3() -> impl Strategy<Value = Vec3<f64>> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    #[test]
    fn hat_of_known_vector() {
        let m = hat3(&Vec3::new(1.0, 2.0, 3.0));
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(hat3(&Vec3::<f64>::zeros()), Mat3::zeros());
    }

    #[test]
    fn vee_cases() {
        let w = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee3(&hat3(&w)), w);
        assert_eq!(vee3(&Mat3::<f64>::identity()), Vec3::zeros());
    }

    #[test]
    fn exp_quarter_turn_about_x() {
        let r = exp_so3(&(Vec3::x() * FRAC_PI_2));
        let expected = Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_relative_eq!(*r.matrix(), expected, epsilon = 1e-15);
        assert_eq!(*exp_so3(&Vec3::<f64>::zeros()).matrix(), Mat3::identity());
    }

    #[test]
    fn exp_small_angle_branch_is_continuous() {
        let w = Vec3::new(3e-9, -2e-9, 1e-9);
        assert_relative_eq!(*exp_so3(&w).matrix(), series_exp(&w), epsilon = 1e-16);
    }

    #[test]
    fn log_known_values() {
        assert_eq!(log_so3(&Rotation::<f64>::identity()), Vec3::zeros());
        let w = Vec3::y() * 0.3;
        assert_relative_eq!(log_so3(&exp_so3(&w)), w, epsilon = 1e-14);
    }

    #[test]
    fn log_near_pi_recovers_axis() {
        let axis = Vec3::new(1.0, -2.0, 0.5).normalize();
        for angle in [PI, PI - 1e-5, PI - 1e-3] {
            let r = exp_so3(&(axis * angle));
            let w = log_so3(&r);
            assert_relative_eq!(*exp_so3(&w).matrix(), *r.matrix(), epsilon = 1e-9);
            assert_relative_eq!(w.norm(), angle, epsilon = 1e-9);
        }
    }

    #[test]
    fn adjoint_special_cases() {
        assert_eq!(adjoint_group(&Pose::<f64>::identity()), Mat6::identity());
        let r = exp_so3(&Vec3::new(0.2, -0.4, 0.9));
        let ad = adjoint_group(&Pose::new(r, Vec3::zeros()));
        let expected = block_matrix(r.matrix(), &Mat3::zeros(), &Mat3::zeros(), r.matrix());
        assert_eq!(ad, expected);

        assert_eq!(adjoint_algebra(&Twist::<f64>::zero()), Mat6::zeros());
        let ad = adjoint_algebra(&Twist::new(Vec3::z(), Vec3::zeros()));
        let wz = hat3(&Vec3::<f64>::z());
        assert_eq!(ad.fixed_view::<3, 3>(0, 0).into_owned(), wz);
        assert_eq!(ad.fixed_view::<3, 3>(3, 3).into_owned(), wz);
        assert_eq!(ad.fixed_view::<3, 3>(0, 3).into_owned(), Mat3::zeros());
    }

    #[test]
    fn reorthonormalize_cases() {
        let r = exp_so3(&Vec3::new(0.3, 1.1, -0.7));
        let fixed = reorthonormalize(r.matrix()).unwrap();
        assert_relative_eq!(*fixed.matrix(), *r.matrix(), epsilon = 1e-15);

        let mut perturbed = Mat3::<f64>::identity();
        perturbed[(0, 1)] += 1e-6;
        perturbed[(2, 0)] -= 1e-6;
        perturbed[(1, 1)] += 1e-6;
        let q = reorthonormalize(&perturbed).unwrap();
        assert!(q.orthonormality_error() < 1e-12);
        // Polar factor oracle via SVD: U Vᵀ.
        let svd = perturbed.svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        assert_relative_eq!(*q.matrix(), polar, epsilon = 1e-12);
        assert!((q.matrix() - Mat3::identity()).norm() < 2e-6);

        let reflect = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            reorthonormalize(&reflect),
            Err(Error::DegenerateRotation { .. })
        ));
    }

    #[test]
    fn f32_exp_log_round_trip() {
        let w = Vec3::new(0.1f32, -0.2, 0.4);
        let back = log_so3(&exp_so3(&w));
        assert!((back - w).norm() < 1e-5);
    }

    proptest! {
        #[test]
        fn hat_matches_cross_product(w in vec3(), x in vec3()) {
            let lhs = hat3(&w) * x;
            let rhs = Vec3::new(
                w.y * x.z - w.z * x.y,
                w.z * x.x - w.x * x.z,
                w.x * x.y - w.y * x.x,
            );
            prop_assert!((lhs - rhs).norm() <= 1e-14);
            prop_assert_eq!(hat3(&w).transpose(), -hat3(&w));
        }

        #[test]
        fn vee_reads_skew_entries(w in vec3()) {
            let m = hat3(&w);
            prop_assert_eq!(vee3(&m), Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]));
            prop_assert_eq!(vee3(&m), w);
        }

        #[test]
        fn exp_matches_series(dir in vec3(), angle in 0.0..3.1f64) {
            prop_assume!(dir.norm() > 1e-6);
            let w = dir.normalize() * angle;
            prop_assert!((exp_so3(&w).matrix() - series_exp(&w)).norm() <= 1e-12);
        }

        #[test]
        fn log_round_trip(dir in vec3(), angle in 0.0..(PI - 1e-6)) {
            prop_assume!(dir.norm() > 1e-6);
            let r = exp_so3(&(dir.normalize() * angle));
            prop_assert!((exp_so3(&log_so3(&r)).matrix() - r.matrix()).norm() <= 1e-9);
        }

        #[test]
        fn adjoint_is_a_morphism(w1 in vec3(), p1 in vec3(), w2 in vec3(), p2 in vec3()) {
            let g1 = Pose::new(exp_so3(&w1), p1);
            let g2 = Pose::new(exp_so3(&w2), p2);
            let lhs = adjoint_group(&g1.compose(&g2));
            let rhs = adjoint_group(&g1) * adjoint_group(&g2);
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }

        #[test]
        fn coadjoint_power_vanishes(w in vec3(), v in vec3(), seed in proptest::collection::vec(-1.0..1.0f64, 36)) {
            // Random SPD metric LLᵀ + 0.1 I.
            let l = Mat6::from_iterator(seed);
            let inertia = l * l.transpose() + Mat6::identity() * 0.1;
            let xi = Twist::new(w, v);
            let xv = xi.to_vector();
            let power = xv.dot(&(coadjoint(&xi) * inertia * xv));
            let scale = xv.norm_squared() * (inertia * xv).norm();
            prop_assert!(power.abs() <= 1e-12 * scale.max(1.0));
            prop_assert_eq!(coadjoint(&xi), adjoint_algebra(&xi).transpose());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn exp_is_a_rotation(dir in vec3(), angle in -20.0..20.0f64) {
            prop_assume!(dir.norm() > 1e-6);
            let w = dir.normalize() * angle;
            let r = exp_so3(&w);
            prop_assert!(Rotation::from_matrix(*r.matrix()).is_ok());
            prop_assert!((exp_so3(&-w).matrix() - r.matrix().transpose()).norm() <= 1e-12);
        }
    }
}
