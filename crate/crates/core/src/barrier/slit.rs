use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::lie::{Pose, Twist, Vec3};
use crate::scalar::Real;

/// Default clearance kept between the disk rim and each wall [m].
pub const DEFAULT_MARGIN: f64 = 0.02;

/// Below this `‖a × b‖` the disk is face-on to the walls and the support
/// function has a cone point.
const FACE_ON: f64 = 1e-12;

/// Gaussian window that blends the slit barrier with a constant ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate<T: Real> {
    /// Isotropic spread, `Σ = σ² I₃`.
    pub sigma: T,
    /// Shift of the window center from the slit center.
    pub offset: Vec3<T>,
    /// Barrier value far from the slit.
    pub ceiling: T,
}

/// A slit between two parallel walls, passed by a disk of radius `r`.
///
/// The left wall passes through `center_left` with inward normal `n`; the
/// right wall passes through `center_right` with inward normal `-n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec<T: Real> {
    pub normal: Vec3<T>,
    pub center_left: Vec3<T>,
    pub center_right: Vec3<T>,
    pub disk_radius: T,
    /// Disk normal in body coordinates.
    pub body_normal: Vec3<T>,
    pub margin: T,
    pub sharpness: T,
    pub gate: Gate<T>,
}

impl<T: Real> SlitSpec<T> {
    /// Slit of width `width` centered at `center` with walls at
    /// `center ∓ (width/2)·n`.
    #[allow(clippy::too_many_arguments)]
    pub fn centered(
        center: Vec3<T>,
        normal: Vec3<T>,
        width: T,
        disk_radius: T,
        body_normal: Vec3<T>,
        margin: T,
        sharpness: T,
        gate: Gate<T>,
    ) -> Result<Self> {
        let half = normal * (width * T::lit(0.5));
        let spec = Self {
            normal,
            center_left: center - half,
            center_right: center + half,
            disk_radius,
            body_normal,
            margin,
            sharpness,
            gate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let unit_tol = T::lit(1e-12);
        if !((self.normal.norm() - T::one()).abs() <= unit_tol) {
            return Err(Error::param("slit.normal", "must be a unit vector"));
        }
        if !((self.body_normal.norm() - T::one()).abs() <= unit_tol) {
            return Err(Error::param("slit.body_normal", "must be a unit vector"));
        }
        let checks = [
            ("slit.sharpness", self.sharpness > T::zero()),
            ("slit.sigma", self.gate.sigma > T::zero()),
            ("slit.ceiling", self.gate.ceiling > T::zero()),
            ("slit.margin", self.margin >= T::zero()),
            ("slit.radius", self.disk_radius > T::zero()),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::param(name, "out of range"));
            }
        }
        Ok(())
    }

    pub fn midpoint(&self) -> Vec3<T> {
        (self.center_left + self.center_right) * T::lit(0.5)
    }

    pub fn width(&self) -> T {
        self.normal.dot(&(self.center_right - self.center_left))
    }

    /// Center of the gating window `c = (c_L + c_R)/2 + Δ`.
    pub fn gate_center(&self) -> Vec3<T> {
        self.midpoint() + self.gate.offset
    }
}

/// Intermediate quantities of the slit barrier at one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitEval<T: Real> {
    pub support: T,
    pub psi_left: T,
    pub psi_right: T,
    /// Smooth minimum of the two wall distances.
    pub h_obstacle: T,
    pub chi: T,
    pub h: T,
}

/// Reach of the disk along the wall normal, `s(R) = r √(1 − (aᵀb)²) = r ‖a × b‖`.
fn support_cross<T: Real>(spec: &SlitSpec<T>, g: &Pose<T>) -> (Vec3<T>, Vec3<T>) {
    let a = g.rotation.transpose().apply(&spec.normal);
    (a, a.cross(&spec.body_normal))
}

/// Evaluates the gated smooth-minimum slit barrier
/// `h = (1 − χ) K + χ h_o` with `h_o = −β⁻¹ log(e^{−βψ_L} + e^{−βψ_R})`.
pub fn slit_eval<T: Real>(spec: &SlitSpec<T>, g: &Pose<T>) -> SlitEval<T> {
    let (_, cross) = support_cross(spec, g);
    let support = spec.disk_radius * cross.norm();
    let p = g.position;
    let psi_left = spec.normal.dot(&(p - spec.center_left)) - support - spec.margin;
    let psi_right = -spec.normal.dot(&(p - spec.center_right)) - support - spec.margin;

    let beta = spec.sharpness;
    let lo = psi_left.min(psi_right);
    let h_obstacle = lo
        - ((-beta * (psi_left - lo)).exp() + (-beta * (psi_right - lo)).exp()).ln() / beta;

    let d = p - spec.gate_center();
    let sigma2 = spec.gate.sigma * spec.gate.sigma;
    let chi = (-d.norm_squared() / (sigma2 + sigma2)).exp();
    let h = (T::one() - chi) * spec.gate.ceiling + chi * h_obstacle;
    SlitEval {
        support,
        psi_left,
        psi_right,
        h_obstacle,
        chi,
        h,
    }
}

pub fn slit_h<T: Real>(spec: &SlitSpec<T>, g: &Pose<T>) -> T {
    slit_eval(spec, g).h
}

/// Time derivative of [`slit_h`] along `ġ = g ξ^` (`ṗ = Rv`, `ȧ = −ω × a`).
///
/// Where the disk is exactly face-on to the walls the support function has a
/// cone point; there the forward (right) derivative `r ‖ȧ × b‖` is returned.
pub fn slit_h_rate<T: Real>(spec: &SlitSpec<T>, g: &Pose<T>, xi: &Twist<T>) -> T {
    let e = slit_eval(spec, g);
    let (a, cross) = support_cross(spec, g);
    let a_dot = -xi.omega.cross(&a);
    let cross_dot = a_dot.cross(&spec.body_normal);
    let cross_norm = cross.norm();
    let support_rate = if cross_norm > T::lit(FACE_ON) {
        spec.disk_radius * cross.dot(&cross_dot) / cross_norm
    } else {
        spec.disk_radius * cross_dot.norm()
    };

    let p_dot = g.rotation.apply(&xi.linear);
    let n_p = spec.normal.dot(&p_dot);
    let psi_left_rate = n_p - support_rate;
    let psi_right_rate = -n_p - support_rate;

    let beta = spec.sharpness;
    let lo = e.psi_left.min(e.psi_right);
    let wl = (-beta * (e.psi_left - lo)).exp();
    let wr = (-beta * (e.psi_right - lo)).exp();
    let h_obstacle_rate = (wl * psi_left_rate + wr * psi_right_rate) / (wl + wr);

    let d = g.position - spec.gate_center();
    let sigma2 = spec.gate.sigma * spec.gate.sigma;
    let chi_rate = -e.chi * d.dot(&p_dot) / sigma2;

    chi_rate * (e.h_obstacle - spec.gate.ceiling) + e.chi * h_obstacle_rate
}

/// Convenience wrapper over a full state.
pub(crate) fn slit_rate_at<T: Real>(spec: &SlitSpec<T>, state: &State<T>) -> T {
    slit_h_rate(spec, &state.pose, &state.twist)
}
