//! Directional kinetic-energy barrier.
//!
//! For world directions `n_v` (translation) and `n_ω` (rotation) the
//! projector `P(g) = diag(n_ωB n_ωBᵀ, n_vB n_vBᵀ)` with `n_B = Rᵀn` picks the
//! kinetic energy `E_dir = ½ ξᵀ M ξ`, `M = sym(P 𝕀)`, carried along those
//! directions. Because `ṅ_B = −ω × n_B`, the projector evolves as
//! `Ṗ = PΩ − ΩP` with `Ω = diag(ω^, ω^)`.
//!
//! `Ḣ_dir = −Ė_dir = −(𝕀⁻¹Mξ)ᵀu − V` where the drift (virtual power) is
//! `V = ξᵀ M 𝕀⁻¹ ad*_ξ 𝕀ξ + ½ ξᵀ sym(Ṗ𝕀) ξ`. When `P𝕀` is symmetric this
//! equals `½ ξᵀ (2P ad*_ξ + [P, Ω]) 𝕀 ξ` and the input coefficient is `Pξ`.

use super::{BarrierConstraint, ClassK};
use crate::dynamics::{InertiaTensor, State};
use crate::error::{Error, Result};
use crate::lie::{block_matrix, coadjoint, hat3, Mat3, Mat6, Pose, Vec3};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalEnergyCbf<T: Real> {
    pub label: String,
    /// World translational direction, if limited.
    pub translation: Option<Vec3<T>>,
    /// World rotation axis, if limited.
    pub rotation: Option<Vec3<T>>,
    pub e_max: T,
    pub class_k: ClassK<T>,
}

impl<T: Real> DirectionalEnergyCbf<T> {
    pub fn new(
        label: impl Into<String>,
        translation: Option<Vec3<T>>,
        rotation: Option<Vec3<T>>,
        e_max: T,
        class_k: ClassK<T>,
    ) -> Result<Self> {
        let unit = |v: &Option<Vec3<T>>| v.is_none_or(|n| (n.norm() - T::one()).abs() <= T::lit(1e-12));
        if !unit(&translation) {
            return Err(Error::param("directional.translation", "must be a unit vector"));
        }
        if !unit(&rotation) {
            return Err(Error::param("directional.rotation", "must be a unit vector"));
        }
        if translation.is_none() && rotation.is_none() {
            return Err(Error::param("directional", "at least one direction must be enabled"));
        }
        if !(e_max > T::zero()) {
            return Err(Error::param("directional.e_max", "must be positive"));
        }
        Ok(Self {
            label: label.into(),
            translation,
            rotation,
            e_max,
            class_k,
        })
    }
}

fn outer_in_body<T: Real>(n: &Option<Vec3<T>>, g: &Pose<T>) -> Mat3<T> {
    match n {
        Some(n) => {
            let nb = g.rotation.transpose().apply(n);
            nb * nb.transpose()
        }
        None => Mat3::zeros(),
    }
}

/// `P(g) = diag(n_ωB n_ωBᵀ, n_vB n_vBᵀ)`; disabled blocks are zero.
pub fn projection_matrix<T: Real>(cbf: &DirectionalEnergyCbf<T>, g: &Pose<T>) -> Mat6<T> {
    let z = Mat3::zeros();
    block_matrix(&outer_in_body(&cbf.rotation, g), &z, &z, &outer_in_body(&cbf.translation, g))
}

/// `Ṗ = PΩ − ΩP`.
pub fn projection_rate<T: Real>(projection: &Mat6<T>, omega: &Vec3<T>) -> Mat6<T> {
    let w = hat3(omega);
    let z = Mat3::zeros();
    let big_omega = block_matrix(&w, &z, &z, &w);
    projection * big_omega - big_omega * projection
}

fn sym<T: Real>(m: &Mat6<T>) -> Mat6<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// `E_dir = ½ ξᵀ sym(P𝕀) ξ`.
pub fn directional_energy<T: Real>(cbf: &DirectionalEnergyCbf<T>, state: &State<T>, inertia: &InertiaTensor<T>) -> T {
    let xi = state.twist.to_vector();
    let m = sym(&(projection_matrix(cbf, &state.pose) * inertia.matrix()));
    xi.dot(&(m * xi)) * T::lit(0.5)
}

/// `(𝕀⁻¹Mξ)ᵀ u ≤ α(E_max − E_dir) − V`.
pub fn directional_constraint<T: Real>(
    cbf: &DirectionalEnergyCbf<T>,
    state: &State<T>,
    inertia: &InertiaTensor<T>,
) -> BarrierConstraint<T> {
    let xi = state.twist.to_vector();
    let p = projection_matrix(cbf, &state.pose);
    let i6 = inertia.matrix();
    let m = sym(&(p * i6));
    let m_xi = m * xi;
    let energy = xi.dot(&m_xi) * T::lit(0.5);
    let big_h = cbf.e_max - energy;

    let a = inertia.solve(&m_xi);
    let gyro = coadjoint(&state.twist) * inertia.apply(&xi);
    let p_dot = projection_rate(&p, &state.twist.omega);
    let m_dot = sym(&(p_dot * i6));
    let virtual_power = a.dot(&gyro) + xi.dot(&(m_dot * xi)) * T::lit(0.5);

    BarrierConstraint {
        a,
        b: cbf.class_k.apply(big_h) - virtual_power,
        label: cbf.label.clone(),
        h: None,
        big_h,
        energy,
        drift: -virtual_power,
    }
}
