use super::slit::{slit_eval, slit_rate_at, SlitSpec};
use super::{BarrierConstraint, ClassK};
use crate::dynamics::{kinetic_energy, InertiaTensor, State};
use crate::error::{Error, Result};
use crate::lie::Pose;
use crate::scalar::Real;

/// Configuration-only barrier `h(g)` that the energy term is added to.
#[derive(Debug, Clone, PartialEq)]
pub enum KinematicBarrier<T: Real> {
    Slit(SlitSpec<T>),
    /// `h(g) = c`; the safe set is the whole group.
    Constant(T),
}

impl<T: Real> KinematicBarrier<T> {
    pub fn value(&self, g: &Pose<T>) -> T {
        match self {
            KinematicBarrier::Slit(spec) => slit_eval(spec, g).h,
            KinematicBarrier::Constant(c) => *c,
        }
    }

    /// `L_f h`, the rate of `h` along the drift.
    pub fn rate(&self, state: &State<T>) -> T {
        match self {
            KinematicBarrier::Slit(spec) => slit_rate_at(spec, state),
            KinematicBarrier::Constant(_) => T::zero(),
        }
    }
}

/// Constant kinematic barrier `h = E_max / α_e`, which turns the
/// energy-augmented barrier into a bound `E ≤ E_max` on total kinetic energy.
pub fn constant_h<T: Real>(e_max: T, alpha_e: T) -> Result<T> {
    if !(e_max > T::zero()) {
        return Err(Error::param("e_max", "must be positive"));
    }
    if !(alpha_e > T::zero()) {
        return Err(Error::param("alpha_e", "must be positive"));
    }
    Ok(e_max / alpha_e)
}

/// `H(g, ξ) = α_e h(g) − E(ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAugmentedCbf<T: Real> {
    pub label: String,
    pub barrier: KinematicBarrier<T>,
    pub alpha_e: T,
    pub class_k: ClassK<T>,
}

impl<T: Real> EnergyAugmentedCbf<T> {
    pub fn new(label: impl Into<String>, barrier: KinematicBarrier<T>, alpha_e: T, class_k: ClassK<T>) -> Result<Self> {
        if !(alpha_e > T::zero()) {
            return Err(Error::param("alpha_e", "must be positive"));
        }
        Ok(Self {
            label: label.into(),
            barrier,
            alpha_e,
            class_k,
        })
    }

    pub fn value(&self, state: &State<T>, inertia: &InertiaTensor<T>) -> T {
        self.alpha_e * self.barrier.value(&state.pose) - kinetic_energy(&state.twist, inertia)
    }
}

/// `ξᵀu ≤ α_e L_f h(g) + α(H)`.
///
/// The gyroscopic drift drops out because `ξᵀ ad*_ξ 𝕀ξ = 0`.
pub fn energy_augmented_constraint<T: Real>(
    cbf: &EnergyAugmentedCbf<T>,
    state: &State<T>,
    inertia: &InertiaTensor<T>,
) -> BarrierConstraint<T> {
    let h = cbf.barrier.value(&state.pose);
    let energy = kinetic_energy(&state.twist, inertia);
    let big_h = cbf.alpha_e * h - energy;
    let drift = cbf.alpha_e * cbf.barrier.rate(state);
    BarrierConstraint {
        a: state.twist.to_vector(),
        b: drift + cbf.class_k.apply(big_h),
        label: cbf.label.clone(),
        h: Some(h),
        big_h,
        energy,
        drift,
    }
}
