//! Control barrier functions that emit affine wrench constraints `aᵀu ≤ b`.

mod directional;
mod energy;
mod slit;

pub use directional::{directional_constraint, directional_energy, projection_matrix, projection_rate, DirectionalEnergyCbf};
pub use energy::{constant_h, energy_augmented_constraint, EnergyAugmentedCbf, KinematicBarrier};
pub use slit::{slit_h, slit_h_rate, Gate, SlitEval, SlitSpec, DEFAULT_MARGIN};

use crate::dynamics::{InertiaTensor, State};
use crate::lie::Vec6;
use crate::scalar::Real;

/// Extended class-K function used in the barrier inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassK<T: Real> {
    /// `α(s) = c·s` with `c > 0`.
    Linear(T),
}

impl<T: Real> ClassK<T> {
    pub fn linear(coefficient: T) -> crate::Result<Self> {
        if !(coefficient > T::zero() && coefficient.is_finite()) {
            return Err(crate::Error::param("class_k.alpha", "coefficient must be positive"));
        }
        Ok(ClassK::Linear(coefficient))
    }

    pub fn apply(&self, s: T) -> T {
        match self {
            ClassK::Linear(c) => *c * s,
        }
    }

    pub fn coefficient(&self) -> T {
        match self {
            ClassK::Linear(c) => *c,
        }
    }
}

/// Half-space `aᵀu ≤ b` in wrench space, plus the barrier values it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierConstraint<T: Real> {
    pub a: Vec6<T>,
    pub b: T,
    pub label: String,
    /// Kinematic barrier `h(g)`; only for energy-augmented barriers.
    pub h: Option<T>,
    /// `H` (energy-augmented) or `H_dir` (directional).
    pub big_h: T,
    /// Total kinetic energy or directional kinetic energy.
    pub energy: T,
    /// Input-free part of `Ḣ`.
    pub drift: T,
}

impl<T: Real> BarrierConstraint<T> {
    /// `Ḣ` under wrench `u`: `drift − aᵀu`.
    pub fn barrier_rate(&self, u: &Vec6<T>) -> T {
        self.drift - self.a.dot(u)
    }

    pub fn is_satisfied_by(&self, u: &Vec6<T>, tol: T) -> bool {
        self.a.dot(u) <= self.b + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cbf<T: Real> {
    EnergyAugmented(EnergyAugmentedCbf<T>),
    Directional(DirectionalEnergyCbf<T>),
}

impl<T: Real> Cbf<T> {
    pub fn label(&self) -> &str {
        match self {
            Cbf::EnergyAugmented(c) => &c.label,
            Cbf::Directional(c) => &c.label,
        }
    }

    pub fn constraint(&self, state: &State<T>, inertia: &InertiaTensor<T>) -> BarrierConstraint<T> {
        match self {
            Cbf::EnergyAugmented(c) => energy_augmented_constraint(c, state, inertia),
            Cbf::Directional(c) => directional_constraint(c, state, inertia),
        }
    }
}
