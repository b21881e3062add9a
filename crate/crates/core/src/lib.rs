//! Safety-critical control of a rigid body on SE(3) with energy-augmented
//! zeroing control barrier functions.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the scenario
//! harness runs in `f64`.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lie;
pub mod qp;
pub mod scalar;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Rotation64 = lie::Rotation<f64>;
pub type Pose64 = lie::Pose<f64>;
pub type Twist64 = lie::Twist<f64>;
pub type Wrench64 = dynamics::Wrench<f64>;
pub type State64 = dynamics::State<f64>;
pub type Inertia64 = dynamics::InertiaTensor<f64>;
pub type Gains64 = control::Gains<f64>;
pub type Cbf64 = barrier::Cbf<f64>;

pub type Rotation32 = lie::Rotation<f32>;
pub type Pose32 = lie::Pose<f32>;
pub type Twist32 = lie::Twist<f32>;
pub type Wrench32 = dynamics::Wrench<f32>;
pub type State32 = dynamics::State<f32>;
pub type Inertia32 = dynamics::InertiaTensor<f32>;
pub type Gains32 = control::Gains<f32>;
pub type Cbf32 = barrier::Cbf<f32>;
