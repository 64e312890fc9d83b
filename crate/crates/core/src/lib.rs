//! Planar aerial-manipulator workbench: a quadrotor carrying a two-link
//! overhead arm.
//!
//! The pipeline has three stages:
//!
//! 1. [`corridor`] turns a target end-effector trajectory into per-sample sets
//!    of base positions from which the arm can reach the target.
//! 2. [`planner`] searches that corridor for a base path that keeps a
//!    time-to-collision margin against moving obstacles.
//! 3. [`qlearn`] trains a tabular Q-learning agent that picks joint torques so
//!    the arm tip tracks the target while the base flies its plan.
//!
//! [`disturb`] closes the loop in the other direction: the moments the moving
//! arm exerts on the vehicle body, with and without a reactive thrust
//! controller.
//!
//! The crate is `no_std` and only needs `alloc`. Floating-point math goes
//! through `libm`, so results are bit-identical across platforms.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arm;
pub mod corridor;
pub mod disturb;
pub mod error;
pub mod math;
pub mod planner;
pub mod qlearn;
pub mod quad;
pub mod scenario;
pub mod trajectory;

pub use error::{InvalidParameter, NumericalBlowUp};
pub use math::Vec2;
