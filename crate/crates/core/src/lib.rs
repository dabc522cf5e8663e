//! Extended state observers and an ADRC loop around a geared DC motor with
//! Coulomb friction, plus the experiment harness that compares them.
//!
//! * [`sim`]: RK4 integration, traces, measurement noise.
//! * [`plant`]: motor model, parameter uncertainty, the matched-form transform.
//! * [`observer`]: linear, nonlinear and `fal` extended state observers.
//! * [`control`]: tracking differentiator, state-error feedback, closed loop.
//! * [`finite_time`]: settling-time formulas and their numeric check.
//! * [`bench`]: scenarios, metrics and reports.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod control;
pub mod finite_time;
pub mod observer;
pub mod plant;
pub mod sim;
