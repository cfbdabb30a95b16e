//! Simulation of a cyclic three-mode optomechanical system (two coupled
//! cavities sharing one mechanical mode) with mechanical gain.
//!
//! The crate covers the classical steady state ([`steadystate`]), stability of
//! the linearized fluctuations ([`stability`]), the probe scattering matrix and
//! its nonreciprocal amplification ([`response`]), optical group delay
//! ([`delay`]), and a time-domain integrator used to cross-check the algebraic
//! results ([`timedomain`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod model;
pub mod response;
pub mod stability;
pub mod steadystate;
pub mod timedomain;

pub use error::{Error, Result};
pub use grid::Grid;
pub use model::{complex_rates, detunings, optimal_unidirectional_params, ComplexRates, EffectiveParams, PhysicalParams, Rates};
pub use num_complex::Complex64 as C64;
pub use response::{Channel, Port, ScatteringMatrix};
pub use stability::{Class, DynamicMatrix, Frame, StabilityVerdict};
pub use steadystate::{SolveOptions, SteadyState};
