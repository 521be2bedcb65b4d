//! Switching dynamics of a two-state molecular quantum-dot cellular automata
//! cell whose electron is coupled to a semiclassical vibrational mode.
//!
//! The numerical core is generic over the scalar type ([`Real`], `f32` or
//! `f64`); the `*64` aliases below fix it to `f64`, which the experiment
//! harness and command-line tool use throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod experiments;
pub mod mat2;
pub mod output;
pub mod qmodel;
pub mod scalar;
pub mod steady;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams64 = qmodel::ModelParams<f64>;
pub type BlochState64 = qmodel::BlochState<f64>;
pub type HamiltonianParts64 = qmodel::HamiltonianParts<f64>;
pub type Mat2x64 = mat2::Mat2<f64>;
pub type SteadySolution64 = steady::SteadySolution<f64>;
pub type SolutionSet64 = steady::SolutionSet<f64>;
pub type BiasWaveform64 = waveform::BiasWaveform<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type IntegratorConfig64 = dynamics::IntegratorConfig<f64>;
pub type PowerChannels64 = energetics::PowerChannels<f64>;
pub type DissipationReport64 = energetics::DissipationReport<f64>;

pub type ModelParams32 = qmodel::ModelParams<f32>;
pub type BlochState32 = qmodel::BlochState<f32>;
pub type Trajectory32 = dynamics::Trajectory<f32>;
