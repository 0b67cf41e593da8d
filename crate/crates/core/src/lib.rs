//! Full counting statistics of quantum-jump trajectories in Markovian
//! exciton transport.
//!
//! The crate builds single-excitation Frenkel exciton models, derives the
//! secular Lindblad generator with Drude–Lorentz phonon rates, tilts the
//! counted jump channels by `e^{-s}` and extracts the scaled cumulant
//! generating function `θ(s)` as the largest real eigenvalue of the tilted
//! generator. From `θ(s)` follow the activity `-θ'(s)`, the Mandel
//! parameter `Q(s) = -θ''(s)/θ'(s) - 1`, the Legendre rate function and
//! dynamical-crossover points. An independent continuous-time jump simulator
//! over exciton populations cross-checks the `s = 0` cumulants.
//!
//! All energies and rates are in cm⁻¹ with ħ = 1; [`units`] carries the
//! conversion to ps⁻¹.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![deny(missing_docs)]

extern crate alloc;

#[cfg(any(feature = "std", test))]
extern crate std;

pub mod bath;
pub mod generator;
pub mod lds;
pub mod linalg;
pub mod model;
pub mod trajectories;
pub mod units;

pub use bath::{BathError, BathSpec};
pub use generator::{
    build_tilted, classical_two_state, enumerate_channels, population_block, ChannelSelector,
    ClassicalTwoState, GeneratorError, JumpChannel, TiltedGenerator,
};
pub use lds::{
    find_crossover, mandel, rate_function, scan, scan_mandel_vs_parameter, theta,
    theta_derivatives, CrossoverReport, LdsError, LocalMax, RateFunction, RateFunctionPoint, SGrid,
    ScanPoint, ThetaDerivatives,
};
pub use model::{diagonalize, intensity_factor, preset, ExcitonBasis, ModelError, SiteModel};
pub use trajectories::{
    empirical_rate_function, simulate, CountStatistics, InitialState, TrajectoryConfig,
    TrajectoryError,
};
