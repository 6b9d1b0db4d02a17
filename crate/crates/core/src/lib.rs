//! Numerical and spectral laboratory for a suspension-bridge model: a wave
//! equation (cable) coupled to an Euler–Bernoulli beam (deck) through linear
//! suspenders, with a single pointwise damper at `xi`.

pub mod basis;
pub mod characteristics;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod generator;
pub mod nonlinearity;
pub mod params;
pub mod spectral;
pub mod timestepper;

pub use basis::{modal_frequency, synthesize, ModalState};
pub use energy::{damping_power, total_energy, EnergyBreakdown, EnergyMetric};
pub use error::{Error, ParamError, Result};
pub use generator::{assemble, DiscreteGenerator, ShiftedSolveReport};
pub use params::{classify_damping_point, DampingPoint, DampingPointClass, DampingTag, ModelParams};
