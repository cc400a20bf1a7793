//! Spectral simulation and normal-form verification toolkit for the
//! Korteweg–de Vries equation on the 2π-torus.

pub mod baseline;
pub mod experiments;
pub mod integrator;
pub mod normal_form;
pub mod shallow_water;
pub mod spectral;

pub use experiments::HermiteSpec;
pub use integrator::{KdvParams, Scheme, TrajectoryRecord};
pub use num_complex::Complex64;
pub use spectral::{FourierField, Grid, Spectrum};
