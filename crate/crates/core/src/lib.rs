//! Cut-element vibroacoustic simulation and level-set topology optimization
//! of 2D acoustic filters.

pub mod adjoint;
pub mod assembly;
pub mod config;
pub mod cut;
pub mod design;
pub mod error;
pub mod gradcheck;
pub mod harmonic;
pub mod linalg;
pub mod mesh;
pub mod mma;
pub mod newmark;
pub mod optimize;
pub mod output;
pub mod par;
pub mod presets;
pub mod problem;
pub mod scenario;
pub mod signal;
pub mod spectrum;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use par::Execution;
pub use problem::Problem;
