//! Mixed finite elements for time-domain acoustics in Drude-type metamaterials.
//!
//! Velocity lives in an H(div) space (RTN or BDM), pressure and the four
//! auxiliary fields in discontinuous spaces. Time stepping is Crank–Nicolson
//! with a static-condensation direct solver; a cell-local post-processing
//! recovers a higher-order pressure.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod audit;
pub mod config;
pub mod dense;
pub mod error;
pub mod fespace;
pub mod material;
pub mod mesh;
pub mod mms;
pub mod output;
pub mod postprocess;
pub mod quadrature;
pub mod refelem;
pub mod scalar;
pub mod scenario;
pub mod solver;
pub mod sources;
pub mod sparse;
pub mod stepper;

pub use assembly::{EssentialBc, SystemBlocks};
pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use fespace::{FEFunction, FESpace, Pairing, Spaces};
pub use material::{energy, EnergyForm, MaterialField, Medium, RegionCoefficients, StateVector};
pub use mesh::{BoundaryKind, BoundaryLabel, BoundaryPart, Mesh, Rect, RegionIndicator, Side};
pub use mms::{convergence_study, ConvergenceReport, DtPolicy, ExactSolution};
pub use postprocess::{postprocess_pressure, PostState};
pub use refelem::ElementFamily;
pub use scalar::Scalar;
pub use scenario::{run_scenario, ScenarioReport};
pub use sources::Source;
pub use stepper::{run, CnSystem, EnergyTrace, Forcing, InitialData, Observer, TimeGrid, Unforced};

pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type Spaces64 = Spaces<f64>;
pub type Spaces32 = Spaces<f32>;
pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
pub type MaterialField64 = MaterialField<f64>;
pub type MaterialField32 = MaterialField<f32>;
pub type CnSystem64 = CnSystem<f64>;
pub type CnSystem32 = CnSystem<f32>;
