//! Symmetric exclusion processes on towers of finite quotients of Cayley
//! graphs: construction of the towers, local function bundles, exact small
//! state-space measures and Dirichlet forms, kinetic Monte Carlo simulation,
//! exact spectral checks and an experiment harness.

pub mod bundle;
pub mod configuration;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod folner;
pub mod group;
pub mod harness;
pub mod measure;
pub mod spectral;
pub mod stats;
pub mod tower;

pub use bundle::{BundleFile, EdgeBundle, GlobalAverage, JumpRate, VertexBundle};
pub use configuration::Configuration;
pub use dynamics::{estimate_exceedance, ExclusionProcess, ExceedanceEstimate, InitialLaw, TimeScale, Trajectory};
pub use error::{Error, Result};
pub use field::{CompiledField, FieldState, TheoremFunctional};
pub use folner::{b_index, folner_set, FolnerData};
pub use group::{Elem, GroupFamily, TowerSpec, IDENTITY};
pub use tower::{build_tower, Edge, QuotientGraph, TowerLimits};
