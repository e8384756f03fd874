//! Blow-up analysis of isolated equilibria of polynomial vector fields in
//! three variables, from the directional-chart atlas up to the predicted
//! accumulation set of orbits tending to the origin.

// Coordinates are indexed by axis throughout.
#![allow(clippy::needless_range_loop)]

pub mod atlas;
pub mod config;
pub mod eigen;
pub mod error;
pub mod field;
pub mod graph;
pub mod integrate;
pub mod io;
pub mod morse_smale;
pub mod pipeline;
pub mod rational;
pub mod scalar;
pub mod secant;
pub mod singularity;
pub mod weights;

pub use atlas::{BlowupAtlas, BlowupStep, Chart, ChartId, ComponentId, Strata, Stratum};
pub use config::AnalysisConfig;
pub use error::{Error, Result};
pub use field::{FloatField, Poly, PolyField3, RationalMatrix3};
pub use graph::{Cycle, Prediction, SeparatrixGraph, TraceConfig};
pub use morse_smale::MSVerdict;
pub use pipeline::{run_pipeline, Analysis, AnalysisReport};
pub use rational::Q;
pub use secant::{Accumulation, SecantCloud, SecantConfig};
pub use singularity::{EquilibriumConfig, EquilibriumRecord, Kind};
pub use weights::{Weight, WeightedChain};
