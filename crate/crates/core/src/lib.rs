pub mod env;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod lattice;
pub mod mcmc;
pub mod spectral;
pub mod stats;
pub mod walk;

pub use env::{
    killing_time, sample_environment, survival_dp, Environment, LazyEnvironment, ModelParams, ObstacleField,
};
pub use error::{Error, Result};
pub use exact::{exact_mu_expectation, exact_partition_function, ExactResult};
pub use lattice::{ball_points, external_boundary, BallSpec, LatticeSet, Point};
pub use mcmc::{run_chain, ChainSchedule, ChainState, MoveKind, MoveMix, MoveSpec};
pub use walk::WalkPath;
pub use spectral::{dirichlet_spectrum, ScalingConstants, SpectrumResult};
pub use geometry::{SkeletalSet, CrossingDecomposition, TrulyOpenConfig};
