//! Simulation and numerical verification toolkit for dynamic random
//! connection models: marked Poisson point clouds on the unit torus whose
//! points flip between active and inactive states while a distance-kernel
//! random graph sits on top of them.
//!
//! The crate is organized around one pipeline and one closed-form engine:
//!
//! * [`geometry`], [`dynamics`], [`rcm`] sample the spatial cloud, the
//!   per-point on/off processes, and the potential edge set;
//! * [`counts`] maintains motif-count step functions through activation
//!   events and produces normalized (centered and rescaled) paths;
//! * [`graphs`] supplies the small-motif combinatorics (automorphisms,
//!   labeled copies, overlap families) that both sides share;
//! * [`theory`] evaluates motif integrals, expected counts, finite-size
//!   covariances, and limiting covariance matrices;
//! * [`diagrams`] provides exact moment/cumulant machinery for sums over
//!   tuples of Poisson points on finite spaces;
//! * [`stats`] runs replicated experiments and compares the empirical side
//!   against the closed forms, producing pass/fail comparison reports.

pub mod counts;
pub mod diagrams;
pub mod dynamics;
pub mod geometry;
pub mod graphs;
pub mod rcm;
pub mod rng;
pub mod stats;
pub mod theory;

pub use graphs::SmallGraph;
pub use rcm::Profile;
pub use theory::{Regime, RegimeSpec};
