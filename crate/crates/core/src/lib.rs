//! Core algorithms for measuring belief dynamics on belief-labeled event
//! streams.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File
//! formats, the command-line front-end and parallel orchestration live in
//! the companion `bld` crate.
//!
//! Pipeline, bottom-up:
//!
//! * [`datamodel`]: events, weekly binning, validation tallies.
//! * [`beliefdyn`]: exponentially decayed per-user belief vectors and belief
//!   lifespans.
//! * [`landscape`]: 2D embeddings, density-peak attractors, weekly
//!   assignment and attractor belief profiles.
//! * [`measures`]: attractor homogeneity and community bias.
//! * [`events`]: population-normalized spike detection.
//! * [`comparative`]: amplifier flows, correlation reports, partition
//!   agreement and half-life sensitivity sweeps.
//! * [`synth`]: seeded scenario generator with planted ground truth.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod beliefdyn;
pub mod comparative;
pub mod datamodel;
pub mod events;
pub mod landscape;
pub mod measures;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use beliefdyn::{
    alpha_from_half_life, build_belief_vectors, BeliefVectorSeries, SmoothingParams,
};
pub use datamodel::{bin_weekly, BeliefEvent, Community, UserIdx, WeeklyCounts};
pub use landscape::{
    density_peak_cluster, AssignmentTable, AttractorSet, ClusterConfig, Embedding,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
