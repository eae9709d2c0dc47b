//! High-order discrete energy minimisation by partial enumeration.
//!
//! Overlapping patches of a [`FactorGraph`] become super nodes whose labels
//! enumerate patch states; the resulting pairwise problem is solved with TRW-S
//! using a grouped linear-time message kernel.

pub mod curvature;
pub mod deconv;
pub mod energy;
pub mod error;
pub mod image;
pub mod lift;
pub mod lp;
pub mod report;
pub mod synth;
pub mod trws;

pub use energy::{FactorGraph, Labeling, INF};
pub use error::{Error, Result};
pub use image::GridImage;
pub use lift::{build_super_graph, PatchCover, SuperGraph, SuperLabeling};
pub use trws::{run, run_pairwise, Algorithm, SolveResult, SolverOptions};
