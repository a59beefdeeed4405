//! Monocular non-rigid depth reconstruction from dense correspondences.
//!
//! Given calibrated views of a possibly deforming scene and per-pair point
//! correspondences, this crate recovers per-view depth fields by directly
//! minimizing an as-rigid-as-possible objective on Euclidean distance
//! matrices: pairwise 3D distances should be preserved across views, each
//! pair weighted by a learned or prescribed rigidity score. The same
//! machinery expresses the classical non-rigid reconstruction priors (rigid,
//! isometric neighborhoods, external rigidity scores, low-rank shape bases)
//! as weight structures or rank bounds over the distance-matrix differences.
//!
//! The main entry points:
//!
//! - [`geometry`]: cameras, rays, bounded depth fields, back-projection and
//!   squared-distance matrices.
//! - [`priors`]: rigidity weight structures per prior, plus numerical rank
//!   validation of the low-rank bounds.
//! - [`embedding`]: per-point motion embeddings, embedding-distance weights
//!   and motion segmentation.
//! - [`solver`]: edge sampling, the normalized weighted loss, exact
//!   gradients, and the two-stage Adam optimization.
//! - [`synth`]: ground-truth-complete synthetic scenes for every prior
//!   regime.
//! - [`eval`]: depth error metrics under median scaling and segmentation
//!   metrics.
//! - [`io`] / [`config`] / [`cli`]: file formats (`.flo`, PFM, PGM, CSV
//!   tracks), the JSON run configuration, and the subcommand driver used by
//!   the `nrdepth` binary.
//!
//! Runnable demonstrations of each capability live in `examples/`.

pub mod cli;
pub mod config;
pub mod correspondence;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod priors;
pub mod solver;
pub mod synth;

pub use correspondence::CorrespondenceMap;
pub use error::{Error, Result};
pub use geometry::{
    back_project, compute_edm, decode_depth, edge_distances, edm_difference, CameraIntrinsics,
    DepthField, Edm, PointCloud, ViewObservation,
};
pub use priors::{
    apply_score_overrides, build_low_rank_views, isometric_weights, rank_check, rigid_weights,
    LowRankStructure, RankReport, WeightAssignment, WeightKind,
};

/// Build the global worker pool, honoring the `NRDEPTH_THREADS` environment
/// variable when set. Safe to call more than once; only the first call has
/// an effect.
pub fn init_thread_pool() {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("NRDEPTH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        builder = builder.num_threads(n.max(1));
    }
    // Errors only if a global pool already exists, which is fine.
    let _ = builder.build_global();
}
