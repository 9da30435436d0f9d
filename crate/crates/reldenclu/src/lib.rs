//! Relative-density biclustering.
//!
//! Finds groups of observations that behave coherently across a subset
//! of features, without assuming linear relationships. The pipeline:
//!
//! 1. normalize every column onto the unit interval
//!    ([`normalize::normalize_matrix`]);
//! 2. for every feature pair, find regions whose joint density exceeds
//!    both marginals and the global average
//!    ([`density::find_dense_regions`]);
//! 3. intersect regions over feature triplets into seeds
//!    ([`assembly::build_seed_biclusters`]);
//! 4. grow seeds into biclusters and weed near-duplicates
//!    ([`assembly::assemble_biclusters`]).
//!
//! [`run_reldenclu`] chains the stages; [`datagen`] provides seeded
//! synthetic benchmarks and [`evaluate`] the recovery metrics.
//!
//! ```
//! use reldenclu::{datagen, evaluate, run_reldenclu, ParameterSet};
//!
//! let dataset = datagen::generate_named("base", 42).unwrap();
//! let found = run_reldenclu(&dataset.matrix, &ParameterSet::default()).unwrap();
//! let truth = &dataset.truth[0];
//! let score = evaluate::best_match(
//!     &found,
//!     truth,
//!     dataset.matrix.n_rows(),
//!     dataset.matrix.n_cols(),
//! )
//! .unwrap();
//! assert!(score.accuracy > 0.9);
//! ```

pub mod assembly;
pub mod datagen;
pub mod density;
pub mod evaluate;
pub mod model;
pub mod normalize;

pub use assembly::{run_reldenclu, run_reldenclu_detailed, RunReport};
pub use density::DensityPath;
pub use model::{
    membership_matrix, Bicluster, DataMatrix, DensityMode, Error, MembershipMatrix,
    NormalizedMatrix, Normalization, ParameterSet, RowSet, SeedBicluster,
};
