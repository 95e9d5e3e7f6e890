//! Learn a cross-category style space from item co-occurrence data and use it
//! to retrieve compatible items.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`graph`]: catalog of items and undirected co-occurrence edges, cleaning
//!   and stratified train/validation/test item splits.
//! * [`sampler`]: labeled pair datasets under naive, strategic (heterogeneous
//!   dyad) and holdout-category sampling.
//! * [`embed`]: projection model trained with a margin contrastive loss on a
//!   shared-weight (Siamese) pair of branches.
//! * [`retrieve`]: per-category k-means style index, robust cluster-mediated
//!   nearest-neighbor lookup, outfit assembly and cluster affinities.
//! * [`eval`]: pair distances, ROC, AUC, histograms and holdout transfer ratios.
//! * [`synth`]: synthetic catalogs with planted styles for desk-scale checks.

pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod retrieve;
pub mod sampler;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Catalog, Category, Edge, Item, ItemId, ItemSplit};
