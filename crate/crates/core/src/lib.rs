//! Mining categorical design-decision datasets.
//!
//! The crate loads a table of records classified along categorical design
//! dimensions and offers four analyses over it:
//!
//! * [`gower`] and [`hac`]: Gower distances and hierarchical agglomerative
//!   clustering with dendrogram cuts and per-dimension overlays.
//! * [`validation`]: silhouette widths for choosing the cluster count and
//!   bootstrap cluster stability.
//! * [`mca`]: multiple correspondence analysis with the Benzécri correction
//!   and category contributions.
//! * [`recommender`]: a navigation trie over dimension values, frequency
//!   recommendations for partially specified designs, and gap detection.

pub mod dataset;
pub mod error;
pub mod gower;
pub mod hac;
pub mod linalg;
pub mod mca;
pub mod recommender;
pub mod validation;

pub use dataset::{Dataset, Dimension, Format, Record};
pub use error::{Error, Result};
pub use gower::{distance_matrix, gower_distance, DistanceMatrix};
pub use hac::{cluster, cut, partition_by_dimension, Dendrogram, Linkage, Partition};
pub use mca::{benzecri_correct, mca, retain_dimensions, top_contributions, McaResult};
pub use recommender::{build_tree, recommend, NavigationTree, PartialAssignment, Recommendation};
pub use validation::{
    bootstrap_stability, silhouette, silhouette_sweep, BootstrapConfig, SilhouetteReport,
    StabilityReport,
};
