//! Soft-partition clustering toolkit.
//!
//! * [`fcm`] and [`pcm`]: fuzzy and possibilistic c-means.
//! * [`tendency`]: VAT reordering, the iVAT min-max path transform and PGM export.
//! * [`validity`]: partition coefficient, Dunn and Davies-Bouldin indices, c-sweeps.
//! * [`datagen`]: labelled synthetic Gaussian scenarios.
//!
//! Points are rows of a [`Dataset`]; memberships are stored cluster-major
//! (`c × n`) in a [`MembershipMatrix`].

pub mod data;
pub mod datagen;
pub mod distance;
mod error;
pub mod fcm;
pub mod pcm;
pub mod rng;
pub mod tendency;
pub mod validity;

pub use data::{
    load_csv, write_csv, write_labels_csv, CentroidSet, ClusteringResult, Dataset, DistanceKind,
    MembershipKind, MembershipMatrix, RunConfig,
};
pub use distance::{CovarianceModel, DissimilarityMatrix, Metric};
pub use error::{Error, Result};
