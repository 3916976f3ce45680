//! Representation and partition analyses: PCA, neighbour embedding, MIC,
//! mini-batch k-means with elbow selection, behavioural profiles and unit
//! transducers.

mod elbow;
mod embed;
pub mod io;
mod kmeans;
mod mic;
mod pca;
mod profiles;
mod stats;
pub mod svg;
mod transducer;

pub use elbow::{elbow, Elbow};
pub use embed::{aligned_embed, fit_ab, neighbor_embed, silhouette, EmbedParams, EmbeddingResult};
pub use kmeans::{inertia, inertia_curve, minibatch_kmeans, purity, standardize, KMeansParams, KMeansResult};
pub use mic::{mic, MicResult};
pub use pca::Pca;
pub use profiles::{partition, partition_profiles, PartitionProfile, PartitionReport};
pub use stats::{mean, pearson, ranks, sample_sd, spearman};
pub use transducer::{discounted_future_sum, unit_transducer, Transducer, TransducerBin};
