//! Coreset selection for image datasets.
//!
//! Images are scored by the bits-per-pixel of their JPEG encoding, a cheap
//! intrinsic proxy for visual complexity. Scores can be combined with an
//! externally supplied generative log-likelihood (`cpx = nll - bpp`) or
//! replaced by a k-means prototypicality distance. Selection is either a plain
//! top-m cut of the ranked scores or a greedy walk over a Gaussian-weighted
//! K-NN graph that suppresses the neighbours of every chosen sample, trading
//! raw score for coverage.
//!
//! The graph can be built from feature embeddings (Euclidean distance) or from
//! per-image ground-truth label histograms (Jensen-Shannon divergence).
//!
//! Runnable walkthroughs of each stage live in the crate's `examples/`
//! directory; the `coreset` binary chains the stages through files.

pub mod bpp;
pub mod cli;
pub mod dataset;
mod error;
pub mod graph;
pub mod histogram;
pub mod prototypicality;
pub mod sampler;
pub mod scores;
pub mod synth;

pub use bpp::{bpp_from_stored, bpp_reencode, score_dataset_bpp, BppConfig, ChromaSubsampling};
pub use dataset::{
    load_features, load_image, load_manifest, load_mask, load_score_table, write_selection,
    DatasetManifest, FeatureMatrix, MaskBuffer, PixelBuffer, SampleRecord, ScoreTable,
};
pub use error::{Error, Result};
pub use graph::{build_graph, pairwise_knn, Bandwidth, KnnGraph, KnnLists, Metric};
pub use histogram::{histogram, jsd, LabelHistogram};
pub use prototypicality::{kmeans_fit, ps_score, KMeansConfig, KMeansModel};
pub use sampler::{coverage_stats, graph_select, CoverageReport, Selection, SelectionEntry};
pub use scores::{cpx, cpx_columns, rank, top_m, Order, Ranking};
