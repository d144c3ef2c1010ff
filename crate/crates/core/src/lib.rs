//! # cimon
//!
//! Unsupervised hashing over precomputed feature vectors.
//!
//! The pipeline has two halves:
//!
//! - **Similarity mining** ([`simgraph`]): cosine distances between items are
//!   thresholded into a ±1 pseudo-graph, pairs that disagree with a spectral
//!   clustering of the features are dropped, and the surviving pairs are
//!   weighted by how far out in the tails of the distance distribution they sit.
//! - **Consistency learning** ([`losses`], [`hashnet`], [`trainer`]): a small
//!   fully-connected head is trained on two augmented views of every item so
//!   that code similarities match the mined graphs of both views, and the two
//!   views of an item agree under a contrastive objective.
//!
//! [`evalkit`] scores the resulting binary codes by Hamming ranking (MAP@R,
//! precision/recall, top-N precision) and measures robustness and bit balance.
//!
//! ```no_run
//! use cimon::ingest::{make_synthetic, augment_features, AugmentConfig};
//! use cimon::trainer::{train, TrainConfig};
//!
//! let (base, _labels) = make_synthetic(4, 100, 32, 10.0, 7).unwrap();
//! let views = augment_features(&base.views[0], &AugmentConfig::new(0.3, 0.1, 7)).unwrap();
//! let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
//! let (_model, codes, report) = train(&views, &cfg).unwrap();
//! println!("{} codes, final loss {:?}", codes.len(), report.history.last());
//! ```

pub mod error;
pub mod evalkit;
pub mod hashnet;
pub mod ingest;
pub mod losses;
pub mod simgraph;
pub mod trainer;

mod rng;

pub use error::{Error, Result};
pub use hashnet::{BinaryCodes, HashModel, RelaxedCodes};
pub use ingest::{FeatureViewPair, LabelVector};
pub use simgraph::SemanticInfo;
