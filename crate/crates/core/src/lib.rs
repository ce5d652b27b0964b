//! Dynamic ensemble selection toolkit.
//!
//! Builds bagged perceptron pools, estimates per-query classifier competence
//! with a meta-learned selector or the literature's region-based criteria,
//! and combines the selected members by majority vote.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod linear;
pub mod meta_features;
pub mod metades;
pub mod mlp;
pub mod pool;
pub mod region;
pub mod synth;

pub use dataset::{load_csv, stratified_split, Dataset, LabelColumn, MinMaxScaler, SplitSpec};
pub use error::{Error, Result};
pub use linear::{train_perceptron, LinearClassifier, PerceptronConfig};
pub use metades::{MetaDes, MetaDesParams};
pub use mlp::{MetaClassifier, MetaTrainConfig};
pub use pool::{adaboost_train, bagging_generate, majority_vote, AdaBoost, Pool};
