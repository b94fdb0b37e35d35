//! Classifiers, the shared network trainer, metrics and the model file
//! container.

mod artifact;
pub mod cnn;
pub mod encode;
pub mod forest;
pub mod metrics;
pub mod mlp;
pub mod nbm;
pub mod network;
pub mod train;
pub mod tree;
pub mod two_stage;
pub mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::Schema;

pub use artifact::{ModelArtifact, ModelPayload, TrainOptions, TrainingPeriod, FORMAT_VERSION, MAGIC};
pub use cnn::{Cnn, CnnShape};
pub use forest::{ForestConfig, RandomForest};
pub use metrics::{f1_scores, ClassScore, F1Report};
pub use mlp::Mlp;
pub use nbm::Nbm;
pub use network::{DropoutMode, Network};
pub use train::{train_network, TrainConfig, TrainHistory};
pub use tree::{DecisionTree, TreeConfig};
pub use two_stage::TwoStage;
pub use vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nbm,
    Dt,
    Rf,
    Fcnn,
    Cnn,
    TwoStage,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] =
        [ModelKind::Nbm, ModelKind::Dt, ModelKind::Rf, ModelKind::Fcnn, ModelKind::Cnn, ModelKind::TwoStage];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nbm => "nbm",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Fcnn => "fcnn",
            ModelKind::Cnn => "cnn",
            ModelKind::TwoStage => "two-stage",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            ModelKind::Nbm => 1,
            ModelKind::Dt => 2,
            ModelKind::Rf => 3,
            ModelKind::Fcnn => 4,
            ModelKind::Cnn => 5,
            ModelKind::TwoStage => 6,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Schemas this model can be trained on.
    pub fn schemas(self) -> &'static [Schema] {
        match self {
            ModelKind::Nbm | ModelKind::TwoStage => &[Schema::Hour],
            ModelKind::Dt | ModelKind::Rf | ModelKind::Fcnn => &[Schema::Hour, Schema::Second, Schema::Flow],
            ModelKind::Cnn => &[Schema::Grid],
        }
    }

    pub fn supports(self, schema: Schema) -> bool {
        self.schemas().contains(&schema)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model {s:?} (nbm, dt, rf, fcnn, cnn, two-stage)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_index: usize,
    /// Probability estimate of `class_index`.
    pub confidence: f64,
}

impl Prediction {
    /// Most probable class; ties go to the lowest index.
    pub fn from_distribution(p: &[f64]) -> Prediction {
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        Prediction { class_index: best, confidence: p.get(best).copied().unwrap_or(0.0) }
    }
}

/// Numerically stable softmax in place.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return;
    }
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

/// splitmix64 mix of a seed and a stream index; used to derive independent
/// per-tree, per-epoch and per-sample seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
