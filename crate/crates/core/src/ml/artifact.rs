//! Trained models and their versioned binary container.
//!
//! Layout: `IOTID` magic, u32 LE format version, u8 model kind, u8 schema,
//! u64 LE payload length, CBOR payload.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cnn::Cnn;
use super::encode::{check_schema, grid_input, BagEncoder, NumericEncoder, Standardizer};
use super::forest::{ForestConfig, RandomForest};
use super::mlp::Mlp;
use super::nbm::Nbm;
use super::network::Network;
use super::train::{train_network, TrainConfig, TrainHistory};
use super::tree::DecisionTree;
use super::two_stage::TwoStage;
use super::{derive_seed, ModelKind, Prediction};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, Schema};

pub const MAGIC: &[u8; 5] = b"IOTID";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 5 + 4 + 1 + 1 + 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPeriod {
    pub label: String,
    pub start_week: u32,
    pub end_week: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub seed: u64,
    pub n_trees: usize,
    /// Network settings; its seed is replaced by one derived from `seed`.
    pub trainer: TrainConfig,
    pub period: Option<TrainingPeriod>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { seed: 0, n_trees: 100, trainer: TrainConfig::default(), period: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelPayload {
    Nbm {
        bags: BagEncoder,
        model: Nbm,
    },
    Dt {
        encoder: NumericEncoder,
        tree: DecisionTree,
    },
    Rf {
        encoder: NumericEncoder,
        forest: RandomForest,
    },
    Fcnn {
        encoder: NumericEncoder,
        standardizer: Standardizer,
        net: Mlp,
        params: Vec<f64>,
        history: TrainHistory,
    },
    Cnn {
        net: Cnn,
        params: Vec<f64>,
        history: TrainHistory,
    },
    TwoStage(TwoStage),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub kind: ModelKind,
    pub schema: Schema,
    pub class_count: usize,
    pub seed: u64,
    pub training_period: Option<TrainingPeriod>,
    pub payload: ModelPayload,
}

fn hour_rows(data: &FeatureSet) -> &[crate::features::HourWindowRow] {
    match data {
        FeatureSet::Hour(r) => r,
        _ => unreachable!("schema checked by caller"),
    }
}

impl ModelArtifact {
    pub fn train(kind: ModelKind, data: &FeatureSet, class_count: usize, opts: &TrainOptions) -> Result<Self> {
        let schema = data.schema();
        if !kind.supports(schema) {
            let expected: Vec<&str> = kind.schemas().iter().map(|s| s.name()).collect();
            return Err(Error::SchemaMismatch {
                expected: format!("{} for model {kind}", expected.join(" or ")),
                actual: schema.to_string(),
            });
        }
        if data.is_empty() {
            return Err(Error::Training(format!("no {schema} rows to train {kind} on")));
        }
        let labels = data.labels();
        if let Some(&c) = labels.iter().find(|&&c| c >= class_count) {
            return Err(Error::Training(format!("label {c} outside {class_count} classes")));
        }
        let forest = ForestConfig { n_trees: opts.n_trees, seed: derive_seed(opts.seed, 10), ..Default::default() };
        let trainer = TrainConfig { seed: derive_seed(opts.seed, 20), ..opts.trainer };
        let payload = match kind {
            ModelKind::Nbm => {
                let rows = hour_rows(data);
                let bags = BagEncoder::fit(rows);
                let b: Vec<Vec<usize>> = rows.iter().map(|r| bags.combined(r)).collect();
                let model = Nbm::train(&b, &labels, class_count, bags.combined_size())?;
                ModelPayload::Nbm { bags, model }
            }
            ModelKind::Dt => {
                let encoder = NumericEncoder::fit(data)?;
                let tree = DecisionTree::train(&encoder.encode(data)?, &labels, class_count)?;
                ModelPayload::Dt { encoder, tree }
            }
            ModelKind::Rf => {
                let encoder = NumericEncoder::fit(data)?;
                let forest = RandomForest::train(&encoder.encode(data)?, &labels, class_count, forest)?;
                ModelPayload::Rf { encoder, forest }
            }
            ModelKind::Fcnn => {
                let encoder = NumericEncoder::fit(data)?;
                let raw = encoder.encode(data)?;
                let standardizer = Standardizer::fit(&raw);
                let xs: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
                let net = Mlp::new(encoder.width(), class_count);
                let (params, history) = train_network(&net, &xs, &labels, &trainer)?;
                ModelPayload::Fcnn { encoder, standardizer, net, params, history }
            }
            ModelKind::Cnn => {
                let FeatureSet::Grid(grids) = data else { unreachable!("schema checked above") };
                let net = Cnn::for_grids(class_count)?;
                let xs: Vec<Vec<f64>> = grids.par_iter().map(grid_input).collect();
                let (params, history) = train_network(&net, &xs, &labels, &trainer)?;
                ModelPayload::Cnn { net, params, history }
            }
            ModelKind::TwoStage => ModelPayload::TwoStage(TwoStage::train(hour_rows(data), &labels, class_count, forest)?),
        };
        Ok(ModelArtifact {
            kind,
            schema,
            class_count,
            seed: opts.seed,
            training_period: opts.period.clone(),
            payload,
        })
    }

    pub fn history(&self) -> Option<&TrainHistory> {
        match &self.payload {
            ModelPayload::Fcnn { history, .. } | ModelPayload::Cnn { history, .. } => Some(history),
            _ => None,
        }
    }

    /// Class distribution for every row, in row order.
    pub fn predict_proba(&self, data: &FeatureSet) -> Result<Vec<Vec<f64>>> {
        check_schema(self.schema, data.schema())?;
        Ok(match &self.payload {
            ModelPayload::Nbm { bags, model } => {
                hour_rows(data).par_iter().map(|r| model.predict_proba(&bags.combined(r))).collect()
            }
            ModelPayload::Dt { encoder, tree } => {
                encoder.encode(data)?.par_iter().map(|x| tree.predict_proba(x)).collect()
            }
            ModelPayload::Rf { encoder, forest } => {
                encoder.encode(data)?.par_iter().map(|x| forest.predict_proba(x)).collect()
            }
            ModelPayload::Fcnn { encoder, standardizer, net, params, .. } => {
                encoder.encode(data)?.par_iter().map(|x| net.probs(params, &standardizer.apply(x))).collect()
            }
            ModelPayload::Cnn { net, params, .. } => {
                let FeatureSet::Grid(grids) = data else { unreachable!("schema checked above") };
                grids.par_iter().map(|g| net.probs(params, &grid_input(g))).collect()
            }
            ModelPayload::TwoStage(m) => hour_rows(data).par_iter().map(|r| m.predict_proba(r)).collect(),
        })
    }

    pub fn predict(&self, data: &FeatureSet) -> Result<Vec<Prediction>> {
        Ok(match &self.payload {
            // Trees report the leaf majority directly so ties follow the
            // tree's own rule.
            ModelPayload::Dt { encoder, tree } => {
                check_schema(self.schema, data.schema())?;
                encoder.encode(data)?.par_iter().map(|x| tree.predict(x)).collect()
            }
            _ => self.predict_proba(data)?.iter().map(|p| Prediction::from_distribution(p)).collect(),
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut payload = Vec::new();
        ciborium::into_writer(self, &mut payload).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.kind.tag());
        out.push(self.schema.tag());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..5] != MAGIC {
            return Err(Error::ModelFormat("not a model file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let kind = ModelKind::from_tag(bytes[9])
            .ok_or_else(|| Error::ModelFormat(format!("unknown model kind tag {}", bytes[9])))?;
        let schema = Schema::from_tag(bytes[10])
            .ok_or_else(|| Error::ModelFormat(format!("unknown schema tag {}", bytes[10])))?;
        let len = u64::from_le_bytes(bytes[11..19].try_into().expect("8 bytes"));
        if len != (bytes.len() - HEADER_LEN) as u64 {
            return Err(Error::ModelFormat(format!(
                "payload length {len} does not match {} remaining bytes",
                bytes.len() - HEADER_LEN
            )));
        }
        let model: ModelArtifact =
            ciborium::from_reader(&bytes[HEADER_LEN..]).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.kind != kind || model.schema != schema {
            return Err(Error::ModelFormat("header disagrees with payload".into()));
        }
        if let ModelPayload::Cnn { net, .. } = &model.payload {
            Cnn::new(net.shape())?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&crate::io::read(path)?)
    }
}
