//! Conversion of feature rows into model inputs.

use serde::{Deserialize, Serialize};

use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FlowFeatureRow, HourWindowRow, PacketGrid, Schema};

/// Vocabularies for the three hour-window bags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagEncoder {
    pub ports: Vocabulary<u16>,
    pub domains: Vocabulary<String>,
    pub ciphers: Vocabulary<u16>,
}

impl BagEncoder {
    pub fn fit(rows: &[HourWindowRow]) -> Self {
        BagEncoder {
            ports: Vocabulary::build(rows.iter().flat_map(|r| &r.bag_of_ports)),
            domains: Vocabulary::build(rows.iter().flat_map(|r| &r.bag_of_domains)),
            ciphers: Vocabulary::build(rows.iter().flat_map(|r| &r.bag_of_ciphers)),
        }
    }

    pub fn ports(&self, r: &HourWindowRow) -> Vec<usize> {
        self.ports.encode(&r.bag_of_ports)
    }

    pub fn domains(&self, r: &HourWindowRow) -> Vec<usize> {
        self.domains.encode(&r.bag_of_domains)
    }

    pub fn ciphers(&self, r: &HourWindowRow) -> Vec<usize> {
        self.ciphers.encode(&r.bag_of_ciphers)
    }

    /// Size of the joint token space used by a single bag-of-everything
    /// model (index 0 still means unknown).
    pub fn combined_size(&self) -> usize {
        1 + self.ports.known() + self.domains.known() + self.ciphers.known()
    }

    /// All three bags mapped into disjoint index ranges of one vocabulary.
    pub fn combined(&self, r: &HourWindowRow) -> Vec<usize> {
        let shift = |idx: Vec<usize>, by: usize| idx.into_iter().map(move |i| if i == 0 { 0 } else { i + by });
        let p = self.ports.known();
        let d = self.domains.known();
        shift(self.ports(r), 0).chain(shift(self.domains(r), p)).chain(shift(self.ciphers(r), p + d)).collect()
    }
}

/// Numeric matrix for tree and dense models. Flow rows add the remote
/// domain as its vocabulary index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericEncoder {
    pub schema: Schema,
    pub domains: Option<Vocabulary<String>>,
}

impl NumericEncoder {
    pub fn fit(data: &FeatureSet) -> Result<Self> {
        let domains = match data {
            FeatureSet::Flow(rows) => {
                Some(Vocabulary::build(rows.iter().map(|r| &r.domain).filter(|d| !d.is_empty())))
            }
            FeatureSet::Hour(_) | FeatureSet::Second(_) => None,
            FeatureSet::Grid(_) => {
                return Err(Error::SchemaMismatch { expected: "hour, second or flow".into(), actual: "grid".into() })
            }
        };
        Ok(NumericEncoder { schema: data.schema(), domains })
    }

    pub fn width(&self) -> usize {
        match self.schema {
            Schema::Hour => HourWindowRow::NUMERIC_NAMES.len(),
            Schema::Second => 3,
            Schema::Flow => FlowFeatureRow::NUMERIC_NAMES.len() + 1,
            Schema::Grid => 0,
        }
    }

    pub fn encode(&self, data: &FeatureSet) -> Result<Vec<Vec<f64>>> {
        check_schema(self.schema, data.schema())?;
        Ok(match data {
            FeatureSet::Hour(rows) => rows.iter().map(|r| r.numeric().to_vec()).collect(),
            FeatureSet::Second(rows) => rows.iter().map(|r| r.numeric().to_vec()).collect(),
            FeatureSet::Flow(rows) => {
                let vocab = self.domains.as_ref();
                rows.iter()
                    .map(|r| {
                        let mut v = r.numeric().to_vec();
                        v.push(vocab.map_or(0, |d| d.index_of(&r.domain)) as f64);
                        v
                    })
                    .collect()
            }
            FeatureSet::Grid(_) => unreachable!("rejected by check_schema"),
        })
    }
}

pub(crate) fn check_schema(expected: Schema, actual: Schema) -> Result<()> {
    if expected != actual {
        return Err(Error::SchemaMismatch { expected: expected.to_string(), actual: actual.to_string() });
    }
    Ok(())
}

/// Per-feature z-scoring with training-set statistics; constant features
/// are only centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            var.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m) * (v - m));
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

pub fn grid_input(g: &PacketGrid) -> Vec<f64> {
    g.cells.iter().map(|&b| b as f64 / 255.0).collect()
}
