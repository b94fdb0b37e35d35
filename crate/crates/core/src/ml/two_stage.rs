//! Two-stage hour-window classifier: one naive Bayes model per bag, whose
//! (class, confidence) outputs join the six numeric window features as
//! input to a random forest.

use serde::{Deserialize, Serialize};

use super::encode::BagEncoder;
use super::forest::{ForestConfig, RandomForest};
use super::nbm::Nbm;
use super::Prediction;
use crate::error::Result;
use crate::features::HourWindowRow;

pub const STAGE2_WIDTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStage {
    pub bags: BagEncoder,
    pub ports: Nbm,
    pub domains: Nbm,
    pub ciphers: Nbm,
    pub forest: RandomForest,
}

impl TwoStage {
    /// Both stages see the same rows; the forest learns from the bag models'
    /// in-sample outputs.
    pub fn train(rows: &[HourWindowRow], labels: &[usize], class_count: usize, forest: ForestConfig) -> Result<Self> {
        let bags = BagEncoder::fit(rows);
        let train = |enc: &dyn Fn(&HourWindowRow) -> Vec<usize>, size: usize| {
            let b: Vec<Vec<usize>> = rows.iter().map(enc).collect();
            Nbm::train(&b, labels, class_count, size)
        };
        let ports = train(&|r| bags.ports(r), bags.ports.size())?;
        let domains = train(&|r| bags.domains(r), bags.domains.size())?;
        let ciphers = train(&|r| bags.ciphers(r), bags.ciphers.size())?;
        let x: Vec<Vec<f64>> = rows.iter().map(|r| stage2(&bags, [&ports, &domains, &ciphers], r)).collect();
        let forest = RandomForest::train(&x, labels, class_count, forest)?;
        Ok(TwoStage { bags, ports, domains, ciphers, forest })
    }

    /// Six numeric window features followed by (class, confidence) from
    /// the port, domain and cipher models.
    pub fn stage2_vector(&self, row: &HourWindowRow) -> Vec<f64> {
        stage2(&self.bags, [&self.ports, &self.domains, &self.ciphers], row)
    }

    pub fn predict_proba(&self, row: &HourWindowRow) -> Vec<f64> {
        self.forest.predict_proba(&self.stage2_vector(row))
    }

    pub fn predict(&self, row: &HourWindowRow) -> Prediction {
        Prediction::from_distribution(&self.predict_proba(row))
    }
}

fn stage2(bags: &BagEncoder, [ports, domains, ciphers]: [&Nbm; 3], row: &HourWindowRow) -> Vec<f64> {
    let mut v = row.numeric().to_vec();
    for p in [
        ports.predict(&bags.ports(row)),
        domains.predict(&bags.domains(row)),
        ciphers.predict(&bags.ciphers(row)),
    ] {
        v.push(p.class_index as f64);
        v.push(p.confidence);
    }
    v
}
