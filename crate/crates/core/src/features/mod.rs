//! The four labeled feature schemas and their on-disk stores.

pub mod flow_stats;
pub mod grid;
pub mod hour;
pub mod moments;
pub mod second;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::capture::DeviceId;
use crate::error::Error;
use crate::time::Timestamp;

pub use flow_stats::{extract_flow_features, FlowFeatureRow};
pub use grid::{build_grids, build_packet_grid, PacketGrid, GRID_CELLS, GRID_COLS, GRID_ROWS};
pub use hour::{extract_hour_window, HourWindowRow};
pub use moments::{moments, Moments};
pub use second::{extract_second_window, SecondWindowRow};
pub use store::{read_feature_set, write_feature_set, FeatureFiles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Hour,
    Second,
    Grid,
    Flow,
}

impl Schema {
    pub const ALL: [Schema; 4] = [Schema::Hour, Schema::Second, Schema::Grid, Schema::Flow];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Hour => "hour",
            Schema::Second => "second",
            Schema::Grid => "grid",
            Schema::Flow => "flow",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Schema::Hour => 1,
            Schema::Second => 2,
            Schema::Grid => 3,
            Schema::Flow => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Schema> {
        Schema::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Schema::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown schema {s:?} (hour, second, grid, flow)")))
    }
}

/// Rows of a single schema.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSet {
    Hour(Vec<HourWindowRow>),
    Second(Vec<SecondWindowRow>),
    Grid(Vec<PacketGrid>),
    Flow(Vec<FlowFeatureRow>),
}

impl FeatureSet {
    pub fn schema(&self) -> Schema {
        match self {
            FeatureSet::Hour(_) => Schema::Hour,
            FeatureSet::Second(_) => Schema::Second,
            FeatureSet::Grid(_) => Schema::Grid,
            FeatureSet::Flow(_) => Schema::Flow,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureSet::Hour(r) => r.len(),
            FeatureSet::Second(r) => r.len(),
            FeatureSet::Grid(r) => r.len(),
            FeatureSet::Flow(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn device_ids(&self) -> Vec<DeviceId> {
        match self {
            FeatureSet::Hour(r) => r.iter().map(|x| x.device_id).collect(),
            FeatureSet::Second(r) => r.iter().map(|x| x.device_id).collect(),
            FeatureSet::Grid(r) => r.iter().map(|x| x.device_id).collect(),
            FeatureSet::Flow(r) => r.iter().map(|x| x.device_id).collect(),
        }
    }

    /// Class index of every row.
    pub fn labels(&self) -> Vec<usize> {
        self.device_ids().into_iter().map(DeviceId::index).collect()
    }

    /// Time used to place each row in an evaluation week.
    pub fn timestamps(&self) -> Vec<Timestamp> {
        match self {
            FeatureSet::Hour(r) => r.iter().map(|x| x.window_start).collect(),
            FeatureSet::Second(r) => r.iter().map(|x| x.second_start).collect(),
            FeatureSet::Grid(r) => r.iter().map(|x| x.first_seen).collect(),
            FeatureSet::Flow(r) => r.iter().map(|x| x.start_time).collect(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> FeatureSet {
        fn pick<T: Clone>(rows: &[T], idx: &[usize]) -> Vec<T> {
            idx.iter().map(|&i| rows[i].clone()).collect()
        }
        match self {
            FeatureSet::Hour(r) => FeatureSet::Hour(pick(r, idx)),
            FeatureSet::Second(r) => FeatureSet::Second(pick(r, idx)),
            FeatureSet::Grid(r) => FeatureSet::Grid(pick(r, idx)),
            FeatureSet::Flow(r) => FeatureSet::Flow(pick(r, idx)),
        }
    }
}
