//! Episode and dataset records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::house::{House, HouseParams, ObjectClass};
use crate::env::sim::EnvConfig;
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "objnav.dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    ValSeen,
    TestSeen,
    ValUnseen,
    TestUnseen,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::ValSeen, Split::TestSeen, Split::ValUnseen, Split::TestUnseen];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::ValSeen => "val_seen",
            Split::TestSeen => "test_seen",
            Split::ValUnseen => "val_unseen",
            Split::TestUnseen => "test_unseen",
        }
    }

    pub fn from_name(s: &str) -> Option<Split> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Whether episodes of this split play in houses the training split
    /// also uses.
    pub fn is_seen(self) -> bool {
        matches!(self, Split::Train | Split::ValSeen | Split::TestSeen)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub house: String,
    pub split: Split,
    pub goal: ObjectClass,
    pub start_x: f64,
    pub start_y: f64,
    pub start_heading: usize,
    /// Straight-line distance from the start to the goal region, meters.
    pub euclidean: f64,
    /// Length of the optimal plan's translation, meters.
    pub geodesic: f64,
    /// Actions in the optimal plan, excluding the final stop.
    pub shortest_path_steps: usize,
    /// The optimal plan itself (F/L/R/S trace), for oracle replay.
    pub plan: String,
}

/// How many episodes to draw per (house, goal class) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetProfile {
    pub seen_houses: usize,
    pub unseen_houses: usize,
    pub train_per_pair: usize,
    pub val_seen_per_pair: usize,
    pub test_seen_per_pair: usize,
    pub val_unseen_per_pair: usize,
    pub test_unseen_per_pair: usize,
}

impl Default for DatasetProfile {
    fn default() -> Self {
        DatasetProfile {
            seen_houses: 6,
            unseen_houses: 2,
            train_per_pair: 100,
            val_seen_per_pair: 20,
            test_seen_per_pair: 20,
            val_unseen_per_pair: 10,
            test_unseen_per_pair: 10,
        }
    }
}

impl DatasetProfile {
    pub fn per_pair(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_per_pair,
            Split::ValSeen => self.val_seen_per_pair,
            Split::TestSeen => self.test_seen_per_pair,
            Split::ValUnseen => self.val_unseen_per_pair,
            Split::TestUnseen => self.test_unseen_per_pair,
        }
    }
}

/// A fully self-contained benchmark: worlds plus episodes plus the exact
/// configuration they were drawn under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub env: EnvConfig,
    pub house_params: HouseParams,
    pub profile: DatasetProfile,
    pub houses: Vec<House>,
    pub episodes: Vec<Episode>,
}

impl Dataset {
    pub fn house(&self, id: &str) -> Result<&House> {
        self.houses
            .iter()
            .find(|h| h.id() == id)
            .ok_or_else(|| Error::Data(format!("dataset has no house {id:?}")))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Episode> {
        self.episodes.iter().filter(move |e| e.split == split)
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.episodes {
            *counts.entry(e.split).or_insert(0) += 1;
        }
        counts
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)?;
        let ds: Dataset = serde_json::from_str(&text)?;
        if ds.format != DATASET_FORMAT {
            return Err(Error::Data(format!("not a dataset file: format {:?}", ds.format)));
        }
        if ds.version != DATASET_FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported dataset version {}", ds.version)));
        }
        for h in &ds.houses {
            h.validate()?;
        }
        Ok(ds)
    }
}
