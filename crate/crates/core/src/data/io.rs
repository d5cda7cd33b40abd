use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{DataError, FloorplanSpec, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

/// Plans with a train/validation label per plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub version: u32,
    pub plans: Vec<FloorplanSpec>,
    pub split: Vec<Split>,
}

impl Dataset {
    /// Labels `val_count` plans as validation, chosen by a seeded shuffle.
    pub fn with_split(plans: Vec<FloorplanSpec>, val_count: usize, seed: u64) -> Result<Self, DataError> {
        if val_count > plans.len() {
            return Err(DataError::invalid("split", format!("{val_count} validation plans requested from {}", plans.len())));
        }
        let mut order: Vec<usize> = (0..plans.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut split = vec![Split::Train; plans.len()];
        for &i in order.iter().take(val_count) {
            split[i] = Split::Val;
        }
        Ok(Dataset { version: FORMAT_VERSION, plans, split })
    }

    pub fn subset(&self, which: Split) -> Vec<&FloorplanSpec> {
        self.plans.iter().zip(&self.split).filter(|(_, s)| **s == which).map(|(p, _)| p).collect()
    }

    pub fn train(&self) -> Vec<&FloorplanSpec> {
        self.subset(Split::Train)
    }

    pub fn val(&self) -> Vec<&FloorplanSpec> {
        self.subset(Split::Val)
    }

    pub fn validate(&self, grid_k: u32) -> Result<(), DataError> {
        if self.version != FORMAT_VERSION {
            return Err(DataError::invalid("version", format!("unsupported version {}", self.version)));
        }
        if self.split.len() != self.plans.len() {
            return Err(DataError::invalid("split", "one split label per plan is required"));
        }
        for (i, p) in self.plans.iter().enumerate() {
            p.validate(grid_k).map_err(|e| prefix(e, &format!("plans[{i}]")))?;
        }
        Ok(())
    }
}

fn prefix(err: DataError, head: &str) -> DataError {
    let join = |p: String| if p.is_empty() { head.to_string() } else { format!("{head}.{p}") };
    match err {
        DataError::Parse { path, message } => DataError::Parse { path: join(path), message },
        DataError::Invalid { path, message } => DataError::Invalid { path: join(path), message },
        DataError::Semantic { path, message } => DataError::Semantic { path: join(path), message },
        other => other,
    }
}

/// Deserializes `bytes`, reporting the JSON path of the first schema violation.
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, DataError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| DataError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| DataError::Parse { path: ".".into(), message: e.to_string() })?;
    Ok(value)
}

pub fn save_spec(spec: &FloorplanSpec) -> Vec<u8> {
    serde_json::to_vec(spec).expect("plans always serialize")
}

pub fn load_spec(bytes: &[u8]) -> Result<FloorplanSpec, DataError> {
    parse_json(bytes)
}

pub fn save_dataset(ds: &Dataset) -> Vec<u8> {
    serde_json::to_vec(ds).expect("datasets always serialize")
}

pub fn load_dataset(bytes: &[u8]) -> Result<Dataset, DataError> {
    parse_json(bytes)
}
