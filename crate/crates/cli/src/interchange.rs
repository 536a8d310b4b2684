//! JSON interchange for spaces and partitions.
//!
//! ```json
//! {
//!   "space": { "ids": ["a", "b", "c", "d"], "weights": [0.25, 0.25, 0.25, 0.25] },
//!   "partitions": { "P": [["a", "b"], ["c", "d"]] }
//! }
//! ```
//!
//! Partitions are keyed by name, and their atoms are lists of point ids.

use std::sync::Arc;

use entroflow_core::space::Normalization;
use entroflow_core::{Partition, Space};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub ids: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interchange {
    pub space: SpaceDoc,
    pub partitions: IndexMap<String, Vec<Vec<String>>>,
}

impl Interchange {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| {
            CliError::validation(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("finite weights serialize");
        s.push('\n');
        s
    }

    /// Builds the space (weights must sum to 1 within `tol`) and every partition.
    pub fn build(&self, tol: f64) -> CliResult<(Arc<Space>, Vec<(String, Partition)>)> {
        let space = Arc::new(Space::with_tolerance(
            self.space.ids.iter().cloned(),
            self.space.weights.clone(),
            Normalization::Require,
            tol,
        )?);
        let parts = self
            .partitions
            .iter()
            .map(|(name, atoms)| {
                Partition::from_ids(space.clone(), atoms)
                    .map(|p| (name.clone(), p))
                    .map_err(|e| CliError::validation(format!("partition {name:?}: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok((space, parts))
    }

    pub fn from_parts(space: &Space, parts: &[(String, Partition)]) -> Self {
        Self {
            space: SpaceDoc {
                ids: space.ids().to_vec(),
                weights: space.weights().to_vec(),
            },
            partitions: parts.iter().map(|(n, p)| (n.clone(), p.atoms_as_ids())).collect(),
        }
    }
}
