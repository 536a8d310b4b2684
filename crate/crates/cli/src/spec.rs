//! Textual descriptions of systems and observables.
//!
//! ```text
//! bernoulli:0.5,0.5            Bernoulli shift with symbol probabilities p
//! markov:[[0.9,0.1],[0.5,0.5]] stationary Markov shift with transition rows
//! cycle:N                      i ↦ i+1 mod N on N equiprobable points
//! identity:N                   identity on N equiprobable points
//! perm:2,0,1                   the permutation i ↦ map[i] on equiprobable points
//! ```
//!
//! An observable is a comma-separated label per symbol or per point.

use std::fmt;
use std::sync::Arc;

use entroflow_core::dynamics::SymbolPartition;
use entroflow_core::{Partition, PermutationSystem, Space, SymbolicSystem};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Bernoulli(Vec<f64>),
    Markov(Vec<Vec<f64>>),
    Cycle(usize),
    Identity(usize),
    Perm(Vec<usize>),
}

pub enum System {
    Symbolic(SymbolicSystem),
    Permutation(PermutationSystem),
}

impl SystemSpec {
    pub fn build(&self) -> CliResult<System> {
        Ok(match self {
            Self::Bernoulli(p) => System::Symbolic(SymbolicSystem::bernoulli(p.clone())?),
            Self::Markov(q) => System::Symbolic(SymbolicSystem::markov(q.clone())?),
            Self::Cycle(n) => System::Permutation(PermutationSystem::cyclic(*n)?),
            Self::Identity(n) => System::Permutation(PermutationSystem::identity(Arc::new(Space::uniform(*n)?))),
            Self::Perm(map) => {
                let space = Arc::new(Space::uniform(map.len())?);
                System::Permutation(PermutationSystem::new(space, map.clone())?)
            }
        })
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[String]| v.join(",");
        match self {
            Self::Bernoulli(p) => write!(f, "bernoulli:{}", join(&p.iter().map(f64::to_string).collect::<Vec<_>>())),
            Self::Markov(q) => write!(f, "markov:{}", serde_json::to_string(q).expect("finite rows")),
            Self::Cycle(n) => write!(f, "cycle:{n}"),
            Self::Identity(n) => write!(f, "identity:{n}"),
            Self::Perm(m) => write!(f, "perm:{}", join(&m.iter().map(usize::to_string).collect::<Vec<_>>())),
        }
    }
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad {what} {x:?}")))
        .collect()
}

impl std::str::FromStr for SystemSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| format!("system {s:?} must look like kind:parameters"))?;
        match kind {
            "bernoulli" => Ok(Self::Bernoulli(list(body, "probability")?)),
            "markov" => serde_json::from_str(body)
                .map(Self::Markov)
                .map_err(|e| format!("markov rows must be a JSON matrix: {e}")),
            "cycle" => body.parse().map(Self::Cycle).map_err(|_| format!("bad size {body:?}")),
            "identity" => body.parse().map(Self::Identity).map_err(|_| format!("bad size {body:?}")),
            "perm" => Ok(Self::Perm(list(body, "image")?)),
            _ => Err(format!(
                "unknown system kind {kind:?} (expected bernoulli, markov, cycle, identity or perm)"
            )),
        }
    }
}

/// Per-symbol or per-point labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels(pub Vec<usize>);

impl std::str::FromStr for Labels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        list(s, "label").map(Self)
    }
}

impl fmt::Display for Labels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

pub fn symbol_observable(system: &SymbolicSystem, labels: Option<&Labels>) -> CliResult<SymbolPartition> {
    match labels {
        Some(l) => Ok(SymbolPartition::from_labels(&l.0)?),
        None => Ok(SymbolPartition::generating(system.alphabet_size())),
    }
}

pub fn point_observable(system: &PermutationSystem, labels: Option<&Labels>) -> CliResult<Partition> {
    let labels = labels.ok_or_else(|| CliError::validation("--observable is required for permutation systems"))?;
    Ok(Partition::from_labels(system.space().clone(), labels.0.iter().copied())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip_through_display() {
        for s in ["bernoulli:0.5,0.5", "markov:[[0.9,0.1],[0.5,0.5]]", "cycle:4", "identity:3", "perm:2,0,1"] {
            let spec: SystemSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<SystemSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn bad_specs() {
        assert!("coin:0.5".parse::<SystemSpec>().is_err());
        assert!("bernoulli:x".parse::<SystemSpec>().is_err());
        assert!("markov:[0.5]".parse::<SystemSpec>().is_err());
        assert!("cycle".parse::<SystemSpec>().is_err());
        assert!(matches!("perm:0,0".parse::<SystemSpec>().unwrap().build(), Err(CliError::Validation(_))));
    }
}
