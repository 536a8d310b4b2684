use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flows::{FlowDirection, PartitionFlow};
use crate::partition::{join, Partition};
use crate::scalar::Scalar;
use crate::space::{FiniteProbabilitySpace, DEFAULT_TOL};

use super::{InformationSource, JoinEntropies};

/// A measure-preserving bijection of a finite probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationSystem<T> {
    space: Arc<FiniteProbabilitySpace<T>>,
    map: Vec<usize>,
    inverse: Vec<usize>,
}

impl<T: Scalar> PermutationSystem<T> {
    /// `map[i]` is the image of point `i`.
    pub fn new(space: Arc<FiniteProbabilitySpace<T>>, map: Vec<usize>) -> Result<Self> {
        let n = space.len();
        if map.len() != n {
            return Err(Error::NotPermutation(format!(
                "map has {} entries for {n} points",
                map.len()
            )));
        }
        let mut inverse = vec![usize::MAX; n];
        for (i, &j) in map.iter().enumerate() {
            if j >= n {
                return Err(Error::NotPermutation(format!("image {j} out of range")));
            }
            if inverse[j] != usize::MAX {
                return Err(Error::NotPermutation(format!("point {j} hit twice")));
            }
            inverse[j] = i;
        }
        let tol = T::lit(DEFAULT_TOL);
        if let Some(i) = (0..n).find(|&i| (space.weight(map[i]) - space.weight(i)).abs() > tol) {
            return Err(Error::NotMeasurePreserving(i));
        }
        Ok(Self { space, map, inverse })
    }

    pub fn identity(space: Arc<FiniteProbabilitySpace<T>>) -> Self {
        let map = (0..space.len()).collect();
        Self::new(space, map).expect("identity preserves every measure")
    }

    /// `i ↦ i + 1 (mod n)` on `n` uniform points.
    pub fn cyclic(n: usize) -> Result<Self> {
        let space = Arc::new(FiniteProbabilitySpace::uniform(n)?);
        Self::new(space, (0..n).map(|i| (i + 1) % n).collect())
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace<T>> {
        &self.space
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.inverse
    }

    fn check_space(&self, p: &Partition<T>) -> Result<()> {
        if Arc::ptr_eq(&self.space, p.space()) || *self.space == **p.space() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `T⁻¹P`: the atoms `T⁻¹(A_i)`.
    pub fn pullback_partition(&self, p: &Partition<T>) -> Result<Partition<T>> {
        self.check_space(p)?;
        Ok(p.preimage_under(&self.map))
    }

    /// `∨_{k<n} T⁻ᵏP` for `n ≥ 1`.
    pub fn iterated_join(&self, p: &Partition<T>, n: usize) -> Result<Partition<T>> {
        let flow = self.join_flow(p, n)?;
        Ok(flow.partitions()[n - 1].clone())
    }

    /// The refinement flow `{∨_{k<m} T⁻ᵏP}` for `m = 1..=n`.
    pub fn join_flow(&self, p: &Partition<T>, n: usize) -> Result<PartitionFlow<T>> {
        if n == 0 {
            return Err(Error::InvalidParameter("join length must be at least 1".into()));
        }
        self.check_space(p)?;
        let mut joins = Vec::with_capacity(n);
        let mut acc = p.clone();
        let mut pulled = p.clone();
        joins.push(acc.clone());
        for _ in 1..n {
            pulled = pulled.preimage_under(&self.map);
            acc = join(&acc, &pulled)?;
            joins.push(acc.clone());
        }
        PartitionFlow::new(joins, FlowDirection::Refinement)
    }

    /// Checks `∨_{k<n} T⁻ᵏ flow[0] = flow[n-1]` for every `n ≤ n_max`.
    pub fn verify_generating_map(&self, reference: &PartitionFlow<T>, n_max: usize) -> Result<bool> {
        if reference.direction() != FlowDirection::Refinement {
            return Err(Error::InvalidParameter("reference flow must be a refinement flow".into()));
        }
        if n_max > reference.len() {
            return Err(Error::HorizonTooLarge {
                horizon: n_max,
                available: reference.len(),
            });
        }
        if n_max == 0 {
            return Ok(true);
        }
        let joins = self.join_flow(&reference.partitions()[0], n_max)?;
        Ok(joins.partitions() == &reference.partitions()[..n_max])
    }
}

impl<T: Scalar> InformationSource<T> for PermutationSystem<T> {
    type Observable = Partition<T>;

    fn join_entropies(&self, p: &Partition<T>, n_max: usize, max_atoms: usize) -> Result<JoinEntropies<T>> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        self.check_space(p)?;
        let mut entropies = Vec::with_capacity(n_max);
        let mut acc = p.clone();
        let mut pulled = p.clone();
        entropies.push(acc.entropy());
        let mut stabilized_at = None;
        for n in 2..=n_max {
            pulled = pulled.preimage_under(&self.map);
            let next = join(&acc, &pulled)?;
            if next.atom_count() > max_atoms {
                return Err(Error::ResourceCap {
                    what: "join atoms",
                    needed: next.atom_count() as u128,
                    cap: max_atoms as u128,
                });
            }
            if next == acc {
                // once one more pullback adds nothing, none ever will
                stabilized_at = Some(n - 1);
                let h = *entropies.last().expect("nonempty");
                entropies.resize(n_max, h);
                break;
            }
            acc = next;
            entropies.push(acc.entropy());
        }
        Ok(JoinEntropies {
            entropies,
            stabilized_at,
        })
    }
}

/// Every partition of the space into exactly two atoms.
pub fn two_atom_partitions<T: Scalar>(space: &Arc<FiniteProbabilitySpace<T>>) -> Result<Vec<Partition<T>>> {
    let n = space.len();
    if n > 20 {
        return Err(Error::ResourceCap {
            what: "two-atom partitions",
            needed: 1u128 << (n - 1),
            cap: 1 << 19,
        });
    }
    // subsets containing point 0, excluding the whole space
    (0u64..(1u64 << (n - 1)) - 1)
        .map(|mask| {
            let labels = (0..n).map(|p| p > 0 && (mask >> (p - 1)) & 1 == 1);
            Partition::from_labels(space.clone(), labels)
        })
        .collect()
}
