//! Partitions of a finite probability space, the coarse-graining order, joins,
//! partition entropy and the entropy pseudo-distance.
//!
//! Partitions are stored in canonical form: zero-weight points are dropped,
//! each atom is sorted, and atoms are ordered by their smallest point. Two
//! partitions over the same space are equal iff their canonical atoms are.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{shannon_bits, Scalar};
use crate::space::FiniteProbabilitySpace;

/// Probability of each atom of a partition, in atom order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDistribution<T> {
    pub probabilities: Vec<T>,
}

impl<T: Scalar> AtomDistribution<T> {
    pub fn entropy(&self) -> T {
        shannon_bits(&self.probabilities)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Partition<T> {
    space: Arc<FiniteProbabilitySpace<T>>,
    atoms: Vec<Vec<usize>>,
    // atom of each point; None for dropped zero-weight points
    labels: Vec<Option<usize>>,
}

impl<T: Scalar> Partition<T> {
    /// Builds a partition from atoms given as point indices.
    pub fn new(space: Arc<FiniteProbabilitySpace<T>>, atoms: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut kept = Vec::with_capacity(atoms.len());
        for (a, atom) in atoms.into_iter().enumerate() {
            if atom.is_empty() {
                return Err(Error::EmptyAtom);
            }
            for &p in &atom {
                if p >= n {
                    return Err(Error::IndexOutOfRange { index: p, len: n });
                }
                if owner[p].replace(a).is_some() {
                    return Err(Error::OverlappingAtoms(p));
                }
            }
            let mut atom: Vec<usize> = atom
                .into_iter()
                .filter(|&p| space.weight(p) > T::zero())
                .collect();
            if !atom.is_empty() {
                atom.sort_unstable();
                kept.push(atom);
            }
        }
        if let Some(p) = (0..n).find(|&p| owner[p].is_none() && space.weight(p) > T::zero()) {
            return Err(Error::UncoveredPoint(p));
        }
        Ok(Self::from_canonical_parts(space, kept))
    }

    /// Builds a partition from atoms given as point ids.
    pub fn from_ids<S: AsRef<str>>(
        space: Arc<FiniteProbabilitySpace<T>>,
        atoms: &[Vec<S>],
    ) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|atom| atom.iter().map(|id| space.index_of(id.as_ref())).collect())
            .collect::<Result<Vec<Vec<usize>>>>()?;
        Self::new(space, atoms)
    }

    /// Groups points by label: points with equal labels share an atom.
    pub fn from_labels<L: Eq + std::hash::Hash>(
        space: Arc<FiniteProbabilitySpace<T>>,
        labels: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let mut groups: HashMap<L, usize> = HashMap::new();
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut count = 0;
        for (p, label) in labels.into_iter().enumerate() {
            count += 1;
            if p >= space.len() {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    len: space.len(),
                });
            }
            let next = atoms.len();
            let a = *groups.entry(label).or_insert(next);
            if a == next {
                atoms.push(Vec::new());
            }
            atoms[a].push(p);
        }
        if count < space.len() {
            return Err(Error::UncoveredPoint(count));
        }
        Self::new(space, atoms)
    }

    /// The one-atom partition `{X}`.
    pub fn trivial(space: Arc<FiniteProbabilitySpace<T>>) -> Self {
        let all = (0..space.len()).collect();
        Self::new(space, vec![all]).expect("one atom covering every point")
    }

    /// The partition into singletons of positive-weight points.
    pub fn discrete(space: Arc<FiniteProbabilitySpace<T>>) -> Self {
        let atoms = (0..space.len()).map(|p| vec![p]).collect();
        Self::new(space, atoms).expect("singletons form a partition")
    }

    // atoms must already be filtered and sorted within; orders atoms and fills labels
    fn from_canonical_parts(space: Arc<FiniteProbabilitySpace<T>>, mut atoms: Vec<Vec<usize>>) -> Self {
        atoms.sort_unstable_by_key(|a| a[0]);
        let mut labels = vec![None; space.len()];
        for (a, atom) in atoms.iter().enumerate() {
            for &p in atom {
                labels[p] = Some(a);
            }
        }
        Self { space, atoms, labels }
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace<T>> {
        &self.space
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    /// Atom count `n(P)`.
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Atom containing `point`, or `None` for a dropped zero-weight point.
    pub fn atom_of(&self, point: usize) -> Option<usize> {
        self.labels.get(point).copied().flatten()
    }

    pub fn atom_probabilities(&self) -> AtomDistribution<T> {
        let probabilities = self
            .atoms
            .iter()
            .map(|atom| atom.iter().map(|&p| self.space.weight(p)).sum())
            .collect();
        AtomDistribution { probabilities }
    }

    /// Entropy `H(P)` in bits.
    pub fn entropy(&self) -> T {
        self.atom_probabilities().entropy()
    }

    /// Atoms rendered with point ids, for interchange.
    pub fn atoms_as_ids(&self) -> Vec<Vec<String>> {
        let ids = self.space.ids();
        self.atoms
            .iter()
            .map(|atom| atom.iter().map(|&p| ids[p].clone()).collect())
            .collect()
    }

    /// Applies a point relabelling: the result has atoms `{ i : self.atom_of(f(i)) = a }`.
    pub(crate) fn preimage_under(&self, map: &[usize]) -> Self {
        let labels: Vec<Option<usize>> = map.iter().map(|&image| self.labels[image]).collect();
        let mut atoms: Vec<Vec<usize>> = vec![Vec::new(); self.atoms.len()];
        for (p, label) in labels.iter().enumerate() {
            if let Some(a) = label {
                atoms[*a].push(p);
            }
        }
        atoms.retain(|a| !a.is_empty());
        Self::from_canonical_parts(self.space.clone(), atoms)
    }

    pub(crate) fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

impl<T: Scalar> PartialEq for Partition<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.atoms == other.atoms
    }
}

/// `P1 ≤ P2`: every atom of `coarse` is a union of atoms of `fine`.
pub fn is_coarsening<T: Scalar>(coarse: &Partition<T>, fine: &Partition<T>) -> Result<bool> {
    coarse.check_space(fine)?;
    // both cover the same positive-weight points, so it suffices that no atom of
    // `fine` straddles two atoms of `coarse`
    Ok(fine.atoms.iter().all(|atom| {
        let first = coarse.labels[atom[0]];
        atom.iter().all(|&p| coarse.labels[p] == first)
    }))
}

/// Coarsest common refinement `A ∨ B`: the nonempty intersections `A_i ∩ B_j`.
pub fn join<T: Scalar>(a: &Partition<T>, b: &Partition<T>) -> Result<Partition<T>> {
    a.check_space(b)?;
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    let mut atoms: Vec<Vec<usize>> = Vec::new();
    for p in 0..a.space.len() {
        if let (Some(i), Some(j)) = (a.labels[p], b.labels[p]) {
            let next = atoms.len();
            let cell = *cells.entry((i, j)).or_insert(next);
            if cell == next {
                atoms.push(Vec::new());
            }
            atoms[cell].push(p);
        }
    }
    Ok(Partition::from_canonical_parts(a.space.clone(), atoms))
}

/// `d(P1, P2) = |H(P1) - H(P2)|`. A pseudo-metric: zero does not imply equality.
pub fn pseudo_distance<T: Scalar>(p1: &Partition<T>, p2: &Partition<T>) -> Result<T> {
    p1.check_space(p2)?;
    Ok((p1.entropy() - p2.entropy()).abs())
}
