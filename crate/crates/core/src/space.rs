//! Finite probability spaces. The σ-algebra is always the power set.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default tolerance for normalization and entropy comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// What [`FiniteProbabilitySpace::new`] does with weights that do not sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Reject weights whose total differs from 1 by more than the tolerance.
    #[default]
    Require,
    /// Divide every weight by the total.
    Rescale,
}

/// A finite set of labelled points with a probability mass on each.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbabilitySpace<T> {
    ids: Vec<String>,
    weights: Vec<T>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> FiniteProbabilitySpace<T> {
    /// Builds a space, validating weights against [`DEFAULT_TOL`].
    pub fn new<S: Into<String>>(
        ids: impl IntoIterator<Item = S>,
        weights: Vec<T>,
        normalization: Normalization,
    ) -> Result<Self> {
        Self::with_tolerance(ids, weights, normalization, T::lit(DEFAULT_TOL))
    }

    pub fn with_tolerance<S: Into<String>>(
        ids: impl IntoIterator<Item = S>,
        mut weights: Vec<T>,
        normalization: Normalization,
        tol: T,
    ) -> Result<Self> {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.len() != weights.len() {
            return Err(Error::LengthMismatch {
                ids: ids.len(),
                weights: weights.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidWeight { index });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::ZeroMass);
        }
        match normalization {
            Normalization::Require => {
                if (total - T::one()).abs() > tol {
                    return Err(Error::Unnormalized {
                        total: total.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            Normalization::Rescale => weights.iter_mut().for_each(|w| *w /= total),
        }
        Ok(Self { ids, weights, index })
    }

    /// Uniform measure on `n` points labelled `"0"`, `"1"`, ….
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroMass);
        }
        let w = T::one() / T::count(n);
        Self::new((0..n).map(|i| i.to_string()), vec![w; n], Normalization::Rescale)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, point: usize) -> T {
        self.weights[point]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_owned()))
    }
}
