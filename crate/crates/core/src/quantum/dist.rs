//! Probability distributions over labelled outcomes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::PROBABILITY_TOL;

/// A map from outcome label to probability. Labels are ordered, so
/// iteration and serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[derive(Default)]
pub struct OutcomeDistribution {
    entries: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    /// Builds a distribution, merging duplicate labels by addition.
    pub fn from_weighted<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut entries = BTreeMap::new();
        for (label, p) in pairs {
            *entries.entry(label).or_insert(0.0) += p;
        }
        entries.retain(|_, p| *p != 0.0);
        OutcomeDistribution { entries }
    }

    pub fn point_mass(label: impl Into<String>) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(label.into(), 1.0);
        OutcomeDistribution { entries }
    }

    /// Checks entries lie in [0, 1] and sum to 1, within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let mut sum = 0.0;
        for (label, &p) in &self.entries {
            if !(-tol..=1.0 + tol).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "probability of {label:?} out of range: {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn probability(&self, label: &str) -> f64 {
        self.entries.get(label).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(l, &p)| (l.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Total-variation distance: half the L1 distance over the union of
    /// both supports.
    pub fn tv_distance(&self, other: &OutcomeDistribution) -> f64 {
        let mut labels: Vec<&str> = self.support().collect();
        labels.extend(other.support());
        labels.sort_unstable();
        labels.dedup();
        0.5 * labels
            .iter()
            .map(|l| (self.probability(l) - other.probability(l)).abs())
            .sum::<f64>()
    }

    /// True when every label's probability matches within `tol`.
    pub fn approx_eq(&self, other: &OutcomeDistribution, tol: f64) -> bool {
        let mut labels: Vec<&str> = self.support().collect();
        labels.extend(other.support());
        labels.sort_unstable();
        labels.dedup();
        labels
            .iter()
            .all(|l| (self.probability(l) - other.probability(l)).abs() <= tol)
    }

    /// Probability mass on labels satisfying `valid`.
    pub fn mass_where(&self, valid: impl Fn(&str) -> bool) -> f64 {
        self.iter().filter(|(l, _)| valid(l)).map(|(_, p)| p).sum()
    }

    /// True when the support carries no mass outside `valid` beyond `tol`.
    pub fn zero_error(&self, valid: impl Fn(&str) -> bool, tol: f64) -> bool {
        self.iter().all(|(l, p)| valid(l) || p <= tol)
    }

    /// Draws one label. Iteration order of the underlying map is fixed,
    /// so a seeded rng yields a reproducible label sequence.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> &str {
        let mut remaining = rng.gen::<f64>() * self.total_mass();
        let mut last = "";
        for (label, p) in self.iter() {
            last = label;
            remaining -= p;
            if remaining <= 0.0 {
                return label;
            }
        }
        // Rounding can leave a sliver past the last entry.
        last
    }

    /// Empirical distribution from a list of sampled labels.
    pub fn from_samples<I>(samples: I) -> Self
    where
        I: IntoIterator<Item = String>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for s in samples {
            *counts.entry(s).or_insert(0) += 1;
            total += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(l, c)| (l, c as f64 / total as f64))
            .collect();
        OutcomeDistribution { entries }
    }
}


/// Convenience check used all over the tests: validates and compares.
pub fn distributions_match(a: &OutcomeDistribution, b: &OutcomeDistribution) -> bool {
    a.validate(PROBABILITY_TOL).is_ok()
        && b.validate(PROBABILITY_TOL).is_ok()
        && a.approx_eq(b, PROBABILITY_TOL)
}
