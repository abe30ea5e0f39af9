//! Reproducible scenario generation.
//!
//! Every random stream is keyed by a `(master_seed, label)` pair. The pair is
//! hashed with SHA-256 into the 256-bit key of a ChaCha8 generator, so equal
//! keys reproduce identical streams and distinct labels yield independent
//! ones. Samples remember the key they were drawn from, which lets the gap
//! estimators reject accidental reuse of a stream.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Generator handed out by [`make_stream`].
pub type Stream = ChaCha8Rng;

/// Identity of a random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub label: String,
}

impl StreamKey {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            label: label.into(),
        }
    }

    /// Key with the same seed and `"{label}/{suffix}"` as label.
    pub fn child(&self, suffix: &str) -> Self {
        Self::new(self.master_seed, format!("{}/{}", self.label, suffix))
    }

    fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"riskgap-stream-v1");
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update((self.label.len() as u64).to_le_bytes());
        hasher.update(self.label.as_bytes());
        hasher.finalize().into()
    }

    /// A 64-bit seed derived from this key, for handing to nested procedures
    /// that take a plain master seed.
    pub fn derived_seed(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.label)
    }
}

/// Creates the generator for `key`.
pub fn make_stream(key: &StreamKey) -> Stream {
    ChaCha8Rng::from_seed(key.digest())
}

/// One realization of the random vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum Scenario<T> {
    /// Index into the support of a finite distribution.
    Outcome(usize),
    /// Explicit realization, for distributions without an enumerated support.
    Realization(Vec<T>),
}

impl<T> Scenario<T> {
    pub fn outcome_index(&self) -> Option<usize> {
        match self {
            Scenario::Outcome(i) => Some(*i),
            Scenario::Realization(_) => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct RawDistribution<T> {
    outcomes: Vec<Vec<T>>,
    probabilities: Vec<T>,
}

/// Distribution with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution<T>", bound = "T: Scalar")]
pub struct FiniteDistribution<T> {
    outcomes: Vec<Vec<T>>,
    probabilities: Vec<T>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl<T: Scalar> TryFrom<RawDistribution<T>> for FiniteDistribution<T> {
    type Error = Error;

    fn try_from(raw: RawDistribution<T>) -> Result<Self> {
        Self::new(raw.outcomes, raw.probabilities)
    }
}

impl<T: Scalar> FiniteDistribution<T> {
    pub fn new(outcomes: Vec<Vec<T>>, probabilities: Vec<T>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if outcomes.len() != probabilities.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| p.is_nan() || **p <= T::zero()) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is not strictly positive"
            )));
        }
        let total = scalar::sum(probabilities.iter().copied());
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_count(16 * outcomes.len()));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        for (i, a) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|b| b == a) {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {i} duplicates an earlier outcome"
                )));
            }
        }
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = scalar::CompensatedSum::<f64>::new();
        for p in &probabilities {
            acc.add(p.as_f64());
            cumulative.push(acc.value());
        }
        Ok(Self {
            outcomes,
            probabilities,
            cumulative,
        })
    }

    /// Equal probabilities over `outcomes`.
    pub fn uniform(outcomes: Vec<Vec<T>>) -> Result<Self> {
        let p = T::one() / T::from_count(outcomes.len().max(1));
        let probabilities = vec![p; outcomes.len()];
        Self::new(outcomes, probabilities)
    }

    /// Support `0, 1, …, s-1` labelled by scalar outcome values.
    pub fn scalar(values: &[T], probabilities: &[T]) -> Result<Self> {
        Self::new(
            values.iter().map(|&v| vec![v]).collect(),
            probabilities.to_vec(),
        )
    }

    pub fn support_size(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Vec<T>] {
        &self.outcomes
    }

    pub fn outcome(&self, index: usize) -> &[T] {
        &self.outcomes[index]
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    /// Draws one outcome index by inversion of the cumulative distribution.
    #[inline]
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}

/// Ordered batch of i.i.d. scenarios with the stream they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Sample<T> {
    scenarios: Vec<Scenario<T>>,
    provenance: StreamKey,
}

impl<T: Scalar> Sample<T> {
    pub fn new(scenarios: Vec<Scenario<T>>, provenance: StreamKey) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::ZeroSampleSize);
        }
        Ok(Self {
            scenarios,
            provenance,
        })
    }

    /// Sample made of the given outcome indices, validated against `dist`.
    pub fn from_outcomes(
        dist: &FiniteDistribution<T>,
        indices: &[usize],
        provenance: StreamKey,
    ) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dist.support_size()) {
            return Err(Error::InvalidDistribution(format!(
                "outcome index {bad} outside support of size {}",
                dist.support_size()
            )));
        }
        Self::new(
            indices.iter().map(|&i| Scenario::Outcome(i)).collect(),
            provenance,
        )
    }

    pub fn size(&self) -> usize {
        self.scenarios.len()
    }

    pub fn scenarios(&self) -> &[Scenario<T>] {
        &self.scenarios
    }

    pub fn provenance(&self) -> &StreamKey {
        &self.provenance
    }
}

/// Draws `n` i.i.d. scenarios from `dist` on the stream identified by `key`.
pub fn draw_sample<T: Scalar>(
    dist: &FiniteDistribution<T>,
    n: usize,
    key: &StreamKey,
) -> Result<Sample<T>> {
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    let mut rng = make_stream(key);
    let scenarios = (0..n)
        .map(|_| Scenario::Outcome(dist.draw_index(&mut rng)))
        .collect();
    Sample::new(scenarios, key.clone())
}

/// Compensated empirical expectation of `value_of` over the sample.
pub fn empirical_mean<T: Scalar>(
    sample: &Sample<T>,
    value_of: impl Fn(&Scenario<T>) -> T,
) -> Result<T> {
    scalar::mean(sample.scenarios().iter().map(value_of)).ok_or(Error::Empty)
}
