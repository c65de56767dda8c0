//! Finite probability spaces with partition-generated sigma-algebras.
//!
//! On a finite space, measurability questions are exactly decidable: a map
//! is measurable with respect to a partition precisely when it is constant
//! on every block. Level sets use bit-exact comparison; callers that need
//! tolerance must quantize values before building variables.

use std::collections::HashMap;
use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::Value;

pub type SpaceRef = Arc<FiniteProbabilitySpace>;

/// Tolerance for the "weights sum to one" invariant.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finite outcome set with a partition (the atoms generating the
/// sigma-algebra) and per-outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbabilitySpace {
    outcomes: Vec<String>,
    atoms: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl FiniteProbabilitySpace {
    /// Builds a space and validates the partition and weight invariants.
    /// Atom blocks are given as outcome indices.
    pub fn new(
        outcomes: Vec<String>,
        atoms: Vec<Vec<usize>>,
        weights: Vec<f64>,
    ) -> Result<SpaceRef> {
        let n = outcomes.len();
        if n == 0 {
            return Err(Error::InvalidSpace("no outcomes".into()));
        }
        if weights.len() != n {
            return Err(Error::InvalidSpace(format!(
                "{} weights for {} outcomes",
                weights.len(),
                n
            )));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for id in &outcomes {
                if !seen.insert(id) {
                    return Err(Error::InvalidSpace(format!("duplicate outcome id '{id}'")));
                }
            }
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSpace(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpace(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut covered = vec![false; n];
        for block in &atoms {
            if block.is_empty() {
                return Err(Error::InvalidSpace("empty atom".into()));
            }
            for &idx in block {
                if idx >= n {
                    return Err(Error::InvalidSpace(format!(
                        "atom refers to outcome index {idx} out of {n}"
                    )));
                }
                if covered[idx] {
                    return Err(Error::InvalidSpace(format!(
                        "outcome index {idx} appears in two atoms"
                    )));
                }
                covered[idx] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::InvalidSpace("atoms do not cover the outcome set".into()));
        }
        let mut atoms = atoms;
        for block in &mut atoms {
            block.sort_unstable();
        }
        atoms.sort_by_key(|b| b[0]);
        Ok(Arc::new(FiniteProbabilitySpace {
            outcomes,
            atoms,
            weights,
        }))
    }

    /// Uniform space on `n` outcomes with singleton atoms and ids `0..n-1`.
    pub fn uniform(n: usize) -> Result<SpaceRef> {
        let outcomes = (0..n).map(|i| i.to_string()).collect();
        let atoms = (0..n).map(|i| vec![i]).collect();
        let weights = vec![1.0 / n as f64; n];
        FiniteProbabilitySpace::new(outcomes, atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    /// The generating partition as a [`Partition`] value.
    pub fn atom_partition(&self) -> Partition {
        Partition {
            blocks: self.atoms.clone(),
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == id)
    }
}

/// A partition of the outcome indices; blocks and their contents are kept
/// sorted so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b.first().copied());
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// True when every block of `self` is contained in a single block of
    /// `coarser`, i.e. `self` is a refinement.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (b, block) in coarser.blocks.iter().enumerate() {
            for &i in block {
                owner.insert(i, b);
            }
        }
        self.blocks.iter().all(|block| {
            let Some(first) = block.first().and_then(|i| owner.get(i)) else {
                return false;
            };
            block.iter().all(|i| owner.get(i) == Some(first))
        })
    }
}

/// A map from outcomes to scalar or vector values, attached to its space and
/// constant on every atom (checked at construction, bit-exactly).
#[derive(Debug, Clone)]
pub struct RandomVariable {
    space: SpaceRef,
    values: Vec<Value>,
}

impl RandomVariable {
    pub fn on_space(space: SpaceRef, values: Vec<Value>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidSpace(format!(
                "{} values for {} outcomes",
                values.len(),
                space.len()
            )));
        }
        let dim = values[0].dim();
        let vector = matches!(values[0], Value::Vector(_));
        for v in &values {
            if v.dim() != dim || matches!(v, Value::Vector(_)) != vector {
                return Err(Error::InvalidSpace(
                    "values mix scalar and vector payloads".into(),
                ));
            }
        }
        for (k, atom) in space.atoms().iter().enumerate() {
            let first = &values[atom[0]];
            if atom.iter().any(|&i| !values[i].bits_eq(first)) {
                return Err(Error::NotMeasurable { atom: k });
            }
        }
        Ok(RandomVariable { space, values })
    }

    pub fn scalar(space: &SpaceRef, values: Vec<f64>) -> Result<Self> {
        RandomVariable::on_space(
            space.clone(),
            values.into_iter().map(Value::Scalar).collect(),
        )
    }

    pub fn vector(space: &SpaceRef, values: Vec<Vec<f64>>) -> Result<Self> {
        RandomVariable::on_space(
            space.clone(),
            values.into_iter().map(Value::Vector).collect(),
        )
    }

    pub fn space(&self) -> &FiniteProbabilitySpace {
        &self.space
    }

    pub fn space_arc(&self) -> SpaceRef {
        self.space.clone()
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value_at(&self, idx: usize) -> &Value {
        &self.values[idx]
    }

    /// True when both variables live on the same space (same allocation or
    /// structurally equal).
    pub fn same_space(&self, other: &RandomVariable) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    /// Joins two variables into the vector-valued pair `(X, Y)`.
    pub fn joint(&self, other: &RandomVariable) -> Result<RandomVariable> {
        if !self.same_space(other) {
            return Err(Error::MismatchedSpaces);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut v = a.coords().to_vec();
                v.extend_from_slice(b.coords());
                Value::Vector(v)
            })
            .collect();
        RandomVariable::on_space(self.space.clone(), values)
    }
}

/// The partition of the outcome set into level sets of `x` (bit-exact
/// comparison, componentwise for vectors): the sigma-algebra generated by
/// the variable.
pub fn sigma_generated_by(x: &RandomVariable) -> Partition {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, v) in x.values().iter().enumerate() {
        groups.entry(v.bit_key()).or_default().push(i);
    }
    Partition::new(groups.into_values().collect())
}

/// True when `g` is constant (bit-exactly) on every block of the partition.
pub fn is_measurable_wrt(g: &RandomVariable, partition: &Partition) -> bool {
    partition.blocks().iter().all(|block| {
        let first = g.value_at(block[0]);
        block.iter().all(|&i| g.value_at(i).bits_eq(first))
    })
}

/// Weighted mean of the variable, componentwise for vectors.
pub fn expectation(x: &RandomVariable) -> Value {
    let weights = x.space().weights();
    match x.value_at(0) {
        Value::Scalar(_) => {
            let mean = x
                .values()
                .iter()
                .zip(weights)
                .map(|(v, w)| v.coords()[0] * w)
                .sum();
            Value::Scalar(mean)
        }
        Value::Vector(first) => {
            let mut acc = vec![0.0; first.len()];
            for (v, w) in x.values().iter().zip(weights) {
                for (a, c) in acc.iter_mut().zip(v.coords()) {
                    *a += c * w;
                }
            }
            Value::Vector(acc)
        }
    }
}

/// Distribution of a scalar draw, with known mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    Exponential { rate: f64 },
    /// Uniform over an explicit list of values.
    Choice { values: Vec<f64> },
}

impl DistributionSpec {
    /// Parses specs of the form `uniform:0,1`, `normal:0,1`,
    /// `bernoulli:0.3`, `exponential:2`, `choice:0.5,1.0,1.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let reject = || Error::UnsupportedDistribution(spec.to_string());
        let (name, args) = spec.split_once(':').ok_or_else(reject)?;
        let nums: std::result::Result<Vec<f64>, _> =
            args.split(',').map(|a| a.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|_| reject())?;
        let out = match (name, nums.as_slice()) {
            ("uniform", [lo, hi]) if lo < hi => DistributionSpec::Uniform { lo: *lo, hi: *hi },
            ("normal", [mean, sd]) if *sd > 0.0 => DistributionSpec::Normal {
                mean: *mean,
                sd: *sd,
            },
            ("bernoulli", [p]) if (0.0..=1.0).contains(p) => DistributionSpec::Bernoulli { p: *p },
            ("exponential", [rate]) if *rate > 0.0 => DistributionSpec::Exponential { rate: *rate },
            ("choice", values) if !values.is_empty() => DistributionSpec::Choice {
                values: values.to_vec(),
            },
            _ => return Err(reject()),
        };
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Normal { mean, .. } => *mean,
            DistributionSpec::Bernoulli { p } => *p,
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Choice { values } => {
                values.iter().sum::<f64>() / values.len() as f64
            }
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            DistributionSpec::Uniform { lo, hi } => (hi - lo) / 12.0_f64.sqrt(),
            DistributionSpec::Normal { sd, .. } => *sd,
            DistributionSpec::Bernoulli { p } => (p * (1.0 - p)).sqrt(),
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Choice { values } => {
                let m = self.mean();
                (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
                    .sqrt()
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            DistributionSpec::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            DistributionSpec::Normal { mean, sd } => {
                rand_distr::Normal::new(*mean, *sd).unwrap().sample(rng)
            }
            DistributionSpec::Bernoulli { p } => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Exponential { rate } => {
                rand_distr::Exp::new(*rate).unwrap().sample(rng)
            }
            DistributionSpec::Choice { values } => values[rng.gen_range(0..values.len())],
        }
    }
}

/// A seeded, reproducible stream of scalar draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStream {
    pub seed: u64,
    pub dist: DistributionSpec,
    pub count: usize,
}

/// Deterministic seed derivation for sub-streams (replicates, workers).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 step at position `index`
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fresh deterministic generator for a seed.
pub fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Draws `count` outcomes and wraps them as a uniform-weight space with
/// singleton atoms plus the drawn values as a random variable. Identical
/// streams produce identical spaces.
pub fn empirical_space(stream: &SampleStream) -> Result<(SpaceRef, RandomVariable)> {
    if stream.count == 0 {
        return Err(Error::InvalidSpace("empirical space needs count >= 1".into()));
    }
    let mut rng = rng_for(stream.seed);
    let values: Vec<f64> = (0..stream.count)
        .map(|_| stream.dist.sample(&mut rng))
        .collect();
    let space = FiniteProbabilitySpace::uniform(stream.count)?;
    let x = RandomVariable::scalar(&space, values)?;
    Ok((space, x))
}

/// JSON document for a space together with one variable:
/// `{outcomes, atoms, weights, values}` with atoms listed by outcome id and
/// values keyed by outcome id (scalar number or array of numbers).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceJson {
    pub outcomes: Vec<String>,
    pub atoms: Vec<Vec<String>>,
    pub weights: Vec<f64>,
    pub values: BTreeMap<String, Value>,
}

impl SpaceJson {
    pub fn from_variable(x: &RandomVariable) -> SpaceJson {
        let space = x.space();
        let id = |i: &usize| space.outcomes()[*i].clone();
        SpaceJson {
            outcomes: space.outcomes().to_vec(),
            atoms: space
                .atoms()
                .iter()
                .map(|block| block.iter().map(id).collect())
                .collect(),
            weights: space.weights().to_vec(),
            values: space
                .outcomes()
                .iter()
                .cloned()
                .zip(x.values().iter().cloned())
                .collect(),
        }
    }

    pub fn into_variable(self) -> Result<(SpaceRef, RandomVariable)> {
        let index: HashMap<&String, usize> = self
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect();
        let atoms = self
            .atoms
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|id| {
                        index.get(id).copied().ok_or_else(|| {
                            Error::InvalidSpace(format!("atom refers to unknown outcome '{id}'"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let space = FiniteProbabilitySpace::new(self.outcomes.clone(), atoms, self.weights)?;
        let mut values = Vec::with_capacity(self.outcomes.len());
        for id in &self.outcomes {
            let v = self.values.get(id).ok_or_else(|| {
                Error::InvalidSpace(format!("no value for outcome '{id}'"))
            })?;
            values.push(v.clone());
        }
        if self.values.len() != self.outcomes.len() {
            let stray = self
                .values
                .keys()
                .find(|id| !self.outcomes.contains(id))
                .cloned()
                .unwrap_or_default();
            return Err(Error::InvalidSpace(format!(
                "values refer to unknown outcome '{stray}'"
            )));
        }
        let x = RandomVariable::on_space(space.clone(), values)?;
        Ok((space, x))
    }
}
