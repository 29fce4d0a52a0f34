//! Problem files: a tensor pair described in JSON.
//!
//! Index tuples in `symmetric-upper` and `coordinate` entries are one-based.

use std::fmt;

use ceig::instances::{random_symmetric, symmetric_from_upper, Family};
use ceig::{Tensor, TensorPair};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: usize,
    pub dim: usize,
    pub a: TensorSpec,
    pub b: TensorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TensorSpec {
    /// All `n^m` entries, last index fastest.
    Dense { entries: Vec<f64> },
    /// One value per nondecreasing index tuple; the rest follows by symmetry.
    SymmetricUpper { entries: Vec<IndexedValue> },
    /// Sparse entries; unlisted positions are zero.
    Coordinate { entries: Vec<IndexedValue> },
    /// A built-in family, evaluated at the file's order and dimension.
    Formula {
        family: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedValue {
    pub index: Vec<usize>,
    pub value: f64,
}

/// A problem file that parsed but does not describe a valid pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError(pub String);

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

/// Families accepted in `formula` specs besides the closed-form ones.
pub const RANDOM_FAMILIES: [&str; 2] = ["random", "random-positive"];

pub fn family_names() -> Vec<&'static str> {
    Family::ALL.iter().map(|f| f.name()).chain(RANDOM_FAMILIES).collect()
}

impl TensorSpec {
    pub fn build(&self, m: usize, n: usize, name: &str) -> Result<Tensor, SchemaError> {
        let err = |msg: String| SchemaError(format!("tensor {name}: {msg}"));
        match self {
            TensorSpec::Dense { entries } => Tensor::new(m, n, entries.clone()).map_err(|e| err(e.to_string())),
            TensorSpec::SymmetricUpper { entries } => {
                let mut seen = std::collections::HashSet::new();
                let mut list = Vec::with_capacity(entries.len());
                for e in entries {
                    let idx = zero_based(&e.index, m, n).map_err(err)?;
                    if idx.windows(2).any(|w| w[0] > w[1]) {
                        return Err(err(format!("index {:?} is not nondecreasing", e.index)));
                    }
                    if !seen.insert(idx.clone()) {
                        return Err(err(format!("index {:?} listed twice", e.index)));
                    }
                    check_finite(e.value).map_err(err)?;
                    list.push((idx, e.value));
                }
                Ok(symmetric_from_upper(m, n, list))
            }
            TensorSpec::Coordinate { entries } => {
                let mut dense = vec![0.0; n.pow(m as u32)];
                for e in entries {
                    let idx = zero_based(&e.index, m, n).map_err(err)?;
                    check_finite(e.value).map_err(err)?;
                    dense[idx.iter().fold(0, |acc, &i| acc * n + i)] += e.value;
                }
                Tensor::new(m, n, dense).map_err(|e| err(e.to_string()))
            }
            TensorSpec::Formula { family, seed } => match family.as_str() {
                "random" | "random-positive" => {
                    let seed = seed.ok_or_else(|| err(format!("family {family} needs a seed")))?;
                    Ok(random_symmetric(m, n, seed, family == "random-positive"))
                }
                _ => {
                    let f = Family::from_name(family).ok_or_else(|| {
                        err(format!("unknown family {family:?} (known: {})", family_names().join(", ")))
                    })?;
                    f.tensor(m, n).ok_or_else(|| err(format!("family {family} is not defined at order {m}")))
                }
            },
            TensorSpec::Identity => Ok(Tensor::identity(m, n)),
        }
    }
}

fn zero_based(index: &[usize], m: usize, n: usize) -> Result<Vec<usize>, String> {
    if index.len() != m {
        return Err(format!("index {index:?} has {} entries, expected {m}", index.len()));
    }
    if index.iter().any(|&i| i == 0 || i > n) {
        return Err(format!("index {index:?} out of range 1..={n}"));
    }
    Ok(index.iter().map(|&i| i - 1).collect())
}

fn check_finite(v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("non-finite value {v}"))
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        serde_json::from_str(text).map_err(|e| SchemaError(format!("malformed problem file: {e}")))
    }

    pub fn pair(&self) -> Result<TensorPair, SchemaError> {
        if self.order < 2 || self.dim == 0 {
            return Err(SchemaError(format!("need order >= 2 and dim >= 1, got order {} dim {}", self.order, self.dim)));
        }
        let a = self.a.build(self.order, self.dim, "A")?;
        let b = self.b.build(self.order, self.dim, "B")?;
        TensorPair::new(a, b).map_err(|e| SchemaError(e.to_string()))
    }

    /// Materialize a family (or the identity) as a dense file.
    pub fn generate(a: &str, b: &str, n: usize, m: usize, seed: u64) -> Result<Self, SchemaError> {
        let spec = |family: &str, offset: u64| TensorSpec::Formula {
            family: family.to_string(),
            seed: RANDOM_FAMILIES.contains(&family).then(|| seed.wrapping_add(offset)),
        };
        let formula = ProblemFile { order: m, dim: n, a: spec(a, 0), b: spec(b, 1) };
        let pair = formula.pair()?;
        let dense = |t: &Tensor| TensorSpec::Dense { entries: t.entries().to_vec() };
        Ok(ProblemFile { order: m, dim: n, a: dense(&pair.a), b: dense(&pair.b) })
    }
}
