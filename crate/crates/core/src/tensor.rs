//! Symmetric, diagonal-free coefficient arrays of homogeneous multilinear
//! polynomials
//!
//! ```text
//! Q(x) = Σ_{i_1..i_d} a(i_1..i_d) x_{i_1}···x_{i_d}
//! ```
//!
//! Only the strictly increasing multi-indices are stored; the full array is
//! recovered by symmetrization and has zeros on every diagonal. Indices are
//! zero-based in the Rust API and one-based in the JSON literal format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("invalid shape: degree {degree}, dimension {dimension} (need 1 <= degree <= dimension)")]
    InvalidShape { degree: usize, dimension: usize },
    #[error("multi-index {index:?} has {got} components, expected {expected}")]
    ArityMismatch {
        index: Vec<usize>,
        got: usize,
        expected: usize,
    },
    #[error("multi-index {index:?} out of range for dimension {dimension}")]
    IndexOutOfRange { index: Vec<usize>, dimension: usize },
    #[error("multi-index {0:?} repeats a component")]
    DiagonalIndex(Vec<usize>),
    #[error("multi-index {0:?} given more than once")]
    DuplicateEntry(Vec<usize>),
    #[error("coefficient for {0:?} is not finite")]
    NonFinite(Vec<usize>),
    #[error("tensor is identically zero")]
    ZeroTensor,
    #[error("family {family} does not support degree {degree}, dimension {dimension}")]
    UnsupportedFamily {
        family: String,
        degree: usize,
        dimension: usize,
    },
    #[error("input vector has length {got}, tensor needs {needed}")]
    DimensionMismatch { got: usize, needed: usize },
    #[error("malformed tensor literal: {0}")]
    Literal(String),
}

/// Coefficients of a homogeneous multilinear polynomial of degree `d` in `N`
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    degree: usize,
    dimension: usize,
    // Row-major, `degree` components per entry; rows strictly increasing and
    // sorted lexicographically.
    indices: Vec<usize>,
    values: Vec<f64>,
    // Set when every one of the C(N, d) sorted keys carries the same value.
    uniform: Option<f64>,
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

impl CoefficientTensor {
    /// Builds a tensor from zero-based raw entries.
    ///
    /// Each multi-index is sorted before storage, so `(2, 1)` and `(1, 2)`
    /// name the same coefficient. Indices with a repeated component and keys
    /// that collide after sorting are rejected.
    pub fn build<I>(degree: usize, dimension: usize, raw_entries: I) -> Result<Self, TensorError>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        if degree == 0 || dimension < degree {
            return Err(TensorError::InvalidShape { degree, dimension });
        }
        let mut map: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (index, value) in raw_entries {
            if index.len() != degree {
                return Err(TensorError::ArityMismatch {
                    got: index.len(),
                    expected: degree,
                    index,
                });
            }
            if index.iter().any(|&i| i >= dimension) {
                return Err(TensorError::IndexOutOfRange { index, dimension });
            }
            if !value.is_finite() {
                return Err(TensorError::NonFinite(index));
            }
            let mut key = index.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(TensorError::DiagonalIndex(index));
            }
            if map.insert(key, value).is_some() {
                return Err(TensorError::DuplicateEntry(index));
            }
        }
        Ok(Self::from_sorted(degree, dimension, map))
    }

    fn from_sorted(degree: usize, dimension: usize, map: BTreeMap<Vec<usize>, f64>) -> Self {
        let mut indices = Vec::with_capacity(map.len() * degree);
        let mut values = Vec::with_capacity(map.len());
        for (k, v) in map {
            indices.extend(k);
            values.push(v);
        }
        let full = binomial(dimension, degree).is_some_and(|c| c == values.len() as u128);
        let uniform = match values.first() {
            Some(&first) if full && values.iter().all(|&v| v == first) => Some(first),
            _ => None,
        };
        Self {
            degree,
            dimension,
            indices,
            values,
            uniform,
        }
    }

    /// The zero polynomial.
    pub fn zero(degree: usize, dimension: usize) -> Result<Self, TensorError> {
        Self::build(degree, dimension, std::iter::empty())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates over `(sorted multi-index, value)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.indices
            .chunks_exact(self.degree)
            .zip(self.values.iter().copied())
    }

    /// Value of the full symmetric array at an arbitrary multi-index.
    pub fn coefficient(&self, index: &[usize]) -> f64 {
        if index.len() != self.degree {
            return 0.0;
        }
        let mut key = index.to_vec();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        self.entries()
            .find(|(k, _)| *k == key.as_slice())
            .map_or(0.0, |(_, v)| v)
    }

    /// `d! Σ_full a²`, which is also `Var Q(X)` for standardized independent
    /// inputs. The full symmetric sum is `d!` times the sorted-key sum.
    pub fn norm_square(&self) -> f64 {
        let f = factorial(self.degree);
        f * f * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Rescales so that `norm_square` is one.
    pub fn normalize(&self) -> Result<Self, TensorError> {
        let ns = self.norm_square();
        if ns <= 0.0 {
            return Err(TensorError::ZeroTensor);
        }
        Ok(self.scaled(1.0 / ns.sqrt()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.uniform = out.uniform.map(|u| u * factor);
        out
    }

    /// Influence of each variable, `Σ_{i_2..i_d} a(i, i_2..i_d)²` over the full
    /// array, together with the maximum.
    pub fn influence_profile(&self) -> (Vec<f64>, f64) {
        // Each sorted key containing i appears (d-1)! times among the full
        // tuples starting with i.
        let perms = factorial(self.degree - 1);
        let mut inf = vec![0.0; self.dimension];
        for (key, v) in self.entries() {
            for &i in key {
                inf[i] += perms * v * v;
            }
        }
        let max = inf.iter().copied().fold(0.0, f64::max);
        (inf, max)
    }

    pub fn max_influence(&self) -> f64 {
        self.influence_profile().1
    }

    /// `Q(x)`. Only the first `dimension` components of `x` are read.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, TensorError> {
        if x.len() < self.dimension {
            return Err(TensorError::DimensionMismatch {
                got: x.len(),
                needed: self.dimension,
            });
        }
        Ok(self.evaluate_unchecked(&x[..self.dimension]))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let f = factorial(self.degree);
        if let Some(c) = self.uniform {
            return f * c * elementary_symmetric(x, self.degree);
        }
        let sum: f64 = self
            .entries()
            .map(|(key, v)| v * key.iter().map(|&i| x[i]).product::<f64>())
            .sum();
        f * sum
    }

    /// Writes `∂_i Q(x)` for every `i` into `grad`.
    pub fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        let f = factorial(self.degree);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (key, v) in self.entries() {
            for (pos, &i) in key.iter().enumerate() {
                let rest: f64 = key
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| *p != pos)
                    .map(|(_, &j)| x[j])
                    .product();
                grad[i] += f * v * rest;
            }
        }
    }

    /// Parses the JSON literal `{degree, dimension, entries: [[[i..], v], ..]}`
    /// with one-based indices.
    pub fn from_json_str(text: &str) -> Result<Self, TensorError> {
        let lit: TensorLiteral =
            serde_json::from_str(text).map_err(|e| TensorError::Literal(e.to_string()))?;
        lit.into_tensor()
    }

    /// Serializes to the JSON literal format with sorted one-based indices.
    pub fn to_json_string(&self) -> String {
        let lit = TensorLiteral {
            degree: self.degree,
            dimension: self.dimension,
            entries: self
                .entries()
                .map(|(k, v)| (k.iter().map(|i| i + 1).collect(), v))
                .collect(),
        };
        serde_json::to_string(&lit).expect("tensor literal serializes")
    }
}

/// `e_d(x)`, the elementary symmetric polynomial of degree `d`.
fn elementary_symmetric(x: &[f64], d: usize) -> f64 {
    let mut e = vec![0.0; d + 1];
    e[0] = 1.0;
    for &xi in x {
        for k in (1..=d).rev() {
            e[k] += xi * e[k - 1];
        }
    }
    e[d]
}

/// On-disk form of a tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorLiteral {
    pub degree: usize,
    pub dimension: usize,
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl TensorLiteral {
    pub fn into_tensor(self) -> Result<CoefficientTensor, TensorError> {
        let dimension = self.dimension;
        let mut raw = Vec::with_capacity(self.entries.len());
        for (index, v) in self.entries {
            if index.iter().any(|&i| i == 0 || i > dimension) {
                return Err(TensorError::IndexOutOfRange {
                    index,
                    dimension,
                });
            }
            raw.push((index.into_iter().map(|i| i - 1).collect(), v));
        }
        CoefficientTensor::build(self.degree, dimension, raw)
    }
}

/// Named tensor families used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `d = 1`, `a(i) = 1/√N`.
    MeanField,
    /// Every off-diagonal coefficient equal, normalized.
    OffdiagConstant,
    /// `d = 2`, `a(1,2) = a(2,1) = 1/2`; one pair carries all the variance.
    DominantPair,
    /// Each sorted key kept with probability `density`, Gaussian values,
    /// normalized.
    RandomSparse { seed: u64, density: f64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::MeanField => f.write_str("mean_field"),
            Family::OffdiagConstant => f.write_str("offdiag_constant"),
            Family::DominantPair => f.write_str("dominant_pair"),
            Family::RandomSparse { seed, density } => {
                write!(f, "random_sparse:{seed}:{density}")
            }
        }
    }
}

impl FromStr for Family {
    type Err = String;

    /// Accepts `mean_field`, `offdiag_constant`, `dominant_pair`,
    /// `random_sparse` and `random_sparse:<seed>:<density>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean_field" => Ok(Family::MeanField),
            "offdiag_constant" => Ok(Family::OffdiagConstant),
            "dominant_pair" => Ok(Family::DominantPair),
            "random_sparse" => Ok(Family::RandomSparse {
                seed: 0,
                density: 0.5,
            }),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                match parts.as_slice() {
                    ["random_sparse", seed, density] => {
                        let seed = seed.parse().map_err(|_| format!("bad seed in {other:?}"))?;
                        let density: f64 =
                            density.parse().map_err(|_| format!("bad density in {other:?}"))?;
                        if !(density > 0.0 && density <= 1.0) {
                            return Err(format!("density must lie in (0, 1], got {density}"));
                        }
                        Ok(Family::RandomSparse { seed, density })
                    }
                    _ => Err(format!("unknown family {other:?}")),
                }
            }
        }
    }
}

/// Instantiates a named family at the requested shape, normalized.
pub fn family_generate(
    kind: Family,
    degree: usize,
    dimension: usize,
) -> Result<CoefficientTensor, TensorError> {
    let unsupported = || TensorError::UnsupportedFamily {
        family: kind.to_string(),
        degree,
        dimension,
    };
    if degree == 0 || dimension < degree {
        return Err(TensorError::InvalidShape { degree, dimension });
    }
    match kind {
        Family::MeanField => {
            if degree != 1 {
                return Err(unsupported());
            }
            let v = 1.0 / (dimension as f64).sqrt();
            CoefficientTensor::build(1, dimension, (0..dimension).map(|i| (vec![i], v)))
        }
        Family::OffdiagConstant => {
            let count = binomial(dimension, degree)
                .filter(|&c| c <= 50_000_000)
                .ok_or_else(unsupported)?;
            let v = 1.0 / (factorial(degree) * (count as f64).sqrt());
            let mut map = BTreeMap::new();
            for key in SortedKeys::new(dimension, degree) {
                map.insert(key, v);
            }
            Ok(CoefficientTensor::from_sorted(degree, dimension, map))
        }
        Family::DominantPair => {
            if degree != 2 {
                return Err(unsupported());
            }
            CoefficientTensor::build(2, dimension, [(vec![0, 1], 0.5)])
        }
        Family::RandomSparse { seed, density } => {
            if binomial(dimension, degree).is_none_or(|c| c > 1_000_000) {
                return Err(unsupported());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut map = BTreeMap::new();
            for key in SortedKeys::new(dimension, degree) {
                let keep = rng.random::<f64>() < density;
                let value: f64 = rng.sample(StandardNormal);
                if keep && value != 0.0 {
                    map.insert(key, value);
                }
            }
            if map.is_empty() {
                map.insert((0..degree).collect(), 1.0);
            }
            CoefficientTensor::from_sorted(degree, dimension, map).normalize()
        }
    }
}

/// Lexicographic enumeration of strictly increasing `d`-subsets of `0..n`.
pub(crate) struct SortedKeys {
    n: usize,
    current: Option<Vec<usize>>,
}

impl SortedKeys {
    pub(crate) fn new(n: usize, d: usize) -> Self {
        let current = (d <= n).then(|| (0..d).collect());
        Self { n, current }
    }
}

impl Iterator for SortedKeys {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let d = out.len();
        let mut next = out.clone();
        let mut pos = d;
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if next[pos] < self.n - d + pos {
                next[pos] += 1;
                for j in pos + 1..d {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Expands the full N^d array by brute force.
    fn for_each_tuple(n: usize, d: usize, mut f: impl FnMut(&[usize])) {
        let mut idx = vec![0usize; d];
        loop {
            f(&idx);
            let mut p = d;
            loop {
                if p == 0 {
                    return;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < n {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    fn brute_norm_square(t: &CoefficientTensor) -> f64 {
        let mut s = 0.0;
        for_each_tuple(t.dimension(), t.degree(), |ix| s += t.coefficient(ix).powi(2));
        factorial(t.degree()) * s
    }

    fn brute_influence(t: &CoefficientTensor) -> Vec<f64> {
        let mut inf = vec![0.0; t.dimension()];
        for_each_tuple(t.dimension(), t.degree(), |ix| {
            inf[ix[0]] += t.coefficient(ix).powi(2)
        });
        inf
    }

    fn arb_tensor() -> impl Strategy<Value = CoefficientTensor> {
        (1usize..=3, 0usize..=3, any::<u64>(), 0.1f64..=1.0).prop_map(|(d, extra, seed, density)| {
            let n = (d + extra).min(6);
            family_generate(Family::RandomSparse { seed, density }, d, n)
                .unwrap()
                .scaled(1.0 + (seed % 5) as f64)
        })
    }

    #[test]
    fn build_stores_mean_field_entries() {
        let t = CoefficientTensor::build(1, 3, (0..3).map(|i| (vec![i], 0.5))).unwrap();
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn build_rejects_diagonal() {
        let err = CoefficientTensor::build(2, 2, [(vec![0, 0], 1.0)]).unwrap_err();
        assert!(matches!(err, TensorError::DiagonalIndex(_)));
    }

    #[test]
    fn build_canonicalizes_order() {
        let t = CoefficientTensor::build(2, 3, [(vec![1, 0], 0.3)]).unwrap();
        let (k, v) = t.entries().next().unwrap();
        assert_eq!(k, &[0, 1]);
        assert_eq!(v, 0.3);
        assert_eq!(t.coefficient(&[1, 0]), 0.3);
    }

    #[test]
    fn build_rejects_duplicates_and_range() {
        let err =
            CoefficientTensor::build(2, 3, [(vec![0, 1], 0.3), (vec![1, 0], 0.1)]).unwrap_err();
        assert!(matches!(err, TensorError::DuplicateEntry(_)));
        let err = CoefficientTensor::build(2, 3, [(vec![0, 3], 0.3)]).unwrap_err();
        assert!(matches!(err, TensorError::IndexOutOfRange { .. }));
        let err = CoefficientTensor::build(3, 2, std::iter::empty()).unwrap_err();
        assert!(matches!(err, TensorError::InvalidShape { .. }));
    }

    #[test]
    fn norm_square_examples() {
        let n = 7;
        let t = family_generate(Family::MeanField, 1, n).unwrap();
        assert_abs_diff_eq!(t.norm_square(), 1.0, epsilon = 1e-12);

        let n = 9usize;
        let v = 1.0 / ((2 * n * (n - 1)) as f64).sqrt();
        let raw = SortedKeys::new(n, 2).map(|k| (k, v));
        let t = CoefficientTensor::build(2, n, raw).unwrap();
        assert_abs_diff_eq!(t.norm_square(), 1.0, epsilon = 1e-12);

        assert_eq!(CoefficientTensor::zero(2, 4).unwrap().norm_square(), 0.0);
    }

    #[test]
    fn normalize_examples() {
        let t = CoefficientTensor::build(1, 2, [(vec![0], 2.0), (vec![1], 0.0)]).unwrap();
        assert_abs_diff_eq!(t.norm_square(), 4.0);
        let u = t.normalize().unwrap();
        assert_eq!(u.coefficient(&[0]), 1.0);

        let m = family_generate(Family::OffdiagConstant, 3, 5).unwrap();
        let again = m.normalize().unwrap();
        for ((_, a), (_, b)) in m.entries().zip(again.entries()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }

        let z = CoefficientTensor::zero(1, 1).unwrap();
        assert_eq!(z.normalize().unwrap_err(), TensorError::ZeroTensor);
    }

    #[test]
    fn influence_examples() {
        let (inf, max) = family_generate(Family::MeanField, 1, 8).unwrap().influence_profile();
        assert!(inf.iter().all(|&x| (x - 0.125).abs() < 1e-15));
        assert_abs_diff_eq!(max, 0.125, epsilon = 1e-15);

        for n in [2, 3, 10] {
            let t = family_generate(Family::OffdiagConstant, 2, n).unwrap();
            assert_abs_diff_eq!(t.max_influence(), 1.0 / (2.0 * n as f64), epsilon = 1e-15);
            let dp = family_generate(Family::DominantPair, 2, n).unwrap();
            assert_eq!(dp.max_influence(), 0.25);
        }
    }

    #[test]
    fn family_examples() {
        let t = family_generate(Family::MeanField, 1, 4).unwrap();
        assert!(t.entries().all(|(_, v)| v == 0.5));

        let t = family_generate(Family::OffdiagConstant, 2, 3).unwrap();
        assert_eq!(t.len(), 3);
        for (_, v) in t.entries() {
            assert_abs_diff_eq!(v, 1.0 / 12f64.sqrt(), epsilon = 1e-15);
        }

        let err = family_generate(Family::DominantPair, 3, 5).unwrap_err();
        assert!(matches!(err, TensorError::UnsupportedFamily { .. }));
        assert!(family_generate(Family::MeanField, 2, 5).is_err());
    }

    #[test]
    fn offdiag_max_influence_times_2n_is_one() {
        for n in 2..=50 {
            let t = family_generate(Family::OffdiagConstant, 2, n).unwrap();
            assert_abs_diff_eq!(t.max_influence() * 2.0 * n as f64, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t.norm_square(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sorted_keys_counts() {
        assert_eq!(SortedKeys::new(6, 3).count(), 20);
        assert_eq!(SortedKeys::new(4, 4).count(), 1);
        assert_eq!(SortedKeys::new(3, 4).count(), 0);
        let keys: Vec<_> = SortedKeys::new(4, 2).collect();
        assert_eq!(keys[0], vec![0, 1]);
        assert_eq!(keys[5], vec![2, 3]);
    }

    #[test]
    fn uniform_fast_path_matches_key_sum() {
        let t = family_generate(Family::OffdiagConstant, 3, 9).unwrap();
        assert!(t.uniform.is_some());
        let mut slow = t.clone();
        slow.uniform = None;
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        assert_abs_diff_eq!(
            t.evaluate(&x).unwrap(),
            slow.evaluate(&x).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn json_literal_roundtrip_and_one_based() {
        let text = r#"{"degree":2,"dimension":3,"entries":[[[2,1],0.3],[[3,1],-0.5]]}"#;
        let t = CoefficientTensor::from_json_str(text).unwrap();
        assert_eq!(t.coefficient(&[0, 1]), 0.3);
        assert_eq!(
            t.to_json_string(),
            r#"{"degree":2,"dimension":3,"entries":[[[1,2],0.3],[[1,3],-0.5]]}"#
        );
        let bad = r#"{"degree":1,"dimension":3,"entries":[[[0],1.0]]}"#;
        assert!(CoefficientTensor::from_json_str(bad).is_err());
    }

    proptest! {
        #[test]
        fn norm_square_matches_brute_force(t in arb_tensor()) {
            prop_assert!((t.norm_square() - brute_norm_square(&t)).abs() <= 1e-12 * t.norm_square().max(1.0));
        }

        #[test]
        fn influence_matches_brute_force(t in arb_tensor()) {
            let (inf, max) = t.influence_profile();
            let brute = brute_influence(&t);
            for (a, b) in inf.iter().zip(&brute) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let bmax = brute.iter().copied().fold(0.0, f64::max);
            prop_assert!((max - bmax).abs() <= 1e-12);
        }

        #[test]
        fn evaluate_matches_brute_force(t in arb_tensor(), xs in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let mut brute = 0.0;
            for_each_tuple(t.dimension(), t.degree(), |ix| {
                brute += t.coefficient(ix) * ix.iter().map(|&i| xs[i]).product::<f64>();
            });
            let fast = t.evaluate(&xs).unwrap();
            prop_assert!((fast - brute).abs() <= 1e-10 * brute.abs().max(1.0));
        }

        #[test]
        fn json_literal_roundtrip(t in arb_tensor()) {
            let back = CoefficientTensor::from_json_str(&t.to_json_string()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
