//! Sampling and moments of `Q(X)` for a coefficient tensor and an input law.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::batch::{Provenance, SampleBatch};
use crate::laws::{InputLaw, LawError, LawKind};
use crate::rng::{chunk_rng, chunked_draws, derive_seed};
use crate::tensor::{factorial, CoefficientTensor, TensorError};
use crate::wick::fourth_moment_wick;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("input law is not standardized (call standardize first)")]
    UnstandardizedLaw,
    #[error("sample count must be at least {min}, got {got}")]
    InvalidCount { got: usize, min: usize },
    #[error("{entries} coefficients exceed the exact-moment budget of {budget}")]
    TooLarge { entries: usize, budget: usize },
    #[error("tensor is not normalized: norm_square = {0}")]
    NotNormalized(f64),
    #[error("conditional variance sweep needs a mixture law")]
    NotMixture,
    #[error("exact enumeration needs a finite atomic law")]
    NotEnumerable,
}

/// `Q(x)`, reading the first `dimension` components of `x`.
pub fn evaluate(t: &CoefficientTensor, x: &[f64]) -> Result<f64, ChaosError> {
    Ok(t.evaluate(x)?)
}

/// `count` independent draws of `Q(X)` with `X` i.i.d. from `law`.
pub fn sample_chaos(
    t: &CoefficientTensor,
    law: &InputLaw,
    count: usize,
    seed: u64,
) -> Result<SampleBatch, ChaosError> {
    if !law.is_standardized() {
        return Err(ChaosError::UnstandardizedLaw);
    }
    if count == 0 {
        return Err(ChaosError::InvalidCount { got: 0, min: 1 });
    }
    let n = t.dimension();
    let values = chunked_draws(seed, count, |rng, len, out| {
        let mut x = vec![0.0; n];
        for _ in 0..len {
            x.iter_mut().for_each(|xi| *xi = law.sample_one(rng));
            out.push(t.evaluate_unchecked(&x));
        }
    });
    Ok(SampleBatch::new(
        values,
        Provenance {
            law: law.to_string(),
            seed,
            count,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMethod {
    WickExact,
    EnumerationExact,
    MonteCarlo { count: usize },
}

impl MomentMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            MomentMethod::WickExact => "wick_exact",
            MomentMethod::EnumerationExact => "enumeration_exact",
            MomentMethod::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Jackknife standard errors of a Monte-Carlo moment report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStderr {
    pub second: f64,
    pub fourth: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub second: f64,
    pub fourth: f64,
    /// `fourth − 3·second²`.
    pub excess: f64,
    pub method: MomentMethod,
    pub stderr: Option<MomentStderr>,
}

const JACKKNIFE_GROUPS: usize = 100;

/// Monte-Carlo `E[Q²]`, `E[Q⁴]` with grouped-jackknife standard errors.
pub fn fourth_moment_mc(
    t: &CoefficientTensor,
    law: &InputLaw,
    count: usize,
    seed: u64,
) -> Result<MomentReport, ChaosError> {
    let groups = JACKKNIFE_GROUPS.min(count);
    if count < 2 {
        return Err(ChaosError::InvalidCount { got: count, min: 2 });
    }
    let batch = sample_chaos(t, law, count, seed)?;
    Ok(moments_from_values(batch.values(), groups))
}

pub(crate) fn moments_from_values(values: &[f64], groups: usize) -> MomentReport {
    let n = values.len();
    // Per-group sums of x² and x⁴ over contiguous blocks.
    let mut s2 = vec![0.0; groups];
    let mut s4 = vec![0.0; groups];
    let mut sizes = vec![0usize; groups];
    for (i, &x) in values.iter().enumerate() {
        let g = i * groups / n;
        let x2 = x * x;
        s2[g] += x2;
        s4[g] += x2 * x2;
        sizes[g] += 1;
    }
    let (t2, t4): (f64, f64) = (s2.iter().sum(), s4.iter().sum());
    let second = t2 / n as f64;
    let fourth = t4 / n as f64;
    let excess = fourth - 3.0 * second * second;

    let leave_out: Vec<(f64, f64, f64)> = (0..groups)
        .map(|g| {
            let m = (n - sizes[g]) as f64;
            let a = (t2 - s2[g]) / m;
            let b = (t4 - s4[g]) / m;
            (a, b, b - 3.0 * a * a)
        })
        .collect();
    let jack = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        let g = groups as f64;
        let mean = leave_out.iter().map(f).sum::<f64>() / g;
        ((g - 1.0) / g * leave_out.iter().map(|v| (f(v) - mean).powi(2)).sum::<f64>()).sqrt()
    };
    MomentReport {
        second,
        fourth,
        excess,
        method: MomentMethod::MonteCarlo { count: n },
        stderr: Some(MomentStderr {
            second: jack(&|v| v.0),
            fourth: jack(&|v| v.1),
            excess: jack(&|v| v.2),
        }),
    }
}

/// Largest atom-vector count enumerated exactly.
pub const ENUMERATION_BUDGET: u64 = 1 << 20;

/// Exact moments for finite atomic input laws by enumerating every input
/// vector.
pub fn fourth_moment_enumeration(
    t: &CoefficientTensor,
    law: &InputLaw,
) -> Result<MomentReport, ChaosError> {
    if !law.is_standardized() {
        return Err(ChaosError::UnstandardizedLaw);
    }
    let atoms: Vec<(f64, f64)> = match law.kind() {
        LawKind::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
        LawKind::FiniteDiscrete { atoms } => atoms.clone(),
        _ => return Err(ChaosError::NotEnumerable),
    };
    let n = t.dimension();
    let total = (atoms.len() as u64)
        .checked_pow(n as u32)
        .filter(|&c| c <= ENUMERATION_BUDGET)
        .ok_or(ChaosError::TooLarge {
            entries: t.len(),
            budget: ENUMERATION_BUDGET as usize,
        })?;
    let (mut second, mut fourth) = (0.0, 0.0);
    let mut x = vec![0.0; n];
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        for xi in x.iter_mut() {
            let (v, p) = atoms[(c % atoms.len() as u64) as usize];
            c /= atoms.len() as u64;
            *xi = v;
            prob *= p;
        }
        let q = t.evaluate_unchecked(&x);
        second += prob * q * q;
        fourth += prob * q.powi(4);
    }
    Ok(MomentReport {
        second,
        fourth,
        excess: fourth - 3.0 * second * second,
        method: MomentMethod::EnumerationExact,
        stderr: None,
    })
}

/// Both sides of `max influence <= sqrt(E[F⁴] − 3) / (d·d!)` for Gaussian
/// inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn influence_bound_check(t: &CoefficientTensor) -> Result<InfluenceBound, ChaosError> {
    let ns = t.norm_square();
    if (ns - 1.0).abs() > 1e-9 {
        return Err(ChaosError::NotNormalized(ns));
    }
    let moments = fourth_moment_wick(t)?;
    let d = t.degree();
    let lhs = t.max_influence();
    let rhs = moments.excess.max(0.0).sqrt() / (d as f64 * factorial(d));
    Ok(InfluenceBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// Lower bound on `Var[Q(X) | ε, V]` for a normalized tensor of degree `d`
/// and mixture parameters `(p, alpha)`: `(alpha²·p/3)^d`.
pub fn conditional_variance_floor(degree: usize, p: f64, alpha: f64) -> f64 {
    (alpha * alpha * p / 3.0).powi(degree as i32)
}

pub const DEFAULT_FLOOR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalVarianceReport {
    /// One inner-variance estimate per outer draw of `(ε, V)`, sorted.
    pub variances: Vec<f64>,
    pub floor: f64,
    pub fraction: f64,
    pub quantile_05: f64,
    pub median: f64,
    /// Share of outer draws whose variance falls below `fraction·floor`.
    pub share_below: f64,
    /// `quantile_05 >= fraction·floor`.
    pub pass: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freezes `(ε, V)` `outer` times and estimates the variance of `Q(X)` over
/// the uniform arm `U` alone with `inner` draws each.
pub fn conditional_variance_sweep(
    t: &CoefficientTensor,
    law: &InputLaw,
    outer: usize,
    inner: usize,
    seed: u64,
    fraction: f64,
) -> Result<ConditionalVarianceReport, ChaosError> {
    let LawKind::Mixture {
        p,
        alpha,
        x0,
        background,
    } = law.kind()
    else {
        return Err(ChaosError::NotMixture);
    };
    if outer < 100 {
        return Err(ChaosError::InvalidCount { got: outer, min: 100 });
    }
    if inner < 1000 {
        return Err(ChaosError::InvalidCount { got: inner, min: 1000 });
    }
    let n = t.dimension();
    let mut variances: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(derive_seed(seed, &[0xC0]), k as u64);
            let frozen: Vec<(bool, f64)> = (0..n)
                .map(|_| {
                    let eps = rng.random::<f64>() < *p;
                    (eps, background.sample_one(&mut rng))
                })
                .collect();
            let mut x = vec![0.0; n];
            let (mut mean, mut m2) = (0.0, 0.0);
            for j in 0..inner {
                for (xi, &(eps, v)) in x.iter_mut().zip(&frozen) {
                    let u = 2.0 * rng.random::<f64>() - 1.0;
                    *xi = if eps { alpha * u + x0 } else { v };
                }
                let q = t.evaluate_unchecked(&x);
                let delta = q - mean;
                mean += delta / (j + 1) as f64;
                m2 += delta * (q - mean);
            }
            m2 / (inner - 1) as f64
        })
        .collect();
    variances.sort_unstable_by(f64::total_cmp);
    let floor = conditional_variance_floor(t.degree(), *p, *alpha);
    let threshold = fraction * floor;
    let quantile_05 = quantile(&variances, 0.05);
    let share_below =
        variances.iter().filter(|&&v| v < threshold).count() as f64 / variances.len() as f64;
    Ok(ConditionalVarianceReport {
        median: quantile(&variances, 0.5),
        quantile_05,
        floor,
        fraction,
        share_below,
        pass: quantile_05 >= threshold,
        variances,
    })
}
