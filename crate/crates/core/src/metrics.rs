//! Empirical distances between sampled laws.
//!
//! * Kolmogorov: exact sup-distance of empirical CDFs, or of one empirical
//!   CDF against Φ.
//! * 1-Wasserstein: exact in one dimension via order statistics; its
//!   truncation `min(W1, 2)` stands in for the bounded-Lipschitz
//!   (Fortet–Mourier) distance.
//! * Total variation: common-binning histogram estimate. Two empirical
//!   measures are always at TV distance one, so binning is what makes the
//!   estimate meaningful between continuous laws.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::batch::{Provenance, SampleBatch};
use crate::rng::chunked_draws;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("invalid histogram range: {0}")]
    InvalidRange(String),
    #[error("smoothing scale must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn std_normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(u)
}

/// What a batch is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Batch(&'a [f64]),
    StdNormal,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

pub fn ks_distance(a: &[f64], reference: Reference<'_>) -> Result<f64, MetricError> {
    match reference {
        Reference::StdNormal => ks_to_std_normal(a),
        Reference::Batch(b) => ks_two_sample(a, b),
    }
}

/// `sup_x |F_n(x) − Φ(x)|`.
pub fn ks_to_std_normal(a: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let xs = sorted(a);
    let n = xs.len() as f64;
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let phi = std_normal_cdf(xs[i]);
        best = best
            .max((i as f64 / n - phi).abs())
            .max((j as f64 / n - phi).abs());
        i = j;
    }
    Ok(best)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        best = best.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(best)
}

/// Exact empirical 1-Wasserstein distance. Unequal batches are reduced to a
/// common size by seeded subsampling of the larger one.
pub fn w1_distance(a: &[f64], b: &[f64], seed: u64) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let subsample = |big: &[f64], k: usize| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample_indices(&mut rng, big.len(), k).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| big[i]).collect()
    };
    let (xs, ys) = match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Equal => (sorted(a), sorted(b)),
        std::cmp::Ordering::Greater => (sorted(&subsample(a, b.len())), sorted(b)),
        std::cmp::Ordering::Less => (sorted(a), sorted(&subsample(b, a.len()))),
    };
    let total: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / xs.len() as f64)
}

/// `∫ |F_n − Φ| dx`, computed exactly through the quantile coupling.
pub fn w1_to_std_normal(a: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let xs = sorted(a);
    let n = xs.len() as f64;
    // ∫_lo^hi (c − z) φ(z) dz with Φ(lo), Φ(hi) supplied.
    let signed = |c: f64, lo: f64, hi: f64, cdf_lo: f64, cdf_hi: f64| {
        c * (cdf_hi - cdf_lo) + density_or_zero(hi) - density_or_zero(lo)
    };
    let mut total = 0.0;
    let mut z_lo = f64::NEG_INFINITY;
    for (k, &c) in xs.iter().enumerate() {
        let (u_lo, u_hi) = (k as f64 / n, (k + 1) as f64 / n);
        let z_hi = std_normal_quantile(u_hi);
        total += if c <= z_lo {
            -signed(c, z_lo, z_hi, u_lo, u_hi)
        } else if c >= z_hi {
            signed(c, z_lo, z_hi, u_lo, u_hi)
        } else {
            let pc = std_normal_cdf(c);
            signed(c, z_lo, c, u_lo, pc) - signed(c, c, z_hi, pc, u_hi)
        };
        z_lo = z_hi;
    }
    Ok(total)
}

fn density_or_zero(z: f64) -> f64 {
    if z.is_finite() {
        std_normal_pdf(z)
    } else {
        0.0
    }
}

pub fn w1_to_reference(a: &[f64], reference: Reference<'_>, seed: u64) -> Result<f64, MetricError> {
    match reference {
        Reference::StdNormal => w1_to_std_normal(a),
        Reference::Batch(b) => w1_distance(a, b, seed),
    }
}

/// Equal-width bins on `[lo, hi)`; mass outside is lumped into one tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Binning {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self, MetricError> {
        if bins < 10 {
            return Err(MetricError::InvalidRange(format!("need at least 10 bins, got {bins}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MetricError::InvalidRange(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { bins, lo, hi })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// `⌈n^{1/3}⌉` bins clipped to `[50, 1000]`, over the pooled mean ± 6
    /// pooled standard deviations.
    pub fn auto(a: &[f64], b: Option<&[f64]>) -> Result<Self, MetricError> {
        if a.is_empty() || b.is_some_and(|b| b.is_empty()) {
            return Err(MetricError::EmptyBatch);
        }
        let n = b.map_or(a.len(), |b| a.len().min(b.len()));
        let bins = ((n as f64).cbrt().ceil() as usize).clamp(50, 1000);
        let pooled = || a.iter().chain(b.unwrap_or(&[]).iter());
        let count = (a.len() + b.map_or(0, |b| b.len())) as f64;
        let mean = pooled().sum::<f64>() / count;
        let var = pooled().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
        let sd = var.sqrt().max(1e-12);
        Self::new(bins, mean - 6.0 * sd, mean + 6.0 * sd)
    }

    /// Per-bin probabilities and tail mass of an empirical batch.
    fn histogram(&self, xs: &[f64]) -> (Vec<f64>, f64) {
        let mut counts = vec![0usize; self.bins];
        let mut tail = 0usize;
        let w = self.width();
        for &x in xs {
            if x >= self.lo && x < self.hi {
                let k = (((x - self.lo) / w) as usize).min(self.bins - 1);
                counts[k] += 1;
            } else {
                tail += 1;
            }
        }
        let n = xs.len() as f64;
        (
            counts.into_iter().map(|c| c as f64 / n).collect(),
            tail as f64 / n,
        )
    }

    fn std_normal_masses(&self) -> (Vec<f64>, f64) {
        let w = self.width();
        let cdf: Vec<f64> = (0..=self.bins)
            .map(|k| std_normal_cdf(self.lo + k as f64 * w))
            .collect();
        let masses = cdf.windows(2).map(|c| c[1] - c[0]).collect();
        let tail = std_normal_cdf(self.lo) + std_normal_cdf(-self.hi);
        (masses, tail)
    }

    /// Largest Φ-mass of a single bin.
    pub fn max_std_normal_mass(&self) -> f64 {
        self.std_normal_masses().0.into_iter().fold(0.0, f64::max)
    }
}

/// `½ Σ_b |p̂_b − q̂_b| + ½ |tail_a − tail_b|`.
pub fn tv_histogram(a: &[f64], reference: Reference<'_>, binning: Binning) -> Result<f64, MetricError> {
    if a.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let (p, tail_p) = binning.histogram(a);
    let (q, tail_q) = match reference {
        Reference::StdNormal => binning.std_normal_masses(),
        Reference::Batch([]) => return Err(MetricError::EmptyBatch),
        Reference::Batch(b) => binning.histogram(b),
    };
    let body: f64 = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum();
    Ok((0.5 * body + 0.5 * (tail_p - tail_q).abs()).clamp(0.0, 1.0))
}

/// Adds independent `N(0, alpha²)` noise to every draw, i.e. convolves the
/// empirical law with the Gaussian kernel of scale `alpha`.
pub fn smooth_with_gaussian(a: &SampleBatch, alpha: f64, seed: u64) -> Result<SampleBatch, MetricError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MetricError::AlphaOutOfRange(alpha));
    }
    let xs = a.values();
    let noise = chunked_draws(seed, xs.len(), |rng, n, out| {
        out.extend((0..n).map(|_| -> f64 { StandardNormal.sample(rng) }))
    });
    let values: Vec<f64> = xs.iter().zip(noise).map(|(x, z)| x + alpha * z).collect();
    let prov = a.provenance();
    Ok(SampleBatch::new(
        values,
        Provenance {
            law: format!("{}*N(0;{alpha}^2)", prov.law),
            seed,
            count: prov.count,
        },
    ))
}

/// The three distances plus estimator metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub ks: f64,
    pub w1: f64,
    /// `min(w1, 2)`.
    pub fm_proxy: f64,
    pub tv_hist: f64,
    pub bins: usize,
    pub bin_width: f64,
    pub counts: (usize, usize),
}

/// Computes every distance between `a` and `reference`. `binning = None`
/// picks [`Binning::auto`].
pub fn distance_report(
    a: &[f64],
    reference: Reference<'_>,
    binning: Option<Binning>,
    seed: u64,
) -> Result<DistanceReport, MetricError> {
    let other = match reference {
        Reference::Batch(b) => Some(b),
        Reference::StdNormal => None,
    };
    let binning = match binning {
        Some(b) => b,
        None => Binning::auto(a, other)?,
    };
    let ks = ks_distance(a, reference)?;
    let w1 = w1_to_reference(a, reference, seed)?;
    let tv_hist = tv_histogram(a, reference, binning)?;
    Ok(DistanceReport {
        ks,
        w1,
        fm_proxy: w1.min(2.0),
        tv_hist,
        bins: binning.bins,
        bin_width: binning.width(),
        counts: (a.len(), other.map_or(0, |b| b.len())),
    })
}
