//! Small-ball probabilities and reciprocal-Γ moments under the uniform law
//! on `[-1, 1]^m`.
//!
//! Both scans use common random numbers: one batch of uniform points is
//! drawn and every grid value is estimated from it. Monotonicity in the
//! grid parameter then holds sample by sample.

use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::jacobi::{expect_uniform, CubePolynomial};
use crate::rng::chunked_draws;
use crate::tensor::CoefficientTensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnticoncentrationError {
    #[error("scan grid must span at least {needed} decades with distinct positive values")]
    DegenerateGrid { needed: u32 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("functional is identically zero")]
    ZeroFunctional,
}

type Result<T> = std::result::Result<T, AnticoncentrationError>;

/// A function on the cube that can be evaluated pointwise together with its
/// carré du champ `Γ(Q) = Σ_i (1 − x_i²) (∂_i Q)²`.
pub trait CubeFunctional: Sync {
    fn num_vars(&self) -> usize;
    fn degree(&self) -> u32;
    /// `∫ Q² dμ`.
    fn second_moment(&self) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    /// `Γ(Q)(x)`; `grad` is scratch space of length `num_vars`.
    fn gamma(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl CubeFunctional for CoefficientTensor {
    fn num_vars(&self) -> usize {
        self.dimension()
    }

    fn degree(&self) -> u32 {
        CoefficientTensor::degree(self) as u32
    }

    fn second_moment(&self) -> f64 {
        self.norm_square() / 3f64.powi(CoefficientTensor::degree(self) as i32)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate_unchecked(x)
    }

    fn gamma(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.gradient_into(x, grad);
        x.iter().zip(grad.iter()).map(|(xi, g)| (1.0 - xi * xi) * g * g).sum()
    }
}

/// Floating-point image of a [`CubePolynomial`] with its partial
/// derivatives precomputed.
#[derive(Debug, Clone)]
pub struct FloatPolynomial {
    num_vars: usize,
    degree: u32,
    second_moment: f64,
    terms: Vec<(Vec<u32>, f64)>,
    partials: Vec<Vec<(Vec<u32>, f64)>>,
}

fn float_terms(p: &CubePolynomial) -> Vec<(Vec<u32>, f64)> {
    p.terms()
        .map(|(e, c)| (e.to_vec(), c.to_f64().unwrap_or(f64::NAN)))
        .collect()
}

fn eval_terms(terms: &[(Vec<u32>, f64)], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
        .sum()
}

impl FloatPolynomial {
    pub fn new(p: &CubePolynomial) -> Self {
        let m = p.num_vars();
        let square = p.try_mul(p).expect("same polynomial");
        Self {
            num_vars: m,
            degree: p.total_degree(),
            second_moment: expect_uniform(&square).to_f64().unwrap_or(f64::NAN),
            terms: float_terms(p),
            partials: (0..m).map(|i| float_terms(&p.derivative(i))).collect(),
        }
    }
}

impl From<&CubePolynomial> for FloatPolynomial {
    fn from(p: &CubePolynomial) -> Self {
        Self::new(p)
    }
}

impl CubeFunctional for FloatPolynomial {
    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn degree(&self) -> u32 {
        self.degree
    }

    fn second_moment(&self) -> f64 {
        self.second_moment
    }

    fn value(&self, x: &[f64]) -> f64 {
        eval_terms(&self.terms, x)
    }

    fn gamma(&self, x: &[f64], _grad: &mut [f64]) -> f64 {
        self.partials
            .iter()
            .zip(x)
            .map(|(d, xi)| {
                let g = eval_terms(d, x);
                (1.0 - xi * xi) * g * g
            })
            .sum()
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub param: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingScan {
    /// Strictly decreasing in `param`.
    pub grid: Vec<ScanPoint>,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub bound_holds: bool,
}

pub const MIN_SAMPLES: usize = 100;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(AnticoncentrationError::TooFewSamples { got: samples, min: MIN_SAMPLES });
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(AnticoncentrationError::NonPositive { name, value });
    }
    Ok(())
}

/// Evaluates `f(Q, x)` at `samples` uniform points of the cube.
fn cube_draws<Q, F>(q: &Q, samples: usize, seed: u64, f: F) -> Vec<f64>
where
    Q: CubeFunctional + ?Sized,
    F: Fn(&Q, &[f64], &mut [f64]) -> f64 + Sync,
{
    let m = q.num_vars();
    chunked_draws(seed, samples, |rng, n, out| {
        let mut x = vec![0.0; m];
        let mut scratch = vec![0.0; m];
        for _ in 0..n {
            x.iter_mut().for_each(|xi| *xi = rng.random_range(-1.0..=1.0));
            out.push(f(q, &x, &mut scratch));
        }
    })
}

fn proportion(hits: usize, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

fn mean_estimate(values: impl Iterator<Item = f64>, n: usize) -> Estimate {
    let (mut s, mut s2) = (0.0, 0.0);
    for v in values {
        s += v;
        s2 += v * v;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Estimate {
        estimate: mean,
        stderr: (var / nf).sqrt(),
    }
}

/// `μ{ |Q| ≤ radius }`.
pub fn small_ball_prob<Q: CubeFunctional + ?Sized>(q: &Q, radius: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_positive("radius", radius)?;
    check_samples(samples)?;
    let values = cube_draws(q, samples, seed, |q, x, _| q.value(x).abs());
    Ok(proportion(values.iter().filter(|&&v| v <= radius).count(), samples))
}

/// Sorts a grid decreasingly and checks it spans `decades` decades.
fn decreasing_grid(params: &[f64], decades: u32, name: &'static str) -> Result<Vec<f64>> {
    let degenerate = AnticoncentrationError::DegenerateGrid { needed: decades };
    for &p in params {
        check_positive(name, p)?;
    }
    let mut grid = params.to_vec();
    grid.sort_unstable_by(|a, b| b.total_cmp(a));
    grid.dedup();
    match (grid.first(), grid.last()) {
        (Some(&hi), Some(&lo)) if grid.len() >= 3 && hi / lo >= 10f64.powi(decades as i32) * (1.0 - 1e-9) => Ok(grid),
        _ => Err(degenerate),
    }
}

/// Least-squares slope of `ln y` against `ln x` over points with `y > 0`.
fn log_log_slope(points: &[ScanPoint]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.estimate > 0.0)
        .map(|p| (p.param.ln(), p.estimate.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Small-ball probabilities over a radius grid spanning at least three
/// decades. `fitted_constant` is the smallest `c` with
/// `estimate ≤ c k r^{1/k} (∫Q² dμ)^{−1/(2k)}` at every grid point.
pub fn cw_scan<Q: CubeFunctional + ?Sized>(q: &Q, radii: &[f64], samples: usize, seed: u64) -> Result<ScalingScan> {
    let grid = decreasing_grid(radii, 3, "radius")?;
    check_samples(samples)?;
    let k = q.degree().max(1) as f64;
    let m2 = q.second_moment();
    if m2.is_nan() || m2 <= 0.0 {
        return Err(AnticoncentrationError::ZeroFunctional);
    }
    let mut values = cube_draws(q, samples, seed, |q, x, _| q.value(x).abs());
    values.sort_unstable_by(f64::total_cmp);
    let points: Vec<ScanPoint> = grid
        .iter()
        .map(|&r| {
            let e = proportion(values.partition_point(|&v| v <= r), samples);
            ScanPoint { param: r, estimate: e.estimate, stderr: e.stderr }
        })
        .collect();
    let c_star = points
        .iter()
        .map(|p| p.estimate / (k * p.param.powf(1.0 / k) * m2.powf(-1.0 / (2.0 * k))))
        .fold(0.0, f64::max);
    Ok(ScalingScan {
        fitted_exponent: log_log_slope(&points),
        fitted_constant: c_star,
        bound_holds: c_star.is_finite(),
        grid: points,
    })
}

/// `E[δ / (Γ(Q) + δ)]`.
pub fn gamma_reciprocal_moment<Q: CubeFunctional + ?Sized>(
    q: &Q,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_positive("delta", delta)?;
    check_samples(samples)?;
    let gammas = cube_draws(q, samples, seed, |q, x, g| q.gamma(x, g));
    Ok(mean_estimate(gammas.iter().map(|g| delta / (g + delta)), samples))
}

/// Reciprocal-Γ moments over a δ grid spanning at least four decades.
/// `κ` is anchored at the largest δ, and `bound_holds` records whether
/// `estimate ≤ κ δ^{1/(2d+1)}` at every smaller δ.
pub fn claim3_scan<Q: CubeFunctional + ?Sized>(q: &Q, deltas: &[f64], samples: usize, seed: u64) -> Result<ScalingScan> {
    let grid = decreasing_grid(deltas, 4, "delta")?;
    check_samples(samples)?;
    let exponent = 1.0 / (2.0 * q.degree() as f64 + 1.0);
    let gammas = cube_draws(q, samples, seed, |q, x, g| q.gamma(x, g));
    let points: Vec<ScanPoint> = grid
        .iter()
        .map(|&d| {
            let e = mean_estimate(gammas.iter().map(|g| d / (g + d)), samples);
            ScanPoint { param: d, estimate: e.estimate, stderr: e.stderr }
        })
        .collect();
    let kappa = points[0].estimate / points[0].param.powf(exponent);
    let bound_holds = points
        .iter()
        .all(|p| p.estimate <= kappa * p.param.powf(exponent) * (1.0 + 1e-12));
    Ok(ScalingScan {
        fitted_exponent: log_log_slope(&points),
        fitted_constant: kappa,
        bound_holds,
        grid: points,
    })
}

/// Decade grid `hi, hi/10^{1/per_decade}, …, lo`.
pub fn log_grid(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|k| hi * 10f64.powf(-(k as f64) / per_decade as f64))
        .collect()
}
