//! One-dimensional input laws.
//!
//! Besides the usual building blocks (Gaussian, Rademacher, uniform, finite
//! atomic laws) this module carries the uniform-mixture class
//! `X = ε(αU + x0) + (1 − ε)V` with `ε ~ Bernoulli(p)`, `U ~ U[-1, 1]` and an
//! arbitrary independent background `V`, plus the witness bookkeeping that
//! tracks membership of that class under transformations.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{Provenance, SampleBatch};
use crate::rng::{chunked_draws, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid law parameter: {0}")]
    InvalidParameter(String),
    #[error("law has zero variance")]
    DegenerateLaw,
    #[error("density floor infeasible: 2·c·alpha = {0} > 1")]
    InfeasibleFloor(f64),
    #[error("invalid downgrade: need 0 < q <= p and 0 < beta <= alpha")]
    InvalidDowngrade,
    #[error("affine map with zero scale")]
    ZeroScale,
    #[error("law is not a uniform mixture")]
    NotMixture,
    #[error("sample count {got} below minimum {min}")]
    TooFewSamples { got: usize, min: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    Gaussian {
        mean: f64,
        std_dev: f64,
    },
    /// Fair ±1.
    Rademacher,
    ScaledUniform {
        center: f64,
        half_width: f64,
    },
    FiniteDiscrete {
        atoms: Vec<(f64, f64)>,
    },
    Mixture {
        p: f64,
        alpha: f64,
        x0: f64,
        background: Box<InputLaw>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputLaw {
    kind: LawKind,
    declared_moments: Option<(f64, f64)>,
}

impl InputLaw {
    fn new(kind: LawKind) -> Self {
        Self {
            kind,
            declared_moments: None,
        }
    }

    pub fn std_gaussian() -> Self {
        Self::new(LawKind::Gaussian {
            mean: 0.0,
            std_dev: 1.0,
        })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self, LawError> {
        if !(mean.is_finite() && std_dev.is_finite() && std_dev > 0.0) {
            return Err(LawError::InvalidParameter(format!(
                "gaussian needs finite mean and std_dev > 0 (got {mean}, {std_dev})"
            )));
        }
        Ok(Self::new(LawKind::Gaussian { mean, std_dev }))
    }

    pub fn rademacher() -> Self {
        Self::new(LawKind::Rademacher)
    }

    pub fn uniform(center: f64, half_width: f64) -> Result<Self, LawError> {
        if !(center.is_finite() && half_width.is_finite() && half_width > 0.0) {
            return Err(LawError::InvalidParameter(format!(
                "uniform needs finite center and half_width > 0 (got {center}, {half_width})"
            )));
        }
        Ok(Self::new(LawKind::ScaledUniform { center, half_width }))
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self, LawError> {
        if atoms.is_empty() {
            return Err(LawError::InvalidParameter("discrete law needs atoms".into()));
        }
        if atoms
            .iter()
            .any(|&(x, p)| !x.is_finite() || !p.is_finite() || p < 0.0)
        {
            return Err(LawError::InvalidParameter(
                "atoms need finite points and nonnegative probabilities".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LawError::InvalidParameter(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::new(LawKind::FiniteDiscrete { atoms }))
    }

    pub fn mixture(p: f64, alpha: f64, x0: f64, background: InputLaw) -> Result<Self, LawError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(LawError::InvalidParameter(format!(
                "mixture weight p must lie in (0, 1], got {p}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite() && x0.is_finite()) {
            return Err(LawError::InvalidParameter(format!(
                "mixture needs alpha > 0 and finite x0 (got {alpha}, {x0})"
            )));
        }
        Ok(Self::new(LawKind::Mixture {
            p,
            alpha,
            x0,
            background: Box::new(background),
        }))
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn declared_moments(&self) -> Option<(f64, f64)> {
        self.declared_moments
    }

    /// True once `standardize` has certified mean 0 and variance 1.
    pub fn is_standardized(&self) -> bool {
        self.declared_moments == Some((0.0, 1.0))
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            LawKind::Gaussian { mean, .. } => *mean,
            LawKind::Rademacher => 0.0,
            LawKind::ScaledUniform { center, .. } => *center,
            LawKind::FiniteDiscrete { atoms } => atoms.iter().map(|(x, p)| x * p).sum(),
            LawKind::Mixture {
                p, x0, background, ..
            } => p * x0 + (1.0 - p) * background.mean(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            LawKind::Gaussian { mean, std_dev } => mean * mean + std_dev * std_dev,
            LawKind::Rademacher => 1.0,
            LawKind::ScaledUniform { center, half_width } => {
                center * center + half_width * half_width / 3.0
            }
            LawKind::FiniteDiscrete { atoms } => atoms.iter().map(|(x, p)| x * x * p).sum(),
            LawKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => p * (x0 * x0 + alpha * alpha / 3.0) + (1.0 - p) * background.second_moment(),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.kind {
            LawKind::Gaussian { std_dev, .. } => std_dev * std_dev,
            LawKind::Rademacher => 1.0,
            LawKind::ScaledUniform { half_width, .. } => half_width * half_width / 3.0,
            _ => {
                let m = self.mean();
                (self.second_moment() - m * m).max(0.0)
            }
        }
    }

    /// Law of `a·X + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self, LawError> {
        if a == 0.0 {
            return Err(LawError::ZeroScale);
        }
        let kind = match &self.kind {
            LawKind::Gaussian { mean, std_dev } => LawKind::Gaussian {
                mean: a * mean + b,
                std_dev: a.abs() * std_dev,
            },
            LawKind::Rademacher if a == 1.0 && b == 0.0 => LawKind::Rademacher,
            LawKind::Rademacher => LawKind::FiniteDiscrete {
                atoms: vec![(b - a, 0.5), (b + a, 0.5)],
            },
            LawKind::ScaledUniform { center, half_width } => LawKind::ScaledUniform {
                center: a * center + b,
                half_width: a.abs() * half_width,
            },
            LawKind::FiniteDiscrete { atoms } => LawKind::FiniteDiscrete {
                atoms: atoms.iter().map(|&(x, p)| (a * x + b, p)).collect(),
            },
            LawKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => LawKind::Mixture {
                p: *p,
                alpha: a.abs() * alpha,
                x0: a * x0 + b,
                background: Box::new(background.affine(a, b)?),
            },
        };
        Ok(Self::new(kind))
    }

    /// Affine image with mean 0 and variance 1; declares those moments.
    pub fn standardize(&self) -> Result<Self, LawError> {
        let var = self.variance();
        if var.is_nan() || var <= 0.0 || var.is_infinite() {
            return Err(LawError::DegenerateLaw);
        }
        let (m, s) = (self.mean(), var.sqrt());
        let mut out = if m == 0.0 && s == 1.0 {
            Self::new(self.kind.clone())
        } else {
            self.affine(1.0 / s, -m / s)?
        };
        out.declared_moments = Some((0.0, 1.0));
        Ok(out)
    }

    /// Mixture parameters as a class witness, if this law is a mixture.
    pub fn c_class_witness(&self) -> Option<CClassWitness> {
        match &self.kind {
            LawKind::Mixture { p, alpha, x0, .. } => Some(CClassWitness {
                p: *p,
                alpha: *alpha,
                x0: *x0,
            }),
            _ => None,
        }
    }

    /// One draw. Mixtures consume ε, then U, then V, even when ε = 1.
    pub fn sample_one(&self, rng: &mut StreamRng) -> f64 {
        self.sample_tagged(rng).1
    }

    /// One draw plus whether it came from a mixture's uniform arm.
    pub(crate) fn sample_tagged(&self, rng: &mut StreamRng) -> (bool, f64) {
        match &self.kind {
            LawKind::Gaussian { mean, std_dev } => {
                let z: f64 = rng.sample(StandardNormal);
                (false, mean + std_dev * z)
            }
            LawKind::Rademacher => (false, if rng.random::<bool>() { 1.0 } else { -1.0 }),
            LawKind::ScaledUniform { center, half_width } => {
                (false, center + half_width * symmetric_unit(rng))
            }
            LawKind::FiniteDiscrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return (false, x);
                    }
                }
                (false, atoms.last().expect("nonempty atoms").0)
            }
            LawKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => {
                let eps = rng.random::<f64>() < *p;
                let u = symmetric_unit(rng);
                let v = background.sample_one(rng);
                if eps {
                    (true, alpha * u + x0)
                } else {
                    (false, v)
                }
            }
        }
    }

    /// Lebesgue decomposition into an absolutely continuous part and atoms.
    pub fn lebesgue(&self) -> LebesgueDecomposition {
        match &self.kind {
            LawKind::Gaussian { mean, std_dev } => LebesgueDecomposition {
                u: 1.0,
                density: Some(Density::Gaussian {
                    mean: *mean,
                    std_dev: *std_dev,
                }),
                singular_atoms: Vec::new(),
            },
            LawKind::ScaledUniform { center, half_width } => LebesgueDecomposition {
                u: 1.0,
                density: Some(Density::Uniform {
                    center: *center,
                    half_width: *half_width,
                }),
                singular_atoms: Vec::new(),
            },
            LawKind::Rademacher => LebesgueDecomposition {
                u: 0.0,
                density: None,
                singular_atoms: vec![(-1.0, 0.5), (1.0, 0.5)],
            },
            LawKind::FiniteDiscrete { atoms } => LebesgueDecomposition {
                u: 0.0,
                density: None,
                singular_atoms: atoms.clone(),
            },
            LawKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => {
                let bg = background.lebesgue();
                let u = p + (1.0 - p) * bg.u;
                let mut parts = vec![(
                    p / u,
                    Density::Uniform {
                        center: *x0,
                        half_width: *alpha,
                    },
                )];
                if let Some(g) = bg.density {
                    if bg.u > 0.0 {
                        parts.push(((1.0 - p) * bg.u / u, g));
                    }
                }
                let singular_atoms = if u < 1.0 { bg.singular_atoms } else { Vec::new() };
                LebesgueDecomposition {
                    u,
                    density: Some(Density::Mixture(parts)),
                    singular_atoms,
                }
            }
        }
    }
}

fn symmetric_unit(rng: &mut StreamRng) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for InputLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Gaussian { mean, std_dev } if *mean == 0.0 && *std_dev == 1.0 => {
                f.write_str("gaussian")?
            }
            LawKind::Gaussian { mean, std_dev } => {
                write!(f, "gaussian({};{})", fmt_num(*mean), fmt_num(*std_dev))?
            }
            LawKind::Rademacher => f.write_str("rademacher")?,
            LawKind::ScaledUniform { center, half_width } => {
                write!(f, "uniform({};{})", fmt_num(*center), fmt_num(*half_width))?
            }
            LawKind::FiniteDiscrete { atoms } => {
                f.write_str("discrete(")?;
                for (i, (x, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{}@{}", fmt_num(*x), fmt_num(*p))?;
                }
                f.write_str(")")?
            }
            LawKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => write!(
                f,
                "mixture({};{};{};{})",
                fmt_num(*p),
                fmt_num(*alpha),
                fmt_num(*x0),
                background
            )?,
        }
        Ok(())
    }
}

/// Closed-form densities appearing in Lebesgue decompositions.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Gaussian { mean: f64, std_dev: f64 },
    Uniform { center: f64, half_width: f64 },
    Mixture(Vec<(f64, Density)>),
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Gaussian { mean, std_dev } => {
                let z = (x - mean) / std_dev;
                (-0.5 * z * z).exp() / (std_dev * (2.0 * std::f64::consts::PI).sqrt())
            }
            Density::Uniform { center, half_width } => {
                if (x - center).abs() <= *half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            Density::Mixture(parts) => parts.iter().map(|(w, d)| w * d.eval(x)).sum(),
        }
    }

    /// Points where the density may be discontinuous or, for Gaussians, a
    /// window wide enough that the mass outside is negligible.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            Density::Gaussian { mean, std_dev } => {
                vec![mean - 40.0 * std_dev, *mean, mean + 40.0 * std_dev]
            }
            Density::Uniform { center, half_width } => {
                vec![center - half_width, center + half_width]
            }
            Density::Mixture(parts) => parts.iter().flat_map(|(_, d)| d.breakpoints()).collect(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// `F(x) = u ∫_{-∞}^x g + (1 − u) G(x)` with `G` purely atomic here.
#[derive(Debug, Clone, PartialEq)]
pub struct LebesgueDecomposition {
    pub u: f64,
    /// Present iff `u > 0`.
    pub density: Option<Density>,
    pub singular_atoms: Vec<(f64, f64)>,
}

/// Parameters `(p, alpha, x0)` certifying membership in the uniform-mixture
/// class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CClassWitness {
    pub p: f64,
    pub alpha: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessOp {
    /// Shrink the window to `beta` and the weight to `q·beta/alpha`.
    Downgrade { q: f64, beta: f64 },
    /// `x ↦ a·x + b`.
    Affine { a: f64, b: f64 },
}

/// A law whose absolutely continuous part has density at least `c` on
/// `[x0 - alpha, x0 + alpha]` is a mixture with weight `2·c·alpha`.
pub fn witness_from_density_floor(c: f64, alpha: f64, x0: f64) -> Result<CClassWitness, LawError> {
    if !(c > 0.0 && alpha > 0.0 && x0.is_finite()) {
        return Err(LawError::InvalidParameter(format!(
            "density floor needs c > 0 and alpha > 0 (got {c}, {alpha})"
        )));
    }
    let p = 2.0 * c * alpha;
    if p > 1.0 {
        return Err(LawError::InfeasibleFloor(p));
    }
    Ok(CClassWitness { p, alpha, x0 })
}

pub fn witness_transform(w: CClassWitness, op: WitnessOp) -> Result<CClassWitness, LawError> {
    match op {
        WitnessOp::Downgrade { q, beta } => {
            if !(q > 0.0 && q <= w.p && beta > 0.0 && beta <= w.alpha) {
                return Err(LawError::InvalidDowngrade);
            }
            Ok(CClassWitness {
                p: q * beta / w.alpha,
                alpha: beta,
                x0: w.x0,
            })
        }
        WitnessOp::Affine { a, b } => {
            if a == 0.0 {
                return Err(LawError::ZeroScale);
            }
            Ok(CClassWitness {
                p: w.p,
                alpha: a.abs() * w.alpha,
                x0: a * w.x0 + b,
            })
        }
    }
}

/// Draws `count` i.i.d. values, deterministic in `(law, count, seed)`.
pub fn sample(law: &InputLaw, count: usize, seed: u64) -> Result<SampleBatch, LawError> {
    if count == 0 {
        return Err(LawError::TooFewSamples { got: 0, min: 1 });
    }
    let values = chunked_draws(seed, count, |rng, n, out| {
        out.extend((0..n).map(|_| law.sample_one(rng)))
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

pub const ARM_CHECK_BINS: usize = 50;

/// Flatness check of a mixture's uniform arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCheckReport {
    pub uniform_arm_draws: usize,
    pub background_arm_draws: usize,
    /// Empirical density of the uniform-arm draws per bin on
    /// `[x0 - alpha, x0 + alpha]`.
    pub uniform_arm_density: Vec<f64>,
    /// Largest |count − expected| / binomial standard error over bins.
    pub max_z: f64,
    pub pass: bool,
}

impl ArmCheckReport {
    fn from_draws(x0: f64, alpha: f64, draws: impl IntoIterator<Item = (bool, f64)>) -> Self {
        let mut counts = vec![0usize; ARM_CHECK_BINS];
        let (mut arm, mut bg) = (0usize, 0usize);
        let width = 2.0 * alpha / ARM_CHECK_BINS as f64;
        let mut outside = false;
        for (tag, x) in draws {
            if !tag {
                bg += 1;
                continue;
            }
            arm += 1;
            let pos = (x - (x0 - alpha)) / width;
            if !(0.0..=ARM_CHECK_BINS as f64).contains(&pos) {
                outside = true;
                continue;
            }
            counts[(pos as usize).min(ARM_CHECK_BINS - 1)] += 1;
        }
        let q = 1.0 / ARM_CHECK_BINS as f64;
        let expected = arm as f64 * q;
        let se = (arm as f64 * q * (1.0 - q)).sqrt();
        let max_z = if arm == 0 {
            0.0
        } else {
            counts
                .iter()
                .map(|&c| (c as f64 - expected).abs() / se)
                .fold(0.0, f64::max)
        };
        let uniform_arm_density = counts
            .iter()
            .map(|&c| if arm == 0 { 0.0 } else { c as f64 / (arm as f64 * width) })
            .collect();
        Self {
            uniform_arm_draws: arm,
            background_arm_draws: bg,
            uniform_arm_density,
            max_z,
            pass: !outside && max_z <= 5.0,
        }
    }
}

/// Samples a mixture and checks that draws from its uniform arm are flat on
/// `[x0 - alpha, x0 + alpha]` within five standard errors per bin.
pub fn mixture_arm_check(law: &InputLaw, samples: usize, seed: u64) -> Result<ArmCheckReport, LawError> {
    let w = law.c_class_witness().ok_or(LawError::NotMixture)?;
    const MIN: usize = 100_000;
    if samples < MIN {
        return Err(LawError::TooFewSamples { got: samples, min: MIN });
    }
    let tagged = chunked_draws(seed, samples, |rng, n, out| {
        out.extend((0..n).map(|_| law.sample_tagged(rng)))
    });
    Ok(ArmCheckReport::from_draws(w.x0, w.alpha, tagged))
}

fn default_one() -> f64 {
    1.0
}

/// Configuration-file form of a law.
///
/// ```json
/// {"type": "mixture", "p": 0.5, "alpha": 1.0, "x0": 0.0,
///  "background": {"type": "rademacher"}, "standardize": true}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    #[serde(flatten)]
    pub kind: LawSpecKind,
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LawSpecKind {
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "default_one")]
        std_dev: f64,
    },
    Rademacher,
    Uniform {
        #[serde(default)]
        center: f64,
        #[serde(default = "default_one")]
        half_width: f64,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    Mixture {
        p: f64,
        alpha: f64,
        #[serde(default)]
        x0: f64,
        background: Box<LawSpec>,
    },
}

impl LawSpec {
    pub fn build(&self) -> Result<InputLaw, LawError> {
        let law = match &self.kind {
            LawSpecKind::Gaussian { mean, std_dev } => InputLaw::gaussian(*mean, *std_dev)?,
            LawSpecKind::Rademacher => InputLaw::rademacher(),
            LawSpecKind::Uniform { center, half_width } => InputLaw::uniform(*center, *half_width)?,
            LawSpecKind::Discrete { atoms } => InputLaw::discrete(atoms.clone())?,
            LawSpecKind::Mixture {
                p,
                alpha,
                x0,
                background,
            } => InputLaw::mixture(*p, *alpha, *x0, background.build()?)?,
        };
        if self.standardize {
            law.standardize()
        } else {
            Ok(law)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}
