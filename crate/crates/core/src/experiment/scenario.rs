//! Scenario registry and runner.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::config::{BinsSetting, ConfigError, ScenarioConfig, Thresholds};
use super::report::{read_report_str, report_to_string, Block, DistanceRow, MomentRow, ReportError, Table};
use crate::chaos::{moments_from_values, sample_chaos, ChaosError, MomentReport};
use crate::laws::{InputLaw, LawError};
use crate::metrics::{distance_report, Binning, MetricError, Reference};
use crate::rng::derive_seed;
use crate::tensor::{family_generate, CoefficientTensor, TensorError};
use crate::wick::{fourth_moment_wick, DEFAULT_WICK_BUDGET};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unsupported scenario {0:?}")]
    UnsupportedScenario(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    ProhorovNegative,
    ProhorovPositive,
    MooInvariance,
    TvInvariance,
    FourthMomentEquiv,
    DominantCounterexample,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::ProhorovNegative,
        ScenarioKind::ProhorovPositive,
        ScenarioKind::MooInvariance,
        ScenarioKind::TvInvariance,
        ScenarioKind::FourthMomentEquiv,
        ScenarioKind::DominantCounterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ProhorovNegative => "prohorov_negative",
            ScenarioKind::ProhorovPositive => "prohorov_positive",
            ScenarioKind::MooInvariance => "moo_invariance",
            ScenarioKind::TvInvariance => "tv_invariance",
            ScenarioKind::FourthMomentEquiv => "fourth_moment_equiv",
            ScenarioKind::DominantCounterexample => "dominant_counterexample",
        }
    }

    /// The statement a run provides evidence for.
    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::ProhorovNegative => {
                "singular inputs: total variation to the Gaussian stays near one"
            }
            ScenarioKind::ProhorovPositive => {
                "inputs with a density component: total variation to the Gaussian vanishes"
            }
            ScenarioKind::MooInvariance => {
                "low-influence chaoses have the same Kolmogorov and smooth-distance limits for any standardized inputs"
            }
            ScenarioKind::TvInvariance => {
                "low-influence chaoses of mixture inputs are close in total variation"
            }
            ScenarioKind::FourthMomentEquiv => {
                "vanishing fourth cumulant goes with Gaussian limits"
            }
            ScenarioKind::DominantCounterexample => {
                "a chaos carried by one pair of inputs stays away from the Gaussian"
            }
        }
    }

    /// Whether the scenario compares `law_x` against `law_y` rather than
    /// against `N(0, 1)`.
    pub fn two_sample(self) -> bool {
        matches!(self, ScenarioKind::MooInvariance | ScenarioKind::TvInvariance)
    }

    fn has_moments(self) -> bool {
        matches!(self, ScenarioKind::FourthMomentEquiv | ScenarioKind::DominantCounterexample)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::UnsupportedScenario(s.to_string()))
    }
}

/// One checked condition of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub kind: ScenarioKind,
    pub blocks: Vec<Block>,
    /// The CSV text of `blocks`.
    pub csv: String,
    pub predicates: Vec<PredicateOutcome>,
}

impl ScenarioRun {
    pub fn pass(&self) -> bool {
        self.predicates.iter().all(|p| p.pass)
    }
}

pub const STD_NORMAL_ID: &str = "N(0,1)";

fn binning_for(cfg: &ScenarioConfig, a: &[f64], b: Option<&[f64]>) -> Result<Binning, MetricError> {
    let auto = Binning::auto(a, b)?;
    let bins = match cfg.bins {
        BinsSetting::Auto => auto.bins,
        BinsSetting::Fixed(k) => k,
    };
    let (lo, hi) = cfg.range.unwrap_or((auto.lo, auto.hi));
    Binning::new(bins, lo, hi)
}

fn tensor_id(cfg: &ScenarioConfig, n: usize) -> String {
    format!("{}:d={}:n={}", cfg.family, cfg.degree, n)
}

/// Exact moments when the tensor fits the Wick budget and the inputs are
/// Gaussian; otherwise moments of the sampled batch.
fn moment_row(t: &CoefficientTensor, law: &InputLaw, sampled: &[f64], id: String) -> Result<MomentRow, ChaosError> {
    let gaussian = matches!(law.kind(), crate::laws::LawKind::Gaussian { .. });
    let report: MomentReport = if gaussian && t.len() <= DEFAULT_WICK_BUDGET {
        fourth_moment_wick(t)?
    } else {
        moments_from_values(sampled, 100)
    };
    Ok(MomentRow {
        tensor_id: id,
        law_id: law.to_string(),
        method: report.method.tag().to_string(),
        second: report.second,
        fourth: report.fourth,
        excess: report.excess,
        stderr: report.stderr.map(|s| s.excess),
    })
}

/// Runs a scenario. The name in `cfg.scenario` selects the registry entry.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, ExperimentError> {
    let kind: ScenarioKind = cfg.scenario.parse()?;
    let law_x = cfg.law_x.build()?.standardize()?;
    let law_y = match (&cfg.law_y, kind.two_sample()) {
        (Some(spec), true) => Some(spec.build()?.standardize()?),
        (None, true) => {
            return Err(ConfigError::Field {
                field: "law_y".into(),
                message: format!("required by scenario {kind}"),
            }
            .into())
        }
        (_, false) => None,
    };

    let mut distances = Vec::with_capacity(cfg.n_list.len());
    let mut moments = Vec::new();
    for &n in &cfg.n_list {
        let t = family_generate(cfg.family, cfg.degree, n)?;
        let xs = sample_chaos(&t, &law_x, cfg.samples, derive_seed(cfg.seed, &[n as u64, 0]))?;
        let ys = match &law_y {
            Some(l) => Some(sample_chaos(&t, l, cfg.samples, derive_seed(cfg.seed, &[n as u64, 1]))?),
            None => None,
        };
        let reference = match &ys {
            Some(b) => Reference::Batch(b.values()),
            None => Reference::StdNormal,
        };
        let binning = binning_for(cfg, xs.values(), ys.as_ref().map(|b| b.values()))?;
        let r = distance_report(xs.values(), reference, Some(binning), derive_seed(cfg.seed, &[n as u64, 2]))?;
        distances.push(DistanceRow {
            scenario: kind.name().to_string(),
            n,
            law_x: law_x.to_string(),
            law_y: law_y.as_ref().map_or_else(|| STD_NORMAL_ID.to_string(), |l| l.to_string()),
            samples: cfg.samples,
            ks: r.ks,
            w1: r.w1,
            fm_proxy: r.fm_proxy,
            tv_hist: r.tv_hist,
            bins: r.bins,
            bin_width: r.bin_width,
        });
        if kind.has_moments() {
            moments.push(moment_row(&t, &law_x, xs.values(), tensor_id(cfg, n))?);
        }
    }

    let mut blocks = vec![Block::new(kind.name(), cfg.seed, Table::Distance(distances))];
    if kind.has_moments() {
        blocks.push(Block::new(kind.name(), cfg.seed, Table::Moment(moments)));
    }
    let csv = report_to_string(&blocks)?;
    // Predicates read the serialized report, so they can be re-checked from
    // the file alone.
    let parsed = read_report_str(&csv)?;
    let predicates = evaluate_predicates(kind, &parsed, &cfg.thresholds)?;
    Ok(ScenarioRun { kind, blocks, csv, predicates })
}

/// Runs on a dedicated pool of `workers` threads. Output does not depend on
/// the worker count.
pub fn run_scenario_with_workers(cfg: &ScenarioConfig, workers: usize) -> Result<ScenarioRun, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| run_scenario(cfg))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Evaluates the pass predicates of `kind` on parsed report blocks.
pub fn evaluate_predicates(
    kind: ScenarioKind,
    blocks: &[Block],
    th: &Thresholds,
) -> Result<Vec<PredicateOutcome>, ReportError> {
    let mut dist: Vec<&DistanceRow> = Vec::new();
    let mut mom: Vec<&MomentRow> = Vec::new();
    for b in blocks.iter().filter(|b| b.scenario == kind.name()) {
        match &b.table {
            Table::Distance(r) => dist.extend(r),
            Table::Moment(r) => mom.extend(r),
            Table::Scan(_) => {}
        }
    }
    if dist.is_empty() {
        return Err(ReportError::Malformed(format!("no distance rows for {kind}")));
    }
    let tv: Vec<f64> = dist.iter().map(|r| r.tv_hist).collect();
    let last_tv = *tv.last().expect("nonempty");
    let outcome = |name: &str, pass: bool, detail: String| PredicateOutcome {
        name: name.to_string(),
        pass,
        detail,
    };
    let out = match kind {
        ScenarioKind::ProhorovNegative => vec![outcome(
            "tv_hist >= prohorov_negative at every n",
            tv.iter().all(|&t| t >= th.prohorov_negative),
            format!("tv_hist {} vs {}", fmt_list(&tv), th.prohorov_negative),
        )],
        ScenarioKind::ProhorovPositive => vec![
            outcome("tv_hist strictly decreasing in n", strictly_decreasing(&tv), format!("tv_hist {}", fmt_list(&tv))),
            outcome(
                "tv_hist <= prohorov_positive at the largest n",
                last_tv <= th.prohorov_positive,
                format!("{last_tv:.4} vs {}", th.prohorov_positive),
            ),
        ],
        ScenarioKind::MooInvariance => {
            let ks: Vec<f64> = dist.iter().map(|r| r.ks).collect();
            let fm: Vec<f64> = dist.iter().map(|r| r.fm_proxy).collect();
            vec![
                outcome("ks <= moo_ks at every n", ks.iter().all(|&k| k <= th.moo_ks), format!("ks {} vs {}", fmt_list(&ks), th.moo_ks)),
                outcome(
                    "fm_proxy <= moo_fm at every n",
                    fm.iter().all(|&f| f <= th.moo_fm),
                    format!("fm_proxy {} vs {}", fmt_list(&fm), th.moo_fm),
                ),
            ]
        }
        ScenarioKind::TvInvariance => vec![
            outcome("tv_hist strictly decreasing in n", strictly_decreasing(&tv), format!("tv_hist {}", fmt_list(&tv))),
            outcome(
                "tv_hist <= tv_invariance at the largest n",
                last_tv <= th.tv_invariance,
                format!("{last_tv:.4} vs {}", th.tv_invariance),
            ),
        ],
        ScenarioKind::FourthMomentEquiv => {
            let excess: Vec<f64> = mom.iter().map(|r| r.excess).collect();
            vec![
                outcome(
                    "fourth cumulant strictly decreasing in n",
                    !excess.is_empty() && strictly_decreasing(&excess),
                    format!("excess {}", fmt_list(&excess)),
                ),
                outcome("tv_hist strictly decreasing in n", strictly_decreasing(&tv), format!("tv_hist {}", fmt_list(&tv))),
            ]
        }
        ScenarioKind::DominantCounterexample => vec![outcome(
            "tv_hist >= dominant at every n",
            tv.iter().all(|&t| t >= th.dominant),
            format!("tv_hist {} vs {}", fmt_list(&tv), th.dominant),
        )],
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(text).unwrap()
    }

    const SMALL: &str = r#"
scenario = "prohorov_negative"
degree = 1
family = "mean_field"
n_list = [10, 50]
samples = 20000
seed = 3
bins = 400
range = [-4.0, 4.0]
law_x = { type = "rademacher" }
"#;

    #[test]
    fn registry_names_roundtrip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
            assert!(!k.description().is_empty());
        }
        assert!(matches!("unknown".parse::<ScenarioKind>(), Err(ExperimentError::UnsupportedScenario(_))));
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let cfg = config(&SMALL.replace("prohorov_negative", "unknown"));
        assert!(matches!(run_scenario(&cfg), Err(ExperimentError::UnsupportedScenario(s)) if s == "unknown"));
    }

    #[test]
    fn two_sample_needs_law_y() {
        let cfg = config(&SMALL.replace("prohorov_negative", "moo_invariance"));
        match run_scenario(&cfg) {
            Err(ExperimentError::Config(ConfigError::Field { field, .. })) => assert_eq!(field, "law_y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn laws_are_standardized_before_sampling() {
        let scaled = config(&SMALL.replace(r#"{ type = "rademacher" }"#, r#"{ type = "discrete", atoms = [[-3.0, 0.5], [3.0, 0.5]] }"#));
        let run = run_scenario(&scaled).unwrap();
        let Table::Distance(rows) = &run.blocks[0].table else { panic!() };
        assert_eq!(rows[0].law_x, "discrete(-1@0.5;1@0.5)");
        assert!(run.pass(), "{:?}", run.predicates);
        let point = config(&SMALL.replace(r#"{ type = "rademacher" }"#, r#"{ type = "discrete", atoms = [[2.0, 1.0]] }"#));
        assert!(matches!(run_scenario(&point), Err(ExperimentError::Law(LawError::DegenerateLaw))));
    }

    #[test]
    fn small_run_is_deterministic_and_self_auditing() {
        let cfg = config(SMALL);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario_with_workers(&cfg, 3).unwrap();
        assert_eq!(a.csv, b.csv);
        assert!(a.pass(), "{:?}", a.predicates);
        let reparsed = read_report_str(&a.csv).unwrap();
        assert_eq!(evaluate_predicates(a.kind, &reparsed, &cfg.thresholds).unwrap(), a.predicates);
        assert_eq!(a.csv.lines().count(), 4);
    }

    #[test]
    fn predicates_fail_on_doctored_rows() {
        let cfg = config(SMALL);
        let run = run_scenario(&cfg).unwrap();
        let mut blocks = run.blocks.clone();
        if let Table::Distance(rows) = &mut blocks[0].table {
            rows[0].tv_hist = 0.5;
        }
        let p = evaluate_predicates(run.kind, &blocks, &cfg.thresholds).unwrap();
        assert!(!p[0].pass);
    }

    #[test]
    fn moment_rows_use_wick_for_gaussian_inputs() {
        let text = r#"
scenario = "dominant_counterexample"
degree = 2
family = "dominant_pair"
n_list = [4, 16]
samples = 20000
law_x = { type = "gaussian" }
"#;
        let run = run_scenario(&config(text)).unwrap();
        let Table::Moment(rows) = &run.blocks[1].table else { panic!() };
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "wick_exact");
        assert!((rows[0].excess - 6.0).abs() < 1e-12);
        assert_eq!(rows[0].tensor_id, "dominant_pair:d=2:n=4");
    }
}
