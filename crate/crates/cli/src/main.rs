use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polychaos::anticoncentration::{claim3_scan, cw_scan, log_grid, CubeFunctional, FloatPolynomial, ScalingScan};
use polychaos::chaos::{fourth_moment_enumeration, fourth_moment_mc, MomentReport};
use polychaos::experiment::{
    load_config, report_to_string, run_scenario_with_workers, write_report_file, Block, DistanceRow, MomentRow,
    ScanRow, Table,
};
use polychaos::jacobi::{eigen_project, identity_sweep, poincare_gap, CubePolynomial};
use polychaos::laws::LawSpec;
use polychaos::metrics::{distance_report, Binning, Reference};
use polychaos::rng::derive_seed;
use polychaos::wick::fourth_moment_wick;
use polychaos::{family_generate, CoefficientTensor, Family, InputLaw, SampleBatch};

/// Polynomial chaos experiments: scenarios, moments, distances and the
/// exact cube calculus.
#[derive(Parser)]
#[command(name = "polychaos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario from a config file and write its CSV report.
    Scenario(ScenarioArgs),
    /// Second and fourth moments of a chaos.
    Moments(MomentsArgs),
    /// Distances between sample files, or from one file to N(0,1).
    Distances(DistancesArgs),
    /// Exact identities of the cube generator on random polynomials.
    JacobiCheck(JacobiArgs),
    /// Small-ball probabilities over a radius grid.
    CwScan(ScanArgs),
    /// Reciprocal carré du champ moments over a delta grid.
    Claim3Scan(ScanArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Registry name; overrides the config's `scenario` field.
    name: String,
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; defaults to the config's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Append to the output instead of replacing it.
    #[arg(long)]
    append: bool,
}

/// Where the chaos comes from.
#[derive(Args)]
struct TensorSource {
    /// JSON tensor literal file.
    #[arg(long, conflicts_with_all = ["family", "degree", "n"])]
    tensor: Option<PathBuf>,
    #[arg(long, requires_all = ["degree", "n"])]
    family: Option<Family>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
}

impl TensorSource {
    fn load(&self) -> Result<(CoefficientTensor, String)> {
        if let Some(path) = &self.tensor {
            let text = read(path)?;
            let t = CoefficientTensor::from_json_str(&text)?;
            return Ok((t, path.display().to_string()));
        }
        match (self.family, self.degree, self.n) {
            (Some(f), Some(d), Some(n)) => Ok((family_generate(f, d, n)?, format!("{f}:d={d}:n={n}"))),
            _ => bail!("give --tensor FILE or --family F --degree D --n N"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Wick,
    Enumeration,
    MonteCarlo,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    source: TensorSource,
    /// Input law as a JSON law spec; standardized before use.
    #[arg(long, default_value = r#"{"type":"gaussian"}"#)]
    law: String,
    #[arg(long, value_enum, default_value = "wick")]
    method: Method,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistancesArgs {
    /// Text file with one sample per line.
    #[arg(long)]
    x: PathBuf,
    /// Second sample file; without it the reference is N(0,1).
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    /// Histogram range as `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<(f64, f64)>,
    /// Optional smoothing: add N(0, alpha²) noise to both batches first.
    #[arg(long)]
    smooth: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JacobiArgs {
    /// Polynomial literal file to decompose instead of the random sweep.
    #[arg(long)]
    poly: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScanArgs {
    /// Polynomial literal file on the cube.
    #[arg(long, conflicts_with_all = ["tensor", "family"])]
    poly: Option<PathBuf>,
    #[command(flatten)]
    source: TensorSource,
    /// Largest grid value.
    #[arg(long, default_value_t = 1e-1)]
    hi: f64,
    /// Smallest grid value.
    #[arg(long, default_value_t = 1e-5)]
    lo: f64,
    #[arg(long, default_value_t = 2)]
    per_decade: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    Ok((lo, hi))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(blocks: &[Block], out: Option<&Path>, append: bool) -> Result<()> {
    match out {
        Some(path) => write_report_file(path, blocks, append).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(report_to_string(blocks)?.as_bytes())?;
            Ok(())
        }
    }
}

/// Runs a subcommand; `Ok(false)` means a checked property failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Scenario(a) => scenario(a),
        Command::Moments(a) => moments(a),
        Command::Distances(a) => distances(a),
        Command::JacobiCheck(a) => jacobi_check(a),
        Command::CwScan(a) => scan(a, false),
        Command::Claim3Scan(a) => scan(a, true),
    }
}

fn scenario(a: ScenarioArgs) -> Result<bool> {
    let mut cfg = load_config(&a.config)?;
    cfg.scenario = a.name;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let run = run_scenario_with_workers(&cfg, a.workers)?;
    let out = a.out.or(cfg.output.clone());
    emit(&run.blocks, out.as_deref(), a.append)?;
    for p in &run.predicates {
        eprintln!("{} {}: {}", if p.pass { "PASS" } else { "FAIL" }, p.name, p.detail);
    }
    Ok(run.pass())
}

fn moments(a: MomentsArgs) -> Result<bool> {
    let (t, id) = a.source.load()?;
    let law: InputLaw = LawSpec::from_json_str(&a.law)
        .map_err(anyhow::Error::msg)
        .context("parsing --law")?
        .build()?
        .standardize()?;
    let r: MomentReport = match a.method {
        Method::Wick => fourth_moment_wick(&t)?,
        Method::Enumeration => fourth_moment_enumeration(&t, &law)?,
        Method::MonteCarlo => fourth_moment_mc(&t, &law, a.samples, a.seed)?,
    };
    let row = MomentRow {
        tensor_id: id,
        law_id: match a.method {
            Method::Wick => "gaussian".to_string(),
            _ => law.to_string(),
        },
        method: r.method.tag().to_string(),
        second: r.second,
        fourth: r.fourth,
        excess: r.excess,
        stderr: r.stderr.map(|s| s.excess),
    };
    emit(&[Block::new("moments", a.seed, Table::Moment(vec![row]))], a.out.as_deref(), false)?;
    Ok(true)
}

fn read_batch(path: &Path) -> Result<SampleBatch> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    SampleBatch::read_text(BufReader::new(file)).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn distances(a: DistancesArgs) -> Result<bool> {
    let mut x = read_batch(&a.x)?;
    let mut y = a.y.as_deref().map(read_batch).transpose()?;
    if let Some(alpha) = a.smooth {
        x = polychaos::metrics::smooth_with_gaussian(&x, alpha, derive_seed(a.seed, &[0]))?;
        if let Some(b) = &y {
            y = Some(polychaos::metrics::smooth_with_gaussian(b, alpha, derive_seed(a.seed, &[1]))?);
        }
    }
    let yv = y.as_ref().map(|b| b.values());
    let auto = Binning::auto(x.values(), yv)?;
    let (lo, hi) = a.range.unwrap_or((auto.lo, auto.hi));
    let binning = Binning::new(a.bins.unwrap_or(auto.bins), lo, hi)?;
    let reference = yv.map_or(Reference::StdNormal, Reference::Batch);
    let r = distance_report(x.values(), reference, Some(binning), a.seed)?;
    let row = DistanceRow {
        scenario: "distances".into(),
        n: x.len(),
        law_x: a.x.display().to_string(),
        law_y: a.y.as_ref().map_or_else(|| "N(0,1)".to_string(), |p| p.display().to_string()),
        samples: x.len(),
        ks: r.ks,
        w1: r.w1,
        fm_proxy: r.fm_proxy,
        tv_hist: r.tv_hist,
        bins: r.bins,
        bin_width: r.bin_width,
    };
    emit(&[Block::new("distances", a.seed, Table::Distance(vec![row]))], a.out.as_deref(), false)?;
    Ok(true)
}

fn jacobi_check(a: JacobiArgs) -> Result<bool> {
    if let Some(path) = a.poly {
        let f = CubePolynomial::from_literal(&read(&path)?)?;
        println!("f = {f}");
        for (lambda, part) in eigen_project(&f)?.components {
            println!("lambda = {lambda}: {part}");
        }
        if !f.is_constant() {
            let g = poincare_gap(&f)?;
            println!("variance = {}, energy = {}, ratio = {}", g.variance, g.energy, g.ratio);
        }
        return Ok(true);
    }

    let mut ok = true;
    for c in identity_sweep(a.seed, a.cases)? {
        println!("{} {}", if c.holds { "ok  " } else { "FAIL" }, c.name);
        ok &= c.holds;
    }
    Ok(ok)
}

fn scan(a: ScanArgs, reciprocal: bool) -> Result<bool> {
    let grid = log_grid(a.hi, a.lo, a.per_decade.max(1));
    let name = if reciprocal { "claim3_scan" } else { "cw_scan" };
    let run = |q: &dyn CubeFunctional| -> Result<ScalingScan> {
        Ok(if reciprocal {
            claim3_scan(q, &grid, a.samples, a.seed)?
        } else {
            cw_scan(q, &grid, a.samples, a.seed)?
        })
    };
    let s = match &a.poly {
        Some(path) => run(&FloatPolynomial::new(&CubePolynomial::from_literal(&read(path)?)?))?,
        None => run(&a.source.load()?.0)?,
    };
    let rows: Vec<ScanRow> = s
        .grid
        .iter()
        .map(|p| ScanRow {
            scenario: name.to_string(),
            param: p.param,
            estimate: p.estimate,
            stderr: p.stderr,
            fitted_exponent: s.fitted_exponent,
            fitted_constant: s.fitted_constant,
            bound_holds: s.bound_holds,
        })
        .collect();
    emit(&[Block::new(name, a.seed, Table::Scan(rows))], a.out.as_deref(), false)?;
    Ok(s.bound_holds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
