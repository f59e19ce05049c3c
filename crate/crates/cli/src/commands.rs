use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde_json::json;
use vandconv::algebra::polynomial::to_json_value;
use vandconv::algebra::{self, parse_expression, AspectRatio, Attributes, Basis, Format, MomentExpression, Normalization, Space};
use vandconv::convolution::{self, GramSource, Model, MomentSequence, Unknown};
use vandconv::density::PhaseDensity;
use vandconv::ensembles::{self, EnsembleKind};
use vandconv::partition;
use vandconv::simulate::{self, SimulationBindings};
use vandconv::volume::{global_cache, CoefficientCache};
use vandconv::{rational, Error, Rational, Result};

use crate::ExprArgs;

pub fn load_cache(path: &Path) -> Result<()> {
    if path.exists() {
        let stored = CoefficientCache::load(path)?;
        global_cache().lock().expect("cache lock").merge(&stored);
    }
    Ok(())
}

pub fn save_cache(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    global_cache().lock().expect("cache lock").save(path)
}

/// Splits `V1=value` into `(1, "value")`.
fn indexed(arg: &str, prefix: char) -> Result<(u32, &str)> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| Error::Argument(format!("expected {prefix}<i>=<value>, got {arg:?}")))?;
    let idx = key
        .strip_prefix(prefix)
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| Error::Argument(format!("expected {prefix}<i> before '=', got {key:?}")))?;
    Ok((idx, value))
}

fn attributes(a: &ExprArgs) -> Result<Attributes> {
    let mut attrs = match &a.bindings {
        Some(p) => Attributes::from_json(&std::fs::read_to_string(p)?)?,
        None => Attributes::default(),
    };
    for p in &a.phases {
        let (i, label) = indexed(p, 'V')?;
        attrs.set_phase(i, label);
    }
    for c in &a.ratios {
        let (i, ratio) = indexed(c, 'V')?;
        attrs.set_c(i, AspectRatio::parse(ratio)?);
    }
    Ok(attrs)
}

fn expression(a: &ExprArgs) -> Result<MomentExpression> {
    parse_expression(&a.expr, &attributes(a)?)
}

pub fn formula(a: &ExprArgs, order: usize, format: &str, normalization: &str, basis: &str) -> Result<String> {
    let format: Format = format.parse()?;
    let normalization: Normalization = normalization.parse()?;
    let basis: Basis = basis.parse()?;
    let expr = expression(a)?;
    if order == 0 {
        return Err(Error::Argument("--order must be at least 1".into()));
    }
    let mut lines = Vec::new();
    let mut docs = Vec::new();
    for n in 1..=order {
        let poly = algebra::moment_formula(&expr, n, normalization, basis)?;
        match format {
            Format::Latex => lines.push(format!("M_{{{n}}} = {}", algebra::to_latex(&poly))),
            Format::Text => lines.push(format!("M_{n} = {}", algebra::to_text(&poly))),
            Format::Json => docs.push(json!({ "order": n, "formula": to_json_value(&poly) })),
        }
    }
    Ok(match format {
        Format::Json => {
            let doc = json!({ "expression": a.expr, "normalization": normalization, "formulas": docs });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        _ => lines.join("\n") + "\n",
    })
}

pub fn classify(a: &ExprArgs) -> Result<String> {
    let c = algebra::classify(&expression(a)?);
    Ok(match &c {
        algebra::Classification::SpectraOnly => "SpectraOnly\n".to_string(),
        algebra::Classification::PhaseDependent { reason } | algebra::Classification::Unsupported { reason } => {
            format!("{}: {reason}\n", c.name())
        }
    })
}

fn read_sequence(path: &Path) -> Result<MomentSequence> {
    MomentSequence::from_json(&std::fs::read_to_string(path)?)
}

/// `uniform`, a moment-sequence `.json` file, or a density CSV file.
fn gram_source(spec: &str, c: &str) -> Result<GramSource> {
    if spec.ends_with(".json") {
        return Ok(GramSource::Moments(read_sequence(Path::new(spec))?));
    }
    Ok(GramSource::Density { density: PhaseDensity::load(spec)?, c: rational::parse(c)? })
}

#[derive(Args, Debug)]
pub struct ConvolveArgs {
    /// multiplicative, additive, gram-product, gram-sum or cross-gram.
    #[arg(long)]
    model: String,
    /// D moment sequence (JSON).
    #[arg(long)]
    d: Option<PathBuf>,
    /// Gram side: `uniform`, a density CSV, or a moment-sequence JSON file.
    #[arg(long, default_value = "uniform")]
    v: String,
    /// Aspect ratio of the first Vandermonde matrix when given by a density.
    #[arg(long, default_value = "1")]
    c_v: String,
    /// Second Gram side for the two-matrix models.
    #[arg(long)]
    v2: Option<String>,
    #[arg(long, default_value = "1")]
    c_v2: String,
    #[arg(long, default_value_t = 4)]
    orders: usize,
}

pub fn convolve(a: &ConvolveArgs) -> Result<String> {
    let model: Model = a.model.parse()?;
    let d = a.d.as_deref().map(read_sequence).transpose()?;
    let v = gram_source(&a.v, &a.c_v)?;
    let v2 = a.v2.as_deref().map(|s| gram_source(s, &a.c_v2)).transpose()?;
    let out = convolution::convolve(model, d.as_ref(), &v, v2.as_ref(), a.orders)?;
    Ok(out.to_json() + "\n")
}

#[derive(Args, Debug)]
pub struct DeconvolveArgs {
    #[arg(long)]
    model: String,
    /// Side to recover: d or v.
    #[arg(long, default_value = "d")]
    unknown: String,
    /// Observed moment sequence (JSON).
    #[arg(long)]
    m: PathBuf,
    /// Known D moment sequence, when recovering a Gram side.
    #[arg(long)]
    d: Option<PathBuf>,
    /// Known Gram side: `uniform`, a density CSV, or a moment-sequence JSON file.
    #[arg(long)]
    v: Option<String>,
    #[arg(long, default_value = "1")]
    c_v: String,
    /// Aspect ratio of the unknown Gram side (defaults to that of the observation).
    #[arg(long)]
    c_unknown: Option<String>,
    /// Number of moments to recover (defaults to all observed).
    #[arg(long)]
    orders: Option<usize>,
}

pub fn deconvolve(a: &DeconvolveArgs) -> Result<String> {
    let model: Model = a.model.parse()?;
    let unknown = match a.unknown.to_ascii_lowercase().as_str() {
        "d" => Unknown::D,
        "v" => Unknown::V,
        other => return Err(Error::Argument(format!("--unknown must be d or v, got {other:?}"))),
    };
    let m = read_sequence(&a.m)?;
    let d = a.d.as_deref().map(read_sequence).transpose()?;
    let v = a.v.as_deref().map(|s| gram_source(s, &a.c_v)).transpose()?;
    let c_unknown = a.c_unknown.as_deref().map(rational::parse).transpose()?;
    let k = a.orders.unwrap_or(m.len());
    let out = convolution::deconvolve(model, unknown, &m, d.as_ref(), v.as_ref(), c_unknown.as_ref(), k)?;
    Ok(out.to_json() + "\n")
}

pub fn ensemble_moments(kind: &str, k: usize, format: &str) -> Result<String> {
    let kind: EnsembleKind = kind.parse()?;
    let seq = ensembles::ensemble_moments(kind, k)?;
    if format == "json" {
        return Ok(seq.to_json() + "\n");
    }
    Ok(seq.values.iter().enumerate().map(|(i, v)| format!("M_{} = {v}\n", i + 1)).collect())
}

pub fn partition_stats(n: usize, format: &str) -> Result<String> {
    let s = partition::partition_stats(n)?;
    if format == "json" {
        return Ok(serde_json::to_string_pretty(&s)? + "\n");
    }
    Ok(format!(
        "n {}\npartitions {}\nalternating {}\ncyclic_classes {}\n",
        s.n, s.partitions, s.alternating, s.cyclic_classes
    ))
}

fn sizes(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Argument(format!("bad size {s:?} in {list:?}"))))
        .collect()
}

fn density_arg(arg: &str) -> Result<PhaseDensity> {
    if let Some(rest) = arg.strip_prefix("arc:") {
        let (lo, hi) = rest
            .split_once(',')
            .ok_or_else(|| Error::Argument(format!("expected arc:<lo>,<hi> in turns, got {arg:?}")))?;
        return PhaseDensity::uniform_arc(rational::parse(lo)?, rational::parse(hi)?);
    }
    PhaseDensity::load(arg)
}

#[derive(Subcommand, Debug)]
pub enum Simulation {
    /// Empirical moments of an expression; CSV `order,N,estimate,stderr`.
    Moments {
        #[arg(long)]
        expr: String,
        /// `V1=uniform`, `V1=arc:0,1/2` (interval in turns) or `V1=density.csv`.
        #[arg(long = "phase", value_name = "Vi=DENSITY")]
        phases: Vec<String>,
        /// `V1=NxL`; repeatable.
        #[arg(long = "size", value_name = "Vi=NxL", required = true)]
        sizes: Vec<String>,
        /// `D1=0.5,1,1.5`: levels repeated in equal shares to the required size.
        #[arg(long = "diag", value_name = "Di=LEVELS")]
        diags: Vec<String>,
        #[arg(long, default_value_t = 4)]
        orders: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write a JSON manifest with the seed and report.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Even moments of sampled Toeplitz or Hankel matrices; CSV.
    Ensemble {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        orders: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimates D2, D3 of a {0.5, 1, 1.5} diagonal from observations of D V'V.
    Deconvolution {
        #[arg(long, default_value = "200,400,800,1600")]
        sizes: String,
        #[arg(long, default_value_t = 10)]
        observations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Log-log decay rate of the fourth central moment of tr((V'V)^r).
    Decay {
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value = "64,128,256,512")]
        sizes: String,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// V1V1' + V2V2' against one Vandermonde matrix with the mixed phase density.
    PhaseMixture {
        #[arg(long, default_value = "arc:0,1/2")]
        p1: String,
        #[arg(long, default_value = "1/2")]
        c1: String,
        #[arg(long, default_value = "arc:1/2,1")]
        p2: String,
        #[arg(long, default_value = "1/2")]
        c2: String,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        orders: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn pretty(v: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn moments_bindings(
    expr: &MomentExpression,
    phases: &[String],
    size_args: &[String],
    diags: &[String],
) -> Result<SimulationBindings> {
    let mut b = SimulationBindings::default();
    let mut densities = std::collections::BTreeMap::new();
    for p in phases {
        let (i, d) = indexed(p, 'V')?;
        densities.insert(i, density_arg(d)?);
    }
    for s in size_args {
        let (i, dims) = indexed(s, 'V')?;
        let (n, l) = dims
            .split_once('x')
            .and_then(|(n, l)| Some((n.parse().ok()?, l.parse().ok()?)))
            .ok_or_else(|| Error::Argument(format!("expected V<i>=<N>x<L>, got {s:?}")))?;
        b = b.with_vandermonde(i, n, l, densities.remove(&i).unwrap_or(PhaseDensity::Uniform));
    }
    if let Some(i) = densities.keys().next() {
        return Err(Error::Argument(format!("V{i} has a phase density but no --size")));
    }
    let dim = expr
        .matrices
        .keys()
        .find_map(|i| b.vandermonde.get(i))
        .map(|(n, l, _)| if expr.space == Space::Columns { *l } else { *n })
        .ok_or_else(|| Error::Argument("no --size given for any Vandermonde matrix of the expression".into()))?;
    for d in diags {
        let (i, levels) = indexed(d, 'D')?;
        let levels: Vec<f64> = levels
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| Error::Argument(format!("bad eigenvalue {x:?}"))))
            .collect::<Result<_>>()?;
        if levels.is_empty() {
            return Err(Error::Argument(format!("D{i} has no levels")));
        }
        let eig = (0..dim).map(|j| levels[j * levels.len() / dim]).collect();
        b = b.with_diagonal(i, eig);
    }
    Ok(b)
}

pub fn simulate(s: &Simulation) -> Result<String> {
    match s {
        Simulation::Moments { expr, phases, sizes: size_args, diags, orders, trials, seed, manifest } => {
            let e = parse_expression(expr, &Attributes::default())?;
            let b = moments_bindings(&e, phases, size_args, diags)?;
            let report = simulate::empirical_mixed_moment(&e, &b, *orders, *trials, *seed)?;
            if let Some(path) = manifest {
                let doc = json!({ "experiment": "moments", "expression": expr, "seed": seed, "report": report });
                std::fs::write(path, pretty(doc)?)?;
            }
            Ok(report.to_csv())
        }
        Simulation::Ensemble { kind, n, orders, trials, seed } => {
            Ok(simulate::ensemble_trial_moments(kind.parse()?, *n, *orders, *trials, *seed)?.to_csv())
        }
        Simulation::Deconvolution { sizes: list, observations, seed } => {
            let rows = simulate::deconvolution_experiment(&sizes(list)?, *observations, *seed)?;
            pretty(json!({ "experiment": "deconvolution", "seed": seed, "observations": observations, "rows": rows }))
        }
        Simulation::Decay { r, sizes: list, trials, seed } => {
            let report = simulate::decay_check(*r, &sizes(list)?, *trials, *seed)?;
            let slope = if report.slope.is_finite() { json!(report.slope) } else { json!("-inf") };
            pretty(json!({
                "experiment": "decay",
                "seed": seed,
                "r": report.r,
                "sizes": report.sizes,
                "trials": report.trials,
                "fourth_moments": report.fourth_moments,
                "slope": slope,
                "degenerate": report.degenerate,
            }))
        }
        Simulation::PhaseMixture { p1, c1, p2, c2, n, orders, trials, seed } => {
            let (c1, c2): (Rational, Rational) = (rational::parse(c1)?, rational::parse(c2)?);
            let report =
                simulate::phase_mixture_check(&density_arg(p1)?, &c1, &density_arg(p2)?, &c2, *n, *orders, *trials, *seed)?;
            pretty(json!({ "experiment": "phase-mixture", "seed": seed, "n": n, "report": report }))
        }
    }
}
