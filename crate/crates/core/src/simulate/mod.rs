//! Monte Carlo sampling of Vandermonde, Toeplitz, Hankel and diagonal
//! matrices, empirical moments and the convergence experiments.

pub mod matrix;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::expression::Factor;
use crate::algebra::{MomentExpression, Space};
use crate::convolution::{deconvolve_d, pooled_gram_moments, GramSource, Model, MomentSequence, SequenceNormalization};
use crate::density::PhaseDensity;
use crate::ensembles::EnsembleKind;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::value::Value;
pub use matrix::{CMatrix, Matrix, RMatrix};

/// Knots of the inverse-CDF tables used for non-uniform phases.
pub const CDF_KNOTS: usize = 1 << 16;
/// Highest moment order estimated by simulation.
pub const MAX_SIM_ORDER: usize = 8;
/// Fewest trials per size accepted by [`decay_check`].
pub const MIN_DECAY_TRIALS: usize = 200;

/// Independent generator for stream `stream` of a master seed.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws phases in `[0, 2π)` from a density.
#[derive(Clone, Debug)]
pub struct PhaseSampler {
    cdf: Option<Vec<f64>>,
}

impl PhaseSampler {
    pub fn new(density: &PhaseDensity) -> Result<Self> {
        if *density == PhaseDensity::Uniform {
            return Ok(Self { cdf: None });
        }
        let mass = density.mass().to_f64();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Argument("phase density cannot be normalized".into()));
        }
        Ok(Self { cdf: Some(density.cdf_table(CDF_KNOTS)) })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let p: f64 = rng.random();
        match &self.cdf {
            None => TAU * p,
            Some(cdf) => {
                let hi = cdf.partition_point(|&v| v < p).clamp(1, cdf.len() - 1);
                let (a, b) = (cdf[hi - 1], cdf[hi]);
                let frac = if b > a { (p - a) / (b - a) } else { 0.5 };
                TAU * ((hi - 1) as f64 + frac) / (cdf.len() - 1) as f64
            }
        }
    }

    pub fn sample_many(&self, count: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// `N×L` Vandermonde matrix with entries `e^{-j n ω_l}/√N`.
pub fn vandermonde(n: usize, phases: &[f64]) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, phases.len(), |r, c| Complex64::from_polar(s, -(r as f64) * phases[c]))
}

/// `V_a^H V_b` for Vandermonde matrices with `n` rows, from the Dirichlet kernel.
pub fn cross_gram(n: usize, wa: &[f64], wb: &[f64]) -> CMatrix {
    let nf = n as f64;
    CMatrix::from_fn(wa.len(), wb.len(), |k, l| {
        let d = (wa[k] - wb[l]).rem_euclid(TAU);
        let d = if d > std::f64::consts::PI { d - TAU } else { d };
        let half = d / 2.0;
        if half.sin().abs() < 1e-14 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::from_polar((nf * half).sin() / (nf * half.sin()), (nf - 1.0) * half)
    })
}

/// `V V^H` (`n×n`) for one Vandermonde matrix with the given phases.
pub fn outer_gram(n: usize, phases: &[f64]) -> CMatrix {
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for &w in phases {
        let step = Complex64::from_polar(1.0, -w);
        let mut z = Complex64::new(1.0, 0.0);
        for v in s.iter_mut() {
            *v += z;
            z *= step;
        }
    }
    let nf = n as f64;
    s.iter_mut().for_each(|v| *v /= nf);
    CMatrix::from_fn(n, n, |p, q| if p >= q { s[p - q] } else { s[q - p].conj() })
}

/// What to sample.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleSpec {
    Vandermonde { n: usize, l: usize, density: PhaseDensity },
    /// Symmetric, entries `a_{|i-j|}/√n` with standard Gaussian `a`.
    Toeplitz { n: usize },
    /// Entries `a_{i+j}/√n` with standard Gaussian `a`.
    Hankel { n: usize },
    Diagonal { eigenvalues: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Real(RMatrix),
    Complex(CMatrix),
}

fn structured(kind: EnsembleKind, n: usize, rng: &mut impl Rng) -> RMatrix {
    let s = 1.0 / (n as f64).sqrt();
    let a: Vec<f64> = (0..2 * n).map(|_| rng.sample::<f64, _>(StandardNormal) * s).collect();
    match kind {
        EnsembleKind::Toeplitz => RMatrix::from_fn(n, n, |i, j| a[i.abs_diff(j)]),
        EnsembleKind::Hankel => RMatrix::from_fn(n, n, |i, j| a[i + j]),
    }
}

/// One deterministic draw of `spec`.
pub fn sample(spec: &EnsembleSpec, seed: u64) -> Result<Sample> {
    let mut rng = trial_rng(seed, 0);
    match spec {
        EnsembleSpec::Vandermonde { n, l, density } => {
            if *n == 0 || *l == 0 {
                return Err(Error::Argument("Vandermonde sizes must be positive".into()));
            }
            let w = PhaseSampler::new(density)?.sample_many(*l, &mut rng);
            Ok(Sample::Complex(vandermonde(*n, &w)))
        }
        EnsembleSpec::Toeplitz { n } | EnsembleSpec::Hankel { n } if *n == 0 => {
            Err(Error::Argument("matrix size must be positive".into()))
        }
        EnsembleSpec::Toeplitz { n } => Ok(Sample::Real(structured(EnsembleKind::Toeplitz, *n, &mut rng))),
        EnsembleSpec::Hankel { n } => Ok(Sample::Real(structured(EnsembleKind::Hankel, *n, &mut rng))),
        EnsembleSpec::Diagonal { eigenvalues } => Ok(Sample::Real(RMatrix::diagonal(eigenvalues))),
    }
}

/// Mean and standard error of per-order estimates over independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub orders: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Matrix dimension the traces were normalized by.
    pub size: usize,
}

impl TrialReport {
    pub fn from_samples(orders: Vec<usize>, samples: &[Vec<f64>], seed: u64, size: usize) -> Self {
        let t = samples.len();
        let k = orders.len();
        let mut mean = vec![0.0; k];
        let mut stderr = vec![0.0; k];
        for j in 0..k {
            let m = samples.iter().map(|s| s[j]).sum::<f64>() / t as f64;
            let var = if t > 1 { samples.iter().map(|s| (s[j] - m).powi(2)).sum::<f64>() / (t - 1) as f64 } else { 0.0 };
            mean[j] = m;
            stderr[j] = (var / t as f64).sqrt();
        }
        Self { orders, mean, stderr, trials: t, seed, size }
    }

    /// `|mean - target| ≤ z·stderr + slack` for every order.
    pub fn within(&self, targets: &[f64], z: f64, slack: f64) -> bool {
        self.mean.iter().zip(&self.stderr).zip(targets).all(|((m, s), t)| (m - t).abs() <= z * s + slack)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,N,estimate,stderr\n");
        for j in 0..self.orders.len() {
            out += &format!("{},{},{},{}\n", self.orders[j], self.size, self.mean[j], self.stderr[j]);
        }
        out
    }
}

/// Sizes and laws of the matrices named in an expression.
#[derive(Clone, Debug, Default)]
pub struct SimulationBindings {
    pub vandermonde: BTreeMap<u32, (usize, usize, PhaseDensity)>,
    pub diagonal: BTreeMap<u32, Vec<f64>>,
}

impl SimulationBindings {
    pub fn with_vandermonde(mut self, index: u32, n: usize, l: usize, density: PhaseDensity) -> Self {
        self.vandermonde.insert(index, (n, l, density));
        self
    }

    pub fn with_diagonal(mut self, label: u32, eigenvalues: Vec<f64>) -> Self {
        self.diagonal.insert(label, eigenvalues);
        self
    }
}

fn complex_diag(d: &[f64]) -> Vec<Complex64> {
    d.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Multiplies out one summand with sampled phases.
fn product(
    factors: &[Factor],
    phases: &BTreeMap<u32, Vec<f64>>,
    b: &SimulationBindings,
    space_dim: usize,
) -> Result<CMatrix> {
    let dims = |i: u32| b.vandermonde.get(&i).map(|(n, l, _)| (*n, *l)).ok_or_else(|| Error::Unbound(format!("V{i}")));
    let diag = |l: u32| b.diagonal.get(&l).ok_or_else(|| Error::Unbound(format!("eigenvalues of D{l}")));
    let mut acc: Option<CMatrix> = None;
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_set = false;
    let mut i = 0;
    while i < factors.len() {
        let block = match (factors[i], factors.get(i + 1)) {
            (Factor::D(l), _) => {
                let d = diag(l)?;
                match &mut acc {
                    Some(a) => {
                        if a.cols != d.len() {
                            return Err(Error::Dimension(format!("D{l} has {} eigenvalues, {} needed", d.len(), a.cols)));
                        }
                        *a = a.scale_cols(&complex_diag(d));
                    }
                    None if pending_set => {
                        if pending.len() != d.len() {
                            return Err(Error::Dimension(format!("D{l} size differs from its neighbour")));
                        }
                        pending.iter_mut().zip(d).for_each(|(p, x)| *p *= x);
                    }
                    None => {
                        pending = d.clone();
                        pending_set = true;
                    }
                }
                i += 1;
                continue;
            }
            (Factor::V { index: a, adjoint: true }, Some(&Factor::V { index: c, adjoint: false })) => {
                let ((na, _), (nc, _)) = (dims(a)?, dims(c)?);
                if na != nc {
                    return Err(Error::Dimension(format!("V{a}' V{c}: {na} and {nc} rows")));
                }
                i += 2;
                cross_gram(na, &phases[&a], &phases[&c])
            }
            (Factor::V { index: a, adjoint: false }, Some(&Factor::V { index: c, adjoint: true })) if a == c => {
                i += 2;
                outer_gram(dims(a)?.0, &phases[&a])
            }
            (Factor::V { index: a, adjoint }, _) => {
                let v = vandermonde(dims(a)?.0, &phases[&a]);
                i += 1;
                if adjoint {
                    CMatrix::from_fn(v.cols, v.rows, |r, c| v.get(c, r).conj())
                } else {
                    v
                }
            }
        };
        acc = Some(match acc {
            None if pending_set => {
                if pending.len() != block.rows {
                    return Err(Error::Dimension("diagonal factor size differs from its neighbour".into()));
                }
                block.scale_rows(&complex_diag(&pending))
            }
            None => block,
            Some(a) => {
                if a.cols != block.rows {
                    return Err(Error::Dimension(format!("inner dimensions {} and {} differ", a.cols, block.rows)));
                }
                a.matmul(&block)
            }
        });
    }
    match acc {
        Some(a) => Ok(a),
        None => {
            if pending.len() != space_dim && space_dim != 0 {
                return Err(Error::Dimension(format!("diagonal summand has size {}, expected {space_dim}", pending.len())));
            }
            Ok(CMatrix::diagonal(&complex_diag(&pending)))
        }
    }
}

fn space_dimension(expr: &MomentExpression, b: &SimulationBindings) -> usize {
    let pick = |(n, l, _): &(usize, usize, PhaseDensity)| if expr.space == Space::Columns { *l } else { *n };
    expr.matrices.keys().find_map(|i| b.vandermonde.get(i).map(pick)).unwrap_or(0)
}

/// Normalized traces `tr(E^n)`, `n = 1..=k`, of the expression averaged over trials.
pub fn empirical_mixed_moment(
    expr: &MomentExpression,
    bindings: &SimulationBindings,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    if k == 0 || k > MAX_SIM_ORDER {
        return Err(Error::Capacity(format!("simulated orders must be 1..={MAX_SIM_ORDER}")));
    }
    if trials == 0 {
        return Err(Error::Argument("at least one trial is needed".into()));
    }
    let samplers: BTreeMap<u32, PhaseSampler> = expr
        .matrices
        .keys()
        .map(|i| {
            let (_, _, d) = bindings.vandermonde.get(i).ok_or_else(|| Error::Unbound(format!("size and density of V{i}")))?;
            Ok((*i, PhaseSampler::new(d)?))
        })
        .collect::<Result<_>>()?;
    let dim = space_dimension(expr, bindings);
    let mut samples = Vec::with_capacity(trials);
    let mut size = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let phases: BTreeMap<u32, Vec<f64>> =
            samplers.iter().map(|(i, s)| (*i, s.sample_many(bindings.vandermonde[i].1, &mut rng))).collect();
        let mut e: Option<CMatrix> = None;
        for summand in &expr.summands {
            let p = product(summand, &phases, bindings, dim)?;
            if p.rows != p.cols {
                return Err(Error::Dimension(format!("summand is {}×{}, not square", p.rows, p.cols)));
            }
            e = Some(match e {
                None => p,
                Some(acc) if acc.rows == p.rows => acc.add(&p),
                Some(acc) => {
                    return Err(Error::Dimension(format!("summands of sizes {} and {}", acc.rows, p.rows)));
                }
            });
        }
        let e = e.expect("expression has a summand");
        size = e.rows;
        samples.push(e.normalized_power_traces(k));
    }
    Ok(TrialReport::from_samples((1..=k).collect(), &samples, seed, size))
}

/// `tr(X^{2i})` for `i = 1..=k` of normalized Toeplitz or Hankel matrices.
pub fn ensemble_trial_moments(kind: EnsembleKind, n: usize, k: usize, trials: usize, seed: u64) -> Result<TrialReport> {
    if 2 * k > MAX_SIM_ORDER {
        return Err(Error::Capacity(format!("simulated orders must not exceed {MAX_SIM_ORDER}")));
    }
    let samples: Vec<Vec<f64>> = (0..trials)
        .map(|t| {
            let x = structured(kind, n, &mut trial_rng(seed, t as u64));
            let all = x.normalized_power_traces(2 * k);
            (1..=k).map(|i| all[2 * i - 1]).collect()
        })
        .collect();
    Ok(TrialReport::from_samples((1..=k).map(|i| 2 * i).collect(), &samples, seed, n))
}

/// Eigenvalues 0.5, 1, 1.5 with equal shares, as in the deconvolution experiment.
pub fn three_level_diagonal(l: usize) -> Vec<f64> {
    (0..l).map(|i| [0.5, 1.0, 1.5][3 * i / l]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeconvolutionRow {
    pub n: usize,
    pub observations: usize,
    /// Averaged `c tr((D V'V)^i)`, `i = 1..3`.
    pub moments: Vec<f64>,
    pub d2: f64,
    pub d3: f64,
    pub d2_exact: f64,
    pub d3_exact: f64,
}

/// Estimates `D_2`, `D_3` of a `{0.5, 1, 1.5}` diagonal from observations of
/// `D V'V` with square uniform-phase `V`, by deconvolving averaged moments.
pub fn deconvolution_experiment(sizes: &[usize], observations: usize, seed: u64) -> Result<Vec<DeconvolutionRow>> {
    let mut rows = Vec::new();
    for (s, &n) in sizes.iter().enumerate() {
        let d = complex_diag(&three_level_diagonal(n));
        let mut acc = [0.0; 3];
        for o in 0..observations {
            let mut rng = trial_rng(seed, ((s as u64) << 32) | o as u64);
            let w = PhaseSampler::new(&PhaseDensity::Uniform)?.sample_many(n, &mut rng);
            let x = cross_gram(n, &w, &w).scale_rows(&d);
            for (a, t) in acc.iter_mut().zip(x.normalized_power_traces(3)) {
                *a += t / observations as f64;
            }
        }
        let m = MomentSequence::new(SequenceNormalization::Mndef, Rational::from_integer(1.into()), acc.iter().map(|&x| Value::Float(x)).collect())?;
        let est = deconvolve_d(Model::Multiplicative, &m, &GramSource::uniform(Rational::from_integer(1.into())), 3)?;
        rows.push(DeconvolutionRow {
            n,
            observations,
            moments: acc.to_vec(),
            d2: est.values[1].to_f64(),
            d3: est.values[2].to_f64(),
            d2_exact: 7.0 / 6.0,
            d3_exact: 1.5,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub r: usize,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub fourth_moments: Vec<f64>,
    /// Least-squares slope of `ln m4` against `ln L`; `-∞` when degenerate.
    pub slope: f64,
    /// The trace has no fluctuation at all (numerically zero fourth moments).
    pub degenerate: bool,
}

/// Fourth central moment of `tr((V'V)^r)` for square uniform-phase `V` at
/// each size and its log-log decay rate.
pub fn decay_check(r: usize, sizes: &[usize], trials: usize, seed: u64) -> Result<DecayReport> {
    if !(1..=3).contains(&r) {
        return Err(Error::Argument(format!("moment order r = {r} outside 1..=3")));
    }
    if sizes.len() < 4 {
        return Err(Error::Argument("at least four sizes are needed for a slope".into()));
    }
    if trials < MIN_DECAY_TRIALS {
        return Err(Error::Refused(format!(
            "{trials} trials per size give a fourth-moment estimate too noisy to fit; use at least {MIN_DECAY_TRIALS}"
        )));
    }
    let mut m4 = Vec::new();
    for (s, &l) in sizes.iter().enumerate() {
        let xs: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = trial_rng(seed, ((s as u64) << 32) | t as u64);
                let w = PhaseSampler { cdf: None }.sample_many(l, &mut rng);
                cross_gram(l, &w, &w).normalized_power_traces(r)[r - 1]
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / trials as f64;
        m4.push(xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / trials as f64);
    }
    let degenerate = m4.iter().all(|&m| m < 1e-24);
    let slope = if degenerate {
        f64::NEG_INFINITY
    } else {
        let xs: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
        let ys: Vec<f64> = m4.iter().map(|m| m.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(DecayReport { r, sizes: sizes.to_vec(), trials, fourth_moments: m4, slope, degenerate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMixtureReport {
    /// Moments of `V1 V1' + V2 V2'`.
    pub pooled: TrialReport,
    /// Moments of `V V'` with the mixed density and `L1 + L2` columns.
    pub mixed: TrialReport,
    /// Limit moments of the mixed-density Gram matrix.
    pub exact: Vec<f64>,
}

/// Compares `V1V1' + V2V2'` with a single Vandermonde matrix whose phase
/// density is the `c`-weighted mixture, both against the exact limit.
#[allow(clippy::too_many_arguments)]
pub fn phase_mixture_check(
    p1: &PhaseDensity,
    c1: &Rational,
    p2: &PhaseDensity,
    c2: &Rational,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<PhaseMixtureReport> {
    if k == 0 || k > MAX_SIM_ORDER {
        return Err(Error::Capacity(format!("simulated orders must be 1..={MAX_SIM_ORDER}")));
    }
    let (_, exact) = pooled_gram_moments(p1, c1, p2, c2, k)?;
    let mixed_density = crate::density::mix_phase(p1, c1, p2, c2)?;
    let cols = |c: &Rational| (crate::rational::to_f64(c) * n as f64).round() as usize;
    let (l1, l2) = (cols(c1), cols(c2));
    let (s1, s2, sm) = (PhaseSampler::new(p1)?, PhaseSampler::new(p2)?, PhaseSampler::new(&mixed_density)?);
    let mut pooled = Vec::new();
    let mut mixed = Vec::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let mut w = s1.sample_many(l1, &mut rng);
        w.extend(s2.sample_many(l2, &mut rng));
        pooled.push(outer_gram(n, &w).normalized_power_traces(k));
        let wm = sm.sample_many(l1 + l2, &mut rng);
        mixed.push(outer_gram(n, &wm).normalized_power_traces(k));
    }
    let orders: Vec<usize> = (1..=k).collect();
    Ok(PhaseMixtureReport {
        pooled: TrialReport::from_samples(orders.clone(), &pooled, seed, n),
        mixed: TrialReport::from_samples(orders, &mixed, seed, n),
        exact: exact.iter().map(Value::to_f64).collect(),
    })
}
