//! Phase densities on `[0, 2π)`.
//!
//! Internally a density is stored in the normalized coordinate `u = x/2π`
//! as `q(u) = 2π p(2πu)` on `[0, 1)`, so that `I_k = ∫ q^k du`.

use std::collections::BTreeMap;
use std::path::Path;

use num::{FromPrimitive, Num, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::value::Value;

/// Grid size used when mixing tabulated densities.
pub const MIX_GRID: usize = 4096;

/// Polynomial piece `Σ coeffs[j] u^j` on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece<T> {
    pub lo: T,
    pub hi: T,
    pub coeffs: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseDensity {
    Uniform,
    /// Exact piecewise polynomial in `u`.
    Piecewise(Vec<Piece<Rational>>),
    /// Piecewise linear interpolation of tabulated values.
    Tabulated(Vec<Piece<f64>>),
}

trait Field: Num + Clone + PartialOrd + FromPrimitive {}
impl Field for Rational {}
impl Field for f64 {}

fn eval<T: Field>(coeffs: &[T], u: &T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, c| acc * u.clone() + c.clone())
}

fn poly_mul<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn poly_integral<T: Field>(coeffs: &[T], lo: &T, hi: &T) -> T {
    let mut total = T::zero();
    let (mut ph, mut pl) = (hi.clone(), lo.clone());
    for (j, c) in coeffs.iter().enumerate() {
        let d = T::from_usize(j + 1).unwrap();
        total = total + c.clone() * (ph.clone() - pl.clone()) / d;
        ph = ph * hi.clone();
        pl = pl * lo.clone();
    }
    total
}

/// `p(u - s)` expanded in powers of `u`.
fn poly_shift<T: Field>(coeffs: &[T], s: &T) -> Vec<T> {
    let mut out = vec![T::zero(); coeffs.len()];
    // Horner on (u - s)
    for c in coeffs.iter().rev() {
        let mut next = vec![T::zero(); coeffs.len()];
        for j in 0..coeffs.len() {
            if j + 1 < coeffs.len() {
                next[j + 1] = next[j + 1].clone() + out[j].clone();
            }
            next[j] = next[j].clone() - out[j].clone() * s.clone();
        }
        next[0] = next[0].clone() + c.clone();
        out = next;
    }
    out
}

/// `∫ Π q_i^{e_i}` over the common refinement of the pieces.
fn product_integral<T: Field>(factors: &[(&[Piece<T>], u32)]) -> T {
    let mut cuts: Vec<T> = vec![T::zero(), T::one()];
    for (pieces, _) in factors {
        for p in pieces.iter() {
            cuts.push(p.lo.clone());
            cuts.push(p.hi.clone());
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = T::zero();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let two = T::from_u8(2).unwrap();
        let mid = (lo.clone() + hi.clone()) / two;
        let mut prod = vec![T::one()];
        let mut alive = true;
        for (pieces, e) in factors {
            match pieces.iter().find(|p| p.lo <= mid && mid < p.hi) {
                Some(p) => {
                    for _ in 0..*e {
                        prod = poly_mul(&prod, &p.coeffs);
                    }
                }
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            total = total + poly_integral(&prod, lo, hi);
        }
    }
    total
}

fn rotate_pieces<T: Field>(pieces: &[Piece<T>], s: &T) -> Vec<Piece<T>> {
    let one = T::one();
    let mut out = Vec::new();
    for p in pieces {
        let coeffs = poly_shift(&p.coeffs, s);
        let (lo, hi) = (p.lo.clone() + s.clone(), p.hi.clone() + s.clone());
        if hi <= one {
            out.push(Piece { lo, hi, coeffs });
        } else if lo >= one {
            let back = poly_shift(&coeffs, &(T::zero() - one.clone()));
            out.push(Piece { lo: lo - one.clone(), hi: hi - one.clone(), coeffs: back });
        } else {
            let back = poly_shift(&coeffs, &(T::zero() - one.clone()));
            out.push(Piece { lo, hi: one.clone(), coeffs });
            out.push(Piece { lo: T::zero(), hi: hi - one.clone(), coeffs: back });
        }
    }
    out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    out
}

fn to_float(pieces: &[Piece<Rational>]) -> Vec<Piece<f64>> {
    pieces
        .iter()
        .map(|p| Piece {
            lo: rational::to_f64(&p.lo),
            hi: rational::to_f64(&p.hi),
            coeffs: p.coeffs.iter().map(rational::to_f64).collect(),
        })
        .collect()
}

fn uniform_pieces() -> Vec<Piece<Rational>> {
    vec![Piece { lo: Rational::zero(), hi: rational::one(), coeffs: vec![rational::one()] }]
}

impl PhaseDensity {
    /// Uniform density on the arc `[2π lo, 2π hi)`, `0 ≤ lo < hi ≤ 1`.
    pub fn uniform_arc(lo: Rational, hi: Rational) -> Result<Self> {
        if lo.is_negative() || hi > rational::one() || lo >= hi {
            return Err(Error::Argument(format!("arc [{lo}, {hi}) is not inside [0, 1)")));
        }
        let height = rational::one() / (&hi - &lo);
        Self::piecewise(vec![Piece { lo, hi, coeffs: vec![height] }])
    }

    /// Exact piecewise polynomial density; checks mass 1 and nonnegativity.
    pub fn piecewise(pieces: Vec<Piece<Rational>>) -> Result<Self> {
        let mut pieces = pieces;
        pieces.retain(|p| p.lo < p.hi && p.coeffs.iter().any(|c| !c.is_zero()));
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::Argument("density pieces overlap".into()));
            }
        }
        if pieces.first().is_some_and(|p| p.lo.is_negative()) || pieces.last().is_some_and(|p| p.hi > rational::one()) {
            return Err(Error::Argument("density pieces leave [0, 1)".into()));
        }
        let mass: Rational = pieces.iter().map(|p| poly_integral(&p.coeffs, &p.lo, &p.hi)).sum();
        if mass != rational::one() {
            return Err(Error::Argument(format!("density has mass {mass}, not 1")));
        }
        for p in &to_float(&pieces) {
            for s in 0..=64 {
                let u = p.lo + (p.hi - p.lo) * s as f64 / 64.0;
                if eval(&p.coeffs, &u) < -1e-12 {
                    return Err(Error::Argument(format!("density is negative near u = {u}")));
                }
            }
        }
        // merge neighbours with identical polynomials
        let mut merged: Vec<Piece<Rational>> = Vec::new();
        for p in pieces {
            match merged.last_mut() {
                Some(last) if last.hi == p.lo && last.coeffs == p.coeffs => last.hi = p.hi,
                _ => merged.push(p),
            }
        }
        if merged == uniform_pieces() {
            return Ok(PhaseDensity::Uniform);
        }
        Ok(PhaseDensity::Piecewise(merged))
    }

    /// Tabulated `(x, p(x))` with `x` in radians; linear between knots, zero
    /// outside them. The mass is renormalized to 1 by the trapezoid rule.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument("a tabulated density needs at least two points".into()));
        }
        let two_pi = std::f64::consts::TAU;
        let mut mass = 0.0;
        for w in points.windows(2) {
            let ((x0, p0), (x1, p1)) = (w[0], w[1]);
            if !(x1 > x0) {
                return Err(Error::Argument(format!("abscissae must increase (at x = {x1})")));
            }
            mass += (x1 - x0) * (p0 + p1) / 2.0;
        }
        if points[0].0 < 0.0 || points[points.len() - 1].0 > two_pi + 1e-12 {
            return Err(Error::Argument("abscissae must lie in [0, 2π]".into()));
        }
        if let Some(&(x, _)) = points.iter().find(|(_, p)| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Argument(format!("density value at x = {x} is negative or not finite")));
        }
        if !(mass > 0.0) {
            return Err(Error::Argument("tabulated density has zero mass".into()));
        }
        let pieces = points
            .windows(2)
            .map(|w| {
                let (u0, u1) = (w[0].0 / two_pi, (w[1].0 / two_pi).min(1.0));
                let (q0, q1) = (w[0].1 * two_pi / mass, w[1].1 * two_pi / mass);
                let slope = (q1 - q0) / (u1 - u0);
                Piece { lo: u0, hi: u1, coeffs: vec![q0 - slope * u0, slope] }
            })
            .collect();
        Ok(PhaseDensity::Tabulated(pieces))
    }

    /// CSV of `x,p(x)` rows; a non-numeric first row is taken as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { pos: i, msg: e.to_string() })?;
            if rec.len() < 2 {
                return Err(Error::Parse { pos: i, msg: "expected two columns".into() });
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(p)) => points.push((x, p)),
                _ if i == 0 => continue,
                _ => return Err(Error::Parse { pos: i, msg: format!("non-numeric row {:?}", rec.as_slice()) }),
            }
        }
        Self::tabulated(&points)
    }

    /// `"uniform"` or the path of a CSV file.
    pub fn load(source: &str) -> Result<Self> {
        if source.trim() == "uniform" {
            return Ok(PhaseDensity::Uniform);
        }
        Self::from_csv(&std::fs::read_to_string(Path::new(source))?)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, PhaseDensity::Tabulated(_))
    }

    fn exact_pieces(&self) -> Option<Vec<Piece<Rational>>> {
        match self {
            PhaseDensity::Uniform => Some(uniform_pieces()),
            PhaseDensity::Piecewise(p) => Some(p.clone()),
            PhaseDensity::Tabulated(_) => None,
        }
    }

    fn float_pieces(&self) -> Vec<Piece<f64>> {
        match self {
            PhaseDensity::Tabulated(p) => p.clone(),
            _ => to_float(&self.exact_pieces().unwrap()),
        }
    }

    /// Normalized density `q(u)`.
    pub fn q(&self, u: f64) -> f64 {
        self.float_pieces()
            .iter()
            .find(|p| p.lo <= u && u < p.hi)
            .map_or(0.0, |p| eval(&p.coeffs, &u))
    }

    /// `I_k = (2π)^{k-1} ∫ p^k`.
    pub fn i_k(&self, k: u32) -> Value {
        cross_integral(&[(self, k)])
    }

    /// Total mass (1 up to rounding for tabulated densities).
    pub fn mass(&self) -> Value {
        self.i_k(1)
    }

    /// The density rotated by `2π s`.
    pub fn rotate(&self, s: &Rational) -> Result<Self> {
        let s = s - s.floor();
        match self {
            PhaseDensity::Uniform => Ok(PhaseDensity::Uniform),
            PhaseDensity::Piecewise(p) => Self::piecewise(rotate_pieces(p, &s)),
            PhaseDensity::Tabulated(p) => Ok(PhaseDensity::Tabulated(rotate_pieces(p, &rational::to_f64(&s)))),
        }
    }

    /// Values of `u ↦ ∫_0^u q` on `knots + 1` equally spaced points of `[0, 1]`.
    pub fn cdf_table(&self, knots: usize) -> Vec<f64> {
        let pieces = self.float_pieces();
        let mut out = Vec::with_capacity(knots + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for s in 0..knots {
            let (lo, hi) = (s as f64 / knots as f64, (s + 1) as f64 / knots as f64);
            for p in &pieces {
                let (a, b) = (p.lo.max(lo), p.hi.min(hi));
                if a < b {
                    acc += poly_integral(&p.coeffs, &a, &b);
                }
            }
            out.push(acc);
        }
        let total = *out.last().unwrap();
        out.iter_mut().for_each(|v| *v /= total);
        out
    }
}

/// `J = (2π)^{k-1} ∫ Π p_i^{e_i}`, exact when every density is.
pub fn cross_integral(factors: &[(&PhaseDensity, u32)]) -> Value {
    let exact: Option<Vec<(Vec<Piece<Rational>>, u32)>> =
        factors.iter().map(|(d, e)| d.exact_pieces().map(|p| (p, *e))).collect();
    match exact {
        Some(ex) => {
            let refs: Vec<(&[Piece<Rational>], u32)> = ex.iter().map(|(p, e)| (p.as_slice(), *e)).collect();
            Value::Exact(product_integral(&refs))
        }
        None => {
            let fl: Vec<(Vec<Piece<f64>>, u32)> = factors.iter().map(|(d, e)| (d.float_pieces(), *e)).collect();
            let refs: Vec<(&[Piece<f64>], u32)> = fl.iter().map(|(p, e)| (p.as_slice(), *e)).collect();
            Value::Float(product_integral(&refs))
        }
    }
}

/// Density of the pooled phases of two independent matrices with aspect
/// ratios `c1`, `c2`: `(c1 p1 + c2 p2)/(c1 + c2)`.
pub fn mix_phase(p1: &PhaseDensity, c1: &Rational, p2: &PhaseDensity, c2: &Rational) -> Result<PhaseDensity> {
    if c1.is_negative() || c2.is_negative() || (c1.is_zero() && c2.is_zero()) {
        return Err(Error::Argument("mixing weights must be nonnegative and not both zero".into()));
    }
    if c2.is_zero() || p1 == p2 {
        return Ok(p1.clone());
    }
    if c1.is_zero() {
        return Ok(p2.clone());
    }
    let total = c1 + c2;
    let (w1, w2) = (c1 / &total, c2 / &total);
    match (p1.exact_pieces(), p2.exact_pieces()) {
        (Some(a), Some(b)) => {
            let mut cuts: Vec<Rational> = a.iter().chain(&b).flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect();
            cuts.sort();
            cuts.dedup();
            let mut pieces = Vec::new();
            for w in cuts.windows(2) {
                let mid = (&w[0] + &w[1]) / rational::int(2);
                let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
                for (src, weight) in [(&a, &w1), (&b, &w2)] {
                    if let Some(p) = src.iter().find(|p| p.lo <= mid && mid < p.hi) {
                        for (j, c) in p.coeffs.iter().enumerate() {
                            *coeffs.entry(j).or_insert_with(Rational::zero) += c * weight;
                        }
                    }
                }
                if coeffs.values().any(|c| !c.is_zero()) {
                    let deg = *coeffs.keys().max().unwrap();
                    let mut v = vec![Rational::zero(); deg + 1];
                    for (j, c) in coeffs {
                        v[j] = c;
                    }
                    while v.len() > 1 && v.last().unwrap().is_zero() {
                        v.pop();
                    }
                    pieces.push(Piece { lo: w[0].clone(), hi: w[1].clone(), coeffs: v });
                }
            }
            PhaseDensity::piecewise(pieces)
        }
        _ => {
            let (f1, f2) = (rational::to_f64(&w1), rational::to_f64(&w2));
            let two_pi = std::f64::consts::TAU;
            let points: Vec<(f64, f64)> = (0..=MIX_GRID)
                .map(|s| {
                    let u = s as f64 / MIX_GRID as f64;
                    let uu = u.min(1.0 - 1e-15);
                    (u * two_pi, (f1 * p1.q(uu) + f2 * p2.q(uu)) / two_pi)
                })
                .collect();
            PhaseDensity::tabulated(&points)
        }
    }
}
