//! Named convolutions of moment sequences and their deconvolutions.

use std::str::FromStr;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    evaluate, mixed_moment_formula, normalize, parse_expression, to_v_basis_partial, AspectRatio, Attributes, Bindings,
    MomentPolynomial, Normalization, PhaseAssignment, UNIFORM,
};
use crate::density::{mix_phase, PhaseDensity};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::value::Value;

/// Convention a moment sequence is stated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceNormalization {
    /// `lim tr((V'V)^n)`.
    Vdef,
    /// `c lim tr(D^n)`.
    Dndef,
    /// `c lim tr(E^n)`.
    Mndef,
    /// Plain `lim tr(X^n)`.
    Raw,
}

impl FromStr for SequenceNormalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Argument(format!("unknown normalization {s:?} (vdef, dndef, mndef or raw)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub normalization: SequenceNormalization,
    #[serde(with = "rational_text")]
    pub c: Rational,
    pub values: Vec<Value>,
}

mod rational_text {
    use super::*;
    pub fn serialize<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::to_string(r))
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        match Value::deserialize(d)? {
            Value::Exact(r) => Ok(r),
            Value::Float(_) => Err(serde::de::Error::custom("aspect ratio must be rational")),
        }
    }
}

impl MomentSequence {
    pub fn new(normalization: SequenceNormalization, c: Rational, values: Vec<Value>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("a moment sequence needs at least one value".into()));
        }
        if c <= Rational::zero() {
            return Err(Error::Argument(format!("aspect ratio {c} must be positive")));
        }
        Ok(Self { normalization, c, values })
    }

    pub fn exact(normalization: SequenceNormalization, c: Rational, values: Vec<Rational>) -> Result<Self> {
        Self::new(normalization, c, values.into_iter().map(Value::Exact).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: MomentSequence = serde_json::from_str(text)?;
        Self::new(s.normalization, s.c, s.values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require(&self, k: usize, what: &str) -> Result<()> {
        if self.values.len() < k {
            return Err(Error::Argument(format!("{what} has {} moments, {k} needed", self.values.len())));
        }
        Ok(())
    }

    /// `c lim tr(D^n)` values.
    fn scaled_d(&self) -> Vec<Value> {
        match self.normalization {
            SequenceNormalization::Raw => {
                let c = Value::Exact(self.c.clone());
                self.values.iter().map(|v| v * &c).collect()
            }
            _ => self.values.clone(),
        }
    }
}

/// The Vandermonde side of a convolution: its Gram moments or its phase density.
#[derive(Clone, Debug, PartialEq)]
pub enum GramSource {
    Moments(MomentSequence),
    Density { density: PhaseDensity, c: Rational },
}

impl GramSource {
    pub fn uniform(c: Rational) -> Self {
        GramSource::Density { density: PhaseDensity::Uniform, c }
    }

    fn c(&self) -> &Rational {
        match self {
            GramSource::Moments(m) => &m.c,
            GramSource::Density { c, .. } => c,
        }
    }
}

/// Forward models with a spectra-only moment formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `c tr((D V'V)^n)`.
    Multiplicative,
    /// `c tr((D + V'V)^n)`.
    Additive,
    /// `tr((V1'V1 V2'V2)^n)`, independent phases.
    GramProduct,
    /// `tr((V1'V1 + V2'V2)^n)`, independent phases.
    GramSum,
    /// `tr((V1'V2 V2'V1)^n)`, equal phases.
    CrossGram,
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::Argument(format!(
                "unknown model {s:?} (multiplicative, additive, gram-product, gram-sum, cross-gram)"
            ))
        })
    }
}

impl Model {
    fn text(self) -> &'static str {
        match self {
            Model::Multiplicative => "D1 V1' V1",
            Model::Additive => "D1 + V1' V1",
            Model::GramProduct => "V1' V1 V2' V2",
            Model::GramSum => "V1' V1 + V2' V2",
            Model::CrossGram => "V1' V2 V2' V1",
        }
    }

    fn has_d(self) -> bool {
        matches!(self, Model::Multiplicative | Model::Additive)
    }

    fn output_normalization(self) -> SequenceNormalization {
        if self.has_d() {
            SequenceNormalization::Mndef
        } else {
            SequenceNormalization::Raw
        }
    }
}

fn phase_label(group: u32, src: &GramSource, shared: bool) -> String {
    match src {
        GramSource::Density { density: PhaseDensity::Uniform, .. } => UNIFORM.to_string(),
        _ if shared => "w".to_string(),
        _ => format!("w{group}"),
    }
}

/// Formula of `model` at `order` with the Gram side in V-moments wherever
/// moments are given and in phase integrals where a density is given.
fn model_polynomial(model: Model, order: usize, sides: &[&GramSource]) -> Result<(MomentPolynomial, Bindings)> {
    let shared = model == Model::CrossGram;
    let mut attrs = Attributes::default();
    let mut assignment = PhaseAssignment::default();
    let mut bindings = Bindings::default();
    for (i, src) in sides.iter().enumerate() {
        let g = i as u32 + 1;
        let phase = phase_label(g, src, shared);
        attrs.set_phase(g, &phase);
        attrs.set_c(g, AspectRatio::Value(src.c().clone()));
        match src {
            GramSource::Moments(m) => {
                if !(shared && g > 1) {
                    assignment.insert(&phase, g, AspectRatio::Value(m.c.clone()));
                }
                bindings.v.insert(g, m.values.clone());
            }
            GramSource::Density { density, .. } => {
                bindings.densities.insert(phase, density.clone());
            }
        }
    }
    if shared {
        if let (GramSource::Moments(a), GramSource::Moments(b)) = (sides[0], sides[1]) {
            if a.values != b.values {
                return Err(Error::Argument("cross-Gram moments need one shared phase distribution".into()));
            }
        }
    }
    let expr = parse_expression(model.text(), &attrs)?;
    let raw = mixed_moment_formula(&expr, order)?;
    let poly = to_v_basis_partial(&raw, &assignment)?;
    let norm = if model.has_d() { Normalization::Scaled } else { Normalization::Raw };
    Ok((normalize(&poly, &expr, norm)?, bindings))
}

fn sides_for(model: Model, v: &GramSource, v2: Option<&GramSource>) -> Result<Vec<GramSource>> {
    match model {
        Model::Multiplicative | Model::Additive => Ok(vec![v.clone()]),
        Model::CrossGram => {
            if let Some(GramSource::Density { .. } | GramSource::Moments(_)) = v2 {
                if v2 != Some(v) {
                    return Err(Error::Argument("cross-Gram moments take a single shared Gram source".into()));
                }
            }
            Ok(vec![v.clone(), v.clone()])
        }
        Model::GramProduct | Model::GramSum => {
            let second = v2.ok_or_else(|| Error::Argument("this model needs two Gram sources".into()))?;
            Ok(vec![v.clone(), second.clone()])
        }
    }
}

fn needed_v(model: Model, k: usize) -> usize {
    if model == Model::CrossGram {
        2 * k
    } else {
        k
    }
}

/// Forward convolution of orders `1..=k`.
pub fn convolve(
    model: Model,
    d: Option<&MomentSequence>,
    v: &GramSource,
    v2: Option<&GramSource>,
    k: usize,
) -> Result<MomentSequence> {
    let sides = sides_for(model, v, v2)?;
    for s in &sides {
        if let GramSource::Moments(m) = s {
            m.require(needed_v(model, k), "Gram moment sequence")?;
        }
    }
    let d_values = match (model.has_d(), d) {
        (true, Some(d)) => {
            d.require(k, "D moment sequence")?;
            Some(d.scaled_d())
        }
        (true, None) => return Err(Error::Argument("this model needs D moments".into())),
        (false, _) => None,
    };
    let refs: Vec<&GramSource> = sides.iter().collect();
    let mut out = Vec::with_capacity(k);
    for n in 1..=k {
        let (poly, mut b) = model_polynomial(model, n, &refs)?;
        if let Some(dv) = &d_values {
            b.d_moments.insert(1, dv.clone());
        }
        out.push(evaluate(&poly, &b)?);
    }
    let c = if model.has_d() { v.c().clone() } else { Rational::one() };
    MomentSequence::new(model.output_normalization(), c, out)
}

/// `c tr((D V'V)^n)`, `n = 1..=k`.
pub fn multiplicative_dv(d: &MomentSequence, v: &GramSource, k: usize) -> Result<MomentSequence> {
    convolve(Model::Multiplicative, Some(d), v, None, k)
}

/// `c tr((D + V'V)^n)`, `n = 1..=k`.
pub fn additive_dv(d: &MomentSequence, v: &GramSource, k: usize) -> Result<MomentSequence> {
    convolve(Model::Additive, Some(d), v, None, k)
}

pub fn gram_product(v1: &GramSource, v2: &GramSource, k: usize) -> Result<MomentSequence> {
    convolve(Model::GramProduct, None, v1, Some(v2), k)
}

pub fn gram_sum(v1: &GramSource, v2: &GramSource, k: usize) -> Result<MomentSequence> {
    convolve(Model::GramSum, None, v1, Some(v2), k)
}

/// `tr((V1'V2 V2'V1)^n)` for two matrices sharing one phase distribution;
/// consumes `V_2..V_{2k}`.
pub fn cross_gram_moments(v: &GramSource, k: usize) -> Result<MomentSequence> {
    convolve(Model::CrossGram, None, v, None, k)
}

/// Which side of a convolution is unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unknown {
    D,
    /// The (second) Gram matrix.
    V,
}

/// Solves `α + β x = m` for the new unknown `x` at one order.
fn solve_linear(f: &dyn Fn(Value) -> Result<Value>, m: &Value, unit: bool) -> Result<Value> {
    let a = f(Value::zero())?;
    let a1 = f(Value::one())?;
    let beta = &a1 - &a;
    if let (Value::Exact(b), true) = (&beta, unit) {
        assert!(b.is_one(), "leading coefficient {b} is not 1");
    }
    if let (Some(a), Some(a1)) = (a.as_rational(), a1.as_rational()) {
        let a2 = f(Value::Exact(rational::int(2)))?;
        debug_assert_eq!(a2.as_rational().cloned(), Some(a1 * rational::int(2) - a));
    }
    if beta.is_zero() {
        return Err(Error::Argument("the unknown moment does not enter this order (degenerate input)".into()));
    }
    Ok(&(m - &a) / &beta)
}

/// Recovers one side of `model` from its output moments `m` by sequential
/// back-substitution; exact when all inputs are. `c_unknown` is the aspect
/// ratio of an unknown Gram side (default `m.c`).
pub fn deconvolve(
    model: Model,
    unknown: Unknown,
    m: &MomentSequence,
    d: Option<&MomentSequence>,
    v: Option<&GramSource>,
    c_unknown: Option<&Rational>,
    k: usize,
) -> Result<MomentSequence> {
    m.require(k, "convolved moment sequence")?;
    if model == Model::CrossGram {
        return Err(Error::Refused(
            "cross-Gram moments of order n involve V_2..V_2n: twice as many unknowns as equations".into(),
        ));
    }
    let mut found: Vec<Value> = Vec::with_capacity(k);
    if unknown == Unknown::V {
        // unit diagonal of a Gram matrix
        found.push(Value::one());
    }
    match (unknown, model.has_d()) {
        (Unknown::D, true) => {
            let v = v.ok_or_else(|| Error::Argument("the Gram side must be known".into()))?;
            let c = v.c().clone();
            for n in 1..=k {
                let f = |x: Value| {
                    let mut vals = found.clone();
                    vals.push(x);
                    let seq = MomentSequence::new(SequenceNormalization::Dndef, c.clone(), vals)?;
                    Ok(convolve(model, Some(&seq), v, None, n)?.values[n - 1].clone())
                };
                found.push(solve_linear(&f, &m.values[n - 1], true)?);
            }
            MomentSequence::new(SequenceNormalization::Dndef, c, found)
        }
        (Unknown::V, true) => {
            let d = d.ok_or_else(|| Error::Argument("the D side must be known".into()))?;
            let c = c_unknown.unwrap_or(&m.c).clone();
            for n in 2..=k {
                let f = |x: Value| {
                    let mut vals = found.clone();
                    vals.push(x);
                    let src = GramSource::Moments(MomentSequence::new(SequenceNormalization::Vdef, c.clone(), vals)?);
                    Ok(convolve(model, Some(d), &src, None, n)?.values[n - 1].clone())
                };
                found.push(solve_linear(&f, &m.values[n - 1], false)?);
            }
            MomentSequence::new(SequenceNormalization::Vdef, c, found)
        }
        (Unknown::V, false) => {
            let known = v.ok_or_else(|| Error::Argument("the first Gram side must be known".into()))?;
            let c2 = c_unknown.unwrap_or(&m.c).clone();
            for n in 2..=k {
                let f = |x: Value| {
                    let mut vals = found.clone();
                    vals.push(x);
                    let src = GramSource::Moments(MomentSequence::new(SequenceNormalization::Vdef, c2.clone(), vals)?);
                    Ok(convolve(model, None, known, Some(&src), n)?.values[n - 1].clone())
                };
                found.push(solve_linear(&f, &m.values[n - 1], false)?);
            }
            MomentSequence::new(SequenceNormalization::Vdef, c2, found)
        }
        (Unknown::D, false) => Err(Error::Argument("this model has no D side".into())),
    }
}

pub fn deconvolve_d(model: Model, m: &MomentSequence, v: &GramSource, k: usize) -> Result<MomentSequence> {
    deconvolve(model, Unknown::D, m, None, Some(v), None, k)
}

pub fn deconvolve_v(model: Model, m: &MomentSequence, d: &MomentSequence, k: usize) -> Result<MomentSequence> {
    deconvolve(model, Unknown::V, m, Some(d), None, None, k)
}

/// Moments of `V1 V1' + V2 V2'` (N×N, `tr_N`) computed two ways: from the
/// two-phase formula with cross integrals, and from a single Vandermonde
/// matrix with the mixed density and aspect ratio `c1 + c2`.
pub fn pooled_gram_moments(
    p1: &PhaseDensity,
    c1: &Rational,
    p2: &PhaseDensity,
    c2: &Rational,
    k: usize,
) -> Result<(Vec<Value>, Vec<Value>)> {
    let mut a = Attributes::default();
    a.set_phase(1, if *p1 == PhaseDensity::Uniform { UNIFORM } else { "w1" });
    a.set_phase(2, if *p2 == PhaseDensity::Uniform { UNIFORM } else { "w2" });
    a.set_c(1, AspectRatio::Value(c1.clone()));
    a.set_c(2, AspectRatio::Value(c2.clone()));
    let pair = parse_expression("V1 V1' + V2 V2'", &a)?;
    let b = Bindings::default().with_density("w1", p1.clone()).with_density("w2", p2.clone());
    let mixed = mix_phase(p1, c1, p2, c2)?;
    let mut s = Attributes::default();
    s.set_phase(1, if mixed == PhaseDensity::Uniform { UNIFORM } else { "w" });
    s.set_c(1, AspectRatio::Value(c1 + c2));
    let single = parse_expression("V1 V1'", &s)?;
    let bs = Bindings::default().with_density("w", mixed);
    let mut two = Vec::new();
    let mut one = Vec::new();
    for n in 1..=k {
        two.push(evaluate(&mixed_moment_formula(&pair, n)?, &b)?);
        one.push(evaluate(&mixed_moment_formula(&single, n)?, &bs)?);
    }
    Ok((two, one))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use SequenceNormalization::*;

    fn seq(n: SequenceNormalization, v: &[Rational]) -> MomentSequence {
        MomentSequence::exact(n, int(1), v.to_vec()).unwrap()
    }

    fn exact(values: &[Value]) -> Vec<Rational> {
        values.iter().map(|v| v.as_rational().unwrap().clone()).collect()
    }

    #[test]
    fn identity_d_with_uniform_gram() {
        let d = seq(Dndef, &[int(1), int(1), int(1), int(1)]);
        let m = multiplicative_dv(&d, &GramSource::uniform(int(1)), 4).unwrap();
        assert_eq!(exact(&m.values), vec![int(1), int(2), int(5), frac(44, 3)]);
        let ones = GramSource::Moments(seq(Vdef, &vec![int(1); 4]));
        assert_eq!(exact(&multiplicative_dv(&d, &ones, 4).unwrap().values), vec![int(1); 4]);
    }

    #[test]
    fn additive_orders() {
        let zero = seq(Dndef, &vec![int(0); 4]);
        let m = additive_dv(&zero, &GramSource::uniform(int(1)), 4).unwrap();
        assert_eq!(exact(&m.values), vec![int(1), int(2), int(5), frac(44, 3)]);
        let d = seq(Dndef, &[int(1)]);
        assert_eq!(exact(&additive_dv(&d, &GramSource::uniform(int(1)), 1).unwrap().values), vec![int(2)]);
    }

    #[test]
    fn gram_first_moments() {
        let u = GramSource::uniform(int(1));
        assert_eq!(exact(&gram_product(&u, &u, 1).unwrap().values), vec![int(1)]);
        assert_eq!(exact(&gram_sum(&u, &u, 1).unwrap().values), vec![int(2)]);
    }

    #[test]
    fn deconvolution_examples() {
        let m = seq(Mndef, &[int(1), frac(13, 6)]);
        let d = deconvolve_d(Model::Multiplicative, &m, &GramSource::uniform(int(1)), 2).unwrap();
        assert_eq!(exact(&d.values), vec![int(1), frac(7, 6)]);
        let m = seq(Mndef, &[int(1), int(2), int(5), frac(44, 3)]);
        let d = deconvolve_d(Model::Multiplicative, &m, &GramSource::uniform(int(1)), 4).unwrap();
        assert_eq!(exact(&d.values), vec![int(1); 4]);
    }

    #[test]
    fn round_trip_gram_side() {
        let d = seq(Dndef, &[int(1), frac(7, 6), frac(3, 2), frac(177, 96)]);
        let v = seq(Vdef, &[int(1), frac(5, 2), frac(15, 2), int(30)]);
        let m = multiplicative_dv(&d, &GramSource::Moments(v.clone()), 4).unwrap();
        assert_eq!(deconvolve_v(Model::Multiplicative, &m, &d, 4).unwrap().values, v.values);
    }

    #[test]
    fn round_trip_gram_models() {
        let v1 = GramSource::Moments(seq(Vdef, &[int(1), int(3), int(12), int(55)]));
        let v2 = seq(Vdef, &[int(1), frac(7, 3), int(7), frac(100, 3)]);
        for model in [Model::GramProduct, Model::GramSum] {
            let m = convolve(model, None, &v1, Some(&GramSource::Moments(v2.clone())), 4).unwrap();
            let back = deconvolve(model, Unknown::V, &m, None, Some(&v1), Some(&int(1)), 4).unwrap();
            assert_eq!(back.values, v2.values);
        }
    }

    #[test]
    fn cross_gram_refuses_inversion() {
        let m = seq(Raw, &[int(1)]);
        let r = deconvolve(Model::CrossGram, Unknown::V, &m, None, Some(&GramSource::uniform(int(1))), None, 1);
        assert!(matches!(r, Err(Error::Refused(_))));
    }

    #[test]
    fn length_shortfall() {
        let d = seq(Dndef, &[int(1)]);
        assert!(multiplicative_dv(&d, &GramSource::uniform(int(1)), 2).is_err());
    }

    #[test]
    fn sequence_json() {
        let s = MomentSequence::from_json(r#"{"normalization":"dndef","c":"1/2","values":["1","7/6"]}"#).unwrap();
        assert_eq!(s.c, frac(1, 2));
        assert_eq!(MomentSequence::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn pooled_halves() {
        let a = PhaseDensity::uniform_arc(int(0), frac(1, 2)).unwrap();
        let b = PhaseDensity::uniform_arc(frac(1, 2), int(1)).unwrap();
        let (two, one) = pooled_gram_moments(&a, &int(1), &b, &frac(1, 2), 3).unwrap();
        assert_eq!(two, one);
        assert!(two.iter().all(Value::is_exact));
    }
}
