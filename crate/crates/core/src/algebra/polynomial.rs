//! Moment polynomials: rational linear combinations of monomials in
//! aspect ratios, D-moments, V-moments and phase integrals.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// `D_{i1,...,is} = lim tr(D_{i1} ... D_{is})`, labels sorted ascending.
pub type DIndex = Vec<u32>;

/// `V_k^{(g)}`: the k-th moment of the Gram matrix of V-group `g`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VSym {
    pub matrix: u32,
    pub order: u32,
}

/// `I_{k,ω} = (2π)^{k-1} ∫ p_ω^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ISym {
    pub phase: String,
    pub order: u32,
}

/// Cross integral `(2π)^{k-1} ∫ Π_ω p_ω^{e_ω}`, `k = Σ e_ω`.
pub type JSym = BTreeMap<String, u32>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub c: BTreeMap<String, i32>,
    pub d: Vec<DIndex>,
    pub v: Vec<VSym>,
    pub i: Vec<ISym>,
    pub j: Vec<JSym>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn is_one(&self) -> bool {
        self.c.is_empty() && self.d.is_empty() && self.v.is_empty() && self.i.is_empty() && self.j.is_empty()
    }

    fn normalize(mut self) -> Self {
        self.c.retain(|_, p| *p != 0);
        for d in self.d.iter_mut() {
            d.sort();
        }
        self.d.retain(|d| !d.is_empty());
        self.d.sort();
        self.v.retain(|v| v.order != 1);
        self.v.sort();
        self.i.retain(|i| i.order != 1);
        self.i.sort();
        self.j.retain(|j| j.values().sum::<u32>() > 1);
        self.j.sort();
        self
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (k, p) in &other.c {
            *out.c.entry(k.clone()).or_default() += p;
        }
        out.d.extend(other.d.iter().cloned());
        out.v.extend(other.v.iter().cloned());
        out.i.extend(other.i.iter().cloned());
        out.j.extend(other.j.iter().cloned());
        out.normalize()
    }

    pub fn with_c(mut self, symbol: &str, power: i32) -> Monomial {
        *self.c.entry(symbol.to_string()).or_default() += power;
        self.normalize()
    }

    pub fn with_d(mut self, d: DIndex) -> Monomial {
        self.d.push(d);
        self.normalize()
    }

    pub fn with_v(mut self, matrix: u32, order: u32) -> Monomial {
        self.v.push(VSym { matrix, order });
        self.normalize()
    }

    pub fn with_i(mut self, phase: &str, order: u32) -> Monomial {
        self.i.push(ISym { phase: phase.to_string(), order });
        self.normalize()
    }

    pub fn with_j(mut self, j: JSym) -> Monomial {
        self.j.push(j);
        self.normalize()
    }

    /// Total D weight (number of D-matrix factors).
    pub fn d_weight(&self) -> usize {
        self.d.iter().map(|d| d.len()).sum()
    }

    /// Ordering used for display: D-part by decreasing weight, then fewer
    /// factors, then larger parts first; V, I and J parts by increasing order.
    pub fn display_cmp(&self, other: &Monomial) -> Ordering {
        let d_key = |m: &Monomial| {
            let mut sizes: Vec<usize> = m.d.iter().map(|d| d.len()).collect();
            sizes.sort();
            (m.d_weight(), m.d.len(), sizes)
        };
        let (wa, na, sa) = d_key(self);
        let (wb, nb, sb) = d_key(other);
        let ascending = |a: &[u32], b: &[u32]| (a.iter().sum::<u32>(), a.len(), a.to_vec()).cmp(&(b.iter().sum::<u32>(), b.len(), b.to_vec()));
        let vo = |m: &Monomial| m.v.iter().map(|v| v.order).collect::<Vec<_>>();
        let io = |m: &Monomial| m.i.iter().map(|v| v.order).collect::<Vec<_>>();
        let jo = |m: &Monomial| m.j.iter().map(|j| j.values().sum::<u32>()).collect::<Vec<_>>();
        wb.cmp(&wa)
            .then(na.cmp(&nb))
            .then(sb.cmp(&sa))
            .then_with(|| self.d.cmp(&other.d))
            .then_with(|| ascending(&vo(self), &vo(other)))
            .then_with(|| ascending(&io(self), &io(other)))
            .then_with(|| ascending(&jo(self), &jo(other)))
            .then_with(|| self.cmp(other))
    }
}

/// A polynomial in moment symbols with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MomentPolynomial {
    pub order: usize,
    pub terms: BTreeMap<Monomial, Rational>,
}

impl MomentPolynomial {
    pub fn zero(order: usize) -> Self {
        MomentPolynomial { order, terms: BTreeMap::new() }
    }

    pub fn constant(order: usize, c: Rational) -> Self {
        let mut p = Self::zero(order);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let m = m.normalize();
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &MomentPolynomial) -> MomentPolynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero(self.order);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &MomentPolynomial) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero(self.order);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Multiplies every term by a monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero(self.order);
        for (ma, c) in &self.terms {
            out.add_term(ma.mul(m), c.clone());
        }
        out
    }

    /// True when no J cross-integral appears.
    pub fn is_spectra_only(&self) -> bool {
        self.terms.keys().all(|m| m.j.is_empty())
    }

    pub fn has_i_factors(&self) -> bool {
        self.terms.keys().any(|m| !m.i.is_empty())
    }

    /// Terms in display order.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &Rational)> {
        let mut out: Vec<_> = self.terms.iter().collect();
        out.sort_by(|a, b| a.0.display_cmp(b.0));
        out
    }

    /// Replaces every factor for which `f` returns a polynomial.
    pub fn substitute(&self, f: &dyn Fn(&Factor) -> Option<MomentPolynomial>) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero(self.order);
        for (m, c) in &self.terms {
            let mut acc = MomentPolynomial::constant(self.order, c.clone());
            let mut rest = Monomial { c: m.c.clone(), ..Monomial::default() };
            for factor in m.factors() {
                match f(&factor) {
                    Some(p) => acc = acc.mul(&p),
                    None => rest = rest.mul(&factor.monomial()),
                }
            }
            out = out.add(&acc.mul_monomial(&rest));
        }
        out
    }
}

/// One non-c factor of a monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    D(DIndex),
    V(VSym),
    I(ISym),
    J(JSym),
}

impl Factor {
    pub fn monomial(&self) -> Monomial {
        let m = Monomial::one();
        match self {
            Factor::D(d) => m.with_d(d.clone()),
            Factor::V(v) => m.with_v(v.matrix, v.order),
            Factor::I(i) => m.with_i(&i.phase, i.order),
            Factor::J(j) => m.with_j(j.clone()),
        }
    }
}

impl Monomial {
    pub fn factors(&self) -> Vec<Factor> {
        let mut out: Vec<Factor> = self.d.iter().cloned().map(Factor::D).collect();
        out.extend(self.v.iter().cloned().map(Factor::V));
        out.extend(self.i.iter().cloned().map(Factor::I));
        out.extend(self.j.iter().cloned().map(Factor::J));
        out
    }
}

// ---------------------------------------------------------------- emission

/// Output format for [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Latex,
    Text,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latex" => Ok(Format::Latex),
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(Error::Argument(format!("unknown format {other:?} (latex, text or json)"))),
        }
    }
}

struct Style {
    single_d_label: bool,
    single_v_group: bool,
    latex: bool,
}

fn style_for(poly: &MomentPolynomial, latex: bool) -> Style {
    let mut d_labels = std::collections::BTreeSet::new();
    let mut v_groups = std::collections::BTreeSet::new();
    for m in poly.terms.keys() {
        for d in &m.d {
            d_labels.extend(d.iter().copied());
        }
        for v in &m.v {
            v_groups.insert(v.matrix);
        }
    }
    Style { single_d_label: d_labels.len() <= 1, single_v_group: v_groups.len() <= 1, latex }
}

fn power(base: String, p: usize, latex: bool) -> String {
    match (p, latex) {
        (1, _) => base,
        (_, true) => format!("{base}^{{{p}}}"),
        (_, false) => format!("{base}^{p}"),
    }
}

/// Groups equal consecutive items into (item, multiplicity).
fn runs<T: PartialEq + Clone>(items: &[T]) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize)> = Vec::new();
    for it in items {
        match out.last_mut() {
            Some((x, k)) if x == it => *k += 1,
            _ => out.push((it.clone(), 1)),
        }
    }
    out
}

fn monomial_body(m: &Monomial, st: &Style) -> String {
    let mut parts: Vec<String> = Vec::new();
    let sep = if st.latex { "" } else { " " };
    for (sym, &p) in &m.c {
        let base = if st.latex && sym.len() > 1 && sym.starts_with('c') {
            format!("c_{{{}}}", &sym[1..])
        } else {
            sym.clone()
        };
        parts.push(match (p, st.latex) {
            (1, _) => base,
            (_, true) => format!("{base}^{{{p}}}"),
            (_, false) => format!("{base}^{p}"),
        });
    }
    // D factors, larger first
    let mut ds = m.d.clone();
    ds.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    for (d, k) in runs(&ds) {
        let base = if st.single_d_label {
            if st.latex { format!("D_{{{}}}", d.len()) } else { format!("D{}", d.len()) }
        } else {
            let idx: Vec<String> = d.iter().map(|x| x.to_string()).collect();
            if st.latex { format!("D_{{{}}}", idx.join(",")) } else { format!("D[{}]", idx.join(",")) }
        };
        parts.push(power(base, k, st.latex));
    }
    for (v, k) in runs(&m.v) {
        let base = match (st.single_v_group, st.latex) {
            (true, true) => format!("V_{{{}}}", v.order),
            (true, false) => format!("V{}", v.order),
            (false, true) => format!("V_{{{}}}^{{({})}}", v.order, v.matrix),
            (false, false) => format!("V{}({})", v.order, v.matrix),
        };
        let base = if k > 1 && !st.single_v_group && st.latex { format!("({base})") } else { base };
        parts.push(power(base, k, st.latex));
    }
    for (i, k) in runs(&m.i) {
        let base = if st.latex { format!("I_{{{},{}}}", i.order, i.phase) } else { format!("I{}[{}]", i.order, i.phase) };
        parts.push(power(base, k, st.latex));
    }
    for (j, k) in runs(&m.j) {
        let idx: Vec<String> = j
            .iter()
            .map(|(ph, e)| if *e == 1 { ph.clone() } else if st.latex { format!("{ph}^{{{e}}}") } else { format!("{ph}^{e}") })
            .collect();
        let base = if st.latex { format!("J_{{{}}}", idx.join(",")) } else { format!("J[{}]", idx.join(",")) };
        parts.push(power(base, k, st.latex));
    }
    parts.join(sep)
}

fn coefficient(c: &Rational, latex: bool, has_body: bool) -> String {
    let a = c.abs();
    if a.is_one() && has_body {
        return String::new();
    }
    let s = if a.is_integer() {
        a.numer().to_string()
    } else if latex {
        format!("\\frac{{{}}}{{{}}}", a.numer(), a.denom())
    } else {
        format!("{}/{}", a.numer(), a.denom())
    };
    if has_body && !latex {
        format!("{s} ")
    } else {
        s
    }
}

fn render(poly: &MomentPolynomial, latex: bool) -> String {
    if poly.is_zero() {
        return "0".into();
    }
    let st = style_for(poly, latex);
    let mut out = String::new();
    for (idx, (m, c)) in poly.sorted_terms().into_iter().enumerate() {
        let body = monomial_body(m, &st);
        let term = format!("{}{}", coefficient(c, latex, !body.is_empty()), body);
        match (idx, c.is_negative()) {
            (0, false) => out.push_str(&term),
            (0, true) => {
                let _ = write!(out, "- {term}");
            }
            (_, false) => {
                let _ = write!(out, " + {term}");
            }
            (_, true) => {
                let _ = write!(out, " - {term}");
            }
        }
    }
    out
}

pub fn to_latex(poly: &MomentPolynomial) -> String {
    render(poly, true)
}

pub fn to_text(poly: &MomentPolynomial) -> String {
    render(poly, false)
}

#[derive(Serialize, Deserialize)]
struct JsonV {
    matrix: u32,
    order: u32,
}

#[derive(Serialize, Deserialize)]
struct JsonI {
    phase: String,
    order: u32,
}

#[derive(Serialize, Deserialize)]
struct JsonJ {
    phases: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    coeff: String,
    #[serde(default)]
    c: BTreeMap<String, i32>,
    #[serde(rename = "D", default)]
    d: Vec<Vec<u32>>,
    #[serde(rename = "V", default)]
    v: Vec<JsonV>,
    #[serde(rename = "I", default)]
    i: Vec<JsonI>,
    #[serde(rename = "J", default)]
    j: Vec<JsonJ>,
}

#[derive(Serialize, Deserialize)]
struct JsonPoly {
    order: usize,
    terms: Vec<JsonTerm>,
}

pub fn to_json_value(poly: &MomentPolynomial) -> serde_json::Value {
    let terms = poly
        .sorted_terms()
        .into_iter()
        .map(|(m, c)| JsonTerm {
            coeff: rational::to_string(c),
            c: m.c.clone(),
            d: m.d.clone(),
            v: m.v.iter().map(|v| JsonV { matrix: v.matrix, order: v.order }).collect(),
            i: m.i.iter().map(|i| JsonI { phase: i.phase.clone(), order: i.order }).collect(),
            j: m.j.iter().map(|j| JsonJ { phases: j.clone() }).collect(),
        })
        .collect();
    serde_json::to_value(JsonPoly { order: poly.order, terms }).expect("polynomial serializes")
}

pub fn to_json(poly: &MomentPolynomial) -> String {
    serde_json::to_string(&to_json_value(poly)).expect("polynomial serializes")
}

pub fn from_json(text: &str) -> Result<MomentPolynomial> {
    let parsed: JsonPoly = serde_json::from_str(text)?;
    let mut poly = MomentPolynomial::zero(parsed.order);
    for t in parsed.terms {
        let mut m = Monomial { c: t.c, d: t.d, ..Monomial::default() };
        m.v = t.v.into_iter().map(|v| VSym { matrix: v.matrix, order: v.order }).collect();
        m.i = t.i.into_iter().map(|i| ISym { phase: i.phase, order: i.order }).collect();
        m.j = t.j.into_iter().map(|j| j.phases).collect();
        poly.add_term(m, rational::parse(&t.coeff)?);
    }
    Ok(poly)
}

/// Renders a polynomial in the requested format.
pub fn emit(poly: &MomentPolynomial, format: Format) -> String {
    match format {
        Format::Latex => to_latex(poly),
        Format::Text => to_text(poly),
        Format::Json => to_json(poly),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn d(k: usize) -> DIndex {
        vec![1; k]
    }

    #[test]
    fn latex_layout() {
        let mut p = MomentPolynomial::zero(2);
        p.add_term(Monomial::one().with_d(d(1)).with_d(d(1)).with_v(1, 2), int(1));
        p.add_term(Monomial::one().with_d(d(2)), int(1));
        p.add_term(Monomial::one().with_d(d(1)).with_d(d(1)), int(-1));
        assert_eq!(to_latex(&p), "D_{2} - D_{1}^{2} + D_{1}^{2}V_{2}");
        assert_eq!(to_text(&p), "D2 - D1^2 + D1^2 V2");
    }

    #[test]
    fn constants_and_fractions() {
        let mut p = MomentPolynomial::zero(1);
        p.add_term(Monomial::one(), frac(-21532, 5));
        p.add_term(Monomial::one().with_v(1, 2), frac(410726, 45));
        assert_eq!(to_latex(&p), "- \\frac{21532}{5} + \\frac{410726}{45}V_{2}");
        assert_eq!(to_latex(&MomentPolynomial::zero(3)), "0");
    }

    #[test]
    fn d_group_order() {
        let mut p = MomentPolynomial::zero(4);
        p.add_term(Monomial::one().with_d(d(1)).with_d(d(1)).with_d(d(1)).with_d(d(1)), int(1));
        p.add_term(Monomial::one().with_d(d(3)).with_d(d(1)), int(4));
        p.add_term(Monomial::one().with_d(d(2)).with_d(d(2)), frac(8, 3));
        p.add_term(Monomial::one().with_d(d(2)).with_d(d(1)).with_d(d(1)), int(6));
        p.add_term(Monomial::one().with_d(d(4)), int(1));
        assert_eq!(
            to_latex(&p),
            "D_{4} + \\frac{8}{3}D_{2}^{2} + 4D_{3}D_{1} + 6D_{2}D_{1}^{2} + D_{1}^{4}"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut p = MomentPolynomial::zero(3);
        p.add_term(Monomial::one().with_d(vec![1, 2]).with_c("c", 2).with_i("w", 3), frac(-7, 2));
        let mut j = JSym::new();
        j.insert("w1".into(), 2);
        j.insert("w2".into(), 1);
        p.add_term(Monomial::one().with_v(2, 3).with_j(j), int(5));
        let back = from_json(&to_json(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn multi_group_v() {
        let mut p = MomentPolynomial::zero(2);
        p.add_term(Monomial::one().with_v(1, 2).with_v(2, 2), int(1));
        assert_eq!(to_latex(&p), "V_{2}^{(1)}V_{2}^{(2)}");
    }
}
