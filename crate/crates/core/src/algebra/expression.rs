//! Moment expressions: products (and sums of products) of diagonal `D`
//! factors and Vandermonde `V` / `V'` factors.
//!
//! Grammar: `expr := product {"+" product}`, `product := factor {factor}`,
//! `factor := "D" index | "V" index ["'"]`. A trailing `'` marks the adjoint.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{interval_pairing, SetPartition};
use crate::rational::{self, Rational};

/// Reserved phase label for the uniform distribution on `[0, 2π)`.
pub const UNIFORM: &str = "uniform";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    D(u32),
    V { index: u32, adjoint: bool },
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::D(i) => write!(f, "D{i}"),
            Factor::V { index, adjoint: true } => write!(f, "V{index}'"),
            Factor::V { index, adjoint: false } => write!(f, "V{index}"),
        }
    }
}

/// An aspect ratio: a known rational or a named symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AspectRatio {
    Value(Rational),
    Symbol(String),
}

impl AspectRatio {
    pub fn one() -> Self {
        AspectRatio::Value(rational::one())
    }

    /// Parses a rational literal, otherwise treats the text as a symbol name.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Binding("empty aspect ratio".into()));
        }
        if t.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            if !t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Binding(format!("bad aspect-ratio symbol {t:?}")));
            }
            return Ok(AspectRatio::Symbol(t.to_string()));
        }
        let v = rational::parse(t)?;
        if v <= rational::zero() {
            return Err(Error::Binding(format!("aspect ratio must be positive, got {t}")));
        }
        Ok(AspectRatio::Value(v))
    }
}

impl fmt::Display for AspectRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AspectRatio::Value(v) => write!(f, "{}", rational::to_string(v)),
            AspectRatio::Symbol(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixAttributes {
    pub phase: String,
    pub c: AspectRatio,
}

/// Per-matrix bindings: `V<i>` gets a phase label and aspect ratio, `D<i>`
/// optionally its moments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Attributes {
    pub matrices: BTreeMap<u32, MatrixAttributes>,
    pub d_moments: BTreeMap<u32, Vec<Rational>>,
}

#[derive(Deserialize)]
struct RawAttr {
    phase: Option<String>,
    c: Option<serde_json::Value>,
    moments: Option<Vec<serde_json::Value>>,
}

fn json_rational(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::String(s) => rational::parse(s),
        serde_json::Value::Number(n) => rational::parse(&n.to_string()),
        other => Err(Error::Binding(format!("expected a rational, got {other}"))),
    }
}

impl Attributes {
    /// Reads `{"V1": {"phase": "w", "c": "1/2"}, "D1": {"moments": ["1", "7/6"]}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, RawAttr> = serde_json::from_str(text)?;
        let mut out = Attributes::default();
        for (key, attr) in raw {
            let (kind, idx) = split_key(&key)?;
            match kind {
                'V' => {
                    let phase = attr.phase.unwrap_or_else(|| default_phase(idx));
                    let c = match &attr.c {
                        None => AspectRatio::one(),
                        Some(serde_json::Value::String(s)) => AspectRatio::parse(s)?,
                        Some(v) => AspectRatio::Value(json_rational(v)?),
                    };
                    out.matrices.insert(idx, MatrixAttributes { phase, c });
                }
                _ => {
                    let moments = attr.moments.unwrap_or_default();
                    let values = moments.iter().map(json_rational).collect::<Result<Vec<_>>>()?;
                    out.d_moments.insert(idx, values);
                }
            }
        }
        Ok(out)
    }

    pub fn set_phase(&mut self, index: u32, phase: &str) {
        self.matrices
            .entry(index)
            .or_insert_with(|| MatrixAttributes { phase: default_phase(index), c: AspectRatio::one() })
            .phase = phase.to_string();
    }

    pub fn set_c(&mut self, index: u32, c: AspectRatio) {
        self.matrices
            .entry(index)
            .or_insert_with(|| MatrixAttributes { phase: default_phase(index), c: AspectRatio::one() })
            .c = c;
    }
}

fn split_key(key: &str) -> Result<(char, u32)> {
    let mut chars = key.chars();
    let kind = chars.next().ok_or_else(|| Error::Binding("empty attribute key".into()))?;
    if kind != 'V' && kind != 'D' {
        return Err(Error::Binding(format!("attribute key {key:?} must name V<i> or D<i>")));
    }
    let idx = chars.as_str().parse().map_err(|_| Error::Binding(format!("bad attribute key {key:?}")))?;
    Ok((kind, idx))
}

/// Phase label given to `V<i>` when none is bound.
pub fn default_phase(index: u32) -> String {
    format!("w{index}")
}

/// Which space the traced product lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// `L×L` products such as `V'V`: normalized trace over columns.
    Columns,
    /// `N×N` products such as `VV'`: normalized trace over rows.
    Rows,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentExpression {
    pub summands: Vec<Vec<Factor>>,
    pub matrices: BTreeMap<u32, MatrixAttributes>,
    pub d_moments: BTreeMap<u32, Vec<Rational>>,
    pub space: Space,
    text: String,
}

fn tokenize(text: &str) -> Result<Vec<Vec<(usize, Factor)>>> {
    let bytes = text.as_bytes();
    let mut summands = vec![Vec::new()];
    let mut pos = 0;
    while pos < bytes.len() {
        let ch = bytes[pos] as char;
        if ch.is_whitespace() || ch == '*' {
            pos += 1;
            continue;
        }
        if ch == '+' {
            if summands.last().is_some_and(|s: &Vec<_>| s.is_empty()) {
                return Err(Error::Parse { pos, msg: "empty summand before '+'".into() });
            }
            summands.push(Vec::new());
            pos += 1;
            continue;
        }
        if ch != 'D' && ch != 'V' {
            return Err(Error::Parse { pos, msg: format!("unexpected {ch:?}; factors are D<i>, V<i> or V<i>'") });
        }
        let start = pos;
        pos += 1;
        let digits_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if digits_start == pos {
            return Err(Error::Parse { pos, msg: format!("{ch} must be followed by an index") });
        }
        let index: u32 = text[digits_start..pos]
            .parse()
            .map_err(|_| Error::Parse { pos: digits_start, msg: "index out of range".into() })?;
        if index == 0 {
            return Err(Error::Parse { pos: digits_start, msg: "indices start at 1".into() });
        }
        let factor = if ch == 'D' {
            Factor::D(index)
        } else {
            let adjoint = pos < bytes.len() && bytes[pos] == b'\'';
            if adjoint {
                pos += 1;
            }
            Factor::V { index, adjoint }
        };
        summands.last_mut().unwrap().push((start, factor));
    }
    if summands.last().is_some_and(|s| s.is_empty()) {
        return Err(Error::Parse { pos: text.len(), msg: "empty expression or trailing '+'".into() });
    }
    Ok(summands)
}

/// Space of a single product, after checking that V factors alternate.
fn product_space(factors: &[(usize, Factor)]) -> Result<Space> {
    let vs: Vec<&(usize, Factor)> = factors.iter().filter(|f| matches!(f.1, Factor::V { .. })).collect();
    if vs.is_empty() {
        return Ok(Space::Columns);
    }
    let first_adjoint = matches!(vs[0].1, Factor::V { adjoint: true, .. });
    for (k, (pos, f)) in vs.iter().enumerate() {
        let Factor::V { adjoint, .. } = f else { unreachable!() };
        if *adjoint != (first_adjoint == (k % 2 == 0)) {
            return Err(Error::Parse { pos: *pos, msg: format!("factor {f} breaks the V/V' alternation") });
        }
    }
    if vs.len() % 2 != 0 {
        let (pos, f) = vs.last().unwrap();
        return Err(Error::Parse { pos: *pos, msg: format!("product ending at {f} is not square") });
    }
    Ok(if first_adjoint { Space::Columns } else { Space::Rows })
}

/// Parses a DSL string and binds attributes. Unbound V matrices get phase
/// `w<i>` and aspect ratio 1.
pub fn parse_expression(text: &str, attributes: &Attributes) -> Result<MomentExpression> {
    let tokens = tokenize(text)?;
    let mut space = None;
    for summand in &tokens {
        let s = product_space(summand)?;
        let has_v = summand.iter().any(|f| matches!(f.1, Factor::V { .. }));
        if !has_v {
            continue;
        }
        match space {
            None => space = Some(s),
            Some(prev) if prev != s => {
                return Err(Error::Parse {
                    pos: summand[0].0,
                    msg: "summands mix L×L and N×N products".into(),
                })
            }
            _ => {}
        }
    }
    let summands: Vec<Vec<Factor>> = tokens.iter().map(|s| s.iter().map(|f| f.1).collect()).collect();
    let mut matrices = BTreeMap::new();
    let mut d_labels = std::collections::BTreeSet::new();
    for f in summands.iter().flatten() {
        match f {
            Factor::V { index, .. } => {
                let attr = attributes.matrices.get(index).cloned().unwrap_or(MatrixAttributes {
                    phase: default_phase(*index),
                    c: AspectRatio::one(),
                });
                matrices.insert(*index, attr);
            }
            Factor::D(i) => {
                d_labels.insert(*i);
            }
        }
    }
    for idx in attributes.matrices.keys() {
        if !matrices.contains_key(idx) {
            return Err(Error::Binding(format!("V{idx} is bound but does not occur in the expression")));
        }
    }
    for idx in attributes.d_moments.keys() {
        if !d_labels.contains(idx) {
            return Err(Error::Binding(format!("D{idx} is bound but does not occur in the expression")));
        }
    }
    for attr in matrices.values() {
        if attr.phase.is_empty() || !attr.phase.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Binding(format!("invalid phase label {:?}", attr.phase)));
        }
    }
    Ok(MomentExpression {
        summands,
        matrices,
        d_moments: attributes.d_moments.clone(),
        space: space.unwrap_or(Space::Columns),
        text: text.trim().to_string(),
    })
}

/// A `D-word · V_a' · V_b` group of a cyclic product.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Group {
    /// D labels acting on the column space in front of `V_a'`.
    pub d: Vec<u32>,
    /// D labels sitting between `V_a'` and `V_b` (row space).
    pub inner: Vec<u32>,
    pub a: u32,
    pub b: u32,
}

/// A cyclic word reduced to its groups; `pure_d` holds the labels of a
/// word without V factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub groups: Vec<Group>,
    pub pure_d: Vec<u32>,
}

/// Splits a cyclic product into groups starting at the first adjoint factor.
pub fn word_groups(factors: &[Factor]) -> Word {
    let Some(start) = factors.iter().position(|f| matches!(f, Factor::V { adjoint: true, .. })) else {
        let mut pure_d: Vec<u32> = factors.iter().filter_map(|f| if let Factor::D(i) = f { Some(*i) } else { None }).collect();
        pure_d.sort();
        return Word { groups: Vec::new(), pure_d };
    };
    let n = factors.len();
    let rotated: Vec<Factor> = (0..n).map(|k| factors[(start + k) % n]).collect();
    let mut groups = Vec::new();
    let mut pending_d: Vec<u32> = Vec::new();
    let mut current: Option<Group> = None;
    for f in rotated {
        match f {
            Factor::D(i) => pending_d.push(i),
            Factor::V { index, adjoint: true } => {
                if let Some(g) = current.take() {
                    groups.push(g);
                }
                let mut d = std::mem::take(&mut pending_d);
                d.sort();
                current = Some(Group { d, inner: Vec::new(), a: index, b: 0 });
            }
            Factor::V { index, adjoint: false } => {
                let g = current.as_mut().expect("alternation checked at parse time");
                g.inner = std::mem::take(&mut pending_d);
                g.b = index;
            }
        }
    }
    if let Some(g) = current.take() {
        groups.push(g);
    }
    // D factors after the last V belong to the first group's column space.
    if !pending_d.is_empty() {
        groups[0].d.extend(pending_d);
        groups[0].d.sort();
    }
    Word { groups, pure_d: Vec::new() }
}

impl Word {
    /// `σ₁`: slots grouped by matrix identity (slot `2k` is `V_{a_k}'`, `2k+1` is `V_{b_k}`).
    pub fn sigma1(&self) -> SetPartition {
        let labels: Vec<u32> = self.groups.iter().flat_map(|g| [g.a, g.b]).collect();
        SetPartition::from_labels(&labels)
    }

    /// `σ`: slots grouped by equal phase label.
    pub fn sigma(&self, matrices: &BTreeMap<u32, MatrixAttributes>) -> SetPartition {
        let labels: Vec<&str> =
            self.groups.iter().flat_map(|g| [matrices[&g.a].phase.as_str(), matrices[&g.b].phase.as_str()]).collect();
        SetPartition::from_labels(&labels)
    }
}

impl MomentExpression {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Groups of the order-1 word of a single-product expression.
    pub fn word(&self) -> Result<Word> {
        if self.summands.len() != 1 {
            return Err(Error::Argument("σ and n are defined for a single product".into()));
        }
        Ok(word_groups(&self.summands[0]))
    }

    /// Number of `V'V` groups of a single product.
    pub fn n(&self) -> Result<usize> {
        Ok(self.word()?.groups.len())
    }

    pub fn sigma1(&self) -> Result<SetPartition> {
        Ok(self.word()?.sigma1())
    }

    pub fn sigma(&self) -> Result<SetPartition> {
        Ok(self.word()?.sigma(&self.matrices))
    }

    /// Every cyclic word of length `order` over the summands, as sequences of summand indices.
    pub fn words(&self, order: usize) -> Vec<(Vec<usize>, usize)> {
        let s = self.summands.len();
        let mut classes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let total = s.pow(order as u32);
        for code in 0..total {
            let mut seq = Vec::with_capacity(order);
            let mut x = code;
            for _ in 0..order {
                seq.push(x % s);
                x /= s;
            }
            let rep = (0..order.max(1))
                .map(|r| (0..order).map(|k| seq[(k + r) % order]).collect::<Vec<_>>())
                .min()
                .unwrap_or_default();
            *classes.entry(rep).or_default() += 1;
        }
        classes.into_iter().collect()
    }

    /// Factor list of the word given by summand indices.
    pub fn word_factors(&self, seq: &[usize]) -> Vec<Factor> {
        seq.iter().flat_map(|&i| self.summands[i].iter().copied()).collect()
    }

    /// The aspect ratio symbol used for normalization presets: the common
    /// aspect ratio of all V matrices.
    pub fn common_aspect_ratio(&self) -> Result<AspectRatio> {
        let mut it = self.matrices.values().map(|m| &m.c);
        let Some(first) = it.next() else { return Ok(AspectRatio::one()) };
        if it.all(|c| c == first) {
            Ok(first.clone())
        } else {
            Err(Error::Dimension("matrices have different aspect ratios; no common c".into()))
        }
    }
}

/// Result of [`classify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    SpectraOnly,
    PhaseDependent { reason: String },
    Unsupported { reason: String },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::SpectraOnly => "SpectraOnly",
            Classification::PhaseDependent { .. } => "PhaseDependent",
            Classification::Unsupported { .. } => "Unsupported",
        }
    }
}

/// `σ ≥ [0,1]_n` for every word, i.e. each `V_a' V_b` pair shares its phase.
pub fn classify(expr: &MomentExpression) -> Classification {
    for order in 1..=2 {
        for (seq, _) in expr.words(order) {
            let word = word_groups(&expr.word_factors(&seq));
            if let Some(g) = word.groups.iter().find(|g| !g.inner.is_empty()) {
                return Classification::Unsupported {
                    reason: format!(
                        "D{} multiplies a V{} V{}' pattern; such moments are not known to depend on spectra only",
                        g.inner[0], g.b, g.a
                    ),
                };
            }
            let n = word.groups.len();
            if n == 0 {
                continue;
            }
            if !interval_pairing(n).refines(&word.sigma(&expr.matrices)) {
                let g = word
                    .groups
                    .iter()
                    .find(|g| expr.matrices[&g.a].phase != expr.matrices[&g.b].phase)
                    .expect("some pair differs");
                return Classification::PhaseDependent {
                    reason: format!(
                        "V{}' V{} pairs phases {} and {}",
                        g.a, g.b, expr.matrices[&g.a].phase, expr.matrices[&g.b].phase
                    ),
                };
            }
        }
    }
    Classification::SpectraOnly
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(pairs: &[(u32, &str)]) -> Attributes {
        let mut a = Attributes::default();
        for (i, p) in pairs {
            a.set_phase(*i, p);
        }
        a
    }

    fn blocks(n: usize, b: &[&[usize]]) -> SetPartition {
        SetPartition::from_blocks(n, b).unwrap()
    }

    #[test]
    fn single_group() {
        let e = parse_expression("D1 V1' V1", &Attributes::default()).unwrap();
        assert_eq!(e.n().unwrap(), 1);
        assert_eq!(e.sigma1().unwrap(), SetPartition::one(2));
        assert_eq!(e.sigma().unwrap(), SetPartition::one(2));
    }

    #[test]
    fn two_matrix_sigmas() {
        let a = attrs(&[(1, "w1"), (2, "w2")]);
        let e = parse_expression("V1' V1 V2' V2", &a).unwrap();
        assert_eq!(e.sigma().unwrap(), interval_pairing(2));
        assert_eq!(e.sigma1().unwrap(), interval_pairing(2));
        let e = parse_expression("V1' V2 V2' V1", &a).unwrap();
        let s = e.sigma().unwrap();
        assert_eq!(s, blocks(4, &[&[1, 4], &[2, 3]]));
        assert!(!interval_pairing(2).refines(&s));
    }

    #[test]
    fn parse_errors() {
        let e = parse_expression("V1' V1' V1", &Attributes::default()).unwrap_err();
        assert!(matches!(e, Error::Parse { pos: 4, .. }), "{e}");
        assert!(matches!(parse_expression("V1' V1 V1'", &Attributes::default()), Err(Error::Parse { .. })));
        assert!(matches!(parse_expression("X1", &Attributes::default()), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(parse_expression("V1' V1 + V1 V1'", &Attributes::default()), Err(Error::Parse { .. })));
        assert!(matches!(parse_expression("V1' V1", &attrs(&[(3, "w")])), Err(Error::Binding(_))));
    }

    #[test]
    fn classification() {
        let one = Attributes::default();
        assert_eq!(classify(&parse_expression("D1 V1' V1 D2 V1' V1", &one).unwrap()), Classification::SpectraOnly);
        let a = attrs(&[(1, "w1"), (2, "w2")]);
        assert!(matches!(
            classify(&parse_expression("V1' V2 V2' V1", &a).unwrap()),
            Classification::PhaseDependent { .. }
        ));
        assert!(matches!(classify(&parse_expression("D1 V1 V1'", &one).unwrap()), Classification::Unsupported { .. }));
        let same = attrs(&[(1, "w"), (2, "w")]);
        assert_eq!(classify(&parse_expression("V1' V2 V2' V1", &same).unwrap()), Classification::SpectraOnly);
        assert_eq!(classify(&parse_expression("V1' V1 V2' V2", &a).unwrap()), Classification::SpectraOnly);
        assert!(matches!(
            classify(&parse_expression("V1 V1' + V2 V2'", &a).unwrap()),
            Classification::PhaseDependent { .. }
        ));
        assert_eq!(classify(&parse_expression("D1 + V1' V1", &one).unwrap()), Classification::SpectraOnly);
    }

    #[test]
    fn groups_wrap_trailing_d() {
        let w = word_groups(&parse_expression("V1' V1 D2 D1", &Attributes::default()).unwrap().summands[0]);
        assert_eq!(w.groups.len(), 1);
        assert_eq!(w.groups[0].d, vec![1, 2]);
        let w = word_groups(&parse_expression("V1 V1' V2 V2'", &attrs(&[(2, "w2")])).unwrap().summands[0]);
        assert_eq!(w.groups.iter().map(|g| (g.a, g.b)).collect::<Vec<_>>(), vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn necklaces() {
        let e = parse_expression("D1 + V1' V1", &Attributes::default()).unwrap();
        let words = e.words(4);
        assert_eq!(words.iter().map(|w| w.1).sum::<usize>(), 16);
        assert_eq!(words.len(), 6);
    }

    #[test]
    fn attribute_json() {
        let a = Attributes::from_json(r#"{"V1": {"phase": "uniform", "c": "1/2"}, "D1": {"moments": ["1", 2]}}"#).unwrap();
        assert_eq!(a.matrices[&1].phase, "uniform");
        assert_eq!(a.matrices[&1].c, AspectRatio::Value(rational::frac(1, 2)));
        assert_eq!(a.d_moments[&1], vec![rational::int(1), rational::int(2)]);
        assert!(Attributes::from_json(r#"{"X1": {}}"#).is_err());
    }
}
