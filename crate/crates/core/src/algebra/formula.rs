//! Assembly of mixed-moment formulas from partitions and volumes.

use std::collections::BTreeMap;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use super::expression::{classify, word_groups, AspectRatio, Classification, MomentExpression, Space, Word, UNIFORM};
use super::conversion::{to_v_basis, PhaseAssignment};
use super::polynomial::{JSym, Monomial, MomentPolynomial};
use crate::error::{Error, Result};
use crate::partition::{enumerate_partitions, in_contributing_set, interval_pairing, join};
use crate::rational::{self, Rational};
use crate::volume::expansion_coefficient;

/// Largest number of `V'V` groups in a single word.
pub const MAX_PIPELINE_ORDER: usize = 12;

/// How the traced moment is scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `lim tr(...)` with `D`-moments `lim tr(D^k)`.
    Raw,
    /// `c · lim tr(...)` with `D`-moments `c · lim tr(D^k)`, the convention
    /// of the `D·V'V` convolution formulas.
    Scaled,
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "scaled" | "mndef" => Ok(Normalization::Scaled),
            other => Err(Error::Argument(format!("unknown normalization {other:?} (raw or scaled)"))),
        }
    }
}

fn scale(coeff: &mut Rational, mono: Monomial, c: &AspectRatio, power: i32) -> Monomial {
    if power == 0 {
        return mono;
    }
    match c {
        AspectRatio::Value(v) => {
            *coeff *= rational::pow(v, power);
            mono
        }
        AspectRatio::Symbol(s) => mono.with_c(s, power),
    }
}

fn check_dimensions(word: &Word, expr: &MomentExpression) -> Result<()> {
    let n = word.groups.len();
    let c = |m: u32| &expr.matrices[&m].c;
    for (k, g) in word.groups.iter().enumerate() {
        let (x, y) = match expr.space {
            Space::Columns => (g.a, g.b),
            Space::Rows => (g.a, word.groups[(k + n - 1) % n].b),
        };
        if c(x) != c(y) {
            let what = if expr.space == Space::Columns { "row count" } else { "column count" };
            return Err(Error::Dimension(format!(
                "V{x} and V{y} must share their {what} but have aspect ratios {} and {}",
                c(x),
                c(y)
            )));
        }
    }
    Ok(())
}

/// Raw formula of one cyclic word, in the basis of phase integrals.
pub fn word_formula(word: &Word, expr: &MomentExpression, order: usize) -> Result<MomentPolynomial> {
    let mut poly = MomentPolynomial::zero(order);
    if word.groups.is_empty() {
        poly.add_term(Monomial::one().with_d(word.pure_d.clone()), Rational::one());
        return Ok(poly);
    }
    let n = word.groups.len();
    if n > MAX_PIPELINE_ORDER {
        return Err(Error::Capacity(format!("{n} groups exceed the formula limit {MAX_PIPELINE_ORDER}")));
    }
    check_dimensions(word, expr)?;
    let sigma1 = word.sigma1();
    let slot_matrix: Vec<u32> = word.groups.iter().flat_map(|g| [g.a, g.b]).collect();
    let pairs = interval_pairing(n);
    for pi in enumerate_partitions(n)? {
        let contribution = in_contributing_set(&pi, &sigma1)?;
        if !contribution.member {
            continue;
        }
        let rho = contribution.rho;
        let k = expansion_coefficient(&rho)?;
        if k.is_zero() {
            continue;
        }
        let mut coeff = k;
        let mut mono = Monomial::one();
        let comps = join(&rho, &pairs)?;
        // rho blocks per component, with the matrix of each block
        let mut per_comp: Vec<Vec<u32>> = vec![Vec::new(); comps.block_count()];
        for block in rho.blocks() {
            per_comp[comps.block_of(block[0])].push(slot_matrix[block[0]]);
        }
        for matrices in &per_comp {
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for m in matrices {
                let phase = expr.matrices[m].phase.as_str();
                *counts.entry(phase).or_default() += 1;
            }
            let non_uniform: JSym = counts
                .iter()
                .filter(|(p, _)| **p != UNIFORM)
                .map(|(p, e)| (p.to_string(), *e))
                .collect();
            match non_uniform.len() {
                0 => {}
                1 => {
                    // a uniform density drops out of a cross integral
                    let (p, e) = non_uniform.iter().next().unwrap();
                    mono = mono.with_i(p, *e);
                }
                _ => mono = mono.with_j(non_uniform),
            }
            if expr.space == Space::Columns {
                let c = &expr.matrices[&matrices[0]].c;
                mono = scale(&mut coeff, mono, c, matrices.len() as i32 - 1);
            }
        }
        for block in pi.blocks() {
            let mut d: Vec<u32> = block.iter().flat_map(|&k| word.groups[k].d.iter().copied()).collect();
            if !d.is_empty() {
                d.sort();
                mono = mono.with_d(d);
            }
            if expr.space == Space::Rows {
                let c = expr.matrices[&word.groups[block[0]].a].c.clone();
                for &k in &block[1..] {
                    if expr.matrices[&word.groups[k].a].c != c {
                        return Err(Error::Dimension("identified columns of matrices with different sizes".into()));
                    }
                }
                mono = scale(&mut coeff, mono, &c, 1);
            }
        }
        poly.add_term(mono, coeff);
    }
    Ok(poly)
}

/// Raw mixed moment `lim tr(E^order)` as a polynomial in D-moments, phase
/// integrals and aspect ratios.
pub fn mixed_moment_formula(expr: &MomentExpression, order: usize) -> Result<MomentPolynomial> {
    if let Classification::Unsupported { reason } = classify(expr) {
        return Err(Error::Refused(reason));
    }
    let mut total = MomentPolynomial::zero(order);
    for (seq, mult) in expr.words(order) {
        let word = word_groups(&expr.word_factors(&seq));
        let p = word_formula(&word, expr, order)?;
        total = total.add(&p.scale(&rational::int(mult as i64)));
    }
    Ok(total)
}

/// Applies a normalization preset to a raw formula.
pub fn normalize(poly: &MomentPolynomial, expr: &MomentExpression, normalization: Normalization) -> Result<MomentPolynomial> {
    match normalization {
        Normalization::Raw => Ok(poly.clone()),
        Normalization::Scaled => {
            if expr.space != Space::Columns {
                return Err(Error::Argument("the scaled normalization applies to L×L products".into()));
            }
            let c = expr.common_aspect_ratio()?;
            let mut out = MomentPolynomial::zero(poly.order);
            for (m, coeff) in &poly.terms {
                let mut k = coeff.clone();
                let power = 1 - m.d.len() as i32;
                let mono = scale(&mut k, m.clone(), &c, power);
                out.add_term(mono, k);
            }
            Ok(out)
        }
    }
}

/// Basis in which phase dependence is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Phase integrals `I_{k,ω}`.
    Integrals,
    /// Gram moments `V_k`.
    Gram,
}

impl std::str::FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "integrals" => Ok(Basis::Integrals),
            "v" | "gram" => Ok(Basis::Gram),
            other => Err(Error::Argument(format!("unknown basis {other:?} (v or i)"))),
        }
    }
}

/// Formula of `tr(E^order)` with a normalization preset, in the requested basis.
pub fn moment_formula(
    expr: &MomentExpression,
    order: usize,
    normalization: Normalization,
    basis: Basis,
) -> Result<MomentPolynomial> {
    let raw = mixed_moment_formula(expr, order)?;
    let p = match basis {
        Basis::Integrals => raw,
        Basis::Gram => to_v_basis(&raw, &PhaseAssignment::from_expression(expr))?,
    };
    normalize(&p, expr, normalization)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expression::{parse_expression, Attributes};
    use crate::algebra::polynomial::to_latex;

    fn uniform(indices: &[u32]) -> Attributes {
        let mut a = Attributes::default();
        for &i in indices {
            a.set_phase(i, UNIFORM);
        }
        a
    }

    #[test]
    fn first_moment_is_d1() {
        let e = parse_expression("D1 V1' V1", &Attributes::default()).unwrap();
        let p = normalize(&mixed_moment_formula(&e, 1).unwrap(), &e, Normalization::Scaled).unwrap();
        assert_eq!(to_latex(&p), "D_{1}");
    }

    #[test]
    fn uniform_gram_moments() {
        let e = parse_expression("V1' V1", &uniform(&[1])).unwrap();
        let got: Vec<String> = (1..=4).map(|k| to_latex(&mixed_moment_formula(&e, k).unwrap())).collect();
        assert_eq!(got, vec!["1", "2", "5", "\\frac{44}{3}"]);
    }

    #[test]
    fn symbolic_aspect_ratio() {
        let mut a = Attributes::default();
        a.set_c(1, AspectRatio::Symbol("c".into()));
        let e = parse_expression("V1' V1", &a).unwrap();
        let p = mixed_moment_formula(&e, 2).unwrap();
        assert_eq!(to_latex(&p), "1 + cI_{2,w1}");
    }

    #[test]
    fn refuses_unsupported() {
        let e = parse_expression("D1 V1 V1'", &Attributes::default()).unwrap();
        assert!(matches!(mixed_moment_formula(&e, 1), Err(Error::Refused(_))));
    }

    #[test]
    fn row_space_uses_column_ratios() {
        // tr_N(V V') = L/N
        let mut a = Attributes::default();
        a.set_c(1, AspectRatio::Value(rational::frac(1, 2)));
        let e = parse_expression("V1 V1'", &a).unwrap();
        assert_eq!(to_latex(&mixed_moment_formula(&e, 1).unwrap()), "\\frac{1}{2}");
    }
}
