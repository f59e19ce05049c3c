//! Change of basis between phase integrals `c^{k-1} I_k` and Gram moments `V_k`.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use num::{One, Zero};

use super::expression::{AspectRatio, MomentExpression, UNIFORM};
use super::polynomial::{Factor, JSym, Monomial, MomentPolynomial};
use crate::error::{Error, Result};
use crate::partition::enumerate_partitions;
use crate::rational::{self, Rational};
use crate::volume::single_matrix_coefficient;

/// Largest order accepted by [`conversion_matrix`].
pub const MAX_CONVERSION_ORDER: usize = 10;

/// `V_m = Σ_k b[m][k] c^{k-1} I_k` and its inverse `a`. Indices are 0-based:
/// `b[m-1][k-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConversionMatrix {
    pub n: usize,
    pub b: Vec<Vec<Rational>>,
    pub a: Vec<Vec<Rational>>,
}

fn b_rows() -> &'static Mutex<Vec<Vec<Rational>>> {
    static ROWS: OnceLock<Mutex<Vec<Vec<Rational>>>> = OnceLock::new();
    ROWS.get_or_init(|| Mutex::new(Vec::new()))
}

fn b_row(m: usize) -> Result<Vec<Rational>> {
    let mut row = vec![Rational::zero(); m];
    for rho in enumerate_partitions(m)? {
        row[rho.block_count() - 1] += single_matrix_coefficient(&rho)?;
    }
    Ok(row)
}

/// Lower unitriangular inverse by forward substitution.
fn invert_unit_lower(b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = b.len();
    let mut a = vec![vec![Rational::zero(); n]; n];
    for j in 0..n {
        a[j][j] = Rational::one();
        for i in j + 1..n {
            let mut s = Rational::zero();
            for k in j..i {
                s += &b[i][k] * &a[k][j];
            }
            a[i][j] = -s;
        }
    }
    a
}

/// Conversion matrix of order `n`, cached across calls.
pub fn conversion_matrix(n: usize) -> Result<ConversionMatrix> {
    if n == 0 || n > MAX_CONVERSION_ORDER {
        return Err(Error::Capacity(format!("conversion order {n} outside 1..={MAX_CONVERSION_ORDER}")));
    }
    let mut rows = b_rows().lock().expect("conversion cache poisoned");
    while rows.len() < n {
        let m = rows.len() + 1;
        rows.push(b_row(m)?);
    }
    let b: Vec<Vec<Rational>> = rows[..n]
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.resize(n, Rational::zero());
            r
        })
        .collect();
    drop(rows);
    let a = invert_unit_lower(&b);
    Ok(ConversionMatrix { n, b, a })
}

/// Moments `V_1..V_k` of a Gram matrix with uniform phases and aspect ratio `c`.
pub fn uniform_gram_moments(k: usize, c: &Rational) -> Result<Vec<Rational>> {
    let m = conversion_matrix(k)?;
    Ok(m.b
        .iter()
        .map(|row| row.iter().enumerate().map(|(j, b)| b * rational::pow(c, j as i32)).sum())
        .collect())
}

/// For each phase label, the V-group whose Gram moments stand for it and its
/// aspect ratio.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseAssignment {
    pub phases: BTreeMap<String, (u32, AspectRatio)>,
}

impl PhaseAssignment {
    pub fn insert(&mut self, phase: &str, group: u32, c: AspectRatio) {
        self.phases.insert(phase.to_string(), (group, c));
    }

    /// Each phase is represented by the lowest-indexed matrix carrying it.
    pub fn from_expression(expr: &MomentExpression) -> Self {
        let mut out = Self::default();
        for (&i, m) in &expr.matrices {
            out.phases.entry(m.phase.clone()).or_insert((i, m.c.clone()));
        }
        out
    }

    fn phase_of(&self, group: u32) -> Option<(&str, &AspectRatio)> {
        self.phases.iter().find(|(_, (g, _))| *g == group).map(|(p, (_, c))| (p.as_str(), c))
    }
}

fn c_power(c: &AspectRatio, power: i32, order: usize) -> MomentPolynomial {
    match c {
        AspectRatio::Value(v) => MomentPolynomial::constant(order, rational::pow(v, power)),
        AspectRatio::Symbol(s) => {
            let mut p = MomentPolynomial::zero(order);
            p.add_term(Monomial::one().with_c(s, power), Rational::one());
            p
        }
    }
}

/// Rewrites every `I_k` in terms of Gram moments `V_j`.
pub fn to_v_basis(poly: &MomentPolynomial, assignment: &PhaseAssignment) -> Result<MomentPolynomial> {
    if poly.terms.keys().any(|m| !m.j.is_empty()) {
        return Err(Error::Refused(
            "cross integrals of different phase densities have no Gram-moment form".into(),
        ));
    }
    let out = to_v_basis_partial(poly, assignment)?;
    match out.terms.keys().find_map(|m| m.i.first()) {
        Some(i) => Err(Error::Binding(format!("phase {:?} has no Gram matrix assigned", i.phase))),
        None => Ok(out),
    }
}

/// Like [`to_v_basis`] but leaves integrals of unassigned phases in place.
pub fn to_v_basis_partial(poly: &MomentPolynomial, assignment: &PhaseAssignment) -> Result<MomentPolynomial> {
    let max = poly.terms.keys().flat_map(|m| m.i.iter().map(|i| i.order)).max().unwrap_or(1) as usize;
    let conv = conversion_matrix(max.max(1))?;
    let out = poly.substitute(&|f| {
        let Factor::I(i) = f else { return None };
        let Some((g, c)) = assignment.phases.get(&i.phase) else {
            return None;
        };
        let k = i.order as usize;
        let mut lin = MomentPolynomial::zero(poly.order);
        for j in 1..=k {
            let a = &conv.a[k - 1][j - 1];
            if !a.is_zero() {
                lin.add_term(Monomial::one().with_v(*g, j as u32), a.clone());
            }
        }
        Some(lin.mul(&c_power(c, 1 - k as i32, poly.order)))
    });
    Ok(out)
}

/// Rewrites every `V_j` in terms of phase integrals.
pub fn to_i_basis(poly: &MomentPolynomial, assignment: &PhaseAssignment) -> Result<MomentPolynomial> {
    let max = poly.terms.keys().flat_map(|m| m.v.iter().map(|v| v.order)).max().unwrap_or(1) as usize;
    let conv = conversion_matrix(max.max(1))?;
    let out = poly.substitute(&|f| {
        let Factor::V(v) = f else { return None };
        let (phase, c) = assignment.phase_of(v.matrix)?;
        let m = v.order as usize;
        let mut lin = MomentPolynomial::zero(poly.order);
        for k in 1..=m {
            let b = &conv.b[m - 1][k - 1];
            if b.is_zero() {
                continue;
            }
            let mono = if phase == UNIFORM { Monomial::one() } else { Monomial::one().with_i(phase, k as u32) };
            let mut term = MomentPolynomial::zero(poly.order);
            term.add_term(mono, b.clone());
            lin = lin.add(&term.mul(&c_power(c, k as i32 - 1, poly.order)));
        }
        Some(lin)
    });
    if let Some(v) = out.terms.keys().flat_map(|m| m.v.iter()).next() {
        return Err(Error::Binding(format!("V-group {} has no phase assigned", v.matrix)));
    }
    Ok(out)
}

/// Sets the density of `phase` to uniform: its `I_k` become 1 and it drops
/// out of cross integrals.
pub fn specialize_uniform(poly: &MomentPolynomial, phase: &str) -> MomentPolynomial {
    poly.substitute(&|f| match f {
        Factor::I(i) if i.phase == phase => Some(MomentPolynomial::constant(poly.order, Rational::one())),
        Factor::J(j) if j.contains_key(phase) => {
            let rest: JSym = j.iter().filter(|(p, _)| p.as_str() != phase).map(|(p, e)| (p.clone(), *e)).collect();
            let mono = match rest.len() {
                0 => Monomial::one(),
                1 => {
                    let (p, e) = rest.iter().next().unwrap();
                    Monomial::one().with_i(p, *e)
                }
                _ => Monomial::one().with_j(rest),
            };
            let mut p = MomentPolynomial::zero(poly.order);
            p.add_term(mono, Rational::one());
            Some(p)
        }
        _ => None,
    })
}

/// Uniform specialization of every phase.
pub fn specialize_all_uniform(poly: &MomentPolynomial) -> MomentPolynomial {
    poly.substitute(&|f| match f {
        Factor::I(_) | Factor::J(_) => Some(MomentPolynomial::constant(poly.order, Rational::one())),
        _ => None,
    })
}
