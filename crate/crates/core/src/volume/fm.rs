//! Exact volumes by Fourier-Motzkin elimination.
//!
//! The first remaining variable is eliminated at each step. Rows with a
//! positive coefficient give upper bounds (`B`), rows with a negative one give
//! lower bounds (`D`), and rows without it (`C`) carry over. Every choice of
//! a binding upper bound `B_i` and lower bound `D_j` is a cell; inside it the
//! integrand is integrated exactly between the two bounds and the remaining
//! constraints are `B_i ≤ B_k`, `D_k ≤ D_j`, `D_j ≤ B_i` and the `C` rows.

use std::collections::HashMap;

use num::{Signed, Zero};

use super::poly::{Affine, Poly};
use super::{clean_rows, Cleaned, Inequality, InequalitySystem, RowOrigin};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest free-variable count accepted by [`fm_volume`].
pub const MAX_FM_VARIABLES: usize = 24;

type Memo = HashMap<(Vec<Inequality>, Poly), Rational>;

fn checked(a: i64, b: i64, c: i64, d: i64) -> Result<i64> {
    a.checked_mul(b)
        .and_then(|x| c.checked_mul(d).and_then(|y| x.checked_sub(y)))
        .ok_or(Error::Overflow("elimination row"))
}

fn upper_bound(row: &Inequality) -> Affine {
    // a0 y0 + b·z ≤ e  ⇒  y0 ≤ (e - b·z)/a0
    let a0 = Rational::from_integer(row.coeffs[0].into());
    Affine {
        constant: &row.rhs / &a0,
        coeffs: row.coeffs[1..].iter().map(|&b| Rational::from_integer((-b).into()) / &a0).collect(),
    }
}

fn lower_bound(row: &Inequality) -> Affine {
    // -|d0| y0 + d·z ≤ g  ⇒  y0 ≥ (d·z - g)/|d0|
    let d0 = Rational::from_integer((-row.coeffs[0]).into());
    Affine {
        constant: -&row.rhs / &d0,
        coeffs: row.coeffs[1..].iter().map(|&d| Rational::from_integer(d.into()) / &d0).collect(),
    }
}

/// `p` with `p.coeffs[0] > 0` and `q` with `q.coeffs[0] > 0`: the row
/// expressing `bound(p) ≤ bound(q)` for the upper bounds they define.
fn upper_le_upper(p: &Inequality, q: &Inequality) -> Result<Inequality> {
    let (ap, aq) = (p.coeffs[0], q.coeffs[0]);
    let coeffs = (1..p.coeffs.len())
        .map(|j| checked(ap, q.coeffs[j], aq, p.coeffs[j]))
        .collect::<Result<Vec<_>>>()?;
    let rhs = Rational::from_integer(ap.into()) * &q.rhs - Rational::from_integer(aq.into()) * &p.rhs;
    Ok(Inequality::normalized(coeffs, rhs))
}

/// Lower bounds from rows with negative leading coefficient: `bound(p) ≤ bound(q)`.
fn lower_le_lower(p: &Inequality, q: &Inequality) -> Result<Inequality> {
    let (dp, dq) = (-p.coeffs[0], -q.coeffs[0]);
    let coeffs = (1..p.coeffs.len())
        .map(|j| checked(dq, p.coeffs[j], dp, q.coeffs[j]))
        .collect::<Result<Vec<_>>>()?;
    let rhs = Rational::from_integer(dq.into()) * &p.rhs - Rational::from_integer(dp.into()) * &q.rhs;
    Ok(Inequality::normalized(coeffs, rhs))
}

/// Lower bound of `d` below upper bound of `b`.
fn lower_le_upper(d: &Inequality, b: &Inequality) -> Result<Inequality> {
    let (a, dd) = (b.coeffs[0], -d.coeffs[0]);
    let coeffs = (1..b.coeffs.len())
        .map(|j| {
            a.checked_mul(d.coeffs[j])
                .and_then(|x| dd.checked_mul(b.coeffs[j]).and_then(|y| x.checked_add(y)))
                .ok_or(Error::Overflow("elimination row"))
        })
        .collect::<Result<Vec<_>>>()?;
    let rhs = Rational::from_integer(dd.into()) * &b.rhs + Rational::from_integer(a.into()) * &d.rhs;
    Ok(Inequality::normalized(coeffs, rhs))
}

fn clean(rows: Vec<Inequality>) -> Option<Vec<Inequality>> {
    let origins = vec![RowOrigin::Derived; rows.len()];
    match clean_rows(rows, origins) {
        Cleaned::Empty => None,
        Cleaned::Rows(r, _) => Some(r),
    }
}

struct Split<'a> {
    upper: Vec<&'a Inequality>,
    lower: Vec<&'a Inequality>,
    rest: Vec<&'a Inequality>,
}

fn split(rows: &[Inequality]) -> Split<'_> {
    let mut s = Split { upper: Vec::new(), lower: Vec::new(), rest: Vec::new() };
    for r in rows {
        match r.coeffs[0] {
            c if c > 0 => s.upper.push(r),
            c if c < 0 => s.lower.push(r),
            _ => s.rest.push(r),
        }
    }
    s
}

/// Constraints of the cell where `upper[i]` and `lower[j]` are binding, in
/// the remaining variables.
fn cell_rows(s: &Split<'_>, i: usize, j: usize) -> Result<Vec<Inequality>> {
    let mut rows: Vec<Inequality> = s
        .rest
        .iter()
        .map(|r| Inequality { coeffs: r.coeffs[1..].to_vec(), rhs: r.rhs.clone() })
        .collect();
    for (k, u) in s.upper.iter().enumerate() {
        if k != i {
            rows.push(upper_le_upper(s.upper[i], u)?);
        }
    }
    for (k, l) in s.lower.iter().enumerate() {
        if k != j {
            rows.push(lower_le_lower(l, s.lower[j])?);
        }
    }
    rows.push(lower_le_upper(s.lower[j], s.upper[i])?);
    Ok(rows)
}

fn integrate(rows: Vec<Inequality>, vars: usize, integrand: Poly, memo: &mut Memo) -> Result<Rational> {
    let Some(rows) = clean(rows) else { return Ok(Rational::zero()) };
    if vars == 0 {
        return Ok(integrand.constant_term());
    }
    if integrand.is_zero() {
        return Ok(Rational::zero());
    }
    let key = (rows, integrand);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let (rows, integrand) = key;
    let s = split(&rows);
    if s.upper.is_empty() {
        return Err(Error::Unbounded(0, "upper"));
    }
    if s.lower.is_empty() {
        return Err(Error::Unbounded(0, "lower"));
    }
    let anti = integrand.integrate_first();
    let uppers: Vec<Poly> = s.upper.iter().map(|r| anti.substitute_first(&upper_bound(r))).collect();
    let lowers: Vec<Poly> = s.lower.iter().map(|r| anti.substitute_first(&lower_bound(r))).collect();
    let mut total = Rational::zero();
    for i in 0..s.upper.len() {
        for j in 0..s.lower.len() {
            let cell = cell_rows(&s, i, j)?;
            let piece = uppers[i].sub(&lowers[j]);
            total += integrate(cell, vars - 1, piece, memo)?;
        }
    }
    memo.insert((rows, integrand), total.clone());
    Ok(total)
}

/// Exact volume of a standardized system.
pub fn fm_volume(system: &InequalitySystem) -> Result<Rational> {
    if system.empty {
        return Ok(Rational::zero());
    }
    if system.var_count > MAX_FM_VARIABLES {
        return Err(Error::Capacity(format!(
            "{} free variables exceed the elimination limit {MAX_FM_VARIABLES}",
            system.var_count
        )));
    }
    let mut memo = Memo::new();
    let v = integrate(system.rows.clone(), system.var_count, Poly::one(system.var_count), &mut memo)?;
    debug_assert!(!v.is_negative());
    Ok(v)
}

/// One cell of the elimination tree: for each variable in elimination order,
/// the binding lower and upper bounds as affine forms in later variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub bounds: Vec<(Affine, Affine)>,
}

impl Cell {
    /// Volume of this cell alone.
    pub fn volume(&self) -> Rational {
        let mut poly = Poly::one(self.bounds.len());
        for (lo, hi) in &self.bounds {
            let anti = poly.integrate_first();
            poly = anti.substitute_first(hi).sub(&anti.substitute_first(lo));
        }
        poly.constant_term()
    }
}

/// Enumerates the non-empty cells of the elimination without memoization.
pub fn fm_cells(system: &InequalitySystem) -> Result<Vec<Cell>> {
    fn rec(rows: Vec<Inequality>, vars: usize, prefix: &mut Vec<(Affine, Affine)>, out: &mut Vec<Cell>) -> Result<()> {
        let Some(rows) = clean(rows) else { return Ok(()) };
        if vars == 0 {
            out.push(Cell { bounds: prefix.clone() });
            return Ok(());
        }
        let s = split(&rows);
        if s.upper.is_empty() || s.lower.is_empty() {
            return Err(Error::Unbounded(0, if s.upper.is_empty() { "upper" } else { "lower" }));
        }
        for i in 0..s.upper.len() {
            for j in 0..s.lower.len() {
                let cell = cell_rows(&s, i, j)?;
                prefix.push((lower_bound(s.lower[j]), upper_bound(s.upper[i])));
                rec(cell, vars - 1, prefix, out)?;
                prefix.pop();
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    if !system.empty {
        rec(system.rows.clone(), system.var_count, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;
    use crate::volume::{build_cyclic_system, standardize};
    use crate::partition::SetPartition;

    #[test]
    fn cells_sum_to_volume() {
        let pi = SetPartition::from_blocks(4, &[&[1, 3], &[2, 4]]).unwrap();
        let std = standardize(&build_cyclic_system(&pi));
        let cells = fm_cells(&std).unwrap();
        assert!(cells.len() > 1);
        let total: Rational = cells.iter().map(|c| c.volume()).sum();
        assert_eq!(total, frac(2, 3));
        assert!(cells.iter().all(|c| !c.volume().is_negative()));
    }

    #[test]
    fn simplex_volume() {
        let sys = InequalitySystem {
            var_count: 2,
            rows: vec![
                Inequality { coeffs: vec![1, 1], rhs: frac(1, 1) },
                Inequality { coeffs: vec![-1, 0], rhs: frac(0, 1) },
                Inequality { coeffs: vec![0, -1], rhs: frac(0, 1) },
            ],
            origins: vec![RowOrigin::Derived; 3],
            free: vec![0, 1],
            empty: false,
        };
        assert_eq!(fm_volume(&sys).unwrap(), frac(1, 2));
    }
}
