//! Brute-force lattice counting, the finite-size quantity whose normalized
//! limit defines the expansion coefficients. Used as an independent check
//! on the elimination path.

use std::collections::HashMap;

use num::{One, Zero};

use super::EquationSystem;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest variable count the oracle accepts.
pub const MAX_ORACLE_VARIABLES: usize = 8;

/// Exact number of integer tuples in `[0,N)^m` solving the equalities.
///
/// Variables are assigned one at a time while tracking partial row sums; a
/// row is checked and dropped from the state once all its variables are set.
pub fn lattice_count_oracle(system: &EquationSystem, n: u64) -> Result<u128> {
    let m = system.var_count;
    if m > MAX_ORACLE_VARIABLES {
        return Err(Error::Capacity(format!("lattice oracle limited to {MAX_ORACLE_VARIABLES} variables, got {m}")));
    }
    let rows: Vec<&Vec<i64>> = system.rows.iter().filter(|r| r.iter().any(|&c| c != 0)).collect();
    let last_use: Vec<usize> = rows.iter().map(|r| r.iter().rposition(|&c| c != 0).unwrap()).collect();
    let mut states: HashMap<Vec<i64>, u128> = HashMap::new();
    states.insert(vec![0; rows.len()], 1);
    for j in 0..m {
        let mut next: HashMap<Vec<i64>, u128> = HashMap::with_capacity(states.len());
        for (state, count) in &states {
            'value: for v in 0..n as i64 {
                let mut s = state.clone();
                for (r, row) in rows.iter().enumerate() {
                    s[r] += row[j] * v;
                    if last_use[r] == j && s[r] != 0 {
                        continue 'value;
                    }
                }
                *next.entry(s).or_default() += count;
            }
        }
        states = next;
    }
    Ok(states.values().sum())
}

/// Leading coefficient of the counting polynomial `N ↦ count(N)`, recovered by
/// exact interpolation through `N = 1..=d+1` and confirmed at `N = d+2`.
///
/// For systems with totally unimodular rows the count is a polynomial of
/// degree `d = m - rank` in `N`, so this equals the normalized volume.
pub fn oracle_volume(system: &EquationSystem) -> Result<Rational> {
    let d = system.dimension();
    let xs: Vec<i64> = (1..=d as i64 + 2).collect();
    let ys: Vec<Rational> = xs
        .iter()
        .map(|&x| lattice_count_oracle(system, x as u64).map(|c| Rational::from_integer(c.into())))
        .collect::<Result<_>>()?;
    let fit = &xs[..=d];
    let predicted = lagrange_at(fit, &ys[..=d], xs[d + 1]);
    if predicted != ys[d + 1] {
        return Err(Error::Argument("lattice count is not a polynomial of the expected degree".into()));
    }
    let mut lead = Rational::zero();
    for (i, &xi) in fit.iter().enumerate() {
        let mut denom = Rational::one();
        for (k, &xk) in fit.iter().enumerate() {
            if k != i {
                denom *= Rational::from_integer((xi - xk).into());
            }
        }
        lead += &ys[i] / denom;
    }
    Ok(lead)
}

fn lagrange_at(xs: &[i64], ys: &[Rational], x: i64) -> Rational {
    let mut total = Rational::zero();
    for (i, &xi) in xs.iter().enumerate() {
        let mut term = ys[i].clone();
        for (k, &xk) in xs.iter().enumerate() {
            if k != i {
                term *= Rational::new((x - xk).into(), (xi - xk).into());
            }
        }
        total += term;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{enumerate_partitions, SetPartition};
    use crate::rational::frac;
    use crate::volume::build_cyclic_system;

    #[test]
    fn crossing_count() {
        let s = build_cyclic_system(&SetPartition::from_blocks(4, &[&[1, 3], &[2, 4]]).unwrap());
        assert_eq!(lattice_count_oracle(&s, 4).unwrap(), 44);
        assert_eq!(oracle_volume(&s).unwrap(), frac(2, 3));
    }

    #[test]
    fn noncrossing_counts_are_powers() {
        for pi in enumerate_partitions(5).unwrap().filter(|p| p.is_noncrossing()) {
            let s = build_cyclic_system(&pi);
            let d = s.dimension() as u32;
            for n in [3u64, 5] {
                assert_eq!(lattice_count_oracle(&s, n).unwrap(), (n as u128).pow(d), "{pi}");
            }
        }
    }

    #[test]
    fn ratio_approaches_volume() {
        let s = build_cyclic_system(&SetPartition::from_blocks(4, &[&[1, 3], &[2, 4]]).unwrap());
        let count = lattice_count_oracle(&s, 200).unwrap() as f64;
        assert!((count / 200f64.powi(3) - 2.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn capacity() {
        let s = EquationSystem::new(9, vec![vec![1, -1, 0, 0, 0, 0, 0, 0, 0]]);
        assert!(matches!(lattice_count_oracle(&s, 2), Err(Error::Capacity(_))));
    }
}
