//! Lattice equation systems, their exact solution-set volumes and the
//! expansion coefficients `K_{ρ,u}` built from them.
//!
//! A system is a set of homogeneous integer equations in variables that are
//! box constrained to `[0,1]`. Its volume is measured in the coordinates of
//! the free variables left after row reduction; this is the limit of the
//! lattice count in `[0,N)^m` divided by `N^d`, `d = m - rank`.

mod cache;
mod fm;
mod lattice;
pub mod poly;

use std::fmt;

use num::{Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{slot_column, SetPartition};
use crate::rational::Rational;

pub use cache::{global_cache, CoefficientCache, CACHE_HEADER};
pub use fm::{fm_cells, fm_volume, Cell, MAX_FM_VARIABLES};
pub use lattice::{lattice_count_oracle, oracle_volume, MAX_ORACLE_VARIABLES};

/// Homogeneous equations `rows · t = 0` over `var_count` variables in `[0,1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquationSystem {
    pub var_count: usize,
    pub rows: Vec<Vec<i64>>,
    /// Index of the partition block that produced each row.
    pub provenance: Vec<usize>,
}

impl EquationSystem {
    pub fn new(var_count: usize, rows: Vec<Vec<i64>>) -> Self {
        let provenance = (0..rows.len()).collect();
        EquationSystem { var_count, rows, provenance }
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).pivots.len()
    }

    /// Solution-set dimension implied by the rank.
    pub fn dimension(&self) -> usize {
        self.var_count - self.rank()
    }

    /// True when each column has exactly one `+1` and one `-1`, or is zero.
    fn is_graph(&self) -> bool {
        (0..self.var_count).all(|j| {
            let mut pos = 0;
            let mut neg = 0;
            for row in &self.rows {
                match row[j] {
                    0 => {}
                    1 => pos += 1,
                    -1 => neg += 1,
                    _ => return false,
                }
            }
            (pos, neg) == (1, 1) || (pos, neg) == (0, 0)
        })
    }

    /// Splits into independent subsystems (variables linked through shared rows).
    pub fn components(&self) -> Vec<EquationSystem> {
        let m = self.var_count;
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for row in &self.rows {
            let vars: Vec<usize> = (0..m).filter(|&j| row[j] != 0).collect();
            for w in vars.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut roots: Vec<usize> = (0..m).map(|j| find(&mut parent, j)).collect();
        let mut order = roots.clone();
        order.sort();
        order.dedup();
        let mut out = Vec::new();
        for root in order {
            let cols: Vec<usize> = (0..m).filter(|&j| roots[j] == root).collect();
            let mut rows = Vec::new();
            let mut provenance = Vec::new();
            for (row, &prov) in self.rows.iter().zip(&self.provenance) {
                if cols.iter().any(|&j| row[j] != 0) {
                    rows.push(cols.iter().map(|&j| row[j]).collect());
                    provenance.push(prov);
                }
            }
            out.push(EquationSystem { var_count: cols.len(), rows, provenance });
        }
        roots.clear();
        out
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let mut first = true;
            for (j, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let sign = if c < 0 { "-" } else if first { "" } else { "+" };
                let mag = if c.abs() == 1 { String::new() } else { c.abs().to_string() };
                write!(f, "{}{}{}x{}", if first { "" } else { " " }, sign, mag, j + 1)?;
                first = false;
            }
            if first {
                write!(f, "0")?;
            }
            writeln!(f, " = 0")?;
        }
        Ok(())
    }
}

/// Equation system of a partition `rho` of the `2n` slots of an alternating
/// `V^H V` product: one row per block, `+t_k` for each V^H slot of group `k`
/// in the block and `-t_k` for each V slot.
pub fn build_system(rho: &SetPartition) -> Result<EquationSystem> {
    if rho.n() % 2 != 0 {
        return Err(Error::Argument(format!("slot partition of odd size {}", rho.n())));
    }
    let n = rho.n() / 2;
    let mut rows = vec![vec![0i64; n]; rho.block_count()];
    for s in 0..2 * n {
        let sign = if s % 2 == 0 { 1 } else { -1 };
        rows[rho.block_of(s)][s / 2] += sign;
    }
    Ok(EquationSystem::new(n, rows))
}

/// Single-matrix form: for each block `W` of `pi`, `Σ_{k∈W} x_{k-1} = Σ_{k∈W} x_k`
/// with indices cyclic mod `n`.
pub fn build_cyclic_system(pi: &SetPartition) -> EquationSystem {
    let n = pi.n();
    let mut rows = vec![vec![0i64; n]; pi.block_count()];
    for k in 0..n {
        let row = &mut rows[pi.block_of(k)];
        row[(k + n - 1) % n] += 1;
        row[k] -= 1;
    }
    EquationSystem::new(n, rows)
}

/// Result of graph reduction: either a smaller equivalent system or a
/// solution set of lower dimension than the rank predicts.
#[derive(Clone, Debug)]
pub enum Reduced {
    System(EquationSystem),
    Degenerate,
}

/// Shrinks a system whose columns are `+1/-1` pairs (a circulation on a
/// directed multigraph) without changing its normalized volume: free
/// variables and variables pinned to zero are dropped, and two-edge vertices
/// are contracted. Other systems pass through unchanged.
pub fn reduce(system: &EquationSystem) -> Reduced {
    if !system.is_graph() {
        return Reduced::System(system.clone());
    }
    let mut rows = system.rows.clone();
    let mut prov = system.provenance.clone();
    let mut alive: Vec<bool> = vec![true; system.var_count];
    let mut free = 0;
    loop {
        let mut changed = false;
        for (j, a) in alive.iter_mut().enumerate() {
            if *a && rows.iter().all(|r| r[j] == 0) {
                *a = false;
                free += 1;
                changed = true;
            }
        }
        let mut i = 0;
        while i < rows.len() {
            let nz: Vec<usize> = (0..rows[i].len()).filter(|&j| alive[j] && rows[i][j] != 0).collect();
            if nz.is_empty() {
                rows.remove(i);
                prov.remove(i);
                changed = true;
                continue;
            }
            let pos = nz.iter().filter(|&&j| rows[i][j] > 0).count();
            if pos == 0 || pos == nz.len() {
                // a same-sign row pins all its variables to zero
                for &j in &nz {
                    alive[j] = false;
                    for r in rows.iter_mut() {
                        r[j] = 0;
                    }
                }
                rows.remove(i);
                prov.remove(i);
                changed = true;
                continue;
            }
            if nz.len() == 2 {
                let (keep, drop) = (nz[0], nz[1]);
                // t_keep = t_drop: the far end of `drop` is rewired onto `keep`.
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != i && row[drop] != 0 {
                        row[keep] += row[drop];
                        row[drop] = 0;
                    }
                }
                alive[drop] = false;
                for row in rows.iter_mut() {
                    row[drop] = 0;
                }
                rows.remove(i);
                prov.remove(i);
                changed = true;
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    let cols: Vec<usize> = (0..system.var_count).filter(|&j| alive[j]).collect();
    let rows = rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
    let out = EquationSystem { var_count: cols.len(), rows, provenance: prov };
    if out.dimension() + free < system.dimension() {
        return Reduced::Degenerate;
    }
    Reduced::System(out)
}

struct RowEchelon {
    /// Reduced rows (pivot entry 1), one per pivot.
    rows: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

fn row_reduce(system: &EquationSystem) -> RowEchelon {
    let m = system.var_count;
    let mut a: Vec<Vec<Rational>> = system
        .rows
        .iter()
        .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..m {
        let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][col].recip();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..m {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    a.truncate(r);
    RowEchelon { rows: a, pivots }
}

/// Where an inequality row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowOrigin {
    /// Box constraint on a free variable (original index).
    Free(usize),
    /// Box constraint on an eliminated pivot variable (original index).
    Pivot(usize),
    /// Produced during elimination.
    Derived,
}

/// `coeffs · y ≤ rhs` with coprime integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Inequality {
    pub coeffs: Vec<i64>,
    pub rhs: Rational,
}

/// Standard form: box constraints in the free variables only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySystem {
    pub var_count: usize,
    pub rows: Vec<Inequality>,
    pub origins: Vec<RowOrigin>,
    /// Original indices of the free variables.
    pub free: Vec<usize>,
    /// Set when the solution set is already known to be empty or thinner
    /// than `var_count` dimensions.
    pub empty: bool,
}

impl Inequality {
    /// Divides through by the gcd of the coefficients.
    pub fn normalized(coeffs: Vec<i64>, rhs: Rational) -> Self {
        let g = coeffs.iter().fold(0i64, |g, &c| g.gcd(&c));
        if g <= 1 {
            return Inequality { coeffs, rhs };
        }
        let rhs = rhs / Rational::from_integer(g.into());
        Inequality { coeffs: coeffs.into_iter().map(|c| c / g).collect(), rhs }
    }

    fn negated_coeffs(&self) -> Vec<i64> {
        self.coeffs.iter().map(|c| -c).collect()
    }
}

/// Outcome of the row clean-up shared by `standardize` and each elimination step.
pub(crate) enum Cleaned {
    Rows(Vec<Inequality>, Vec<RowOrigin>),
    Empty,
}

/// Drops trivial rows, merges rows with equal coefficients keeping the
/// tightest bound, and detects empty or flat sets from opposite rows.
pub(crate) fn clean_rows(rows: Vec<Inequality>, origins: Vec<RowOrigin>) -> Cleaned {
    let mut best: std::collections::BTreeMap<Vec<i64>, (Rational, RowOrigin)> = Default::default();
    for (row, origin) in rows.into_iter().zip(origins) {
        if row.coeffs.iter().all(|&c| c == 0) {
            if row.rhs.is_negative() {
                return Cleaned::Empty;
            }
            continue;
        }
        match best.get_mut(&row.coeffs) {
            Some(slot) => {
                if row.rhs < slot.0 {
                    *slot = (row.rhs, origin);
                }
            }
            None => {
                best.insert(row.coeffs, (row.rhs, origin));
            }
        }
    }
    for (coeffs, (rhs, _)) in &best {
        let neg: Vec<i64> = coeffs.iter().map(|c| -c).collect();
        if let Some((g, _)) = best.get(&neg) {
            if !(rhs + g).is_positive() {
                return Cleaned::Empty;
            }
        }
    }
    let (rows, origins) = best
        .into_iter()
        .map(|(coeffs, (rhs, origin))| (Inequality { coeffs, rhs }, origin))
        .unzip();
    Cleaned::Rows(rows, origins)
}

/// Sort key placing rows with positive leading coefficient first, then rows
/// without the leading variable, then rows with a negative one.
fn leading_group(row: &Inequality) -> u8 {
    match row.coeffs.first().copied().unwrap_or(0) {
        c if c > 0 => 0,
        0 => 1,
        _ => 2,
    }
}

/// Row-reduces the equalities, expresses the pivot variables through the
/// free ones and rewrites every box constraint in free-variable coordinates.
pub fn standardize(system: &EquationSystem) -> InequalitySystem {
    let ech = row_reduce(system);
    let m = system.var_count;
    let free: Vec<usize> = (0..m).filter(|j| !ech.pivots.contains(j)).collect();
    let d = free.len();
    let mut rows = Vec::new();
    let mut origins = Vec::new();
    for (k, &f) in free.iter().enumerate() {
        let mut e = vec![0i64; d];
        e[k] = 1;
        rows.push(Inequality::normalized(e.clone(), Rational::one()));
        origins.push(RowOrigin::Free(f));
        e[k] = -1;
        rows.push(Inequality::normalized(e, Rational::zero()));
        origins.push(RowOrigin::Free(f));
    }
    for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
        // t_p = -Σ_f row[f] y_f
        let expr: Vec<Rational> = free.iter().map(|&f| -row[f].clone()).collect();
        let lcm = expr.iter().fold(num::BigInt::one(), |l, c| l.lcm(c.denom()));
        let scaled: Vec<i64> = expr
            .iter()
            .map(|c| {
                let v = c * Rational::from_integer(lcm.clone());
                i64::try_from(v.to_integer()).expect("pivot coefficient fits in i64")
            })
            .collect();
        let l = Rational::from_integer(lcm);
        rows.push(Inequality::normalized(scaled.clone(), l));
        origins.push(RowOrigin::Pivot(p));
        rows.push(Inequality::normalized(scaled.iter().map(|c| -c).collect(), Rational::zero()));
        origins.push(RowOrigin::Pivot(p));
    }
    match clean_rows(rows, origins) {
        Cleaned::Empty => {
            InequalitySystem { var_count: d, rows: Vec::new(), origins: Vec::new(), free, empty: true }
        }
        Cleaned::Rows(rows, origins) => {
            let mut paired: Vec<(Inequality, RowOrigin)> = rows.into_iter().zip(origins).collect();
            paired.sort_by(|a, b| leading_group(&a.0).cmp(&leading_group(&b.0)).then_with(|| a.0.cmp(&b.0)));
            let (rows, origins) = paired.into_iter().unzip();
            InequalitySystem { var_count: d, rows, origins, free, empty: false }
        }
    }
}

impl InequalitySystem {
    /// Number of rows whose coefficient vector is the negation of another row's.
    pub fn opposite_pairs(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| self.rows.iter().any(|s| s.coeffs == r.negated_coeffs()))
            .count()
            / 2
    }
}

/// Normalized volume of an equation system: graph reduction, split into
/// independent components, standard form and Fourier-Motzkin integration,
/// with component volumes memoized in the global cache.
pub fn system_volume(system: &EquationSystem) -> Result<Rational> {
    let reduced = match reduce(system) {
        Reduced::Degenerate => return Ok(Rational::zero()),
        Reduced::System(s) => s,
    };
    let mut volume = Rational::one();
    for comp in reduced.components() {
        if comp.rows.is_empty() {
            continue;
        }
        let key = cache::canonical_key(&comp);
        if let Some(v) = global_cache().lock().expect("cache lock").get_key(&key) {
            volume *= v;
            continue;
        }
        let v = fm_volume(&standardize(&comp))?;
        global_cache().lock().expect("cache lock").insert_key(&key, v.clone());
        volume *= v;
    }
    Ok(volume)
}

/// `K_{ρ,u}`: the normalized volume of the slot system of `rho`, which
/// factors over the components of `rho ∨ [0,1]_n`.
pub fn expansion_coefficient(rho: &SetPartition) -> Result<Rational> {
    system_volume(&build_system(rho)?)
}

/// `K_{π,u}` for a single matrix, computed on the standard form of `pi`.
pub fn single_matrix_coefficient(pi: &SetPartition) -> Result<Rational> {
    let std = crate::partition::standard_form(pi);
    if std.n() == 0 {
        return Ok(Rational::one());
    }
    system_volume(&build_cyclic_system(&std))
}

/// Slot system for a product of groups where `columns[s]` names the column
/// class read by slot `s`; used by callers that track columns themselves.
pub fn slot_columns(n: usize) -> Vec<usize> {
    (0..2 * n).map(|s| slot_column(s, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{enumerate_partitions, SetPartition};
    use crate::rational::{frac, int};

    fn p(n: usize, blocks: &[&[usize]]) -> SetPartition {
        SetPartition::from_blocks(n, blocks).unwrap()
    }

    #[test]
    fn crossing_cyclic_system() {
        let s = build_cyclic_system(&p(4, &[&[1, 3], &[2, 4]]));
        assert_eq!(s.rows, vec![vec![-1, 1, -1, 1], vec![1, -1, 1, -1]]);
        assert_eq!(s.rank(), 1);
        let std = standardize(&s);
        assert_eq!(std.var_count, 3);
        assert!(!std.empty);
        assert_eq!(fm_volume(&std).unwrap(), frac(2, 3));
    }

    #[test]
    fn rows_sum_to_zero() {
        for pi in enumerate_partitions(5).unwrap() {
            let s = build_cyclic_system(&pi);
            for j in 0..5 {
                assert_eq!(s.rows.iter().map(|r| r[j]).sum::<i64>(), 0);
            }
        }
        let rho = p(6, &[&[1, 4], &[2, 3, 5], &[6]]);
        let s = build_system(&rho).unwrap();
        for j in 0..3 {
            assert_eq!(s.rows.iter().map(|r| r[j]).sum::<i64>(), 0);
        }
    }

    #[test]
    fn three_pair_volume() {
        let s = EquationSystem::new(6, vec![vec![1, -1, 1, -1, 1, -1]]);
        assert_eq!(fm_volume(&standardize(&s)).unwrap(), frac(11, 20));
        assert_eq!(system_volume(&s).unwrap(), frac(11, 20));
    }

    #[test]
    fn noncrossing_volume_is_one() {
        for pi in enumerate_partitions(6).unwrap().filter(|q| q.is_noncrossing()) {
            assert_eq!(fm_volume(&standardize(&build_cyclic_system(&pi))).unwrap(), int(1), "{pi}");
        }
    }

    #[test]
    fn negated_row_is_flat() {
        // t1 + t2 = 0 pins both variables to zero: one dimension short.
        let s = EquationSystem::new(2, vec![vec![1, 1]]);
        let std = standardize(&s);
        assert!(std.empty);
        assert_eq!(fm_volume(&std).unwrap(), int(0));
        assert!(matches!(reduce(&EquationSystem::new(3, vec![vec![1, 1, 0], vec![-1, -1, 0]])), Reduced::Degenerate));
    }

    #[test]
    fn duplicate_rows_collapse() {
        let s = EquationSystem::new(3, vec![vec![1, -1, 0], vec![1, -1, 0], vec![0, 1, -1]]);
        let std = standardize(&s);
        assert_eq!(std.var_count, 1);
        // y ≤ 1 and -y ≤ 0 survive once each although three variables share them.
        assert_eq!(std.rows.len(), 2);
        assert_eq!(std.opposite_pairs(), 1);
    }

    #[test]
    fn standard_form_grouping() {
        let std = standardize(&build_cyclic_system(&p(4, &[&[1, 3], &[2, 4]])));
        let groups: Vec<u8> = std.rows.iter().map(leading_group).collect();
        let mut sorted = groups.clone();
        sorted.sort();
        assert_eq!(groups, sorted);
    }

    #[test]
    fn reduction_preserves_volume() {
        for n in 1..=6 {
            for pi in enumerate_partitions(n).unwrap() {
                let s = build_cyclic_system(&pi);
                let direct = fm_volume(&standardize(&s)).unwrap();
                assert_eq!(system_volume(&s).unwrap(), direct, "{pi}");
            }
        }
    }

    #[test]
    fn standard_form_preserves_volume() {
        for pi in enumerate_partitions(7).unwrap() {
            let direct = fm_volume(&standardize(&build_cyclic_system(&pi))).unwrap();
            assert_eq!(single_matrix_coefficient(&pi).unwrap(), direct, "{pi}");
        }
    }

    #[test]
    fn slot_system_matches_cyclic_system() {
        for n in 1..=5 {
            for pi in enumerate_partitions(n).unwrap() {
                let rho = crate::partition::rho_of_pi(&pi, &SetPartition::one(2 * n)).unwrap();
                let a = expansion_coefficient(&rho).unwrap();
                let b = fm_volume(&standardize(&build_cyclic_system(&pi))).unwrap();
                assert_eq!(a, b, "{pi}");
            }
        }
    }
}
