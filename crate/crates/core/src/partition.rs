//! Set partitions stored as restricted-growth strings.
//!
//! Elements are numbered `0..n` internally; the public display and the
//! block-list constructors use the usual 1-based labels.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default largest ground set accepted by the enumerators.
pub const MAX_ORDER: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetPartition {
    rgs: Vec<u8>,
}

impl SetPartition {
    /// Builds a partition from any block labelling, renumbering blocks by
    /// first appearance.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut map = HashMap::new();
        let rgs = labels
            .iter()
            .map(|l| {
                let next = map.len() as u8;
                *map.entry(*l).or_insert(next)
            })
            .collect();
        SetPartition { rgs }
    }

    /// Builds a partition from an explicit restricted-growth string.
    pub fn from_rgs(rgs: Vec<u8>) -> Result<Self> {
        let mut max: i32 = -1;
        for &b in &rgs {
            if b as i32 > max + 1 {
                return Err(Error::Argument(format!("not a restricted-growth string: {rgs:?}")));
            }
            max = max.max(b as i32);
        }
        Ok(SetPartition { rgs })
    }

    /// Builds a partition of `{1..n}` from 1-based blocks.
    pub fn from_blocks(n: usize, blocks: &[&[usize]]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (bi, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Argument("empty block".into()));
            }
            for &e in block.iter() {
                if e == 0 || e > n || labels[e - 1] != usize::MAX {
                    return Err(Error::Argument(format!("element {e} invalid or repeated")));
                }
                labels[e - 1] = bi;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::Argument("blocks do not cover the ground set".into()));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn empty() -> Self {
        SetPartition { rgs: Vec::new() }
    }

    /// `1_n`, the one-block partition.
    pub fn one(n: usize) -> Self {
        SetPartition { rgs: vec![0; n] }
    }

    /// `0_n`, all singletons.
    pub fn zero(n: usize) -> Self {
        SetPartition { rgs: (0..n as u8).collect() }
    }

    /// Ground-set size.
    pub fn n(&self) -> usize {
        self.rgs.len()
    }

    pub fn rgs(&self) -> &[u8] {
        &self.rgs
    }

    /// Block index of element `i` (0-based).
    pub fn block_of(&self, i: usize) -> usize {
        self.rgs[i] as usize
    }

    pub fn block_count(&self) -> usize {
        self.rgs.iter().map(|&b| b as usize + 1).max().unwrap_or(0)
    }

    /// Blocks as sorted lists of 0-based elements, in block-index order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count()];
        for (i, &b) in self.rgs.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.block_count()];
        for &b in &self.rgs {
            out[b as usize] += 1;
        }
        out
    }

    /// True when `self` refines `other` (every block of `self` lies in a block of `other`).
    pub fn refines(&self, other: &SetPartition) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let mut image = vec![u8::MAX; self.block_count()];
        for (i, &b) in self.rgs.iter().enumerate() {
            let slot = &mut image[b as usize];
            if *slot == u8::MAX {
                *slot = other.rgs[i];
            } else if *slot != other.rgs[i] {
                return false;
            }
        }
        true
    }

    /// Rotation taking element `i` to position `(i + n - k) mod n`, i.e. the
    /// sequence read from element `k` onwards.
    pub fn rotate(&self, k: usize) -> SetPartition {
        let n = self.n();
        if n == 0 {
            return self.clone();
        }
        let labels: Vec<u8> = (0..n).map(|i| self.rgs[(i + k) % n]).collect();
        Self::from_labels(&labels)
    }

    /// Restriction to the given 0-based elements, renumbered in the given order.
    pub fn restrict(&self, elems: &[usize]) -> SetPartition {
        let labels: Vec<u8> = elems.iter().map(|&e| self.rgs[e]).collect();
        Self::from_labels(&labels)
    }

    pub fn is_noncrossing(&self) -> bool {
        let n = self.n();
        for a in 0..n {
            for b in a + 1..n {
                if self.rgs[a] != self.rgs[b] {
                    continue;
                }
                for c in a + 1..b {
                    for d in b + 1..n {
                        if self.rgs[c] == self.rgs[d] && self.rgs[c] != self.rgs[a] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (bi, block) in self.blocks().iter().enumerate() {
            if bi > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", e + 1)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn check_capacity(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::Capacity(format!("order {n} exceeds the maximum {max}")));
    }
    Ok(())
}

/// Iterator over all partitions of an `n`-set in lexicographic RGS order.
pub struct Partitions {
    rgs: Vec<u8>,
    max: Vec<u8>,
    blocks: Option<usize>,
    done: bool,
}

impl Partitions {
    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.rgs[i] <= self.max[i - 1] {
                self.rgs[i] += 1;
                let m = self.max[i - 1].max(self.rgs[i]);
                self.max[i] = m;
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.max[j] = m;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        loop {
            if self.done {
                return None;
            }
            let current = SetPartition { rgs: self.rgs.clone() };
            let count = self.max.last().map_or(0, |&m| m as usize + 1);
            if !self.advance() {
                self.done = true;
            }
            if self.blocks.is_none_or(|k| k == count) {
                return Some(current);
            }
        }
    }
}

/// Streams every partition of `{1..n}`; `n = 0` yields the empty partition once.
pub fn enumerate_partitions(n: usize) -> Result<Partitions> {
    enumerate_partitions_with(n, None, MAX_ORDER)
}

/// As [`enumerate_partitions`], optionally keeping only partitions with `blocks` blocks.
pub fn enumerate_partitions_with(n: usize, blocks: Option<usize>, max_order: usize) -> Result<Partitions> {
    check_capacity(n, max_order)?;
    Ok(Partitions { rgs: vec![0; n], max: vec![0; n], blocks, done: false })
}

/// All pair partitions of `{1..2k}`.
pub fn pair_partitions(k: usize) -> Vec<SetPartition> {
    fn rec(labels: &mut Vec<i32>, next: i32, out: &mut Vec<SetPartition>) {
        match labels.iter().position(|&l| l < 0) {
            None => out.push(SetPartition::from_labels(labels)),
            Some(a) => {
                labels[a] = next;
                for b in a + 1..labels.len() {
                    if labels[b] < 0 {
                        labels[b] = next;
                        rec(labels, next + 1, out);
                        labels[b] = -1;
                    }
                }
                labels[a] = -1;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![-1; 2 * k], 0, &mut out);
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Least upper bound of two partitions in the refinement order.
pub fn join(p: &SetPartition, q: &SetPartition) -> Result<SetPartition> {
    if p.n() != q.n() {
        return Err(Error::Argument(format!("join of partitions of {} and {} elements", p.n(), q.n())));
    }
    let n = p.n();
    let mut parent: Vec<usize> = (0..n).collect();
    for part in [p, q] {
        let mut first = vec![usize::MAX; part.block_count()];
        for i in 0..n {
            let b = part.block_of(i);
            if first[b] == usize::MAX {
                first[b] = i;
            } else {
                let (x, y) = (find(&mut parent, first[b]), find(&mut parent, i));
                parent[x] = y;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(SetPartition::from_labels(&roots))
}

/// `[0,1]_n = {{1,2},{3,4},...,{2n-1,2n}}`.
pub fn interval_pairing(n: usize) -> SetPartition {
    SetPartition { rgs: (0..2 * n).map(|i| (i / 2) as u8).collect() }
}

/// No singleton blocks and no block holding cyclically adjacent elements.
pub fn is_alternating(p: &SetPartition) -> bool {
    let n = p.n();
    if p.block_sizes().contains(&1) {
        return false;
    }
    (0..n).all(|i| n < 2 || p.rgs[i] != p.rgs[(i + 1) % n])
}

/// Removes singletons and cyclically successive elements of a common block
/// until the partition is alternating or empty.
pub fn standard_form(p: &SetPartition) -> SetPartition {
    let mut labels: Vec<u8> = p.rgs.clone();
    loop {
        let len = labels.len();
        if len == 0 {
            break;
        }
        let mut counts = [0usize; 256];
        for &l in &labels {
            counts[l as usize] += 1;
        }
        if let Some(i) = labels.iter().position(|&l| counts[l as usize] == 1) {
            labels.remove(i);
            continue;
        }
        if let Some(i) = (0..len).find(|&i| labels[i] == labels[(i + 1) % len]) {
            labels.remove((i + 1) % len);
            continue;
        }
        break;
    }
    SetPartition::from_labels(&labels)
}

/// Lexicographically minimal RGS among all rotations.
pub fn min_rotation(p: &SetPartition) -> SetPartition {
    (0..p.n().max(1)).map(|k| p.rotate(k)).min().unwrap_or_else(SetPartition::empty)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicClass {
    pub representative: SetPartition,
    pub class_size: usize,
}

/// Rotation classes of the alternating partitions of `{1..n}`, sorted by representative.
pub fn cyclic_classes(n: usize) -> Result<Vec<CyclicClass>> {
    let mut classes: HashMap<SetPartition, usize> = HashMap::new();
    for p in enumerate_partitions(n)? {
        if is_alternating(&p) {
            *classes.entry(min_rotation(&p)).or_default() += 1;
        }
    }
    let mut out: Vec<CyclicClass> = classes
        .into_iter()
        .map(|(representative, class_size)| CyclicClass { representative, class_size })
        .collect();
    out.sort_by(|a, b| a.representative.cmp(&b.representative));
    Ok(out)
}

/// Counts reported by `partition-stats`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub n: usize,
    pub partitions: u64,
    pub alternating: u64,
    pub cyclic_classes: u64,
}

/// All partitions of `{1..n}`, the alternating ones, and their rotation classes.
pub fn partition_stats(n: usize) -> Result<PartitionStats> {
    let mut partitions = 0;
    let mut classes = std::collections::HashSet::new();
    let mut alternating = 0;
    for p in enumerate_partitions(n)? {
        partitions += 1;
        if is_alternating(&p) {
            alternating += 1;
            classes.insert(min_rotation(&p));
        }
    }
    Ok(PartitionStats { n, partitions, alternating, cyclic_classes: classes.len() as u64 })
}

/// Column index (0-based factor) addressed by 0-based slot `s` of a product of
/// `n` groups: odd slots (V^H, 0-based even) use the group's own column,
/// even slots (V) the next group's column, cyclically.
pub fn slot_column(s: usize, n: usize) -> usize {
    if s % 2 == 0 {
        s / 2
    } else {
        (s / 2 + 1) % n
    }
}

/// The partition of `2n` slots generated by "same column class under `pi`
/// and same block of `sigma1`".
pub fn rho_of_pi(pi: &SetPartition, sigma1: &SetPartition) -> Result<SetPartition> {
    let n = pi.n();
    if sigma1.n() != 2 * n {
        return Err(Error::Argument(format!(
            "sigma1 has {} slots, expected {}",
            sigma1.n(),
            2 * n
        )));
    }
    let labels: Vec<(usize, usize)> =
        (0..2 * n).map(|s| (pi.block_of(slot_column(s, n)), sigma1.block_of(s))).collect();
    Ok(SetPartition::from_labels(&labels))
}

/// Membership of `pi` in the contributing set, with `rho(pi)` and `r(pi)`.
#[derive(Clone, Debug)]
pub struct Contribution {
    pub rho: SetPartition,
    pub r: usize,
    pub member: bool,
}

pub fn in_contributing_set(pi: &SetPartition, sigma1: &SetPartition) -> Result<Contribution> {
    let rho = rho_of_pi(pi, sigma1)?;
    let r = join(&rho, &interval_pairing(pi.n()))?.block_count();
    let member = pi.block_count() + r == rho.block_count() + 1;
    Ok(Contribution { rho, r, member })
}

/// Bell numbers `B_0..=B_n` (exact up to n = 25 in u64).
pub fn bell_numbers(n: usize) -> Vec<u64> {
    let mut row = vec![1u64];
    let mut out = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        out.push(next[0]);
        row = next;
    }
    out.truncate(n + 1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, blocks: &[&[usize]]) -> SetPartition {
        SetPartition::from_blocks(n, blocks).unwrap()
    }

    #[test]
    fn bell_counts() {
        let bell = bell_numbers(12);
        assert_eq!(bell, vec![1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597]);
        for n in 0..=9 {
            assert_eq!(enumerate_partitions(n).unwrap().count() as u64, bell[n]);
        }
        let empty: Vec<_> = enumerate_partitions(0).unwrap().collect();
        assert_eq!(empty, vec![SetPartition::empty()]);
        assert!(matches!(enumerate_partitions(17), Err(Error::Capacity(_))));
    }

    #[test]
    fn block_filter() {
        // Stirling numbers of the second kind S(5, k).
        let counts: Vec<usize> = (1..=5)
            .map(|k| enumerate_partitions_with(5, Some(k), MAX_ORDER).unwrap().count())
            .collect();
        assert_eq!(counts, vec![1, 15, 25, 10, 1]);
    }

    #[test]
    fn join_examples() {
        let a = p(4, &[&[1, 2], &[3, 4]]);
        let b = p(4, &[&[2, 3], &[1], &[4]]);
        assert_eq!(join(&a, &b).unwrap(), SetPartition::one(4));
        assert_eq!(join(&a, &a).unwrap(), a);
        let c = p(4, &[&[1, 3], &[2, 4]]);
        assert_eq!(join(&c, &interval_pairing(2)).unwrap(), SetPartition::one(4));
        assert!(join(&a, &SetPartition::one(3)).is_err());
    }

    #[test]
    fn intervals() {
        assert_eq!(interval_pairing(1), p(2, &[&[1, 2]]));
        assert_eq!(interval_pairing(3), p(6, &[&[1, 2], &[3, 4], &[5, 6]]));
    }

    #[test]
    fn alternating_examples() {
        assert!(is_alternating(&p(4, &[&[1, 3], &[2, 4]])));
        assert!(!is_alternating(&p(4, &[&[1, 2], &[3, 4]])));
        assert!(!is_alternating(&p(4, &[&[1, 3], &[2], &[4]])));
        // 1 and 4 are cyclically adjacent
        assert!(!is_alternating(&p(4, &[&[1, 4], &[2, 3]])));
    }

    #[test]
    fn standard_forms() {
        let crossing = p(4, &[&[1, 3], &[2, 4]]);
        assert_eq!(standard_form(&crossing), crossing);
        assert_eq!(standard_form(&p(4, &[&[1, 3], &[2], &[4]])), SetPartition::empty());
        assert_eq!(standard_form(&p(6, &[&[1, 2, 4], &[3, 5, 6]])), crossing);
        assert_eq!(standard_form(&SetPartition::empty()), SetPartition::empty());
    }

    #[test]
    fn small_cyclic_classes() {
        let c4 = cyclic_classes(4).unwrap();
        assert_eq!(c4.len(), 1);
        assert_eq!(c4[0].representative, p(4, &[&[1, 3], &[2, 4]]));
        assert_eq!(c4[0].class_size, 1);
        assert!(cyclic_classes(2).unwrap().is_empty());
    }

    #[test]
    fn rho_examples() {
        let one2 = SetPartition::one(2);
        let one4 = SetPartition::one(4);
        assert_eq!(rho_of_pi(&one2, &one4).unwrap(), one4);
        // Singletons with one matrix: slots 1 and 4 read column 1, slots 2 and 3 column 2.
        let rho = rho_of_pi(&SetPartition::zero(2), &one4).unwrap();
        assert_eq!(rho, p(4, &[&[1, 4], &[2, 3]]));
        assert!(rho_of_pi(&one2, &SetPartition::one(3)).is_err());
    }

    #[test]
    fn single_matrix_membership() {
        for n in 1..=5 {
            for pi in enumerate_partitions(n).unwrap() {
                let c = in_contributing_set(&pi, &SetPartition::one(2 * n)).unwrap();
                assert!(c.member);
                assert_eq!(c.r, 1);
                assert_eq!(c.rho.block_count(), pi.block_count());
            }
        }
    }

    #[test]
    fn rotation_invariance_of_membership() {
        let sigma1 = p(8, &[&[1, 2, 5, 6], &[3, 4, 7, 8]]);
        for pi in enumerate_partitions(4).unwrap() {
            let base = in_contributing_set(&pi, &sigma1).unwrap().member;
            for k in 1..4 {
                let rotated = in_contributing_set(&pi.rotate(k), &sigma1.rotate(2 * k)).unwrap().member;
                assert_eq!(base, rotated, "{pi} rotated by {k}");
            }
        }
    }

    #[test]
    fn stats_agree_with_class_tabulation() {
        assert_eq!(partition_stats(4).unwrap(), PartitionStats { n: 4, partitions: 15, alternating: 1, cyclic_classes: 1 });
        let classes = cyclic_classes(7).unwrap();
        let s = partition_stats(7).unwrap();
        assert_eq!(s.cyclic_classes as usize, classes.len());
        assert_eq!(s.alternating as usize, classes.iter().map(|c| c.class_size).sum::<usize>());
    }
}
