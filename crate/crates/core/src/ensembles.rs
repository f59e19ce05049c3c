//! Even moments of random Toeplitz and Hankel matrices from pair partitions.

use std::str::FromStr;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::convolution::{MomentSequence, SequenceNormalization};
use crate::error::{Error, Result};
use crate::partition::{pair_partitions, SetPartition};
use crate::rational::Rational;
use crate::value::Value;
use crate::volume::{system_volume, EquationSystem};

/// Largest `k` for which `ensemble_moments` enumerates the `(2k-1)!!` pairings.
pub const MAX_ENSEMBLE_ORDER: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Entries `a_{|i-j|}`.
    Toeplitz,
    /// Entries `a_{i+j}`.
    Hankel,
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "toeplitz" => Ok(EnsembleKind::Toeplitz),
            "hankel" => Ok(EnsembleKind::Hankel),
            other => Err(Error::Argument(format!("unknown ensemble {other:?} (toeplitz or hankel)"))),
        }
    }
}

/// Index equations of a pairing of the `2k` factors of `tr(X^{2k})`. Factor
/// `a` reads entry `(x_{a-1}, x_a)` with indices taken cyclically.
pub fn pairing_system(kind: EnsembleKind, pairing: &SetPartition) -> EquationSystem {
    let m = pairing.n();
    let rows = pairing
        .blocks()
        .iter()
        .map(|b| {
            let (a, c) = (b[0], b[1]);
            let mut r = vec![0i64; m];
            let (sa, sc) = match kind {
                EnsembleKind::Toeplitz => (-1, 1),
                EnsembleKind::Hankel => (1, -1),
            };
            // Toeplitz: (x_{a-1} - x_a) + (x_{c-1} - x_c) = 0
            // Hankel:   (x_{a-1} + x_a) - (x_{c-1} + x_c) = 0
            r[(a + m - 1) % m] += 1;
            r[a] += sa;
            r[(c + m - 1) % m] += sc;
            r[c] -= 1;
            r
        })
        .collect();
    EquationSystem::new(m, rows)
}

/// `lim count/N^{k+1}` for one pairing of `2k` factors.
pub fn pairing_volume(kind: EnsembleKind, pairing: &SetPartition) -> Result<Rational> {
    let sys = pairing_system(kind, pairing);
    if sys.dimension() < pairing.n() / 2 + 1 {
        return Ok(Rational::zero());
    }
    system_volume(&sys)
}

/// Per-pairing volumes at order `2k`.
pub fn pairing_volumes(kind: EnsembleKind, k: usize) -> Result<Vec<(SetPartition, Rational)>> {
    pair_partitions(k).into_iter().map(|p| pairing_volume(kind, &p).map(|v| (p, v))).collect()
}

/// `lim tr(X^order)` for the normalized ensemble `X = A/√N`; odd orders vanish.
pub fn ensemble_moment(kind: EnsembleKind, order: usize) -> Result<Rational> {
    if order % 2 == 1 {
        return Ok(Rational::zero());
    }
    if order == 0 {
        return Ok(Rational::one());
    }
    let k = order / 2;
    if k > MAX_ENSEMBLE_ORDER {
        return Err(Error::Capacity(format!("order {order} exceeds {}", 2 * MAX_ENSEMBLE_ORDER)));
    }
    Ok(pairing_volumes(kind, k)?.into_iter().map(|(_, v)| v).sum())
}

/// Moments of orders `2, 4, ..., 2k`.
pub fn ensemble_moments(kind: EnsembleKind, k: usize) -> Result<MomentSequence> {
    if k > MAX_ENSEMBLE_ORDER {
        return Err(Error::Capacity(format!("{k} even moments requested, at most {MAX_ENSEMBLE_ORDER} supported")));
    }
    let values = (1..=k).map(|i| ensemble_moment(kind, 2 * i).map(Value::Exact)).collect::<Result<Vec<_>>>()?;
    MomentSequence::new(SequenceNormalization::Raw, Rational::one(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::volume::oracle_volume;

    #[test]
    fn toeplitz_low_orders() {
        assert_eq!(ensemble_moment(EnsembleKind::Toeplitz, 2).unwrap(), int(1));
        assert_eq!(ensemble_moment(EnsembleKind::Toeplitz, 4).unwrap(), frac(8, 3));
        assert_eq!(ensemble_moment(EnsembleKind::Toeplitz, 6).unwrap(), int(11));
        assert_eq!(ensemble_moment(EnsembleKind::Toeplitz, 5).unwrap(), int(0));
    }

    #[test]
    fn hankel_low_orders() {
        // the crossing pairing of four factors forces x0 = x2 and x1 = x3
        assert_eq!(ensemble_moment(EnsembleKind::Hankel, 2).unwrap(), int(1));
        assert_eq!(ensemble_moment(EnsembleKind::Hankel, 4).unwrap(), int(2));
        assert_eq!(ensemble_moment(EnsembleKind::Hankel, 6).unwrap(), frac(11, 2));
    }

    #[test]
    fn volumes_match_lattice_counts() {
        for kind in [EnsembleKind::Toeplitz, EnsembleKind::Hankel] {
            for (p, v) in pairing_volumes(kind, 3).unwrap() {
                let sys = pairing_system(kind, &p);
                let o = if sys.dimension() < 4 { int(0) } else { oracle_volume(&sys).unwrap() };
                assert_eq!(v, o, "{kind:?} {p}");
            }
        }
    }

    #[test]
    fn noncrossing_pairings_have_unit_volume() {
        for kind in [EnsembleKind::Toeplitz, EnsembleKind::Hankel] {
            for (p, v) in pairing_volumes(kind, 4).unwrap() {
                assert!(v <= int(1));
                if p.is_noncrossing() {
                    assert_eq!(v, int(1), "{kind:?} {p}");
                }
            }
        }
    }
}
