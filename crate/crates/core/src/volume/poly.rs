//! Sparse multivariate polynomials with exact rational coefficients, just
//! enough for integrating over Fourier-Motzkin cells.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::rational::Rational;

/// Affine form `constant + Σ coeffs[j]·y_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub constant: Rational,
    pub coeffs: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    vars: usize,
    terms: BTreeMap<Vec<u8>, Rational>,
}

impl Poly {
    pub fn constant(vars: usize, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; vars], c);
        }
        Poly { vars, terms }
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, Rational::one())
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Rational)> {
        self.terms.iter()
    }

    /// Constant term (the value when every variable is zero).
    pub fn constant_term(&self) -> Rational {
        self.terms.get(&vec![0; self.vars]).cloned().unwrap_or_else(Rational::zero)
    }

    fn add_term(&mut self, exps: Vec<u8>, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly { vars: self.vars, terms: BTreeMap::new() };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Antiderivative in variable 0.
    pub fn integrate_first(&self) -> Poly {
        let mut out = Poly { vars: self.vars, terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let mut e = e.clone();
            e[0] += 1;
            let k = Rational::from_integer(e[0].into());
            out.terms.insert(e, c / k);
        }
        out
    }

    /// Substitutes `y_0 = a(y_1, ..)` and drops variable 0.
    pub fn substitute_first(&self, a: &Affine) -> Poly {
        let rest = self.vars - 1;
        let mut lin = Poly::constant(rest, a.constant.clone());
        for (j, c) in a.coeffs.iter().enumerate() {
            let mut e = vec![0u8; rest];
            e[j] = 1;
            lin.add_term(e, c.clone());
        }
        let max_deg = self.terms.keys().map(|e| e[0]).max().unwrap_or(0) as usize;
        let mut powers = vec![Poly::one(rest)];
        for k in 1..=max_deg {
            let next = powers[k - 1].mul(&lin);
            powers.push(next);
        }
        let mut out = Poly { vars: rest, terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let tail = e[1..].to_vec();
            for (pe, pc) in &powers[e[0] as usize].terms {
                let merged: Vec<u8> = pe.iter().zip(&tail).map(|(a, b)| a + b).collect();
                out.add_term(merged, c * pc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn integrate_and_substitute() {
        // ∫_0^{1-y} 1 dx = 1 - y, then ∫_0^1 (1-y) dy = 1/2
        let p = Poly::one(2).integrate_first();
        let upper = Affine { constant: int(1), coeffs: vec![int(-1)] };
        let lower = Affine { constant: int(0), coeffs: vec![int(0)] };
        let q = p.substitute_first(&upper).sub(&p.substitute_first(&lower));
        let f = q.integrate_first();
        let top = f.substitute_first(&Affine { constant: int(1), coeffs: vec![] });
        assert_eq!(top.constant_term(), frac(1, 2));
    }
}
