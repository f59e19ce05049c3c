//! Numeric evaluation of moment polynomials.

use std::collections::BTreeMap;

use super::expression::UNIFORM;
use super::polynomial::{DIndex, JSym, MomentPolynomial};
use crate::density::{cross_integral, PhaseDensity};
use crate::error::{Error, Result};
use crate::value::Value;

/// Values for the symbols of a polynomial.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    /// Mixed D-moments by sorted multi-index.
    pub d: BTreeMap<DIndex, Value>,
    /// `lim tr(D_l^k)` for `k = 1, 2, ...`, keyed by label `l`.
    pub d_moments: BTreeMap<u32, Vec<Value>>,
    /// `V_k^{(g)}` for `k = 1, 2, ...`, keyed by group `g`.
    pub v: BTreeMap<u32, Vec<Value>>,
    /// `I_{k,ω}` for `k = 1, 2, ...`, keyed by phase label.
    pub i: BTreeMap<String, Vec<Value>>,
    /// Densities used for any `I` or `J` not bound explicitly.
    pub densities: BTreeMap<String, PhaseDensity>,
    pub c: BTreeMap<String, Value>,
}

impl Bindings {
    pub fn with_d_moments(mut self, label: u32, values: Vec<Value>) -> Self {
        self.d_moments.insert(label, values);
        self
    }

    pub fn with_v(mut self, group: u32, values: Vec<Value>) -> Self {
        self.v.insert(group, values);
        self
    }

    pub fn with_density(mut self, phase: &str, density: PhaseDensity) -> Self {
        self.densities.insert(phase.to_string(), density);
        self
    }

    pub fn with_c(mut self, symbol: &str, value: Value) -> Self {
        self.c.insert(symbol.to_string(), value);
        self
    }

    fn d_value(&self, d: &DIndex) -> Result<Value> {
        if let Some(v) = self.d.get(d) {
            return Ok(v.clone());
        }
        if d.iter().all(|&l| l == d[0]) {
            if let Some(v) = self.d_moments.get(&d[0]).and_then(|m| m.get(d.len() - 1)) {
                return Ok(v.clone());
            }
        }
        let label: Vec<String> = d.iter().map(|l| l.to_string()).collect();
        Err(Error::Unbound(format!("D_{{{}}}", label.join(","))))
    }

    fn i_value(&self, phase: &str, k: u32) -> Result<Value> {
        if let Some(v) = self.i.get(phase).and_then(|m| m.get(k as usize - 1)) {
            return Ok(v.clone());
        }
        if phase == UNIFORM {
            return Ok(Value::one());
        }
        match self.densities.get(phase) {
            Some(p) => Ok(p.i_k(k)),
            None => Err(Error::Unbound(format!("I_{{{k},{phase}}}"))),
        }
    }

    fn j_value(&self, j: &JSym) -> Result<Value> {
        let mut factors = Vec::new();
        for (phase, e) in j {
            if phase == UNIFORM {
                factors.push((&PhaseDensity::Uniform, *e));
                continue;
            }
            match self.densities.get(phase) {
                Some(p) => factors.push((p, *e)),
                None => return Err(Error::Unbound(format!("density of phase {phase:?} for a cross integral"))),
            }
        }
        Ok(cross_integral(&factors))
    }
}

/// Evaluates `poly`; the result is exact when every binding used is.
pub fn evaluate(poly: &MomentPolynomial, bindings: &Bindings) -> Result<Value> {
    let mut total = Value::zero();
    for (m, coeff) in &poly.terms {
        let mut t = Value::Exact(coeff.clone());
        for (sym, p) in &m.c {
            let c = bindings.c.get(sym).ok_or_else(|| Error::Unbound(format!("aspect ratio {sym}")))?;
            t = &t * &c.pow(*p);
        }
        for d in &m.d {
            t = &t * &bindings.d_value(d)?;
        }
        for v in &m.v {
            let val = bindings
                .v
                .get(&v.matrix)
                .and_then(|s| s.get(v.order as usize - 1))
                .ok_or_else(|| Error::Unbound(format!("V_{{{}}}^{{({})}}", v.order, v.matrix)))?;
            t = &t * val;
        }
        for i in &m.i {
            t = &t * &bindings.i_value(&i.phase, i.order)?;
        }
        for j in &m.j {
            t = &t * &bindings.j_value(j)?;
        }
        total = &total + &t;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::polynomial::Monomial;
    use crate::rational::{frac, int};

    #[test]
    fn exact_and_unbound() {
        let mut p = MomentPolynomial::zero(2);
        p.add_term(Monomial::one().with_d(vec![1, 1]), int(1));
        p.add_term(Monomial::one().with_d(vec![1]).with_d(vec![1]).with_v(1, 2), int(1));
        let b = Bindings::default().with_d_moments(1, vec![Value::Exact(int(1)), Value::Exact(frac(7, 6))]);
        assert!(matches!(evaluate(&p, &b), Err(Error::Unbound(_))));
        let b = b.with_v(1, vec![Value::one(), Value::Exact(int(2))]);
        assert_eq!(evaluate(&p, &b).unwrap(), Value::Exact(frac(19, 6)));
    }

    #[test]
    fn zero_polynomial() {
        assert_eq!(evaluate(&MomentPolynomial::zero(1), &Bindings::default()).unwrap(), Value::zero());
    }
}
