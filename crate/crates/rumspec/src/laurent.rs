//! Multivariate Laurent polynomials with complex coefficients.
//!
//! Exponent arithmetic is exact (integer tuples); coefficients are complex
//! doubles. Terms with exactly zero coefficient are never stored, so the
//! term map doubles as the support.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Complex;

use crate::error::{Result, RumspecError};

pub type C64 = Complex<f64>;

/// A Laurent polynomial in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    dim: usize,
    terms: BTreeMap<Vec<i64>, C64>,
}

impl LaurentPoly {
    pub fn zero(dim: usize) -> Self {
        LaurentPoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C64::new(1.0, 0.0))
    }

    /// The monomial `c * z^expo`.
    pub fn monomial(dim: usize, expo: Vec<i64>, c: C64) -> Self {
        assert_eq!(expo.len(), dim);
        let mut p = Self::zero(dim);
        p.add_term(expo, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, expo: &[i64]) -> C64 {
        self.terms.get(expo).copied().unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    /// Largest coefficient magnitude; 0 for the zero polynomial.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add_term(&mut self, expo: Vec<i64>, c: C64) {
        assert_eq!(expo.len(), self.dim);
        if c.norm_sqr() == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(expo) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.norm_sqr() == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        if s.norm_sqr() == 0.0 {
            return Self::zero(self.dim);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Multiply by the monomial `z^expo`.
    pub fn shift(&self, expo: &[i64]) -> Self {
        assert_eq!(expo.len(), self.dim);
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let shifted: Vec<i64> = e.iter().zip(expo).map(|(a, b)| a + b).collect();
            out.add_term(shifted, *c);
        }
        out
    }

    /// Substitute `z_i -> z_i^{-1}` for every variable.
    pub fn subst_inverse(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.iter().map(|x| -x).collect(), *c);
        }
        out
    }

    /// Coefficient-wise complex conjugation (exponents untouched).
    pub fn conj_coeffs(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    /// Remove terms whose coefficient magnitude is at most `eps`.
    pub fn prune(&self, eps: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if c.norm() > eps {
                out.add_term(e.clone(), *c);
            }
        }
        out
    }

    /// Evaluate at a point of the punctured complex torus.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.dim {
            return Err(RumspecError::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        for (i, zi) in z.iter().enumerate() {
            if zi.norm_sqr() == 0.0 {
                return Err(RumspecError::ZeroComponent(i));
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (zi, &ei) in z.iter().zip(e) {
                m *= zi.powi(ei as i32);
            }
            acc += m;
        }
        Ok(acc)
    }

    /// Componentwise minimum exponent over all terms, or `None` if zero.
    pub fn min_exponents(&self) -> Option<Vec<i64>> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |mut acc, e| {
            for (a, b) in acc.iter_mut().zip(e) {
                *a = (*a).min(*b);
            }
            acc
        }))
    }

    fn leading(&self) -> Option<(&Vec<i64>, &C64)> {
        self.terms.iter().next_back()
    }

    /// Exact division by `g`, used by the fraction-free determinant where
    /// divisibility is guaranteed. Residual terms below the noise floor are
    /// discarded; anything larger is an error.
    pub fn div_exact(&self, g: &Self) -> Result<Self> {
        assert_eq!(self.dim, g.dim);
        let (lg_e, lg_c) = g
            .leading()
            .ok_or_else(|| RumspecError::DivisionFailure("division by zero polynomial".into()))?;
        let lg_e = lg_e.clone();
        let lg_c = *lg_c;
        let noise = 1e-11 * self.max_coeff().max(g.max_coeff()).max(1.0);
        let mut rem = self.clone();
        let mut quo = Self::zero(self.dim);
        // Bounded by the term count times quotient length in the exact case.
        let mut guard = 16 * (self.num_terms() + 1) * (g.num_terms() + 4);
        while let Some((lf_e, lf_c)) = rem.leading().map(|(e, c)| (e.clone(), *c)) {
            if guard == 0 {
                return Err(RumspecError::DivisionFailure("division did not terminate".into()));
            }
            guard -= 1;
            if lf_c.norm() <= noise {
                rem.terms.remove(&lf_e);
                continue;
            }
            if lf_e.iter().zip(&lg_e).any(|(a, b)| a < b) {
                return Err(RumspecError::DivisionFailure(format!(
                    "leading term z^{:?} not divisible by z^{:?} (coeff {:.3e})",
                    lf_e,
                    lg_e,
                    lf_c.norm()
                )));
            }
            let e: Vec<i64> = lf_e.iter().zip(&lg_e).map(|(a, b)| a - b).collect();
            let c = lf_c / lg_c;
            let t = Self::monomial(self.dim, e, c);
            quo = quo.add(&t);
            rem = rem.sub(&t.mul(g)).prune(noise * 1e-2);
        }
        Ok(quo)
    }

    /// Canonical text form: terms in ascending exponent order.
    pub fn canonical_string(&self, vars: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| {
                    if x == 1 {
                        vars[i].clone()
                    } else {
                        format!("{}^{}", vars[i], x)
                    }
                })
                .collect();
            let cs = fmt_coeff(*c);
            if mono.is_empty() {
                parts.push(cs);
            } else if (c.re - 1.0).abs() == 0.0 && c.im == 0.0 {
                parts.push(mono.join("*"));
            } else {
                parts.push(format!("{}*{}", cs, mono.join("*")));
            }
        }
        parts.join(" + ")
    }
}

fn fmt_coeff(c: C64) -> String {
    if c.im == 0.0 {
        crate::output::fmt_e(c.re)
    } else if c.re == 0.0 {
        format!("{}i", crate::output::fmt_e(c.im))
    } else {
        format!("({}{}{}i)", crate::output::fmt_e(c.re), if c.im < 0.0 { "" } else { "+" }, crate::output::fmt_e(c.im))
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = (1..=self.dim).map(|i| format!("z{i}")).collect();
        write!(f, "{}", self.canonical_string(&vars))
    }
}
