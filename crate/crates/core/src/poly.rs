//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::jet::Jet;
use crate::scalar::Real;

/// A polynomial in `nvars` variables stored as a map from exponent vectors to
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn monomial(exponents: Vec<u32>, c: T) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, T::one())
    }

    /// `coeffs . x + c0`.
    pub fn affine(coeffs: &[T], c0: T) -> Self {
        let n = coeffs.len();
        let mut p = Self::constant(n, c0);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, c);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, T)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length must equal nvars");
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: T) {
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(exponents.clone()).or_insert_with(T::zero);
        *entry += c;
        if *entry == T::zero() {
            self.terms.remove(&exponents);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.terms.iter()
    }

    pub fn scale(&self, a: T) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), *c * a);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut p = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, *ca * *cb);
            }
        }
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.nvars, T::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            p.add_term(d, *c * T::from_int(e[i] as i64));
        }
        p
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            let mut m = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    m *= xi.powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Taylor jet of the polynomial about `x`.
    pub fn eval_jet(&self, x: &[T], order: usize) -> Jet<T> {
        let n = self.nvars;
        let vars: Vec<Jet<T>> = (0..n).map(|i| Jet::variable(n, order, i, x[i])).collect();
        let mut acc = Jet::constant(n, order, T::zero());
        for (e, c) in &self.terms {
            let mut m = Jet::constant(n, order, *c);
            for (v, &k) in vars.iter().zip(e) {
                if k > 0 {
                    m = m * v.powi(k);
                }
            }
            acc = acc + m;
        }
        acc
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        (0..self.nvars).map(|i| self.derivative(i).eval(x)).collect()
    }

    /// Matrix of second-derivative polynomials.
    pub fn hessian_polys(&self) -> Vec<Vec<Self>> {
        let d: Vec<Self> = (0..self.nvars).map(|i| self.derivative(i)).collect();
        (0..self.nvars)
            .map(|i| (0..self.nvars).map(|j| d[i].derivative(j)).collect())
            .collect()
    }

    pub fn hessian(&self, x: &[T]) -> DMatrix<T> {
        let h = self.hessian_polys();
        let n = self.nvars;
        DMatrix::from_fn(n, n, |i, j| h[i][j].eval(x))
    }

    /// Substitutes `x = matrix * y + shift`, returning a polynomial in `y`.
    pub fn compose_affine(&self, matrix: &DMatrix<T>, shift: &[T]) -> Self {
        let n = self.nvars;
        assert_eq!(matrix.nrows(), n);
        let m = matrix.ncols();
        let subs: Vec<Self> = (0..n)
            .map(|i| {
                let row: Vec<T> = (0..m).map(|j| matrix[(i, j)]).collect();
                Polynomial::affine(&row, shift[i])
            })
            .collect();
        let mut out = Self::zero(m);
        for (e, c) in &self.terms {
            let mut t = Self::constant(m, *c);
            for (s, &k) in subs.iter().zip(e) {
                if k > 0 {
                    t = t.mul(&s.pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_coefficient(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |m, c| if c.abs() > m { c.abs() } else { m })
    }
}

/// Human-readable name of a monomial, e.g. `x^2` for one variable or
/// `x1^2*x2` for two.
pub fn monomial_name(exponents: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &k) in exponents.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let var = if exponents.len() == 1 {
            "x".to_string()
        } else {
            format!("x{}", i + 1)
        };
        if k == 1 {
            parts.push(var);
        } else {
            parts.push(format!("{var}^{k}"));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

impl<T: Real> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let c = c.as_f64();
            let name = monomial_name(e);
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            if name == "1" {
                write!(f, "{a}")?;
            } else if a == 1.0 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{a}*{name}")?;
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_evaluation() {
        let x = Polynomial::<f64>::variable(1, 0);
        let one = Polynomial::constant(1, 1.0);
        // (1 - x^2)^2
        let p = one.sub(&x.mul(&x)).pow(2);
        assert_eq!(p.degree(), 4);
        assert_eq!(p.eval(&[0.5]), 0.5625);
        assert_eq!(p.derivative(0).eval(&[1.0]), 0.0);
        assert_eq!(p.hessian(&[0.0])[(0, 0)], -4.0);
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = Polynomial::<f64>::variable(2, 0);
        let z = x.sub(&x);
        assert!(z.is_zero());
        assert_eq!(z.to_string(), "0");
    }

    #[test]
    fn affine_composition() {
        // v(x1, x2) = x1 * x2, x = A y + b with A = [[0, 1], [1, 1]], b = (1, 0)
        let v = Polynomial::<f64>::monomial(vec![1, 1], 1.0);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let w = v.compose_affine(&a, &[1.0, 0.0]);
        let y = [0.3, -0.7];
        let x = [y[1] + 1.0, y[0] + y[1]];
        assert!((w.eval(&y) - v.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn jet_of_polynomial() {
        let p = Polynomial::<f64>::from_terms(2, [(vec![2, 1], 3.0), (vec![0, 3], -1.0)]);
        let x = [0.4, 0.9];
        let j = p.eval_jet(&x, 3);
        assert!((j.value() - p.eval(&x)).abs() < 1e-15);
        let g = p.gradient(&x);
        assert!((j.d1(0) - g[0]).abs() < 1e-14);
        assert!((j.d1(1) - g[1]).abs() < 1e-14);
        let h = p.hessian(&x);
        assert!((j.d2(0, 1) - h[(0, 1)]).abs() < 1e-14);
        assert!((j.d2(1, 1) - h[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn names() {
        assert_eq!(monomial_name(&[2]), "x^2");
        assert_eq!(monomial_name(&[1]), "x");
        assert_eq!(monomial_name(&[2, 1]), "x1^2*x2");
        assert_eq!(monomial_name(&[0, 0]), "1");
        let p = Polynomial::<f64>::from_terms(1, [(vec![2], -0.5), (vec![0], 1.0)]);
        assert_eq!(p.to_string(), "-0.5*x^2 + 1");
    }
}
