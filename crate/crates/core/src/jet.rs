//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `dim <= 2`
//! variables about a base point, truncated at total order `order <= 3`.
//! Arithmetic on jets is exact differentiation: evaluating an expression on
//! jets seeded with [`Jet::variable`] yields all partial derivatives of the
//! expression up to the truncation order.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

pub const MAX_DIM: usize = 2;
pub const MAX_ORDER: usize = 3;
const CAP: usize = 10;

/// Exponent of coefficient slot `i` for a two-variable jet, graded by total degree.
const EXP2: [[usize; 2]; CAP] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [2, 0],
    [1, 1],
    [0, 2],
    [3, 0],
    [2, 1],
    [1, 2],
    [0, 3],
];

#[inline]
fn slot(dim: usize, e: [usize; 2]) -> usize {
    if dim == 1 {
        e[0]
    } else {
        let t = e[0] + e[1];
        t * (t + 1) / 2 + e[1]
    }
}

#[inline]
fn exponent(dim: usize, i: usize) -> [usize; 2] {
    if dim == 1 {
        [i, 0]
    } else {
        EXP2[i]
    }
}

#[inline]
fn len_for(dim: usize, order: usize) -> usize {
    if dim == 1 {
        order + 1
    } else {
        (order + 1) * (order + 2) / 2
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    dim: u8,
    order: u8,
    c: [T; CAP],
}

impl<T: Real> Jet<T> {
    pub fn constant(dim: usize, order: usize, value: T) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "jet dimension must be 1 or 2");
        assert!(order <= MAX_ORDER, "jet order must be at most 3");
        let mut c = [T::zero(); CAP];
        c[0] = value;
        Jet {
            dim: dim as u8,
            order: order as u8,
            c,
        }
    }

    /// The coordinate function `x_i` expanded about `x_i = value`.
    pub fn variable(dim: usize, order: usize, i: usize, value: T) -> Self {
        let mut j = Self::constant(dim, order, value);
        if order >= 1 {
            let mut e = [0; 2];
            e[i] = 1;
            j.c[slot(dim, e)] = T::one();
        }
        j
    }

    /// Affine function `value + grad . h`.
    pub fn affine(order: usize, value: T, grad: &[T]) -> Self {
        let mut j = Self::constant(grad.len(), order, value);
        if order >= 1 {
            for (i, g) in grad.iter().enumerate() {
                let mut e = [0; 2];
                e[i] = 1;
                j.c[slot(grad.len(), e)] = *g;
            }
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    fn len(&self) -> usize {
        len_for(self.dim(), self.order())
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Raw Taylor coefficient of `h^e`.
    pub fn coefficient(&self, e: [usize; 2]) -> T {
        if e[0] + e[1] > self.order() || (self.dim == 1 && e[1] > 0) {
            return T::zero();
        }
        self.c[slot(self.dim(), e)]
    }

    /// Partial derivative `d/dx_i` at the base point.
    pub fn d1(&self, i: usize) -> T {
        let mut e = [0; 2];
        e[i] = 1;
        self.coefficient(e)
    }

    /// Second partial derivative `d^2/dx_i dx_j` at the base point.
    pub fn d2(&self, i: usize, j: usize) -> T {
        let mut e = [0; 2];
        e[i] += 1;
        e[j] += 1;
        let scale = if i == j { T::lit(2.0) } else { T::one() };
        self.coefficient(e) * scale
    }

    /// Gradient at the base point.
    pub fn gradient(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.d1(i)).collect()
    }

    /// The jet of `d/dx_i`, one order lower.
    pub fn derivative(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let dim = self.dim();
        let order = self.order() - 1;
        let mut out = Self::constant(dim, order, T::zero());
        for s in 0..len_for(dim, order) {
            let mut e = exponent(dim, s);
            e[i] += 1;
            out.c[s] = self.c[slot(dim, e)] * T::from_int(e[i] as i64);
        }
        out
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        let mut out = Self::constant(self.dim(), order, T::zero());
        let n = len_for(self.dim(), order);
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }

    fn zip(&self, other: &Self) -> (Self, Self) {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order().min(other.order());
        (self.truncate(order), other.truncate(order))
    }

    /// Composes a univariate function given its derivatives `g^(m)(value)` for
    /// `m = 0..=order` with this jet.
    pub fn compose(&self, derivs: &[T]) -> Self {
        let order = self.order();
        let mut delta = *self;
        delta.c[0] = T::zero();
        let coef = |m: usize| derivs[m] / T::from_int(factorial(m) as i64);
        let mut acc = Self::constant(self.dim(), order, coef(order));
        for m in (0..order).rev() {
            acc = acc * delta;
            acc.c[0] += coef(m);
        }
        acc
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut p = T::one() / x;
        let mut sign = T::one();
        for m in 0..=self.order() {
            d.push(sign * T::from_int(factorial(m) as i64) * p);
            p /= x;
            sign = -sign;
        }
        self.compose(&d)
    }

    pub fn ln(&self) -> Self {
        let x = self.value();
        let mut d = vec![x.ln()];
        let mut p = T::one() / x;
        let mut sign = T::one();
        for m in 1..=self.order() {
            d.push(sign * T::from_int(factorial(m - 1) as i64) * p);
            p /= x;
            sign = -sign;
        }
        self.compose(&d)
    }

    /// `self^gamma` for a real exponent; requires a positive base value when
    /// `order > 0`.
    pub fn powf(&self, gamma: T) -> Self {
        let x = self.value();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut falling = T::one();
        for m in 0..=self.order() {
            let e = gamma - T::from_int(m as i64);
            d.push(falling * x.powf(e));
            falling *= e;
        }
        self.compose(&d)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.dim(), self.order(), T::one());
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }

    pub fn scale(&self, a: T) -> Self {
        let mut out = *self;
        for v in out.c.iter_mut() {
            *v *= a;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c[..self.len()].iter().all(|v| v.is_finite())
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (mut a, b) = self.zip(&rhs);
        for i in 0..a.len() {
            a.c[i] += b.c[i];
        }
        a
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (mut a, b) = self.zip(&rhs);
        for i in 0..a.len() {
            a.c[i] -= b.c[i];
        }
        a
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = self.zip(&rhs);
        let dim = a.dim();
        let order = a.order();
        let n = a.len();
        let mut out = Self::constant(dim, order, T::zero());
        for i in 0..n {
            let ei = exponent(dim, i);
            let di = ei[0] + ei[1];
            if a.c[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let ej = exponent(dim, j);
                if di + ej[0] + ej[1] > order {
                    continue;
                }
                out.c[slot(dim, [ei[0] + ej[0], ei[1] + ej[1]])] += a.c[i] * b.c[j];
            }
        }
        out
    }
}

impl<T: Real> Add<T> for Jet<T> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl<T: Real> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

/// Inverts a small symmetric positive definite matrix of jets by Gauss-Jordan
/// elimination without pivoting.
pub fn invert_spd<T: Real>(m: &[Vec<Jet<T>>]) -> Vec<Vec<Jet<T>>> {
    let n = m.len();
    let proto = m[0][0];
    let zero = Jet::constant(proto.dim(), proto.order(), T::zero());
    let one = Jet::constant(proto.dim(), proto.order(), T::one());
    let mut a: Vec<Vec<Jet<T>>> = m.to_vec();
    let mut inv: Vec<Vec<Jet<T>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one } else { zero }).collect())
        .collect();
    for col in 0..n {
        let r = a[col][col].recip();
        for j in 0..n {
            a[col][j] = a[col][j] * r;
            inv[col][j] = inv[col][j] * r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            for j in 0..n {
                a[row][j] = a[row][j] - f * a[col][j];
                inv[row][j] = inv[row][j] - f * inv[col][j];
            }
        }
    }
    inv
}
