//! Gauss-Legendre rules and their tensor / collapsed-coordinate extensions.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n in f64.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule with explicit points in `dim` dimensions.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub dim: usize,
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Applies the rule to a sampled integrand.
    pub fn integrate<F: FnMut(&[T]) -> T>(&self, mut f: F) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (p, w)| acc + *w * f(p))
    }

    /// Gauss-Legendre rule on `[-1, 1]`.
    pub fn interval(n: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(n);
        QuadratureRule {
            dim: 1,
            points: x.into_iter().map(|v| vec![v]).collect(),
            weights: w,
        }
    }

    /// Tensor Gauss-Legendre rule on `[-1, 1]^2`.
    pub fn square(n: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                points.push(vec![x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        QuadratureRule {
            dim: 2,
            points,
            weights,
        }
    }

    /// Collapsed-coordinate rule on the reference triangle
    /// `{xi1, xi2 >= 0, xi1 + xi2 <= 1}`: `xi2 = v`, `xi1 = u (1 - v)` with
    /// `(u, v)` Gauss-Legendre on `[0, 1]^2` and Jacobian `1 - v`.
    pub fn triangle(n: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(n);
        let half = T::lit(0.5);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = (x[i] + T::one()) * half;
            for j in 0..n {
                let v = (x[j] + T::one()) * half;
                points.push(vec![u * (T::one() - v), v]);
                weights.push(w[i] * w[j] * half * half * (T::one() - v));
            }
        }
        QuadratureRule {
            dim: 2,
            points,
            weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre::<f64>(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn large_rule_weights_sum_to_two() {
        let (x, w) = gauss_legendre::<f64>(64);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn triangle_moments() {
        let q = QuadratureRule::<f64>::triangle(6);
        // int_T xi1^a xi2^b = a! b! / (a + b + 2)!
        let m = q.integrate(|p| p[0] * p[0] * p[1]);
        assert!((m - 2.0 / 120.0).abs() < 1e-15);
        let area = q.integrate(|_| 1.0);
        assert!((area - 0.5).abs() < 1e-15);
    }
}
