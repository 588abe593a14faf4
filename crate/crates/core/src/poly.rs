//! Dense univariate polynomials with cheap derivative evaluation.

use crate::scalar::Real;

/// Polynomial stored with ascending coefficients: `c[0] + c[1] y + c[2] y^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn from_ascending(coeffs: Vec<T>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&T::zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    /// Highest power first, as written by hand (`[c2, c1, c0]` for `c2 y² + c1 y + c0`).
    pub fn from_descending(coeffs: &[T]) -> Self {
        Self::from_ascending(coeffs.iter().rev().copied().collect())
    }

    pub fn ascending(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `order`-th derivative at `y` via Horner on the differentiated coefficients.
    #[inline]
    pub fn eval_derivative(&self, y: T, order: usize) -> T {
        let n = self.coeffs.len();
        if order >= n {
            return T::zero();
        }
        let mut acc = T::zero();
        for k in (order..n).rev() {
            // falling factorial k (k-1) ... (k-order+1)
            let mut factor = 1usize;
            for j in 0..order {
                factor *= k - j;
            }
            acc = acc * y + self.coeffs[k] * T::from_usize_lossy(factor);
        }
        acc
    }

    #[inline]
    pub fn eval(&self, y: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * y + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::from_ascending(vec![T::zero()]);
        }
        Self::from_ascending(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::from_usize_lossy(k))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_hand_expansion() {
        let p = Polynomial::from_descending(&[1.0_f64, -4.0, 3.0]);
        assert_eq!(p.eval(2.0), -1.0);
        assert_eq!(p.eval_derivative(2.0, 1), 0.0);
        assert_eq!(p.eval_derivative(5.0, 2), 2.0);
        assert_eq!(p.eval_derivative(5.0, 3), 0.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn derivative_agrees_with_direct_evaluation() {
        let p = Polynomial::from_ascending(vec![0.5_f64, -1.0, 0.25, 2.0, -0.125]);
        let dp = p.derivative();
        let ddp = dp.derivative();
        for &y in &[-1.3, 0.0, 0.7, 2.4] {
            assert!((dp.eval(y) - p.eval_derivative(y, 1)).abs() < 1e-12);
            assert!((ddp.eval(y) - p.eval_derivative(y, 2)).abs() < 1e-12);
        }
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Polynomial::from_ascending(vec![1.0_f64, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        let z = Polynomial::<f64>::from_ascending(vec![]);
        assert_eq!(z.eval(3.0), 0.0);
    }
}
