//! Gauss–Legendre and Gauss–Jacobi rules from the Jacobi-polynomial
//! recurrence, via the Golub–Welsch eigenvalue route in [`crate::tridiag`].

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::tridiag::{spectral_measure, TridiagonalMatrix};

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Rule for the weight `(1 - s)^α (1 + s)^β` on `[-1, 1]`.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
        if n == 0 {
            return invalid("quadrature needs at least one node");
        }
        if !(alpha > -1.0 && beta > -1.0) {
            return invalid(format!("Jacobi weight exponents must exceed -1, got ({alpha}, {beta})"));
        }
        let ab = alpha + beta;
        let diag: Vec<f64> = (0..n)
            .map(|k| {
                let k = k as f64;
                if k == 0.0 {
                    (beta - alpha) / (ab + 2.0)
                } else {
                    (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
                }
            })
            .collect();
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                let b2 = if k == 1.0 {
                    4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    let s = 2.0 * k + ab;
                    4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
                };
                b2.sqrt()
            })
            .collect();
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0))
        .exp();
        let sp = spectral_measure(&TridiagonalMatrix::new(diag, off)?)?;
        Ok(GaussRule {
            nodes: sp.locations().to_vec(),
            weights: sp.weights().iter().map(|w| w * mu0).collect(),
        })
    }

    pub fn legendre(n: usize) -> Result<GaussRule> {
        Self::jacobi(n, 0.0, 0.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_three_points() {
        let r = GaussRule::legendre(3).unwrap();
        let x = 0.6f64.sqrt();
        let expect = [(-x, 5.0 / 9.0), (0.0, 8.0 / 9.0), (x, 5.0 / 9.0)];
        for ((n, w), (en, ew)) in r.nodes.iter().zip(&r.weights).zip(expect) {
            assert!((n - en).abs() < 1e-14 && (w - ew).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobi_rule_integrates_singular_weight() {
        // ∫_{-1}^{1} (1+s)^{-1/2} (1+s)^2 ds = 2^{5/2} / (5/2).
        let r = GaussRule::jacobi(10, 0.0, -0.5).unwrap();
        let got: f64 = r.nodes.iter().zip(&r.weights).map(|(s, w)| w * (1.0 + s).powi(2)).sum();
        let exact = 2f64.powf(2.5) / 2.5;
        assert!((got - exact).abs() < 1e-13, "{got} vs {exact}");
        let mass: f64 = r.weights.iter().sum();
        assert!((mass - 2f64.powf(0.5) / 0.5).abs() < 1e-13);
    }
}
