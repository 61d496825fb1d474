use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Chebyshev (first kind) rule on (−1, 1); every node has weight π/Q.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    /// Strictly decreasing.
    pub nodes: Vec<f64>,
}

impl QuadratureRule {
    pub fn weight(&self) -> f64 {
        PI / self.order as f64
    }

    /// Approximates ∫₋₁¹ f(x)/√(1−x²) dx.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.weight() * self.nodes.iter().map(|&x| f(x)).sum::<f64>()
    }
}

pub fn chebyshev_nodes(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Domain { what: "chebyshev_nodes", value: 0.0 });
    }
    let q = order as f64;
    let nodes = (1..=order).map(|k| ((2.0 * k as f64 - 1.0) * PI / (2.0 * q)).cos()).collect();
    Ok(QuadratureRule { order, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        let r1 = chebyshev_nodes(1).unwrap();
        assert_eq!(r1.nodes.len(), 1);
        assert!(r1.nodes[0].abs() < 1e-16);
        let r2 = chebyshev_nodes(2).unwrap();
        assert!((r2.nodes[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r2.nodes[1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(chebyshev_nodes(0).is_err());
    }

    #[test]
    fn nodes_are_ordered_and_interior() {
        for q in 1..64 {
            let r = chebyshev_nodes(q).unwrap();
            assert_eq!(r.nodes.len(), q);
            assert!(r.nodes.iter().all(|x| x.abs() < 1.0));
            assert!(r.nodes.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        // ∫ x^2 / sqrt(1-x^2) = π/2; exact for degree ≤ 2Q−1.
        let r = chebyshev_nodes(5).unwrap();
        assert!((r.apply(|x| x * x) - PI / 2.0).abs() < 1e-14);
        assert!((r.apply(|_| 1.0) - PI).abs() < 1e-14);
        assert!(r.apply(|x| x.powi(7)).abs() < 1e-14);
    }
}
