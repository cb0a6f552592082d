//! Real roots of quartic polynomials via companion-matrix eigenvalues
//! with Newton polishing.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `P(x) = a4 x^4 + a3 x^3 + a2 x^2 + a1 x + a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub a4: f64,
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl QuarticCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        (((self.a4 * x + self.a3) * x + self.a2) * x + self.a1) * x + self.a0
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        ((4.0 * self.a4 * x + 3.0 * self.a3) * x + 2.0 * self.a2) * x + self.a1
    }

    /// Infinity norm of the coefficient vector; the scale for residual checks.
    pub fn norm(&self) -> f64 {
        [self.a4, self.a3, self.a2, self.a1, self.a0]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// All real roots of the quartic, sorted ascending, each with its
/// multiplicity. Roots are eigenvalues of the companion matrix, kept when
/// their imaginary part is negligible, then polished by Newton iteration.
pub fn quartic_real_roots(c: &QuarticCoefficients) -> Result<Vec<(f64, usize)>> {
    if c.a4 == 0.0 {
        return Err(Error::Domain {
            context: "quartic_real_roots",
            detail: "leading coefficient is zero".into(),
        });
    }
    let (b3, b2, b1, b0) = (c.a3 / c.a4, c.a2 / c.a4, c.a1 / c.a4, c.a0 / c.a4);
    #[rustfmt::skip]
    let companion = Matrix4::new(
        0.0, 0.0, 0.0, -b0,
        1.0, 0.0, 0.0, -b1,
        0.0, 1.0, 0.0, -b2,
        0.0, 0.0, 1.0, -b3,
    );
    let eigenvalues = companion.complex_eigenvalues();

    // Scale for deciding whether an eigenvalue is real.
    let magnitude = 1.0 + b0.abs().max(b1.abs()).max(b2.abs()).max(b3.abs());
    let im_tol = 1e-8 * magnitude;

    let mut roots: Vec<f64> = eigenvalues
        .iter()
        .filter(|z| z.im.abs() <= im_tol)
        .map(|z| polish(c, z.re))
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));

    // Cluster near-identical polished roots into multiplicities.
    let cluster_tol = 1e-7 * magnitude;
    let mut clustered: Vec<(f64, usize)> = Vec::new();
    for root in roots {
        match clustered.last_mut() {
            Some((value, count)) if (root - *value).abs() <= cluster_tol => *count += 1,
            _ => clustered.push((root, 1)),
        }
    }
    Ok(clustered)
}

fn polish(c: &QuarticCoefficients, mut x: f64) -> f64 {
    for _ in 0..50 {
        let value = c.eval(x);
        let slope = c.eval_derivative(x);
        if slope == 0.0 {
            break;
        }
        let step = value / slope;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructed_factorization() {
        // (x - 1)(x + 1)(x + 2)(x + 3) = x^4 + 5x^3 + 5x^2 - 5x - 6
        let c = QuarticCoefficients { a4: 1.0, a3: 5.0, a2: 5.0, a1: -5.0, a0: -6.0 };
        let roots = quartic_real_roots(&c).unwrap();
        let expected = [-3.0, -2.0, -1.0, 1.0];
        assert_eq!(roots.len(), 4);
        for ((root, mult), want) in roots.iter().zip(expected) {
            assert_eq!(*mult, 1);
            assert!((root - want).abs() < 1e-10, "root {root} vs {want}");
        }
    }

    #[test]
    fn double_root_multiplicity() {
        // (x - 2)^2 (x + 1)(x + 3) = x^4 - 9x^2 + 4x + 12
        let c = QuarticCoefficients { a4: 1.0, a3: 0.0, a2: -9.0, a1: 4.0, a0: 12.0 };
        let roots = quartic_real_roots(&c).unwrap();
        let total: usize = roots.iter().map(|(_, m)| m).sum();
        assert_eq!(total, 4);
        let double = roots.iter().find(|(r, _)| (r - 2.0).abs() < 1e-5).unwrap();
        assert_eq!(double.1, 2);
    }

    #[test]
    fn complex_pair_excluded() {
        // (x^2 + 1)(x - 1)(x + 2) = x^4 + x^3 - x^2 + x - 2
        let c = QuarticCoefficients { a4: 1.0, a3: 1.0, a2: -1.0, a1: 1.0, a0: -2.0 };
        let roots = quartic_real_roots(&c).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 + 2.0).abs() < 1e-10);
        assert!((roots[1].0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_leading_coefficient_rejected() {
        let c = QuarticCoefficients { a4: 0.0, a3: 1.0, a2: 0.0, a1: 0.0, a0: -1.0 };
        assert!(quartic_real_roots(&c).is_err());
    }
}
