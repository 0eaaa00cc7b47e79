//! Gauss-Jacobi quadrature for weakly singular kernels.
//!
//! A rule of degree `n` integrates `(1-x)^alpha (1+x)^beta f(x)` on `[-1, 1]`
//! exactly for polynomial `f` up to degree `2n-1`, which gives spectral
//! accuracy for analytic integrands with endpoint singularities of the
//! covered form. Nodes and weights come from the Golub-Welsch algorithm on
//! the symmetric Jacobi matrix of the three-term recurrence.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::special::gamma;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature degree must be at least 2, got {0}")]
    Degree(usize),
    #[error("Jacobi exponent must be finite and > -1, got alpha={0}, beta={1}")]
    Exponent(f64, f64),
}

/// Gauss-Jacobi rule with weight `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl GaussJacobi {
    pub fn new(deg: usize, alpha: f64, beta: f64) -> Result<GaussJacobi, QuadError> {
        if deg < 2 {
            return Err(QuadError::Degree(deg));
        }
        if !(alpha.is_finite() && beta.is_finite() && alpha > -1.0 && beta > -1.0) {
            return Err(QuadError::Exponent(alpha, beta));
        }

        let mut jacobi = DMatrix::<f64>::zeros(deg, deg);
        let mut diag = (beta - alpha) / (2.0 + beta + alpha);
        for k in 0..deg - 1 {
            let kp1 = k as f64 + 1.0;
            let denom = 2.0 * kp1 + alpha + beta;
            let off = 2.0 / denom
                * (kp1 * (kp1 + alpha) * (kp1 + beta) * (kp1 + alpha + beta)
                    / ((denom + 1.0) * (denom - 1.0)))
                    .sqrt();
            jacobi[(k, k)] = diag;
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
            diag = (beta * beta - alpha * alpha) / (denom * (denom + 2.0));
        }
        jacobi[(deg - 1, deg - 1)] = diag;

        let eigen = jacobi.symmetric_eigen();
        // mu_0 = 2^(a+b+1) Γ(a+1) Γ(b+1) / Γ(a+b+2)
        let mu0 = 2.0_f64.powf(alpha + beta + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0)
            / gamma(alpha + beta + 2.0);

        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .copied()
            .zip(eigen.eigenvectors.row(0).iter().map(|v| v * v * mu0))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        Ok(GaussJacobi {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            alpha,
            beta,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Approximates `∫_a^b (b-x)^alpha (x-a)^beta f(x) dx`.
    ///
    /// The singular factors are part of the weight; `f` is evaluated at
    /// interior nodes only.
    pub fn integrate<E>(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<f64, E> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x)?;
        }
        // Jacobian of the affine map, including the weight scaling:
        // (b-x)^alpha (x-a)^beta dx = half^(alpha+beta+1) (1-t)^alpha (1+t)^beta dt
        Ok(sum * half.powf(self.alpha + self.beta + 1.0))
    }
}
