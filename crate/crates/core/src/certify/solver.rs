//! Ball-constrained minimization of linear and convex quadratic functions.
//!
//! The quadratic case is the convex trust-region subproblem. After shifting
//! to ball coordinates `y = x - center` and rotating into the eigenbasis of
//! `Q`, the minimizer is either the unconstrained stationary point (when it
//! lies in the ball) or `y(μ) = -(Λ + μI)⁻¹ g̃` with the boundary multiplier
//! `μ > 0` solving the secular equation `1/ρ - 1/‖y(μ)‖ = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::systems::psd_eigen;

pub const SECULAR_TOL: f64 = 1e-10;
pub const SECULAR_MAX_ITER: usize = 200;

/// `min_{‖x - center‖ <= radius} P·x - k = P·center - k - ‖P‖ radius`.
pub fn min_linear_over_ball(p: &[f64], k: f64, center: &[f64], radius: f64) -> f64 {
    dot(p, center) - k - norm(p) * radius
}

/// `max_{‖x - center‖ <= radius} P·x + shift`.
pub fn max_linear_over_ball(p: &[f64], shift: f64, center: &[f64], radius: f64) -> f64 {
    dot(p, center) + shift + norm(p) * radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallMinimum {
    pub value: f64,
    pub minimizer: Vec<f64>,
    /// Boundary multiplier; zero for interior solutions.
    pub multiplier: f64,
    pub iterations: usize,
}

/// Global minimum of `½ xᵀQx + q·x + b` over `‖x - center‖ <= radius`.
pub fn min_convex_quadratic_over_ball(
    q: &DMatrix<f64>,
    lin: &[f64],
    b: f64,
    center: &[f64],
    radius: f64,
    tol: f64,
) -> Result<BallMinimum> {
    let (values, vectors) = psd_eigen(q)?;
    solve_in_eigenbasis(q, &values, &vectors, lin, b, center, radius, tol)
}

fn quad_value(q: &DMatrix<f64>, lin: &[f64], b: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += q[(i, j)] * x[j];
        }
        quad += x[i] * row;
    }
    0.5 * quad + dot(lin, x) + b
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_in_eigenbasis(
    q: &DMatrix<f64>,
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<f64>,
    lin: &[f64],
    b: f64,
    center: &[f64],
    radius: f64,
    tol: f64,
) -> Result<BallMinimum> {
    let n = lin.len();
    if center.len() != n {
        return Err(Error::Dimension {
            what: "ball center",
            expected: n,
            got: center.len(),
        });
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be nonnegative, got {radius}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    let f_center = quad_value(q, lin, b, center);
    if radius == 0.0 {
        return Ok(BallMinimum {
            value: f_center,
            minimizer: center.to_vec(),
            multiplier: 0.0,
            iterations: 0,
        });
    }

    // Gradient at the center, rotated into the eigenbasis.
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)] * center[j]).sum::<f64>() + lin[i])
        .collect();
    let g: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| eigenvectors[(i, k)] * grad[i]).sum())
        .collect();
    let lam_max = eigenvalues.iter().copied().fold(0.0, f64::max);
    let zero_eig = 1e-12 * lam_max.max(1.0);
    let g_norm = norm(&g);
    let zero_grad = 1e-14 * g_norm.max(1.0);

    let finish = |y: Vec<f64>, multiplier: f64, iterations: usize| {
        let value = f_center
            + y.iter()
                .zip(eigenvalues)
                .zip(&g)
                .map(|((yi, li), gi)| 0.5 * li * yi * yi + gi * yi)
                .sum::<f64>();
        let minimizer = (0..n)
            .map(|i| center[i] + (0..n).map(|k| eigenvectors[(i, k)] * y[k]).sum::<f64>())
            .collect();
        BallMinimum {
            value,
            minimizer,
            multiplier,
            iterations,
        }
    };

    let null_gradient = eigenvalues
        .iter()
        .zip(&g)
        .any(|(l, gi)| *l <= zero_eig && gi.abs() > zero_grad);
    if !null_gradient {
        let y: Vec<f64> = eigenvalues
            .iter()
            .zip(&g)
            .map(|(l, gi)| if *l > zero_eig { -gi / l } else { 0.0 })
            .collect();
        if norm(&y) <= radius {
            return Ok(finish(y, 0.0, 0));
        }
    }

    // Boundary solution: root of ψ(μ) = 1/ρ - 1/‖y(μ)‖, decreasing in μ,
    // bracketed by (0, ‖g‖/ρ].
    let step_norm = |mu: f64| {
        eigenvalues
            .iter()
            .zip(&g)
            .map(|(l, gi)| (gi / (l + mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut lo = 0.0_f64;
    let mut hi = g_norm / radius;
    let mut mu = 0.5 * hi;
    for it in 1..=SECULAR_MAX_ITER {
        let s = step_norm(mu);
        let psi = 1.0 / radius - 1.0 / s;
        if (s - radius).abs() <= tol * radius || hi - lo <= tol * mu.max(f64::MIN_POSITIVE) {
            let y = eigenvalues.iter().zip(&g).map(|(l, gi)| -gi / (l + mu)).collect();
            return Ok(finish(y, mu, it));
        }
        if psi > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let dsum: f64 = eigenvalues
            .iter()
            .zip(&g)
            .map(|(l, gi)| gi * gi / (l + mu).powi(3))
            .sum();
        let dpsi = -dsum / s.powi(3);
        let newton = mu - psi / dpsi;
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let s = step_norm(mu);
    Err(Error::SolverFailure {
        iterations: SECULAR_MAX_ITER,
        residual: (s - radius).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_closed_form() {
        assert_eq!(min_linear_over_ball(&[1.0, 0.0], 0.0, &[2.0, 0.0], 1.0), 1.0);
        assert_eq!(min_linear_over_ball(&[3.0, -1.0], 2.0, &[1.0, 1.0], 0.0), 0.0);
    }

    #[test]
    fn closest_point_to_origin() {
        let q = DMatrix::identity(2, 2);
        let m = min_convex_quadratic_over_ball(&q, &[0.0, 0.0], 0.0, &[3.0, 0.0], 1.0, SECULAR_TOL).unwrap();
        assert!((m.value - 2.0).abs() < 1e-9);
        assert!((m.minimizer[0] - 2.0).abs() < 1e-9 && m.minimizer[1].abs() < 1e-9);
        assert!(m.multiplier > 0.0);
    }

    #[test]
    fn interior_minimizer() {
        let q = DMatrix::identity(2, 2);
        let m = min_convex_quadratic_over_ball(&q, &[0.0, 0.0], -1.0, &[0.5, 0.0], 1.0, SECULAR_TOL).unwrap();
        assert_eq!(m.value, -1.0);
        assert_eq!(m.multiplier, 0.0);
    }

    #[test]
    fn zero_matrix_reduces_to_linear() {
        let q = DMatrix::zeros(3, 3);
        let p = [1.0, -2.0, 0.5];
        let c = [0.3, 0.1, -0.7];
        let m = min_convex_quadratic_over_ball(&q, &p, 0.4, &c, 0.8, SECULAR_TOL).unwrap();
        let expected = min_linear_over_ball(&p, -0.4, &c, 0.8);
        assert!((m.value - expected).abs() < 1e-9, "{} vs {expected}", m.value);
    }

    #[test]
    fn non_psd_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            min_convex_quadratic_over_ball(&q, &[0.0, 0.0], 0.0, &[0.0, 0.0], 1.0, SECULAR_TOL),
            Err(Error::NotPsd(_))
        ));
    }
}
