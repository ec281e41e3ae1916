//! Deterministic certificates that every state in a ball reaches the target
//! safely under every admissible disturbance, using the nominal open-loop
//! controls.
//!
//! Both certificates bound the reward and constraint from below over the
//! tube balls `ball(x̄_t, Δx_t)` and compose the bounds with the discounted
//! max-min rule. The Lipschitz bound subtracts `L·Δx_t` from the nominal
//! value; the surrogate bound minimizes halfspace and convex-quadratic
//! descriptions of the target and constraint sets exactly over each ball.

mod bounds;
mod report;
mod solver;

use std::time::Instant;

use rayon::prelude::*;

pub use bounds::{compose, lipschitz_bounds, min_quadratic_over_ball, socp_bounds, StageBounds};
pub use report::{CertReport, CertifiedMember, CertifiedSet, CoverageLattice, Method, MethodResult};
pub use solver::{
    max_linear_over_ball, min_convex_quadratic_over_ball, min_linear_over_ball, BallMinimum, SECULAR_MAX_ITER,
    SECULAR_TOL,
};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::systems::{Rect, SystemModel};
use crate::tube::Tube;
use crate::value::check_gamma;

/// Default cap on the number of centers examined by [`certify_offline`].
pub const DEFAULT_LATTICE_BUDGET: usize = 1_000_000;

fn method_result(bounds: StageBounds, gamma: f64) -> Result<MethodResult> {
    let certificate = compose(&bounds.reward, &bounds.constraint, gamma)?;
    Ok(MethodResult {
        reward_bounds: bounds.reward,
        constraint_bounds: bounds.constraint,
        certificate,
        certified: certificate > 0.0,
        solver_failures: bounds.solver_failures,
    })
}

/// Certify `ball(tube.x̄₀, tube.ε_x)` against an already built tube.
pub fn certify_tube(model: &SystemModel, tube: &Tube, gamma: f64, method: Method) -> Result<CertReport> {
    check_gamma(gamma)?;
    let lipschitz = if method.uses_lipschitz() {
        Some(method_result(lipschitz_bounds(model, tube), gamma)?)
    } else {
        None
    };
    let socp = if method.uses_socp() {
        Some(method_result(socp_bounds(model, tube)?, gamma)?)
    } else {
        None
    };
    Ok(CertReport {
        center: tube.nominal_states[0].clone(),
        eps_x: tube.eps_x,
        horizon: tube.horizon,
        gamma,
        method,
        lipschitz,
        socp,
        certified_controls: tube.nominal_controls.clone(),
        tube: tube.clone(),
        wall_time_s: None,
    })
}

fn certify(
    model: &SystemModel,
    policy: &Policy,
    center: &[f64],
    eps_x: f64,
    horizon: usize,
    gamma: f64,
    method: Method,
) -> Result<CertReport> {
    check_gamma(gamma)?;
    let tube = Tube::build(model, policy, center, eps_x, horizon)?;
    certify_tube(model, &tube, gamma, method)
}

/// Lipschitz certificate for `ball(center, eps_x)` over `horizon` stages.
pub fn lipschitz_certificate(
    model: &SystemModel,
    policy: &Policy,
    center: &[f64],
    eps_x: f64,
    horizon: usize,
    gamma: f64,
) -> Result<CertReport> {
    certify(model, policy, center, eps_x, horizon, gamma, Method::Lipschitz)
}

/// Surrogate (ball-constrained cone subproblem) certificate.
pub fn socp_certificate(
    model: &SystemModel,
    policy: &Policy,
    center: &[f64],
    eps_x: f64,
    horizon: usize,
    gamma: f64,
) -> Result<CertReport> {
    certify(model, policy, center, eps_x, horizon, gamma, Method::Socp)
}

/// Certify a single ball at run time, recording the wall time.
pub fn certify_online(
    model: &SystemModel,
    policy: &Policy,
    center: &[f64],
    eps_x: f64,
    horizon: usize,
    gamma: f64,
    method: Method,
) -> Result<CertReport> {
    let start = Instant::now();
    let mut report = certify(model, policy, center, eps_x, horizon, gamma, method)?;
    report.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// Lattice of centers spaced at most `2ε_x/√n` apart per axis, so that every
/// lattice cell's circumradius is at most `ε_x` and the balls cover `region`.
pub fn coverage_lattice(region: &Rect, eps_x: f64, budget: usize) -> Result<CoverageLattice> {
    region.validate()?;
    if !(eps_x >= 0.0 && eps_x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be nonnegative, got {eps_x}"
        )));
    }
    let n = region.dim();
    let h = 2.0 * eps_x / (n as f64).sqrt();
    let mut points_per_axis = Vec::with_capacity(n);
    let mut spacing = Vec::with_capacity(n);
    let mut required: u128 = 1;
    for (lo, hi) in region.lo.iter().zip(&region.hi) {
        let width = hi - lo;
        let points = if width == 0.0 {
            1
        } else if h == 0.0 {
            usize::MAX
        } else {
            let cells = (width / h * (1.0 - 1e-12)).ceil().max(1.0);
            if cells >= usize::MAX as f64 {
                usize::MAX
            } else {
                cells as usize + 1
            }
        };
        required = required.saturating_mul(points as u128);
        points_per_axis.push(points);
        spacing.push(if points > 1 { width / (points - 1) as f64 } else { 0.0 });
    }
    if required > budget as u128 {
        return Err(Error::LatticeBudget {
            required: required.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    Ok(CoverageLattice {
        region: region.clone(),
        points_per_axis,
        spacing,
    })
}

fn lattice_centers(lattice: &CoverageLattice) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lattice
        .points_per_axis
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (lo, hi) = (lattice.region.lo[i], lattice.region.hi[i]);
            (0..p)
                .map(|k| {
                    if k + 1 == p && p > 1 {
                        hi
                    } else {
                        lo + k as f64 * lattice.spacing[i]
                    }
                })
                .collect()
        })
        .collect();
    crate::systems::cartesian(&axes)
}

/// Cover `region` with balls of radius `eps_x`, certify each center, and
/// return the certified ones. Centers are processed in parallel; the result
/// is ordered by lattice index.
#[allow(clippy::too_many_arguments)]
pub fn certify_offline(
    model: &SystemModel,
    policy: &Policy,
    region: &Rect,
    eps_x: f64,
    horizon: usize,
    gamma: f64,
    method: Method,
    budget: usize,
) -> Result<CertifiedSet> {
    check_gamma(gamma)?;
    if region.dim() != model.state_dim() {
        return Err(Error::Dimension {
            what: "certification region",
            expected: model.state_dim(),
            got: region.dim(),
        });
    }
    let lattice = coverage_lattice(region, eps_x, budget)?;
    let centers = lattice_centers(&lattice);
    let results: Vec<Option<CertifiedMember>> = centers
        .par_iter()
        .map(|center| {
            let report = certify(model, policy, center, eps_x, horizon, gamma, method)?;
            if !report.certified() {
                return Ok(None);
            }
            let finite = |m: &Option<MethodResult>| m.as_ref().map(|m| m.certificate).filter(|v| v.is_finite());
            Ok(Some(CertifiedMember {
                center: center.clone(),
                lipschitz_certificate: finite(&report.lipschitz),
                socp_certificate: finite(&report.socp),
                certified_controls: report.certified_controls,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(CertifiedSet {
        method,
        eps_x,
        horizon,
        gamma,
        lattice,
        members: results.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_region_has_one_center() {
        let region = Rect::new(vec![0.3, -0.2], vec![0.3, -0.2]).unwrap();
        let lattice = coverage_lattice(&region, 0.05, 10).unwrap();
        assert_eq!(lattice_centers(&lattice), vec![vec![0.3, -0.2]]);
    }

    #[test]
    fn lattice_cells_are_covered() {
        let region = Rect::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let eps = 0.1;
        let lattice = coverage_lattice(&region, eps, 10_000).unwrap();
        let half_diag = lattice.spacing.iter().map(|s| (s / 2.0).powi(2)).sum::<f64>().sqrt();
        assert!(half_diag <= eps * (1.0 + 1e-12));
    }

    #[test]
    fn lattice_budget_reports_requirement() {
        let region = Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        match coverage_lattice(&region, 0.001, 100) {
            Err(Error::LatticeBudget { required, budget }) => {
                assert!(required > budget);
                assert_eq!(budget, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
