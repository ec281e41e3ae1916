mod common;

use std::sync::Arc;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use reachcert::certify::*;
use reachcert::harness::rng::stream_rng;
use reachcert::policy::{rollout, rollout_open_loop, DisturbancePolicy, Policy};
use reachcert::systems::*;
use reachcert::tube::Tube;
use reachcert::value::{discounted_ra_measure, first_reach_stage, ValueField};
use reachcert::{dist, Error};

fn linear1d_greedy() -> (SystemModel, Policy) {
    let m = builtin("linear1d");
    let policy = Policy::greedy(linear1d_reach_avoid_09(), Arc::new(linear1d_lattice(&m)));
    (m, policy)
}

fn di2_greedy() -> (SystemModel, Policy, Arc<ValueField>) {
    let m = builtin("di2");
    let field = di2_field_09();
    let policy = Policy::greedy(field.clone(), Arc::new(di2_lattice(&m)));
    (m, policy, field)
}

fn quad(q: &DMatrix<f64>, lin: &[f64], b: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = b;
    for i in 0..n {
        s += lin[i] * x[i];
        for j in 0..n {
            s += 0.5 * x[i] * q[(i, j)] * x[j];
        }
    }
    s
}

/// Accelerated projected gradient with adaptive restart, as an independent
/// first-order oracle for the ball-constrained quadratic.
fn projected_gradient(q: &DMatrix<f64>, lin: &[f64], b: f64, center: &[f64], radius: f64, iters: usize) -> f64 {
    let n = center.len();
    let lip = q.clone().symmetric_eigen().eigenvalues.max().max(1e-12);
    let project = |y: &mut Vec<f64>| {
        let d = dist(y, center);
        if d > radius {
            for i in 0..n {
                y[i] = center[i] + (y[i] - center[i]) * radius / d;
            }
        }
    };
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| lin[i] + (0..n).map(|j| q[(i, j)] * x[j]).sum::<f64>())
            .collect()
    };
    let mut x = center.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = quad(q, lin, b, &x);
    for _ in 0..iters {
        let g = grad(&y);
        let mut next: Vec<f64> = (0..n).map(|i| y[i] - g[i] / lip).collect();
        project(&mut next);
        let fnext = quad(q, lin, b, &next);
        if fnext > fx {
            // Restart momentum.
            t = 1.0;
            y = x.clone();
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = (0..n).map(|i| next[i] + (t - 1.0) / tn * (next[i] - x[i])).collect();
        x = next;
        fx = fnext;
        t = tn;
    }
    fx
}

fn random_psd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let rank = rng.random_range(0..=n);
    let a = DMatrix::from_fn(rank.max(1), n, |_, _| rng.random_range(-1.5..1.5));
    let q = a.transpose() * a;
    if rank == 0 {
        DMatrix::zeros(n, n)
    } else {
        (&q + q.transpose()) * 0.5
    }
}

#[test]
fn linear_min_matches_sampling_from_below() {
    let mut rng = stream_rng(11, 0);
    let p = [0.7, -1.3, 0.4];
    let (k, center, radius) = (0.2, [0.1, 0.5, -0.3], 0.8);
    let closed = min_linear_over_ball(&p, k, &center, radius);
    let ball = Ball {
        center: center.to_vec(),
        radius,
    };
    let sampled = (0..100_000)
        .map(|_| {
            let x = ball.sample(&mut rng);
            p.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - k
        })
        .fold(f64::INFINITY, f64::min);
    assert!(closed <= sampled);
    assert!(sampled - closed < 0.05, "gap {}", sampled - closed);
}

#[test]
fn quadratic_solver_matches_first_order_oracle() {
    let mut rng = stream_rng(5, 0);
    for case in 0..500 {
        let n = 2 + case % 5;
        let q = random_psd(&mut rng, n);
        let lin: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let radius = rng.random_range(0.0..1.5);
        let m = min_convex_quadratic_over_ball(&q, &lin, b, &center, radius, SECULAR_TOL).unwrap();
        let oracle = projected_gradient(&q, &lin, b, &center, radius, 5000);
        assert!((m.value - oracle).abs() <= 1e-6, "case {case}: {} vs {oracle}", m.value);
        assert!(dist(&m.minimizer, &center) <= radius * (1.0 + 1e-9) + 1e-12);
        assert!((quad(&q, &lin, b, &m.minimizer) - m.value).abs() <= 1e-9 * (1.0 + m.value.abs()));
    }
}

#[test]
fn coupled_offset_uses_the_worst_case_over_the_ball() {
    // ½‖x‖² + b with b_eff = b − 2·max(x₀ + 0.1 over the ball, 0).
    let q = SurrogateQuadratic::new(
        DMatrix::identity(2, 2),
        vec![0.0, 0.0],
        1.0,
        Some(CoupledOffset {
            direction: vec![1.0, 0.0],
            scale: 2.0,
            shift: 0.1,
        }),
    )
    .unwrap();
    let center = [1.0, 0.0];
    let v = min_quadratic_over_ball(&q, &center, 0.5).unwrap();
    // min ½‖x‖² over the ball is ½·0.5² at (0.5, 0); worst offset term 2·(1.5 + 0.1).
    assert!((v - (0.125 + 1.0 - 3.2)).abs() < 1e-9, "{v}");
    // The clamp at zero keeps negative coupling terms from raising the bound.
    let far = min_quadratic_over_ball(&q, &[-3.0, 0.0], 0.5).unwrap();
    assert!((far - (0.5 * 2.5 * 2.5 + 1.0)).abs() < 1e-9);
}

#[test]
fn lipschitz_certificate_by_hand() {
    let m = builtin("linear1d");
    let rep = lipschitz_certificate(&m, &Policy::Constant(vec![0.0]), &[-1.5], 0.1, 1, 0.9).unwrap();
    let l = rep.lipschitz.as_ref().unwrap();
    assert!((l.reward_bounds[0] - 0.4).abs() < 1e-12);
    assert!((l.constraint_bounds[0] - 0.4).abs() < 1e-12);
    assert!(l.certificate >= 0.4 - 1e-12 && l.certified);
    assert!(rep.certified() && rep.socp.is_none());
    assert!(rep.certified_controls.iter().all(|u| m.control_set().contains(u, 0.0)));
}

#[test]
fn zero_tube_collapses_to_the_nominal_measure() {
    let (m, policy) = linear1d_greedy();
    let m = m.with_disturbance_set(BoundedSet::interval(0.0, 0.0)).unwrap();
    let gamma = 0.9;
    for x0 in [-1.7, -0.2, 0.3, 0.45, 1.0] {
        let rep = certify_online(&m, &policy, &[x0], 0.0, 20, gamma, Method::Both).unwrap();
        let traj = rollout(&m, &policy, &DisturbancePolicy::Constant(vec![0.0]), &[x0], 20, 0).unwrap();
        let expected = (0..=20)
            .map(|t| discounted_ra_measure(&traj, t, gamma, &m).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((rep.lipschitz.as_ref().unwrap().certificate - expected).abs() < 1e-12);
        assert!((rep.socp.as_ref().unwrap().certificate - expected).abs() < 1e-12);
        assert!(rep.wall_time_s.is_some());
    }
}

#[test]
fn states_outside_the_ra_set_are_never_certified() {
    let (m, greedy) = linear1d_greedy();
    for policy in [greedy, Policy::Constant(vec![-1.0]), Policy::Constant(vec![1.0])] {
        for t in [1, 10, 60, 200] {
            let rep = certify_online(&m, &policy, &[3.0], 0.05, t, 0.9, Method::Both).unwrap();
            assert!(!rep.certified());
        }
    }
}

#[test]
fn exact_linear_surrogates_reproduce_the_lipschitz_bounds() {
    let (m, policy) = linear1d_greedy();
    for x0 in [-1.9, -1.2, 0.0, 0.4] {
        let tube = Tube::build(&m, &policy, &[x0], 0.05, 30).unwrap();
        let l = lipschitz_bounds(&m, &tube);
        let s = socp_bounds(&m, &tube).unwrap();
        for t in 0..=30 {
            assert!((l.reward[t] - s.reward[t]).abs() <= 1e-9);
            assert!((l.constraint[t] - s.constraint[t]).abs() <= 1e-9);
        }
    }
}

fn ring_constraint_model() -> SystemModel {
    let dynamics = Dynamics::Affine {
        a: DMatrix::identity(2, 2),
        b: DMatrix::identity(2, 2),
        d: DMatrix::identity(2, 2),
        c: vec![0.0, 0.0],
    };
    let bound = 10.0;
    // Gradient norm of ½‖x‖² − 1 is ‖x‖ ≤ √(2(bound + 1)) wherever unclamped.
    let lc = (2.0f64 * (bound + 1.0)).sqrt();
    let constraint = ScalarFn::from_pieces(
        vec![Piece::Quadratic {
            q: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            lin: vec![0.0, 0.0],
            offset: -1.0,
        }],
        bound,
        Some(lc),
        2,
    )
    .unwrap();
    let reward = ScalarFn::from_pieces(
        vec![Piece::Affine {
            coeffs: vec![1.0, 0.0],
            offset: 0.0,
        }],
        bound,
        None,
        2,
    )
    .unwrap();
    SystemModel::builder("ring", dynamics)
        .control_set(BoundedSet::symmetric_box(&[1.0, 1.0]))
        .disturbance_set(BoundedSet::symmetric_box(&[0.1, 0.1]))
        .reward(reward)
        .constraint(constraint)
        .surrogate_target(
            SurrogateTarget::new(
                vec![Halfspace {
                    normal: vec![1.0, 0.0],
                    offset: 0.0,
                }],
                2,
            )
            .unwrap(),
        )
        .surrogate_constraint(
            SurrogateConstraint::new(
                vec![SurrogateQuadratic::new(DMatrix::identity(2, 2), vec![0.0, 0.0], -1.0, None).unwrap()],
                2,
            )
            .unwrap(),
        )
        .build()
        .unwrap()
}

#[test]
fn missing_surrogates_are_reported() {
    let m = builtin("linear1d");
    let custom = SystemModel::builder("bare", m.dynamics().clone())
        .control_set(m.control_set().clone())
        .disturbance_set(m.disturbance_set().clone())
        .reward(m.reward_fn().clone())
        .constraint(m.constraint_fn().clone())
        .build()
        .unwrap();
    let err = socp_certificate(&custom, &Policy::Constant(vec![0.0]), &[-1.5], 0.1, 3, 0.9).unwrap_err();
    assert!(matches!(err, Error::MissingSurrogate(_)));
    assert!(lipschitz_certificate(&custom, &Policy::Constant(vec![0.0]), &[-1.5], 0.1, 3, 0.9).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quadratic_surrogate_is_at_least_as_tight(seed in any::<u64>()) {
        let m = ring_constraint_model();
        let mut rng = stream_rng(seed, 0);
        let stages = 8;
        let states: Vec<Vec<f64>> = (0..=stages)
            .map(|_| vec![rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)])
            .collect();
        let mut radii = vec![rng.random_range(0.0..0.3)];
        for _ in 0..stages {
            let last = *radii.last().unwrap();
            radii.push(last + rng.random_range(0.0..0.2));
        }
        let tube = Tube {
            nominal_states: states,
            nominal_controls: vec![vec![0.0, 0.0]; stages],
            radii,
            eps_x: 0.0,
            eps_d: 0.1,
            horizon: stages,
        };
        let l = lipschitz_bounds(&m, &tube);
        let s = socp_bounds(&m, &tube).unwrap();
        for t in 0..=stages {
            prop_assert!(s.constraint[t] >= l.constraint[t] - 1e-12, "stage {}", t);
            prop_assert!((s.reward[t] - l.reward[t]).abs() <= 1e-9);
        }
    }

    #[test]
    fn certificates_grow_with_the_horizon(seed in any::<u64>()) {
        let (m, policy, _) = di2_greedy();
        let mut rng = stream_rng(seed, 0);
        let center = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in [5, 10, 20, 40] {
            let rep = certify_online(&m, &policy, &center, 0.05, t, 0.9, Method::Both).unwrap();
            let cur = (rep.lipschitz.unwrap().certificate, rep.socp.unwrap().certificate);
            prop_assert!(cur.0 >= last.0 && cur.1 >= last.1);
            last = cur;
        }
    }
}

/// Certificate ≤ sampled grid value over the ball + 3-cell slack.
fn check_lower_bound(m: &SystemModel, policy: &Policy, field: &ValueField, region: &Rect, eps_x: f64, seed: u64) {
    let slack = 3.0 * field.grid().cell_diagonal() * m.reward_lipschitz().max(m.constraint_lipschitz());
    let mut rng = stream_rng(seed, 0);
    for _ in 0..200 {
        let center = region.sample(&mut rng);
        let rep = certify_online(m, policy, &center, eps_x, 30, field.gamma(), Method::Both).unwrap();
        let ball = Ball {
            center: center.clone(),
            radius: eps_x,
        };
        let sampled = (0..100)
            .map(|_| field.interpolate(&ball.sample(&mut rng)))
            .fold(f64::INFINITY, f64::min);
        for cert in [rep.lipschitz.unwrap().certificate, rep.socp.unwrap().certificate] {
            assert!(
                cert <= sampled + slack,
                "center {center:?}: {cert} > {sampled} + {slack}"
            );
        }
    }
}

#[test]
fn certificates_lower_bound_the_grid_value() {
    let (m, policy) = linear1d_greedy();
    check_lower_bound(
        &m,
        &policy,
        &linear1d_reach_avoid_09(),
        &Rect::new(vec![-3.0], vec![1.5]).unwrap(),
        0.1,
        1,
    );
    let (m, policy, field) = di2_greedy();
    check_lower_bound(
        &m,
        &policy,
        &field,
        &Rect::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
        0.05,
        2,
    );
}

#[test]
fn offline_linear1d_set_lies_inside_the_ra_set() {
    let (m, policy) = linear1d_greedy();
    let field = linear1d_reach_avoid_09();
    let region = Rect::new(vec![-1.8], vec![0.2]).unwrap();
    let set = certify_offline(
        &m,
        &policy,
        &region,
        0.05,
        60,
        0.9,
        Method::Both,
        DEFAULT_LATTICE_BUDGET,
    )
    .unwrap();
    assert!(!set.is_empty());
    let mut rng = stream_rng(3, 0);
    for member in &set.members {
        assert!(member.best_certificate() > 0.0);
        assert!(member.center[0] - 0.05 > -2.0 && member.center[0] + 0.05 < 0.5);
        let ball = Ball {
            center: member.center.clone(),
            radius: 0.05,
        };
        for _ in 0..100 {
            assert!(field.interpolate(&ball.sample(&mut rng)) > 0.0);
        }
    }
}

#[test]
fn both_is_the_union_of_single_methods() {
    let (m, policy, _) = di2_greedy();
    let region = Rect::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let run = |method| certify_offline(&m, &policy, &region, 0.05, 30, 0.9, method, DEFAULT_LATTICE_BUDGET).unwrap();
    let (both, lip, socp) = (run(Method::Both), run(Method::Lipschitz), run(Method::Socp));
    let centers = |s: &CertifiedSet| s.members.iter().map(|m| m.center.clone()).collect::<Vec<_>>();
    let mut union: Vec<Vec<f64>> = centers(&lip);
    for c in centers(&socp) {
        if !union.contains(&c) {
            union.push(c);
        }
    }
    union.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut got = centers(&both);
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, union);
    assert_eq!(
        both.restricted_to(Method::Lipschitz).members,
        lip.members
            .iter()
            .map(|m| {
                let mut m = m.clone();
                m.socp_certificate = both
                    .members
                    .iter()
                    .find(|b| b.center == m.center)
                    .unwrap()
                    .socp_certificate;
                m
            })
            .collect::<Vec<_>>()
    );
}

#[test]
fn certified_replays_never_fail() {
    let (m, policy, field) = di2_greedy();
    let region = Rect::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let set = certify_offline(
        &m,
        &policy,
        &region,
        0.05,
        30,
        0.9,
        Method::Both,
        DEFAULT_LATTICE_BUDGET,
    )
    .unwrap();
    assert!(set.len() > 10);
    let adversary = DisturbancePolicy::GridWorstCase {
        field: field.clone(),
        lattice: Arc::new(di2_lattice(&m)),
    };
    // A spread of members; the acceptance suite replays every member.
    for member in set.members.iter().step_by(set.len() / 8) {
        let ball = Ball {
            center: member.center.clone(),
            radius: set.eps_x,
        };
        let mut rng = stream_rng(9, 0);
        for _ in 0..20 {
            let x0 = ball.sample(&mut rng);
            for seed in 0..50 {
                let t =
                    rollout_open_loop(&m, &member.certified_controls, &DisturbancePolicy::Sampler, &x0, seed).unwrap();
                assert!(first_reach_stage(&t, &m).is_some());
            }
            let t = rollout_open_loop(&m, &member.certified_controls, &adversary, &x0, 0).unwrap();
            assert!(first_reach_stage(&t, &m).is_some());
        }
    }
}

#[test]
fn single_point_region_certifies_one_center() {
    let (m, policy) = linear1d_greedy();
    let region = Rect::new(vec![-1.5], vec![-1.5]).unwrap();
    let set = certify_offline(&m, &policy, &region, 0.05, 5, 0.9, Method::Lipschitz, 10).unwrap();
    assert_eq!(set.lattice.len(), 1);
    assert_eq!(set.members.len(), 1);
    assert!(matches!(
        certify_offline(
            &m,
            &policy,
            &Rect::new(vec![-4.0], vec![4.0]).unwrap(),
            0.001,
            5,
            0.9,
            Method::Lipschitz,
            10
        ),
        Err(Error::LatticeBudget { .. })
    ));
}

#[test]
fn reports_and_sets_serialize() {
    let (m, policy) = linear1d_greedy();
    let rep = certify_online(&m, &policy, &[-0.5], 0.05, 30, 0.9, Method::Both).unwrap();
    let back: CertReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    assert_eq!(back, rep);

    let region = Rect::new(vec![-1.8], vec![0.2]).unwrap();
    let set = certify_offline(
        &m,
        &policy,
        &region,
        0.05,
        30,
        0.9,
        Method::Both,
        DEFAULT_LATTICE_BUDGET,
    )
    .unwrap();
    assert_eq!(CertifiedSet::from_json(&set.to_json().unwrap()).unwrap(), set);
    let mut csv = Vec::new();
    set.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("x0,lipschitz,socp\n"));
    assert_eq!(text.lines().count(), set.len() + 1);
}
