use std::collections::BTreeMap;

use proptest::prelude::*;
use reachcert::harness::rng::stream_rng;
use reachcert::systems::*;
use reachcert::{dist, Error};

fn builtin(name: &str) -> SystemModel {
    builtin_system(name, &BTreeMap::new(), Mode::ReachAvoid).unwrap()
}

#[test]
fn linear1d_steps_by_hand() {
    let m = builtin("linear1d");
    assert_eq!(m.step(&[0.0], &[0.0], &[0.0]).unwrap(), vec![0.0]);
    let x = m.step(&[1.0], &[1.0], &[0.5]).unwrap()[0];
    assert!((x - 1.025).abs() < 1e-15);
}

#[test]
fn di2_drifts_with_velocity() {
    let m = builtin("di2");
    let x = m.step(&[0.0, 1.0], &[0.0], &[0.0]).unwrap();
    assert!((x[0] - 0.1).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
}

#[test]
fn step_rejects_instead_of_clamping() {
    let m = builtin("linear1d");
    assert!(matches!(
        m.step(&[0.0], &[1.5], &[0.0]),
        Err(Error::OutsideSet { what: "control", .. })
    ));
    assert!(matches!(
        m.step(&[0.0], &[0.0], &[-0.6]),
        Err(Error::OutsideSet {
            what: "disturbance",
            ..
        })
    ));
    assert!(matches!(
        m.step(&[0.0, 1.0], &[0.0], &[0.0]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn linear1d_reward_and_constraint_values() {
    let m = builtin("linear1d");
    assert_eq!(m.reward(&[-1.5]), 0.5);
    assert_eq!(m.constraint(&[-2.0]), 0.0);
    assert_eq!(m.reward(&[-40.0]), 10.0);
    assert_eq!(m.constraint(&[-40.0]), -10.0);
}

#[test]
fn linear1d_sets_and_constants() {
    let m = builtin("linear1d");
    assert_eq!(m.control_set(), &BoundedSet::interval(-1.0, 1.0));
    assert_eq!(m.disturbance_set(), &BoundedSet::interval(-0.5, 0.5));
    assert_eq!(m.disturbance_bound(), 0.5);
    assert!((m.lipschitz_state() - 1.01).abs() < 1e-12);
    assert!((m.lipschitz_disturbance() - 0.01).abs() < 1e-12);
    assert_eq!(m.reward_lipschitz(), 1.0);
    assert_eq!(m.constraint_lipschitz(), 1.0);
}

#[test]
fn di2_state_constant_is_transition_operator_norm() {
    // For a 2×2 matrix, σ_max² = (‖A‖_F² + sqrt(‖A‖_F⁴ − 4 det²)) / 2.
    let (fro2, det): (f64, f64) = (1.0 + 0.01 + 1.0, 1.0);
    let expected = ((fro2 + (fro2 * fro2 - 4.0 * det * det).sqrt()) / 2.0).sqrt();
    let m = builtin("di2");
    assert!((m.lipschitz_state() - expected).abs() < 1e-12);
    assert!((m.lipschitz_state() - 1.0512).abs() < 1e-4);
}

#[test]
fn mode_overrides() {
    let base = builtin("linear1d");
    let via = base.with_mode(Mode::Viability);
    let reach = base.with_mode(Mode::Reach);
    for x in [-5.0, -1.5, 0.0, 0.3, 7.0] {
        assert_eq!(via.reward(&[x]), -1.0);
        assert_eq!(via.constraint(&[x]), base.constraint(&[x]));
        assert_eq!(reach.constraint(&[x]), 1.0);
        assert_eq!(reach.reward(&[x]), base.reward(&[x]));
    }
    assert_eq!(
        via.step(&[0.3], &[0.2], &[0.1]).unwrap(),
        base.step(&[0.3], &[0.2], &[0.1]).unwrap()
    );
}

#[test]
fn unknown_systems_and_parameters_are_rejected() {
    assert!(matches!(
        builtin_system("quadrotor", &BTreeMap::new(), Mode::ReachAvoid),
        Err(Error::UnknownSystem(_))
    ));
    let mut params = BTreeMap::new();
    params.insert("warp".to_string(), 1.0);
    assert!(builtin_system("di2", &params, Mode::ReachAvoid).is_err());
    params.clear();
    params.insert("dt".to_string(), -0.1);
    assert!(builtin_system("di2", &params, Mode::ReachAvoid).is_err());
}

#[test]
fn custom_system_from_json() {
    let spec: SystemSpec = serde_json::from_str(
        r#"{
            "custom": {
                "name": "scalar",
                "a": [[1.01]], "b": [[0.01]], "d": [[0.01]],
                "control_set": {"kind": "box", "lo": [-1.0], "hi": [1.0]},
                "disturbance_set": {"kind": "box", "lo": [-0.5], "hi": [0.5]},
                "reward": {"pieces": [{"kind": "affine", "coeffs": [-1.0], "offset": -1.0}]},
                "constraint": {"pieces": [{"kind": "affine", "coeffs": [1.0], "offset": 2.0}]},
                "surrogate_target": [{"normal": [-1.0], "offset": 1.0}]
            },
            "mode": "viability"
        }"#,
    )
    .unwrap();
    let m = spec.build().unwrap();
    assert_eq!(m.name(), "scalar");
    assert_eq!(m.mode(), Mode::Viability);
    assert_eq!(m.reward(&[-1.5]), -1.0);
    assert!((m.step(&[1.0], &[1.0], &[0.5]).unwrap()[0] - 1.025).abs() < 1e-15);
    assert!(m.surrogate_target().is_some() && m.surrogate_constraint().is_none());
}

#[test]
fn spec_needs_exactly_one_source() {
    assert!(SystemSpec::default().build().is_err());
    assert!(serde_json::from_str::<SystemSpec>(r#"{"name": "di2", "extra": 1}"#).is_err());
}

#[test]
fn non_psd_surrogate_is_rejected() {
    let q = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
    assert!(matches!(
        SurrogateQuadratic::new(q, vec![0.0; 2], 0.0, None),
        Err(Error::NotPsd(_))
    ));
}

fn region(m: &SystemModel) -> Rect {
    let n = m.state_dim();
    match m.name() {
        "linear1d" => Rect::new(vec![-30.0], vec![30.0]).unwrap(),
        "unicycle" => Rect::new(vec![-1.5, -1.5, -4.0], vec![1.5, 1.5, 4.0]).unwrap(),
        _ => Rect::new(vec![-1.5; n], vec![1.5; n]).unwrap(),
    }
}

fn all_models() -> Vec<SystemModel> {
    BUILTIN_NAMES.iter().map(|n| builtin(n)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dynamics_lipschitz_constants_hold(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        for m in all_models() {
            let r = region(&m);
            let (x, y) = (r.sample(&mut rng), r.sample(&mut rng));
            let u = m.control_set().sample(&mut rng);
            let (d, e) = (m.disturbance_set().sample(&mut rng), m.disturbance_set().sample(&mut rng));
            let fx = m.step(&x, &u, &d).unwrap();
            prop_assert!(dist(&fx, &m.step(&y, &u, &d).unwrap()) <= m.lipschitz_state() * dist(&x, &y) + 1e-9);
            prop_assert!(dist(&fx, &m.step(&x, &u, &e).unwrap()) <= m.lipschitz_disturbance() * dist(&d, &e) + 1e-9);
        }
    }

    #[test]
    fn reward_and_constraint_are_bounded_and_lipschitz(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        for m in all_models() {
            let r = region(&m);
            let (x, y) = (r.sample(&mut rng), r.sample(&mut rng));
            prop_assert!(m.reward(&x).abs() <= m.reward_bound());
            prop_assert!(m.constraint(&x).abs() <= m.constraint_bound());
            let dxy = dist(&x, &y);
            prop_assert!((m.reward(&x) - m.reward(&y)).abs() <= m.reward_lipschitz() * dxy + 1e-9);
            prop_assert!((m.constraint(&x) - m.constraint(&y)).abs() <= m.constraint_lipschitz() * dxy + 1e-9);
        }
    }

    #[test]
    fn surrogates_describe_subsets(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        for m in all_models() {
            let x = region(&m).sample(&mut rng);
            if m.surrogate_target().unwrap().eval(&x) > 0.0 {
                prop_assert!(m.reward(&x) > 0.0);
            }
            if m.surrogate_constraint().unwrap().eval(&x) > 0.0 {
                prop_assert!(m.constraint(&x) > 0.0);
            }
        }
    }

    #[test]
    fn overrides_are_exact(x in -50.0f64..50.0) {
        let m = builtin("linear1d");
        prop_assert_eq!(m.with_mode(Mode::Viability).reward(&[x]), -1.0);
        prop_assert_eq!(m.with_mode(Mode::Reach).constraint(&[x]), 1.0);
    }
}
