//! Subcommand implementations. Each returns the run status; errors are
//! classified into exit codes by the caller.

use std::sync::Arc;

use anyhow::{bail, ensure, Context};
use serde::Serialize;

use reachcert::certify::{certify_offline, certify_online, CertifiedSet};
use reachcert::harness::{gamma_sweep, latency_histogram, success_rate, InitialSampler, SamplerKind, SweepSettings};
use reachcert::policy::{write_policy_csv, DisturbancePolicy, Policy};
use reachcert::systems::{Mode, SystemModel};
use reachcert::value::io::{load_field, write_field, write_field_csv};
use reachcert::value::{value_iteration, ActionLattice, Grid, Interval, IterationOptions, ValueField};

use crate::config::{DisturbanceChoice, PolicyChoice, RunConfig};
use crate::output::Artifacts;

/// Successful outcomes, ordered by exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotCertified,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NotCertified => 1,
            Status::NotConverged => 3,
        }
    }

    fn worst(self, other: Status) -> Status {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

fn model(config: &RunConfig) -> anyhow::Result<SystemModel> {
    Ok(config.system.build()?)
}

fn grid(config: &RunConfig) -> anyhow::Result<Grid> {
    let axes = config
        .grid
        .clone()
        .context("config needs a `grid` to solve a value field")?;
    Ok(Grid::new(axes)?)
}

fn lattice(config: &RunConfig, model: &SystemModel) -> anyhow::Result<ActionLattice> {
    let l = config.lattice;
    ensure!(
        l.control_points >= 1 && l.disturbance_points >= 1,
        "lattice point counts must be at least 1"
    );
    Ok(ActionLattice::uniform(model, l.control_points, l.disturbance_points))
}

fn solve_field(config: &RunConfig, model: &SystemModel, lattice: &ActionLattice) -> anyhow::Result<ValueField> {
    let mut options = IterationOptions::new(config.require_gamma()?).tol(config.tol);
    options.max_iter = config.max_iter;
    Ok(value_iteration(model, &grid(config)?, lattice, &options)?)
}

/// The loaded field if the config names one, otherwise a freshly solved one.
fn obtain_field(config: &RunConfig, model: &SystemModel, lattice: &ActionLattice) -> anyhow::Result<ValueField> {
    let Some(path) = &config.field else {
        return solve_field(config, model, lattice);
    };
    let field = load_field(path).with_context(|| format!("cannot load field {}", path.display()))?;
    ensure!(
        field.grid().dim() == model.state_dim(),
        "field has {} dimensions but the system has {}",
        field.grid().dim(),
        model.state_dim()
    );
    if let Some(g) = config.gamma {
        ensure!(
            g == field.gamma(),
            "config gamma {g} differs from the field's {}",
            field.gamma()
        );
    }
    Ok(field)
}

fn convergence_status(field: &ValueField) -> Status {
    if field.stats().converged {
        Status::Success
    } else {
        let s = field.stats();
        eprintln!(
            "warning: value iteration stopped after {} iterations without converging (residual {:e})",
            s.iterations, s.residual
        );
        Status::NotConverged
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    system: &'a str,
    mode: Mode,
    gamma: f64,
    converged: bool,
    iterations: usize,
    residual: f64,
    nodes: usize,
    super_zero_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    super_zero_intervals: Option<Vec<Interval>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel_intervals: Option<Vec<Interval>>,
}

fn print_intervals(label: &str, intervals: &[Interval]) {
    if intervals.is_empty() {
        println!("{label}: empty");
    }
    for iv in intervals {
        println!("{label}: ({:.4}, {:.4})", iv.lo, iv.hi);
    }
}

pub fn solve(config: &RunConfig, out: &mut Artifacts) -> anyhow::Result<Status> {
    let model = model(config)?;
    let lattice = lattice(config, &model)?;
    let field = solve_field(config, &model, &lattice)?;
    let stats = field.stats();

    out.write_with("field.bin", |buf| Ok(write_field(&field, buf)?))?;
    out.write_with("field.csv", |buf| Ok(write_field_csv(&field, buf)?))?;
    let policy = Policy::greedy(Arc::new(field.clone()), Arc::new(lattice));
    out.write_with("policy.csv", |buf| {
        Ok(write_policy_csv(&policy, &model, field.grid(), buf)?)
    })?;

    let one_dim = field.grid().dim() == 1;
    let summary = SolveSummary {
        system: model.name(),
        mode: model.mode(),
        gamma: field.gamma(),
        converged: stats.converged,
        iterations: stats.iterations,
        residual: stats.residual,
        nodes: field.grid().len(),
        super_zero_nodes: field.super_zero_mask().iter().filter(|&&b| b).count(),
        super_zero_intervals: if one_dim {
            Some(field.super_zero_intervals()?)
        } else {
            None
        },
        kernel_intervals: if one_dim && model.mode() == Mode::Viability {
            Some(field.kernel_intervals(0.0)?)
        } else {
            None
        },
    };
    out.write_json("summary.json", &summary)?;

    println!(
        "{} iterations, residual {:e}, converged: {}",
        stats.iterations, stats.residual, stats.converged
    );
    if let Some(iv) = &summary.super_zero_intervals {
        print_intervals("super-zero interval", iv);
    }
    if let Some(iv) = &summary.kernel_intervals {
        print_intervals("kernel interval", iv);
    }
    Ok(convergence_status(&field))
}

fn fmt_certificate(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        Some(_) => "-inf".into(),
        None => "n/a".into(),
    }
}

fn offline_set(
    config: &RunConfig,
    model: &SystemModel,
    policy: &Policy,
    gamma: f64,
    fallback_region: Option<&reachcert::systems::Rect>,
) -> anyhow::Result<CertifiedSet> {
    let c = config.certify_section()?;
    let region = c
        .region
        .as_ref()
        .or(fallback_region)
        .context("offline certification needs `certify.region`")?;
    Ok(certify_offline(
        model,
        policy,
        region,
        c.eps_x,
        c.horizon,
        gamma,
        c.method,
        c.lattice_budget,
    )?)
}

pub fn certify(config: &RunConfig, out: &mut Artifacts) -> anyhow::Result<Status> {
    let c = config.certify_section()?;
    let model = model(config)?;
    let lattice = lattice(config, &model)?;
    let field = obtain_field(config, &model, &lattice)?;
    let status = convergence_status(&field);
    let gamma = field.gamma();
    let policy = Policy::greedy(Arc::new(field), Arc::new(lattice));

    match (&c.center, &c.region) {
        (Some(center), None) => {
            let mut report = certify_online(&model, &policy, center, c.eps_x, c.horizon, gamma, c.method)?;
            let wall = report.wall_time_s.take().unwrap_or_default();
            out.write_with("cert_report.json", |buf| {
                buf.extend_from_slice(report.to_json()?.as_bytes());
                buf.push(b'\n');
                Ok(())
            })?;
            let lip = report.lipschitz.as_ref().map(|m| m.certificate);
            let socp = report.socp.as_ref().map(|m| m.certificate);
            println!("lipschitz certificate: {}", fmt_certificate(lip));
            println!("socp certificate: {}", fmt_certificate(socp));
            println!("certified: {} ({:.3} ms)", report.certified(), wall * 1e3);
            let verdict = if report.certified() {
                Status::Success
            } else {
                Status::NotCertified
            };
            Ok(status.worst(verdict))
        }
        (None, Some(_)) => {
            let set = offline_set(config, &model, &policy, gamma, None)?;
            out.write_with("certified_set.json", |buf| {
                buf.extend_from_slice(set.to_json()?.as_bytes());
                buf.push(b'\n');
                Ok(())
            })?;
            out.write_with("certified_centers.csv", |buf| Ok(set.write_csv(buf)?))?;
            println!(
                "certified {} of {} centers ({})",
                set.len(),
                set.lattice.len(),
                set.method.as_str()
            );
            Ok(status)
        }
        _ => bail!("`certify` needs exactly one of `center` (online) or `region` (offline)"),
    }
}

pub fn simulate(config: &RunConfig, out: &mut Artifacts) -> anyhow::Result<Status> {
    let s = config.simulate_section()?;
    let model = model(config)?;
    let lattice = Arc::new(lattice(config, &model)?);
    let field = Arc::new(obtain_field(config, &model, &lattice)?);
    let status = convergence_status(&field);
    let policy = Policy::greedy(field.clone(), lattice.clone());

    let certified = if s.sampler == SamplerKind::CertifiedSet {
        Some(offline_set(config, &model, &policy, field.gamma(), Some(&s.region))?)
    } else {
        None
    };
    let sampler = InitialSampler::resolve(s.sampler, &s.region, Some(&field), certified.as_ref())?;

    let mut runs = Vec::new();
    if s.disturbance != DisturbanceChoice::WorstCase {
        runs.push(("sampled", DisturbancePolicy::Sampler));
    }
    if s.disturbance != DisturbanceChoice::Sampled {
        runs.push((
            "worst_case",
            DisturbancePolicy::GridWorstCase {
                field: field.clone(),
                lattice: lattice.clone(),
            },
        ));
    }
    for (name, dist) in runs {
        let report = success_rate(&model, &sampler, &policy, &dist, s.trials, s.horizon, config.seed)?;
        out.write_json(&format!("success_{name}.json"), &report)?;
        out.write_with(&format!("success_{name}.csv"), |buf| Ok(report.write_csv(buf)?))?;
        println!(
            "{name}: success rate {:.4} ({} of {}; {} constraint violations, {} never reached)",
            report.success_rate, report.successes, report.trials, report.constraint_violations, report.never_reached
        );
    }
    Ok(status)
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    settings: &'a SweepSettings,
    rows: &'a [reachcert::harness::GammaRow],
    starts: &'a [Vec<f64>],
}

pub fn sweep(config: &RunConfig, out: &mut Artifacts) -> anyhow::Result<Status> {
    let s = config.sweep_section()?;
    let model = model(config)?;
    let lattice = lattice(config, &model)?;
    let settings = SweepSettings {
        region: s.region.clone(),
        tol: config.tol,
        eps_x: s.eps_x,
        cert_horizon: s.cert_horizon,
        volume_samples: s.volume_samples,
        reach_samples: s.reach_samples,
        reach_horizon: s.reach_horizon,
        lattice_budget: s.lattice_budget,
        seed: config.seed,
    };
    let result = gamma_sweep(&model, &grid(config)?, &lattice, &s.gammas, &settings)?;
    out.write_json(
        "sweep.json",
        &SweepOutput {
            settings: &settings,
            rows: &result.rows,
            starts: &result.starts,
        },
    )?;
    out.write_with("sweep.csv", |buf| Ok(result.write_csv(buf)?))?;
    let mut status = Status::Success;
    for (row, field) in result.rows.iter().zip(&result.fields) {
        println!(
            "gamma {:.3}: learned volume {:.4}, lipschitz {:.4}, socp {:.4}, mean reaching time {}",
            row.gamma,
            row.learned_volume,
            row.lipschitz_volume,
            row.socp_volume,
            row.mean_reaching_time.map_or("n/a".to_string(), |t| format!("{t:.2}"))
        );
        status = status.worst(convergence_status(field));
    }
    Ok(status)
}

pub fn latency(config: &RunConfig, out: &mut Artifacts) -> anyhow::Result<Status> {
    let l = config.latency_section()?;
    let model = model(config)?;
    let (policy, gamma, status) = match &l.policy {
        PolicyChoice::Greedy => {
            let lattice = lattice(config, &model)?;
            let field = obtain_field(config, &model, &lattice)?;
            let status = convergence_status(&field);
            let gamma = field.gamma();
            (Policy::greedy(Arc::new(field), Arc::new(lattice)), gamma, status)
        }
        PolicyChoice::Constant(u) => (Policy::Constant(u.clone()), config.require_gamma()?, Status::Success),
    };
    let report = latency_histogram(
        &model,
        &policy,
        &l.region,
        l.centers,
        l.eps_x,
        l.horizon,
        gamma,
        config.seed,
    )?;
    out.write_json("latency.json", &report)?;
    out.write_with("latency.csv", |buf| Ok(report.write_csv(buf)?))?;
    println!(
        "median latency: tube {:.3} ms, lipschitz {:.3} ms, socp {:.3} ms",
        report.tube.median * 1e3,
        report.lipschitz.median * 1e3,
        report.socp.median * 1e3
    );
    Ok(status)
}
