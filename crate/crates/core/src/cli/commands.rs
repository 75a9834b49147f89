use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::config::*;
use super::output::{num, read_csv, Output};
use super::{load_config, Cli, CliError, Header, NetworkCommand, RunSummary};
use crate::algebra::{bloch_components, density_from_bloch, BlochVector, ComplexMatrix, C64};
use crate::coherent::{canonical_schedule, heisenberg_schedule, local_pauli, verify_transfer, Party, TransferReport};
use crate::filter::{
    mean_and_std_err, monte_carlo_mean, monte_carlo_unnormalized, path_costs, replay_record, run_unnormalized,
    simulate_record, ExtendedBlochVector, MeasurementRecord, NoiseSource,
};
use crate::hjb::{
    dpe_residual, extract_bang_bang, feedback_rn, qvi_residuals, rollout_bang_bang, solve_qvi, solve_risk_neutral,
    solve_risk_sensitive, solve_time_optimal, BallGrid, DpeProblem, MarchReport, PolarGrid, QviAction,
    ResidualReport,
};
use crate::hybrid::{simulate_hybrid, AffinePeriodMap, Mode, SystemConfig};
use crate::slh::{concat, evolve_master, series, SlhParams};

fn bloch_state(a: [f64; 3], field: &str) -> Result<BlochVector, CliError> {
    let r = BlochVector::from_array(a);
    if !(a.iter().all(|v| v.is_finite()) && r.norm() <= 1.0 + 1e-12) {
        return Err(CliError::Config(format!("field `{field}`: must lie in the Bloch ball")));
    }
    Ok(r)
}

fn start<C: Serialize>(cli: &Cli, command: &str, cfg: &C) -> Result<Output, CliError> {
    Output::new(&cli.out, Header::new(command, cfg, cli.seed)?)
}

fn finish(out: Output) -> RunSummary {
    RunSummary {
        files: out.written().to_vec(),
        stdout: None,
    }
}

fn override_dt(cli: &Cli, system: &mut SystemConfig) {
    if let Some(dt) = cli.dt {
        system.dt = dt;
    }
}

fn bloch_row(t: f64, r: BlochVector) -> Vec<String> {
    vec![num(t), num(r.x), num(r.y), num(r.z)]
}

#[derive(Serialize)]
struct TimedState {
    t: f64,
    state: BlochVector,
}

#[derive(Serialize)]
struct RelaxationCheck {
    max_z_error: f64,
    max_xy_relative_error: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    final_state: BlochVector,
    last_post_impulse: Option<TimedState>,
    period_map_fixed_point: Option<BlochVector>,
    relaxation_check: Option<RelaxationCheck>,
}

pub(super) fn simulate(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: SimulateConfig = load_config(cli.config.as_deref())?;
    override_dt(cli, &mut cfg.system);
    cfg.system.validate()?;
    let r0 = bloch_state(cfg.r0, "r0")?;
    if !cfg.u.is_finite() {
        return Err(CliError::Config("field `u`: must be finite".into()));
    }
    let u = cfg.u;
    let traj = simulate_hybrid(&cfg.system, &cfg.schedule, r0, &|_, _| u, cfg.t_final, cfg.mode)?;

    let mut out = start(cli, "simulate", &cfg)?;
    out.csv(
        "simulate.csv",
        &["t", "x", "y", "z", "event"],
        traj.times.iter().zip(&traj.states).enumerate().map(|(k, (&t, &r))| {
            let mut row = bloch_row(t, r);
            row.push(if traj.is_event(k) { "1" } else { "0" }.to_owned());
            row
        }),
    )?;

    let relaxing_free = cfg.mode == Mode::Relaxing && u == 0.0;
    let period_map_fixed_point = match (cfg.schedule.periodic_part(), cfg.schedule.entries().is_empty()) {
        (Some(p), true) if relaxing_free && cfg.system.kappa() > 0.0 => {
            AffinePeriodMap::new(&cfg.system, p.period, p.angle).fixed_point().ok()
        }
        _ => None,
    };
    let relaxation_check = (relaxing_free && cfg.schedule.impulses_until(cfg.t_final).is_empty()).then(|| {
        let kappa = cfg.system.kappa();
        let xy0 = r0.x.hypot(r0.y);
        let mut check = RelaxationCheck {
            max_z_error: 0.0,
            max_xy_relative_error: 0.0,
        };
        for (&t, r) in traj.times.iter().zip(&traj.states) {
            let z = (r0.z + 1.0) * (-kappa * t).exp() - 1.0;
            check.max_z_error = check.max_z_error.max((r.z - z).abs());
            if xy0 > 0.0 {
                let xy = xy0 * (-0.5 * kappa * t).exp();
                check.max_xy_relative_error = check.max_xy_relative_error.max((r.x.hypot(r.y) - xy).abs() / xy);
            }
        }
        check
    });
    out.json(
        "simulate.json",
        &SimulateSummary {
            final_state: traj.final_state(),
            last_post_impulse: traj.post_impulse_states().last().map(|(t, state)| TimedState { t, state }),
            period_map_fixed_point,
            relaxation_check,
        },
    )?;
    Ok(finish(out))
}

/// Record from a previously written `filter.csv`: the `dY` column after the
/// first row, with the step taken from the first two times.
fn load_record(path: &std::path::Path) -> Result<MeasurementRecord, CliError> {
    let (columns, rows) = read_csv(path)?;
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Config(format!("record: missing column `{name}`")))
    };
    let (ct, cdy) = (col("t")?, col("dY")?);
    if rows.len() < 2 {
        return Err(CliError::Config("record: need at least one increment".into()));
    }
    let dt = rows[1][ct] - rows[0][ct];
    Ok(MeasurementRecord::new(dt, rows[1..].iter().map(|r| r[cdy]).collect())?)
}

#[derive(Serialize)]
struct FilterSummary {
    mode: FilterMode,
    dt: f64,
    steps: usize,
    projections: usize,
}

#[derive(Serialize)]
struct ConsistencyLevel {
    dt: f64,
    sup_gap: f64,
}

pub(super) fn filter(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: FilterConfig = load_config(cli.config.as_deref())?;
    override_dt(cli, &mut cfg.system);
    cfg.system.validate()?;
    let r0 = bloch_state(cfg.r0, "r0")?;
    if !cfg.u.is_finite() {
        return Err(CliError::Config("field `u`: must be finite".into()));
    }
    if cfg.mode == FilterMode::Consistency && cfg.levels < 2 {
        return Err(CliError::Config("field `levels`: need at least 2".into()));
    }
    let u = cfg.u;
    let control = |_: f64, _: BlochVector| u;
    let noise = NoiseSource::new(cli.seed);
    let finest_dt = match cfg.mode {
        FilterMode::Consistency => cfg.system.dt / f64::powi(2.0, cfg.levels as i32 - 1),
        _ => cfg.system.dt,
    };
    let record = match &cfg.record {
        Some(path) => load_record(path)?,
        None => {
            simulate_record(&cfg.system.with_dt(finest_dt), r0, &control, &noise, cfg.path, cfg.t_final)?.record
        }
    };
    let system = cfg.system.with_dt(record.dt);
    let mut out = start(cli, "filter", &cfg)?;
    let dy_at = |k: usize| if k == 0 { 0.0 } else { record.increments[k - 1] };

    match cfg.mode {
        FilterMode::Normalized => {
            let run = replay_record(&system, r0, &control, &record, cfg.scheme);
            out.csv(
                "filter.csv",
                &["t", "dY", "x", "y", "z"],
                run.times.iter().zip(&run.states).enumerate().map(|(k, (&t, s))| {
                    vec![num(t), num(dy_at(k)), num(s.r.x), num(s.r.y), num(s.r.z)]
                }),
            )?;
            out.json(
                "filter.json",
                &FilterSummary {
                    mode: cfg.mode,
                    dt: record.dt,
                    steps: record.len(),
                    projections: run.projections,
                },
            )?;
        }
        FilterMode::Unnormalized => {
            let states = run_unnormalized(&system, ExtendedBlochVector::from_state(r0), &|_| u, &record, cfg.scheme)?;
            out.csv(
                "filter.csv",
                &["t", "dY", "x", "y", "z", "n"],
                states.iter().enumerate().map(|(k, s)| {
                    vec![num(k as f64 * record.dt), num(dy_at(k)), num(s.x), num(s.y), num(s.z), num(s.n)]
                }),
            )?;
            out.json(
                "filter.json",
                &FilterSummary {
                    mode: cfg.mode,
                    dt: record.dt,
                    steps: record.len(),
                    projections: 0,
                },
            )?;
        }
        FilterMode::Consistency => {
            let mut levels = Vec::with_capacity(cfg.levels);
            for l in (0..cfg.levels).rev() {
                let rec = record.coarsen(1 << l)?;
                let sys = cfg.system.with_dt(rec.dt);
                let norm = replay_record(&sys, r0, &control, &rec, cfg.scheme);
                let unn = run_unnormalized(&sys, ExtendedBlochVector::from_state(r0), &|_| u, &rec, cfg.scheme)?;
                let mut sup_gap = 0.0f64;
                for (a, b) in norm.states.iter().zip(&unn) {
                    sup_gap = sup_gap.max(a.r.max_abs_diff(b.normalize()?.r));
                }
                levels.push(ConsistencyLevel { dt: rec.dt, sup_gap });
            }
            out.csv(
                "consistency.csv",
                &["dt", "sup_gap", "ratio"],
                levels.iter().enumerate().map(|(k, l)| {
                    let ratio = if k == 0 { f64::NAN } else { levels[k - 1].sup_gap / l.sup_gap };
                    vec![num(l.dt), num(l.sup_gap), num(ratio)]
                }),
            )?;
        }
    }
    Ok(finish(out))
}

#[derive(Serialize)]
struct MonteCarloReport {
    paths: usize,
    projection_fraction: f64,
    /// Largest `|mean − reference|/SE` over checkpoints after the first.
    max_z_score: f64,
}

fn z_score(mean: f64, reference: f64, se: f64) -> f64 {
    let d = (mean - reference).abs();
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY
    }
}

pub(super) fn montecarlo(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: MonteCarloConfig = load_config(cli.config.as_deref())?;
    override_dt(cli, &mut cfg.system);
    if let Some(p) = cli.paths {
        cfg.paths = p;
    }
    cfg.system.validate()?;
    let r0 = bloch_state(cfg.r0, "r0")?;
    let noise = NoiseSource::new(cli.seed);
    let mut out = start(cli, "montecarlo", &cfg)?;
    match cfg.quantity {
        Quantity::Normalized => {
            let u = cfg.u;
            let ens = monte_carlo_mean(&cfg.system, r0, &|_, _| u, cfg.paths, cfg.t_final, cfg.checkpoints, &noise)?;
            let g = crate::slh::atom_params(cfg.system.kappa1, cfg.system.kappa2, cfg.system.omega, u)?;
            let mut rho = density_from_bloch(r0)?.into_matrix();
            let mut master = vec![r0];
            for w in ens.times.windows(2) {
                let steps = ((w[1] - w[0]) / cfg.system.dt).round().max(1.0) as usize;
                rho = evolve_master(&g, &rho, w[1] - w[0], steps, |_, _| {})?;
                master.push(bloch_components(&rho).1);
            }
            let mut max_z_score = 0.0f64;
            for i in 1..ens.times.len() {
                let m = master[i].to_array();
                for c in 0..3 {
                    max_z_score = max_z_score.max(z_score(ens.mean[i][c], m[c], ens.std_err[i][c]));
                }
            }
            out.csv(
                "montecarlo.csv",
                &["t", "mean_x", "se_x", "mean_y", "se_y", "mean_z", "se_z", "master_x", "master_y", "master_z", "max_dev"],
                (0..ens.times.len()).map(|i| {
                    let mut row = vec![num(ens.times[i])];
                    for c in 0..3 {
                        row.push(num(ens.mean[i][c]));
                        row.push(num(ens.std_err[i][c]));
                    }
                    row.extend(master[i].to_array().map(num));
                    row.push(num(ens.max_dev[i]));
                    row
                }),
            )?;
            out.json(
                "montecarlo.json",
                &MonteCarloReport {
                    paths: ens.paths,
                    projection_fraction: ens.projection_fraction(),
                    max_z_score,
                },
            )?;
        }
        Quantity::Unnormalized => {
            if cfg.u != 0.0 {
                return Err(CliError::Config("field `u`: the unnormalized ensemble is uncontrolled".into()));
            }
            let ens = monte_carlo_unnormalized(
                &cfg.system,
                ExtendedBlochVector::from_state(r0),
                cfg.paths,
                cfg.t_final,
                cfg.checkpoints,
                &noise,
            )?;
            let last = ens.times.len() - 1;
            out.csv(
                "montecarlo.csv",
                &["t", "mean_n", "se_n", "mean_x", "se_x", "mean_y", "se_y", "mean_z", "se_z", "max_dev"],
                (0..ens.times.len()).map(|i| {
                    let mut row = vec![num(ens.times[i])];
                    for c in 0..4 {
                        row.push(num(ens.mean[i][c]));
                        row.push(num(ens.std_err[i][c]));
                    }
                    row.push(num(ens.max_dev[i]));
                    row
                }),
            )?;
            out.json(
                "montecarlo.json",
                &MonteCarloReport {
                    paths: ens.paths,
                    projection_fraction: 0.0,
                    max_z_score: z_score(ens.mean[last][0], 1.0, ens.std_err[last][0]),
                },
            )?;
        }
    }
    Ok(finish(out))
}

fn polar_grid(n_theta: usize, n_phi: usize) -> Result<PolarGrid, CliError> {
    Ok(PolarGrid::new(n_theta, n_phi)?)
}

#[derive(Serialize)]
struct StationarySummary<'a> {
    grid: PolarGrid,
    omega: f64,
    target: (usize, usize),
    clamped: &'a [usize],
    converged: bool,
    iterations: usize,
    residual: f64,
    monotone: bool,
    values_file: &'static str,
}

#[derive(Serialize)]
struct RolloutRecord {
    start: BlochVector,
    predicted: f64,
    time: f64,
    reached: bool,
}

#[derive(Serialize)]
struct TimeOptimalSummary<'a> {
    #[serde(flatten)]
    solution: StationarySummary<'a>,
    rollouts: Vec<RolloutRecord>,
    /// Largest realized/predicted time ratio among starts with a positive
    /// prediction.
    max_time_ratio: Option<f64>,
}

/// Uniform point on the unit sphere from stream `k`.
fn random_pure_state(noise: &NoiseSource, k: u64) -> BlochVector {
    let mut rng = noise.path_rng(k);
    let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let r = BlochVector::from_array(v);
    r.scale(1.0 / r.norm())
}

pub(super) fn time_optimal(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: TimeOptimalConfig = load_config(cli.config.as_deref())?;
    if let Some(tol) = cli.tol {
        cfg.solver.tol = tol;
    }
    if let Some(r) = &cfg.rollout {
        if !(r.dt > 0.0 && r.radius_cells > 0.0 && r.time_factor > 0.0) {
            return Err(CliError::Config("field `rollout`: dt, radius_cells and time_factor must be positive".into()));
        }
    }
    let grid = polar_grid(cfg.n_theta, cfg.n_phi)?;
    let sol = solve_time_optimal(grid, cfg.omega, (cfg.target[0], cfg.target[1]), &cfg.solver)?;
    let law = extract_bang_bang(&sol);
    let mut out = start(cli, "hjb time-optimal", &cfg)?;
    out.csv(
        "time_optimal_values.csv",
        &["i", "j", "theta", "phi", "value", "control"],
        (0..grid.len()).map(|k| {
            let (i, j) = grid.coords(k);
            vec![
                i.to_string(),
                j.to_string(),
                num(grid.theta(i)),
                num(grid.phi(j)),
                num(sol.value.values[k]),
                num(law.controls[k]),
            ]
        }),
    )?;

    let noise = NoiseSource::new(cli.seed);
    let rollouts: Vec<RolloutRecord> = match &cfg.rollout {
        None => Vec::new(),
        Some(rc) => (0..rc.starts as u64)
            .map(|k| {
                let start = random_pure_state(&noise, k);
                let predicted = sol.value_at(start);
                let t_max = rc.time_factor * predicted.max(grid.d_phi());
                let ro = rollout_bang_bang(&sol, &law, start, rc.dt, rc.radius_cells * grid.d_theta(), t_max);
                RolloutRecord {
                    start,
                    predicted,
                    time: ro.time,
                    reached: ro.reached,
                }
            })
            .collect(),
    };
    let max_time_ratio = rollouts
        .iter()
        .filter(|r| r.predicted > 0.0)
        .map(|r| if r.reached { r.time / r.predicted } else { f64::INFINITY })
        .reduce(f64::max);
    out.json(
        "time_optimal.json",
        &TimeOptimalSummary {
            solution: StationarySummary {
                grid,
                omega: sol.omega,
                target: sol.target,
                clamped: &sol.clamped,
                converged: sol.value.converged,
                iterations: sol.value.iterations,
                residual: sol.value.residual,
                monotone: sol.monotone,
                values_file: "time_optimal_values.csv",
            },
            rollouts,
            max_time_ratio,
        },
    )?;
    if cli.residual_report {
        #[derive(Serialize)]
        struct Residuals {
            scheme: ResidualReport,
            rectangular: ResidualReport,
        }
        out.json(
            "time_optimal_residual.json",
            &Residuals {
                scheme: dpe_residual(DpeProblem::TimeOptimal(&sol)),
                rectangular: dpe_residual(DpeProblem::TimeOptimalRectangular(&sol)),
            },
        )?;
    }
    Ok(finish(out))
}

pub(super) fn qvi(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: QviRunConfig = load_config(cli.config.as_deref())?;
    if let Some(tol) = cli.tol {
        cfg.qvi.solver.tol = tol;
    }
    let grid = polar_grid(cfg.n_theta, cfg.n_phi)?;
    let sol = solve_qvi(grid, cfg.omega, (cfg.target[0], cfg.target[1]), &cfg.qvi)?;
    let mut out = start(cli, "hjb qvi", &cfg)?;
    out.csv(
        "qvi_values.csv",
        &["i", "j", "theta", "phi", "value", "impulse", "angle"],
        (0..grid.len()).map(|k| {
            let (i, j) = grid.coords(k);
            let (flag, angle) = match sol.law.controls[k] {
                QviAction::Drift => ("0", 0.0),
                QviAction::Impulse(v) => ("1", v),
            };
            vec![
                i.to_string(),
                j.to_string(),
                num(grid.theta(i)),
                num(grid.phi(j)),
                num(sol.value.values[k]),
                flag.to_owned(),
                num(angle),
            ]
        }),
    )?;
    out.json(
        "qvi.json",
        &StationarySummary {
            grid,
            omega: sol.omega,
            target: sol.target,
            clamped: &sol.clamped,
            converged: sol.value.converged,
            iterations: sol.value.iterations,
            residual: sol.value.residual,
            monotone: sol.monotone,
            values_file: "qvi_values.csv",
        },
    )?;
    if cli.residual_report {
        #[derive(Serialize)]
        struct Residuals {
            min_drift: f64,
            min_impulse: f64,
            max_complementarity: f64,
            combined: ResidualReport,
        }
        let r = qvi_residuals(&sol);
        out.json(
            "qvi_residual.json",
            &Residuals {
                min_drift: r.min_drift,
                min_impulse: r.min_impulse,
                max_complementarity: r.max_complementarity,
                combined: dpe_residual(DpeProblem::Qvi(&sol)),
            },
        )?;
    }
    Ok(finish(out))
}

/// Interior-node rows `slice, t, x, y, z, value, control`.
fn slice_rows<'a>(
    grid: &'a BallGrid,
    times: &'a [f64],
    values: &'a [Vec<f64>],
    law: &'a [Vec<f64>],
) -> impl Iterator<Item = Vec<String>> + 'a {
    let interior = grid.interior();
    (0..times.len()).flat_map(move |s| {
        interior
            .clone()
            .into_iter()
            .map(move |k| {
                let p = grid.point(k);
                vec![
                    s.to_string(),
                    num(times[s]),
                    num(p[0]),
                    num(p[1]),
                    num(p[2]),
                    num(values[s][k]),
                    num(law[s][k]),
                ]
            })
    })
}

const SLICE_COLUMNS: [&str; 7] = ["slice", "t", "x", "y", "z", "value", "control"];

#[derive(Serialize)]
struct CostEstimate {
    mean: f64,
    std_err: f64,
}

#[derive(Serialize)]
struct Evaluation {
    r0: BlochVector,
    paths: usize,
    predicted: f64,
    optimal: CostEstimate,
    zero_control: CostEstimate,
    /// Pathwise `J* − J0` under common random numbers.
    difference: CostEstimate,
}

#[derive(Serialize)]
struct BallSummary {
    h: f64,
    radius: f64,
    nodes_per_axis: usize,
    horizon: f64,
    times: Vec<f64>,
    march: MarchReport,
    values_file: &'static str,
}

pub(super) fn risk_neutral(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: RiskNeutralConfig = load_config(cli.config.as_deref())?;
    override_dt(cli, &mut cfg.system);
    if let (Some(p), Some(e)) = (cli.paths, cfg.evaluate.as_mut()) {
        e.paths = p;
    }
    let grid = BallGrid::unit(cfg.h)?;
    let r0 = match &cfg.evaluate {
        Some(e) => Some(bloch_state(e.r0, "evaluate.r0")?),
        None => None,
    };
    let sol = solve_risk_neutral(&grid, &cfg.system, &cfg.weights, cfg.horizon, cfg.nt)?;
    let mut out = start(cli, "hjb risk-neutral", &cfg)?;
    out.csv("risk_neutral_values.csv", &SLICE_COLUMNS, slice_rows(&grid, &sol.times, &sol.values, &sol.law))?;

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        ball: BallSummary,
        evaluation: Option<Evaluation>,
    }
    let evaluation = match (r0, &cfg.evaluate) {
        (Some(r0), Some(e)) => {
            let noise = NoiseSource::new(cli.seed);
            let law = |t: f64, r: BlochVector| feedback_rn(&sol, r, t);
            let star = path_costs(&cfg.system, r0, &law, &cfg.weights, e.paths, cfg.horizon, &noise)?;
            let zero = path_costs(&cfg.system, r0, &|_, _| 0.0, &cfg.weights, e.paths, cfg.horizon, &noise)?;
            let diff: Vec<f64> = star.iter().zip(&zero).map(|(a, b)| a - b).collect();
            let est = |s: &[f64]| {
                let (mean, std_err) = mean_and_std_err(s);
                CostEstimate { mean, std_err }
            };
            Some(Evaluation {
                r0,
                paths: e.paths,
                predicted: sol.value_at(r0, 0.0),
                optimal: est(&star),
                zero_control: est(&zero),
                difference: est(&diff),
            })
        }
        _ => None,
    };
    out.json(
        "risk_neutral.json",
        &Summary {
            ball: BallSummary {
                h: grid.h,
                radius: grid.radius,
                nodes_per_axis: grid.n,
                horizon: cfg.horizon,
                times: sol.times.clone(),
                march: sol.report,
                values_file: "risk_neutral_values.csv",
            },
            evaluation,
        },
    )?;
    Ok(finish(out))
}

#[derive(Serialize)]
struct SliceCheck {
    level: f64,
    /// Largest `|V_a − V_b|` at time 0 over the first slice's interior nodes.
    max_abs_diff: f64,
    max_value: f64,
}

#[derive(Serialize)]
struct MonotonicityCheck {
    mus: Vec<f64>,
    /// Nodes where the time-0 value decreased as `μ` increased.
    violations: usize,
    max_decrease: f64,
}

pub(super) fn risk_sensitive(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg: RiskSensitiveConfig = load_config(cli.config.as_deref())?;
    override_dt(cli, &mut cfg.system);
    if let Some(checks) = &cfg.checks {
        if checks.mus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::Config("field `checks.mus`: must be strictly increasing".into()));
        }
    }
    let grid = BallGrid::new(cfg.h, cfg.n0)?;
    let sol = solve_risk_sensitive(&grid, &cfg.system, &cfg.problem, cfg.horizon, cfg.nt)?;
    let mut out = start(cli, "hjb risk-sensitive", &cfg)?;
    out.csv("risk_sensitive_values.csv", &SLICE_COLUMNS, slice_rows(&grid, &sol.times, &sol.values, &sol.law))?;

    let interior = grid.interior();
    let mut two_slice = None;
    let mut monotonicity = None;
    if let Some(checks) = &cfg.checks {
        if let Some(level) = checks.second_slice {
            let g2 = BallGrid::new(cfg.h, level)?;
            let other = solve_risk_sensitive(&g2, &cfg.system, &cfg.problem, cfg.horizon, cfg.nt)?;
            let mut check = SliceCheck {
                level,
                max_abs_diff: 0.0,
                max_value: 0.0,
            };
            for &k in &interior {
                let p = grid.point(k);
                let s = ExtendedBlochVector::new(cfg.n0, p[0], p[1], p[2]);
                let a = sol.values[0][k];
                let b = other.value(&s, 0.0)?;
                check.max_abs_diff = check.max_abs_diff.max((a - b).abs());
                check.max_value = check.max_value.max(a.abs());
            }
            two_slice = Some(check);
        }
        if checks.mus.len() >= 2 {
            let mut previous: Option<Vec<f64>> = None;
            let mut check = MonotonicityCheck {
                mus: checks.mus.clone(),
                violations: 0,
                max_decrease: 0.0,
            };
            for &mu in &checks.mus {
                let problem = crate::hjb::RiskSensitiveProblem { mu, ..cfg.problem };
                let s = solve_risk_sensitive(&grid, &cfg.system, &problem, cfg.horizon, cfg.nt)?;
                if let Some(prev) = &previous {
                    for &k in &interior {
                        let drop = prev[k] - s.values[0][k];
                        if drop > 0.0 {
                            check.violations += 1;
                            check.max_decrease = check.max_decrease.max(drop);
                        }
                    }
                }
                previous = Some(s.values[0].clone());
            }
            monotonicity = Some(check);
        }
    }

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        ball: BallSummary,
        two_slice: Option<SliceCheck>,
        monotonicity: Option<MonotonicityCheck>,
    }
    out.json(
        "risk_sensitive.json",
        &Summary {
            ball: BallSummary {
                h: grid.h,
                radius: grid.radius,
                nodes_per_axis: grid.n,
                horizon: cfg.horizon,
                times: sol.times.clone(),
                march: sol.report,
                values_file: "risk_sensitive_values.csv",
            },
            two_slice,
            monotonicity,
        },
    )?;
    Ok(finish(out))
}

pub(super) fn network(cli: &Cli, op: NetworkCommand) -> Result<RunSummary, CliError> {
    #[derive(Serialize)]
    struct Composite<'a> {
        operation: &'static str,
        result: &'a SlhParams,
    }
    match op {
        NetworkCommand::Series | NetworkCommand::Concat => {
            let cfg: NetworkConfig = load_config(cli.config.as_deref())?;
            let (name, min) = match op {
                NetworkCommand::Series => ("series", 2),
                _ => ("concat", 1),
            };
            if cfg.systems.len() < min {
                return Err(CliError::Config(format!("field `systems`: need at least {min}")));
            }
            let mut acc = cfg.systems[0].clone();
            for g in &cfg.systems[1..] {
                acc = match op {
                    NetworkCommand::Series => series(g, &acc)?,
                    _ => concat(&acc, g)?,
                };
            }
            let mut out = start(cli, &format!("network {name}"), &cfg)?;
            out.json(
                "network.json",
                &Composite {
                    operation: name,
                    result: &acc,
                },
            )?;
            Ok(finish(out))
        }
        NetworkCommand::Master => {
            let mut cfg: MasterConfig = load_config(cli.config.as_deref())?;
            if let Some(dt) = cli.dt {
                cfg.dt = dt;
            }
            if cfg.system.dim() != 2 {
                return Err(CliError::Config("field `system`: the master command integrates a single qubit".into()));
            }
            if !(cfg.dt > 0.0 && cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
                return Err(CliError::Config("field `dt`: dt and t_final must be positive".into()));
            }
            let r0 = bloch_state(cfg.r0, "r0")?;
            let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
            let rho0 = density_from_bloch(r0)?.into_matrix();
            let mut rows = vec![bloch_row(0.0, r0)];
            evolve_master(&cfg.system, &rho0, cfg.t_final, steps, |t, rho: &ComplexMatrix| {
                rows.push(bloch_row(t, bloch_components(rho).1));
            })?;
            let mut out = start(cli, "network master", &cfg)?;
            out.csv("master.csv", &["t", "x", "y", "z"], rows)?;
            Ok(finish(out))
        }
    }
}

#[derive(Serialize)]
struct RandomTransfers {
    count: usize,
    all_pass: bool,
    max_fidelity_error: f64,
    /// Largest gap between Schrödinger- and Heisenberg-picture expectations
    /// of the local Pauli operators.
    max_picture_gap: f64,
}

#[derive(Serialize)]
struct CnotReport {
    demo: TransferReport,
    random: RandomTransfers,
}

pub(super) fn cnot_demo(cli: &Cli) -> Result<RunSummary, CliError> {
    let cfg: CnotConfig = load_config(cli.config.as_deref())?;
    let amp = |p: [f64; 2]| C64::new(p[0], p[1]);
    let demo = verify_transfer([amp(cfg.plant[0]), amp(cfg.plant[1])])?;

    let schedule = canonical_schedule();
    let mut observables = Vec::new();
    for party in [Party::Plant, Party::Controller] {
        for axis in ['x', 'y', 'z'] {
            observables.push(heisenberg_schedule(&schedule, &local_pauli(party, axis)?).map(|h| (party, axis, h))?);
        }
    }
    let noise = NoiseSource::new(cli.seed);
    let mut random = RandomTransfers {
        count: cfg.random_states,
        all_pass: true,
        max_fidelity_error: 0.0,
        max_picture_gap: 0.0,
    };
    for k in 0..cfg.random_states as u64 {
        let mut rng = noise.path_rng(k);
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let plant = [C64::new(g[0], g[1]) / norm, C64::new(g[2], g[3]) / norm];
        let report = verify_transfer(plant)?;
        random.all_pass &= report.pass;
        random.max_fidelity_error = random.max_fidelity_error.max((report.fidelity - 1.0).abs());
        for (party, axis, heis) in &observables {
            let direct = report.final_state.expectation(&local_pauli(*party, *axis)?)?;
            let conjugated = report.initial.expectation(heis)?;
            random.max_picture_gap = random.max_picture_gap.max((direct - conjugated).abs());
        }
    }
    let body = CnotReport { demo, random };
    let mut out = start(cli, "cnot-demo", &cfg)?;
    out.json("cnot.json", &body)?;
    let stdout = serde_json::to_string_pretty(&body).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(RunSummary {
        files: out.written().to_vec(),
        stdout: Some(stdout),
    })
}
