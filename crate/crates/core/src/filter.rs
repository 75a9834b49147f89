//! Quantum filtering of the atom from a homodyne record of the first output
//! channel.
//!
//! Three filters are provided in Bloch coordinates: the normalized
//! (stochastic master equation) filter driven by the innovations, the linear
//! unnormalized filter on the extended Bloch vector `(n, x, y, z)`, and the
//! risk-sensitive filter which adds the running-cost superoperator
//! `μ/2 (C ϱ + ϱ C)` with `C = diag(c1u²/2, 1 + c1u²/2)`.
//!
//! The measurement record satisfies `dY = √κ1·x dt + dW` under the physical
//! law, so the innovation increment is `dY − √κ1·x dt`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{bloch_matrix, BlochVector, ComplexMatrix};
use crate::error::{Error, Result};
use crate::hybrid::{bloch_rhs, SystemConfig};

/// Conditional Bloch vector of the normalized filter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterState {
    pub r: BlochVector,
}

impl FilterState {
    pub fn new(r: BlochVector) -> Self {
        Self { r }
    }
}

impl From<BlochVector> for FilterState {
    fn from(r: BlochVector) -> Self {
        Self { r }
    }
}

/// Unnormalized conditional state `½(nI + xσx + yσy + zσz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedBlochVector {
    pub n: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ExtendedBlochVector {
    pub const fn new(n: f64, x: f64, y: f64, z: f64) -> Self {
        Self { n, x, y, z }
    }

    pub fn from_state(r: BlochVector) -> Self {
        Self::new(1.0, r.x, r.y, r.z)
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(self.x, self.y, self.z)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::new(alpha * self.n, alpha * self.x, alpha * self.y, alpha * self.z)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.n, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn matrix(&self) -> ComplexMatrix {
        bloch_matrix(self.n, self.bloch())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(x/n, y/n, z/n)`
    pub fn normalize(&self) -> Result<FilterState> {
        normalize(self)
    }
}

/// Divides out the normalization factor.
pub fn normalize(s: &ExtendedBlochVector) -> Result<FilterState> {
    if !(s.n > 0.0) {
        return Err(Error::NormalizationCollapse(s.n));
    }
    Ok(FilterState::new(s.bloch().scale(1.0 / s.n)))
}

/// Time-stepping scheme for the filter SDEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
    /// Euler–Maruyama plus the `½ b'b (ΔY² − Δt)` correction; strong order one
    /// for the single measurement channel.
    Milstein,
}

/// Result of one normalized filter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedStep {
    pub state: FilterState,
    /// The raw step left the Bloch ball and was projected back radially.
    pub projected: bool,
}

/// Drift of the filter under the physical law (the master-equation field).
fn normalized_drift(r: BlochVector, u: f64, cfg: &SystemConfig) -> BlochVector {
    bloch_rhs(r, u, cfg.omega, cfg.kappa())
}

/// Gain multiplying the innovation increment.
fn normalized_gain(r: BlochVector, sqrt_k1: f64) -> BlochVector {
    BlochVector::new(
        sqrt_k1 * (1.0 + r.z - r.x * r.x),
        -sqrt_k1 * r.x * r.y,
        -sqrt_k1 * r.x * (1.0 + r.z),
    )
}

/// Directional derivative of the gain along itself, `(Db)·b`.
fn normalized_gain_derivative(r: BlochVector, sqrt_k1: f64) -> BlochVector {
    let b = normalized_gain(r, sqrt_k1);
    BlochVector::new(
        sqrt_k1 * (-2.0 * r.x * b.x + b.z),
        sqrt_k1 * (-r.y * b.x - r.x * b.y),
        sqrt_k1 * (-(1.0 + r.z) * b.x - r.x * b.z),
    )
}

/// One Euler–Maruyama step of the normalized filter over `cfg.dt`.
pub fn filter_step_normalized(s: FilterState, u: f64, dy: f64, cfg: &SystemConfig) -> NormalizedStep {
    filter_step_normalized_with(s, u, dy, cfg.dt, cfg, Scheme::EulerMaruyama)
}

/// Normalized filter step with an explicit step size and scheme.
pub fn filter_step_normalized_with(
    s: FilterState,
    u: f64,
    dy: f64,
    dt: f64,
    cfg: &SystemConfig,
    scheme: Scheme,
) -> NormalizedStep {
    let r = s.r;
    let sqrt_k1 = cfg.kappa1.sqrt();
    let innovation = dy - sqrt_k1 * r.x * dt;
    let mut next = r
        .axpy(dt, normalized_drift(r, u, cfg))
        .axpy(innovation, normalized_gain(r, sqrt_k1));
    if scheme == Scheme::Milstein {
        next = next.axpy(0.5 * (dy * dy - dt), normalized_gain_derivative(r, sqrt_k1));
    }
    let norm = next.norm();
    let projected = norm > 1.0;
    if projected {
        next = next.scale(1.0 / norm);
    }
    NormalizedStep {
        state: FilterState::new(next),
        projected,
    }
}

/// Parameters of the exponential-of-cost criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub mu: f64,
    pub c1: f64,
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", "must be finite and nonnegative"));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::invalid("c1", "must be positive"));
        }
        Ok(())
    }
}

/// Drift of the linear extended-state filters. `risk` adds the running-cost
/// contribution.
fn extended_drift(s: &ExtendedBlochVector, u: f64, risk: Option<RiskParams>, cfg: &SystemConfig) -> [f64; 4] {
    let kappa = cfg.kappa();
    let w = cfg.omega;
    let mut d = [
        0.0,
        -w * s.y - 0.5 * kappa * s.x,
        w * s.x - 0.5 * kappa * s.y - u * s.z,
        u * s.y - kappa * s.z - kappa * s.n,
    ];
    if let Some(RiskParams { mu, c1 }) = risk {
        let a = 1.0 + c1 * u * u;
        let h = 0.5 * mu;
        d[0] += h * (a * s.n - s.z);
        d[1] += h * a * s.x;
        d[2] += h * a * s.y;
        d[3] += h * (a * s.z - s.n);
    }
    d
}

fn extended_gain(s: &ExtendedBlochVector, sqrt_k1: f64) -> [f64; 4] {
    [sqrt_k1 * s.x, sqrt_k1 * (s.n + s.z), 0.0, -sqrt_k1 * s.x]
}

fn extended_step(
    s: &ExtendedBlochVector,
    u: f64,
    risk: Option<RiskParams>,
    dy: f64,
    dt: f64,
    cfg: &SystemConfig,
    scheme: Scheme,
) -> Result<ExtendedBlochVector> {
    let sqrt_k1 = cfg.kappa1.sqrt();
    let drift = extended_drift(s, u, risk, cfg);
    let gain = extended_gain(s, sqrt_k1);
    let mut out = s.to_array();
    for k in 0..4 {
        out[k] += drift[k] * dt + gain[k] * dy;
    }
    if scheme == Scheme::Milstein {
        let c = 0.5 * cfg.kappa1 * (dy * dy - dt) * (s.n + s.z);
        out[0] += c;
        out[3] -= c;
    }
    let next = ExtendedBlochVector::from_array(out);
    if !(next.n > 0.0) {
        return Err(Error::NormalizationCollapse(next.n));
    }
    Ok(next)
}

/// One Euler–Maruyama step of the unnormalized filter over `cfg.dt`;
/// `dn = √κ1·x dY`.
pub fn filter_step_unnormalized(
    s: &ExtendedBlochVector,
    u: f64,
    dy: f64,
    cfg: &SystemConfig,
) -> Result<ExtendedBlochVector> {
    extended_step(s, u, None, dy, cfg.dt, cfg, Scheme::EulerMaruyama)
}

pub fn filter_step_unnormalized_with(
    s: &ExtendedBlochVector,
    u: f64,
    dy: f64,
    dt: f64,
    cfg: &SystemConfig,
    scheme: Scheme,
) -> Result<ExtendedBlochVector> {
    extended_step(s, u, None, dy, dt, cfg, scheme)
}

/// One Euler–Maruyama step of the risk-sensitive filter over `cfg.dt`.
pub fn risk_filter_step(
    s: &ExtendedBlochVector,
    u: f64,
    risk: RiskParams,
    dy: f64,
    cfg: &SystemConfig,
) -> Result<ExtendedBlochVector> {
    risk.validate()?;
    extended_step(s, u, Some(risk), dy, cfg.dt, cfg, Scheme::EulerMaruyama)
}

pub fn risk_filter_step_with(
    s: &ExtendedBlochVector,
    u: f64,
    risk: RiskParams,
    dy: f64,
    dt: f64,
    cfg: &SystemConfig,
    scheme: Scheme,
) -> Result<ExtendedBlochVector> {
    risk.validate()?;
    extended_step(s, u, Some(risk), dy, dt, cfg, scheme)
}

/// Drift and diffusion vectors `(f^μ, g^μ)` of the extended-state filter,
/// both linear in the state.
pub fn extended_coefficients(
    s: &ExtendedBlochVector,
    u: f64,
    risk: Option<RiskParams>,
    cfg: &SystemConfig,
) -> ([f64; 4], [f64; 4]) {
    (extended_drift(s, u, risk, cfg), extended_gain(s, cfg.kappa1.sqrt()))
}

/// Drift and diffusion of the normalized filter written against the
/// innovation (a standard Wiener process under the physical law).
pub fn normalized_coefficients(r: BlochVector, u: f64, cfg: &SystemConfig) -> (BlochVector, BlochVector) {
    (normalized_drift(r, u, cfg), normalized_gain(r, cfg.kappa1.sqrt()))
}

/// Readout `½(n − z)e^{μc2}` of the risk-sensitive criterion.
pub fn risk_cost_readout(s: &ExtendedBlochVector, mu: f64, c2: f64) -> f64 {
    0.5 * (s.n - s.z) * (mu * c2).exp()
}

/// Seeded source of independent Gaussian streams, one per path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Generator for path `path`; independent of how other paths are scheduled.
    pub fn path_rng(&self, path: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path);
        rng
    }

    /// `steps` Wiener increments `N(0, dt)` for `path`.
    pub fn increments(&self, path: u64, steps: usize, dt: f64) -> Vec<f64> {
        let mut rng = self.path_rng(path);
        let sd = dt.sqrt();
        (0..steps)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * sd
            })
            .collect()
    }

    /// A record that is a standard Wiener process, as under the reference
    /// law used by the unnormalized filters.
    pub fn reference_record(&self, path: u64, steps: usize, dt: f64) -> MeasurementRecord {
        MeasurementRecord {
            dt,
            increments: self.increments(path, steps, dt),
        }
    }
}

/// Homodyne record sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl MeasurementRecord {
    pub fn new(dt: f64, increments: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("record", "increments must be finite"));
        }
        Ok(Self { dt, increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Sums consecutive blocks of `factor` increments: the same record seen
    /// at a coarser resolution.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.len() % factor != 0 {
            return Err(Error::invalid("factor", "must divide the record length"));
        }
        Ok(Self {
            dt: self.dt * factor as f64,
            increments: self.increments.chunks(factor).map(|c| c.iter().sum()).collect(),
        })
    }
}

/// A filtered path together with the record that drove it.
#[derive(Debug, Clone)]
pub struct FilterRun {
    pub record: MeasurementRecord,
    pub times: Vec<f64>,
    pub states: Vec<FilterState>,
    pub controls: Vec<f64>,
    pub projections: usize,
}

fn step_count(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid("t_final", "must be positive"));
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

/// Samples a record from the innovations representation and co-integrates
/// the normalized filter. `control(t, r)` may feed back the filter state.
pub fn simulate_record<C>(
    cfg: &SystemConfig,
    r0: BlochVector,
    control: &C,
    noise: &NoiseSource,
    path: u64,
    t_final: f64,
) -> Result<FilterRun>
where
    C: Fn(f64, BlochVector) -> f64 + ?Sized,
{
    cfg.validate()?;
    let (steps, h) = step_count(t_final, cfg.dt)?;
    let sqrt_k1 = cfg.kappa1.sqrt();
    let mut rng = noise.path_rng(path);
    let sd = h.sqrt();
    let mut run = FilterRun {
        record: MeasurementRecord {
            dt: h,
            increments: Vec::with_capacity(steps),
        },
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps),
        projections: 0,
    };
    let mut s = FilterState::new(r0);
    run.times.push(0.0);
    run.states.push(s);
    for k in 0..steps {
        let t = k as f64 * h;
        let u = control(t, s.r);
        let g: f64 = StandardNormal.sample(&mut rng);
        let dy = g * sd + sqrt_k1 * s.r.x * h;
        let step = filter_step_normalized_with(s, u, dy, h, cfg, Scheme::EulerMaruyama);
        s = step.state;
        run.projections += step.projected as usize;
        run.record.increments.push(dy);
        run.controls.push(u);
        run.times.push((k + 1) as f64 * h);
        run.states.push(s);
    }
    Ok(run)
}

/// Runs the normalized filter on a given record.
pub fn replay_record<C>(
    cfg: &SystemConfig,
    r0: BlochVector,
    control: &C,
    record: &MeasurementRecord,
    scheme: Scheme,
) -> FilterRun
where
    C: Fn(f64, BlochVector) -> f64 + ?Sized,
{
    let h = record.dt;
    let mut run = FilterRun {
        record: record.clone(),
        times: vec![0.0],
        states: vec![FilterState::new(r0)],
        controls: Vec::with_capacity(record.len()),
        projections: 0,
    };
    let mut s = FilterState::new(r0);
    for (k, &dy) in record.increments.iter().enumerate() {
        let u = control(k as f64 * h, s.r);
        let step = filter_step_normalized_with(s, u, dy, h, cfg, scheme);
        s = step.state;
        run.projections += step.projected as usize;
        run.controls.push(u);
        run.times.push((k + 1) as f64 * h);
        run.states.push(s);
    }
    run
}

/// Runs the unnormalized filter on a given record with control `u(t)`.
pub fn run_unnormalized<C>(
    cfg: &SystemConfig,
    s0: ExtendedBlochVector,
    control: &C,
    record: &MeasurementRecord,
    scheme: Scheme,
) -> Result<Vec<ExtendedBlochVector>>
where
    C: Fn(f64) -> f64 + ?Sized,
{
    let h = record.dt;
    let mut out = Vec::with_capacity(record.len() + 1);
    let mut s = s0;
    out.push(s);
    for (k, &dy) in record.increments.iter().enumerate() {
        s = extended_step(&s, control(k as f64 * h), None, dy, h, cfg, scheme)?;
        out.push(s);
    }
    Ok(out)
}

/// Per-checkpoint sample means and standard errors of a K-component
/// quantity over an ensemble of paths.
#[derive(Debug, Clone)]
pub struct Ensemble<const K: usize> {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; K]>,
    pub std_err: Vec<[f64; K]>,
    /// Largest componentwise distance of any path from its initial sample.
    pub max_dev: Vec<f64>,
    pub paths: usize,
    pub projections: usize,
    pub steps: usize,
}

impl<const K: usize> Ensemble<K> {
    /// Fraction of filter steps that needed a projection onto the ball.
    pub fn projection_fraction(&self) -> f64 {
        self.projections as f64 / self.steps.max(1) as f64
    }
}

pub type MonteCarloSummary = Ensemble<3>;

/// Output times `k·t_final/checkpoints`, `k = 0..=checkpoints`, with a step
/// count divisible by the checkpoint count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointGrid {
    pub checkpoints: usize,
    pub steps_per_checkpoint: usize,
    pub dt: f64,
}

impl CheckpointGrid {
    pub fn new(t_final: f64, dt: f64, checkpoints: usize) -> Result<Self> {
        if checkpoints == 0 {
            return Err(Error::invalid("checkpoints", "must be at least 1"));
        }
        let (steps, _) = step_count(t_final, dt)?;
        let per = steps.div_ceil(checkpoints);
        Ok(Self {
            checkpoints,
            steps_per_checkpoint: per,
            dt: t_final / (per * checkpoints) as f64,
        })
    }

    pub fn steps(&self) -> usize {
        self.checkpoints * self.steps_per_checkpoint
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.checkpoints)
            .map(|k| (k * self.steps_per_checkpoint) as f64 * self.dt)
            .collect()
    }
}

const CHUNK: usize = 64;

/// Runs `path_fn` for every path in parallel and reduces in path order, so
/// the result does not depend on thread scheduling. `path_fn` returns the
/// checkpoint samples and its projection count.
pub fn ensemble<const K: usize, F>(n_paths: usize, grid: CheckpointGrid, path_fn: F) -> Result<Ensemble<K>>
where
    F: Fn(u64) -> Result<(Vec<[f64; K]>, usize)> + Sync,
{
    if n_paths < 2 {
        return Err(Error::invalid("paths", "need at least 2 paths"));
    }
    let points = grid.checkpoints + 1;
    let chunks: Vec<(usize, usize)> = (0..n_paths)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(n_paths)))
        .collect();
    type Partial<const K: usize> = (Vec<[f64; K]>, Vec<[f64; K]>, Vec<f64>, usize);
    let partials: Vec<Result<Partial<K>>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut sum = vec![[0.0; K]; points];
            let mut sq = vec![[0.0; K]; points];
            let mut dev = vec![0.0f64; points];
            let mut proj = 0;
            for p in start..end {
                let (samples, np) = path_fn(p as u64)?;
                proj += np;
                for (i, v) in samples.iter().enumerate() {
                    for k in 0..K {
                        sum[i][k] += v[k];
                        sq[i][k] += v[k] * v[k];
                        dev[i] = dev[i].max((v[k] - samples[0][k]).abs());
                    }
                }
            }
            Ok((sum, sq, dev, proj))
        })
        .collect();

    let mut sum = vec![[0.0; K]; points];
    let mut sq = vec![[0.0; K]; points];
    let mut max_dev = vec![0.0f64; points];
    let mut projections = 0;
    for part in partials {
        let (s, q, d, p) = part?;
        projections += p;
        for i in 0..points {
            max_dev[i] = max_dev[i].max(d[i]);
            for k in 0..K {
                sum[i][k] += s[i][k];
                sq[i][k] += q[i][k];
            }
        }
    }
    let n = n_paths as f64;
    let mut mean = vec![[0.0; K]; points];
    let mut std_err = vec![[0.0; K]; points];
    for i in 0..points {
        for k in 0..K {
            let m = sum[i][k] / n;
            let var = ((sq[i][k] - n * m * m) / (n - 1.0)).max(0.0);
            mean[i][k] = m;
            std_err[i][k] = (var / n).sqrt();
        }
    }
    Ok(Ensemble {
        times: grid.times(),
        mean,
        std_err,
        max_dev,
        paths: n_paths,
        projections,
        steps: n_paths * grid.steps(),
    })
}

/// Ensemble mean of the normalized filter under the physical law.
pub fn monte_carlo_mean<C>(
    cfg: &SystemConfig,
    r0: BlochVector,
    control: &C,
    n_paths: usize,
    t_final: f64,
    checkpoints: usize,
    noise: &NoiseSource,
) -> Result<MonteCarloSummary>
where
    C: Fn(f64, BlochVector) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    let grid = CheckpointGrid::new(t_final, cfg.dt, checkpoints)?;
    let h = grid.dt;
    let sqrt_k1 = cfg.kappa1.sqrt();
    let sd = h.sqrt();
    ensemble(n_paths, grid, |path| {
        let mut rng = noise.path_rng(path);
        let mut s = FilterState::new(r0);
        let mut samples = Vec::with_capacity(grid.checkpoints + 1);
        samples.push(r0.to_array());
        let mut proj = 0;
        for k in 0..grid.steps() {
            let u = control(k as f64 * h, s.r);
            let g: f64 = StandardNormal.sample(&mut rng);
            let dy = g * sd + sqrt_k1 * s.r.x * h;
            let step = filter_step_normalized_with(s, u, dy, h, cfg, Scheme::EulerMaruyama);
            s = step.state;
            proj += step.projected as usize;
            if (k + 1) % grid.steps_per_checkpoint == 0 {
                samples.push(s.r.to_array());
            }
        }
        Ok((samples, proj))
    })
}

/// Ensemble mean of the uncontrolled unnormalized filter driven by
/// reference-law records (standard Wiener increments).
pub fn monte_carlo_unnormalized(
    cfg: &SystemConfig,
    s0: ExtendedBlochVector,
    n_paths: usize,
    t_final: f64,
    checkpoints: usize,
    noise: &NoiseSource,
) -> Result<Ensemble<4>> {
    cfg.validate()?;
    let grid = CheckpointGrid::new(t_final, cfg.dt, checkpoints)?;
    let h = grid.dt;
    let sd = h.sqrt();
    ensemble(n_paths, grid, |path| {
        let mut rng = noise.path_rng(path);
        let mut s = s0;
        let mut samples = Vec::with_capacity(grid.checkpoints + 1);
        samples.push(s.to_array());
        for k in 0..grid.steps() {
            let g: f64 = StandardNormal.sample(&mut rng);
            s = extended_step(&s, 0.0, None, g * sd, h, cfg, Scheme::EulerMaruyama)?;
            if (k + 1) % grid.steps_per_checkpoint == 0 {
                samples.push(s.to_array());
            }
        }
        Ok((samples, 0))
    })
}

/// Running and terminal cost of a closed-loop path.
pub trait PathCost: Sync {
    fn running(&self, r: BlochVector, u: f64) -> f64;
    fn terminal(&self, r: BlochVector) -> f64;
}

/// Realized cost of each path of the normalized filter under `control`.
/// Path `i` uses noise stream `i`, so two controls evaluated with the same
/// source see common random numbers.
pub fn path_costs<C, P>(
    cfg: &SystemConfig,
    r0: BlochVector,
    control: &C,
    cost: &P,
    n_paths: usize,
    t_final: f64,
    noise: &NoiseSource,
) -> Result<Vec<f64>>
where
    C: Fn(f64, BlochVector) -> f64 + Sync + ?Sized,
    P: PathCost,
{
    cfg.validate()?;
    let (steps, h) = step_count(t_final, cfg.dt)?;
    let sqrt_k1 = cfg.kappa1.sqrt();
    let sd = h.sqrt();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = noise.path_rng(path);
            let mut s = FilterState::new(r0);
            let mut total = 0.0;
            for k in 0..steps {
                let u = control(k as f64 * h, s.r);
                total += cost.running(s.r, u) * h;
                let g: f64 = StandardNormal.sample(&mut rng);
                let dy = g * sd + sqrt_k1 * s.r.x * h;
                s = filter_step_normalized_with(s, u, dy, h, cfg, Scheme::EulerMaruyama).state;
            }
            total + cost.terminal(s.r)
        })
        .collect())
}

/// Sample mean and standard error.
pub fn mean_and_std_err(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{bloch_components, lindblad_dissipator, sigma_minus, sigma_x, sigma_z, C64, I};

    fn cfg() -> SystemConfig {
        SystemConfig::new(1.0, 0.5, 0.5, 1e-3).unwrap()
    }

    /// One Euler step of the operator-form filters, computed with matrices.
    fn operator_step(rho: &ComplexMatrix, u: f64, risk: Option<RiskParams>, dy: f64, dt: f64, c: &SystemConfig, normalized: bool) -> ComplexMatrix {
        let h = (&sigma_z().scale_real(c.omega) + &sigma_x().scale_real(u)).scale_real(0.5);
        let l1 = sigma_minus().scale_real(c.kappa1.sqrt());
        let l2 = sigma_minus().scale_real(c.kappa2.sqrt());
        let mut drift = rho.commutator(&h).unwrap().scale(I);
        drift += &lindblad_dissipator(&l1, rho).unwrap();
        drift += &lindblad_dissipator(&l2, rho).unwrap();
        if let Some(RiskParams { mu, c1 }) = risk {
            let cu = 0.5 * c1 * u * u;
            let cost = ComplexMatrix::diag(&[C64::new(cu, 0.0), C64::new(1.0 + cu, 0.0)]);
            drift += &rho.anticommutator(&cost).unwrap().scale_real(0.5 * mu);
        }
        let mut gain = &(&l1 * rho) + &(rho * &l1.adjoint());
        let mut increment = dy;
        if normalized {
            let mean = (&(&l1 + &l1.adjoint()) * rho).trace().re;
            gain = &gain - &rho.scale_real(mean);
            increment = dy - mean * dt;
        }
        &(rho + &drift.scale_real(dt)) + &gain.scale_real(increment)
    }

    #[test]
    fn normalized_matches_operator_form() {
        let c = cfg();
        let r = BlochVector::new(0.3, -0.4, 0.2);
        let (u, dy, dt) = (0.7, 0.013, 1e-3);
        let bloch = filter_step_normalized_with(FilterState::new(r), u, dy, dt, &c, Scheme::EulerMaruyama);
        let op = operator_step(&bloch_matrix(1.0, r), u, None, dy, dt, &c, true);
        let (n, expect) = bloch_components(&op);
        assert!((n - 1.0).abs() < 1e-14);
        assert!(bloch.state.r.max_abs_diff(expect) < 1e-14);
    }

    #[test]
    fn unnormalized_and_risk_match_operator_form() {
        let c = cfg();
        let s = ExtendedBlochVector::new(1.3, 0.3, -0.4, 0.2);
        let (u, dy) = (0.7, -0.021);
        let next = filter_step_unnormalized(&s, u, dy, &c).unwrap();
        let op = operator_step(&s.matrix(), u, None, dy, c.dt, &c, false);
        let (n, r) = bloch_components(&op);
        assert!(next.max_abs_diff(&ExtendedBlochVector::new(n, r.x, r.y, r.z)) < 1e-14);

        let risk = RiskParams { mu: 0.8, c1: 0.3 };
        let next = risk_filter_step(&s, u, risk, dy, &c).unwrap();
        let op = operator_step(&s.matrix(), u, Some(risk), dy, c.dt, &c, false);
        let (n, r) = bloch_components(&op);
        assert!(next.max_abs_diff(&ExtendedBlochVector::new(n, r.x, r.y, r.z)) < 1e-14);
    }

    #[test]
    fn ground_state_is_fixed() {
        let c = cfg();
        for dy in [-0.1, 0.0, 0.05] {
            let s = filter_step_normalized(FilterState::new(BlochVector::GROUND), 0.0, dy, &c);
            assert_eq!(s.state.r, BlochVector::GROUND);
            let e = filter_step_unnormalized(&ExtendedBlochVector::new(1.0, 0.0, 0.0, -1.0), 0.0, dy, &c).unwrap();
            assert_eq!(e, ExtendedBlochVector::new(1.0, 0.0, 0.0, -1.0));
        }
    }

    #[test]
    fn no_measurement_channel_is_deterministic() {
        let c = SystemConfig::new(1.0, 0.0, 0.8, 1e-3).unwrap();
        let r = BlochVector::new(0.3, 0.1, -0.2);
        let a = filter_step_normalized(FilterState::new(r), 0.2, 0.5, &c);
        let b = filter_step_normalized(FilterState::new(r), 0.2, -0.5, &c);
        assert_eq!(a, b);
        let expect = r.axpy(c.dt, bloch_rhs(r, 0.2, c.omega, c.kappa()));
        assert!(a.state.r.max_abs_diff(expect) < 1e-16);
    }

    #[test]
    fn projection_keeps_state_in_ball() {
        let c = SystemConfig::new(0.0, 4.0, 0.0, 1e-2).unwrap();
        let s = filter_step_normalized(FilterState::new(BlochVector::new(0.0, 0.6, 0.8)), 0.0, 0.5, &c);
        assert!(s.projected);
        assert!((s.state.r.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let r = normalize(&ExtendedBlochVector::new(1.0, 0.1, 0.2, 0.3)).unwrap();
        assert_eq!(r.r, BlochVector::new(0.1, 0.2, 0.3));
        let r = normalize(&ExtendedBlochVector::new(2.0, 0.0, 0.0, -2.0)).unwrap();
        assert_eq!(r.r, BlochVector::GROUND);
        assert!(normalize(&ExtendedBlochVector::new(0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(normalize(&ExtendedBlochVector::new(-1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn collapse_is_reported() {
        let c = SystemConfig::new(0.0, 1.0, 0.0, 1e-3).unwrap();
        let s = ExtendedBlochVector::new(0.01, 0.9, 0.0, 0.0);
        assert!(matches!(
            filter_step_unnormalized(&s, 0.0, -1.0, &c),
            Err(Error::NormalizationCollapse(_))
        ));
    }

    #[test]
    fn risk_filter_zero_mu_reduces_exactly() {
        let c = cfg();
        let s = ExtendedBlochVector::new(0.9, 0.2, 0.3, -0.5);
        let a = risk_filter_step(&s, 1.5, RiskParams { mu: 0.0, c1: 0.1 }, 0.02, &c).unwrap();
        let b = filter_step_unnormalized(&s, 1.5, 0.02, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn risk_params_validation() {
        let c = cfg();
        let s = ExtendedBlochVector::new(1.0, 0.0, 0.0, 0.0);
        assert!(risk_filter_step(&s, 0.0, RiskParams { mu: -1.0, c1: 0.1 }, 0.0, &c).is_err());
        assert!(risk_filter_step(&s, 0.0, RiskParams { mu: 1.0, c1: 0.0 }, 0.0, &c).is_err());
    }

    #[test]
    fn cost_readout() {
        let s = ExtendedBlochVector::new(1.0, 0.0, 0.0, -1.0);
        assert_eq!(risk_cost_readout(&s, 0.0, 1.0), 1.0);
    }

    #[test]
    fn replay_is_bit_exact() {
        let c = cfg();
        let noise = NoiseSource::new(7);
        let ctrl = |t: f64, r: BlochVector| 0.3 * r.y - t;
        let run = simulate_record(&c, BlochVector::new(0.0, 0.5, 0.0), &ctrl, &noise, 3, 0.5).unwrap();
        let again = replay_record(&c, BlochVector::new(0.0, 0.5, 0.0), &ctrl, &run.record, Scheme::EulerMaruyama);
        assert_eq!(run.states, again.states);
        assert_eq!(run.controls, again.controls);
        let twin = simulate_record(&c, BlochVector::new(0.0, 0.5, 0.0), &ctrl, &noise, 3, 0.5).unwrap();
        assert_eq!(run.record, twin.record);
    }

    #[test]
    fn streams_are_order_independent() {
        let noise = NoiseSource::new(11);
        let a = noise.increments(5, 10, 1e-3);
        let _ = noise.increments(4, 10, 1e-3);
        assert_eq!(a, noise.increments(5, 10, 1e-3));
        assert_ne!(a, noise.increments(6, 10, 1e-3));
    }

    #[test]
    fn record_coarsening() {
        let rec = MeasurementRecord::new(0.5, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let coarse = rec.coarsen(2).unwrap();
        assert_eq!(coarse.dt, 1.0);
        assert_eq!(coarse.increments, vec![3.0, 7.0]);
        assert!(rec.coarsen(3).is_err());
        assert!(MeasurementRecord::new(0.1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn monte_carlo_initial_checkpoint_is_exact() {
        let c = cfg();
        let r0 = BlochVector::new(0.1, 0.2, 0.3);
        let mc = monte_carlo_mean(&c, r0, &|_, _| 0.0, 16, 0.1, 5, &NoiseSource::new(1)).unwrap();
        for k in 0..3 {
            assert!((mc.mean[0][k] - r0.to_array()[k]).abs() < 1e-15);
            assert!(mc.std_err[0][k] < 1e-7);
        }
        assert_eq!(mc.times.len(), 6);
        assert!(monte_carlo_mean(&c, r0, &|_, _| 0.0, 1, 0.1, 5, &NoiseSource::new(1)).is_err());
    }
}
