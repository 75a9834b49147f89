//! Continuous Bloch-ball dynamics punctuated by instantaneous rotations about
//! the x axis.

use serde::{Deserialize, Serialize};

use crate::algebra::BlochVector;
use crate::error::{Error, Result};

/// Physical constants of the driven, damped atom and the integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub omega: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    1e-3
}

impl SystemConfig {
    pub fn new(omega: f64, kappa1: f64, kappa2: f64, dt: f64) -> Result<Self> {
        let cfg = Self {
            omega,
            kappa1,
            kappa2,
            dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::invalid("omega", "must be finite"));
        }
        if !(self.kappa1 >= 0.0 && self.kappa1.is_finite()) {
            return Err(Error::invalid("kappa1", "must be finite and nonnegative"));
        }
        if !(self.kappa2 >= 0.0 && self.kappa2.is_finite()) {
            return Err(Error::invalid("kappa2", "must be finite and nonnegative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        Ok(())
    }

    /// Total decay rate `κ1 + κ2`.
    pub fn kappa(&self) -> f64 {
        self.kappa1 + self.kappa2
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicImpulses {
    pub period: f64,
    pub angle: f64,
}

/// Time-ordered impulse sequence, optionally extended by a periodic train
/// firing at `period, 2·period, …`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ImpulseSchedule {
    entries: Vec<(f64, f64)>,
    periodic: Option<PeriodicImpulses>,
}

#[derive(Deserialize)]
struct RawSchedule {
    #[serde(default)]
    entries: Vec<(f64, f64)>,
    #[serde(default)]
    periodic: Option<PeriodicImpulses>,
}

impl TryFrom<RawSchedule> for ImpulseSchedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        let mut s = ImpulseSchedule::new(raw.entries)?;
        if let Some(p) = raw.periodic {
            s = s.with_periodic(p.period, p.angle)?;
        }
        Ok(s)
    }
}

/// One rotation fired at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub angle: f64,
}

impl ImpulseSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `entries` are `(time, angle)` pairs with strictly increasing times.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        for (t, v) in &entries {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::invalid("schedule", format!("impulse time {t} must be ≥ 0")));
            }
            if !v.is_finite() {
                return Err(Error::invalid("schedule", "impulse angle must be finite"));
            }
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("schedule", "impulse times must be strictly increasing"));
        }
        Ok(Self {
            entries,
            periodic: None,
        })
    }

    pub fn periodic(period: f64, angle: f64) -> Result<Self> {
        Self::empty().with_periodic(period, angle)
    }

    pub fn with_periodic(mut self, period: f64, angle: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid("period", "must be positive"));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("angle", "must be finite"));
        }
        self.periodic = Some(PeriodicImpulses { period, angle });
        Ok(self)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn periodic_part(&self) -> Option<PeriodicImpulses> {
        self.periodic
    }

    /// All impulses with `time ≤ t_final`, ordered by time. Explicit entries
    /// precede a periodic impulse at the same instant.
    pub fn impulses_until(&self, t_final: f64) -> Vec<Impulse> {
        let mut out: Vec<Impulse> = self
            .entries
            .iter()
            .filter(|(t, _)| *t <= t_final)
            .map(|&(time, angle)| Impulse { time, angle })
            .collect();
        if let Some(p) = self.periodic {
            let mut k = 1u64;
            loop {
                let time = k as f64 * p.period;
                if time > t_final * (1.0 + 1e-12) {
                    break;
                }
                out.push(Impulse {
                    time: time.min(t_final),
                    angle: p.angle,
                });
                k += 1;
            }
        }
        // stable sort keeps explicit entries first on ties
        out.sort_by(|a, b| a.time.total_cmp(&b.time));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Unitary evolution on the sphere.
    Closed,
    /// Field-induced decay with total rate `κ1 + κ2`.
    Relaxing,
}

/// Sampled hybrid trajectory. At an impulse time both the pre- and the
/// post-impulse state are stored; `events` holds the post-impulse indices.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    pub events: Vec<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> BlochVector {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn is_event(&self, index: usize) -> bool {
        self.events.binary_search(&index).is_ok()
    }

    /// Post-impulse states in firing order.
    pub fn post_impulse_states(&self) -> impl Iterator<Item = (f64, BlochVector)> + '_ {
        self.events.iter().map(|&k| (self.times[k], self.states[k]))
    }
}

/// Bloch-ball vector field with control about x and decay rate `kappa`.
pub fn bloch_rhs(r: BlochVector, u: f64, omega: f64, kappa: f64) -> BlochVector {
    BlochVector::new(
        -0.5 * kappa * r.x - omega * r.y,
        omega * r.x - 0.5 * kappa * r.y - u * r.z,
        u * r.y - kappa * r.z - kappa,
    )
}

/// `ṙ = [[0,−ω,0],[ω,0,−u],[0,u,0]] r`
pub fn closed_bloch_rhs(r: BlochVector, u: f64, omega: f64) -> BlochVector {
    BlochVector::new(-omega * r.y, omega * r.x - u * r.z, u * r.y)
}

/// Uncontrolled decay towards the ground state.
pub fn relaxation_bloch_rhs(r: BlochVector, omega: f64, kappa: f64) -> BlochVector {
    bloch_rhs(r, 0.0, omega, kappa)
}

/// Rotation by `v` in the yz plane, the Bloch image of `exp(−ivσx)`.
pub fn apply_impulse(r: BlochVector, v: f64) -> BlochVector {
    let (s, c) = v.sin_cos();
    BlochVector::new(r.x, c * r.y - s * r.z, s * r.y + c * r.z)
}

/// One classical Runge–Kutta step of `ṙ = f(t, r)`.
pub fn rk4_step<F>(t: f64, r: BlochVector, h: f64, f: F) -> BlochVector
where
    F: Fn(f64, BlochVector) -> BlochVector,
{
    let k1 = f(t, r);
    let k2 = f(t + 0.5 * h, r.axpy(0.5 * h, k1));
    let k3 = f(t + 0.5 * h, r.axpy(0.5 * h, k2));
    let k4 = f(t + h, r.axpy(h, k3));
    r.axpy(h / 6.0, k1 + k2.scale(2.0) + k3.scale(2.0) + k4)
}

fn vector_field(cfg: &SystemConfig, mode: Mode) -> (f64, f64) {
    match mode {
        Mode::Closed => (cfg.omega, 0.0),
        Mode::Relaxing => (cfg.omega, cfg.kappa()),
    }
}

/// Integrates from `t0` to `t1` in equal steps no longer than `cfg.dt`,
/// calling `sink` after each step.
fn integrate_segment<C, S>(
    cfg: &SystemConfig,
    mode: Mode,
    control: &C,
    t0: f64,
    t1: f64,
    mut r: BlochVector,
    mut sink: S,
) -> BlochVector
where
    C: Fn(f64, BlochVector) -> f64 + ?Sized,
    S: FnMut(f64, BlochVector),
{
    let span = t1 - t0;
    if span <= 0.0 {
        return r;
    }
    let steps = ((span / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let (omega, kappa) = vector_field(cfg, mode);
    let field = |t: f64, s: BlochVector| bloch_rhs(s, control(t, s), omega, kappa);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        r = rk4_step(t, r, h, field);
        let t_next = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        sink(t_next, r);
    }
    r
}

/// Simulates the hybrid system from `r0` over `[0, t_final]`.
///
/// `control(t, r)` is the continuous control signal; it may depend on the
/// state, in which case it acts as state feedback. Impulses fire after the
/// flow reaches their time (right-limit convention).
pub fn simulate_hybrid<C>(
    cfg: &SystemConfig,
    schedule: &ImpulseSchedule,
    r0: BlochVector,
    control: &C,
    t_final: f64,
    mode: Mode,
) -> Result<Trajectory>
where
    C: Fn(f64, BlochVector) -> f64 + ?Sized,
{
    cfg.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid("t_final", "must be positive"));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![r0],
        events: Vec::new(),
    };
    let mut t = 0.0;
    let mut r = r0;
    for imp in schedule.impulses_until(t_final) {
        r = integrate_segment(cfg, mode, control, t, imp.time, r, |s, v| {
            traj.times.push(s);
            traj.states.push(v);
        });
        t = imp.time;
        r = apply_impulse(r, imp.angle);
        traj.times.push(t);
        traj.states.push(r);
        traj.events.push(traj.states.len() - 1);
    }
    integrate_segment(cfg, mode, control, t, t_final, r, |s, v| {
        traj.times.push(s);
        traj.states.push(v);
    });
    Ok(traj)
}

/// Flow of the uncontrolled relaxing dynamics over `duration` using RK4.
pub fn relax_flow(cfg: &SystemConfig, r: BlochVector, duration: f64) -> BlochVector {
    integrate_segment(cfg, Mode::Relaxing, &|_, _| 0.0, 0.0, duration, r, |_, _| {})
}

/// Affine map `r ↦ M r + b` taking a post-impulse state to the next one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePeriodMap {
    pub matrix: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl AffinePeriodMap {
    /// Exact period map of the relaxing flow followed by a rotation `v`.
    pub fn new(cfg: &SystemConfig, period: f64, v: f64) -> Self {
        let kappa = cfg.kappa();
        let decay_xy = (-0.5 * kappa * period).exp();
        let decay_z = (-kappa * period).exp();
        let (s, c) = (cfg.omega * period).sin_cos();
        let flow = [
            [decay_xy * c, -decay_xy * s, 0.0],
            [decay_xy * s, decay_xy * c, 0.0],
            [0.0, 0.0, decay_z],
        ];
        let flow_offset = [0.0, 0.0, decay_z - 1.0];
        let (sv, cv) = v.sin_cos();
        let rot = [[1.0, 0.0, 0.0], [0.0, cv, -sv], [0.0, sv, cv]];
        let mut matrix = [[0.0; 3]; 3];
        let mut offset = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                matrix[i][j] = (0..3).map(|k| rot[i][k] * flow[k][j]).sum();
            }
            offset[i] = (0..3).map(|k| rot[i][k] * flow_offset[k]).sum();
        }
        Self { matrix, offset }
    }

    pub fn apply(&self, r: BlochVector) -> BlochVector {
        let a = r.to_array();
        let out: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| self.matrix[i][j] * a[j]).sum::<f64>() + self.offset[i])
            .collect();
        BlochVector::new(out[0], out[1], out[2])
    }

    /// Solves `(I − M) r* = b`.
    pub fn fixed_point(&self) -> Result<BlochVector> {
        let mut a = [[0.0; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - self.matrix[i][j];
            }
            a[i][3] = self.offset[i];
        }
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
                .unwrap();
            if a[pivot][col].abs() < 1e-14 {
                return Err(Error::invalid("period map", "I − M is singular; no unique fixed point"));
            }
            a.swap(col, pivot);
            for row in 0..3 {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    for k in col..4 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        Ok(BlochVector::new(a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    /// Post-impulse fixed point found by iterating the simulated period map.
    pub state: BlochVector,
    pub iterations: usize,
    /// Fixed point of the exact affine period map.
    pub analytic: BlochVector,
}

/// Post-impulse periodic steady state under a train of rotations `v`
/// every `period`, starting from the ground state.
pub fn periodic_steady_state(
    cfg: &SystemConfig,
    period: f64,
    v: f64,
    opts: SteadyStateOptions,
) -> Result<SteadyState> {
    cfg.validate()?;
    if !(cfg.kappa() > 0.0) {
        return Err(Error::invalid("kappa1", "total decay rate must be positive for a steady state"));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("period", "must be positive"));
    }
    let analytic = AffinePeriodMap::new(cfg, period, v).fixed_point()?;
    let mut r = BlochVector::GROUND;
    for it in 1..=opts.max_iterations {
        let next = apply_impulse(relax_flow(cfg, r, period), v);
        let diff = next.max_abs_diff(r);
        r = next;
        if diff < opts.tol {
            return Ok(SteadyState {
                state: r,
                iterations: it,
                analytic,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: r.max_abs_diff(apply_impulse(relax_flow(cfg, r, period), v)),
    })
}
