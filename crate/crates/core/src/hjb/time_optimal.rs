//! Minimum time to steer a pure state to a target on the sphere with
//! `|u| ≤ 1`, in polar coordinates:
//!
//! `θ̇ = −u sinφ`, `φ̇ = ω − u cotθ cosφ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{angular_distance, bloch_to_polar, PolarGrid};
use super::{FeedbackLaw, ResidualReport, SolverConfig, ValueFunction};
use crate::algebra::BlochVector;
use crate::error::{Error, Result};
use crate::hybrid::{closed_bloch_rhs, rk4_step};

const CONTROLS: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeOptimalSolution {
    pub value: ValueFunction<PolarGrid>,
    pub omega: f64,
    /// Target node `(i, j)`.
    pub target: (usize, usize),
    /// Nodes held at zero: the target and its neighbours.
    pub clamped: Vec<usize>,
    /// Every sweep was nodewise non-decreasing.
    pub monotone: bool,
}

impl TimeOptimalSolution {
    pub fn grid(&self) -> &PolarGrid {
        &self.value.grid
    }

    pub fn target_point(&self) -> BlochVector {
        self.grid().point(self.target.0, self.target.1)
    }

    /// Interpolated minimum time from `r`.
    pub fn value_at(&self, r: BlochVector) -> f64 {
        self.grid().interpolate_at(&self.value.values, r)
    }
}

/// Upwind fixed-point candidate `(1 + Σ w S_nb)/Σ w` for control `u`, with
/// `Σ w`. `None` when the velocity vanishes.
fn candidate(grid: &PolarGrid, values: &[f64], i: usize, j: usize, u: f64, omega: f64) -> Option<(f64, f64)> {
    let (theta, phi) = (grid.theta(i), grid.phi(j));
    let b_theta = -u * phi.sin();
    let b_phi = omega - u * phi.cos() / theta.tan();
    let w_theta = b_theta.abs() / grid.d_theta();
    let w_phi = b_phi.abs() / grid.d_phi();
    let w = w_theta + w_phi;
    if w == 0.0 {
        return None;
    }
    let mut acc = 1.0;
    if w_theta > 0.0 {
        let (ni, nj) = grid.step_theta(i, j, if b_theta > 0.0 { 1 } else { -1 });
        acc += w_theta * values[grid.index(ni, nj)];
    }
    if w_phi > 0.0 {
        let nj = grid.wrap_phi(j as isize + if b_phi > 0.0 { 1 } else { -1 });
        acc += w_phi * values[grid.index(i, nj)];
    }
    Some((acc / w, w))
}

fn best_candidate(grid: &PolarGrid, values: &[f64], k: usize, omega: f64) -> (f64, f64) {
    let (i, j) = grid.coords(k);
    CONTROLS
        .iter()
        .filter_map(|&u| candidate(grid, values, i, j, u, omega))
        .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best })
}

/// Value iteration for the minimum-time function. `target` is `(θf, φf)`,
/// snapped to the nearest node.
pub fn solve_time_optimal(
    grid: PolarGrid,
    omega: f64,
    target: (f64, f64),
    cfg: &SolverConfig,
) -> Result<TimeOptimalSolution> {
    let target = grid.nearest(target.0, target.1);
    let clamped = grid.target_block(target.0, target.1);
    solve_time_optimal_to_set(grid, omega, target, clamped, cfg)
}

/// Same as [`solve_time_optimal`] with an explicit set of nodes held at zero;
/// `target` is the node reported as the target. Used for refinement studies
/// where the target region must stay fixed as the grid is refined.
pub fn solve_time_optimal_to_set(
    grid: PolarGrid,
    omega: f64,
    target: (usize, usize),
    clamped: Vec<usize>,
    cfg: &SolverConfig,
) -> Result<TimeOptimalSolution> {
    cfg.validate()?;
    if !omega.is_finite() {
        return Err(Error::invalid("omega", "must be finite"));
    }
    if clamped.is_empty() || clamped.iter().any(|&k| k >= grid.len()) {
        return Err(Error::invalid("target", "target set must be nonempty nodes of the grid"));
    }
    let mut is_clamped = vec![false; grid.len()];
    for &k in &clamped {
        is_clamped[k] = true;
    }

    let mut values = vec![0.0; grid.len()];
    let mut next = vec![0.0; grid.len()];
    let mut monotone = true;
    let mut residual = f64::INFINITY;
    for sweep in 1..=cfg.max_sweeps {
        residual = next
            .par_iter_mut()
            .enumerate()
            .map(|(k, out)| {
                if is_clamped[k] {
                    *out = 0.0;
                    return 0.0;
                }
                let (s, w) = best_candidate(&grid, &values, k, omega);
                *out = s;
                (s - values[k]).abs() * w
            })
            .reduce(|| 0.0, f64::max);
        monotone &= next.iter().zip(&values).all(|(n, o)| n >= o);
        std::mem::swap(&mut values, &mut next);
        if !residual.is_finite() {
            break;
        }
        if residual < cfg.tol {
            return Ok(TimeOptimalSolution {
                value: ValueFunction {
                    grid,
                    values,
                    converged: true,
                    residual,
                    iterations: sweep,
                },
                omega,
                target,
                clamped,
                monotone,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_sweeps,
        residual,
    })
}

/// Switching function `Sθ sinφ + Sφ cotθ cosφ` from centred differences.
fn switching(sol: &TimeOptimalSolution, k: usize) -> f64 {
    let g = sol.grid();
    let s = &sol.value.values;
    let (i, j) = g.coords(k);
    let (ip, jp) = g.step_theta(i, j, 1);
    let (im, jm) = g.step_theta(i, j, -1);
    let s_theta = (s[g.index(ip, jp)] - s[g.index(im, jm)]) / (2.0 * g.d_theta());
    let s_phi = (s[g.index(i, g.wrap_phi(j as isize + 1))] - s[g.index(i, g.wrap_phi(j as isize - 1))])
        / (2.0 * g.d_phi());
    let (theta, phi) = (g.theta(i), g.phi(j));
    s_theta * phi.sin() + s_phi * phi.cos() / theta.tan()
}

/// `sign(0) = +1`
fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub type BangBangLaw = FeedbackLaw<PolarGrid>;

impl FeedbackLaw<PolarGrid> {
    /// Control at the node nearest to `r`.
    pub fn control_at(&self, r: BlochVector) -> f64 {
        let (i, j) = self.grid.nearest_to(r);
        self.controls[self.grid.index(i, j)]
    }
}

/// Nodewise bang-bang law `u* = sign(Sθ sinφ + Sφ cotθ cosφ)`.
pub fn extract_bang_bang(sol: &TimeOptimalSolution) -> BangBangLaw {
    FeedbackLaw {
        grid: *sol.grid(),
        controls: (0..sol.grid().len()).map(|k| sign(switching(sol, k))).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub reached: bool,
    pub time: f64,
    pub final_state: BlochVector,
    /// Value function at the start.
    pub predicted: f64,
}

/// Integrates the closed dynamics under the bang-bang law until the state is
/// within `radius` (great-circle angle) of the target, or `t_max` elapses.
pub fn rollout_bang_bang(
    sol: &TimeOptimalSolution,
    law: &BangBangLaw,
    start: BlochVector,
    dt: f64,
    radius: f64,
    t_max: f64,
) -> Rollout {
    let target = sol.target_point();
    let omega = sol.omega;
    let mut r = start;
    let mut t = 0.0;
    let mut reached = angular_distance(r, target) <= radius;
    while !reached && t < t_max {
        let u = law.control_at(r);
        r = rk4_step(t, r, dt, |_, s| closed_bloch_rhs(s, u, omega));
        r = r.scale(1.0 / r.norm());
        t += dt;
        reached = angular_distance(r, target) <= radius;
    }
    Rollout {
        reached,
        time: t,
        final_state: r,
        predicted: sol.value_at(start),
    }
}

pub(crate) fn scheme_residual(sol: &TimeOptimalSolution) -> ResidualReport {
    let g = sol.grid();
    let s = &sol.value.values;
    ResidualReport::from_abs((0..g.len()).filter(|k| !sol.clamped.contains(k)).map(|k| {
        let (i, j) = g.coords(k);
        CONTROLS
            .iter()
            .filter_map(|&u| candidate(g, s, i, j, u, sol.omega))
            .map(|(c, w)| w * (c - s[k]))
            .fold(f64::INFINITY, f64::min)
            .abs()
    }))
}

pub(crate) fn rectangular_residual(sol: &TimeOptimalSolution) -> ResidualReport {
    let g = sol.grid();
    let s = &sol.value.values;
    let eps = 0.5 * g.d_theta();
    let value = |p: BlochVector| {
        let (t, f) = bloch_to_polar(p);
        g.interpolate(s, t, f)
    };
    let derivative = |r: BlochVector, v: BlochVector| (value(r.axpy(eps, v)) - value(r.axpy(-eps, v))) / (2.0 * eps);
    ResidualReport::from_abs((0..g.len()).filter(|k| !sol.clamped.contains(k)).map(|k| {
        let (i, j) = g.coords(k);
        let r = g.point(i, j);
        let drift = closed_bloch_rhs(r, 0.0, sol.omega);
        let control = closed_bloch_rhs(r, 1.0, 0.0);
        (derivative(r, drift) + 1.0 - derivative(r, control).abs()).abs()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn solve(n: usize) -> TimeOptimalSolution {
        let grid = PolarGrid::new(n, 2 * n).unwrap();
        solve_time_optimal(grid, 1.0, (FRAC_PI_2, 0.0), &SolverConfig::default()).unwrap()
    }

    #[test]
    fn target_is_zero_and_values_nonnegative() {
        let sol = solve(16);
        let k = sol.grid().index(sol.target.0, sol.target.1);
        assert_eq!(sol.value.values[k], 0.0);
        assert!(sol.value.values.iter().all(|&v| v >= 0.0 && v.is_finite()));
        assert!(sol.monotone);
        assert!(sol.value.converged);
        assert_eq!(sol.value_at(sol.target_point()), 0.0);
    }

    #[test]
    fn law_is_bang_bang() {
        let sol = solve(16);
        let law = extract_bang_bang(&sol);
        assert!(law.controls.iter().all(|&u| u == 1.0 || u == -1.0));
        assert_eq!(sign(0.0), 1.0);
    }

    #[test]
    fn scheme_residual_is_small_and_detects_perturbation() {
        let mut sol = solve(16);
        let rep = scheme_residual(&sol);
        assert!(rep.max <= 10.0 * 1e-6, "{rep:?}");
        let g = *sol.grid();
        let k = g.index(3, 5);
        sol.value.values[k] += 0.1;
        let rep = scheme_residual(&sol);
        assert!(rep.max >= 0.1 / g.d_phi(), "{rep:?}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        let grid = PolarGrid::new(16, 32).unwrap();
        let cfg = SolverConfig {
            tol: 1e-6,
            max_sweeps: 3,
        };
        assert!(matches!(
            solve_time_optimal(grid, 1.0, (FRAC_PI_2, 0.0), &cfg),
            Err(Error::NoConvergence { .. })
        ));
    }
}
