//! Explicit backward marching of
//!
//! `∂S/∂t + F(r,u)·∇S + ½|β|² ∂²S/∂β̂² + p(r,u)·S + c(r,u) = 0`
//!
//! on a [`BallGrid`], with `u` chosen from the current value and its centred
//! gradient. Advection is first-order upwind; the diffusion is a second
//! difference along `β̂ = β/|β|` with trilinear off-lattice values, so all
//! stencil weights are nonnegative under the CFL bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::BallGrid;
use crate::error::{Error, Result};

/// CFL safety factor.
const SAFETY: f64 = 0.5;

pub(crate) struct Coefficients {
    pub drift: [f64; 3],
    pub diffusion: [f64; 3],
    pub potential: f64,
    pub source: f64,
}

pub(crate) trait MarchModel: Sync {
    /// Control at `r` from the value there and its gradient, and whether the
    /// divisor guard fired.
    fn control(&self, r: [f64; 3], value: f64, grad: [f64; 3]) -> (f64, bool);
    fn coefficients(&self, r: [f64; 3], u: f64) -> Coefficients;
    fn terminal(&self, r: [f64; 3]) -> f64;
    fn umax(&self) -> f64;
}

/// How the requested time grid was refined to respect the CFL bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchReport {
    pub requested_steps: usize,
    /// Internal steps per requested step.
    pub substeps: usize,
    pub dt: f64,
    /// Largest stable step, `SAFETY / max rate`.
    pub cfl_dt: f64,
    /// Nodes where the control fell back to zero because the value was
    /// too small to divide by.
    pub guard_events: usize,
}

impl MarchReport {
    pub fn refined(&self) -> bool {
        self.substeps > 1
    }
}

pub(crate) struct MarchOutput {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub law: Vec<Vec<f64>>,
    pub report: MarchReport,
}

fn rate(c: &Coefficients, h: f64) -> f64 {
    let adv: f64 = c.drift.iter().map(|f| f.abs()).sum::<f64>() / h;
    let diff: f64 = c.diffusion.iter().map(|b| b * b).sum::<f64>() / (h * h);
    adv + diff
}

struct Stepper<'a, M> {
    grid: &'a BallGrid,
    model: &'a M,
    interior: Vec<usize>,
}

impl<M: MarchModel> Stepper<'_, M> {
    fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let mut c = self.grid.coords(idx);
        if forward {
            if c[axis] + 1 >= self.grid.n {
                return None;
            }
            c[axis] += 1;
        } else {
            if c[axis] == 0 {
                return None;
            }
            c[axis] -= 1;
        }
        Some(self.grid.index(c[0], c[1], c[2]))
    }

    fn gradient(&self, s: &[f64], idx: usize) -> [f64; 3] {
        let h = self.grid.h;
        let mut g = [0.0; 3];
        for (axis, out) in g.iter_mut().enumerate() {
            let (p, m) = (self.neighbor(idx, axis, true), self.neighbor(idx, axis, false));
            *out = match (p, m) {
                (Some(p), Some(m)) => (s[p] - s[m]) / (2.0 * h),
                (Some(p), None) => (s[p] - s[idx]) / h,
                (None, Some(m)) => (s[idx] - s[m]) / h,
                (None, None) => 0.0,
            };
        }
        g
    }

    fn control(&self, s: &[f64], idx: usize) -> (f64, bool) {
        self.model.control(self.grid.point(idx), s[idx], self.gradient(s, idx))
    }

    fn law(&self, s: &[f64]) -> Vec<f64> {
        let mut law = vec![0.0; self.grid.len()];
        let computed: Vec<f64> = self.interior.par_iter().map(|&k| self.control(s, k).0).collect();
        for (&k, u) in self.interior.iter().zip(computed) {
            law[k] = u;
        }
        self.grid.fill_ghosts(&mut law);
        law
    }

    /// One backward step of size `dt`; returns the new values and the number
    /// of guarded nodes.
    fn step(&self, s: &[f64], dt: f64) -> (Vec<f64>, usize) {
        let h = self.grid.h;
        let updates: Vec<(f64, bool)> = self
            .interior
            .par_iter()
            .map(|&k| {
                let r = self.grid.point(k);
                let (u, guarded) = self.control(s, k);
                let c = self.model.coefficients(r, u);
                let mut acc = c.source + c.potential * s[k];
                for axis in 0..3 {
                    let f = c.drift[axis];
                    if f > 0.0 {
                        if let Some(p) = self.neighbor(k, axis, true) {
                            acc += f * (s[p] - s[k]) / h;
                        }
                    } else if f < 0.0 {
                        if let Some(m) = self.neighbor(k, axis, false) {
                            acc += f * (s[k] - s[m]) / h;
                        }
                    }
                }
                let b2: f64 = c.diffusion.iter().map(|b| b * b).sum();
                if b2 > 0.0 {
                    let norm = b2.sqrt();
                    let dir = c.diffusion.map(|b| b / norm * h);
                    let plus = self.grid.interpolate(s, [r[0] + dir[0], r[1] + dir[1], r[2] + dir[2]]);
                    let minus = self.grid.interpolate(s, [r[0] - dir[0], r[1] - dir[1], r[2] - dir[2]]);
                    acc += 0.5 * b2 * (plus - 2.0 * s[k] + minus) / (h * h);
                }
                (s[k] + dt * acc, guarded)
            })
            .collect();
        let mut next = s.to_vec();
        let mut guards = 0;
        for (&k, (v, g)) in self.interior.iter().zip(updates) {
            next[k] = v;
            guards += g as usize;
        }
        self.grid.fill_ghosts(&mut next);
        (next, guards)
    }
}

/// Marches from the terminal data at `horizon` back to time 0, storing the
/// value and control at the `nt + 1` requested times.
pub(crate) fn march<M: MarchModel>(grid: &BallGrid, model: &M, horizon: f64, nt: usize) -> Result<MarchOutput> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if nt == 0 {
        return Err(Error::invalid("nt", "must be positive"));
    }
    let stepper = Stepper {
        grid,
        model,
        interior: grid.interior(),
    };
    let umax = model.umax();
    let max_rate = stepper
        .interior
        .iter()
        .flat_map(|&k| {
            let r = grid.point(k);
            [-umax, 0.0, umax].map(|u| rate(&model.coefficients(r, u), grid.h))
        })
        .fold(0.0, f64::max);
    let cfl_dt = if max_rate > 0.0 { SAFETY / max_rate } else { f64::INFINITY };
    let coarse = horizon / nt as f64;
    let substeps = (coarse / cfl_dt).ceil().max(1.0) as usize;
    let dt = coarse / substeps as f64;

    let mut s: Vec<f64> = (0..grid.len()).map(|k| model.terminal(grid.point(k))).collect();
    grid.fill_ghosts(&mut s);
    let mut values = vec![Vec::new(); nt + 1];
    let mut law = vec![Vec::new(); nt + 1];
    let mut guard_events = 0;
    law[nt] = stepper.law(&s);
    values[nt] = s.clone();
    for slice in (0..nt).rev() {
        for _ in 0..substeps {
            let (next, g) = stepper.step(&s, dt);
            guard_events += g;
            s = next;
        }
        if let Some(&bad) = stepper.interior.iter().find(|&&k| !s[k].is_finite()) {
            return Err(Error::NoConvergence {
                iterations: (nt - slice) * substeps,
                residual: s[bad],
            });
        }
        law[slice] = stepper.law(&s);
        values[slice] = s.clone();
    }
    Ok(MarchOutput {
        times: (0..=nt).map(|k| k as f64 * coarse).collect(),
        values,
        law,
        report: MarchReport {
            requested_steps: nt,
            substeps,
            dt,
            cfl_dt,
            guard_events,
        },
    })
}

/// Linear-in-time, trilinear-in-space evaluation of sliced lattice data.
pub(crate) fn interpolate_slices(grid: &BallGrid, times: &[f64], slices: &[Vec<f64>], p: [f64; 3], t: f64) -> f64 {
    let horizon = *times.last().expect("at least one slice");
    let t = t.clamp(0.0, horizon);
    let nt = times.len() - 1;
    let s = if horizon > 0.0 { t / horizon * nt as f64 } else { 0.0 };
    let k = (s.floor() as usize).min(nt.saturating_sub(1));
    let w = (s - k as f64).clamp(0.0, 1.0);
    let lo = grid.interpolate(&slices[k], p);
    if w == 0.0 || nt == 0 {
        return lo;
    }
    (1.0 - w) * lo + w * grid.interpolate(&slices[k + 1], p)
}

/// Radial projection onto the closed ball of the grid.
pub(crate) fn project_to_ball(grid: &BallGrid, p: [f64; 3]) -> [f64; 3] {
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if norm > grid.radius {
        p.map(|v| v * grid.radius / norm)
    } else {
        p
    }
}
