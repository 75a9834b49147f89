//! Risk-sensitive measurement feedback on the extended state `ř = (n, r)`.
//!
//! The value is positively homogeneous of degree one, `V(αř) = αV(ř)`, so it
//! is solved on a single slice `n = n0` of radius `n0`. Writing
//! `V(n0, r) = U(r)`, the equation on the slice reads
//!
//! `∂U/∂t + min_u { p·U + F·∇U + ½βᵀD²Uβ } = 0`,
//!
//! with `p = f_n/n0`, `F = f_r − r·f_n/n0` and `β = g_r − r·g_n/n0`, where
//! `(f, g)` are the coefficients of the risk-sensitive filter.

use serde::{Deserialize, Serialize};

use super::ball::{interpolate_slices, march, project_to_ball, Coefficients, MarchModel, MarchReport};
use super::grid::BallGrid;
use crate::error::{Error, Result};
use crate::filter::{extended_coefficients, ExtendedBlochVector, RiskParams};
use crate::hybrid::SystemConfig;

/// Values below this are not divided by when forming the control.
const DIVISOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSensitiveProblem {
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(default = "default_umax")]
    pub umax: f64,
}

fn default_umax() -> f64 {
    10.0
}

impl RiskSensitiveProblem {
    pub fn new(mu: f64, c1: f64, c2: f64) -> Result<Self> {
        let p = Self {
            mu,
            c1,
            c2,
            umax: default_umax(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", "must be positive"));
        }
        RiskParams { mu: self.mu, c1: self.c1 }.validate()?;
        if !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return Err(Error::invalid("c2", "must be nonnegative"));
        }
        if !(self.umax > 0.0 && self.umax.is_finite()) {
            return Err(Error::invalid("umax", "must be positive"));
        }
        Ok(())
    }

    pub fn risk(&self) -> RiskParams {
        RiskParams { mu: self.mu, c1: self.c1 }
    }

    /// `½(n − z)e^{μc2}`
    pub fn terminal(&self, s: &ExtendedBlochVector) -> f64 {
        0.5 * (s.n - s.z) * (self.mu * self.c2).exp()
    }
}

struct Model {
    cfg: SystemConfig,
    problem: RiskSensitiveProblem,
    n0: f64,
}

impl MarchModel for Model {
    fn control(&self, r: [f64; 3], value: f64, grad: [f64; 3]) -> (f64, bool) {
        if value < DIVISOR_GUARD {
            return (0.0, true);
        }
        let p = &self.problem;
        let u = (grad[1] * r[2] - grad[2] * r[1]) / (p.mu * p.c1 * value);
        (u.clamp(-p.umax, p.umax), false)
    }

    fn coefficients(&self, r: [f64; 3], u: f64) -> Coefficients {
        let s = ExtendedBlochVector::new(self.n0, r[0], r[1], r[2]);
        let (f, g) = extended_coefficients(&s, u, Some(self.problem.risk()), &self.cfg);
        let (fr, gr) = (f[0] / self.n0, g[0] / self.n0);
        Coefficients {
            drift: [f[1] - r[0] * fr, f[2] - r[1] * fr, f[3] - r[2] * fr],
            diffusion: [g[1] - r[0] * gr, g[2] - r[1] * gr, g[3] - r[2] * gr],
            potential: fr,
            source: 0.0,
        }
    }

    fn terminal(&self, r: [f64; 3]) -> f64 {
        self.problem
            .terminal(&ExtendedBlochVector::new(self.n0, r[0], r[1], r[2]))
    }

    fn umax(&self) -> f64 {
        self.problem.umax
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskSensitiveSolution {
    /// Slice grid; its radius is the slice level `n0`.
    pub grid: BallGrid,
    pub problem: RiskSensitiveProblem,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub law: Vec<Vec<f64>>,
    pub report: MarchReport,
}

impl RiskSensitiveSolution {
    pub fn slice_level(&self) -> f64 {
        self.grid.radius
    }

    /// Point on the slice along the ray through `s`.
    fn slice_point(&self, s: &ExtendedBlochVector) -> Result<[f64; 3]> {
        if !(s.n > 0.0) {
            return Err(Error::NormalizationCollapse(s.n));
        }
        let a = self.slice_level() / s.n;
        Ok(project_to_ball(&self.grid, [a * s.x, a * s.y, a * s.z]))
    }

    /// `V(ř, t) = (n/n0)·U(n0 r/n, t)`.
    pub fn value(&self, s: &ExtendedBlochVector, t: f64) -> Result<f64> {
        let p = self.slice_point(s)?;
        let u = interpolate_slices(&self.grid, &self.times, &self.values, p, t);
        Ok(s.n / self.slice_level() * u)
    }
}

/// Solves the risk-sensitive dynamic-programming equation on the slice
/// `n = grid.radius`.
pub fn solve_risk_sensitive(
    grid: &BallGrid,
    cfg: &SystemConfig,
    problem: &RiskSensitiveProblem,
    horizon: f64,
    nt: usize,
) -> Result<RiskSensitiveSolution> {
    cfg.validate()?;
    problem.validate()?;
    let model = Model {
        cfg: *cfg,
        problem: *problem,
        n0: grid.radius,
    };
    let out = march(grid, &model, horizon, nt)?;
    let interior = grid.interior();
    // the terminal data vanishes at the excited pole z = n0; earlier slices
    // must be strictly positive
    let last = out.values.len() - 1;
    for (i, slice) in out.values.iter().enumerate() {
        let floor_ok = |v: f64| if i == last { v >= 0.0 } else { v > 0.0 };
        if let Some(&k) = interior.iter().find(|&&k| !floor_ok(slice[k])) {
            return Err(Error::NotAState(format!(
                "risk-sensitive value lost positivity ({:.3e}) at node {k}",
                slice[k]
            )));
        }
    }
    Ok(RiskSensitiveSolution {
        grid: grid.clone(),
        problem: *problem,
        horizon,
        times: out.times,
        values: out.values,
        law: out.law,
        report: out.report,
    })
}

/// Control `u^{μ,*}(ř, t)`; it depends on `ř` only through `r/n`.
pub fn feedback_rs(sol: &RiskSensitiveSolution, s: &ExtendedBlochVector, t: f64) -> Result<f64> {
    let p = sol.slice_point(s)?;
    Ok(interpolate_slices(&sol.grid, &sol.times, &sol.law, p, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::new(1.0, 0.5, 0.5, 1e-3).unwrap()
    }

    #[test]
    fn terminal_slice_is_exact() {
        let grid = BallGrid::unit(0.25).unwrap();
        let p = RiskSensitiveProblem::new(0.5, 0.1, 1.0).unwrap();
        let sol = solve_risk_sensitive(&grid, &cfg(), &p, 0.5, 5).unwrap();
        let last = sol.values.last().unwrap();
        for k in grid.interior() {
            let r = grid.point(k);
            assert_eq!(last[k], 0.5 * (1.0 - r[2]) * (0.5f64).exp());
        }
    }

    #[test]
    fn value_positive_and_homogeneous() {
        let grid = BallGrid::unit(0.25).unwrap();
        let p = RiskSensitiveProblem::new(0.5, 0.1, 1.0).unwrap();
        let sol = solve_risk_sensitive(&grid, &cfg(), &p, 0.5, 5).unwrap();
        for k in grid.interior() {
            assert!(sol.values[0][k] > 0.0);
        }
        let s = ExtendedBlochVector::new(1.0, 0.1, -0.2, 0.3);
        let v1 = sol.value(&s, 0.0).unwrap();
        let v2 = sol.value(&s.scale(2.0), 0.0).unwrap();
        assert!((v2 - 2.0 * v1).abs() < 1e-15);
        let u1 = feedback_rs(&sol, &s, 0.2).unwrap();
        let u2 = feedback_rs(&sol, &s.scale(3.0), 0.2).unwrap();
        assert!((u1 - u2).abs() < 1e-15);
        assert!(sol.value(&ExtendedBlochVector::new(0.0, 0.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn control_vanishes_on_x_axis() {
        let grid = BallGrid::unit(0.25).unwrap();
        let p = RiskSensitiveProblem::new(1.0, 0.1, 1.0).unwrap();
        let sol = solve_risk_sensitive(&grid, &cfg(), &p, 0.5, 5).unwrap();
        let s = ExtendedBlochVector::new(1.0, -0.5, 0.0, 0.0);
        assert_eq!(feedback_rs(&sol, &s, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn slice_coefficients_on_unit_slice_match_normalized_filter() {
        use crate::algebra::BlochVector;
        use crate::filter::normalized_coefficients;
        let model = Model {
            cfg: cfg(),
            problem: RiskSensitiveProblem::new(0.7, 0.2, 1.0).unwrap(),
            n0: 1.0,
        };
        let r = [0.3, -0.2, 0.4];
        let c = model.coefficients(r, 0.6);
        let (_, g) = normalized_coefficients(BlochVector::from_array(r), 0.6, &model.cfg);
        for d in 0..3 {
            assert!((c.diffusion[d] - g.to_array()[d]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_zero_mu() {
        assert!(RiskSensitiveProblem::new(0.0, 0.1, 1.0).is_err());
    }
}
