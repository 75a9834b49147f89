//! Finite-horizon measurement feedback with cost
//! `E[½∫(1 − z + c1u²)dt + (c2/2)(1 − z(T))]`, solved on the Bloch ball for
//! the filter state.

use serde::{Deserialize, Serialize};

use super::ball::{interpolate_slices, march, project_to_ball, Coefficients, MarchModel, MarchReport};
use super::grid::BallGrid;
use crate::algebra::BlochVector;
use crate::error::{Error, Result};
use crate::filter::{normalized_coefficients, PathCost};
use crate::hybrid::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub c1: f64,
    pub c2: f64,
    /// Box `|u| ≤ umax` for the closed-form minimizer.
    #[serde(default = "default_umax")]
    pub umax: f64,
}

fn default_umax() -> f64 {
    10.0
}

impl CostWeights {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        let w = Self {
            c1,
            c2,
            umax: default_umax(),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::invalid("c1", "must be positive"));
        }
        if !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return Err(Error::invalid("c2", "must be nonnegative"));
        }
        if !(self.umax > 0.0 && self.umax.is_finite()) {
            return Err(Error::invalid("umax", "must be positive"));
        }
        Ok(())
    }

    /// `½(1 − z + c1u²)`
    pub fn running(&self, r: BlochVector, u: f64) -> f64 {
        0.5 * (1.0 - r.z + self.c1 * u * u)
    }

    /// `(c2/2)(1 − z)`
    pub fn terminal(&self, r: BlochVector) -> f64 {
        0.5 * self.c2 * (1.0 - r.z)
    }

    /// `u* = (S_y z − S_z y)/c1`, clamped.
    pub fn minimizer(&self, r: BlochVector, grad: [f64; 3]) -> f64 {
        ((grad[1] * r.z - grad[2] * r.y) / self.c1).clamp(-self.umax, self.umax)
    }
}

impl PathCost for CostWeights {
    fn running(&self, r: BlochVector, u: f64) -> f64 {
        CostWeights::running(self, r, u)
    }

    fn terminal(&self, r: BlochVector) -> f64 {
        CostWeights::terminal(self, r)
    }
}

struct Model {
    cfg: SystemConfig,
    weights: CostWeights,
}

impl MarchModel for Model {
    fn control(&self, r: [f64; 3], _value: f64, grad: [f64; 3]) -> (f64, bool) {
        (self.weights.minimizer(BlochVector::from_array(r), grad), false)
    }

    fn coefficients(&self, r: [f64; 3], u: f64) -> Coefficients {
        let r = BlochVector::from_array(r);
        let (f, g) = normalized_coefficients(r, u, &self.cfg);
        Coefficients {
            drift: f.to_array(),
            diffusion: g.to_array(),
            potential: 0.0,
            source: self.weights.running(r, u),
        }
    }

    fn terminal(&self, r: [f64; 3]) -> f64 {
        self.weights.terminal(BlochVector::from_array(r))
    }

    fn umax(&self) -> f64 {
        self.weights.umax
    }
}

/// Value and feedback slices at the requested times `k·T/nt`.
#[derive(Debug, Clone, Serialize)]
pub struct RiskNeutralSolution {
    pub grid: BallGrid,
    pub weights: CostWeights,
    pub horizon: f64,
    pub times: Vec<f64>,
    /// Full-lattice values per time slice.
    pub values: Vec<Vec<f64>>,
    /// Full-lattice controls per time slice.
    pub law: Vec<Vec<f64>>,
    pub report: MarchReport,
}

impl RiskNeutralSolution {
    pub fn value_at(&self, r: BlochVector, t: f64) -> f64 {
        let p = project_to_ball(&self.grid, r.to_array());
        interpolate_slices(&self.grid, &self.times, &self.values, p, t)
    }
}

/// Backward explicit marching of the risk-neutral dynamic-programming
/// equation over `[0, horizon]` with `nt` output slices.
pub fn solve_risk_neutral(
    grid: &BallGrid,
    cfg: &SystemConfig,
    weights: &CostWeights,
    horizon: f64,
    nt: usize,
) -> Result<RiskNeutralSolution> {
    cfg.validate()?;
    weights.validate()?;
    if (grid.radius - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("radius", "the filter lives in the unit ball"));
    }
    let model = Model {
        cfg: *cfg,
        weights: *weights,
    };
    let out = march(grid, &model, horizon, nt)?;
    Ok(RiskNeutralSolution {
        grid: grid.clone(),
        weights: *weights,
        horizon,
        times: out.times,
        values: out.values,
        law: out.law,
        report: out.report,
    })
}

/// Optimal measurement feedback `u*(r, t)`; states outside the ball are
/// projected onto it.
pub fn feedback_rn(sol: &RiskNeutralSolution, r: BlochVector, t: f64) -> f64 {
    let p = project_to_ball(&sol.grid, r.to_array());
    interpolate_slices(&sol.grid, &sol.times, &sol.law, p, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(h: f64) -> RiskNeutralSolution {
        let grid = BallGrid::unit(h).unwrap();
        let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3).unwrap();
        solve_risk_neutral(&grid, &cfg, &CostWeights::new(0.1, 1.0).unwrap(), 1.0, 10).unwrap()
    }

    #[test]
    fn terminal_slice_is_exact() {
        let sol = solve(0.25);
        let last = sol.values.last().unwrap();
        for k in sol.grid.interior() {
            let r = sol.grid.bloch(k);
            assert_eq!(last[k], 0.5 * (1.0 - r.z));
        }
    }

    #[test]
    fn values_bounded_and_law_vanishes_on_x_axis() {
        let sol = solve(0.25);
        for slice in &sol.values {
            assert!(slice.iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= 1.0 + 1.0));
        }
        for t in [0.0, 0.37, 1.0] {
            assert_eq!(feedback_rn(&sol, BlochVector::new(0.5, 0.0, 0.0), t), 0.0);
        }
        assert!(sol.law.iter().flatten().all(|u| u.is_finite()));
    }

    #[test]
    fn cfl_refinement_is_reported() {
        let sol = solve(0.25);
        assert!(sol.report.substeps >= 1);
        assert!(sol.report.dt <= sol.report.cfl_dt);
        assert!(sol.report.refined());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(CostWeights::new(0.0, 1.0).is_err());
        assert!(CostWeights::new(0.1, -1.0).is_err());
    }
}
