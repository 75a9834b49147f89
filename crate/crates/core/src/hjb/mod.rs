//! Dynamic-programming solvers on grids and the feedback laws they induce.
//!
//! * [`time_optimal`]: minimum time to a target on the sphere of pure
//!   states, with bang-bang synthesis.
//! * [`qvi`]: minimum time when the only control is instantaneous rotation.
//! * [`risk_neutral`] and [`risk_sensitive`]: finite-horizon measurement
//!   feedback on the Bloch ball, solved by explicit backward marching.
//!
//! Stationary problems use monotone Jacobi value iteration upwards from zero;
//! finite-horizon problems use upwind advection with a monotone
//! directional second difference for the diffusion.

mod ball;
pub mod grid;
pub mod qvi;
pub mod risk_neutral;
pub mod risk_sensitive;
pub mod time_optimal;

use serde::{Deserialize, Serialize};

pub use ball::MarchReport;
pub use grid::{angular_distance, bloch_to_polar, polar_to_bloch, BallGrid, PolarGrid};
pub use qvi::{qvi_residuals, solve_qvi, QviAction, QviConfig, QviResiduals, QviSolution};
pub use risk_neutral::{feedback_rn, solve_risk_neutral, CostWeights, RiskNeutralSolution};
pub use risk_sensitive::{feedback_rs, solve_risk_sensitive, RiskSensitiveProblem, RiskSensitiveSolution};
pub use time_optimal::{
    extract_bang_bang, rollout_bang_bang, solve_time_optimal, solve_time_optimal_to_set, BangBangLaw, Rollout, TimeOptimalSolution,
};

/// Stopping rule of the stationary value iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_sweeps: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(crate::Error::invalid("tol", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(crate::Error::invalid("max_sweeps", "must be positive"));
        }
        Ok(())
    }
}

/// Node values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction<G> {
    pub grid: G,
    pub values: Vec<f64>,
    pub converged: bool,
    /// Last update size, in the solver's residual units.
    pub residual: f64,
    pub iterations: usize,
}

/// Control value (or action) per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLaw<G, A = f64> {
    pub grid: G,
    pub controls: Vec<A>,
}

/// Maximum and mean absolute residual of a discrete equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max: f64,
    pub mean: f64,
    pub nodes: usize,
}

impl ResidualReport {
    pub(crate) fn from_abs(residuals: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut sum, mut nodes) = (0.0f64, 0.0, 0usize);
        for r in residuals {
            max = max.max(r);
            sum += r;
            nodes += 1;
        }
        Self {
            max,
            mean: if nodes > 0 { sum / nodes as f64 } else { 0.0 },
            nodes,
        }
    }
}

/// Problems whose discrete dynamic-programming residual can be evaluated.
#[derive(Debug, Clone, Copy)]
pub enum DpeProblem<'a> {
    /// The upwind polar scheme the solver iterates.
    TimeOptimal(&'a TimeOptimalSolution),
    /// `min_u {DS·f(r, u) + 1}` in Cartesian form with centred differences of
    /// the interpolated value, as an independent cross-check.
    TimeOptimalRectangular(&'a TimeOptimalSolution),
    /// The worse of the two branch residuals and the complementarity gap.
    Qvi(&'a QviSolution),
}

/// Residual of the dynamic-programming equation away from the target.
pub fn dpe_residual(problem: DpeProblem<'_>) -> ResidualReport {
    match problem {
        DpeProblem::TimeOptimal(s) => time_optimal::scheme_residual(s),
        DpeProblem::TimeOptimalRectangular(s) => time_optimal::rectangular_residual(s),
        DpeProblem::Qvi(s) => {
            let r = qvi_residuals(s);
            ResidualReport::from_abs(r.per_node.iter().map(|n| {
                let neg = (-n.drift).max(-n.impulse).max(0.0);
                neg.max(n.drift.min(n.impulse).abs())
            }))
        }
    }
}
