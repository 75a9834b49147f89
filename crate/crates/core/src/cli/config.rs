//! JSON run configurations. Every field has a default, so an empty object
//! (or no `--config` at all) runs the reference experiment of the command.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algebra::{sigma_minus, sigma_z, ComplexMatrix, I};
use crate::filter::Scheme;
use crate::hjb::{CostWeights, QviConfig, RiskSensitiveProblem, SolverConfig};
use crate::hybrid::{ImpulseSchedule, Mode, SystemConfig};
use crate::slh::{atom_params, SlhParams};

fn system(omega: f64, kappa1: f64, kappa2: f64) -> SystemConfig {
    SystemConfig {
        omega,
        kappa1,
        kappa2,
        dt: 1e-3,
    }
}

/// `simulate`: hybrid Bloch trajectory under an impulse schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub schedule: ImpulseSchedule,
    pub r0: [f64; 3],
    pub t_final: f64,
    pub mode: Mode,
    /// Constant continuous control `u`.
    pub u: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            system: system(0.0, 1.0, 0.0),
            schedule: ImpulseSchedule::periodic(1.0, FRAC_PI_2).expect("valid schedule"),
            r0: [0.0, 0.0, -1.0],
            t_final: 30.0,
            mode: Mode::Relaxing,
            u: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    /// Normalized filter; emits `t, dY, x, y, z`.
    #[default]
    Normalized,
    /// Unnormalized filter on the same record; emits `t, dY, x, y, z, n`.
    Unnormalized,
    /// Sup-norm gap between the normalized filter and the normalized
    /// unnormalized filter on one record seen at successively halved steps.
    Consistency,
}

/// `filter`: a single measurement path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub system: SystemConfig,
    pub r0: [f64; 3],
    pub u: f64,
    pub t_final: f64,
    /// Noise stream index.
    pub path: u64,
    pub mode: FilterMode,
    pub scheme: Scheme,
    /// Replay this previously emitted `filter.csv` instead of sampling.
    pub record: Option<PathBuf>,
    /// Number of step sizes in consistency mode, finest `dt/2^(levels−1)`.
    pub levels: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            system: system(1.0, 0.5, 0.5),
            r0: [1.0, 0.0, 0.0],
            u: 0.0,
            t_final: 2.0,
            path: 0,
            mode: FilterMode::Normalized,
            scheme: Scheme::EulerMaruyama,
            record: None,
            levels: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    #[default]
    Normalized,
    Unnormalized,
}

/// `montecarlo`: ensemble statistics at checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub system: SystemConfig,
    pub r0: [f64; 3],
    pub u: f64,
    pub t_final: f64,
    pub checkpoints: usize,
    pub paths: usize,
    pub quantity: Quantity,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            system: system(1.0, 0.5, 0.5),
            r0: [1.0, 0.0, 0.0],
            u: 0.0,
            t_final: 2.0,
            checkpoints: 10,
            paths: 10_000,
            quantity: Quantity::Normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub starts: usize,
    /// Target ball radius in units of `Δθ`.
    pub radius_cells: f64,
    pub dt: f64,
    /// Give up after this multiple of the predicted time.
    pub time_factor: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            starts: 20,
            radius_cells: 2.0,
            dt: 1e-3,
            time_factor: 3.0,
        }
    }
}

/// `hjb time-optimal`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeOptimalConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub omega: f64,
    /// `(θf, φf)`
    pub target: [f64; 2],
    pub solver: SolverConfig,
    pub rollout: Option<RolloutConfig>,
}

impl Default for TimeOptimalConfig {
    fn default() -> Self {
        Self {
            n_theta: 40,
            n_phi: 80,
            omega: 1.0,
            target: [FRAC_PI_2, 0.0],
            solver: SolverConfig::default(),
            rollout: Some(RolloutConfig::default()),
        }
    }
}

/// `hjb qvi`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QviRunConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub omega: f64,
    pub target: [f64; 2],
    pub qvi: QviConfig,
}

impl Default for QviRunConfig {
    fn default() -> Self {
        Self {
            n_theta: 40,
            n_phi: 80,
            omega: 1.0,
            target: [FRAC_PI_2, 0.0],
            qvi: QviConfig::default(),
        }
    }
}

/// Closed-loop Monte Carlo evaluation of a synthesized law.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub r0: [f64; 3],
    pub paths: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            r0: [0.0, 0.0, -1.0],
            paths: 10_000,
        }
    }
}

/// `hjb risk-neutral`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskNeutralConfig {
    pub system: SystemConfig,
    pub h: f64,
    pub horizon: f64,
    /// Number of stored time slices.
    pub nt: usize,
    pub weights: CostWeights,
    pub evaluate: Option<EvaluationConfig>,
}

impl Default for RiskNeutralConfig {
    fn default() -> Self {
        Self {
            system: system(1.0, 0.5, 0.5),
            h: 0.1,
            horizon: 1.0,
            nt: 10,
            weights: CostWeights {
                c1: 0.1,
                c2: 1.0,
                umax: 10.0,
            },
            evaluate: Some(EvaluationConfig::default()),
        }
    }
}

/// Consistency checks run next to the risk-sensitive solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskSensitiveChecks {
    /// Level of a second slice solved with the same spacing.
    pub second_slice: Option<f64>,
    /// Increasing risk parameters for the monotonicity check.
    pub mus: Vec<f64>,
}

impl Default for RiskSensitiveChecks {
    fn default() -> Self {
        Self {
            second_slice: Some(2.0),
            mus: vec![0.25, 0.5, 1.0],
        }
    }
}

/// `hjb risk-sensitive`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskSensitiveConfig {
    pub system: SystemConfig,
    pub h: f64,
    /// Slice level `n0`.
    pub n0: f64,
    pub horizon: f64,
    pub nt: usize,
    pub problem: RiskSensitiveProblem,
    pub checks: Option<RiskSensitiveChecks>,
}

impl Default for RiskSensitiveConfig {
    fn default() -> Self {
        Self {
            system: system(1.0, 0.5, 0.5),
            h: 0.25,
            n0: 1.0,
            horizon: 1.0,
            nt: 10,
            problem: RiskSensitiveProblem {
                mu: 0.5,
                c1: 0.1,
                c2: 1.0,
                umax: 10.0,
            },
            checks: Some(RiskSensitiveChecks::default()),
        }
    }
}

/// `network series` and `network concat`: the first system is the first
/// in the cascade.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub systems: Vec<SlhParams>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        // atom split into its two channels, reconnected in series
        let (k1, k2, omega): (f64, f64, f64) = (1.0, 0.25, 1.0);
        let first = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), sigma_z().scale_real(0.5 * omega))
            .expect("valid atom");
        let second = SlhParams::single(sigma_minus().scale_real(k2.sqrt()), ComplexMatrix::zeros(2)).expect("valid atom");
        Self {
            systems: vec![first, second],
        }
    }
}

impl NetworkConfig {
    /// Atom followed by a phase-shifting system `(i√κ2 σz, 0)`.
    pub fn phase_feedback(kappa1: f64, kappa2: f64, omega: f64) -> Self {
        let first = SlhParams::single(sigma_minus().scale_real(kappa1.sqrt()), sigma_z().scale_real(0.5 * omega))
            .expect("valid atom");
        let second = SlhParams::single(sigma_z().scale(I * kappa2.sqrt()), ComplexMatrix::zeros(2)).expect("valid system");
        Self {
            systems: vec![first, second],
        }
    }
}

/// `network master`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MasterConfig {
    pub system: SlhParams,
    pub r0: [f64; 3],
    pub t_final: f64,
    pub dt: f64,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            system: atom_params(0.5, 0.5, 1.0, 0.0).expect("valid atom"),
            r0: [1.0, 0.0, 0.0],
            t_final: 2.0,
            dt: 1e-3,
        }
    }
}

/// `cnot-demo`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnotConfig {
    /// Plant amplitudes `(α, β)` on `(|↑⟩, |↓⟩)` as `[re, im]` pairs.
    pub plant: [[f64; 2]; 2],
    /// Additional random pure plant states to verify.
    pub random_states: usize,
}

impl Default for CnotConfig {
    fn default() -> Self {
        let a = (PI / 8.0).cos();
        let b = (PI / 8.0).sin();
        Self {
            plant: [[a, 0.0], [0.0, b]],
            random_states: 100,
        }
    }
}
