//! Minimum-time steering on the Bloch sphere and a bang-bang rollout.

use std::f64::consts::FRAC_PI_2;

use qcontrol::algebra::BlochVector;
use qcontrol::hjb::{extract_bang_bang, rollout_bang_bang, solve_time_optimal, PolarGrid, SolverConfig};

fn main() -> qcontrol::Result<()> {
    let grid = PolarGrid::new(40, 80)?;
    let sol = solve_time_optimal(grid, 1.0, (FRAC_PI_2, 0.0), &SolverConfig::default())?;
    println!("converged in {} sweeps, residual {:.1e}", sol.value.iterations, sol.value.residual);
    let law = extract_bang_bang(&sol);
    for start in [BlochVector::GROUND, BlochVector::new(0.0, 1.0, 0.0), BlochVector::new(-0.6, 0.0, 0.8)] {
        let ro = rollout_bang_bang(&sol, &law, start, 1e-3, 2.0 * grid.d_theta(), 20.0);
        println!("from {start:?}: predicted {:.3}, realized {:.3}, reached {}", ro.predicted, ro.time, ro.reached);
    }
    Ok(())
}
