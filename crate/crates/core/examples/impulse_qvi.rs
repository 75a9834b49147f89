//! Minimum time when the controller may also rotate instantaneously about
//! the x axis.

use std::f64::consts::FRAC_PI_2;

use qcontrol::algebra::BlochVector;
use qcontrol::hjb::{qvi_residuals, solve_qvi, PolarGrid, QviAction, QviConfig};

fn main() -> qcontrol::Result<()> {
    let grid = PolarGrid::new(40, 80)?;
    let sol = solve_qvi(grid, 1.0, (FRAC_PI_2, 0.0), &QviConfig::default())?;
    let res = qvi_residuals(&sol);
    println!(
        "branches ≥ {:.1e} / {:.1e}, complementarity {:.1e}",
        res.min_drift, res.min_impulse, res.max_complementarity
    );
    let impulses = sol.law.controls.iter().filter(|a| matches!(a, QviAction::Impulse(_))).count();
    println!("{impulses} of {} nodes rotate first", grid.len());
    for r in [BlochVector::GROUND, BlochVector::new(-1.0, 0.0, 0.0)] {
        let (i, j) = grid.nearest_to(r);
        let k = grid.index(i, j);
        println!("{r:?}: value {:.3}, action {:?}", sol.value.values[k], sol.law.controls[k]);
    }
    Ok(())
}
