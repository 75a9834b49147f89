//! Measurement-feedback synthesis for the expected cost, checked by
//! closed-loop Monte Carlo against doing nothing.

use qcontrol::algebra::BlochVector;
use qcontrol::filter::{mean_and_std_err, path_costs, NoiseSource};
use qcontrol::hjb::{feedback_rn, solve_risk_neutral, BallGrid, CostWeights};
use qcontrol::hybrid::SystemConfig;

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3)?;
    let weights = CostWeights { c1: 0.1, c2: 1.0, umax: 10.0 };
    let sol = solve_risk_neutral(&BallGrid::unit(0.1)?, &cfg, &weights, 1.0, 10)?;
    let r0 = BlochVector::GROUND;
    let noise = NoiseSource::new(3);
    let star = path_costs(&cfg, r0, &|t, r| feedback_rn(&sol, r, t), &weights, 2000, 1.0, &noise)?;
    let zero = path_costs(&cfg, r0, &|_, _| 0.0, &weights, 2000, 1.0, &noise)?;
    let (js, ses) = mean_and_std_err(&star);
    let (j0, se0) = mean_and_std_err(&zero);
    println!("predicted {:.4}", sol.value_at(r0, 0.0));
    println!("feedback  {js:.4} ± {ses:.4}");
    println!("u = 0     {j0:.4} ± {se0:.4}");
    println!("CFL refinement: {} substeps of {:.2e}", sol.report.substeps, sol.report.dt);
    Ok(())
}
