use qcontrol::filter::ExtendedBlochVector;
use qcontrol::hjb::{feedback_rs, solve_risk_sensitive, BallGrid, RiskSensitiveProblem};
use qcontrol::hybrid::SystemConfig;

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3)?;
    let grid = BallGrid::new(0.25, 1.0)?;
    let state = ExtendedBlochVector::new(1.0, 0.0, 0.0, -1.0);
    for mu in [0.25, 0.5, 1.0] {
        let problem = RiskSensitiveProblem { mu, c1: 0.1, c2: 1.0, umax: 10.0 };
        let sol = solve_risk_sensitive(&grid, &cfg, &problem, 1.0, 10)?;
        // the value is homogeneous of degree one in the extended state
        let doubled = sol.value(&state.scale(2.0), 0.0)?;
        println!(
            "μ = {mu}: V = {:.4}, V(2ř)/2 = {:.4}, u* = {:+.4}",
            sol.value(&state, 0.0)?,
            0.5 * doubled,
            feedback_rs(&sol, &state, 0.0)?
        );
    }
    Ok(())
}
