//! Periodic π/2 pulses on a decaying atom settle into a steady state.

use std::f64::consts::FRAC_PI_2;

use qcontrol::hybrid::{periodic_steady_state, simulate_hybrid, ImpulseSchedule, Mode, SteadyStateOptions, SystemConfig};
use qcontrol::algebra::BlochVector;

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(0.0, 1.0, 0.0, 1e-3)?;
    let ss = periodic_steady_state(&cfg, 1.0, FRAC_PI_2, SteadyStateOptions::default())?;
    println!("post-impulse fixed point after {} periods: {:?}", ss.iterations, ss.state);
    println!("affine-map fixed point: {:?}", ss.analytic);

    let schedule = ImpulseSchedule::periodic(1.0, FRAC_PI_2)?;
    let traj = simulate_hybrid(&cfg, &schedule, BlochVector::GROUND, &|_, _| 0.0, 12.0, Mode::Relaxing)?;
    for (t, r) in traj.post_impulse_states().step_by(3) {
        println!("t = {t:>4.1}  y = {:.5}  z = {:.5}", r.y, r.z);
    }
    Ok(())
}
