//! One homodyne record, filtered by the normalized and the unnormalized
//! filter. The two agree after normalization up to the step size.

use qcontrol::algebra::BlochVector;
use qcontrol::filter::{run_unnormalized, simulate_record, ExtendedBlochVector, NoiseSource, Scheme};
use qcontrol::hybrid::SystemConfig;

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3)?;
    let r0 = BlochVector::new(1.0, 0.0, 0.0);
    let run = simulate_record(&cfg, r0, &|_, _| 0.0, &NoiseSource::new(1), 0, 2.0)?;
    let unnormalized = run_unnormalized(&cfg, ExtendedBlochVector::from_state(r0), &|_| 0.0, &run.record, Scheme::EulerMaruyama)?;
    for k in (0..run.states.len()).step_by(250) {
        let a = run.states[k].r;
        let b = unnormalized[k].normalize()?.r;
        println!(
            "t = {:.2}  x̂ = {:+.4}  ẑ = {:+.4}  n = {:.4}  gap = {:.1e}",
            run.times[k],
            a.x,
            a.z,
            unnormalized[k].n,
            a.max_abs_diff(b)
        );
    }
    println!("projections onto the ball: {}", run.projections);
    Ok(())
}
