use qcontrol::algebra::BlochVector;
use qcontrol::hybrid::{simulate_hybrid, ImpulseSchedule, Mode, SystemConfig};

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3)?;
    let r0 = BlochVector::new(0.6, 0.0, 0.8);
    let traj = simulate_hybrid(&cfg, &ImpulseSchedule::empty(), r0, &|_, _| 0.0, 5.0, Mode::Relaxing)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "t", "|(x,y)|", "z", "z exact");
    for (t, r) in traj.times.iter().zip(&traj.states).step_by(500) {
        let exact = (r0.z + 1.0) * (-t).exp() - 1.0;
        println!("{t:>5.2} {:>10.6} {:>10.6} {exact:>10.6}", r.x.hypot(r.y), r.z);
    }
    Ok(())
}
