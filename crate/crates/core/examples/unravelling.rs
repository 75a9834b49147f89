//! Averaging the filter over many records recovers the master equation.

use qcontrol::algebra::BlochVector;
use qcontrol::filter::{monte_carlo_mean, NoiseSource};
use qcontrol::hybrid::SystemConfig;

fn main() -> qcontrol::Result<()> {
    let cfg = SystemConfig::new(1.0, 0.5, 0.5, 1e-3)?;
    let ens = monte_carlo_mean(&cfg, BlochVector::new(1.0, 0.0, 0.0), &|_, _| 0.0, 5000, 2.0, 10, &NoiseSource::new(2))?;
    for (i, &t) in ens.times.iter().enumerate() {
        let master = [(-0.5 * t).exp() * t.cos(), (-0.5 * t).exp() * t.sin(), (-t).exp() - 1.0];
        println!(
            "t = {t:.1}  mean x = {:+.4} ± {:.4} (master {:+.4})  mean z = {:+.4} ± {:.4} (master {:+.4})",
            ens.mean[i][0], ens.std_err[i][0], master[0], ens.mean[i][2], ens.std_err[i][2], master[2]
        );
    }
    Ok(())
}
