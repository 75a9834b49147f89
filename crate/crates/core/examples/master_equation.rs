use qcontrol::algebra::{bloch_components, density_from_bloch, BlochVector};
use qcontrol::slh::{atom_params, evolve_master};

fn main() -> qcontrol::Result<()> {
    let g = atom_params(0.5, 0.5, 1.0, 0.0)?;
    let rho0 = density_from_bloch(BlochVector::new(1.0, 0.0, 0.0))?.into_matrix();
    let mut k = 0;
    evolve_master(&g, &rho0, 4.0, 4000, |t, rho| {
        k += 1;
        if k % 500 == 0 {
            let r = bloch_components(rho).1;
            println!("t = {t:.1}: ({:+.4}, {:+.4}, {:+.4})", r.x, r.y, r.z);
        }
    })?;
    Ok(())
}
