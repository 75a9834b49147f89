//! Series products: an atom whose two output channels are reconnected, and
//! an atom followed by a phase shifter.

use qcontrol::algebra::{sigma_minus, sigma_z, ComplexMatrix, I};
use qcontrol::slh::{concat, series, SlhParams};

fn main() -> qcontrol::Result<()> {
    let (k1, k2, omega): (f64, f64, f64) = (1.0, 0.25, 1.0);
    let atom = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), sigma_z().scale_real(0.5 * omega))?;
    let second = SlhParams::single(sigma_minus().scale_real(k2.sqrt()), ComplexMatrix::zeros(2))?;
    let merged = series(&second, &atom)?;
    println!("merged coupling:\n{:?}", merged.couplings()[0]);
    println!("merged hamiltonian:\n{:?}", merged.hamiltonian());

    let phase = SlhParams::single(sigma_z().scale(I * k2.sqrt()), ComplexMatrix::zeros(2))?;
    let shifted = series(&phase, &atom)?;
    let correction = shifted.hamiltonian().try_sub(atom.hamiltonian())?;
    println!("hamiltonian correction from the phase shifter:\n{correction:?}");

    let side_by_side = concat(&atom, &second)?;
    println!("concatenation has {} channels", side_by_side.channels());
    Ok(())
}
