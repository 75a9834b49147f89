//! Direct-coupling feedback: two CNOTs swap the plant's state onto the
//! controller and leave the plant in its ground state.

use std::f64::consts::PI;

use num_complex::Complex64;
use qcontrol::coherent::verify_transfer;

fn main() -> qcontrol::Result<()> {
    let plant = [Complex64::new((PI / 8.0).cos(), 0.0), Complex64::new(0.0, (PI / 8.0).sin())];
    let report = verify_transfer(plant)?;
    println!("fidelity {:.15}, pass {}", report.fidelity, report.pass);
    println!("plant after:\n{:?}", report.plant_final);
    println!("controller after:\n{:?}", report.controller_final);
    Ok(())
}
