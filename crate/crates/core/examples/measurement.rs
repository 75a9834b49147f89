//! Projective measurement of σx on a qubit prepared from its Bloch vector.

use qcontrol::algebra::{density_from_bloch, measurement_probabilities, project_postulate, sigma_x, BlochVector};

fn main() -> qcontrol::Result<()> {
    let rho = density_from_bloch(BlochVector::new(0.6, 0.0, 0.8))?;
    for (outcome, p) in measurement_probabilities(&rho, &sigma_x())? {
        let post = project_postulate(&rho, &sigma_x(), outcome)?;
        println!("outcome {outcome:+.0}: probability {p:.3}, post-measurement ρ00 = {:.3}", post.matrix().get(0, 0).re);
    }
    Ok(())
}
