//! `(L, H)` network parameters with the scattering matrix fixed to the
//! identity, and the concatenation and series products.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    lindblad_dissipator, sigma_minus, sigma_x, sigma_z, ComplexMatrix, DensityMatrix, C64,
    HERMITIAN_TOL, I,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlh")]
pub struct SlhParams {
    couplings: Vec<ComplexMatrix>,
    hamiltonian: ComplexMatrix,
}

#[derive(Deserialize)]
struct RawSlh {
    couplings: Vec<ComplexMatrix>,
    hamiltonian: ComplexMatrix,
}

impl TryFrom<RawSlh> for SlhParams {
    type Error = Error;
    fn try_from(raw: RawSlh) -> Result<Self> {
        SlhParams::new(raw.couplings, raw.hamiltonian)
    }
}

impl SlhParams {
    pub fn new(couplings: Vec<ComplexMatrix>, hamiltonian: ComplexMatrix) -> Result<Self> {
        let dev = hamiltonian.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotSelfAdjoint { deviation: dev });
        }
        for l in &couplings {
            if l.dim() != hamiltonian.dim() {
                return Err(Error::DimensionMismatch {
                    left: hamiltonian.dim(),
                    right: l.dim(),
                });
            }
        }
        Ok(Self {
            couplings,
            hamiltonian,
        })
    }

    pub fn single(coupling: ComplexMatrix, hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::new(vec![coupling], hamiltonian)
    }

    /// No field channels and zero Hamiltonian; the neutral element of `concat`.
    pub fn empty(dim: usize) -> Self {
        Self {
            couplings: Vec::new(),
            hamiltonian: ComplexMatrix::zeros(dim),
        }
    }

    pub fn couplings(&self) -> &[ComplexMatrix] {
        &self.couplings
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn channels(&self) -> usize {
        self.couplings.len()
    }
}

/// Operator imaginary part `(A − A†)/(2i)`.
pub fn operator_im(a: &ComplexMatrix) -> ComplexMatrix {
    (a - &a.adjoint()).scale(C64::new(0.0, -0.5))
}

/// Concatenation `G1 ⊞ G2`: stacked couplings, summed Hamiltonians.
pub fn concat(g1: &SlhParams, g2: &SlhParams) -> Result<SlhParams> {
    let hamiltonian = g1.hamiltonian.try_add(&g2.hamiltonian)?;
    let couplings = g1.couplings.iter().chain(&g2.couplings).cloned().collect();
    SlhParams::new(couplings, hamiltonian)
}

/// Series product `G2 ◁ G1`: the output of `g1` feeds the input of `g2`.
pub fn series(g2: &SlhParams, g1: &SlhParams) -> Result<SlhParams> {
    if g1.channels() != 1 || g2.channels() != 1 {
        return Err(Error::invalid(
            "couplings",
            format!(
                "series product needs single-channel factors, got {} and {}",
                g2.channels(),
                g1.channels()
            ),
        ));
    }
    let (l1, l2) = (&g1.couplings[0], &g2.couplings[0]);
    let coupling = l1.try_add(l2)?;
    let interference = operator_im(&l2.adjoint().try_mul(l1)?);
    let hamiltonian = &(&g1.hamiltonian + &g2.hamiltonian) + &interference;
    SlhParams::single(coupling, hamiltonian)
}

/// `i[ρ, H] + Σⱼ 𝓛*_{Lⱼ}(ρ)`
pub fn master_rhs(g: &SlhParams, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = rho.commutator(&g.hamiltonian)?.scale(I);
    for l in &g.couplings {
        out += &lindblad_dissipator(l, rho)?;
    }
    Ok(out)
}

/// Same as [`master_rhs`] for a validated state.
pub fn master_rhs_state(g: &SlhParams, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    master_rhs(g, rho.matrix())
}

/// Integrates the master equation over `duration` with `steps` RK4 steps,
/// passing every intermediate state to `sink`.
pub fn evolve_master<F>(g: &SlhParams, rho: &ComplexMatrix, duration: f64, steps: usize, mut sink: F) -> Result<ComplexMatrix>
where
    F: FnMut(f64, &ComplexMatrix),
{
    if steps == 0 || !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid("t_final", "need a finite duration and at least one step"));
    }
    if rho.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            left: g.dim(),
            right: rho.dim(),
        });
    }
    let h = duration / steps as f64;
    let mut r = rho.clone();
    for k in 0..steps {
        let k1 = master_rhs(g, &r)?;
        let k2 = master_rhs(g, &(&r + &k1.scale_real(0.5 * h)))?;
        let k3 = master_rhs(g, &(&r + &k2.scale_real(0.5 * h)))?;
        let k4 = master_rhs(g, &(&r + &k3.scale_real(h)))?;
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
        r += &incr.scale_real(h / 6.0);
        sink((k + 1) as f64 * h, &r);
    }
    Ok(r)
}

/// The driven atom: `(√κ1 σ−, ½(ωσz + uσx)) ⊞ (√κ2 σ−, 0)`.
pub fn atom_params(kappa1: f64, kappa2: f64, omega: f64, u: f64) -> Result<SlhParams> {
    if !(kappa1 >= 0.0) {
        return Err(Error::invalid("kappa1", "must be nonnegative"));
    }
    if !(kappa2 >= 0.0) {
        return Err(Error::invalid("kappa2", "must be nonnegative"));
    }
    let h = (&sigma_z().scale_real(omega) + &sigma_x().scale_real(u)).scale_real(0.5);
    let first = SlhParams::single(sigma_minus().scale_real(kappa1.sqrt()), h)?;
    let second = SlhParams::single(sigma_minus().scale_real(kappa2.sqrt()), ComplexMatrix::zeros(2))?;
    concat(&first, &second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{bloch_components, bloch_matrix, density_from_bloch, BlochVector};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        a.max_abs_diff(b) < 1e-12
    }

    fn half_omega_sz(omega: f64) -> ComplexMatrix {
        sigma_z().scale_real(0.5 * omega)
    }

    #[test]
    fn operator_im_of_hermitian_is_zero() {
        assert!(operator_im(&sigma_x()).max_abs() < 1e-15);
        // Im[iσz] = σz
        assert!(close(&operator_im(&sigma_z().scale(I)), &sigma_z()));
    }

    #[test]
    fn concat_splits_atom_channels() {
        let (k1, k2, w): (f64, f64, f64) = (0.3, 1.7, 2.0);
        let g1 = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), half_omega_sz(w)).unwrap();
        let g2 = SlhParams::single(sigma_minus().scale_real(k2.sqrt()), ComplexMatrix::zeros(2)).unwrap();
        let a = concat(&g1, &g2).unwrap();
        assert_eq!(a.channels(), 2);
        assert!(close(&a.couplings()[0], &sigma_minus().scale_real(k1.sqrt())));
        assert!(close(&a.couplings()[1], &sigma_minus().scale_real(k2.sqrt())));
        assert!(close(a.hamiltonian(), &half_omega_sz(w)));
        assert_eq!(a, atom_params(k1, k2, w, 0.0).unwrap());

        let neutral = concat(&g1, &SlhParams::empty(2)).unwrap();
        assert_eq!(neutral, g1);

        let ab = concat(&g1, &g2).unwrap();
        let ba = concat(&g2, &g1).unwrap();
        assert!(close(ab.hamiltonian(), ba.hamiltonian()));
    }

    #[test]
    fn concat_dimension_mismatch() {
        let g = SlhParams::empty(2);
        let h = SlhParams::empty(4);
        assert!(matches!(concat(&g, &h), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn series_coherent_feedback_loop() {
        let (k1, k2, w): (f64, f64, f64) = (0.4, 0.9, 1.3);
        let g1 = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), half_omega_sz(w)).unwrap();
        let g2 = SlhParams::single(sigma_minus().scale_real(k2.sqrt()), ComplexMatrix::zeros(2)).unwrap();
        let g = series(&g2, &g1).unwrap();
        assert!(close(&g.couplings()[0], &sigma_minus().scale_real(k1.sqrt() + k2.sqrt())));
        assert!(close(g.hamiltonian(), &half_omega_sz(w)));
    }

    #[test]
    fn series_identity_element() {
        let g = SlhParams::single(
            ComplexMatrix::mat2(C64::new(0.1, 0.2), C64::new(0.3, 0.0), C64::new(-0.4, 0.5), C64::new(0.0, 0.0)),
            sigma_x().scale_real(0.7),
        )
        .unwrap();
        let trivial = SlhParams::single(ComplexMatrix::zeros(2), ComplexMatrix::zeros(2)).unwrap();
        assert_eq!(series(&trivial, &g).unwrap(), g);
    }

    #[test]
    fn series_interference_term() {
        // Im[(i√κ2 σz)†(√κ1 σ−)] = ½√(κ1κ2) σx
        let (k1, k2, w): (f64, f64, f64) = (0.5, 2.0, 1.0);
        let g1 = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), half_omega_sz(w)).unwrap();
        let g2 = SlhParams::single(sigma_z().scale(I * k2.sqrt()), ComplexMatrix::zeros(2)).unwrap();
        let g = series(&g2, &g1).unwrap();
        let expect = &half_omega_sz(w) + &sigma_x().scale_real(0.5 * (k1 * k2).sqrt());
        assert!(close(g.hamiltonian(), &expect));
        assert!(g.hamiltonian().is_self_adjoint(1e-12));
    }

    #[test]
    fn series_rejects_multichannel() {
        let a = atom_params(1.0, 1.0, 0.0, 0.0).unwrap();
        let g = SlhParams::single(sigma_minus(), ComplexMatrix::zeros(2)).unwrap();
        assert!(series(&g, &a).is_err());
        assert!(series(&a, &g).is_err());
    }

    #[test]
    fn master_rhs_bloch_coefficients() {
        let (k1, k2, w): (f64, f64, f64) = (0.3, 0.6, 1.1);
        let g1 = SlhParams::single(sigma_minus().scale_real(k1.sqrt()), half_omega_sz(w)).unwrap();
        let g2 = SlhParams::single(sigma_minus().scale_real(k2.sqrt()), ComplexMatrix::zeros(2)).unwrap();
        let g = series(&g2, &g1).unwrap();
        let kappa = (k1.sqrt() + k2.sqrt()).powi(2);
        let r = BlochVector::new(0.2, -0.3, 0.5);
        let rho = bloch_matrix(1.0, r);
        let (tr, d) = bloch_components(&master_rhs(&g, &rho).unwrap());
        assert!(tr.abs() < 1e-15);
        assert!((d.x - (-0.5 * kappa * r.x - w * r.y)).abs() < 1e-14);
        assert!((d.y - (-0.5 * kappa * r.y + w * r.x)).abs() < 1e-14);
        assert!((d.z - (-kappa * r.z - kappa)).abs() < 1e-14);
    }

    #[test]
    fn master_rhs_ground_state_stationary() {
        let g = SlhParams::single(sigma_minus(), half_omega_sz(3.7)).unwrap();
        let rho = density_from_bloch(BlochVector::GROUND).unwrap();
        assert!(master_rhs_state(&g, &rho).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn atom_params_validation() {
        assert!(atom_params(-1.0, 0.0, 1.0, 0.0).is_err());
        assert!(atom_params(0.0, f64::NAN, 1.0, 0.0).is_err());
        let closed = atom_params(0.0, 0.0, 2.0, 0.0).unwrap();
        assert!(closed.couplings().iter().all(|l| l.max_abs() == 0.0));
        let driven = atom_params(1.0, 1.0, 0.5, -3.2).unwrap();
        assert!(driven.hamiltonian().is_self_adjoint(0.0));
    }

    #[test]
    fn evolve_master_matches_relaxation_law() {
        let g = atom_params(0.5, 0.5, 1.0, 0.0).unwrap();
        let r0 = BlochVector::new(0.0, 0.0, 1.0);
        let rho = density_from_bloch(r0).unwrap().into_matrix();
        let mut seen = 0;
        let out = evolve_master(&g, &rho, 2.0, 2000, |_, _| seen += 1).unwrap();
        assert_eq!(seen, 2000);
        let (n, r) = bloch_components(&out);
        assert!((n - 1.0).abs() < 1e-12);
        assert!((r.z - (2.0 * (-2.0f64).exp() - 1.0)).abs() < 1e-10);
        assert!(evolve_master(&g, &rho, 1.0, 0, |_, _| {}).is_err());
    }

    #[test]
    fn json_schema() {
        let g = atom_params(1.0, 0.0, 1.0, 0.0).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert!(v.get("couplings").unwrap().is_array());
        assert!(v.get("hamiltonian").unwrap().is_array());
        let back: SlhParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);

        let bad = r#"{"couplings": [], "hamiltonian": [[[0,0],[1,0]],[[0,0],[0,0]]]}"#;
        assert!(serde_json::from_str::<SlhParams>(bad).is_err());
    }
}
