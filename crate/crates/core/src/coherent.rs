//! Direct-coupling coherent feedback between two qubits: a plant `P` and a
//! controller `C` interacting only through instantaneous CNOT impulses.
//!
//! States are ordered `|q_P q_C⟩` with the plant first. Bit 0 is the ground
//! state `|↓⟩` and bit 1 the excited state `|↑⟩`; since `|↑⟩` is the first
//! basis vector of a single qubit, bit `b` sits at vector index `1 − b`.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    identity2, partial_trace, sigma_x, sigma_y, sigma_z, tensor, ComplexMatrix, Subsystem, C64, ONE, ZERO,
};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Plant,
    Controller,
}

/// Vector index of a single-qubit bit.
fn bit_index(bit: u8) -> usize {
    1 - bit as usize
}

/// Vector index of `|b_P b_C⟩`.
pub fn basis_index(plant_bit: u8, controller_bit: u8) -> usize {
    2 * bit_index(plant_bit) + bit_index(controller_bit)
}

/// Single-qubit amplitudes `α|↑⟩ + β|↓⟩`, normalized to 1e-12.
pub fn qubit(alpha: C64, beta: C64) -> Result<[C64; 2]> {
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotAState(format!("qubit norm {norm}")));
    }
    Ok([alpha, beta])
}

pub const DOWN: [C64; 2] = [ZERO, ONE];
pub const UP: [C64; 2] = [ONE, ZERO];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    amplitudes: [C64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let s = Self { amplitudes };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotAState(format!("two-qubit norm {norm}")));
        }
        Ok(s)
    }

    /// `plant ⊗ controller`
    pub fn product(plant: [C64; 2], controller: [C64; 2]) -> Result<Self> {
        let mut a = [ZERO; 4];
        for i in 0..2 {
            for j in 0..2 {
                a[2 * i + j] = plant[i] * controller[j];
            }
        }
        Self::new(a)
    }

    pub fn basis(plant_bit: u8, controller_bit: u8) -> Self {
        let mut amplitudes = [ZERO; 4];
        amplitudes[basis_index(plant_bit, controller_bit)] = ONE;
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes).expect("equal lengths")
    }

    /// Reduced density matrix of one party.
    pub fn reduced(&self, party: Party) -> ComplexMatrix {
        let traced = match party {
            Party::Plant => Subsystem::Second,
            Party::Controller => Subsystem::First,
        };
        partial_trace(&self.density(), traced).expect("4x4 density")
    }

    pub fn expectation(&self, x: &ComplexMatrix) -> Result<f64> {
        Ok(x.expectation(&self.amplitudes)?.re)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct BipartiteUnitary(ComplexMatrix);

impl TryFrom<ComplexMatrix> for BipartiteUnitary {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<BipartiteUnitary> for ComplexMatrix {
    fn from(u: BipartiteUnitary) -> Self {
        u.0
    }
}

impl BipartiteUnitary {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::UnsupportedDimension(m.dim()));
        }
        let dev = (&m.adjoint() * &m).max_abs_diff(&ComplexMatrix::identity(4));
        if dev > NORM_TOL {
            return Err(Error::NotAState(format!("operator is not unitary (deviation {dev:.3e})")));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(ComplexMatrix::identity(4))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn apply(&self, s: &TwoQubitState) -> TwoQubitState {
        let v = self.0.apply(&s.amplitudes).expect("4x4 acting on 4-vector");
        TwoQubitState {
            amplitudes: [v[0], v[1], v[2], v[3]],
        }
    }
}

/// CNOT with `control` as the control bit: flips the other qubit's bit when
/// the control bit is 1.
pub fn cnot(control: Party) -> BipartiteUnitary {
    let mut m = ComplexMatrix::zeros(4);
    for p in 0..2u8 {
        for c in 0..2u8 {
            let (np, nc) = match control {
                Party::Plant => (p, c ^ p),
                Party::Controller => (p ^ c, c),
            };
            m.set(basis_index(np, nc), basis_index(p, c), ONE);
        }
    }
    BipartiteUnitary(m)
}

/// Impulse times and gates.
pub type DirectSchedule = Vec<(f64, BipartiteUnitary)>;

/// The swap-to-ground protocol `((0, CNOT_PC), (1, CNOT_CP))`.
pub fn canonical_schedule() -> DirectSchedule {
    vec![(0.0, cnot(Party::Plant)), (1.0, cnot(Party::Controller))]
}

fn check_times(schedule: &[(f64, BipartiteUnitary)]) -> Result<()> {
    if schedule.iter().any(|(t, _)| !t.is_finite()) {
        return Err(Error::invalid("schedule", "impulse times must be finite"));
    }
    if schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("schedule", "impulse times must be strictly increasing"));
    }
    Ok(())
}

/// Applies the impulses in order; between impulses nothing happens.
pub fn apply_direct_schedule(state: &TwoQubitState, schedule: &[(f64, BipartiteUnitary)]) -> Result<TwoQubitState> {
    check_times(schedule)?;
    Ok(schedule.iter().fold(*state, |s, (_, v)| v.apply(&s)))
}

/// `V†XV`
pub fn heisenberg_conjugate(v: &BipartiteUnitary, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    v.0.adjoint().try_mul(x)?.try_mul(&v.0)
}

/// Observable after the whole schedule in the Heisenberg picture; the last
/// impulse is conjugated first.
pub fn heisenberg_schedule(schedule: &[(f64, BipartiteUnitary)], x: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_times(schedule)?;
    schedule
        .iter()
        .rev()
        .try_fold(x.clone(), |acc, (_, v)| heisenberg_conjugate(v, &acc))
}

/// Pauli operator `σ_axis` acting on one party, as a 4×4 operator.
pub fn local_pauli(party: Party, axis: char) -> Result<ComplexMatrix> {
    let s = match axis {
        'x' => sigma_x(),
        'y' => sigma_y(),
        'z' => sigma_z(),
        'i' => identity2(),
        _ => return Err(Error::invalid("axis", format!("unknown Pauli axis `{axis}`"))),
    };
    Ok(match party {
        Party::Plant => tensor(&s, &identity2()),
        Party::Controller => tensor(&identity2(), &s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub pass: bool,
    /// `⟨↓|ρ_P|↓⟩` after the schedule.
    pub fidelity: f64,
    pub initial: TwoQubitState,
    pub final_state: TwoQubitState,
    pub plant_final: ComplexMatrix,
    pub controller_final: ComplexMatrix,
}

/// Runs the canonical schedule with the controller prepared in `|↓⟩` and
/// reports how well the plant ends in `|↓⟩`.
pub fn verify_transfer(plant: [C64; 2]) -> Result<TransferReport> {
    let plant = qubit(plant[0], plant[1])?;
    let initial = TwoQubitState::product(plant, DOWN)?;
    let final_state = apply_direct_schedule(&initial, &canonical_schedule())?;
    let plant_final = final_state.reduced(Party::Plant);
    let fidelity = plant_final.get(bit_index(0), bit_index(0)).re;
    Ok(TransferReport {
        pass: (fidelity - 1.0).abs() <= NORM_TOL,
        fidelity,
        initial,
        plant_final,
        controller_final: final_state.reduced(Party::Controller),
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::I;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn truth_table() {
        let pc = cnot(Party::Plant);
        let cp = cnot(Party::Controller);
        assert_eq!(pc.apply(&TwoQubitState::basis(1, 0)), TwoQubitState::basis(1, 1));
        assert_eq!(pc.apply(&TwoQubitState::basis(1, 1)), TwoQubitState::basis(1, 0));
        assert_eq!(pc.apply(&TwoQubitState::basis(0, 0)), TwoQubitState::basis(0, 0));
        assert_eq!(pc.apply(&TwoQubitState::basis(0, 1)), TwoQubitState::basis(0, 1));
        assert_eq!(cp.apply(&TwoQubitState::basis(0, 1)), TwoQubitState::basis(1, 1));
        assert_eq!(cp.apply(&TwoQubitState::basis(1, 0)), TwoQubitState::basis(1, 0));
    }

    #[test]
    fn cnot_is_unitary_involution() {
        for party in [Party::Plant, Party::Controller] {
            let v = cnot(party);
            assert!(BipartiteUnitary::new(v.matrix().clone()).is_ok());
            assert_eq!(v.matrix() * v.matrix(), ComplexMatrix::identity(4));
        }
        assert_ne!(cnot(Party::Plant), cnot(Party::Controller));
    }

    #[test]
    fn bit_convention() {
        // bit 0 is the ground state, the second single-qubit basis vector
        assert_eq!(TwoQubitState::basis(0, 0), TwoQubitState::product(DOWN, DOWN).unwrap());
        assert_eq!(TwoQubitState::basis(1, 0), TwoQubitState::product(UP, DOWN).unwrap());
    }

    #[test]
    fn schedule_swaps_plant_onto_controller() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let s0 = TwoQubitState::product([a, b], DOWN).unwrap();
        let s1 = apply_direct_schedule(&s0, &canonical_schedule()).unwrap();
        let expect = TwoQubitState::product(DOWN, [a, b]).unwrap();
        assert!(s1.max_abs_diff(&expect) < 1e-15);
        let rep = verify_transfer([a, b]).unwrap();
        assert!(rep.pass);
        let ctrl = ComplexMatrix::outer(&[a, b], &[a, b]).unwrap();
        assert!(rep.controller_final.max_abs_diff(&ctrl) < 1e-15);
    }

    #[test]
    fn basis_chase_and_fixed_ground() {
        assert_eq!(verify_transfer(UP).unwrap().fidelity, 1.0);
        let rep = verify_transfer(DOWN).unwrap();
        assert_eq!(rep.fidelity, 1.0);
        assert_eq!(rep.final_state, rep.initial);
    }

    #[test]
    fn empty_schedule_and_ordering() {
        let s = TwoQubitState::product(UP, UP).unwrap();
        assert_eq!(apply_direct_schedule(&s, &[]).unwrap(), s);
        let bad = vec![(1.0, cnot(Party::Plant)), (1.0, cnot(Party::Controller))];
        assert!(apply_direct_schedule(&s, &bad).is_err());
    }

    #[test]
    fn heisenberg_identity_and_dimension() {
        let x = local_pauli(Party::Plant, 'y').unwrap();
        assert_eq!(heisenberg_conjugate(&BipartiteUnitary::identity(), &x).unwrap(), x);
        assert!(heisenberg_conjugate(&cnot(Party::Plant), &sigma_x()).is_err());
    }

    #[test]
    fn pictures_agree() {
        let s0 = TwoQubitState::product([c(0.6, 0.0), c(0.0, 0.8)], DOWN).unwrap();
        let sched = canonical_schedule();
        let s1 = apply_direct_schedule(&s0, &sched).unwrap();
        for party in [Party::Plant, Party::Controller] {
            for axis in ['x', 'y', 'z'] {
                let x = local_pauli(party, axis).unwrap();
                let h = heisenberg_schedule(&sched, &x).unwrap();
                assert!((s1.expectation(&x).unwrap() - s0.expectation(&h).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(qubit(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(TwoQubitState::new([ONE, ONE, ZERO, ZERO]).is_err());
        assert!(BipartiteUnitary::new(ComplexMatrix::identity(4).scale(c(2.0, 0.0))).is_err());
        assert!(BipartiteUnitary::new(ComplexMatrix::identity(2)).is_err());
        assert!(local_pauli(Party::Plant, 'q').is_err());
        let phase = BipartiteUnitary::new(ComplexMatrix::identity(4).scale(I)).unwrap();
        assert_eq!(phase.matrix().get(0, 0), I);
    }
}
