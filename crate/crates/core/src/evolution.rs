//! Exact propagators in the lab and toggling frames.
//!
//! Between pulses the toggling-frame Hamiltonian is
//! `H_f = 1 ⊗ H_B + Σ_μ f_μ σ_μ ⊗ A_μ` with `f ∈ {±1}³`, so at most eight
//! distinct generators occur. [`Propagators`] diagonalizes each one once and
//! reuses the eigenbasis for every segment length.

use std::sync::OnceLock;

use crate::error::Result;
use crate::linalg::{
    identity, kron, levi_civita, max_abs, pauli, qubit_pauli_component, unitarity_defect, CMatrix,
    HermitianEigen, PauliAxis, C64,
};
use crate::model::HamiltonianParts;
use crate::sequence::{PulseAxis, PulseSchedule, SwitchingProfile};

fn sign_index(signs: [i8; 3]) -> usize {
    signs
        .iter()
        .enumerate()
        .map(|(k, &s)| if s < 0 { 1 << k } else { 0 })
        .sum()
}

/// Left-multiplies by `σ ⊗ 1_D` in place (row permutation / sign flip).
fn apply_qubit_pulse(axis: PulseAxis, u: &mut CMatrix) {
    let d = u.nrows() / 2;
    match axis {
        PulseAxis::X => {
            for r in 0..d {
                u.swap_rows(r, r + d);
            }
        }
        PulseAxis::Z => {
            let mut lower = u.rows_mut(d, d);
            lower.neg_mut();
        }
    }
}

/// Propagator factory for one Hamiltonian; cheap to share across threads.
pub struct Propagators<'h> {
    h: &'h HamiltonianParts,
    segments: [OnceLock<HermitianEigen>; 8],
    bath: OnceLock<HermitianEigen>,
}

impl<'h> Propagators<'h> {
    pub fn new(h: &'h HamiltonianParts) -> Self {
        Self {
            h,
            segments: Default::default(),
            bath: OnceLock::new(),
        }
    }

    pub fn hamiltonian(&self) -> &HamiltonianParts {
        self.h
    }

    /// `1 ⊗ H_B + Σ_μ f_μ σ_μ ⊗ A_μ`.
    pub fn segment_hamiltonian(&self, signs: [i8; 3]) -> CMatrix {
        let mut h = kron(&identity(2), &self.h.h_b);
        for axis in PauliAxis::ALL {
            let f = signs[axis.index()] as f64;
            h += kron(&pauli(axis), self.h.coupling(axis)).scale(f);
        }
        h
    }

    fn segment(&self, signs: [i8; 3]) -> Result<&HermitianEigen> {
        let slot = &self.segments[sign_index(signs)];
        if let Some(e) = slot.get() {
            return Ok(e);
        }
        let eig = HermitianEigen::new(&self.segment_hamiltonian(signs))?;
        Ok(slot.get_or_init(|| eig))
    }

    /// Time-ordered product over the profile intervals, latest leftmost.
    pub fn toggling(&self, p: &SwitchingProfile) -> Result<CMatrix> {
        let n = 2 * self.h.bath_dim();
        let mut u = identity(n);
        for (a, b, signs) in p.intervals() {
            let dt = b - a;
            if dt == 0.0 {
                continue;
            }
            u = self.segment(signs)?.propagator(dt) * u;
        }
        Ok(u)
    }

    /// Toggling propagator together with its unitarity defect `‖U†U − 1‖_max`.
    pub fn toggling_diagnosed(&self, p: &SwitchingProfile) -> Result<(CMatrix, f64)> {
        let u = self.toggling(p)?;
        let defect = unitarity_defect(&u);
        Ok((u, defect))
    }

    /// Free evolution under the full Hamiltonian interleaved with bare Pauli
    /// pulses `σ ⊗ 1_D`.
    pub fn lab(&self, s: &PulseSchedule) -> Result<CMatrix> {
        let n = 2 * self.h.bath_dim();
        let free = self.segment([1, 1, 1])?;
        let mut u = identity(n);
        let mut prev = 0.0;
        for e in &s.events {
            u = free.propagator(e.t - prev) * u;
            apply_qubit_pulse(e.axis, &mut u);
            prev = e.t;
        }
        u = free.propagator(s.tau - prev) * u;
        Ok(u)
    }

    /// `1 ⊗ exp(−iτ H_B)`.
    pub fn bath(&self, tau: f64) -> Result<CMatrix> {
        let eig = match self.bath.get() {
            Some(e) => e,
            None => {
                let e = HermitianEigen::new(&self.h.h_b)?;
                self.bath.get_or_init(|| e)
            }
        };
        Ok(kron(&identity(2), &eig.propagator(tau)))
    }
}

pub fn toggling_propagator(h: &HamiltonianParts, p: &SwitchingProfile) -> Result<CMatrix> {
    Propagators::new(h).toggling(p)
}

pub fn lab_propagator(h: &HamiltonianParts, s: &PulseSchedule) -> Result<CMatrix> {
    Propagators::new(h).lab(s)
}

pub fn bath_propagator(h: &HamiltonianParts, tau: f64) -> Result<CMatrix> {
    Propagators::new(h).bath(tau)
}

/// `U = 1 ⊗ B_0 + Σ_μ σ_μ ⊗ B_μ`.
#[derive(Clone, Debug)]
pub struct PropagatorDecomposition {
    pub u: CMatrix,
    pub b0: CMatrix,
    pub b: [CMatrix; 3],
    pub tau: f64,
}

pub fn pauli_decompose(u: &CMatrix, tau: f64) -> Result<PropagatorDecomposition> {
    let b0 = qubit_pauli_component(u, None)?;
    let b = [
        qubit_pauli_component(u, Some(PauliAxis::X))?,
        qubit_pauli_component(u, Some(PauliAxis::Y))?,
        qubit_pauli_component(u, Some(PauliAxis::Z))?,
    ];
    Ok(PropagatorDecomposition {
        u: u.clone(),
        b0,
        b,
        tau,
    })
}

impl PropagatorDecomposition {
    pub fn bath_dim(&self) -> usize {
        self.b0.nrows()
    }

    pub fn component(&self, axis: PauliAxis) -> &CMatrix {
        &self.b[axis.index()]
    }

    pub fn reassemble(&self) -> CMatrix {
        let mut u = kron(&identity(2), &self.b0);
        for axis in PauliAxis::ALL {
            u += kron(&pauli(axis), self.component(axis));
        }
        u
    }

    pub fn reassembly_residual(&self) -> f64 {
        max_abs(&(self.reassemble() - &self.u))
    }

    /// `‖B_0 B_0† + Σ_μ B_μ B_μ† − 1‖_max`.
    pub fn norm_residual(&self) -> f64 {
        let mut s = &self.b0 * self.b0.adjoint();
        for b in &self.b {
            s += b * b.adjoint();
        }
        max_abs(&(s - identity(self.bath_dim())))
    }

    /// For each κ: `‖i Σ_{μν} ε_{μνκ} B_μ B_ν† + B_0 B_κ† + B_κ B_0†‖_max`.
    pub fn cross_residuals(&self) -> [f64; 3] {
        PauliAxis::ALL.map(|kappa| {
            let bk = self.component(kappa);
            let mut s = &self.b0 * bk.adjoint() + bk * self.b0.adjoint();
            for mu in PauliAxis::ALL {
                for nu in PauliAxis::ALL {
                    let eps = levi_civita(mu, nu, kappa);
                    if eps != 0.0 {
                        s += (self.component(mu) * self.component(nu).adjoint())
                            * C64::new(0.0, eps);
                    }
                }
            }
            max_abs(&s)
        })
    }

    pub fn component_norm(&self, axis: PauliAxis) -> f64 {
        self.component(axis).norm()
    }
}
