//! Switching-function integrals and the first Magnus cumulants of the
//! toggling-frame evolution.
//!
//! With `g_0 = 1` and `g_μ = f_μ`, the toggling Hamiltonian is
//! `H(t) = Σ_a g_a(t) X_a` where `X_0 = 1 ⊗ H_B` and `X_μ = σ_μ ⊗ A_μ`.
//! Every cumulant is a weighted sum of nested commutators of the `X_a`, with
//! weights given by ordered integrals of products of the `g_a`:
//!
//! * `W1[a]       = ∫ g_a`
//! * `W2[a,b]     = ∫∫_{t₂<t₁} g_a(t₁) g_b(t₂)`
//! * `W3[a,b,c]   = ∫∫∫_{t₃<t₂<t₁} g_a(t₁) g_b(t₂) g_c(t₃)`
//!
//! The `g_a` are piecewise constant, so the running primitives are piecewise
//! polynomials and every weight is evaluated in closed form per interval.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Propagators;
use crate::linalg::{
    anticommutator, commutator, herm_expm, identity, kron, max_abs, trace, CMatrix, PauliAxis, C64,
};
use crate::model::HamiltonianParts;
use crate::scaling::linear_fit;
use crate::sequence::{qdd_schedule, switching_profile, SwitchingProfile};

/// Ordered integrals of products of `{1, f_x, f_y, f_z}` up to third order.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub w1: [f64; 4],
    pub w2: [[f64; 4]; 4],
    pub w3: [[[f64; 4]; 4]; 4],
}

impl Weights {
    /// Antisymmetric second-order kernel `W2[a,b] − W2[b,a]`.
    pub fn kernel(&self, a: usize, b: usize) -> f64 {
        self.w2[a][b] - self.w2[b][a]
    }
}

fn generator_values(signs: [i8; 3]) -> [f64; 4] {
    [1.0, signs[0] as f64, signs[1] as f64, signs[2] as f64]
}

pub fn generalized_weights(p: &SwitchingProfile) -> Weights {
    let mut w1 = [0.0; 4];
    let mut w2 = [[0.0; 4]; 4];
    let mut w3 = [[[0.0; 4]; 4]; 4];
    // c1[c] = ∫_0^s g_c, c2[b][c] = ∫∫_{t₃<t₂<s} g_b(t₂) g_c(t₃) at the
    // start s of the current interval.
    let mut c1 = [0.0; 4];
    let mut c2 = [[0.0; 4]; 4];
    for (a0, b0, signs) in p.intervals() {
        let l = b0 - a0;
        let g = generator_values(signs);
        for a in 0..4 {
            for b in 0..4 {
                w2[a][b] += g[a] * (c1[b] * l + g[b] * l * l / 2.0);
                for c in 0..4 {
                    // ∫_0^L C2(t) dt with C2(t) = c2 + g_b (c1 t + g_c t²/2).
                    let int_c2 =
                        c2[b][c] * l + g[b] * (c1[c] * l * l / 2.0 + g[c] * l * l * l / 6.0);
                    w3[a][b][c] += g[a] * int_c2;
                }
            }
        }
        for b in 0..4 {
            for c in 0..4 {
                c2[b][c] += g[b] * (c1[c] * l + g[c] * l * l / 2.0);
            }
        }
        for a in 0..4 {
            c1[a] += g[a] * l;
            w1[a] += g[a] * l;
        }
    }
    Weights { w1, w2, w3 }
}

/// Literal ordered integral `∫₀^τ dt₁ ∫₀^{t₁} dt₂ f_μ(t₂) f_ν(t₁)`.
pub fn ordered_double_integral(p: &SwitchingProfile, mu: PauliAxis, nu: PauliAxis) -> f64 {
    generalized_weights(p).w2[nu.index() + 1][mu.index() + 1]
}

/// Integral coefficients of the first three cumulants.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnusIntegrals {
    pub tau: f64,
    /// `∫ f_μ`.
    pub i1: [f64; 3],
    /// `∫₀^τ dt₁ ∫₀^{t₁} dt₂ (f_μ(t₂) − f_μ(t₁))`.
    pub i2_mu: [f64; 3],
    /// Commutator weight `∫∫_{t₂<t₁} (f_μ(t₁) f_ν(t₂) − f_ν(t₁) f_μ(t₂))`.
    pub i2_munu: [[f64; 3]; 3],
    /// `∫∫∫_{t₃<t₂<t₁} f_α(t₁) f_β(t₂) f_γ(t₃)`.
    pub i3: [[[f64; 3]; 3]; 3],
}

pub fn nested_integrals(p: &SwitchingProfile) -> MagnusIntegrals {
    let w = generalized_weights(p);
    let mut i2_munu = [[0.0; 3]; 3];
    let mut i3 = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            i2_munu[a][b] = w.kernel(a + 1, b + 1);
            for c in 0..3 {
                i3[a][b][c] = w.w3[a + 1][b + 1][c + 1];
            }
        }
    }
    MagnusIntegrals {
        tau: p.tau(),
        i1: [w.w1[1], w.w1[2], w.w1[3]],
        i2_mu: [1, 2, 3].map(|m| w.kernel(0, m)),
        i2_munu,
        i3,
    }
}

fn axis_key(axes: &[usize]) -> String {
    axes.iter().map(|&i| PauliAxis::ALL[i].label()).collect()
}

/// JSON form keyed by index strings (`"x"`, `"xz"`, `"xzz"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralsDoc {
    #[serde(rename = "N_x", skip_serializing_if = "Option::is_none", default)]
    pub n_x: Option<usize>,
    #[serde(rename = "N_z", skip_serializing_if = "Option::is_none", default)]
    pub n_z: Option<usize>,
    pub tau: f64,
    #[serde(rename = "I1")]
    pub i1: BTreeMap<String, f64>,
    #[serde(rename = "I2")]
    pub i2: BTreeMap<String, f64>,
    #[serde(rename = "I2_munu")]
    pub i2_munu: BTreeMap<String, f64>,
    #[serde(rename = "I3")]
    pub i3: BTreeMap<String, f64>,
}

impl MagnusIntegrals {
    pub fn to_doc(&self, n_x: Option<usize>, n_z: Option<usize>) -> IntegralsDoc {
        let mut doc = IntegralsDoc {
            n_x,
            n_z,
            tau: self.tau,
            i1: BTreeMap::new(),
            i2: BTreeMap::new(),
            i2_munu: BTreeMap::new(),
            i3: BTreeMap::new(),
        };
        for a in 0..3 {
            doc.i1.insert(axis_key(&[a]), self.i1[a]);
            doc.i2.insert(axis_key(&[a]), self.i2_mu[a]);
            for b in 0..3 {
                doc.i2_munu.insert(axis_key(&[a, b]), self.i2_munu[a][b]);
                for c in 0..3 {
                    doc.i3.insert(axis_key(&[a, b, c]), self.i3[a][b][c]);
                }
            }
        }
        doc
    }

    /// Triples `(α, β, γ)` with `|I₃| > tol` whose qubit operator
    /// `σ_α σ_β σ_γ` is not proportional to the identity.
    pub fn nonzero_i3_with_qubit_content(&self, tol: f64) -> Vec<[PauliAxis; 3]> {
        let mut out = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let distinct = a != b && b != c && a != c;
                    if !distinct && self.i3[a][b][c].abs() > tol {
                        out.push([PauliAxis::ALL[a], PauliAxis::ALL[b], PauliAxis::ALL[c]]);
                    }
                }
            }
        }
        out
    }
}

fn generators(h: &HamiltonianParts) -> [CMatrix; 4] {
    [
        kron(&identity(2), &h.h_b),
        kron(
            &crate::linalg::pauli(PauliAxis::X),
            h.coupling(PauliAxis::X),
        ),
        kron(
            &crate::linalg::pauli(PauliAxis::Y),
            h.coupling(PauliAxis::Y),
        ),
        kron(
            &crate::linalg::pauli(PauliAxis::Z),
            h.coupling(PauliAxis::Z),
        ),
    ]
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidDuration(tau));
    }
    Ok(())
}

/// `H̄¹` with `τ H̄¹ = τ (1 ⊗ H_B) + Σ_μ (∫f_μ) σ_μ ⊗ A_μ`.
pub fn cumulant1(h: &HamiltonianParts, p: &SwitchingProfile) -> Result<CMatrix> {
    let tau = p.tau();
    check_tau(tau)?;
    let w = generalized_weights(p);
    let x = generators(h);
    let mut out = CMatrix::zeros(x[0].nrows(), x[0].ncols());
    for (a, xa) in x.iter().enumerate() {
        if w.w1[a] != 0.0 {
            out += xa * C64::new(w.w1[a] / tau, 0.0);
        }
    }
    Ok(out)
}

/// `H̄²` from `2iτ H̄² = Σ_μ I₂^μ [X_0, X_μ] + Σ_{μ<ν} I₂^{μν} [X_μ, X_ν]`.
pub fn cumulant2(h: &HamiltonianParts, ints: &MagnusIntegrals) -> Result<CMatrix> {
    check_tau(ints.tau)?;
    let x = generators(h);
    let mut sum = CMatrix::zeros(x[0].nrows(), x[0].ncols());
    for mu in 0..3 {
        let k = ints.i2_mu[mu];
        if k != 0.0 {
            sum += commutator(&x[0], &x[mu + 1]) * C64::new(k, 0.0);
        }
        for nu in (mu + 1)..3 {
            let k = ints.i2_munu[mu][nu];
            if k != 0.0 {
                sum += commutator(&x[mu + 1], &x[nu + 1]) * C64::new(k, 0.0);
            }
        }
    }
    Ok(sum / C64::new(0.0, 2.0 * ints.tau))
}

/// `H̄³` with `τ H̄³ = −(1/6) Σ W3[a,b,c] ([X_c,[X_b,X_a]] + [X_a,[X_b,X_c]])`.
pub fn cumulant3(h: &HamiltonianParts, p: &SwitchingProfile) -> Result<CMatrix> {
    let tau = p.tau();
    check_tau(tau)?;
    let w = generalized_weights(p);
    let x = generators(h);
    let mut inner = vec![vec![None; 4]; 4];
    for b in 0..4 {
        for a in 0..4 {
            if a != b {
                inner[b][a] = Some(commutator(&x[b], &x[a]));
            }
        }
    }
    let mut sum = CMatrix::zeros(x[0].nrows(), x[0].ncols());
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let wt = w.w3[a][b][c];
                if wt == 0.0 {
                    continue;
                }
                let mut term = CMatrix::zeros(sum.nrows(), sum.ncols());
                if let Some(ba) = &inner[b][a] {
                    term += commutator(&x[c], ba);
                }
                if let Some(bc) = &inner[b][c] {
                    term += commutator(&x[a], bc);
                }
                sum += term * C64::new(wt, 0.0);
            }
        }
    }
    Ok(sum * C64::new(-1.0 / (6.0 * tau), 0.0))
}

/// `Tr_B{ρ_B [A_x, A_z]₊}`.
pub fn anticommutator_trace(h: &HamiltonianParts, rho_b: &CMatrix) -> Result<C64> {
    if rho_b.shape() != h.h_b.shape() {
        return Err(Error::DimensionMismatch {
            expected: h.bath_dim(),
            got: rho_b.nrows(),
        });
    }
    let ac = anticommutator(h.coupling(PauliAxis::X), h.coupling(PauliAxis::Z));
    Ok(trace(&(rho_b * ac)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    First,
    Second,
    Third,
}

impl Truncation {
    /// Remainder order of the truncated exponent.
    pub fn expected_slope(self) -> f64 {
        match self {
            Truncation::First => 2.0,
            Truncation::Second => 3.0,
            Truncation::Third => 4.0,
        }
    }
}

/// `exp(−iτ Σ_{n≤k} H̄ⁿ)` for one profile.
pub fn truncated_propagator(
    h: &HamiltonianParts,
    p: &SwitchingProfile,
    order: Truncation,
) -> Result<CMatrix> {
    let mut hbar = cumulant1(h, p)?;
    if order != Truncation::First {
        hbar += cumulant2(h, &nested_integrals(p))?;
    }
    if order == Truncation::Third {
        hbar += cumulant3(h, p)?;
    }
    herm_expm(&hbar, p.tau())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub slope: f64,
    pub r_squared: f64,
    pub taus: Vec<f64>,
    pub remainders: Vec<f64>,
}

/// Remainder below which `‖U − U_trunc‖` is indistinguishable from rounding.
pub const REMAINDER_FLOOR: f64 = 1e-13;

/// Slope of `log ‖U_tog − exp(−iτ Σ H̄ⁿ)‖_max` against `log τ`.
pub fn magnus_order_check(
    h: &HamiltonianParts,
    n_x: usize,
    n_z: usize,
    taus: &[f64],
    order: Truncation,
) -> Result<OrderCheck> {
    let props = Propagators::new(h);
    let mut remainders = Vec::with_capacity(taus.len());
    for &tau in taus {
        let p = switching_profile(&qdd_schedule(n_x, n_z, tau)?);
        let u = props.toggling(&p)?;
        remainders.push(max_abs(&(u - truncated_propagator(h, &p, order)?)));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(&remainders)
        .filter(|(_, &r)| r > REMAINDER_FLOOR)
        .map(|(&t, &r)| (t.ln(), r.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} remainders above {REMAINDER_FLOOR:e}",
            xs.len(),
            taus.len()
        )));
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(OrderCheck {
        slope: fit.slope,
        r_squared: fit.r_squared,
        taus: taus.to_vec(),
        remainders,
    })
}

/// Full report for one `(N_x, N_z, τ)` cell.
#[derive(Clone, Debug)]
pub struct MagnusReport {
    pub integrals: MagnusIntegrals,
    pub hbar1: CMatrix,
    pub hbar2: CMatrix,
    pub order_defect: Option<f64>,
}

pub fn magnus_report(
    h: &HamiltonianParts,
    n_x: usize,
    n_z: usize,
    tau: f64,
    order_taus: &[f64],
) -> Result<MagnusReport> {
    let p = switching_profile(&qdd_schedule(n_x, n_z, tau)?);
    let integrals = nested_integrals(&p);
    let hbar1 = cumulant1(h, &p)?;
    let hbar2 = cumulant2(h, &integrals)?;
    let order_defect = match magnus_order_check(h, n_x, n_z, order_taus, Truncation::Second) {
        Ok(c) => Some(c.slope),
        Err(Error::DegenerateFit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MagnusReport {
        integrals,
        hbar1,
        hbar2,
        order_defect,
    })
}
