//! Bath-operator coefficients, the four-term split of the reduced state and
//! π-rotation parities of the propagator components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::PropagatorDecomposition;
use crate::linalg::{identity, kron, max_abs, pauli, trace, CMatrix, PauliAxis, C64};
use crate::metrics::InitialState;

/// Complex number in JSON form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// `b_{μν} = Tr[B_μ ρ_B B_ν†]` and `b_μ = Tr[B_0 ρ_B B_μ†]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BCoefficients {
    pub matrix: [[C64; 3]; 3],
    pub vector: [C64; 3],
}

fn check_bath(dec: &PropagatorDecomposition, rho_b: &CMatrix) -> Result<()> {
    if rho_b.shape() != dec.b0.shape() {
        return Err(Error::DimensionMismatch {
            expected: dec.bath_dim(),
            got: rho_b.nrows(),
        });
    }
    Ok(())
}

pub fn b_coefficients(dec: &PropagatorDecomposition, rho_b: &CMatrix) -> Result<BCoefficients> {
    check_bath(dec, rho_b)?;
    let b_rho: Vec<CMatrix> = dec.b.iter().map(|b| b * rho_b).collect();
    let b0_rho = &dec.b0 * rho_b;
    let mut matrix = [[C64::new(0.0, 0.0); 3]; 3];
    let mut vector = [C64::new(0.0, 0.0); 3];
    for nu in 0..3 {
        // Tr[X Y†] = Σ X_ij conj(Y_ij).
        let b_nu = &dec.b[nu];
        vector[nu] = b_nu.dotc(&b0_rho);
        for mu in 0..3 {
            matrix[mu][nu] = b_nu.dotc(&b_rho[mu]);
        }
    }
    Ok(BCoefficients { matrix, vector })
}

/// `c_{μν} = σ_μ ρ_S σ_ν`.
pub fn c_matrix(rho_s: &CMatrix, mu: PauliAxis, nu: PauliAxis) -> CMatrix {
    pauli(mu) * rho_s * pauli(nu)
}

/// `d_μ = σ_μ ρ_S − ρ_S σ_μ`.
pub fn d_matrix(rho_s: &CMatrix, mu: PauliAxis) -> CMatrix {
    let s = pauli(mu);
    &s * rho_s - rho_s * &s
}

/// `Tr_B(U ρ₀ U†) = T₁ + T₂ + T₃ + T₄` for `U = 1 ⊗ B_0 + Σ σ_μ ⊗ B_μ`.
#[derive(Clone, Debug)]
pub struct TDecomposition {
    pub t: [CMatrix; 4],
}

impl TDecomposition {
    pub fn sum(&self) -> CMatrix {
        &self.t[0] + &self.t[1] + &self.t[2] + &self.t[3]
    }
}

pub fn t_decomposition(
    state: &InitialState,
    dec: &PropagatorDecomposition,
) -> Result<TDecomposition> {
    use PauliAxis::{X, Y, Z};
    let b = b_coefficients(dec, &state.rho_b)?;
    let rho = &state.rho_s;
    let bmn = |mu: PauliAxis, nu: PauliAxis| b.matrix[mu.index()][nu.index()];

    let mut t1 = rho * trace(&state.rho_b);
    for mu in PauliAxis::ALL {
        t1 += (c_matrix(rho, mu, mu) - rho) * bmn(mu, mu);
    }

    let mut t2 = CMatrix::zeros(2, 2);
    for mu in PauliAxis::ALL {
        for nu in PauliAxis::ALL {
            if mu != nu {
                t2 += c_matrix(rho, mu, nu) * bmn(mu, nu);
            }
        }
    }

    let mut t3 = CMatrix::zeros(2, 2);
    for mu in PauliAxis::ALL {
        t3 += d_matrix(rho, mu) * b.vector[mu.index()].conj();
    }

    // −i Σ ε_{μνκ} ρ_S σ_κ b_{ν,μ}, written out over the six nonzero ε.
    let w = |kappa: PauliAxis| rho * pauli(kappa);
    let sum = w(Z) * (bmn(Y, X) - bmn(X, Y))
        + w(X) * (bmn(Z, Y) - bmn(Y, Z))
        + w(Y) * (bmn(X, Z) - bmn(Z, X));
    let t4 = sum * C64::new(0.0, -1.0);

    Ok(TDecomposition {
        t: [t1, t2, t3, t4],
    })
}

/// `⊗_i σ_ν^(i)` on an `m`-spin bath.
pub fn bath_rotation(nu: PauliAxis, m: usize) -> CMatrix {
    (0..m).fold(identity(1), |acc, _| kron(&acc, &pauli(nu)))
}

/// Defects of `R B_0 R† = B_0`, `R B_ν R† = B_ν` and `R B_μ R† = −B_μ` (μ ≠ ν).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityDefects {
    pub nu: PauliAxis,
    pub b0: f64,
    /// Indexed by μ; the ν entry is the even-parity defect.
    pub components: [f64; 3],
}

impl ParityDefects {
    pub fn max(&self) -> f64 {
        self.components.iter().copied().fold(self.b0, f64::max)
    }
}

pub fn rotation_parities(
    dec: &PropagatorDecomposition,
    nu: PauliAxis,
    m: usize,
) -> Result<ParityDefects> {
    let r = bath_rotation(nu, m);
    if r.nrows() != dec.bath_dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.bath_dim(),
            got: r.nrows(),
        });
    }
    // R is Hermitian and unitary, so R† = R.
    let conj = |b: &CMatrix| &r * b * &r;
    let b0 = max_abs(&(conj(&dec.b0) - &dec.b0));
    let components = PauliAxis::ALL.map(|mu| {
        let b = dec.component(mu);
        if mu == nu {
            max_abs(&(conj(b) - b))
        } else {
            max_abs(&(conj(b) + b))
        }
    });
    Ok(ParityDefects { nu, b0, components })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub b_matrix: [[Complex; 3]; 3],
    pub b_vector: [Complex; 3],
    pub parity_defects: Vec<ParityDefects>,
    pub t_residual: f64,
}

impl SymmetryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn max_parity_defect(&self) -> f64 {
        self.parity_defects
            .iter()
            .map(ParityDefects::max)
            .fold(0.0, f64::max)
    }

    pub fn max_offdiagonal_b(&self) -> f64 {
        let mut m: f64 = 0.0;
        for mu in 0..3 {
            for nu in 0..3 {
                if mu != nu {
                    let z = self.b_matrix[mu][nu];
                    m = m.max(z.re.hypot(z.im));
                }
            }
        }
        m
    }

    pub fn max_b_vector(&self) -> f64 {
        self.b_vector
            .iter()
            .map(|z| z.re.hypot(z.im))
            .fold(0.0, f64::max)
    }
}

pub fn symmetry_report(
    state: &InitialState,
    dec: &PropagatorDecomposition,
    m: usize,
) -> Result<SymmetryReport> {
    let b = b_coefficients(dec, &state.rho_b)?;
    let t = t_decomposition(state, dec)?;
    let t_residual = max_abs(&(t.sum() - state.evolved_reduced(&dec.u)?));
    let parity_defects = PauliAxis::ALL
        .iter()
        .map(|&nu| rotation_parities(dec, nu, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SymmetryReport {
        b_matrix: b.matrix.map(|row| row.map(Complex::from)),
        b_vector: b.vector.map(Complex::from),
        parity_defects,
        t_residual,
    })
}
