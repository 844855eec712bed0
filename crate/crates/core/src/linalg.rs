//! Dense complex-matrix kernel.
//!
//! Every operator in the crate lives on `2^n`-dimensional spin space. The
//! qubit is the most significant tensor factor: a full-space index is
//! `s * D + a` with `s` the qubit index and `a` the bath index, `D = 2^M`.
//! With this ordering `kron(qubit_op, bath_op)` is the natural embedding and
//! the qubit partial trace is a sum of contiguous `D x D` blocks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative tolerance used to accept an operator as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn index(self) -> usize {
        match self {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
            PauliAxis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }
}

impl std::fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl std::str::FromStr for PauliAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(PauliAxis::X),
            "y" | "Y" => Ok(PauliAxis::Y),
            "z" | "Z" => Ok(PauliAxis::Z),
            other => Err(format!("unknown Pauli axis '{other}'")),
        }
    }
}

/// Levi-Civita symbol over (x, y, z).
pub fn levi_civita(a: PauliAxis, b: PauliAxis, c: PauliAxis) -> f64 {
    use PauliAxis::*;
    match (a, b, c) {
        (X, Y, Z) | (Y, Z, X) | (Z, X, Y) => 1.0,
        (X, Z, Y) | (Z, Y, X) | (Y, X, Z) => -1.0,
        _ => 0.0,
    }
}

pub fn pauli(axis: PauliAxis) -> CMatrix {
    match axis {
        PauliAxis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        PauliAxis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        PauliAxis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Places a single-spin operator at `site` among `n_sites` spins.
///
/// Site 0 is the qubit and is the leftmost (most significant) factor.
pub fn embed(op: &CMatrix, site: usize, n_sites: usize) -> Result<CMatrix> {
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if op.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: op.nrows(),
        });
    }
    let left = 1usize << site;
    let right = 1usize << (n_sites - site - 1);
    Ok(kron(&kron(&identity(left), op), &identity(right)))
}

/// Max-norm `max |a_ij|`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `max |A - A†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `max |U†U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOL * max_abs(h).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix, kept around so
/// `exp(-i t H)` can be formed for many `t` without refactoring.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        check_hermitian(h)?;
        // Symmetrize so the solver, which reads one triangle, sees the exact
        // Hermitian part.
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i t H)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return identity(self.dim());
        }
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            let phase = C64::from_polar(1.0, -self.values[j] * t);
            col *= phase;
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn herm_expm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}

fn bath_dim(op: &CMatrix) -> Result<usize> {
    let n = op.nrows();
    if n != op.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: op.ncols(),
        });
    }
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    Ok(n / 2)
}

/// Traces out the qubit: `result[a,b] = Σ_s op[(s,a),(s,b)]`.
pub fn partial_trace_qubit(op: &CMatrix) -> Result<CMatrix> {
    let d = bath_dim(op)?;
    Ok(op.view((0, 0), (d, d)) + op.view((d, d), (d, d)))
}

/// Traces out the bath, leaving a 2x2 qubit operator.
pub fn partial_trace_bath(op: &CMatrix) -> Result<CMatrix> {
    let d = bath_dim(op)?;
    let mut out = CMatrix::zeros(2, 2);
    for s in 0..2 {
        for t in 0..2 {
            out[(s, t)] = op.view((s * d, t * d), (d, d)).trace();
        }
    }
    Ok(out)
}

/// Bath operator multiplying `σ_axis` (or the identity for `None`) in the
/// qubit Pauli expansion of `op`: `½ Tr_q[(σ ⊗ 1) op]`.
pub fn qubit_pauli_component(op: &CMatrix, axis: Option<PauliAxis>) -> Result<CMatrix> {
    let d = bath_dim(op)?;
    let projected = match axis {
        None => op.clone(),
        Some(a) => kron(&pauli(a), &identity(d)) * op,
    };
    Ok(partial_trace_qubit(&projected)?.scale(0.5))
}
