//! Central-spin and spin-chain Hamiltonians with seeded random couplings.
//!
//! `H = Σ_{i<j} σ⃗^(i) J0^{ij} σ⃗^(j) + Σ_i σ⃗^(0) J1^i σ⃗^(i)` where site 0 is the
//! qubit and sites `1..=M` form the bath. The same Hamiltonian is kept in the
//! qubit Pauli form `H = 1 ⊗ H_B + Σ_μ σ_μ ⊗ A_μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, embed, identity, kron, max_abs, pauli, CMatrix, PauliAxis};
use crate::rng::SplitMix64;

/// Largest bath accepted by the validators; the full space is `2^(M+1)`.
pub const MAX_BATH_SPINS: usize = 10;

pub type Mat3 = [[f64; 3]; 3];

const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const ZERO3: Mat3 = [[0.0; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    CentralSpin,
    Chain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    Anisotropic,
    Isotropic,
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "centralspin" | "central" => Ok(Topology::CentralSpin),
            "chain" => Ok(Topology::Chain),
            _ => Err(format!(
                "unknown topology '{s}' (expected central-spin or chain)"
            )),
        }
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "anisotropic" | "low" => Ok(SymmetryClass::Anisotropic),
            "isotropic" | "high" => Ok(SymmetryClass::Isotropic),
            _ => Err(format!(
                "unknown symmetry class '{s}' (expected anisotropic or isotropic)"
            )),
        }
    }
}

/// Bath-bath coupling matrix between bath sites `i < j` (both in `1..=M`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCoupling {
    pub i: usize,
    pub j: usize,
    pub matrix: Mat3,
}

/// Qubit-bath coupling matrix for bath site `i`; rows index the qubit axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteCoupling {
    pub i: usize,
    pub matrix: Mat3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSet {
    #[serde(rename = "M")]
    pub m: usize,
    pub topology: Topology,
    pub symmetry_class: SymmetryClass,
    #[serde(rename = "J0")]
    pub j0: Vec<PairCoupling>,
    #[serde(rename = "J1")]
    pub j1: Vec<SiteCoupling>,
    pub alpha: f64,
    pub lambda: f64,
    pub seed: u64,
}

fn pair_active(topology: Topology, i: usize, j: usize) -> bool {
    match topology {
        Topology::CentralSpin => true,
        Topology::Chain => j == i + 1,
    }
}

fn site_active(topology: Topology, i: usize) -> bool {
    match topology {
        Topology::CentralSpin => true,
        Topology::Chain => i == 1,
    }
}

fn scaled_identity(s: f64) -> Mat3 {
    let mut m = IDENTITY3;
    for (k, row) in m.iter_mut().enumerate() {
        row[k] *= s;
    }
    m
}

fn random_matrix(rng: &mut SplitMix64, class: SymmetryClass, scale: f64) -> Mat3 {
    match class {
        SymmetryClass::Anisotropic => {
            let mut m = ZERO3;
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.next_symmetric();
                }
            }
            m
        }
        SymmetryClass::Isotropic => scaled_identity(scale * rng.next_symmetric()),
    }
}

/// Draws couplings with `α = λ = 1`.
pub fn random_couplings(
    seed: u64,
    m: usize,
    class: SymmetryClass,
    topology: Topology,
) -> Result<CouplingSet> {
    random_couplings_scaled(seed, m, class, topology, 1.0, 1.0)
}

/// Draws a coupling set from a splitmix64 stream.
///
/// Draw order: bath pairs `(i, j)` in lexicographic order, then qubit-bath
/// sites in ascending `i`. Anisotropic matrices consume nine draws in
/// row-major order, isotropic matrices one scalar. Couplings masked out by
/// the topology consume nothing. `α` and `λ` only scale the isotropic class.
pub fn random_couplings_scaled(
    seed: u64,
    m: usize,
    class: SymmetryClass,
    topology: Topology,
    alpha: f64,
    lambda: f64,
) -> Result<CouplingSet> {
    check_bath_size(m)?;
    let mut rng = SplitMix64::new(seed);
    let mut j0 = Vec::with_capacity(m * (m - 1) / 2);
    for i in 1..=m {
        for j in (i + 1)..=m {
            let matrix = if pair_active(topology, i, j) {
                random_matrix(&mut rng, class, alpha * lambda)
            } else {
                ZERO3
            };
            j0.push(PairCoupling { i, j, matrix });
        }
    }
    let j1 = (1..=m)
        .map(|i| SiteCoupling {
            i,
            matrix: if site_active(topology, i) {
                random_matrix(&mut rng, class, lambda)
            } else {
                ZERO3
            },
        })
        .collect();
    let set = CouplingSet {
        m,
        topology,
        symmetry_class: class,
        j0,
        j1,
        alpha,
        lambda,
        seed,
    };
    set.validate()?;
    Ok(set)
}

fn check_bath_size(m: usize) -> Result<()> {
    match m {
        0 => Err(Error::EmptyBath),
        m if m > MAX_BATH_SPINS => Err(Error::BathTooLarge(m)),
        _ => Ok(()),
    }
}

fn is_scalar_identity(m: &Mat3) -> bool {
    (0..3).all(|r| {
        (0..3).all(|c| {
            if r == c {
                m[r][c] == m[0][0]
            } else {
                m[r][c] == 0.0
            }
        })
    })
}

impl CouplingSet {
    /// Isotropic model with identical couplings `J0 = αλ 1`, `J1 = λ 1` on
    /// every active bond.
    pub fn uniform_isotropic(
        m: usize,
        topology: Topology,
        alpha: f64,
        lambda: f64,
    ) -> Result<Self> {
        check_bath_size(m)?;
        let mut j0 = Vec::new();
        for i in 1..=m {
            for j in (i + 1)..=m {
                let s = if pair_active(topology, i, j) {
                    alpha * lambda
                } else {
                    0.0
                };
                j0.push(PairCoupling {
                    i,
                    j,
                    matrix: scaled_identity(s),
                });
            }
        }
        let j1 = (1..=m)
            .map(|i| SiteCoupling {
                i,
                matrix: scaled_identity(if site_active(topology, i) {
                    lambda
                } else {
                    0.0
                }),
            })
            .collect();
        let set = CouplingSet {
            m,
            topology,
            symmetry_class: SymmetryClass::Isotropic,
            j0,
            j1,
            alpha,
            lambda,
            seed: 0,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.m
    }

    /// Checks structure, finiteness, the class invariants and the topology mask.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCouplings(msg));
        check_bath_size(self.m)?;
        if !self.alpha.is_finite() || !self.lambda.is_finite() {
            return bad("alpha and lambda must be finite".into());
        }
        let m = self.m;
        if self.j0.len() != m * (m - 1) / 2 {
            return bad(format!(
                "expected {} bath pairs, got {}",
                m * (m - 1) / 2,
                self.j0.len()
            ));
        }
        let pairs = (1..=m).flat_map(|i| ((i + 1)..=m).map(move |j| (i, j)));
        for (p, (i, j)) in self.j0.iter().zip(pairs) {
            if (p.i, p.j) != (i, j) {
                return bad(format!(
                    "bath pair ({}, {}) out of order, expected ({i}, {j})",
                    p.i, p.j
                ));
            }
        }
        if self.j1.len() != m {
            return bad(format!(
                "expected {m} qubit-bath couplings, got {}",
                self.j1.len()
            ));
        }
        for (k, s) in self.j1.iter().enumerate() {
            if s.i != k + 1 {
                return bad(format!(
                    "qubit-bath site {} out of order, expected {}",
                    s.i,
                    k + 1
                ));
            }
        }
        let all = self
            .j0
            .iter()
            .map(|p| {
                (
                    &p.matrix,
                    pair_active(self.topology, p.i, p.j),
                    self.alpha * self.lambda,
                )
            })
            .chain(
                self.j1
                    .iter()
                    .map(|s| (&s.matrix, site_active(self.topology, s.i), self.lambda)),
            );
        for (mat, active, iso_scale) in all {
            if mat.iter().flatten().any(|v| !v.is_finite()) {
                return bad("non-finite coupling entry".into());
            }
            if !active && mat.iter().flatten().any(|&v| v != 0.0) {
                return bad("coupling outside the topology is nonzero".into());
            }
            match self.symmetry_class {
                SymmetryClass::Anisotropic => {
                    if mat.iter().flatten().any(|v| v.abs() > 1.0) {
                        return bad("anisotropic coupling entry outside [-1, 1]".into());
                    }
                }
                SymmetryClass::Isotropic => {
                    if !is_scalar_identity(mat) {
                        return bad("isotropic coupling is not a multiple of the identity".into());
                    }
                    if mat[0][0].abs() > iso_scale.abs() * (1.0 + 1e-12) {
                        return bad("isotropic coupling exceeds its scale".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: CouplingSet = serde_json::from_str(s)?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coupling set serializes")
    }
}

/// `H = 1 ⊗ H_B + Σ_μ σ_μ ⊗ A_μ`, all pieces Hermitian.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub h_b: CMatrix,
    pub a: [CMatrix; 3],
    pub h_full: CMatrix,
}

impl HamiltonianParts {
    /// Assembles the full Hamiltonian from a bath Hamiltonian and the three
    /// qubit-coupling bath operators.
    pub fn from_parts(h_b: CMatrix, a: [CMatrix; 3]) -> Result<Self> {
        let d = h_b.nrows();
        for op in std::iter::once(&h_b).chain(a.iter()) {
            if op.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.nrows(),
                });
            }
            let defect = linalg::hermiticity_defect(op);
            if defect > linalg::HERMITIAN_TOL * max_abs(op).max(f64::MIN_POSITIVE) {
                return Err(Error::NotHermitian { defect });
            }
        }
        let mut h_full = kron(&identity(2), &h_b);
        for axis in PauliAxis::ALL {
            h_full += kron(&pauli(axis), &a[axis.index()]);
        }
        Ok(Self { h_b, a, h_full })
    }

    pub fn bath_dim(&self) -> usize {
        self.h_b.nrows()
    }

    pub fn bath_spins(&self) -> usize {
        self.bath_dim().trailing_zeros() as usize
    }

    pub fn coupling(&self, axis: PauliAxis) -> &CMatrix {
        &self.a[axis.index()]
    }
}

pub fn build_hamiltonian(c: &CouplingSet) -> Result<HamiltonianParts> {
    c.validate()?;
    let m = c.m;
    let d = c.bath_dim();
    // Bath-space Paulis: bath site i (1-based) sits at bath position i-1.
    let sigma: Vec<[CMatrix; 3]> = (0..m)
        .map(|site| PauliAxis::ALL.map(|a| embed(&pauli(a), site, m).expect("site in range")))
        .collect();

    let mut h_b = CMatrix::zeros(d, d);
    for p in &c.j0 {
        for k in 0..3 {
            for l in 0..3 {
                let v = p.matrix[k][l];
                if v != 0.0 {
                    h_b += (&sigma[p.i - 1][k] * &sigma[p.j - 1][l]).scale(v);
                }
            }
        }
    }
    let mut a: [CMatrix; 3] = std::array::from_fn(|_| CMatrix::zeros(d, d));
    for s in &c.j1 {
        for (mu, a_mu) in a.iter_mut().enumerate() {
            for k in 0..3 {
                let v = s.matrix[mu][k];
                if v != 0.0 {
                    *a_mu += sigma[s.i - 1][k].scale(v);
                }
            }
        }
    }
    HamiltonianParts::from_parts(h_b, a)
}

/// Total spin component `S_ν = Σ_{i=0}^{M} σ_ν^(i)` on the full space.
pub fn total_spin(axis: PauliAxis, m: usize) -> CMatrix {
    let n = m + 1;
    (0..n).fold(CMatrix::zeros(1 << n, 1 << n), |acc, site| {
        acc + embed(&pauli(axis), site, n).expect("site in range")
    })
}

/// `max_ν ‖[H, S_ν]‖_max`; zero for SU(2)-invariant Hamiltonians.
pub fn su2_defect(h: &HamiltonianParts, m: usize) -> f64 {
    PauliAxis::ALL
        .iter()
        .map(|&axis| max_abs(&commutator(&h.h_full, &total_spin(axis, m))))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace_qubit;

    const SEED: u64 = 0x5EED_2011;

    /// Direct construction of H from embedded Paulis on all M+1 sites,
    /// independent of the qubit/bath split.
    fn direct_hamiltonian(c: &CouplingSet) -> CMatrix {
        let n = c.m + 1;
        let s = |site: usize, k: usize| embed(&pauli(PauliAxis::ALL[k]), site, n).unwrap();
        let mut h = CMatrix::zeros(1 << n, 1 << n);
        for p in &c.j0 {
            for k in 0..3 {
                for l in 0..3 {
                    h += (s(p.i, k) * s(p.j, l)).scale(p.matrix[k][l]);
                }
            }
        }
        for q in &c.j1 {
            for k in 0..3 {
                for l in 0..3 {
                    h += (s(0, k) * s(q.i, l)).scale(q.matrix[k][l]);
                }
            }
        }
        h
    }

    #[test]
    fn deterministic_draws() {
        for class in [SymmetryClass::Anisotropic, SymmetryClass::Isotropic] {
            for topo in [Topology::CentralSpin, Topology::Chain] {
                let a = random_couplings(SEED, 3, class, topo).unwrap();
                let b = random_couplings(SEED, 3, class, topo).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.to_json(), b.to_json());
            }
        }
    }

    #[test]
    fn first_draw_follows_documented_order() {
        let c =
            random_couplings(SEED, 2, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        let mut rng = SplitMix64::new(SEED);
        let first: Vec<f64> = (0..9).map(|_| rng.next_symmetric()).collect();
        assert_eq!(
            c.j0[0].matrix.iter().flatten().copied().collect::<Vec<_>>(),
            first
        );
        let next = rng.next_symmetric();
        assert_eq!(c.j1[0].matrix[0][0], next);
    }

    #[test]
    fn isotropic_matrices_are_scalar() {
        for seed in 0..10 {
            let c =
                random_couplings(seed, 4, SymmetryClass::Isotropic, Topology::CentralSpin).unwrap();
            for m in
                c.j0.iter()
                    .map(|p| &p.matrix)
                    .chain(c.j1.iter().map(|s| &s.matrix))
            {
                assert!(is_scalar_identity(m));
            }
        }
    }

    #[test]
    fn chain_mask() {
        let c = random_couplings(SEED, 3, SymmetryClass::Anisotropic, Topology::Chain).unwrap();
        for s in &c.j1[1..] {
            assert_eq!(s.matrix, ZERO3);
        }
        assert_ne!(c.j1[0].matrix, ZERO3);
        for p in &c.j0 {
            assert_eq!(p.matrix == ZERO3, p.j != p.i + 1);
        }
    }

    #[test]
    fn empty_bath_rejected() {
        assert!(matches!(
            random_couplings(1, 0, SymmetryClass::Anisotropic, Topology::CentralSpin),
            Err(Error::EmptyBath)
        ));
    }

    #[test]
    fn zero_couplings_give_zero_hamiltonian() {
        let mut c =
            random_couplings(1, 2, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        c.j0.iter_mut().for_each(|p| p.matrix = ZERO3);
        c.j1.iter_mut().for_each(|s| s.matrix = ZERO3);
        let h = build_hamiltonian(&c).unwrap();
        assert_eq!(max_abs(&h.h_full), 0.0);
        assert_eq!(su2_defect(&h, 2), 0.0);
    }

    #[test]
    fn heisenberg_pair() {
        let c = CouplingSet::uniform_isotropic(1, Topology::CentralSpin, 1.0, 1.0).unwrap();
        let h = build_hamiltonian(&c).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        for a in PauliAxis::ALL {
            expected += kron(&pauli(a), &pauli(a));
        }
        assert_eq!(h.h_full, expected);
    }

    #[test]
    fn assembly_matches_direct_sum() {
        for topo in [Topology::CentralSpin, Topology::Chain] {
            let c = random_couplings(SEED, 3, SymmetryClass::Anisotropic, topo).unwrap();
            let h = build_hamiltonian(&c).unwrap();
            assert!(linalg::hermiticity_defect(&h.h_full) <= 1e-13);
            assert!(max_abs(&(&h.h_full - direct_hamiltonian(&c))) <= 1e-13);
        }
    }

    #[test]
    fn couplings_recovered_by_partial_trace() {
        let c =
            random_couplings(SEED, 3, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        let h = build_hamiltonian(&c).unwrap();
        let d = h.bath_dim();
        for axis in PauliAxis::ALL {
            let proj = kron(&pauli(axis), &identity(d)) * &h.h_full;
            let a = partial_trace_qubit(&proj).unwrap().scale(0.5);
            assert!(max_abs(&(a - h.coupling(axis))) <= 1e-13);
        }
        let b = partial_trace_qubit(&h.h_full).unwrap().scale(0.5);
        assert!(max_abs(&(b - &h.h_b)) <= 1e-13);
        // H_B acts on the bath factor only.
        for axis in PauliAxis::ALL {
            let q = kron(&pauli(axis), &identity(d));
            assert_eq!(max_abs(&commutator(&kron(&identity(2), &h.h_b), &q)), 0.0);
        }
    }

    #[test]
    fn su2_defect_by_class() {
        let aniso = build_hamiltonian(
            &random_couplings(SEED, 3, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap(),
        )
        .unwrap();
        assert!(su2_defect(&aniso, 3) > 0.1);
        for seed in 0..24 {
            for topo in [Topology::CentralSpin, Topology::Chain] {
                let iso = build_hamiltonian(
                    &random_couplings(seed, 3, SymmetryClass::Isotropic, topo).unwrap(),
                )
                .unwrap();
                assert!(su2_defect(&iso, 3) <= 1e-12, "seed {seed}");
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c =
            random_couplings(SEED, 3, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        let back = CouplingSet::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let json = c.to_json();
        for key in [
            "\"M\"",
            "\"topology\"",
            "\"symmetry_class\"",
            "\"J0\"",
            "\"J1\"",
            "\"alpha\"",
            "\"lambda\"",
            "\"seed\"",
        ] {
            assert!(json.contains(key), "{key}");
        }
    }

    #[test]
    fn json_validation() {
        let c = random_couplings(SEED, 2, SymmetryClass::Isotropic, Topology::CentralSpin).unwrap();
        let mut broken = c.clone();
        broken.j1[0].matrix[0][1] = 0.5;
        assert!(matches!(
            CouplingSet::from_json(&broken.to_json()),
            Err(Error::InvalidCouplings(_))
        ));
        let mut broken = c.clone();
        broken.j0.clear();
        assert!(matches!(
            CouplingSet::from_json(&broken.to_json()),
            Err(Error::InvalidCouplings(_))
        ));
        assert!(CouplingSet::from_json("{\"M\": 0}").is_err());
        assert!(CouplingSet::from_json("not json").is_err());
        let chain = random_couplings(SEED, 3, SymmetryClass::Anisotropic, Topology::Chain).unwrap();
        let mut broken = chain.clone();
        broken.j1[2].matrix[1][1] = 0.25;
        assert!(matches!(
            CouplingSet::from_json(&broken.to_json()),
            Err(Error::InvalidCouplings(_))
        ));
    }
}
