//! Initial states and the norm distance between ideal and real evolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Propagators;
use crate::linalg::{identity, kron, CMatrix, PauliAxis, C64};
use crate::model::MAX_BATH_SPINS;
use crate::rng::SplitMix64;
use crate::sequence::{pulse_operator, qdd_schedule, switching_profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    Product,
    MaximallyMixed,
}

impl std::str::FromStr for BathKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "product" => Ok(BathKind::Product),
            "maximally-mixed" | "mixed" => Ok(BathKind::MaximallyMixed),
            other => Err(format!("unknown bath kind '{other}'")),
        }
    }
}

/// Polarization `sign * σ_axis` of one bath spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BathDirection {
    pub axis: PauliAxis,
    pub sign: i8,
}

/// Axes cycled x, y, z, x, … with +1 signs.
pub fn default_directions(m: usize) -> Vec<BathDirection> {
    (0..m)
        .map(|i| BathDirection {
            axis: PauliAxis::ALL[i % 3],
            sign: 1,
        })
        .collect()
}

pub fn random_directions(seed: u64, m: usize) -> Vec<BathDirection> {
    let mut rng = SplitMix64::new(seed);
    (0..m)
        .map(|_| {
            let r = rng.next_u64();
            BathDirection {
                axis: PauliAxis::ALL[(r % 3) as usize],
                sign: if (r >> 32) & 1 == 0 { 1 } else { -1 },
            }
        })
        .collect()
}

/// Eigenvector of `σ_axis` with eigenvalue `sign`.
pub fn spin_ket(axis: PauliAxis, sign: i8) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if sign < 0 { -1.0 } else { 1.0 };
    match axis {
        PauliAxis::X => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
        PauliAxis::Y => [C64::new(h, 0.0), C64::new(0.0, s * h)],
        PauliAxis::Z if s > 0.0 => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        PauliAxis::Z => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    }
}

fn projector(ket: &[C64]) -> CMatrix {
    let n = ket.len();
    CMatrix::from_fn(n, n, |r, c| ket[r] * ket[c].conj())
}

#[derive(Clone, Debug)]
pub struct InitialState {
    pub gamma: PauliAxis,
    /// `|γ⟩`, the +1 eigenstate of `σ_γ`.
    pub ket: [C64; 2],
    pub rho_s: CMatrix,
    pub bath_kind: BathKind,
    pub bath_directions: Vec<BathDirection>,
    pub rho_b: CMatrix,
}

pub fn make_state(
    gamma: PauliAxis,
    bath_kind: BathKind,
    directions: Option<&[BathDirection]>,
    m: usize,
) -> Result<InitialState> {
    if m > MAX_BATH_SPINS {
        return Err(Error::BathTooLarge(m));
    }
    let d = 1usize << m;
    let (rho_b, dirs) = match bath_kind {
        BathKind::MaximallyMixed => (identity(d).unscale(d as f64), Vec::new()),
        BathKind::Product => {
            let dirs = directions.ok_or(Error::MissingDirections {
                expected: m,
                got: 0,
            })?;
            if dirs.len() != m {
                return Err(Error::MissingDirections {
                    expected: m,
                    got: dirs.len(),
                });
            }
            let mut psi = vec![C64::new(1.0, 0.0)];
            for dir in dirs {
                let k = spin_ket(dir.axis, dir.sign);
                psi = psi.iter().flat_map(|&a| [a * k[0], a * k[1]]).collect();
            }
            (projector(&psi), dirs.to_vec())
        }
    };
    let ket = spin_ket(gamma, 1);
    Ok(InitialState {
        gamma,
        ket,
        rho_s: projector(&ket),
        bath_kind,
        bath_directions: dirs,
        rho_b,
    })
}

/// The three preparations γ = x, y, z sharing one bath state.
pub fn make_states(
    bath_kind: BathKind,
    directions: Option<&[BathDirection]>,
    m: usize,
) -> Result<[InitialState; 3]> {
    Ok([
        make_state(PauliAxis::X, bath_kind, directions, m)?,
        make_state(PauliAxis::Y, bath_kind, directions, m)?,
        make_state(PauliAxis::Z, bath_kind, directions, m)?,
    ])
}

impl InitialState {
    pub fn bath_dim(&self) -> usize {
        self.rho_b.nrows()
    }

    pub fn full(&self) -> CMatrix {
        kron(&self.rho_s, &self.rho_b)
    }

    /// `Tr_B(U ρ₀ U†)`. Uses `ρ₀ = |γ⟩⟨γ| ⊗ ρ_B`, so with `W = U(|γ⟩ ⊗ 1)`
    /// the entries are `Tr(W_s ρ_B W_t†)` over the qubit row blocks `W_s`.
    pub fn evolved_reduced(&self, u: &CMatrix) -> Result<CMatrix> {
        let d = self.bath_dim();
        if u.nrows() != 2 * d || u.ncols() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                got: u.nrows(),
            });
        }
        let w = u.columns(0, d) * self.ket[0] + u.columns(d, d) * self.ket[1];
        let blocks = [w.rows(0, d), w.rows(d, d)];
        let mut out = CMatrix::zeros(2, 2);
        match self.bath_kind {
            BathKind::MaximallyMixed => {
                for s in 0..2 {
                    for t in 0..=s {
                        let v = blocks[s].dotc(&blocks[t]).conj() / d as f64;
                        out[(s, t)] = v;
                        out[(t, s)] = v.conj();
                    }
                }
            }
            BathKind::Product => {
                let wr = [blocks[0] * &self.rho_b, blocks[1] * &self.rho_b];
                for s in 0..2 {
                    for t in 0..2 {
                        out[(s, t)] = blocks[t].dotc(&wr[s]);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub tau: f64,
    pub d: f64,
    pub d_gamma: [f64; 3],
    pub delta_gamma: [CMatrix; 3],
}

pub const CSV_HEADER: &str = "tau,d,dx,dy,dz";

impl DistanceResult {
    pub fn from_deltas(tau: f64, delta_gamma: [CMatrix; 3]) -> Self {
        let d_gamma = [0, 1, 2].map(|g| hs_norm(&delta_gamma[g]));
        let d = (d_gamma.iter().map(|x| x * x).sum::<f64>() / 3.0).sqrt();
        Self {
            tau,
            d,
            d_gamma,
            delta_gamma,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.tau, self.d, self.d_gamma[0], self.d_gamma[1], self.d_gamma[2]
        )
    }
}

/// `sqrt(Tr Δ†Δ)`; equals `sqrt(Tr Δ²)` for Hermitian Δ.
fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Tr_B(U_B P̂ ρ₀ P̂† U_B† − U ρ₀ U†)` with `U` the lab propagator and
/// `P̂` a 2x2 qubit operator.
pub fn delta(
    state: &InitialState,
    u_real: &CMatrix,
    u_b: &CMatrix,
    p_hat: &CMatrix,
) -> Result<CMatrix> {
    if p_hat.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p_hat.nrows(),
        });
    }
    let ideal = u_b * kron(p_hat, &identity(state.bath_dim()));
    Ok(state.evolved_reduced(&ideal)? - state.evolved_reduced(u_real)?)
}

pub fn norm_distance(
    tau: f64,
    states: &[InitialState; 3],
    u_real: &CMatrix,
    u_b: &CMatrix,
    p_hat: &CMatrix,
) -> Result<DistanceResult> {
    let deltas = [
        delta(&states[0], u_real, u_b, p_hat)?,
        delta(&states[1], u_real, u_b, p_hat)?,
        delta(&states[2], u_real, u_b, p_hat)?,
    ];
    Ok(DistanceResult::from_deltas(tau, deltas))
}

/// Toggling-frame distance `Tr_B(U_B ρ₀ U_B† − U_tog ρ₀ U_tog†)`.
///
/// `U_B` acts on the bath alone and drops out of the bath trace, leaving
/// `ρ_S − Tr_B(U_tog ρ₀ U_tog†)`; the result differs from [`norm_distance`]
/// by a conjugation with `P̂`, which leaves every `Tr Δ²` unchanged.
pub fn frame_reduced_distance(
    tau: f64,
    states: &[InitialState; 3],
    u_tog: &CMatrix,
) -> Result<DistanceResult> {
    let mut deltas: [CMatrix; 3] = Default::default();
    for (g, s) in states.iter().enumerate() {
        deltas[g] = &s.rho_s - s.evolved_reduced(u_tog)?;
    }
    Ok(DistanceResult::from_deltas(tau, deltas))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistancePath {
    Lab,
    Toggling,
}

/// Distance for one `(N_x, N_z, τ)` cell.
pub fn cell_distance(
    props: &Propagators<'_>,
    states: &[InitialState; 3],
    n_x: usize,
    n_z: usize,
    tau: f64,
    path: DistancePath,
) -> Result<DistanceResult> {
    let schedule = qdd_schedule(n_x, n_z, tau)?;
    match path {
        DistancePath::Toggling => {
            let u = props.toggling(&switching_profile(&schedule))?;
            frame_reduced_distance(tau, states, &u)
        }
        DistancePath::Lab => {
            let u = props.lab(&schedule)?;
            let u_b = props.bath(tau)?;
            norm_distance(tau, states, &u, &u_b, &pulse_operator(n_x, n_z))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{bath_propagator, lab_propagator, toggling_propagator};
    use crate::linalg::{max_abs, partial_trace_bath, pauli, trace};
    use crate::model::{
        build_hamiltonian, random_couplings, HamiltonianParts, SymmetryClass, Topology,
    };

    // Rounding level of d for unit-scale couplings.
    const NOISE_FLOOR: f64 = 1e-14;

    fn model(seed: u64, m: usize, class: SymmetryClass, topo: Topology) -> HamiltonianParts {
        build_hamiltonian(&random_couplings(seed, m, class, topo).unwrap()).unwrap()
    }

    /// Bath trace by explicit index loops over a full density matrix.
    fn loop_bath_trace(rho: &CMatrix, d: usize) -> [[C64; 2]; 2] {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for s in 0..2 {
            for t in 0..2 {
                for a in 0..d {
                    out[s][t] += rho[(s * d + a, t * d + a)];
                }
            }
        }
        out
    }

    /// Lab-frame distance built from full density matrices only.
    fn brute_force_d(
        h: &HamiltonianParts,
        states: &[InitialState; 3],
        n_x: usize,
        n_z: usize,
        tau: f64,
    ) -> f64 {
        let s = qdd_schedule(n_x, n_z, tau).unwrap();
        let u = lab_propagator(h, &s).unwrap();
        let ideal = bath_propagator(h, tau).unwrap()
            * kron(&pulse_operator(n_x, n_z), &identity(h.bath_dim()));
        let mut sum = 0.0;
        for st in states {
            let rho0 = st.full();
            let a = loop_bath_trace(&(&ideal * &rho0 * ideal.adjoint()), h.bath_dim());
            let b = loop_bath_trace(&(&u * &rho0 * u.adjoint()), h.bath_dim());
            for r in 0..2 {
                for c in 0..2 {
                    sum += (a[r][c] - b[r][c]).norm_sqr();
                }
            }
        }
        (sum / 3.0).sqrt()
    }

    #[test]
    fn mixed_bath_state() {
        let s = make_state(PauliAxis::X, BathKind::MaximallyMixed, None, 3).unwrap();
        assert_eq!(s.rho_b, identity(8).unscale(8.0));
    }

    #[test]
    fn product_bath_state() {
        let dirs = [BathDirection {
            axis: PauliAxis::Z,
            sign: 1,
        }; 2];
        let s = make_state(PauliAxis::Z, BathKind::Product, Some(&dirs), 2).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = C64::new(1.0, 0.0);
        assert!(max_abs(&(s.rho_b - expect)) < 1e-15);
        assert!(matches!(
            make_state(PauliAxis::Z, BathKind::Product, None, 2),
            Err(Error::MissingDirections { .. })
        ));
    }

    #[test]
    fn density_matrix_axioms() {
        for seed in 0..8 {
            let dirs = random_directions(seed, 3);
            for kind in [BathKind::Product, BathKind::MaximallyMixed] {
                for g in PauliAxis::ALL {
                    let s = make_state(g, kind, Some(&dirs), 3).unwrap();
                    assert!((trace(&s.rho_b) - C64::new(1.0, 0.0)).norm() < 1e-14);
                    let eig = nalgebra::SymmetricEigen::new(s.rho_b.clone());
                    assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-14));
                    // |γ⟩ is the +1 eigenvector of σ_γ.
                    let p = pauli(g);
                    assert!(max_abs(&(&p * &s.rho_s - &s.rho_s)) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn spin_kets_are_eigenvectors() {
        for axis in PauliAxis::ALL {
            for sign in [1i8, -1] {
                let k = spin_ket(axis, sign);
                let v = nalgebra::DVector::from_row_slice(&k);
                let pv = pauli(axis) * &v;
                assert!((pv - v * C64::new(sign as f64, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn evolved_reduced_matches_full_trace() {
        let h = model(6, 3, SymmetryClass::Anisotropic, Topology::CentralSpin);
        let u =
            toggling_propagator(&h, &switching_profile(&qdd_schedule(2, 1, 0.9).unwrap())).unwrap();
        let dirs = default_directions(3);
        for kind in [BathKind::Product, BathKind::MaximallyMixed] {
            for g in PauliAxis::ALL {
                let s = make_state(g, kind, Some(&dirs), 3).unwrap();
                let full = partial_trace_bath(&(&u * s.full() * u.adjoint())).unwrap();
                assert!(max_abs(&(s.evolved_reduced(&u).unwrap() - full)) < 1e-14);
            }
        }
    }

    #[test]
    fn decoupled_qubit_has_zero_delta() {
        let h0 = model(3, 2, SymmetryClass::Anisotropic, Topology::CentralSpin);
        let zero = CMatrix::zeros(4, 4);
        let h = HamiltonianParts::from_parts(h0.h_b, [zero.clone(), zero.clone(), zero]).unwrap();
        let states = make_states(BathKind::Product, Some(&default_directions(2)), 2).unwrap();
        let props = Propagators::new(&h);
        for (n_x, n_z) in [(0, 0), (1, 2), (3, 3)] {
            for tau in [1e-3, 0.3, 2.0] {
                let r = cell_distance(&props, &states, n_x, n_z, tau, DistancePath::Lab).unwrap();
                assert!(r.delta_gamma.iter().all(|m| max_abs(m) < 1e-13));
                assert!(r.d < 1e-13);
            }
        }
    }

    #[test]
    fn zero_duration_delta_vanishes() {
        let states = make_states(BathKind::Product, Some(&default_directions(2)), 2).unwrap();
        for st in &states {
            let dl = delta(st, &identity(8), &identity(8), &identity(2)).unwrap();
            assert_eq!(max_abs(&dl), 0.0);
        }
    }

    #[test]
    fn small_instance_matches_brute_force() {
        let h = model(11, 1, SymmetryClass::Anisotropic, Topology::CentralSpin);
        let states = make_states(BathKind::Product, Some(&default_directions(1)), 1).unwrap();
        let r =
            cell_distance(&Propagators::new(&h), &states, 1, 1, 0.2, DistancePath::Lab).unwrap();
        let oracle = brute_force_d(&h, &states, 1, 1, 0.2);
        assert!((r.d - oracle).abs() <= 1e-13 * oracle.max(1e-3));
    }

    #[test]
    fn mixed_bath_matches_frobenius_oracle() {
        let h = model(12, 3, SymmetryClass::Isotropic, Topology::CentralSpin);
        let states = make_states(BathKind::MaximallyMixed, None, 3).unwrap();
        let props = Propagators::new(&h);
        for (n_x, n_z, tau) in [(1, 1, 0.4), (2, 3, 0.8), (0, 2, 0.1)] {
            let r = cell_distance(&props, &states, n_x, n_z, tau, DistancePath::Lab).unwrap();
            let oracle = brute_force_d(&h, &states, n_x, n_z, tau);
            assert!(
                (r.d - oracle).abs() <= 1e-12 * oracle.max(1e-6),
                "{n_x} {n_z}"
            );
        }
    }

    #[test]
    fn deltas_are_traceless_hermitian() {
        let h = model(13, 3, SymmetryClass::Anisotropic, Topology::Chain);
        let states = make_states(BathKind::Product, Some(&random_directions(4, 3)), 3).unwrap();
        let r =
            cell_distance(&Propagators::new(&h), &states, 2, 2, 1.3, DistancePath::Lab).unwrap();
        for m in &r.delta_gamma {
            assert!(trace(m).norm() < 1e-12);
            assert!(max_abs(&(m - m.adjoint())) < 1e-12);
        }
        let sq: f64 = r.d_gamma.iter().map(|x| x * x).sum();
        assert!((r.d * r.d - sq / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lab_and_toggling_paths_agree() {
        let mut rng = SplitMix64::new(77);
        for cell in 0..50u64 {
            let m = 1 + (rng.next_u64() % 3) as usize;
            let class = if cell % 2 == 0 {
                SymmetryClass::Anisotropic
            } else {
                SymmetryClass::Isotropic
            };
            let topo = if cell % 4 < 2 {
                Topology::CentralSpin
            } else {
                Topology::Chain
            };
            let kind = if cell % 3 == 0 {
                BathKind::MaximallyMixed
            } else {
                BathKind::Product
            };
            let h = model(cell, m, class, topo);
            let states = make_states(kind, Some(&random_directions(cell, m)), m).unwrap();
            let n_x = (rng.next_u64() % 4) as usize;
            let n_z = (rng.next_u64() % 4) as usize;
            let tau = 0.05 + 1.5 * rng.next_unit();
            let props = Propagators::new(&h);
            let lab = cell_distance(&props, &states, n_x, n_z, tau, DistancePath::Lab).unwrap();
            let tog =
                cell_distance(&props, &states, n_x, n_z, tau, DistancePath::Toggling).unwrap();
            let tol = 1e-12 * lab.d + NOISE_FLOOR;
            assert!(
                (lab.d - tog.d).abs() <= tol,
                "cell {cell}: {} vs {}",
                lab.d,
                tog.d
            );
            for g in 0..3 {
                assert!(
                    (lab.d_gamma[g] - tog.d_gamma[g]).abs() <= 1e-12 * lab.d_gamma[g] + NOISE_FLOOR
                );
            }
        }
    }

    #[test]
    fn isotropic_mixed_cell_agrees_to_twelve_digits() {
        let h = model(21, 2, SymmetryClass::Isotropic, Topology::CentralSpin);
        let states = make_states(BathKind::MaximallyMixed, None, 2).unwrap();
        let props = Propagators::new(&h);
        let lab = cell_distance(&props, &states, 2, 2, 0.5, DistancePath::Lab).unwrap();
        let tog = cell_distance(&props, &states, 2, 2, 0.5, DistancePath::Toggling).unwrap();
        assert!((lab.d - tog.d).abs() <= 1e-12 * lab.d);
    }

    #[test]
    fn global_phase_invariance() {
        let h = model(5, 2, SymmetryClass::Anisotropic, Topology::CentralSpin);
        let s = qdd_schedule(1, 2, 0.6).unwrap();
        let states = make_states(BathKind::Product, Some(&default_directions(2)), 2).unwrap();
        let u = lab_propagator(&h, &s).unwrap();
        let ub = bath_propagator(&h, 0.6).unwrap();
        let p = pulse_operator(1, 2);
        let base = norm_distance(0.6, &states, &u, &ub, &p).unwrap();
        let phase = C64::from_polar(1.0, 1.234);
        let shifted =
            norm_distance(0.6, &states, &(&u * phase), &(&ub * phase.conj()), &p).unwrap();
        assert!((base.d - shifted.d).abs() < 1e-14);
    }

    #[test]
    fn two_tau_ratio_gives_expected_power() {
        let h = model(31, 1, SymmetryClass::Anisotropic, Topology::CentralSpin);
        let states = make_states(BathKind::Product, Some(&default_directions(1)), 1).unwrap();
        let props = Propagators::new(&h);
        let tau = 0.01;
        let a = cell_distance(&props, &states, 1, 1, tau, DistancePath::Toggling).unwrap();
        let b = cell_distance(&props, &states, 1, 1, tau / 2.0, DistancePath::Toggling).unwrap();
        let zeta = (a.d / b.d).log2();
        assert!((zeta - 2.0).abs() < 0.1, "zeta {zeta}");
    }

    #[test]
    fn csv_row_has_seventeen_digits() {
        let r = DistanceResult::from_deltas(
            0.5,
            [identity(2), CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)],
        );
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), 5);
        let first = row.split(',').next().unwrap();
        assert_eq!(first, "5.0000000000000000e-1");
        let back: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, r.d);
    }
}
