//! τ sweeps, power-law fits and exponent tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Propagators;
use crate::metrics::{
    cell_distance, make_states, BathDirection, BathKind, DistancePath, DistanceResult, InitialState,
};
use crate::model::{build_hamiltonian, CouplingSet, HamiltonianParts, SymmetryClass};

/// Largest pulse count per level accepted in a sweep.
pub const MAX_SWEEP_PULSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::DegenerateFit(format!("{n} points")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx.is_nan() || sxx <= 0.0 || !sxx.is_finite() || !syy.is_finite() {
        return Err(Error::DegenerateFit("abscissae do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub d_lo: f64,
    pub d_hi: f64,
    pub min_points: usize,
    pub r_squared_min: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            d_lo: 1e-11,
            d_hi: 1e-2,
            min_points: 5,
            r_squared_min: 0.999,
        }
    }
}

impl FitWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_lo > 1e-13 && self.d_lo < self.d_hi && self.d_hi < 1e-1) {
            return Err(Error::InvalidSweep(format!(
                "fit window [{:e}, {:e}] must satisfy 1e-13 < d_lo < d_hi < 1e-1",
                self.d_lo, self.d_hi
            )));
        }
        if self.min_points < 3 {
            return Err(Error::InvalidSweep(
                "fit window needs at least 3 points".into(),
            ));
        }
        Ok(())
    }
}

/// One sample of the distance series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub tau: f64,
    pub d: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl From<&DistanceResult> for SeriesPoint {
    fn from(r: &DistanceResult) -> Self {
        Self {
            tau: r.tau,
            d: r.d,
            dx: r.d_gamma[0],
            dy: r.d_gamma[1],
            dz: r.d_gamma[2],
        }
    }
}

impl SeriesPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.tau, self.d, self.dx, self.dy, self.dz
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub zeta: f64,
    pub zeta_stderr: f64,
    pub r_squared: f64,
    /// `[τ_lo, τ_hi]` of the points actually fitted.
    pub window: [f64; 2],
    pub used: usize,
}

/// Fits `log d = ζ log τ + c` over the points with `d ∈ [d_lo, d_hi]`. If
/// r² falls short, the largest-τ point is dropped once and the fit repeated.
pub fn fit_exponent(points: &[SeriesPoint], w: &FitWindow) -> Result<ExponentFit> {
    let mut inside: Vec<&SeriesPoint> = points
        .iter()
        .filter(|p| p.tau > 0.0 && p.d >= w.d_lo && p.d <= w.d_hi)
        .collect();
    inside.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    if inside.len() < w.min_points {
        let (d_min, d_max) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.d), hi.max(p.d))
            });
        return Err(Error::WindowFailure {
            found: inside.len(),
            needed: w.min_points,
            d_min,
            d_max,
        });
    }
    let fit_of = |pts: &[&SeriesPoint]| -> Result<(LinearFit, ExponentFit)> {
        let xs: Vec<f64> = pts.iter().map(|p| p.tau.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.d.ln()).collect();
        let f = linear_fit(&xs, &ys)?;
        Ok((
            f,
            ExponentFit {
                zeta: f.slope,
                zeta_stderr: f.slope_stderr,
                r_squared: f.r_squared,
                window: [pts[0].tau, pts[pts.len() - 1].tau],
                used: pts.len(),
            },
        ))
    };
    let (f, out) = fit_of(&inside)?;
    if f.r_squared >= w.r_squared_min {
        return Ok(out);
    }
    if inside.len() > w.min_points {
        let (f2, out2) = fit_of(&inside[..inside.len() - 1])?;
        if f2.r_squared >= w.r_squared_min {
            return Ok(out2);
        }
    }
    Err(Error::PoorFit {
        r_squared: f.r_squared,
        threshold: w.r_squared_min,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TauGrid {
    Geometric {
        tau_min: f64,
        tau_max: f64,
        points: usize,
    },
    /// Scan downward from `[1e-3, 1]` until `d` crosses `d_lo`, then sample
    /// one decade of τ above the crossing densely.
    Adaptive { max_iterations: usize },
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid::Adaptive { max_iterations: 12 }
    }
}

/// Scan grid density.
const SCAN_POINTS_PER_DECADE: usize = 4;
/// Points in the dense decade above the crossing.
const DENSE_POINTS: usize = 16;
/// Smallest τ the adaptive scan will reach.
const TAU_FLOOR: f64 = 1e-14;

pub fn geometric_grid(tau_min: f64, tau_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![tau_min];
    }
    let (a, b) = (tau_min.ln(), tau_max.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

impl TauGrid {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TauGrid::Geometric {
                tau_min,
                tau_max,
                points,
            } => {
                if !(tau_min > 0.0 && tau_min < tau_max && tau_max.is_finite()) {
                    return Err(Error::InvalidSweep(format!(
                        "bad τ range [{tau_min}, {tau_max}]"
                    )));
                }
                if points < 6 {
                    return Err(Error::InvalidSweep(format!(
                        "geometric grid needs ≥ 6 points, got {points}"
                    )));
                }
            }
            TauGrid::Adaptive { max_iterations } => {
                if max_iterations == 0 {
                    return Err(Error::InvalidSweep(
                        "adaptive grid needs at least one iteration".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub couplings: CouplingSet,
    pub bath_kind: BathKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<BathDirection>>,
    pub n_x: [usize; 2],
    pub n_z: [usize; 2],
    #[serde(default)]
    pub tau_grid: TauGrid,
    #[serde(default)]
    pub window: FitWindow,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.couplings.validate()?;
        for (name, r) in [("N_x", self.n_x), ("N_z", self.n_z)] {
            if r[0] > r[1] || r[1] > MAX_SWEEP_PULSES {
                return Err(Error::InvalidSweep(format!(
                    "{name} range [{}, {}] must be ordered and ≤ {MAX_SWEEP_PULSES}",
                    r[0], r[1]
                )));
            }
        }
        self.tau_grid.validate()?;
        self.window.validate()
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (self.n_z[0]..=self.n_z[1])
            .flat_map(|nz| (self.n_x[0]..=self.n_x[1]).map(move |nx| (nx, nz)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    #[serde(rename = "N_x")]
    pub n_x: usize,
    #[serde(rename = "N_z")]
    pub n_z: usize,
    pub points: Vec<SeriesPoint>,
    pub zeta: f64,
    pub zeta_stderr: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub seed: u64,
    pub class: SymmetryClass,
    pub bath_kind: BathKind,
}

impl ScalingResult {
    pub fn series_csv(&self) -> String {
        let mut s = String::from(crate::metrics::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&p.csv_row());
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    #[serde(rename = "N_x")]
    pub n_x: usize,
    #[serde(rename = "N_z")]
    pub n_z: usize,
    pub message: String,
    pub points: Vec<SeriesPoint>,
}

/// Precomputed model and initial states shared by all cells of a sweep.
pub struct Sweeper {
    spec: SweepSpec,
    h: HamiltonianParts,
    states: [InitialState; 3],
}

impl Sweeper {
    pub fn new(spec: SweepSpec) -> Result<Self> {
        spec.validate()?;
        let h = build_hamiltonian(&spec.couplings)?;
        let states = make_states(spec.bath_kind, spec.directions.as_deref(), spec.couplings.m)?;
        Ok(Self { spec, h, states })
    }

    pub fn spec(&self) -> &SweepSpec {
        &self.spec
    }

    fn evaluate(
        &self,
        props: &Propagators<'_>,
        n_x: usize,
        n_z: usize,
        taus: &[f64],
    ) -> Result<Vec<SeriesPoint>> {
        taus.par_iter()
            .map(|&tau| {
                cell_distance(props, &self.states, n_x, n_z, tau, DistancePath::Toggling)
                    .map(|r| SeriesPoint::from(&r))
            })
            .collect()
    }

    /// Series used for the fit of one cell.
    pub fn series(&self, n_x: usize, n_z: usize) -> Result<Vec<SeriesPoint>> {
        let props = Propagators::new(&self.h);
        match self.spec.tau_grid {
            TauGrid::Geometric {
                tau_min,
                tau_max,
                points,
            } => self.evaluate(&props, n_x, n_z, &geometric_grid(tau_min, tau_max, points)),
            TauGrid::Adaptive { max_iterations } => {
                self.adaptive_series(&props, n_x, n_z, max_iterations)
            }
        }
    }

    fn adaptive_series(
        &self,
        props: &Propagators<'_>,
        n_x: usize,
        n_z: usize,
        max_iterations: usize,
    ) -> Result<Vec<SeriesPoint>> {
        let d_lo = self.spec.window.d_lo;
        let per_decade = SCAN_POINTS_PER_DECADE;
        let mut scan = self.evaluate(
            props,
            n_x,
            n_z,
            &geometric_grid(1e-3, 1.0, 3 * per_decade + 1),
        )?;
        let mut iterations = 0;
        while scan[0].d >= d_lo && iterations < max_iterations && scan[0].tau / 10.0 >= TAU_FLOOR {
            let lo = scan[0].tau;
            let mut ext = geometric_grid(lo / 10.0, lo, per_decade + 1);
            ext.pop();
            let mut fresh = self.evaluate(props, n_x, n_z, &ext)?;
            fresh.extend(scan);
            scan = fresh;
            iterations += 1;
        }
        // Crossing: walk down from the largest τ to the first point below d_lo.
        let below = scan.iter().rposition(|p| p.d < d_lo);
        let tau_cross = match below {
            Some(k) if k + 1 < scan.len() => {
                let (a, b) = (&scan[k], &scan[k + 1]);
                let frac = (d_lo.ln() - a.d.ln()) / (b.d.ln() - a.d.ln());
                (a.tau.ln() + frac * (b.tau.ln() - a.tau.ln())).exp()
            }
            // Entire scan below d_lo: nothing to resolve.
            Some(_) => return Ok(scan),
            None => scan[0].tau,
        };
        let dense = geometric_grid(tau_cross, 10.0 * tau_cross, DENSE_POINTS);
        self.evaluate(props, n_x, n_z, &dense)
    }

    pub fn cell(&self, n_x: usize, n_z: usize) -> std::result::Result<ScalingResult, CellFailure> {
        let fail = |message: String, points: Vec<SeriesPoint>| CellFailure {
            n_x,
            n_z,
            message,
            points,
        };
        let points = self
            .series(n_x, n_z)
            .map_err(|e| fail(e.to_string(), Vec::new()))?;
        match fit_exponent(&points, &self.spec.window) {
            Ok(f) => Ok(ScalingResult {
                n_x,
                n_z,
                points,
                zeta: f.zeta,
                zeta_stderr: f.zeta_stderr,
                window: f.window,
                r_squared: f.r_squared,
                seed: self.spec.couplings.seed,
                class: self.spec.couplings.symmetry_class,
                bath_kind: self.spec.bath_kind,
            }),
            Err(e) => Err(fail(e.to_string(), points)),
        }
    }

    /// All cells, evaluated concurrently, in row-major `(N_z, N_x)` order.
    pub fn table(&self) -> ExponentTable {
        let cells = self.spec.cells();
        let results = cells
            .par_iter()
            .map(|&(nx, nz)| self.cell(nx, nz))
            .collect();
        ExponentTable {
            n_x: self.spec.n_x,
            n_z: self.spec.n_z,
            cells: results,
        }
    }
}

pub fn sweep_cell(spec: &SweepSpec, n_x: usize, n_z: usize) -> Result<ScalingResult> {
    Sweeper::new(spec.clone())?
        .cell(n_x, n_z)
        .map_err(|f| Error::InvalidSweep(format!("cell ({}, {}): {}", f.n_x, f.n_z, f.message)))
}

pub fn exponent_table(spec: &SweepSpec) -> Result<ExponentTable> {
    Ok(Sweeper::new(spec.clone())?.table())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    #[serde(rename = "N_x")]
    pub n_x: [usize; 2],
    #[serde(rename = "N_z")]
    pub n_z: [usize; 2],
    pub cells: Vec<std::result::Result<ScalingResult, CellFailure>>,
}

impl ExponentTable {
    pub fn get(
        &self,
        n_x: usize,
        n_z: usize,
    ) -> Option<&std::result::Result<ScalingResult, CellFailure>> {
        if n_x < self.n_x[0] || n_x > self.n_x[1] || n_z < self.n_z[0] || n_z > self.n_z[1] {
            return None;
        }
        let width = self.n_x[1] - self.n_x[0] + 1;
        self.cells
            .get((n_z - self.n_z[0]) * width + (n_x - self.n_x[0]))
    }

    pub fn zeta(&self, n_x: usize, n_z: usize) -> Option<f64> {
        self.get(n_x, n_z)
            .and_then(|c| c.as_ref().ok())
            .map(|r| r.zeta)
    }

    pub fn failures(&self) -> Vec<&CellFailure> {
        self.cells.iter().filter_map(|c| c.as_ref().err()).collect()
    }

    /// Rows `N_z`, columns `N_x`, two decimals; failed cells read `FAIL`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N_z\\N_x");
        for nx in self.n_x[0]..=self.n_x[1] {
            s.push_str(&format!(",{nx}"));
        }
        s.push('\n');
        for nz in self.n_z[0]..=self.n_z[1] {
            s.push_str(&nz.to_string());
            for nx in self.n_x[0]..=self.n_x[1] {
                match self.zeta(nx, nz) {
                    Some(z) => s.push_str(&format!(",{z:.2}")),
                    None => s.push_str(",FAIL"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_couplings, Topology};
    use proptest::prelude::*;

    fn synthetic(f: impl Fn(f64) -> f64, taus: &[f64]) -> Vec<SeriesPoint> {
        taus.iter()
            .map(|&tau| {
                let d = f(tau);
                SeriesPoint {
                    tau,
                    d,
                    dx: d,
                    dy: d,
                    dz: d,
                }
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let pts = synthetic(|t| 3.0 * t.powi(4), &geometric_grid(1e-2, 1e-1, 10));
        let f = fit_exponent(&pts, &FitWindow::default()).unwrap();
        assert!((f.zeta - 4.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.used, 10);
    }

    #[test]
    fn subleading_correction() {
        let pts = synthetic(|t| t.powi(4) * (1.0 + t), &geometric_grid(5e-3, 5e-2, 12));
        let f = fit_exponent(&pts, &FitWindow::default()).unwrap();
        assert!((3.97..=4.03).contains(&f.zeta), "{}", f.zeta);
    }

    #[test]
    fn all_points_below_window() {
        let pts = synthetic(|t| 1e-14 * t, &geometric_grid(1e-3, 1.0, 10));
        assert!(matches!(
            fit_exponent(&pts, &FitWindow::default()),
            Err(Error::WindowFailure { found: 0, .. })
        ));
    }

    #[test]
    fn drops_one_outlier_at_large_tau() {
        let mut pts = synthetic(|t| t.powi(2), &geometric_grid(1e-4, 1e-3, 8));
        pts.push(SeriesPoint {
            tau: 2e-3,
            d: 5e-3,
            dx: 0.0,
            dy: 0.0,
            dz: 0.0,
        });
        let f = fit_exponent(&pts, &FitWindow::default()).unwrap();
        assert!((f.zeta - 2.0).abs() < 1e-10);
        assert_eq!(f.used, 8);
    }

    #[test]
    fn linear_fit_rejects_constant_abscissa() {
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        let c = random_couplings(1, 2, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        let mut spec = SweepSpec {
            couplings: c,
            bath_kind: BathKind::MaximallyMixed,
            directions: None,
            n_x: [0, 2],
            n_z: [0, 2],
            tau_grid: TauGrid::Geometric {
                tau_min: 1e-3,
                tau_max: 1e-1,
                points: 5,
            },
            window: FitWindow::default(),
        };
        assert!(spec.validate().is_err());
        spec.tau_grid = TauGrid::Geometric {
            tau_min: 1e-3,
            tau_max: 1e-1,
            points: 6,
        };
        spec.validate().unwrap();
        spec.window.d_lo = 1e-14;
        assert!(spec.validate().is_err());
        spec.window = FitWindow::default();
        spec.n_x = [3, 2];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn table_layout_and_csv() {
        let c = random_couplings(2, 2, SymmetryClass::Anisotropic, Topology::CentralSpin).unwrap();
        let spec = SweepSpec {
            couplings: c,
            bath_kind: BathKind::Product,
            directions: Some(crate::metrics::default_directions(2)),
            n_x: [0, 1],
            n_z: [1, 2],
            tau_grid: TauGrid::default(),
            window: FitWindow::default(),
        };
        let t = exponent_table(&spec).unwrap();
        assert_eq!(t.cells.len(), 4);
        let r = t.get(1, 2).unwrap().as_ref().unwrap();
        assert_eq!((r.n_x, r.n_z), (1, 2));
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "N_z\\N_x,0,1");
        assert!(lines[1].starts_with("1,"));
        assert_eq!(lines.len(), 3);
        assert!((t.zeta(0, 1).unwrap() - 1.0).abs() < 0.15);
        assert!((t.zeta(1, 1).unwrap() - 2.0).abs() < 0.15);
    }

    proptest! {
        #[test]
        fn recovers_random_power_laws(zeta in 0.5f64..12.0, c in 0.1f64..10.0) {
            let pts = synthetic(|t| c * t.powf(zeta), &geometric_grid(1e-14, 1.0, 200));
            let f = fit_exponent(&pts, &FitWindow::default()).unwrap();
            prop_assert!((f.zeta - zeta).abs() < 1e-9);
            prop_assert!(f.used >= 5);
        }

        #[test]
        fn geometric_grid_is_increasing(lo in 1e-8f64..1e-2, span in 1.5f64..1e4, n in 6usize..50) {
            let g = geometric_grid(lo, lo * span, n);
            prop_assert_eq!(g.len(), n);
            prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
