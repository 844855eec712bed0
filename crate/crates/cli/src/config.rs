//! Run configuration: a JSON document whose fields can each be overridden
//! from the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qdd::metrics::{default_directions, random_directions, BathDirection, BathKind};
use qdd::model::{random_couplings, CouplingSet, SymmetryClass, Topology};
use qdd::scaling::{FitWindow, SweepSpec, TauGrid};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const DEFAULT_SEED: u64 = 0x5EED_2011;
pub const DEFAULT_M: usize = 3;
pub const DEFAULT_TAU: f64 = 1.0;
/// Largest pulse count accepted per level on the command line.
pub const MAX_PULSES: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] qdd::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Inclusive pulse-count range, written `3`, `0:3` or `0..3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PulseRange {
    pub lo: usize,
    pub hi: usize,
}

impl PulseRange {
    pub fn single(n: usize) -> Self {
        PulseRange { lo: n, hi: n }
    }

    fn checked(lo: usize, hi: usize) -> Result<Self, String> {
        if lo > hi {
            return Err(format!("empty pulse range {lo}:{hi}"));
        }
        if hi > MAX_PULSES {
            return Err(format!("pulse count {hi} exceeds {MAX_PULSES}"));
        }
        Ok(PulseRange { lo, hi })
    }

    fn as_single(self, name: &str) -> Result<usize, ConfigError> {
        if self.lo == self.hi {
            Ok(self.lo)
        } else {
            Err(ConfigError::Usage(format!(
                "{name} must be a single pulse count for this command, got {self}"
            )))
        }
    }
}

impl fmt::Display for PulseRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}:{}", self.lo, self.hi)
        }
    }
}

impl FromStr for PulseRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid pulse count '{t}'"))
        };
        match s.split_once(':').or_else(|| s.split_once("..")) {
            Some((a, b)) => PulseRange::checked(num(a)?, num(b)?),
            None => {
                let n = num(s)?;
                PulseRange::checked(n, n)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    One(usize),
    Two([usize; 2]),
}

impl Serialize for PulseRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.lo == self.hi {
            RangeRepr::One(self.lo).serialize(s)
        } else {
            RangeRepr::Two([self.lo, self.hi]).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for PulseRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lo, hi) = match RangeRepr::deserialize(d)? {
            RangeRepr::One(n) => (n, n),
            RangeRepr::Two([a, b]) => (a, b),
        };
        PulseRange::checked(lo, hi).map_err(serde::de::Error::custom)
    }
}

/// Every field is optional; unset fields fall back to the command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<SymmetryClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    /// Coupling set to load instead of drawing one from `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<BathDirection>>,
    /// Draws random product-bath directions instead of the x, y, z cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction_seed: Option<u64>,
    #[serde(rename = "N_x", skip_serializing_if = "Option::is_none")]
    pub n_x: Option<PulseRange>,
    #[serde(rename = "N_z", skip_serializing_if = "Option::is_none")]
    pub n_z: Option<PulseRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<TauGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<FitWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay_fields!(
            self,
            top,
            seed,
            m,
            class,
            topology,
            couplings_file,
            bath,
            directions,
            direction_seed,
            n_x,
            n_z,
            tau,
            tau_grid,
            window,
            workers,
            output,
            format
        )
    }

    pub fn couplings(&self) -> Result<CouplingSet, ConfigError> {
        if let Some(path) = &self.couplings_file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            return Ok(CouplingSet::from_json(&text)?);
        }
        let m = self.m.unwrap_or(DEFAULT_M);
        if m == 0 {
            return Err(ConfigError::Usage("M must be at least 1".into()));
        }
        Ok(random_couplings(
            self.seed.unwrap_or(DEFAULT_SEED),
            m,
            self.class.unwrap_or(SymmetryClass::Anisotropic),
            self.topology.unwrap_or(Topology::CentralSpin),
        )?)
    }

    pub fn bath_kind(&self) -> BathKind {
        self.bath.unwrap_or(BathKind::Product)
    }

    /// Directions for a product bath: explicit list, then seeded random,
    /// then the default cycle. `None` for a mixed bath.
    pub fn directions_for(&self, m: usize) -> Result<Option<Vec<BathDirection>>, ConfigError> {
        if self.bath_kind() == BathKind::MaximallyMixed {
            return Ok(None);
        }
        let dirs = match (&self.directions, self.direction_seed) {
            (Some(d), _) => d.clone(),
            (None, Some(seed)) => random_directions(seed, m),
            (None, None) => default_directions(m),
        };
        if dirs.len() != m {
            return Err(ConfigError::Usage(format!(
                "product bath needs {m} directions, got {}",
                dirs.len()
            )));
        }
        Ok(Some(dirs))
    }

    pub fn tau(&self) -> Result<f64, ConfigError> {
        let tau = self.tau.unwrap_or(DEFAULT_TAU);
        if tau > 0.0 && tau.is_finite() {
            Ok(tau)
        } else {
            Err(ConfigError::Usage(format!(
                "tau must be positive and finite, got {tau}"
            )))
        }
    }

    /// Single cell for per-cell commands; defaults to (1, 1).
    pub fn cell(&self) -> Result<(usize, usize), ConfigError> {
        let nx = self.n_x.unwrap_or(PulseRange::single(1)).as_single("N_x")?;
        let nz = self.n_z.unwrap_or(PulseRange::single(1)).as_single("N_z")?;
        Ok((nx, nz))
    }

    /// Sweep specification; the grid defaults to `0:3` on both axes.
    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let couplings = self.couplings()?;
        let directions = self.directions_for(couplings.m)?;
        let grid = PulseRange { lo: 0, hi: 3 };
        let (nx, nz) = (self.n_x.unwrap_or(grid), self.n_z.unwrap_or(grid));
        let spec = SweepSpec {
            couplings,
            bath_kind: self.bath_kind(),
            directions,
            n_x: [nx.lo, nx.hi],
            n_z: [nz.lo, nz.hi],
            tau_grid: self.tau_grid.unwrap_or_default(),
            window: self.window.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_forms() {
        assert_eq!("3".parse::<PulseRange>().unwrap(), PulseRange::single(3));
        assert_eq!(
            "0:3".parse::<PulseRange>().unwrap(),
            PulseRange { lo: 0, hi: 3 }
        );
        assert_eq!(
            "1..2".parse::<PulseRange>().unwrap(),
            PulseRange { lo: 1, hi: 2 }
        );
        assert!("3:1".parse::<PulseRange>().is_err());
        assert!("17".parse::<PulseRange>().is_err());
        assert!("x".parse::<PulseRange>().is_err());
    }

    #[test]
    fn range_json_forms() {
        let c = RunConfig::from_json(r#"{"N_x": 2, "N_z": [0, 3]}"#).unwrap();
        assert_eq!(c.n_x, Some(PulseRange::single(2)));
        assert_eq!(c.n_z, Some(PulseRange { lo: 0, hi: 3 }));
        assert!(RunConfig::from_json(r#"{"N_x": [3, 1]}"#).is_err());
    }

    #[test]
    fn flags_override_config() {
        let file = RunConfig {
            seed: Some(1),
            m: Some(2),
            tau: Some(0.5),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            seed: Some(7),
            ..RunConfig::default()
        };
        let c = file.overlay(flags);
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.m, Some(2));
        assert_eq!(c.tau, Some(0.5));
    }

    #[test]
    fn config_round_trip() {
        let c = RunConfig {
            seed: Some(42),
            m: Some(3),
            class: Some(SymmetryClass::Isotropic),
            bath: Some(BathKind::MaximallyMixed),
            n_x: Some(PulseRange { lo: 0, hi: 2 }),
            n_z: Some(PulseRange::single(1)),
            tau: Some(0.1),
            tau_grid: Some(TauGrid::Geometric {
                tau_min: 1e-3,
                tau_max: 1.0,
                points: 10,
            }),
            format: Some(Format::Json),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"sead": 1}"#).is_err());
    }

    #[test]
    fn zero_spins_is_usage_error() {
        let c = RunConfig {
            m: Some(0),
            ..RunConfig::default()
        };
        assert!(matches!(c.couplings(), Err(ConfigError::Usage(_))));
    }

    #[test]
    fn single_cell_rejects_ranges() {
        let c = RunConfig {
            n_x: Some(PulseRange { lo: 0, hi: 2 }),
            ..RunConfig::default()
        };
        assert!(matches!(c.cell(), Err(ConfigError::Usage(_))));
        assert_eq!(RunConfig::default().cell().unwrap(), (1, 1));
    }

    #[test]
    fn mixed_bath_has_no_directions() {
        let c = RunConfig {
            bath: Some(BathKind::MaximallyMixed),
            directions: Some(default_directions(1)),
            ..RunConfig::default()
        };
        assert_eq!(c.directions_for(3).unwrap(), None);
        let p = RunConfig {
            directions: Some(default_directions(1)),
            ..RunConfig::default()
        };
        assert!(p.directions_for(3).is_err());
    }
}
