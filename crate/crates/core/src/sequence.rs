//! QDD pulse schedules and the switching functions they induce.
//!
//! The outer sequence places `N_x` σ_x pulses at Uhrig instants
//! `t^x_j = τ sin²(jπ / 2(N_x+1))`. Every one of the `N_x + 1` outer intervals
//! `[t^x_j, t^x_{j+1}]` (with `t^x_0 = 0`, `t^x_{N_x+1} = τ`) carries an inner
//! Uhrig sequence of `N_z` σ_z pulses, for `N_x + N_z + N_x N_z` pulses in all.
//! Pulses are ideal and instantaneous and act as the bare Pauli matrix.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{identity, pauli, CMatrix, PauliAxis};

/// Upper bound on `N_x` and `N_z` accepted when decoding schedules.
pub const MAX_PULSES_PER_LEVEL: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseAxis {
    X,
    Z,
}

impl PulseAxis {
    pub fn pauli_axis(self) -> PauliAxis {
        match self {
            PulseAxis::X => PauliAxis::X,
            PulseAxis::Z => PauliAxis::Z,
        }
    }

    /// Sign multipliers applied to `(f_x, f_y, f_z)` when this pulse fires:
    /// a π pulse about one axis flips the two perpendicular couplings.
    pub fn flips(self) -> [i8; 3] {
        match self {
            PulseAxis::X => [1, -1, -1],
            PulseAxis::Z => [-1, -1, 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub t: f64,
    pub axis: PulseAxis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub n_x: usize,
    pub n_z: usize,
    pub tau: f64,
    pub outer_times: Vec<f64>,
    /// `inner_times[j]` holds the `N_z` σ_z instants of outer block `j`.
    pub inner_times: Vec<Vec<f64>>,
    pub events: Vec<PulseEvent>,
}

/// Uhrig instants `τ sin²(jπ / 2(n+1))` for `j = 1..=n`, scaled into `[start, end]`.
pub fn udd_times(n: usize, start: f64, end: f64) -> Vec<f64> {
    let len = end - start;
    (1..=n)
        .map(|j| {
            let s = (j as f64 * PI / (2.0 * (n + 1) as f64)).sin();
            start + len * s * s
        })
        .collect()
}

pub fn total_pulses(n_x: usize, n_z: usize) -> usize {
    n_x + n_z + n_x * n_z
}

pub fn qdd_schedule(n_x: usize, n_z: usize, tau: f64) -> Result<PulseSchedule> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidDuration(tau));
    }
    let outer_times = udd_times(n_x, 0.0, tau);
    let mut bounds = Vec::with_capacity(n_x + 2);
    bounds.push(0.0);
    bounds.extend_from_slice(&outer_times);
    bounds.push(tau);

    let inner_times: Vec<Vec<f64>> = bounds
        .windows(2)
        .map(|w| udd_times(n_z, w[0], w[1]))
        .collect();

    let mut events = Vec::with_capacity(total_pulses(n_x, n_z));
    for (j, block) in inner_times.iter().enumerate() {
        events.extend(block.iter().map(|&t| PulseEvent {
            t,
            axis: PulseAxis::Z,
        }));
        if j < n_x {
            events.push(PulseEvent {
                t: outer_times[j],
                axis: PulseAxis::X,
            });
        }
    }
    let schedule = PulseSchedule {
        n_x,
        n_z,
        tau,
        outer_times,
        inner_times,
        events,
    };
    schedule.check_times()?;
    Ok(schedule)
}

/// `P̂ = σ_z^{N_z} σ_x σ_z^{N_z} … σ_z^{N_z}` with `N_x + 1` blocks.
pub fn pulse_operator(n_x: usize, n_z: usize) -> CMatrix {
    let z_block = if n_z.is_multiple_of(2) {
        identity(2)
    } else {
        pauli(PauliAxis::Z)
    };
    let x = pauli(PauliAxis::X);
    let mut p = z_block.clone();
    for _ in 0..n_x {
        p = p * &x * &z_block;
    }
    p
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    #[serde(rename = "N_x")]
    n_x: usize,
    #[serde(rename = "N_z")]
    n_z: usize,
    tau: f64,
    events: Vec<PulseEvent>,
}

impl PulseSchedule {
    fn check_times(&self) -> Result<()> {
        let mut prev = 0.0;
        for e in &self.events {
            if !(e.t > prev && e.t < self.tau) {
                return Err(Error::InvalidSchedule(format!(
                    "pulse times must be strictly increasing inside (0, {}); got {} after {}",
                    self.tau, e.t, prev
                )));
            }
            prev = e.t;
        }
        Ok(())
    }

    /// Product of the pulse Paulis in time order, latest leftmost.
    pub fn pulse_product(&self) -> CMatrix {
        self.events
            .iter()
            .fold(identity(2), |acc, e| pauli(e.axis.pauli_axis()) * acc)
    }

    pub fn to_json(&self) -> String {
        let doc = ScheduleDoc {
            n_x: self.n_x,
            n_z: self.n_z,
            tau: self.tau,
            events: self.events.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("schedule serializes")
    }

    /// Decodes a schedule document, checking pulse counts, ordering and the
    /// nested block structure. Instants need not be Uhrig instants.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ScheduleDoc = serde_json::from_str(s)?;
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if doc.n_x > MAX_PULSES_PER_LEVEL || doc.n_z > MAX_PULSES_PER_LEVEL {
            return bad(format!(
                "pulse counts above {MAX_PULSES_PER_LEVEL} are not supported"
            ));
        }
        if !(doc.tau > 0.0 && doc.tau.is_finite()) {
            return Err(Error::InvalidDuration(doc.tau));
        }
        let expected = total_pulses(doc.n_x, doc.n_z);
        if doc.events.len() != expected {
            return bad(format!(
                "expected {expected} pulses, got {}",
                doc.events.len()
            ));
        }
        let mut outer_times = Vec::with_capacity(doc.n_x);
        let mut inner_times = vec![Vec::with_capacity(doc.n_z)];
        for e in &doc.events {
            match e.axis {
                PulseAxis::X => {
                    outer_times.push(e.t);
                    inner_times.push(Vec::with_capacity(doc.n_z));
                }
                PulseAxis::Z => inner_times.last_mut().expect("nonempty").push(e.t),
            }
        }
        if outer_times.len() != doc.n_x {
            return bad(format!(
                "expected {} X pulses, got {}",
                doc.n_x,
                outer_times.len()
            ));
        }
        if let Some((j, b)) = inner_times
            .iter()
            .enumerate()
            .find(|(_, b)| b.len() != doc.n_z)
        {
            return bad(format!(
                "outer block {j} holds {} Z pulses, expected {}",
                b.len(),
                doc.n_z
            ));
        }
        let schedule = PulseSchedule {
            n_x: doc.n_x,
            n_z: doc.n_z,
            tau: doc.tau,
            outer_times,
            inner_times,
            events: doc.events,
        };
        schedule.check_times()?;
        Ok(schedule)
    }
}

/// Piecewise-constant toggling-frame signs `(f_x, f_y, f_z)`.
///
/// Interval `k` is `(s_k, s_{k+1}]`; the first interval also contains 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<[i8; 3]>,
}

pub fn switching_profile(s: &PulseSchedule) -> SwitchingProfile {
    let mut breakpoints = Vec::with_capacity(s.events.len() + 2);
    let mut values = Vec::with_capacity(s.events.len() + 1);
    breakpoints.push(0.0);
    let mut f = [1i8; 3];
    values.push(f);
    for e in &s.events {
        breakpoints.push(e.t);
        let flip = e.axis.flips();
        for k in 0..3 {
            f[k] *= flip[k];
        }
        values.push(f);
    }
    breakpoints.push(s.tau);
    SwitchingProfile {
        breakpoints,
        values,
    }
}

impl SwitchingProfile {
    /// Profile of an unpulsed evolution of length `tau` (`f ≡ 1`).
    pub fn constant(tau: f64) -> Self {
        Self {
            breakpoints: vec![0.0, tau],
            values: vec![[1; 3]],
        }
    }

    pub fn tau(&self) -> f64 {
        *self.breakpoints.last().expect("profile has breakpoints")
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, [i8; 3])> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn sign_at(&self, t: f64) -> [i8; 3] {
        // Number of interior breakpoints strictly below t.
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        let k = interior.partition_point(|&b| b < t);
        self.values[k]
    }

    pub fn integral(&self, axis: PauliAxis) -> f64 {
        self.intervals()
            .map(|(a, b, v)| (b - a) * v[axis.index()] as f64)
            .sum()
    }

    /// Same sign pattern on breakpoints scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|b| b * factor).collect(),
            values: self.values.clone(),
        }
    }
}
