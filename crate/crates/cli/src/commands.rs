use qdd::evolution::{pauli_decompose, Propagators};
use qdd::magnus::nested_integrals;
use qdd::metrics::{make_states, CSV_HEADER};
use qdd::model::build_hamiltonian;
use qdd::scaling::{CellFailure, ScalingResult, SeriesPoint, Sweeper};
use qdd::sequence::{qdd_schedule, switching_profile};
use qdd::symmetry::{symmetry_report, SymmetryReport};
use qdd::PauliAxis;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, Format, PulseRange, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Couplings,
    Schedule,
    Simulate,
    Sweep,
    Table,
    Magnus,
    SymmetryCheck,
}

/// Rendered command output plus any cells that failed to fit.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub failures: Vec<String>,
}

impl Output {
    fn complete(text: String) -> Self {
        Output {
            text,
            failures: Vec::new(),
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn describe(f: &CellFailure) -> String {
    format!("N_x={} N_z={}: {}", f.n_x, f.n_z, f.message)
}

fn cell_bundle(cell: &Result<ScalingResult, CellFailure>, with_points: bool) -> serde_json::Value {
    match cell {
        Ok(r) => {
            let mut v = json!({
                "N_x": r.n_x,
                "N_z": r.n_z,
                "zeta": r.zeta,
                "stderr": r.zeta_stderr,
                "window": r.window,
                "r_squared": r.r_squared,
                "seed": r.seed,
                "class": r.class,
                "bath_kind": r.bath_kind,
            });
            if with_points {
                v["points"] = json!(r.points);
            }
            v
        }
        Err(f) => {
            let mut v = json!({ "N_x": f.n_x, "N_z": f.n_z, "error": f.message });
            if with_points {
                v["points"] = json!(f.points);
            }
            v
        }
    }
}

fn series_rows(out: &mut String, n_x: usize, n_z: usize, points: &[SeriesPoint]) {
    for p in points {
        out.push_str(&format!("{n_x},{n_z},{}\n", p.csv_row()));
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output, ConfigError> {
    match cmd {
        Command::Couplings => {
            let mut text = cfg.couplings()?.to_json();
            text.push('\n');
            Ok(Output::complete(text))
        }
        Command::Schedule => {
            let (nx, nz) = cfg.cell()?;
            let mut text = qdd_schedule(nx, nz, cfg.tau()?)?.to_json();
            text.push('\n');
            Ok(Output::complete(text))
        }
        Command::Magnus => {
            let (nx, nz) = cfg.cell()?;
            let ints = nested_integrals(&switching_profile(&qdd_schedule(nx, nz, cfg.tau()?)?));
            Ok(Output::complete(pretty(&ints.to_doc(Some(nx), Some(nz)))))
        }
        Command::Simulate => simulate(cfg),
        Command::Sweep => sweep(cfg, true),
        Command::Table => sweep(cfg, false),
        Command::SymmetryCheck => symmetry_check(cfg),
    }
}

fn simulate(cfg: &RunConfig) -> Result<Output, ConfigError> {
    let (nx, nz) = cfg.cell()?;
    let single = RunConfig {
        n_x: Some(PulseRange::single(nx)),
        n_z: Some(PulseRange::single(nz)),
        ..cfg.clone()
    };
    let points = Sweeper::new(single.sweep_spec()?)?.series(nx, nz)?;
    let text = match cfg.format() {
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for p in &points {
                s.push_str(&p.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => pretty(&json!({ "N_x": nx, "N_z": nz, "points": points })),
    };
    Ok(Output::complete(text))
}

fn sweep(cfg: &RunConfig, series: bool) -> Result<Output, ConfigError> {
    let table = Sweeper::new(cfg.sweep_spec()?)?.table();
    let failures = table.failures().into_iter().map(describe).collect();
    let text = match (cfg.format(), series) {
        (Format::Csv, true) => {
            let mut s = format!("N_x,N_z,{CSV_HEADER}\n");
            for cell in &table.cells {
                match cell {
                    Ok(r) => series_rows(&mut s, r.n_x, r.n_z, &r.points),
                    Err(f) => series_rows(&mut s, f.n_x, f.n_z, &f.points),
                }
            }
            s
        }
        (Format::Csv, false) => table.to_csv(),
        (Format::Json, with_points) => {
            let cells: Vec<_> = table
                .cells
                .iter()
                .map(|c| cell_bundle(c, with_points))
                .collect();
            if with_points {
                pretty(&cells)
            } else {
                pretty(&json!({ "N_x": table.n_x, "N_z": table.n_z, "cells": cells }))
            }
        }
    };
    Ok(Output { text, failures })
}

#[derive(Serialize)]
struct SymmetryDoc {
    #[serde(rename = "N_x")]
    n_x: usize,
    #[serde(rename = "N_z")]
    n_z: usize,
    tau: f64,
    seed: u64,
    class: qdd::SymmetryClass,
    bath_kind: qdd::metrics::BathKind,
    max_b_vector: f64,
    max_offdiagonal_b: f64,
    max_parity_defect: f64,
    max_t_residual: f64,
    /// Keyed by the qubit preparation axis.
    reports: std::collections::BTreeMap<String, SymmetryReport>,
}

fn symmetry_check(cfg: &RunConfig) -> Result<Output, ConfigError> {
    let (nx, nz) = cfg.cell()?;
    let tau = cfg.tau()?;
    let couplings = cfg.couplings()?;
    let m = couplings.m;
    let h = build_hamiltonian(&couplings)?;
    let u = Propagators::new(&h).toggling(&switching_profile(&qdd_schedule(nx, nz, tau)?))?;
    let dec = pauli_decompose(&u, tau)?;
    let dirs = cfg.directions_for(m)?;
    let states = make_states(cfg.bath_kind(), dirs.as_deref(), m)?;
    let mut reports = std::collections::BTreeMap::new();
    for (axis, state) in PauliAxis::ALL.iter().zip(&states) {
        reports.insert(axis.label().to_string(), symmetry_report(state, &dec, m)?);
    }
    let max = |f: fn(&SymmetryReport) -> f64| reports.values().map(f).fold(0.0, f64::max);
    let doc = SymmetryDoc {
        n_x: nx,
        n_z: nz,
        tau,
        seed: couplings.seed,
        class: couplings.symmetry_class,
        bath_kind: cfg.bath_kind(),
        max_b_vector: max(SymmetryReport::max_b_vector),
        max_offdiagonal_b: max(SymmetryReport::max_offdiagonal_b),
        max_parity_defect: max(SymmetryReport::max_parity_defect),
        max_t_residual: max(|r| r.t_residual),
        reports,
    };
    Ok(Output::complete(pretty(&doc)))
}
