//! CSV traces, metrics sidecars and per-figure CSV files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{serialize_config, spec_from_table, ConfigError};
use crate::scenario::{DisturbanceSpec, Metrics, RunOutput, ScenarioSpec, TraceRecord, RNG_ID};

pub const CSV_HEADER: &str = "t,q,dq,ref,u_raw,u,du,F_est,F_fcst,dq_hat,dist";
pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.toml";

/// Formats `v` like C's `%.9g`: nine significant digits, trailing zeros
/// dropped, exponent notation outside `[1e-5, 1e9)`.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_owned()
        } else if v > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_sig(*v));
    }
    out.push('\n');
}

fn record_values(r: &TraceRecord) -> [f64; 11] {
    [
        r.t,
        r.q,
        r.dq,
        r.reference,
        r.u_raw,
        r.u,
        r.du,
        r.f_est,
        r.f_forecast,
        r.dq_hat,
        r.disturbance,
    ]
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(trace.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in trace {
        row(&mut out, &record_values(r));
    }
    out
}

/// Reads back a CSV written by [`trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", i + 1))?;
            if v.len() != 11 {
                return Err(format!("row {}: {} fields", i + 1, v.len()));
            }
            Ok(TraceRecord {
                t: v[0],
                q: v[1],
                dq: v[2],
                reference: v[3],
                u_raw: v[4],
                u: v[5],
                du: v[6],
                f_est: v[7],
                f_forecast: v[8],
                dq_hat: v[9],
                disturbance: v[10],
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Provenance<'a> {
    generator: &'a str,
    rng: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct SidecarHead<'a> {
    metrics: &'a Metrics,
    provenance: Provenance<'a>,
}

/// Metrics, provenance and the resolved scenario, as one TOML document.
pub fn metrics_sidecar(metrics: &Metrics, spec: &ScenarioSpec) -> String {
    let head = SidecarHead {
        metrics,
        provenance: Provenance {
            generator: concat!("mfc-aqm ", env!("CARGO_PKG_VERSION")),
            rng: RNG_ID,
            seed: spec.rng_seed,
        },
    };
    let mut out = toml::to_string(&head).expect("metrics are representable");
    out.push('\n');
    out.push_str(&serialize_config(spec));
    out
}

/// Splits a sidecar back into its metrics table and the scenario.
pub fn parse_sidecar(text: &str) -> Result<(toml::Table, ScenarioSpec), ConfigError> {
    let mut table: toml::Table = toml::from_str(text)?;
    table.remove("provenance");
    let metrics = match table.remove("metrics") {
        Some(toml::Value::Table(t)) => t,
        _ => toml::Table::new(),
    };
    Ok((metrics, spec_from_table(table)?))
}

/// Writes `trace.csv` and `metrics.toml` into `dir`.
pub fn emit_trace(output: &RunOutput, spec: &ScenarioSpec, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let trace_path = dir.join(TRACE_FILE);
    fs::write(&trace_path, trace_csv(&output.trace))?;
    let metrics_path = dir.join(METRICS_FILE);
    fs::write(&metrics_path, metrics_sidecar(&output.metrics, spec))?;
    Ok(vec![trace_path, metrics_path])
}

fn columns(trace: &[TraceRecord], header: &str, pick: impl Fn(&TraceRecord) -> Vec<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    for r in trace {
        row(&mut out, &pick(r));
    }
    out
}

/// Plot-ready panels: `fig-<name>-control.csv`, `fig-<name>-output.csv`,
/// `fig-<name>-estimators.csv` and, with a disturbance,
/// `fig-<name>-disturbance.csv`.
pub fn emit_figures(output: &RunOutput, spec: &ScenarioSpec, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let tr = &output.trace;
    let mut panels = vec![
        ("control", columns(tr, "t,u,du", |r| vec![r.t, r.u, r.du])),
        ("output", columns(tr, "t,dq,ref", |r| vec![r.t, r.dq, r.reference])),
        (
            "estimators",
            columns(tr, "t,F_est,F_fcst,dq,dq_hat", |r| {
                vec![r.t, r.f_est, r.f_forecast, r.dq, r.dq_hat]
            }),
        ),
    ];
    if spec.disturbance != DisturbanceSpec::None {
        panels.push(("disturbance", columns(tr, "t,dist", |r| vec![r.t, r.disturbance])));
    }
    let mut written = Vec::with_capacity(panels.len());
    for (panel, body) in panels {
        let path = dir.join(format!("fig-{}-{panel}.csv", spec.name));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
