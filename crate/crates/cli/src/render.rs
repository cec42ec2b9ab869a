//! Text, CSV and JSON renderings. Everything is formatted with fixed
//! precision so identical runs print identical bytes.

use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use qvctl_core::caseio::write_trace_csv;
use qvctl_core::controller::{Comparison, ControlTrace};
use qvctl_core::netmodel::Network;
use qvctl_core::powerflow::PowerFlowSolution;
use qvctl_core::sensitivity::SensitivityModel;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn solution(net: &Network, sol: &PowerFlowSolution, format: Format) -> Result<String> {
    let mut out = String::new();
    match format {
        Format::Table => {
            writeln!(
                out,
                "{:>5}  {:<5}  {:>8}  {:>9}",
                "bus", "kind", "vm_pu", "va_deg"
            )?;
            for (k, b) in net.buses.iter().enumerate() {
                writeln!(
                    out,
                    "{:>5}  {:<5}  {:>8.4}  {:>9.4}",
                    b.id,
                    b.kind.as_str(),
                    sol.vm[k],
                    sol.va[k].to_degrees()
                )?;
            }
            writeln!(
                out,
                "converged in {} iteration(s), max mismatch {:.3e} pu",
                sol.iterations, sol.max_mismatch
            )?;
        }
        Format::Csv => {
            out.push_str("bus,kind,vm_pu,va_deg\n");
            for (k, b) in net.buses.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{:.10},{:.10}",
                    b.id,
                    b.kind.as_str(),
                    sol.vm[k],
                    sol.va[k].to_degrees()
                )?;
            }
        }
        Format::Json => {
            let buses: Vec<_> = net
                .buses
                .iter()
                .enumerate()
                .map(|(k, b)| json!({"bus": b.id, "kind": b.kind, "vm_pu": sol.vm[k], "va_deg": sol.va[k].to_degrees()}))
                .collect();
            out = pretty(&json!({
                "converged": sol.converged,
                "iterations": sol.iterations,
                "max_mismatch": sol.max_mismatch,
                "buses": buses,
            }))?;
        }
    }
    Ok(out)
}

pub fn sensitivity_json(model: &SensitivityModel) -> Result<String> {
    let rows = |m: &qvctl_core::numerics::DenseMatrix| -> Vec<Vec<f64>> {
        (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
    };
    pretty(&json!({
        "slack_mode": model.slack_mode,
        "ordering": model.ordering(),
        "control_buses": model.control_ids(),
        "load_buses": model.load_ids(),
        "s_vq": rows(&model.s_vq),
        "a_ctrl": rows(&model.a_ctrl),
    }))
}

/// Bus rows with one voltage column per snapshot, then a line per
/// iteration and the outcome.
fn trace_table(label: &str, trace: &ControlTrace) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "{label}: {}", trace.method.as_str())?;
    let snaps = trace.snapshots();
    write!(out, "{:>5}  {:<5}  {:>8}", "bus", "kind", "before")?;
    for k in 1..snaps.len() {
        write!(out, "  {:>8}", format!("iter {k}"))?;
    }
    out.push('\n');
    let mut order: Vec<usize> = (0..trace.bus_ids.len()).collect();
    order.sort_by_key(|&k| trace.bus_ids[k]);
    for k in order {
        write!(out, "{:>5}  {:<5}", trace.bus_ids[k], trace.bus_kinds[k].as_str())?;
        for s in &snaps {
            write!(out, "  {:>8.4}", s[k])?;
        }
        out.push('\n');
    }
    for r in &trace.iterations {
        let critical: Vec<String> = r
            .critical_buses
            .iter()
            .map(|(b, v)| format!("{b}@{v:.4}"))
            .collect();
        write!(
            out,
            "iter {}: critical [{}], controlled bus {}, dV {:+.4}",
            r.index,
            critical.join(" "),
            r.step.controlled_bus,
            r.step.dv_cb_target
        )?;
        if !r.step.clamped.is_empty() {
            let clamped: Vec<String> = r.step.clamped.iter().map(|b| b.to_string()).collect();
            write!(out, ", clamped [{}]", clamped.join(" "))?;
        }
        writeln!(out, ", J {:.6}", r.j_achieved)?;
    }
    writeln!(
        out,
        "outcome: {} after {} iteration(s), J total {:.6}",
        trace.outcome.as_str(),
        trace.iterations.len(),
        trace.j_achieved_total
    )?;
    Ok(out)
}

pub fn trace(label: &str, trace: &ControlTrace, format: Format) -> Result<String> {
    match format {
        Format::Table => trace_table(label, trace),
        Format::Csv => Ok(write_trace_csv(trace)),
        Format::Json => pretty(trace),
    }
}

pub fn comparison(rows: &[(&str, &Comparison)], format: Format) -> Result<String> {
    let mut out = String::new();
    match format {
        Format::Table => {
            writeln!(
                out,
                "{:<16}  {:>6}  {:>9}  {:>9}",
                "case", "bus", "J_OVC", "J_SVC"
            )?;
            for (name, c) in rows {
                writeln!(
                    out,
                    "{:<16}  {:>6}  {:>9.6}  {:>9.6}",
                    name, c.controlled_bus, c.j_ovc, c.j_svc
                )?;
            }
        }
        Format::Csv => {
            out.push_str("case,controlled_bus,j_ovc,j_svc\n");
            for (name, c) in rows {
                writeln!(
                    out,
                    "{name},{},{:.10e},{:.10e}",
                    c.controlled_bus, c.j_ovc, c.j_svc
                )?;
            }
        }
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(name, c)| json!({"case": name, "controlled_bus": c.controlled_bus, "j_ovc": c.j_ovc, "j_svc": c.j_svc}))
                .collect();
            out = pretty(&v)?;
        }
    }
    Ok(out)
}

pub fn reproduction(runs: &[(&str, &ControlTrace, &Comparison)], format: Format) -> Result<String> {
    let mut out = String::new();
    match format {
        Format::Table => {
            for (name, t, _) in runs {
                out.push_str(&trace_table(name, t)?);
                out.push('\n');
            }
            let rows: Vec<_> = runs.iter().map(|(n, _, c)| (*n, *c)).collect();
            out.push_str(&comparison(&rows, Format::Table)?);
        }
        Format::Csv => {
            out.push_str("scenario,outcome,iterations,controlled_bus,j_ovc,j_svc\n");
            for (name, t, c) in runs {
                writeln!(
                    out,
                    "{name},{},{},{},{:.10e},{:.10e}",
                    t.outcome.as_str(),
                    t.iterations.len(),
                    c.controlled_bus,
                    c.j_ovc,
                    c.j_svc
                )?;
            }
        }
        Format::Json => {
            let v: Vec<_> = runs
                .iter()
                .map(|(name, t, c)| json!({"scenario": name, "ovc": t, "j_ovc": c.j_ovc, "j_svc": c.j_svc}))
                .collect();
            out = pretty(&v)?;
        }
    }
    Ok(out)
}
