//! CSV writers and readers for traces, flows and policies.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use mfg_core::{IterationRecord, IterationTrace, MeanFieldFlow, Policy, TimeGrid};

use crate::RunnerError;

pub const TRACE_HEADER: &str = "k,delta_j,delta_j_re,policy_delta,mean_field_delta,objective";
pub const POLICY_HEADER: &str = "k,x,u,prob";

pub const COLUMNS_DOC: &str = "\
trace.csv
  k                 iteration index; row k describes the policy pi^k
  delta_j           unregularized exploitability of pi^k (NaN if record_nash_gap = false)
  delta_j_re        regularized exploitability of pi^k
  policy_delta      sup-norm distance between pi^(k+1) and pi^k
  mean_field_delta  max over nodes of the L1 distance between successive mean fields
                    (successive averaged mean fields for fp)
  objective         regularized value of pi^k against its own mean field

flow.csv, averaged_flow.csv
  t                 grid node time
  state_i           population mass in state i
  flow.csv is the mean field induced by the final policy; averaged_flow.csv
  (fp only) is the running average after the last iteration.

policy.csv
  k                 grid interval [t_k, t_(k+1))
  x                 state
  u                 action
  prob              probability of u in state x on interval k

summary.csv (one row per algorithm and temperature)
  algorithm, alpha
  iterations        number of trace rows
  converged         true when the stopping tolerance was met
  delta_j           unregularized exploitability of the final policy
  delta_j_re        regularized exploitability of the final policy
  objective         regularized value of the final policy
  mean_infected_fraction  (sis only) time-averaged infected share of the final mean field
";

fn create(path: &Path) -> Result<BufWriter<File>, RunnerError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| RunnerError::io(path, source))
}

fn finish(path: &Path, result: io::Result<()>) -> Result<(), RunnerError> {
    result.map_err(|source| RunnerError::io(path, source))
}

/// Writes the trace; floats use 17 significant digits so they parse back exactly.
pub fn write_trace<W: Write>(out: &mut W, trace: &IterationTrace) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace.records() {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k, r.delta_j, r.delta_j_re, r.policy_delta, r.mean_field_delta, r.objective
        )?;
    }
    Ok(())
}

pub fn emit_trace(trace: &IterationTrace, path: &Path) -> Result<(), RunnerError> {
    let mut w = create(path)?;
    finish(path, write_trace(&mut w, trace).and_then(|_| w.flush()))
}

pub fn write_flow<W: Write>(out: &mut W, flow: &MeanFieldFlow, grid: &TimeGrid) -> io::Result<()> {
    write!(out, "t")?;
    for i in 0..flow.n_states() {
        write!(out, ",state_{i}")?;
    }
    writeln!(out)?;
    for k in 0..flow.n_nodes() {
        write!(out, "{:?}", grid.node(k))?;
        for v in flow.node(k) {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn emit_flow(flow: &MeanFieldFlow, grid: &TimeGrid, path: &Path) -> Result<(), RunnerError> {
    if flow.n_nodes() != grid.n_nodes() {
        return Err(RunnerError::Input(format!(
            "flow has {} nodes, grid has {}",
            flow.n_nodes(),
            grid.n_nodes()
        )));
    }
    let mut w = create(path)?;
    finish(path, write_flow(&mut w, flow, grid).and_then(|_| w.flush()))
}

pub fn write_policy<W: Write>(out: &mut W, policy: &Policy) -> io::Result<()> {
    writeln!(out, "{POLICY_HEADER}")?;
    for (k, x, u, p) in policy.entries() {
        writeln!(out, "{k},{x},{u},{p:?}")?;
    }
    Ok(())
}

pub fn emit_policy(policy: &Policy, path: &Path) -> Result<(), RunnerError> {
    let mut w = create(path)?;
    finish(path, write_policy(&mut w, policy).and_then(|_| w.flush()))
}

fn parse_f64(field: &str, what: &str) -> Result<f64, RunnerError> {
    field
        .trim()
        .parse()
        .map_err(|_| RunnerError::Input(format!("bad {what} value `{field}`")))
}

fn parse_index(field: &str, what: &str) -> Result<usize, RunnerError> {
    field
        .trim()
        .parse()
        .map_err(|_| RunnerError::Input(format!("bad {what} index `{field}`")))
}

fn check_header(reader: &mut csv::Reader<impl io::Read>, expected: &str) -> Result<(), RunnerError> {
    let header = reader.headers().map_err(|e| RunnerError::Input(e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got.join(",") != expected {
        return Err(RunnerError::Input(format!(
            "expected header `{expected}`, found `{}`",
            got.join(",")
        )));
    }
    Ok(())
}

pub fn read_trace<R: io::Read>(input: R) -> Result<IterationTrace, RunnerError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, TRACE_HEADER)?;
    let mut trace = IterationTrace::default();
    for row in reader.records() {
        let row = row.map_err(|e| RunnerError::Input(e.to_string()))?;
        if row.len() != 6 {
            return Err(RunnerError::Input(format!("trace row has {} fields", row.len())));
        }
        trace.push(IterationRecord {
            k: parse_index(&row[0], "k")?,
            delta_j: parse_f64(&row[1], "delta_j")?,
            delta_j_re: parse_f64(&row[2], "delta_j_re")?,
            policy_delta: parse_f64(&row[3], "policy_delta")?,
            mean_field_delta: parse_f64(&row[4], "mean_field_delta")?,
            objective: parse_f64(&row[5], "objective")?,
        });
    }
    Ok(trace)
}

/// Reads a `k,x,u,prob` policy file. Every (interval, state, action) must
/// appear exactly once.
pub fn read_policy<R: io::Read>(
    input: R,
    n_intervals: usize,
    n_states: usize,
    n_actions: usize,
) -> Result<Policy, RunnerError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, POLICY_HEADER)?;
    let mut values = vec![f64::NAN; n_intervals * n_states * n_actions];
    let mut seen = vec![false; values.len()];
    for row in reader.records() {
        let row = row.map_err(|e| RunnerError::Input(e.to_string()))?;
        if row.len() != 4 {
            return Err(RunnerError::Input(format!("policy row has {} fields", row.len())));
        }
        let (k, x, u) = (
            parse_index(&row[0], "k")?,
            parse_index(&row[1], "x")?,
            parse_index(&row[2], "u")?,
        );
        if k >= n_intervals || x >= n_states || u >= n_actions {
            return Err(RunnerError::Input(format!(
                "policy entry ({k},{x},{u}) outside {n_intervals} x {n_states} x {n_actions}"
            )));
        }
        let i = (k * n_states + x) * n_actions + u;
        if seen[i] {
            return Err(RunnerError::Input(format!("duplicate policy entry ({k},{x},{u})")));
        }
        seen[i] = true;
        values[i] = parse_f64(&row[3], "prob")?;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (k, rest) = (i / (n_states * n_actions), i % (n_states * n_actions));
        return Err(RunnerError::Input(format!(
            "missing policy entry ({k},{},{})",
            rest / n_actions,
            rest % n_actions
        )));
    }
    Ok(Policy::from_values(n_intervals, n_states, n_actions, values)?)
}
