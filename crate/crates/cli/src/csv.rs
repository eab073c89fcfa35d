//! Trajectory CSV: one row per recorded sample, 17 significant digits.

use std::io::{self, BufRead, Write};

use betaflow::{Eta, Theta, Trajectory, TrajectorySample};

use crate::CliError;

pub const HEADER: &str = "t,a,b,c,eta1,eta2,eta3,H,det_G,lax_dev";

fn row(s: &TrajectorySample) -> [f64; 10] {
    [s.t, s.theta.a, s.theta.b, s.theta.c, s.eta.eta1, s.eta.eta2, s.eta.eta3, s.hamiltonian, s.det_g, s.lax_dev]
}

pub fn write_trajectory<W: Write>(trajectory: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for s in &trajectory.samples {
        let fields: Vec<String> = row(s).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()
}

pub fn read_samples<R: BufRead>(input: R) -> Result<Vec<TrajectorySample>, CliError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != HEADER {
        return Err(CliError::Format(format!("unexpected CSV header {header:?}")));
    }
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Format(format!("row {}: {e}", n + 1)))?;
        let v: [f64; 10] = values
            .try_into()
            .map_err(|v: Vec<f64>| CliError::Format(format!("row {}: expected 10 fields, got {}", n + 1, v.len())))?;
        samples.push(TrajectorySample {
            t: v[0],
            theta: Theta { a: v[1], b: v[2], c: v[3] },
            eta: Eta { eta1: v[4], eta2: v[5], eta3: v[6] },
            hamiltonian: v[7],
            det_g: v[8],
            lax_dev: v[9],
        });
    }
    Ok(samples)
}
