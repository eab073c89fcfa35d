//! Command-line front end for the `betaflow` library.
//!
//! Exit codes: 0 success, 1 failed checks or I/O trouble, 2 usage error,
//! 3 domain or singularity error.

pub mod csv;
pub mod svg;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use betaflow::flow::{integrate, FlowStatus};
use betaflow::stirling::{classify, CLASSIFY_TOL};
use betaflow::{
    integrability, invert3, manifold::default_singular_tol, run_suite, scan_degeneracy, DomainKind, Error, FlaggedCell,
    ModelKind, Region, Theta,
};
use clap::{Parser, Subcommand};
use serde::Serialize;

pub use svg::{emit_svg, render_svg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("trajectory has {0} sample(s); a plot needs at least 2")]
    EmptyTrajectory(usize),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::UnknownSuite(_) | Error::InvalidRegion(_)) => 2,
            CliError::Core(e) if e.is_domain_or_singular() => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "betaflow", version, about = "Gradient flows on the bivariate beta manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Potential, dual coordinates, metric and classification at a point.
    Info {
        #[arg(long)]
        model: ModelKind,
        /// a,b,c
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        json: bool,
    },
    /// Integrate the gradient flow and write the trajectory as CSV.
    Flow {
        #[arg(long)]
        model: ModelKind,
        /// a,b,c
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, allow_hyphen_values = true)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a verification suite.
    Check {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Flag grid cells where the Stirling metric degenerates.
    Scan {
        /// a0:a1,b0:b1,c0:c1
        #[arg(long)]
        region: String,
        #[arg(long, default_value_t = 8)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// JSON destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("usage error");
            let _ = writeln!(err, "{}", line.trim_start_matches("error: ").trim());
            return 2;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn parse_point(s: &str) -> Result<Theta, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("expected a,b,c, got {s:?}")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|_| CliError::Usage(format!("{p:?} is not a number")))?;
    }
    Theta::new(v[0], v[1], v[2]).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct DomainReport {
    pub kind: DomainKind,
    /// Distance to the nearest degeneracy locus; null for the exact model.
    pub distance: Option<f64>,
}

/// Fields of `info --json`.
#[derive(Debug, Serialize)]
pub struct InfoReport {
    pub model: ModelKind,
    pub point: [f64; 3],
    pub phi: f64,
    pub eta: [f64; 3],
    #[serde(rename = "G")]
    pub g: [f64; 9],
    /// Absent (null) when the metric is singular.
    #[serde(rename = "G_inv")]
    pub g_inv: Option<[f64; 9]>,
    #[serde(rename = "detG")]
    pub det_g: f64,
    pub eigenvalues: [f64; 3],
    /// Null when the Hamiltonian is undefined.
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub domain: DomainReport,
}

pub fn info_report(model: ModelKind, theta: Theta) -> Result<InfoReport, CliError> {
    let m = model.manifold();
    m.check_domain(theta)?;
    let g = m.metric(theta)?;
    let eta = m.eta(theta)?;
    let det_g = match model {
        ModelKind::Stirling => betaflow::StirlingModel::DEFAULT.det_closed(theta)?,
        ModelKind::Exact => betaflow::det3(&g),
    };
    let domain = match model {
        ModelKind::Stirling => {
            let c = classify(theta, CLASSIFY_TOL);
            DomainReport { kind: c.kind, distance: Some(c.distance) }
        }
        ModelKind::Exact => DomainReport { kind: DomainKind::Regular, distance: None },
    };
    Ok(InfoReport {
        model,
        point: theta.to_array(),
        phi: m.potential(theta)?,
        eta: eta.to_array(),
        g: g.to_row_major(),
        g_inv: invert3(&g, default_singular_tol(&g)).ok().map(|inv| inv.to_row_major()),
        det_g,
        eigenvalues: g.eigenvalues(),
        h: integrability::hamiltonian(eta).ok(),
        domain,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("({})", parts.join(", "))
}

fn write_info_text(r: &InfoReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "model        {}", r.model)?;
    writeln!(out, "point        {}", fmt_vec(&r.point))?;
    writeln!(out, "Phi          {:.12}", r.phi)?;
    writeln!(out, "eta          {}", fmt_vec(&r.eta))?;
    for (k, row) in r.g.chunks(3).enumerate() {
        writeln!(out, "{}{}", if k == 0 { "G            " } else { "             " }, fmt_vec(row))?;
    }
    match &r.g_inv {
        Some(inv) => {
            for (k, row) in inv.chunks(3).enumerate() {
                writeln!(out, "{}{}", if k == 0 { "G^-1         " } else { "             " }, fmt_vec(row))?;
            }
        }
        None => writeln!(out, "G^-1         singular")?,
    }
    writeln!(out, "det G        {:.12e}", r.det_g)?;
    writeln!(out, "eigenvalues  {}", fmt_vec(&r.eigenvalues))?;
    match r.h {
        Some(h) => writeln!(out, "H            {h:.12}")?,
        None => writeln!(out, "H            undefined")?,
    }
    match r.domain.distance {
        Some(d) => writeln!(out, "domain       {} (distance {d:e})", r.domain.kind),
        None => writeln!(out, "domain       {}", r.domain.kind),
    }
}

#[derive(Debug, Serialize)]
pub struct ScanReport {
    pub region: Region,
    pub tol: f64,
    pub cells: Vec<FlaggedCell>,
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Info { model, point, json } => {
            let theta = parse_point(&point)?;
            let report = info_report(model, theta)?;
            if json {
                serde_json::to_writer_pretty(&mut *out, &report).map_err(io::Error::from)?;
                writeln!(out)?;
            } else {
                write_info_text(&report, out)?;
            }
            Ok(0)
        }
        Command::Flow { model, start, t_end, rtol, atol, out: path, svg } => {
            let theta = parse_point(&start)?;
            let traj = integrate(model.manifold(), theta, t_end, rtol, atol)?;
            match &path {
                Some(p) => csv::write_trajectory(&traj, io::BufWriter::new(std::fs::File::create(p)?))?,
                None => csv::write_trajectory(&traj, &mut *out)?,
            }
            if let Some(p) = &svg {
                emit_svg(&traj, p)?;
            }
            if traj.status != FlowStatus::Completed {
                writeln!(
                    err,
                    "warning: integration stopped at t = {} before t_end = {} ({})",
                    traj.last().t,
                    t_end,
                    traj.status.as_str()
                )?;
            }
            Ok(0)
        }
        Command::Check { suite, seed, json } => {
            let report = run_suite(&suite, seed)?;
            if json {
                serde_json::to_writer_pretty(&mut *out, &report).map_err(io::Error::from)?;
                writeln!(out)?;
            } else {
                let mut print = |prefix: &str, r: &betaflow::SuiteReport| -> io::Result<()> {
                    for c in &r.checks {
                        writeln!(
                            out,
                            "{} {prefix}{}  residual {:e}  tolerance {:e}",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.residual,
                            c.tolerance
                        )?;
                    }
                    Ok(())
                };
                print("", &report)?;
                for sub in &report.suites {
                    print(&format!("{}/", sub.suite), sub)?;
                }
                writeln!(out, "suite {}: {}", report.suite, if report.pass { "pass" } else { "FAIL" })?;
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Scan { region, resolution, tol, out: path } => {
            let region: Region = region.parse()?;
            let region = region.with_resolution(resolution)?;
            let cells = scan_degeneracy(&region, tol)?;
            let report = ScanReport { region, tol, cells };
            match &path {
                Some(p) => {
                    let mut w = io::BufWriter::new(std::fs::File::create(p)?);
                    serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
                    writeln!(w)?;
                    w.flush()?;
                    writeln!(out, "{} flagged cell(s)", report.cells.len())?;
                }
                None => {
                    serde_json::to_writer_pretty(&mut *out, &report).map_err(io::Error::from)?;
                    writeln!(out)?;
                }
            }
            Ok(0)
        }
    }
}
