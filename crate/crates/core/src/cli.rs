//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a configuration is infeasible or a check
//! fails, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::SystemConfig;
use crate::dof_bounds::{corner_point, corner_points, gap_report};
use crate::error::Result;
use crate::gsa::{allocate_streams, verify_alignment};
use crate::rational::RationalDof;
use crate::relay::{monte_carlo, prepare_link, write_cells_csv, SymbolKind, RECOVERY_TOL};
use crate::sweep::{run_sweep, write_csv, SweepSpec, DEFAULT_GRID_POINTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gsa-dof", version, about = "DoF bounds and signal-alignment schemes for K-user MIMO Y channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Dims {
    /// Number of users (at least 3).
    #[arg(long, value_parser = clap::value_parser!(u32).range(3..))]
    pub k: u32,
    /// Antennas per user.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub m: u32,
    /// Relay antennas.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
}

impl Dims {
    fn cfg(&self) -> Result<SystemConfig> {
        SystemConfig::new(self.k as usize, self.m as usize, self.n as usize)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper bound, achievable DoF and regime for one configuration.
    Bound {
        #[command(flatten)]
        dims: Dims,
        #[arg(long)]
        json: bool,
    },
    /// Corner points of the achievable region.
    Corners {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..))]
        k: u32,
    },
    /// Upper and achievable DoF per antenna over a grid of N/M.
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..))]
        k: u32,
        /// Comma-separated ratios such as "1,3/2,2".
        #[arg(long, conflicts_with = "grid_auto", value_delimiter = ',')]
        grid: Option<Vec<RationalDof>>,
        /// Number of evenly spaced ratios on (0, K].
        #[arg(long)]
        grid_auto: Option<usize>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, verify and run one noiseless scheme.
    Synthesize {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        beta: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the scheme as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sum rate over seeds and SNRs, with the fitted DoF slope.
    Montecarlo {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        beta: u32,
        /// Number of seeds, starting at --seed-start.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        seed_start: u64,
        /// Comma-separated SNRs in dB.
        #[arg(long, required = true, value_delimiter = ',')]
        snr_grid: Vec<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one JSON record per cell here.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            EXIT_FAILURE
        }
    }
}

pub fn execute<W: Write>(cmd: Command, out: &mut W) -> Result<i32> {
    match cmd {
        Command::Bound { dims, json } => cmd_bound(&dims.cfg()?, json, out),
        Command::Corners { k } => cmd_corners(k as usize, out),
        Command::Sweep { k, grid, grid_auto, out: path } => cmd_sweep(k as usize, grid, grid_auto, path, out),
        Command::Synthesize {
            dims,
            beta,
            seed,
            out: path,
            json,
        } => cmd_synthesize(&dims.cfg()?, beta, seed, path, json, out),
        Command::Montecarlo {
            dims,
            beta,
            seeds,
            seed_start,
            snr_grid,
            out: path,
            records,
        } => {
            let seeds: Vec<u64> = (0..seeds).map(|i| seed_start + i).collect();
            cmd_montecarlo(&dims.cfg()?, beta, &seeds, &snr_grid, path, records, out)
        }
    }
}

#[derive(Serialize)]
struct BoundJson {
    k: usize,
    m: usize,
    n: usize,
    ratio: RationalDof,
    upper: RationalDof,
    upper_decimal: f64,
    regime: &'static str,
    beta: Option<u32>,
    achievable: RationalDof,
    achievable_decimal: f64,
    tight: bool,
}

fn cmd_bound<W: Write>(cfg: &SystemConfig, json: bool, out: &mut W) -> Result<i32> {
    let g = gap_report(cfg)?;
    if json {
        let doc = BoundJson {
            k: cfg.k,
            m: cfg.m,
            n: cfg.n,
            ratio: cfg.ratio(),
            upper_decimal: g.upper.to_f64(),
            upper: g.upper,
            regime: g.regime.kind(),
            beta: g.regime.beta(),
            achievable_decimal: g.achievable.to_f64(),
            achievable: g.achievable,
            tight: g.tight,
        };
        serde_json::to_writer(&mut *out, &doc)?;
        writeln!(out)?;
    } else {
        writeln!(out, "K={} M={} N={} (N/M = {})", cfg.k, cfg.m, cfg.n, cfg.ratio())?;
        writeln!(out, "upper bound: {} ({:.6})", g.upper, g.upper.to_f64())?;
        writeln!(out, "regime: {}", g.regime)?;
        writeln!(out, "achievable: {} ({:.6})", g.achievable, g.achievable.to_f64())?;
        writeln!(out, "tight: {}", g.tight)?;
    }
    Ok(EXIT_OK)
}

fn cmd_corners<W: Write>(k: usize, out: &mut W) -> Result<i32> {
    writeln!(out, "beta,ratio,dof_per_m")?;
    for c in corner_points(k)? {
        writeln!(out, "{},{},{}", c.beta, c.abscissa, c.dof_per_m)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep<W: Write>(
    k: usize,
    grid: Option<Vec<RationalDof>>,
    grid_auto: Option<usize>,
    path: Option<PathBuf>,
    out: &mut W,
) -> Result<i32> {
    let spec = match grid {
        Some(g) => SweepSpec::from_grid(k, g)?,
        None => SweepSpec::auto(k, grid_auto.unwrap_or(DEFAULT_GRID_POINTS))?,
    };
    let rows = run_sweep(&spec)?;
    match path {
        Some(p) => write_csv(BufWriter::new(File::create(p)?), &rows)?,
        None => write_csv(&mut *out, &rows)?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SynthesisSummary {
    k: usize,
    m: usize,
    n: usize,
    beta: u32,
    seed: u64,
    t: u64,
    effective_m: usize,
    effective_n: usize,
    d_total: usize,
    alignment_residual: f64,
    b_cond: f64,
    alignment_passed: bool,
    relay_recovery_error: f64,
    user_recovery_error: Option<f64>,
    broadcast_error: Option<String>,
    passed: bool,
}

fn cmd_synthesize<W: Write>(
    cfg: &SystemConfig,
    beta: u32,
    seed: u64,
    path: Option<PathBuf>,
    json: bool,
    out: &mut W,
) -> Result<i32> {
    // Below the corner the sources would have to shed antennas; report
    // the shortfall instead.
    let corner = corner_point(cfg.k, beta)?;
    if cfg.ratio() < corner.abscissa {
        allocate_streams(cfg, beta)?;
    }
    let link = prepare_link(cfg, beta, seed)?;
    let report = verify_alignment(&link.scheme, &link.channels);
    let sim = link.run(cfg, 0.0, SymbolKind::Gaussian)?;
    if let Some(p) = path {
        std::fs::write(p, link.scheme.to_json()?)?;
    }
    let user = sim.max_user_error();
    let passed = report.passed
        && sim.relay_recovery_error <= RECOVERY_TOL
        && user.is_none_or(|e| e <= RECOVERY_TOL);
    let s = SynthesisSummary {
        k: cfg.k,
        m: cfg.m,
        n: cfg.n,
        beta,
        seed,
        t: sim.t,
        effective_m: sim.effective.m,
        effective_n: sim.effective.n,
        d_total: link.scheme.alloc.d_total,
        alignment_residual: sim.alignment_residual,
        b_cond: sim.b_cond,
        alignment_passed: report.passed,
        relay_recovery_error: sim.relay_recovery_error,
        user_recovery_error: user,
        broadcast_error: sim.bc_error.clone(),
        passed,
    };
    if json {
        serde_json::to_writer(&mut *out, &s)?;
        writeln!(out)?;
    } else {
        writeln!(
            out,
            "K={} M={} N={} beta={} seed={}: t={} effective M={} N={}, d_total={}",
            s.k, s.m, s.n, s.beta, s.seed, s.t, s.effective_m, s.effective_n, s.d_total
        )?;
        writeln!(out, "alignment residual: {:.3e}", s.alignment_residual)?;
        writeln!(out, "cond(B): {:.3e}", s.b_cond)?;
        writeln!(
            out,
            "alignment conditions: {}",
            if s.alignment_passed { "pass" } else { "FAIL" }
        )?;
        writeln!(out, "relay recovery error: {:.3e}", s.relay_recovery_error)?;
        match (&s.user_recovery_error, &s.broadcast_error) {
            (Some(e), _) => writeln!(out, "user recovery error: {e:.3e}")?,
            (None, Some(msg)) => writeln!(out, "broadcast: {msg}")?,
            (None, None) => {}
        }
        writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_montecarlo<W: Write>(
    cfg: &SystemConfig,
    beta: u32,
    seeds: &[u64],
    snr_grid: &[f64],
    path: Option<PathBuf>,
    records: Option<PathBuf>,
    out: &mut W,
) -> Result<i32> {
    let (cells, est) = monte_carlo(cfg, beta, seeds, snr_grid)?;
    match path {
        Some(p) => write_cells_csv(BufWriter::new(File::create(p)?), &cells)?,
        None => write_cells_csv(&mut *out, &cells)?,
    }
    if let Some(p) = records {
        let mut w = BufWriter::new(File::create(p)?);
        for c in &cells {
            serde_json::to_writer(&mut w, c)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    eprintln!(
        "fitted slope {:.4} over {:?} dB (target d_total = {}), {} seed(s) used",
        est.slope, est.fit_snr_db, est.d_total, est.seeds_used
    );
    for (seed, err) in &est.failed_seeds {
        eprintln!("seed {seed} failed: {err}");
    }
    if est.low_confidence {
        eprintln!("warning: low-confidence fit (needs at least 3 points spanning 20 dB and 10 seeds)");
    }
    Ok(EXIT_OK)
}
