//! Command-line front end: build prefractal boundaries, trace orbits and
//! escaping sequences, run the verification suites, and write JSON, CSV,
//! and SVG artifacts.
//!
//! Exit codes: 0 on success, 1 when a dynamical run or verification suite
//! fails, 2 on usage errors (unparsable exact inputs, unknown suite, bad
//! flags).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use tfractal_core::analysis::{
    base_sequence, build_nontrivial_path, AnalysisError, LimitResolution,
};
use tfractal_core::flow::{trace_orbit, Direction, Slope};
use tfractal_core::geometry::{t_prefractal, Point};
use tfractal_core::output::{
    boundary_json, boundary_svg, escape_distance_csv, orbit_json, orbit_svg, path_json, path_svg,
    sequence_json, suites_json, suites_text, termination_label,
};
use tfractal_core::scalar::QuadScalar;
use tfractal_core::suites::{run_all, run_suite, SuiteId};

/// Levels beyond this build boundaries with millions of segments; refuse
/// rather than thrash.
const MAX_LEVEL: u32 = 16;

#[derive(Parser)]
#[command(name = "tfractal", version, about = "Exact billiard dynamics on prefractal T-tables")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the level-n boundary and write its JSON and SVG artifacts.
    Geometry {
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Restrict which artifact kinds are written (default: all).
        #[arg(long)]
        format: Option<Format>,
    },
    /// Trace one orbit from the base and write its JSON and SVG artifacts.
    Orbit {
        #[arg(long)]
        level: u32,
        /// Exact base abscissa, "p/q" or "p/q+r/s*sqrt(2)".
        #[arg(long)]
        x0: String,
        /// Exact absolute slope, "p/q" or "p/q+r/s*sqrt(2)".
        #[arg(long)]
        slope: String,
        /// Direction signs, one of ++, +-, -+, --.
        #[arg(long, default_value = "++")]
        signs: String,
        /// Collision cap.
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Run one verification suite (or "all") and print its report.
    Verify {
        /// Suite name, or "all".
        suite: String,
        /// Seed for the randomized members of the suites.
        #[arg(long, default_value_t = 20_260_816)]
        seed: u64,
        /// Also write the machine-readable report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace an escaping sequence across levels 0..=N and write the path
    /// artifacts (JSON, SVG, escape-distance CSV).
    Path {
        /// Exact base abscissa in (0, 1).
        #[arg(long)]
        x0: String,
        /// Exact absolute slope.
        #[arg(long)]
        slope: String,
        /// Horizontal sign of the launch, + or -.
        #[arg(long, default_value = "+")]
        sign: String,
        /// Deepest level traced.
        #[arg(long, default_value_t = 6)]
        levels: u32,
        #[arg(long, default_value_t = 20_000)]
        cap: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        format: Option<Format>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

fn wants(format: Option<Format>, kind: Format) -> bool {
    format.is_none() || format == Some(kind)
}

/// Usage failures exit 2; everything else that bubbles up exits 1.
enum CliError {
    Usage(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Other(e)
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn parse_scalar(label: &str, s: &str) -> Result<QuadScalar, CliError> {
    QuadScalar::from_str(s)
        .map_err(|e| CliError::Usage(format!("--{label} {s:?} is not an exact scalar: {e}")))
}

fn parse_signs(s: &str) -> Result<(i8, i8), CliError> {
    let sign = |c: char| match c {
        '+' => Ok(1i8),
        '-' => Ok(-1i8),
        _ => usage(format!("--signs must be two of +/-, got {s:?}")),
    };
    let mut chars = s.chars();
    match (chars.next(), chars.next(), chars.next()) {
        (Some(a), Some(b), None) => Ok((sign(a)?, sign(b)?)),
        _ => usage(format!("--signs must be two of +/-, got {s:?}")),
    }
}

fn direction(sx: i8, sy: i8, slope: QuadScalar) -> Result<Direction, CliError> {
    Direction::new(sx, sy, Slope::Finite(slope))
        .map_err(|e| CliError::Usage(format!("bad direction: {e} (use --signs for the signs)")))
}

fn check_level(level: u32) -> Result<(), CliError> {
    if level > MAX_LEVEL {
        return usage(format!("--level {level} exceeds the maximum {MAX_LEVEL}"));
    }
    Ok(())
}

fn write_artifact(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(CliError::Other)?;
    let path = out.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Other)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_geometry(level: u32, out: &Path, format: Option<Format>) -> CmdResult {
    check_level(level)?;
    let table = t_prefractal(level);
    if wants(format, Format::Json) {
        write_artifact(out, &format!("{}.boundary.json", table.name()), &boundary_json(&table))?;
    }
    if wants(format, Format::Svg) {
        write_artifact(out, &format!("{}.boundary.svg", table.name()), &boundary_svg(&table))?;
    }
    println!(
        "{}: {} vertices, {} removed segments",
        table.name(),
        table.corners().len(),
        table.removed().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_orbit(
    level: u32,
    x0: &str,
    slope: &str,
    signs: &str,
    cap: usize,
    out: &Path,
    format: Option<Format>,
) -> CmdResult {
    check_level(level)?;
    let x0 = parse_scalar("x0", x0)?;
    let slope = parse_scalar("slope", slope)?;
    let (sx, sy) = parse_signs(signs)?;
    let dir = direction(sx, sy, slope)?;
    if dir.is_vertical() || dir.is_horizontal() {
        return usage("orbits from the base need a finite nonzero slope");
    }

    let table = t_prefractal(level);
    let start = Point::new(x0, QuadScalar::zero());
    if table.corners().iter().any(|c| c.point == start) {
        // A trajectory through a vertex is singular by definition; there
        // is nothing to trace.
        println!("verdict: singular (start ({}, {}) is a vertex)", start.x, start.y);
        return Ok(ExitCode::SUCCESS);
    }
    let orbit = match trace_orbit(&table, start, dir, cap) {
        Ok(orbit) => orbit,
        Err(e) => return usage(e.to_string()),
    };

    println!(
        "{} collisions, {} escapes, {} returns; {}",
        orbit.collisions(),
        orbit.escapes.len(),
        orbit.returns.len(),
        termination_label(&orbit.termination)
    );
    let verdict = if orbit.is_singular() {
        "singular"
    } else if orbit.is_periodic() {
        "periodic"
    } else {
        "undetermined within cap"
    };
    println!("verdict: {verdict}");

    if wants(format, Format::Json) {
        write_artifact(out, "orbit.json", &orbit_json(&orbit))?;
    }
    if wants(format, Format::Svg) {
        write_artifact(out, "orbit.svg", &orbit_svg(&table, &orbit))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suite: &str, seed: u64, out: Option<&Path>) -> CmdResult {
    let reports = if suite == "all" {
        run_all(seed)
    } else {
        match SuiteId::parse(suite) {
            Some(id) => vec![run_suite(id, seed)],
            None => {
                let names: Vec<&str> = SuiteId::ALL.iter().map(|id| id.name()).collect();
                return usage(format!(
                    "unknown suite {suite:?}; expected one of {} or all",
                    names.join(", ")
                ));
            }
        }
    };
    print!("{}", suites_text(&reports));
    if let Some(dir) = out {
        write_artifact(dir, "suites.json", &suites_json(&reports))?;
    }
    let all_pass = reports.iter().all(|r| r.passed());
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_path(
    x0: &str,
    slope: &str,
    sign: &str,
    levels: u32,
    cap: usize,
    out: &Path,
    format: Option<Format>,
) -> CmdResult {
    check_level(levels)?;
    let x0 = parse_scalar("x0", x0)?;
    let slope = parse_scalar("slope", slope)?;
    let sx = match sign {
        "+" => 1i8,
        "-" => -1i8,
        _ => return usage(format!("--sign must be + or -, got {sign:?}")),
    };
    let dir = direction(sx, 1, slope)?;

    let seq = match base_sequence(x0, dir, levels, cap) {
        Ok(seq) => seq,
        Err(e @ (AnalysisError::OutOfRange(_) | AnalysisError::VerticalDirection)) => {
            return usage(e.to_string());
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    if wants(format, Format::Json) {
        write_artifact(out, "sequence.json", &sequence_json(&seq))?;
    }

    let path = match build_nontrivial_path(&seq) {
        Ok(path) => path,
        Err(e) => {
            eprintln!("no nontrivial path: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    match &path.limit {
        LimitResolution::Exact { address, point } => {
            println!("limit ({}, {}) address {address}", point.x, point.y);
        }
        LimitResolution::Bracketed { lo, hi } => {
            println!("limit bracketed in [{lo}, {hi}] x {{3}}");
        }
    }

    if wants(format, Format::Json) {
        write_artifact(out, "path.json", &path_json(&path))?;
    }
    if wants(format, Format::Svg) {
        write_artifact(out, "path.svg", &path_svg(&t_prefractal(levels), &path))?;
    }
    if wants(format, Format::Csv) {
        match escape_distance_csv(&seq) {
            Ok(csv) => write_artifact(out, "escape-distances.csv", &csv)?,
            // The distance identity only applies to slopes 1/p from a
            // rational basepoint; other inputs simply have no table.
            Err(AnalysisError::NotApplicable(_)) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Geometry { level, out, format } => cmd_geometry(*level, out, *format),
        Cmd::Orbit {
            level,
            x0,
            slope,
            signs,
            cap,
            out,
            format,
        } => cmd_orbit(*level, x0, slope, signs, *cap, out, *format),
        Cmd::Verify { suite, seed, out } => cmd_verify(suite, *seed, out.as_deref()),
        Cmd::Path {
            x0,
            slope,
            sign,
            levels,
            cap,
            out,
            format,
        } => cmd_path(x0, slope, sign, *levels, *cap, out, *format),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
