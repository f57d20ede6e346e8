//! Command-line front end. [`run`] parses arguments, executes one subcommand and
//! returns the process exit code: 0 on success, 1 when a checked property fails,
//! 2 on bad input or an infeasible request.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::fourier::{oversampled_len, Potential, PotentialJson};
use crate::ks_inverse::{
    hk_injectivity_scan, hk_roundtrip, ks_invert, validate_density_with, DensityTolerances,
    ScanConfig, INTEGRAL_TOL, POSITIVITY_FLOOR, ROUNDTRIP_TOL,
};
use crate::lab::{run_experiment, LabParameters, EXPERIMENTS};
use crate::many_body::{ground_state_density, slater_density, Density, DensityJson};
use crate::spectral::solve;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "torus-dft", version, about = "Non-interacting DFT on the circle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and eigenfunctions of h(v) at cutoff K.
    Solve(SolveArgs),
    /// Ground-state (or chosen determinant) density of N particles.
    Density(DensityArgs),
    /// Single-particle Kohn-Sham inversion of a density.
    Invert(InvertArgs),
    /// Solve, invert the ground-state density and compare with the input.
    Roundtrip(RoundtripArgs),
    /// Random pairs of potentials must give distinct densities.
    HkScan(ScanArgs),
    /// Named numerical experiment.
    Lab(LabArgs),
    /// Check that a density is admissible for N particles.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long = "K")]
    pub cutoff: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long = "K")]
    pub cutoff: usize,
    #[arg(long = "N", default_value_t = 1)]
    pub particles: usize,
    /// Zero-based orbitals to occupy instead of the ground state.
    #[arg(long, value_delimiter = ',')]
    pub occupied: Option<Vec<usize>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Density as coefficient JSON or as `x,rho` CSV.
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long = "N", default_value_t = 1)]
    pub particles: usize,
    /// Cutoff of the recovered potential (default: twice the density band, at least 16).
    #[arg(long = "K")]
    pub cutoff: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long = "K")]
    pub cutoff: usize,
    #[arg(long, default_value_t = ROUNDTRIP_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long = "K", default_value_t = 64)]
    pub cutoff: usize,
    #[arg(long = "N", default_value_t = 2)]
    pub particles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of potential pairs.
    #[arg(long = "ensemble-size", default_value_t = 50)]
    pub ensemble_size: usize,
    /// Density distances at or below this count as a falsification.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Smallest constant-adjusted distance between the potentials of a pair.
    #[arg(long = "min-distance", default_value_t = 0.1)]
    pub min_distance: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct LabArgs {
    /// One of: positivity, gap, courant, excited-delta, delta-oracle, gns, dual-reconstruction.
    pub experiment: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "K", default_value_t = 64)]
    pub cutoff: usize,
    /// Grid size for sampled checks (default 4(2K+1) rounded up to a power of two).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "ensemble-size", default_value_t = 20)]
    pub ensemble_size: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long = "N")]
    pub particles: usize,
    /// Allowed deviation of the integral from N.
    #[arg(long, default_value_t = INTEGRAL_TOL)]
    pub tol: f64,
    /// Grid minima at or below this are treated as zeros.
    #[arg(long, default_value_t = POSITIVITY_FLOOR)]
    pub floor: f64,
    #[command(flatten)]
    pub output: Output,
}

/// A finished command: the artifact to write and whether its checks passed.
struct Outcome {
    body: String,
    passed: bool,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(command: &Command) -> Result<i32> {
    let (outcome, output) = match command {
        Command::Solve(a) => (solve_cmd(a)?, &a.output),
        Command::Density(a) => (density_cmd(a)?, &a.output),
        Command::Invert(a) => (invert_cmd(a)?, &a.output),
        Command::Roundtrip(a) => (roundtrip_cmd(a)?, &a.output),
        Command::HkScan(a) => (scan_cmd(a)?, &a.output),
        Command::Lab(a) => (lab_cmd(a)?, &a.output),
        Command::Validate(a) => (validate_cmd(a)?, &a.output),
    };
    write_output(output.out.as_deref(), &outcome.body)?;
    Ok(if outcome.passed { 0 } else { 1 })
}

/// Writes to a temporary file next to `path` and renames it into place, so a
/// failed run never leaves a partial file.
fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = path
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut tmp = NamedTempFile::new_in(dir)?;
            tmp.write_all(body.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_potential(path: &Path) -> Result<Potential> {
    let json: PotentialJson = parse_json(path)?;
    let v = Potential::from_json(&json)?;
    if !v.is_real() {
        return Err(Error::NotReal {
            defect: v.realness_defect(),
        });
    }
    Ok(v)
}

/// Coefficient JSON, or `x,rho` CSV when the file does not start with `{`.
fn read_density(path: &Path, particles: usize) -> Result<Density> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let json: DensityJson = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if json.particles != particles {
            return Err(Error::InvalidArgument(format!(
                "{} declares N = {} but N = {particles} was requested",
                path.display(),
                json.particles
            )));
        }
        Density::from_json(&json)
    } else {
        Density::from_csv(&text, particles)
    }
}

fn check_cutoff(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    Ok(())
}

fn report(command: &str, payload: impl Serialize) -> Result<String> {
    let mut value = serde_json::to_value(payload)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::InvalidArgument("report payload must be an object".into()))?;
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("command".into(), json!(command));
    out.append(obj);
    let mut text = serde_json::to_string_pretty(&Value::Object(out))?;
    text.push('\n');
    Ok(text)
}

fn csv_with_header(provenance: &str, body: &str) -> String {
    format!("# torus-dft {provenance}\n# schema_version {SCHEMA_VERSION}\n{body}")
}

fn json_only(format: Format, command: &str) -> Result<()> {
    if format == Format::Csv {
        return Err(Error::InvalidArgument(format!("{command} has no CSV output")));
    }
    Ok(())
}

fn solve_cmd(a: &SolveArgs) -> Result<Outcome> {
    check_cutoff(a.cutoff)?;
    let v = read_potential(&a.potential)?;
    let sol = solve(&v, a.cutoff)?;
    let body = match a.output.format {
        Format::Csv => csv_with_header(&format!("solve K={}", a.cutoff), &sol.to_csv()),
        Format::Json => report(
            "solve",
            json!({
                "K": sol.cutoff(),
                "eigenvalues": sol.eigenvalues(),
                "eigenfunctions": sol.eigenfunctions().iter().map(|f| f.to_json()).collect::<Vec<_>>(),
                "residuals": sol.residuals(),
                "degeneracy_groups": sol.group_ids(),
            }),
        )?,
    };
    Ok(Outcome { body, passed: true })
}

fn density_cmd(a: &DensityArgs) -> Result<Outcome> {
    check_cutoff(a.cutoff)?;
    let v = read_potential(&a.potential)?;
    let sol = solve(&v, a.cutoff)?;
    let rho = match &a.occupied {
        Some(occ) => {
            if occ.len() != a.particles {
                return Err(Error::InvalidArgument(format!(
                    "{} orbitals listed for N = {}",
                    occ.len(),
                    a.particles
                )));
            }
            slater_density(&sol, occ)?
        }
        None => ground_state_density(&sol, a.particles)?,
    };
    let body = match a.output.format {
        Format::Csv => csv_with_header(
            &format!("density K={} N={}", a.cutoff, a.particles),
            &rho.to_csv(),
        ),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&rho.to_json())?;
            text.push('\n');
            text
        }
    };
    Ok(Outcome { body, passed: true })
}

fn invert_cmd(a: &InvertArgs) -> Result<Outcome> {
    json_only(a.output.format, "invert")?;
    let rho = read_density(&a.density, a.particles)?;
    let cutoff = a.cutoff.unwrap_or((2 * rho.cutoff()).max(16));
    let inv = ks_invert(&rho, cutoff)?;
    let body = report(
        "invert",
        json!({
            "K": cutoff,
            "potential": inv.potential.to_json(),
            "groundstate": inv.groundstate.to_json(),
            "weak_residual": inv.weak_residual,
        }),
    )?;
    Ok(Outcome { body, passed: true })
}

fn roundtrip_cmd(a: &RoundtripArgs) -> Result<Outcome> {
    json_only(a.output.format, "roundtrip")?;
    check_cutoff(a.cutoff)?;
    let v = read_potential(&a.potential)?;
    let r = hk_roundtrip(&v, a.cutoff, a.tol)?;
    Ok(Outcome {
        passed: r.success,
        body: report("roundtrip", &r)?,
    })
}

fn scan_cmd(a: &ScanArgs) -> Result<Outcome> {
    json_only(a.output.format, "hk-scan")?;
    check_cutoff(a.cutoff)?;
    let mut config = ScanConfig::new(a.ensemble_size, a.cutoff, a.particles, a.seed);
    config.density_tol = a.tol;
    config.min_potential_distance = a.min_distance;
    let r = hk_injectivity_scan(&config)?;
    Ok(Outcome {
        passed: !r.falsified && r.gauge_ok,
        body: report("hk-scan", &r)?,
    })
}

fn lab_cmd(a: &LabArgs) -> Result<Outcome> {
    check_cutoff(a.cutoff)?;
    if !EXPERIMENTS.contains(&a.experiment.as_str()) {
        return Err(Error::InvalidArgument(format!(
            "unknown experiment {:?}; expected one of {}",
            a.experiment,
            EXPERIMENTS.join(", ")
        )));
    }
    let params = LabParameters {
        seed: a.seed,
        cutoff: a.cutoff,
        grid: a.n.unwrap_or_else(|| oversampled_len(a.cutoff)),
        ensemble_size: a.ensemble_size,
    };
    let r = run_experiment(&a.experiment, &params)?;
    let body = match a.output.format {
        Format::Json => report("lab", &r)?,
        Format::Csv => {
            let csv = r.csv.as_deref().ok_or_else(|| {
                Error::InvalidArgument(format!("experiment {} has no per-sample CSV", a.experiment))
            })?;
            csv_with_header(
                &format!(
                    "lab {} seed={} K={} n={} size={}",
                    a.experiment, a.seed, a.cutoff, params.grid, a.ensemble_size
                ),
                csv,
            )
        }
    };
    Ok(Outcome {
        passed: r.passed(),
        body,
    })
}

fn validate_cmd(a: &ValidateArgs) -> Result<Outcome> {
    json_only(a.output.format, "validate")?;
    let rho = read_density(&a.density, a.particles)?;
    let tol = DensityTolerances {
        integral: a.tol,
        positivity_floor: a.floor,
    };
    let r = validate_density_with(&rho, a.particles, tol);
    Ok(Outcome {
        passed: r.member_of_dn,
        body: report("validate", json!({ "tolerances": tol, "report": r }))?,
    })
}
