//! CLI surface and configuration.
//!
//! Every subcommand accepts `--config <path>` pointing at a strict JSON
//! file (unknown keys rejected); explicit command-line flags override the
//! file. Resolution therefore goes flag > file > default, and the resolved
//! values are echoed into the run manifest.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys;
use crate::mesh::generate::MeshFamily;
use crate::poisson::{SolveMethod, SolverOptions};

#[derive(Debug, Parser)]
#[command(
    name = "fcfv",
    version,
    about = "Face-centred finite volume solver for Poisson and Stokes problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a structured mesh of the requested family to a JSON file.
    GenerateMesh(GenerateMeshArgs),
    /// Solve one Poisson case on a generated or loaded mesh.
    SolvePoisson(SolveArgs),
    /// Solve one Stokes case on a generated or loaded mesh.
    SolveStokes(SolveArgs),
    /// Run a mesh-convergence study and write the CSV report.
    Converge(ConvergeArgs),
    /// Sweep the stabilisation parameter on a fixed mesh level.
    TauSweep(TauSweepArgs),
    /// Adaptive Poisson solve driven by the local error indicator.
    Adapt(AdaptArgs),
    /// Evaluate the parametric swimmer surface into mesh/VTK files.
    SwimmerSurface(SwimmerArgs),
    /// Reproduce the nodal-basis singular local matrix demonstration.
    LegacyDemo(LegacyDemoArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Strict JSON config file; flags given here override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateMeshArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Cell family: TRI | QUA | TET | HEX | PRI | PYR | HYBRID.
    #[arg(long)]
    pub cell_type: Option<String>,
    /// Spatial dimension, 2 or 3.
    #[arg(long)]
    pub nsd: Option<usize>,
    /// Subdivisions per axis.
    #[arg(long)]
    pub level: Option<usize>,
    /// Random vertex distortion seed (omit for a regular mesh).
    #[arg(long)]
    pub distort_seed: Option<u64>,
    /// Stretching factor towards the last axis (omit for uniform).
    #[arg(long)]
    pub stretch: Option<f64>,
    /// Tag boundary faces on this plane of the last axis as Neumann.
    #[arg(long)]
    pub neumann: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Manufactured case name; `fcfv converge --list-cases` prints them.
    #[arg(long)]
    pub case: Option<String>,
    /// Mesh JSON path; mutually exclusive with --cell-type/--level.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub cell_type: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    /// Stabilisation parameter.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Linear solver: direct | cg.
    #[arg(long)]
    pub solver: Option<String>,
    /// Dump the assembled matrix in MatrixMarket form.
    #[arg(long)]
    pub dump_matrix: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// poisson | stokes.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub cell_type: Option<String>,
    /// Mesh levels, comma separated (subdivisions per axis).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub distort_seed: Option<u64>,
    #[arg(long)]
    pub stretch: Option<f64>,
    /// Print the registered case names and exit.
    #[arg(long)]
    pub list_cases: bool,
}

#[derive(Debug, Args)]
pub struct TauSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub cell_type: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    /// Stabilisation values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub cell_type: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Per-cell indicator tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SwimmerArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Flagella pitch angle in radians.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n_lambda: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LegacyDemoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub tau: Option<f64>,
}

/// File-backed settings; every field optional so flags can fill gaps.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub case: Option<String>,
    pub cell_type: Option<String>,
    pub nsd: Option<usize>,
    pub level: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub tau: Option<f64>,
    pub taus: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub distort_seed: Option<u64>,
    pub stretch: Option<f64>,
    pub solver: Option<String>,
    pub gamma: Option<f64>,
    pub n_lambda: Option<usize>,
    pub n_theta: Option<usize>,
    pub mesh: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub neumann: Option<bool>,
}

pub fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config {}: {e}", p.display())))
        }
    }
}

pub fn parse_family(name: &str) -> Result<MeshFamily> {
    MeshFamily::parse(name)
}

pub fn parse_solver(name: &str, dump: Option<std::path::PathBuf>) -> Result<SolverOptions> {
    let method = match name.to_ascii_lowercase().as_str() {
        "direct" => SolveMethod::Direct,
        "cg" => SolveMethod::Cg,
        other => {
            return Err(Error::Config(format!(
                "unknown solver '{other}' (expected direct or cg)"
            )))
        }
    };
    Ok(SolverOptions {
        method,
        cg_tol: linsys::DEFAULT_CG_TOL,
        dump_matrix: dump,
    })
}

/// flag > file > default resolution for a single field.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// flag > file resolution for a required field.
pub fn require<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| Error::Config(format!("missing required setting '{what}'")))
}
