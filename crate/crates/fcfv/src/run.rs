//! Subcommand dispatch: resolves flags against the optional config file,
//! runs the requested study, and writes artifacts plus a manifest that
//! echoes the resolved configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::adapt::{adapt_poisson, indicate, vertex_size_field};
use crate::config::{
    self, AdaptArgs, Cli, Command, ConvergeArgs, GenerateMeshArgs, LegacyDemoArgs, SolveArgs,
    SwimmerArgs, TauSweepArgs,
};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::io::{self, RunManifest, VtkCellData};
use crate::mesh::generate::{generate_structured_mesh, MeshFamily};
use crate::mesh::geometry::compute_geometry;
use crate::mesh::swimmer::{surface_grid, SwimmerParams};
use crate::mesh::{distort, stretch, BoundaryRule, CellType, Mesh};
use crate::poisson::{solve_poisson, SolverOptions};
use crate::stokes::{incompressibility_defect, solve_stokes};
use crate::verify::cases::{
    poisson_gaussian_bump, poisson_smooth_2d, poisson_smooth_3d, stokes_trig_3d, stokes_vortex_2d,
    PoissonCase, StokesCase,
};
use crate::verify::{
    self, default_levels, default_tau, poisson_errors, stokes_errors, ConvergenceRow, MeshVariant,
    StudyConfig,
};

pub const POISSON_CASES: &[&str] = &[
    "poisson-smooth-2d",
    "poisson-smooth-3d",
    "poisson-gaussian-bump",
];
pub const STOKES_CASES: &[&str] = &["stokes-vortex-2d", "stokes-trig-3d"];

pub fn poisson_case(name: &str) -> Result<PoissonCase> {
    match name {
        "poisson-smooth-2d" => Ok(poisson_smooth_2d()),
        "poisson-smooth-3d" => Ok(poisson_smooth_3d()),
        "poisson-gaussian-bump" => Ok(poisson_gaussian_bump()),
        other => Err(Error::Config(format!(
            "unknown Poisson case '{other}' (known: {})",
            POISSON_CASES.join(", ")
        ))),
    }
}

pub fn stokes_case(name: &str) -> Result<StokesCase> {
    match name {
        "stokes-vortex-2d" => Ok(stokes_vortex_2d()),
        "stokes-trig-3d" => Ok(stokes_trig_3d()),
        other => Err(Error::Config(format!(
            "unknown Stokes case '{other}' (known: {})",
            STOKES_CASES.join(", ")
        ))),
    }
}

fn ensure_out(out: &Option<PathBuf>, file_out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out
        .clone()
        .or_else(|| file_out.clone())
        .unwrap_or_else(|| PathBuf::from("fcfv-out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

struct ManifestSink {
    dir: PathBuf,
    command: String,
    config: serde_json::Value,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestSink {
    fn new(dir: PathBuf, command: &str, config: serde_json::Value) -> ManifestSink {
        ManifestSink {
            dir,
            command: command.to_string(),
            config,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.config,
            outputs: self.outputs,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        };
        io::write_manifest(&self.dir.join("manifest.json"), &manifest)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateMesh(args) => generate_mesh(args),
        Command::SolvePoisson(args) => solve_poisson_cmd(args),
        Command::SolveStokes(args) => solve_stokes_cmd(args),
        Command::Converge(args) => converge(args),
        Command::TauSweep(args) => tau_sweep(args),
        Command::Adapt(args) => adapt(args),
        Command::SwimmerSurface(args) => swimmer_surface(args),
        Command::LegacyDemo(args) => legacy_demo_cmd(args),
    }
}

fn generate_mesh(args: GenerateMeshArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let family = config::parse_family(&config::require(
        args.cell_type.clone(),
        file.cell_type.clone(),
        "cell_type",
    )?)?;
    let nsd = config::resolve(args.nsd, file.nsd, 2);
    let level = config::require(args.level, file.level, "level")?;
    let distort_seed = args.distort_seed.or(file.distort_seed);
    let stretch_target = args.stretch.or(file.stretch);
    let neumann = args.neumann || file.neumann.unwrap_or(false);

    let mut mesh = generate_structured_mesh(family, nsd, level)?;
    if let Some(target) = stretch_target {
        mesh = stretch::stretch_mesh(&mesh, target)?.0;
    }
    if let Some(seed) = distort_seed {
        mesh = distort::distort_family(family, &mesh, seed)?;
    }
    let rule = if neumann {
        BoundaryRule::NeumannOnPlane {
            axis: nsd - 1,
            value: 0.0,
        }
    } else {
        BoundaryRule::AllDirichlet
    };
    mesh.apply_boundary_rule(rule)?;

    let dir = ensure_out(&args.common.out, &file.out)?;
    let echo = json!({
        "cell_type": family.name(),
        "nsd": nsd,
        "level": level,
        "distort_seed": distort_seed,
        "stretch": stretch_target,
        "neumann": neumann,
        "n_cells": mesh.n_cells(),
        "n_vertices": mesh.vertices.len(),
    });
    let mut sink = ManifestSink::new(dir, "generate-mesh", echo);
    io::write_mesh(&sink.path("mesh.json"), &mesh)?;
    sink.finish()
}

/// Loads the mesh file when given, otherwise generates the requested
/// family tagged with the case's boundary rule.
fn solve_mesh(
    mesh_path: &Option<PathBuf>,
    family: Option<String>,
    level: Option<usize>,
    nsd: usize,
    rule: BoundaryRule,
) -> Result<(Mesh, usize)> {
    if let Some(path) = mesh_path {
        let mesh = io::read_mesh(path)?;
        if mesh.nsd != nsd {
            return Err(Error::Config(format!(
                "mesh is {}d but the case needs {}d",
                mesh.nsd, nsd
            )));
        }
        return Ok((mesh, 0));
    }
    let family = config::parse_family(&family.unwrap_or_else(|| "TRI".into()))?;
    let level = level.unwrap_or(4);
    let mut mesh = generate_structured_mesh(family, nsd, level)?;
    mesh.apply_boundary_rule(rule)?;
    Ok((mesh, level))
}

fn solve_poisson_cmd(args: SolveArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let case_name = config::resolve(
        args.case.clone(),
        file.case.clone(),
        "poisson-smooth-2d".into(),
    );
    let case = poisson_case(&case_name)?;
    let tau = config::resolve(args.tau, file.tau, default_tau(case.nsd));
    let dir = ensure_out(&args.common.out, &file.out)?;
    let dump = if args.dump_matrix {
        Some(dir.join("matrix.mtx"))
    } else {
        None
    };
    let solver = config::parse_solver(
        &config::resolve(args.solver.clone(), file.solver.clone(), "direct".into()),
        dump,
    )?;
    let (mesh, level) = solve_mesh(
        &args.mesh.clone().or(file.mesh.clone()),
        args.cell_type.clone().or(file.cell_type.clone()),
        args.level.or(file.level),
        case.nsd,
        case.boundary_rule(),
    )?;

    let geometry = compute_geometry(&mesh)?;
    let problem = case.problem(tau, 4);
    let solution = solve_poisson(&mesh, &geometry, &problem, &solver)?;
    let errors = poisson_errors(&mesh, &geometry, &case, &solution, 4);

    let echo = json!({
        "case": case_name,
        "tau": tau,
        "n_cells": mesh.n_cells(),
        "n_trace_dof": solution.n_dof,
        "rel_err_u": errors.rel_u(),
        "rel_err_q": errors.rel_q(),
        "symmetry_defect_rel": solution.symmetry_defect_rel,
        "solver": solution.report.as_ref().map(|r| r.method),
    });
    let mut sink = ManifestSink::new(dir, "solve-poisson", echo);

    let u_cell: Vec<f64> = solution.coeffs.iter().map(|c| c[0]).collect();
    let indicator =
        crate::adapt::error_indicator(&mesh, &geometry, &solution.coeffs, &solution.u_star);
    io::write_vtk(
        &sink.path("solution.vtk"),
        &mesh,
        &VtkCellData {
            scalars: vec![
                ("u", &u_cell),
                ("u_star", &solution.u_star),
                ("indicator", &indicator),
            ],
            vectors: vec![("q", &solution.q)],
        },
    )?;
    let row = ConvergenceRow {
        level,
        h: geometry.h,
        n_cells: mesh.n_cells(),
        n_trace_dof: solution.n_dof,
        err_u: errors.rel_u(),
        err_flux: errors.rel_q(),
        err_p: None,
        t_assemble: solution.t_assemble,
        t_solve: solution.t_solve,
        order_u: None,
        order_flux: None,
        order_p: None,
        symmetry_defect_rel: solution.symmetry_defect_rel,
        incompressibility: None,
        report: solution.report.clone(),
    };
    io::write_convergence_csv(&sink.path("errors.csv"), &[row])?;
    sink.finish()
}

fn solve_stokes_cmd(args: SolveArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let case_name = config::resolve(
        args.case.clone(),
        file.case.clone(),
        "stokes-vortex-2d".into(),
    );
    let case = stokes_case(&case_name)?;
    let tau = config::resolve(args.tau, file.tau, default_tau(case.nsd));
    let solver_name = config::resolve(args.solver.clone(), file.solver.clone(), "direct".into());
    let dir = ensure_out(&args.common.out, &file.out)?;
    let dump = if args.dump_matrix {
        Some(dir.join("matrix.mtx"))
    } else {
        None
    };
    let solver = config::parse_solver(&solver_name, dump)?;
    let (mesh, level) = solve_mesh(
        &args.mesh.clone().or(file.mesh.clone()),
        args.cell_type.clone().or(file.cell_type.clone()),
        args.level.or(file.level),
        case.nsd,
        case.boundary_rule(),
    )?;

    let geometry = compute_geometry(&mesh)?;
    let problem = case.problem(tau, 4);
    let solution = solve_stokes(&mesh, &geometry, &problem, &solver)?;
    let errors = stokes_errors(&mesh, &geometry, &case, &solution, 4);
    let incompressibility = incompressibility_defect(&mesh, &geometry, &solution);

    let echo = json!({
        "case": case_name,
        "tau": tau,
        "viscosity": problem.viscosity,
        "n_cells": mesh.n_cells(),
        "n_dof": solution.n_dof,
        "rel_err_u": errors.rel_u(),
        "rel_err_p": errors.rel_p(),
        "rel_err_l": errors.rel_l(),
        "incompressibility": incompressibility,
        "symmetry_defect_rel": solution.symmetry_defect_rel,
    });
    let mut sink = ManifestSink::new(dir, "solve-stokes", echo);

    let velocity: Vec<Point> = solution
        .coeffs
        .iter()
        .map(|c| [c[0][0], c[1][0], c[2][0]])
        .collect();
    io::write_vtk(
        &sink.path("solution.vtk"),
        &mesh,
        &VtkCellData {
            scalars: vec![("pressure", &solution.pressure)],
            vectors: vec![("velocity", &velocity), ("u_star", &solution.u_star)],
        },
    )?;
    let row = ConvergenceRow {
        level,
        h: geometry.h,
        n_cells: mesh.n_cells(),
        n_trace_dof: solution.n_dof,
        err_u: errors.rel_u(),
        err_flux: errors.rel_l(),
        err_p: Some(errors.rel_p()),
        t_assemble: solution.t_assemble,
        t_solve: solution.t_solve,
        order_u: None,
        order_flux: None,
        order_p: None,
        symmetry_defect_rel: solution.symmetry_defect_rel,
        incompressibility: Some(incompressibility),
        report: Some(solution.report.clone()),
    };
    io::write_convergence_csv(&sink.path("errors.csv"), &[row])?;
    sink.finish()
}

fn converge(args: ConvergeArgs) -> Result<()> {
    if args.list_cases {
        for name in POISSON_CASES.iter().chain(STOKES_CASES) {
            println!("{name}");
        }
        return Ok(());
    }
    let file = config::load_file_config(args.common.config.as_ref())?;
    let problem = config::resolve(args.problem.clone(), file.problem.clone(), "poisson".into());
    let variant = MeshVariant {
        distort_seed: args.distort_seed.or(file.distort_seed),
        stretch: args.stretch.or(file.stretch),
    };
    let family = config::parse_family(&config::resolve(
        args.cell_type.clone(),
        file.cell_type.clone(),
        "TRI".into(),
    ))?;
    let dir = ensure_out(&args.common.out, &file.out)?;

    let (rows, case_name, nsd) = match problem.as_str() {
        "poisson" => {
            let case_name = config::resolve(
                args.case.clone(),
                file.case.clone(),
                "poisson-smooth-2d".into(),
            );
            let case = poisson_case(&case_name)?;
            let mut cfg = StudyConfig::with_defaults(case.nsd);
            cfg.variant = variant;
            cfg.tau = config::resolve(args.tau, file.tau, cfg.tau);
            let levels = config::resolve(
                args.levels.clone(),
                file.levels.clone(),
                default_levels(case.nsd),
            );
            (
                verify::poisson_convergence(&case, family, &levels, &cfg)?,
                case_name,
                case.nsd,
            )
        }
        "stokes" => {
            let case_name = config::resolve(
                args.case.clone(),
                file.case.clone(),
                "stokes-vortex-2d".into(),
            );
            let case = stokes_case(&case_name)?;
            let mut cfg = StudyConfig::with_defaults(case.nsd);
            cfg.variant = variant;
            cfg.tau = config::resolve(args.tau, file.tau, cfg.tau);
            let levels = config::resolve(
                args.levels.clone(),
                file.levels.clone(),
                default_levels(case.nsd),
            );
            (
                verify::stokes_convergence(&case, family, &levels, &cfg)?,
                case_name,
                case.nsd,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown problem '{other}' (expected poisson or stokes)"
            )))
        }
    };

    let echo = json!({
        "problem": problem,
        "case": case_name,
        "cell_type": family.name(),
        "nsd": nsd,
        "levels": rows.iter().map(|r| r.level).collect::<Vec<_>>(),
        "distort_seed": variant.distort_seed,
        "stretch": variant.stretch,
        "final_err_u": rows.last().map(|r| r.err_u),
        "final_order_u": rows.last().and_then(|r| r.order_u),
    });
    let mut sink = ManifestSink::new(dir, "converge", echo);
    io::write_convergence_csv(&sink.path("convergence.csv"), &rows)?;
    sink.finish()
}

fn tau_sweep(args: TauSweepArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let problem = config::resolve(args.problem.clone(), file.problem.clone(), "stokes".into());
    let family = config::parse_family(&config::resolve(
        args.cell_type.clone(),
        file.cell_type.clone(),
        "TRI".into(),
    ))?;
    let taus = config::resolve(
        args.taus.clone(),
        file.taus.clone(),
        verify::tau_sweep_values(),
    );
    if taus.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Config("tau values must be positive".into()));
    }
    let dir = ensure_out(&args.common.out, &file.out)?;

    let (rows, case_name) = match problem.as_str() {
        "poisson" => {
            let case_name = config::resolve(
                args.case.clone(),
                file.case.clone(),
                "poisson-smooth-2d".into(),
            );
            let case = poisson_case(&case_name)?;
            let cfg = StudyConfig::with_defaults(case.nsd);
            let level = config::resolve(args.level, file.level, 2);
            (
                verify::poisson_tau_sweep(&case, family, level, &taus, &cfg)?,
                case_name,
            )
        }
        "stokes" => {
            let case_name = config::resolve(
                args.case.clone(),
                file.case.clone(),
                "stokes-vortex-2d".into(),
            );
            let case = stokes_case(&case_name)?;
            let cfg = StudyConfig::with_defaults(case.nsd);
            let level = config::resolve(args.level, file.level, 2);
            (
                verify::stokes_tau_sweep(&case, family, level, &taus, &cfg)?,
                case_name,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown problem '{other}' (expected poisson or stokes)"
            )))
        }
    };

    let echo = json!({
        "problem": problem,
        "case": case_name,
        "cell_type": family.name(),
        "taus": taus,
    });
    let mut sink = ManifestSink::new(dir, "tau-sweep", echo);
    io::write_tau_sweep_csv(&sink.path("tau_sweep.csv"), &rows)?;
    sink.finish()
}

fn adapt(args: AdaptArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let case_name = config::resolve(
        args.case.clone(),
        file.case.clone(),
        "poisson-gaussian-bump".into(),
    );
    let case = poisson_case(&case_name)?;
    let family = config::parse_family(&config::resolve(
        args.cell_type.clone(),
        file.cell_type.clone(),
        "TRI".into(),
    ))?;
    let level = config::resolve(args.level, file.level, 8);
    let tau = config::resolve(args.tau, file.tau, default_tau(case.nsd));
    let eps = config::resolve(args.eps, file.eps, 1e-2);
    let max_iter = config::resolve(args.max_iter, file.max_iter, 10);
    let dir = ensure_out(&args.common.out, &file.out)?;

    if case.nsd != 2 {
        return Err(Error::Config(
            "adaptation is limited to the 2d cases".into(),
        ));
    }
    let mut mesh = generate_structured_mesh(family, 2, level)?;
    mesh.apply_boundary_rule(case.boundary_rule())?;
    let problem = case.problem(tau, 4);
    let exact = case.exact.clone();
    let options = SolverOptions::default();

    let echo = json!({
        "case": case_name,
        "cell_type": family.name(),
        "level": level,
        "tau": tau,
        "eps": eps,
        "max_iter": max_iter,
    });

    if family == MeshFamily::Tri {
        let outcome = adapt_poisson(&mesh, &problem, &exact, eps, max_iter, &options)?;
        let geometry = compute_geometry(&outcome.mesh)?;
        let sizes = vertex_size_field(&outcome.mesh, &geometry, &outcome.target_h);
        let mut echo = echo;
        echo["converged"] = json!(outcome.converged);
        echo["final_cells"] = json!(outcome.mesh.n_cells());
        echo["iterations"] = json!(outcome.history.len());
        let mut sink = ManifestSink::new(dir, "adapt", echo);
        io::write_adapt_csv(&sink.path("adapt_history.csv"), &outcome.history)?;
        io::write_mesh(&sink.path("final_mesh.json"), &outcome.mesh)?;
        io::write_size_field(
            &sink.path("size_field.json"),
            &outcome.mesh,
            outcome.history.len().saturating_sub(1),
            &sizes,
        )?;
        let u_cell: Vec<f64> = outcome.solution.coeffs.iter().map(|c| c[0]).collect();
        io::write_vtk(
            &sink.path("final_solution.vtk"),
            &outcome.mesh,
            &VtkCellData {
                scalars: vec![
                    ("u", &u_cell),
                    ("u_star", &outcome.solution.u_star),
                    ("indicator", &outcome.indicator),
                ],
                vectors: vec![("q", &outcome.solution.q)],
            },
        )?;
        sink.finish()
    } else {
        // No native remesher for this family: run one indicator pass and
        // export the size field for an external tool.
        let (geometry, solution, indicator, target_h, row) =
            indicate(&mesh, &problem, &exact, eps, &options)?;
        let sizes = vertex_size_field(&mesh, &geometry, &target_h);
        let mut echo = echo;
        echo["converged"] = json!(row.max_indicator <= eps);
        echo["max_indicator"] = json!(row.max_indicator);
        echo["resumable"] = json!(true);
        let mut sink = ManifestSink::new(dir, "adapt", echo);
        io::write_adapt_csv(&sink.path("adapt_history.csv"), &[row])?;
        io::write_mesh(&sink.path("mesh.json"), &mesh)?;
        io::write_size_field(&sink.path("size_field.json"), &mesh, 0, &sizes)?;
        let u_cell: Vec<f64> = solution.coeffs.iter().map(|c| c[0]).collect();
        io::write_vtk(
            &sink.path("solution.vtk"),
            &mesh,
            &VtkCellData {
                scalars: vec![
                    ("u", &u_cell),
                    ("u_star", &solution.u_star),
                    ("indicator", &indicator),
                ],
                vectors: vec![("q", &solution.q)],
            },
        )?;
        sink.finish()
    }
}

fn swimmer_surface(args: SwimmerArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let gamma = config::resolve(args.gamma, file.gamma, 0.0);
    let n_lambda = config::resolve(args.n_lambda, file.n_lambda, 200);
    let n_theta = config::resolve(args.n_theta, file.n_theta, 32);
    if n_lambda < 2 || n_theta < 3 {
        return Err(Error::Config(
            "swimmer surface needs n_lambda >= 2 and n_theta >= 3".into(),
        ));
    }
    let dir = ensure_out(&args.common.out, &file.out)?;
    let params = SwimmerParams::with_gamma(gamma);
    let surface = surface_grid(&params, n_lambda, n_theta);

    let echo = json!({
        "gamma": gamma,
        "n_lambda": n_lambda,
        "n_theta": n_theta,
        "n_points": surface.points.len(),
        "n_quads": surface.quads.len(),
        "n_tris": surface.tris.len(),
    });
    let mut sink = ManifestSink::new(dir, "swimmer-surface", echo);
    write_surface_vtk(&sink.path("swimmer.vtk"), &surface.points, &surface.quads, &surface.tris)?;
    sink.finish()
}

/// Swimmer surfaces are 2d shells in 3d space, outside the volume-mesh
/// schema, so they get their own small VTK writer.
fn write_surface_vtk(
    path: &Path,
    points: &[Point],
    quads: &[[usize; 4]],
    tris: &[[usize; 3]],
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nfcfv swimmer surface\nASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {} double\n", points.len()));
    for p in points {
        out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], p[2]));
    }
    let n_cells = quads.len() + tris.len();
    let size = 5 * quads.len() + 4 * tris.len();
    out.push_str(&format!("CELLS {n_cells} {size}\n"));
    for q in quads {
        out.push_str(&format!("4 {} {} {} {}\n", q[0], q[1], q[2], q[3]));
    }
    for t in tris {
        out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    out.push_str(&format!("CELL_TYPES {n_cells}\n"));
    for _ in quads {
        out.push_str(&format!("{}\n", CellType::Qua.vtk_id()));
    }
    for _ in tris {
        out.push_str(&format!("{}\n", CellType::Tri.vtk_id()));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn legacy_demo_cmd(args: LegacyDemoArgs) -> Result<()> {
    let file = config::load_file_config(args.common.config.as_ref())?;
    let tau = config::resolve(args.tau, file.tau, 1.0);
    let dir = ensure_out(&args.common.out, &file.out)?;
    let report = verify::legacy_demo(tau)?;
    println!(
        "nodal basis, unit right triangle: det = {:.6e} (closed form {:.6e})",
        report.tri_legacy_det, report.tri_det_formula
    );
    println!(
        "nodal basis, unit square: det = {:.3e}, alternating nullvector residual = {:.3e}",
        report.qua_legacy_det, report.qua_nullvector_residual
    );
    println!(
        "face-centred basis, unit square: det = {:.6e}",
        report.qua_modern_det
    );
    let echo = serde_json::to_value(report)?;
    let mut sink = ManifestSink::new(dir, "legacy-demo", echo.clone());
    std::fs::write(
        sink.path("legacy_demo.json"),
        serde_json::to_string_pretty(&echo)?,
    )?;
    sink.finish()
}
