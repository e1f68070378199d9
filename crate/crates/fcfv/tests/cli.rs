//! End-to-end tests of the binary: artifact layout, config resolution and
//! the documented exit codes (0 ok, 2 config, 3 solver, 4 mesh).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fcfv"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn fcfv");
    assert!(
        out.status.success(),
        "fcfv {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str], expected_code: i32) -> String {
    let out = bin().args(args).output().expect("spawn fcfv");
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "fcfv {args:?} should exit {expected_code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).expect("manifest.json");
    serde_json::from_str(&text).expect("manifest parses")
}

fn mesh_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("mesh.json")).expect("mesh.json");
    serde_json::from_str(&text).expect("mesh parses")
}

#[test]
fn generate_mesh_counts_per_family() {
    // (family, nsd, level, expected cell count)
    let expected = [
        ("TRI", 2, 4, 32),
        ("QUA", 2, 4, 16),
        ("TET", 3, 2, 48),
        ("HEX", 3, 2, 8),
        ("PRI", 3, 2, 16),
        ("PYR", 3, 2, 48),
    ];
    for (family, nsd, level, count) in expected {
        let dir = tmp_dir(&format!("gen-{family}-{nsd}d"));
        run_ok(&[
            "generate-mesh",
            "--cell-type",
            family,
            "--nsd",
            &nsd.to_string(),
            "--level",
            &level.to_string(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        let mesh = mesh_json(&dir);
        let cells = mesh["cells"].as_array().expect("cells array");
        assert_eq!(cells.len(), count, "{family} {nsd}d level {level}");
        let man = manifest(&dir);
        assert_eq!(man["command"], "generate-mesh");
        assert_eq!(man["config"]["n_cells"], count);
        assert!(man["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .any(|o| o == "mesh.json"));
    }
}

#[test]
fn generate_mesh_hybrid_mixes_cell_types() {
    for (nsd, level) in [(2usize, 4usize), (3, 2)] {
        let dir = tmp_dir(&format!("gen-hybrid-{nsd}d"));
        run_ok(&[
            "generate-mesh",
            "--cell-type",
            "HYBRID",
            "--nsd",
            &nsd.to_string(),
            "--level",
            &level.to_string(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        let mesh = mesh_json(&dir);
        let kinds: std::collections::BTreeSet<String> = mesh["cells"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["type"].as_str().unwrap().to_string())
            .collect();
        assert!(
            kinds.len() >= 2,
            "{nsd}d hybrid mesh uses a single cell type: {kinds:?}"
        );
    }
}

#[test]
fn solve_accepts_generated_mesh_file() {
    let gen = tmp_dir("roundtrip-mesh");
    run_ok(&[
        "generate-mesh",
        "--cell-type",
        "QUA",
        "--nsd",
        "2",
        "--level",
        "4",
        "--neumann",
        "--out",
        gen.to_str().unwrap(),
    ]);
    let solve = tmp_dir("roundtrip-solve");
    run_ok(&[
        "solve-poisson",
        "--case",
        "poisson-smooth-2d",
        "--mesh",
        gen.join("mesh.json").to_str().unwrap(),
        "--out",
        solve.to_str().unwrap(),
    ]);
    let man = manifest(&solve);
    let err_u = man["config"]["rel_err_u"].as_f64().unwrap();
    assert!(err_u > 0.0 && err_u < 1.0, "implausible rel_err_u {err_u}");
    assert!(solve.join("solution.vtk").exists());
    let csv = std::fs::read_to_string(solve.join("errors.csv")).unwrap();
    assert!(csv.starts_with("level,h,n_cells,n_trace_dof,err_u,err_flux,err_p,"));
}

#[test]
fn solve_rejects_mesh_with_wrong_dimension() {
    let gen = tmp_dir("mismatch-mesh");
    run_ok(&[
        "generate-mesh",
        "--cell-type",
        "TET",
        "--nsd",
        "3",
        "--level",
        "1",
        "--out",
        gen.to_str().unwrap(),
    ]);
    let stderr = run_err(
        &[
            "solve-poisson",
            "--case",
            "poisson-smooth-2d",
            "--mesh",
            gen.join("mesh.json").to_str().unwrap(),
            "--out",
            tmp_dir("mismatch-out").to_str().unwrap(),
        ],
        2,
    );
    assert!(stderr.contains("3d"), "unexpected stderr: {stderr}");
}

#[test]
fn exit_codes_match_error_classes() {
    // Unknown case: config error.
    run_err(
        &[
            "solve-poisson",
            "--case",
            "no-such-case",
            "--out",
            tmp_dir("exit2").to_str().unwrap(),
        ],
        2,
    );
    // Missing required setting: config error.
    run_err(
        &[
            "generate-mesh",
            "--cell-type",
            "TRI",
            "--out",
            tmp_dir("exit2b").to_str().unwrap(),
        ],
        2,
    );
    // Unavailable family/dimension pairing: config error.
    run_err(
        &[
            "generate-mesh",
            "--cell-type",
            "TET",
            "--nsd",
            "2",
            "--level",
            "2",
            "--out",
            tmp_dir("exit2c").to_str().unwrap(),
        ],
        2,
    );
    // Conjugate gradients are limited to the Poisson system.
    let stderr = run_err(
        &[
            "solve-stokes",
            "--cell-type",
            "TRI",
            "--level",
            "2",
            "--solver",
            "cg",
            "--out",
            tmp_dir("exit2d").to_str().unwrap(),
        ],
        2,
    );
    assert!(stderr.contains("direct"), "unexpected stderr: {stderr}");

    let dir = tmp_dir("exit-meshes");
    std::fs::create_dir_all(&dir).unwrap();

    // Unsupported mesh schema version: mesh error.
    let future = dir.join("future.json");
    std::fs::write(
        &future,
        r#"{ "version": 99, "nsd": 2,
             "vertices": [[0,0],[1,0],[1,1],[0,1]],
             "cells": [{"type": "QUA", "verts": [0,1,2,3]}],
             "boundary": [
               {"verts": [0,1], "tag": "DIRICHLET"},
               {"verts": [1,2], "tag": "DIRICHLET"},
               {"verts": [2,3], "tag": "DIRICHLET"},
               {"verts": [3,0], "tag": "DIRICHLET"}] }"#,
    )
    .unwrap();
    run_err(
        &[
            "solve-poisson",
            "--mesh",
            future.to_str().unwrap(),
            "--out",
            tmp_dir("exit4").to_str().unwrap(),
        ],
        4,
    );

    // Collapsed cell: mesh error.
    let degenerate = dir.join("degenerate.json");
    std::fs::write(
        &degenerate,
        r#"{ "version": 1, "nsd": 2,
             "vertices": [[0,0],[1,0],[1,1],[0,1]],
             "cells": [{"type": "QUA", "verts": [0,1,2,2]}],
             "boundary": [] }"#,
    )
    .unwrap();
    run_err(
        &[
            "solve-poisson",
            "--mesh",
            degenerate.to_str().unwrap(),
            "--out",
            tmp_dir("exit4b").to_str().unwrap(),
        ],
        4,
    );

    // All-Neumann boundary leaves the trace system singular: solver failure.
    let neumann = dir.join("all_neumann.json");
    std::fs::write(
        &neumann,
        r#"{ "version": 1, "nsd": 2,
             "vertices": [[0,0],[1,0],[1,1],[0,1]],
             "cells": [{"type": "QUA", "verts": [0,1,2,3]}],
             "boundary": [
               {"verts": [0,1], "tag": "NEUMANN"},
               {"verts": [1,2], "tag": "NEUMANN"},
               {"verts": [2,3], "tag": "NEUMANN"},
               {"verts": [3,0], "tag": "NEUMANN"}] }"#,
    )
    .unwrap();
    run_err(
        &[
            "solve-poisson",
            "--mesh",
            neumann.to_str().unwrap(),
            "--out",
            tmp_dir("exit3").to_str().unwrap(),
        ],
        3,
    );
}

#[test]
fn strict_config_rejects_unknown_keys_and_flags_override() {
    let dir = tmp_dir("config-strict");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{ "levle": 4 }"#).unwrap();
    let stderr = run_err(
        &[
            "generate-mesh",
            "--cell-type",
            "TRI",
            "--config",
            bad.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ],
        2,
    );
    assert!(
        stderr.contains("levle") || stderr.contains("unknown field"),
        "unexpected stderr: {stderr}"
    );

    // Valid file provides cell_type/level; the flag overrides the level.
    let good = dir.join("good.json");
    std::fs::write(&good, r#"{ "cell_type": "QUA", "level": 2 }"#).unwrap();
    let out = tmp_dir("config-resolved");
    run_ok(&[
        "generate-mesh",
        "--config",
        good.to_str().unwrap(),
        "--level",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let man = manifest(&out);
    assert_eq!(man["config"]["cell_type"], "QUA");
    assert_eq!(man["config"]["level"], 3);
    assert_eq!(man["config"]["n_cells"], 9);
}

#[test]
fn converge_writes_pinned_csv() {
    let dir = tmp_dir("converge-cli");
    run_ok(&[
        "converge",
        "--problem",
        "poisson",
        "--case",
        "poisson-smooth-2d",
        "--cell-type",
        "QUA",
        "--levels",
        "2,4,8",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(
        header.starts_with(
            "level,h,n_cells,n_trace_dof,err_u,err_flux,err_p,t_assemble_s,t_solve_s,order_u,order_flux,order_p"
        ),
        "header changed: {header}"
    );
    assert_eq!(lines.count(), 3);
    let man = manifest(&dir);
    let order = man["config"]["final_order_u"].as_f64().unwrap();
    assert!((1.5..2.5).contains(&order), "order_u {order} implausible");
}

#[test]
fn converge_lists_cases() {
    let out = run_ok(&["converge", "--list-cases"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "poisson-smooth-2d",
        "poisson-smooth-3d",
        "poisson-gaussian-bump",
        "stokes-vortex-2d",
        "stokes-trig-3d",
    ] {
        assert!(text.contains(name), "--list-cases misses {name}");
    }
}

#[test]
fn tau_sweep_writes_csv() {
    let dir = tmp_dir("tau-sweep-cli");
    run_ok(&[
        "tau-sweep",
        "--problem",
        "stokes",
        "--cell-type",
        "TRI",
        "--level",
        "2",
        "--taus",
        "1,100,10000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.join("tau_sweep.csv")).unwrap();
    assert!(csv.starts_with("tau,err_u,err_flux,err_p,"));
    assert_eq!(csv.lines().count(), 4);
    run_err(
        &[
            "tau-sweep",
            "--taus",
            "0,1",
            "--out",
            tmp_dir("tau-sweep-bad").to_str().unwrap(),
        ],
        2,
    );
}

#[test]
fn adapt_writes_history_and_size_field() {
    let dir = tmp_dir("adapt-cli");
    run_ok(&[
        "adapt",
        "--case",
        "poisson-gaussian-bump",
        "--cell-type",
        "TRI",
        "--level",
        "4",
        "--eps",
        "0.05",
        "--max-iter",
        "6",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.join("adapt_history.csv")).unwrap();
    assert!(csv.starts_with("iter,n_cells,max_E,max_err_u_star,max_err_u,efficiency\n"));
    assert!(csv.lines().count() >= 2);
    assert!(dir.join("final_mesh.json").exists());
    assert!(dir.join("size_field.json").exists());
    assert!(dir.join("final_solution.vtk").exists());

    // Non-triangular families run a single indicator pass and export the
    // size field for an external remesher.
    let dir = tmp_dir("adapt-qua-cli");
    run_ok(&[
        "adapt",
        "--cell-type",
        "QUA",
        "--level",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let man = manifest(&dir);
    assert_eq!(man["config"]["resumable"], true);
    assert!(dir.join("size_field.json").exists());
    let size: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("size_field.json")).unwrap())
            .unwrap();
    assert_eq!(size["version"], 1);
    // One target size per vertex of the 4x4 quad grid.
    assert_eq!(size["sizes"].as_array().expect("sizes array").len(), 25);
    assert!(size["mesh_checksum"].as_str().is_some());
}

#[test]
fn solve_poisson_dumps_matrix_market() {
    let dir = tmp_dir("dump-matrix");
    run_ok(&[
        "solve-poisson",
        "--cell-type",
        "TRI",
        "--level",
        "2",
        "--dump-matrix",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let mtx = std::fs::read_to_string(dir.join("matrix.mtx")).unwrap();
    let header = mtx.lines().next().unwrap();
    assert!(
        header.starts_with("%%MatrixMarket matrix coordinate real"),
        "bad MatrixMarket header: {header}"
    );
}

#[test]
fn swimmer_surface_writes_vtk() {
    let dir = tmp_dir("swimmer-cli");
    run_ok(&[
        "swimmer-surface",
        "--gamma",
        "0.7853981633974483",
        "--n-lambda",
        "40",
        "--n-theta",
        "12",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let vtk = std::fs::read_to_string(dir.join("swimmer.vtk")).unwrap();
    assert!(vtk.contains("DATASET UNSTRUCTURED_GRID"));
    let man = manifest(&dir);
    assert!(man["config"]["n_points"].as_u64().unwrap() > 100);
    run_err(
        &[
            "swimmer-surface",
            "--n-theta",
            "2",
            "--out",
            tmp_dir("swimmer-bad").to_str().unwrap(),
        ],
        2,
    );
}

#[test]
fn legacy_demo_reports_singularity() {
    let dir = tmp_dir("legacy-cli");
    let out = run_ok(&["legacy-demo", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nullvector"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("legacy_demo.json")).unwrap())
            .unwrap();
    assert!(report["qua_legacy_det"].as_f64().unwrap().abs() <= 1e-14);
    assert!(report["qua_modern_det"].as_f64().unwrap() > 1e-8);
}
