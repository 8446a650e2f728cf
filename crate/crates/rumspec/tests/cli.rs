//! End-to-end tests of the `rumspec` binary: exit codes, determinism,
//! round-trips and the documented subcommand surfaces.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rumspec"))
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("rumspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gallery_list_names_every_framework() {
    let out = bin().args(["gallery", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["grid", "honeycomb", "kagome", "kagome3d", "octahedron", "kite", "bipyramid"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn gallery_export_round_trips_byte_identical() {
    let dir = tempdir();
    let path = dir.join("grid.json");
    let out = bin()
        .args(["gallery", "export", "grid", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let first = std::fs::read_to_string(&path).unwrap();
    // re-import through --framework <file> and export again
    let patch_path = dir.join("grid2.json");
    let out = bin()
        .args([
            "patch",
            "export",
            "--framework",
            path.to_str().unwrap(),
            "--box",
            "0:2,0:2",
            "--out",
            patch_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let patch: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&patch_path).unwrap()).unwrap();
    assert_eq!(patch["joints"].as_array().unwrap().len(), 9);
    assert_eq!(patch["bars"].as_array().unwrap().len(), 12);
    // byte-identical re-export
    let out = bin().args(["gallery", "export", "grid"]).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), first);
}

#[test]
fn symbol_det_prints_sheering_determinant() {
    let out = bin()
        .args([
            "symbol", "det",
            "--framework", "bipyramid",
            "--rows", "e4,e5,e6",
            "--cols", "v1z,v2x,v2y",
            "--inverse",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // alpha*h = sqrt(2)/6 = 2.357022603955e-01 on the constant, z1 and z2 terms
    assert_eq!(
        text.trim(),
        "2.357022603955e-01 + 2.357022603955e-01*z2 + 2.357022603955e-01*z1"
    );
}

#[test]
fn symbol_det_grid_in_original_variables() {
    let out = bin()
        .args(["symbol", "det", "--framework", "grid"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // (1 - z1^{-1})(1 - z2^{-1})
    assert!(text.contains("z1^-1*z2^-1"), "got {text}");
    assert!(text.contains("1.000000000000e+00"), "got {text}");
}

#[test]
fn symbol_eval_prints_matrix_rows() {
    let out = bin()
        .args(["symbol", "eval", "--framework", "grid", "--theta", "3.141592653589793,0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("e1"));
    assert!(text.contains("-2.000000000000e+00"), "got {text}");
}

#[test]
fn spectrum_scan_csv_is_deterministic_across_threads() {
    let dir = tempdir();
    let a = dir.join("scan-a.csv");
    let b = dir.join("scan-b.csv");
    for (path, threads) in [(&a, "1"), (&b, "2")] {
        let out = bin()
            .args([
                "spectrum", "scan",
                "--framework", "grid",
                "--resolution", "16",
                "--tol", "1e-8",
                "--threads", threads,
                "--out", path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = std::fs::read(&a).unwrap();
    let tb = std::fs::read(&b).unwrap();
    assert_eq!(ta, tb, "CSV differs across thread counts");
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("theta1,theta2,sigma_min,flagged\n"));
    assert_eq!(text.lines().count(), 1 + 16 * 16);
}

#[test]
fn spectrum_scan_bipyramid_flags_the_sheering_point() {
    // resolution 24 places the sheering phases (2pi/3, 4pi/3, pi) on-grid
    let dir = tempdir();
    let out = bin()
        .args([
            "spectrum", "scan",
            "--framework", "bipyramid",
            "--resolution", "24",
            "--tol", "1e-8",
            "--out", dir.join("bip.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("flagged: theta=(2.094395102393e+00,4.188790204786e+00,3.141592653590e+00)"),
        "missing sheering point in: {text}"
    );
}

#[test]
fn spectrum_scan_slice_and_svg() {
    let dir = tempdir();
    let svg = dir.join("heat.svg");
    let csv = dir.join("slice.csv");
    let out = bin()
        .args([
            "spectrum", "scan",
            "--framework", "kite",
            "--resolution", "16",
            "--slice", "3.0,1.0",
            "--svg", svg.to_str().unwrap(),
            "--out", csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("flagged:"), "slice at omega1=3 must flag the root: {stdout}");
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg"));
    assert!(svg_text.contains("legend") || svg_text.contains("log10"));
}

#[test]
fn spectrum_scan_3d_svg_requires_fix_axis() {
    let dir = tempdir();
    let svg = dir.join("heat3.svg");
    let out = bin()
        .args([
            "spectrum", "scan",
            "--framework", "bipyramid",
            "--resolution", "12",
            "--svg", svg.to_str().unwrap(),
            "--fix-axis", "2=3.141592653589793",
            "--out", dir.join("b.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn flex_make_then_verify_round_trip() {
    let dir = tempdir();
    let field = dir.join("row.json");
    let out = bin()
        .args([
            "flex", "make",
            "--framework", "grid",
            "--omega", "1:0,0.5:0.2",
            "--kernel-index", "0",
            "--radius", "3",
            "--out", field.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args([
            "flex", "verify",
            "--framework", "grid",
            "--field", field.to_str().unwrap(),
            "--radius", "3",
            "--tol", "1e-9",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("is_flex: true"));
}

#[test]
fn flex_verify_zero_field_exits_zero() {
    let dir = tempdir();
    let field = dir.join("zero.json");
    std::fs::write(&field, "[]").unwrap();
    let out = bin()
        .args(["flex", "verify", "--framework", "grid", "--field", field.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("max_residual: 0.000000000000e+00"));
}

#[test]
fn flex_band_reports_line_support() {
    let dir = tempdir();
    let field = dir.join("u0.json");
    let out = bin()
        .args([
            "gallery", "flex", "kagome", "u",
            "--index", "0",
            "--radius", "3",
            "--out", field.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["flex", "band", "--framework", "kagome", "--field", field.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("support_rank: 1"));
    assert!(text.contains("band_limited: true"));
}

#[test]
fn basis_build_and_expand() {
    let dir = tempdir();
    let basis = dir.join("basis.json");
    let out = bin()
        .args([
            "basis", "build",
            "--framework", "grid",
            "--radii", "1,2",
            "--margin", "2",
            "--out", basis.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&basis).unwrap()).unwrap();
    assert_eq!(value["levels"][0]["dimension"], 6);
    assert_eq!(value["levels"][1]["dimension"], 10);

    let field = dir.join("u1.json");
    let out = bin()
        .args([
            "gallery", "flex", "kagome", "u",
            "--index", "1",
            "--radius", "4",
            "--out", field.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = dir.join("coeffs.csv");
    let out = bin()
        .args([
            "basis", "expand",
            "--framework", "kagome",
            "--field", field.to_str().unwrap(),
            "--set", "kagome",
            "--radius", "4",
            "--out", csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("element,coefficient_re,coefficient_im\n"));
    assert!(text.contains("u1,1.000000000000e+00,0.000000000000e+00"), "{text}");
}

#[test]
fn symbol_export_emits_term_lists() {
    let out = bin()
        .args(["symbol", "export", "--framework", "kagome"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["nrows"], 6);
    assert_eq!(value["ncols"], 6);
    assert_eq!(value["col_labels"][0], "v1x");
    // entries are lists of {exponent, re, im}
    let term = &value["entries"][0][0][0];
    assert!(term["exponent"].is_array());
    assert!(term["re"].is_number());
    assert!(term["im"].is_number());
}

#[test]
fn usage_error_exits_two() {
    let out = bin().args(["spectrum", "scan", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one() {
    let out = bin()
        .args(["gallery", "export", "no-such-framework"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unknown gallery framework"));
}

#[test]
fn spectrum_refine_reports_root() {
    let out = bin()
        .args([
            "spectrum", "refine",
            "--framework", "bipyramid",
            "--theta", "2.104395102393196,4.178797433287,3.141592653589793",
            "--lock-moduli",
            "--tol", "1e-9",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("converged: true"));
}
