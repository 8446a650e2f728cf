//! Compile and run a small C program against the generated header and the
//! static library, exercising the handle lifecycle end to end.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let header = include.join("rumspec.h");
    assert!(header.exists(), "header not generated");
    // locate the staticlib next to the test binary's target dir
    let mut target = std::env::current_exe().unwrap();
    target.pop(); // deps/
    target.pop(); // debug/
    let staticlib = target.join("librumspec_ffi.a");
    assert!(staticlib.exists(), "staticlib not built at {staticlib:?}");

    let dir = std::env::temp_dir().join(format!("rumspec-c-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let c_src = dir.join("smoke.c");
    std::fs::write(
        &c_src,
        r#"
#include <stdio.h>
#include "rumspec.h"

int main(void) {
    RumspecFramework *fw = NULL;
    if (rumspec_framework_gallery("grid", &fw) != RUMSPEC_STATUS_OK) return 1;
    if (rumspec_framework_dimension(fw) != 2) return 2;
    RumspecReport *report = NULL;
    if (rumspec_scan_rum(fw, 8, 1e-8, 1, &report) != RUMSPEC_STATUS_OK) return 3;
    size_t flagged = rumspec_report_flagged_count(report);
    if (flagged != 15) { fprintf(stderr, "flagged %zu\n", flagged); return 4; }
    double thetas[2]; double sigma; size_t kdim;
    if (rumspec_report_flagged_get(report, 0, thetas, &sigma, &kdim) != RUMSPEC_STATUS_OK) return 5;
    if (kdim < 2) return 6;
    char *csv = rumspec_report_to_csv(report);
    if (!csv) return 7;
    rumspec_string_free(csv);
    rumspec_report_free(report);
    rumspec_framework_free(fw);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("smoke");
    let status = Command::new("cc")
        .arg(&c_src)
        .arg("-I")
        .arg(&include)
        .arg(&staticlib)
        .arg("-lm")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
