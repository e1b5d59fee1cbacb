//! Compiles a small C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "neckflow.h"

int main(void) {
    NfFamily *fam = NULL;
    if (nf_family_morse(2, 0.7, 2.0, &fam) != NF_STATUS_OK) return 1;
    NfState s;
    if (nf_waist_state(fam, 0.05, 0.0, 1.0, &s) != NF_STATUS_OK) return 2;
    double h = 0.0;
    if (nf_hamiltonian(fam, 0.05, &s, &h) != NF_STATUS_OK || fabs(h - 0.5) > 1e-12) return 3;
    NfTrace *tr = NULL;
    if (nf_integrate_to_level(fam, 0.05, &s, 1.0, 50.0, 1e-10, &tr) != NF_STATUS_OK) return 4;
    NfTraceSummary sum;
    if (nf_trace_summary(tr, &sum) != NF_STATUS_OK || !sum.reached) return 5;
    nf_trace_free(tr);
    nf_family_free(fam);

    NfFamily *bad = NULL;
    if (nf_family_morse(2, 0.7, 1.0, &bad) != NF_STATUS_INVALID_ARGUMENT || bad) return 6;
    char msg[128];
    if (nf_last_error(msg, sizeof msg) == 0 || strlen(msg) == 0) return 7;
    printf("%s %.6f\n", nf_version(), sum.angular_length);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libneckflow_ffi.a");
    if !lib.is_file() {
        panic!("static library not found at {}", lib.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
