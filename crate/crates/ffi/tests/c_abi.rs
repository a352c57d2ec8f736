//! End-to-end C ABI check: compile a C consumer against the generated
//! header and the staticlib, run it, and verify its output.

use std::path::PathBuf;
use std::process::Command;

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/test-bin -> target/<profile>
    let exe = std::env::current_exe().expect("test executable path");
    exe.parent()
        .and_then(|p| p.parent())
        .expect("profile dir")
        .to_path_buf()
}

#[test]
fn c_consumer_compiles_and_runs() {
    let manifest_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest_dir.join("include");
    let header = header_dir.join("tricomi_lab.h");
    assert!(header.exists(), "generated header missing: {header:?}");
    // The staticlib lands in the profile dir on direct builds and in deps/
    // when built as a test dependency.
    let lib_dir = [profile_dir(), profile_dir().join("deps")]
        .into_iter()
        .find(|d| d.join("libtricomi_lab_ffi.a").exists())
        .expect("staticlib built alongside the tests");

    let work = std::env::temp_dir().join(format!("tl_cabi_{}", std::process::id()));
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("consumer.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "tricomi_lab.h"

int main(void) {
    double v = 0.0;
    if (tl_strauss_exponent(3.0, &v) != TlStatusOk) return 1;
    if (fabs(v - 2.414213562373095) > 1e-12) return 2;
    if (tl_strauss_exponent(0.5, &v) != TlStatusDomain) return 3;

    TlRegime regime;
    double nu;
    if (tl_classify_damped(2, 0.5, 3.0, &regime, &nu) != TlStatusOk) return 4;
    if (regime != TlRegimeGlobalThm11i) return 5;

    struct TlAdmissiblePair *pair = NULL;
    if (tl_admissible_select(0.2, 2.2, &pair) != TlStatusOk) return 6;
    double q = 0.0;
    int feasible = 0;
    if (tl_admissible_q(pair, &q) != TlStatusOk) return 7;
    if (tl_admissible_feasible(pair, &feasible) != TlStatusOk) return 8;
    if (!feasible) return 9;
    if (fabs(q - 3.6047430830039526) > 1e-9) return 10;
    tl_admissible_free(pair);

    printf("p_s(3) = %.12f, q(0.2, 2.2) = %.6f\n", 2.414213562373095, q);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = work.join("consumer");
    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-ltricomi_lab_ffi")
        .arg("-lm")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("cc available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&bin).output().expect("consumer runs");
    assert!(
        run.status.success(),
        "consumer exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    let _ = std::fs::remove_dir_all(&work);
}
