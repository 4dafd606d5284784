//! Compiles and runs `c/demo.c` against the generated header and the
//! freshly built shared library, proving the ABI works from actual C.

use std::path::PathBuf;
use std::process::Command;

fn lib_dir() -> PathBuf {
    // test binaries live in target/<profile>/deps next to libobjnav_ffi.so
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap().to_path_buf();
    if deps.join("libobjnav_ffi.so").exists() {
        return deps;
    }
    let profile = deps.parent().unwrap().to_path_buf();
    assert!(profile.join("libobjnav_ffi.so").exists(), "libobjnav_ffi.so not found near {}", deps.display());
    profile
}

#[test]
fn c_demo_compiles_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = lib_dir();
    let out_dir = tempfile::tempdir().unwrap();
    let demo_bin = out_dir.path().join("demo");

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    let compile = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("c/demo.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lobjnav_ffi")
        .arg("-o")
        .arg(&demo_bin)
        .output()
        .expect("C compiler not runnable");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&demo_bin)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .expect("demo not runnable");
    assert!(
        run.status.success(),
        "demo exited with {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
