#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const FIXTURE_FILES: [&str; 5] = [
    "fixture-diag",
    "indicator-3-0",
    "random-uniform-4-2",
    "separable-4-1",
    "discrete-metric-spike-3-0",
];

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data(name: &str) -> PathBuf {
    crate_dir().join("tests/data").join(format!("{name}.json"))
}

pub fn golden(name: &str) -> PathBuf {
    crate_dir()
        .join("tests/golden")
        .join(format!("{name}.certificate.json"))
}

pub fn otlab(args: &[&str]) -> Output {
    otlab_with_env(args, &[])
}

pub fn otlab_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_otlab"));
    cmd.args(args).env_remove("OT_LAB_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("otlab runs")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn status(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}
