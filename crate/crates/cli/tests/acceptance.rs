//! Acceptance criterion 8: CLI round-trip and golden certificates stable
//! across two consecutive runs.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use otlab::fixture::FIXTURES;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_ok(args: &[&str], expect: i32) -> Result<Vec<u8>, String> {
    let out = otlab(args);
    ensure(status(&out) == expect, || {
        format!(
            "`otlab {}` exited {} (expected {expect}): {}",
            args.join(" "),
            status(&out),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })?;
    Ok(out.stdout)
}

/// Twice-run byte-identical output of one command.
fn stable(args: &[&str]) -> Result<Vec<u8>, String> {
    let first = run_ok(args, 0)?;
    let second = run_ok(args, 0)?;
    ensure(first == second, || {
        format!("`otlab {}` is not byte-identical across runs", args.join(" "))
    })?;
    Ok(first)
}

/// gen → solve --dual → certify --solution on every fixture, sizes 2..=5,
/// seeds 0..5, plus oracle agreement where the tree count fits the default
/// budget; every step run twice and compared byte for byte.
fn round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut instances = 0;
    let mut oracle_checked = 0;
    for fixture in FIXTURES {
        for size in 2..=5usize {
            for seed in 0..5u64 {
                let (size_s, seed_s) = (size.to_string(), seed.to_string());
                let stem = dir.path().join(format!("{fixture}-{size}-{seed}"));
                let inst = stem.with_extension("json");
                let sol = stem.with_extension("solution.json");
                let inst_s = path_arg(&inst).to_owned();
                let text = stable(&["gen", fixture, "--size", &size_s, "--seed", &seed_s])?;
                std::fs::write(&inst, &text).map_err(|e| e.to_string())?;
                run_ok(
                    &["gen", fixture, "--size", &size_s, "--seed", &seed_s, "-o", &inst_s],
                    0,
                )?;
                ensure(std::fs::read(&inst).map_err(|e| e.to_string())? == text, || {
                    format!("{fixture} {size} {seed}: -o output differs from stdout")
                })?;

                let solution = stable(&["solve", "--dual", &inst_s])?;
                std::fs::write(&sol, &solution).map_err(|e| e.to_string())?;
                stable(&["certify", "--solution", path_arg(&sol), &inst_s])?;
                stable(&["certify", &inst_s])?;

                if size <= 4 {
                    let solved: serde_json::Value = serde_json::from_slice(&solution).map_err(|e| e.to_string())?;
                    let oracle: serde_json::Value =
                        serde_json::from_slice(&stable(&["oracle", &inst_s])?).map_err(|e| e.to_string())?;
                    ensure(solved["value"] == oracle["value"], || {
                        format!(
                            "{fixture} {size} {seed}: solve {} vs oracle {}",
                            solved["value"], oracle["value"]
                        )
                    })?;
                    oracle_checked += 1;
                }
                instances += 1;
            }
        }
    }
    Ok(format!(
        "{instances} generated instances certified, {oracle_checked} matched the oracle"
    ))
}

/// Checked-in certificates reproduced byte for byte, twice.
fn golden_certificates() -> Outcome {
    let mut checked = 0;
    for name in FIXTURE_FILES {
        let data_path = data(name);
        let out = stable(&["certify", path_arg(&data_path)])?;
        let expected = std::fs::read(golden(name)).map_err(|e| e.to_string())?;
        ensure(out == expected, || {
            format!("{name}: certificate differs from golden file")
        })?;
        checked += 1;
    }
    let diag = data("fixture-diag");
    let out = stable(&["--float", "certify", path_arg(&diag)])?;
    let expected = std::fs::read(golden("fixture-diag.float")).map_err(|e| e.to_string())?;
    ensure(out == expected, || {
        "fixture-diag: float certificate differs from golden file".to_owned()
    })?;
    Ok(format!("{} golden certificates", checked + 1))
}

fn criterion_8() -> Outcome {
    let a = round_trip()?;
    let b = golden_certificates()?;
    Ok(format!("{a}; {b}"))
}

fn main() -> ExitCode {
    let label = "8 CLI round-trip and golden certificates";
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(criterion_8)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let passed = match &outcome {
        Ok(detail) => {
            println!("criterion {label}: PASS ({detail}; {:.2?})", elapsed);
            true
        }
        Err(detail) => {
            println!("criterion {label}: FAIL ({detail})");
            false
        }
    };
    println!("acceptance: {}/1 criteria passed", passed as u32);
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
