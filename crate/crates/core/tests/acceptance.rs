//! Runs the validation suite through the binary twice with the same seed,
//! prints one line per criterion and exits non-zero if any fails. The last
//! line checks that the two reports are byte-identical.

use std::path::Path;
use std::process::{Command, ExitCode};

use serde_json::Value;

const SEED: &str = "20240601";

fn validate(out: &Path) -> Result<Vec<u8>, String> {
    let run = Command::new(env!("CARGO_BIN_EXE_dequant-svt"))
        .args(["validate", "--seed", SEED, "--out"])
        .arg(out)
        .output()
        .map_err(|e| format!("could not start binary: {e}"))?;
    // Exit code 3 means some criterion failed; the report is still written.
    if !matches!(run.status.code(), Some(0) | Some(3)) {
        return Err(format!("validate exited with {}: {}", run.status, String::from_utf8_lossy(&run.stderr).trim()));
    }
    std::fs::read(out).map_err(|e| format!("no report at {}: {e}", out.display()))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let first = validate(&dir.path().join("first.json"));
    let second = validate(&dir.path().join("second.json"));
    let (first, second) = match (first, second) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            println!("acceptance: FAIL ({e})");
            return ExitCode::FAILURE;
        }
    };

    let report: Value = match serde_json::from_slice(&first) {
        Ok(v) => v,
        Err(e) => {
            println!("acceptance: FAIL (report is not JSON: {e})");
            return ExitCode::FAILURE;
        }
    };
    let mut all_pass = true;
    let criteria = report["criteria"].as_array().cloned().unwrap_or_default();
    for id in 1..=11 {
        match criteria.iter().find(|c| c["id"].as_u64() == Some(id)) {
            Some(c) => {
                let pass = c["pass"].as_bool() == Some(true);
                all_pass &= pass;
                println!(
                    "criterion {id:>2} {}: {} ({})",
                    c["name"].as_str().unwrap_or("?"),
                    if pass { "PASS" } else { "FAIL" },
                    c["summary"].as_str().unwrap_or("")
                );
            }
            None => {
                all_pass = false;
                println!("criterion {id:>2}: FAIL (missing from report)");
            }
        }
    }

    let identical = first == second;
    all_pass &= identical;
    println!(
        "criterion 12 reproducibility: {} (two runs with seed {SEED}: {} bytes vs {} bytes, {})",
        if identical { "PASS" } else { "FAIL" },
        first.len(),
        second.len(),
        if identical { "identical" } else { "different" }
    );

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
