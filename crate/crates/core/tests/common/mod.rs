//! Independent oracles shared by integration tests. Nothing here calls the
//! code under test except `validate` (the agreed filter) and canonical hashing.

#![allow(dead_code)]

pub mod enum_oracle;
pub mod planted;

/// Prints one line per criterion and fails the test if it did not pass.
/// Written straight to stdout so the line shows without `--nocapture`.
pub fn report(name: &str, outcome: Result<String, String>) {
    use std::io::Write;
    let line = match &outcome {
        Ok(detail) => format!("ACCEPTANCE PASS [{name}] {detail}\n"),
        Err(detail) => format!("ACCEPTANCE FAIL [{name}] {detail}\n"),
    };
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    if let Err(detail) = outcome {
        panic!("criterion {name} failed: {detail}");
    }
}
