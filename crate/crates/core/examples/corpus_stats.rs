//! Verifies the coverage manifest: every listed example must be reproduced
//! byte-for-byte by its template, then prints the compression table.
//!
//! Pass a manifest path to check your own corpus.

use std::path::PathBuf;

use ivy_core::fixtures;
use ivy_core::metrics::verify_coverage_path;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| fixtures::path(fixtures::COVERAGE_MANIFEST));
    let report = match verify_coverage_path(&path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    println!("{}", report.to_table());
    if !report.all_passed() {
        std::process::exit(1);
    }
}
