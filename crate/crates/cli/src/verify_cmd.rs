//! The `verify` command.

use std::path::Path;

use log::{info, warn};
use robit_core::verify::{run_suite, VerificationConfig, VerificationReport};

use crate::error::CliResult;
use crate::run::write_json;

/// Runs the suite and writes `verification_report.json` into `out`.
pub fn verify(config: &VerificationConfig, out: &Path) -> CliResult<VerificationReport> {
    let report = run_suite(config)?;
    std::fs::create_dir_all(out).map_err(|e| crate::error::CliError::io(out, e))?;
    write_json(&out.join("verification_report.json"), &report)?;
    for b in &report.bounds {
        if !b.passed {
            warn!("{} failed: worst margin {:e} ({:e} relative) at {}", b.name, b.worst_margin, b.worst_relative_margin, b.worst_point);
        }
    }
    for c in &report.trace_checks {
        info!("{}: {} vs {} (combined se {:e}) {}", c.name, c.a, c.b, c.combined_se, if c.passed { "ok" } else { "FAILED" });
    }
    Ok(report)
}
