use std::time::Instant;

use serde::Serialize;

use crate::tape::{CatalyticTape, TapeDigest};

/// Resource accounting for one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RunMetrics {
    /// Abstract operation count (register operations and walk steps).
    pub elapsed_steps: u64,
    /// `None` when timing is suppressed for reproducible output.
    pub wall_time_ms: Option<f64>,
    pub workspace_peak_bits: u64,
    /// Catalytic tape bits the run laid registers over.
    pub catalytic_bits: u64,
    /// Whether the final tape digest equals the initial one.
    pub tape_restored: bool,
    pub aborted: bool,
    /// Input normalizations applied before running (e.g. added self-loops).
    pub normalizations: Vec<String>,
}

/// Captures the initial digest and start time of a run.
#[derive(Debug)]
pub(crate) struct RunClock {
    start: Instant,
    digest: TapeDigest,
}

impl RunClock {
    pub(crate) fn start(tape: &CatalyticTape) -> Self {
        RunClock {
            start: Instant::now(),
            digest: tape.digest(),
        }
    }

    pub(crate) fn finish(&self, tape: &CatalyticTape, metrics: &mut RunMetrics) {
        metrics.wall_time_ms = Some(self.start.elapsed().as_secs_f64() * 1e3);
        metrics.tape_restored = tape.digest() == self.digest;
    }
}
