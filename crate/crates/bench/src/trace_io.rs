//! CSV traces and their `key=value` metadata sidecars.

use std::io::{self, Write};
use std::time::Instant;

use svrrg_core::{Clock, ConvergenceTrace};

pub const CSV_HEADER: &str = "epoch,passes,feasibility,rel_error,potential_norm,wall_ms";

/// Formats with 17 significant digits; non-finite values print as `NaN`,
/// `inf` or `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &ConvergenceTrace) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.epoch,
            fmt_f64(r.passes),
            fmt_f64(r.feasibility),
            fmt_f64(r.rel_error),
            fmt_f64(r.potential_norm),
            fmt_f64(r.wall_ms)
        )?;
    }
    w.flush()
}

/// Per-inner-step potentials of an SVRRG run.
pub fn write_steps_csv<W: Write>(mut w: W, potentials: &[f64]) -> io::Result<()> {
    writeln!(w, "step,potential")?;
    for (i, p) in potentials.iter().enumerate() {
        writeln!(w, "{i},{}", fmt_f64(*p))?;
    }
    w.flush()
}

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone)]
pub struct Meta(pub Vec<(String, String)>);

impl Meta {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()
    }
}

/// Wall clock started at construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}
