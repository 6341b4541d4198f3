//! Long-format CSV reports. Every row is (kind, n, d, seed, metric,
//! value); infinities are written as the literals `inf` / `-inf` so
//! failed runs survive the round trip through text.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;

pub struct Report {
    rows: Vec<Row>,
}

struct Row {
    kind: String,
    n: usize,
    d: usize,
    seed: u64,
    metric: String,
    value: f64,
}

/// Shortest round-trip decimal for finite values, `inf`/`-inf`/`nan`
/// otherwise; both directions are locale independent and byte stable.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

impl Report {
    pub fn new() -> Self {
        Report { rows: Vec::new() }
    }

    pub fn push(&mut self, kind: &str, n: usize, d: usize, seed: u64, metric: &str, value: f64) {
        self.rows.push(Row {
            kind: kind.to_string(),
            n,
            d,
            seed,
            metric: metric.to_string(),
            value,
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "kind,n,d,seed,metric,value")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.kind,
                r.n,
                r.d,
                r.seed,
                r.metric,
                fmt_value(r.value)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
