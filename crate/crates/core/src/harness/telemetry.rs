use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fmt::f64_17;
use crate::optim::Mode;

pub const TELEMETRY_HEADER: &str = "iter,mode,loss,norm_sgd,norm_psf,c,r,r_hat,s,p,wall_ns";

/// One row per iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub iter: u64,
    pub mode: Mode,
    pub loss: f64,
    pub norm_sgd: f64,
    pub norm_psf: Option<f64>,
    pub c: Option<f64>,
    pub r: Option<f64>,
    pub r_hat: f64,
    pub s: Option<f64>,
    pub p: Option<f64>,
    /// Cumulative, strictly increasing.
    pub wall_ns: u64,
}

impl TelemetryRecord {
    pub fn csv_line(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(f64_17).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.mode.as_str(),
            f64_17(self.loss),
            f64_17(self.norm_sgd),
            opt(self.norm_psf),
            opt(self.c),
            opt(self.r),
            f64_17(self.r_hat),
            opt(self.s),
            opt(self.p),
            self.wall_ns
        )
    }
}

pub fn write_telemetry<W: Write>(mut out: W, records: &[TelemetryRecord]) -> Result<()> {
    writeln!(out, "{TELEMETRY_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_telemetry(path: &Path, records: &[TelemetryRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_telemetry(std::io::BufWriter::new(file), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_fields_are_empty() {
        let rec = TelemetryRecord {
            iter: 7,
            mode: Mode::SgdOnly,
            loss: 0.5,
            norm_sgd: 2.0,
            norm_psf: None,
            c: None,
            r: None,
            r_hat: 0.0,
            s: None,
            p: None,
            wall_ns: 12,
        };
        let line = rec.csv_line();
        assert_eq!(line.split(',').count(), TELEMETRY_HEADER.split(',').count());
        assert!(line.starts_with("7,SGD_ONLY,5.0000000000000000e-1,"));
        assert!(line.ends_with(",,0.0000000000000000e0,,,12"));
    }

    #[test]
    fn floats_round_trip_through_the_csv() {
        let loss = 0.1 + 0.2;
        let rec = TelemetryRecord {
            iter: 1,
            mode: Mode::Sam,
            loss,
            norm_sgd: 1.0 / 3.0,
            norm_psf: Some(std::f64::consts::PI),
            c: Some(1e-300),
            r: Some(-0.9),
            r_hat: -0.09,
            s: Some(1.0),
            p: Some(0.02),
            wall_ns: 1,
        };
        let fields: Vec<String> = rec.csv_line().split(',').map(String::from).collect();
        assert_eq!(fields[2].parse::<f64>().unwrap(), loss);
        assert_eq!(fields[3].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 1e-300);
    }
}
