use std::io;

use serde::Serialize;

use super::config::Strategy;
use crate::error::{Error, Result};
use crate::lattice::Method;

pub const CSV_HEADER: [&str; 13] = [
    "rho_db",
    "strategy",
    "solver",
    "mean_sinr",
    "mean_capacity_bits",
    "capacity_stderr",
    "mean_gamma",
    "mean_d",
    "mean_eps1_over_k",
    "predictor_value",
    "n_channels",
    "n_vectors",
    "wall_seconds",
];

/// Channel-averaged statistics at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho_db: f64,
    #[serde(serialize_with = "as_display")]
    pub strategy: Strategy,
    #[serde(serialize_with = "as_display")]
    pub solver: Method,
    pub mean_sinr: f64,
    pub mean_capacity_bits: f64,
    pub capacity_stderr: f64,
    pub mean_gamma: f64,
    pub mean_d: f64,
    pub mean_eps1_over_k: f64,
    pub predictor_value: Option<f64>,
    pub n_channels: usize,
    pub n_vectors: usize,
    pub wall_seconds: Option<f64>,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Rows of a sweep, in grid order (and strategy order for comparisons).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// Scientific notation with 13 significant digits.
fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SweepTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends the rows of `other`.
    pub fn extend(&mut self, other: SweepTable) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Config(format!("cannot write CSV: {e}"));
        w.write_record(CSV_HEADER).map_err(io_err)?;
        for r in &self.rows {
            w.write_record([
                num(r.rho_db),
                r.strategy.to_string(),
                r.solver.to_string(),
                num(r.mean_sinr),
                num(r.mean_capacity_bits),
                num(r.capacity_stderr),
                num(r.mean_gamma),
                num(r.mean_d),
                num(r.mean_eps1_over_k),
                opt(r.predictor_value),
                r.n_channels.to_string(),
                r.n_vectors.to_string(),
                opt(r.wall_seconds),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Config(format!("cannot write CSV: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rho: f64) -> SweepRow {
        SweepRow {
            rho_db: rho,
            strategy: Strategy::Msvp,
            solver: Method::SqrBabai,
            mean_sinr: 1.0 / 3.0,
            mean_capacity_bits: 2.5,
            capacity_stderr: 0.0,
            mean_gamma: 1.0,
            mean_d: 0.9,
            mean_eps1_over_k: 1e-3,
            predictor_value: None,
            n_channels: 2,
            n_vectors: 3,
            wall_seconds: None,
        }
    }

    #[test]
    fn header_and_formatting() {
        let t = SweepTable { rows: vec![row(10.0), row(12.5)] };
        let s = t.to_csv_string();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "rho_db,strategy,solver,mean_sinr,mean_capacity_bits,capacity_stderr,mean_gamma,mean_d,mean_eps1_over_k,predictor_value,n_channels,n_vectors,wall_seconds"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 13);
        assert_eq!(first[0], "1.000000000000e1");
        assert_eq!(first[1], "msvp");
        assert_eq!(first[2], "sqr");
        assert_eq!(first[3].parse::<f64>().unwrap(), 0.3333333333333);
        assert_eq!(first[9], "");
        assert_eq!(first[12], "");
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn json_has_rows() {
        let t = SweepTable { rows: vec![row(10.0)] };
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["rows"][0]["strategy"], "msvp");
        assert!(v["rows"][0]["predictor_value"].is_null());
    }
}
