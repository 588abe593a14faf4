//! Result files: JSON records and CSV tables with floats printed to 17 significant digits.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use serde_json::Value;

use crate::chain::BondHistogram;
use crate::dynamics::TracePoint;
use crate::deviation::{BoundaryCurves, LinearizationData, VarianceData};
use crate::error::Result;
use crate::experiments::{Histogram, SweepRow};
use crate::scalar::Real;
use crate::stats::EstimateResult;

/// `d.dddddddddddddddde±x`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON formatter that prints every float with 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }
    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }
    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// One experiment result.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub params: Value,
    pub n: u64,
    pub p_hat: Option<f64>,
    pub ci: Option<[f64; 2]>,
    pub seed: u64,
    /// Wall-clock seconds; left empty unless asked for, so that reruns are byte-identical.
    pub runtime: Option<f64>,
    pub details: Value,
}

impl ResultRecord {
    pub fn new(experiment: &str, params: Value, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            params,
            n: 0,
            p_hat: None,
            ci: None,
            seed,
            runtime: None,
            details: Value::Null,
        }
    }

    pub fn with_estimate(mut self, e: &EstimateResult) -> Self {
        self.n = e.n;
        self.p_hat = Some(e.p_hat);
        self.ci = Some([e.ci_low, e.ci_high]);
        self
    }

    pub fn with_details<S: Serialize>(mut self, details: &S) -> Result<Self> {
        self.details = serde_json::to_value(details)?;
        Ok(self)
    }
}

/// Minimal CSV table: a header and rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io::Error::from)?;
        for r in &self.rows {
            w.write_record(r).map_err(io::Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()?)?;
        Ok(())
    }
}

fn f<T: Real>(v: T) -> String {
    format_float(v.to_f64_lossy())
}

/// `t, x_det, A, d_plus, d_minus, v, xi` on the linearisation grid.
pub fn curves_table<T: Real>(
    lin: &LinearizationData<T>,
    curves: &BoundaryCurves<T>,
    var: &VarianceData<T>,
) -> CsvTable {
    let mut t = CsvTable::new(&["t", "x_det", "A", "d_plus", "d_minus", "v", "xi"]);
    for k in 0..lin.len() {
        t.push(vec![
            f(lin.times()[k]),
            f(lin.path().x[k]),
            f(lin.coef[k]),
            f(curves.d_plus[k]),
            f(curves.d_minus[k]),
            f(var.v[k]),
            f(var.xi[k]),
        ]);
    }
    t
}

/// `t, x, left_edge, right_edge` for a traced trajectory.
pub fn trajectory_table<T: Real>(points: &[TracePoint<T>]) -> CsvTable {
    let mut t = CsvTable::new(&["t", "x", "left_edge", "right_edge"]);
    for p in points {
        t.push(vec![f(p.t), f(p.x), f(p.left_edge), f(p.right_edge)]);
    }
    t
}

/// `sigma, epsilon, regime, p_left, ci_low, ci_high, n`.
pub fn sweep_table(rows: &[SweepRow]) -> CsvTable {
    let mut t = CsvTable::new(&["sigma", "epsilon", "regime", "p_left", "ci_low", "ci_high", "n"]);
    for r in rows {
        t.push(vec![
            format_float(r.sigma),
            format_float(r.epsilon),
            r.regime.label().into(),
            format_float(r.p_left),
            format_float(r.ci_low),
            format_float(r.ci_high),
            r.n.to_string(),
        ]);
    }
    t
}

/// `bond_index, count, fraction`.
pub fn bond_histogram_table(h: &BondHistogram) -> CsvTable {
    let mut t = CsvTable::new(&["bond_index", "count", "fraction"]);
    for (i, c, frac) in h.rows() {
        t.push(vec![i.to_string(), c.to_string(), format_float(frac)]);
    }
    t
}

/// `bin_low, bin_high, count`, with under- and overflow as open-ended bins.
pub fn histogram_table(h: &Histogram) -> CsvTable {
    let mut t = CsvTable::new(&["bin_low", "bin_high", "count"]);
    let edges = h.bin_edges();
    t.push(vec!["-inf".into(), format_float(h.lo), h.underflow.to_string()]);
    for (k, &c) in h.counts.iter().enumerate() {
        t.push(vec![format_float(edges[k]), format_float(edges[k + 1]), c.to_string()]);
    }
    t.push(vec![format_float(h.hi), "inf".into(), h.overflow.to_string()]);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, -7.0, 0.0, 123_456_789.123_456_78] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn json_uses_full_precision() {
        let s = to_json_string(&json!({"x": 0.1, "n": 3, "v": [0.25]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
        assert_eq!(back["v"][0].as_f64(), Some(0.25));
    }

    #[test]
    fn records_serialize_runtime_as_null() {
        let e = EstimateResult::from_counts(3, 10, 0, 9);
        let r = ResultRecord::new("simulate", json!({}), 9).with_estimate(&e);
        let s = to_json_string(&r).unwrap();
        assert!(s.contains("\"runtime\": null"));
        assert!(s.contains("\"seed\": 9"));
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_string().unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
