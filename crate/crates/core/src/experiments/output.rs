//! Result tables and their CSV / JSON forms.
//!
//! Both formats carry the experiment id, the SHA-256 of its configuration
//! and the seed, and print every float rounded to nine significant digits,
//! so equal configurations give byte-identical files.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize, Serializer};

use super::ExperimentError;

/// Significant digits kept in emitted floats.
pub const SIGNIFICANT_DIGITS: usize = 9;

pub const COLUMNS: [&str; 18] = [
    "scenario_id",
    "series",
    "kind",
    "metric",
    "M",
    "N",
    "K",
    "eta_coh",
    "mode",
    "architecture",
    "precoder",
    "loss_mode",
    "mean_rate",
    "stderr",
    "trials",
    "loss_db",
    "prelog",
    "error",
];

/// `x` rounded to nine significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal that reads back as `round_sig(x)`; `NaN`, `inf`, `-inf`
/// otherwise.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let r = round_sig(x);
        // `{}` never uses exponents; switch to them far from unity
        if r != 0.0 && !(1e-6..1e15).contains(&r.abs()) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    }
}

fn parse_float(s: &str) -> Result<f64, ExperimentError> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| ExperimentError::Parse(format!("bad float '{s}'"))),
    }
}

fn rounded<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let r = round_sig(*x);
    if r.is_finite() {
        s.serialize_f64(r)
    } else {
        s.serialize_none()
    }
}

/// One value of one metric at one sweep point.
///
/// `mean_rate` holds the metric's value whatever the metric is; its name
/// follows the common case of a sum rate in bits/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub series: String,
    pub kind: String,
    pub metric: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub eta_coh: usize,
    pub mode: String,
    pub architecture: String,
    pub precoder: String,
    pub loss_mode: String,
    #[serde(serialize_with = "rounded")]
    pub mean_rate: f64,
    #[serde(serialize_with = "rounded")]
    pub stderr: f64,
    pub trials: usize,
    #[serde(serialize_with = "rounded")]
    pub loss_db: f64,
    #[serde(serialize_with = "rounded")]
    pub prelog: f64,
    /// Empty unless the point failed.
    pub error: String,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }

    /// The row as it reads back from a file.
    pub fn rounded(&self) -> Self {
        Self {
            mean_rate: round_sig(self.mean_rate),
            stderr: round_sig(self.stderr),
            loss_db: round_sig(self.loss_db),
            prelog: round_sig(self.prelog),
            ..self.clone()
        }
    }

    fn fields(&self) -> [String; 18] {
        [
            self.scenario_id.clone(),
            self.series.clone(),
            self.kind.clone(),
            self.metric.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.eta_coh.to_string(),
            self.mode.clone(),
            self.architecture.clone(),
            self.precoder.clone(),
            self.loss_mode.clone(),
            format_sig(self.mean_rate),
            format_sig(self.stderr),
            self.trials.to_string(),
            format_sig(self.loss_db),
            format_sig(self.prelog),
            self.error.clone(),
        ]
    }

    fn from_fields(f: &csv::StringRecord) -> Result<Self, ExperimentError> {
        if f.len() != COLUMNS.len() {
            return Err(ExperimentError::Parse(format!("expected {} fields, got {}", COLUMNS.len(), f.len())));
        }
        let int = |i: usize| f[i].parse::<usize>().map_err(|_| ExperimentError::Parse(format!("bad {} '{}'", COLUMNS[i], &f[i])));
        Ok(Self {
            scenario_id: f[0].into(),
            series: f[1].into(),
            kind: f[2].into(),
            metric: f[3].into(),
            m: int(4)?,
            n: int(5)?,
            k: int(6)?,
            eta_coh: int(7)?,
            mode: f[8].into(),
            architecture: f[9].into(),
            precoder: f[10].into(),
            loss_mode: f[11].into(),
            mean_rate: parse_float(&f[12])?,
            stderr: parse_float(&f[13])?,
            trials: int(14)?,
            loss_db: parse_float(&f[15])?,
            prelog: parse_float(&f[16])?,
            error: f[17].into(),
        })
    }
}

/// Rows of one experiment, in sweep order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub scenario_id: String,
    pub config_sha256: String,
    pub seed: u64,
    pub columns: Vec<&'static str>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(scenario_id: impl Into<String>, config_sha256: impl Into<String>, seed: u64) -> Self {
        Self { scenario_id: scenario_id.into(), config_sha256: config_sha256.into(), seed, columns: COLUMNS.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn errors(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.is_error())
    }

    /// Rows of one series and metric, in sweep order.
    pub fn series<'a>(&'a self, series: &'a str, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.series == series && r.metric == metric)
    }

    fn header_line(&self) -> String {
        format!("# antsel scenario_id={} config_sha256={} seed={}", self.scenario_id, self.config_sha256, self.seed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut out = out;
        writeln!(out, "{}", self.header_line()).map_err(|e| ExperimentError::Io { path: "<csv>".into(), source: e })?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.fields())?;
        }
        w.flush().map_err(|e| ExperimentError::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        // writing to memory cannot fail
        let _ = self.write_csv(&mut buf);
        String::from_utf8(buf).unwrap_or_default()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default() + "\n"
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, ExperimentError> {
        let mut first = String::new();
        input.read_line(&mut first).map_err(|e| ExperimentError::Io { path: "<csv>".into(), source: e })?;
        let meta = first.trim().strip_prefix("# antsel ").ok_or_else(|| ExperimentError::Parse("missing metadata line".into()))?;
        let mut table = Self::new("", "", 0);
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("scenario_id", v)) => table.scenario_id = v.into(),
                Some(("config_sha256", v)) => table.config_sha256 = v.into(),
                Some(("seed", v)) => table.seed = v.parse().map_err(|_| ExperimentError::Parse(format!("bad seed '{v}'")))?,
                _ => return Err(ExperimentError::Parse(format!("unexpected metadata '{kv}'"))),
            }
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(COLUMNS) {
            return Err(ExperimentError::Parse(format!("unexpected columns {header:?}")));
        }
        for rec in r.records() {
            table.rows.push(ResultRow::from_fields(&rec?)?);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> ResultRow {
        ResultRow {
            scenario_id: "t".into(),
            series: "s, with comma".into(),
            kind: "SIMULATE".into(),
            metric: "sum_rate".into(),
            m: 4,
            n: 8,
            k: 2,
            eta_coh: 200,
            mode: "POWER_FF".into(),
            architecture: "FF_MIN_LOSS".into(),
            precoder: "DPC_EQ2".into(),
            loss_mode: "IGNORE".into(),
            mean_rate: v,
            stderr: v / 7.0,
            trials: 10,
            loss_db: 1.15,
            prelog: 0.645,
            error: String::new(),
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig(12345.678901234), "12345.6789");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(1.234567890123e-9), "1.23456789e-9");
        assert_eq!(format_sig(f64::NAN), "NaN");
    }

    #[test]
    fn csv_round_trip() {
        let mut t = ResultTable::new("t", "abc", 5);
        for v in [1.0 / 3.0, 17.123456789123, 0.0, 3e-12, f64::NAN] {
            t.push(row(v));
        }
        t.rows[4].error = "infeasible frame: \"quoted\"".into();
        let text = t.to_csv_string();
        assert!(text.starts_with("# antsel scenario_id=t config_sha256=abc seed=5\nscenario_id,series,"));
        let back = ResultTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!((back.scenario_id.as_str(), back.seed), ("t", 5));
        for (a, b) in back.rows.iter().zip(&t.rows) {
            let b = b.rounded();
            assert_eq!(a.series, b.series);
            assert_eq!(a.error, b.error);
            assert!(a.mean_rate == b.mean_rate || (a.mean_rate.is_nan() && b.mean_rate.is_nan()));
            assert_eq!(a.loss_db, b.loss_db);
        }
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn json_has_documented_shape() {
        let mut t = ResultTable::new("t", "abc", 5);
        t.push(row(f64::NAN));
        let v: serde_json::Value = serde_json::from_str(&t.to_json_string()).unwrap();
        assert_eq!(v["columns"].as_array().unwrap().len(), COLUMNS.len());
        let r = &v["rows"][0];
        for c in COLUMNS {
            assert!(r.get(c).is_some(), "{c}");
        }
        assert!(r["mean_rate"].is_null());
        assert_eq!(r["loss_db"], serde_json::json!(1.15));
    }
}
