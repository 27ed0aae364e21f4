use std::fmt::Write as _;

use serde::Serialize;

/// One line of a metrics report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub fixture: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl MetricRow {
    /// A row that passes when `measured <= threshold`.
    pub fn at_most(metric: &str, fixture: &str, measured: f64, threshold: f64) -> Self {
        MetricRow {
            metric: metric.to_string(),
            fixture: fixture.to_string(),
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }

    /// A row that passes when `measured >= threshold`.
    pub fn at_least(metric: &str, fixture: &str, measured: f64, threshold: f64) -> Self {
        MetricRow {
            pass: measured >= threshold,
            ..MetricRow::at_most(metric, fixture, measured, threshold)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
}

impl MetricsReport {
    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV with header `metric,fixture,measured,threshold,pass`. Fields
    /// containing commas or quotes are quoted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,fixture,measured,threshold,pass\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&r.metric),
                csv_field(&r.fixture),
                r.measured,
                r.threshold,
                r.pass
            )
            .unwrap();
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
