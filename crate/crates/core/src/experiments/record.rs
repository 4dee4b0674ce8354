use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,t,phi,gamma,p,method,value,stat_err,N,mu,seed";

/// One output point. Columns that do not apply to an experiment are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub t: Option<f64>,
    pub phi: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<usize>,
    pub method: String,
    pub value: f64,
    pub stat_err: Option<f64>,
    #[serde(rename = "N")]
    pub samples: Option<usize>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
}

fn cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn csv_line(&self) -> String {
        [
            self.experiment.clone(),
            cell(&self.t),
            cell(&self.phi),
            cell(&self.gamma),
            cell(&self.p),
            self.method.clone(),
            self.value.to_string(),
            cell(&self.stat_err),
            cell(&self.samples),
            cell(&self.mu),
            cell(&self.seed),
        ]
        .join(",")
    }
}

/// Rows of one run plus the provenance needed to regenerate them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Mean-square error against the reference curve, keyed by
    /// `method` or `method:<curve>`.
    pub mse: BTreeMap<String, f64>,
    pub rows: Vec<Row>,
}

/// The sidecar omits the rows, which live in the CSV.
#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    mse: &'a BTreeMap<String, f64>,
    rows: usize,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig, rows: Vec<Row>, mse: BTreeMap<String, f64>) -> Self {
        Self {
            experiment: config.experiment.to_string(),
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            mse,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.csv_line());
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        let s = Sidecar {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            version: &self.version,
            config: &self.config,
            mse: &self.mse,
            rows: self.rows.len(),
        };
        serde_json::to_string_pretty(&s).expect("sidecar serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Rows whose method matches.
    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }
}

/// `(1/M) Σ (y_i − f_i)²`.
pub fn mse(series: &[f64], reference: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("MSE of an empty series".into()));
    }
    if series.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: series.len(),
        });
    }
    let sum: f64 = series
        .iter()
        .zip(reference)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    Ok(sum / series.len() as f64)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two or more matched points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// Sample standard deviation; zero for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mse(&[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(mse(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.3)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.3).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn csv_line_leaves_unused_columns_empty() {
        let r = Row {
            experiment: "fig4".into(),
            t: Some(1.0),
            phi: None,
            gamma: None,
            p: Some(3),
            method: "fd".into(),
            value: 0.5,
            stat_err: Some(0.1),
            samples: None,
            mu: None,
            seed: Some(9),
        };
        assert_eq!(r.csv_line(), "fig4,1,,,3,fd,0.5,0.1,,,9");
        assert_eq!(CSV_HEADER.split(',').count(), r.csv_line().split(',').count());
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(sample_std(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(sample_std(&[2.0]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
