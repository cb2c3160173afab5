//! Machine-readable reports. Floats are written with 17 significant digits
//! so a parsed report reproduces every value bit for bit.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::detector::ExistenceReport;
use crate::error::Result;
use crate::estimator::CmleFit;
use crate::simulate::FrequencyReport;

pub const SCHEMA_VERSION: &str = "1";
pub const SCHEMA_JSON: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub tol: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliReport {
    pub tool: String,
    pub version: String,
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub options: ReportOptions,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub existence: Option<ExistenceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<CmleFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<FrequencyReport>,
}

impl CliReport {
    pub fn new(command: &str, options: ReportOptions) -> Self {
        CliReport {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            schema_version: SCHEMA_VERSION.to_owned(),
            command: command.to_owned(),
            input: None,
            options,
            exit_code: 0,
            message: None,
            existence: None,
            fit: None,
            simulation: None,
        }
    }
}

struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| crate::Error::contract(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| crate::Error::contract(format!("invalid report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json(&vec![0.1, -2.5, 1e-300, 0.0]).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000001e-1,-2.5000000000000000e0,1.0000000000000000e-300,0.0000000000000000e0]"
        );
        let back: Vec<f64> = from_json(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5, 1e-300, 0.0]);
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_json(&vec![f64::INFINITY]).unwrap();
        assert_eq!(s, "[null]");
    }
}
