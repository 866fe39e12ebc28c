//! CSV and versioned JSON persistence of simulation results.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SimConfig, SimResult};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub config: SimConfig,
    pub results: Vec<SimResult>,
    /// `(R, gap_db)` at the configured target FER, when the sweep brackets it.
    pub gaps: Vec<(f64, f64)>,
}

pub fn write_csv(results: &[SimResult], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<SimResult>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn write_json(report: &SimReport, out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, report).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_json(input: impl Read) -> Result<SimReport> {
    let report: SimReport =
        serde_json::from_reader(input).map_err(|e| Error::Parse(e.to_string()))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported schema version {}",
            report.schema_version
        )));
    }
    Ok(report)
}
