//! CSV traces of raw channel readings used by the replay backend.
//!
//! Format: a `t_ms,channel,value` header followed by rows sorted by time.
//! Lines starting with `#` are ignored.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SamplerError;

/// A raw reading channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Cumulative CPU package energy, microjoules.
    CpuUj,
    /// Cumulative DRAM energy, microjoules.
    RamUj,
    /// Instantaneous GPU board power, watts.
    GpuW,
    CpuTempC,
    GpuTempC,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::CpuUj,
        Channel::RamUj,
        Channel::GpuW,
        Channel::CpuTempC,
        Channel::GpuTempC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::CpuUj => "cpu_uj",
            Channel::RamUj => "ram_uj",
            Channel::GpuW => "gpu_w",
            Channel::CpuTempC => "cpu_temp_c",
            Channel::GpuTempC => "gpu_temp_c",
        }
    }

    pub fn is_counter(self) -> bool {
        matches!(self, Channel::CpuUj | Channel::RamUj)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| SamplerError::Trace(format!("unknown channel `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t_ms: i64,
    pub channel: Channel,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceFile {
    rows: Vec<TraceRow>,
}

#[derive(Deserialize)]
struct RawRow {
    t_ms: i64,
    channel: String,
    value: f64,
}

impl TraceFile {
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<Self, SamplerError> {
        if let Some(w) = rows.windows(2).find(|w| w[1].t_ms < w[0].t_ms) {
            return Err(SamplerError::Trace(format!(
                "rows not sorted by timestamp: {} after {}",
                w[1].t_ms, w[0].t_ms
            )));
        }
        Ok(TraceFile { rows })
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self, SamplerError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| SamplerError::Trace(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["t_ms", "channel", "value"] {
            return Err(SamplerError::Trace(format!(
                "expected header `t_ms,channel,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<RawRow>().enumerate() {
            let raw = rec.map_err(|e| SamplerError::Trace(format!("row {}: {e}", i + 1)))?;
            rows.push(TraceRow {
                t_ms: raw.t_ms,
                channel: raw.channel.parse()?,
                value: raw.value,
            });
        }
        Self::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self, SamplerError> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), SamplerError> {
        writeln!(out, "t_ms,channel,value")?;
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.t_ms, row.channel, row.value)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Channels that occur at least once.
    pub fn channels(&self) -> Vec<Channel> {
        let mut seen: Vec<Channel> = self.rows.iter().map(|r| r.channel).collect();
        seen.sort();
        seen.dedup();
        seen
    }

    pub fn has_channel(&self, channel: Channel) -> bool {
        self.rows.iter().any(|r| r.channel == channel)
    }

    /// Rows grouped by timestamp, in order.
    pub fn ticks(&self) -> Vec<(i64, Vec<(Channel, f64)>)> {
        let mut out: Vec<(i64, Vec<(Channel, f64)>)> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some((t, readings)) if *t == row.t_ms => readings.push((row.channel, row.value)),
                _ => out.push((row.t_ms, vec![(row.channel, row.value)])),
            }
        }
        out
    }
}
