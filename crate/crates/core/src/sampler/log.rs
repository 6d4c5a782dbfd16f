//! JSON-lines energy log: one [`PowerSample`] object per line, append-only.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::{PowerSample, SamplerError};
use crate::component::{Component, PerComponent};

pub struct LogWriter {
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn append(path: &Path) -> Result<Self, SamplerError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LogWriter { out: BufWriter::new(file) })
    }

    /// Writes one tick worth of samples and flushes.
    pub fn write_tick(&mut self, samples: &[PowerSample]) -> Result<(), SamplerError> {
        for s in samples {
            serde_json::to_writer(&mut self.out, s)?;
            self.out.write_all(b"\n")?;
        }
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_log(path: &Path) -> Result<Vec<PowerSample>, SamplerError> {
    let mut tail = LogTail::new(path);
    tail.refresh()?;
    Ok(tail.into_samples())
}

/// Incremental reader over a log that another thread or process appends to.
/// Keeps per-component series in memory and only parses new complete lines.
#[derive(Debug)]
pub struct LogTail {
    path: PathBuf,
    offset: u64,
    partial: String,
    series: PerComponent<Vec<PowerSample>>,
}

impl LogTail {
    pub fn new(path: &Path) -> Self {
        LogTail {
            path: path.to_path_buf(),
            offset: 0,
            partial: String::new(),
            series: PerComponent::default(),
        }
    }

    /// Reads lines appended since the last refresh. A missing file reads as empty.
    pub fn refresh(&mut self) -> Result<usize, SamplerError> {
        let mut file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e.into()),
        };
        file.seek(SeekFrom::Start(self.offset))?;
        let mut chunk = String::new();
        let read = BufReader::new(file).read_to_string(&mut chunk)?;
        self.offset += read as u64;
        self.partial.push_str(&chunk);

        let mut added = 0;
        let complete = match self.partial.rfind('\n') {
            Some(i) => i + 1,
            None => return Ok(0),
        };
        let buffered: String = self.partial.drain(..complete).collect();
        for line in buffered.as_bytes().lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let sample: PowerSample = serde_json::from_str(&line)?;
            self.series.get_mut(sample.component).push(sample);
            added += 1;
        }
        Ok(added)
    }

    pub fn series(&self, component: Component) -> &[PowerSample] {
        self.series.get(component)
    }

    /// The last `n` samples of a component (fewer if the log is shorter).
    pub fn last(&self, component: Component, n: usize) -> &[PowerSample] {
        let s = self.series.get(component);
        &s[s.len().saturating_sub(n)..]
    }

    /// Samples of a component inside `[t0, t1)`.
    pub fn slice(&self, component: Component, t0: i64, t1: i64) -> &[PowerSample] {
        let s = self.series.get(component);
        let lo = s.partition_point(|x| x.t < t0);
        let hi = s.partition_point(|x| x.t < t1).max(lo);
        &s[lo..hi]
    }

    /// Samples of a component with `t <= now`, the last `n` of them.
    pub fn last_before(&self, component: Component, now: i64, n: usize) -> &[PowerSample] {
        let s = self.series.get(component);
        let hi = s.partition_point(|x| x.t <= now);
        &s[hi.saturating_sub(n)..hi]
    }

    pub fn latest_temperature(&self, component: Component) -> Option<f64> {
        self.series.get(component).iter().rev().find_map(|s| s.temp_c)
    }

    pub fn latest_t(&self) -> Option<i64> {
        Component::ALL
            .iter()
            .filter_map(|c| self.series.get(*c).last().map(|s| s.t))
            .max()
    }

    pub fn len(&self) -> usize {
        Component::ALL.iter().map(|c| self.series.get(*c).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_samples(self) -> Vec<PowerSample> {
        let mut all: Vec<PowerSample> = Component::ALL
            .iter()
            .flat_map(|c| self.series.get(*c).iter().cloned())
            .collect();
        all.sort_by_key(|s| (s.t, s.component));
        all
    }
}
