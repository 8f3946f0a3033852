//! Stream domain types and the CSV trace / metrics formats.
//!
//! Timestamps are integer microseconds since the stream epoch. Every derived
//! duration (processing, delivery, building, latency) is reported in seconds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{AsapError, Result};

/// Microseconds since the stream epoch.
pub type Timestamp = u64;

pub const MICROS_PER_SECOND: f64 = 1e6;

#[inline]
pub fn micros_to_secs(us: u64) -> f64 {
    us as f64 / MICROS_PER_SECOND
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }
}

/// A single pixel brightness change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: Timestamp,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: Timestamp, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity }
    }
}

/// How a package was closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Reached its target size (or the fixed-rate boundary for time-windowed packaging).
    Target,
    /// End of stream or maximum package age; excluded from steady-state statistics.
    Flush,
}

/// A closed batch of consecutive events.
#[derive(Clone, Debug, PartialEq)]
pub struct EventPackage {
    pub k: u64,
    events: Vec<Event>,
    pub target_size: usize,
    pub closure: Closure,
}

impl EventPackage {
    /// Builds a package; `events` must be non-empty and sorted by timestamp.
    pub fn new(k: u64, events: Vec<Event>, target_size: usize, closure: Closure) -> Result<Self> {
        if events.is_empty() {
            return Err(AsapError::InvalidParams("event package must not be empty".into()));
        }
        if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
            return Err(AsapError::Ordering {
                index: (i + 1) as u64,
                previous: events[i].t,
                current: events[i + 1].t,
            });
        }
        Ok(EventPackage { k, events, target_size, closure })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_first(&self) -> Timestamp {
        self.events[0].t
    }

    pub fn t_last(&self) -> Timestamp {
        self.events[self.events.len() - 1].t
    }

    /// Building time in seconds.
    pub fn building_time(&self) -> f64 {
        micros_to_secs(self.t_last() - self.t_first())
    }

    pub fn is_flush(&self) -> bool {
        self.closure == Closure::Flush
    }
}

/// Per-package record produced by the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PackageMetrics {
    pub k: u64,
    pub s_k: usize,
    /// Processing time, seconds.
    pub t_k: f64,
    /// Delivery time, seconds.
    pub tau_k: f64,
    /// Building time, seconds.
    pub pi_k: f64,
    pub gamma_mean: f64,
    pub drop_count: u64,
    pub target_size: usize,
    pub flushed: bool,
    pub t_last_us: Timestamp,
    /// Virtual instants in nanoseconds.
    pub enqueued_ns: u64,
    pub started_ns: u64,
}

impl PackageMetrics {
    /// Latency: delivery time plus building time.
    pub fn lambda_k(&self) -> f64 {
        self.tau_k + self.pi_k
    }
}

pub const METRICS_HEADER: [&str; 8] =
    ["k", "s_k", "t_k", "tau_k", "pi_k", "lambda_k", "gamma_mean", "drop_count"];

/// Seconds with 13 significant digits in scientific notation.
pub fn format_seconds(x: f64) -> String {
    format!("{:.12e}", x)
}

/// Writes the metrics CSV, ordered by `k`.
pub fn write_metrics<P: AsRef<Path>>(records: &[PackageMetrics], path: P) -> Result<()> {
    let file = File::create(path)?;
    write_metrics_to(records, BufWriter::new(file))
}

pub fn write_metrics_to<W: Write>(records: &[PackageMetrics], out: W) -> Result<()> {
    let mut sorted: Vec<&PackageMetrics> = records.iter().collect();
    sorted.sort_by_key(|r| r.k);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in sorted {
        w.write_record([
            r.k.to_string(),
            r.s_k.to_string(),
            format_seconds(r.t_k),
            format_seconds(r.tau_k),
            format_seconds(r.pi_k),
            format_seconds(r.lambda_k()),
            format!("{:.9}", r.gamma_mean),
            r.drop_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a metrics CSV read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub k: u64,
    pub s_k: usize,
    pub t_k: f64,
    pub tau_k: f64,
    pub pi_k: f64,
    pub lambda_k: f64,
    pub gamma_mean: f64,
    pub drop_count: u64,
}

pub fn read_metrics<P: AsRef<Path>>(path: P) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let field = |j: usize| -> Result<&str> {
            rec.get(j).ok_or_else(|| AsapError::Parse { line, message: format!("missing column {j}") })
        };
        let num = |j: usize| -> Result<f64> {
            field(j)?.parse().map_err(|e| AsapError::Parse { line, message: format!("column {j}: {e}") })
        };
        let int = |j: usize| -> Result<u64> {
            field(j)?.parse().map_err(|e| AsapError::Parse { line, message: format!("column {j}: {e}") })
        };
        rows.push(MetricsRow {
            k: int(0)?,
            s_k: int(1)? as usize,
            t_k: num(2)?,
            tau_k: num(3)?,
            pi_k: num(4)?,
            lambda_k: num(5)?,
            gamma_mean: num(6)?,
            drop_count: int(7)?,
        });
    }
    Ok(rows)
}

/// Lazy reader over a `t_us,x,y,p` trace.
pub struct TraceReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    line: u64,
    index: u64,
    last_t: Option<Timestamp>,
    failed: bool,
}

/// Opens a trace file for lazy reading.
pub fn read_trace<P: AsRef<Path>>(path: P) -> Result<TraceReader<BufReader<File>>> {
    let file = File::open(path)?;
    Ok(TraceReader::new(BufReader::new(file)))
}

impl<R: Read> TraceReader<R> {
    pub fn new(input: R) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        TraceReader { records: reader.into_records(), line: 0, index: 0, last_t: None, failed: false }
    }

    fn parse(&mut self, rec: &csv::StringRecord) -> Result<Event> {
        let line = self.line;
        let bad = |message: String| AsapError::Parse { line, message };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let t: u64 = rec[0].parse().map_err(|e| bad(format!("timestamp {:?}: {e}", &rec[0])))?;
        let x: u16 = rec[1].parse().map_err(|e| bad(format!("x {:?}: {e}", &rec[1])))?;
        let y: u16 = rec[2].parse().map_err(|e| bad(format!("y {:?}: {e}", &rec[2])))?;
        let p = rec[3]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| bad(format!("polarity {:?} is not 0 or 1", &rec[3])))?;
        Ok(Event::new(t, x, y, p))
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let rec = match self.records.next()? {
                Ok(rec) => rec,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            self.line = rec.position().map(|p| p.line()).unwrap_or(self.line + 1);
            let first = rec.get(0).unwrap_or("");
            if rec.len() == 1 && first.is_empty() {
                continue;
            }
            if self.line == 1 && !first.starts_with(|c: char| c.is_ascii_digit()) {
                continue;
            }
            let ev = match self.parse(&rec) {
                Ok(ev) => ev,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            if let Some(prev) = self.last_t {
                if ev.t < prev {
                    self.failed = true;
                    return Some(Err(AsapError::Ordering { index: self.index, previous: prev, current: ev.t }));
                }
            }
            self.last_t = Some(ev.t);
            self.index += 1;
            return Some(Ok(ev));
        }
    }
}

pub const TRACE_HEADER: &str = "t_us,x,y,p";

pub fn write_trace<P: AsRef<Path>>(events: &[Event], path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.polarity.bit())?;
    }
    w.flush()?;
    Ok(())
}
