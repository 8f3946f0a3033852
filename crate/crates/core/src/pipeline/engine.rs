//! Closed-loop simulation on the virtual clock.
//!
//! Source emission, filtering and packaging are instantaneous. Only the
//! processor consumes virtual time. Closed packages wait in an unbounded FIFO.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::settling_iterations;
use crate::error::{AsapError, Result};
use crate::events::{format_seconds, Event, EventPackage, PackageMetrics, Timestamp};
use crate::gamma::{Decision, GammaFilter};
use crate::packager::{Assembler, PackagerParams, TaylorTable};
use crate::rate::{RateBounds, RateTracker};

use super::clock::VirtualClock;
use super::scenario::{DeliveryPolicy, Scenario};
use super::source::source_generate;
use super::workload::Workload;

/// Relative band used for settling counts in run summaries.
pub const SETTLING_BAND: f64 = 0.01;

/// One per-event sample of the γ-filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSample {
    pub i: u64,
    pub t_us: Timestamp,
    pub r_i: f64,
    pub gamma_i: f64,
    pub kept: bool,
}

/// `γ̂` right after the feedback of package `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaHatSample {
    pub k: u64,
    pub t_k: f64,
    pub gamma_hat: f64,
}

/// Settling after one abrupt workload change.
#[derive(Clone, Debug, PartialEq)]
pub struct Settling {
    pub at_s: f64,
    /// First package processed under the new cost; `None` if none was.
    pub index: Option<usize>,
    /// End (exclusive) of the `t_k` segment belonging to this disturbance.
    pub segment_end: usize,
    pub nu: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub policy: String,
    pub events_in: u64,
    pub dropped: u64,
    pub packaged: u64,
    pub flushed: u64,
    pub packages: usize,
    pub flushed_packages: usize,
    pub mean_tau: f64,
    pub max_tau: f64,
    /// Packages waiting in the queue right after each enqueue, the new one included.
    pub queue_depth: Vec<usize>,
    pub settling: Vec<Settling>,
}

impl Summary {
    pub fn max_queue_depth(&self) -> usize {
        self.queue_depth.iter().copied().max().unwrap_or(0)
    }

    pub fn is_conserved(&self) -> bool {
        self.events_in == self.dropped + self.packaged + self.flushed
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "policy {}", self.policy);
        let _ = writeln!(s, "events_in {}", self.events_in);
        let _ = writeln!(s, "dropped {}", self.dropped);
        let _ = writeln!(s, "packaged {}", self.packaged);
        let _ = writeln!(s, "flushed {}", self.flushed);
        let _ = writeln!(s, "packages {}", self.packages);
        let _ = writeln!(s, "flushed_packages {}", self.flushed_packages);
        let _ = writeln!(s, "mean_tau_s {}", format_seconds(self.mean_tau));
        let _ = writeln!(s, "max_tau_s {}", format_seconds(self.max_tau));
        let _ = writeln!(s, "max_queue_depth {}", self.max_queue_depth());
        let depth: Vec<String> = self.queue_depth.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "queue_depth {}", depth.join(" "));
        for d in &self.settling {
            let idx = d.index.map_or("none".to_string(), |i| i.to_string());
            let nu = d.nu.map_or("undefined".to_string(), |n| n.to_string());
            let _ = writeln!(s, "disturbance at_s={} index={} segment_end={} nu={}", d.at_s, idx, d.segment_end, nu);
        }
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub metrics: Vec<PackageMetrics>,
    pub gamma_trace: Vec<GammaSample>,
    pub gamma_hat: Vec<GammaHatSample>,
    pub summary: Summary,
}

/// A closed package waiting for the processor; the events themselves are not kept.
#[derive(Clone, Debug)]
struct Queued {
    k: u64,
    s: usize,
    target: usize,
    flushed: bool,
    pi: f64,
    t_last_us: Timestamp,
    enqueued_ns: u64,
    ready_ns: u64,
    gamma_mean: f64,
    drops: u64,
}

struct Job {
    q: Queued,
    start_ns: u64,
    end_ns: u64,
    t_k: f64,
}

#[derive(Default)]
struct Tally {
    gamma_sum: f64,
    seen: u64,
    drops: u64,
}

enum Sizing {
    Exact,
    Taylor(TaylorTable<f64>),
}

struct Engine {
    policy: DeliveryPolicy,
    clock: VirtualClock,
    packager: PackagerParams<f64>,
    sizing: Sizing,
    gamma: GammaFilter<f64>,
    rate: RateTracker<f64>,
    bounds: RateBounds<f64>,
    assembler: Assembler,
    workload: Workload,
    transport_ns: u64,
    max_age_us: Option<u64>,
    trace_stride: Option<u64>,

    target: usize,
    tally: Tally,
    queue: VecDeque<Queued>,
    job: Option<Job>,
    free_ns: u64,
    next_window: u64,

    out: RunOutput,
}

fn us_to_ns(t: Timestamp) -> u64 {
    t.saturating_mul(1_000)
}

fn secs_to_ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}

impl Engine {
    fn new(sc: &Scenario) -> Result<Self> {
        sc.validate()?;
        let cfg = &sc.config;
        let packager = cfg.packager_params()?;
        let sizing = if cfg.use_taylor { Sizing::Taylor(cfg.taylor_table()?) } else { Sizing::Exact };
        let mut e = Engine {
            policy: sc.policy,
            clock: VirtualClock::new(),
            packager,
            sizing,
            // the filter stream is decorrelated from the source stream
            gamma: GammaFilter::random(cfg.gamma_params()?, sc.seed ^ 0x9e37_79b9_7f4a_7c15)?,
            rate: RateTracker::new(cfg.window_us)?,
            bounds: RateBounds::new(cfg.alpha)?,
            assembler: Assembler::with_max_age(cfg.max_package_age_us),
            workload: Workload::new(sc.workload.clone())?,
            transport_ns: (cfg.transport_us * 1e3).round() as u64,
            max_age_us: cfg.max_package_age_us,
            trace_stride: cfg.gamma_trace_stride,
            target: 0,
            tally: Tally::default(),
            queue: VecDeque::new(),
            job: None,
            free_ns: 0,
            next_window: 1,
            out: RunOutput::default(),
        };
        e.target = e.size_for(cfg.t_min)?;
        e.out.summary.policy = sc.policy.label();
        Ok(e)
    }

    fn size_for(&self, t_prev: f64) -> Result<usize> {
        match self.policy {
            DeliveryPolicy::FixedSize(n) => Ok(n),
            DeliveryPolicy::FixedRate(_) => Ok(0),
            DeliveryPolicy::Asap => match &self.sizing {
                Sizing::Exact => Ok(self.packager.target_size(t_prev)),
                Sizing::Taylor(table) => self.packager.target_size_with(table, t_prev),
            },
        }
    }

    fn window_boundary_ns(&self, j: u64) -> u64 {
        match self.policy {
            DeliveryPolicy::FixedRate(hz) => secs_to_ns(j as f64 / hz),
            _ => u64::MAX,
        }
    }

    /// Runs the processor up to `now_ns`: completions and dispatches at or before `now_ns`.
    fn advance(&mut self, now_ns: u64) -> Result<()> {
        loop {
            if let Some(job) = &self.job {
                if job.end_ns > now_ns {
                    return Ok(());
                }
                let job = self.job.take().expect("job present");
                self.complete(job)?;
                continue;
            }
            let Some(front) = self.queue.front() else { return Ok(()) };
            let start = front.ready_ns.max(self.free_ns);
            if start > now_ns {
                return Ok(());
            }
            let q = self.queue.pop_front().expect("queue non-empty");
            self.clock.advance_to(start);
            let t_k = self.workload.simulate_cost(q.s, start)?;
            let end_ns = start + secs_to_ns(t_k).max(1);
            self.job = Some(Job { q, start_ns: start, end_ns, t_k });
        }
    }

    fn complete(&mut self, job: Job) -> Result<()> {
        self.clock.advance_to(job.end_ns);
        self.free_ns = job.end_ns;
        let q = job.q;
        let tau = (job.start_ns - q.enqueued_ns) as f64 * 1e-9;
        self.out.metrics.push(PackageMetrics {
            k: q.k,
            s_k: q.s,
            t_k: job.t_k,
            tau_k: tau,
            pi_k: q.pi,
            gamma_mean: q.gamma_mean,
            drop_count: q.drops,
            target_size: q.target,
            flushed: q.flushed,
            t_last_us: q.t_last_us,
            enqueued_ns: q.enqueued_ns,
            started_ns: job.start_ns,
        });
        if self.policy == DeliveryPolicy::Asap {
            let gamma_hat = self.gamma.on_feedback(job.t_k);
            self.out.gamma_hat.push(GammaHatSample { k: q.k, t_k: job.t_k, gamma_hat });
            self.target = self.size_for(job.t_k)?;
        }
        Ok(())
    }

    fn enqueue(&mut self, p: EventPackage, at_ns: u64) -> Result<()> {
        let at_ns = at_ns.max(us_to_ns(p.t_last()));
        self.advance(at_ns)?;
        self.clock.advance_to(at_ns);
        let tally = std::mem::take(&mut self.tally);
        let summary = &mut self.out.summary;
        if p.is_flush() {
            summary.flushed += p.len() as u64;
            summary.flushed_packages += 1;
        } else {
            summary.packaged += p.len() as u64;
        }
        self.queue.push_back(Queued {
            k: p.k,
            s: p.len(),
            target: p.target_size,
            flushed: p.is_flush(),
            pi: p.building_time(),
            t_last_us: p.t_last(),
            enqueued_ns: at_ns,
            ready_ns: at_ns + self.transport_ns,
            gamma_mean: if tally.seen > 0 { tally.gamma_sum / tally.seen as f64 } else { 1.0 },
            drops: tally.drops,
        });
        summary.queue_depth.push(self.queue.len());
        self.advance(at_ns)
    }

    fn close_windows_until(&mut self, t_ns: u64) -> Result<()> {
        loop {
            let b = self.window_boundary_ns(self.next_window);
            if b > t_ns {
                return Ok(());
            }
            self.next_window += 1;
            if let Some(p) = self.assembler.close_window() {
                self.enqueue(p, b)?;
            }
        }
    }

    fn on_event(&mut self, i: u64, e: Event) -> Result<()> {
        let t_ns = us_to_ns(e.t);
        self.close_windows_until(t_ns)?;
        if let Some(max_age) = self.max_age_us {
            if let Some(p) = self.assembler.expire(e.t) {
                let deadline = us_to_ns(p.t_first() + max_age);
                self.enqueue(p, deadline)?;
            }
        }
        self.advance(t_ns)?;
        self.clock.advance_to(t_ns);
        self.out.summary.events_in += 1;

        let r = self.rate.observe(e.t)?;
        let (gamma, decision) = match self.policy {
            DeliveryPolicy::Asap => {
                let (lo, hi) = self.bounds.update(r);
                self.gamma.process(&e, r, lo, hi)
            }
            _ => (1.0, Decision::Keep),
        };
        self.tally.gamma_sum += gamma;
        self.tally.seen += 1;
        if let Some(stride) = self.trace_stride {
            if i % stride == 0 {
                self.out.gamma_trace.push(GammaSample { i, t_us: e.t, r_i: r, gamma_i: gamma, kept: decision.is_keep() });
            }
        }
        if !decision.is_keep() {
            self.tally.drops += 1;
            self.out.summary.dropped += 1;
            return Ok(());
        }
        let closed = match self.policy {
            DeliveryPolicy::FixedRate(_) => {
                self.assembler.push_unbounded(e);
                None
            }
            _ => self.assembler.push_event(e, self.target),
        };
        if let Some(p) = closed {
            self.enqueue(p, t_ns)?;
        }
        Ok(())
    }

    fn finish(mut self, end_ns: u64) -> Result<RunOutput> {
        self.close_windows_until(end_ns)?;
        if let Some(p) = self.assembler.flush() {
            self.enqueue(p, end_ns)?;
        }
        self.advance(u64::MAX)?;
        let disturbances = self.workload.disturbances();
        let mut out = self.out;
        out.metrics.sort_by_key(|m| m.k);
        let s = &mut out.summary;
        s.packages = out.metrics.len();
        if !out.metrics.is_empty() {
            let taus = out.metrics.iter().map(|m| m.tau_k);
            s.mean_tau = taus.clone().sum::<f64>() / out.metrics.len() as f64;
            s.max_tau = taus.fold(0.0, f64::max);
        }
        s.settling = settling_report(&out.metrics, &disturbances);
        Ok(out)
    }
}

/// Splits the `t_k` series at each disturbance and measures ν per segment.
///
/// A disturbance at `at_s` starts at the first package whose processing began at
/// or after `at_s`. Trailing flush packages are excluded from the last segment.
pub fn settling_report(metrics: &[PackageMetrics], disturbances: &[f64]) -> Vec<Settling> {
    let series: Vec<f64> = metrics.iter().map(|m| m.t_k).collect();
    let tail_end = metrics.len() - metrics.iter().rev().take_while(|m| m.flushed).count();
    let starts: Vec<Option<usize>> = disturbances
        .iter()
        .map(|&at| {
            let at_ns = secs_to_ns(at);
            metrics.iter().position(|m| m.started_ns >= at_ns).filter(|&i| i < tail_end)
        })
        .collect();
    disturbances
        .iter()
        .enumerate()
        .map(|(j, &at_s)| {
            let index = starts[j];
            let segment_end = starts[j + 1..].iter().flatten().next().copied().unwrap_or(tail_end);
            let nu = index.and_then(|d| settling_iterations(&series[..segment_end], d, SETTLING_BAND).ok());
            Settling { at_s, index, segment_end, nu }
        })
        .collect()
}

/// Runs `scenario` to completion on the virtual clock.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let mut engine = Engine::new(scenario)?;
    let mut last_ns = 0;
    for (i, e) in source_generate(&scenario.source, scenario.duration_s, scenario.seed)?.enumerate() {
        let e = e?;
        last_ns = us_to_ns(e.t);
        engine.on_event(i as u64, e)?;
    }
    engine.finish(last_ns.max(secs_to_ns(scenario.duration_s)))
}

pub const GAMMA_TRACE_HEADER: [&str; 5] = ["i", "t_us", "r_i", "gamma_i", "kept"];

pub fn write_gamma_trace<P: AsRef<Path>>(samples: &[GammaSample], path: P) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(GAMMA_TRACE_HEADER)?;
    for s in samples {
        w.write_record([
            s.i.to_string(),
            s.t_us.to_string(),
            format!("{:.6}", s.r_i),
            format!("{:.9}", s.gamma_i),
            u8::from(s.kept).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<P: AsRef<Path>>(summary: &Summary, path: P) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(summary.to_text().as_bytes())?;
    f.flush().map_err(AsapError::from)
}
