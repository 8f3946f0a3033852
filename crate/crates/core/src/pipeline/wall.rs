//! Real-time adapter: the same loop against the wall clock, with a
//! user-supplied processor running on its own thread.
//!
//! The ingest stage (rate, γ-filter, packager) runs on the calling thread and
//! paces events by their timestamps. Packages cross to the processor thread
//! over a channel. The measured processing time is published through atomics
//! and read by the ingest stage before each event.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{AsapError, Result};
use crate::events::{Event, EventPackage, PackageMetrics};
use crate::gamma::GammaFilter;
use crate::packager::Assembler;
use crate::rate::{RateBounds, RateTracker};

use super::clock::VirtualClock;
use super::scenario::AsapConfig;

#[derive(Clone, Debug, Default)]
pub struct WallReport {
    pub metrics: Vec<PackageMetrics>,
    pub events_in: u64,
    pub dropped: u64,
}

/// Latest processing time, shared between the processor and ingest stages.
#[derive(Default)]
struct Feedback {
    t_bits: AtomicU64,
    generation: AtomicU64,
}

impl Feedback {
    fn publish(&self, t: f64) {
        self.t_bits.store(t.to_bits(), Ordering::Relaxed);
        self.generation.fetch_add(1, Ordering::Release);
    }

    fn read(&self) -> (u64, f64) {
        let g = self.generation.load(Ordering::Acquire);
        (g, f64::from_bits(self.t_bits.load(Ordering::Relaxed)))
    }
}

struct Delivery {
    package: EventPackage,
    enqueued: Instant,
    drops: u64,
    gamma_mean: f64,
}

/// Runs the adaptive loop in real time. `process` is called once per package.
pub fn run_wall<I, P>(events: I, config: &AsapConfig, seed: u64, mut process: P) -> Result<WallReport>
where
    I: IntoIterator<Item = Result<Event>>,
    P: FnMut(&EventPackage) + Send + 'static,
{
    config.validate()?;
    let packager = config.packager_params()?;
    let mut gamma = GammaFilter::random(config.gamma_params()?, seed)?;
    let mut rate = RateTracker::<f64>::new(config.window_us)?;
    let mut bounds = RateBounds::new(config.alpha)?;
    let mut assembler = Assembler::with_max_age(config.max_package_age_us);
    let mut target = packager.target_size(config.t_min);

    let clock = VirtualClock::wall();
    let origin = Instant::now();
    let feedback = Arc::new(Feedback::default());
    let (tx, rx) = mpsc::channel::<Delivery>();

    let fb = Arc::clone(&feedback);
    let worker = thread::spawn(move || {
        let mut metrics = Vec::new();
        for d in rx {
            let started = Instant::now();
            process(&d.package);
            let t_k = started.elapsed().as_secs_f64();
            fb.publish(t_k);
            metrics.push(PackageMetrics {
                k: d.package.k,
                s_k: d.package.len(),
                t_k,
                tau_k: started.duration_since(d.enqueued).as_secs_f64(),
                pi_k: d.package.building_time(),
                gamma_mean: d.gamma_mean,
                drop_count: d.drops,
                target_size: d.package.target_size,
                flushed: d.package.is_flush(),
                t_last_us: d.package.t_last(),
                enqueued_ns: d.enqueued.duration_since(origin).as_nanos() as u64,
                started_ns: started.duration_since(origin).as_nanos() as u64,
            });
        }
        metrics
    });

    let mut report = WallReport::default();
    let mut seen_generation = 0;
    let (mut gamma_sum, mut seen, mut drops) = (0.0, 0u64, 0u64);
    let send = |package: EventPackage, drops: u64, gamma_mean: f64| {
        tx.send(Delivery { package, enqueued: Instant::now(), drops, gamma_mean })
            .map_err(|_| AsapError::Scenario("processor thread stopped".into()))
    };

    for e in events {
        let e = e?;
        let now = clock.now_us();
        if e.t > now {
            thread::sleep(Duration::from_micros(e.t - now));
        }
        let (generation, t_prev) = feedback.read();
        if generation != seen_generation {
            seen_generation = generation;
            gamma.on_feedback(t_prev);
            target = packager.target_size(t_prev);
        }
        if let Some(p) = assembler.expire(e.t) {
            send(p, std::mem::take(&mut drops), gamma_sum / seen.max(1) as f64)?;
            (gamma_sum, seen) = (0.0, 0);
        }
        report.events_in += 1;
        let r = rate.observe(e.t)?;
        let (lo, hi) = bounds.update(r);
        let (g, decision) = gamma.process(&e, r, lo, hi);
        gamma_sum += g;
        seen += 1;
        if !decision.is_keep() {
            drops += 1;
            report.dropped += 1;
            continue;
        }
        if let Some(p) = assembler.push_event(e, target) {
            send(p, std::mem::take(&mut drops), gamma_sum / seen as f64)?;
            (gamma_sum, seen) = (0.0, 0);
        }
    }
    if let Some(p) = assembler.flush() {
        send(p, drops, gamma_sum / seen.max(1) as f64)?;
    }
    drop(tx);
    report.metrics = worker.join().map_err(|_| AsapError::Scenario("processor thread panicked".into()))?;
    Ok(report)
}
