use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockMode {
    Virtual,
    Wall,
}

/// Simulation time in nanoseconds since the stream epoch.
///
/// In virtual mode time only moves through [`advance_to`](Self::advance_to);
/// in wall mode [`now_ns`](Self::now_ns) reads the elapsed real time.
#[derive(Clone, Debug)]
pub struct VirtualClock {
    mode: ClockMode,
    now_ns: u64,
    origin: Instant,
}

impl Default for VirtualClock {
    fn default() -> Self {
        VirtualClock::new()
    }
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock { mode: ClockMode::Virtual, now_ns: 0, origin: Instant::now() }
    }

    pub fn wall() -> Self {
        VirtualClock { mode: ClockMode::Wall, now_ns: 0, origin: Instant::now() }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn now_ns(&self) -> u64 {
        match self.mode {
            ClockMode::Virtual => self.now_ns,
            ClockMode::Wall => self.origin.elapsed().as_nanos() as u64,
        }
    }

    pub fn now_us(&self) -> u64 {
        self.now_ns() / 1_000
    }

    /// Moves virtual time forward to `t_ns`; earlier instants leave the clock unchanged.
    pub fn advance_to(&mut self, t_ns: u64) -> u64 {
        debug_assert_eq!(self.mode, ClockMode::Virtual, "wall clock cannot be advanced");
        self.now_ns = self.now_ns.max(t_ns);
        self.now_ns
    }

    pub fn advance_by(&mut self, dt_ns: u64) -> u64 {
        let t = self.now_ns.saturating_add(dt_ns);
        self.advance_to(t)
    }
}
