use crate::events::{Closure, Event, EventPackage, Timestamp};

/// Buffers filtered events into packages.
///
/// The target size is read when a package opens (its first event) and stays
/// fixed until the package closes.
#[derive(Clone, Debug, Default)]
pub struct Assembler {
    next_k: u64,
    buffer: Vec<Event>,
    target: usize,
    max_age_us: Option<u64>,
}

impl Assembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Packages older than `max_age_us` are flush-closed by [`expire`](Self::expire).
    pub fn with_max_age(max_age_us: Option<u64>) -> Self {
        Assembler { max_age_us, ..Self::default() }
    }

    pub fn is_open(&self) -> bool {
        !self.buffer.is_empty()
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Target of the open package.
    pub fn target(&self) -> Option<usize> {
        self.is_open().then_some(self.target)
    }

    pub fn next_k(&self) -> u64 {
        self.next_k
    }

    /// Appends `event`; returns the package once it holds `target` events.
    /// `current_target` only matters when `event` opens a new package.
    pub fn push_event(&mut self, event: Event, current_target: usize) -> Option<EventPackage> {
        if self.buffer.is_empty() {
            self.target = current_target.max(1);
        }
        self.buffer.push(event);
        (self.buffer.len() >= self.target).then(|| self.close(Closure::Target))
    }

    /// Appends without any size-based closure (time-windowed packaging).
    pub fn push_unbounded(&mut self, event: Event) {
        if self.buffer.is_empty() {
            self.target = 0;
        }
        self.buffer.push(event);
    }

    /// Closes whatever is buffered as a regular package.
    pub fn close_window(&mut self) -> Option<EventPackage> {
        self.is_open().then(|| self.close(Closure::Target))
    }

    /// Closes a partial package at end of stream.
    pub fn flush(&mut self) -> Option<EventPackage> {
        self.is_open().then(|| self.close(Closure::Flush))
    }

    /// Flush-closes the open package if its oldest event is at least `max_age` old at `now`.
    pub fn expire(&mut self, now: Timestamp) -> Option<EventPackage> {
        let max_age = self.max_age_us?;
        let first = self.buffer.first()?.t;
        (now.saturating_sub(first) >= max_age).then(|| self.close(Closure::Flush))
    }

    fn close(&mut self, closure: Closure) -> EventPackage {
        let events = std::mem::take(&mut self.buffer);
        let k = self.next_k;
        self.next_k += 1;
        EventPackage::new(k, events, self.target, closure).expect("assembler receives ordered events")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;

    fn ev(t: u64) -> Event {
        Event::new(t, 0, 0, Polarity::Positive)
    }

    #[test]
    fn target_one_gives_singletons() {
        let mut a = Assembler::new();
        for t in 0..5 {
            let p = a.push_event(ev(t), 1).expect("closes every event");
            assert_eq!(p.k, t);
            assert_eq!(p.events(), &[ev(t)]);
        }
    }

    #[test]
    fn closes_on_third() {
        let mut a = Assembler::new();
        assert!(a.push_event(ev(1), 3).is_none());
        assert!(a.push_event(ev(2), 3).is_none());
        let p = a.push_event(ev(3), 3).unwrap();
        assert_eq!(p.events(), &[ev(1), ev(2), ev(3)]);
        assert_eq!(p.closure, Closure::Target);
        assert!(!a.is_open());
    }

    #[test]
    fn flush_partial_package() {
        let mut a = Assembler::new();
        a.push_event(ev(1), 5);
        a.push_event(ev(2), 5);
        let p = a.flush().unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.target_size, 5);
        assert!(p.is_flush());
        assert!(a.flush().is_none());
    }

    #[test]
    fn target_frozen_at_open() {
        let mut a = Assembler::new();
        a.push_event(ev(1), 3);
        // a smaller target arriving mid-package does not close it
        assert!(a.push_event(ev(2), 1).is_none());
        assert_eq!(a.target(), Some(3));
        assert!(a.push_event(ev(3), 1).is_some());
    }

    #[test]
    fn expire_by_age() {
        let mut a = Assembler::with_max_age(Some(100));
        a.push_event(ev(10), 50);
        assert!(a.expire(109).is_none());
        let p = a.expire(110).unwrap();
        assert!(p.is_flush());
        assert!(Assembler::new().expire(1_000_000).is_none());
    }
}
