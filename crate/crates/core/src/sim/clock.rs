/// Virtual clock in milliseconds. Only moves when told to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now_ms: u64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(ms: u64) -> Self {
        Self { now_ms: ms }
    }

    pub fn now(&self) -> u64 {
        self.now_ms
    }

    pub fn advance_by(&mut self, ms: u64) -> u64 {
        self.now_ms += ms;
        self.now_ms
    }

    /// Move to `ms`; never moves backwards.
    pub fn advance_to(&mut self, ms: u64) -> u64 {
        debug_assert!(ms >= self.now_ms, "clock moved backwards: {} -> {ms}", self.now_ms);
        self.now_ms = self.now_ms.max(ms);
        self.now_ms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advances_monotonically() {
        let mut c = VirtualClock::new();
        assert_eq!(c.advance_by(250), 250);
        assert_eq!(c.advance_to(1000), 1000);
        assert_eq!(VirtualClock::starting_at(7).now(), 7);
    }
}
