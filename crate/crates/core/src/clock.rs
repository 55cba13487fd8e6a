use std::fmt;

use serde::{Deserialize, Serialize};

/// Virtual session time in milliseconds since session start.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualTime(pub u64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0);

    pub fn from_secs(s: u64) -> Self {
        VirtualTime(s * 1000)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn plus_millis(self, ms: u64) -> Self {
        VirtualTime(self.0.saturating_add(ms))
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0 / 1000;
        write!(f, "{:02}:{:02}.{:03}", secs / 60, secs % 60, self.0 % 1000)
    }
}

/// One scheduling quantum: one virtual second.
pub const QUANTUM_MS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualClock {
    pub now: VirtualTime,
    /// Multiplier applied to agent wait durations; 0 makes waits instant.
    pub time_scale: f64,
}

impl VirtualClock {
    pub fn new(time_scale: f64) -> Self {
        VirtualClock {
            now: VirtualTime::ZERO,
            time_scale,
        }
    }

    pub fn advance(&mut self) -> VirtualTime {
        self.now = self.now.plus_millis(QUANTUM_MS);
        self.now
    }

    /// Scales an unscaled duration in milliseconds by `time_scale`.
    pub fn scaled(&self, millis: u64) -> u64 {
        (millis as f64 * self.time_scale).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advance_and_scale() {
        let mut c = VirtualClock::new(0.5);
        assert_eq!(c.advance(), VirtualTime(1000));
        assert_eq!(c.scaled(45_000), 22_500);
        assert_eq!(VirtualClock::new(0.0).scaled(60_000), 0);
        assert_eq!(VirtualTime(61_250).to_string(), "01:01.250");
    }
}
