use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::DetectionError;

/// Input (add) and output (remove) thresholds on window means.
///
/// `it_min` catches reflective items, whose presence lowers the reading;
/// `it_max` catches non-reflective ones, which raise it. A final window mean
/// strictly inside `(ot_min, ot_max)` means the position looks empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub it_min: f64,
    pub it_max: f64,
    pub ot_min: f64,
    pub ot_max: f64,
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), DetectionError> {
        let all = [self.it_min, self.it_max, self.ot_min, self.ot_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DetectionError::InvalidThresholds(
                "thresholds must be finite".into(),
            ));
        }
        if self.it_min >= self.it_max {
            return Err(DetectionError::InvalidThresholds(format!(
                "it_min {} must be below it_max {}",
                self.it_min, self.it_max
            )));
        }
        if self.ot_min >= self.ot_max {
            return Err(DetectionError::InvalidThresholds(format!(
                "ot_min {} must be below ot_max {}",
                self.ot_min, self.ot_max
            )));
        }
        Ok(())
    }

    /// Whether steady occupied levels fall outside the removal band.
    pub fn separates(&self, reflective_level: f64, nonreflective_level: f64) -> bool {
        self.ot_min > reflective_level && self.ot_max < nonreflective_level
    }
}

/// Sliding-window state for one position.
///
/// The window always advances, but window means only count towards
/// `minval`/`maxval`/`lastval` once a full window of readings has arrived
/// inside the current activity.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionStats {
    window: VecDeque<f64>,
    capacity: usize,
    in_activity: bool,
    activity_readings: usize,
    minval: Option<f64>,
    maxval: Option<f64>,
    lastval: Option<f64>,
}

impl PositionStats {
    pub fn new(window: usize) -> Self {
        assert!(window > 0, "window must hold at least one reading");
        Self {
            window: VecDeque::with_capacity(window),
            capacity: window,
            in_activity: false,
            activity_readings: 0,
            minval: None,
            maxval: None,
            lastval: None,
        }
    }

    pub fn window_len(&self) -> usize {
        self.capacity
    }

    /// Push a reading. Returns the window mean when one is emitted for the
    /// current activity.
    pub fn push(&mut self, value: f64) -> Option<f64> {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(value);
        if !self.in_activity {
            return None;
        }
        self.activity_readings += 1;
        if self.activity_readings < self.capacity {
            return None;
        }
        let mean = self.window.iter().sum::<f64>() / self.capacity as f64;
        self.minval = Some(self.minval.map_or(mean, |m| m.min(mean)));
        self.maxval = Some(self.maxval.map_or(mean, |m| m.max(mean)));
        self.lastval = Some(mean);
        Some(mean)
    }

    pub fn begin_activity(&mut self) {
        self.in_activity = true;
        self.activity_readings = 0;
        self.minval = None;
        self.maxval = None;
        self.lastval = None;
    }

    pub fn end_activity(&mut self) {
        self.in_activity = false;
        self.activity_readings = 0;
        self.minval = None;
        self.maxval = None;
        self.lastval = None;
    }

    pub fn in_activity(&self) -> bool {
        self.in_activity
    }

    pub fn minval(&self) -> Option<f64> {
        self.minval
    }

    pub fn maxval(&self) -> Option<f64> {
        self.maxval
    }

    pub fn lastval(&self) -> Option<f64> {
        self.lastval
    }

    pub fn has_mean(&self) -> bool {
        self.lastval.is_some()
    }

    /// Build stats directly from activity summaries. Mostly for tests and
    /// for replaying recorded summaries.
    pub fn from_summary(window: usize, minval: f64, maxval: f64, lastval: f64) -> Self {
        let mut stats = Self::new(window);
        stats.in_activity = true;
        stats.activity_readings = window;
        stats.minval = Some(minval);
        stats.maxval = Some(maxval);
        stats.lastval = Some(lastval);
        stats
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Add,
    Remove,
    None,
}

/// Action determination for one position at the end of an activity.
/// The add branch is tested first.
pub fn decide(stats: &PositionStats, thresholds: &ThresholdConfig, occupied: bool) -> Decision {
    let (Some(minval), Some(maxval), Some(lastval)) = (stats.minval, stats.maxval, stats.lastval)
    else {
        return Decision::None;
    };
    if (minval < thresholds.it_min || maxval > thresholds.it_max) && !occupied {
        Decision::Add
    } else if thresholds.ot_min < lastval && lastval < thresholds.ot_max && occupied {
        Decision::Remove
    } else {
        Decision::None
    }
}
