use serde::{Deserialize, Serialize};

use super::DetectionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedColor {
    #[default]
    Off,
    Red,
    Green,
}

/// Per-position LED actuator state. Level-triggered: a color stays until
/// it is overwritten.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedBank {
    colors: Vec<LedColor>,
}

impl LedBank {
    pub fn new(positions: usize) -> Self {
        Self {
            colors: vec![LedColor::Off; positions],
        }
    }

    pub fn set(&mut self, position: usize, color: LedColor) -> Result<LedColor, DetectionError> {
        let count = self.colors.len();
        let slot = self
            .colors
            .get_mut(position)
            .ok_or(DetectionError::PositionOutOfRange { position, count })?;
        *slot = color;
        Ok(color)
    }

    pub fn get(&self, position: usize) -> Result<LedColor, DetectionError> {
        self.colors
            .get(position)
            .copied()
            .ok_or(DetectionError::PositionOutOfRange {
                position,
                count: self.colors.len(),
            })
    }

    pub fn colors(&self) -> &[LedColor] {
        &self.colors
    }

    pub fn clear(&mut self) {
        self.colors.fill(LedColor::Off);
    }

    /// Replace the whole bank; `colors` must cover every position.
    pub fn replace(&mut self, colors: Vec<LedColor>) -> Result<(), DetectionError> {
        if colors.len() != self.colors.len() {
            return Err(DetectionError::PositionOutOfRange {
                position: colors.len(),
                count: self.colors.len(),
            });
        }
        self.colors = colors;
        Ok(())
    }
}
