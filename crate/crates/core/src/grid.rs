use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive, evenly spaced 1-D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        let g = Self { min, max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::GridDomain("grid must have at least one point".into()));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::GridDomain(format!(
                "grid bounds must be finite, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.max < self.min {
            return Err(Error::GridDomain(format!(
                "grid max {} is below min {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    pub fn point(&self, k: usize) -> f64 {
        if self.n == 1 {
            return self.min;
        }
        if k + 1 == self.n {
            return self.max;
        }
        self.min + (self.max - self.min) * k as f64 / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }
}
