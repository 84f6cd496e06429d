use serde::{Deserialize, Serialize};

/// A chart point `x` together with a nonzero direction `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SamplePoint {
    pub fn new(x: impl Into<Vec<f64>>, y: impl Into<Vec<f64>>) -> Self {
        let (x, y) = (x.into(), y.into());
        assert_eq!(x.len(), y.len(), "x and y must have the same dimension");
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Same base point, direction multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite()) && self.y.iter().any(|v| *v != 0.0)
    }
}
