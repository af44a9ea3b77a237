use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    JointOrientation, ELBOW_RANGE, SH_PITCH_RANGE, SH_ROLL_RANGE, SH_YAW_RANGE,
};

/// Number of orientation dimensions (shoulder yaw, pitch, roll and elbow).
pub const DIMS: usize = 4;

pub const DIM_NAMES: [&str; DIMS] = ["sh_yaw", "sh_pitch", "sh_roll", "elbow"];

/// Grid indices of one orientation, in yaw/pitch/roll/elbow order.
pub type Cell = [usize; DIMS];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("{axis}: {reason}")]
    InvalidAxis { axis: &'static str, reason: String },
}

/// One uniformly sampled joint range, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl GridAxis {
    pub const fn new(min: f64, max: f64, samples: usize) -> Self {
        Self { min, max, samples }
    }

    pub fn value(&self, index: usize) -> f64 {
        debug_assert!(index < self.samples);
        if self.samples == 1 {
            return self.min;
        }
        if index + 1 == self.samples {
            return self.max;
        }
        self.min + (self.max - self.min) * index as f64 / (self.samples - 1) as f64
    }

    pub fn step(&self) -> f64 {
        if self.samples <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.samples - 1) as f64
        }
    }

    /// Index of the grid point closest to `v` (clamped to the axis).
    pub fn nearest(&self, v: f64) -> usize {
        if self.samples <= 1 {
            return 0;
        }
        let pos = ((v - self.min) / self.step()).round();
        pos.clamp(0.0, (self.samples - 1) as f64) as usize
    }

    fn validate(&self, axis: &'static str, bounds: (f64, f64)) -> Result<(), GridError> {
        let fail = |reason: String| Err(GridError::InvalidAxis { axis, reason });
        if !(self.min.is_finite() && self.max.is_finite()) {
            return fail("non-finite bounds".into());
        }
        if self.min < bounds.0 || self.max > bounds.1 {
            return fail(format!(
                "[{}, {}] exceeds the joint range [{}, {}]",
                self.min, self.max, bounds.0, bounds.1
            ));
        }
        match self.samples {
            0 => fail("needs at least one sample".into()),
            1 if self.min != self.max => fail("a single sample requires min == max".into()),
            1 => Ok(()),
            _ if self.min >= self.max => fail("min must be below max".into()),
            _ => Ok(()),
        }
    }
}

/// Discretized orientation space searched by the task generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    pub sh_yaw: GridAxis,
    pub sh_pitch: GridAxis,
    pub sh_roll: GridAxis,
    pub elbow: GridAxis,
}

impl Default for ActionGrid {
    fn default() -> Self {
        Self {
            sh_yaw: GridAxis::new(0.0, 90.0, 10),
            sh_pitch: GridAxis::new(-90.0, 90.0, 19),
            sh_roll: GridAxis::new(-90.0, 0.0, 10),
            elbow: GridAxis::new(0.0, 120.0, 13),
        }
    }
}

impl ActionGrid {
    /// Grid with a single point, used for degenerate searches.
    pub fn single(orient: JointOrientation) -> Self {
        let a = orient.to_array();
        Self {
            sh_yaw: GridAxis::new(a[0], a[0], 1),
            sh_pitch: GridAxis::new(a[1], a[1], 1),
            sh_roll: GridAxis::new(a[2], a[2], 1),
            elbow: GridAxis::new(a[3], a[3], 1),
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.sh_yaw.validate("sh_yaw", SH_YAW_RANGE)?;
        self.sh_pitch.validate("sh_pitch", SH_PITCH_RANGE)?;
        self.sh_roll.validate("sh_roll", SH_ROLL_RANGE)?;
        self.elbow.validate("elbow", ELBOW_RANGE)
    }

    pub fn axes(&self) -> [GridAxis; DIMS] {
        [self.sh_yaw, self.sh_pitch, self.sh_roll, self.elbow]
    }

    pub fn axis(&self, dim: usize) -> GridAxis {
        self.axes()[dim]
    }

    pub fn cell_count(&self) -> usize {
        self.axes().iter().map(|a| a.samples).product()
    }

    pub fn orientation(&self, cell: &Cell) -> JointOrientation {
        let axes = self.axes();
        JointOrientation::from_array(std::array::from_fn(|d| axes[d].value(cell[d])))
    }

    pub fn nearest_cell(&self, orient: &JointOrientation) -> Cell {
        let axes = self.axes();
        let v = orient.to_array();
        std::array::from_fn(|d| axes[d].nearest(v[d]))
    }

    /// Whether `orient` coincides with a grid point (to rounding).
    pub fn contains(&self, orient: &JointOrientation) -> bool {
        let back = self.orientation(&self.nearest_cell(orient));
        back.to_array()
            .iter()
            .zip(orient.to_array())
            .all(|(a, b)| (a - b).abs() <= 1e-9)
    }
}
