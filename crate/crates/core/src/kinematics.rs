//! Closed-form kinematics for the torso/upper-arm/forearm chain.
//!
//! Frame: origin at the chain base, `z` up, `x` forward. The base joint yaws
//! about `z`, the shoulder elevates the upper arm out of the horizontal plane
//! and the elbow flexes the forearm inside the arm plane. With that convention
//! [`inverse_kinematics`] is the literal closed-form inverse of
//! [`forward_kinematics`] on the `sin(theta3) >= 0` branch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("invalid arm model: segment lengths must be finite and positive ({0:?})")]
    InvalidModel([f64; 3]),
    #[error("target ({x}, {y}, {z}) is unreachable (cos(theta3) = {c3})")]
    Unreachable { x: f64, y: f64, z: f64, c3: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("{joint} = {value} deg is outside [{min}, {max}]")]
    OutOfRange {
        joint: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
}

/// Segment lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    /// Vertical offset from the chain base to the shoulder.
    pub l1: f64,
    /// Upper arm.
    pub l2: f64,
    /// Forearm (to the hand).
    pub l3: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        Self {
            l1: 0.2,
            l2: 0.3,
            l3: 0.25,
        }
    }
}

impl ArmModel {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self, KinematicsError> {
        let ok = |l: f64| l.is_finite() && l > 0.0;
        if ok(l1) && ok(l2) && ok(l3) {
            Ok(Self { l1, l2, l3 })
        } else {
            Err(KinematicsError::InvalidModel([l1, l2, l3]))
        }
    }

    pub fn reach(&self) -> f64 {
        self.l2 + self.l3
    }

    pub fn shoulder(&self) -> TargetPoint {
        TargetPoint::new(0.0, 0.0, self.l1)
    }

    /// Cosine of the elbow angle required to place the hand at `p`.
    /// The target is reachable exactly when this lies in `[-1, 1]`.
    ///
    /// Evaluated as an offset from the nearer envelope boundary
    /// (`1 + (d - L)(d + L) / 2 l2 l3` with `L = l2 + l3`, or the `|l2 - l3|`
    /// analogue) so that targets exactly on the envelope give `|c3| = 1`
    /// without cancellation error.
    pub fn elbow_cosine(&self, p: &TargetPoint) -> f64 {
        let d = p.x.hypot(p.y).hypot(p.z - self.l1);
        let denom = 2.0 * self.l2 * self.l3;
        let outer = self.l2 + self.l3;
        let inner = (self.l2 - self.l3).abs();
        if d * d >= self.l2 * self.l2 + self.l3 * self.l3 {
            1.0 + (d - outer) * (d + outer) / denom
        } else {
            -1.0 + (d - inner) * (d + inner) / denom
        }
    }

    pub fn is_reachable(&self, p: &TargetPoint) -> bool {
        self.elbow_cosine(p).abs() <= 1.0
    }
}

/// Joint angles of the 3-DOF chain, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainAngles {
    /// Base yaw about `z`.
    pub theta1: f64,
    /// Shoulder elevation.
    pub theta2: f64,
    /// Elbow flexion.
    pub theta3: f64,
}

impl ChainAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self {
            theta1,
            theta2,
            theta3,
        }
    }

    fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite() && self.theta3.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TargetPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &TargetPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Shoulder and elbow orientation in degrees, as chosen by the task generators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointOrientation {
    pub sh_yaw: f64,
    pub sh_pitch: f64,
    pub sh_roll: f64,
    pub elbow: f64,
}

/// Admissible interval of each orientation angle, degrees.
pub const SH_YAW_RANGE: (f64, f64) = (0.0, 90.0);
pub const SH_PITCH_RANGE: (f64, f64) = (-90.0, 90.0);
pub const SH_ROLL_RANGE: (f64, f64) = (-90.0, 0.0);
pub const ELBOW_RANGE: (f64, f64) = (0.0, 120.0);

impl JointOrientation {
    pub fn new(sh_yaw: f64, sh_pitch: f64, sh_roll: f64, elbow: f64) -> Self {
        Self {
            sh_yaw,
            sh_pitch,
            sh_roll,
            elbow,
        }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.sh_yaw, self.sh_pitch, self.sh_roll, self.elbow]
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let checks = [
            ("sh_yaw", self.sh_yaw, SH_YAW_RANGE),
            ("sh_pitch", self.sh_pitch, SH_PITCH_RANGE),
            ("sh_roll", self.sh_roll, SH_ROLL_RANGE),
            ("elbow", self.elbow, ELBOW_RANGE),
        ];
        for (joint, value, (min, max)) in checks {
            if !(value >= min && value <= max) {
                return Err(KinematicsError::OutOfRange {
                    joint,
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }
}

/// End-effector position for the given chain angles.
pub fn forward_kinematics(model: &ArmModel, angles: &ChainAngles) -> TargetPoint {
    let (s1, c1) = angles.theta1.sin_cos();
    let elbow_dir = angles.theta2;
    let hand_dir = angles.theta2 + angles.theta3;
    // radial distance from the z axis and height above the shoulder
    let radial = model.l2 * elbow_dir.cos() + model.l3 * hand_dir.cos();
    let height = model.l2 * elbow_dir.sin() + model.l3 * hand_dir.sin();
    TargetPoint::new(radial * c1, radial * s1, model.l1 + height)
}

/// Checked variant of [`forward_kinematics`] rejecting non-finite angles.
pub fn try_forward_kinematics(
    model: &ArmModel,
    angles: &ChainAngles,
) -> Result<TargetPoint, KinematicsError> {
    if !angles.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    Ok(forward_kinematics(model, angles))
}

/// Solution of the inverse problem together with the singularity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub angles: ChainAngles,
    /// Target lies on the `z` axis; base yaw is undefined and reported as 0.
    pub singular: bool,
}

/// Closed-form elbow-up inverse kinematics.
pub fn inverse_kinematics(
    model: &ArmModel,
    target: &TargetPoint,
) -> Result<IkSolution, KinematicsError> {
    if !target.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    let TargetPoint { x, y, z } = *target;
    let c3 = model.elbow_cosine(target);
    if c3.abs() > 1.0 || c3.is_nan() {
        return Err(KinematicsError::Unreachable { x, y, z, c3 });
    }
    let s3 = (1.0 - c3 * c3).sqrt();
    let singular = x == 0.0 && y == 0.0;
    let theta1 = if singular { 0.0 } else { y.atan2(x) };
    let radial = x.hypot(y);
    let theta2 = (z - model.l1).atan2(radial) - (model.l3 * s3).atan2(model.l2 + model.l3 * c3);
    let theta3 = s3.atan2(c3);
    Ok(IkSolution {
        angles: ChainAngles::new(theta1, theta2, theta3),
        singular,
    })
}

/// Hand position for a shoulder yaw/pitch/roll + elbow flexion orientation.
///
/// Roll turns the elbow's flexion plane about the upper-arm axis; with zero
/// roll this coincides with [`forward_kinematics`] at
/// `(yaw, pitch, elbow)` converted to radians.
pub fn spawn_position(
    model: &ArmModel,
    orient: &JointOrientation,
) -> Result<TargetPoint, KinematicsError> {
    orient.validate()?;
    let yaw = orient.sh_yaw.to_radians();
    let pitch = orient.sh_pitch.to_radians();
    let roll = orient.sh_roll.to_radians();
    let flex = orient.elbow.to_radians();

    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let upper = [cp * cy, cp * sy, sp];
    // in-plane normal pointing "up" relative to the upper arm
    let up = [-sp * cy, -sp * sy, cp];
    let side = cross(&upper, &up);
    let (sr, cr) = roll.sin_cos();
    let bend = [
        cr * up[0] + sr * side[0],
        cr * up[1] + sr * side[1],
        cr * up[2] + sr * side[2],
    ];
    let (sf, cf) = flex.sin_cos();
    let fore = [
        cf * upper[0] + sf * bend[0],
        cf * upper[1] + sf * bend[1],
        cf * upper[2] + sf * bend[2],
    ];
    Ok(TargetPoint::new(
        model.l2 * upper[0] + model.l3 * fore[0],
        model.l2 * upper[1] + model.l3 * fore[1],
        model.l1 + model.l2 * upper[2] + model.l3 * fore[2],
    ))
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
