//! Hierarchical scoring levels and the level-restricted random generator.
//!
//! Level `k` of `L` unlocks the lower `k/L` share of shoulder elevation above
//! horizontal and of elbow flexion; lifting against gravity and bending further
//! are treated as the harder steps. Yaw, roll and pitch below horizontal are
//! always available.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{ActionGrid, Cell, DIMS};
use crate::kinematics::JointOrientation;
use crate::scoring::TrialScore;

pub const DEFAULT_LEVELS: u32 = 4;
pub const HSS_WINDOW: usize = 5;
pub const ADVANCE_THRESHOLD: f64 = 0.8;
pub const REGRESS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HssState {
    level: u32,
    max_level: u32,
    window: VecDeque<f64>,
    passed: BTreeSet<u32>,
}

impl Default for HssState {
    fn default() -> Self {
        Self::new(DEFAULT_LEVELS)
    }
}

impl HssState {
    pub fn new(max_level: u32) -> Self {
        Self::at_level(1, max_level)
    }

    /// State starting at `level`; lower levels count as already passed.
    pub fn at_level(level: u32, max_level: u32) -> Self {
        let max_level = max_level.max(1);
        let level = level.clamp(1, max_level);
        Self {
            level,
            max_level,
            window: VecDeque::with_capacity(HSS_WINDOW),
            passed: (1..level).collect(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn passed(&self) -> &BTreeSet<u32> {
        &self.passed
    }

    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn update(&mut self, score: &TrialScore) {
        if self.window.len() == HSS_WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(score.value);
        if self.window.len() < HSS_WINDOW {
            return;
        }
        let mean = self.window.iter().sum::<f64>() / HSS_WINDOW as f64;
        if mean >= ADVANCE_THRESHOLD && self.level < self.max_level {
            self.passed.extend(1..=self.level);
            self.level += 1;
            self.window.clear();
        } else if mean <= REGRESS_THRESHOLD && self.level > 1 {
            self.level -= 1;
            let level = self.level;
            self.passed.retain(|&l| l < level);
            self.window.clear();
        }
    }
}

pub fn hss_update(mut hss: HssState, score: &TrialScore) -> HssState {
    hss.update(score);
    hss
}

/// Grid indices allowed per dimension at the given HSS level.
pub fn level_subgrid(grid: &ActionGrid, level: u32, max_level: u32) -> [Vec<usize>; DIMS] {
    let frac = level.clamp(1, max_level.max(1)) as f64 / max_level.max(1) as f64;
    let axes = grid.axes();
    let all = |d: usize| (0..axes[d].samples).collect::<Vec<_>>();
    let up_to = |d: usize, cutoff: f64| {
        let allowed: Vec<usize> = (0..axes[d].samples)
            .filter(|&i| axes[d].value(i) <= cutoff + 1e-9)
            .collect();
        if allowed.is_empty() {
            vec![0]
        } else {
            allowed
        }
    };
    let pitch = axes[1];
    let horizontal = 0.0f64.clamp(pitch.min, pitch.max);
    let pitch_cut = horizontal + (pitch.max - horizontal) * frac;
    let elbow = axes[3];
    let elbow_cut = elbow.min + (elbow.max - elbow.min) * frac;
    [all(0), up_to(1, pitch_cut), all(2), up_to(3, elbow_cut)]
}

pub fn subgrid_contains(subgrid: &[Vec<usize>; DIMS], cell: &Cell) -> bool {
    subgrid.iter().zip(cell).all(|(allowed, i)| allowed.contains(i))
}

/// Uniform random orientation from the current level's subgrid.
pub fn rog_cell<R: Rng + ?Sized>(grid: &ActionGrid, hss: &HssState, rng: &mut R) -> Cell {
    let sub = level_subgrid(grid, hss.level(), hss.max_level());
    std::array::from_fn(|d| *sub[d].choose(rng).expect("subgrid axes are non-empty"))
}

pub fn rog_generate<R: Rng + ?Sized>(grid: &ActionGrid, hss: &HssState, rng: &mut R) -> JointOrientation {
    grid.orientation(&rog_cell(grid, hss, rng))
}
