//! Simulator and analysis toolkit for adaptive upper-limb reach training.
//!
//! The simulation half closes the loop between a task generator (UCT tree
//! search or a level-restricted random generator), arm kinematics, a
//! parametric simulated patient and trial scoring. The analysis half fits the
//! Andrich rating scale model to questionnaire responses and produces fit,
//! reliability and targeting reports.

pub mod kinematics;
pub mod patient;
pub mod psychometrics;
pub mod scoring;
pub mod session;
pub mod signal;
pub mod taskgen;
