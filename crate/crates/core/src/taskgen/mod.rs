//! Reach-target generation: UCT tree search, the random generator and
//! hierarchical level progression.

pub mod grid;
pub mod hss;
pub mod mcts;

pub use grid::{ActionGrid, Cell, GridAxis, GridError, DIMS};
pub use hss::{hss_update, level_subgrid, rog_cell, rog_generate, HssState, DEFAULT_LEVELS};
pub use mcts::{mcts_generate, mcts_search, uct_value, SearchTree, TaskGenError, UctConfig};
