//! UCT search over the orientation grid.
//!
//! The tree has one ply per orientation dimension in the fixed order
//! yaw, pitch, roll, elbow; a depth-4 node is a complete orientation. A
//! rollout fills the unassigned dimensions uniformly at random and is rewarded
//! by how close the predicted success probability lands to the requested
//! success rate.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{ActionGrid, Cell, DIMS};
use crate::kinematics::JointOrientation;
use crate::patient::SuccessModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskGenError {
    #[error("node at depth {0} has no untried actions")]
    FullyExpanded(usize),
    #[error("invalid UCT configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UctConfig {
    /// Exploration constant, `C_p > 0`.
    pub cp: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Success rate the generated task should be pitched at.
    pub target_success: f64,
}

impl Default for UctConfig {
    fn default() -> Self {
        Self {
            cp: std::f64::consts::FRAC_1_SQRT_2,
            iterations: 1000,
            seed: 0,
            target_success: 0.9,
        }
    }
}

impl UctConfig {
    pub fn validate(&self) -> Result<(), TaskGenError> {
        if !(self.cp > 0.0 && self.cp.is_finite()) {
            return Err(TaskGenError::InvalidConfig(format!("cp must be positive, got {}", self.cp)));
        }
        if self.iterations == 0 {
            return Err(TaskGenError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.target_success > 0.0 && self.target_success < 1.0) {
            return Err(TaskGenError::InvalidConfig(format!(
                "target_success must lie in (0, 1), got {}",
                self.target_success
            )));
        }
        Ok(())
    }
}

/// Upper confidence bound of a child; unvisited children rank first.
pub fn uct_value(mean_reward: f64, cp: f64, parent_visits: u64, child_visits: u64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    mean_reward + exploration_bonus(cp, parent_visits, child_visits)
}

pub fn exploration_bonus(cp: f64, parent_visits: u64, child_visits: u64) -> f64 {
    cp * ((parent_visits as f64).ln() / child_visits as f64).sqrt()
}

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Number of assigned dimensions; the root has depth 0.
    pub depth: usize,
    /// Grid index chosen for dimension `depth - 1` (unused at the root).
    pub action: usize,
    pub parent: Option<NodeId>,
    pub mean_reward: f64,
    pub visits: u64,
    pub children: Vec<NodeId>,
    untried: Vec<usize>,
    /// Best rollout seen through this node.
    best_reward: f64,
    best_cell: Cell,
}

impl TreeNode {
    fn new(depth: usize, action: usize, parent: Option<NodeId>, grid: &ActionGrid) -> Self {
        let untried = if depth < DIMS {
            (0..grid.axis(depth).samples).collect()
        } else {
            Vec::new()
        };
        Self {
            depth,
            action,
            parent,
            mean_reward: 0.0,
            visits: 0,
            children: Vec::new(),
            untried,
            best_reward: f64::NEG_INFINITY,
            best_cell: [0; DIMS],
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.depth == DIMS
    }

    pub fn untried(&self) -> &[usize] {
        &self.untried
    }

    /// Folds one reward into the running mean.
    pub fn record(&mut self, reward: f64) {
        self.visits += 1;
        self.mean_reward += (reward - self.mean_reward) / self.visits as f64;
    }
}

/// Reward for a rollout whose predicted success is `p`.
pub fn reward(p: f64, target_success: f64) -> f64 {
    (1.0 - (p - target_success).abs()).clamp(0.0, 1.0)
}

/// Arena-backed search tree.
#[derive(Debug, Clone)]
pub struct SearchTree {
    grid: ActionGrid,
    nodes: Vec<TreeNode>,
}

impl SearchTree {
    pub fn new(grid: ActionGrid) -> Self {
        let root = TreeNode::new(0, 0, None, &grid);
        Self {
            grid,
            nodes: vec![root],
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    /// Grid indices fixed by the path from the root to `id`.
    pub fn assigned(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::with_capacity(DIMS);
        let mut cur = id;
        while let Some(parent) = self.nodes[cur].parent {
            out.push(self.nodes[cur].action);
            cur = parent;
        }
        out.reverse();
        out
    }

    /// UCT child of `id`, ties broken uniformly at random.
    pub fn select<R: Rng + ?Sized>(&self, id: NodeId, cp: f64, rng: &mut R) -> Option<NodeId> {
        let node = &self.nodes[id];
        let mut best = f64::NEG_INFINITY;
        let mut ties: Vec<NodeId> = Vec::new();
        for &child in &node.children {
            let c = &self.nodes[child];
            let v = uct_value(c.mean_reward, cp, node.visits.max(1), c.visits);
            if v > best {
                best = v;
                ties.clear();
                ties.push(child);
            } else if v == best {
                ties.push(child);
            }
        }
        match ties.len() {
            0 => None,
            1 => Some(ties[0]),
            _ => ties.choose(rng).copied(),
        }
    }

    /// Adds one child for a random untried action of `id`.
    pub fn expand<R: Rng + ?Sized>(&mut self, id: NodeId, rng: &mut R) -> Result<NodeId, TaskGenError> {
        let depth = self.nodes[id].depth;
        let untried = &mut self.nodes[id].untried;
        if untried.is_empty() {
            return Err(TaskGenError::FullyExpanded(depth));
        }
        let pick = rng.random_range(0..untried.len());
        let action = untried.swap_remove(pick);
        let child = TreeNode::new(depth + 1, action, Some(id), &self.grid);
        let child_id = self.nodes.len();
        self.nodes.push(child);
        self.nodes[id].children.push(child_id);
        Ok(child_id)
    }

    /// Completes the orientation below `id` at random and scores it.
    pub fn rollout<M: SuccessModel + ?Sized, R: Rng + ?Sized>(
        &self,
        id: NodeId,
        model: &M,
        target_success: f64,
        rng: &mut R,
    ) -> (f64, Cell) {
        let assigned = self.assigned(id);
        let mut cell = [0; DIMS];
        cell[..assigned.len()].copy_from_slice(&assigned);
        for (d, slot) in cell.iter_mut().enumerate().skip(assigned.len()) {
            *slot = rng.random_range(0..self.grid.axis(d).samples);
        }
        let p = model.success_probability(&self.grid.orientation(&cell));
        (reward(p, target_success), cell)
    }

    /// Backs `reward` up from `id` to the root.
    pub fn backpropagate(&mut self, id: NodeId, reward: f64, cell: Cell) {
        let mut cur = Some(id);
        while let Some(n) = cur {
            let node = &mut self.nodes[n];
            node.record(reward);
            if reward > node.best_reward {
                node.best_reward = reward;
                node.best_cell = cell;
            }
            cur = node.parent;
        }
    }

    /// One select/expand/rollout/backpropagate pass.
    pub fn iterate<M: SuccessModel + ?Sized, R: Rng + ?Sized>(
        &mut self,
        model: &M,
        cfg: &UctConfig,
        rng: &mut R,
    ) {
        let mut id = Self::ROOT;
        loop {
            let node = &self.nodes[id];
            if node.is_leaf() || !node.untried.is_empty() {
                break;
            }
            match self.select(id, cfg.cp, rng) {
                Some(child) => id = child,
                None => break,
            }
        }
        if let Ok(child) = self.expand(id, rng) {
            id = child;
        }
        let (r, cell) = self.rollout(id, model, cfg.target_success, rng);
        self.backpropagate(id, r, cell);
    }

    /// Follows most-visited children from the root. When the walk stops above
    /// the leaves, the remaining dimensions come from the best rollout seen
    /// through the last node.
    pub fn robust_cell(&self) -> Cell {
        let mut id = Self::ROOT;
        loop {
            let node = &self.nodes[id];
            let next = node.children.iter().copied().max_by(|&a, &b| {
                let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                na.visits
                    .cmp(&nb.visits)
                    .then(na.mean_reward.total_cmp(&nb.mean_reward))
                    // prefer the earlier child on a full tie
                    .then(b.cmp(&a))
            });
            match next {
                Some(child) => id = child,
                None => break,
            }
        }
        let mut cell = self.nodes[id].best_cell;
        for (d, action) in self.assigned(id).into_iter().enumerate() {
            cell[d] = action;
        }
        cell
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub orientation: JointOrientation,
    pub cell: Cell,
    pub root_visits: u64,
    pub tree_size: usize,
}

/// Full search returning the robust-child orientation plus tree statistics.
pub fn mcts_search<M: SuccessModel + ?Sized, R: Rng + ?Sized>(
    grid: &ActionGrid,
    model: &M,
    cfg: &UctConfig,
    rng: &mut R,
) -> SearchResult {
    let mut tree = SearchTree::new(*grid);
    for _ in 0..cfg.iterations {
        tree.iterate(model, cfg, rng);
    }
    let cell = tree.robust_cell();
    SearchResult {
        orientation: grid.orientation(&cell),
        cell,
        root_visits: tree.node(SearchTree::ROOT).visits,
        tree_size: tree.len(),
    }
}

pub fn mcts_generate<M: SuccessModel + ?Sized, R: Rng + ?Sized>(
    grid: &ActionGrid,
    model: &M,
    cfg: &UctConfig,
    rng: &mut R,
) -> JointOrientation {
    mcts_search(grid, model, cfg, rng).orientation
}
