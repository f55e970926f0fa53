//! Tabular learners with ε-greedy behavior and experience replay.

mod replay;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use replay::ReplayBuffer;
pub use train::{train_loop, EpisodeSummary, EvalRecord, Learner, TrainConfig, TrainError, TrainOutcome};

/// Dense action values, zero until updated.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        QTable { actions, values: vec![0.0; states * actions] }
    }

    pub fn states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    /// Values of the first `valid` actions at `s`.
    pub fn row(&self, s: usize, valid: usize) -> &[f64] {
        &self.values[s * self.actions..s * self.actions + valid]
    }

    pub fn max(&self, s: usize, valid: usize) -> f64 {
        self.row(s, valid).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// How ties between maximizing actions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    LowestIndex,
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub epsilon: f64,
    pub gamma: f64,
    /// Step size of Q-learning updates.
    pub learning_rate: f64,
    /// Step size of SARSA updates.
    pub sarsa_learning_rate: f64,
    pub batch_size: usize,
    pub initial_exploration_steps: usize,
    /// Bootstrap with `γ×(b')` instead of the fixed `gamma`.
    pub use_eventual_discounting: bool,
    pub tie_break: TieBreak,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            epsilon: 0.1,
            gamma: 0.99,
            learning_rate: 1.0,
            sarsa_learning_rate: 0.1,
            batch_size: 64,
            initial_exploration_steps: 2000,
            use_eventual_discounting: false,
            tie_break: TieBreak::Uniform,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma {} outside (0, 1)", self.gamma));
        }
        for lr in [self.learning_rate, self.sarsa_learning_rate] {
            if !(lr > 0.0 && lr <= 1.0) {
                return Err(format!("learning rate {lr} outside (0, 1]"));
            }
        }
        if self.batch_size == 0 {
            return Err("batch size must be positive".into());
        }
        Ok(())
    }
}

/// Outcome of an ε-greedy draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub slot: usize,
    /// The uniform branch was taken.
    pub explored: bool,
}

/// Greedy action among the first `valid` slots.
pub fn greedy_action<R: Rng + ?Sized>(q: &QTable, s: usize, valid: usize, tie: TieBreak, rng: &mut R) -> usize {
    let row = q.row(s, valid);
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match tie {
        TieBreak::LowestIndex => row.iter().position(|&v| v == best).expect("nonempty row"),
        TieBreak::Uniform => {
            let ties = row.iter().filter(|&&v| v == best).count();
            let k = if ties > 1 { rng.random_range(0..ties) } else { 0 };
            row.iter().enumerate().filter(|(_, &v)| v == best).nth(k).expect("k below tie count").0
        }
    }
}

/// Uniform over the first `valid` slots with probability `epsilon`, greedy
/// otherwise.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: usize,
    valid: usize,
    epsilon: f64,
    tie: TieBreak,
    rng: &mut R,
) -> Selection {
    assert!(valid > 0, "no actions available");
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        Selection { slot: rng.random_range(0..valid), explored: true }
    } else {
        Selection { slot: greedy_action(q, s, valid, tie, rng), explored: false }
    }
}

/// One learner transition in table coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub state: usize,
    pub slot: usize,
    pub reward: f64,
    pub discount: f64,
    pub next_state: usize,
}

/// `Q(s,a) ← Q(s,a) + lr·(r + d·max_a' Q(s',a') − Q(s,a))` over the first
/// `next_valid` slots at `s'`.
pub fn q_learning_update(q: &mut QTable, u: &Update, next_valid: usize, lr: f64) {
    let target = u.reward + u.discount * q.max(u.next_state, next_valid);
    apply(q, u, target, lr);
}

/// `Q(s,a) ← Q(s,a) + lr·(r + d·Q(s',a') − Q(s,a))`.
pub fn sarsa_update(q: &mut QTable, u: &Update, next_slot: usize, lr: f64) {
    let target = u.reward + u.discount * q.get(u.next_state, next_slot);
    apply(q, u, target, lr);
}

fn apply(q: &mut QTable, u: &Update, target: f64, lr: f64) {
    let old = q.get(u.state, u.slot);
    let new = if lr == 1.0 { target } else { old + lr * (target - old) };
    q.set(u.state, u.slot, new);
}
