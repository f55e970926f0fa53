//! Comparison methods: count-based shaping, counterfactual relabeling,
//! reward shifting and the automaton-only learner.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automata::StateId;
use crate::product::{Experience, ProductAction, ProductMdp, ProductState};
use crate::shaping::{MrpModel, PotentialTable};

/// Training method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Drl2,
    Lcer,
    Count,
    None,
    RewardShift,
    LdbaOnly,
    /// DRL² with the row-normalized empirical kernel.
    Drl2Empirical,
    /// DRL² with the optimal high-level policy kernel.
    Drl2Vi,
    /// DRL² with a prior that ignores the automaton's edges.
    Drl2Partial,
    /// DRL² without a virtual sink.
    Drl2NoSink,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Drl2,
        Method::Lcer,
        Method::Count,
        Method::None,
        Method::RewardShift,
        Method::LdbaOnly,
        Method::Drl2Empirical,
        Method::Drl2Vi,
        Method::Drl2Partial,
        Method::Drl2NoSink,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Drl2 => "drl2",
            Method::Lcer => "lcer",
            Method::Count => "count",
            Method::None => "none",
            Method::RewardShift => "reward-shift",
            Method::LdbaOnly => "ldba-only",
            Method::Drl2Empirical => "drl2-empirical",
            Method::Drl2Vi => "drl2-vi",
            Method::Drl2Partial => "drl2-partial",
            Method::Drl2NoSink => "drl2-no-sink",
        }
    }

    /// Whether potentials come from the automaton MRP.
    pub fn is_drl2(self) -> bool {
        matches!(self, Method::Drl2 | Method::Drl2Empirical | Method::Drl2Vi | Method::Drl2Partial | Method::Drl2NoSink)
    }

    /// Whether training targets include a shaping term.
    pub fn is_shaped(self) -> bool {
        self.is_drl2() || self == Method::Count
    }

    pub fn adds_virtual_sink(self) -> bool {
        self != Method::Drl2NoSink
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Visits per automaton state since the start of training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounts {
    n: Vec<u64>,
}

impl VisitCounts {
    pub fn zeros(states: usize) -> Self {
        VisitCounts { n: vec![0; states] }
    }

    pub fn from_counts(n: Vec<u64>) -> Self {
        VisitCounts { n }
    }

    pub fn record(&mut self, b: StateId) {
        self.n[b] += 1;
    }

    pub fn get(&self, b: StateId) -> u64 {
        self.n[b]
    }

    pub fn counts(&self) -> &[u64] {
        &self.n
    }
}

/// `n^(-1/2)`, with unvisited states treated as visited once.
pub fn count_potential(n: u64) -> f64 {
    1.0 / (n.max(1) as f64).sqrt()
}

/// Snapshot of the count potential over every MRP state. States beyond the
/// automaton, such as a virtual sink, count as unvisited.
pub fn count_potentials(n: &VisitCounts, m: &MrpModel) -> PotentialTable {
    let values = (0..m.state_count()).map(|b| count_potential(n.n.get(b).copied().unwrap_or(0))).collect();
    PotentialTable { values }
}

/// `γ×(b') n(b')^(-1/2) − n(b)^(-1/2)` with the current counts.
pub fn count_potential_reward(n: &VisitCounts, m: &MrpModel, b: StateId, b_next: StateId) -> f64 {
    m.discount[b_next] * count_potential(n.get(b_next)) - count_potential(n.get(b))
}

/// Maximum draws for an ε-transition before the original is kept.
pub const LCER_TRIES: usize = 10;

/// Replace the automaton state of `tr` by a uniform draw and recompute the
/// successor, reward and discount. Draws for which the action is undefined
/// are rejected; after [`LCER_TRIES`] rejections the original is returned.
pub fn lcer_relabel<R: Rng + ?Sized>(tr: &Experience, mdp: &ProductMdp<'_>, rng: &mut R) -> Experience {
    let l = &mdp.task.automaton;
    let letter = mdp.task.label(tr.next.cell);
    for _ in 0..LCER_TRIES {
        let b = rng.random_range(0..l.state_count());
        let b_next = match tr.action {
            ProductAction::Env(_) => match l.step_first(b, letter) {
                Ok(x) => x,
                Err(_) => continue,
            },
            ProductAction::Epsilon(t) => {
                if !l.epsilon_targets(b).contains(&t) {
                    continue;
                }
                t
            }
        };
        let (r_ext, discount) = mdp.reward_discount(b_next);
        return Experience {
            state: ProductState { cell: tr.state.cell, b },
            next: ProductState { cell: tr.next.cell, b: b_next },
            r_ext,
            discount,
            ..*tr
        };
    }
    *tr
}

/// `2r − 1`.
pub fn reward_shift(r: f64) -> f64 {
    2.0 * r - 1.0
}

/// Learner key that keeps only the automaton state.
pub fn ldba_only_key(ps: ProductState) -> usize {
    ps.b
}
