//! The product of a gridworld with an LDBA.
//!
//! Entering an accepting automaton state yields reward 1 and discount γ;
//! every other transition yields reward 0 and discount 1. ε-edges of the
//! automaton become extra actions that keep the agent in place.

use rand::Rng;
use thiserror::Error;

use crate::automata::{AutomatonError, StateId};
use crate::environments::{Action, Cell, TaskBundle};

#[derive(Debug, Error, PartialEq)]
pub enum ProductError {
    #[error("no epsilon edge {from} -> {to}")]
    InvalidEpsilon { from: StateId, to: StateId },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub cell: Cell,
    pub b: StateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProductAction {
    Env(Action),
    Epsilon(StateId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: ProductState,
    pub r_ext: f64,
    pub discount: f64,
    /// The environment action actually executed, after sticky repeats.
    pub executed: Option<Action>,
}

impl Transition {
    pub fn accepting(&self) -> bool {
        self.r_ext > 0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProductMdp<'a> {
    pub task: &'a TaskBundle,
    pub gamma: f64,
}

impl<'a> ProductMdp<'a> {
    pub fn new(task: &'a TaskBundle, gamma: f64) -> Self {
        ProductMdp { task, gamma }
    }

    /// Number of action slots: the environment actions plus the largest
    /// ε-fan-out of any automaton state.
    pub fn action_slots(&self) -> usize {
        Action::COUNT + self.task.automaton.max_epsilon_out_degree()
    }

    /// The automaton state after reading the label of the start cell.
    pub fn initial_b(&self, cell: Cell) -> Result<StateId, ProductError> {
        let l = &self.task.automaton;
        Ok(l.step_first(l.initial(), self.task.label(cell))?)
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProductState, ProductError> {
        let cell = self.task.reset_cell(rng);
        Ok(ProductState { cell, b: self.initial_b(cell)? })
    }

    /// Number of valid slots at automaton state `b`.
    pub fn slot_count(&self, b: StateId) -> usize {
        Action::COUNT + self.task.automaton.epsilon_targets(b).len()
    }

    pub fn actions(&self, b: StateId) -> Vec<ProductAction> {
        (0..self.slot_count(b)).filter_map(|i| self.slot_action(b, i)).collect()
    }

    pub fn slot_action(&self, b: StateId, slot: usize) -> Option<ProductAction> {
        if slot < Action::COUNT {
            Action::from_index(slot).map(ProductAction::Env)
        } else {
            self.task.automaton.epsilon_targets(b).get(slot - Action::COUNT).map(|&t| ProductAction::Epsilon(t))
        }
    }

    pub fn action_slot(&self, b: StateId, a: ProductAction) -> Option<usize> {
        match a {
            ProductAction::Env(a) => Some(a.index()),
            ProductAction::Epsilon(t) => {
                self.task.automaton.epsilon_targets(b).iter().position(|&x| x == t).map(|i| Action::COUNT + i)
            }
        }
    }

    /// Reward and discount for entering automaton state `b`.
    pub fn reward_discount(&self, b: StateId) -> (f64, f64) {
        if self.task.automaton.is_accepting(b) {
            (1.0, self.gamma)
        } else {
            (0.0, 1.0)
        }
    }

    /// One product step. `prev` is the environment action executed on the
    /// previous step, used by sticky dynamics.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: ProductState,
        action: ProductAction,
        prev: Option<Action>,
        rng: &mut R,
    ) -> Result<Transition, ProductError> {
        let (next, executed) = match action {
            ProductAction::Env(a) => {
                let (cell, executed) = self.task.step_env(state.cell, prev, a, rng);
                let b = self.task.automaton.step_first(state.b, self.task.label(cell))?;
                (ProductState { cell, b }, Some(executed))
            }
            ProductAction::Epsilon(t) => {
                if !self.task.automaton.epsilon_targets(state.b).contains(&t) {
                    return Err(ProductError::InvalidEpsilon { from: state.b, to: t });
                }
                (ProductState { cell: state.cell, b: t }, prev)
            }
        };
        let (r_ext, discount) = self.reward_discount(next.b);
        Ok(Transition { next, r_ext, discount, executed })
    }
}

/// A stored product transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub state: ProductState,
    pub action: ProductAction,
    pub next: ProductState,
    pub r_ext: f64,
    pub discount: f64,
    /// Action taken at `next` by the behavior policy, kept for on-policy
    /// targets.
    pub next_action: Option<ProductAction>,
}

impl Experience {
    pub fn new(state: ProductState, action: ProductAction, t: &Transition) -> Self {
        Experience { state, action, next: t.next, r_ext: t.r_ext, discount: t.discount, next_action: None }
    }
}

impl ProductMdp<'_> {
    /// Whether `e` has positive probability under the product kernel, for
    /// some sticky outcome, and carries the matching reward and discount.
    pub fn admits(&self, e: &Experience) -> bool {
        let l = &self.task.automaton;
        let moved = match e.action {
            ProductAction::Env(_) => {
                let cell_ok = Action::ALL.iter().any(|&a| self.task.grid.move_from(e.state.cell, a) == e.next.cell);
                let b_ok = l
                    .step(e.state.b, self.task.label(e.next.cell))
                    .map(|succ| succ.contains(&e.next.b))
                    .unwrap_or(false);
                cell_ok && b_ok
            }
            ProductAction::Epsilon(t) => {
                e.next.cell == e.state.cell && e.next.b == t && l.epsilon_targets(e.state.b).contains(&t)
            }
        };
        moved && (e.r_ext, e.discount) == self.reward_discount(e.next.b)
    }
}

/// Running eventually-discounted return of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeAccumulator {
    pub gamma: f64,
    pub running_gamma: f64,
    pub accept_visits: usize,
    pub step_index: usize,
    pub total: f64,
}

impl EpisodeAccumulator {
    pub fn new(gamma: f64) -> Self {
        EpisodeAccumulator { gamma, running_gamma: 1.0, accept_visits: 0, step_index: 0, total: 0.0 }
    }

    /// Record one transition; returns its contribution `Γ · r_ext`, with Γ
    /// taken before the update.
    pub fn accumulate(&mut self, transition_discount: f64, r_ext: f64) -> f64 {
        let contribution = self.running_gamma * r_ext;
        self.total += contribution;
        self.running_gamma *= transition_discount;
        if transition_discount < 1.0 {
            self.accept_visits += 1;
        }
        self.step_index += 1;
        contribution
    }
}

/// The product with sticky-free dynamics enumerated over every free cell
/// and automaton state.
#[derive(Debug, Clone)]
pub struct TabularProduct {
    pub states: Vec<ProductState>,
    /// Per state: `(slot, next state index, reward, discount)`.
    pub edges: Vec<Vec<(usize, usize, f64, f64)>>,
    pub gamma: f64,
}

impl TabularProduct {
    pub fn enumerate(mdp: &ProductMdp<'_>) -> Result<Self, ProductError> {
        let task = mdp.task;
        let nb = task.automaton.state_count();
        let cells: Vec<Cell> = task.grid.free_cells().collect();
        let mut index = vec![usize::MAX; task.grid.cell_count() * nb];
        let mut states = Vec::new();
        for &c in &cells {
            for b in 0..nb {
                index[task.grid.index(c) * nb + b] = states.len();
                states.push(ProductState { cell: c, b });
            }
        }
        let mut edges = Vec::with_capacity(states.len());
        let deterministic = task.clone().sticky(0.0).expect("zero is a valid probability");
        let det = ProductMdp::new(&deterministic, mdp.gamma);
        let mut rng = crate::rng::stream(0, crate::rng::Stream::Env);
        for s in &states {
            let mut out = Vec::new();
            for slot in 0..det.slot_count(s.b) {
                let a = det.slot_action(s.b, slot).expect("slot within range");
                match det.step(*s, a, None, &mut rng) {
                    Ok(t) => {
                        let j = index[task.grid.index(t.next.cell) * nb + t.next.b];
                        out.push((slot, j, t.r_ext, t.discount));
                    }
                    Err(ProductError::Automaton(AutomatonError::NoMatchingGuard { .. })) => {}
                    Err(e) => return Err(e),
                }
            }
            edges.push(out);
        }
        Ok(TabularProduct { states, edges, gamma: mdp.gamma })
    }

    pub fn index_of(&self, s: ProductState) -> Option<usize> {
        self.states.iter().position(|x| *x == s)
    }

    fn q(
        &self,
        v: &[f64],
        i: usize,
        e: &(usize, usize, f64, f64),
        shaping: Option<&dyn Fn(StateId, StateId) -> f64>,
    ) -> f64 {
        let (_, j, r, d) = *e;
        let f = shaping.map(|f| f(self.states[i].b, self.states[j].b)).unwrap_or(0.0);
        r + f + d * v[j]
    }

    /// Exact value iteration under the eventual discount, optionally adding a
    /// shaping term `f(b, b')` to every reward. Iterates until the max-norm
    /// change drops below `tol`.
    pub fn value_iteration(
        &self,
        shaping: Option<&dyn Fn(StateId, StateId) -> f64>,
        tol: f64,
        max_iter: usize,
    ) -> (Vec<f64>, usize) {
        let mut v = vec![0.0; self.states.len()];
        for it in 1..=max_iter {
            let mut delta: f64 = 0.0;
            let mut next = vec![0.0; v.len()];
            for i in 0..v.len() {
                let best = self.edges[i].iter().map(|e| self.q(&v, i, e, shaping)).fold(f64::NEG_INFINITY, f64::max);
                next[i] = if best.is_finite() { best } else { 0.0 };
                delta = delta.max((next[i] - v[i]).abs());
            }
            v = next;
            if delta < tol {
                return (v, it);
            }
        }
        (v, max_iter)
    }

    /// Slots whose one-step lookahead lies within `tol` of the best.
    pub fn greedy_sets(
        &self,
        v: &[f64],
        shaping: Option<&dyn Fn(StateId, StateId) -> f64>,
        tol: f64,
    ) -> Vec<Vec<usize>> {
        (0..self.states.len())
            .map(|i| {
                let qs: Vec<(usize, f64)> = self.edges[i].iter().map(|e| (e.0, self.q(v, i, e, shaping))).collect();
                let best = qs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                qs.into_iter().filter(|(_, q)| best - q <= tol).map(|(s, _)| s).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::environments::{make_task, Difficulty, Rect};

    #[test]
    fn reset_reach_avoid() {
        let t = make_task("reach-avoid", Difficulty::Hard).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let s = m.reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s, ProductState { cell: Cell::new(0, 3), b: 0 });
    }

    #[test]
    fn reset_inside_avoid_region_lands_in_sink() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap().random_start(Rect::new(0, 0, 0, 0)).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let s = m.reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.b, t.automaton.find_sinks()[0]);
    }

    #[test]
    fn fga_reset_is_nondeterministic_initial_state() {
        let t = make_task("fga-jump", Difficulty::Easy).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let s = m.reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.b, 0);
        assert!(!t.automaton.is_deterministic(0));
        assert_eq!(m.actions(0).len(), 6);
        assert_eq!(m.actions(1).len(), 5);
        assert_eq!(m.action_slots(), 6);
    }

    #[test]
    fn t0_entering_c_from_state_one_accepts() {
        let t = make_task("t0", Difficulty::Easy).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ProductState { cell: Cell::new(5, 4), b: 1 };
        let tr = m.step(s, ProductAction::Env(Action::East), None, &mut rng).unwrap();
        assert_eq!(tr.next, ProductState { cell: Cell::new(6, 4), b: 2 });
        assert_eq!((tr.r_ext, tr.discount), (1.0, 0.99));
    }

    #[test]
    fn non_accepting_and_sink_transitions() {
        let t = make_task("t0", Difficulty::Easy).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ProductState { cell: Cell::new(5, 0), b: 0 };
        let tr = m.step(s, ProductAction::Env(Action::East), None, &mut rng).unwrap();
        assert_eq!((tr.next.b, tr.r_ext, tr.discount), (0, 0.0, 1.0));
        let s = ProductState { cell: Cell::new(3, 0), b: 1 };
        let tr = m.step(s, ProductAction::Env(Action::North), None, &mut rng).unwrap();
        assert_eq!((tr.next.b, tr.r_ext, tr.discount), (3, 0.0, 1.0));
    }

    #[test]
    fn epsilon_actions() {
        let t = make_task("fga-jump", Difficulty::Easy).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ProductState { cell: Cell::new(8, 3), b: 0 };
        let tr = m.step(s, ProductAction::Epsilon(1), Some(Action::East), &mut rng).unwrap();
        assert_eq!(tr.next, ProductState { cell: Cell::new(8, 3), b: 1 });
        assert_eq!((tr.r_ext, tr.discount), (1.0, 0.99));
        assert_eq!(tr.executed, Some(Action::East));
        let bad = ProductState { cell: Cell::new(8, 3), b: 1 };
        assert_eq!(
            m.step(bad, ProductAction::Epsilon(1), None, &mut rng),
            Err(ProductError::InvalidEpsilon { from: 1, to: 1 })
        );
        assert_eq!(m.action_slot(0, ProductAction::Epsilon(1)), Some(5));
        assert_eq!(m.slot_action(0, 5), Some(ProductAction::Epsilon(1)));
        assert_eq!(m.slot_action(1, 5), None);
    }

    #[test]
    fn accumulator_contributions() {
        let mut acc = EpisodeAccumulator::new(0.99);
        assert_eq!(acc.accumulate(1.0, 0.0), 0.0);
        assert_eq!(acc.accumulate(0.99, 1.0), 1.0);
        assert_eq!(acc.accumulate(0.99, 1.0), 0.99);
        assert_eq!(acc.accumulate(0.99, 1.0), 0.99 * 0.99);
        assert_eq!(acc.accept_visits, 3);
        assert!((acc.total - 2.9701).abs() < 1e-12);
        assert!((acc.running_gamma - 0.99f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn enumerated_product_has_every_state() {
        let t = make_task("t0", Difficulty::Easy).unwrap();
        let m = ProductMdp::new(&t, 0.99);
        let tab = TabularProduct::enumerate(&m).unwrap();
        assert_eq!(tab.states.len(), 45 * 4);
        assert!(tab.edges.iter().all(|e| e.len() == 5));
    }
}
