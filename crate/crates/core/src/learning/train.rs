//! The training loop: collect product transitions, keep the automaton
//! posterior current, refresh potentials periodically and learn with
//! intrinsic rewards attached at update time. Q-learning learns from
//! replayed batches; SARSA updates online on each transition.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    greedy_action, q_learning_update, sarsa_update, select_action, PolicyConfig, QTable, ReplayBuffer, Update,
};
use crate::baselines::{count_potentials, lcer_relabel, reward_shift, Method, VisitCounts};
use crate::environments::{Action, TaskBundle};
use crate::product::{EpisodeAccumulator, Experience, ProductAction, ProductError, ProductMdp, ProductState};
use crate::rng::{stream, Stream};
use crate::shaping::{
    build_mrp, empirical_kernel, expected_values, init_prior, intrinsic_reward, partially_informed_prior, solve_values,
    vi_kernel, DirichletParams, Estimator, MrpModel, PotentialTable, ShapingError, TransitionCounts,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Learner {
    #[default]
    #[serde(rename = "qlearning")]
    QLearning,
    #[serde(rename = "sarsa")]
    Sarsa,
}

impl Learner {
    pub fn as_str(self) -> &'static str {
        match self {
            Learner::QLearning => "qlearning",
            Learner::Sarsa => "sarsa",
        }
    }
}

impl std::str::FromStr for Learner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qlearning" => Ok(Learner::QLearning),
            "sarsa" => Ok(Learner::Sarsa),
            _ => Err(format!("unknown learner `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub learner: Learner,
    pub total_steps: usize,
    /// Prior strength of the Dirichlet prior.
    pub alpha: f64,
    pub intrinsic_scale: f64,
    pub potential_update_period: usize,
    /// Posterior samples per refresh; 0 solves once with the mean kernel.
    pub posterior_samples: usize,
    pub buffer_capacity: usize,
    pub eval_every: usize,
    /// Whether ε-moves enter the posterior counts.
    pub count_epsilon_transitions: bool,
    pub policy: PolicyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Drl2,
            learner: Learner::QLearning,
            total_steps: 200_000,
            alpha: 1e3,
            intrinsic_scale: 0.1,
            potential_update_period: 2000,
            posterior_samples: 32,
            buffer_capacity: 400_000,
            eval_every: 1000,
            count_epsilon_transitions: true,
            policy: PolicyConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.policy.validate().map_err(TrainError::Config)?;
        let fail = |m: &str| Err(TrainError::Config(m.into()));
        if self.total_steps <= self.policy.initial_exploration_steps {
            return fail("total steps must exceed the initial exploration period");
        }
        if self.method.is_drl2() && !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be positive");
        }
        if !(self.intrinsic_scale >= 0.0 && self.intrinsic_scale.is_finite()) {
            return fail("intrinsic scale must be nonnegative");
        }
        if self.potential_update_period == 0 || self.eval_every == 0 || self.buffer_capacity == 0 {
            return fail("periods and buffer capacity must be positive");
        }
        if self.method == Method::Lcer && self.learner == Learner::Sarsa {
            return fail("lcer relabels off-policy data and cannot be combined with sarsa");
        }
        Ok(())
    }

    fn estimator(&self) -> Estimator {
        match self.posterior_samples {
            0 => Estimator::MeanKernel,
            n => Estimator::Sampled(n),
        }
    }
}

/// Result of one greedy evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub edr: f64,
    pub violation: bool,
    pub satisfied: bool,
    pub accept_visits: usize,
}

/// Summary of one training episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub end_step: usize,
    pub violated: bool,
    pub accept_visits: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub evals: Vec<EvalRecord>,
    pub episodes: Vec<EpisodeSummary>,
    pub posterior: Option<DirichletParams>,
    pub potentials: Option<PotentialTable>,
    pub q: QTable,
}

enum Shaper {
    None,
    Posterior(DirichletParams),
    Empirical,
    Fixed(PotentialTable),
    Count,
}

struct Run<'a> {
    cfg: &'a TrainConfig,
    mdp: ProductMdp<'a>,
    m: MrpModel,
    sink: Vec<bool>,
    ldba_states: usize,
    q: QTable,
    counts: TransitionCounts,
    visits: VisitCounts,
    shaper: Shaper,
    potentials: Option<PotentialTable>,
}

impl Run<'_> {
    fn key(&self, s: ProductState) -> usize {
        if self.cfg.method == Method::LdbaOnly {
            s.b
        } else {
            self.mdp.task.grid.index(s.cell) * self.ldba_states + s.b
        }
    }

    fn refresh<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), TrainError> {
        self.potentials = match &self.shaper {
            Shaper::None => None,
            Shaper::Posterior(prior) => {
                let post = prior.update(&self.counts)?;
                Some(expected_values(&self.m, &post, self.cfg.estimator(), rng)?)
            }
            Shaper::Empirical => {
                Some(PotentialTable { values: solve_values(&self.m, &empirical_kernel(&self.counts, &self.m))? })
            }
            Shaper::Fixed(p) => Some(p.clone()),
            Shaper::Count => Some(count_potentials(&self.visits, &self.m)),
        };
        Ok(())
    }

    fn behavior<R: Rng + ?Sized>(&self, s: ProductState, t: usize, rng: &mut R) -> usize {
        let valid = self.mdp.slot_count(s.b);
        if t < self.cfg.policy.initial_exploration_steps {
            rng.random_range(0..valid)
        } else {
            let p = &self.cfg.policy;
            select_action(&self.q, self.key(s), valid, p.epsilon, p.tie_break, rng).slot
        }
    }

    fn learn<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, replay: &mut R, relabel: &mut R) {
        for _ in 0..self.cfg.policy.batch_size {
            let mut e = *buffer.sample(replay);
            if self.cfg.method == Method::Lcer {
                e = lcer_relabel(&e, &self.mdp, relabel);
            }
            self.update(&e);
        }
    }

    fn update(&mut self, e: &Experience) {
        let p = self.cfg.policy;
        let mut r = if self.cfg.method == Method::RewardShift { reward_shift(e.r_ext) } else { e.r_ext };
        if let Some(pot) = &self.potentials {
            r += self.cfg.intrinsic_scale * intrinsic_reward(pot, &self.m, e.state.b, e.next.b);
        }
        let u = Update {
            state: self.key(e.state),
            slot: self.mdp.action_slot(e.state.b, e.action).expect("stored action is valid"),
            reward: r,
            discount: if p.use_eventual_discounting { e.discount } else { p.gamma },
            next_state: self.key(e.next),
        };
        match self.cfg.learner {
            Learner::QLearning => q_learning_update(&mut self.q, &u, self.mdp.slot_count(e.next.b), p.learning_rate),
            Learner::Sarsa => {
                let a = e.next_action.expect("sarsa experience carries its next action");
                let slot = self.mdp.action_slot(e.next.b, a).expect("next action is valid");
                sarsa_update(&mut self.q, &u, slot, p.sarsa_learning_rate);
            }
        }
    }

    fn evaluate<R: Rng + ?Sized>(&self, step: usize, rng: &mut R) -> Result<EvalRecord, TrainError> {
        let mut s = self.mdp.reset(rng)?;
        let mut prev: Option<Action> = None;
        let mut acc = EpisodeAccumulator::new(self.mdp.gamma);
        let mut violation = self.sink[s.b];
        for _ in 0..self.mdp.task.episode_length {
            let slot = greedy_action(&self.q, self.key(s), self.mdp.slot_count(s.b), self.cfg.policy.tie_break, rng);
            let a = self.mdp.slot_action(s.b, slot).expect("slot within range");
            let tr = self.mdp.step(s, a, prev, rng)?;
            acc.accumulate(tr.discount, tr.r_ext);
            violation |= self.sink[tr.next.b];
            prev = tr.executed;
            s = tr.next;
        }
        Ok(EvalRecord {
            step,
            edr: acc.total,
            violation,
            satisfied: acc.accept_visits > 0,
            accept_visits: acc.accept_visits,
        })
    }
}

/// Train on `task` with the product built at the learner's discount. All
/// randomness derives from `seed`.
pub fn train_loop(task: &TaskBundle, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mdp = ProductMdp::new(task, cfg.policy.gamma);
    let l = &task.automaton;
    let m = build_mrp(l, cfg.policy.gamma, cfg.method.adds_virtual_sink())?;
    let mut sink = vec![false; l.state_count()];
    for s in l.find_sinks() {
        sink[s] = true;
    }
    let rows = if cfg.method == Method::LdbaOnly { l.state_count() } else { task.grid.cell_count() * l.state_count() };
    let shaper = match cfg.method {
        Method::Drl2 | Method::Drl2NoSink => Shaper::Posterior(init_prior(&m, cfg.alpha)?),
        Method::Drl2Partial => Shaper::Posterior(partially_informed_prior(&m, cfg.alpha)?),
        Method::Drl2Empirical => Shaper::Empirical,
        Method::Drl2Vi => Shaper::Fixed(PotentialTable { values: solve_values(&m, &vi_kernel(&m))? }),
        Method::Count => Shaper::Count,
        Method::Lcer | Method::None | Method::RewardShift | Method::LdbaOnly => Shaper::None,
    };
    let n = m.state_count();
    let mut run = Run {
        cfg,
        mdp,
        m,
        sink,
        ldba_states: l.state_count(),
        q: QTable::zeros(rows, mdp.action_slots()),
        counts: TransitionCounts::zeros(n),
        visits: VisitCounts::zeros(n),
        shaper,
        potentials: None,
    };

    let mut env = stream(seed, Stream::Env);
    let mut policy = stream(seed, Stream::Policy);
    let mut replay = stream(seed, Stream::Replay);
    let mut posterior = stream(seed, Stream::Posterior);
    let mut eval = stream(seed, Stream::Eval);
    let mut relabel = stream(seed, Stream::Relabel);

    run.refresh(&mut posterior)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut evals = Vec::new();
    let mut episodes = Vec::new();

    let mut state = run.mdp.reset(&mut env)?;
    run.visits.record(state.b);
    let mut prev: Option<Action> = None;
    let mut ep_step = 0;
    let mut ep_violated = run.sink[state.b];
    let mut ep_visits = 0;
    let mut pending: Option<Experience> = None;

    for t in 0..cfg.total_steps {
        let slot = run.behavior(state, t, &mut policy);
        let action = run.mdp.slot_action(state.b, slot).expect("slot within range");
        if let Some(mut p) = pending.take() {
            p.next_action = Some(action);
            if t > cfg.policy.initial_exploration_steps {
                run.update(&p);
            }
        }
        let tr = run.mdp.step(state, action, prev, &mut env)?;
        if cfg.count_epsilon_transitions || matches!(action, ProductAction::Env(_)) {
            run.counts.record(&run.m, state.b, tr.next.b)?;
        }
        run.visits.record(tr.next.b);
        let e = Experience::new(state, action, &tr);
        match cfg.learner {
            Learner::QLearning => buffer.push(e),
            Learner::Sarsa => pending = Some(e),
        }
        ep_violated |= run.sink[tr.next.b];
        ep_visits += usize::from(tr.accepting());
        prev = tr.executed;
        state = tr.next;
        ep_step += 1;

        if cfg.learner == Learner::QLearning && t >= cfg.policy.initial_exploration_steps {
            run.learn(&buffer, &mut replay, &mut relabel);
        }
        if (t + 1) % cfg.potential_update_period == 0 {
            run.refresh(&mut posterior)?;
        }
        if (t + 1) % cfg.eval_every == 0 {
            evals.push(run.evaluate(t + 1, &mut eval)?);
        }
        if ep_step == task.episode_length {
            if let Some(mut p) = pending.take() {
                let slot = run.behavior(state, t + 1, &mut policy);
                p.next_action = run.mdp.slot_action(state.b, slot);
                if t >= cfg.policy.initial_exploration_steps {
                    run.update(&p);
                }
            }
            episodes.push(EpisodeSummary { end_step: t + 1, violated: ep_violated, accept_visits: ep_visits });
            state = run.mdp.reset(&mut env)?;
            run.visits.record(state.b);
            prev = None;
            ep_step = 0;
            ep_violated = run.sink[state.b];
            ep_visits = 0;
        }
    }

    let posterior = match &run.shaper {
        Shaper::Posterior(prior) => Some(prior.update(&run.counts)?),
        _ => None,
    };
    Ok(TrainOutcome { evals, episodes, posterior, potentials: run.potentials, q: run.q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_task, Difficulty};

    fn small(method: Method) -> TrainConfig {
        TrainConfig {
            method,
            total_steps: 6000,
            policy: PolicyConfig { initial_exploration_steps: 500, ..Default::default() },
            potential_update_period: 500,
            eval_every: 500,
            ..Default::default()
        }
    }

    #[test]
    fn evaluation_cadence_and_episode_boundaries() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap();
        let out = train_loop(&t, &small(Method::Drl2), 1).unwrap();
        let steps: Vec<usize> = out.evals.iter().map(|e| e.step).collect();
        assert_eq!(steps, (1..=12).map(|i| i * 500).collect::<Vec<_>>());
        assert_eq!(out.episodes.len(), 6000 / t.episode_length);
        assert!(out.episodes.iter().all(|e| e.end_step % t.episode_length == 0));
        assert!(out.posterior.is_some());
    }

    #[test]
    fn same_seed_same_result() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap();
        for method in [Method::Drl2, Method::Lcer, Method::Count] {
            let a = train_loop(&t, &small(method), 4).unwrap();
            let b = train_loop(&t, &small(method), 4).unwrap();
            assert_eq!(a.evals, b.evals);
            assert_eq!(a.q, b.q);
        }
    }

    #[test]
    fn none_equals_unscaled_drl2() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap();
        let none = train_loop(&t, &small(Method::None), 5).unwrap();
        let zero = train_loop(&t, &TrainConfig { intrinsic_scale: 0.0, ..small(Method::Drl2) }, 5).unwrap();
        assert_eq!(none.evals, zero.evals);
        assert_eq!(none.episodes, zero.episodes);
        assert_eq!(none.q, zero.q);
    }

    #[test]
    fn config_errors() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap();
        let bad = TrainConfig { method: Method::Lcer, learner: Learner::Sarsa, ..small(Method::Lcer) };
        assert!(matches!(train_loop(&t, &bad, 0), Err(TrainError::Config(_))));
        let bad = TrainConfig { total_steps: 100, ..small(Method::None) };
        assert!(matches!(train_loop(&t, &bad, 0), Err(TrainError::Config(_))));
    }

    #[test]
    fn every_method_runs() {
        let t = make_task("fga-jump", Difficulty::Easy).unwrap();
        for method in Method::ALL {
            let out = train_loop(&t, &small(method), 2).unwrap();
            assert_eq!(out.evals.len(), 12);
            assert!(out.evals.iter().all(|e| e.edr.is_finite() && e.edr >= 0.0));
        }
        let sarsa = TrainConfig { learner: Learner::Sarsa, ..small(Method::Drl2) };
        assert_eq!(train_loop(&t, &sarsa, 2).unwrap().evals.len(), 12);
    }
}
