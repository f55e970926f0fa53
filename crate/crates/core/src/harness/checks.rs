//! Acceptance criteria, runnable from the command line and from the
//! acceptance test target.

use rand::Rng;

use super::{aggregate, intervals_overlap, run_experiment, AggregateRow, ExperimentConfig, HarnessError};
use crate::automata::cross_validate;
use crate::baselines::Method;
use crate::environments::{make_task, Difficulty, TASKS};
use crate::learning::Learner;
use crate::ltl::parse;
use crate::product::{ProductMdp, TabularProduct};
use crate::rng::{stream, Stream};
use crate::shaping::{
    build_mrp, expected_values, init_prior, intrinsic_reward, solve_fixed_point, solve_values, Estimator, MrpModel,
    TransitionCounts,
};

const GAMMA: f64 = 0.99;

/// Seeds and steps for the learning-curve criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub seeds: usize,
    pub steps: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { seeds: 10, steps: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict { passed, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub check: fn(&Budget) -> Result<Verdict, HarnessError>,
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: "AC1", title: "uniform values without a virtual sink", check: uniform_values },
        Criterion { id: "AC2", title: "closed form agrees with fixed point", check: closed_form_vs_fixed_point },
        Criterion { id: "AC3", title: "Dirichlet posterior mean and update", check: dirichlet_posterior },
        Criterion { id: "AC4", title: "automata agree with LTL semantics", check: oracle_equivalence },
        Criterion { id: "AC5", title: "shaping preserves greedy actions", check: consistency },
        Criterion { id: "AC6", title: "intrinsic rewards telescope", check: telescoping },
        Criterion { id: "AC7", title: "reach-avoid hard: drl2 beats no exploration", check: reach_avoid_trend },
        Criterion { id: "AC8", title: "sequential medium: virtual sink ablation", check: virtual_sink_ablation },
        Criterion { id: "AC9", title: "sequential medium: empirical kernel ablation", check: kernel_ablation },
        Criterion { id: "AC10", title: "reach-avoid medium: automaton-only learner fails", check: ldba_only },
        Criterion { id: "AC11", title: "reach-avoid medium: ordering under sarsa", check: sarsa_ordering },
    ]
}

fn sequential_medium_mrp(virtual_sink: bool) -> Result<MrpModel, HarnessError> {
    let task = make_task("sequential", Difficulty::Medium)?;
    build_mrp(&task.automaton, GAMMA, virtual_sink).map_err(train_err)
}

fn train_err(e: crate::shaping::ShapingError) -> HarnessError {
    HarnessError::Train(e.into())
}

fn uniform_values(_: &Budget) -> Result<Verdict, HarnessError> {
    let m = sequential_medium_mrp(false)?;
    let prior = init_prior(&m, 1e3).map_err(train_err)?;
    let mut rng = stream(0, Stream::Posterior);
    let full = 1.0 / (1.0 - GAMMA);
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for _ in 0..10 {
        let k = prior.sample(&mut rng);
        let v = solve_values(&m, &k).map_err(train_err)?;
        worst = v.iter().fold(worst, |w, x| w.max((x - full).abs()).max((x - 100.0).abs()));
        let table = crate::shaping::PotentialTable { values: v };
        for b in 0..m.state_count() {
            for b2 in m.successors(b).filter(|&j| !m.accepting[j]) {
                if intrinsic_reward(&table, &m, b, b2) != 0.0 {
                    nonzero += 1;
                }
            }
        }
    }
    Ok(Verdict::new(
        worst <= 1e-6 && nonzero == 0,
        format!("max |V - 100| = {worst:.2e}, nonzero non-accepting rewards = {nonzero}"),
    ))
}

fn closed_form_vs_fixed_point(_: &Budget) -> Result<Verdict, HarnessError> {
    let mut rng = stream(0, Stream::Validation);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let density = rng.random_range(0.2..0.8);
        let mask: Vec<Vec<bool>> = (0..n)
            .map(|_| {
                let mut row: Vec<bool> = (0..n).map(|_| rng.random_bool(density)).collect();
                row[rng.random_range(0..n)] = true;
                row
            })
            .collect();
        let accepting: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let m = MrpModel::from_parts(mask, accepting, GAMMA).map_err(train_err)?;
        let k = init_prior(&m, n as f64).map_err(train_err)?.sample(&mut rng);
        let a = solve_values(&m, &k).map_err(train_err)?;
        let b = solve_fixed_point(&m, &k, 1e-13, 50_000_000).map_err(train_err)?;
        worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
    }
    Ok(Verdict::new(worst < 1e-8, format!("max-norm disagreement {worst:.2e} over 100 MRPs")))
}

fn dirichlet_posterior(_: &Budget) -> Result<Verdict, HarnessError> {
    let m = sequential_medium_mrp(true)?;
    let n = m.state_count();
    let prior = init_prior(&m, 1.0).map_err(train_err)?;
    let mut rng = stream(1, Stream::Validation);
    let counts: Vec<Vec<u64>> =
        (0..n).map(|i| (0..n).map(|j| if m.mask[i][j] { rng.random_range(0..6) } else { 0 }).collect()).collect();
    let post = prior.update(&TransitionCounts::from_rows(counts.clone())).map_err(train_err)?;
    let exact = (0..n).all(|i| (0..n).all(|j| post.rows()[i][j] == prior.rows()[i][j] + counts[i][j] as f64));
    let samples = 100_000;
    let mut acc = vec![vec![0.0; n]; n];
    for _ in 0..samples {
        let k = post.sample(&mut rng);
        for (a, row) in acc.iter_mut().zip(k.rows()) {
            for (x, p) in a.iter_mut().zip(row) {
                *x += p;
            }
        }
    }
    let mean = post.mean();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((acc[i][j] / samples as f64 - mean.get(i, j)).abs());
        }
    }
    Ok(Verdict::new(
        exact && worst <= 1e-2,
        format!("update exact = {exact}, max |MC - mean| = {worst:.2e} over {samples} samples"),
    ))
}

fn oracle_equivalence(_: &Budget) -> Result<Verdict, HarnessError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (name, diff, _) in TASKS {
        let t = make_task(name, diff.parse().map_err(HarnessError::Config)?)?;
        let key = (t.automaton_name.clone(), t.formula.clone());
        if !pairs.contains(&key) {
            pairs.push(key);
        }
    }
    let mut rng = stream(2, Stream::Validation);
    let mut total = 0;
    let mut bad = Vec::new();
    for (name, formula) in &pairs {
        let l = crate::automata::library::load(name).map_err(|e| HarnessError::Config(e.to_string()))?;
        let f = parse(formula, l.alphabet()).map_err(|e| HarnessError::Config(e.to_string()))?;
        let cv = cross_validate(&l, &f, 1000, &mut rng).map_err(|e| HarnessError::Config(e.to_string()))?;
        total += cv.disagreements.len();
        if !cv.agrees() {
            bad.push(name.clone());
        }
    }
    Ok(Verdict::new(total == 0, format!("{} automata x 1000 words, {total} disagreements {bad:?}", pairs.len())))
}

fn consistency(_: &Budget) -> Result<Verdict, HarnessError> {
    let task = make_task("reach-loop", Difficulty::Easy)?;
    let mdp = ProductMdp::new(&task, GAMMA);
    let tab = TabularProduct::enumerate(&mdp).map_err(|e| HarnessError::Train(e.into()))?;
    let m = build_mrp(&task.automaton, GAMMA, true).map_err(train_err)?;
    let mut rng = stream(3, Stream::Posterior);
    let pot = expected_values(&m, &init_prior(&m, 1e3).map_err(train_err)?, Estimator::Sampled(32), &mut rng)
        .map_err(train_err)?;
    let (v0, _) = tab.value_iteration(None, 1e-10, 10_000_000);
    let g0 = tab.greedy_sets(&v0, None, 1e-6);
    let mut mismatches = 0;
    for scale in [0.1, 1.0, 10.0] {
        let f = |b: usize, b2: usize| scale * intrinsic_reward(&pot, &m, b, b2);
        let (v1, _) = tab.value_iteration(Some(&f), 1e-10, 10_000_000);
        let g1 = tab.greedy_sets(&v1, Some(&f), 1e-6);
        mismatches += g0.iter().zip(&g1).filter(|(a, b)| a != b).count();
    }
    Ok(Verdict::new(
        mismatches == 0,
        format!("{} product states, {mismatches} differing greedy sets over 3 shaping scales", tab.states.len()),
    ))
}

fn telescoping(_: &Budget) -> Result<Verdict, HarnessError> {
    let task = make_task("t0", Difficulty::Easy)?;
    let m = build_mrp(&task.automaton, GAMMA, true).map_err(train_err)?;
    let n = m.state_count();
    let mut rng = stream(4, Stream::Validation);
    let counts: Vec<Vec<u64>> =
        (0..n).map(|i| (0..n).map(|j| if m.mask[i][j] { rng.random_range(0..50) } else { 0 }).collect()).collect();
    let post = init_prior(&m, 1e3).and_then(|p| p.update(&TransitionCounts::from_rows(counts))).map_err(train_err)?;
    let pot = expected_values(&m, &post, Estimator::Sampled(32), &mut rng).map_err(train_err)?;
    let non_accepting: Vec<usize> = (0..n).filter(|&b| !m.accepting[b]).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut b = non_accepting[rng.random_range(0..non_accepting.len())];
        let start = b;
        let mut total = 0.0;
        for _ in 0..rng.random_range(1..=30) {
            let next: Vec<usize> = m.successors(b).filter(|&j| !m.accepting[j]).collect();
            if next.is_empty() {
                break;
            }
            let b2 = next[rng.random_range(0..next.len())];
            total += intrinsic_reward(&pot, &m, b, b2);
            b = b2;
        }
        worst = worst.max((total - (pot.get(b) - pot.get(start))).abs());
    }
    Ok(Verdict::new(worst <= 1e-12, format!("max |Σ F - ΔV| = {worst:.2e} over 1000 sequences")))
}

fn final_row(
    task: &str,
    difficulty: Difficulty,
    method: Method,
    learner: Learner,
    budget: &Budget,
) -> Result<AggregateRow, HarnessError> {
    let mut cfg = ExperimentConfig {
        task: task.into(),
        difficulty,
        seeds: (0..budget.seeds as u64).collect(),
        ..Default::default()
    };
    cfg.train.method = method;
    cfg.train.learner = learner;
    cfg.train.total_steps = budget.steps;
    let runs = run_experiment(&cfg)?;
    let series: Vec<_> = runs.iter().map(|r| &r.metrics).collect();
    let rows = aggregate(&series)?;
    rows.last().copied().ok_or_else(|| HarnessError::Config("no evaluations recorded".into()))
}

fn show(name: &str, r: &AggregateRow) -> String {
    format!("{name} {:.3} [{:.3}, {:.3}]", r.mean_edr, r.ci_low, r.ci_high)
}

fn ci(r: &AggregateRow) -> (f64, f64) {
    (r.ci_low, r.ci_high)
}

fn reach_avoid_trend(b: &Budget) -> Result<Verdict, HarnessError> {
    let drl2 = final_row("reach-avoid", Difficulty::Hard, Method::Drl2, Learner::QLearning, b)?;
    let none = final_row("reach-avoid", Difficulty::Hard, Method::None, Learner::QLearning, b)?;
    let passed = drl2.mean_edr > none.mean_edr
        && !intervals_overlap(ci(&drl2), ci(&none))
        && none.mean_edr < 0.1 * drl2.mean_edr;
    Ok(Verdict::new(passed, format!("{}; {}", show("drl2", &drl2), show("none", &none))))
}

fn virtual_sink_ablation(b: &Budget) -> Result<Verdict, HarnessError> {
    let with = final_row("sequential", Difficulty::Medium, Method::Drl2, Learner::QLearning, b)?;
    let without = final_row("sequential", Difficulty::Medium, Method::Drl2NoSink, Learner::QLearning, b)?;
    let none = final_row("sequential", Difficulty::Medium, Method::None, Learner::QLearning, b)?;
    let passed =
        intervals_overlap(ci(&without), ci(&none)) && with.ci_low > without.ci_high && with.ci_low > none.ci_high;
    Ok(Verdict::new(
        passed,
        format!("{}; {}; {}", show("drl2", &with), show("drl2-no-sink", &without), show("none", &none)),
    ))
}

fn kernel_ablation(b: &Budget) -> Result<Verdict, HarnessError> {
    let informed = final_row("sequential", Difficulty::Medium, Method::Drl2, Learner::QLearning, b)?;
    let empirical = final_row("sequential", Difficulty::Medium, Method::Drl2Empirical, Learner::QLearning, b)?;
    let none = final_row("sequential", Difficulty::Medium, Method::None, Learner::QLearning, b)?;
    let passed = empirical.mean_edr <= informed.mean_edr && intervals_overlap(ci(&empirical), ci(&none));
    Ok(Verdict::new(
        passed,
        format!("{}; {}; {}", show("drl2", &informed), show("drl2-empirical", &empirical), show("none", &none)),
    ))
}

fn ldba_only(b: &Budget) -> Result<Verdict, HarnessError> {
    let r = final_row("reach-avoid", Difficulty::Medium, Method::LdbaOnly, Learner::QLearning, b)?;
    Ok(Verdict::new(r.mean_edr < 0.05, show("ldba-only", &r)))
}

fn sarsa_ordering(b: &Budget) -> Result<Verdict, HarnessError> {
    let drl2 = final_row("reach-avoid", Difficulty::Medium, Method::Drl2, Learner::Sarsa, b)?;
    let none = final_row("reach-avoid", Difficulty::Medium, Method::None, Learner::Sarsa, b)?;
    let passed = drl2.mean_edr > none.mean_edr && !intervals_overlap(ci(&drl2), ci(&none));
    Ok(Verdict::new(passed, format!("sarsa: {}; {}", show("drl2", &drl2), show("none", &none))))
}
