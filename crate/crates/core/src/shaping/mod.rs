//! Potential-based intrinsic rewards from a Bayesian view of the automaton.
//!
//! The automaton is read as a Markov reward process: states keep the product
//! reward and discount (1 and γ when accepting, 0 and 1 otherwise), and the
//! unknown transition kernel gets a Dirichlet prior over the edges the
//! automaton allows. Observed automaton transitions update the posterior, and
//! the posterior expected values serve as a potential `V̄` for the shaping
//! reward `γ×(b')·V̄(b') − V̄(b)`.

mod kernels;
mod solve;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::automata::{Ldba, StateId};

pub use kernels::{empirical_kernel, partially_informed_prior, vi_kernel};
pub use solve::{solve_closed_form, solve_fixed_point, solve_values, value_classes, ValueClass};

/// Tolerance on row sums of a stochastic matrix.
pub const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapingError {
    #[error("linear system is singular")]
    SingularSystem,
    #[error("fixed-point iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("transition {from} -> {to} is not allowed by the automaton")]
    CountOffMask { from: usize, to: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// The automaton as a Markov reward process with unknown kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct MrpModel {
    pub mask: Vec<Vec<bool>>,
    pub reward: Vec<f64>,
    pub discount: Vec<f64>,
    pub accepting: Vec<bool>,
    /// Sinks of the automaton plus the virtual sink, if any.
    pub sinks: Vec<usize>,
    pub virtual_sink: Option<usize>,
    pub gamma: f64,
}

impl MrpModel {
    pub fn state_count(&self) -> usize {
        self.mask.len()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.mask[i].iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| j)
    }

    /// An MRP from explicit parts, mainly for tests and random instances.
    pub fn from_parts(mask: Vec<Vec<bool>>, accepting: Vec<bool>, gamma: f64) -> Result<Self, ShapingError> {
        let n = mask.len();
        if accepting.len() != n || mask.iter().any(|r| r.len() != n) {
            return Err(ShapingError::ShapeMismatch("mask must be square and match accepting".into()));
        }
        if mask.iter().any(|r| !r.iter().any(|&m| m)) {
            return Err(ShapingError::InvalidParameter("every mask row needs a successor".into()));
        }
        let reward = accepting.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let discount = accepting.iter().map(|&a| if a { gamma } else { 1.0 }).collect();
        let sinks =
            (0..n).filter(|&i| !accepting[i] && mask[i].iter().enumerate().all(|(j, &m)| !m || j == i)).collect();
        Ok(MrpModel { mask, reward, discount, accepting, sinks, virtual_sink: None, gamma })
    }
}

/// Build the MRP of an automaton. With `add_virtual_sink`, an automaton
/// without sinks gets an extra absorbing state reachable from every state.
pub fn build_mrp(l: &Ldba, gamma: f64, add_virtual_sink: bool) -> Result<MrpModel, ShapingError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ShapingError::InvalidParameter(format!("gamma {gamma} outside (0, 1)")));
    }
    let mut mask = l.adjacency_mask();
    let mut accepting: Vec<bool> = (0..l.state_count()).map(|s| l.is_accepting(s)).collect();
    let mut sinks = l.find_sinks();
    let mut virtual_sink = None;
    if add_virtual_sink && sinks.is_empty() {
        let v = mask.len();
        for row in &mut mask {
            row.push(true);
        }
        let mut row = vec![false; v + 1];
        row[v] = true;
        mask.push(row);
        accepting.push(false);
        sinks.push(v);
        virtual_sink = Some(v);
    }
    let reward = accepting.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    let discount = accepting.iter().map(|&a| if a { gamma } else { 1.0 }).collect();
    Ok(MrpModel { mask, reward, discount, accepting, sinks, virtual_sink, gamma })
}

/// A row-stochastic matrix supported on the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>, mask: &[Vec<bool>]) -> Result<Self, ShapingError> {
        if rows.len() != mask.len() || rows.iter().zip(mask).any(|(r, m)| r.len() != m.len()) {
            return Err(ShapingError::ShapeMismatch("kernel and mask differ in shape".into()));
        }
        for (i, (row, m)) in rows.iter().zip(mask).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(ShapingError::InvalidParameter(format!("row {i} sums to {sum}")));
            }
            for (j, (&p, &allowed)) in row.iter().zip(m).enumerate() {
                if p < 0.0 || (p > 0.0 && !allowed) {
                    return Err(ShapingError::InvalidParameter(format!("entry ({i}, {j}) = {p} off the mask")));
                }
            }
        }
        Ok(Kernel { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Observed automaton transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    counts: Vec<Vec<u64>>,
}

impl TransitionCounts {
    pub fn zeros(n: usize) -> Self {
        TransitionCounts { counts: vec![vec![0; n]; n] }
    }

    pub fn from_rows(counts: Vec<Vec<u64>>) -> Self {
        TransitionCounts { counts }
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    /// Count one transition, rejecting edges absent from the mask.
    pub fn record(&mut self, m: &MrpModel, from: StateId, to: StateId) -> Result<(), ShapingError> {
        if !m.mask.get(from).and_then(|r| r.get(to)).copied().unwrap_or(false) {
            return Err(ShapingError::CountOffMask { from, to });
        }
        self.counts[from][to] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Dirichlet parameters, one independent Dirichlet per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<Vec<f64>>,
}

impl DirichletParams {
    pub fn from_rows(alpha: Vec<Vec<f64>>) -> Result<Self, ShapingError> {
        for (i, row) in alpha.iter().enumerate() {
            if row.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) || row.iter().sum::<f64>() <= 0.0 {
                return Err(ShapingError::InvalidParameter(format!("row {i} is not a valid Dirichlet")));
            }
        }
        Ok(DirichletParams { alpha })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    /// Conjugate update: parameters plus counts.
    pub fn update(&self, c: &TransitionCounts) -> Result<DirichletParams, ShapingError> {
        if c.counts.len() != self.alpha.len() || c.counts.iter().zip(&self.alpha).any(|(a, b)| a.len() != b.len()) {
            return Err(ShapingError::ShapeMismatch("counts and parameters differ in shape".into()));
        }
        let mut alpha = self.alpha.clone();
        for (i, row) in alpha.iter_mut().enumerate() {
            for (j, a) in row.iter_mut().enumerate() {
                let k = c.counts[i][j];
                if k > 0 && *a == 0.0 {
                    return Err(ShapingError::CountOffMask { from: i, to: j });
                }
                *a += k as f64;
            }
        }
        Ok(DirichletParams { alpha })
    }

    /// The posterior mean kernel.
    pub fn mean(&self) -> Kernel {
        let rows = self
            .alpha
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|a| a / s).collect()
            })
            .collect();
        Kernel { rows }
    }

    /// Draw one kernel: every row is an independent Dirichlet sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Kernel {
        let rows = self
            .alpha
            .iter()
            .map(|row| {
                let mut draws: Vec<f64> = row
                    .iter()
                    .map(|&a| if a > 0.0 { Gamma::new(a, 1.0).expect("positive shape").sample(rng) } else { 0.0 })
                    .collect();
                let mut s: f64 = draws.iter().sum();
                if s <= 0.0 || !s.is_finite() {
                    // All gamma draws underflowed: fall back to the mean.
                    let t: f64 = row.iter().sum();
                    draws = row.iter().map(|a| a / t).collect();
                    s = 1.0;
                }
                draws.iter().map(|d| d / s).collect()
            })
            .collect();
        Kernel { rows }
    }
}

/// Symmetric prior: every allowed successor of a row gets `alpha / m`,
/// where `m` is the number of allowed successors.
pub fn init_prior(m: &MrpModel, alpha: f64) -> Result<DirichletParams, ShapingError> {
    prior_on_mask(&m.mask, alpha)
}

pub(crate) fn prior_on_mask(mask: &[Vec<bool>], alpha: f64) -> Result<DirichletParams, ShapingError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(ShapingError::InvalidParameter(format!("alpha {alpha} must be positive")));
    }
    let rows = mask
        .iter()
        .map(|row| {
            let k = row.iter().filter(|&&b| b).count() as f64;
            row.iter().map(|&b| if b { alpha / k } else { 0.0 }).collect()
        })
        .collect();
    DirichletParams::from_rows(rows)
}

/// The high-level value vector used as a shaping potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    pub values: Vec<f64>,
}

impl PotentialTable {
    pub fn get(&self, b: StateId) -> f64 {
        self.values[b]
    }
}

/// How the posterior expectation of the values is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Average over this many posterior kernel samples; 1 is Thompson
    /// sampling.
    Sampled(usize),
    /// Solve once with the posterior mean kernel. Cheaper, but not the
    /// expectation of the values.
    MeanKernel,
}

/// Posterior expected values `E_K[V̄_K]`.
pub fn expected_values<R: Rng + ?Sized>(
    m: &MrpModel,
    p: &DirichletParams,
    estimator: Estimator,
    rng: &mut R,
) -> Result<PotentialTable, ShapingError> {
    match estimator {
        Estimator::MeanKernel => Ok(PotentialTable { values: solve_values(m, &p.mean())? }),
        Estimator::Sampled(0) => Err(ShapingError::InvalidParameter("at least one sample is required".into())),
        Estimator::Sampled(n) => {
            // Running mean: identical draws average to exactly that value.
            let mut mean = vec![0.0; m.state_count()];
            for t in 1..=n {
                let k = p.sample(rng);
                let v = solve_values(m, &k)?;
                for (a, x) in mean.iter_mut().zip(v) {
                    *a += (x - *a) / t as f64;
                }
            }
            Ok(PotentialTable { values: mean })
        }
    }
}

/// Shaping reward for the automaton transition `b -> b'`.
pub fn intrinsic_reward(v: &PotentialTable, m: &MrpModel, b: StateId, b_next: StateId) -> f64 {
    m.discount[b_next] * v.get(b_next) - v.get(b)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::automata::library;

    #[test]
    fn sequential_gets_a_virtual_sink() {
        let l = library::load("sequential_4").unwrap();
        let m = build_mrp(&l, 0.99, true).unwrap();
        assert_eq!(m.state_count(), 6);
        assert_eq!(m.virtual_sink, Some(5));
        assert!(m.mask.iter().all(|r| r[5]));
        assert_eq!(m.mask[5], vec![false, false, false, false, false, true]);
        assert_eq!((m.reward[5], m.discount[5]), (0.0, 1.0));
        let plain = build_mrp(&l, 0.99, false).unwrap();
        assert_eq!(plain.state_count(), 5);
    }

    #[test]
    fn t0_shape_ignores_the_flag() {
        let l = library::load("t0").unwrap();
        let a = build_mrp(&l, 0.99, true).unwrap();
        let b = build_mrp(&l, 0.99, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.state_count(), 4);
        assert_eq!((a.reward[2], a.discount[2]), (1.0, 0.99));
        assert_eq!((a.reward[0], a.discount[0]), (0.0, 1.0));
    }

    #[test]
    fn prior_splits_alpha_over_allowed_successors() {
        let mask = vec![vec![true, true], vec![false, true]];
        let m = MrpModel::from_parts(mask, vec![false, false], 0.99).unwrap();
        let p = init_prior(&m, 1000.0).unwrap();
        assert_eq!(p.rows()[0], vec![500.0, 500.0]);
        assert_eq!(p.rows()[1], vec![0.0, 1000.0]);
        let weak = init_prior(&m, 1.0).unwrap();
        assert_eq!(weak.mean(), p.mean());
        assert!(init_prior(&m, 0.0).is_err());
    }

    #[test]
    fn posterior_is_prior_plus_counts() {
        let mask = vec![vec![true, true], vec![false, true]];
        let m = MrpModel::from_parts(mask, vec![false, false], 0.99).unwrap();
        let p = init_prior(&m, 1000.0).unwrap();
        let mut c = TransitionCounts::zeros(2);
        for _ in 0..10 {
            c.record(&m, 0, 0).unwrap();
        }
        assert_eq!(p.update(&c).unwrap().rows()[0], vec![510.0, 500.0]);
        assert_eq!(p.update(&TransitionCounts::zeros(2)).unwrap(), p);
        assert_eq!(c.record(&m, 1, 0), Err(ShapingError::CountOffMask { from: 1, to: 0 }));
        let off = TransitionCounts::from_rows(vec![vec![0, 0], vec![3, 0]]);
        assert_eq!(p.update(&off), Err(ShapingError::CountOffMask { from: 1, to: 0 }));
    }

    #[test]
    fn degenerate_rows_sample_to_one() {
        let p = DirichletParams::from_rows(vec![vec![0.0, 7.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(p.sample(&mut rng).rows()[0], vec![0.0, 1.0]);
        }
    }

    #[test]
    fn sampled_rows_have_dirichlet_spread() {
        let p = DirichletParams::from_rows(vec![vec![500.0, 500.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng).rows()[0][0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // a(1 - a) / (A + 1) with a = 0.5, A = 1000.
        let expected_sd = (0.25f64 / 1001.0).sqrt();
        assert!((mean - 0.5).abs() < 1e-3);
        assert!((var.sqrt() - expected_sd).abs() < 5e-4, "{}", var.sqrt());
    }

    #[test]
    fn single_accepting_state_value() {
        let m = MrpModel::from_parts(vec![vec![true]], vec![true], 0.99).unwrap();
        let p = init_prior(&m, 1000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [1, 4, 32] {
            let v = expected_values(&m, &p, Estimator::Sampled(n), &mut rng).unwrap();
            assert_eq!(v.values, vec![1.0 / (1.0 - 0.99)]);
            assert!((v.values[0] - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn thompson_is_one_draw() {
        let l = library::load("t0").unwrap();
        let m = build_mrp(&l, 0.99, true).unwrap();
        let p = init_prior(&m, 10.0).unwrap();
        let v = expected_values(&m, &p, Estimator::Sampled(1), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let k = p.sample(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(v.values, solve_values(&m, &k).unwrap());
    }

    #[test]
    fn intrinsic_reward_cases() {
        let l = library::load("t0").unwrap();
        let m = build_mrp(&l, 0.99, true).unwrap();
        let v = PotentialTable { values: vec![40.0, 50.0, 60.0, 0.0] };
        assert_eq!(intrinsic_reward(&v, &m, 0, 0), 0.0);
        assert_eq!(intrinsic_reward(&v, &m, 1, 3), -50.0);
        assert!((intrinsic_reward(&v, &m, 1, 2) - (0.99 * 60.0 - 50.0)).abs() < 1e-12);
    }

    #[test]
    fn kernel_validation() {
        let mask = vec![vec![true, false], vec![true, true]];
        assert!(Kernel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]], &mask).is_ok());
        assert!(Kernel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], &mask).is_err());
        assert!(Kernel::new(vec![vec![1.0, 0.0], vec![0.5, 0.4]], &mask).is_err());
    }
}
