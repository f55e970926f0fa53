//! Alternative kernels and priors used as ablations.

use std::collections::VecDeque;

use super::{prior_on_mask, DirichletParams, Kernel, MrpModel, ShapingError, TransitionCounts};

/// Row-normalized transition counts. Unvisited rows become self-loops.
pub fn empirical_kernel(c: &TransitionCounts, m: &MrpModel) -> Kernel {
    let n = m.state_count();
    let rows = (0..n)
        .map(|i| {
            let total: u64 = c.rows()[i].iter().sum();
            if total == 0 {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row
            } else {
                c.rows()[i].iter().map(|&x| x as f64 / total as f64).collect()
            }
        })
        .collect();
    Kernel::new(rows, &self_loop_mask(m)).expect("normalized rows on the widened mask")
}

/// The mask extended with self-loops, which empirical kernels may use for
/// unvisited rows.
fn self_loop_mask(m: &MrpModel) -> Vec<Vec<bool>> {
    let mut mask = m.mask.clone();
    for (i, row) in mask.iter_mut().enumerate() {
        row[i] = true;
    }
    mask
}

fn hops_to_accepting(m: &MrpModel) -> Vec<usize> {
    let n = m.state_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if m.accepting[i] {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if m.mask[i][j] && dist[i] == usize::MAX {
                dist[i] = dist[j] + 1;
                queue.push_back(i);
            }
        }
    }
    dist
}

/// Deterministic kernel of the optimal high-level policy, where each allowed
/// successor is an action and values follow the eventual discount.
///
/// Successors within 1e-9 of the best value are tied; ties go to the
/// successor fewest hops from an accepting state, then to the lowest index.
pub fn vi_kernel(m: &MrpModel) -> Kernel {
    let n = m.state_count();
    let mut w = vec![0.0; n];
    for _ in 0..1_000_000 {
        let mut delta: f64 = 0.0;
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let best = m.successors(i).map(|j| w[j]).fold(f64::NEG_INFINITY, f64::max);
                m.reward[i] + m.discount[i] * best
            })
            .collect();
        for i in 0..n {
            delta = delta.max((next[i] - w[i]).abs());
        }
        w = next;
        if delta < 1e-12 {
            break;
        }
    }
    let hops = hops_to_accepting(m);
    let rows = (0..n)
        .map(|i| {
            let best = m.successors(i).map(|j| w[j]).fold(f64::NEG_INFINITY, f64::max);
            let choice = m
                .successors(i)
                .filter(|&j| best - w[j] <= 1e-9)
                .min_by_key(|&j| (hops[j], j))
                .expect("every row has a successor");
            let mut row = vec![0.0; n];
            row[choice] = 1.0;
            row
        })
        .collect();
    Kernel::new(rows, &m.mask).expect("one-hot rows on the mask")
}

/// Prior that ignores which edges the automaton allows: every state may
/// move anywhere, except that sinks keep their self-loop.
pub fn partially_informed_prior(m: &MrpModel, alpha: f64) -> Result<DirichletParams, ShapingError> {
    let n = m.state_count();
    let mask: Vec<Vec<bool>> =
        (0..n).map(|i| if m.sinks.contains(&i) { m.mask[i].clone() } else { vec![true; n] }).collect();
    prior_on_mask(&mask, alpha)
}
