//! Value solvers for `V = R + γ× ⊙ (K V)`, where `γ× ⊙ K` scales row `i` of
//! `K` by the discount of state `i`.

use nalgebra::{DMatrix, DVector};

use super::{Kernel, MrpModel, ShapingError};

/// Qualitative value class of a state under a given kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueClass {
    /// Accepting states are visited infinitely often almost surely: the
    /// value is exactly `1 / (1 − γ)`.
    Full,
    /// No accepting state is reachable: the value is exactly 0.
    Zero,
    /// Anything else; solved numerically.
    Transient,
}

fn reach_sets(k: &Kernel) -> Vec<Vec<bool>> {
    let n = k.len();
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for (j, &p) in k.rows()[i].iter().enumerate() {
                    if p > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Classify every state from the support graph of `k`.
pub fn value_classes(m: &MrpModel, k: &Kernel) -> Vec<ValueClass> {
    let n = k.len();
    let reach = reach_sets(k);
    // A state is in a bottom SCC when everything it reaches reaches it back.
    let bottom: Vec<bool> = (0..n).map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i])).collect();
    let bottom_accepting: Vec<bool> =
        (0..n).map(|i| bottom[i] && (0..n).any(|j| reach[i][j] && m.accepting[j])).collect();
    (0..n)
        .map(|i| {
            if !(0..n).any(|j| reach[i][j] && m.accepting[j]) {
                ValueClass::Zero
            } else if (0..n).all(|j| !(reach[i][j] && bottom[j]) || bottom_accepting[j]) {
                ValueClass::Full
            } else {
                ValueClass::Transient
            }
        })
        .collect()
}

/// High-level values for kernel `k`.
///
/// States whose fate is decided by the support of `k` get their exact
/// values; the remaining states are solved by LU decomposition, with
/// fixed-point iteration as the fallback.
pub fn solve_values(m: &MrpModel, k: &Kernel) -> Result<Vec<f64>, ShapingError> {
    let n = m.state_count();
    if k.len() != n {
        return Err(ShapingError::ShapeMismatch("kernel and model differ in size".into()));
    }
    let classes = value_classes(m, k);
    let full = 1.0 / (1.0 - m.gamma);
    let mut v: Vec<f64> = classes
        .iter()
        .map(|c| match c {
            ValueClass::Full => full,
            _ => 0.0,
        })
        .collect();
    let transient: Vec<usize> = (0..n).filter(|&i| classes[i] == ValueClass::Transient).collect();
    if transient.is_empty() {
        return Ok(v);
    }
    let t = transient.len();
    let mut a = DMatrix::<f64>::identity(t, t);
    let mut b = DVector::<f64>::zeros(t);
    for (r, &i) in transient.iter().enumerate() {
        let d = m.discount[i];
        b[r] = m.reward[i];
        for j in 0..n {
            let p = k.get(i, j);
            if p == 0.0 {
                continue;
            }
            match transient.iter().position(|&x| x == j) {
                Some(c) => a[(r, c)] -= d * p,
                None => b[r] += d * p * v[j],
            }
        }
    }
    let solved = a.lu().solve(&b).filter(|x| x.iter().all(|y| y.is_finite()));
    match solved {
        Some(x) => {
            for (r, &i) in transient.iter().enumerate() {
                v[i] = x[r].clamp(0.0, full);
            }
            Ok(v)
        }
        None => solve_fixed_point(m, k, 1e-10, 10_000_000),
    }
}

/// Direct solve of `(I − γ× ⊙ K) V = R` without the classification pass.
pub fn solve_closed_form(m: &MrpModel, k: &Kernel) -> Result<Vec<f64>, ShapingError> {
    let n = m.state_count();
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= m.discount[i] * k.get(i, j);
        }
    }
    let lu = a.lu();
    let det = lu.determinant();
    if det.abs() < 1e-14 {
        return Err(ShapingError::SingularSystem);
    }
    let b = DVector::from_column_slice(&m.reward);
    lu.solve(&b)
        .filter(|x| x.iter().all(|y| y.is_finite()))
        .map(|x| x.iter().copied().collect())
        .ok_or(ShapingError::SingularSystem)
}

/// Iterate `V ← R + γ× ⊙ (K V)` from zero until the max-norm change falls
/// below `tol`.
pub fn solve_fixed_point(m: &MrpModel, k: &Kernel, tol: f64, max_iter: usize) -> Result<Vec<f64>, ShapingError> {
    let n = m.state_count();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let kv: f64 = k.rows()[i].iter().zip(&v).map(|(p, x)| p * x).sum();
            next[i] = m.reward[i] + m.discount[i] * kv;
            delta = delta.max((next[i] - v[i]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if delta < tol {
            return Ok(v);
        }
    }
    Err(ShapingError::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::library;
    use crate::shaping::{build_mrp, init_prior};

    fn mrp(mask: Vec<Vec<bool>>, accepting: Vec<bool>) -> MrpModel {
        MrpModel::from_parts(mask, accepting, 0.99).unwrap()
    }

    #[test]
    fn geometric_series_for_accepting_self_loop() {
        let m = mrp(vec![vec![true]], vec![true]);
        let k = Kernel::new(vec![vec![1.0]], &m.mask).unwrap();
        assert_eq!(solve_values(&m, &k).unwrap(), vec![1.0 / (1.0 - 0.99)]);
        assert!((solve_closed_form(&m, &k).unwrap()[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sink_has_zero_value() {
        let m = mrp(vec![vec![true]], vec![false]);
        let k = Kernel::new(vec![vec![1.0]], &m.mask).unwrap();
        assert_eq!(solve_values(&m, &k).unwrap(), vec![0.0]);
        assert_eq!(solve_closed_form(&m, &k), Err(ShapingError::SingularSystem));
        assert_eq!(solve_fixed_point(&m, &k, 1e-12, 10).unwrap(), vec![0.0]);
    }

    #[test]
    fn chain_with_sink() {
        // 0 -> {1, sink}, 1 -> {2 accepting, sink}, 2 -> 2, sink -> sink.
        let t = true;
        let f = false;
        let m = mrp(vec![vec![f, t, f, t], vec![f, f, t, t], vec![f, f, t, f], vec![f, f, f, t]], vec![f, f, t, f]);
        let k = Kernel::new(
            vec![
                vec![0.0, 0.5, 0.0, 0.5],
                vec![0.0, 0.0, 0.8, 0.2],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            &m.mask,
        )
        .unwrap();
        let v = solve_values(&m, &k).unwrap();
        let full = 1.0 / (1.0 - 0.99);
        assert_eq!(v[2], full);
        assert_eq!(v[3], 0.0);
        assert!((v[1] - 0.8 * full).abs() < 1e-9);
        assert!((v[0] - 0.4 * full).abs() < 1e-9);
        let fp = solve_fixed_point(&m, &k, 1e-13, 1_000_000).unwrap();
        for (a, b) in v.iter().zip(&fp) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(
            value_classes(&m, &k),
            vec![ValueClass::Transient, ValueClass::Transient, ValueClass::Full, ValueClass::Zero]
        );
    }

    #[test]
    fn sequential_without_sink_is_uniform() {
        let l = library::load("sequential_4").unwrap();
        let m = build_mrp(&l, 0.99, false).unwrap();
        let k = init_prior(&m, 1000.0).unwrap().mean();
        let v = solve_values(&m, &k).unwrap();
        assert!(v.iter().all(|&x| x == 1.0 / (1.0 - 0.99)));
    }
}
