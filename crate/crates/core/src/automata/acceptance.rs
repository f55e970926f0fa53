use std::collections::VecDeque;

use rand::Rng;

use super::Ldba;
use crate::ltl::{CompiledFormula, Formula, LassoWord, Letter, LtlError};

impl Ldba {
    /// Whether some run over `prefix · cycle^ω` visits an accepting state
    /// infinitely often.
    ///
    /// Searches the graph of (word position, automaton state) nodes, where
    /// letter edges advance the position and ε-edges keep it.
    pub fn accepts_lasso(&self, w: &LassoWord) -> bool {
        let n = w.positions();
        let s = self.state_count();
        let node = |pos: usize, b: usize| pos * s + b;
        let successors = |id: usize, out: &mut Vec<usize>| {
            out.clear();
            let (pos, b) = (id / s, id % s);
            if let Ok(targets) = self.step(b, w.letter_at(pos)) {
                let next = w.successor(pos);
                out.extend(targets.iter().map(|&t| node(next, t)));
            }
            out.extend(self.epsilon_targets(b).iter().map(|&t| node(pos, t)));
        };

        let mut reachable = vec![false; n * s];
        let mut queue = VecDeque::from([node(0, self.initial())]);
        reachable[node(0, self.initial())] = true;
        let mut buf = Vec::new();
        while let Some(id) = queue.pop_front() {
            successors(id, &mut buf);
            for &t in &buf {
                if !reachable[t] {
                    reachable[t] = true;
                    queue.push_back(t);
                }
            }
        }

        let mut seen = vec![false; n * s];
        for start in 0..n * s {
            if !reachable[start] || !self.is_accepting(start % s) {
                continue;
            }
            seen.iter_mut().for_each(|v| *v = false);
            let mut queue = VecDeque::new();
            successors(start, &mut buf);
            for &t in &buf {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
            while let Some(id) = queue.pop_front() {
                if id == start {
                    return true;
                }
                successors(id, &mut buf);
                for &t in &buf {
                    if !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        false
    }
}

/// A lasso word with prefix length in `0..=max_prefix` and cycle length in
/// `1..=max_cycle`. Each word draws its own atom density so that both sparse
/// and dense labelings are covered.
pub fn random_lasso_word<R: Rng + ?Sized>(atoms: usize, max_prefix: usize, max_cycle: usize, rng: &mut R) -> LassoWord {
    const DENSITIES: [f64; 4] = [0.1, 0.25, 0.5, 0.75];
    let density = DENSITIES[rng.random_range(0..DENSITIES.len())];
    let letter = |rng: &mut R| {
        let mut bits = 0u32;
        for i in 0..atoms {
            if rng.random_bool(density) {
                bits |= 1 << i;
            }
        }
        Letter(bits)
    };
    let p = rng.random_range(0..=max_prefix);
    let c = rng.random_range(1..=max_cycle.max(1));
    let prefix = (0..p).map(|_| letter(rng)).collect();
    let cycle = (0..c).map(|_| letter(rng)).collect();
    LassoWord { prefix, cycle }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub word: LassoWord,
    pub automaton: bool,
    pub formula: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub samples: usize,
    pub disagreements: Vec<Disagreement>,
}

impl CrossValidation {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compare automaton acceptance with the LTL semantics on `samples` random
/// lasso words (prefix length at most 8, cycle length 1 to 6).
pub fn cross_validate<R: Rng + ?Sized>(
    l: &Ldba,
    f: &Formula,
    samples: usize,
    rng: &mut R,
) -> Result<CrossValidation, LtlError> {
    let compiled = CompiledFormula::new(f, l.alphabet())?;
    let mut disagreements = Vec::new();
    for _ in 0..samples {
        let word = random_lasso_word(l.alphabet().len(), 8, 6, rng);
        let automaton = l.accepts_lasso(&word);
        let formula = compiled.evaluate(&word);
        if automaton != formula {
            disagreements.push(Disagreement { word, automaton, formula });
        }
    }
    Ok(CrossValidation { samples, disagreements })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::library;
    use super::*;
    use crate::ltl::{parse, Alphabet};

    fn word(l: &Ldba, prefix: &[&[&str]], cycle: &[&[&str]]) -> LassoWord {
        let ab = l.alphabet();
        let conv = |ls: &[&[&str]]| ls.iter().map(|n| ab.letter(n).unwrap()).collect();
        LassoWord::new(conv(prefix), conv(cycle)).unwrap()
    }

    #[test]
    fn t0_accepts_periodic_visits() {
        let l = library::load("t0").unwrap();
        assert!(l.accepts_lasso(&word(&l, &[], &[&["a"], &[], &["c"]])));
        assert!(!l.accepts_lasso(&word(&l, &[], &[&[]])));
        assert!(!l.accepts_lasso(&word(&l, &[&["b"]], &[&["a"], &["c"]])));
    }

    #[test]
    fn fga_takes_the_jump_after_the_prefix() {
        let l = library::load("fga").unwrap();
        assert!(l.accepts_lasso(&word(&l, &[&[]], &[&["a"]])));
        assert!(!l.accepts_lasso(&word(&l, &[], &[&["a"], &[]])));
        assert!(l.accepts_lasso(&word(&l, &[&["a"], &[], &[]], &[&["a"]])));
    }

    #[test]
    fn t0_agrees_with_formula() {
        let l = library::load("t0").unwrap();
        let f = parse("(GF(a & XFc)) & (G !b)", l.alphabet()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = cross_validate(&l, &f, 1000, &mut rng).unwrap();
        assert!(report.agrees(), "{:?}", report.disagreements.first());
    }

    #[test]
    fn emptied_accepting_set_disagrees() {
        let l = library::load("t0").unwrap().with_accepting_unchecked(&[]);
        let f = parse("(GF(a & XFc)) & (G !b)", l.alphabet()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = cross_validate(&l, &f, 1000, &mut rng).unwrap();
        assert!(!report.agrees());
        assert!(report.disagreements.iter().all(|d| d.formula && !d.automaton));
        let witness = word(&l, &[], &[&["a"], &[], &["c"]]);
        assert!(!l.accepts_lasso(&witness));
    }

    #[test]
    fn trivial_automaton_matches_unlabeled_invariant() {
        let doc = r#"
atoms = ["z"]
states = 1
initial = 0
accepting = [0]
deterministic = [0]
[[edges]]
from = 0
guard = "true"
to = [0]
"#;
        let l = Ldba::from_toml(doc).unwrap();
        let f = parse("G !z", &Alphabet::new(["z"]).unwrap()).unwrap();
        // z is never labeled: every sampled letter is empty.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let w = random_lasso_word(0, 8, 6, &mut rng);
            assert_eq!(l.accepts_lasso(&w), crate::ltl::evaluate_lasso(&f, l.alphabet(), &w).unwrap());
        }
    }
}
