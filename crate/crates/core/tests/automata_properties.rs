use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use drl2::automata::{cross_validate, library, random_lasso_word};
use drl2::environments::{make_task, Difficulty, TASKS};
use drl2::ltl::parse;
use drl2::rng::{stream, Stream};

#[test]
fn every_task_automaton_agrees_with_its_formula() {
    for (name, diff, _) in TASKS {
        let task = make_task(name, diff.parse::<Difficulty>().unwrap()).unwrap();
        let f = parse(&task.formula, task.automaton.alphabet()).unwrap();
        let mut rng = stream(0, Stream::Validation);
        let cv = cross_validate(&task.automaton, &f, 1000, &mut rng).unwrap();
        assert!(cv.agrees(), "{name}-{diff}: {:?}", cv.disagreements.first());
    }
}

#[test]
fn deterministic_part_steps_to_a_single_deterministic_state() {
    for name in library::names() {
        let l = library::load(name).unwrap();
        for b in l.deterministic_states() {
            for letter in l.alphabet().letters() {
                let Ok(next) = l.step(b, letter) else { continue };
                assert_eq!(next.len(), 1, "{name}: state {b}");
                assert!(l.is_deterministic(next[0]), "{name}: {b} leaves the deterministic part");
            }
        }
    }
}

#[test]
fn epsilon_edges_enter_the_deterministic_part() {
    for name in library::names() {
        let l = library::load(name).unwrap();
        for b in 0..l.state_count() {
            for &t in l.epsilon_targets(b) {
                assert!(!l.is_deterministic(b) && l.is_deterministic(t), "{name}: {b} -> {t}");
            }
        }
    }
}

#[test]
fn sinks_are_absorbing_and_rejecting() {
    for name in library::names() {
        let l = library::load(name).unwrap();
        let mask = l.adjacency_mask();
        for s in l.find_sinks() {
            assert!(!l.is_accepting(s));
            assert!(mask[s].iter().enumerate().all(|(j, &m)| !m || j == s), "{name}: sink {s}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unrolling_the_cycle_preserves_acceptance(seed in any::<u64>(), k in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in library::names() {
            let l = library::load(name).unwrap();
            let w = random_lasso_word(l.alphabet().len(), 6, 5, &mut rng);
            prop_assert_eq!(l.accepts_lasso(&w), l.accepts_lasso(&w.unrolled(k)), "{} on {:?}", name, w);
        }
    }
}
