use proptest::prelude::*;
use rand::Rng;

use drl2::environments::{make_task, Action, Cell, Difficulty, Rect, TaskBundle};
use drl2::rng::{stream, Stream};

fn trajectory(task: &TaskBundle, seed: u64, steps: usize) -> Vec<Cell> {
    let mut env = stream(seed, Stream::Env);
    let mut policy = stream(seed, Stream::Policy);
    let mut cell = task.reset_cell(&mut env);
    let mut prev = None;
    let mut out = vec![cell];
    for _ in 0..steps {
        let a = Action::ALL[policy.random_range(0..Action::ALL.len())];
        let (next, executed) = task.step_env(cell, prev, a, &mut env);
        cell = next;
        prev = Some(executed);
        out.push(cell);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moves_stay_on_free_cells(diff in prop::sample::select(Difficulty::ALL.to_vec()), pick in any::<prop::sample::Index>(), a in 0usize..5) {
        let task = make_task("sequential-maze", diff).unwrap();
        let g = &task.grid;
        let free: Vec<Cell> = g.free_cells().collect();
        let c = free[pick.index(free.len())];
        let next = g.move_from(c, Action::ALL[a]);
        prop_assert!(g.is_free(next));
        let (dx, dy) = Action::ALL[a].delta();
        prop_assert!(next == c || next == Cell::new(c.x + dx, c.y + dy));
    }

    #[test]
    fn identical_seeds_give_identical_trajectories(seed in any::<u64>(), sticky in 0.0f64..1.0) {
        let task = make_task("reach-avoid", Difficulty::Medium)
            .unwrap()
            .sticky(sticky)
            .unwrap()
            .random_start(Rect::new(0, 0, 3, 2))
            .unwrap();
        prop_assert_eq!(trajectory(&task, seed, 200), trajectory(&task, seed, 200));
    }
}
