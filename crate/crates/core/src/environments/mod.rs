//! Deterministic gridworlds with labeled regions, and the benchmark task
//! library.
//!
//! Coordinates have their origin at the bottom-left cell, with `y` growing
//! northwards. Moves off the grid or into blocked cells leave the agent in
//! place.

mod catalog;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{AutomatonError, Ldba};
use crate::ltl::{Alphabet, Letter, LtlError};

pub use catalog::{make_task, task_names, TaskFile, TASKS};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown task `{name}` at difficulty `{difficulty}`")]
    UnknownTask { name: String, difficulty: String },
    #[error("invalid task: {0}")]
    Invalid(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Ltl(#[from] LtlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(format!("unknown difficulty `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Inclusive rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub const fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn contains(&self, c: Cell) -> bool {
        (self.x0..=self.x1).contains(&c.x) && (self.y0..=self.y1).contains(&c.y)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
    }

    pub fn area(&self) -> usize {
        if self.x1 < self.x0 || self.y1 < self.y0 {
            0
        } else {
            ((self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)) as usize
        }
    }
}

impl From<[i32; 4]> for Rect {
    fn from(v: [i32; 4]) -> Self {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [i32; 4] {
    fn from(r: Rect) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    North,
    South,
    East,
    West,
    NoOp,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::North, Action::South, Action::East, Action::West, Action::NoOp];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::North => (0, 1),
            Action::South => (0, -1),
            Action::East => (1, 0),
            Action::West => (-1, 0),
            Action::NoOp => (0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Cell(Cell),
    Region(Rect),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
    start: Start,
}

impl GridWorld {
    pub fn new(width: i32, height: i32, blocked: &[Cell], start: Start) -> Result<Self, EnvError> {
        if width <= 0 || height <= 0 {
            return Err(EnvError::Invalid(format!("grid size {width}x{height}")));
        }
        let mut g = GridWorld {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
            start: Start::Cell(Cell::new(0, 0)),
        };
        for &c in blocked {
            if !g.in_bounds(c) {
                return Err(EnvError::Invalid(format!("blocked cell {c} outside the grid")));
            }
            let i = g.index(c);
            g.blocked[i] = true;
        }
        g.set_start(start)?;
        Ok(g)
    }

    fn set_start(&mut self, start: Start) -> Result<(), EnvError> {
        let cells: Vec<Cell> = match &start {
            Start::Cell(c) => vec![*c],
            Start::Region(r) => r.cells().collect(),
        };
        if cells.is_empty() {
            return Err(EnvError::Invalid("empty start region".into()));
        }
        for c in cells {
            if !self.is_free(c) {
                return Err(EnvError::Invalid(format!("start cell {c} is blocked or off-grid")));
            }
        }
        self.start = start;
        Ok(())
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn start(&self) -> &Start {
        &self.start
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        (0..self.width).contains(&c.x) && (0..self.height).contains(&c.y)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    /// Row-major index, `y * width + x`.
    pub fn index(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn cell(&self, index: usize) -> Cell {
        let i = index as i32;
        Cell::new(i % self.width, i / self.width)
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell(i)).filter(|&c| self.is_free(c))
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Cell {
        match self.start {
            Start::Cell(c) => c,
            Start::Region(r) => Cell::new(rng.random_range(r.x0..=r.x1), rng.random_range(r.y0..=r.y1)),
        }
    }

    /// Deterministic unit move.
    pub fn move_from(&self, c: Cell, a: Action) -> Cell {
        let (dx, dy) = a.delta();
        let next = Cell::new(c.x + dx, c.y + dy);
        if self.is_free(next) {
            next
        } else {
            c
        }
    }

    /// Shortest path length between two cells, if connected.
    pub fn distance(&self, from: Cell, to: impl Fn(Cell) -> bool) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.cell_count()];
        let mut queue = std::collections::VecDeque::from([from]);
        dist[self.index(from)] = 0;
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            if to(c) {
                return Some(d);
            }
            for a in Action::ALL {
                let n = self.move_from(c, a);
                if dist[self.index(n)] == usize::MAX {
                    dist[self.index(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

/// A named atom holding on a union of rectangles, or on their complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub atom: String,
    pub rects: Vec<Rect>,
    #[serde(default)]
    pub invert: bool,
}

impl Region {
    pub fn holds(&self, c: Cell) -> bool {
        self.rects.iter().any(|r| r.contains(c)) != self.invert
    }
}

/// Labeling function, tabulated per cell over an automaton alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingFn {
    regions: Vec<Region>,
    letters: Vec<Letter>,
}

impl LabelingFn {
    pub fn new(grid: &GridWorld, alphabet: &Alphabet, regions: Vec<Region>) -> Result<Self, EnvError> {
        let mut letters = vec![Letter::EMPTY; grid.cell_count()];
        for r in &regions {
            let bit = alphabet.index_of(&r.atom).ok_or_else(|| LtlError::UnknownAtom(r.atom.clone()))?;
            for (i, letter) in letters.iter_mut().enumerate() {
                if r.holds(grid.cell(i)) {
                    letter.0 |= 1 << bit;
                }
            }
        }
        Ok(LabelingFn { regions, letters })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn letter_at(&self, index: usize) -> Letter {
        self.letters[index]
    }
}

/// Everything needed to instantiate one benchmark: dynamics, labels, the
/// specification and its automaton, and the evaluation window.
#[derive(Debug, Clone)]
pub struct TaskBundle {
    pub name: String,
    pub difficulty: Difficulty,
    pub grid: GridWorld,
    pub labeling: LabelingFn,
    pub formula: String,
    pub automaton_name: String,
    pub automaton: Ldba,
    pub episode_length: usize,
    /// Probability of repeating the previous action.
    pub sticky: f64,
}

impl TaskBundle {
    pub fn label(&self, c: Cell) -> Letter {
        self.labeling.letter_at(self.grid.index(c))
    }

    pub fn label_names(&self, c: Cell) -> Vec<&str> {
        self.automaton.alphabet().true_atoms(self.label(c))
    }

    pub fn reset_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> Cell {
        self.grid.reset(rng)
    }

    /// One environment step. `prev` is the action executed on the previous
    /// step, `None` at the start of an episode. Returns the next cell and the
    /// action actually executed.
    pub fn step_env<R: Rng + ?Sized>(
        &self,
        c: Cell,
        prev: Option<Action>,
        action: Action,
        rng: &mut R,
    ) -> (Cell, Action) {
        let executed = match prev {
            Some(p) if self.sticky > 0.0 && rng.random_bool(self.sticky) => p,
            _ => action,
        };
        (self.grid.move_from(c, executed), executed)
    }

    /// With probability `p` the previous action is executed instead of the
    /// chosen one.
    pub fn sticky(mut self, p: f64) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(EnvError::Invalid(format!("sticky probability {p} outside [0, 1]")));
        }
        self.sticky = p;
        Ok(self)
    }

    /// Draw each episode's start uniformly from `region`.
    pub fn random_start(mut self, region: Rect) -> Result<Self, EnvError> {
        self.grid.set_start(Start::Region(region))?;
        Ok(self)
    }

    /// Whether the automaton has a sink, so that violations are defined.
    pub fn has_avoid_region(&self) -> bool {
        !self.automaton.find_sinks().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn open(w: i32, h: i32) -> GridWorld {
        GridWorld::new(w, h, &[], Start::Cell(Cell::new(0, 0))).unwrap()
    }

    #[test]
    fn unit_moves() {
        let g = open(3, 3);
        assert_eq!(g.move_from(Cell::new(0, 0), Action::North), Cell::new(0, 1));
        assert_eq!(g.move_from(Cell::new(0, 0), Action::East), Cell::new(1, 0));
        assert_eq!(g.move_from(Cell::new(1, 1), Action::NoOp), Cell::new(1, 1));
    }

    #[test]
    fn boundary_and_blocked_moves_stay() {
        let g = GridWorld::new(3, 3, &[Cell::new(1, 0)], Start::Cell(Cell::new(0, 0))).unwrap();
        assert_eq!(g.move_from(Cell::new(0, 0), Action::West), Cell::new(0, 0));
        assert_eq!(g.move_from(Cell::new(0, 0), Action::South), Cell::new(0, 0));
        assert_eq!(g.move_from(Cell::new(0, 0), Action::East), Cell::new(0, 0));
        assert_eq!(g.move_from(Cell::new(2, 2), Action::North), Cell::new(2, 2));
    }

    #[test]
    fn blocked_start_rejected() {
        assert!(GridWorld::new(3, 3, &[Cell::new(0, 0)], Start::Cell(Cell::new(0, 0))).is_err());
        let g = GridWorld::new(3, 3, &[Cell::new(1, 1)], Start::Cell(Cell::new(0, 0))).unwrap();
        let mut g2 = g.clone();
        assert!(g2.set_start(Start::Region(Rect::new(0, 0, 1, 1))).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = open(4, 3);
        for i in 0..g.cell_count() {
            assert_eq!(g.index(g.cell(i)), i);
        }
    }

    #[test]
    fn region_membership() {
        let r = Region { atom: "b".into(), rects: vec![Rect::new(0, 3, 9, 3)], invert: true };
        assert!(!r.holds(Cell::new(2, 3)));
        assert!(r.holds(Cell::new(2, 2)));
    }

    #[test]
    fn sticky_zero_is_identity() {
        let t = make_task("reach-avoid", Difficulty::Easy).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = t.reset_cell(&mut rng);
        let mut prev = None;
        for i in 0..50 {
            let a = Action::ALL[i % 5];
            let (n, exec) = t.step_env(c, prev, a, &mut rng);
            assert_eq!(exec, a);
            assert_eq!(n, t.grid.move_from(c, a));
            c = n;
            prev = Some(exec);
        }
    }

    #[test]
    fn sticky_one_repeats_first_action() {
        let t = make_task("sequential", Difficulty::Easy).unwrap().sticky(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = t.reset_cell(&mut rng);
        let (n, first) = t.step_env(c, None, Action::North, &mut rng);
        assert_eq!(first, Action::North);
        c = n;
        let mut prev = Some(first);
        for i in 0..20 {
            let (n, exec) = t.step_env(c, prev, Action::ALL[i % 5], &mut rng);
            assert_eq!(exec, Action::North);
            c = n;
            prev = Some(exec);
        }
    }

    #[test]
    fn sticky_probability_is_respected() {
        let t = make_task("sequential", Difficulty::Easy).unwrap().sticky(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = Cell::new(3, 3);
        let mut repeats = 0;
        let n = 100_000;
        for _ in 0..n {
            let (_, exec) = t.step_env(c, Some(Action::West), Action::East, &mut rng);
            if exec == Action::West {
                repeats += 1;
            }
        }
        let frac = repeats as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.01, "{frac}");
        assert!(make_task("sequential", Difficulty::Easy).unwrap().sticky(1.5).is_err());
    }

    #[test]
    fn random_start_region() {
        let t = make_task("sequential", Difficulty::Easy).unwrap().random_start(Rect::new(2, 2, 3, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = std::collections::BTreeMap::new();
        let n = 10_000;
        for _ in 0..n {
            *counts.entry(t.reset_cell(&mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for (_, k) in counts {
            assert!((k as f64 / n as f64 - 0.25).abs() < 0.02);
        }
        let single = make_task("sequential", Difficulty::Easy).unwrap().random_start(Rect::new(5, 5, 5, 5)).unwrap();
        for _ in 0..10 {
            assert_eq!(single.reset_cell(&mut rng), Cell::new(5, 5));
        }
    }

    #[test]
    fn random_start_over_blocked_cell_rejected() {
        let t = make_task("circular", Difficulty::Easy).unwrap();
        assert!(t.random_start(Rect::new(6, 6, 8, 8)).is_err());
    }
}
