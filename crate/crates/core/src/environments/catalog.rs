//! The task library. Each (task, difficulty) pair is a TOML document:
//!
//! ```toml
//! name = "reach-avoid"
//! difficulty = "hard"
//! width = 14                 # omitted when `layout` is given
//! height = 7
//! start = [0, 3]             # or start_region = [x0, y0, x1, y1]
//! blocked = [[7, 7, 12, 12]] # optional inclusive rectangles
//! episode_length = 21
//! formula = "F a & G !b"
//! automaton = "reach_avoid"  # name of a bundled automaton
//! layout = """               # optional; first line is the top row
//! #.a
//! S.#
//! """
//!
//! [[regions]]                # optional; union of rectangles per atom
//! atom = "b"
//! rects = [[0, 3, 13, 3]]
//! invert = true              # atom holds outside the rectangles
//! ```
//!
//! In a layout, `#` is blocked, `.` is free, `S` marks the start, and a
//! lowercase letter is a free cell labeled by the atom of that name.

use serde::Deserialize;

use super::{Cell, Difficulty, EnvError, GridWorld, LabelingFn, Rect, Region, Start, TaskBundle};
use crate::automata::library;
use crate::ltl::parse;

macro_rules! tasks {
    ($($name:literal : $($diff:literal),+);* $(;)?) => {
        pub const TASKS: &[(&str, &str, &str)] = &[
            $($(($name, $diff, include_str!(concat!("../../data/tasks/", $name, "-", $diff, ".toml")))),+),*
        ];
    };
}

tasks! {
    "reach-avoid": "easy", "medium", "hard";
    "umaze": "easy", "medium", "hard";
    "sequential": "easy", "medium", "hard";
    "sequential-maze": "easy", "medium", "hard";
    "circular": "easy", "medium", "hard";
    "fga-jump": "easy", "medium", "hard";
    "t0": "easy";
    "reach-loop": "easy";
}

/// Distinct task names in catalog order.
pub fn task_names() -> Vec<&'static str> {
    let mut out: Vec<&str> = Vec::new();
    for (n, _, _) in TASKS {
        if !out.contains(n) {
            out.push(n);
        }
    }
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub name: String,
    pub difficulty: Difficulty,
    pub width: Option<i32>,
    pub height: Option<i32>,
    pub start: Option<[i32; 2]>,
    pub start_region: Option<Rect>,
    #[serde(default)]
    pub blocked: Vec<Rect>,
    pub episode_length: usize,
    pub formula: String,
    pub automaton: String,
    pub layout: Option<String>,
    #[serde(default)]
    pub regions: Vec<Region>,
}

impl TaskFile {
    pub fn from_toml(text: &str) -> Result<Self, EnvError> {
        toml::from_str(text).map_err(|e| EnvError::Invalid(e.to_string()))
    }

    pub fn build(&self) -> Result<TaskBundle, EnvError> {
        if self.episode_length == 0 {
            return Err(EnvError::Invalid("episode_length must be positive".into()));
        }
        let automaton = library::load(&self.automaton)?;
        parse(&self.formula, automaton.alphabet())?;

        let mut blocked: Vec<Cell> = self.blocked.iter().flat_map(|r| r.cells()).collect();
        let mut regions = self.regions.clone();
        let mut layout_start = None;
        let (width, height) = match &self.layout {
            Some(text) => {
                let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
                let h = rows.len() as i32;
                let w = rows.first().map(|r| r.len()).unwrap_or(0) as i32;
                if rows.iter().any(|r| r.len() as i32 != w) {
                    return Err(EnvError::Invalid("layout rows differ in length".into()));
                }
                for (r, row) in rows.iter().enumerate() {
                    let y = h - 1 - r as i32;
                    for (x, ch) in row.chars().enumerate() {
                        let c = Cell::new(x as i32, y);
                        match ch {
                            '#' => blocked.push(c),
                            '.' => {}
                            'S' => layout_start = Some(c),
                            'a'..='z' => {
                                let atom = ch.to_string();
                                let rect = Rect::new(c.x, c.y, c.x, c.y);
                                match regions.iter_mut().find(|g| g.atom == atom && !g.invert) {
                                    Some(g) => g.rects.push(rect),
                                    None => regions.push(Region { atom, rects: vec![rect], invert: false }),
                                }
                            }
                            other => return Err(EnvError::Invalid(format!("unexpected layout character `{other}`"))),
                        }
                    }
                }
                (w, h)
            }
            None => match (self.width, self.height) {
                (Some(w), Some(h)) => (w, h),
                _ => return Err(EnvError::Invalid("width and height are required without a layout".into())),
            },
        };
        let start = match (self.start, self.start_region, layout_start) {
            (Some([x, y]), None, _) => Start::Cell(Cell::new(x, y)),
            (None, Some(r), _) => Start::Region(r),
            (None, None, Some(c)) => Start::Cell(c),
            _ => return Err(EnvError::Invalid("exactly one start specification is required".into())),
        };
        let grid = GridWorld::new(width, height, &blocked, start)?;
        let labeling = LabelingFn::new(&grid, automaton.alphabet(), regions)?;
        Ok(TaskBundle {
            name: self.name.clone(),
            difficulty: self.difficulty,
            grid,
            labeling,
            formula: self.formula.clone(),
            automaton_name: self.automaton.clone(),
            automaton,
            episode_length: self.episode_length,
            sticky: 0.0,
        })
    }
}

pub fn make_task(name: &str, difficulty: Difficulty) -> Result<TaskBundle, EnvError> {
    let text = TASKS
        .iter()
        .find(|(n, d, _)| *n == name && *d == difficulty.as_str())
        .map(|(_, _, t)| *t)
        .ok_or_else(|| EnvError::UnknownTask { name: name.into(), difficulty: difficulty.to_string() })?;
    TaskFile::from_toml(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::Action;

    fn names(t: &TaskBundle, x: i32, y: i32) -> Vec<String> {
        t.label_names(Cell::new(x, y)).into_iter().map(String::from).collect()
    }

    #[test]
    fn every_catalog_entry_builds() {
        for (n, d, _) in TASKS {
            let t = make_task(n, d.parse().unwrap()).unwrap();
            assert_eq!(t.name, *n);
            assert!(t.episode_length > 0);
        }
    }

    #[test]
    fn unknown_task() {
        assert!(matches!(make_task("nope", Difficulty::Easy), Err(EnvError::UnknownTask { .. })));
        assert!(matches!(make_task("t0", Difficulty::Hard), Err(EnvError::UnknownTask { .. })));
    }

    #[test]
    fn reach_avoid_hard() {
        let t = make_task("reach-avoid", Difficulty::Hard).unwrap();
        assert_eq!(t.formula, "F a & G !b");
        assert_eq!(t.episode_length, 21);
        let start = t.reset_cell(&mut rand::rng());
        assert!(names(&t, start.x, start.y).is_empty());
        assert_eq!(names(&t, 0, 0), vec!["b"]);
        assert_eq!(names(&t, 11, 3), vec!["a"]);
        assert!(names(&t, 10, 3).is_empty());
    }

    #[test]
    fn reach_avoid_straight_walk_reaches_goal_in_distance_steps() {
        for (d, dist) in Difficulty::ALL.into_iter().zip([7, 9, 11]) {
            let t = make_task("reach-avoid", d).unwrap();
            let mut c = Cell::new(0, 3);
            let a = t.automaton.alphabet().index_of("a").unwrap();
            let mut steps = 0;
            while !t.label(c).contains(a) {
                c = t.grid.move_from(c, Action::East);
                steps += 1;
                assert!(t.label_names(c).iter().all(|n| *n != "b"));
            }
            assert_eq!(steps, dist);
            assert_eq!(t.episode_length, dist + 10);
        }
    }

    #[test]
    fn sequential_medium() {
        let t = make_task("sequential", Difficulty::Medium).unwrap();
        assert_eq!(t.formula, "F(a & XF(b & XF(c & XFd)))");
        assert_eq!(t.episode_length, 70);
        assert_eq!(names(&t, 10, 3), vec!["a"]);
        assert!(names(&t, 3, 3).is_empty());
        assert_eq!(names(&t, 31, 0), vec!["d"]);
    }

    #[test]
    fn circular_easy() {
        let t = make_task("circular", Difficulty::Easy).unwrap();
        assert_eq!(t.formula, "GF(a & XFb) & G !e");
        assert_eq!(t.episode_length, 70);
        assert_eq!(t.grid.move_from(Cell::new(13, 10), Action::West), Cell::new(13, 10));
        assert_eq!(t.grid.move_from(Cell::new(10, 13), Action::South), Cell::new(10, 13));
        assert_eq!(names(&t, 13, 10), vec!["e"]);
        assert_eq!(names(&t, 14, 10), vec!["a"]);
        assert_eq!(names(&t, 10, 17), vec!["b"]);
        assert_eq!(names(&t, 3, 10), vec!["c"]);
        assert_eq!(names(&t, 10, 3), vec!["d"]);
    }

    #[test]
    fn umaze_shortcut_crosses_the_avoid_region() {
        for (d, path) in Difficulty::ALL.into_iter().zip([7usize, 9, 11]) {
            let t = make_task("umaze", d).unwrap();
            let ab = t.automaton.alphabet();
            let (ia, ib) = (ab.index_of("a").unwrap(), ab.index_of("b").unwrap());
            let start = Cell::new(0, 4);
            let any = t.grid.distance(start, |c| t.label(c).contains(ia)).unwrap();
            assert!(any < path);
            let safe = safe_distance(&t, start, ia, ib).unwrap();
            assert_eq!(safe, path);
        }
    }

    fn safe_distance(t: &TaskBundle, from: Cell, goal: usize, avoid: usize) -> Option<usize> {
        let mut dist = std::collections::HashMap::from([(from, 0usize)]);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            if t.label(c).contains(goal) {
                return Some(dist[&c]);
            }
            for a in Action::ALL {
                let n = t.grid.move_from(c, a);
                if !t.label(n).contains(avoid) && !dist.contains_key(&n) {
                    dist.insert(n, dist[&c] + 1);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    #[test]
    fn maze_difficulty_grows() {
        let mut prev = 0;
        for d in Difficulty::ALL {
            let t = make_task("sequential-maze", d).unwrap();
            let f = t.automaton.alphabet().index_of("f").unwrap();
            let start = t.reset_cell(&mut rand::rng());
            let dist = t.grid.distance(start, |c| t.label(c).contains(f)).unwrap();
            assert!(dist > prev, "{d}: {dist}");
            assert!(dist < t.episode_length);
            prev = dist;
        }
    }

    #[test]
    fn layout_and_rectangles_agree_on_size() {
        let t = make_task("t0", Difficulty::Easy).unwrap();
        assert_eq!((t.grid.width(), t.grid.height()), (9, 5));
        assert_eq!(t.reset_cell(&mut rand::rng()), Cell::new(2, 0));
        assert_eq!(names(&t, 0, 0), vec!["a"]);
        assert_eq!(names(&t, 8, 4), vec!["c"]);
        assert_eq!(names(&t, 3, 2), vec!["b"]);
    }
}
