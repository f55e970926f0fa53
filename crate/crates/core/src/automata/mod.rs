//! Limit-deterministic Büchi automata (LDBAs).
//!
//! An automaton is loaded from a TOML document, validated against the LDBA
//! structural properties, and compiled into a per-(state, letter) successor
//! table. Guards are propositional formulas over the automaton's atoms.

mod acceptance;
mod file;
pub mod library;

use thiserror::Error;

use crate::ltl::{Alphabet, Formula, Letter, LtlError};

pub use acceptance::{cross_validate, random_lasso_word, CrossValidation, Disagreement};
pub use file::{AutomatonFile, EdgeEntry, EpsilonEntry};

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomatonError {
    #[error("format error: {0}")]
    Format(String),
    #[error("invariant violated ({property}): {detail}")]
    InvariantViolation { property: &'static str, detail: String },
    #[error("no guard matches letter {letter:#b} at state {state}")]
    NoMatchingGuard { state: StateId, letter: u32 },
    #[error("state {0} out of range")]
    InvalidState(StateId),
    #[error(transparent)]
    Ltl(#[from] LtlError),
}

fn violation(property: &'static str, detail: impl Into<String>) -> AutomatonError {
    AutomatonError::InvariantViolation { property, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: StateId,
    pub guard: Formula,
    pub to: Vec<StateId>,
}

/// A validated LDBA.
#[derive(Debug, Clone)]
pub struct Ldba {
    alphabet: Alphabet,
    state_count: usize,
    initial: StateId,
    accepting: Vec<bool>,
    deterministic: Vec<bool>,
    partial: bool,
    edges: Vec<Edge>,
    epsilon: Vec<Vec<StateId>>,
    /// `table[state * letters + letter]`: sorted, deduplicated successors.
    table: Vec<Vec<StateId>>,
}

impl Ldba {
    /// Build and validate an automaton.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: Alphabet,
        state_count: usize,
        initial: StateId,
        accepting: &[StateId],
        deterministic: &[StateId],
        edges: Vec<Edge>,
        epsilon: &[(StateId, StateId)],
        partial: bool,
    ) -> Result<Self, AutomatonError> {
        if state_count == 0 {
            return Err(AutomatonError::Format("automaton has no states".into()));
        }
        let check = |s: StateId| {
            if s < state_count {
                Ok(s)
            } else {
                Err(AutomatonError::InvalidState(s))
            }
        };
        check(initial)?;
        let mut acc = vec![false; state_count];
        for &s in accepting {
            acc[check(s)?] = true;
        }
        let mut det = vec![false; state_count];
        for &s in deterministic {
            det[check(s)?] = true;
        }
        for e in &edges {
            check(e.from)?;
            if e.to.is_empty() {
                return Err(AutomatonError::Format(format!("edge from {} has no targets", e.from)));
            }
            for &t in &e.to {
                check(t)?;
            }
            if !e.guard.is_propositional() {
                return Err(AutomatonError::Format(format!("guard `{}` is not propositional", e.guard)));
            }
            for atom in e.guard.atoms() {
                if !alphabet.contains(&atom) {
                    return Err(LtlError::UnknownAtom(atom).into());
                }
            }
        }
        let mut eps = vec![Vec::new(); state_count];
        for &(from, to) in epsilon {
            eps[check(from)?].push(check(to)?);
        }
        for list in &mut eps {
            list.sort_unstable();
            list.dedup();
        }

        let letters = alphabet.letter_count();
        let mut table = vec![Vec::new(); state_count * letters];
        let mut matches = vec![0u32; state_count * letters];
        for e in &edges {
            for letter in alphabet.letters() {
                if e.guard.eval_letter(&alphabet, letter) == Some(true) {
                    let slot = e.from * letters + letter.index();
                    matches[slot] += 1;
                    table[slot].extend_from_slice(&e.to);
                }
            }
        }
        for list in &mut table {
            list.sort_unstable();
            list.dedup();
        }

        let ldba = Ldba {
            alphabet,
            state_count,
            initial,
            accepting: acc,
            deterministic: det,
            partial,
            edges,
            epsilon: eps,
            table,
        };
        ldba.validate(&matches)?;
        Ok(ldba)
    }

    fn validate(&self, matches: &[u32]) -> Result<(), AutomatonError> {
        let letters = self.alphabet.letter_count();
        for s in 0..self.state_count {
            if self.accepting[s] && !self.deterministic[s] {
                return Err(violation(
                    "accepting states lie in the deterministic component",
                    format!("accepting state {s} is outside it"),
                ));
            }
        }
        for s in 0..self.state_count {
            for letter in 0..letters {
                let slot = s * letters + letter;
                let targets = &self.table[slot];
                if targets.is_empty() && !self.partial {
                    return Err(violation("totality", format!("no guard matches letter {letter:#b} at state {s}")));
                }
                if self.deterministic[s] {
                    if matches[slot] != 1 || targets.len() != 1 {
                        return Err(violation(
                            "determinism",
                            format!(
                                "state {s} on letter {letter:#b} has {} matching guards and {} successors",
                                matches[slot],
                                targets.len()
                            ),
                        ));
                    }
                    if !self.deterministic[targets[0]] {
                        return Err(violation(
                            "deterministic component is closed",
                            format!("state {s} leaves it towards {}", targets[0]),
                        ));
                    }
                }
            }
        }
        for (s, targets) in self.epsilon.iter().enumerate() {
            for &t in targets {
                if self.deterministic[s] {
                    return Err(violation(
                        "epsilon transitions leave the non-deterministic part",
                        format!("epsilon edge {s} -> {t} starts inside the deterministic component"),
                    ));
                }
                if !self.deterministic[t] {
                    return Err(violation(
                        "epsilon transitions enter the deterministic component",
                        format!("epsilon edge {s} -> {t} targets a non-deterministic state"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s]
    }

    pub fn accepting_states(&self) -> Vec<StateId> {
        (0..self.state_count).filter(|&s| self.accepting[s]).collect()
    }

    pub fn is_deterministic(&self, s: StateId) -> bool {
        self.deterministic[s]
    }

    pub fn deterministic_states(&self) -> Vec<StateId> {
        (0..self.state_count).filter(|&s| self.deterministic[s]).collect()
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Targets of the ε-edges leaving `s`, ascending.
    pub fn epsilon_targets(&self, s: StateId) -> &[StateId] {
        &self.epsilon[s]
    }

    pub fn has_epsilon(&self) -> bool {
        self.epsilon.iter().any(|e| !e.is_empty())
    }

    /// Largest number of ε-edges leaving any single state.
    pub fn max_epsilon_out_degree(&self) -> usize {
        self.epsilon.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Successors of `b` on `letter`, ascending. ε-edges are not included.
    pub fn step(&self, b: StateId, letter: Letter) -> Result<&[StateId], AutomatonError> {
        if b >= self.state_count {
            return Err(AutomatonError::InvalidState(b));
        }
        let targets = &self.table[b * self.alphabet.letter_count() + letter.index()];
        if targets.is_empty() {
            return Err(AutomatonError::NoMatchingGuard { state: b, letter: letter.0 });
        }
        Ok(targets)
    }

    /// The unique successor of `b` on `letter`; the smallest one if `b` is
    /// non-deterministic.
    pub fn step_first(&self, b: StateId, letter: Letter) -> Result<StateId, AutomatonError> {
        Ok(self.step(b, letter)?[0])
    }

    /// `mask[i][j]` holds when a guard edge or an ε-edge leads from `i` to `j`.
    pub fn adjacency_mask(&self) -> Vec<Vec<bool>> {
        let letters = self.alphabet.letter_count();
        let mut mask = vec![vec![false; self.state_count]; self.state_count];
        for (i, row) in mask.iter_mut().enumerate() {
            for slot in &self.table[i * letters..(i + 1) * letters] {
                for &j in slot {
                    row[j] = true;
                }
            }
            for &j in &self.epsilon[i] {
                row[j] = true;
            }
        }
        mask
    }

    /// States whose outgoing guard and ε-edges all lead back to themselves.
    pub fn absorbing_states(&self) -> Vec<StateId> {
        let mask = self.adjacency_mask();
        (0..self.state_count).filter(|&s| mask[s].iter().enumerate().all(|(j, &m)| !m || j == s)).collect()
    }

    /// Absorbing states that are not accepting: once entered, the
    /// specification can no longer be satisfied.
    pub fn find_sinks(&self) -> Vec<StateId> {
        self.absorbing_states().into_iter().filter(|&s| !self.accepting[s]).collect()
    }

    /// A copy with a different accepting set, bypassing validation. Used to
    /// build deliberately broken automata in tests.
    pub fn with_accepting_unchecked(&self, accepting: &[StateId]) -> Ldba {
        let mut copy = self.clone();
        copy.accepting = vec![false; self.state_count];
        for &s in accepting {
            copy.accepting[s] = true;
        }
        copy
    }
}
