//! TOML automaton documents.
//!
//! ```toml
//! atoms = ["a", "b"]
//! states = 3
//! initial = 0
//! accepting = [1]
//! deterministic = [0, 1, 2]
//! partial = false          # optional
//!
//! [[edges]]
//! from = 0
//! guard = "a & !b"
//! to = [1]
//!
//! [[epsilon]]              # optional
//! from = 0
//! to = 1
//! ```

use serde::{Deserialize, Serialize};

use super::{AutomatonError, Edge, Ldba, StateId};
use crate::ltl::{parse, Alphabet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonFile {
    pub atoms: Vec<String>,
    pub states: usize,
    pub initial: StateId,
    pub accepting: Vec<StateId>,
    pub deterministic: Vec<StateId>,
    #[serde(default)]
    pub partial: bool,
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub epsilon: Vec<EpsilonEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: StateId,
    pub guard: String,
    pub to: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonEntry {
    pub from: StateId,
    pub to: StateId,
}

impl AutomatonFile {
    pub fn from_toml(text: &str) -> Result<Self, AutomatonError> {
        toml::from_str(text).map_err(|e| AutomatonError::Format(e.to_string()))
    }

    pub fn build(&self) -> Result<Ldba, AutomatonError> {
        let alphabet = Alphabet::new(self.atoms.iter().cloned())?;
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let guard = parse(&e.guard, &alphabet)?;
            edges.push(Edge { from: e.from, guard, to: e.to.clone() });
        }
        let eps: Vec<(StateId, StateId)> = self.epsilon.iter().map(|e| (e.from, e.to)).collect();
        Ldba::new(alphabet, self.states, self.initial, &self.accepting, &self.deterministic, edges, &eps, self.partial)
    }
}

impl Ldba {
    /// Parse and validate a TOML automaton document.
    pub fn from_toml(text: &str) -> Result<Ldba, AutomatonError> {
        AutomatonFile::from_toml(text)?.build()
    }

    pub fn to_file(&self) -> AutomatonFile {
        AutomatonFile {
            atoms: self.alphabet().atoms().to_vec(),
            states: self.state_count(),
            initial: self.initial(),
            accepting: self.accepting_states(),
            deterministic: self.deterministic_states(),
            partial: self.is_partial(),
            edges: self
                .edges()
                .iter()
                .map(|e| EdgeEntry { from: e.from, guard: e.guard.to_string(), to: e.to.clone() })
                .collect(),
            epsilon: (0..self.state_count())
                .flat_map(|s| self.epsilon_targets(s).iter().map(move |&t| EpsilonEntry { from: s, to: t }))
                .collect(),
        }
    }
}
