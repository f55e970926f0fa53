//! Linear temporal logic: formulas, a parser for the ASCII syntax, and an
//! exact semantics over ultimately periodic (lasso) words.
//!
//! Syntax, loosest to tightest binding:
//!
//! ```text
//! phi := phi '|' phi            (left associative)
//!      | phi '&' phi            (left associative)
//!      | phi 'U' phi            (right associative)
//!      | '!' phi | 'X' phi | 'F' phi | 'G' phi
//!      | atom | 'true' | 'false' | '(' phi ')'
//! ```
//!
//! Atoms are lowercase identifiers (`[a-z_][a-z0-9_]*`). The operator letters
//! are uppercase, so juxtaposed prefixes such as `GFa` or `XFc` lex as
//! separate tokens.

mod parser;
mod semantics;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parser::parse;
pub use semantics::{evaluate_lasso, CompiledFormula};

/// Maximum number of atomic propositions in one alphabet. Letters are stored
/// as bitmasks.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("lasso word has an empty cycle")]
    EmptyCycle,
}

/// LTL abstract syntax tree.
///
/// `Finally` and `Globally` are kept as explicit nodes so that printing
/// round-trips; they are evaluated with their own fixpoints, which must agree
/// with `true U phi` and `!F!phi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Self {
        Formula::Until(Box::new(l), Box::new(r))
    }

    pub fn finally(f: Formula) -> Self {
        Formula::Finally(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    /// The atoms occurring syntactically in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            Formula::Not(c) | Formula::Next(c) | Formula::Finally(c) | Formula::Globally(c) => c.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// True when the formula contains no temporal operator.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(c) => c.is_propositional(),
            Formula::And(l, r) | Formula::Or(l, r) => l.is_propositional() && r.is_propositional(),
            Formula::Next(_) | Formula::Until(..) | Formula::Finally(_) | Formula::Globally(_) => false,
        }
    }

    /// Evaluate a propositional formula on a single letter. Temporal operators
    /// are rejected with `None`.
    pub fn eval_letter(&self, alphabet: &Alphabet, letter: Letter) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(name) => letter.contains(alphabet.index_of(name)?),
            Formula::Not(c) => !c.eval_letter(alphabet, letter)?,
            Formula::And(l, r) => l.eval_letter(alphabet, letter)? && r.eval_letter(alphabet, letter)?,
            Formula::Or(l, r) => l.eval_letter(alphabet, letter)? || r.eval_letter(alphabet, letter)?,
            _ => return None,
        })
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(c) | Formula::Next(c) | Formula::Finally(c) | Formula::Globally(c) => 1 + c.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Parenthesize a child only when the parser would otherwise regroup it.
        fn child(f: &mut fmt::Formatter<'_>, c: &Formula, min_prec: u8) -> fmt::Result {
            if c.precedence() < min_prec {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(name) => write!(f, "{name}"),
            Formula::Not(c) => {
                write!(f, "!")?;
                child(f, c, 4)
            }
            Formula::Next(c) => {
                write!(f, "X")?;
                child(f, c, 4)
            }
            Formula::Finally(c) => {
                write!(f, "F")?;
                child(f, c, 4)
            }
            Formula::Globally(c) => {
                write!(f, "G")?;
                child(f, c, 4)
            }
            Formula::And(l, r) => {
                child(f, l, 2)?;
                write!(f, " & ")?;
                child(f, r, 3)
            }
            Formula::Or(l, r) => {
                child(f, l, 1)?;
                write!(f, " | ")?;
                child(f, r, 2)
            }
            Formula::Until(l, r) => {
                child(f, l, 4)?;
                write!(f, " U ")?;
                child(f, r, 3)
            }
        }
    }
}

/// An ordered set of atomic propositions. The position of an atom is its bit
/// in a [`Letter`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    atoms: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(atoms: I) -> Result<Self, LtlError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list: Vec<String> = Vec::new();
        for a in atoms {
            let a = a.into();
            if !is_identifier(&a) {
                return Err(LtlError::InvalidAlphabet(format!("`{a}` is not an atom name")));
            }
            if list.contains(&a) {
                return Err(LtlError::InvalidAlphabet(format!("duplicate atom `{a}`")));
            }
            list.push(a);
        }
        if list.len() > MAX_ATOMS {
            return Err(LtlError::InvalidAlphabet(format!("{} atoms exceed the limit of {MAX_ATOMS}", list.len())));
        }
        Ok(Alphabet { atoms: list })
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    /// Number of distinct letters, `2^|atoms|`.
    pub fn letter_count(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.letter_count() as u32).map(Letter)
    }

    /// Build the letter in which exactly `names` are true.
    pub fn letter<S: AsRef<str>>(&self, names: &[S]) -> Result<Letter, LtlError> {
        let mut bits = 0u32;
        for n in names {
            let idx = self.index_of(n.as_ref()).ok_or_else(|| LtlError::UnknownAtom(n.as_ref().to_string()))?;
            bits |= 1 << idx;
        }
        Ok(Letter(bits))
    }

    pub fn true_atoms(&self, letter: Letter) -> Vec<&str> {
        self.atoms.iter().enumerate().filter(|(i, _)| letter.contains(*i)).map(|(_, a)| a.as_str()).collect()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    s != "true" && s != "false" && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// One truth assignment: bit `i` is set when atom `i` of the alphabet holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Letter(pub u32);

impl Letter {
    pub const EMPTY: Letter = Letter(0);

    pub fn contains(self, atom: usize) -> bool {
        self.0 >> atom & 1 == 1
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The infinite word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Result<Self, LtlError> {
        if cycle.is_empty() {
            return Err(LtlError::EmptyCycle);
        }
        Ok(LassoWord { prefix, cycle })
    }

    /// Number of distinct positions, `|prefix| + |cycle|`.
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn letter_at(&self, pos: usize) -> Letter {
        if pos < self.prefix.len() {
            self.prefix[pos]
        } else {
            self.cycle[(pos - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Successor of a canonical position (`pos < positions()`).
    pub fn successor(&self, pos: usize) -> usize {
        if pos + 1 < self.positions() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }

    /// The same infinite word with the cycle copied `k` extra times into the
    /// prefix.
    pub fn unrolled(&self, k: usize) -> LassoWord {
        let mut prefix = self.prefix.clone();
        for _ in 0..k {
            prefix.extend_from_slice(&self.cycle);
        }
        LassoWord { prefix, cycle: self.cycle.clone() }
    }

    /// The same infinite word with the cycle rotated left by `r`, the
    /// rotated-out letters appended to the prefix.
    pub fn rotated(&self, r: usize) -> LassoWord {
        let r = r % self.cycle.len();
        let mut prefix = self.prefix.clone();
        prefix.extend_from_slice(&self.cycle[..r]);
        let mut cycle = self.cycle[r..].to_vec();
        cycle.extend_from_slice(&self.cycle[..r]);
        LassoWord { prefix, cycle }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_of_t0() {
        let ab = Alphabet::new(["a", "b", "c"]).unwrap();
        let f = parse("(GF(a & XFc)) & (G !b)", &ab).unwrap();
        let expected: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(f.atoms(), expected);
    }

    #[test]
    fn atoms_simple() {
        assert_eq!(Formula::atom("a").atoms().len(), 1);
        let g = Formula::globally(Formula::not(Formula::atom("b")));
        assert_eq!(g.atoms().into_iter().collect::<Vec<_>>(), vec!["b".to_string()]);
    }

    #[test]
    fn alphabet_rejects_bad_names() {
        assert!(Alphabet::new(["A"]).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["true"]).is_err());
        assert!(Alphabet::new(["x1", "_y"]).is_ok());
    }

    #[test]
    fn letter_bits() {
        let ab = Alphabet::new(["a", "b", "c"]).unwrap();
        let l = ab.letter(&["a", "c"]).unwrap();
        assert_eq!(l, Letter(0b101));
        assert_eq!(ab.true_atoms(l), vec!["a", "c"]);
        assert!(ab.letter(&["z"]).is_err());
    }

    #[test]
    fn rotation_and_unrolling_preserve_letters() {
        let w = LassoWord::new(vec![Letter(1)], vec![Letter(2), Letter(3), Letter(4)]).unwrap();
        let r = w.rotated(2);
        let u = w.unrolled(2);
        for i in 0..40 {
            assert_eq!(w.letter_at(i), r.letter_at(i));
            assert_eq!(w.letter_at(i), u.letter_at(i));
        }
    }

    #[test]
    fn empty_cycle_rejected() {
        assert_eq!(LassoWord::new(vec![], vec![]), Err(LtlError::EmptyCycle));
    }
}
