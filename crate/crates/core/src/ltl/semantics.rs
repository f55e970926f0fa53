use super::{Alphabet, Formula, LassoWord, LtlError};

#[derive(Debug, Clone, Copy)]
enum Node {
    True,
    False,
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Finally(usize),
    Globally(usize),
}

/// A formula flattened into post-order over a fixed alphabet, ready to be
/// evaluated on many words.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    nodes: Vec<Node>,
}

impl CompiledFormula {
    pub fn new(f: &Formula, alphabet: &Alphabet) -> Result<Self, LtlError> {
        let mut nodes = Vec::new();
        flatten(f, alphabet, &mut nodes)?;
        Ok(CompiledFormula { nodes })
    }

    pub fn subformula_count(&self) -> usize {
        self.nodes.len()
    }

    /// Whether `prefix · cycle^ω` satisfies the formula at position 0.
    pub fn evaluate(&self, w: &LassoWord) -> bool {
        let n = w.positions();
        let p = w.prefix.len();
        let mut table: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let row: Vec<bool> = match *node {
                Node::True => vec![true; n],
                Node::False => vec![false; n],
                Node::Atom(i) => (0..n).map(|pos| w.letter_at(pos).contains(i)).collect(),
                Node::Not(c) => table[c].iter().map(|v| !v).collect(),
                Node::And(l, r) => (0..n).map(|i| table[l][i] && table[r][i]).collect(),
                Node::Or(l, r) => (0..n).map(|i| table[l][i] || table[r][i]).collect(),
                Node::Next(c) => (0..n).map(|i| table[c][w.successor(i)]).collect(),
                Node::Until(l, r) => {
                    let (lv, rv) = (&table[l], &table[r]);
                    fixpoint(n, p, false, |i, next| rv[i] || (lv[i] && next))
                }
                Node::Finally(c) => {
                    let cv = &table[c];
                    fixpoint(n, p, false, |i, next| cv[i] || next)
                }
                Node::Globally(c) => {
                    let cv = &table[c];
                    fixpoint(n, p, true, |i, next| cv[i] && next)
                }
            };
            table.push(row);
        }
        table.last().map(|row| row[0]).unwrap_or(false)
    }
}

/// Solve `v[i] = step(i, v[succ(i)])` over a lasso with `n` positions and
/// loop-back point `p`, taking the least (`init = false`) or greatest
/// (`init = true`) solution. Two backward sweeps settle the cycle; one more
/// covers the prefix.
fn fixpoint(n: usize, p: usize, init: bool, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
    let mut v = vec![init; n];
    for _ in 0..2 {
        for i in (p..n).rev() {
            let next = if i + 1 < n { v[i + 1] } else { v[p] };
            v[i] = step(i, next);
        }
    }
    for i in (0..p).rev() {
        v[i] = step(i, v[i + 1]);
    }
    v
}

fn flatten(f: &Formula, ab: &Alphabet, out: &mut Vec<Node>) -> Result<usize, LtlError> {
    let node = match f {
        Formula::True => Node::True,
        Formula::False => Node::False,
        Formula::Atom(name) => Node::Atom(ab.index_of(name).ok_or_else(|| LtlError::UnknownAtom(name.clone()))?),
        Formula::Not(c) => Node::Not(flatten(c, ab, out)?),
        Formula::Next(c) => Node::Next(flatten(c, ab, out)?),
        Formula::Finally(c) => Node::Finally(flatten(c, ab, out)?),
        Formula::Globally(c) => Node::Globally(flatten(c, ab, out)?),
        Formula::And(l, r) => {
            let l = flatten(l, ab, out)?;
            Node::And(l, flatten(r, ab, out)?)
        }
        Formula::Or(l, r) => {
            let l = flatten(l, ab, out)?;
            Node::Or(l, flatten(r, ab, out)?)
        }
        Formula::Until(l, r) => {
            let l = flatten(l, ab, out)?;
            Node::Until(l, flatten(r, ab, out)?)
        }
    };
    out.push(node);
    Ok(out.len() - 1)
}

/// Whether the lasso word satisfies `f`. Letters are interpreted over
/// `alphabet`.
pub fn evaluate_lasso(f: &Formula, alphabet: &Alphabet, w: &LassoWord) -> Result<bool, LtlError> {
    Ok(CompiledFormula::new(f, alphabet)?.evaluate(w))
}
