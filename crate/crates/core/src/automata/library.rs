//! Automata shipped with the crate, each paired with the formula it
//! recognizes.

use super::{AutomatonError, Ldba};

macro_rules! bundled {
    ($($name:literal => $formula:literal),* $(,)?) => {
        const BUNDLED: &[(&str, &str, &str)] = &[
            $(($name, $formula, include_str!(concat!("../../data/automata/", $name, ".toml")))),*
        ];
    };
}

bundled! {
    "t0" => "(GF(a & XFc)) & (G !b)",
    "reach_avoid" => "F a & G !b",
    "fga" => "FGa",
    "sequential_3" => "F(a & XF(b & XFc))",
    "sequential_4" => "F(a & XF(b & XF(c & XFd)))",
    "sequential_5" => "F(a & XF(b & XF(c & XF(d & XFe))))",
    "sequential_6" => "F(a & XF(b & XF(c & XF(d & XF(e & XFf)))))",
    "circular_2" => "GF(a & XFb) & G !e",
    "circular_3" => "GF(a & XF(b & XFc)) & G !e",
    "circular_4" => "GF(a & XF(b & XF(c & XFd))) & G !e",
    "gfa" => "GFa",
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _, _)| *n)
}

/// Raw TOML of a bundled automaton.
pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _, _)| *n == name).map(|(_, _, t)| *t)
}

/// The formula text a bundled automaton recognizes.
pub fn formula(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _, _)| *n == name).map(|(_, f, _)| *f)
}

pub fn load(name: &str) -> Result<Ldba, AutomatonError> {
    let text = source(name).ok_or_else(|| AutomatonError::Format(format!("no bundled automaton named `{name}`")))?;
    Ldba::from_toml(text)
}
