//! Reinforcement learning from LTL specifications with directed exploration
//! driven by a Bayesian view of the automaton.

pub mod automata;
pub mod baselines;
pub mod environments;
pub mod harness;
pub mod learning;
pub mod ltl;
pub mod product;
pub mod rng;
pub mod shaping;
