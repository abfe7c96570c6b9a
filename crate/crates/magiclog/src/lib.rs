//! Disjunctive Datalog with constraints.
//!
//! The library evaluates queries against programs of disjunctive rules
//! (negation-free) and constraints (negation allowed) over a database of
//! ground facts, under stable-model semantics: stable models are the minimal
//! models of the rules that satisfy every constraint.
//!
//! Crate layout:
//!
//! * [`model`]: terms, atoms, rules, programs, databases, models, validation.
//! * [`parse`]: surface syntax and canonical rendering.
//! * [`ground`]: Herbrand universe, goal-directed grounding, reducts.
//! * [`solve`]: minimal and stable model search, brave/cautious answers.
//! * [`rewrite`]: goal-directed binding propagation (magic sets) and
//!   compilation of stratified negation into constraints.
//! * [`reference`]: a small brute-force solver used to cross-check the rest.

pub mod corpus;
pub mod engine;
pub mod ground;
pub mod model;
pub mod parse;
pub mod reference;
pub mod rewrite;
pub mod solve;
