//! Random problem instances for differential testing.
//!
//! Sizes are chosen so the subset-enumeration reference stays tractable on
//! every instance: at most five rules with up to two head atoms, at most two
//! constraints, constants drawn from {1, 2, 3}, and a derived ground-atom
//! space of at most twelve atoms. Programs are safe by construction, and
//! negation appears only inside constraints and only on base predicates, so
//! a goal-directed model and any full model extending it agree on every
//! negated literal.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::model::{
    validate_program, Atom, CmpOp, Comparison, Const, Database, GroundAtom, Literal, Program,
    Rule, Term,
};

const CONSTANTS: [i64; 3] = [1, 2, 3];
const COMPARISONS: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne];

/// A generated program with a database and a ground goal to query.
#[derive(Debug, Clone)]
pub struct Instance {
    pub program: Program,
    pub db: Database,
    pub goal: Atom,
}

fn constant(rng: &mut impl Rng) -> i64 {
    *CONSTANTS.choose(rng).expect("constant pool is non-empty")
}

fn term_over(rng: &mut impl Rng, vars: &[String]) -> Term {
    if !vars.is_empty() && rng.random_bool(0.7) {
        Term::var(vars.choose(rng).expect("variable pool checked non-empty"))
    } else {
        Term::int(constant(rng))
    }
}

/// A positive atom over fresh variables and constants, recording the
/// variables it binds.
fn binding_atom(
    rng: &mut impl Rng,
    pred: &str,
    arity: usize,
    next_var: &mut usize,
    bound: &mut Vec<String>,
) -> Atom {
    let args = (0..arity)
        .map(|_| {
            if rng.random_bool(0.7) {
                // Reuse a bound variable half the time to create joins.
                if !bound.is_empty() && rng.random_bool(0.5) {
                    Term::var(bound.choose(rng).expect("bound pool checked non-empty"))
                } else {
                    let v = format!("X{next_var}");
                    *next_var += 1;
                    bound.push(v.clone());
                    Term::var(&v)
                }
            } else {
                Term::int(constant(rng))
            }
        })
        .collect();
    Atom { pred: pred.to_string(), args }
}

fn comparison_over(rng: &mut impl Rng, vars: &[String]) -> Option<Literal> {
    if vars.is_empty() {
        return None;
    }
    let lhs = Term::var(vars.choose(rng).expect("checked non-empty"));
    let rhs = term_over(rng, vars);
    let op = *COMPARISONS.choose(rng).expect("operator pool is non-empty");
    Some(Literal::Cmp(Comparison { lhs, op, rhs }))
}

/// A random disjunctive rule with exactly `head_atoms` head atoms, safe by
/// construction: the body is built first and head arguments only use
/// variables the body binds.
pub fn random_rule(rng: &mut impl Rng, head_atoms: usize) -> Rule {
    let mut next_var = 0;
    let mut bound = Vec::new();
    let mut body = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let (pred, arity) = if rng.random_bool(0.5) { ("b1", 1) } else { ("b2", 2) };
        body.push(Literal::Pos(binding_atom(rng, pred, arity, &mut next_var, &mut bound)));
    }
    if rng.random_bool(0.3) {
        body.extend(comparison_over(rng, &bound));
    }
    let head = (0..head_atoms)
        .map(|i| {
            let arity = 1 + usize::from(rng.random_bool(0.3));
            let args = (0..arity).map(|_| term_over(rng, &bound)).collect();
            Atom { pred: format!("h{i}"), args }
        })
        .collect();
    Rule::new(head, body)
}

/// A random constraint with exactly `derived_atoms` positive atoms over
/// derived predicates, plus base atoms and an optional negated base atom or
/// comparison. Returns the constraint and the derived predicate names.
pub fn random_constraint(rng: &mut impl Rng, derived_atoms: usize) -> (Rule, BTreeSet<String>) {
    let mut next_var = 0;
    let mut bound = Vec::new();
    let mut body = Vec::new();
    let mut derived = BTreeSet::new();
    for i in 0..derived_atoms {
        let pred = format!("d{i}");
        derived.insert(pred.clone());
        let arity = 1 + usize::from(rng.random_bool(0.3));
        body.push(Literal::Pos(binding_atom(rng, &pred, arity, &mut next_var, &mut bound)));
    }
    for _ in 0..rng.random_range(usize::from(derived_atoms == 0)..=2) {
        body.push(Literal::Pos(binding_atom(rng, "b1", 1, &mut next_var, &mut bound)));
    }
    if rng.random_bool(0.3) {
        let (pred, arity) = BASE_POOL.choose(rng).expect("non-empty");
        let args = (0..*arity).map(|_| term_over(rng, &bound)).collect();
        body.push(Literal::Neg(Atom { pred: pred.to_string(), args }));
    }
    if rng.random_bool(0.3) {
        body.extend(comparison_over(rng, &bound));
    }
    (Rule::constraint(body), derived)
}

/// The derived predicate pool for one program: names with arities whose
/// ground-atom space stays within the reference solver's budget.
fn derived_pool(rng: &mut impl Rng) -> Vec<(String, usize)> {
    let shape: &[(&str, usize)] = match rng.random_range(0..3) {
        0 => &[("p", 1), ("q", 1)],
        1 => &[("p", 1), ("q", 1), ("r", 1)],
        _ => &[("p", 1), ("r", 2)],
    };
    shape.iter().map(|(n, a)| (n.to_string(), *a)).collect()
}

const BASE_POOL: [(&str, usize); 2] = [("b1", 1), ("b2", 2)];

fn pool_atom(
    rng: &mut impl Rng,
    pool: &[(String, usize)],
    next_var: &mut usize,
    bound: &mut Vec<String>,
) -> Atom {
    let (pred, arity) = pool.choose(rng).expect("pool is non-empty").clone();
    binding_atom(rng, &pred, arity, next_var, bound)
}

fn instance_rule(rng: &mut impl Rng, derived: &[(String, usize)]) -> Rule {
    let mut next_var = 0;
    let mut bound = Vec::new();
    let mut body = Vec::new();
    if rng.random_bool(0.9) {
        for _ in 0..rng.random_range(1..=3) {
            if rng.random_bool(0.7) {
                let (pred, arity) = BASE_POOL.choose(rng).expect("non-empty");
                body.push(Literal::Pos(binding_atom(rng, pred, *arity, &mut next_var, &mut bound)));
            } else {
                body.push(Literal::Pos(pool_atom(rng, derived, &mut next_var, &mut bound)));
            }
        }
        if rng.random_bool(0.2) {
            body.extend(comparison_over(rng, &bound));
        }
    }
    let head_atoms = 1 + usize::from(rng.random_bool(0.4));
    let mut picks: Vec<&(String, usize)> = derived.iter().collect();
    let mut head = Vec::new();
    for _ in 0..head_atoms.min(picks.len()) {
        let i = rng.random_range(0..picks.len());
        let (pred, arity) = picks.remove(i);
        let args = (0..*arity).map(|_| term_over(rng, &bound)).collect();
        head.push(Atom { pred: pred.clone(), args });
    }
    Rule::new(head, body)
}

fn instance_constraint(rng: &mut impl Rng, derived: &[(String, usize)]) -> Rule {
    let mut next_var = 0;
    let mut bound = Vec::new();
    let mut body = Vec::new();
    // Base atoms come first and bind every variable on their own, so each
    // rule promoted out of this constraint stays range restricted no matter
    // which derived atom it loses.
    for _ in 0..rng.random_range(1..=2) {
        let (pred, arity) = BASE_POOL.choose(rng).expect("non-empty");
        body.push(Literal::Pos(binding_atom(rng, pred, *arity, &mut next_var, &mut bound)));
    }
    for _ in 0..rng.random_range(0..=2) {
        if let Some((pred, arity)) = derived.choose(rng) {
            let args = (0..*arity).map(|_| term_over(rng, &bound)).collect();
            body.push(Literal::Pos(Atom { pred: pred.clone(), args }));
        }
    }
    // Negation stays on base predicates: their extension is the database on
    // both sides of every comparison, so a goal-directed model and the full
    // model it extends agree on each negated literal.
    if rng.random_bool(0.4) {
        let (pred, arity) = BASE_POOL.choose(rng).expect("non-empty");
        let args = (0..*arity).map(|_| term_over(rng, &bound)).collect();
        body.push(Literal::Neg(Atom { pred: pred.to_string(), args }));
    }
    if rng.random_bool(0.3) {
        body.extend(comparison_over(rng, &bound));
    }
    Rule::constraint(body)
}

fn random_database(rng: &mut impl Rng) -> Database {
    let mut db = Database::empty();
    for c in CONSTANTS {
        if rng.random_bool(0.5) {
            db.insert(GroundAtom::new("b1", vec![Const::Int(c)]));
        }
        for d in CONSTANTS {
            if rng.random_bool(0.35) {
                db.insert(GroundAtom::new("b2", vec![Const::Int(c), Const::Int(d)]));
            }
        }
    }
    if db.facts().is_empty() {
        db.insert(GroundAtom::new("b1", vec![Const::Int(1)]));
    }
    db
}

/// A random valid program, database, and ground goal.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    for _ in 0..100 {
        let derived = derived_pool(rng);
        let rules: Vec<Rule> =
            (0..rng.random_range(1..=5)).map(|_| instance_rule(rng, &derived)).collect();
        let constraints: Vec<Rule> =
            (0..rng.random_range(0..=2)).map(|_| instance_constraint(rng, &derived)).collect();
        let program = Program::new(rules, constraints);
        if validate_program(&program).is_err() {
            continue;
        }
        let db = random_database(rng);
        let goal = if rng.random_bool(0.85) {
            let heads: Vec<String> = program.derived().iter().cloned().collect();
            let pred = heads.choose(rng).expect("rules guarantee a derived head").clone();
            let arity = derived.iter().find(|(p, _)| *p == pred).map_or(1, |(_, a)| *a);
            Atom {
                pred,
                args: (0..arity).map(|_| Term::int(constant(rng))).collect(),
            }
        } else {
            let (pred, arity) = BASE_POOL.choose(rng).expect("non-empty");
            Atom {
                pred: pred.to_string(),
                args: (0..*arity).map(|_| Term::int(constant(rng))).collect(),
            }
        };
        return Instance { program, db, goal };
    }
    unreachable!("construction keeps programs valid");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::render_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_rules_are_safe_and_sized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..200 {
            let m = 1 + (i % 4);
            let rule = random_rule(&mut rng, m);
            assert_eq!(rule.head.len(), m);
            let program = Program::new(vec![rule], Vec::new());
            assert!(validate_program(&program).is_ok(), "{program:?}");
        }
    }

    #[test]
    fn random_constraints_count_their_derived_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..200 {
            let m = i % 5;
            let (constraint, derived) = random_constraint(&mut rng, m);
            let positive_derived = constraint
                .body
                .iter()
                .filter(|l| matches!(l, Literal::Pos(a) if derived.contains(&a.pred)))
                .count();
            assert_eq!(positive_derived, m);
            assert_eq!(derived.len(), m);
        }
    }

    #[test]
    fn instances_validate_and_stay_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let inst = random_instance(&mut rng);
            assert!(validate_program(&inst.program).is_ok());
            assert!(inst.program.rules().len() <= 5);
            assert!(inst.program.constraints().len() <= 2);
            assert!(inst.goal.args.iter().all(|t| matches!(t, Term::Const(_))));
            let space: usize = inst
                .program
                .derived()
                .iter()
                .map(|p| {
                    let arity = inst
                        .program
                        .statements()
                        .flat_map(|r| r.head.iter().chain(r.body.iter().filter_map(|l| l.atom())))
                        .find(|a| &a.pred == p)
                        .map_or(0, |a| a.args.len());
                    CONSTANTS.len().pow(arity as u32)
                })
                .sum();
            assert!(space <= 12, "derived space {space}");
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(42));
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(render_program(&a.program), render_program(&b.program));
        assert_eq!(a.db, b.db);
        assert_eq!(a.goal, b.goal);
    }
}
