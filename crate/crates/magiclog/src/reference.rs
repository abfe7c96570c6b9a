//! Reference semantics by exhaustive enumeration.
//!
//! This module answers "what are the stable models?" the slow, obviously
//! correct way, for differential testing of the real pipeline. It shares no
//! machinery with the grounder or solver: rules are instantiated over the
//! full Herbrand universe with no relevance pruning, candidate models are
//! enumerated as bitmask subsets of the possible head atoms, and stability
//! is checked against the definition (classical satisfaction plus
//! subset-minimality of the reduct's rule part, then the constraint filter).
//!
//! Only usable on small inputs; sizes are guarded, never trimmed silently.

use crate::ground::universe_of;
use crate::model::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("too many candidate atoms for exhaustive enumeration: {atoms}")]
    TooManyAtoms { atoms: usize },
    #[error("too many substitutions for exhaustive instantiation: {count}")]
    TooManySubstitutions { count: usize },
}

const MAX_GUESS_ATOMS: usize = 22;
const MAX_TOTAL_ATOMS: usize = 60;
const MAX_SUBSTITUTIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct FlatRule {
    head: Vec<GroundAtom>,
    pos: Vec<GroundAtom>,
    neg: Vec<GroundAtom>,
    constraint: bool,
}

fn instantiate_all(program: &Program, universe: &[Const]) -> Result<BTreeSet<FlatRule>, OracleError> {
    let mut out = BTreeSet::new();
    for rule in program.statements() {
        let vars: Vec<String> = rule.variables().into_iter().collect();
        let count = universe.len().checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
        if count > MAX_SUBSTITUTIONS {
            return Err(OracleError::TooManySubstitutions { count });
        }
        let mut idx = vec![0usize; vars.len()];
        loop {
            let subst: Subst = vars
                .iter()
                .zip(&idx)
                .map(|(v, &i)| (v.clone(), universe[i].clone()))
                .collect();
            let mut ok = true;
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for l in &rule.body {
                match l {
                    Literal::Pos(a) => pos.push(a.ground_with(&subst).expect("bound")),
                    Literal::Neg(a) => neg.push(a.ground_with(&subst).expect("bound")),
                    Literal::Cmp(c) => {
                        if !c.eval(&subst).expect("bound") {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                out.insert(FlatRule {
                    head: rule.head.iter().map(|a| a.ground_with(&subst).expect("bound")).collect(),
                    pos,
                    neg,
                    constraint: rule.is_constraint(),
                });
            }
            // Advance the odometer over the universe.
            let mut carry = true;
            for d in idx.iter_mut() {
                *d += 1;
                if *d < universe.len() {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if vars.is_empty() || carry {
                break;
            }
        }
    }
    Ok(out)
}

struct MaskRule {
    head: u64,
    pos: u64,
    neg: u64,
    constraint: bool,
}

/// Stable models by definition, via exhaustive candidate enumeration.
pub fn stable_models_exhaustive(
    program: &Program,
    db: &Database,
) -> Result<BTreeSet<Model>, OracleError> {
    let universe = universe_of(program, db);
    let flat = instantiate_all(program, &universe)?;

    // Candidate atoms: database facts are fixed true; every ground head atom
    // beyond them may be guessed. Nothing else can appear in a stable model.
    let mut atoms: Vec<GroundAtom> = db.facts().iter().cloned().collect();
    let fixed = atoms.len();
    let head_atoms: BTreeSet<GroundAtom> = flat
        .iter()
        .flat_map(|r| r.head.iter().cloned())
        .filter(|a| !db.facts().contains(a))
        .collect();
    atoms.extend(head_atoms);
    if atoms.len() - fixed > MAX_GUESS_ATOMS {
        return Err(OracleError::TooManyAtoms { atoms: atoms.len() - fixed });
    }
    if atoms.len() > MAX_TOTAL_ATOMS {
        return Err(OracleError::TooManyAtoms { atoms: atoms.len() });
    }
    let index: BTreeMap<&GroundAtom, usize> =
        atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();

    // A rule with an underivable positive atom can never fire; a negated
    // atom outside the space is simply never true.
    let mut rules = Vec::new();
    'next: for r in &flat {
        let mut m = MaskRule { head: 0, pos: 0, neg: 0, constraint: r.constraint };
        for a in &r.head {
            m.head |= 1 << index[a];
        }
        for a in &r.pos {
            match index.get(a) {
                Some(&i) => m.pos |= 1 << i,
                None => continue 'next,
            }
        }
        for a in &r.neg {
            if let Some(&i) = index.get(a) {
                m.neg |= 1 << i;
            }
        }
        rules.push(m);
    }

    let d_mask: u64 = (0..fixed).fold(0, |m, i| m | (1 << i));
    let guess: Vec<usize> = (fixed..atoms.len()).collect();
    let expand = |sub: u64| -> u64 {
        let mut m = d_mask;
        for (bit, &i) in guess.iter().enumerate() {
            if sub & (1 << bit) != 0 {
                m |= 1 << i;
            }
        }
        m
    };

    let satisfied = |r: &MaskRule, m: u64| -> bool {
        let body_true = (r.pos & !m) == 0 && (r.neg & m) == 0;
        !body_true || (r.head & m) != 0
    };

    let mut out = BTreeSet::new();
    for s_sub in 0u64..(1u64 << guess.len()) {
        let m = expand(s_sub);
        if !rules.iter().all(|r| satisfied(r, m)) {
            continue;
        }
        // Reduct w.r.t. m (rules only; constraints never join minimality).
        let red: Vec<(u64, u64)> = rules
            .iter()
            .filter(|r| !r.constraint && (r.neg & m) == 0)
            .map(|r| (r.head, r.pos))
            .collect();
        let mut minimal = true;
        if s_sub != 0 {
            let mut sub = (s_sub - 1) & s_sub;
            loop {
                let n = expand(sub);
                if red.iter().all(|&(h, p)| (p & !n) != 0 || (h & n) != 0) {
                    minimal = false;
                    break;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & s_sub;
            }
        }
        if minimal {
            out.insert(
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m & (1 << i) != 0)
                    .map(|(_, a)| a.clone())
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Answer tuples over an explicit model set, by direct matching.
pub fn answers_exhaustive(
    goal: &Atom,
    models: &BTreeSet<Model>,
    mode: AnswerMode,
    universe: &[Const],
) -> AnswerSet {
    let vars = goal.variables_ordered();
    let tuples_in = |m: &Model| -> BTreeSet<Vec<Const>> {
        let mut out = BTreeSet::new();
        for fact in m.iter().filter(|a| a.pred == goal.pred) {
            let mut s = Subst::new();
            if goal.match_ground(fact, &mut s) {
                out.insert(vars.iter().map(|v| s[v].clone()).collect());
            }
        }
        out
    };
    let tuples = match mode {
        AnswerMode::Brave => models.iter().flat_map(|m| tuples_in(m)).collect(),
        AnswerMode::Cautious => {
            if models.is_empty() {
                let mut all: BTreeSet<Vec<Const>> = BTreeSet::new();
                all.insert(Vec::new());
                for _ in 0..vars.len() {
                    all = all
                        .iter()
                        .flat_map(|t| {
                            universe.iter().map(move |c| {
                                let mut t2 = t.clone();
                                t2.push(c.clone());
                                t2
                            })
                        })
                        .collect();
                }
                all
            } else {
                let mut iter = models.iter();
                let mut acc = tuples_in(iter.next().unwrap());
                for m in iter {
                    let t = tuples_in(m);
                    acc.retain(|x| t.contains(x));
                }
                acc
            }
        }
    };
    AnswerSet { mode, vars, tuples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_database, parse_program, parse_program_raw, render_model};

    fn models(text: &str, db: &str) -> Vec<String> {
        let p = parse_program_raw(text).unwrap();
        let d = parse_database(db).unwrap();
        stable_models_exhaustive(&p, &d)
            .unwrap()
            .iter()
            .map(render_model)
            .collect()
    }

    #[test]
    fn disjunction_and_minimality() {
        assert_eq!(models("a | b.", ""), vec!["{a}", "{b}"]);
        assert_eq!(models("a | b. a :- b. b :- a.", ""), vec!["{a, b}"]);
    }

    #[test]
    fn constraints_and_negation() {
        assert_eq!(models("a | b. :- a.", ""), vec!["{b}"]);
        assert_eq!(models("p :- not q. q :- not p.", ""), vec!["{p}", "{q}"]);
        assert_eq!(models("p :- not p.", ""), Vec::<String>::new());
    }

    #[test]
    fn variables_and_comparisons() {
        assert_eq!(
            models("p(X) :- a(X,Y), X <= 1.", "a(1,2). a(2,3)."),
            vec!["{a(1,2), a(2,3), p(1)}"]
        );
    }

    #[test]
    fn agrees_with_the_solver_on_handpicked_programs() {
        let cases = [
            ("p(X) | q(X) :- a(X,Y).", "a(1,2). a(2,3)."),
            ("p(X) | q(X) :- a(X,Y). :- p(X), a(X,Y), q(Y), X <= 1.", "a(1,2). a(2,3)."),
            ("p(X) :- b(X). q(X) :- a(X), not p(X).", "a(1). a(2). b(1)."),
            ("a | b. b :- a. :- a.", ""),
        ];
        for (prog, db) in cases {
            let p = parse_program_raw(prog).unwrap();
            let d = parse_database(db).unwrap();
            let slow = stable_models_exhaustive(&p, &d).unwrap();
            let fast =
                crate::solve::stable_models(&p, &d, &crate::solve::SolveOptions::default())
                    .unwrap();
            assert_eq!(slow, fast.models, "program: {prog}");
        }
    }

    #[test]
    fn size_guard_trips() {
        let p = parse_program("p(X,Y,Z) :- a(X), a(Y), a(Z).").unwrap();
        let db: Database = (1..=4)
            .map(|n| GroundAtom::new("a", vec![Const::Int(n)]))
            .collect();
        assert!(matches!(
            stable_models_exhaustive(&p, &db),
            Err(OracleError::TooManyAtoms { .. })
        ));
    }
}
