//! Grounding: from rules with variables to ground rule instances.
//!
//! Instantiation is derivability-driven. Substitutions are enumerated by
//! joining positive body atoms, in body order, against the database plus
//! every head atom derived so far, iterating to a fixpoint. Negated atoms
//! never produce bindings; variables that occur in no positive body atom
//! range over the whole Herbrand universe. This keeps irrelevant instances
//! out: a rule instance only exists if each positive body atom could at
//! least in principle be derived (negated literals are treated as
//! satisfiable, and every disjunct of a head counts as derivable). Any atom
//! set that satisfies the rules is contained in that closure, so no instance
//! relevant to model checking, reducts, or minimality is lost.
//!
//! Comparisons are resolved here: a satisfied comparison is dropped from the
//! instance, an unsatisfiable one drops the instance.

use crate::model::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

/// A ground rule instance. Empty `head` means a constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundRule {
    pub head: Vec<GroundAtom>,
    pub pos: Vec<GroundAtom>,
    pub neg: Vec<GroundAtom>,
}

impl GroundRule {
    pub fn fact(atom: GroundAtom) -> GroundRule {
        GroundRule { head: vec![atom], pos: Vec::new(), neg: Vec::new() }
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_empty()
    }

    /// Classical body truth in `model`.
    pub fn body_holds(&self, model: &Model) -> bool {
        self.pos.iter().all(|a| model.contains(a)) && self.neg.iter().all(|a| !model.contains(a))
    }

    /// Classical satisfaction: head true or body false.
    pub fn satisfied(&self, model: &Model) -> bool {
        !self.body_holds(model) || self.head.iter().any(|a| model.contains(a))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.head.iter().chain(&self.pos).chain(&self.neg)
    }
}

impl std::fmt::Display for GroundRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.pos.is_empty() || !self.neg.is_empty() || self.head.is_empty() {
            if !self.head.is_empty() {
                write!(f, " ")?;
            }
            write!(f, ":- ")?;
            let mut first = true;
            for a in &self.pos {
                if !first {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
                first = false;
            }
            for a in &self.neg {
                if !first {
                    write!(f, ", ")?;
                }
                write!(f, "not {a}")?;
                first = false;
            }
        }
        write!(f, ".")
    }
}

/// A ground program: rule instances (with database facts folded in as
/// empty-body rules) plus constraint instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundProgram {
    pub rules: Vec<GroundRule>,
    pub constraints: Vec<GroundRule>,
    /// How many entries of `rules` are database facts.
    pub fact_count: usize,
}

impl GroundProgram {
    /// Ground rule and constraint instances, excluding database facts.
    pub fn instance_count(&self) -> usize {
        self.rules.len() - self.fact_count + self.constraints.len()
    }

    /// Every atom occurring anywhere in the ground program.
    pub fn atoms(&self) -> BTreeSet<GroundAtom> {
        self.rules
            .iter()
            .chain(&self.constraints)
            .flat_map(|r| r.atoms().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("the program and database contain no constants")]
    EmptyUniverse,
    #[error("ground instance limit of {limit} exceeded")]
    ResourceLimit { limit: usize },
    #[error("grounding timed out")]
    Timeout,
}

/// Limits and seeds for grounding.
#[derive(Debug, Clone)]
pub struct GroundOptions {
    /// Maximum number of ground instances before aborting.
    pub limit: usize,
    /// Extra atoms assumed derivable (used by the stability checker to make
    /// every instance touching a candidate model visible).
    pub seeds: Vec<GroundAtom>,
    /// Optional wall-clock cutoff.
    pub deadline: Option<Instant>,
}

impl Default for GroundOptions {
    fn default() -> GroundOptions {
        GroundOptions { limit: 200_000, seeds: Vec::new(), deadline: None }
    }
}

/// All constants of the program and database, sorted. Errors when there are
/// none at all (grounding itself tolerates an empty universe: a variable-free
/// program needs no constants).
pub fn herbrand_universe(program: &Program, db: &Database) -> Result<Vec<Const>, GroundError> {
    let u = universe_of(program, db);
    if u.is_empty() {
        Err(GroundError::EmptyUniverse)
    } else {
        Ok(u)
    }
}

/// Like [`herbrand_universe`] but an empty result is just an empty list.
pub fn universe_of(program: &Program, db: &Database) -> Vec<Const> {
    let mut cs = program.constants();
    cs.extend(db.constants());
    cs.into_iter().collect()
}

struct RuleParts<'a> {
    head: &'a [Atom],
    positive: Vec<&'a Atom>,
    negative: Vec<&'a Atom>,
    comparisons: Vec<&'a Comparison>,
}

fn split_rule(rule: &Rule) -> RuleParts<'_> {
    let mut parts = RuleParts {
        head: &rule.head,
        positive: Vec::new(),
        negative: Vec::new(),
        comparisons: Vec::new(),
    };
    for l in &rule.body {
        match l {
            Literal::Pos(a) => parts.positive.push(a),
            Literal::Neg(a) => parts.negative.push(a),
            Literal::Cmp(c) => parts.comparisons.push(c),
        }
    }
    parts
}

type PredIndex = BTreeMap<String, Vec<GroundAtom>>;

fn comparisons_ok(cmps: &[&Comparison], subst: &Subst) -> bool {
    // A comparison with unbound sides is deferred (treated as passing here);
    // by the time a full substitution exists every side is bound.
    cmps.iter().all(|c| c.eval(subst).unwrap_or(true))
}

fn instantiate_rule(
    rule: &Rule,
    index: &PredIndex,
    universe: &[Const],
    out: &mut BTreeSet<GroundRule>,
    limit: usize,
    total_other: usize,
) -> Result<(), GroundError> {
    let parts = split_rule(rule);
    let empty: Vec<GroundAtom> = Vec::new();

    // Variables not bound by any positive atom range over the universe.
    let positive_vars: BTreeSet<String> =
        parts.positive.iter().flat_map(|a| a.variables()).collect();
    let free_vars: Vec<String> = rule
        .variables()
        .into_iter()
        .filter(|v| !positive_vars.contains(v))
        .collect();

    fn emit(
        parts: &RuleParts<'_>,
        subst: &Subst,
        out: &mut BTreeSet<GroundRule>,
        limit: usize,
        total_other: usize,
    ) -> Result<(), GroundError> {
        if !comparisons_ok(&parts.comparisons, subst) {
            return Ok(());
        }
        let ground = |a: &Atom| a.ground_with(subst).expect("all variables bound");
        let inst = GroundRule {
            head: parts.head.iter().map(&ground).collect(),
            pos: parts.positive.iter().map(|a| ground(a)).collect(),
            neg: parts.negative.iter().map(|a| ground(a)).collect(),
        };
        out.insert(inst);
        if total_other + out.len() > limit {
            return Err(GroundError::ResourceLimit { limit });
        }
        Ok(())
    }

    fn bind_free(
        parts: &RuleParts<'_>,
        free: &[String],
        universe: &[Const],
        subst: &mut Subst,
        out: &mut BTreeSet<GroundRule>,
        limit: usize,
        total_other: usize,
    ) -> Result<(), GroundError> {
        match free.split_first() {
            None => emit(parts, subst, out, limit, total_other),
            Some((v, rest)) => {
                for c in universe {
                    subst.insert(v.clone(), c.clone());
                    bind_free(parts, rest, universe, subst, out, limit, total_other)?;
                }
                subst.remove(v);
                Ok(())
            }
        }
    }

    fn join(
        parts: &RuleParts<'_>,
        i: usize,
        index: &PredIndex,
        empty: &Vec<GroundAtom>,
        free: &[String],
        universe: &[Const],
        subst: &Subst,
        out: &mut BTreeSet<GroundRule>,
        limit: usize,
        total_other: usize,
    ) -> Result<(), GroundError> {
        if i == parts.positive.len() {
            let mut s = subst.clone();
            return bind_free(parts, free, universe, &mut s, out, limit, total_other);
        }
        let atom = parts.positive[i];
        for fact in index.get(&atom.pred).unwrap_or(empty) {
            let mut s = subst.clone();
            if atom.match_ground(fact, &mut s) && comparisons_ok(&parts.comparisons, &s) {
                join(parts, i + 1, index, empty, free, universe, &s, out, limit, total_other)?;
            }
        }
        Ok(())
    }

    join(
        &parts,
        0,
        index,
        &empty,
        &free_vars,
        universe,
        &Subst::new(),
        out,
        limit,
        total_other,
    )
}

/// Grounds `program` over `db` (plus `opts.seeds`) to a fixpoint of
/// derivable atoms. Database facts are folded in as empty-body rules.
pub fn ground_program(
    program: &Program,
    db: &Database,
    opts: &GroundOptions,
) -> Result<GroundProgram, GroundError> {
    let universe = universe_of(program, db);
    let mut derivable: BTreeSet<GroundAtom> = db.facts().clone();
    derivable.extend(opts.seeds.iter().cloned());

    let mut rule_insts: BTreeSet<GroundRule> = BTreeSet::new();
    let mut constraint_insts: BTreeSet<GroundRule> = BTreeSet::new();

    loop {
        if let Some(d) = opts.deadline {
            if Instant::now() > d {
                return Err(GroundError::Timeout);
            }
        }
        let mut index: PredIndex = BTreeMap::new();
        for a in &derivable {
            index.entry(a.pred.clone()).or_default().push(a.clone());
        }

        let before = (rule_insts.len(), constraint_insts.len(), derivable.len());
        for rule in program.rules() {
            instantiate_rule(rule, &index, &universe, &mut rule_insts, opts.limit, constraint_insts.len())?;
        }
        for c in program.constraints() {
            instantiate_rule(c, &index, &universe, &mut constraint_insts, opts.limit, rule_insts.len())?;
        }
        for inst in &rule_insts {
            derivable.extend(inst.head.iter().cloned());
        }
        if (rule_insts.len(), constraint_insts.len(), derivable.len()) == before {
            break;
        }
    }

    let mut rules: Vec<GroundRule> = db.facts().iter().cloned().map(GroundRule::fact).collect();
    let fact_count = rules.len();
    rules.extend(rule_insts);
    Ok(GroundProgram {
        rules,
        constraints: constraint_insts.into_iter().collect(),
        fact_count,
    })
}

/// The reduct w.r.t. interpretation `i`: drop every rule with a negated atom
/// true in `i`, strip the remaining negations. Constraints get the same
/// treatment (a constraint whose negated atom holds is satisfied outright).
pub fn reduct(gp: &GroundProgram, i: &Model) -> GroundProgram {
    let keep = |r: &GroundRule| -> Option<GroundRule> {
        if r.neg.iter().any(|a| i.contains(a)) {
            return None;
        }
        Some(GroundRule { head: r.head.clone(), pos: r.pos.clone(), neg: Vec::new() })
    };
    GroundProgram {
        rules: gp.rules.iter().filter_map(keep).collect(),
        constraints: gp.constraints.iter().filter_map(keep).collect(),
        fact_count: gp.fact_count,
    }
}

/// Splits rules and constraints into (true in `n`, false in `n`): a ground
/// rule is true iff its head holds or its body does not.
pub fn partition_by_truth(gp: &GroundProgram, n: &Model) -> (Vec<GroundRule>, Vec<GroundRule>) {
    let mut true_part = Vec::new();
    let mut false_part = Vec::new();
    for r in gp.rules.iter().chain(&gp.constraints) {
        if r.satisfied(n) {
            true_part.push(r.clone());
        } else {
            false_part.push(r.clone());
        }
    }
    (true_part, false_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_database, parse_program, parse_program_raw};

    fn ga(pred: &str, args: &[i64]) -> GroundAtom {
        GroundAtom::new(pred, args.iter().map(|&n| Const::Int(n)).collect())
    }

    #[test]
    fn universe_collects_program_and_db_constants() {
        let p = parse_program("p(X) :- a(X,blue).").unwrap();
        let db = parse_database("a(1,2).").unwrap();
        let u = herbrand_universe(&p, &db).unwrap();
        assert_eq!(u, vec![Const::Int(1), Const::Int(2), Const::sym("blue")]);

        let empty = parse_program("p(X) :- a(X).").unwrap();
        assert_eq!(
            herbrand_universe(&empty, &Database::empty()),
            Err(GroundError::EmptyUniverse)
        );
    }

    #[test]
    fn chain_program_grounds_one_instance_per_fact() {
        let p = parse_program("p(X) | q(X) :- a(X,Y).").unwrap();
        let db = parse_database("a(1,2). a(2,3). a(3,4).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        assert_eq!(g.instance_count(), 3);
        assert_eq!(g.fact_count, 3);
        assert_eq!(g.rules.len(), 6);
    }

    #[test]
    fn derivability_prunes_unreachable_instances() {
        // q only derivable at 1; r instances exist only where q is derivable.
        let p = parse_program("q(X) :- a(X). r(X) :- q(X), b(X).").unwrap();
        let db = parse_database("a(1). b(1). b(2).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        let rendered: Vec<String> =
            g.rules.iter().skip(g.fact_count).map(|r| r.to_string()).collect();
        assert_eq!(rendered, vec!["q(1) :- a(1).", "r(1) :- q(1), b(1)."]);
    }

    #[test]
    fn disjunctive_heads_are_all_derivable() {
        let p = parse_program("p(X) | q(X) :- a(X). r(X) :- q(X).").unwrap();
        let db = parse_database("a(1).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        assert!(g
            .rules
            .iter()
            .any(|r| r.head == vec![ga("r", &[1])] && r.pos == vec![ga("q", &[1])]));
    }

    #[test]
    fn comparisons_resolve_at_ground_time() {
        let p = parse_program_raw("p(X) :- a(X,Y), X <= 1.").unwrap();
        let db = parse_database("a(1,2). a(2,3).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        let insts: Vec<&GroundRule> = g.rules.iter().skip(g.fact_count).collect();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].to_string(), "p(1) :- a(1,2).");
    }

    #[test]
    fn negation_only_variables_range_over_universe() {
        let p = parse_program_raw("nv(X) :- not conn(X).").unwrap();
        let db = parse_database("node(1). node(2).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        let insts: Vec<String> =
            g.rules.iter().skip(g.fact_count).map(|r| r.to_string()).collect();
        assert_eq!(insts, vec!["nv(1) :- not conn(1).", "nv(2) :- not conn(2)."]);
    }

    #[test]
    fn seeds_extend_derivability() {
        let p = parse_program("r(X) :- q(X), b(X).").unwrap();
        let db = parse_database("b(1).").unwrap();
        let no_seed = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        assert_eq!(no_seed.instance_count(), 0);
        let opts = GroundOptions { seeds: vec![ga("q", &[1])], ..Default::default() };
        let seeded = ground_program(&p, &db, &opts).unwrap();
        assert_eq!(seeded.instance_count(), 1);
    }

    #[test]
    fn instance_limit_is_enforced() {
        let p = parse_program("p(X,Y) :- a(X), a(Y).").unwrap();
        let db: Database = (1..=20).map(|n| ga("a", &[n])).collect();
        let opts = GroundOptions { limit: 100, ..Default::default() };
        assert_eq!(
            ground_program(&p, &db, &opts),
            Err(GroundError::ResourceLimit { limit: 100 })
        );
    }

    #[test]
    fn reduct_follows_the_definition() {
        let p = parse_program_raw("p :- not q.").unwrap();
        let g = ground_program(&p, &Database::empty(), &GroundOptions::default()).unwrap();

        let wrt_p: Model = [ga("p", &[])].into_iter().collect();
        let r1 = reduct(&g, &wrt_p);
        assert_eq!(r1.rules.len(), 1);
        assert_eq!(r1.rules[0].to_string(), "p.");

        let wrt_q: Model = [ga("q", &[])].into_iter().collect();
        let r2 = reduct(&g, &wrt_q);
        assert!(r2.rules.is_empty());

        // Idempotent once negation is gone.
        assert_eq!(reduct(&r1, &wrt_p), r1);
    }

    #[test]
    fn partition_by_truth_splits_on_satisfaction() {
        let p = parse_program("p(X) :- a(X). q(X) :- p(X).").unwrap();
        let db = parse_database("a(1).").unwrap();
        let g = ground_program(&p, &db, &GroundOptions::default()).unwrap();
        let n: Model = [ga("a", &[1]), ga("p", &[1])].into_iter().collect();
        let (t, f) = partition_by_truth(&g, &n);
        // a(1). and p(1) :- a(1). hold; q(1) :- p(1). does not.
        assert_eq!(t.len(), 2);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].to_string(), "q(1) :- p(1).");
    }
}
