//! Model computation: minimal models, stable models, perfect models,
//! stability checking, and query answers.
//!
//! The core enumerator branches over the disjuncts of unsatisfied rules on
//! top of a deterministic single-head saturation loop, then filters the
//! candidates down to the subset-minimal ones. For programs whose rules use
//! negation (rewriting produces such fragments) evaluation is stratum by
//! stratum when possible: negated atoms then always refer to already-frozen
//! lower strata. Unstratifiable programs fall back to enumerating truth
//! assignments for the finitely many negated ground atoms and checking each
//! induced reduct.
//!
//! Stable models of a program with constraints are the subset-minimal models
//! of the rule part that satisfy every constraint; constraints prune, they
//! never derive. Minimality is therefore computed before constraint
//! filtering throughout.

use crate::ground::{ground_program, reduct, GroundError, GroundOptions, GroundProgram, GroundRule};
use crate::model::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error("model candidate limit of {limit} exceeded")]
    ModelLimit { limit: usize },
    #[error("too many negated ground atoms for reduct enumeration: {atoms}")]
    NegationLimit { atoms: usize },
    #[error("rules contain negation where a positive program is required")]
    NotPositive,
    #[error("perfect models require single-head rules")]
    NotNormal,
    #[error("answers require an exhaustively enumerated model set")]
    NonExhaustive,
    #[error("solving timed out")]
    Timeout,
}

/// Limits for model enumeration.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub ground: GroundOptions,
    /// Cap on branch candidates per enumeration.
    pub max_candidates: usize,
    pub deadline: Option<Instant>,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            ground: GroundOptions::default(),
            max_candidates: 200_000,
            deadline: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Bit sets and the compiled ground representation.

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> BitSet {
        BitSet { words: vec![0; n.div_ceil(64)] }
    }

    fn set(&mut self, i: u32) {
        self.words[i as usize / 64] |= 1 << (i % 64);
    }

    fn unset(&mut self, i: u32) {
        self.words[i as usize / 64] &= !(1 << (i % 64));
    }

    fn get(&self, i: u32) -> bool {
        self.words[i as usize / 64] & (1 << (i % 64)) != 0
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter_map(move |b| if w & (1 << b) != 0 { Some((wi * 64 + b) as u32) } else { None })
        })
    }
}

#[derive(Debug, Clone)]
struct CRule {
    head: Vec<u32>,
    pos: Vec<u32>,
    neg: Vec<u32>,
}

struct Compiled {
    atoms: Vec<GroundAtom>,
    index: BTreeMap<GroundAtom, u32>,
}

impl Compiled {
    fn build<'a, I: Iterator<Item = &'a GroundRule>>(rules: I) -> Compiled {
        let mut set: BTreeSet<GroundAtom> = BTreeSet::new();
        for r in rules {
            set.extend(r.atoms().cloned());
        }
        let atoms: Vec<GroundAtom> = set.into_iter().collect();
        let index = atoms.iter().enumerate().map(|(i, a)| (a.clone(), i as u32)).collect();
        Compiled { atoms, index }
    }

    fn compile(&self, r: &GroundRule) -> CRule {
        let l = |a: &GroundAtom| self.index[a];
        CRule {
            head: r.head.iter().map(l).collect(),
            pos: r.pos.iter().map(l).collect(),
            neg: r.neg.iter().map(l).collect(),
        }
    }

    fn to_model(&self, bits: &BitSet) -> Model {
        bits.ones().map(|i| self.atoms[i as usize].clone()).collect()
    }

    fn to_bits(&self, model: &Model) -> BitSet {
        let mut b = BitSet::new(self.atoms.len());
        for a in model {
            if let Some(&i) = self.index.get(a) {
                b.set(i);
            }
        }
        b
    }
}

struct Enumerator<'a> {
    rules: &'a [CRule],
    natoms: usize,
    restrict: Option<&'a BitSet>,
    max_candidates: usize,
    deadline: Option<Instant>,
    out: BTreeSet<BitSet>,
}

impl Enumerator<'_> {
    /// Saturates single-head rules; `None` marks a dead branch (a forced or
    /// required atom falls outside the restriction set).
    fn saturate(&self, state: &mut BitSet) -> Option<()> {
        loop {
            let mut changed = false;
            for r in self.rules {
                if r.head.len() != 1 {
                    continue;
                }
                let h = r.head[0];
                if state.get(h) {
                    continue;
                }
                if r.pos.iter().all(|&i| state.get(i)) && r.neg.iter().all(|&i| !state.get(i)) {
                    if let Some(allowed) = self.restrict {
                        if !allowed.get(h) {
                            return None;
                        }
                    }
                    state.set(h);
                    changed = true;
                }
            }
            if !changed {
                return Some(());
            }
        }
    }

    fn branch(&mut self, mut state: BitSet) -> Result<(), SolveError> {
        if let Some(d) = self.deadline {
            if Instant::now() > d {
                return Err(SolveError::Timeout);
            }
        }
        if self.saturate(&mut state).is_none() {
            return Ok(());
        }
        let unsat = self.rules.iter().find(|r| {
            r.head.len() > 1
                && r.pos.iter().all(|&i| state.get(i))
                && r.neg.iter().all(|&i| !state.get(i))
                && !r.head.iter().any(|&i| state.get(i))
        });
        match unsat {
            None => {
                self.out.insert(state);
                if self.out.len() > self.max_candidates {
                    return Err(SolveError::ModelLimit { limit: self.max_candidates });
                }
                Ok(())
            }
            Some(r) => {
                let head = r.head.clone();
                for h in head {
                    if let Some(allowed) = self.restrict {
                        if !allowed.get(h) {
                            continue;
                        }
                    }
                    let mut next = state.clone();
                    next.set(h);
                    self.branch(next)?;
                }
                Ok(())
            }
        }
    }
}

/// Enumerates all branch-closures from `start`, then keeps the
/// subset-minimal ones. All candidates contain `start`, so this is
/// minimality relative to the seed.
fn enumerate_minimal(
    rules: &[CRule],
    natoms: usize,
    start: BitSet,
    restrict: Option<&BitSet>,
    opts: &SolveOptions,
) -> Result<Vec<BitSet>, SolveError> {
    let mut e = Enumerator {
        rules,
        natoms,
        restrict,
        max_candidates: opts.max_candidates,
        deadline: opts.deadline,
        out: BTreeSet::new(),
    };
    e.branch(start)?;
    let _ = e.natoms;
    Ok(minimal_filter(e.out.into_iter().collect()))
}

fn minimal_filter(mut cands: Vec<BitSet>) -> Vec<BitSet> {
    cands.sort_by_key(|c| c.count());
    let mut kept: Vec<BitSet> = Vec::new();
    'outer: for c in cands {
        for k in &kept {
            if k.is_subset(&c) && *k != c {
                continue 'outer;
            }
        }
        kept.push(c);
    }
    kept
}

fn check_positive_rules(gp: &GroundProgram) -> Result<(), SolveError> {
    if gp.rules.iter().any(|r| !r.neg.is_empty()) {
        return Err(SolveError::NotPositive);
    }
    Ok(())
}

fn model_satisfies_constraints(model: &Model, constraints: &[GroundRule]) -> bool {
    constraints.iter().all(|c| c.satisfied(model))
}

/// Subset-minimal models of the rule part of a positive ground program.
///
/// Constraints are not consulted here; [`stable_models_of_ground`] layers
/// the constraint filter on top of this enumeration.
pub fn minimal_models(gp: &GroundProgram) -> Result<ModelSet, SolveError> {
    minimal_models_with(gp, &SolveOptions::default())
}

pub fn minimal_models_with(gp: &GroundProgram, opts: &SolveOptions) -> Result<ModelSet, SolveError> {
    check_positive_rules(gp)?;
    let compiled = Compiled::build(gp.rules.iter());
    let rules: Vec<CRule> = gp.rules.iter().map(|r| compiled.compile(r)).collect();
    let start = BitSet::new(compiled.atoms.len());
    let models = enumerate_minimal(&rules, compiled.atoms.len(), start, None, opts)?;
    Ok(ModelSet::exhaustive(models.iter().map(|b| compiled.to_model(b)).collect()))
}

/// Stable models of a ground program with positive rules: the minimal models
/// of the rules that satisfy every constraint.
pub fn stable_models_of_ground(
    gp: &GroundProgram,
    opts: &SolveOptions,
) -> Result<ModelSet, SolveError> {
    let mm = minimal_models_with(gp, opts)?;
    Ok(ModelSet::exhaustive(
        mm.models
            .into_iter()
            .filter(|m| model_satisfies_constraints(m, &gp.constraints))
            .collect(),
    ))
}

fn head_stratum(
    rule: &GroundRule,
    stratum_of: &BTreeMap<String, usize>,
) -> usize {
    rule.head
        .iter()
        .map(|a| stratum_of.get(&a.pred).copied().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// Stable models of a program over a database.
///
/// Rules without negation take the direct route (minimal models, then the
/// constraint filter). Rules with negation are evaluated stratum by stratum
/// when the program stratifies; otherwise every truth assignment to the
/// negated ground atoms is tried against its reduct.
pub fn stable_models(
    program: &Program,
    db: &Database,
    opts: &SolveOptions,
) -> Result<ModelSet, SolveError> {
    let mut gopts = opts.ground.clone();
    gopts.deadline = gopts.deadline.or(opts.deadline);
    let gp = ground_program(program, db, &gopts)?;
    stable_models_of(program, &gp, opts)
}

/// [`stable_models`] over an already-ground program; `program` must be the
/// source it was ground from (it supplies the stratification).
pub fn stable_models_of(
    program: &Program,
    gp: &GroundProgram,
    opts: &SolveOptions,
) -> Result<ModelSet, SolveError> {
    let rules_use_negation = gp.rules.iter().any(|r| !r.neg.is_empty());
    let models = if !rules_use_negation {
        let compiled = Compiled::build(gp.rules.iter());
        let rules: Vec<CRule> = gp.rules.iter().map(|r| compiled.compile(r)).collect();
        let start = BitSet::new(compiled.atoms.len());
        enumerate_minimal(&rules, compiled.atoms.len(), start, None, opts)?
            .iter()
            .map(|b| compiled.to_model(b))
            .collect()
    } else if let Ok(strata) = stratification(program) {
        stratified_models(gp, &strata, opts)?
    } else {
        reduct_guess_models(gp, opts)?
    };

    Ok(ModelSet::exhaustive(
        models
            .into_iter()
            .filter(|m| model_satisfies_constraints(m, &gp.constraints))
            .collect(),
    ))
}

/// Stratum-wise evaluation. Each stratum's rules only negate predicates of
/// strictly lower strata (or base predicates), so within a stratum those
/// atoms are frozen and the positive enumerator applies; disjunctive strata
/// fan out into several partial models that all flow into the next stratum.
fn stratified_models(
    gp: &GroundProgram,
    strata: &[Vec<String>],
    opts: &SolveOptions,
) -> Result<BTreeSet<Model>, SolveError> {
    let mut stratum_of: BTreeMap<String, usize> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        for p in s {
            stratum_of.insert(p.clone(), i + 1);
        }
    }

    let compiled = Compiled::build(gp.rules.iter());
    let mut by_stratum: Vec<Vec<CRule>> = vec![Vec::new(); strata.len() + 1];
    for r in &gp.rules {
        by_stratum[head_stratum(r, &stratum_of)].push(compiled.compile(r));
    }

    let mut states: BTreeSet<BitSet> = BTreeSet::new();
    states.insert(BitSet::new(compiled.atoms.len()));
    for rules in &by_stratum {
        let mut next: BTreeSet<BitSet> = BTreeSet::new();
        for m in &states {
            for model in enumerate_minimal(rules, compiled.atoms.len(), m.clone(), None, opts)? {
                next.insert(model);
            }
        }
        states = next;
    }
    Ok(states.iter().map(|b| compiled.to_model(b)).collect())
}

const MAX_NEGATED_ATOMS: usize = 20;

/// Fallback for unstratifiable rules: a model's reduct depends only on which
/// negated ground atoms it contains, so try every subset. Each guess
/// enumerates with the rejected negated atoms excluded outright; that is
/// exact, because any submodel of a guess-consistent model is itself
/// guess-consistent, so minimality within the exclusion equals global
/// minimality.
fn reduct_guess_models(
    gp: &GroundProgram,
    opts: &SolveOptions,
) -> Result<BTreeSet<Model>, SolveError> {
    let neg_atoms: Vec<GroundAtom> = gp
        .rules
        .iter()
        .flat_map(|r| r.neg.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if neg_atoms.len() > MAX_NEGATED_ATOMS {
        return Err(SolveError::NegationLimit { atoms: neg_atoms.len() });
    }

    let compiled = Compiled::build(gp.rules.iter());
    let natoms = compiled.atoms.len();
    let all: Vec<CRule> = gp.rules.iter().map(|r| compiled.compile(r)).collect();
    let neg_idx: Vec<u32> = neg_atoms.iter().map(|a| compiled.index[a]).collect();

    let mut models: BTreeSet<Model> = BTreeSet::new();
    for mask in 0u64..(1u64 << neg_idx.len()) {
        let in_tau = |j: usize| mask & (1 << j) != 0;
        let tau: Vec<u32> = (0..neg_idx.len()).filter(|&j| in_tau(j)).map(|j| neg_idx[j]).collect();
        let rules: Vec<CRule> = all
            .iter()
            .filter(|r| !r.neg.iter().any(|i| tau.contains(i)))
            .map(|r| CRule { head: r.head.clone(), pos: r.pos.clone(), neg: Vec::new() })
            .collect();
        let mut allowed = BitSet::new(natoms);
        for i in 0..natoms as u32 {
            allowed.set(i);
        }
        for (j, &i) in neg_idx.iter().enumerate() {
            if !in_tau(j) {
                allowed.unset(i);
            }
        }
        let cands = enumerate_minimal(&rules, natoms, BitSet::new(natoms), Some(&allowed), opts)?;
        for b in cands {
            if neg_idx.iter().enumerate().all(|(j, &i)| b.get(i) == in_tau(j)) {
                models.insert(compiled.to_model(&b));
            }
        }
    }
    Ok(models)
}

/// The unique stable model of a stratified program with single-head rules.
/// Constraints are not consulted. Errors on disjunctive rules or negative
/// recursion.
pub fn perfect_model(
    program: &Program,
    db: &Database,
    opts: &SolveOptions,
) -> Result<Model, SolveError> {
    if program.rules().iter().any(|r| r.head.len() > 1) {
        return Err(SolveError::NotNormal);
    }
    let strata = stratification(program).map_err(|_| SolveError::NotNormal)?;
    let mut gopts = opts.ground.clone();
    gopts.deadline = gopts.deadline.or(opts.deadline);
    let gp = ground_program(program, db, &gopts)?;
    let models = stratified_models(&gp, &strata, opts)?;
    debug_assert_eq!(models.len(), 1, "normal stratified programs have one model");
    Ok(models.into_iter().next().unwrap_or_default())
}

/// Checks whether `model` is a stable model of the program over `db`,
/// straight from the definition: `model` must classically satisfy every
/// ground rule and constraint, and must be a minimal model of the reduct.
/// Grounding is seeded with the candidate's atoms so that instances
/// refuting a non-model are visible. Independent of [`stable_models`]'s
/// stratified and reduct-guessing paths.
pub fn is_stable(
    program: &Program,
    db: &Database,
    model: &Model,
    opts: &SolveOptions,
) -> Result<bool, SolveError> {
    let mut gopts = opts.ground.clone();
    gopts.seeds.extend(model.iter().cloned());
    gopts.deadline = gopts.deadline.or(opts.deadline);
    let gp = ground_program(program, db, &gopts)?;

    if !gp.rules.iter().all(|r| r.satisfied(model)) {
        return Ok(false);
    }
    if !model_satisfies_constraints(model, &gp.constraints) {
        return Ok(false);
    }

    let red = reduct(&gp, model);
    let mut compiled_rules = red.rules.clone();
    // Atoms of the model may not occur in any instance; keep them indexable.
    compiled_rules.push(GroundRule {
        head: model.iter().cloned().collect(),
        pos: model.iter().cloned().collect(),
        neg: Vec::new(),
    });
    let compiled = Compiled::build(compiled_rules.iter());
    let rules: Vec<CRule> = red.rules.iter().map(|r| compiled.compile(r)).collect();
    let target = compiled.to_bits(model);
    let cands = enumerate_minimal(
        &rules,
        compiled.atoms.len(),
        BitSet::new(compiled.atoms.len()),
        Some(&target),
        opts,
    )?;
    // Every candidate is a model of the reduct contained in `model`; the
    // search construction guarantees that if any model N of the reduct is a
    // proper subset of `model`, some candidate within N is found.
    Ok(!cands.iter().any(|c| c.is_subset(&target) && *c != target))
}

/// Answer substitutions for `goal` over an exhaustive model set.
///
/// Brave answers hold in at least one model; cautious answers hold in all.
/// Cautious reasoning over an empty model set yields every instantiation of
/// the goal's variables over `universe` (everything holds vacuously).
pub fn answers(
    goal: &Atom,
    models: &ModelSet,
    mode: AnswerMode,
    universe: &[Const],
) -> Result<AnswerSet, SolveError> {
    if !models.exhaustive {
        return Err(SolveError::NonExhaustive);
    }
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
        AnswerMode::Brave => {
            let mut out = BTreeSet::new();
            for m in &models.models {
                out.extend(tuples_in(m));
            }
            out
        }
        AnswerMode::Cautious => {
            if models.models.is_empty() {
                all_tuples(vars.len(), universe)
            } else {
                let mut iter = models.models.iter();
                let mut acc = tuples_in(iter.next().unwrap());
                for m in iter {
                    let t = tuples_in(m);
                    acc.retain(|x| t.contains(x));
                }
                acc
            }
        }
    };
    Ok(AnswerSet { mode, vars, tuples })
}

fn all_tuples(arity: usize, universe: &[Const]) -> BTreeSet<Vec<Const>> {
    let mut out: BTreeSet<Vec<Const>> = BTreeSet::new();
    out.insert(Vec::new());
    for _ in 0..arity {
        let mut next = BTreeSet::new();
        for t in &out {
            for c in universe {
                let mut t2 = t.clone();
                t2.push(c.clone());
                next.insert(t2);
            }
        }
        out = next;
    }
    out
}

/// Pairwise unions of two model sets. An empty side annihilates the product:
/// with no right-hand models there is nothing to combine with.
pub fn cross_union(a: &ModelSet, b: &ModelSet) -> ModelSet {
    let mut models = BTreeSet::new();
    for ma in &a.models {
        for mb in &b.models {
            models.insert(ma.union(mb).cloned().collect());
        }
    }
    ModelSet { models, exhaustive: a.exhaustive && b.exhaustive }
}
