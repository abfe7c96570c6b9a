//! Goal-directed rewriting of disjunctive programs with constraints.
//!
//! The rewrite propagates the bound arguments of a query goal through the
//! program so that bottom-up evaluation only derives atoms relevant to the
//! goal. The pipeline: disjunctive rules and constraints are flattened into a
//! normal program ([`esv_rules`], [`esv_constraints`]), derived predicates are
//! renamed to shadow predicates ([`shadow`]), the shadowed program is adorned
//! with bound/free argument patterns starting from the goal ([`adorn`]), magic
//! seed/propagation rules and guarded copies of the adorned rules are
//! generated ([`magic`]), adorned atoms are folded back into their shadow
//! predicates ([`collecting_rules`]), and the source rules are guarded by
//! shadow atoms ([`restricted_version`]). [`disj_magic`] composes the whole
//! bundle for a query. [`eliminate_stratified_negation`] goes the other way:
//! it compiles a rule with stratified negation into positive rules plus
//! constraints.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{
    dependency_graph, is_reserved_predicate, Atom, Literal, Program, Rule, Term,
};

/// Prefix for shadow copies of derived predicates.
pub const SHADOW_PREFIX: &str = "sv__";

/// Prefix for magic predicates, applied to adorned shadow names.
pub const MAGIC_PREFIX: &str = "m__";

/// Failure of a rewriting operation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    /// The input already uses a name reserved for rewrite output.
    #[error("predicate `{pred}` uses a reserved rewrite affix")]
    ReservedPrefix { pred: String },
    /// A negated predicate depends on the head of the rule being rewritten.
    #[error("negated predicate `{pred}` depends on the rule head")]
    UnstratifiedUse { pred: String },
}

/// Shadow name of a derived predicate.
pub fn shadow_name(pred: &str) -> String {
    format!("{SHADOW_PREFIX}{pred}")
}

/// Name of the adorned version of a (shadow) predicate.
pub fn adorned_name(pred: &str, pattern: &str) -> String {
    format!("{pred}__{pattern}")
}

/// Name of the magic predicate of an adorned predicate.
pub fn magic_name(adorned: &str) -> String {
    format!("{MAGIC_PREFIX}{adorned}")
}

/// Flattens one rule: a disjunctive rule with m head atoms becomes the m
/// single-head rules `a_i <- B` plus the m(m-1) rules `a_i <- a_j, B` that
/// carry each head choice into the others; normal rules pass through.
pub fn esv_rules(rule: &Rule) -> Vec<Rule> {
    let mut out = Vec::new();
    for a in &rule.head {
        out.push(Rule::new(vec![a.clone()], rule.body.clone()));
    }
    if rule.head.len() > 1 {
        for (i, a) in rule.head.iter().enumerate() {
            for (j, b) in rule.head.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut body = vec![Literal::Pos(b.clone())];
                body.extend(rule.body.iter().cloned());
                out.push(Rule::new(vec![a.clone()], body));
            }
        }
    }
    out
}

/// Promotes each positive derived atom of a constraint to a rule head; the
/// body keeps the remaining literals in their source order. A constraint
/// with m positive derived atoms yields m rules.
pub fn esv_constraints(constraint: &Rule, derived: &BTreeSet<String>) -> Vec<Rule> {
    let mut out = Vec::new();
    for (i, lit) in constraint.body.iter().enumerate() {
        let Literal::Pos(atom) = lit else { continue };
        if !derived.contains(&atom.pred) {
            continue;
        }
        let body: Vec<Literal> = constraint
            .body
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| l.clone())
            .collect();
        out.push(Rule::new(vec![atom.clone()], body));
    }
    out
}

/// Flattens a whole program: rules through [`esv_rules`], constraints
/// through [`esv_constraints`]. The output has no constraints.
pub fn esv_program(program: &Program) -> Program {
    let mut rules: Vec<Rule> = program.rules().iter().flat_map(esv_rules).collect();
    for c in program.constraints() {
        rules.extend(esv_constraints(c, program.derived()));
    }
    let mut out = Program::new(rules, Vec::new());
    out.mark_derived(program.derived().iter().cloned());
    out
}

/// Renames every derived predicate to its shadow (`sv__` + name) in heads
/// and bodies; base predicates stay. Returns the renamed program and the
/// source-to-shadow map. Fails if the input already uses reserved names,
/// which also catches shadowing twice.
pub fn shadow(program: &Program) -> Result<(Program, BTreeMap<String, String>), RewriteError> {
    for pred in program.predicates() {
        if is_reserved_predicate(&pred) {
            return Err(RewriteError::ReservedPrefix { pred });
        }
    }
    let map: BTreeMap<String, String> = program
        .derived()
        .iter()
        .map(|d| (d.clone(), shadow_name(d)))
        .collect();
    let rename_atom = |a: &Atom| -> Atom {
        match map.get(&a.pred) {
            Some(s) => Atom { pred: s.clone(), args: a.args.clone() },
            None => a.clone(),
        }
    };
    let rename_rule = |r: &Rule| -> Rule {
        Rule::new(
            r.head.iter().map(rename_atom).collect(),
            r.body
                .iter()
                .map(|l| match l {
                    Literal::Pos(a) => Literal::Pos(rename_atom(a)),
                    Literal::Neg(a) => Literal::Neg(rename_atom(a)),
                    Literal::Cmp(c) => Literal::Cmp(c.clone()),
                })
                .collect(),
        )
    };
    let rules: Vec<Rule> = program.rules().iter().map(rename_rule).collect();
    let constraints: Vec<Rule> = program.constraints().iter().map(rename_rule).collect();
    let mut out = Program::new(rules, constraints);
    out.mark_derived(map.values().cloned());
    Ok((out, map))
}

/// Prepends to each rule body the shadow versions of all its head atoms, so
/// a head can only be derived where the shadowed evaluation marked it
/// relevant. Constraints are not touched (they have no heads).
pub fn restricted_version(program: &Program) -> Program {
    let rules: Vec<Rule> = program
        .rules()
        .iter()
        .map(|r| {
            let mut body: Vec<Literal> = r
                .head
                .iter()
                .map(|a| {
                    Literal::Pos(Atom { pred: shadow_name(&a.pred), args: a.args.clone() })
                })
                .collect();
            body.extend(r.body.iter().cloned());
            Rule::new(r.head.clone(), body)
        })
        .collect();
    Program::new(rules, Vec::new())
}

/// A derived atom with its bound/free argument pattern: one `b` or `f` per
/// argument position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdornedAtom {
    pub atom: Atom,
    pub pattern: String,
}

impl AdornedAtom {
    /// The atom under its adorned predicate name (`pred__pattern`).
    pub fn to_atom(&self) -> Atom {
        Atom {
            pred: adorned_name(&self.atom.pred, &self.pattern),
            args: self.atom.args.clone(),
        }
    }

    /// The magic atom: magic predicate over the bound arguments only.
    pub fn magic_atom(&self) -> Atom {
        let args = self
            .atom
            .args
            .iter()
            .zip(self.pattern.chars())
            .filter(|(_, c)| *c == 'b')
            .map(|(t, _)| t.clone())
            .collect();
        Atom {
            pred: magic_name(&adorned_name(&self.atom.pred, &self.pattern)),
            args,
        }
    }

    /// Variables at bound positions.
    pub fn bound_variables(&self) -> BTreeSet<String> {
        self.atom
            .args
            .iter()
            .zip(self.pattern.chars())
            .filter(|(_, c)| *c == 'b')
            .filter_map(|(t, _)| t.as_var().map(str::to_string))
            .collect()
    }
}

/// One body element of an adorned rule. Derived atoms carry a pattern
/// (negated ones keep their negation); base atoms, negated base atoms, and
/// comparisons are copied through untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdornedLiteral {
    Adorned(AdornedAtom),
    NegAdorned(AdornedAtom),
    Plain(Literal),
}

/// A single-head rule whose head and positive derived body atoms carry
/// patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdornedRule {
    pub head: AdornedAtom,
    pub body: Vec<AdornedLiteral>,
}

/// The rules reachable from a goal, adorned with binding patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdornedProgram {
    pub goal: AdornedAtom,
    pub rules: Vec<AdornedRule>,
    /// Every pattern each derived predicate occurs with.
    pub patterns: BTreeMap<String, BTreeSet<String>>,
}

fn pattern_of(atom: &Atom, bound: &BTreeSet<String>) -> String {
    atom.args
        .iter()
        .map(|t| match t {
            Term::Const(_) => 'b',
            Term::Var(v) => {
                if bound.contains(v) {
                    'b'
                } else {
                    'f'
                }
            }
        })
        .collect()
}

/// The pattern of a query goal: constant positions bound, variables free.
pub fn goal_pattern(goal: &Atom) -> String {
    pattern_of(goal, &BTreeSet::new())
}

/// Picks the next body literal to scan. Preference order: a comparison whose
/// variables are all bound (it filters the binding before it travels), then
/// a positive literal touching the bound set (sharing a bound variable, or
/// ground), then any positive literal, then whatever is left. Ties go to the
/// literal appearing first in the body.
fn next_scan(body: &[Literal], pending: &[usize], bound: &BTreeSet<String>) -> usize {
    let find = |p: &dyn Fn(&Literal) -> bool| pending.iter().position(|&j| p(&body[j]));
    let pick = find(&|l| match l {
        Literal::Cmp(c) => c.variables().iter().all(|v| bound.contains(v)),
        _ => false,
    })
    .or_else(|| {
        find(&|l| match l {
            Literal::Pos(a) => {
                let vars = a.variables();
                vars.is_empty() || vars.iter().any(|v| bound.contains(v))
            }
            _ => false,
        })
    })
    .or_else(|| find(&|l| matches!(l, Literal::Pos(_))))
    .unwrap_or(0);
    pick
}

/// Adorns the program for a goal. Work starts from the goal's pattern and
/// visits each (predicate, pattern) pair once, adorning every rule defining
/// the predicate. The bound set starts with the head variables at bound
/// positions; body literals are scanned in the order chosen by [`next_scan`],
/// every scanned positive literal then binds its variables, and each derived
/// atom is recorded with the pattern induced at its scan position (constants
/// are always bound). Negated derived atoms receive a pattern too, and queue
/// their rules, but bind nothing; negated base atoms and comparisons are
/// copied through. Adorned rule bodies keep the scan order.
pub fn adorn(goal: &Atom, program: &Program) -> AdornedProgram {
    let goal_adorned = AdornedAtom { atom: goal.clone(), pattern: goal_pattern(goal) };
    let mut patterns: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut queue: VecDeque<(String, String)> = VecDeque::new();
    patterns
        .entry(goal.pred.clone())
        .or_default()
        .insert(goal_adorned.pattern.clone());
    queue.push_back((goal.pred.clone(), goal_adorned.pattern.clone()));

    let mut rules = Vec::new();
    while let Some((pred, pattern)) = queue.pop_front() {
        for rule in program.rules() {
            if rule.head.len() != 1 || rule.head[0].pred != pred {
                continue;
            }
            let head = AdornedAtom { atom: rule.head[0].clone(), pattern: pattern.clone() };
            let mut bound = head.bound_variables();
            let mut pending: Vec<usize> = (0..rule.body.len()).collect();
            let mut body = Vec::new();
            while !pending.is_empty() {
                let j = pending.remove(next_scan(&rule.body, &pending, &bound));
                match &rule.body[j] {
                    Literal::Pos(a) if program.is_derived(&a.pred) => {
                        let p = pattern_of(a, &bound);
                        if patterns.entry(a.pred.clone()).or_default().insert(p.clone()) {
                            queue.push_back((a.pred.clone(), p.clone()));
                        }
                        body.push(AdornedLiteral::Adorned(AdornedAtom {
                            atom: a.clone(),
                            pattern: p,
                        }));
                        bound.extend(a.variables());
                    }
                    Literal::Pos(a) => {
                        body.push(AdornedLiteral::Plain(rule.body[j].clone()));
                        bound.extend(a.variables());
                    }
                    Literal::Neg(a) if program.is_derived(&a.pred) => {
                        let p = pattern_of(a, &bound);
                        if patterns.entry(a.pred.clone()).or_default().insert(p.clone()) {
                            queue.push_back((a.pred.clone(), p.clone()));
                        }
                        body.push(AdornedLiteral::NegAdorned(AdornedAtom {
                            atom: a.clone(),
                            pattern: p,
                        }));
                    }
                    _ => body.push(AdornedLiteral::Plain(rule.body[j].clone())),
                }
            }
            rules.push(AdornedRule { head, body });
        }
    }
    AdornedProgram { goal: goal_adorned, rules, patterns }
}

/// A rule with its variables renamed `V0, V1, ...` in order of first
/// occurrence (head first, then body), for order-insensitive comparison and
/// deduplication.
pub fn canonical_rule(rule: &Rule) -> Rule {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut note = |t: &Term| {
        if let Term::Var(v) = t {
            if !names.contains_key(v) {
                let fresh = format!("V{}", names.len());
                names.insert(v.clone(), fresh);
            }
        }
    };
    for a in &rule.head {
        a.args.iter().for_each(&mut note);
    }
    for l in &rule.body {
        match l {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().for_each(&mut note),
            Literal::Cmp(c) => {
                note(&c.lhs);
                note(&c.rhs);
            }
        }
    }
    let rename = |t: &Term| -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => Term::var(&names[v]),
        }
    };
    let rename_atom = |a: &Atom| -> Atom {
        Atom { pred: a.pred.clone(), args: a.args.iter().map(rename).collect() }
    };
    let head = rule.head.iter().map(rename_atom).collect();
    let body = rule
        .body
        .iter()
        .map(|l| match l {
            Literal::Pos(a) => Literal::Pos(rename_atom(a)),
            Literal::Neg(a) => Literal::Neg(rename_atom(a)),
            Literal::Cmp(c) => Literal::Cmp(crate::model::Comparison {
                lhs: rename(&c.lhs),
                op: c.op,
                rhs: rename(&c.rhs),
            }),
        })
        .collect();
    Rule::new(head, body)
}

fn push_unique(rules: &mut Vec<Rule>, seen: &mut BTreeSet<String>, rule: Rule) {
    if seen.insert(canonical_rule(&rule).to_string()) {
        rules.push(rule);
    }
}

/// Generates the magic rules and the modified rules of an adorned program.
///
/// The seed fact holds the goal's bound arguments. For each derived atom in
/// a rule body, positive or negated, one magic rule derives that atom's
/// magic atom from the magic atom of the rule head plus the body literals
/// preceding the target in scan order: positive base atoms are always
/// copied, preceding positive derived atoms are copied exactly when they
/// feed the target's bound variables (closing the need set right to left),
/// and preceding comparisons are copied when the copied atoms bind their
/// variables (they prune the propagation without widening it). Negated
/// literals never appear in magic rule bodies: they bind nothing. Duplicate
/// magic rules are dropped up to variable renaming. Each adorned rule then
/// becomes a modified rule: its own magic atom is prepended to the body.
pub fn magic(adorned: &AdornedProgram) -> (Vec<Rule>, Vec<Rule>) {
    let mut magic_rules = Vec::new();
    let mut seen = BTreeSet::new();
    push_unique(&mut magic_rules, &mut seen, Rule::fact(adorned.goal.magic_atom()));

    for rule in &adorned.rules {
        let head_magic = rule.head.magic_atom();
        for (i, item) in rule.body.iter().enumerate() {
            let target = match item {
                AdornedLiteral::Adorned(a) | AdornedLiteral::NegAdorned(a) => a,
                AdornedLiteral::Plain(_) => continue,
            };
            let mut need = target.bound_variables();
            let mut keep = vec![false; i];
            for j in (0..i).rev() {
                match &rule.body[j] {
                    AdornedLiteral::Plain(Literal::Pos(_)) => keep[j] = true,
                    AdornedLiteral::Adorned(a) => {
                        if a.atom.variables().iter().any(|v| need.contains(v)) {
                            keep[j] = true;
                            need.extend(a.atom.variables());
                        }
                    }
                    AdornedLiteral::NegAdorned(_) | AdornedLiteral::Plain(_) => {}
                }
            }
            let mut covered = head_magic.variables();
            for (j, kept) in keep.iter().enumerate() {
                if !kept {
                    continue;
                }
                match &rule.body[j] {
                    AdornedLiteral::Plain(Literal::Pos(a)) => covered.extend(a.variables()),
                    AdornedLiteral::Adorned(a) => covered.extend(a.atom.variables()),
                    AdornedLiteral::NegAdorned(_) | AdornedLiteral::Plain(_) => {}
                }
            }
            let mut body = vec![Literal::Pos(head_magic.clone())];
            for (j, kept) in keep.iter().enumerate() {
                match &rule.body[j] {
                    AdornedLiteral::Plain(Literal::Cmp(c))
                        if c.variables().is_subset(&covered) =>
                    {
                        body.push(Literal::Cmp(c.clone()))
                    }
                    AdornedLiteral::Plain(l) if *kept => body.push(l.clone()),
                    AdornedLiteral::Adorned(a) if *kept => body.push(Literal::Pos(a.to_atom())),
                    _ => {}
                }
            }
            push_unique(
                &mut magic_rules,
                &mut seen,
                Rule::new(vec![target.magic_atom()], body),
            );
        }
    }

    let mut modified = Vec::new();
    for rule in &adorned.rules {
        let mut body = vec![Literal::Pos(rule.head.magic_atom())];
        for item in &rule.body {
            match item {
                AdornedLiteral::Adorned(a) => body.push(Literal::Pos(a.to_atom())),
                AdornedLiteral::NegAdorned(a) => body.push(Literal::Neg(a.to_atom())),
                AdornedLiteral::Plain(l) => body.push(l.clone()),
            }
        }
        modified.push(Rule::new(vec![rule.head.to_atom()], body));
    }
    (magic_rules, modified)
}

/// Folds adorned predicates back into their shadow predicates: one rule per
/// distinct source head shape and adornment pattern. Shapes come from the
/// source program's rule heads with variables canonicalized, so
/// constant-specialized heads stay specialized.
pub fn collecting_rules(
    source: &Program,
    adorned: &AdornedProgram,
    shadow_map: &BTreeMap<String, String>,
) -> Vec<Rule> {
    let mut shapes: BTreeMap<String, BTreeMap<String, Atom>> = BTreeMap::new();
    for rule in source.rules() {
        for head in &rule.head {
            let canon = canonical_atom(head);
            shapes
                .entry(head.pred.clone())
                .or_default()
                .insert(canon.to_string(), canon);
        }
    }
    let mut out = Vec::new();
    for (pred, shapes) in &shapes {
        let Some(shadow) = shadow_map.get(pred) else { continue };
        let Some(patterns) = adorned.patterns.get(shadow) else { continue };
        for shape in shapes.values() {
            for pattern in patterns {
                let head = Atom { pred: shadow.clone(), args: shape.args.clone() };
                let body = Atom {
                    pred: adorned_name(shadow, pattern),
                    args: shape.args.clone(),
                };
                out.push(Rule::new(vec![head], vec![Literal::Pos(body)]));
            }
        }
    }
    out
}

fn canonical_atom(atom: &Atom) -> Atom {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => {
                let n = names.len();
                Term::var(names.entry(v.clone()).or_insert_with(|| format!("X{}", n + 1)))
            }
        })
        .collect();
    Atom { pred: atom.pred.clone(), args }
}

/// The rewritten form of a query: four disjoint rule sets whose union is
/// the program to evaluate in place of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteBundle {
    /// Source rules guarded by the shadows of their head atoms.
    pub restricted: Vec<Rule>,
    /// Source constraints, verbatim.
    pub constraints: Vec<Rule>,
    /// Magic seed, magic rules, and modified rules.
    pub magic: Vec<Rule>,
    /// Rules folding adorned atoms back into shadow predicates.
    pub collecting: Vec<Rule>,
    /// Source derived predicate name to shadow predicate name.
    pub shadow_map: BTreeMap<String, String>,
}

impl RewriteBundle {
    /// True when the rewrite degenerated to the source program.
    pub fn is_identity(&self) -> bool {
        self.magic.is_empty() && self.collecting.is_empty() && self.shadow_map.is_empty()
    }

    /// The bundle as a single program.
    pub fn program(&self) -> Program {
        let mut rules = self.restricted.clone();
        rules.extend(self.magic.iter().cloned());
        rules.extend(self.collecting.iter().cloned());
        let mut p = Program::new(rules, self.constraints.clone());
        p.mark_derived(self.shadow_map.values().cloned());
        p
    }
}

/// Composes the whole rewrite for a query goal.
///
/// Goals with no bound argument propagate nothing, and goals over base
/// predicates have no rules to specialize; both return the source program as
/// an identity bundle. Otherwise the goal's bindings are pushed through the
/// flattened shadow program and the four rule sets are assembled.
pub fn disj_magic(goal: &Atom, program: &Program) -> Result<RewriteBundle, RewriteError> {
    let fully_free =
        !goal.args.is_empty() && goal.args.iter().all(|t| matches!(t, Term::Var(_)));
    if fully_free || !program.is_derived(&goal.pred) {
        return Ok(RewriteBundle {
            restricted: program.rules().to_vec(),
            constraints: program.constraints().to_vec(),
            magic: Vec::new(),
            collecting: Vec::new(),
            shadow_map: BTreeMap::new(),
        });
    }
    let (shadowed, map) = shadow(&esv_program(program))?;
    let shadow_goal = Atom { pred: map[&goal.pred].clone(), args: goal.args.clone() };
    let adorned = adorn(&shadow_goal, &shadowed);
    let (mut magic_rules, modified) = magic(&adorned);
    magic_rules.extend(modified);
    let collecting = collecting_rules(program, &adorned, &map);
    Ok(RewriteBundle {
        restricted: restricted_version(program).rules().to_vec(),
        constraints: program.constraints().to_vec(),
        magic: magic_rules,
        collecting,
        shadow_map: map,
    })
}

/// Replaces a rule's negated literals with guessed partitions checked by
/// constraints. For `p(X) <- a(X), not b(X)` the output is the rule pair
/// `p(X) <- p_prime(X)` and `p_prime(X) v b_prime(X) <- a(X)` plus the three
/// constraints `<- p_prime(X), b_prime(X)`, `<- b_prime(X), not b(X)`, and
/// `<- p_prime(X), b(X)`. Multiple negated literals are eliminated one at a
/// time, last first. Fails when a negated predicate depends on a head
/// predicate of the rule, where the guess would be circular.
pub fn eliminate_stratified_negation(
    rule: &Rule,
    program: &Program,
) -> Result<(Vec<Rule>, Vec<Rule>), RewriteError> {
    let graph = dependency_graph(program);
    let reaches: Vec<BTreeSet<String>> =
        rule.head.iter().map(|h| graph.reachable_from(&h.pred)).collect();
    for lit in &rule.body {
        let Literal::Neg(neg) = lit else { continue };
        for (h, reach) in rule.head.iter().zip(&reaches) {
            if h.pred == neg.pred || reach.contains(&neg.pred) {
                return Err(RewriteError::UnstratifiedUse { pred: neg.pred.clone() });
            }
        }
    }
    let mut taken = program.predicates();
    taken.extend(rule.head.iter().map(|a| a.pred.clone()));
    taken.extend(rule.body.iter().filter_map(|l| l.atom().map(|a| a.pred.clone())));
    let mut rules = Vec::new();
    let mut constraints = Vec::new();
    eliminate_step(rule.clone(), &mut taken, &mut rules, &mut constraints);
    Ok((rules, constraints))
}

fn fresh_name(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = format!("{base}_prime");
    let mut n = 1;
    while taken.contains(&name) {
        n += 1;
        name = format!("{base}_prime{n}");
    }
    taken.insert(name.clone());
    name
}

fn eliminate_step(
    rule: Rule,
    taken: &mut BTreeSet<String>,
    rules: &mut Vec<Rule>,
    constraints: &mut Vec<Rule>,
) {
    let Some(pos) = rule.body.iter().rposition(|l| matches!(l, Literal::Neg(_))) else {
        rules.push(rule);
        return;
    };
    let Literal::Neg(neg) = rule.body[pos].clone() else { unreachable!() };
    let rest: Vec<Literal> = rule
        .body
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != pos)
        .map(|(_, l)| l.clone())
        .collect();

    // The guessed predicates range over the variables of the remaining
    // positive atoms, in first-occurrence order.
    let mut seen = BTreeSet::new();
    let mut w: Vec<Term> = Vec::new();
    for lit in &rest {
        if let Literal::Pos(a) = lit {
            for v in a.variables_ordered() {
                if seen.insert(v.clone()) {
                    w.push(Term::var(&v));
                }
            }
        }
    }
    let fired = Atom::new(&fresh_name(&rule.head[0].pred, taken), w.clone());
    let blocked = Atom::new(&fresh_name(&neg.pred, taken), w);

    rules.push(Rule::new(rule.head.clone(), vec![Literal::Pos(fired.clone())]));
    eliminate_step(
        Rule::new(vec![fired.clone(), blocked.clone()], rest),
        taken,
        rules,
        constraints,
    );
    constraints.push(Rule::constraint(vec![
        Literal::Pos(fired.clone()),
        Literal::Pos(blocked.clone()),
    ]));
    constraints.push(Rule::constraint(vec![
        Literal::Pos(blocked),
        Literal::Neg(neg.clone()),
    ]));
    constraints.push(Rule::constraint(vec![Literal::Pos(fired), Literal::Pos(neg)]));
}
