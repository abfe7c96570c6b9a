//! Core data model: terms, atoms, rules, programs, databases, models.
//!
//! A program is a set of disjunctive rules `a1 | ... | an :- body` whose
//! bodies are negation-free, plus a set of constraints `:- body` whose bodies
//! may negate atoms. Predicates that appear in some rule head are *derived*;
//! everything else is *base* (supplied by the database). Comparison literals
//! (`X <= 1`) are evaluable: they belong to neither class and never bind
//! variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A constant: integers order numerically, symbols lexicographically.
///
/// For evaluable comparisons, two integers compare numerically and any other
/// pair compares by rendered text (so `1 < a` and `abc < b`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Const {
    Int(i64),
    Sym(String),
}

impl Const {
    pub fn sym(s: &str) -> Const {
        Const::Sym(s.to_string())
    }

    /// Ordering used by comparison literals (not the derived `Ord`).
    pub fn compare(&self, other: &Const) -> std::cmp::Ordering {
        match (self, other) {
            (Const::Int(a), Const::Int(b)) => a.cmp(b),
            _ => self.to_string().cmp(&other.to_string()),
        }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(n) => write!(f, "{n}"),
            Const::Sym(s) => write!(f, "{s}"),
        }
    }
}

/// A term: a variable (uppercase-initial) or a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Const),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn int(n: i64) -> Term {
        Term::Const(Const::Int(n))
    }

    pub fn sym(s: &str) -> Term {
        Term::Const(Const::sym(s))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    fn resolve(&self, subst: &Subst) -> Option<Const> {
        match self {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => subst.get(v).cloned(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A substitution from variable names to constants.
pub type Subst = BTreeMap<String, Const>;

/// A (possibly non-ground) atom `pred(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: pred.to_string(), args }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.args
            .iter()
            .filter_map(|t| t.as_var().map(str::to_string))
            .collect()
    }

    /// Variables in first-occurrence order (used for answer tuples).
    pub fn variables_ordered(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in &self.args {
            if let Term::Var(v) = t {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    /// Applies `subst`; `None` if some variable is unbound.
    pub fn ground_with(&self, subst: &Subst) -> Option<GroundAtom> {
        let mut args = Vec::with_capacity(self.args.len());
        for t in &self.args {
            args.push(t.resolve(subst)?);
        }
        Some(GroundAtom { pred: self.pred.clone(), args })
    }

    /// Extends `subst` so that this atom matches `fact`, or returns false
    /// leaving `subst` in an undefined extended state (callers clone first
    /// or rely on the boolean).
    pub fn match_ground(&self, fact: &GroundAtom, subst: &mut Subst) -> bool {
        if self.pred != fact.pred || self.args.len() != fact.args.len() {
            return false;
        }
        for (t, c) in self.args.iter().zip(&fact.args) {
            match t {
                Term::Const(tc) => {
                    if tc != c {
                        return false;
                    }
                }
                Term::Var(v) => match subst.get(v) {
                    Some(bound) => {
                        if bound != c {
                            return false;
                        }
                    }
                    None => {
                        subst.insert(v.clone(), c.clone());
                    }
                },
            }
        }
        true
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A fully ground atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<Const>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: Vec<Const>) -> GroundAtom {
        GroundAtom { pred: pred.to_string(), args }
    }

    pub fn to_atom(&self) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|c| Term::Const(c.clone())).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Comparison operators for evaluable literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn eval(self, a: &Const, b: &Const) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a.compare(b) == Less,
            CmpOp::Le => a.compare(b) != Greater,
            CmpOp::Gt => a.compare(b) == Greater,
            CmpOp::Ge => a.compare(b) != Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        };
        write!(f, "{s}")
    }
}

/// An evaluable comparison literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub lhs: Term,
    pub op: CmpOp,
    pub rhs: Term,
}

impl Comparison {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut vs = BTreeSet::new();
        if let Term::Var(v) = &self.lhs {
            vs.insert(v.clone());
        }
        if let Term::Var(v) = &self.rhs {
            vs.insert(v.clone());
        }
        vs
    }

    /// Evaluates under `subst`; `None` if a side is still unbound.
    pub fn eval(&self, subst: &Subst) -> Option<bool> {
        let a = self.lhs.resolve(subst)?;
        let b = self.rhs.resolve(subst)?;
        Some(self.op.eval(&a, &b))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

/// A body literal: positive atom, negated atom, or comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Comparison),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp(_) => None,
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.variables(),
            Literal::Cmp(c) => c.variables(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(c) => write!(f, "{c}"),
        }
    }
}

/// A rule `h1 | ... | hm :- body.`; an empty head makes it a constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Vec<Atom>,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Vec<Atom>, body: Vec<Literal>) -> Rule {
        Rule { head, body }
    }

    pub fn fact(atom: Atom) -> Rule {
        Rule { head: vec![atom], body: Vec::new() }
    }

    pub fn constraint(body: Vec<Literal>) -> Rule {
        Rule { head: Vec::new(), body }
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_empty()
    }

    pub fn is_fact(&self) -> bool {
        self.head.len() == 1 && self.body.is_empty() && self.head[0].is_ground()
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut vs = BTreeSet::new();
        for a in &self.head {
            vs.extend(a.variables());
        }
        for l in &self.body {
            vs.extend(l.variables());
        }
        vs
    }

    /// Variables occurring in positive body atoms (the safe positions).
    pub fn positive_body_variables(&self) -> BTreeSet<String> {
        let mut vs = BTreeSet::new();
        for l in &self.body {
            if let Literal::Pos(a) = l {
                vs.extend(a.variables());
            }
        }
        vs
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        let mut cs = BTreeSet::new();
        let add_term = |t: &Term, cs: &mut BTreeSet<Const>| {
            if let Term::Const(c) = t {
                cs.insert(c.clone());
            }
        };
        for a in &self.head {
            for t in &a.args {
                add_term(t, &mut cs);
            }
        }
        for l in &self.body {
            match l {
                Literal::Pos(a) | Literal::Neg(a) => {
                    for t in &a.args {
                        add_term(t, &mut cs);
                    }
                }
                Literal::Cmp(c) => {
                    add_term(&c.lhs, &mut cs);
                    add_term(&c.rhs, &mut cs);
                }
            }
        }
        cs
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.body.is_empty() || self.head.is_empty() {
            if !self.head.is_empty() {
                write!(f, " ")?;
            }
            write!(f, ":- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        write!(f, ".")
    }
}

/// A program: disjunctive rules plus constraints, with the derived-predicate
/// set tracked explicitly (rewrites introduce derived predicates that may
/// have no rules of their own in a given fragment).
#[derive(Debug, Clone)]
pub struct Program {
    rules: Vec<Rule>,
    constraints: Vec<Rule>,
    derived: BTreeSet<String>,
}

impl Program {
    /// Builds a program; `derived` is seeded from the rule heads.
    ///
    /// Panics if a rule has an empty head or a constraint a non-empty one;
    /// use [`Program::from_statements`] to split a mixed list.
    pub fn new(rules: Vec<Rule>, constraints: Vec<Rule>) -> Program {
        assert!(rules.iter().all(|r| !r.head.is_empty()), "rule with empty head");
        assert!(constraints.iter().all(|c| c.head.is_empty()), "constraint with a head");
        let derived = rules
            .iter()
            .flat_map(|r| r.head.iter().map(|a| a.pred.clone()))
            .collect();
        Program { rules, constraints, derived }
    }

    pub fn from_statements(stmts: Vec<Rule>) -> Program {
        let (constraints, rules) = stmts.into_iter().partition(|r| r.is_constraint());
        Program::new(rules, constraints)
    }

    pub fn empty() -> Program {
        Program { rules: Vec::new(), constraints: Vec::new(), derived: BTreeSet::new() }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn constraints(&self) -> &[Rule] {
        &self.constraints
    }

    pub fn derived(&self) -> &BTreeSet<String> {
        &self.derived
    }

    pub fn is_derived(&self, pred: &str) -> bool {
        self.derived.contains(pred)
    }

    /// Marks additional predicates as derived (used when assembling rewrite
    /// output whose parts reference predicates defined elsewhere).
    pub fn mark_derived<I: IntoIterator<Item = String>>(&mut self, preds: I) {
        self.derived.extend(preds);
    }

    pub fn predicates(&self) -> BTreeSet<String> {
        let mut ps = BTreeSet::new();
        for r in self.rules.iter().chain(&self.constraints) {
            for a in &r.head {
                ps.insert(a.pred.clone());
            }
            for l in &r.body {
                if let Some(a) = l.atom() {
                    ps.insert(a.pred.clone());
                }
            }
        }
        ps
    }

    pub fn base_predicates(&self) -> BTreeSet<String> {
        self.predicates()
            .into_iter()
            .filter(|p| !self.is_derived(p))
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        let mut cs = BTreeSet::new();
        for r in self.rules.iter().chain(&self.constraints) {
            cs.extend(r.constants());
        }
        cs
    }

    pub fn statements(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().chain(&self.constraints)
    }
}

/// Structural equality: same rules, constraints and derived set, ignoring
/// statement order.
impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        let sorted = |v: &[Rule]| {
            let mut v = v.to_vec();
            v.sort();
            v
        };
        sorted(&self.rules) == sorted(&other.rules)
            && sorted(&self.constraints) == sorted(&other.constraints)
            && self.derived == other.derived
    }
}

impl Eq for Program {}

/// A database: a set of ground base facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    facts: BTreeSet<GroundAtom>,
}

impl Database {
    pub fn new(facts: BTreeSet<GroundAtom>) -> Database {
        Database { facts }
    }

    pub fn empty() -> Database {
        Database::default()
    }

    pub fn facts(&self) -> &BTreeSet<GroundAtom> {
        &self.facts
    }

    pub fn insert(&mut self, fact: GroundAtom) {
        self.facts.insert(fact);
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.facts.iter().flat_map(|f| f.args.iter().cloned()).collect()
    }

    pub fn predicates(&self) -> BTreeSet<String> {
        self.facts.iter().map(|f| f.pred.clone()).collect()
    }
}

impl FromIterator<GroundAtom> for Database {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Database {
        Database { facts: iter.into_iter().collect() }
    }
}

/// A query: a single goal atom, possibly with variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub goal: Atom,
}

/// An interpretation: the set of ground atoms taken to be true.
pub type Model = BTreeSet<GroundAtom>;

/// A deterministic collection of models. `exhaustive` records whether the
/// producer enumerated every model (answers require that).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSet {
    pub models: BTreeSet<Model>,
    pub exhaustive: bool,
}

impl ModelSet {
    pub fn exhaustive(models: BTreeSet<Model>) -> ModelSet {
        ModelSet { models, exhaustive: true }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Whether answers hold in some model (brave) or all models (cautious).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerMode {
    Brave,
    Cautious,
}

impl fmt::Display for AnswerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerMode::Brave => write!(f, "brave"),
            AnswerMode::Cautious => write!(f, "cautious"),
        }
    }
}

/// Answer substitutions for a goal: one tuple of constants per binding of
/// `vars` (in first-occurrence order). A ground goal has no variables; it is
/// true iff `tuples` contains the empty tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub mode: AnswerMode,
    pub vars: Vec<String>,
    pub tuples: BTreeSet<Vec<Const>>,
}

impl AnswerSet {
    /// For a ground goal: whether the query holds.
    pub fn holds(&self) -> bool {
        !self.tuples.is_empty()
    }
}

/// A single validation problem, locating the offending statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

const RESERVED_PREFIXES: [&str; 2] = ["sv__", "m__"];

/// True if `pred` uses an affix reserved for rewriting output.
pub fn is_reserved_predicate(pred: &str) -> bool {
    if RESERVED_PREFIXES.iter().any(|p| pred.starts_with(p)) {
        return true;
    }
    // Reject trailing binding-pattern suffixes like `__bf`.
    if let Some(idx) = pred.rfind("__") {
        let suffix = &pred[idx + 2..];
        if !suffix.is_empty() && suffix.chars().all(|c| c == 'b' || c == 'f') {
            return true;
        }
    }
    false
}

/// Checks safety, rule-body positivity, the constraint polarity restriction
/// for derived predicates, arity consistency, and reserved names.
pub fn validate_program(program: &Program) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();

    let mut check_pred = |atom: &Atom, loc: &str, violations: &mut Vec<Violation>| {
        if is_reserved_predicate(&atom.pred) {
            violations.push(Violation {
                location: loc.to_string(),
                message: format!("predicate `{}` uses a reserved rewriting affix", atom.pred),
            });
        }
        if atom.pred == "not" {
            violations.push(Violation {
                location: loc.to_string(),
                message: "`not` cannot be used as a predicate name".to_string(),
            });
        }
        match arities.get(&atom.pred) {
            Some(&n) if n != atom.args.len() => violations.push(Violation {
                location: loc.to_string(),
                message: format!(
                    "predicate `{}` used with arity {} here but {} elsewhere",
                    atom.pred,
                    atom.args.len(),
                    n
                ),
            }),
            Some(_) => {}
            None => {
                arities.insert(atom.pred.clone(), atom.args.len());
            }
        }
    };

    let mut check_statement = |rule: &Rule, loc: String, violations: &mut Vec<Violation>| {
        for a in &rule.head {
            check_pred(a, &loc, violations);
        }
        for l in &rule.body {
            if let Some(a) = l.atom() {
                check_pred(a, &loc, violations);
            }
        }
        if !rule.is_constraint() {
            for l in &rule.body {
                if matches!(l, Literal::Neg(_)) {
                    violations.push(Violation {
                        location: loc.clone(),
                        message: format!("negation is only allowed in constraints: `{rule}`"),
                    });
                }
            }
        }
        // Safety: every variable must occur in a positive body atom.
        let safe = rule.positive_body_variables();
        for v in rule.variables() {
            if !safe.contains(&v) {
                violations.push(Violation {
                    location: loc.clone(),
                    message: format!("variable {v} does not occur in a positive body atom in `{rule}`"),
                });
            }
        }
    };

    for (i, r) in program.rules().iter().enumerate() {
        check_statement(r, format!("rule {}", i + 1), &mut violations);
    }
    for (i, c) in program.constraints().iter().enumerate() {
        check_statement(c, format!("constraint {}", i + 1), &mut violations);
    }

    // Polarity restriction: a derived predicate may occur in constraints only
    // positively or only negatively. Base predicates are exempt: they have no
    // defining rules, so their polarity cannot make evaluation circular.
    let mut pos_preds = BTreeSet::new();
    let mut neg_preds = BTreeSet::new();
    for c in program.constraints() {
        for l in &c.body {
            match l {
                Literal::Pos(a) if program.is_derived(&a.pred) => {
                    pos_preds.insert(a.pred.clone());
                }
                Literal::Neg(a) if program.is_derived(&a.pred) => {
                    neg_preds.insert(a.pred.clone());
                }
                _ => {}
            }
        }
    }
    for p in pos_preds.intersection(&neg_preds) {
        violations.push(Violation {
            location: "constraints".to_string(),
            message: format!("derived predicate `{p}` occurs both positively and negatively in constraints"),
        });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Rejects database facts over derived predicates or with inconsistent arity.
pub fn validate_database(program: &Program, db: &Database) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut program_arities: BTreeMap<String, usize> = BTreeMap::new();
    for r in program.statements() {
        for a in &r.head {
            program_arities.insert(a.pred.clone(), a.args.len());
        }
        for l in &r.body {
            if let Some(a) = l.atom() {
                program_arities.insert(a.pred.clone(), a.args.len());
            }
        }
    }
    for f in db.facts() {
        if program.is_derived(&f.pred) {
            violations.push(Violation {
                location: format!("fact {f}"),
                message: format!("predicate `{}` is derived; facts must use base predicates", f.pred),
            });
        }
        if let Some(&n) = program_arities.get(&f.pred) {
            if n != f.args.len() {
                violations.push(Violation {
                    location: format!("fact {f}"),
                    message: format!(
                        "predicate `{}` has arity {} in the program but {} in the database",
                        f.pred,
                        n,
                        f.args.len()
                    ),
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Edge polarity in the predicate dependency graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Predicate dependency graph: an edge `(q, p, pol)` means `p` is defined by
/// a rule whose body mentions `q` (with the given polarity). Head atoms of a
/// disjunctive rule also depend on each other positively: a choice for one
/// is a choice about all of them, so they must be evaluated together.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<(String, String, Polarity)>,
}

impl DepGraph {
    fn successors<'a>(
        &'a self,
        from: &'a str,
    ) -> impl Iterator<Item = &'a (String, String, Polarity)> + 'a {
        self.edges.iter().filter(move |(q, _, _)| q == from)
    }

    /// All predicates reachable from `start` along dependency edges, i.e.
    /// everything whose derivation may feed into `start`'s dependents.
    pub fn reachable_from(&self, start: &str) -> BTreeSet<String> {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut stack = vec![start.to_string()];
        while let Some(p) = stack.pop() {
            for (_, to, _) in self.successors(&p) {
                if seen.insert(to.clone()) {
                    stack.push(to.clone());
                }
            }
        }
        seen
    }
}

/// Builds the dependency graph over every predicate of the program.
/// Constraints define nothing, so they contribute no edges.
pub fn dependency_graph(program: &Program) -> DepGraph {
    let mut g = DepGraph::default();
    g.nodes.extend(program.predicates());
    for r in program.rules() {
        for a in &r.head {
            for l in &r.body {
                match l {
                    Literal::Pos(b) => {
                        g.edges.insert((b.pred.clone(), a.pred.clone(), Polarity::Positive));
                    }
                    Literal::Neg(b) => {
                        g.edges.insert((b.pred.clone(), a.pred.clone(), Polarity::Negative));
                    }
                    Literal::Cmp(_) => {}
                }
            }
            for b in &r.head {
                if b.pred != a.pred {
                    g.edges.insert((b.pred.clone(), a.pred.clone(), Polarity::Positive));
                }
            }
        }
    }
    g
}

/// A negative dependency inside a recursive component.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unstratifiable: negative edge from `{from}` to `{to}` inside a recursive component")]
pub struct StratifyError {
    pub from: String,
    pub to: String,
}

/// Stratifies the derived predicates: returns strata in evaluation order.
/// Fails exactly when a negative edge lies inside a strongly connected
/// component of the dependency graph.
pub fn stratification(program: &Program) -> Result<Vec<Vec<String>>, StratifyError> {
    let g = dependency_graph(program);
    let nodes: Vec<String> = g.nodes.iter().cloned().collect();
    let index: BTreeMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut succ: Vec<Vec<(usize, Polarity)>> = vec![Vec::new(); nodes.len()];
    for (q, p, pol) in &g.edges {
        succ[index[q.as_str()]].push((index[p.as_str()], *pol));
    }

    // Tarjan's SCC algorithm, iterative to keep recursion shallow.
    let n = nodes.len();
    let mut comp = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut disc = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_disc = 0usize;
    let mut ncomp = 0usize;
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei == 0 {
                disc[v] = next_disc;
                low[v] = next_disc;
                next_disc += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ei < succ[v].len() {
                let (w, _) = succ[v][*ei];
                *ei += 1;
                if disc[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                if low[v] == disc[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }

    // Reject negative edges within a component; otherwise compute strata as
    // the longest chain of negative edges feeding each predicate.
    for (q, p, pol) in &g.edges {
        if *pol == Polarity::Negative && comp[index[q.as_str()]] == comp[index[p.as_str()]] {
            return Err(StratifyError { from: q.clone(), to: p.clone() });
        }
    }
    let mut stratum = vec![0usize; n];
    loop {
        let mut changed = false;
        for (q, p, pol) in &g.edges {
            let (qi, pi) = (index[q.as_str()], index[p.as_str()]);
            let need = match pol {
                Polarity::Positive => stratum[qi],
                Polarity::Negative => stratum[qi] + 1,
            };
            if stratum[pi] < need {
                stratum[pi] = need;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let max_stratum = stratum.iter().copied().max().unwrap_or(0);
    let mut strata: Vec<Vec<String>> = vec![Vec::new(); max_stratum + 1];
    for (i, name) in nodes.iter().enumerate() {
        if program.is_derived(name) {
            strata[stratum[i]].push(name.clone());
        }
    }
    strata.retain(|s| !s.is_empty());
    Ok(strata)
}

/// Keeps only atoms whose predicate is in `preds`.
pub fn restrict_model(model: &Model, preds: &BTreeSet<String>) -> Model {
    model.iter().filter(|a| preds.contains(&a.pred)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(pred: &str, args: &[Term]) -> Atom {
        Atom::new(pred, args.to_vec())
    }

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    #[test]
    fn rendering_is_canonical() {
        let r = Rule::new(
            vec![atom("p", &[v("X")]), atom("q", &[v("X")])],
            vec![
                Literal::Pos(atom("a", &[v("X"), Term::int(2)])),
                Literal::Neg(atom("b", &[v("X")])),
                Literal::Cmp(Comparison { lhs: v("X"), op: CmpOp::Le, rhs: Term::int(1) }),
            ],
        );
        assert_eq!(r.to_string(), "p(X) | q(X) :- a(X,2), not b(X), X <= 1.");
        let c = Rule::constraint(vec![Literal::Pos(atom("p", &[Term::int(1)]))]);
        assert_eq!(c.to_string(), ":- p(1).");
        let f = Rule::fact(atom("edge", &[Term::int(1), Term::int(2)]));
        assert_eq!(f.to_string(), "edge(1,2).");
        assert_eq!(atom("zero", &[]).to_string(), "zero");
    }

    #[test]
    fn constant_comparison_semantics() {
        assert!(CmpOp::Lt.eval(&Const::Int(2), &Const::Int(10)));
        assert!(CmpOp::Lt.eval(&Const::sym("abc"), &Const::sym("b")));
        // Mixed types compare by rendered text.
        assert!(CmpOp::Lt.eval(&Const::Int(1), &Const::sym("a")));
        assert!(!CmpOp::Eq.eval(&Const::Int(1), &Const::sym("x")));
    }

    #[test]
    fn safety_violations_are_reported() {
        let p = Program::new(
            vec![Rule::new(vec![atom("p", &[v("X")])], vec![])],
            vec![],
        );
        let errs = validate_program(&p).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("variable X")), "{errs:?}");
    }

    #[test]
    fn rule_negation_is_rejected() {
        let p = Program::new(
            vec![Rule::new(
                vec![atom("p", &[v("X")])],
                vec![
                    Literal::Pos(atom("a", &[v("X")])),
                    Literal::Neg(atom("b", &[v("X")])),
                ],
            )],
            vec![],
        );
        let errs = validate_program(&p).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("negation")), "{errs:?}");
    }

    #[test]
    fn polarity_restriction_applies_to_derived_only() {
        // q derived, used both ways in constraints: rejected.
        let bad = Program::new(
            vec![Rule::new(vec![atom("q", &[v("X")])], vec![Literal::Pos(atom("a", &[v("X")]))])],
            vec![
                Rule::constraint(vec![
                    Literal::Pos(atom("a", &[v("X")])),
                    Literal::Pos(atom("q", &[v("X")])),
                ]),
                Rule::constraint(vec![
                    Literal::Pos(atom("a", &[v("X")])),
                    Literal::Neg(atom("q", &[v("X")])),
                ]),
            ],
        );
        assert!(validate_program(&bad).is_err());

        // Base predicate b used both ways: fine.
        let ok = Program::new(
            vec![Rule::new(vec![atom("q", &[v("X")])], vec![Literal::Pos(atom("a", &[v("X")]))])],
            vec![
                Rule::constraint(vec![
                    Literal::Pos(atom("a", &[v("X")])),
                    Literal::Pos(atom("b", &[v("X")])),
                ]),
                Rule::constraint(vec![
                    Literal::Pos(atom("a", &[v("X")])),
                    Literal::Neg(atom("b", &[v("X")])),
                ]),
            ],
        );
        assert!(validate_program(&ok).is_ok());
    }

    #[test]
    fn reserved_affixes_are_rejected() {
        assert!(is_reserved_predicate("sv__p"));
        assert!(is_reserved_predicate("m__sv__p__bf"));
        assert!(is_reserved_predicate("p__bf"));
        assert!(is_reserved_predicate("p__b"));
        assert!(!is_reserved_predicate("p__x"));
        assert!(!is_reserved_predicate("p_b"));
        assert!(!is_reserved_predicate("bf"));
        let p = Program::new(
            vec![Rule::new(vec![atom("sv__p", &[v("X")])], vec![Literal::Pos(atom("a", &[v("X")]))])],
            vec![],
        );
        assert!(validate_program(&p).is_err());
    }

    #[test]
    fn arity_consistency() {
        let p = Program::new(
            vec![
                Rule::new(vec![atom("p", &[v("X")])], vec![Literal::Pos(atom("a", &[v("X")]))]),
                Rule::new(
                    vec![atom("q", &[v("X")])],
                    vec![Literal::Pos(atom("p", &[v("X"), v("X")])), Literal::Pos(atom("a", &[v("X")]))],
                ),
            ],
            vec![],
        );
        let errs = validate_program(&p).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("arity")), "{errs:?}");
    }

    #[test]
    fn dependency_graph_includes_head_to_head_edges() {
        // father(X,Y) | brother(X,Y) :- related(X,Y).
        // ancestor(X,Y) :- father(X,Y).
        // ancestor(X,Y) :- father(X,Z), ancestor(Z,Y).
        let p = Program::new(
            vec![
                Rule::new(
                    vec![atom("father", &[v("X"), v("Y")]), atom("brother", &[v("X"), v("Y")])],
                    vec![Literal::Pos(atom("related", &[v("X"), v("Y")]))],
                ),
                Rule::new(
                    vec![atom("ancestor", &[v("X"), v("Y")])],
                    vec![Literal::Pos(atom("father", &[v("X"), v("Y")]))],
                ),
                Rule::new(
                    vec![atom("ancestor", &[v("X"), v("Y")])],
                    vec![
                        Literal::Pos(atom("father", &[v("X"), v("Z")])),
                        Literal::Pos(atom("ancestor", &[v("Z"), v("Y")])),
                    ],
                ),
            ],
            vec![],
        );
        let g = dependency_graph(&p);
        let has = |a: &str, b: &str, pol: Polarity| {
            g.edges.contains(&(a.to_string(), b.to_string(), pol))
        };
        assert!(has("related", "father", Polarity::Positive));
        assert!(has("related", "brother", Polarity::Positive));
        assert!(has("father", "brother", Polarity::Positive));
        assert!(has("brother", "father", Polarity::Positive));
        assert!(has("father", "ancestor", Polarity::Positive));
        assert!(has("ancestor", "ancestor", Polarity::Positive));
        assert!(g.nodes.contains("related"));
    }

    #[test]
    fn stratification_orders_negation() {
        // q(X) :- a(X), not p(X).  p(X) :- b(X).   => p before q.
        let p = Program::new(
            vec![
                Rule::new(
                    vec![atom("q", &[v("X")])],
                    vec![Literal::Pos(atom("a", &[v("X")])), Literal::Neg(atom("p", &[v("X")]))],
                ),
                Rule::new(vec![atom("p", &[v("X")])], vec![Literal::Pos(atom("b", &[v("X")]))]),
            ],
            vec![],
        );
        let strata = stratification(&p).unwrap();
        assert_eq!(strata, vec![vec!["p".to_string()], vec!["q".to_string()]]);
    }

    #[test]
    fn negative_cycle_is_unstratifiable() {
        let p = Program::new(
            vec![
                Rule::new(
                    vec![atom("p", &[v("X")])],
                    vec![Literal::Pos(atom("a", &[v("X")])), Literal::Neg(atom("q", &[v("X")]))],
                ),
                Rule::new(
                    vec![atom("q", &[v("X")])],
                    vec![Literal::Pos(atom("a", &[v("X")])), Literal::Neg(atom("p", &[v("X")]))],
                ),
            ],
            vec![],
        );
        assert!(stratification(&p).is_err());
    }

    #[test]
    fn ground_match_and_apply() {
        let a = atom("p", &[v("X"), Term::int(2), v("X")]);
        let f = GroundAtom::new("p", vec![Const::Int(1), Const::Int(2), Const::Int(1)]);
        let mut s = Subst::new();
        assert!(a.match_ground(&f, &mut s));
        assert_eq!(s["X"], Const::Int(1));
        let g = GroundAtom::new("p", vec![Const::Int(1), Const::Int(2), Const::Int(3)]);
        let mut s2 = Subst::new();
        assert!(!a.match_ground(&g, &mut s2));
        assert_eq!(a.ground_with(&s).unwrap(), f);
    }
}
