//! Query evaluation: three strategies behind one report shape.
//!
//! `Naive` computes the stable models of the source program directly.
//! `MagicPartial` evaluates the goal-directed rewrite bundle instead: its
//! grounding only reaches rule instances relevant to the goal, its models
//! cover every brave answer of the goal and miss no cautious one, and on
//! bound queries it is often exponentially smaller. `MagicTotal` completes
//! each partial model over the rule instances the bundle skipped, solving
//! them together with the database and every constraint, and so recovers
//! full stable models in which the goal was evaluated.
//!
//! Reported wall time covers model computation only; rewriting is timed
//! separately and answer extraction is excluded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use crate::ground::{ground_program, partition_by_truth, universe_of, GroundProgram, GroundRule};
use crate::model::{
    restrict_model, stratification, AnswerMode, AnswerSet, Atom, Database, Model, ModelSet,
    Program, Query, Subst, Term,
};
use crate::rewrite::{
    adorn, collecting_rules, esv_constraints, esv_rules, magic, restricted_version, shadow,
    RewriteBundle, RewriteError,
};
use crate::solve::{
    answers, cross_union, is_stable, stable_models_of, stable_models_of_ground, SolveError,
    SolveOptions,
};

/// Failure of query evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// How the query is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Stable models of the source program, no rewriting.
    Naive,
    /// Stable models of the rewrite bundle only.
    MagicPartial,
    /// Bundle models completed over the skipped rule instances.
    MagicTotal,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Naive => write!(f, "naive"),
            Strategy::MagicPartial => write!(f, "magic-partial"),
            Strategy::MagicTotal => write!(f, "magic-total"),
        }
    }
}

/// What the report carries: answers under a reasoning mode, or the models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Brave,
    Cautious,
    Models,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::Brave => write!(f, "brave"),
            EvalMode::Cautious => write!(f, "cautious"),
            EvalMode::Models => write!(f, "models"),
        }
    }
}

/// Evaluation knobs on top of the solver limits.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub solve: SolveOptions,
    /// Keep only total models containing an instance of the goal.
    pub total_goal_filter: bool,
    /// Verify each total model against the source program's stable-model
    /// definition and count failures (slow; skews wall times).
    pub check_stability: bool,
}

/// Measurements taken during one evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalStats {
    /// Model computation time in milliseconds (rewriting excluded).
    pub wall_ms: f64,
    /// Time spent building the rewrite bundle, in milliseconds.
    pub rewrite_ms: f64,
    /// Ground rule and constraint instances produced (facts excluded).
    pub ground_rules: usize,
    /// Models in the report before any mode-specific reduction.
    pub model_count: usize,
    /// Total models that failed the stability check (when enabled).
    pub unsound_total_models: usize,
    /// The bundle used rule negation and did not stratify, so evaluation
    /// fell back to reduct enumeration.
    pub unstratified_fallback: bool,
}

/// The outcome of one evaluation: answers or models, plus measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub strategy: Strategy,
    pub mode: EvalMode,
    /// Present in brave and cautious modes.
    pub answers: Option<AnswerSet>,
    /// Present in models mode, over the source program's predicates.
    pub models: Option<ModelSet>,
    pub stats: EvalStats,
}

/// Builds the rewrite bundle set by set: every rule and constraint is
/// flattened, the flat program is shadowed and adorned from the goal, magic
/// and collecting rules are generated, and the source rules are guarded.
/// Goals with no bound argument, or over base predicates, return the source
/// program unchanged. Produces the same bundle as
/// [`crate::rewrite::disj_magic`].
pub fn partial_bundle(goal: &Atom, program: &Program) -> Result<RewriteBundle, RewriteError> {
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
    let mut flat = Vec::new();
    for rule in program.rules() {
        flat.extend(esv_rules(rule));
    }
    for constraint in program.constraints() {
        flat.extend(esv_constraints(constraint, program.derived()));
    }
    let mut flat = Program::new(flat, Vec::new());
    flat.mark_derived(program.derived().iter().cloned());
    let (shadowed, shadow_map) = shadow(&flat)?;
    let shadow_goal = Atom { pred: shadow_map[&goal.pred].clone(), args: goal.args.clone() };
    let adorned = adorn(&shadow_goal, &shadowed);
    let (mut magic_rules, modified) = magic(&adorned);
    magic_rules.extend(modified);
    let collecting = collecting_rules(program, &adorned, &shadow_map);
    Ok(RewriteBundle {
        restricted: restricted_version(program).rules().to_vec(),
        constraints: program.constraints().to_vec(),
        magic: magic_rules,
        collecting,
        shadow_map,
    })
}

fn ground_for(
    program: &Program,
    db: &Database,
    solve: &SolveOptions,
) -> Result<GroundProgram, SolveError> {
    let mut gopts = solve.ground.clone();
    gopts.deadline = gopts.deadline.or(solve.deadline);
    ground_program(program, db, &gopts).map_err(SolveError::from)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn source_predicates(program: &Program, db: &Database) -> BTreeSet<String> {
    let mut preds = program.predicates();
    preds.extend(db.predicates());
    preds
}

fn restrict_set(models: &ModelSet, preds: &BTreeSet<String>) -> ModelSet {
    ModelSet {
        models: models.models.iter().map(|m| restrict_model(m, preds)).collect(),
        exhaustive: models.exhaustive,
    }
}

fn goal_holds(goal: &Atom, model: &Model) -> bool {
    model.iter().filter(|f| f.pred == goal.pred).any(|f| {
        let mut s = Subst::new();
        goal.match_ground(f, &mut s)
    })
}

struct BundleRun {
    models: ModelSet,
    ground_rules: usize,
    fallback: bool,
}

fn run_bundle(
    bundle: &RewriteBundle,
    db: &Database,
    opts: &EvalOptions,
) -> Result<BundleRun, EngineError> {
    let program = bundle.program();
    let gp = ground_for(&program, db, &opts.solve)?;
    let fallback = gp.rules.iter().any(|r| !r.neg.is_empty()) && stratification(&program).is_err();
    let models = stable_models_of(&program, &gp, &opts.solve)?;
    Ok(BundleRun { models, ground_rules: gp.instance_count(), fallback })
}

struct TotalRun {
    models: ModelSet,
    ground_rules: usize,
    fallback: bool,
}

/// Extends each partial model over the rule instances it left unsettled.
/// For a restriction `r` of a bundle model, the remainder program holds the
/// database facts, the rule instances false with respect to `r`, and every
/// constraint instance; each of its stable models is unioned with `r`.
/// Remainders are solved once per distinct false-rule set.
fn run_total(
    bundle: &RewriteBundle,
    goal: &Atom,
    program: &Program,
    db: &Database,
    opts: &EvalOptions,
) -> Result<TotalRun, EngineError> {
    let partial = run_bundle(bundle, db, opts)?;
    let preds = source_predicates(program, db);
    let restrictions: BTreeSet<Model> =
        partial.models.models.iter().map(|m| restrict_model(m, &preds)).collect();

    let gp = ground_for(program, db, &opts.solve)?;
    let ground_rules = partial.ground_rules + gp.instance_count();
    let facts: Vec<GroundRule> = gp.rules[..gp.fact_count].to_vec();

    let mut solved: BTreeMap<Vec<GroundRule>, ModelSet> = BTreeMap::new();
    let mut out: BTreeSet<Model> = BTreeSet::new();
    let mut exhaustive = partial.models.exhaustive;
    for restriction in &restrictions {
        let (_, false_part) = partition_by_truth(&gp, restriction);
        let mut key: Vec<GroundRule> =
            false_part.into_iter().filter(|r| !r.is_constraint()).collect();
        key.sort();
        let remainder_models = match solved.get(&key) {
            Some(ms) => ms.clone(),
            None => {
                let mut rules = facts.clone();
                rules.extend(key.iter().cloned());
                let remainder = GroundProgram {
                    rules,
                    constraints: gp.constraints.clone(),
                    fact_count: gp.fact_count,
                };
                let ms = stable_models_of_ground(&remainder, &opts.solve)?;
                solved.insert(key, ms.clone());
                ms
            }
        };
        exhaustive &= remainder_models.exhaustive;
        let seed = ModelSet::exhaustive(BTreeSet::from([restriction.clone()]));
        out.extend(cross_union(&seed, &remainder_models).models);
    }

    let mut models = ModelSet { models: out, exhaustive };
    if opts.total_goal_filter {
        models.models.retain(|m| goal_holds(goal, m));
    }
    Ok(TotalRun { models, ground_rules, fallback: partial.fallback })
}

/// Evaluates a query under a strategy and packages answers or models with
/// the measurements. Models are reported over the source program's
/// predicates; answers are read off the reported models, with cautious
/// reasoning over an empty model set ranging over the Herbrand universe.
pub fn evaluate(
    query: &Query,
    program: &Program,
    db: &Database,
    strategy: Strategy,
    mode: EvalMode,
    opts: &EvalOptions,
) -> Result<EvaluationReport, EngineError> {
    let goal = &query.goal;
    let mut stats = EvalStats::default();

    let bundle = match strategy {
        Strategy::Naive => None,
        Strategy::MagicPartial | Strategy::MagicTotal => {
            let t = Instant::now();
            let b = partial_bundle(goal, program)?;
            stats.rewrite_ms = ms_since(t);
            Some(b)
        }
    };

    let t = Instant::now();
    let models = match strategy {
        Strategy::Naive => {
            let gp = ground_for(program, db, &opts.solve)?;
            stats.ground_rules = gp.instance_count();
            stable_models_of(program, &gp, &opts.solve)?
        }
        Strategy::MagicPartial => {
            let run = run_bundle(bundle.as_ref().unwrap(), db, opts)?;
            stats.ground_rules = run.ground_rules;
            stats.unstratified_fallback = run.fallback;
            restrict_set(&run.models, &source_predicates(program, db))
        }
        Strategy::MagicTotal => {
            let run = run_total(bundle.as_ref().unwrap(), goal, program, db, opts)?;
            stats.ground_rules = run.ground_rules;
            stats.unstratified_fallback = run.fallback;
            run.models
        }
    };
    stats.wall_ms = ms_since(t);
    stats.model_count = models.len();

    if opts.check_stability && strategy == Strategy::MagicTotal {
        for m in &models.models {
            if !is_stable(program, db, m, &opts.solve)? {
                stats.unsound_total_models += 1;
            }
        }
    }

    let (answers_out, models_out) = match mode {
        EvalMode::Brave | EvalMode::Cautious => {
            let amode =
                if mode == EvalMode::Brave { AnswerMode::Brave } else { AnswerMode::Cautious };
            let universe = universe_of(program, db);
            (Some(answers(goal, &models, amode, &universe)?), None)
        }
        EvalMode::Models => (None, Some(models)),
    };

    Ok(EvaluationReport { strategy, mode, answers: answers_out, models: models_out, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_database, parse_goal, parse_program};
    use crate::rewrite::disj_magic;

    const P1: &str = "p(X) v q(X) :- a(X, Y).";
    const P2: &str = "p(X) v q(X) :- a(X, Y).\n:- p(X), a(X, Y), q(Y), X <= 1.";

    fn chain(k: usize) -> Database {
        let text: String = (1..=k).map(|i| format!("a({}, {}).", i, i + 1)).collect();
        parse_database(&text).expect("chain database parses")
    }

    fn run(
        text: &str,
        db: &Database,
        goal: &str,
        strategy: Strategy,
        mode: EvalMode,
        opts: &EvalOptions,
    ) -> EvaluationReport {
        let program = parse_program(text).expect("test program parses");
        let query = parse_goal(goal).expect("goal parses");
        evaluate(&query, &program, db, strategy, mode, opts).expect("evaluation succeeds")
    }

    fn models_of(report: &EvaluationReport) -> BTreeSet<Model> {
        report.models.as_ref().expect("models mode").models.clone()
    }

    #[test]
    fn naive_counts_and_answers_on_the_chain() {
        let db = chain(3);
        let opts = EvalOptions::default();
        let report = run(P1, &db, "p(1)", Strategy::Naive, EvalMode::Models, &opts);
        assert_eq!(report.stats.model_count, 8);
        let brave = run(P1, &db, "p(1)", Strategy::Naive, EvalMode::Brave, &opts);
        assert!(brave.answers.unwrap().holds());
        let cautious = run(P1, &db, "p(1)", Strategy::Naive, EvalMode::Cautious, &opts);
        assert!(!cautious.answers.unwrap().holds());
    }

    #[test]
    fn partial_isolates_the_goal_choice() {
        let db = chain(3);
        let opts = EvalOptions::default();
        let partial = run(P1, &db, "p(1)", Strategy::MagicPartial, EvalMode::Models, &opts);
        assert_eq!(partial.stats.model_count, 2);
        assert!(!partial.stats.unstratified_fallback);
        assert!(partial.stats.ground_rules > 0);
        let models = models_of(&partial);
        assert!(models.iter().all(|m| m.iter().filter(|a| a.pred == "a").count() == 3));
        let goal = parse_goal("p(1)").unwrap().goal;
        assert_eq!(models.iter().filter(|m| goal_holds(&goal, m)).count(), 1);
        let brave = run(P1, &db, "p(1)", Strategy::MagicPartial, EvalMode::Brave, &opts);
        assert!(brave.answers.unwrap().holds());
    }

    #[test]
    fn bundle_construction_matches_the_single_shot_rewrite() {
        let coloring = parse_program(
            "
            2col(X, Y) :- color(X, red), color(Y, blue).
            color(X, red) v color(X, blue) v color(X, yellow) :- node(X).
            :- edge(X, Y), color(X, C), color(Y, C).
            ",
        )
        .unwrap();
        let bound = parse_goal("2col(1, 2)").unwrap().goal;
        assert_eq!(partial_bundle(&bound, &coloring).unwrap(), disj_magic(&bound, &coloring).unwrap());
        let free = parse_goal("2col(X, Y)").unwrap().goal;
        let identity = partial_bundle(&free, &coloring).unwrap();
        assert_eq!(identity, disj_magic(&free, &coloring).unwrap());
        assert!(identity.is_identity());
    }

    #[test]
    fn total_recovers_the_naive_models_without_constraints() {
        let db = chain(3);
        let opts = EvalOptions::default();
        let naive = run(P1, &db, "p(1)", Strategy::Naive, EvalMode::Models, &opts);
        let total = run(P1, &db, "p(1)", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(models_of(&total), models_of(&naive));
        assert_eq!(total.stats.model_count, 8);
    }

    #[test]
    fn constrained_chain_keeps_a_constant_partial_count() {
        let opts = EvalOptions::default();
        for k in [3usize, 5] {
            let db = chain(k);
            let naive = run(P2, &db, "p(1)", Strategy::Naive, EvalMode::Models, &opts);
            assert_eq!(naive.stats.model_count, 3 << (k - 2), "naive at k={k}");
            let partial = run(P2, &db, "p(1)", Strategy::MagicPartial, EvalMode::Models, &opts);
            assert_eq!(partial.stats.model_count, 3, "partial at k={k}");
        }
    }

    #[test]
    fn total_drops_models_when_the_remainder_is_overconstrained() {
        // Component of nodes 1-3 is colorable; the clique on 4-7 is not.
        let mut db_text = String::from("node(1). node(2). node(3).\n");
        for (x, y) in [(1, 2), (2, 3), (1, 3)] {
            db_text.push_str(&format!("edge({x}, {y}). edge({y}, {x}).\n"));
        }
        for n in 4..=7 {
            db_text.push_str(&format!("node({n}).\n"));
        }
        for x in 4..=7 {
            for y in (x + 1)..=7 {
                db_text.push_str(&format!("edge({x}, {y}). edge({y}, {x}).\n"));
            }
        }
        let db = parse_database(&db_text).unwrap();
        let coloring = "
            2col(X, Y) :- color(X, red), color(Y, blue).
            color(X, red) v color(X, blue) v color(X, yellow) :- node(X).
            :- edge(X, Y), color(X, C), color(Y, C).
        ";
        let opts = EvalOptions::default();
        let naive = run(coloring, &db, "2col(1, 2)", Strategy::Naive, EvalMode::Models, &opts);
        assert_eq!(naive.stats.model_count, 0);
        let partial =
            run(coloring, &db, "2col(1, 2)", Strategy::MagicPartial, EvalMode::Brave, &opts);
        assert!(partial.stats.model_count > 0);
        assert!(partial.answers.unwrap().holds());
        let total = run(coloring, &db, "2col(1, 2)", Strategy::MagicTotal, EvalMode::Brave, &opts);
        assert_eq!(total.stats.model_count, 0);
        assert!(!total.answers.unwrap().holds());
    }

    #[test]
    fn total_goal_filter_keeps_only_goal_models() {
        let db = chain(2);
        let plain = run(
            P1,
            &db,
            "p(1)",
            Strategy::MagicTotal,
            EvalMode::Models,
            &EvalOptions::default(),
        );
        assert_eq!(plain.stats.model_count, 4);
        let opts = EvalOptions { total_goal_filter: true, ..EvalOptions::default() };
        let filtered = run(P1, &db, "p(1)", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(filtered.stats.model_count, 2);
        let goal = parse_goal("p(1)").unwrap().goal;
        assert!(models_of(&filtered).iter().all(|m| goal_holds(&goal, m)));
    }

    #[test]
    fn stability_counter_stays_zero_on_sound_completions() {
        let db = chain(3);
        let opts = EvalOptions { check_stability: true, ..EvalOptions::default() };
        let total = run(P1, &db, "p(1)", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(total.stats.unsound_total_models, 0);
        let constrained = run(P2, &db, "p(1)", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(constrained.stats.unsound_total_models, 0);
    }

    #[test]
    fn unstratifiable_bundle_falls_back_and_still_answers() {
        let text = "
            p(X) :- r(X).
            p(X) :- b(X).
            r(X) :- p(X).
            :- p(X), not r(X).
        ";
        let db = parse_database("b(1).").unwrap();
        let opts = EvalOptions::default();
        let partial = run(text, &db, "p(1)", Strategy::MagicPartial, EvalMode::Brave, &opts);
        assert!(partial.stats.unstratified_fallback);
        assert!(partial.answers.unwrap().holds());
        let naive = run(text, &db, "p(1)", Strategy::Naive, EvalMode::Brave, &opts);
        assert!(naive.answers.unwrap().holds());
    }

    #[test]
    fn zero_arity_goal_agrees_across_strategies() {
        let db = Database::default();
        let opts = EvalOptions::default();
        let naive = run("a v b.", &db, "a", Strategy::Naive, EvalMode::Models, &opts);
        let partial = run("a v b.", &db, "a", Strategy::MagicPartial, EvalMode::Models, &opts);
        let total = run("a v b.", &db, "a", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(naive.stats.model_count, 2);
        assert_eq!(models_of(&partial), models_of(&naive));
        assert_eq!(models_of(&total), models_of(&naive));
    }

    const PARTITION: &str = "
        v1(X) v nv1(X) :- node(X).
        v2(X) v nv2(X) :- node(X).
        v3(X) v nv3(X) :- node(X).
        connected1(Y) :- v1(X), edge(X, Y).
        connected2(Y) :- v2(X), edge(X, Y).
        connected3(Y) :- v3(X), edge(X, Y).
        :- v1(X), v2(X).
        :- v1(X), v3(X).
        :- v2(X), v3(X).
        :- nv1(X), not connected1(X).
        :- nv2(X), not connected2(X).
        :- nv3(X), not connected3(X).
    ";

    #[test]
    fn negation_in_constraints_survives_the_rewrite() {
        // Triangle: the three dominating sets must be the three singletons,
        // in any arrangement. The goal node pins v1, leaving two models.
        let db = parse_database(
            "node(1). node(2). node(3).
             edge(1, 2). edge(2, 1). edge(2, 3). edge(3, 2). edge(3, 1). edge(1, 3).",
        )
        .unwrap();
        let opts = EvalOptions::default();
        let goal = parse_goal("v1(1)").unwrap().goal;
        let naive = run(PARTITION, &db, "v1(1)", Strategy::Naive, EvalMode::Models, &opts);
        let partial =
            run(PARTITION, &db, "v1(1)", Strategy::MagicPartial, EvalMode::Models, &opts);
        let total = run(PARTITION, &db, "v1(1)", Strategy::MagicTotal, EvalMode::Models, &opts);
        assert_eq!(naive.stats.model_count, 6);
        assert!(partial.stats.unstratified_fallback);
        let holds = |report: &EvaluationReport| {
            models_of(report).iter().filter(|m| goal_holds(&goal, m)).count()
        };
        assert_eq!(holds(&naive), 2);
        assert!(holds(&partial) > 0);
        assert_eq!(holds(&total), 2);
        let source: BTreeSet<Model> = models_of(&total);
        assert!(source.is_subset(&models_of(&naive)));
    }
}
