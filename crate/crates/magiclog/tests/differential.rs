//! The full evaluation pipeline against the exhaustive reference semantics
//! on randomly generated instances.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use magiclog::corpus::random_instance;
use magiclog::engine::{evaluate, EvalMode, EvalOptions, Strategy};
use magiclog::ground::universe_of;
use magiclog::model::{AnswerMode, Model, Query};
use magiclog::parse::render_program;
use magiclog::reference::{answers_exhaustive, stable_models_exhaustive};

fn models_of(report: &magiclog::engine::EvaluationReport) -> BTreeSet<Model> {
    report.models.as_ref().expect("models mode").models.clone()
}

#[test]
fn naive_evaluation_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    let opts = EvalOptions::default();
    for i in 0..150 {
        let instance = random_instance(&mut rng);
        let query = Query { goal: instance.goal.clone() };
        let oracle = stable_models_exhaustive(&instance.program, &instance.db)
            .expect("corpus instances stay within oracle bounds");
        let naive = evaluate(
            &query,
            &instance.program,
            &instance.db,
            Strategy::Naive,
            EvalMode::Models,
            &opts,
        )
        .expect("naive evaluation succeeds");
        assert_eq!(
            models_of(&naive),
            oracle,
            "instance {i} diverged:\n{}\ngoal {}",
            render_program(&instance.program),
            instance.goal
        );

        let universe = universe_of(&instance.program, &instance.db);
        for (mode, amode) in
            [(EvalMode::Brave, AnswerMode::Brave), (EvalMode::Cautious, AnswerMode::Cautious)]
        {
            let report = evaluate(
                &query,
                &instance.program,
                &instance.db,
                Strategy::Naive,
                mode,
                &opts,
            )
            .expect("answer evaluation succeeds");
            let expected = answers_exhaustive(&instance.goal, &oracle, amode, &universe);
            assert_eq!(
                report.answers.expect("answers present").tuples,
                expected.tuples,
                "instance {i} {mode} answers diverged"
            );
        }
    }
}

#[test]
fn strategies_agree_on_constraint_free_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFAC7);
    let opts = EvalOptions::default();
    let mut checked = 0;
    let mut produced = 0;
    while checked < 80 && produced < 2000 {
        produced += 1;
        let instance = random_instance(&mut rng);
        if !instance.program.constraints().is_empty() {
            continue;
        }
        checked += 1;
        let query = Query { goal: instance.goal.clone() };
        let mut answers = Vec::new();
        for strategy in [Strategy::Naive, Strategy::MagicPartial, Strategy::MagicTotal] {
            for mode in [EvalMode::Brave, EvalMode::Cautious] {
                let report =
                    evaluate(&query, &instance.program, &instance.db, strategy, mode, &opts)
                        .expect("evaluation succeeds");
                answers.push((strategy, mode, report.answers.unwrap().tuples));
            }
        }
        let (_, _, brave) = &answers[0];
        let (_, _, cautious) = &answers[1];
        for (strategy, mode, tuples) in &answers {
            let expected = if *mode == EvalMode::Brave { brave } else { cautious };
            assert_eq!(
                tuples,
                expected,
                "{strategy} {mode} diverged on:\n{}goal {}",
                render_program(&instance.program),
                instance.goal
            );
        }
    }
    assert_eq!(checked, 80, "could not find enough constraint-free instances");
}
