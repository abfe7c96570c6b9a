//! Scenario runner: evaluates a program over a family of databases and
//! reports one CSV row per (instance, strategy, repetition).
//!
//! A scenario is a JSON file naming the program (built-in or path), the
//! query, the strategies to compare, and the instances to run. Evaluation
//! and rewriting are timed separately; a row that hits the per-row timeout
//! or a resource cap is recorded with answer `timeout` instead of aborting
//! the run. Rows may execute on several worker threads; output order is
//! always instance, then strategy, then repetition.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use magiclog::engine::{evaluate, EvalMode, EvalOptions, EvaluationReport, Strategy};
use magiclog::model::{Database, Program, Query};
use magiclog::parse::{parse_database, parse_program};

use crate::gen::{gen_chain, gen_two_components, ComponentSpec};
use crate::{builtins, CliResult, ExitKind, Failure};

/// A benchmark description, deserialized from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Label copied into every row.
    pub scenario: String,
    /// Built-in program name or a path to a program file.
    pub program: String,
    /// The goal atom, e.g. `p(1)`.
    pub query: String,
    /// Strategies to compare: `naive`, `magic-partial`, `magic-total`.
    pub strategies: Vec<String>,
    /// `brave`, `cautious`, or `models`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Repetitions per (instance, strategy) pair.
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Per-row wall-clock budget in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    /// Worker threads running rows concurrently.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// The databases to evaluate over.
    pub instances: Vec<Instance>,
}

/// One database in a scenario, labeled for the `param` column.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    /// Free-form label, e.g. `k=3` or `c2=8`.
    pub param: String,
    /// Chain database with this many arcs.
    #[serde(default)]
    pub chain: Option<u32>,
    /// Two-component graph database.
    #[serde(default)]
    pub components: Option<Components>,
    /// Path to a database file.
    #[serde(default)]
    pub db: Option<String>,
}

/// Component specs for a graph instance, as accepted by `gen two-comp`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Components {
    pub c1: String,
    pub c2: String,
    #[serde(default)]
    pub symmetric: bool,
}

fn default_mode() -> String {
    "brave".to_string()
}

fn default_repetitions() -> u32 {
    1
}

fn default_timeout() -> u64 {
    60
}

fn default_workers() -> usize {
    1
}

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub scenario: String,
    pub strategy: String,
    pub param: String,
    pub rep: u32,
    pub wall_ms: f64,
    pub rewrite_ms: f64,
    pub ground_rules: usize,
    pub models: usize,
    pub answer: String,
}

/// Parses a strategy name as used in scenarios and on the command line.
pub fn parse_strategy(name: &str) -> CliResult<Strategy> {
    match name {
        "naive" => Ok(Strategy::Naive),
        "magic-partial" => Ok(Strategy::MagicPartial),
        "magic-total" => Ok(Strategy::MagicTotal),
        _ => Err(Failure::usage(format!(
            "unknown strategy `{name}` (expected naive, magic-partial, magic-total)"
        ))),
    }
}

/// Parses a reasoning mode name.
pub fn parse_mode(name: &str) -> CliResult<EvalMode> {
    match name {
        "brave" => Ok(EvalMode::Brave),
        "cautious" => Ok(EvalMode::Cautious),
        "models" => Ok(EvalMode::Models),
        _ => Err(Failure::usage(format!(
            "unknown mode `{name}` (expected brave, cautious, models)"
        ))),
    }
}

/// Resolves `--program`: a built-in name first, otherwise a file path.
pub fn load_program_text(name: &str) -> CliResult<String> {
    if let Some(text) = builtins::builtin(name) {
        return Ok(text.to_string());
    }
    std::fs::read_to_string(name)
        .map_err(|e| Failure::usage(format!("cannot read program `{name}`: {e}")))
}

/// The answer cell for a report: `true`/`false` for a ground goal,
/// semicolon-joined tuples otherwise, empty in models mode.
pub fn render_answer(report: &EvaluationReport) -> String {
    match &report.answers {
        None => String::new(),
        Some(ans) if ans.vars.is_empty() => ans.holds().to_string(),
        Some(ans) => {
            let tuples: Vec<String> = ans
                .tuples
                .iter()
                .map(|t| {
                    let parts: Vec<String> = t.iter().map(|c| c.to_string()).collect();
                    format!("({})", parts.join(","))
                })
                .collect();
            tuples.join(";")
        }
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read scenario `{}`: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("bad scenario file: {e}")))?;
    if scenario.strategies.is_empty() {
        return Err(Failure::validation("a scenario needs at least one strategy"));
    }
    if scenario.repetitions < 1 {
        return Err(Failure::validation("repetitions must be at least 1"));
    }
    if scenario.instances.is_empty() {
        return Err(Failure::validation("a scenario needs at least one instance"));
    }
    for s in &scenario.strategies {
        parse_strategy(s)?;
    }
    parse_mode(&scenario.mode)?;
    Ok(scenario)
}

fn instance_database(instance: &Instance) -> CliResult<Database> {
    let sources =
        usize::from(instance.chain.is_some()) + usize::from(instance.components.is_some())
            + usize::from(instance.db.is_some());
    if sources != 1 {
        return Err(Failure::validation(format!(
            "instance `{}` must set exactly one of chain, components, db",
            instance.param
        )));
    }
    if let Some(k) = instance.chain {
        return gen_chain(k);
    }
    if let Some(c) = &instance.components {
        let c1 = ComponentSpec::parse(&c.c1)?;
        let c2 = ComponentSpec::parse(&c.c2)?;
        return Ok(gen_two_components(&c1, &c2, c.symmetric));
    }
    let path = instance.db.as_ref().expect("one source is set");
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read database `{path}`: {e}")))?;
    Ok(parse_database(&text)?)
}

struct Task {
    index: usize,
    param: String,
    strategy: Strategy,
    rep: u32,
    db: Database,
}

fn run_task(
    task: &Task,
    scenario: &Scenario,
    program: &Program,
    query: &Query,
    mode: EvalMode,
) -> CliResult<Row> {
    let mut opts = EvalOptions::default();
    let deadline = Instant::now() + Duration::from_secs(scenario.timeout_s);
    opts.solve.deadline = Some(deadline);
    opts.solve.ground.deadline = Some(deadline);
    let started = Instant::now();
    let row = |report: Option<&EvaluationReport>, answer: String| Row {
        scenario: scenario.scenario.clone(),
        strategy: task.strategy.to_string(),
        param: task.param.clone(),
        rep: task.rep,
        wall_ms: report.map_or_else(
            || started.elapsed().as_secs_f64() * 1e3,
            |r| r.stats.wall_ms,
        ),
        rewrite_ms: report.map_or(0.0, |r| r.stats.rewrite_ms),
        ground_rules: report.map_or(0, |r| r.stats.ground_rules),
        models: report.map_or(0, |r| r.stats.model_count),
        answer,
    };
    match evaluate(query, program, &task.db, task.strategy, mode, &opts) {
        Ok(report) => Ok(row(Some(&report), render_answer(&report))),
        Err(e) => {
            let failure = Failure::from(e);
            if failure.kind == ExitKind::Resource {
                Ok(row(None, "timeout".to_string()))
            } else {
                Err(failure)
            }
        }
    }
}

/// Runs every row of a scenario and returns them in deterministic order.
pub fn run_scenario(scenario: &Scenario) -> CliResult<Vec<Row>> {
    let text = load_program_text(&scenario.program)?;
    let program = parse_program(&text)?;
    let query = magiclog::parse::parse_goal(&scenario.query)?;
    let mode = parse_mode(&scenario.mode)?;

    let mut tasks = Vec::new();
    for instance in &scenario.instances {
        let db = instance_database(instance)?;
        for strategy in &scenario.strategies {
            let strategy = parse_strategy(strategy)?;
            for rep in 1..=scenario.repetitions {
                tasks.push(Task {
                    index: tasks.len(),
                    param: instance.param.clone(),
                    strategy,
                    rep,
                    db: db.clone(),
                });
            }
        }
    }

    let workers = scenario.workers.clamp(1, tasks.len().max(1));
    let queue: Mutex<VecDeque<Task>> = Mutex::new(tasks.into());
    let results: Mutex<Vec<(usize, CliResult<Row>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(task) = queue.lock().expect("queue lock").pop_front() else {
                    return;
                };
                let outcome = run_task(&task, scenario, &program, &query, mode);
                results.lock().expect("results lock").push((task.index, outcome));
            });
        }
    });

    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// A fixed-width text table averaging repetitions per (param, strategy).
pub fn summary_table(rows: &[Row]) -> String {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: std::collections::BTreeMap<(String, String), Vec<&Row>> =
        std::collections::BTreeMap::new();
    for row in rows {
        let key = (row.param.clone(), row.strategy.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    let mut table: Vec<[String; 7]> = vec![[
        "param".to_string(),
        "strategy".to_string(),
        "reps".to_string(),
        "wall_ms".to_string(),
        "ground_rules".to_string(),
        "models".to_string(),
        "answer".to_string(),
    ]];
    for key in &order {
        let rows = &groups[key];
        let mean =
            rows.iter().map(|r| r.wall_ms).sum::<f64>() / rows.len() as f64;
        table.push([
            key.0.clone(),
            key.1.clone(),
            rows.len().to_string(),
            format!("{mean:.2}"),
            rows[0].ground_rules.to_string(),
            rows[0].models.to_string(),
            rows[0].answer.clone(),
        ]);
    }
    let mut widths = [0usize; 7];
    for row in &table {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Writes rows as CSV with the fixed column header.
pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Failure::usage(format!("cannot write report: {e}")))?;
    }
    writer.flush().map_err(|e| Failure::usage(format!("cannot write report: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(workers: usize) -> Scenario {
        Scenario {
            scenario: "p1-growth".to_string(),
            program: "p1".to_string(),
            query: "p(1)".to_string(),
            strategies: vec!["naive".to_string(), "magic-partial".to_string()],
            mode: "brave".to_string(),
            repetitions: 1,
            timeout_s: 60,
            workers,
            instances: [2, 3, 4]
                .iter()
                .map(|k| Instance {
                    param: format!("k={k}"),
                    chain: Some(*k),
                    components: None,
                    db: None,
                })
                .collect(),
        }
    }

    #[test]
    fn chain_scenario_reproduces_the_expected_counts() {
        let rows = run_scenario(&scenario(1)).unwrap();
        assert_eq!(rows.len(), 6);
        let models: Vec<(String, String, usize)> = rows
            .iter()
            .map(|r| (r.strategy.clone(), r.param.clone(), r.models))
            .collect();
        for (strategy, param, models) in &models {
            let expected = match (strategy.as_str(), param.as_str()) {
                ("naive", "k=2") => 4,
                ("naive", "k=3") => 8,
                ("naive", "k=4") => 16,
                (_, _) => 2,
            };
            assert_eq!(*models, expected, "{strategy} {param}");
        }
        assert!(rows.iter().all(|r| r.answer == "true"));
        assert!(rows.iter().all(|r| r.scenario == "p1-growth"));
    }

    #[test]
    fn workers_do_not_change_the_report() {
        let sequential = run_scenario(&scenario(1)).unwrap();
        let parallel = run_scenario(&scenario(3)).unwrap();
        let key = |rows: &[Row]| -> Vec<(String, String, u32, usize, String)> {
            rows.iter()
                .map(|r| {
                    (r.strategy.clone(), r.param.clone(), r.rep, r.models, r.answer.clone())
                })
                .collect()
        };
        assert_eq!(key(&sequential), key(&parallel));
    }

    #[test]
    fn csv_has_the_contract_columns() {
        let rows = vec![Row {
            scenario: "s".to_string(),
            strategy: "naive".to_string(),
            param: "k=2".to_string(),
            rep: 1,
            wall_ms: 1.5,
            rewrite_ms: 0.0,
            ground_rules: 4,
            models: 4,
            answer: "true".to_string(),
        }];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,strategy,param,rep,wall_ms,rewrite_ms,ground_rules,models,answer"
        );
        assert_eq!(lines.next().unwrap(), "s,naive,k=2,1,1.5,0.0,4,4,true");
    }

    #[test]
    fn instances_demand_exactly_one_source() {
        let double = Instance {
            param: "x".to_string(),
            chain: Some(2),
            db: Some("also".to_string()),
            components: None,
        };
        assert!(instance_database(&double).is_err());
        let none = Instance { param: "x".to_string(), chain: None, db: None, components: None };
        assert!(instance_database(&none).is_err());
    }

    #[test]
    fn timeouts_become_rows_not_errors() {
        let mut s = scenario(1);
        s.timeout_s = 0;
        s.instances.truncate(1);
        s.strategies = vec!["naive".to_string()];
        let rows = run_scenario(&s).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].answer, "timeout");
        assert_eq!(rows[0].models, 0);
    }
}
