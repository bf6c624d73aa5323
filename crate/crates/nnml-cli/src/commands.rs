//! The subcommands. Each returns the exit status, or a [`Failure`].

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use nnml::gen::{formula_of_size, rng, FormulaShape};
use nnml::labelled::{check_labelled, translate_derivation, translate_hypersequent, TranslateError};
use nnml::models::{
    bi_from_standard, check_bi_conditions, extract_bi_countermodel, extract_relational_countermodel,
    standard_from_bi_fine, standard_from_bi_rough, verify_countermodel, ConditionReport, Model, ModelError, Semantics,
};
use nnml::search::{
    check_derivation, prove_unkleened_with, prove_with, Refutation, SearchConfig, SearchError, SearchOutcome,
};
use nnml::{parse, parse_input, Formula, Hypersequent, LogicSpec};

use crate::{exit, Failure, Mode, ModelKind, Output, Target};

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialise"));
}

fn budget_failure(e: SearchError) -> Failure {
    Failure { status: exit::BUDGET, message: e.to_string() }
}

fn parse_hyp(input: &str) -> Result<Hypersequent, Failure> {
    parse_input(input).map_err(|e| Failure::usage(format!("cannot parse `{input}`: {e}")))
}

pub struct ProveConfig {
    pub input: String,
    pub logic: LogicSpec,
    pub mode: Mode,
    pub models: Vec<ModelKind>,
    pub output: Output,
    pub budget: usize,
    pub rough_cap: usize,
}

pub fn prove(c: &ProveConfig) -> Result<u8, Failure> {
    let h = parse_hyp(&c.input)?;
    let l = &c.logic;
    let config = SearchConfig { budget: c.budget };
    if c.mode == Mode::Unkleened {
        if !c.models.is_empty() {
            return Err(Failure::usage("the unkleened mode produces no countermodels; drop --model"));
        }
        let r = prove_unkleened_with(&h, l, &config).map_err(budget_failure)?;
        match c.output {
            Output::Text => {
                println!("{} in {l} (unkleened search)", if r.derivable { "Proved" } else { "Refuted" });
                println!(
                    "steps {}, max components {}, max component size {}, max depth {}",
                    r.stats.steps, r.stats.max_components, r.stats.max_component_size, r.stats.max_depth
                );
            }
            Output::Json => print_json(&json!({
                "input": h.to_string(),
                "logic": l.name(),
                "mode": "unkleened",
                "result": if r.derivable { "proved" } else { "refuted" },
                "stats": r.stats,
            })),
        }
        return Ok(if r.derivable { exit::OK } else { exit::REFUTED });
    }

    let mut kinds: BTreeSet<ModelKind> = c.models.iter().copied().collect();
    kinds.insert(ModelKind::Bi);
    if kinds.contains(&ModelKind::Relational) && !l.is_regular() {
        return Err(Failure::usage(format!("relational countermodels need a logic with M and C; {l} is not one")));
    }

    let report = prove_with(&h, l, &config).map_err(budget_failure)?;
    match &report.outcome {
        SearchOutcome::Proved(d) => {
            check_derivation(d, l).map_err(|e| Failure::internal(format!("derivation failed its check: {e}")))?;
            match c.output {
                Output::Text => {
                    println!("Proved in {l}");
                    print!("{}", d.render());
                }
                Output::Json => print_json(&json!({
                    "input": h.to_string(),
                    "logic": l.name(),
                    "mode": "invertible",
                    "result": "proved",
                    "derivation": d.to_json(),
                    "stats": report.stats,
                })),
            }
            Ok(exit::OK)
        }
        SearchOutcome::Refuted(r) => {
            let models = countermodels(&h, r, l, &kinds, c.rough_cap)?;
            match c.output {
                Output::Text => {
                    println!("Refuted in {l}");
                    println!("saturated leaf: {}", r.leaf);
                    for (m, conditions) in &models {
                        print!("{m}");
                        print_conditions(conditions, "  ");
                    }
                }
                Output::Json => {
                    let cms: Vec<Value> = models
                        .iter()
                        .map(|(m, conditions)| {
                            json!({"kind": m.kind(), "size": m.size(), "model": m.to_json(), "conditions": conditions})
                        })
                        .collect();
                    print_json(&json!({
                        "input": h.to_string(),
                        "logic": l.name(),
                        "mode": "invertible",
                        "result": "refuted",
                        "leaf": r.leaf.to_string(),
                        "countermodels": cms,
                        "stats": report.stats,
                    }))
                }
            }
            Ok(exit::REFUTED)
        }
    }
}

/// The subformula-closed set of the fine transformation: subformulas of the
/// interpretations of the input components.
fn fine_set(h: &Hypersequent, l: &LogicSpec) -> BTreeSet<Formula> {
    let mut s: BTreeSet<Formula> = h.components().iter().flat_map(|c| c.sequent.interpret().subformulas()).collect();
    // With □⊤ in the set, N transports from the bi model.
    if l.has_n {
        s.insert(Formula::Top);
        s.insert(Formula::boxed(Formula::Top));
    }
    s
}

/// Whether `s` is closed under `□A, □B ∈ s ⟹ □(A ∧ B) ∈ s`.
fn closed_under_box_conjunction(s: &BTreeSet<Formula>) -> bool {
    let boxed: Vec<&Formula> = s
        .iter()
        .filter_map(|f| match f {
            Formula::Box(a) => Some(&**a),
            _ => None,
        })
        .collect();
    boxed
        .iter()
        .all(|a| boxed.iter().all(|b| s.contains(&Formula::boxed(Formula::and((*a).clone(), (*b).clone())))))
}

/// Every root component is falsified at its own world.
fn falsifies_input(m: &dyn Semantics, h: &Hypersequent) -> Result<(), String> {
    for c in h.components() {
        let f = c.sequent.interpret();
        // A component dropped from the leaf as subsumed has no world of its
        // own; some world of the model must still falsify it.
        let falsified = if m.worlds().contains(&c.id) {
            !m.force(c.id, &f).map_err(|e| e.to_string())?
        } else {
            m.worlds().iter().any(|&w| m.force(w, &f).map(|t| !t).unwrap_or(false))
        };
        if !falsified {
            return Err(format!("no world falsifies component {} ({})", c.id, c.sequent));
        }
    }
    Ok(())
}

fn print_conditions(conditions: &ConditionReport, indent: &str) {
    if conditions.results.is_empty() {
        println!("{indent}conditions: none");
        return;
    }
    for line in conditions.to_string().lines() {
        println!("{indent}condition {line}");
    }
}

/// Builds and verifies the requested countermodels.
fn countermodels(
    h: &Hypersequent,
    r: &Refutation,
    l: &LogicSpec,
    kinds: &BTreeSet<ModelKind>,
    rough_cap: usize,
) -> Result<Vec<(Model, ConditionReport)>, Failure> {
    let internal = |kind: &str, e: String| Failure::internal(format!("{kind} countermodel failed verification: {e}"));
    let bi = extract_bi_countermodel(&r.leaf, l).map_err(|e| internal("bi", e.to_string()))?;
    let mut out = Vec::new();
    for kind in kinds {
        let (model, conditions, whole_leaf) = match kind {
            ModelKind::Bi => {
                let report = check_bi_conditions(&bi, l);
                (Model::Bi(bi.clone()), report, true)
            }
            ModelKind::Relational => {
                let m = extract_relational_countermodel(&r.leaf, l).map_err(|e| internal("relational", e.to_string()))?;
                let m = Model::Relational(m);
                let report = m.check_conditions(l);
                (m, report, true)
            }
            ModelKind::StandardRough => {
                let m = standard_from_bi_rough(&bi, rough_cap).map_err(|e| match e {
                    ModelError::CapExceeded { .. } => Failure::usage(format!("{e}; raise --rough-cap")),
                    other => internal("standard-rough", other.to_string()),
                })?;
                let m = Model::Standard(m);
                let report = m.check_conditions(l);
                (m, report, true)
            }
            ModelKind::StandardFine => {
                let s = fine_set(h, l);
                let m = standard_from_bi_fine(&bi, &s, l.monotonic, rough_cap).map_err(|e| match e {
                    ModelError::CapExceeded { .. } => Failure::usage(format!("{e}; raise --rough-cap")),
                    other => internal("standard-fine", other.to_string()),
                })?;
                let m = Model::Standard(m);
                // Closure under intersection is only guaranteed when the set
                // is closed under conjunctions of boxed formulas.
                let checked = if l.has_c && !closed_under_box_conjunction(&s) {
                    LogicSpec { has_c: false, ..*l }
                } else {
                    *l
                };
                let report = m.check_conditions(&checked);
                // Only the input's subformulas are preserved, so the check is
                // against the input rather than the whole leaf.
                (m, report, false)
            }
        };
        let verdict = if whole_leaf {
            verify_countermodel(model.semantics(), &conditions, &r.leaf)
        } else if conditions.passed() {
            Ok(())
        } else {
            Err(format!("frame conditions fail:\n{conditions}"))
        };
        verdict
            .and_then(|()| falsifies_input(model.semantics(), h))
            .map_err(|e| internal(kind.label(), e))?;
        out.push((model, conditions));
    }
    Ok(out)
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not valid JSON: {e}", path.display())))?;
    Model::from_json(&value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_formula(text: &str) -> Result<Formula, Failure> {
    parse(text).map_err(|e| Failure::usage(format!("cannot parse `{text}`: {e}")))
}

pub fn check_model(path: &Path, formula: &str, l: &LogicSpec, output: Output) -> Result<u8, Failure> {
    let model = load_model(path)?;
    let f = parse_formula(formula)?;
    let truth = model.semantics().truth_set(&f);
    let conditions = model.check_conditions(l);
    let worlds = model.semantics().worlds().clone();
    match output {
        Output::Text => {
            println!("{} model, {} worlds, logic {l}", model.kind(), worlds.len());
            for w in &worlds {
                println!("world {w}: {f} is {}", truth.contains(w));
            }
            println!("valid: {}", truth == worlds);
            print_conditions(&conditions, "");
        }
        Output::Json => {
            let per_world: serde_json::Map<String, Value> =
                worlds.iter().map(|w| (w.to_string(), Value::Bool(truth.contains(w)))).collect();
            print_json(&json!({
                "formula": f.to_string(),
                "logic": l.name(),
                "kind": model.kind(),
                "truth": per_world,
                "valid": truth == worlds,
                "conditions": conditions,
                "conditions_pass": conditions.passed(),
            }))
        }
    }
    Ok(exit::OK)
}

pub struct TransformConfig {
    pub path: std::path::PathBuf,
    pub to: Target,
    pub formulas: Vec<String>,
    pub supplement: bool,
    pub rough_cap: usize,
    pub output: Output,
}

pub fn transform(c: &TransformConfig) -> Result<u8, Failure> {
    let model = load_model(&c.path)?;
    let out = match (c.to, &model) {
        (Target::Bi, Model::Standard(st)) => Model::Bi(bi_from_standard(st, c.supplement)),
        (Target::StandardRough, Model::Bi(bi)) => {
            Model::Standard(standard_from_bi_rough(bi, c.rough_cap).map_err(|e| Failure::usage(e.to_string()))?)
        }
        (Target::StandardFine, Model::Bi(bi)) => {
            let mut s = BTreeSet::new();
            for f in &c.formulas {
                s.extend(parse_formula(f)?.subformulas());
            }
            Model::Standard(
                standard_from_bi_fine(bi, &s, c.supplement, c.rough_cap).map_err(|e| Failure::usage(e.to_string()))?,
            )
        }
        (to, m) => {
            return Err(Failure::usage(format!("cannot transform a {} model to {to:?}", m.kind())));
        }
    };
    match c.output {
        Output::Text => print!("{out}"),
        Output::Json => print_json(&out.to_json()),
    }
    Ok(exit::OK)
}

fn translate_failure(e: TranslateError) -> Failure {
    match e {
        TranslateError::NotCube(_) => Failure::usage(e.to_string()),
        other => Failure::internal(other.to_string()),
    }
}

pub fn translate(input: &str, l: &LogicSpec, derive: bool, budget: usize, output: Output) -> Result<u8, Failure> {
    let h = parse_hyp(input)?;
    if !derive {
        let s = translate_hypersequent(&h, l).map_err(translate_failure)?;
        match output {
            Output::Text => println!("{s}"),
            Output::Json => print_json(&json!({"input": h.to_string(), "logic": l.name(), "labelled": s.to_string()})),
        }
        return Ok(exit::OK);
    }
    if !l.is_cube() {
        return Err(translate_failure(TranslateError::NotCube(l.name())));
    }
    let report = prove_with(&h, l, &SearchConfig { budget }).map_err(budget_failure)?;
    let SearchOutcome::Proved(d) = report.outcome else {
        match output {
            Output::Text => println!("Refuted in {l}: no derivation to translate"),
            Output::Json => print_json(&json!({"input": h.to_string(), "logic": l.name(), "result": "refuted"})),
        }
        return Ok(exit::REFUTED);
    };
    let t = translate_derivation(&d, l).map_err(translate_failure)?;
    check_labelled(&t, l).map_err(|e| Failure::internal(format!("labelled derivation failed its check: {e}")))?;
    match output {
        Output::Text => {
            println!("Labelled derivation in {l}");
            print!("{}", t.render());
        }
        Output::Json => print_json(&json!({
            "input": h.to_string(),
            "logic": l.name(),
            "result": "proved",
            "derivation": t.to_json(),
        })),
    }
    Ok(exit::OK)
}

/// Parses `MIN-MAX` or a single size.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("bad size range `{text}`; expected MIN-MAX or N");
    let (lo, hi) = match text.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub logics: Vec<LogicSpec>,
    pub count: usize,
    pub seed: u64,
    pub crafted: bool,
    pub budget: usize,
    pub output: Output,
}

/// `□p1 ∧ … ∧ □pk → □q`.
fn crafted_formula(k: usize) -> Formula {
    let boxes: Vec<Formula> = (1..=k).map(|i| Formula::boxed(Formula::atom(&format!("p{i}")))).collect();
    Formula::imp(Formula::conj(&boxes), Formula::boxed(Formula::atom("q")))
}

#[derive(Default, serde::Serialize)]
struct Row {
    logic: String,
    size: usize,
    instances: usize,
    proved: usize,
    exhausted: usize,
    max_components: usize,
    max_component_size: usize,
    max_blocks: usize,
    max_nodes: usize,
    visited: usize,
    millis: f64,
    unkleened_steps: usize,
    unkleened_max_components: usize,
    unkleened_millis: f64,
}

pub fn bench(c: &BenchConfig) -> Result<u8, Failure> {
    let shape = FormulaShape::default();
    let config = SearchConfig { budget: c.budget };
    let mut rows = Vec::new();
    for &size in &c.sizes {
        let formulas: Vec<Formula> = if c.crafted {
            vec![crafted_formula(size)]
        } else {
            let mut r = rng(c.seed.wrapping_add(size as u64));
            (0..c.count).map(|_| formula_of_size(&mut r, &shape, size, shape.max_depth)).collect()
        };
        for l in &c.logics {
            let results = nnml::batch::map(&formulas, |f| {
                let h = Hypersequent::goal(f.clone());
                let t = Instant::now();
                let inv = prove_with(&h, l, &config);
                let inv_time = t.elapsed();
                let t = Instant::now();
                let unk = prove_unkleened_with(&h, l, &config);
                (inv, inv_time, unk, t.elapsed())
            });
            let mut row = Row { logic: l.name(), size, instances: formulas.len(), ..Row::default() };
            let mut total = Duration::ZERO;
            let mut total_unk = Duration::ZERO;
            for (inv, inv_time, unk, unk_time) in results {
                total += inv_time;
                total_unk += unk_time;
                let stats = match inv {
                    Ok(r) => {
                        row.proved += usize::from(r.outcome.is_proved());
                        r.stats
                    }
                    Err(SearchError::BudgetExceeded { stats, .. }) => {
                        row.exhausted += 1;
                        stats
                    }
                };
                row.max_components = row.max_components.max(stats.max_components);
                row.max_component_size = row.max_component_size.max(stats.max_component_size);
                row.max_blocks = row.max_blocks.max(stats.max_blocks);
                row.max_nodes = row.max_nodes.max(stats.max_nodes);
                row.visited += stats.visited;
                if let Ok(u) = unk {
                    row.unkleened_steps += u.stats.steps;
                    row.unkleened_max_components = row.unkleened_max_components.max(u.stats.max_components);
                }
            }
            row.millis = total.as_secs_f64() * 1e3;
            row.unkleened_millis = total_unk.as_secs_f64() * 1e3;
            rows.push(row);
        }
    }
    match c.output {
        Output::Json => print_json(&json!({"seed": c.seed, "crafted": c.crafted, "rows": rows})),
        Output::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<6} {:>4} {:>5} {:>6} {:>5} {:>6} {:>6} {:>6} {:>7} {:>9} {:>10} {:>9} {:>10}",
                "logic", "size", "inst", "proved", "exh", "comps", "csize", "blocks", "nodes", "visited", "ms", "unk-steps",
                "unk-ms"
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:<6} {:>4} {:>5} {:>6} {:>5} {:>6} {:>6} {:>6} {:>7} {:>9} {:>10.3} {:>9} {:>10.3}",
                    r.logic,
                    r.size,
                    r.instances,
                    r.proved,
                    r.exhausted,
                    r.max_components,
                    r.max_component_size,
                    r.max_blocks,
                    r.max_nodes,
                    r.visited,
                    r.millis,
                    r.unkleened_steps,
                    r.unkleened_millis
                );
            }
            print!("{out}");
        }
    }
    Ok(exit::OK)
}
