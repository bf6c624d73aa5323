//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! (`harness = false`) and exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use nnml::calculus::all_instances;
use nnml::gen::{
    corpus_logics, formula_corpus, random_bi_model, random_formula, random_hypersequent, random_standard_model, rng,
    FormulaShape,
};
use nnml::labelled::{check_labelled, translate_derivation};
use nnml::models::{
    bi_from_standard, check_bi_conditions, check_relational_conditions, check_standard_conditions,
    extract_bi_countermodel, extract_relational_countermodel, model_size_bi, standard_from_bi_fine,
    standard_from_bi_rough, verify_countermodel, BiModel, Pair, Semantics, StandardModel, WorldSet, DEFAULT_ROUGH_CAP,
};
use nnml::search::{check_derivation, prove_unkleened, prove_with, Derivation, SearchConfig, SearchOutcome, SearchStats};
use nnml::{parse, parse_input, parse_logic_name, Block, Formula, Hypersequent, LogicSpec, Sequent};

/// Seed of the formula corpus shared by criteria 4, 5, 7, 8 and 10.
const CORPUS_SEED: u64 = 2024;
/// Formulas per logic in the corpus.
const CORPUS_SIZE: usize = 500;
/// Wall-clock limit for the corpus run.
const CORPUS_TIME_LIMIT: Duration = Duration::from_secs(60);
/// Sampled instances per structural rule, and invertibility instances.
const STRUCTURAL_SAMPLES: usize = 200;
/// Give up sampling a structural rule after this many draws.
const STRUCTURAL_ATTEMPTS: usize = 200_000;
/// Random models per kind, and formulas evaluated on each.
const TRANSFORM_MODELS: usize = 100;
const TRANSFORM_FORMULAS: usize = 50;
/// Search budget per proof attempt.
const BUDGET: usize = 1_000_000;

fn logic(name: &str) -> LogicSpec {
    parse_logic_name(name).expect("logic name")
}

fn config() -> SearchConfig {
    SearchConfig { budget: BUDGET }
}

/// Records audit failures (criterion 7) from every suite.
#[derive(Default)]
struct Audit {
    proved: usize,
    labelled: usize,
    failures: Vec<String>,
}

static AUDIT: Mutex<Audit> = Mutex::new(Audit { proved: 0, labelled: 0, failures: Vec::new() });

/// Checks a derivation and, for cube logics, its labelled translation.
fn audit(d: &Derivation, l: &LogicSpec) {
    let mut failure = check_derivation(d, l).err().map(|e| format!("{l}: {}: {e}", d.conclusion));
    let mut labelled = false;
    if failure.is_none() && l.is_cube() {
        labelled = true;
        match translate_derivation(d, l) {
            Ok(t) => {
                if let Err(e) = check_labelled(&t, l) {
                    failure = Some(format!("{l}: {}: labelled check: {e}", d.conclusion));
                }
            }
            Err(e) => failure = Some(format!("{l}: {}: translation: {e}", d.conclusion)),
        }
    }
    let mut a = AUDIT.lock().expect("audit lock");
    a.proved += 1;
    a.labelled += usize::from(labelled);
    a.failures.extend(failure);
}

/// Proves `h`, auditing any derivation; `None` when the budget runs out.
fn prove_audited(h: &Hypersequent, l: &LogicSpec) -> Option<(SearchOutcome, SearchStats)> {
    let r = prove_with(h, l, &config()).ok()?;
    if let SearchOutcome::Proved(d) = &r.outcome {
        audit(d, l);
    }
    Some((r.outcome, r.stats))
}

fn proves(h: &Hypersequent, l: &LogicSpec) -> Option<bool> {
    prove_audited(h, l).map(|(o, _)| o.is_proved())
}

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn from_failures(failures: &[String], summary: String) -> Verdict {
        for f in failures.iter().take(10) {
            println!("    failure: {f}");
        }
        Verdict { pass: failures.is_empty(), detail: format!("{summary}; {} failures", failures.len()) }
    }
}

// ---------------------------------------------------------------- criterion 1

fn axiom_matrix() -> Verdict {
    let cases = [
        ("[](p & q) => [](q & p)", "E"),
        ("[](p | q) => [](q | p)", "E"),
        ("[]p => []~~p", "E"),
        ("[](p -> q) => [](~q -> ~p)", "E"),
        ("box(p & q) -> box p", "M"),
        ("box true", "EN"),
        ("box p & box q -> box(p & q)", "EC"),
        ("box p -> p", "ET"),
        ("~box false", "EP"),
        ("box p -> ~box ~p", "ED"),
        ("~box(p & ~p)", "ED1+"),
        ("~(box p & box ~p)", "ED2+"),
        ("~(box p & box q & box ~(p & q))", "ED3+"),
    ];
    let mut failures = Vec::new();
    for (input, name) in cases {
        let h = parse_input(input).expect("input parses");
        if proves(&h, &logic(name)) != Some(true) {
            failures.push(format!("{input} not proved in {name}"));
        }
    }
    Verdict::from_failures(&failures, format!("{} derivable instances", cases.len()))
}

// ---------------------------------------------------------------- criterion 2

const HANSSON: &str = "~(box p & box q & box ~(p & q))";

fn separation_matrix() -> Verdict {
    let refuted = [
        ("box(p & q) -> box p", "E"),
        ("box p & box q -> box(p & q)", "E"),
        ("box p & box q -> box(p & q)", "EN"),
        ("box true", "E"),
        ("box true", "EC"),
        ("box(p -> q) -> (box p -> box q)", "EC"),
        ("box(p -> q) -> (box p -> box q)", "E"),
        ("box p -> ~box ~p", "EP"),
        ("~box false", "ED"),
        (HANSSON, "ED"),
        (HANSSON, "EP"),
    ];
    let proved = [(HANSSON, "ED3+"), (HANSSON, "ECD")];
    let mut failures = Vec::new();
    for (input, name) in refuted {
        let l = logic(name);
        let f = parse(input).expect("formula parses");
        match prove_audited(&Hypersequent::goal(f.clone()), &l) {
            Some((SearchOutcome::Refuted(r), _)) => match extract_bi_countermodel(&r.leaf, &l) {
                Ok(m) => {
                    let report = check_bi_conditions(&m, &l);
                    if !report.passed() {
                        failures.push(format!("{input} in {name}: countermodel fails conditions: {report}"));
                    } else if m.valid(&f) {
                        failures.push(format!("{input} in {name}: countermodel does not falsify the formula"));
                    }
                }
                Err(e) => failures.push(format!("{input} in {name}: extraction failed: {e}")),
            },
            Some(_) => failures.push(format!("{input} proved in {name}")),
            None => failures.push(format!("{input} in {name}: budget exceeded")),
        }
    }
    for (input, name) in proved {
        if proves(&parse_input(input).expect("input parses"), &logic(name)) != Some(true) {
            failures.push(format!("{input} not proved in {name}"));
        }
    }
    Verdict::from_failures(&failures, format!("{} refutations, {} proofs", refuted.len(), proved.len()))
}

// ---------------------------------------------------------------- criterion 3

fn ws(items: &[usize]) -> WorldSet {
    items.iter().copied().collect()
}

fn pairs(items: &[(&[usize], &[usize])]) -> BTreeSet<Pair> {
    items.iter().map(|(a, b)| Pair::new(a.iter().copied(), b.iter().copied())).collect()
}

fn leaf_of(input: &str, l: &LogicSpec) -> Result<Hypersequent, String> {
    match prove_audited(&parse_input(input).expect("input parses"), l) {
        Some((SearchOutcome::Refuted(r), _)) => Ok(r.leaf),
        _ => Err(format!("{input} not refuted in {l}")),
    }
}

fn expect(failures: &mut Vec<String>, label: &str, ok: bool) {
    if !ok {
        failures.push(label.to_string());
    }
}

fn worked_countermodels() -> Verdict {
    let mut failures = Vec::new();
    let mut run = |label: &str, body: &dyn Fn(&mut Vec<String>) -> Result<(), String>| {
        if let Err(e) = body(&mut failures) {
            failures.push(format!("{label}: {e}"));
        }
    };

    run("M in E", &|fs| {
        let l = logic("E");
        let leaf = leaf_of("box(p & q) -> box p", &l)?;
        let m = extract_bi_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "M in E: worlds", m.worlds == ws(&[1, 2]));
        expect(fs, "M in E: N(1)", m.pairs(1) == &pairs(&[(&[], &[2])]));
        expect(fs, "M in E: N(2)", m.pairs(2).is_empty());
        let s = parse("box(p & q) -> box p").expect("parses").subformulas();
        let st = standard_from_bi_fine(&m, &s, false, DEFAULT_ROUGH_CAP).map_err(|e| e.to_string())?;
        expect(fs, "M in E: fine N_st(1)", st.neighbourhoods(1) == &[ws(&[])].into_iter().collect());
        Ok(())
    });

    run("K in EC", &|fs| {
        let l = logic("EC");
        let leaf = leaf_of("box(p -> q) -> (box p -> box q)", &l)?;
        let m = extract_bi_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "K in EC: N(1)", m.pairs(1) == &pairs(&[(&[], &[2, 3]), (&[3], &[])]));
        expect(fs, "K in EC: conditions", check_bi_conditions(&m, &l).passed());
        let mut s = BTreeSet::new();
        for f in ["box(p -> q)", "box p", "box q", "box((p -> q) & q)", "box(p & q)"] {
            s.extend(parse(f).expect("parses").subformulas());
        }
        let st = standard_from_bi_fine(&m, &s, false, DEFAULT_ROUGH_CAP).map_err(|e| e.to_string())?;
        expect(
            fs,
            "K in EC: fine N_st(1)",
            st.neighbourhoods(1) == &[ws(&[1, 2, 3]), ws(&[])].into_iter().collect(),
        );
        Ok(())
    });

    run("4 in MC", &|fs| {
        let l = logic("MC");
        let leaf = leaf_of("box p -> box box p", &l)?;
        let m = extract_bi_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "4 in MC: N(1)", m.pairs(1) == &pairs(&[(&[2], &[])]));
        expect(fs, "4 in MC: N(2)", m.pairs(2).is_empty());
        let r = extract_relational_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "4 in MC: relational worlds", r.worlds == ws(&[1, 2]));
        expect(fs, "4 in MC: non-normal worlds", r.non_normal == ws(&[2]));
        expect(fs, "4 in MC: R(1)", r.successors(1) == &ws(&[2]));
        Ok(())
    });

    run("4 in MCNT", &|fs| {
        let l = logic("MCNT");
        let leaf = leaf_of("box p -> box box p", &l)?;
        let r = extract_relational_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "4 in MCNT: all normal", r.non_normal.is_empty());
        expect(fs, "4 in MCNT: R(1)", r.successors(1) == &ws(&[1, 2]));
        expect(fs, "4 in MCNT: R(2)", r.successors(2) == &ws(&[1, 2, 3]));
        expect(fs, "4 in MCNT: R(3)", r.successors(3) == &ws(&[1, 2, 3]));
        expect(fs, "4 in MCNT: conditions", check_relational_conditions(&r, &l).passed());
        Ok(())
    });

    run("~box true in ED", &|fs| {
        let l = logic("ED");
        let leaf = leaf_of("~box true", &l)?;
        let m = extract_bi_countermodel(&leaf, &l).map_err(|e| e.to_string())?;
        expect(fs, "~box true in ED: worlds", m.worlds == ws(&[1, 2]));
        expect(fs, "~box true in ED: N(1)", m.pairs(1) == &pairs(&[(&[2], &[])]));
        expect(fs, "~box true in ED: N(2)", m.pairs(2).is_empty());
        Ok(())
    });

    Verdict::from_failures(&failures, "5 worked examples".into())
}

// ------------------------------------------------- shared corpus (4, 5, 8, 10)

struct CorpusResult {
    truth: Vec<String>,
    disagreements: Vec<String>,
    bound: Vec<String>,
    polysize: Vec<String>,
    refuted: usize,
    proved: usize,
    c_free_runs: usize,
    worst_components: f64,
    worst_size: f64,
    worst_model: f64,
    elapsed: Duration,
}

struct Item {
    truth: Option<String>,
    disagreement: Option<String>,
    bound: Option<String>,
    polysize: Option<String>,
    proved: bool,
    components_ratio: f64,
    size_ratio: f64,
    model_ratio: f64,
}

fn component_bound(n: usize) -> usize {
    n + n * n + 2 * n * n
}

fn corpus_item(f: &Formula, l: &LogicSpec) -> Item {
    let n = f.size();
    let h = Hypersequent::goal(f.clone());
    let mut item = Item {
        truth: None,
        disagreement: None,
        bound: None,
        polysize: None,
        proved: false,
        components_ratio: 0.0,
        size_ratio: 0.0,
        model_ratio: 0.0,
    };
    let Some((outcome, stats)) = prove_audited(&h, l) else {
        item.truth = Some(format!("{l}: {f}: budget exceeded"));
        return item;
    };
    item.proved = outcome.is_proved();
    if prove_unkleened(&h, l) != item.proved {
        item.disagreement = Some(format!("{l}: {f}: invertible {} vs unkleened {}", item.proved, !item.proved));
    }
    let comp_bound = component_bound(n);
    if !l.has_c {
        item.components_ratio = stats.max_components as f64 / comp_bound as f64;
        item.size_ratio = stats.max_component_size as f64 / (3 * n) as f64;
        if stats.max_components > comp_bound || stats.max_component_size > 3 * n {
            item.bound = Some(format!(
                "{l}: {f} (n = {n}): {} components (bound {comp_bound}), component size {} (bound {})",
                stats.max_components,
                stats.max_component_size,
                3 * n
            ));
        }
    }
    if let SearchOutcome::Refuted(r) = &outcome {
        match extract_bi_countermodel(&r.leaf, l) {
            Ok(m) => {
                let report = check_bi_conditions(&m, l);
                if let Err(e) = verify_countermodel(&m, &report, &r.leaf) {
                    item.truth = Some(format!("{l}: {f}: {e}"));
                } else if m.valid(f) {
                    item.truth = Some(format!("{l}: {f}: root formula not falsified"));
                }
                if !l.has_c {
                    let worlds = m.worlds.len();
                    let too_many_pairs = r.leaf.components().iter().find(|c| {
                        let blocks = c.sequent.blocks().len();
                        m.pairs(c.id).len() > blocks || blocks > 3 * n
                    });
                    let size_bound = comp_bound * (1 + 3 * n);
                    item.model_ratio = model_size_bi(&m) as f64 / size_bound as f64;
                    if worlds > comp_bound || too_many_pairs.is_some() || model_size_bi(&m) > size_bound {
                        item.polysize = Some(format!(
                            "{l}: {f} (n = {n}): {worlds} worlds, model size {}",
                            model_size_bi(&m)
                        ));
                    }
                }
            }
            Err(e) => item.truth = Some(format!("{l}: {f}: extraction failed: {e}")),
        }
    }
    item
}

fn corpus_run() -> CorpusResult {
    let corpus = formula_corpus(CORPUS_SEED, CORPUS_SIZE, &FormulaShape::default());
    let start = Instant::now();
    let mut out = CorpusResult {
        truth: vec![],
        disagreements: vec![],
        bound: vec![],
        polysize: vec![],
        refuted: 0,
        proved: 0,
        c_free_runs: 0,
        worst_components: 0.0,
        worst_size: 0.0,
        worst_model: 0.0,
        elapsed: Duration::ZERO,
    };
    for l in corpus_logics() {
        let items = nnml::batch::map(&corpus, |f| corpus_item(f, &l));
        if !l.has_c {
            out.c_free_runs += items.len();
        }
        for it in items {
            if it.proved {
                out.proved += 1;
            } else {
                out.refuted += 1;
            }
            out.truth.extend(it.truth);
            out.disagreements.extend(it.disagreement);
            out.bound.extend(it.bound);
            out.polysize.extend(it.polysize);
            out.worst_components = out.worst_components.max(it.components_ratio);
            out.worst_size = out.worst_size.max(it.size_ratio);
            out.worst_model = out.worst_model.max(it.model_ratio);
        }
    }
    out.elapsed = start.elapsed();
    out
}

// ---------------------------------------------------------------- criterion 6

fn small_shape() -> FormulaShape {
    FormulaShape { atoms: vec!["p".into(), "q".into()], max_size: 6, max_depth: 2 }
}

fn pick_component(r: &mut impl Rng, h: &Hypersequent) -> usize {
    h.components().choose(r).expect("nonempty hypersequent").id
}

/// Draws a random hypersequent that the search proves.
fn proved_hypersequent(r: &mut impl Rng, l: &LogicSpec, attempts: &mut usize) -> Option<Hypersequent> {
    while *attempts < STRUCTURAL_ATTEMPTS {
        *attempts += 1;
        let h = random_hypersequent(r, &small_shape(), 2);
        if proves(&h, l) == Some(true) {
            return Some(h);
        }
    }
    None
}

fn with_component(h: &Hypersequent, id: usize, edit: impl FnOnce(&mut Sequent)) -> Hypersequent {
    let mut out = h.clone();
    edit(out.component_mut(id).expect("component exists"));
    out
}

/// Weakening: a proved hypersequent stays proved after adding a formula, a
/// block or a component.
fn weakening_instance(r: &mut impl Rng, l: &LogicSpec, attempts: &mut usize) -> Option<Result<(), String>> {
    let h = proved_hypersequent(r, l, attempts)?;
    let id = pick_component(r, &h);
    let a = random_formula(r, &small_shape());
    let weakened = match r.gen_range(0..4) {
        0 => with_component(&h, id, |s| s.add_antecedent(a)),
        1 => with_component(&h, id, |s| s.add_succedent(a)),
        2 => with_component(&h, id, |s| s.add_block(Block::singleton(a))),
        _ => {
            let mut w = h.clone();
            w.push(Sequent::new(vec![a], vec![], vec![random_formula(r, &small_shape())]));
            w
        }
    };
    Some(match proves(&weakened, l) {
        Some(true) => Ok(()),
        _ => Err(format!("{l}: weakening {h} to {weakened}")),
    })
}

/// Contraction: a proved hypersequent with a duplicated formula or block
/// stays proved once the copy is removed.
fn contraction_instance(r: &mut impl Rng, l: &LogicSpec, attempts: &mut usize) -> Option<Result<(), String>> {
    while *attempts < STRUCTURAL_ATTEMPTS {
        let base = random_hypersequent(r, &small_shape(), 2);
        let id = pick_component(r, &base);
        let s = base.component(id).expect("component").clone();
        let mut choices = Vec::new();
        choices.extend(s.antecedent().iter().map(|f| (0, f.clone(), None)));
        choices.extend(s.succedent().iter().map(|f| (1, f.clone(), None)));
        choices.extend(s.blocks().iter().map(|b| (2, Formula::Top, Some(b.clone()))));
        let Some((side, f, b)) = choices.choose(r).cloned() else {
            *attempts += 1;
            continue;
        };
        let premiss = with_component(&base, id, |s| match side {
            0 => s.add_antecedent(f.clone()),
            1 => s.add_succedent(f.clone()),
            _ => s.add_block(b.clone().expect("block")),
        });
        *attempts += 1;
        if proves(&premiss, l) != Some(true) {
            continue;
        }
        return Some(match proves(&base, l) {
            Some(true) => Ok(()),
            _ => Err(format!("{l}: contracting {premiss} to {base}")),
        });
    }
    None
}

/// External contraction: `G | S | S` proved gives `G | S` proved.
fn external_contraction_instance(r: &mut impl Rng, l: &LogicSpec, attempts: &mut usize) -> Option<Result<(), String>> {
    while *attempts < STRUCTURAL_ATTEMPTS {
        *attempts += 1;
        let base = random_hypersequent(r, &small_shape(), 2);
        let id = pick_component(r, &base);
        let mut premiss = base.clone();
        premiss.push(base.component(id).expect("component").clone());
        if proves(&premiss, l) != Some(true) {
            continue;
        }
        return Some(match proves(&base, l) {
            Some(true) => Ok(()),
            _ => Err(format!("{l}: external contraction of {premiss} to {base}")),
        });
    }
    None
}

/// Cut: `G | Γ ⇒ Δ, A` and `G | A, Γ ⇒ Δ` proved give `G | Γ ⇒ Δ` proved.
fn cut_instance(r: &mut impl Rng, l: &LogicSpec, attempts: &mut usize) -> Option<Result<(), String>> {
    while *attempts < STRUCTURAL_ATTEMPTS {
        *attempts += 1;
        let base = random_hypersequent(r, &small_shape(), 2);
        let id = pick_component(r, &base);
        let a = random_formula(r, &small_shape());
        let right = with_component(&base, id, |s| s.add_succedent(a.clone()));
        if proves(&right, l) != Some(true) {
            continue;
        }
        let left = with_component(&base, id, |s| s.add_antecedent(a.clone()));
        if proves(&left, l) != Some(true) {
            continue;
        }
        return Some(match proves(&base, l) {
            Some(true) => Ok(()),
            _ => Err(format!("{l}: cut on {a} from {right} and {left}")),
        });
    }
    None
}

type Sampler = fn(&mut nnml::gen::Rng64, &LogicSpec, &mut usize) -> Option<Result<(), String>>;

fn structural_rules() -> Verdict {
    let logics = corpus_logics();
    let samplers: [(&str, Sampler); 4] = [
        ("weakening", weakening_instance),
        ("contraction", contraction_instance),
        ("external contraction", external_contraction_instance),
        ("cut", cut_instance),
    ];
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (k, (name, sample)) in samplers.iter().enumerate() {
        let results = nnml::batch::map(&(0..STRUCTURAL_SAMPLES).collect::<Vec<_>>(), |&i| {
            let mut r = rng(0x5eed_0000 + (k * STRUCTURAL_SAMPLES + i) as u64);
            let l = logics[i % logics.len()];
            let mut attempts = 0;
            sample(&mut r, &l, &mut attempts)
        });
        let found = results.iter().filter(|x| x.is_some()).count();
        if found < STRUCTURAL_SAMPLES {
            failures.push(format!("{name}: only {found} instances sampled"));
        }
        failures.extend(results.into_iter().flatten().filter_map(Result::err));
        counts.push(format!("{found} {name}"));
    }

    // Invertibility: premisses of arbitrary rule instances at nodes of proved
    // derivations re-prove.
    let inputs = formula_corpus(77, 1500, &FormulaShape::with_size(12));
    let mut nodes: Vec<(Hypersequent, LogicSpec)> = Vec::new();
    for (i, f) in inputs.iter().enumerate() {
        let l = logics[i % logics.len()];
        if let Some((SearchOutcome::Proved(d), _)) = prove_audited(&Hypersequent::goal(f.clone()), &l) {
            nodes.extend(d.nodes().into_iter().filter(|n| !n.rule.is_axiom()).map(|n| (n.conclusion.clone(), l)));
        }
    }
    let mut r = rng(99);
    nodes.shuffle(&mut r);
    let picks: Vec<(Hypersequent, LogicSpec, u64)> =
        nodes.into_iter().take(STRUCTURAL_SAMPLES).map(|(h, l)| (h, l, r.gen())).collect();
    if picks.len() < STRUCTURAL_SAMPLES {
        failures.push(format!("invertibility: only {} instances sampled", picks.len()));
    }
    let results = nnml::batch::map(&picks, |(h, l, choice)| {
        let instances = all_instances(h, l);
        let inst = &instances[(*choice % instances.len() as u64) as usize];
        inst.premisses
            .iter()
            .find(|p| proves(p, l) != Some(true))
            .map(|p| format!("{l}: {} on {h}: premiss {p} not proved", inst.rule))
    });
    failures.extend(results.into_iter().flatten());
    counts.push(format!("{} invertibility", picks.len()));

    Verdict::from_failures(&failures, counts.join(", "))
}

// ---------------------------------------------------------------- criterion 9

fn world_sets_equal(a: &dyn Semantics, b: &dyn Semantics, f: &Formula) -> bool {
    a.truth_set(f) == b.truth_set(f)
}

/// Strengthens a bi-neighbourhood model towards the conditions of `l`; the
/// result is only used when it actually satisfies them.
fn enforce_bi(m: &BiModel, l: &LogicSpec) -> BiModel {
    let mut m = m.clone();
    for (&w, ps) in m.nbhd.iter_mut() {
        let mut kept: BTreeSet<Pair> = ps
            .iter()
            .filter(|p| !l.has_t || p.plus.contains(&w))
            .filter(|p| !(l.has_p || l.dplus.is_some()) || !p.plus.is_empty())
            .map(|p| if l.monotonic { Pair { plus: p.plus.clone(), minus: WorldSet::new() } } else { p.clone() })
            .collect();
        if l.has_c {
            loop {
                let meets: Vec<Pair> = kept
                    .iter()
                    .flat_map(|a| {
                        kept.iter().map(move |b| Pair {
                            plus: a.plus.intersection(&b.plus).copied().collect(),
                            minus: a.minus.union(&b.minus).copied().collect(),
                        })
                    })
                    .filter(|p| !kept.contains(p))
                    .collect();
                if meets.is_empty() {
                    break;
                }
                kept.extend(meets);
            }
        }
        *ps = kept;
    }
    if l.has_n {
        let all = m.worlds.clone();
        for ps in m.nbhd.values_mut() {
            ps.insert(Pair { plus: all.clone(), minus: WorldSet::new() });
        }
    }
    m
}

/// Strengthens a standard model towards the conditions of `l`.
fn enforce_standard(m: &StandardModel, l: &LogicSpec) -> StandardModel {
    let mut m = m.clone();
    let worlds = m.worlds.clone();
    for (&w, ns) in m.nbhd.iter_mut() {
        let mut kept: BTreeSet<WorldSet> = ns
            .iter()
            .filter(|a| !l.has_t || a.contains(&w))
            .filter(|a| !(l.has_p || l.dplus.is_some()) || !a.is_empty())
            .cloned()
            .collect();
        if l.has_c {
            loop {
                let meets: Vec<WorldSet> = kept
                    .iter()
                    .flat_map(|a| kept.iter().map(move |b| a.intersection(b).copied().collect::<WorldSet>()))
                    .filter(|s| !kept.contains(s))
                    .collect();
                if meets.is_empty() {
                    break;
                }
                kept.extend(meets);
            }
        }
        if l.monotonic {
            let mut up = BTreeSet::new();
            for a in &kept {
                let free: Vec<usize> = worlds.difference(a).copied().collect();
                for mask in 0u32..(1 << free.len()) {
                    let mut s = a.clone();
                    s.extend(free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| *v));
                    up.insert(s);
                }
            }
            kept = up;
        }
        if l.has_n {
            kept.insert(worlds.clone());
        }
        *ns = kept;
    }
    m
}

fn transformations() -> Verdict {
    let atoms: Vec<String> = ["p", "q", "r"].iter().map(|s| s.to_string()).collect();
    let formulas = formula_corpus(9, TRANSFORM_FORMULAS, &FormulaShape::with_size(15));
    let mut s: BTreeSet<Formula> = formulas.iter().flat_map(|f| f.subformulas()).collect();
    s.extend([Formula::Top, Formula::boxed(Formula::Top)]);
    let logics = corpus_logics();
    let mut failures = Vec::new();
    let mut transported = [0usize; 3];
    let mut r = rng(31);

    for i in 0..TRANSFORM_MODELS {
        let bi = random_bi_model(&mut r, 6, 4, &atoms);
        let rough = standard_from_bi_rough(&bi, DEFAULT_ROUGH_CAP).expect("within cap");
        let fine = standard_from_bi_fine(&bi, &s, false, DEFAULT_ROUGH_CAP).expect("closed set");
        for f in &formulas {
            if !world_sets_equal(&bi, &rough, f) {
                failures.push(format!("bi model {i}: rough transformation disagrees on {f}"));
            }
        }
        for f in &s {
            if !world_sets_equal(&bi, &fine, f) {
                failures.push(format!("bi model {i}: fine transformation disagrees on {f}"));
            }
        }
        for l in &logics {
            let m = enforce_bi(&bi, l);
            if !check_bi_conditions(&m, l).passed() {
                continue;
            }
            let rough = standard_from_bi_rough(&m, DEFAULT_ROUGH_CAP).expect("within cap");
            let report = check_standard_conditions(&rough, l);
            if !report.passed() {
                failures.push(format!("bi model {i} ({l}): rough transformation loses conditions: {report}"));
            }
            transported[0] += 1;
            // The fine transformation keeps T, P, D and RD_n^+ directly, N
            // because □⊤ ∈ S, and M through supplementation; C is excluded,
            // since no finite subformula-closed set is closed under
            // conjunctions of boxed formulas.
            let fine = standard_from_bi_fine(&m, &s, l.monotonic, DEFAULT_ROUGH_CAP).expect("closed set");
            for f in &s {
                if !world_sets_equal(&m, &fine, f) {
                    failures.push(format!("bi model {i} ({l}): fine transformation disagrees on {f}"));
                }
            }
            let without_c = LogicSpec { has_c: false, ..*l };
            let report = check_standard_conditions(&fine, &without_c);
            if !report.passed() {
                failures.push(format!("bi model {i} ({l}): fine transformation loses conditions: {report}"));
            }
            transported[1] += 1;
        }
    }

    for i in 0..TRANSFORM_MODELS {
        let st = random_standard_model(&mut r, 6, 4, &atoms);
        for (k, m) in [st.clone(), enforce_standard(&st, &logic("M"))].iter().enumerate() {
            let bi = bi_from_standard(m, m.is_supplemented());
            for f in &formulas {
                if !world_sets_equal(m, &bi, f) {
                    failures.push(format!("standard model {i}.{k}: transformation to bi disagrees on {f}"));
                }
            }
        }
        for l in &logics {
            let m = enforce_standard(&st, l);
            if !check_standard_conditions(&m, l).passed() {
                continue;
            }
            let bi = bi_from_standard(&m, m.is_supplemented());
            for f in &formulas {
                if !world_sets_equal(&m, &bi, f) {
                    failures.push(format!("standard model {i} ({l}): transformation to bi disagrees on {f}"));
                }
            }
            let report = check_bi_conditions(&bi, l);
            if !report.passed() {
                failures.push(format!("standard model {i} ({l}): transformation to bi loses conditions: {report}"));
            }
            transported[2] += 1;
        }
    }
    Verdict::from_failures(
        &failures,
        format!(
            "{TRANSFORM_MODELS} bi + {TRANSFORM_MODELS} standard models x {TRANSFORM_FORMULAS} formulas; \
             condition transport checked {} rough, {} fine, {} standard-to-bi",
            transported[0], transported[1], transported[2]
        ),
    )
}

// ---------------------------------------------------------------- main

fn report(id: usize, name: &str, v: &Verdict, all: &mut bool) {
    *all &= v.pass;
    println!("criterion {id}: {} - {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut all = true;

    let v1 = axiom_matrix();
    let v2 = separation_matrix();
    let v3 = worked_countermodels();
    let corpus = corpus_run();
    let v6 = structural_rules();
    let v9 = transformations();

    report(1, "axiom derivability matrix", &v1, &mut all);
    report(2, "separation matrix", &v2, &mut all);
    report(3, "worked countermodels", &v3, &mut all);
    let runs = corpus.proved + corpus.refuted;
    let v4 = Verdict::from_failures(
        &corpus.truth,
        format!("{runs} runs, {} refuted with verified countermodels", corpus.refuted),
    );
    report(4, "truth lemma on the corpus", &v4, &mut all);
    let v5 = Verdict::from_failures(&corpus.disagreements, format!("{runs} runs in both modes"));
    report(5, "mode agreement", &v5, &mut all);
    report(6, "structural rules and invertibility", &v6, &mut all);
    let v7 = {
        let a = AUDIT.lock().expect("audit lock");
        Verdict::from_failures(
            &a.failures,
            format!("{} derivations checked, {} labelled translations checked", a.proved, a.labelled),
        )
    };
    report(7, "derivation audit", &v7, &mut all);
    let mut bound = corpus.bound.clone();
    if corpus.elapsed > CORPUS_TIME_LIMIT {
        bound.push(format!("corpus run took {:?} (limit {CORPUS_TIME_LIMIT:?})", corpus.elapsed));
    }
    let v8 = Verdict::from_failures(
        &bound,
        format!(
            "{} C-free runs; worst components/bound {:.3}, worst size/bound {:.3}; corpus run {:.1?}",
            corpus.c_free_runs, corpus.worst_components, corpus.worst_size, corpus.elapsed
        ),
    );
    report(8, "complexity bound", &v8, &mut all);
    report(9, "transformation equivalence", &v9, &mut all);
    let v10 = Verdict::from_failures(
        &corpus.polysize,
        format!("worst model size/bound {:.3}", corpus.worst_model),
    );
    report(10, "polysize countermodels", &v10, &mut all);

    println!("acceptance: {} in {:.1?}", if all { "all criteria pass" } else { "FAILURES" }, start.elapsed());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
