//! Backward proof search: the invertible, countermodel-producing procedure
//! with local loop checking, the unkleened backtracking procedure, and an
//! independent derivation checker.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;

use serde::Serialize;
use thiserror::Error;

use crate::calculus::{self, Principal};
use crate::formula::Formula;
use crate::hypersequent::{Block, Hypersequent, Sequent};
use crate::logic::{LogicSpec, RuleId};

/// Default budget on visited hypersequents.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Environment variable overriding the default budget.
pub const BUDGET_ENV: &str = "NNML_BUDGET";

/// The budget from `NNML_BUDGET`, or [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Search configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of visited hypersequents.
    pub budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: budget_from_env() }
    }
}

/// Size statistics over all hypersequents visited by a search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Number of hypersequents visited.
    pub visited: usize,
    /// Largest number of components.
    pub max_components: usize,
    /// Largest component size: distinct formulas per side plus distinct
    /// block sets.
    pub max_component_size: usize,
    /// Largest number of blocks in one component.
    pub max_blocks: usize,
    /// Largest total formula-node count of a hypersequent.
    pub max_nodes: usize,
}

impl SearchStats {
    fn record(&mut self, h: &Hypersequent) {
        self.visited += 1;
        self.max_components = self.max_components.max(h.len());
        for c in h.components() {
            self.max_component_size = self.max_component_size.max(c.sequent.distinct_size());
            self.max_blocks = self.max_blocks.max(c.sequent.blocks().len());
        }
        self.max_nodes = self.max_nodes.max(h.node_count());
    }
}

/// Search failures.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("search budget of {budget} hypersequents exceeded (largest hypersequent seen: {} components)", stats.max_components)]
    BudgetExceeded { budget: usize, stats: SearchStats },
}

/// A derivation tree. Leaves carry an initial rule (`init`, `L-false`,
/// `R-true`) with the witnessing formula; inner nodes record the applied
/// rule, the active component and the principal material.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Hypersequent,
    pub rule: RuleId,
    pub component: usize,
    pub principal: Principal,
    pub premisses: Vec<Derivation>,
}

#[derive(Serialize)]
struct DerivationJson {
    rule: String,
    conclusion: String,
    component: usize,
    principal: String,
    premisses: Vec<DerivationJson>,
}

impl Derivation {
    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.premisses.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premisses.iter().map(Derivation::height).max().unwrap_or(0)
    }

    /// All nodes in pre-order.
    pub fn nodes(&self) -> Vec<&Derivation> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(d) = stack.pop() {
            out.push(d);
            stack.extend(d.premisses.iter().rev());
        }
        out
    }

    fn json(&self) -> DerivationJson {
        DerivationJson {
            rule: self.rule.to_string(),
            conclusion: self.conclusion.to_string(),
            component: self.component,
            principal: self.principal.to_string(),
            premisses: self.premisses.iter().map(Derivation::json).collect(),
        }
    }

    /// Machine-readable tree `{rule, conclusion, component, principal, premisses}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.json()).expect("derivations serialise")
    }

    /// Indented text rendering, one node per line, root first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self, 0usize)];
        while let Some((d, depth)) = stack.pop() {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("{}   [{}", d.conclusion, d.rule));
            if d.component > 0 && !d.rule.is_axiom() {
                out.push_str(&format!(" @{}", d.component));
            }
            out.push_str("]\n");
            for p in d.premisses.iter().rev() {
                stack.push((p, depth + 1));
            }
        }
        out
    }
}

/// A failed search: the first saturated leaf reached, and the enumeration of
/// its components (component id → position, from 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub leaf: Hypersequent,
    pub enumeration: BTreeMap<usize, usize>,
}

impl Refutation {
    fn new(leaf: Hypersequent) -> Refutation {
        let enumeration = leaf
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id, i + 1))
            .collect();
        Refutation { leaf, enumeration }
    }
}

/// Result of the invertible search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Proved(Derivation),
    Refuted(Refutation),
}

impl SearchOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            SearchOutcome::Proved(d) => Some(d),
            SearchOutcome::Refuted(_) => None,
        }
    }

    pub fn refutation(&self) -> Option<&Refutation> {
        match self {
            SearchOutcome::Proved(_) => None,
            SearchOutcome::Refuted(r) => Some(r),
        }
    }
}

/// Outcome together with search statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchReport {
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
}

/// Invertible proof search with the default configuration.
pub fn prove(h: &Hypersequent, l: &LogicSpec) -> Result<SearchOutcome, SearchError> {
    prove_with(h, l, &SearchConfig::default()).map(|r| r.outcome)
}

struct Frame {
    conclusion: Hypersequent,
    rule: RuleId,
    component: usize,
    principal: Principal,
    pending: Vec<Hypersequent>,
    done: Vec<Derivation>,
}

/// Invertible proof search: depth-first over premisses in instance order,
/// applying the first instance passing the local loop check. Returns the
/// first saturated leaf when the input is not derivable.
pub fn prove_with(h: &Hypersequent, l: &LogicSpec, config: &SearchConfig) -> Result<SearchReport, SearchError> {
    let mut stats = SearchStats::default();
    let mut stack: Vec<Frame> = Vec::new();
    let mut next = h.clone();
    loop {
        stats.record(&next);
        if stats.visited > config.budget {
            return Err(SearchError::BudgetExceeded { budget: config.budget, stats });
        }
        let mut node = if let Some((rule, component, f)) = calculus::initial_witness(&next) {
            Derivation {
                conclusion: next,
                rule,
                component,
                principal: Principal::Formula(f),
                premisses: vec![],
            }
        } else {
            match calculus::first_applicable(&next, l) {
                None => {
                    return Ok(SearchReport {
                        outcome: SearchOutcome::Refuted(Refutation::new(next)),
                        stats,
                    })
                }
                Some(inst) => {
                    let mut pending = inst.premisses;
                    pending.reverse();
                    let first = pending.pop().expect("rules have premisses");
                    stack.push(Frame {
                        conclusion: next,
                        rule: inst.rule,
                        component: inst.component,
                        principal: inst.principal,
                        pending,
                        done: vec![],
                    });
                    next = first;
                    continue;
                }
            }
        };
        // Propagate the finished subtree upwards.
        loop {
            let Some(top) = stack.last_mut() else {
                return Ok(SearchReport { outcome: SearchOutcome::Proved(node), stats });
            };
            top.done.push(node);
            if let Some(p) = top.pending.pop() {
                next = p;
                break;
            }
            let f = stack.pop().expect("nonempty");
            node = Derivation {
                conclusion: f.conclusion,
                rule: f.rule,
                component: f.component,
                principal: f.principal,
                premisses: f.done,
            };
        }
    }
}

/// Why a derivation fails to check, with the path of premiss indices from
/// the root to the offending node.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("invalid derivation node at path {path:?}: {reason}")]
pub struct DerivationError {
    pub path: Vec<usize>,
    pub reason: String,
}

/// Checks every node of `d` against the rules of `l`: leaves must be
/// initial, inner nodes must have exactly the premisses prescribed by the
/// rule for the recorded component and principal. Loop checking is not
/// required. The check compares each premiss against the conclusion
/// component-wise and verifies the added material, independently of the
/// search engine.
pub fn check_derivation(d: &Derivation, l: &LogicSpec) -> Result<(), DerivationError> {
    let rules = l.rule_set();
    let mut stack: Vec<(&Derivation, Vec<usize>)> = vec![(d, vec![])];
    while let Some((node, path)) = stack.pop() {
        if let Err(reason) = check_node(node, &rules) {
            return Err(DerivationError { path, reason });
        }
        for (i, p) in node.premisses.iter().enumerate() {
            let mut sub = path.clone();
            sub.push(i);
            stack.push((p, sub));
        }
    }
    Ok(())
}

/// Additions a premiss makes relative to the conclusion.
#[derive(Debug, PartialEq, Eq)]
enum Diff {
    /// One existing component gained these formulas and blocks.
    Extend(usize, Vec<Formula>, Vec<Block>, Vec<Formula>),
    /// One new component was added.
    New(Sequent),
}

/// `big − small` as multisets of sorted vectors, if `small ⊆ big`.
fn multiset_minus<T: Ord + Clone>(small: &[T], big: &[T]) -> Option<Vec<T>> {
    let mut out = Vec::new();
    let mut i = 0;
    for x in big {
        if i < small.len() && small[i] == *x {
            i += 1;
        } else if i < small.len() && small[i] < *x {
            return None;
        } else {
            out.push(x.clone());
        }
    }
    (i == small.len()).then_some(out)
}

fn diff(conclusion: &Hypersequent, premiss: &Hypersequent) -> Result<Diff, String> {
    let mut changes = Vec::new();
    for c in conclusion.components() {
        let Some(p) = premiss.component(c.id) else {
            return Err(format!("premiss {premiss} lost component {}", c.id));
        };
        let s = &c.sequent;
        let (Some(a), Some(b), Some(z)) = (
            multiset_minus(s.antecedent(), p.antecedent()),
            multiset_minus(s.blocks(), p.blocks()),
            multiset_minus(s.succedent(), p.succedent()),
        ) else {
            return Err(format!("premiss {premiss} drops material of component {}", c.id));
        };
        if !(a.is_empty() && b.is_empty() && z.is_empty()) {
            changes.push(Diff::Extend(c.id, a, b, z));
        }
    }
    for c in premiss.components() {
        if conclusion.component(c.id).is_none() {
            changes.push(Diff::New(c.sequent.clone()));
        }
    }
    if changes.len() != 1 {
        return Err(format!("premiss {premiss} must differ from the conclusion in exactly one component"));
    }
    Ok(changes.pop().expect("one change"))
}

fn distinct<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.sort();
    out.dedup();
    out
}

fn count<T: PartialEq>(v: &[T], x: &T) -> usize {
    v.iter().filter(|y| *y == x).count()
}

fn blocks_present(s: &Sequent, bs: &[Block]) -> bool {
    distinct(bs).iter().all(|b| count(s.blocks(), b) >= count(bs, b))
}

fn sorted(mut v: Vec<Formula>) -> Vec<Formula> {
    v.sort();
    v
}

fn check_node(node: &Derivation, rules: &std::collections::BTreeSet<RuleId>) -> Result<(), String> {
    use RuleId::*;
    let h = &node.conclusion;
    let id = node.component;
    let Some(s) = h.component(id) else {
        return Err(format!("component {id} does not exist in {h}"));
    };
    if node.rule.is_axiom() {
        if !node.premisses.is_empty() {
            return Err("initial rule with premisses".into());
        }
        let ok = match (&node.rule, &node.principal) {
            (Init, Principal::Formula(f)) => s.antecedent().contains(f) && s.succedent().contains(f),
            (BotL, Principal::Formula(Formula::Bottom)) => s.antecedent().contains(&Formula::Bottom),
            (TopR, Principal::Formula(Formula::Top)) => s.succedent().contains(&Formula::Top),
            _ => false,
        };
        return if ok { Ok(()) } else { Err(format!("leaf {h} is not initial by {}", node.rule)) };
    }
    if !rules.contains(&node.rule) {
        return Err(format!("rule {} is not a rule of the logic", node.rule));
    }
    let ext = |a: Vec<Formula>, b: Vec<Block>, z: Vec<Formula>| {
        let mut b = b;
        b.sort();
        Diff::Extend(id, sorted(a), b, sorted(z))
    };
    let new = |a: Vec<Formula>, z: Vec<Formula>| Diff::New(Sequent::new(a, vec![], z));
    let left = |f: &Formula| s.antecedent().contains(f);
    let right = |f: &Formula| s.succedent().contains(f);
    let expected: Vec<Diff> = match (node.rule, &node.principal) {
        (AndL, Principal::Formula(f @ Formula::And(a, b))) if left(f) => {
            vec![ext(vec![(**a).clone(), (**b).clone()], vec![], vec![])]
        }
        (OrL, Principal::Formula(f @ Formula::Or(a, b))) if left(f) => {
            vec![ext(vec![(**a).clone()], vec![], vec![]), ext(vec![(**b).clone()], vec![], vec![])]
        }
        (ImpL, Principal::Formula(f @ Formula::Imp(a, b))) if left(f) => {
            vec![ext(vec![], vec![], vec![(**a).clone()]), ext(vec![(**b).clone()], vec![], vec![])]
        }
        (AndR, Principal::Formula(f @ Formula::And(a, b))) if right(f) => {
            vec![ext(vec![], vec![], vec![(**a).clone()]), ext(vec![], vec![], vec![(**b).clone()])]
        }
        (OrR, Principal::Formula(f @ Formula::Or(a, b))) if right(f) => {
            vec![ext(vec![], vec![], vec![(**a).clone(), (**b).clone()])]
        }
        (ImpR, Principal::Formula(f @ Formula::Imp(a, b))) if right(f) => {
            vec![ext(vec![(**a).clone()], vec![], vec![(**b).clone()])]
        }
        (BoxL, Principal::Formula(f @ Formula::Box(a))) if left(f) => {
            vec![ext(vec![], vec![Block::singleton((**a).clone())], vec![])]
        }
        (T, Principal::Block(b)) if blocks_present(s, std::slice::from_ref(b)) => {
            vec![ext(b.members().to_vec(), vec![], vec![])]
        }
        (C, Principal::Blocks(bs)) if bs.len() == 2 && blocks_present(s, bs) => {
            let mut m = bs[0].members().to_vec();
            m.extend(bs[1].members().iter().cloned());
            vec![ext(vec![], vec![Block::new(m).map_err(|e| e.to_string())?], vec![])]
        }
        (N, Principal::Nothing) => vec![ext(vec![], vec![Block::singleton(Formula::Top)], vec![])],
        (BoxR | BoxRm, Principal::BlockBox(b, f @ Formula::Box(goal))) if right(f) && blocks_present(s, std::slice::from_ref(b)) => {
            let mut out = vec![new(b.members().to_vec(), vec![(**goal).clone()])];
            if node.rule == BoxR {
                for a in distinct(b.members()) {
                    out.push(new(vec![(**goal).clone()], vec![a]));
                }
            }
            out
        }
        (P, Principal::Block(b)) if blocks_present(s, std::slice::from_ref(b)) => vec![new(b.members().to_vec(), vec![])],
        (D1, Principal::Block(b)) if blocks_present(s, std::slice::from_ref(b)) => {
            let mut out = vec![new(b.members().to_vec(), vec![])];
            for a in distinct(b.members()) {
                out.push(new(vec![], vec![a]));
            }
            out
        }
        (D2, Principal::Blocks(bs)) if bs.len() == 2 && blocks_present(s, bs) => {
            let mut all = bs[0].members().to_vec();
            all.extend(bs[1].members().iter().cloned());
            let mut out = vec![new(all, vec![])];
            for a in distinct(bs[0].members()) {
                for b in distinct(bs[1].members()) {
                    out.push(new(vec![], vec![a.clone(), b]));
                }
            }
            out
        }
        (DnPlus(k), Principal::Blocks(bs)) if bs.len() == k as usize && blocks_present(s, bs) => {
            let all: Vec<Formula> = bs.iter().flat_map(|b| b.members().iter().cloned()).collect();
            vec![new(all, vec![])]
        }
        _ => {
            return Err(format!(
                "principal `{}` does not match rule {} in component {id} of {h}",
                node.principal, node.rule
            ))
        }
    };
    if expected.len() != node.premisses.len() {
        return Err(format!(
            "rule {} needs {} premisses, found {}",
            node.rule,
            expected.len(),
            node.premisses.len()
        ));
    }
    // Match premisses to expected additions, in any order.
    let mut used = vec![false; expected.len()];
    for p in &node.premisses {
        let d = diff(h, &p.conclusion)?;
        let hit = expected.iter().enumerate().position(|(i, e)| !used[i] && *e == d);
        match hit {
            Some(i) => used[i] = true,
            None => return Err(format!("premiss {} is not a premiss of {} here", p.conclusion, node.rule)),
        }
    }
    Ok(())
}

/// Statistics of an unkleened search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UnkleenedStats {
    /// Number of hypersequents examined.
    pub steps: usize,
    pub max_components: usize,
    pub max_component_size: usize,
    /// Largest recursion depth.
    pub max_depth: usize,
}

/// Result of an unkleened search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnkleenedReport {
    pub derivable: bool,
    pub stats: UnkleenedStats,
}

/// Derivability in the unkleened calculus (principal material deleted from
/// premisses), by backtracking search; no countermodel is produced.
pub fn prove_unkleened(h: &Hypersequent, l: &LogicSpec) -> bool {
    prove_unkleened_with(h, l, &SearchConfig { budget: usize::MAX })
        .map(|r| r.derivable)
        .expect("unbounded search cannot exceed its budget")
}

/// Unkleened search with a budget on examined hypersequents.
pub fn prove_unkleened_with(h: &Hypersequent, l: &LogicSpec, config: &SearchConfig) -> Result<UnkleenedReport, SearchError> {
    let mut start = h.clone();
    if l.has_n {
        for c in h.components() {
            start.component_mut(c.id).expect("component").add_block(Block::singleton(Formula::Top));
        }
    }
    let mut run = Unkleened {
        l,
        memo: HashMap::new(),
        open: HashMap::new(),
        stats: UnkleenedStats::default(),
        budget: config.budget,
    };
    let (derivable, _) = run.derivable(start, 1).map_err(|()| SearchError::BudgetExceeded {
        budget: config.budget,
        stats: SearchStats {
            visited: run.stats.steps,
            max_components: run.stats.max_components,
            max_component_size: run.stats.max_component_size,
            max_blocks: 0,
            max_nodes: 0,
        },
    })?;
    Ok(UnkleenedReport { derivable, stats: run.stats })
}

struct Unkleened<'a> {
    l: &'a LogicSpec,
    memo: HashMap<Vec<Sequent>, bool>,
    /// Hypersequents on the current path, with their depth.
    open: HashMap<Vec<Sequent>, usize>,
    stats: UnkleenedStats,
    budget: usize,
}

/// The first formula with an invertible (propositional or left box) rule,
/// as (component id, is-left, formula).
fn invertible_principal(h: &Hypersequent) -> Option<(usize, bool, Formula)> {
    for c in h.components() {
        for f in c.sequent.antecedent() {
            if matches!(f, Formula::And(..) | Formula::Or(..) | Formula::Imp(..) | Formula::Box(_)) {
                return Some((c.id, true, f.clone()));
            }
        }
        for f in c.sequent.succedent() {
            if matches!(f, Formula::And(..) | Formula::Or(..) | Formula::Imp(..)) {
                return Some((c.id, false, f.clone()));
            }
        }
    }
    None
}

/// Structural normal form used by the unkleened search: each side and each
/// block becomes a set, `⊤` on the left and `⊥` on the right are dropped,
/// equal blocks and equal components are merged, and empty components are
/// dropped when anything else remains. Every step preserves validity, and
/// the normal forms over a fixed formula set are finitely many, which
/// bounds the search even when fresh `⟨⊤⟩` blocks keep feeding P/D rules.
fn normalise(h: &Hypersequent) -> Hypersequent {
    let mut seqs: Vec<Sequent> = Vec::new();
    for c in h.components() {
        let s = &c.sequent;
        let mut ante: Vec<Formula> = s.antecedent().iter().filter(|f| **f != Formula::Top).cloned().collect();
        ante.dedup();
        let mut succ: Vec<Formula> = s.succedent().iter().filter(|f| **f != Formula::Bottom).cloned().collect();
        succ.dedup();
        let mut blocks: Vec<Block> = s.blocks().iter().map(|b| Block::new(b.set()).expect("nonempty block")).collect();
        blocks.sort();
        blocks.dedup();
        let t = Sequent::new(ante, blocks, succ);
        if !seqs.contains(&t) {
            seqs.push(t);
        }
    }
    if seqs.iter().any(|s| !s.is_empty()) {
        seqs.retain(|s| !s.is_empty());
    }
    Hypersequent::new(seqs)
}

/// No ancestor was consulted.
const NO_CYCLE: usize = usize::MAX;

impl Unkleened<'_> {
    /// Derivability of `h`, with the shallowest open ancestor the answer
    /// relied on (`NO_CYCLE` when none). A premiss equal to an open ancestor
    /// counts as underivable: a finite derivation never needs to revisit
    /// one. Negative answers resting on an open ancestor are not memoised.
    fn derivable(&mut self, h: Hypersequent, depth: usize) -> Result<(bool, usize), ()> {
        let h = normalise(&h);
        self.stats.steps += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        self.stats.max_components = self.stats.max_components.max(h.len());
        for c in h.components() {
            self.stats.max_component_size = self.stats.max_component_size.max(c.sequent.distinct_size());
        }
        if self.stats.steps > self.budget {
            return Err(());
        }
        if calculus::is_initial(&h) {
            return Ok((true, NO_CYCLE));
        }
        if let Some((id, is_left, f)) = invertible_principal(&h) {
            for p in unkleened_invertible(&h, id, is_left, &f) {
                let (ok, l) = self.derivable(p, depth + 1)?;
                if !ok {
                    return Ok((false, l));
                }
            }
            return Ok((true, NO_CYCLE));
        }
        let key = h.canonical();
        if let Some(&v) = self.memo.get(&key) {
            return Ok((v, NO_CYCLE));
        }
        if let Some(&d) = self.open.get(&key) {
            return Ok((false, d));
        }
        self.open.insert(key.clone(), depth);
        let mut result = false;
        let mut low = NO_CYCLE;
        let instances = unkleened_modal(&h, self.l);
        'instances: for premisses in instances {
            for p in premisses {
                let (ok, l) = self.derivable(p, depth + 1)?;
                if !ok {
                    low = low.min(l);
                    continue 'instances;
                }
            }
            result = true;
            break;
        }
        self.open.remove(&key);
        if result || low >= depth {
            self.memo.insert(key, result);
            low = NO_CYCLE;
        }
        Ok((result, if result { NO_CYCLE } else { low }))
    }
}

fn unkleened_invertible(h: &Hypersequent, id: usize, is_left: bool, f: &Formula) -> Vec<Hypersequent> {
    let mut base = h.clone();
    let s = base.component_mut(id).expect("component");
    if is_left {
        s.remove_antecedent(f);
    } else {
        s.remove_succedent(f);
    }
    let with = |left: &[&Formula], blocks: &[Block], right: &[&Formula]| {
        let mut out = base.clone();
        let s = out.component_mut(id).expect("component");
        for a in left {
            s.add_antecedent((*a).clone());
        }
        for b in blocks {
            s.add_block(b.clone());
        }
        for a in right {
            s.add_succedent((*a).clone());
        }
        out
    };
    match (is_left, f) {
        (true, Formula::And(a, b)) => vec![with(&[a, b], &[], &[])],
        (true, Formula::Or(a, b)) => vec![with(&[a], &[], &[]), with(&[b], &[], &[])],
        (true, Formula::Imp(a, b)) => vec![with(&[], &[], &[a]), with(&[b], &[], &[])],
        (true, Formula::Box(a)) => vec![with(&[], &[Block::singleton((**a).clone())], &[])],
        (false, Formula::And(a, b)) => vec![with(&[], &[], &[a]), with(&[], &[], &[b])],
        (false, Formula::Or(a, b)) => vec![with(&[], &[], &[a, b])],
        (false, Formula::Imp(a, b)) => vec![with(&[a], &[], &[b])],
        _ => unreachable!("not an invertible principal"),
    }
}

/// All instances of the non-invertible rules in unkleened form, as lists of
/// premisses. New components receive `⟨⊤⟩` when the logic has N.
fn unkleened_modal(h: &Hypersequent, l: &LogicSpec) -> Vec<Vec<Hypersequent>> {
    let rules = l.ordered_rules();
    let mut out: Vec<Vec<Hypersequent>> = Vec::new();
    let fresh = |s: Sequent| {
        let mut s = s;
        if l.has_n {
            s.add_block(Block::singleton(Formula::Top));
        }
        s
    };
    for c in h.components() {
        let s = &c.sequent;
        let blocks = s.blocks();
        // Component with the given block occurrences (by index) and
        // succedent formula removed.
        let without = |idx: &[usize], goal: Option<&Formula>| {
            let mut out = h.clone();
            let t = out.component_mut(c.id).expect("component");
            for &i in idx {
                t.remove_block(&blocks[i]);
            }
            if let Some(g) = goal {
                t.remove_succedent(g);
            }
            out
        };
        let adding = |base: &Hypersequent, extra: Sequent| {
            let mut out = base.clone();
            out.push(fresh(extra));
            out
        };
        let distinct_idx: Vec<usize> = (0..blocks.len()).filter(|&i| i == 0 || blocks[i - 1] != blocks[i]).collect();
        let tuples = |k: usize| {
            let mut seen: Vec<Vec<&Block>> = Vec::new();
            let mut res: Vec<Vec<usize>> = Vec::new();
            for combo in combinations(blocks.len(), k) {
                let key: Vec<&Block> = combo.iter().map(|&i| &blocks[i]).collect();
                if !seen.contains(&key) {
                    seen.push(key);
                    res.push(combo);
                }
            }
            res
        };
        let members = |idx: &[usize]| -> Vec<Formula> { idx.iter().flat_map(|&i| blocks[i].members().iter().cloned()).collect() };
        for rule in &rules {
            match *rule {
                RuleId::T => {
                    for &i in &distinct_idx {
                        let mut p = without(&[i], None);
                        let t = p.component_mut(c.id).expect("component");
                        for a in blocks[i].members() {
                            t.add_antecedent(a.clone());
                        }
                        out.push(vec![p]);
                    }
                }
                RuleId::C => {
                    for pair in tuples(2) {
                        let mut p = without(&pair, None);
                        p.component_mut(c.id).expect("component").add_block(blocks[pair[0]].union(&blocks[pair[1]]));
                        out.push(vec![p]);
                    }
                }
                RuleId::BoxR | RuleId::BoxRm => {
                    let mut goals: Vec<&Formula> = s.succedent().iter().filter(|f| matches!(f, Formula::Box(_))).collect();
                    goals.dedup();
                    for &i in &distinct_idx {
                        for g in &goals {
                            let Formula::Box(b) = g else { unreachable!() };
                            let base = without(&[i], Some(g));
                            let mut prem = vec![adding(&base, Sequent::new(blocks[i].members().to_vec(), vec![], vec![(**b).clone()]))];
                            if *rule == RuleId::BoxR {
                                for a in blocks[i].set() {
                                    prem.push(adding(&base, Sequent::new(vec![(**b).clone()], vec![], vec![a])));
                                }
                            }
                            out.push(prem);
                        }
                    }
                }
                RuleId::P => {
                    for &i in &distinct_idx {
                        let base = without(&[i], None);
                        out.push(vec![adding(&base, Sequent::new(members(&[i]), vec![], vec![]))]);
                    }
                }
                RuleId::D1 => {
                    for &i in &distinct_idx {
                        let base = without(&[i], None);
                        let mut prem = vec![adding(&base, Sequent::new(members(&[i]), vec![], vec![]))];
                        for a in blocks[i].set() {
                            prem.push(adding(&base, Sequent::new(vec![], vec![], vec![a])));
                        }
                        out.push(prem);
                    }
                }
                RuleId::D2 => {
                    for pair in tuples(2) {
                        let base = without(&pair, None);
                        let mut prem = vec![adding(&base, Sequent::new(members(&pair), vec![], vec![]))];
                        for a in blocks[pair[0]].set() {
                            for b in blocks[pair[1]].set() {
                                prem.push(adding(&base, Sequent::new(vec![], vec![], vec![a.clone(), b])));
                            }
                        }
                        out.push(prem);
                    }
                }
                RuleId::DnPlus(k) => {
                    for combo in tuples(k as usize) {
                        let base = without(&combo, None);
                        out.push(vec![adding(&base, Sequent::new(members(&combo), vec![], vec![]))]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Visits the first instance passing loop checking, for callers that only
/// need the rule name.
pub fn first_rule(h: &Hypersequent, l: &LogicSpec) -> Option<RuleId> {
    calculus::visit_instances(h, l, true, |rule, _, _, _| ControlFlow::Break(rule))
}
