//! Bi-neighbourhood, standard neighbourhood and relational models: forcing,
//! frame conditions, countermodel extraction from saturated hypersequents,
//! and the transformations between the neighbourhood semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus;
use crate::formula::{is_subformula_closed, Formula};
use crate::hypersequent::{subsumes, Component, Hypersequent, Sequent};
use crate::logic::LogicSpec;

pub type World = usize;
pub type WorldSet = BTreeSet<World>;
pub type Valuation = BTreeMap<String, WorldSet>;

/// Default world cap for transformations enumerating intervals of sets.
pub const DEFAULT_ROUGH_CAP: usize = 20;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("world {0} is not a world of the model")]
    UnknownWorld(World),
    #[error("the model has no worlds")]
    NoWorlds,
    #[error("{0} refers to worlds outside the model")]
    OutOfRange(String),
    #[error("the hypersequent is not saturated for {logic}: rule {rule} still applies in component {component}")]
    NotSaturated { logic: String, rule: String, component: usize },
    #[error("the hypersequent is initial, so it has no countermodel")]
    Initial,
    #[error("relational countermodels need a logic containing M and C, got {0}")]
    NotRegular(String),
    #[error("component {0} has blocks but no maximal block")]
    NoMaximalBlock(usize),
    #[error("{worlds} worlds exceed the cap of {cap} for interval enumeration")]
    CapExceeded { worlds: usize, cap: usize },
    #[error("the formula set is not closed under subformulas (missing {0})")]
    NotSubformulaClosed(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

/// Truth sets over a finite set of worlds; the box clause is the only
/// semantics-specific part.
pub trait Semantics {
    fn worlds(&self) -> &WorldSet;
    fn valuation(&self) -> &Valuation;
    /// Worlds forcing `□A`, given the truth set of `A`.
    fn box_truth(&self, inner: &WorldSet) -> WorldSet;

    /// The set of worlds forcing `f`.
    fn truth_set(&self, f: &Formula) -> WorldSet {
        match f {
            Formula::Bottom => WorldSet::new(),
            Formula::Top => self.worlds().clone(),
            Formula::Atom(p) => self.valuation().get(&**p).cloned().unwrap_or_default(),
            Formula::And(a, b) => self.truth_set(a).intersection(&self.truth_set(b)).copied().collect(),
            Formula::Or(a, b) => self.truth_set(a).union(&self.truth_set(b)).copied().collect(),
            Formula::Imp(a, b) => {
                let ta = self.truth_set(a);
                let tb = self.truth_set(b);
                self.worlds().iter().filter(|w| !ta.contains(w) || tb.contains(w)).copied().collect()
            }
            Formula::Box(a) => self.box_truth(&self.truth_set(a)),
        }
    }

    /// Whether world `w` forces `f`.
    fn force(&self, w: World, f: &Formula) -> Result<bool, ModelError> {
        if !self.worlds().contains(&w) {
            return Err(ModelError::UnknownWorld(w));
        }
        Ok(self.truth_set(f).contains(&w))
    }

    /// Whether `f` is true at every world.
    fn valid(&self, f: &Formula) -> bool {
        self.truth_set(f) == *self.worlds()
    }
}

fn complement(worlds: &WorldSet, s: &WorldSet) -> WorldSet {
    worlds.difference(s).copied().collect()
}

fn show(s: &WorldSet) -> String {
    let items: Vec<String> = s.iter().map(|w| w.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// A pair (α, β) of a bi-neighbourhood: positive and negative support.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub plus: WorldSet,
    pub minus: WorldSet,
}

impl Pair {
    pub fn new(plus: impl IntoIterator<Item = World>, minus: impl IntoIterator<Item = World>) -> Pair {
        Pair { plus: plus.into_iter().collect(), minus: minus.into_iter().collect() }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", show(&self.plus), show(&self.minus))
    }
}

/// A bi-neighbourhood model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BiModel {
    pub worlds: WorldSet,
    pub valuation: Valuation,
    pub nbhd: BTreeMap<World, BTreeSet<Pair>>,
}

/// A standard neighbourhood model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StandardModel {
    pub worlds: WorldSet,
    pub valuation: Valuation,
    pub nbhd: BTreeMap<World, BTreeSet<WorldSet>>,
}

/// A relational model with non-normal worlds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationalModel {
    pub worlds: WorldSet,
    pub non_normal: WorldSet,
    pub relation: BTreeMap<World, WorldSet>,
    pub valuation: Valuation,
}

static EMPTY_PAIRS: BTreeSet<Pair> = BTreeSet::new();
static EMPTY_SETS: BTreeSet<WorldSet> = BTreeSet::new();
static EMPTY_WORLDS: WorldSet = WorldSet::new();

impl BiModel {
    pub fn pairs(&self, w: World) -> &BTreeSet<Pair> {
        self.nbhd.get(&w).unwrap_or(&EMPTY_PAIRS)
    }
}

impl StandardModel {
    pub fn neighbourhoods(&self, w: World) -> &BTreeSet<WorldSet> {
        self.nbhd.get(&w).unwrap_or(&EMPTY_SETS)
    }

    /// Whether every neighbourhood function value is closed under supersets.
    pub fn is_supplemented(&self) -> bool {
        standard_m(self).is_none()
    }
}

impl RelationalModel {
    pub fn successors(&self, w: World) -> &WorldSet {
        self.relation.get(&w).unwrap_or(&EMPTY_WORLDS)
    }
}

impl Semantics for BiModel {
    fn worlds(&self) -> &WorldSet {
        &self.worlds
    }
    fn valuation(&self) -> &Valuation {
        &self.valuation
    }
    fn box_truth(&self, inner: &WorldSet) -> WorldSet {
        self.worlds
            .iter()
            .filter(|w| {
                self.pairs(**w)
                    .iter()
                    .any(|p| p.plus.is_subset(inner) && p.minus.is_disjoint(inner))
            })
            .copied()
            .collect()
    }
}

impl Semantics for StandardModel {
    fn worlds(&self) -> &WorldSet {
        &self.worlds
    }
    fn valuation(&self) -> &Valuation {
        &self.valuation
    }
    fn box_truth(&self, inner: &WorldSet) -> WorldSet {
        self.worlds
            .iter()
            .filter(|w| self.neighbourhoods(**w).contains(inner))
            .copied()
            .collect()
    }
}

impl Semantics for RelationalModel {
    fn worlds(&self) -> &WorldSet {
        &self.worlds
    }
    fn valuation(&self) -> &Valuation {
        &self.valuation
    }
    fn box_truth(&self, inner: &WorldSet) -> WorldSet {
        self.worlds
            .iter()
            .filter(|w| !self.non_normal.contains(w) && self.successors(**w).is_subset(inner))
            .copied()
            .collect()
    }
}

/// Outcome of one frame-condition check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum ConditionStatus {
    Pass,
    /// Failed, with a witnessing counterexample.
    Fail(String),
    /// Not checked for this semantics, with the reason.
    Unchecked(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionResult {
    pub condition: String,
    #[serde(flatten)]
    pub status: ConditionStatus,
}

/// Per-condition results for the conditions induced by a logic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub results: Vec<ConditionResult>,
}

impl ConditionReport {
    fn push(&mut self, condition: impl Into<String>, failure: Option<String>) {
        let status = match failure {
            None => ConditionStatus::Pass,
            Some(w) => ConditionStatus::Fail(w),
        };
        self.results.push(ConditionResult { condition: condition.into(), status });
    }

    fn unchecked(&mut self, condition: impl Into<String>, reason: &str) {
        self.results.push(ConditionResult {
            condition: condition.into(),
            status: ConditionStatus::Unchecked(reason.into()),
        });
    }

    /// True iff no checked condition failed.
    pub fn passed(&self) -> bool {
        !self.results.iter().any(|r| matches!(r.status, ConditionStatus::Fail(_)))
    }

    pub fn failures(&self) -> Vec<&ConditionResult> {
        self.results
            .iter()
            .filter(|r| matches!(r.status, ConditionStatus::Fail(_)))
            .collect()
    }

    pub fn status(&self, condition: &str) -> Option<&ConditionStatus> {
        self.results.iter().find(|r| r.condition == condition).map(|r| &r.status)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.results.is_empty() {
            return writeln!(f, "no frame conditions");
        }
        for r in &self.results {
            match &r.status {
                ConditionStatus::Pass => writeln!(f, "{}: pass", r.condition)?,
                ConditionStatus::Fail(w) => writeln!(f, "{}: FAIL ({w})", r.condition)?,
                ConditionStatus::Unchecked(why) => writeln!(f, "{}: unchecked ({why})", r.condition)?,
            }
        }
        Ok(())
    }
}

/// Subsets of `items` of sizes `1..=n`, as index vectors.
fn small_subsets<T>(items: &[T], n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in 1..=n.min(items.len()) {
        out.extend(crate::search::combinations(items.len(), k));
    }
    out
}

fn condition_names(l: &LogicSpec) -> Vec<String> {
    let mut names = Vec::new();
    if l.monotonic {
        names.push("M".to_string());
    }
    if l.has_c {
        names.push("C".into());
    }
    if l.has_n {
        names.push("N".into());
    }
    if l.has_t {
        names.push("T".into());
    }
    if l.has_p {
        names.push("P".into());
    }
    if l.has_d {
        names.push("D".into());
    }
    if let Some(n) = l.dplus {
        for i in 1..=n {
            names.push(format!("RD{i}+"));
        }
    }
    names
}

fn rd_arity(name: &str) -> Option<usize> {
    name.strip_prefix("RD")?.strip_suffix('+')?.parse().ok()
}

/// Bi-neighbourhood conditions induced by `l`.
pub fn check_bi_conditions(m: &BiModel, l: &LogicSpec) -> ConditionReport {
    let mut report = ConditionReport::default();
    for name in condition_names(l) {
        let failure = match name.as_str() {
            "M" => bi_first(m, |w, ps| {
                ps.iter().find(|p| !p.minus.is_empty()).map(|p| format!("pair {p} at world {w} has nonempty negative part"))
            }),
            "N" => bi_n(m),
            "C" => bi_first(m, |w, ps| {
                for a in ps {
                    for b in ps {
                        let meet = Pair {
                            plus: a.plus.intersection(&b.plus).copied().collect(),
                            minus: a.minus.union(&b.minus).copied().collect(),
                        };
                        if !ps.contains(&meet) {
                            return Some(format!("{a} and {b} at world {w} but not {meet}"));
                        }
                    }
                }
                None
            }),
            "T" => bi_first(m, |w, ps| {
                ps.iter().find(|p| !p.plus.contains(&w)).map(|p| format!("world {w} not in positive part of {p}"))
            }),
            "P" => bi_first(m, |w, ps| {
                ps.iter().find(|p| p.plus.is_empty()).map(|p| format!("pair {p} at world {w} has empty positive part"))
            }),
            "D" => bi_first(m, |w, ps| {
                for a in ps {
                    for b in ps {
                        if a.plus.is_disjoint(&b.plus) && a.minus.is_disjoint(&b.minus) {
                            return Some(format!("{a} and {b} at world {w} are disjoint on both sides"));
                        }
                    }
                }
                None
            }),
            other => {
                let n = rd_arity(other).expect("RD condition");
                bi_first(m, |w, ps| {
                    let ps: Vec<&Pair> = ps.iter().collect();
                    for idx in small_subsets(&ps, n) {
                        let mut meet = ps[idx[0]].plus.clone();
                        for &i in &idx[1..] {
                            meet = meet.intersection(&ps[i].plus).copied().collect();
                        }
                        if meet.is_empty() {
                            let items: Vec<String> = idx.iter().map(|&i| ps[i].to_string()).collect();
                            return Some(format!("positive parts of {} at world {w} have empty intersection", items.join(", ")));
                        }
                    }
                    None
                })
            }
        };
        report.push(name, failure);
    }
    report
}

fn bi_first(m: &BiModel, check: impl Fn(World, &BTreeSet<Pair>) -> Option<String>) -> Option<String> {
    m.worlds.iter().find_map(|&w| check(w, m.pairs(w)))
}

fn bi_n(m: &BiModel) -> Option<String> {
    let &first = m.worlds.iter().next()?;
    let common = m.pairs(first).iter().filter(|p| p.minus.is_empty()).any(|p| {
        m.worlds.iter().all(|w| m.pairs(*w).contains(&Pair { plus: p.plus.clone(), minus: WorldSet::new() }))
    });
    if common {
        None
    } else {
        Some("no set α with (α, ∅) at every world".into())
    }
}

fn standard_m(m: &StandardModel) -> Option<String> {
    for &w in &m.worlds {
        let ns = m.neighbourhoods(w);
        for a in ns {
            for v in m.worlds.difference(a) {
                let mut bigger = a.clone();
                bigger.insert(*v);
                if !ns.contains(&bigger) {
                    return Some(format!("{} at world {w} but not its superset {}", show(a), show(&bigger)));
                }
            }
        }
    }
    None
}

/// Standard neighbourhood conditions induced by `l`.
pub fn check_standard_conditions(m: &StandardModel, l: &LogicSpec) -> ConditionReport {
    let mut report = ConditionReport::default();
    let first = |check: &dyn Fn(World, &BTreeSet<WorldSet>) -> Option<String>| {
        m.worlds.iter().find_map(|&w| check(w, m.neighbourhoods(w)))
    };
    for name in condition_names(l) {
        let failure = match name.as_str() {
            "M" => standard_m(m),
            "C" => first(&|w, ns| {
                for a in ns {
                    for b in ns {
                        let meet: WorldSet = a.intersection(b).copied().collect();
                        if !ns.contains(&meet) {
                            return Some(format!("{} and {} at world {w} but not their intersection", show(a), show(b)));
                        }
                    }
                }
                None
            }),
            "N" => first(&|w, ns| (!ns.contains(&m.worlds)).then(|| format!("W missing at world {w}"))),
            "T" => first(&|w, ns| ns.iter().find(|a| !a.contains(&w)).map(|a| format!("world {w} not in {}", show(a)))),
            "P" => first(&|w, ns| ns.contains(&WorldSet::new()).then(|| format!("∅ at world {w}"))),
            "D" => first(&|w, ns| {
                ns.iter()
                    .find(|a| ns.contains(&complement(&m.worlds, a)))
                    .map(|a| format!("{} and its complement at world {w}", show(a)))
            }),
            other => {
                let n = rd_arity(other).expect("RD condition");
                first(&|w, ns| {
                    let ns: Vec<&WorldSet> = ns.iter().collect();
                    for idx in small_subsets(&ns, n) {
                        let mut meet = ns[idx[0]].clone();
                        for &i in &idx[1..] {
                            meet = meet.intersection(ns[i]).copied().collect();
                        }
                        if meet.is_empty() {
                            let items: Vec<String> = idx.iter().map(|&i| show(ns[i])).collect();
                            return Some(format!("{} at world {w} have empty intersection", items.join(", ")));
                        }
                    }
                    None
                })
            }
        };
        report.push(name, failure);
    }
    report
}

/// Relational frame conditions: the logic must contain M and C; N requires
/// every world to be normal, T requires every normal world to be reflexive.
/// Conditions for P, D and RD_n^+ are reported as unchecked.
pub fn check_relational_conditions(m: &RelationalModel, l: &LogicSpec) -> ConditionReport {
    let mut report = ConditionReport::default();
    for name in condition_names(l) {
        match name.as_str() {
            "M" | "C" => report.push(name, None),
            "N" => report.push(
                name,
                m.non_normal.iter().next().map(|w| format!("world {w} is non-normal")),
            ),
            "T" => report.push(
                name,
                m.worlds
                    .iter()
                    .filter(|w| !m.non_normal.contains(w))
                    .find(|w| !m.successors(**w).contains(w))
                    .map(|w| format!("normal world {w} is not reflexive")),
            ),
            _ => report.unchecked(name, "no relational condition implemented"),
        }
    }
    report
}

/// Any of the three kinds of model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Bi(BiModel),
    Standard(StandardModel),
    Relational(RelationalModel),
}

impl Model {
    pub fn semantics(&self) -> &dyn Semantics {
        match self {
            Model::Bi(m) => m,
            Model::Standard(m) => m,
            Model::Relational(m) => m,
        }
    }

    pub fn check_conditions(&self, l: &LogicSpec) -> ConditionReport {
        match self {
            Model::Bi(m) => check_bi_conditions(m, l),
            Model::Standard(m) => check_standard_conditions(m, l),
            Model::Relational(m) => check_relational_conditions(m, l),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Model::Bi(m) => model_size_bi(m),
            Model::Standard(m) => model_size_standard(m),
            Model::Relational(m) => model_size_relational(m),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Bi(_) => "bi",
            Model::Standard(_) => "standard",
            Model::Relational(_) => "relational",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModelJson::from(self)).expect("models serialise")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Model, ModelError> {
        let j: ModelJson = serde_json::from_value(value.clone()).map_err(|e| ModelError::Malformed(e.to_string()))?;
        j.into_model()
    }
}

/// `|W| + Σ_w |N(w)|`.
pub fn model_size_bi(m: &BiModel) -> usize {
    m.worlds.len() + m.worlds.iter().map(|w| m.pairs(*w).len()).sum::<usize>()
}

/// `|W| + Σ_w |N(w)|`.
pub fn model_size_standard(m: &StandardModel) -> usize {
    m.worlds.len() + m.worlds.iter().map(|w| m.neighbourhoods(*w).len()).sum::<usize>()
}

/// `|W| + Σ_w |R(w)|`.
pub fn model_size_relational(m: &RelationalModel) -> usize {
    m.worlds.len() + m.worlds.iter().map(|w| m.successors(*w).len()).sum::<usize>()
}

fn leaf_valuation(leaf: &Hypersequent) -> Valuation {
    let mut v = Valuation::new();
    for c in leaf.components() {
        for f in c.sequent.antecedent() {
            if let Formula::Atom(p) = f {
                v.entry(p.to_string()).or_default().insert(c.id);
            }
        }
    }
    v
}

/// Removes every component subsumed by another one (keeping the first of
/// set-equal components).
pub fn drop_subsumed(h: &Hypersequent) -> Hypersequent {
    let cs = h.components();
    let kept: Vec<Component> = cs
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !cs.iter().enumerate().any(|(j, d)| {
                j != *i && subsumes(&c.sequent, &d.sequent) && (j < *i || !subsumes(&d.sequent, &c.sequent))
            })
        })
        .map(|(_, c)| c.clone())
        .collect();
    Hypersequent::from_components(kept)
}

/// The hypersequent a countermodel is built from. A leaf of the search is
/// normally saturated itself. The loop check compares a premiss with every
/// component of the conclusion, so a component subsumed by another may miss
/// a local saturation condition. Those components are then dropped. Every
/// dropped component is subsumed by a kept one, so it is falsified wherever
/// that one is.
fn model_leaf(leaf: &Hypersequent, l: &LogicSpec) -> Result<Hypersequent, ModelError> {
    if calculus::is_initial(leaf) {
        return Err(ModelError::Initial);
    }
    let Some((rule, component)) = calculus::unsaturated_condition(leaf, l) else {
        return Ok(leaf.clone());
    };
    let reduced = drop_subsumed(leaf);
    if calculus::unsaturated_condition(&reduced, l).is_none() {
        return Ok(reduced);
    }
    Err(ModelError::NotSaturated { logic: l.name(), rule: rule.to_string(), component })
}

/// Worlds whose antecedent contains every member of `set`.
fn positive(leaf: &Hypersequent, set: &[Formula]) -> WorldSet {
    leaf.components()
        .iter()
        .filter(|c| set.iter().all(|a| c.sequent.in_antecedent(a)))
        .map(|c| c.id)
        .collect()
}

/// Worlds whose succedent meets `set`.
fn negative(leaf: &Hypersequent, set: &[Formula]) -> WorldSet {
    leaf.components()
        .iter()
        .filter(|c| set.iter().any(|a| c.sequent.in_succedent(a)))
        .map(|c| c.id)
        .collect()
}

/// The bi-neighbourhood countermodel of a saturated hypersequent: worlds are
/// component ids, each block ⟨Σ⟩ of component n contributes (Σ⁺, Σ⁻) to
/// N(n), or (Σ⁺, ∅) for monotonic logics.
pub fn extract_bi_countermodel(leaf: &Hypersequent, l: &LogicSpec) -> Result<BiModel, ModelError> {
    let leaf = &model_leaf(leaf, l)?;
    let mut nbhd = BTreeMap::new();
    for c in leaf.components() {
        let pairs: BTreeSet<Pair> = c
            .sequent
            .blocks()
            .iter()
            .map(|b| {
                let set = b.set();
                Pair {
                    plus: positive(leaf, &set),
                    minus: if l.monotonic { WorldSet::new() } else { negative(leaf, &set) },
                }
            })
            .collect();
        nbhd.insert(c.id, pairs);
    }
    Ok(BiModel {
        worlds: leaf.components().iter().map(|c| c.id).collect(),
        valuation: leaf_valuation(leaf),
        nbhd,
    })
}

/// The relational countermodel of a saturated hypersequent for a logic with
/// M and C: blockless components are non-normal, and R(n) = Σ⁺ for the
/// maximal block ⟨Σ⟩ of component n.
pub fn extract_relational_countermodel(leaf: &Hypersequent, l: &LogicSpec) -> Result<RelationalModel, ModelError> {
    if !l.is_regular() {
        return Err(ModelError::NotRegular(l.name()));
    }
    let leaf = &model_leaf(leaf, l)?;
    let mut non_normal = WorldSet::new();
    let mut relation = BTreeMap::new();
    for c in leaf.components() {
        let blocks = c.sequent.blocks();
        if blocks.is_empty() {
            non_normal.insert(c.id);
            continue;
        }
        let sets: Vec<Vec<Formula>> = blocks.iter().map(|b| b.set()).collect();
        let maximal: Vec<&Vec<Formula>> = sets
            .iter()
            .filter(|s| sets.iter().all(|t| crate::hypersequent::sorted_subset(t, s)))
            .collect();
        let Some(first) = maximal.first() else {
            return Err(ModelError::NoMaximalBlock(c.id));
        };
        let succ = positive(leaf, first);
        assert!(
            maximal.iter().all(|s| positive(leaf, s) == succ),
            "maximal blocks of a component determine the same successors"
        );
        relation.insert(c.id, succ);
    }
    Ok(RelationalModel {
        worlds: leaf.components().iter().map(|c| c.id).collect(),
        non_normal,
        relation,
        valuation: leaf_valuation(leaf),
    })
}

/// Checks the properties guaranteed for an extracted countermodel: the frame
/// conditions of `l`, and at each world n the antecedent formulas and block
/// interpretations of component n are forced while its succedent formulas
/// are not. A component without a world of its own (dropped as subsumed)
/// must be falsified at some world.
pub fn verify_countermodel(m: &dyn Semantics, report: &ConditionReport, leaf: &Hypersequent) -> Result<(), String> {
    if !report.passed() {
        return Err(format!("frame conditions fail:\n{report}"));
    }
    for c in leaf.components() {
        if !m.worlds().contains(&c.id) {
            // Dropped as subsumed: some world must falsify it.
            if !m.worlds().iter().any(|&w| falsifies(m, w, &c.sequent).is_ok()) {
                return Err(format!("no world falsifies component {}", c.sequent));
            }
            continue;
        }
        falsifies(m, c.id, &c.sequent)?;
    }
    Ok(())
}

/// Whether world `n` forces the antecedent and blocks of `s` and none of its
/// succedent, i.e. falsifies the sequent.
pub fn falsifies(m: &dyn Semantics, n: World, s: &Sequent) -> Result<(), String> {
    for f in s.antecedent() {
        if !m.force(n, f).map_err(|e| e.to_string())? {
            return Err(format!("world {n} does not force antecedent formula {f}"));
        }
    }
    for b in s.blocks() {
        let f = b.interpret();
        if !m.force(n, &f).map_err(|e| e.to_string())? {
            return Err(format!("world {n} does not force block {b}"));
        }
    }
    for f in s.succedent() {
        if m.force(n, f).map_err(|e| e.to_string())? {
            return Err(format!("world {n} forces succedent formula {f}"));
        }
    }
    Ok(())
}

/// Standard to bi-neighbourhood: (α, W∖α) per neighbourhood, or (α, ∅) when
/// the standard model is treated as supplemented.
pub fn bi_from_standard(m: &StandardModel, supplemented: bool) -> BiModel {
    let nbhd = m
        .worlds
        .iter()
        .map(|&w| {
            let pairs = m
                .neighbourhoods(w)
                .iter()
                .map(|a| Pair {
                    plus: a.clone(),
                    minus: if supplemented { WorldSet::new() } else { complement(&m.worlds, a) },
                })
                .collect();
            (w, pairs)
        })
        .collect();
    BiModel { worlds: m.worlds.clone(), valuation: m.valuation.clone(), nbhd }
}

/// All sets γ with `lower ⊆ γ ⊆ upper`.
fn interval(lower: &WorldSet, upper: &WorldSet) -> Vec<WorldSet> {
    if !lower.is_subset(upper) {
        return vec![];
    }
    let free: Vec<World> = upper.difference(lower).copied().collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut g = lower.clone();
        for (i, w) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                g.insert(*w);
            }
        }
        out.push(g);
    }
    out
}

fn check_cap(worlds: usize, cap: usize) -> Result<(), ModelError> {
    if worlds > cap || worlds >= 64 {
        return Err(ModelError::CapExceeded { worlds, cap });
    }
    Ok(())
}

/// Bi-neighbourhood to standard: every set sandwiched by some pair.
pub fn standard_from_bi_rough(m: &BiModel, cap: usize) -> Result<StandardModel, ModelError> {
    check_cap(m.worlds.len(), cap)?;
    let nbhd = m
        .worlds
        .iter()
        .map(|&w| {
            let sets: BTreeSet<WorldSet> = m
                .pairs(w)
                .iter()
                .flat_map(|p| interval(&p.plus, &complement(&m.worlds, &p.minus)))
                .collect();
            (w, sets)
        })
        .collect();
    Ok(StandardModel { worlds: m.worlds.clone(), valuation: m.valuation.clone(), nbhd })
}

/// Bi-neighbourhood to standard relative to a subformula-closed set `s`:
/// N(w) holds the truth sets of A for □A ∈ s forced at w; with `supplement`,
/// all their supersets (subject to `cap` on the number of worlds).
pub fn standard_from_bi_fine(
    m: &BiModel,
    s: &BTreeSet<Formula>,
    supplement: bool,
    cap: usize,
) -> Result<StandardModel, ModelError> {
    if let Some(missing) = s.iter().flat_map(|f| f.children()).find(|c| !s.contains(*c)) {
        return Err(ModelError::NotSubformulaClosed(missing.to_string()));
    }
    debug_assert!(is_subformula_closed(s));
    if supplement {
        check_cap(m.worlds.len(), cap)?;
    }
    let boxed: Vec<(WorldSet, WorldSet)> = s
        .iter()
        .filter_map(|f| match f {
            Formula::Box(a) => Some((m.truth_set(f), m.truth_set(a))),
            _ => None,
        })
        .collect();
    let nbhd = m
        .worlds
        .iter()
        .map(|&w| {
            let mut sets = BTreeSet::new();
            for (forcing, inner) in &boxed {
                if forcing.contains(&w) {
                    if supplement {
                        sets.extend(interval(inner, &m.worlds));
                    } else {
                        sets.insert(inner.clone());
                    }
                }
            }
            (w, sets)
        })
        .collect();
    Ok(StandardModel { worlds: m.worlds.clone(), valuation: m.valuation.clone(), nbhd })
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    plus: Vec<World>,
    minus: Vec<World>,
}

#[derive(Serialize, Deserialize)]
struct RelationalJson {
    non_normal: Vec<World>,
    edges: BTreeMap<World, Vec<World>>,
}

/// `{worlds, valuation, bi | standard | relational}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    worlds: Vec<World>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<World>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bi: Option<BTreeMap<World, Vec<PairJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standard: Option<BTreeMap<World, Vec<Vec<World>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relational: Option<RelationalJson>,
}

fn vec_of(s: &WorldSet) -> Vec<World> {
    s.iter().copied().collect()
}

impl From<&Model> for ModelJson {
    fn from(m: &Model) -> ModelJson {
        let (worlds, valuation) = match m {
            Model::Bi(b) => (&b.worlds, &b.valuation),
            Model::Standard(s) => (&s.worlds, &s.valuation),
            Model::Relational(r) => (&r.worlds, &r.valuation),
        };
        let mut j = ModelJson {
            worlds: vec_of(worlds),
            valuation: valuation.iter().map(|(k, v)| (k.clone(), vec_of(v))).collect(),
            bi: None,
            standard: None,
            relational: None,
        };
        match m {
            Model::Bi(b) => {
                j.bi = Some(
                    b.worlds
                        .iter()
                        .map(|&w| {
                            let pairs = b.pairs(w).iter().map(|p| PairJson { plus: vec_of(&p.plus), minus: vec_of(&p.minus) });
                            (w, pairs.collect())
                        })
                        .collect(),
                )
            }
            Model::Standard(s) => {
                j.standard = Some(
                    s.worlds
                        .iter()
                        .map(|&w| (w, s.neighbourhoods(w).iter().map(vec_of).collect()))
                        .collect(),
                )
            }
            Model::Relational(r) => {
                j.relational = Some(RelationalJson {
                    non_normal: vec_of(&r.non_normal),
                    edges: r.relation.iter().map(|(w, s)| (*w, vec_of(s))).collect(),
                })
            }
        }
        j
    }
}

impl ModelJson {
    fn into_model(self) -> Result<Model, ModelError> {
        let worlds: WorldSet = self.worlds.iter().copied().collect();
        if worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let within = |what: String, ws: &[World]| -> Result<WorldSet, ModelError> {
            if ws.iter().all(|w| worlds.contains(w)) {
                Ok(ws.iter().copied().collect())
            } else {
                Err(ModelError::OutOfRange(what))
            }
        };
        let mut valuation = Valuation::new();
        for (atom, ws) in &self.valuation {
            valuation.insert(atom.clone(), within(format!("valuation of {atom}"), ws)?);
        }
        let kinds = [self.bi.is_some(), self.standard.is_some(), self.relational.is_some()];
        if kinds.iter().filter(|k| **k).count() != 1 {
            return Err(ModelError::Malformed("exactly one of `bi`, `standard`, `relational` is required".into()));
        }
        let known = |w: &World| -> Result<(), ModelError> {
            if worlds.contains(w) {
                Ok(())
            } else {
                Err(ModelError::UnknownWorld(*w))
            }
        };
        if let Some(bi) = self.bi {
            let mut nbhd = BTreeMap::new();
            for (w, pairs) in bi {
                known(&w)?;
                let mut set = BTreeSet::new();
                for p in pairs {
                    set.insert(Pair {
                        plus: within(format!("neighbourhood of {w}"), &p.plus)?,
                        minus: within(format!("neighbourhood of {w}"), &p.minus)?,
                    });
                }
                nbhd.insert(w, set);
            }
            return Ok(Model::Bi(BiModel { worlds, valuation, nbhd }));
        }
        if let Some(st) = self.standard {
            let mut nbhd = BTreeMap::new();
            for (w, sets) in st {
                known(&w)?;
                let mut out = BTreeSet::new();
                for s in sets {
                    out.insert(within(format!("neighbourhood of {w}"), &s)?);
                }
                nbhd.insert(w, out);
            }
            return Ok(Model::Standard(StandardModel { worlds, valuation, nbhd }));
        }
        let rel = self.relational.expect("checked above");
        let non_normal = within("non-normal worlds".into(), &rel.non_normal)?;
        let mut relation = BTreeMap::new();
        for (w, succ) in rel.edges {
            known(&w)?;
            relation.insert(w, within(format!("successors of {w}"), &succ)?);
        }
        Ok(Model::Relational(RelationalModel { worlds, non_normal, relation, valuation }))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (worlds, valuation) = match self {
            Model::Bi(b) => (&b.worlds, &b.valuation),
            Model::Standard(s) => (&s.worlds, &s.valuation),
            Model::Relational(r) => (&r.worlds, &r.valuation),
        };
        writeln!(f, "{} model", self.kind())?;
        writeln!(f, "  W = {}", show(worlds))?;
        for (atom, ws) in valuation {
            writeln!(f, "  V({atom}) = {}", show(ws))?;
        }
        match self {
            Model::Bi(b) => {
                for w in &b.worlds {
                    let items: Vec<String> = b.pairs(*w).iter().map(|p| p.to_string()).collect();
                    writeln!(f, "  N({w}) = {{{}}}", items.join(", "))?;
                }
            }
            Model::Standard(s) => {
                for w in &s.worlds {
                    let items: Vec<String> = s.neighbourhoods(*w).iter().map(show).collect();
                    writeln!(f, "  N({w}) = {{{}}}", items.join(", "))?;
                }
            }
            Model::Relational(r) => {
                writeln!(f, "  W^i = {}", show(&r.non_normal))?;
                for w in &r.worlds {
                    if !r.non_normal.contains(w) {
                        writeln!(f, "  R({w}) = {}", show(r.successors(*w)))?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::hypersequent::parse_hypersequent;
    use crate::logic::parse_logic_name;

    fn ws(items: &[World]) -> WorldSet {
        items.iter().copied().collect()
    }

    fn m_example() -> BiModel {
        BiModel {
            worlds: ws(&[1, 2]),
            valuation: [("p".to_string(), ws(&[2]))].into_iter().collect(),
            nbhd: [(1, [Pair::new([], [2])].into_iter().collect()), (2, BTreeSet::new())].into_iter().collect(),
        }
    }

    #[test]
    fn bi_forcing_of_m_example() {
        let m = m_example();
        assert!(m.force(1, &parse("box(p & q)").unwrap()).unwrap());
        assert!(!m.force(1, &parse("box p").unwrap()).unwrap());
        assert_eq!(m.force(7, &Formula::Top), Err(ModelError::UnknownWorld(7)));
        assert_eq!(model_size_bi(&m), 3);
    }

    #[test]
    fn relational_non_normal_world_falsifies_boxes() {
        let m = RelationalModel {
            worlds: ws(&[1, 2]),
            non_normal: ws(&[2]),
            relation: [(1, ws(&[2]))].into_iter().collect(),
            valuation: [("p".to_string(), ws(&[2]))].into_iter().collect(),
        };
        assert!(!m.force(2, &parse("box p").unwrap()).unwrap());
        assert!(m.force(1, &parse("box p").unwrap()).unwrap());
    }

    #[test]
    fn extraction_of_m_example() {
        let leaf = parse_hypersequent("<p & q>, [](p & q) => []p | p => p & q, q").unwrap();
        assert_eq!(extract_bi_countermodel(&leaf, &LogicSpec::E).unwrap(), m_example());
    }

    #[test]
    fn extraction_rejects_unsaturated() {
        let leaf = parse_hypersequent("[]p =>").unwrap();
        assert!(matches!(extract_bi_countermodel(&leaf, &LogicSpec::E), Err(ModelError::NotSaturated { .. })));
    }

    #[test]
    fn d_condition_on_empty_pair() {
        let m = BiModel {
            worlds: ws(&[1]),
            valuation: Valuation::new(),
            nbhd: [(1, [Pair::new([], [])].into_iter().collect())].into_iter().collect(),
        };
        let r = check_bi_conditions(&m, &parse_logic_name("ED").unwrap());
        assert!(matches!(r.status("D"), Some(ConditionStatus::Fail(_))));
        assert!(check_bi_conditions(&m, &LogicSpec::E).results.is_empty());
    }

    #[test]
    fn rough_transformation_interval() {
        let st = standard_from_bi_rough(&m_example(), DEFAULT_ROUGH_CAP).unwrap();
        assert_eq!(st.neighbourhoods(1), &[ws(&[]), ws(&[1])].into_iter().collect());
        let small = BiModel { worlds: ws(&[1, 2]), ..Default::default() };
        assert!(standard_from_bi_rough(&small, 1).is_err());
    }

    #[test]
    fn bi_from_standard_cases() {
        let st = StandardModel {
            worlds: ws(&[1, 2]),
            valuation: Valuation::new(),
            nbhd: [(1, [ws(&[])].into_iter().collect())].into_iter().collect(),
        };
        assert_eq!(bi_from_standard(&st, false).pairs(1), &[Pair::new([], [1, 2])].into_iter().collect());
        let st2 = StandardModel {
            nbhd: [(1, [ws(&[2])].into_iter().collect())].into_iter().collect(),
            ..st
        };
        assert_eq!(bi_from_standard(&st2, true).pairs(1), &[Pair::new([2], [])].into_iter().collect());
    }

    #[test]
    fn fine_transformation_requires_closure() {
        let s: BTreeSet<Formula> = [parse("box p").unwrap()].into_iter().collect();
        assert!(matches!(
            standard_from_bi_fine(&m_example(), &s, false, DEFAULT_ROUGH_CAP),
            Err(ModelError::NotSubformulaClosed(_))
        ));
        let s = parse("box(p & q) -> box p").unwrap().subformulas();
        let st = standard_from_bi_fine(&m_example(), &s, false, DEFAULT_ROUGH_CAP).unwrap();
        assert_eq!(st.neighbourhoods(1), &[ws(&[])].into_iter().collect());
    }

    #[test]
    fn json_round_trip() {
        let m = Model::Bi(m_example());
        let j = m.to_json();
        assert_eq!(j["bi"]["1"][0]["minus"], serde_json::json!([2]));
        assert_eq!(Model::from_json(&j).unwrap(), m);
        let bad = serde_json::json!({"worlds": [1], "bi": {"1": [{"plus": [3], "minus": []}]}});
        assert!(Model::from_json(&bad).is_err());
    }
}
