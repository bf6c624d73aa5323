//! Labelled sequents over world and neighbourhood labels for the classical
//! cube: the translation of hypersequents into labelled sequents, the
//! translation of hypersequent derivations into labelled derivations, and an
//! independent checker for labelled derivations.
//!
//! Labels are deterministic: component `k` gets the world label `x{k}`,
//! member `j` of block `i` of a root component `k` gets `a{k}_{i}_{j}`,
//! neighbourhoods opened by `L□` during a translation get `n1, n2, …`, and
//! blocks `⟨⊤⟩` map to the constant `τ` (rendered `tau`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::calculus::{self, Principal};
use crate::formula::Formula;
use crate::hypersequent::{Block, Hypersequent};
use crate::logic::{LogicSpec, RuleId};
use crate::search::{check_derivation, Derivation};

/// A neighbourhood label, or the constant `τ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NbLabel {
    Tau,
    Named(String),
}

impl NbLabel {
    pub fn named(name: &str) -> NbLabel {
        NbLabel::Named(name.to_string())
    }
}

impl fmt::Display for NbLabel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NbLabel::Tau => out.write_str("tau"),
            NbLabel::Named(n) => out.write_str(n),
        }
    }
}

/// Ill-formed neighbourhood terms.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("a neighbourhood term needs at least one label")]
    Empty,
    #[error("the term `{0}` is already negative and cannot be negated again")]
    DoubleNegation(String),
    #[error("the term `{0}` is negative and cannot be composed")]
    NegativeComposition(String),
}

/// A neighbourhood term: a nonempty multiset of labels (their
/// intersection), or the overline of such a multiset. Negation applies at
/// most once.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NbTerm {
    labels: Vec<NbLabel>,
    negative: bool,
}

impl NbTerm {
    /// The positive term of the given labels.
    pub fn positive(mut labels: Vec<NbLabel>) -> Result<NbTerm, TermError> {
        if labels.is_empty() {
            return Err(TermError::Empty);
        }
        labels.sort();
        Ok(NbTerm { labels, negative: false })
    }

    /// The positive term of a single label.
    pub fn label(l: NbLabel) -> NbTerm {
        NbTerm { labels: vec![l], negative: false }
    }

    pub fn named(name: &str) -> NbTerm {
        NbTerm::label(NbLabel::named(name))
    }

    pub fn tau() -> NbTerm {
        NbTerm::label(NbLabel::Tau)
    }

    pub fn labels(&self) -> &[NbLabel] {
        &self.labels
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// The overline of a positive term.
    pub fn negate(&self) -> Result<NbTerm, TermError> {
        if self.negative {
            return Err(TermError::DoubleNegation(self.to_string()));
        }
        Ok(NbTerm { labels: self.labels.clone(), negative: true })
    }

    /// The composition `ts` of two positive terms.
    pub fn compose(&self, other: &NbTerm) -> Result<NbTerm, TermError> {
        for t in [self, other] {
            if t.negative {
                return Err(TermError::NegativeComposition(t.to_string()));
            }
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        NbTerm::positive(labels)
    }

    fn mentions(&self, name: &str) -> bool {
        self.labels.iter().any(|l| matches!(l, NbLabel::Named(n) if n == name))
    }
}

impl fmt::Display for NbTerm {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        let body = body.join(".");
        match (self.negative, self.labels.len()) {
            (false, _) => out.write_str(&body),
            (true, 1) => write!(out, "~{body}"),
            (true, _) => write!(out, "~({body})"),
        }
    }
}

/// Formulas of the labelled language. The variant order is the display
/// order within a side.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelledFormula {
    /// `t ▷ x`, for a positive term `t`.
    PairOf(NbTerm, String),
    /// `x ∈ t` for a positive or negative term.
    MemberOf(String, NbTerm),
    /// `t ⊩∀ A`, for a positive term `t`.
    ForcesAll(NbTerm, Formula),
    /// `x : A`.
    WorldAt(String, Formula),
    /// `t̄ ⊩∃ A`, for a negative term `t̄`.
    ForcesEx(NbTerm, Formula),
}

impl LabelledFormula {
    /// Polarity constraints on the terms.
    pub fn is_well_formed(&self) -> bool {
        match self {
            LabelledFormula::WorldAt(..) | LabelledFormula::MemberOf(..) => true,
            LabelledFormula::ForcesAll(t, _) | LabelledFormula::PairOf(t, _) => !t.is_negative(),
            LabelledFormula::ForcesEx(t, _) => t.is_negative(),
        }
    }

    fn mentions(&self, name: &str) -> bool {
        match self {
            LabelledFormula::WorldAt(x, _) => x == name,
            LabelledFormula::ForcesAll(t, _) | LabelledFormula::ForcesEx(t, _) => t.mentions(name),
            LabelledFormula::MemberOf(x, t) | LabelledFormula::PairOf(t, x) => x == name || t.mentions(name),
        }
    }
}

fn fmt_body(out: &mut fmt::Formatter<'_>, f: &Formula) -> fmt::Result {
    let binary = matches!(f, Formula::And(..) | Formula::Or(..) | Formula::Imp(..)) && f.negated().is_none();
    if binary {
        write!(out, "({f})")
    } else {
        write!(out, "{f}")
    }
}

impl fmt::Display for LabelledFormula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelledFormula::WorldAt(x, f) => {
                write!(out, "{x}:")?;
                fmt_body(out, f)
            }
            LabelledFormula::ForcesAll(t, f) => {
                write!(out, "{t} |=A ")?;
                fmt_body(out, f)
            }
            LabelledFormula::ForcesEx(t, f) => {
                write!(out, "{t} |=E ")?;
                fmt_body(out, f)
            }
            LabelledFormula::MemberOf(x, t) => write!(out, "{x} in {t}"),
            LabelledFormula::PairOf(t, x) => write!(out, "{t} |> {x}"),
        }
    }
}

/// A labelled sequent: two multisets of labelled formulas, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LabelledSequent {
    antecedent: Vec<LabelledFormula>,
    succedent: Vec<LabelledFormula>,
}

fn insert_sorted(v: &mut Vec<LabelledFormula>, f: LabelledFormula) {
    let i = v.partition_point(|g| *g < f);
    v.insert(i, f);
}

fn remove_one(v: &mut Vec<LabelledFormula>, f: &LabelledFormula) -> bool {
    match v.binary_search(f) {
        Ok(i) => {
            v.remove(i);
            true
        }
        Err(_) => false,
    }
}

impl LabelledSequent {
    pub fn new(mut antecedent: Vec<LabelledFormula>, mut succedent: Vec<LabelledFormula>) -> LabelledSequent {
        antecedent.sort();
        succedent.sort();
        LabelledSequent { antecedent, succedent }
    }

    pub fn antecedent(&self) -> &[LabelledFormula] {
        &self.antecedent
    }

    pub fn succedent(&self) -> &[LabelledFormula] {
        &self.succedent
    }

    pub fn add_left(&mut self, f: LabelledFormula) {
        insert_sorted(&mut self.antecedent, f);
    }

    pub fn add_right(&mut self, f: LabelledFormula) {
        insert_sorted(&mut self.succedent, f);
    }

    /// Removes one occurrence; false if absent.
    pub fn remove_left(&mut self, f: &LabelledFormula) -> bool {
        remove_one(&mut self.antecedent, f)
    }

    pub fn remove_right(&mut self, f: &LabelledFormula) -> bool {
        remove_one(&mut self.succedent, f)
    }

    pub fn count_left(&self, f: &LabelledFormula) -> usize {
        self.antecedent.iter().filter(|g| *g == f).count()
    }

    pub fn has_left(&self, f: &LabelledFormula) -> bool {
        self.antecedent.binary_search(f).is_ok()
    }

    pub fn has_right(&self, f: &LabelledFormula) -> bool {
        self.succedent.binary_search(f).is_ok()
    }

    /// Number of formula occurrences.
    pub fn len(&self) -> usize {
        self.antecedent.len() + self.succedent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True if a world or neighbourhood label named `name` occurs.
    pub fn mentions(&self, name: &str) -> bool {
        self.antecedent.iter().chain(&self.succedent).any(|f| f.mentions(name))
    }
}

impl fmt::Display for LabelledSequent {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |v: &[LabelledFormula]| v.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ");
        let (a, s) = (side(&self.antecedent), side(&self.succedent));
        match (a.is_empty(), s.is_empty()) {
            (true, true) => out.write_str("=>"),
            (true, false) => write!(out, "=> {s}"),
            (false, true) => write!(out, "{a} =>"),
            (false, false) => write!(out, "{a} => {s}"),
        }
    }
}

/// Propositional rules of the labelled calculus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PropRule {
    AndL,
    AndR,
    OrL,
    OrR,
    ImpL,
    ImpR,
}

impl PropRule {
    fn left(self) -> bool {
        matches!(self, PropRule::AndL | PropRule::OrL | PropRule::ImpL)
    }

    fn of(rule: RuleId) -> Option<PropRule> {
        Some(match rule {
            RuleId::AndL => PropRule::AndL,
            RuleId::AndR => PropRule::AndR,
            RuleId::OrL => PropRule::OrL,
            RuleId::OrR => PropRule::OrR,
            RuleId::ImpL => PropRule::ImpL,
            RuleId::ImpR => PropRule::ImpR,
            _ => return None,
        })
    }

    /// Formulas added by each premiss, as (left, right), or `None` when the
    /// principal has the wrong shape.
    fn additions(self, f: &Formula) -> Option<Vec<(Vec<Formula>, Vec<Formula>)>> {
        let c = |x: &std::sync::Arc<Formula>| (**x).clone();
        Some(match (self, f) {
            (PropRule::AndL, Formula::And(a, b)) => vec![(vec![c(a), c(b)], vec![])],
            (PropRule::AndR, Formula::And(a, b)) => vec![(vec![], vec![c(a)]), (vec![], vec![c(b)])],
            (PropRule::OrL, Formula::Or(a, b)) => vec![(vec![c(a)], vec![]), (vec![c(b)], vec![])],
            (PropRule::OrR, Formula::Or(a, b)) => vec![(vec![], vec![c(a), c(b)])],
            (PropRule::ImpL, Formula::Imp(a, b)) => vec![(vec![], vec![c(a)]), (vec![c(b)], vec![])],
            (PropRule::ImpR, Formula::Imp(a, b)) => vec![(vec![c(a)], vec![c(b)])],
            _ => return None,
        })
    }
}

impl fmt::Display for PropRule {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(match self {
            PropRule::AndL => "L&",
            PropRule::AndR => "R&",
            PropRule::OrL => "L|",
            PropRule::OrR => "R|",
            PropRule::ImpL => "L->",
            PropRule::ImpR => "R->",
        })
    }
}

/// A rule application of the labelled calculus with its principal material
/// and fresh labels. Propositional and `L□`, `R⊩∀`, `L⊩∃` rules consume
/// their principal formula; all other rules keep it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Inference {
    /// `x:p` on both sides, `p` atomic.
    Init { x: String, atom: Formula },
    /// `x:⊥` on the left.
    BotL { x: String },
    /// `x:⊤` on the right.
    TopR { x: String },
    Prop { rule: PropRule, x: String, formula: Formula },
    /// `x:□A` on the left; `fresh` names the new neighbourhood.
    BoxL { x: String, formula: Formula, fresh: String },
    /// `t ▷ x` on the left and `x:□A` on the right.
    BoxR { term: NbTerm, x: String, formula: Formula },
    /// Axiom `t ▷ x, y ∈ t̄`.
    M { term: NbTerm, x: String, y: String },
    /// Adds `τ ▷ x` for a label `x` of the conclusion.
    N { x: String },
    /// From `t ▷ x` and `s ▷ x`, adds `ts ▷ x`.
    C { x: String, t: NbTerm, s: NbTerm },
    /// From `x ∈ t` and `t ⊩∀ A`, adds `x:A` on the left.
    AllL { x: String, term: NbTerm, formula: Formula },
    /// `t ⊩∀ A` on the right, with a fresh world `y`.
    AllR { term: NbTerm, formula: Formula, fresh: String },
    /// `t̄ ⊩∃ A` on the left (`term` is the negative `t̄`), with a fresh `y`.
    ExL { term: NbTerm, formula: Formula, fresh: String },
    /// From `x ∈ t̄` and `t̄ ⊩∃ A` on the right, adds `x:A` on the right.
    ExR { x: String, term: NbTerm, formula: Formula },
    /// From `x ∈ ts`, adds `x ∈ t` and `x ∈ s`.
    Dec { x: String, t: NbTerm, s: NbTerm },
    /// From `x ∈ (ts)‾`, branches on `x ∈ t̄` and `x ∈ s̄`.
    DecBar { x: String, t: NbTerm, s: NbTerm },
    /// Axiom `x ∈ τ̄`.
    TauBar { x: String },
}

impl Inference {
    pub fn name(&self) -> String {
        match self {
            Inference::Init { .. } => "init".into(),
            Inference::BotL { .. } => "L-false".into(),
            Inference::TopR { .. } => "R-true".into(),
            Inference::Prop { rule, .. } => rule.to_string(),
            Inference::BoxL { .. } => "L[]".into(),
            Inference::BoxR { .. } => "R[]".into(),
            Inference::M { .. } => "M".into(),
            Inference::N { .. } => "N".into(),
            Inference::C { .. } => "C".into(),
            Inference::AllL { .. } => "L|=A".into(),
            Inference::AllR { .. } => "R|=A".into(),
            Inference::ExL { .. } => "L|=E".into(),
            Inference::ExR { .. } => "R|=E".into(),
            Inference::Dec { .. } => "dec".into(),
            Inference::DecBar { .. } => "~dec".into(),
            Inference::TauBar { .. } => "~tau".into(),
        }
    }

    /// True for rules without premisses.
    pub fn is_axiom(&self) -> bool {
        matches!(
            self,
            Inference::Init { .. } | Inference::BotL { .. } | Inference::TopR { .. } | Inference::M { .. } | Inference::TauBar { .. }
        )
    }

    /// The principal material, for display.
    pub fn principal(&self) -> String {
        use LabelledFormula as L;
        let w = |x: &str, f: &Formula| L::WorldAt(x.to_string(), f.clone()).to_string();
        match self {
            Inference::Init { x, atom } => w(x, atom),
            Inference::BotL { x } => w(x, &Formula::Bottom),
            Inference::TopR { x } => w(x, &Formula::Top),
            Inference::Prop { x, formula, .. } => w(x, formula),
            Inference::BoxL { x, formula, fresh } => format!("{}; fresh {fresh}", w(x, formula)),
            Inference::BoxR { term, x, formula } => format!("{}; {}", L::PairOf(term.clone(), x.clone()), w(x, formula)),
            Inference::M { term, x, y } => format!(
                "{}; {y} in {}",
                L::PairOf(term.clone(), x.clone()),
                term.negate().map(|t| t.to_string()).unwrap_or_else(|_| term.to_string())
            ),
            Inference::N { x } => x.clone(),
            Inference::C { x, t, s } => format!("{t} |> {x}; {s} |> {x}"),
            Inference::AllL { x, term, formula } => format!("{x} in {term}; {}", L::ForcesAll(term.clone(), formula.clone())),
            Inference::AllR { term, formula, fresh } => {
                format!("{}; fresh {fresh}", L::ForcesAll(term.clone(), formula.clone()))
            }
            Inference::ExL { term, formula, fresh } => {
                format!("{}; fresh {fresh}", L::ForcesEx(term.clone(), formula.clone()))
            }
            Inference::ExR { x, term, formula } => format!("{x} in {term}; {}", L::ForcesEx(term.clone(), formula.clone())),
            Inference::Dec { x, t, s } => format!("{x} in {}", t.compose(s).map(|u| u.to_string()).unwrap_or_default()),
            Inference::DecBar { x, t, s } => format!(
                "{x} in {}",
                t.compose(s).and_then(|u| u.negate()).map(|u| u.to_string()).unwrap_or_default()
            ),
            Inference::TauBar { x } => format!("{x} in ~tau"),
        }
    }
}

/// A labelled derivation tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledDerivation {
    pub conclusion: LabelledSequent,
    pub inference: Inference,
    pub premisses: Vec<LabelledDerivation>,
}

#[derive(Serialize)]
struct LabelledJson {
    rule: String,
    conclusion: String,
    principal: String,
    premisses: Vec<LabelledJson>,
}

impl LabelledDerivation {
    pub fn size(&self) -> usize {
        1 + self.premisses.iter().map(LabelledDerivation::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premisses.iter().map(LabelledDerivation::height).max().unwrap_or(0)
    }

    /// All nodes in pre-order.
    pub fn nodes(&self) -> Vec<&LabelledDerivation> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(d) = stack.pop() {
            out.push(d);
            stack.extend(d.premisses.iter().rev());
        }
        out
    }

    fn json(&self) -> LabelledJson {
        LabelledJson {
            rule: self.inference.name(),
            conclusion: self.conclusion.to_string(),
            principal: self.inference.principal(),
            premisses: self.premisses.iter().map(LabelledDerivation::json).collect(),
        }
    }

    /// Machine-readable tree `{rule, conclusion, principal, premisses}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.json()).expect("labelled derivations serialise")
    }

    /// Indented text rendering, one node per line, root first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self, 0usize)];
        while let Some((d, depth)) = stack.pop() {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("{}   [{}]\n", d.conclusion, d.inference.name()));
            for p in d.premisses.iter().rev() {
                stack.push((p, depth + 1));
            }
        }
        out
    }
}

/// A rejected labelled derivation: the path of premiss indices from the
/// root to the offending node, and the reason.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("labelled derivation rejected at {path:?}: {reason}")]
pub struct LabelledError {
    pub path: Vec<usize>,
    pub reason: String,
}

/// Checks every node of `d` against the labelled rules of the cube logic
/// `l`: each node must instantiate a rule whose principal material occurs
/// in its conclusion, whose fresh labels do not occur in the conclusion,
/// and whose premisses are exactly the ones listed; leaves must be axioms.
pub fn check_labelled(d: &LabelledDerivation, l: &LogicSpec) -> Result<(), LabelledError> {
    let mut stack = vec![(d, Vec::new())];
    while let Some((node, path)) = stack.pop() {
        let fail = |reason: String| LabelledError { path: path.clone(), reason };
        let s = &node.conclusion;
        if let Some(f) = s.antecedent().iter().chain(s.succedent()).find(|f| !f.is_well_formed()) {
            return Err(fail(format!("ill-formed labelled formula `{f}`")));
        }
        let expected = rule_premisses(s, &node.inference, l).map_err(fail)?;
        if expected.len() != node.premisses.len() {
            return Err(fail(format!(
                "{} needs {} premisses, found {}",
                node.inference.name(),
                expected.len(),
                node.premisses.len()
            )));
        }
        for (i, (e, p)) in expected.iter().zip(&node.premisses).enumerate() {
            if *e != p.conclusion {
                return Err(fail(format!(
                    "premiss {} of {} should be `{e}`, found `{}`",
                    i + 1,
                    node.inference.name(),
                    p.conclusion
                )));
            }
            let mut sub = path.clone();
            sub.push(i);
            stack.push((p, sub));
        }
    }
    Ok(())
}

/// The premisses of `inference` applied to `s`, or why it does not apply.
fn rule_premisses(s: &LabelledSequent, inference: &Inference, l: &LogicSpec) -> Result<Vec<LabelledSequent>, String> {
    use LabelledFormula as L;
    let need_left = |f: &L| if s.has_left(f) { Ok(()) } else { Err(format!("`{f}` is not on the left of `{s}`")) };
    let need_right = |f: &L| if s.has_right(f) { Ok(()) } else { Err(format!("`{f}` is not on the right of `{s}`")) };
    let need_positive = |t: &NbTerm| if t.is_negative() { Err(format!("term `{t}` must be positive")) } else { Ok(()) };
    let need_fresh = |name: &str| {
        if s.mentions(name) {
            Err(format!("label `{name}` is not fresh in `{s}`"))
        } else {
            Ok(())
        }
    };
    let term_err = |e: TermError| e.to_string();
    let plus = |left: Vec<L>, right: Vec<L>| {
        let mut out = s.clone();
        for f in left {
            out.add_left(f);
        }
        for f in right {
            out.add_right(f);
        }
        out
    };
    let w = |x: &str, f: &Formula| L::WorldAt(x.to_string(), f.clone());
    match inference {
        Inference::Init { x, atom } => {
            if !matches!(atom, Formula::Atom(_)) {
                return Err(format!("init needs an atom, found `{atom}`"));
            }
            need_left(&w(x, atom))?;
            need_right(&w(x, atom))?;
            Ok(vec![])
        }
        Inference::BotL { x } => need_left(&w(x, &Formula::Bottom)).map(|()| vec![]),
        Inference::TopR { x } => need_right(&w(x, &Formula::Top)).map(|()| vec![]),
        Inference::Prop { rule, x, formula } => {
            let adds = rule
                .additions(formula)
                .ok_or_else(|| format!("`{formula}` is not principal for {rule}"))?;
            let principal = w(x, formula);
            let mut base = s.clone();
            let present = if rule.left() { base.remove_left(&principal) } else { base.remove_right(&principal) };
            if !present {
                return Err(format!("`{principal}` does not occur on the principal side of `{s}`"));
            }
            Ok(adds
                .into_iter()
                .map(|(left, right)| {
                    let mut out = base.clone();
                    for f in left {
                        out.add_left(w(x, &f));
                    }
                    for f in right {
                        out.add_right(w(x, &f));
                    }
                    out
                })
                .collect())
        }
        Inference::BoxL { x, formula, fresh } => {
            let Formula::Box(a) = formula else {
                return Err(format!("L[] needs a boxed formula, found `{formula}`"));
            };
            need_left(&w(x, formula))?;
            need_fresh(fresh)?;
            let t = NbTerm::named(fresh);
            let mut out = s.clone();
            out.remove_left(&w(x, formula));
            out.add_left(L::PairOf(t.clone(), x.clone()));
            out.add_left(L::ForcesAll(t.clone(), (**a).clone()));
            out.add_right(L::ForcesEx(t.negate().map_err(term_err)?, (**a).clone()));
            Ok(vec![out])
        }
        Inference::BoxR { term, x, formula } => {
            let Formula::Box(a) = formula else {
                return Err(format!("R[] needs a boxed formula, found `{formula}`"));
            };
            need_positive(term)?;
            need_left(&L::PairOf(term.clone(), x.clone()))?;
            need_right(&w(x, formula))?;
            Ok(vec![
                plus(vec![], vec![L::ForcesAll(term.clone(), (**a).clone())]),
                plus(vec![L::ForcesEx(term.negate().map_err(term_err)?, (**a).clone())], vec![]),
            ])
        }
        Inference::M { term, x, y } => {
            if !l.monotonic {
                return Err(format!("M is not a rule of {}", l.name()));
            }
            need_positive(term)?;
            need_left(&L::PairOf(term.clone(), x.clone()))?;
            need_left(&L::MemberOf(y.clone(), term.negate().map_err(term_err)?))?;
            Ok(vec![])
        }
        Inference::N { x } => {
            if !l.has_n {
                return Err(format!("N is not a rule of {}", l.name()));
            }
            if !s.mentions(x) {
                return Err(format!("`{x}` does not occur in `{s}`"));
            }
            Ok(vec![plus(vec![L::PairOf(NbTerm::tau(), x.clone())], vec![])])
        }
        Inference::C { x, t, s: u } => {
            if !l.has_c {
                return Err(format!("C is not a rule of {}", l.name()));
            }
            let (ft, fu) = (L::PairOf(t.clone(), x.clone()), L::PairOf(u.clone(), x.clone()));
            need_left(&ft)?;
            need_left(&fu)?;
            if ft == fu && s.count_left(&ft) < 2 {
                return Err(format!("C needs two occurrences of `{ft}`"));
            }
            Ok(vec![plus(vec![L::PairOf(t.compose(u).map_err(term_err)?, x.clone())], vec![])])
        }
        Inference::AllL { x, term, formula } => {
            need_positive(term)?;
            need_left(&L::MemberOf(x.clone(), term.clone()))?;
            need_left(&L::ForcesAll(term.clone(), formula.clone()))?;
            Ok(vec![plus(vec![w(x, formula)], vec![])])
        }
        Inference::AllR { term, formula, fresh } => {
            need_positive(term)?;
            let principal = L::ForcesAll(term.clone(), formula.clone());
            need_right(&principal)?;
            need_fresh(fresh)?;
            let mut out = s.clone();
            out.remove_right(&principal);
            out.add_left(L::MemberOf(fresh.clone(), term.clone()));
            out.add_right(w(fresh, formula));
            Ok(vec![out])
        }
        Inference::ExL { term, formula, fresh } => {
            if !term.is_negative() {
                return Err(format!("term `{term}` must be negative"));
            }
            let principal = L::ForcesEx(term.clone(), formula.clone());
            need_left(&principal)?;
            need_fresh(fresh)?;
            let mut out = s.clone();
            out.remove_left(&principal);
            out.add_left(L::MemberOf(fresh.clone(), term.clone()));
            out.add_left(w(fresh, formula));
            Ok(vec![out])
        }
        Inference::ExR { x, term, formula } => {
            if !term.is_negative() {
                return Err(format!("term `{term}` must be negative"));
            }
            need_left(&L::MemberOf(x.clone(), term.clone()))?;
            need_right(&L::ForcesEx(term.clone(), formula.clone()))?;
            Ok(vec![plus(vec![], vec![w(x, formula)])])
        }
        Inference::Dec { x, t, s: u } => {
            need_left(&L::MemberOf(x.clone(), t.compose(u).map_err(term_err)?))?;
            Ok(vec![plus(vec![L::MemberOf(x.clone(), t.clone()), L::MemberOf(x.clone(), u.clone())], vec![])])
        }
        Inference::DecBar { x, t, s: u } => {
            let whole = t.compose(u).and_then(|v| v.negate()).map_err(term_err)?;
            need_left(&L::MemberOf(x.clone(), whole))?;
            Ok(vec![
                plus(vec![L::MemberOf(x.clone(), t.negate().map_err(term_err)?)], vec![]),
                plus(vec![L::MemberOf(x.clone(), u.negate().map_err(term_err)?)], vec![]),
            ])
        }
        Inference::TauBar { x } => {
            need_left(&L::MemberOf(x.clone(), NbTerm::tau().negate().map_err(term_err)?))?;
            Ok(vec![])
        }
    }
}

/// Translation failures.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("{0} is outside the classical cube; the labelled calculi cover E, M, C, N combinations only")]
    NotCube(String),
    #[error("not a derivation of {logic}: {reason}")]
    InvalidDerivation { logic: String, reason: String },
    #[error("cannot translate: {0}")]
    Unsupported(String),
}

/// The labelled image of one block: its members with the label standing
/// for each, and its term (the composition of those labels).
#[derive(Clone, Debug)]
struct BlockImage {
    block: Block,
    members: Vec<(NbLabel, Formula)>,
    term: NbTerm,
}

fn root_images(h: &Hypersequent) -> BTreeMap<usize, Vec<BlockImage>> {
    let mut out = BTreeMap::new();
    for c in h.components() {
        let mut images = Vec::new();
        for (i, b) in c.sequent.blocks().iter().enumerate() {
            let members: Vec<(NbLabel, Formula)> = if b.members() == [Formula::Top] {
                vec![(NbLabel::Tau, Formula::Top)]
            } else {
                b.members()
                    .iter()
                    .enumerate()
                    .map(|(j, a)| (NbLabel::Named(format!("a{}_{}_{}", c.id, i + 1, j + 1)), a.clone()))
                    .collect()
            };
            let term = NbTerm::positive(members.iter().map(|(l, _)| l.clone()).collect()).expect("blocks are nonempty");
            images.push(BlockImage { block: b.clone(), members, term });
        }
        out.insert(c.id, images);
    }
    out
}

fn world(id: usize) -> String {
    format!("x{id}")
}

fn image_sequent(h: &Hypersequent, images: &BTreeMap<usize, Vec<BlockImage>>, origins: &BTreeMap<usize, NbTerm>) -> LabelledSequent {
    use LabelledFormula as L;
    let mut out = LabelledSequent::default();
    for (k, c) in h.components().iter().enumerate() {
        let x = world(c.id);
        if k > 0 {
            if let Some(t) = origins.get(&c.id) {
                out.add_left(L::MemberOf(x.clone(), t.clone()));
            }
        }
        for img in &images[&c.id] {
            out.add_left(L::PairOf(img.term.clone(), x.clone()));
            for (label, a) in &img.members {
                let t = NbTerm::label(label.clone());
                out.add_left(L::ForcesAll(t.clone(), a.clone()));
                out.add_right(L::ForcesEx(t.negate().expect("labels are positive"), a.clone()));
            }
        }
        for a in c.sequent.antecedent() {
            out.add_left(L::WorldAt(x.clone(), a.clone()));
        }
        for a in c.sequent.succedent() {
            out.add_right(L::WorldAt(x.clone(), a.clone()));
        }
    }
    out
}

fn require_cube(l: &LogicSpec) -> Result<(), TranslateError> {
    if l.is_cube() {
        Ok(())
    } else {
        Err(TranslateError::NotCube(l.name()))
    }
}

/// The labelled image of `h`: component `k` becomes world `x{k}`, each
/// block a term over per-member labels with its `▷`, `⊩∀` and `⊩∃`
/// formulas. Non-root components carry no membership formula; see
/// [`translate_hypersequent_with_origins`].
pub fn translate_hypersequent(h: &Hypersequent, l: &LogicSpec) -> Result<LabelledSequent, TranslateError> {
    translate_hypersequent_with_origins(h, l, &BTreeMap::new())
}

/// As [`translate_hypersequent`], adding `x_k ∈ b_k` for every non-root
/// component `k` with a recorded creating term `b_k` (positive or negative).
pub fn translate_hypersequent_with_origins(
    h: &Hypersequent,
    l: &LogicSpec,
    origins: &BTreeMap<usize, NbTerm>,
) -> Result<LabelledSequent, TranslateError> {
    require_cube(l)?;
    Ok(image_sequent(h, &root_images(h), origins))
}

/// Replaces every initial leaf on a compound formula `A` (present on both
/// sides of a component) by a derivation whose leaves are initial on atoms,
/// `⊥` on the left or `⊤` on the right.
pub fn atomise_initials(d: &Derivation, l: &LogicSpec) -> Derivation {
    if d.premisses.is_empty() {
        if let (RuleId::Init, Principal::Formula(f)) = (d.rule, &d.principal) {
            return identity(&d.conclusion, d.component, f, l);
        }
        return d.clone();
    }
    Derivation {
        premisses: d.premisses.iter().map(|p| atomise_initials(p, l)).collect(),
        ..d.clone()
    }
}

/// A derivation of `h`, in which `f` occurs on both sides of component `c`,
/// with atomic initial leaves.
fn identity(h: &Hypersequent, c: usize, f: &Formula, l: &LogicSpec) -> Derivation {
    let node = |h: &Hypersequent, rule: RuleId, principal: Principal, premisses: Vec<Derivation>| Derivation {
        conclusion: h.clone(),
        rule,
        component: c,
        principal,
        premisses,
    };
    let apply = |h: &Hypersequent, rule: RuleId, principal: &Principal| {
        calculus::premisses(h, rule, c, principal).expect("identity expansion applies")
    };
    let pf = Principal::Formula(f.clone());
    match f {
        Formula::Bottom => node(h, RuleId::BotL, pf, vec![]),
        Formula::Top => node(h, RuleId::TopR, pf, vec![]),
        Formula::Atom(_) => node(h, RuleId::Init, pf, vec![]),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
            // The one-premiss rule first, then the branching rule; each
            // branch has one immediate subformula on both sides.
            let (first, second) = match f {
                Formula::And(..) => (RuleId::AndL, RuleId::AndR),
                Formula::Or(..) => (RuleId::OrR, RuleId::OrL),
                _ => (RuleId::ImpR, RuleId::ImpL),
            };
            let mid = apply(h, first, &pf).remove(0);
            let branches = apply(&mid, second, &pf);
            let subs = [a, b];
            let inner = branches.iter().zip(subs).map(|(p, s)| identity(p, c, s, l)).collect();
            node(h, first, pf.clone(), vec![node(&mid, second, pf, inner)])
        }
        Formula::Box(a) => {
            let mid = apply(h, RuleId::BoxL, &pf).remove(0);
            let rule = if l.monotonic { RuleId::BoxRm } else { RuleId::BoxR };
            let principal = Principal::BlockBox(Block::singleton((**a).clone()), f.clone());
            let new_id = mid.next_id();
            let inner = apply(&mid, rule, &principal).iter().map(|p| identity(p, new_id, a, l)).collect();
            node(h, RuleId::BoxL, pf, vec![node(&mid, rule, principal, inner)])
        }
    }
}

/// Per-branch translation state: the current labelled sequent, the world
/// label and block images of each component, and the labelled formulas
/// already consumed on this branch (as (left side, world, formula)).
#[derive(Clone, Debug)]
struct Branch {
    seq: LabelledSequent,
    worlds: BTreeMap<usize, String>,
    images: BTreeMap<usize, Vec<BlockImage>>,
    spent: BTreeSet<(bool, String, Formula)>,
}

impl Branch {
    fn world(&self, id: usize) -> Result<&String, TranslateError> {
        self.worlds
            .get(&id)
            .ok_or_else(|| TranslateError::Unsupported(format!("component {id} has no world label")))
    }

    fn image(&self, id: usize, b: &Block) -> Result<&BlockImage, TranslateError> {
        self.images
            .get(&id)
            .and_then(|v| v.iter().find(|i| i.block == *b))
            .ok_or_else(|| TranslateError::Unsupported(format!("block {b} of component {id} has no labelled image")))
    }

    /// A hypersequent formula is accounted for when its image is present
    /// or was consumed on this branch; `⊤` on the left and `⊥` on the right
    /// are inert and need no image.
    fn accounted(&self, left: bool, x: &str, f: &Formula) -> bool {
        let lf = LabelledFormula::WorldAt(x.to_string(), f.clone());
        let present = if left { self.seq.has_left(&lf) } else { self.seq.has_right(&lf) };
        present
            || self.spent.contains(&(left, x.to_string(), f.clone()))
            || (left && *f == Formula::Top)
            || (!left && *f == Formula::Bottom)
    }
}

struct Translator<'a> {
    l: &'a LogicSpec,
    next_nb: usize,
}

fn step(conclusion: &LabelledSequent, inference: Inference, premisses: Vec<LabelledDerivation>) -> LabelledDerivation {
    LabelledDerivation { conclusion: conclusion.clone(), inference, premisses }
}

impl Translator<'_> {
    fn fresh_nb(&mut self, seq: &LabelledSequent) -> String {
        loop {
            self.next_nb += 1;
            let name = format!("n{}", self.next_nb);
            if !seq.mentions(&name) {
                return name;
            }
        }
    }

    /// Premisses of `d` in the calculus order of its rule.
    fn hyp_premisses<'d>(&self, d: &'d Derivation) -> Result<Vec<&'d Derivation>, TranslateError> {
        let expected = calculus::premisses(&d.conclusion, d.rule, d.component, &d.principal)
            .ok_or_else(|| TranslateError::Unsupported(format!("rule {} does not apply at {}", d.rule, d.conclusion)))?;
        expected
            .iter()
            .map(|e| {
                d.premisses
                    .iter()
                    .find(|p| p.conclusion == *e)
                    .ok_or_else(|| TranslateError::Unsupported(format!("missing premiss {e} of {}", d.rule)))
            })
            .collect()
    }

    fn node(&mut self, d: &Derivation, b: Branch) -> Result<LabelledDerivation, TranslateError> {
        use LabelledFormula as L;
        let c = d.component;
        match (d.rule, &d.principal) {
            (RuleId::Init | RuleId::BotL | RuleId::TopR, Principal::Formula(f)) => {
                let x = b.world(c)?.clone();
                let missing = |lf: &L| TranslateError::Unsupported(format!("initial formula `{lf}` missing from `{}`", b.seq));
                let inference = match (d.rule, f) {
                    (RuleId::BotL, _) | (RuleId::Init, Formula::Bottom) => {
                        let lf = L::WorldAt(x.clone(), Formula::Bottom);
                        b.seq.has_left(&lf).then_some(Inference::BotL { x }).ok_or_else(|| missing(&lf))?
                    }
                    (RuleId::TopR, _) | (RuleId::Init, Formula::Top) => {
                        let lf = L::WorldAt(x.clone(), Formula::Top);
                        b.seq.has_right(&lf).then_some(Inference::TopR { x }).ok_or_else(|| missing(&lf))?
                    }
                    (_, Formula::Atom(_)) => {
                        let lf = L::WorldAt(x.clone(), f.clone());
                        if !(b.seq.has_left(&lf) && b.seq.has_right(&lf)) {
                            return Err(missing(&lf));
                        }
                        Inference::Init { x, atom: f.clone() }
                    }
                    _ => return self.node(&identity(&d.conclusion, c, f, self.l), b),
                };
                Ok(step(&b.seq, inference, vec![]))
            }
            (rule, Principal::Formula(f)) if PropRule::of(rule).is_some() => {
                let pr = PropRule::of(rule).expect("propositional");
                let x = b.world(c)?.clone();
                let adds = pr
                    .additions(f)
                    .ok_or_else(|| TranslateError::Unsupported(format!("`{f}` is not principal for {rule}")))?;
                let hyps = self.hyp_premisses(d)?;
                let lf = L::WorldAt(x.clone(), f.clone());
                let present = if pr.left() { b.seq.has_left(&lf) } else { b.seq.has_right(&lf) };
                if !present {
                    // Already decomposed on this branch: follow a premiss
                    // whose material is already accounted for.
                    let i = adds
                        .iter()
                        .position(|(left, right)| {
                            left.iter().all(|a| b.accounted(true, &x, a)) && right.iter().all(|a| b.accounted(false, &x, a))
                        })
                        .ok_or_else(|| TranslateError::Unsupported(format!("`{lf}` is neither present nor decomposed")))?;
                    return self.node(hyps[i], b);
                }
                let mut premisses = Vec::new();
                for ((left, right), h) in adds.iter().zip(hyps) {
                    let mut nb = b.clone();
                    if pr.left() {
                        nb.seq.remove_left(&lf);
                    } else {
                        nb.seq.remove_right(&lf);
                    }
                    nb.spent.insert((pr.left(), x.clone(), f.clone()));
                    for a in left {
                        nb.seq.add_left(L::WorldAt(x.clone(), a.clone()));
                    }
                    for a in right {
                        nb.seq.add_right(L::WorldAt(x.clone(), a.clone()));
                    }
                    premisses.push(self.node(h, nb)?);
                }
                Ok(step(&b.seq, Inference::Prop { rule: pr, x, formula: f.clone() }, premisses))
            }
            (RuleId::BoxL, Principal::Formula(f @ Formula::Box(a))) => {
                let x = b.world(c)?.clone();
                let hyps = self.hyp_premisses(d)?;
                let lf = L::WorldAt(x.clone(), f.clone());
                let block = Block::singleton((**a).clone());
                if !b.seq.has_left(&lf) {
                    if b.spent.contains(&(true, x.clone(), f.clone())) && b.image(c, &block).is_ok() {
                        return self.node(hyps[0], b);
                    }
                    return Err(TranslateError::Unsupported(format!("`{lf}` is neither present nor decomposed")));
                }
                let fresh = self.fresh_nb(&b.seq);
                let t = NbTerm::named(&fresh);
                let mut nb = b.clone();
                nb.seq.remove_left(&lf);
                nb.spent.insert((true, x.clone(), f.clone()));
                nb.seq.add_left(L::PairOf(t.clone(), x.clone()));
                nb.seq.add_left(L::ForcesAll(t.clone(), (**a).clone()));
                nb.seq.add_right(L::ForcesEx(t.negate().expect("positive"), (**a).clone()));
                nb.images.entry(c).or_default().push(BlockImage {
                    block,
                    members: vec![(NbLabel::Named(fresh.clone()), (**a).clone())],
                    term: t,
                });
                let p = self.node(hyps[0], nb)?;
                Ok(step(&b.seq, Inference::BoxL { x, formula: f.clone(), fresh }, vec![p]))
            }
            (RuleId::C, Principal::Blocks(bs)) if bs.len() == 2 => {
                let x = b.world(c)?.clone();
                let hyps = self.hyp_premisses(d)?;
                let images = b.images.get(&c).cloned().unwrap_or_default();
                let i = images.iter().position(|m| m.block == bs[0]);
                let j = images.iter().enumerate().position(|(k, m)| m.block == bs[1] && Some(k) != i);
                let (Some(i), Some(j)) = (i, j) else {
                    return Err(TranslateError::Unsupported(format!("blocks {} and {} lack labelled images", bs[0], bs[1])));
                };
                let (t, s) = (images[i].term.clone(), images[j].term.clone());
                let ts = t.compose(&s).expect("positive terms");
                let mut nb = b.clone();
                nb.seq.add_left(L::PairOf(ts.clone(), x.clone()));
                let mut members = images[i].members.clone();
                members.extend(images[j].members.iter().cloned());
                nb.images
                    .entry(c)
                    .or_default()
                    .push(BlockImage { block: bs[0].union(&bs[1]), members, term: ts });
                let p = self.node(hyps[0], nb)?;
                Ok(step(&b.seq, Inference::C { x, t, s }, vec![p]))
            }
            (RuleId::N, Principal::Nothing) => {
                let x = b.world(c)?.clone();
                if !b.seq.mentions(&x) {
                    return Err(TranslateError::Unsupported(format!("N on component {c}, whose label {x} does not occur")));
                }
                let hyps = self.hyp_premisses(d)?;
                let mut nb = b.clone();
                nb.seq.add_left(L::PairOf(NbTerm::tau(), x.clone()));
                nb.images.entry(c).or_default().push(BlockImage {
                    block: Block::singleton(Formula::Top),
                    members: vec![(NbLabel::Tau, Formula::Top)],
                    term: NbTerm::tau(),
                });
                let p = self.node(hyps[0], nb)?;
                Ok(step(&b.seq, Inference::N { x }, vec![p]))
            }
            (RuleId::BoxR | RuleId::BoxRm, Principal::BlockBox(block, f @ Formula::Box(goal))) => {
                self.box_right(d, b, block, f, goal)
            }
            (rule, _) => Err(TranslateError::Unsupported(format!("rule {rule} is outside the classical cube"))),
        }
    }

    /// `R□`: the labelled `R□`, then on the left premiss `R⊩∀`, `dec` down to
    /// single labels and `L⊩∀` for each member, continuing with the premiss
    /// that opens the new component; on the right premiss `L⊩∃`, then the
    /// `M` axiom (monotonic) or `dec̄` down to single labels, each closed by
    /// `τ̄∅` or continued by `R⊩∃` into the matching premiss.
    fn box_right(
        &mut self,
        d: &Derivation,
        b: Branch,
        block: &Block,
        f: &Formula,
        goal: &Formula,
    ) -> Result<LabelledDerivation, TranslateError> {
        use LabelledFormula as L;
        let c = d.component;
        let x = b.world(c)?.clone();
        let img = b.image(c, block)?.clone();
        let t = img.term.clone();
        for (ok, lf) in [
            (b.seq.has_left(&L::PairOf(t.clone(), x.clone())), L::PairOf(t.clone(), x.clone())),
            (b.seq.has_right(&L::WorldAt(x.clone(), f.clone())), L::WorldAt(x.clone(), f.clone())),
        ] {
            if !ok {
                return Err(TranslateError::Unsupported(format!("`{lf}` missing from `{}`", b.seq)));
            }
        }
        let hyps = self.hyp_premisses(d)?;
        let new_id = d.conclusion.next_id();
        let mut y = world(new_id);
        while b.seq.mentions(&y) {
            y.push('\'');
        }
        let enter = |seq: LabelledSequent| {
            let mut nb = b.clone();
            nb.seq = seq;
            nb.worlds.insert(new_id, y.clone());
            nb.images.insert(new_id, Vec::new());
            nb
        };

        // Left premiss.
        let mut s1 = b.seq.clone();
        s1.add_right(L::ForcesAll(t.clone(), goal.clone()));
        let mut chain: Vec<(LabelledSequent, Inference)> = Vec::new();
        let mut cur = s1.clone();
        chain.push((cur.clone(), Inference::AllR { term: t.clone(), formula: goal.clone(), fresh: y.clone() }));
        cur.remove_right(&L::ForcesAll(t.clone(), goal.clone()));
        cur.add_left(L::MemberOf(y.clone(), t.clone()));
        cur.add_right(L::WorldAt(y.clone(), goal.clone()));
        let mut rest = t.clone();
        while rest.labels().len() > 1 {
            let head = NbTerm::label(rest.labels()[0].clone());
            let tail = NbTerm::positive(rest.labels()[1..].to_vec()).expect("nonempty");
            chain.push((cur.clone(), Inference::Dec { x: y.clone(), t: head.clone(), s: tail.clone() }));
            cur.add_left(L::MemberOf(y.clone(), head));
            cur.add_left(L::MemberOf(y.clone(), tail.clone()));
            rest = tail;
        }
        for (label, a) in &img.members {
            let lt = NbTerm::label(label.clone());
            if cur.has_left(&L::ForcesAll(lt.clone(), a.clone())) {
                chain.push((cur.clone(), Inference::AllL { x: y.clone(), term: lt, formula: a.clone() }));
                cur.add_left(L::WorldAt(y.clone(), a.clone()));
            }
        }
        let mut left = self.node(hyps[0], enter(cur))?;
        for (seq, inference) in chain.into_iter().rev() {
            left = step(&seq, inference, vec![left]);
        }

        // Right premiss.
        let tbar = t.negate().expect("positive");
        let mut s2 = b.seq.clone();
        s2.add_left(L::ForcesEx(tbar.clone(), goal.clone()));
        let mut after = s2.clone();
        after.remove_left(&L::ForcesEx(tbar.clone(), goal.clone()));
        after.add_left(L::MemberOf(y.clone(), tbar.clone()));
        after.add_left(L::WorldAt(y.clone(), goal.clone()));
        let inner = if d.rule == RuleId::BoxRm {
            step(&after, Inference::M { term: t.clone(), x: x.clone(), y: y.clone() }, vec![])
        } else {
            self.dec_bar(d, &hyps, &img, &y, &t, after, goal, &enter)?
        };
        let right = step(&s2, Inference::ExL { term: tbar, formula: goal.clone(), fresh: y.clone() }, vec![inner]);

        Ok(step(&b.seq, Inference::BoxR { term: t, x, formula: f.clone() }, vec![left, right]))
    }

    #[allow(clippy::too_many_arguments)]
    fn dec_bar(
        &mut self,
        d: &Derivation,
        hyps: &[&Derivation],
        img: &BlockImage,
        y: &str,
        term: &NbTerm,
        seq: LabelledSequent,
        goal: &Formula,
        enter: &dyn Fn(LabelledSequent) -> Branch,
    ) -> Result<LabelledDerivation, TranslateError> {
        use LabelledFormula as L;
        if term.labels().len() > 1 {
            let head = NbTerm::label(term.labels()[0].clone());
            let tail = NbTerm::positive(term.labels()[1..].to_vec()).expect("nonempty");
            let mut premisses = Vec::new();
            for part in [&head, &tail] {
                let mut s = seq.clone();
                s.add_left(L::MemberOf(y.to_string(), part.negate().expect("positive")));
                premisses.push(self.dec_bar(d, hyps, img, y, part, s, goal, enter)?);
            }
            return Ok(step(&seq, Inference::DecBar { x: y.to_string(), t: head, s: tail }, premisses));
        }
        let label = &term.labels()[0];
        if *label == NbLabel::Tau {
            return Ok(step(&seq, Inference::TauBar { x: y.to_string() }, vec![]));
        }
        let (_, a) = img
            .members
            .iter()
            .find(|(l, _)| l == label)
            .ok_or_else(|| TranslateError::Unsupported(format!("label {label} has no member formula")))?;
        let tbar = term.negate().expect("positive");
        if !seq.has_right(&L::ForcesEx(tbar.clone(), a.clone())) {
            return Err(TranslateError::Unsupported(format!("`{tbar} |=E {a}` missing from `{seq}`")));
        }
        let new_id = d.conclusion.next_id();
        let wanted = crate::hypersequent::Sequent::new(vec![goal.clone()], vec![], vec![a.clone()]);
        let h = hyps
            .iter()
            .skip(1)
            .find(|h| h.conclusion.component(new_id) == Some(&wanted))
            .ok_or_else(|| TranslateError::Unsupported(format!("no premiss opens `{wanted}`")))?;
        let mut s = seq.clone();
        s.add_right(L::WorldAt(y.to_string(), a.clone()));
        let p = self.node(h, enter(s))?;
        Ok(step(&seq, Inference::ExR { x: y.to_string(), term: tbar, formula: a.clone() }, vec![p]))
    }
}

/// Translates a derivation of a cube logic into a labelled derivation of
/// the labelled image of its conclusion. Copies of principal material kept
/// by the hypersequent rules are dropped on the fly, compound initial leaves
/// are expanded to atomic ones, and each `R□` step becomes the labelled
/// `R□` followed by the forcing and term-decomposition steps that open the
/// new world.
pub fn translate_derivation(d: &Derivation, l: &LogicSpec) -> Result<LabelledDerivation, TranslateError> {
    require_cube(l)?;
    check_derivation(d, l).map_err(|e| TranslateError::InvalidDerivation { logic: l.name(), reason: e.to_string() })?;
    let images = root_images(&d.conclusion);
    let seq = image_sequent(&d.conclusion, &images, &BTreeMap::new());
    let worlds = d.conclusion.components().iter().map(|c| (c.id, world(c.id))).collect();
    let branch = Branch { seq, worlds, images, spent: BTreeSet::new() };
    match (Translator { l, next_nb: 0 }).node(d, branch) {
        Err(TranslateError::Unsupported(reason)) => without_empty_components(d, l).unwrap_or(Err(TranslateError::Unsupported(reason))),
        done => done,
    }
}

/// An empty root component has no labelled image, so rule N cannot act on
/// its label. The labelled conclusion is the same without that component;
/// when the rest of the hypersequent is derivable on its own (component ids
/// kept), its derivation is translated instead.
fn without_empty_components(d: &Derivation, l: &LogicSpec) -> Option<Result<LabelledDerivation, TranslateError>> {
    let kept: Vec<_> = d.conclusion.components().iter().filter(|c| !c.sequent.is_empty()).cloned().collect();
    if kept.is_empty() || kept.len() == d.conclusion.len() {
        return None;
    }
    let h = Hypersequent::from_components(kept);
    let config = crate::search::SearchConfig::default();
    match crate::search::prove_with(&h, l, &config).ok()?.outcome {
        crate::search::SearchOutcome::Proved(reduced) => Some(translate_derivation(&reduced, l)),
        crate::search::SearchOutcome::Refuted(_) => None,
    }
}
