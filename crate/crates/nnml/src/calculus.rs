//! The rule engine: initial hypersequents, premiss construction for every
//! rule, enumeration of applicable instances under local loop checking, and
//! saturation.

use std::collections::HashSet;
use std::fmt;
use std::ops::ControlFlow;

use serde::{Serialize, Serializer};

use crate::formula::Formula;
use crate::hypersequent::{sorted_subset, subsumes, Block, Hypersequent, Sequent};
use crate::logic::{LogicSpec, RuleId};

/// The principal material of a rule instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Principal {
    /// A formula occurrence (propositional rules, `L□`, and initial leaves).
    Formula(Formula),
    /// One block occurrence (T, P, D1).
    Block(Block),
    /// Several distinct block occurrences (C, D2, D_n^+), in canonical order.
    Blocks(Vec<Block>),
    /// A block and a succedent box formula of the same component (R□, R□m).
    BlockBox(Block, Formula),
    /// No principal material (N).
    Nothing,
}

impl fmt::Display for Principal {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Principal::Formula(f) => write!(out, "{f}"),
            Principal::Block(b) => write!(out, "{b}"),
            Principal::Blocks(bs) => {
                let items: Vec<String> = bs.iter().map(|b| b.to_string()).collect();
                out.write_str(&items.join(", "))
            }
            Principal::BlockBox(b, f) => write!(out, "{b}; {f}"),
            Principal::Nothing => Ok(()),
        }
    }
}

impl Serialize for Principal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A rule instance: rule, active component, principal material and the
/// premisses (with principal material copied into them).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub component: usize,
    pub principal: Principal,
    pub premisses: Vec<Hypersequent>,
}

/// How a premiss differs from the conclusion: one component is extended, or
/// a new component is added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Change {
    Modify(usize, Sequent),
    Add(Sequent),
}

impl Change {
    fn sequent(&self) -> &Sequent {
        match self {
            Change::Modify(_, s) | Change::Add(s) => s,
        }
    }

    fn apply(self, h: &Hypersequent) -> Hypersequent {
        let mut out = h.clone();
        match self {
            Change::Modify(id, s) => *out.component_mut(id).expect("component exists") = s,
            Change::Add(s) => {
                out.push(s);
            }
        }
        out
    }
}

/// Which side of a component a formula is on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Identifies why a hypersequent is initial: the rule and the witnessing
/// component and formula.
pub fn initial_witness(h: &Hypersequent) -> Option<(RuleId, usize, Formula)> {
    for c in h.components() {
        if let Some(w) = sequent_initial(&c.sequent) {
            return Some((w.0, c.id, w.1));
        }
    }
    None
}

pub(crate) fn sequent_initial(s: &Sequent) -> Option<(RuleId, Formula)> {
    if s.in_antecedent(&Formula::Bottom) {
        return Some((RuleId::BotL, Formula::Bottom));
    }
    if s.in_succedent(&Formula::Top) {
        return Some((RuleId::TopR, Formula::Top));
    }
    let (a, b) = (s.antecedent(), s.succedent());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return Some((RuleId::Init, a[i].clone())),
        }
    }
    None
}

/// True iff some component has `⊥` on the left, `⊤` on the right, or a
/// formula on both sides.
pub fn is_initial(h: &Hypersequent) -> bool {
    initial_witness(h).is_some()
}

fn with(s: &Sequent, left: &[&Formula], blocks: &[Block], right: &[&Formula]) -> Sequent {
    let mut out = s.clone();
    for f in left {
        out.add_antecedent((*f).clone());
    }
    for b in blocks {
        out.add_block(b.clone());
    }
    for f in right {
        out.add_succedent((*f).clone());
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k >= 1 && k <= n {
        go(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Premiss changes for a rule instance in component `id` with sequent `s`;
/// the caller guarantees that the principal material is present.
pub(crate) fn changes(rule: RuleId, id: usize, s: &Sequent, principal: &Principal) -> Vec<Change> {
    use Formula as F;
    use RuleId::*;
    let m = |left: &[&Formula], blocks: &[Block], right: &[&Formula]| Change::Modify(id, with(s, left, blocks, right));
    match (rule, principal) {
        (AndL, Principal::Formula(F::And(a, b))) => vec![m(&[a, b], &[], &[])],
        (OrL, Principal::Formula(F::Or(a, b))) => vec![m(&[a], &[], &[]), m(&[b], &[], &[])],
        (ImpR, Principal::Formula(F::Imp(a, b))) => vec![m(&[a], &[], &[b])],
        (AndR, Principal::Formula(F::And(a, b))) => vec![m(&[], &[], &[a]), m(&[], &[], &[b])],
        (OrR, Principal::Formula(F::Or(a, b))) => vec![m(&[], &[], &[a, b])],
        (ImpL, Principal::Formula(F::Imp(a, b))) => vec![m(&[], &[], &[a]), m(&[b], &[], &[])],
        (BoxL, Principal::Formula(F::Box(a))) => vec![m(&[], &[Block::singleton((**a).clone())], &[])],
        (T, Principal::Block(b)) => {
            let members: Vec<&Formula> = b.members().iter().collect();
            vec![m(&members, &[], &[])]
        }
        (C, Principal::Blocks(bs)) if bs.len() == 2 => vec![m(&[], &[bs[0].union(&bs[1])], &[])],
        (N, Principal::Nothing) => vec![m(&[], &[Block::singleton(F::Top)], &[])],
        (BoxR, Principal::BlockBox(b, F::Box(goal))) => {
            let mut out = vec![Change::Add(Sequent::new(b.members().to_vec(), vec![], vec![(**goal).clone()]))];
            for a in b.set() {
                out.push(Change::Add(Sequent::new(vec![(**goal).clone()], vec![], vec![a])));
            }
            out
        }
        (BoxRm, Principal::BlockBox(b, F::Box(goal))) => {
            vec![Change::Add(Sequent::new(b.members().to_vec(), vec![], vec![(**goal).clone()]))]
        }
        (P, Principal::Block(b)) => vec![Change::Add(Sequent::new(b.members().to_vec(), vec![], vec![]))],
        (D1, Principal::Block(b)) => {
            let mut out = vec![Change::Add(Sequent::new(b.members().to_vec(), vec![], vec![]))];
            for a in b.set() {
                out.push(Change::Add(Sequent::new(vec![], vec![], vec![a])));
            }
            out
        }
        (D2, Principal::Blocks(bs)) if bs.len() == 2 => {
            let mut out = vec![Change::Add(Sequent::new(bs[0].union(&bs[1]).members().to_vec(), vec![], vec![]))];
            for a in bs[0].set() {
                for b in bs[1].set() {
                    out.push(Change::Add(Sequent::new(vec![], vec![], vec![a.clone(), b])));
                }
            }
            out
        }
        (DnPlus(k), Principal::Blocks(bs)) if bs.len() == k as usize => {
            let members: Vec<Formula> = bs.iter().flat_map(|b| b.members().iter().cloned()).collect();
            vec![Change::Add(Sequent::new(members, vec![], vec![]))]
        }
        _ => vec![],
    }
}

/// Premisses of a rule instance in kleene'd form, without loop checking.
/// Returns `None` if the rule does not match the principal material, or the
/// material does not occur in the given component.
pub fn premisses(h: &Hypersequent, rule: RuleId, component: usize, principal: &Principal) -> Option<Vec<Hypersequent>> {
    let s = h.component(component)?;
    if !principal_present(s, rule, principal) {
        return None;
    }
    let ch = changes(rule, component, s, principal);
    if ch.is_empty() {
        return None;
    }
    Some(ch.into_iter().map(|c| c.apply(h)).collect())
}

fn block_occurrences(s: &Sequent, bs: &[Block]) -> bool {
    let mut need: Vec<&Block> = bs.iter().collect();
    need.sort();
    let mut i = 0;
    while i < need.len() {
        let mut j = i;
        while j < need.len() && need[j] == need[i] {
            j += 1;
        }
        if s.blocks().iter().filter(|b| *b == need[i]).count() < j - i {
            return false;
        }
        i = j;
    }
    true
}

/// Whether the principal material of a rule occurs in sequent `s`.
pub(crate) fn principal_present(s: &Sequent, rule: RuleId, principal: &Principal) -> bool {
    use RuleId::*;
    match (rule, principal) {
        (AndL | OrL | ImpL | BoxL, Principal::Formula(f)) => s.in_antecedent(f),
        (AndR | OrR | ImpR, Principal::Formula(f)) => s.in_succedent(f),
        (T | P | D1, Principal::Block(b)) => block_occurrences(s, std::slice::from_ref(b)),
        (C | D2 | DnPlus(_), Principal::Blocks(bs)) => block_occurrences(s, bs),
        (BoxR | BoxRm, Principal::BlockBox(b, f)) => {
            matches!(f, Formula::Box(_)) && s.in_succedent(f) && block_occurrences(s, std::slice::from_ref(b))
        }
        (N, Principal::Nothing) => true,
        _ => false,
    }
}

/// Enumerates the candidate principals of `rule` in component sequent `s`,
/// in canonical order and without duplicates.
fn principals(rule: RuleId, s: &Sequent) -> Vec<Principal> {
    use RuleId::*;
    let dedup_formulas = |side: &[Formula], keep: &dyn Fn(&Formula) -> bool| {
        let mut out: Vec<Principal> = Vec::new();
        for (i, f) in side.iter().enumerate() {
            if (i == 0 || side[i - 1] != *f) && keep(f) {
                out.push(Principal::Formula(f.clone()));
            }
        }
        out
    };
    let distinct_blocks = || {
        let mut out: Vec<&Block> = Vec::new();
        for b in s.blocks() {
            if out.last() != Some(&b) {
                out.push(b);
            }
        }
        out
    };
    let block_tuples = |k: usize| {
        // Equal blocks yield equal tuples; keep the first of each.
        let mut seen: HashSet<Vec<&Block>> = HashSet::new();
        let mut out: Vec<Principal> = Vec::new();
        for combo in combinations(s.blocks().len(), k) {
            let tuple: Vec<&Block> = combo.iter().map(|&i| &s.blocks()[i]).collect();
            if seen.insert(tuple.clone()) {
                out.push(Principal::Blocks(tuple.into_iter().cloned().collect()));
            }
        }
        out
    };
    match rule {
        AndL => dedup_formulas(s.antecedent(), &|f| matches!(f, Formula::And(..))),
        OrL => dedup_formulas(s.antecedent(), &|f| matches!(f, Formula::Or(..))),
        ImpL => dedup_formulas(s.antecedent(), &|f| matches!(f, Formula::Imp(..))),
        BoxL => dedup_formulas(s.antecedent(), &|f| matches!(f, Formula::Box(..))),
        AndR => dedup_formulas(s.succedent(), &|f| matches!(f, Formula::And(..))),
        OrR => dedup_formulas(s.succedent(), &|f| matches!(f, Formula::Or(..))),
        ImpR => dedup_formulas(s.succedent(), &|f| matches!(f, Formula::Imp(..))),
        T | P | D1 => distinct_blocks().into_iter().map(|b| Principal::Block(b.clone())).collect(),
        C | D2 => block_tuples(2),
        DnPlus(k) => block_tuples(k as usize),
        N => vec![Principal::Nothing],
        BoxR | BoxRm => {
            let boxes: Vec<&Formula> = {
                let mut v: Vec<&Formula> = s.succedent().iter().filter(|f| matches!(f, Formula::Box(_))).collect();
                v.dedup();
                v
            };
            let mut out = Vec::new();
            for b in distinct_blocks() {
                for f in &boxes {
                    out.push(Principal::BlockBox(b.clone(), (*f).clone()));
                }
            }
            out
        }
        Init | BotL | TopR => vec![],
    }
}

/// Visits rule instances in the fixed global order: grouped by rule, then by
/// component id, then by canonical principal order. With `loop_check`, only
/// instances passing the local loop check are visited. The visitor receives
/// the instance and the (cheap) premiss changes; premiss hypersequents are
/// only materialised on demand.
pub(crate) fn visit_instances<B>(
    h: &Hypersequent,
    l: &LogicSpec,
    loop_check: bool,
    mut visit: impl FnMut(RuleId, usize, Principal, Vec<Change>) -> ControlFlow<B>,
) -> Option<B> {
    let mut order: Vec<(usize, usize)> = h.components().iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    order.sort();
    // For each component, the components of `h` that subsume it: an extension
    // of the component can only be subsumed by one of these.
    let subsumers: Vec<Vec<usize>> = if loop_check {
        h.components()
            .iter()
            .map(|c| {
                h.components()
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| subsumes(&c.sequent, &d.sequent))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    } else {
        vec![]
    };
    let unsubsumed = |idx: usize, ch: &Change| -> bool {
        let cand = ch.sequent();
        match ch {
            Change::Modify(..) => !subsumers[idx]
                .iter()
                .any(|&j| subsumes(cand, &h.components()[j].sequent)),
            Change::Add(_) => !h.components().iter().any(|d| subsumes(cand, &d.sequent)),
        }
    };
    for rule in l.ordered_rules() {
        if rule.is_axiom() {
            continue;
        }
        for &(id, idx) in &order {
            let s = &h.components()[idx].sequent;
            for principal in principals(rule, s) {
                // A C premiss whose union block is already present (as a set)
                // is subsumed by its own component; skip building it.
                if loop_check && rule == RuleId::C {
                    if let Principal::Blocks(bs) = &principal {
                        if s.has_block_set(&bs[0].union(&bs[1])) {
                            continue;
                        }
                    }
                }
                let ch = changes(rule, id, s, &principal);
                if ch.is_empty() {
                    continue;
                }
                if loop_check && !ch.iter().all(|c| unsubsumed(idx, c)) {
                    continue;
                }
                if let ControlFlow::Break(b) = visit(rule, id, principal, ch) {
                    return Some(b);
                }
            }
        }
    }
    None
}

fn materialise(h: &Hypersequent, rule: RuleId, component: usize, principal: Principal, ch: Vec<Change>) -> RuleInstance {
    RuleInstance {
        rule,
        component,
        principal,
        premisses: ch.into_iter().map(|c| c.apply(h)).collect(),
    }
}

/// All instances passing the local loop check, in the fixed order. An empty
/// list means the hypersequent is saturated (when it is not initial).
pub fn applicable_instances(h: &Hypersequent, l: &LogicSpec) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    visit_instances::<()>(h, l, true, |rule, id, p, ch| {
        out.push(materialise(h, rule, id, p, ch));
        ControlFlow::Continue(())
    });
    out
}

/// The first instance passing the local loop check.
pub fn first_applicable(h: &Hypersequent, l: &LogicSpec) -> Option<RuleInstance> {
    visit_instances(h, l, true, |rule, id, p, ch| ControlFlow::Break(materialise(h, rule, id, p, ch)))
}

/// All instances of the rules of `l` matching `h`, ignoring loop checking.
pub fn all_instances(h: &Hypersequent, l: &LogicSpec) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    visit_instances::<()>(h, l, false, |rule, id, p, ch| {
        out.push(materialise(h, rule, id, p, ch));
        ControlFlow::Continue(())
    });
    out
}

/// Saturation, checked condition by condition against the definition of a
/// saturated hypersequent; independent of the instance enumerator.
pub fn is_saturated(h: &Hypersequent, l: &LogicSpec) -> bool {
    !is_initial(h) && unsaturated_condition(h, l).is_none()
}

/// The first violated saturation condition, as (rule, component id).
pub fn unsaturated_condition(h: &Hypersequent, l: &LogicSpec) -> Option<(RuleId, usize)> {
    let rules = l.rule_set();
    let comps: Vec<&Sequent> = h.components().iter().map(|c| &c.sequent).collect();
    let some_comp = |pred: &dyn Fn(&Sequent) -> bool| comps.iter().any(|s| pred(s));
    for c in h.components() {
        let s = &c.sequent;
        let viol = |r: RuleId| Some((r, c.id));
        for f in s.antecedent() {
            match f {
                Formula::And(a, b) if !(s.in_antecedent(a) && s.in_antecedent(b)) => return viol(RuleId::AndL),
                Formula::Or(a, b) if !(s.in_antecedent(a) || s.in_antecedent(b)) => return viol(RuleId::OrL),
                Formula::Imp(a, b) if !(s.in_succedent(a) || s.in_antecedent(b)) => return viol(RuleId::ImpL),
                Formula::Box(a) if !s.blocks().iter().any(|b| b.members() == std::slice::from_ref(&**a)) => {
                    return viol(RuleId::BoxL)
                }
                _ => {}
            }
        }
        for f in s.succedent() {
            match f {
                Formula::And(a, b) if !(s.in_succedent(a) || s.in_succedent(b)) => return viol(RuleId::AndR),
                Formula::Or(a, b) if !(s.in_succedent(a) && s.in_succedent(b)) => return viol(RuleId::OrR),
                Formula::Imp(a, b) if !(s.in_antecedent(a) && s.in_succedent(b)) => return viol(RuleId::ImpR),
                _ => {}
            }
        }
        if rules.contains(&RuleId::N) && !s.blocks().iter().any(|b| b.members() == [Formula::Top]) {
            return viol(RuleId::N);
        }
        let blocks = s.blocks();
        for (i, b) in blocks.iter().enumerate() {
            let set = b.set();
            if rules.contains(&RuleId::T) && !sorted_subset(&set, s.antecedent()) {
                return viol(RuleId::T);
            }
            let covered = |set: &[Formula]| some_comp(&|t: &Sequent| sorted_subset(set, t.antecedent()));
            if rules.contains(&RuleId::P) && !covered(&set) {
                return viol(RuleId::P);
            }
            if rules.contains(&RuleId::D1)
                && !covered(&set)
                && !set.iter().any(|a| some_comp(&|t: &Sequent| t.in_succedent(a)))
            {
                return viol(RuleId::D1);
            }
            for f in s.succedent() {
                if let Formula::Box(goal) = f {
                    let first = some_comp(&|t: &Sequent| t.in_succedent(goal) && sorted_subset(&set, t.antecedent()));
                    let second = set
                        .iter()
                        .any(|a| some_comp(&|t: &Sequent| t.in_antecedent(goal) && t.in_succedent(a)));
                    if rules.contains(&RuleId::BoxRm) && !first {
                        return viol(RuleId::BoxRm);
                    }
                    if rules.contains(&RuleId::BoxR) && !first && !second {
                        return viol(RuleId::BoxR);
                    }
                }
            }
            for (j, b2) in blocks.iter().enumerate().skip(i + 1) {
                let _ = j;
                let mut union = b.union(b2).set();
                union.dedup();
                if rules.contains(&RuleId::C) && !blocks.iter().any(|x| x.set() == union) {
                    return viol(RuleId::C);
                }
                if rules.contains(&RuleId::D2) {
                    let set2 = b2.set();
                    let pair = set.iter().any(|a| {
                        set2.iter()
                            .any(|c| some_comp(&|t: &Sequent| t.in_succedent(a) && t.in_succedent(c)))
                    });
                    if !covered(&union) && !pair {
                        return viol(RuleId::D2);
                    }
                }
            }
        }
        for r in &rules {
            if let RuleId::DnPlus(k) = *r {
                for combo in combinations(blocks.len(), k as usize) {
                    let mut union: Vec<Formula> = combo.iter().flat_map(|&i| blocks[i].set()).collect();
                    union.sort();
                    union.dedup();
                    if !some_comp(&|t: &Sequent| sorted_subset(&union, t.antecedent())) {
                        return viol(*r);
                    }
                }
            }
        }
    }
    None
}
