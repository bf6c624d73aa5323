//! Blocks, sequents and hypersequents, their formula interpretation, the
//! subsumption relation used by loop checking, and a text syntax.
//!
//! All multisets are kept as canonically sorted vectors, so multiset
//! equality is plain equality and set projections are cheap.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::formula::{self, tokenize, EmptyBlock, Formula, FormulaParser, ParseError, Spanned, Tok};

/// A nonempty multiset of formulas, read as the box of their conjunction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    members: Vec<Formula>,
}

impl Block {
    pub fn new(mut members: Vec<Formula>) -> Result<Block, EmptyBlock> {
        if members.is_empty() {
            return Err(EmptyBlock);
        }
        members.sort();
        Ok(Block { members })
    }

    pub fn singleton(f: Formula) -> Block {
        Block { members: vec![f] }
    }

    /// Members in canonical order, with multiplicities.
    pub fn members(&self) -> &[Formula] {
        &self.members
    }

    /// The underlying set, in canonical order.
    pub fn set(&self) -> Vec<Formula> {
        let mut s = self.members.clone();
        s.dedup();
        s
    }

    /// Equality of the underlying sets.
    pub fn set_eq(&self, other: &Block) -> bool {
        dedup_iter(&self.members).eq(dedup_iter(&other.members))
    }

    /// Multiset union.
    pub fn union(&self, other: &Block) -> Block {
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        members.sort();
        Block { members }
    }

    pub fn weight(&self) -> usize {
        formula::block_weight(&self.members).expect("blocks are nonempty")
    }

    /// The boxed conjunction this block stands for.
    pub fn interpret(&self) -> Formula {
        Formula::boxed(Formula::conj(&self.members))
    }
}

/// Blocks are ordered by size (larger first), then lexicographically.
impl Ord for Block {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .members
            .len()
            .cmp(&self.members.len())
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl PartialOrd for Block {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dedup_iter(sorted: &[Formula]) -> impl Iterator<Item = &Formula> {
    sorted
        .iter()
        .enumerate()
        .filter(move |(i, f)| *i == 0 || sorted[i - 1] != **f)
        .map(|(_, f)| f)
}

/// True when every element of the sorted slice `small` occurs in the
/// sorted slice `big` (set inclusion, multiplicities ignored).
pub(crate) fn sorted_subset(small: &[Formula], big: &[Formula]) -> bool {
    let mut j = 0;
    for f in small {
        while j < big.len() && big[j] < *f {
            j += 1;
        }
        if j == big.len() || big[j] != *f {
            return false;
        }
    }
    true
}

fn insert_sorted<T: Ord>(v: &mut Vec<T>, x: T) {
    let pos = v.partition_point(|y| *y <= x);
    v.insert(pos, x);
}

/// A sequent `Γ, blocks ⇒ Δ`; blocks only occur on the left.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequent {
    antecedent: Vec<Formula>,
    blocks: Vec<Block>,
    succedent: Vec<Formula>,
}

impl Sequent {
    pub fn new(mut antecedent: Vec<Formula>, mut blocks: Vec<Block>, mut succedent: Vec<Formula>) -> Sequent {
        antecedent.sort();
        blocks.sort();
        succedent.sort();
        Sequent {
            antecedent,
            blocks,
            succedent,
        }
    }

    /// The sequent `⇒ f`.
    pub fn goal(f: Formula) -> Sequent {
        Sequent::new(vec![], vec![], vec![f])
    }

    pub fn antecedent(&self) -> &[Formula] {
        &self.antecedent
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn succedent(&self) -> &[Formula] {
        &self.succedent
    }

    pub fn add_antecedent(&mut self, f: Formula) {
        insert_sorted(&mut self.antecedent, f);
    }

    pub fn add_block(&mut self, b: Block) {
        insert_sorted(&mut self.blocks, b);
    }

    pub fn add_succedent(&mut self, f: Formula) {
        insert_sorted(&mut self.succedent, f);
    }

    /// Removes one occurrence; returns false if absent.
    pub fn remove_antecedent(&mut self, f: &Formula) -> bool {
        remove_one(&mut self.antecedent, f)
    }

    pub fn remove_block(&mut self, b: &Block) -> bool {
        remove_one(&mut self.blocks, b)
    }

    pub fn remove_succedent(&mut self, f: &Formula) -> bool {
        remove_one(&mut self.succedent, f)
    }

    pub fn in_antecedent(&self, f: &Formula) -> bool {
        self.antecedent.binary_search(f).is_ok()
    }

    pub fn in_succedent(&self, f: &Formula) -> bool {
        self.succedent.binary_search(f).is_ok()
    }

    /// Whether some block has the same underlying set as `b`.
    pub fn has_block_set(&self, b: &Block) -> bool {
        self.blocks.iter().any(|c| c.set_eq(b))
    }

    /// Number of formula and block occurrences.
    pub fn len(&self) -> usize {
        self.antecedent.len() + self.blocks.len() + self.succedent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of distinct formulas on each side plus distinct block sets.
    pub fn distinct_size(&self) -> usize {
        let mut blocks: Vec<Vec<Formula>> = self.blocks.iter().map(Block::set).collect();
        blocks.sort();
        blocks.dedup();
        dedup_iter(&self.antecedent).count() + blocks.len() + dedup_iter(&self.succedent).count()
    }

    /// Total formula-node count, counting block members once per occurrence.
    pub fn node_count(&self) -> usize {
        self.antecedent.iter().map(Formula::size).sum::<usize>()
            + self
                .blocks
                .iter()
                .flat_map(|b| b.members.iter())
                .map(Formula::size)
                .sum::<usize>()
            + self.succedent.iter().map(Formula::size).sum::<usize>()
    }

    /// Every formula occurring in the sequent, including block members.
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.antecedent
            .iter()
            .chain(self.blocks.iter().flat_map(|b| b.members.iter()))
            .chain(self.succedent.iter())
    }

    /// Formula interpretation: the conjunction of the antecedent formulas and
    /// the boxed block conjunctions, implying the disjunction of the succedent.
    pub fn interpret(&self) -> Formula {
        let mut left: Vec<Formula> = self.antecedent.clone();
        left.extend(self.blocks.iter().map(Block::interpret));
        Formula::imp(Formula::conj(&left), Formula::disj(&self.succedent))
    }
}

fn remove_one<T: Ord>(v: &mut Vec<T>, x: &T) -> bool {
    match v.binary_search(x) {
        Ok(i) => {
            v.remove(i);
            true
        }
        Err(_) => false,
    }
}

/// Formula interpretation of a sequent.
pub fn interpret(s: &Sequent) -> Formula {
    s.interpret()
}

/// Local loop-check subsumption: every antecedent formula of `candidate` is
/// in the antecedent of `reference`, every block of `candidate` is set-equal
/// to some block of `reference`, and the succedent set of `candidate` is
/// included in that of `reference`.
pub fn subsumes(candidate: &Sequent, reference: &Sequent) -> bool {
    sorted_subset(&candidate.antecedent, &reference.antecedent)
        && sorted_subset(&candidate.succedent, &reference.succedent)
        && candidate.blocks.iter().all(|b| reference.has_block_set(b))
}

/// A sequent carrying a stable component id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Component {
    pub id: usize,
    pub sequent: Sequent,
}

/// A nonempty list of components with stable ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hypersequent {
    components: Vec<Component>,
}

impl Hypersequent {
    /// Builds a hypersequent from root sequents, numbering them from 1 in
    /// input order.
    pub fn new(sequents: Vec<Sequent>) -> Hypersequent {
        assert!(!sequents.is_empty(), "hypersequents are nonempty");
        Hypersequent {
            components: sequents
                .into_iter()
                .enumerate()
                .map(|(i, sequent)| Component { id: i + 1, sequent })
                .collect(),
        }
    }

    /// The single-component hypersequent `⇒ f`.
    pub fn goal(f: Formula) -> Hypersequent {
        Hypersequent::new(vec![Sequent::goal(f)])
    }

    pub fn from_components(components: Vec<Component>) -> Hypersequent {
        assert!(!components.is_empty(), "hypersequents are nonempty");
        Hypersequent { components }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: usize) -> Option<&Sequent> {
        self.components.iter().find(|c| c.id == id).map(|c| &c.sequent)
    }

    pub fn component_mut(&mut self, id: usize) -> Option<&mut Sequent> {
        self.components
            .iter_mut()
            .find(|c| c.id == id)
            .map(|c| &mut c.sequent)
    }

    /// The id the next created component receives.
    pub fn next_id(&self) -> usize {
        self.components.iter().map(|c| c.id).max().unwrap_or(0) + 1
    }

    /// Appends a component with a fresh id and returns that id.
    pub fn push(&mut self, sequent: Sequent) -> usize {
        let id = self.next_id();
        self.components.push(Component { id, sequent });
        id
    }

    /// Removes a component, refusing to leave the hypersequent empty.
    pub fn remove(&mut self, id: usize) -> Option<Sequent> {
        if self.components.len() <= 1 {
            return None;
        }
        let pos = self.components.iter().position(|c| c.id == id)?;
        Some(self.components.remove(pos).sequent)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Total formula-node count of all components.
    pub fn node_count(&self) -> usize {
        self.components.iter().map(|c| c.sequent.node_count()).sum()
    }

    /// Components sorted canonically with ids dropped; equal for
    /// hypersequents that are the same multiset of sequents.
    pub fn canonical(&self) -> Vec<Sequent> {
        let mut v: Vec<Sequent> = self.components.iter().map(|c| c.sequent.clone()).collect();
        v.sort();
        v
    }
}

fn render_formula(f: &Formula) -> String {
    let s = f.to_string();
    // Parenthesise top-level disjunctions so `|` always separates components.
    let mut depth = 0i32;
    let top_level_bar = s.chars().any(|c| {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '|' if depth == 0 => return true,
            _ => {}
        }
        false
    });
    if top_level_bar {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Block {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.members.iter().map(render_formula).collect();
        write!(out, "<{}>", items.join(", "))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.to_string())
            .chain(self.antecedent.iter().map(render_formula))
            .collect();
        let right: Vec<String> = self.succedent.iter().map(render_formula).collect();
        let arrow = match (left.is_empty(), right.is_empty()) {
            (true, true) => "=>".to_string(),
            (true, false) => "=> ".to_string(),
            (false, true) => " =>".to_string(),
            (false, false) => " => ".to_string(),
        };
        write!(out, "{}{}{}", left.join(", "), arrow, right.join(", "))
    }
}

impl fmt::Display for Hypersequent {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.sequent.to_string()).collect();
        out.write_str(&parts.join(" | "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HypersequentParseError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("blocks must be nonempty (position {0})")]
    EmptyBlock(usize),
}

fn depth_change(tok: &Tok) -> i32 {
    match tok {
        Tok::LParen | Tok::LAngle => 1,
        Tok::RParen | Tok::RAngle => -1,
        _ => 0,
    }
}

/// Splits `toks` at top-level occurrences of `sep`.
fn split_top<'a>(toks: &'a [Spanned], sep: &Tok) -> Vec<&'a [Spanned]> {
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, (_, t)) in toks.iter().enumerate() {
        if depth == 0 && t == sep {
            parts.push(&toks[start..i]);
            start = i + 1;
        }
        depth += depth_change(t);
    }
    parts.push(&toks[start..]);
    parts
}

fn has_top_arrow(toks: &[Spanned]) -> bool {
    split_top(toks, &Tok::Arrow).len() > 1
}

fn slice_end(toks: &[Spanned], fallback: usize) -> usize {
    toks.last().map(|(p, _)| *p + 1).unwrap_or(fallback)
}

fn parse_items(toks: &[Spanned], end: usize, allow_blocks: bool) -> Result<(Vec<Formula>, Vec<Block>), HypersequentParseError> {
    let mut formulas = Vec::new();
    let mut blocks = Vec::new();
    if toks.is_empty() {
        return Ok((formulas, blocks));
    }
    for item in split_top(toks, &Tok::Comma) {
        let item_end = slice_end(item, end);
        match item {
            [] => return Err(ParseError::new(end, "empty item in sequent").into()),
            [(start, Tok::LAngle), inner @ .., (_, Tok::RAngle)] if allow_blocks => {
                if inner.is_empty() {
                    return Err(HypersequentParseError::EmptyBlock(*start));
                }
                let (members, nested) = parse_items(inner, item_end, false)?;
                debug_assert!(nested.is_empty());
                blocks.push(Block::new(members).map_err(|_| HypersequentParseError::EmptyBlock(*start))?);
            }
            [(start, Tok::LAngle), ..] => {
                return Err(ParseError::new(*start, "blocks may only occur in the antecedent").into())
            }
            _ => formulas.push(FormulaParser::new(item, item_end).parse_all()?),
        }
    }
    Ok((formulas, blocks))
}

fn parse_component(toks: &[Spanned], end: usize) -> Result<Sequent, HypersequentParseError> {
    let sides = split_top(toks, &Tok::Arrow);
    if sides.len() != 2 {
        let pos = toks.first().map(|(p, _)| *p).unwrap_or(end);
        return Err(ParseError::new(pos, "each component needs exactly one `=>`").into());
    }
    let (ante, blocks) = parse_items(sides[0], end, true)?;
    let (succ, _) = parse_items(sides[1], end, false)?;
    Ok(Sequent::new(ante, blocks, succ))
}

/// Parses a hypersequent such as `<p & q>, [](p & q) => []p | p => q`.
///
/// Components are separated by top-level `|`. Since `|` is also
/// disjunction, a `|`-separated segment without `=>` is read as a disjunct
/// of the neighbouring component (the preceding one when there is one);
/// parenthesise disjunctions to avoid relying on this.
pub fn parse_hypersequent(text: &str) -> Result<Hypersequent, HypersequentParseError> {
    let toks = tokenize(text)?;
    let segments = split_top(&toks, &Tok::Or);
    // Group contiguous segments into components, as index ranges into `toks`.
    let mut groups: Vec<(usize, usize, bool)> = Vec::new();
    let mut offset = 0;
    for seg in segments {
        let start = offset;
        let end = offset + seg.len();
        offset = end + 1;
        let arrow = has_top_arrow(seg);
        match groups.last_mut() {
            Some(last) if !arrow || !last.2 => {
                last.1 = end;
                last.2 |= arrow;
            }
            _ => groups.push((start, end, arrow)),
        }
    }
    let mut sequents = Vec::new();
    for (start, end, _) in groups {
        let slice = &toks[start..end];
        sequents.push(parse_component(slice, slice_end(slice, text.len()))?);
    }
    Ok(Hypersequent::new(sequents))
}

/// Parses either a hypersequent (if the text contains `=>`) or a formula
/// `A`, read as the hypersequent `⇒ A`.
pub fn parse_input(text: &str) -> Result<Hypersequent, HypersequentParseError> {
    let toks = tokenize(text)?;
    if toks.iter().any(|(_, t)| *t == Tok::Arrow) {
        parse_hypersequent(text)
    } else {
        Ok(Hypersequent::goal(FormulaParser::new(&toks, text.len()).parse_all()?))
    }
}
