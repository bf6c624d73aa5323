//! The modal language: formulas, parsing, printing, weights and subformulas.
//!
//! Derived connectives are eliminated when parsing: `~A` becomes `A -> false`,
//! `A <-> B` becomes `(A -> B) & (B -> A)` and `<>A` becomes `~[]~A`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A formula of the modal language with a single box modality.
///
/// The derived `Ord` is the canonical total order used to sort every
/// multiset downstream: constructors compare by variant first, then
/// structurally, atoms lexicographically by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Bottom,
    Top,
    Atom(Arc<str>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Imp(Arc<Formula>, Arc<Formula>),
    Box(Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Arc::from(name))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Arc::new(a), Arc::new(b))
    }

    pub fn boxed(a: Formula) -> Formula {
        Formula::Box(Arc::new(a))
    }

    /// `~A`, stored as `A -> false`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bottom)
    }

    /// `A <-> B`, stored as `(A -> B) & (B -> A)`.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    /// `<>A`, stored as `~[]~A`.
    pub fn dia(a: Formula) -> Formula {
        Formula::not(Formula::boxed(Formula::not(a)))
    }

    /// Right-associated conjunction of the given formulas; `true` when empty.
    pub fn conj(items: &[Formula]) -> Formula {
        match items.split_last() {
            None => Formula::Top,
            Some((last, rest)) => rest
                .iter()
                .rev()
                .fold(last.clone(), |acc, f| Formula::and(f.clone(), acc)),
        }
    }

    /// Right-associated disjunction of the given formulas; `false` when empty.
    pub fn disj(items: &[Formula]) -> Formula {
        match items.split_last() {
            None => Formula::Bottom,
            Some((last, rest)) => rest
                .iter()
                .rev()
                .fold(last.clone(), |acc, f| Formula::or(f.clone(), acc)),
        }
    }

    /// Weight: 0 for atoms and constants, `wA + wB + 1` for binary
    /// connectives, `wA + 2` for boxes.
    pub fn weight(&self) -> usize {
        match self {
            Formula::Bottom | Formula::Top | Formula::Atom(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.weight() + b.weight() + 1
            }
            Formula::Box(a) => a.weight() + 2,
        }
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Bottom | Formula::Top | Formula::Atom(_) => 1,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => 1 + a.size() + b.size(),
            Formula::Box(a) => 1 + a.size(),
        }
    }

    /// Maximal nesting of boxes.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Bottom | Formula::Top | Formula::Atom(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.modal_depth().max(b.modal_depth())
            }
            Formula::Box(a) => 1 + a.modal_depth(),
        }
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Bottom | Formula::Top | Formula::Atom(_) => vec![],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => vec![a, b],
            Formula::Box(a) => vec![a],
        }
    }

    /// The subformula-closed set generated by this formula.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    pub(crate) fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if out.insert(self.clone()) {
            for c in self.children() {
                c.collect_subformulas(out);
            }
        }
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            _ => {
                for c in self.children() {
                    c.collect_atoms(out);
                }
            }
        }
    }

    /// Whether this formula is `A -> false` for some `A`.
    pub fn negated(&self) -> Option<&Formula> {
        match self {
            Formula::Imp(a, b) if **b == Formula::Bottom => Some(a),
            _ => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Imp(_, b) if **b != Formula::Bottom => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            _ => 4,
        }
    }
}

/// Error for the weight of an empty block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("blocks must be nonempty")]
pub struct EmptyBlock;

/// Weight of a block: one more than the maximal member weight.
pub fn block_weight(members: &[Formula]) -> Result<usize, EmptyBlock> {
    members
        .iter()
        .map(Formula::weight)
        .max()
        .map(|w| w + 1)
        .ok_or(EmptyBlock)
}

/// Returns true if `set` contains every immediate subformula of each member.
pub fn is_subformula_closed(set: &BTreeSet<Formula>) -> bool {
    set.iter()
        .all(|f| f.children().into_iter().all(|c| set.contains(c)))
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(out: &mut fmt::Formatter<'_>, f: &Formula, paren: bool) -> fmt::Result {
            if paren {
                write!(out, "({f})")
            } else {
                write!(out, "{f}")
            }
        }
        if let Some(a) = self.negated() {
            out.write_str("~")?;
            return wrap(out, a, a.precedence() < 4);
        }
        match self {
            Formula::Bottom => out.write_str("false"),
            Formula::Top => out.write_str("true"),
            Formula::Atom(name) => out.write_str(name),
            Formula::Box(a) => {
                out.write_str("[]")?;
                wrap(out, a, a.precedence() < 4)
            }
            Formula::And(a, b) => {
                wrap(out, a, a.precedence() < 3)?;
                out.write_str(" & ")?;
                wrap(out, b, b.precedence() <= 3)
            }
            Formula::Or(a, b) => {
                wrap(out, a, a.precedence() < 2)?;
                out.write_str(" | ")?;
                wrap(out, b, b.precedence() <= 2)
            }
            Formula::Imp(a, b) => {
                wrap(out, a, a.precedence() <= 1)?;
                out.write_str(" -> ")?;
                wrap(out, b, b.precedence() < 1)
            }
        }
    }
}

/// A syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(position: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    Not,
    Box,
    Dia,
    And,
    Or,
    Imp,
    Iff,
    True,
    False,
    Atom(String),
    // Hypersequent punctuation.
    Arrow,
    Comma,
    LAngle,
    RAngle,
}

impl fmt::Display for Tok {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Not => "~",
            Tok::Box => "[]",
            Tok::Dia => "<>",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Imp => "->",
            Tok::Iff => "<->",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Atom(name) => name,
            Tok::Arrow => "=>",
            Tok::Comma => ",",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
        };
        out.write_str(s)
    }
}

/// A token with its byte offset in the source text.
pub(crate) type Spanned = (usize, Tok);

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    const SYMBOLS: &[(&str, Tok)] = &[
        ("<->", Tok::Iff),
        ("<>", Tok::Dia),
        ("[]", Tok::Box),
        ("->", Tok::Imp),
        ("=>", Tok::Arrow),
        ("(", Tok::LParen),
        (")", Tok::RParen),
        ("~", Tok::Not),
        ("&", Tok::And),
        ("|", Tok::Or),
        (",", Tok::Comma),
        ("<", Tok::LAngle),
        (">", Tok::RAngle),
    ];
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        for (sym, tok) in SYMBOLS {
            if text[i..].starts_with(sym) {
                out.push((i, tok.clone()));
                i += sym.len();
                continue 'outer;
            }
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "box" => Tok::Box,
                "dia" => Tok::Dia,
                _ if word.as_bytes()[0].is_ascii_lowercase() => Tok::Atom(word.to_string()),
                _ => {
                    return Err(ParseError::new(
                        start,
                        format!("atom `{word}` must start with a lowercase letter"),
                    ))
                }
            };
            out.push((start, tok));
            continue;
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(ParseError::new(i, format!("unexpected character `{ch}`")));
    }
    Ok(out)
}

/// Recursive-descent parser over a token slice.
pub(crate) struct FormulaParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    end: usize,
}

impl<'a> FormulaParser<'a> {
    /// `end` is the byte offset reported for errors at end of input.
    pub(crate) fn new(toks: &'a [Spanned], end: usize) -> Self {
        FormulaParser { toks, pos: 0, end }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Parses the whole slice as a single formula.
    pub(crate) fn parse_all(mut self) -> Result<Formula, ParseError> {
        let f = self.iff()?;
        match self.toks.get(self.pos) {
            None => Ok(f),
            Some((p, t)) => Err(ParseError::new(*p, format!("unexpected `{t}`"))),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.imp()?;
        while self.eat(&Tok::Iff) {
            let g = self.imp()?;
            f = Formula::iff(f, g);
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let f = self.or()?;
        if self.eat(&Tok::Imp) {
            let g = self.imp()?;
            Ok(Formula::imp(f, g))
        } else {
            Ok(f)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.eat(&Tok::Or) {
            let g = self.and()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.eat(&Tok::And) {
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::new(offset, "expected a formula, found end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::Box => Ok(Formula::boxed(self.unary()?)),
            Tok::Dia => Ok(Formula::dia(self.unary()?)),
            Tok::True => Ok(Formula::Top),
            Tok::False => Ok(Formula::Bottom),
            Tok::Atom(name) => Ok(Formula::atom(&name)),
            Tok::LParen => {
                let f = self.iff()?;
                if !self.eat(&Tok::RParen) {
                    return Err(ParseError::new(self.offset(), "expected `)`"));
                }
                Ok(f)
            }
            other => Err(ParseError::new(
                offset,
                format!("expected a formula, found `{other}`"),
            )),
        }
    }
}

/// Parses a formula in the surface syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    FormulaParser::new(&toks, text.len()).parse_all()
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }
    fn q() -> Formula {
        Formula::atom("q")
    }

    #[test]
    fn parses_box_implication() {
        let f = parse("box(p & q) -> box p").unwrap();
        assert_eq!(
            f,
            Formula::imp(Formula::boxed(Formula::and(p(), q())), Formula::boxed(p()))
        );
    }

    #[test]
    fn expands_negation_and_diamond() {
        assert_eq!(
            parse("~ box false").unwrap(),
            Formula::imp(Formula::boxed(Formula::Bottom), Formula::Bottom)
        );
        assert_eq!(
            parse("<> p").unwrap(),
            Formula::imp(
                Formula::boxed(Formula::imp(p(), Formula::Bottom)),
                Formula::Bottom
            )
        );
        assert_eq!(parse("dia p").unwrap(), parse("<>p").unwrap());
        assert_eq!(
            parse("p <-> q").unwrap(),
            Formula::and(Formula::imp(p(), q()), Formula::imp(q(), p()))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("p -> q -> p").unwrap(),
            Formula::imp(p(), Formula::imp(q(), p()))
        );
        assert_eq!(
            parse("p | q & p").unwrap(),
            Formula::or(p(), Formula::and(q(), p()))
        );
        assert_eq!(
            parse("[]p & q").unwrap(),
            Formula::and(Formula::boxed(p()), q())
        );
    }

    #[test]
    fn rejects_reserved_and_malformed() {
        assert!(parse("box").is_err());
        assert!(parse("P").is_err());
        assert!(parse("p &").is_err());
        assert!(parse("(p").is_err());
        assert!(parse("p q").is_err());
        let err = parse("p & $").unwrap_err();
        assert_eq!(err.position, 4);
    }

    #[test]
    fn weights() {
        assert_eq!(p().weight(), 0);
        assert_eq!(Formula::boxed(p()).weight(), 2);
        assert_eq!(Formula::boxed(Formula::and(p(), q())).weight(), 3);
    }

    #[test]
    fn block_weights() {
        assert_eq!(block_weight(&[p()]), Ok(1));
        assert_eq!(block_weight(&[p(), Formula::boxed(q())]), Ok(3));
        assert_eq!(block_weight(&[Formula::and(p(), q())]), Ok(2));
        assert_eq!(block_weight(&[]), Err(EmptyBlock));
    }

    #[test]
    fn subformula_sets() {
        let f = parse("box(p & q) -> box p").unwrap();
        let expected: BTreeSet<Formula> = [
            "box(p & q) -> box p",
            "box(p & q)",
            "p & q",
            "p",
            "q",
            "box p",
        ]
        .iter()
        .map(|s| parse(s).unwrap())
        .collect();
        assert_eq!(f.subformulas(), expected);
        assert!(is_subformula_closed(&expected));
    }

    #[test]
    fn printing_is_minimal() {
        for (src, shown) in [
            ("(p -> q) -> p", "(p -> q) -> p"),
            ("p -> (q -> p)", "p -> q -> p"),
            ("~(p & q)", "~(p & q)"),
            ("[](p | q) & r", "[](p | q) & r"),
            ("(p | q) | r", "p | q | r"),
            ("p | (q | r)", "p | (q | r)"),
            ("~~p", "~~p"),
            ("[]~p", "[]~p"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), shown);
        }
    }
}
