//! Logic identifiers and the rule set each logic selects.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An axiom set over the base logic E.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LogicSpec {
    pub monotonic: bool,
    pub has_c: bool,
    pub has_n: bool,
    pub has_t: bool,
    pub has_p: bool,
    pub has_d: bool,
    /// Rules `D_i^+` for `1 <= i <= n`; always at least 1 when present.
    pub dplus: Option<u32>,
}

/// Names of the rules of the hypersequent calculi.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    Init,
    BotL,
    TopR,
    ImpL,
    ImpR,
    AndL,
    AndR,
    OrL,
    OrR,
    BoxL,
    BoxR,
    BoxRm,
    N,
    C,
    T,
    P,
    D1,
    D2,
    DnPlus(u32),
}

impl RuleId {
    /// Rules that close a branch rather than having premisses.
    pub fn is_axiom(self) -> bool {
        matches!(self, RuleId::Init | RuleId::BotL | RuleId::TopR)
    }

    /// Rules that add a fresh component to their premisses.
    pub fn creates_component(self) -> bool {
        matches!(
            self,
            RuleId::BoxR | RuleId::BoxRm | RuleId::P | RuleId::D1 | RuleId::D2 | RuleId::DnPlus(_)
        )
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::Init => out.write_str("init"),
            RuleId::BotL => out.write_str("L-false"),
            RuleId::TopR => out.write_str("R-true"),
            RuleId::ImpL => out.write_str("L->"),
            RuleId::ImpR => out.write_str("R->"),
            RuleId::AndL => out.write_str("L&"),
            RuleId::AndR => out.write_str("R&"),
            RuleId::OrL => out.write_str("L|"),
            RuleId::OrR => out.write_str("R|"),
            RuleId::BoxL => out.write_str("L[]"),
            RuleId::BoxR => out.write_str("R[]"),
            RuleId::BoxRm => out.write_str("R[]m"),
            RuleId::N => out.write_str("N"),
            RuleId::C => out.write_str("C"),
            RuleId::T => out.write_str("T"),
            RuleId::P => out.write_str("P"),
            RuleId::D1 => out.write_str("D1"),
            RuleId::D2 => out.write_str("D2"),
            RuleId::DnPlus(i) => write!(out, "D{i}+"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unrecognised logic name `{0}`")]
    UnknownName(String),
    #[error("duplicate suffix `{suffix}` in logic name `{name}`")]
    DuplicateSuffix { name: String, suffix: String },
    #[error("unknown axiom `{0}` (expected one of M, C, N, T, P, D)")]
    UnknownAxiom(String),
    #[error("D_n^+ requires n >= 1")]
    ZeroDplus,
}

const BASES: &[(&str, bool, bool, bool)] = &[
    // (name, monotonic, C, N); longest names first so prefixes match greedily.
    ("MCN", true, true, true),
    ("ECN", false, true, true),
    ("EC", false, true, false),
    ("EN", false, false, true),
    ("MC", true, true, false),
    ("MN", true, false, true),
    ("E", false, false, false),
    ("M", true, false, false),
    ("K", true, true, true),
];

impl LogicSpec {
    pub const E: LogicSpec = LogicSpec {
        monotonic: false,
        has_c: false,
        has_n: false,
        has_t: false,
        has_p: false,
        has_d: false,
        dplus: None,
    };

    /// The eight logics of the classical cube, in the order E, M, EC, EN,
    /// ECN, MC, MN, MCN.
    pub fn cube() -> Vec<LogicSpec> {
        ["E", "M", "EC", "EN", "ECN", "MC", "MN", "MCN"]
            .iter()
            .map(|n| parse_logic_name(n).expect("cube names parse"))
            .collect()
    }

    /// Builds a logic from an explicit axiom list such as `["M", "C", "N"]`.
    pub fn from_axioms<S: AsRef<str>>(axioms: &[S], dplus: Option<u32>) -> Result<LogicSpec, LogicError> {
        let mut l = LogicSpec::E;
        for a in axioms {
            let a = a.as_ref().trim();
            match a {
                "" | "E" => {}
                "M" => l.monotonic = true,
                "C" => l.has_c = true,
                "N" => l.has_n = true,
                "T" => l.has_t = true,
                "P" => l.has_p = true,
                "D" => l.has_d = true,
                "K" => {
                    l.monotonic = true;
                    l.has_c = true;
                    l.has_n = true;
                }
                other => return Err(LogicError::UnknownAxiom(other.to_string())),
            }
        }
        if dplus == Some(0) {
            return Err(LogicError::ZeroDplus);
        }
        l.dplus = dplus;
        Ok(l)
    }

    /// True for the eight logics of the classical cube (no T, P, D, D_n^+).
    pub fn is_cube(&self) -> bool {
        !self.has_t && !self.has_p && !self.has_d && self.dplus.is_none()
    }

    /// True when the logic contains M and C, so relational countermodels exist.
    pub fn is_regular(&self) -> bool {
        self.monotonic && self.has_c
    }

    /// The arity of the largest D-style rule (2 when none is larger).
    pub fn max_d_arity(&self) -> u32 {
        self.dplus.unwrap_or(0).max(2)
    }

    /// The rule set of the calculus for this logic.
    pub fn rule_set(&self) -> BTreeSet<RuleId> {
        self.ordered_rules().into_iter().collect()
    }

    /// All rules of the calculus in the fixed application order used by
    /// proof search; initial rules come first.
    pub fn ordered_rules(&self) -> Vec<RuleId> {
        use RuleId::*;
        let mut rules = vec![Init, BotL, TopR, AndL, OrL, ImpR, AndR, OrR, ImpL, BoxL];
        if self.has_t {
            rules.push(T);
        }
        if self.has_c {
            rules.push(C);
        }
        if self.has_n {
            rules.push(N);
        }
        rules.push(if self.monotonic { BoxRm } else { BoxR });
        if self.has_p {
            rules.push(P);
        }
        let mut dn = 0;
        if self.has_d {
            if self.monotonic {
                dn = 2;
            } else {
                rules.push(D1);
                rules.push(D2);
            }
        }
        dn = dn.max(self.dplus.unwrap_or(0));
        for i in 1..=dn {
            rules.push(DnPlus(i));
        }
        rules
    }

    /// Shortest canonical name, e.g. `K` for MCN or `ED3+`.
    pub fn name(&self) -> String {
        let mut s = match (self.monotonic, self.has_c, self.has_n) {
            (true, true, true) => "K".to_string(),
            (m, c, n) => {
                let mut s = String::from(if m { "M" } else { "E" });
                if c {
                    s.push('C');
                }
                if n {
                    s.push('N');
                }
                s
            }
        };
        if self.has_t {
            s.push('T');
        }
        if self.has_p {
            s.push('P');
        }
        if self.has_d {
            s.push('D');
        }
        if let Some(n) = self.dplus {
            s.push_str(&format!("D{n}+"));
        }
        s
    }
}

impl fmt::Display for LogicSpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(&self.name())
    }
}

impl std::str::FromStr for LogicSpec {
    type Err = LogicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_logic_name(s)
    }
}

/// Parses names like `E`, `MCN`, `K`, `EPD`, `ED3+` or `MCNT`.
pub fn parse_logic_name(text: &str) -> Result<LogicSpec, LogicError> {
    let name = text.trim();
    let unknown = || LogicError::UnknownName(name.to_string());
    let &(base, monotonic, has_c, has_n) = BASES
        .iter()
        .find(|(b, ..)| name.starts_with(b))
        .ok_or_else(unknown)?;
    let mut l = LogicSpec {
        monotonic,
        has_c,
        has_n,
        ..LogicSpec::E
    };
    let rest = &name.as_bytes()[base.len()..];
    let mut i = 0;
    let dup = |suffix: &str| LogicError::DuplicateSuffix {
        name: name.to_string(),
        suffix: suffix.to_string(),
    };
    while i < rest.len() {
        match rest[i] {
            b'T' => {
                if l.has_t {
                    return Err(dup("T"));
                }
                l.has_t = true;
                i += 1;
            }
            b'P' => {
                if l.has_p {
                    return Err(dup("P"));
                }
                l.has_p = true;
                i += 1;
            }
            b'D' => {
                let start = i + 1;
                let mut j = start;
                while j < rest.len() && rest[j].is_ascii_digit() {
                    j += 1;
                }
                if j > start {
                    if j >= rest.len() || rest[j] != b'+' {
                        return Err(unknown());
                    }
                    let digits = std::str::from_utf8(&rest[start..j]).map_err(|_| unknown())?;
                    let n: u32 = digits.parse().map_err(|_| unknown())?;
                    if n == 0 {
                        return Err(LogicError::ZeroDplus);
                    }
                    if l.dplus.is_some() {
                        return Err(dup("Dn+"));
                    }
                    l.dplus = Some(n);
                    i = j + 1;
                } else {
                    if l.has_d {
                        return Err(dup("D"));
                    }
                    l.has_d = true;
                    i += 1;
                }
            }
            _ => return Err(unknown()),
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RuleId::*;

    fn prop() -> Vec<RuleId> {
        vec![Init, BotL, TopR, AndL, OrL, ImpR, AndR, OrR, ImpL, BoxL]
    }

    fn set(extra: &[RuleId]) -> BTreeSet<RuleId> {
        prop().into_iter().chain(extra.iter().copied()).collect()
    }

    #[test]
    fn parses_names() {
        let k = parse_logic_name("MCN").unwrap();
        assert!(k.monotonic && k.has_c && k.has_n && !k.has_t);
        assert_eq!(parse_logic_name("K").unwrap(), k);
        assert_eq!(parse_logic_name("ED3+").unwrap().dplus, Some(3));
        assert_eq!(parse_logic_name("E").unwrap(), LogicSpec::E);
        let epd = parse_logic_name("EPD").unwrap();
        assert!(epd.has_p && epd.has_d && !epd.monotonic);
        assert!(parse_logic_name("ETT").is_err());
        assert!(parse_logic_name("ED2+D3+").is_err());
        assert!(parse_logic_name("X").is_err());
        assert!(parse_logic_name("ED0+").is_err());
        assert!(parse_logic_name("ED3").is_err());
    }

    #[test]
    fn canonical_names_round_trip() {
        for name in ["E", "M", "EC", "EN", "ECN", "MC", "MN", "K", "KT", "EPD", "ED3+", "KTPDD2+"] {
            let l = parse_logic_name(name).unwrap();
            assert_eq!(l.name(), name);
            assert_eq!(parse_logic_name(&l.name()).unwrap(), l);
        }
        assert_eq!(parse_logic_name("MCN").unwrap().name(), "K");
    }

    #[test]
    fn rule_sets_follow_the_table() {
        assert_eq!(LogicSpec::E.rule_set(), set(&[BoxR]));
        assert_eq!(
            parse_logic_name("MD").unwrap().rule_set(),
            set(&[BoxRm, DnPlus(1), DnPlus(2)])
        );
        assert_eq!(
            parse_logic_name("ED2+").unwrap().rule_set(),
            set(&[BoxR, DnPlus(1), DnPlus(2)])
        );
        assert_eq!(parse_logic_name("ED").unwrap().rule_set(), set(&[BoxR, D1, D2]));
        assert_eq!(
            parse_logic_name("K").unwrap().rule_set(),
            set(&[BoxRm, C, N])
        );
    }

    #[test]
    fn axiom_lists() {
        let l = LogicSpec::from_axioms(&["M", "C", "N"], Some(3)).unwrap();
        assert_eq!(l.name(), "KD3+");
        assert!(LogicSpec::from_axioms(&["Q"], None).is_err());
    }
}
