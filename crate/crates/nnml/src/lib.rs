//! Proof search, countermodel extraction and labelled translation for
//! non-normal modal logics: the classical cube E/M/EC/EN/ECN/MC/MN/MCN and its
//! deontic extensions with T, P, D and RD_n^+.

pub mod calculus;
pub mod batch;
pub mod formula;
pub mod gen;
pub mod hypersequent;
pub mod labelled;
pub mod logic;
pub mod models;
pub mod search;

pub use formula::{parse, Formula};
pub use hypersequent::{parse_hypersequent, parse_input, Block, Hypersequent, Sequent};
pub use logic::{parse_logic_name, LogicSpec, RuleId};
