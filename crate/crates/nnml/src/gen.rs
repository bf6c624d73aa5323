//! Seeded random generation of formulas, hypersequents and models, and the
//! logic list used for corpus runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Formula;
use crate::hypersequent::{Block, Hypersequent, Sequent};
use crate::logic::{parse_logic_name, LogicSpec};
use crate::models::{BiModel, Pair, StandardModel, Valuation, WorldSet};

/// The deterministic generator used throughout.
pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape limits for random formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaShape {
    pub atoms: Vec<String>,
    /// Maximum formula-node count.
    pub max_size: usize,
    /// Maximum nesting of boxes.
    pub max_depth: usize,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            atoms: ["p", "q", "r"].iter().map(|s| s.to_string()).collect(),
            max_size: 25,
            max_depth: 3,
        }
    }
}

impl FormulaShape {
    pub fn with_size(max_size: usize) -> Self {
        FormulaShape { max_size, ..Self::default() }
    }
}

/// A random formula with node count at most `shape.max_size` and modal
/// depth at most `shape.max_depth`; the size is drawn uniformly first.
pub fn random_formula(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    let size = rng.gen_range(1..=shape.max_size.max(1));
    formula_of_size(rng, shape, size, shape.max_depth)
}

/// A random formula of exactly `size` nodes (counting the `⊥` of a
/// negation) and modal depth at most `depth`.
pub fn formula_of_size(rng: &mut impl Rng, shape: &FormulaShape, size: usize, depth: usize) -> Formula {
    if size <= 1 {
        return match rng.gen_range(0..20) {
            0 => Formula::Top,
            1 => Formula::Bottom,
            _ => Formula::atom(shape.atoms.choose(rng).expect("atoms")),
        };
    }
    // 0: box, 1: negation, 2..: binary connective.
    let mut choices = Vec::new();
    if depth > 0 {
        choices.extend([0, 0]);
    }
    if size >= 3 {
        choices.push(1);
        choices.extend([2, 3, 4, 2, 3, 4]);
    }
    match choices.choose(rng) {
        Some(0) => Formula::boxed(formula_of_size(rng, shape, size - 1, depth - 1)),
        Some(1) => Formula::not(formula_of_size(rng, shape, size - 2, depth)),
        Some(&k) => {
            let left = rng.gen_range(1..=size - 2);
            let a = formula_of_size(rng, shape, left, depth);
            let b = formula_of_size(rng, shape, size - 1 - left, depth);
            match k {
                2 => Formula::and(a, b),
                3 => Formula::or(a, b),
                _ => Formula::imp(a, b),
            }
        }
        // size 2 without modal depth left: fall back to a smaller formula.
        None => formula_of_size(rng, shape, 1, depth),
    }
}

/// `count` formulas from `seed`.
pub fn formula_corpus(seed: u64, count: usize, shape: &FormulaShape) -> Vec<Formula> {
    let mut r = rng(seed);
    (0..count).map(|_| random_formula(&mut r, shape)).collect()
}

/// A random sequent with up to `width` formulas per side and up to
/// `blocks` blocks, from formulas of at most `shape.max_size` nodes.
pub fn random_sequent(rng: &mut impl Rng, shape: &FormulaShape, width: usize, blocks: usize) -> Sequent {
    let mut side = Vec::new();
    for _ in 0..2 {
        let n = rng.gen_range(0..=width);
        side.push((0..n).map(|_| random_formula(rng, shape)).collect::<Vec<_>>());
    }
    let succedent = side.pop().expect("two sides");
    let antecedent = side.pop().expect("two sides");
    let nb = rng.gen_range(0..=blocks);
    let blocks = (0..nb)
        .map(|_| {
            let k = rng.gen_range(1..=2);
            Block::new((0..k).map(|_| random_formula(rng, shape)).collect()).expect("nonempty")
        })
        .collect();
    Sequent::new(antecedent, blocks, succedent)
}

/// A random hypersequent with 1..=`components` components.
pub fn random_hypersequent(rng: &mut impl Rng, shape: &FormulaShape, components: usize) -> Hypersequent {
    let n = rng.gen_range(1..=components.max(1));
    Hypersequent::new((0..n).map(|_| random_sequent(rng, shape, 2, 1)).collect())
}

fn random_set(rng: &mut impl Rng, worlds: &[usize]) -> WorldSet {
    worlds.iter().filter(|_| rng.gen_bool(0.5)).copied().collect()
}

fn random_valuation(rng: &mut impl Rng, worlds: &[usize], atoms: &[String]) -> Valuation {
    atoms.iter().map(|a| (a.clone(), random_set(rng, worlds))).collect()
}

/// A random bi-neighbourhood model with 1..=`max_worlds` worlds and up to
/// `max_pairs` pairs per world.
pub fn random_bi_model(rng: &mut impl Rng, max_worlds: usize, max_pairs: usize, atoms: &[String]) -> BiModel {
    let n = rng.gen_range(1..=max_worlds.max(1));
    let worlds: Vec<usize> = (1..=n).collect();
    let nbhd = worlds
        .iter()
        .map(|&w| {
            let k = rng.gen_range(0..=max_pairs);
            let pairs: BTreeSet<Pair> = (0..k)
                .map(|_| Pair { plus: random_set(rng, &worlds), minus: random_set(rng, &worlds) })
                .collect();
            (w, pairs)
        })
        .collect();
    BiModel {
        worlds: worlds.iter().copied().collect(),
        valuation: random_valuation(rng, &worlds, atoms),
        nbhd,
    }
}

/// A random standard model with 1..=`max_worlds` worlds and up to
/// `max_sets` neighbourhoods per world.
pub fn random_standard_model(rng: &mut impl Rng, max_worlds: usize, max_sets: usize, atoms: &[String]) -> StandardModel {
    let n = rng.gen_range(1..=max_worlds.max(1));
    let worlds: Vec<usize> = (1..=n).collect();
    let nbhd: BTreeMap<usize, BTreeSet<WorldSet>> = worlds
        .iter()
        .map(|&w| {
            let k = rng.gen_range(0..=max_sets);
            (w, (0..k).map(|_| random_set(rng, &worlds)).collect())
        })
        .collect();
    StandardModel {
        worlds: worlds.iter().copied().collect(),
        valuation: random_valuation(rng, &worlds, atoms),
        nbhd,
    }
}

/// The logics of a corpus run: every cube logic extended with each of the
/// suffixes ∅, T, P, D, D2+, D3+, skipping combinations equivalent to an
/// earlier one (MD ≡ MD2+; ECP ≡ ECD_n^+; MCP ≡ MCD ≡ MCD_n^+; ECNP ≡ ECND ≡
/// ECND_n^+; KP ≡ KD ≡ KD_n^+; MND ≡ MND2+).
pub fn corpus_logics() -> Vec<LogicSpec> {
    let mut out = Vec::new();
    for base in ["E", "M", "EC", "EN", "ECN", "MC", "MN", "K"] {
        for suffix in ["", "T", "P", "D", "D2+", "D3+"] {
            let name = format!("{base}{suffix}");
            let l = parse_logic_name(&name).expect("corpus names parse");
            let redundant = match (l.monotonic, l.has_c, suffix) {
                // Monotonic without C: D already yields D1+ and D2+.
                (true, false, "D2+") => true,
                // With C, D_n^+ collapses onto P (and onto D when monotonic or with N).
                (false, true, "D2+" | "D3+") => true,
                (true, true, "D" | "D2+" | "D3+") => true,
                (false, true, "D") if l.has_n => true,
                _ => false,
            };
            if !redundant {
                out.push(l);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas_respect_shape() {
        let shape = FormulaShape::default();
        let mut r = rng(7);
        for _ in 0..500 {
            let f = random_formula(&mut r, &shape);
            assert!(f.size() <= shape.max_size, "{f}");
            assert!(f.modal_depth() <= shape.max_depth, "{f}");
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let shape = FormulaShape::default();
        assert_eq!(formula_corpus(3, 20, &shape), formula_corpus(3, 20, &shape));
        assert_ne!(formula_corpus(3, 20, &shape), formula_corpus(4, 20, &shape));
    }

    #[test]
    fn corpus_logics_are_distinct() {
        let logics = corpus_logics();
        assert_eq!(logics.len(), 35);
        let names: BTreeSet<String> = logics.iter().map(|l| l.name()).collect();
        assert_eq!(names.len(), logics.len());
        assert!(names.contains("ED3+") && names.contains("MD") && !names.contains("MD2+"));
    }

    #[test]
    fn random_models_are_well_formed() {
        let atoms = vec!["p".to_string()];
        let mut r = rng(1);
        for _ in 0..50 {
            let m = random_bi_model(&mut r, 6, 4, &atoms);
            assert!(m.worlds.len() <= 6);
            for ps in m.nbhd.values() {
                assert!(ps.len() <= 4);
                for p in ps {
                    assert!(p.plus.is_subset(&m.worlds) && p.minus.is_subset(&m.worlds));
                }
            }
        }
    }
}
