//! Property tests over random formulas, hypersequents and models.

use std::collections::BTreeSet;

use proptest::prelude::*;

use nnml::calculus::{all_instances, applicable_instances, is_saturated};
use nnml::gen::{corpus_logics, random_bi_model, random_formula, random_hypersequent, random_standard_model, rng, FormulaShape};
use nnml::labelled::translate_hypersequent;
use nnml::models::{
    bi_from_standard, check_bi_conditions, extract_bi_countermodel, standard_from_bi_fine, standard_from_bi_rough, Semantics,
    DEFAULT_ROUGH_CAP,
};
use nnml::search::{prove_with, SearchConfig, SearchOutcome};
use nnml::{parse, parse_hypersequent, Formula, Hypersequent, LogicSpec, Sequent};

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Top),
        Just(Formula::Bottom),
        prop::sample::select(vec!["p", "q", "r", "s1"]).prop_map(Formula::atom),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::boxed),
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
        ]
    })
}

fn logic() -> impl Strategy<Value = LogicSpec> {
    prop::sample::select(corpus_logics())
}

fn small() -> FormulaShape {
    FormulaShape { atoms: vec!["p".into(), "q".into()], max_size: 6, max_depth: 2 }
}

fn hypersequent(seed: u64) -> Hypersequent {
    random_hypersequent(&mut rng(seed), &small(), 3)
}

fn proved(h: &Hypersequent, l: &LogicSpec) -> bool {
    prove_with(h, l, &SearchConfig { budget: 1_000_000 }).expect("within budget").outcome.is_proved()
}

fn edit(h: &Hypersequent, id: usize, f: impl FnOnce(&mut Sequent)) -> Hypersequent {
    let mut out = h.clone();
    f(out.component_mut(id).expect("component"));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn formulas_round_trip(f in formula()) {
        prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn hypersequents_round_trip(seed in any::<u64>()) {
        let h = random_hypersequent(&mut rng(seed), &FormulaShape::with_size(10), 4);
        prop_assert_eq!(parse_hypersequent(&h.to_string()).unwrap(), h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Along a search, nodes where a rule was applied are unsaturated and
    /// have an applicable instance; a failed search ends in a saturated
    /// leaf with none.
    #[test]
    fn saturation_matches_rule_applicability(seed in any::<u64>(), l in logic()) {
        let f = random_formula(&mut rng(seed), &FormulaShape::with_size(14));
        match prove_with(&Hypersequent::goal(f), &l, &SearchConfig { budget: 1_000_000 }).unwrap().outcome {
            SearchOutcome::Proved(d) => {
                for n in d.nodes().into_iter().filter(|n| !n.rule.is_axiom()) {
                    prop_assert!(!is_saturated(&n.conclusion, &l), "{}", n.conclusion);
                    prop_assert!(!applicable_instances(&n.conclusion, &l).is_empty());
                }
            }
            SearchOutcome::Refuted(r) => {
                prop_assert!(is_saturated(&r.leaf, &l), "{}", r.leaf);
                prop_assert!(applicable_instances(&r.leaf, &l).is_empty());
            }
        }
    }

    #[test]
    fn weakening_preserves_derivability(seed in any::<u64>(), l in logic(), side in 0..3usize) {
        let h = hypersequent(seed);
        prop_assume!(proved(&h, &l));
        let mut r = rng(seed ^ 0xabc);
        let a = random_formula(&mut r, &small());
        let id = h.components()[0].id;
        let w = edit(&h, id, |s| match side {
            0 => s.add_antecedent(a),
            1 => s.add_succedent(a),
            _ => s.add_block(nnml::Block::singleton(a)),
        });
        prop_assert!(proved(&w, &l), "{} weakened to {}", h, w);
    }

    #[test]
    fn contraction_preserves_derivability(seed in any::<u64>(), l in logic()) {
        let h = hypersequent(seed);
        let id = h.components()[0].id;
        let s = h.component(id).unwrap().clone();
        let dup = if let Some(a) = s.antecedent().first() {
            edit(&h, id, |s| s.add_antecedent(a.clone()))
        } else if let Some(a) = s.succedent().first() {
            edit(&h, id, |s| s.add_succedent(a.clone()))
        } else {
            let mut e = h.clone();
            e.push(s.clone());
            e
        };
        prop_assume!(proved(&dup, &l));
        prop_assert!(proved(&h, &l), "{} contracted to {}", dup, h);
    }

    #[test]
    fn cut_is_admissible(seed in any::<u64>(), l in logic()) {
        let h = hypersequent(seed);
        let a = random_formula(&mut rng(seed ^ 0x5eed), &small());
        let id = h.components()[0].id;
        let right = edit(&h, id, |s| s.add_succedent(a.clone()));
        let left = edit(&h, id, |s| s.add_antecedent(a.clone()));
        prop_assume!(proved(&right, &l) && proved(&left, &l));
        prop_assert!(proved(&h, &l), "cut on {} from {} and {}", a, right, left);
    }

    /// A component derivable on its own makes every hypersequent containing
    /// it derivable (external weakening), and a derivable hypersequent has no
    /// countermodel in which every component fails.
    #[test]
    fn component_projection(seed in any::<u64>(), l in logic()) {
        let h = hypersequent(seed);
        for c in h.components() {
            let alone = Hypersequent::new(vec![c.sequent.clone()]);
            if proved(&alone, &l) {
                prop_assert!(proved(&h, &l), "{} derivable but not {}", alone, h);
            }
        }
    }

    #[test]
    fn rules_are_invertible(seed in any::<u64>(), l in logic(), pick in any::<prop::sample::Index>()) {
        let h = hypersequent(seed);
        prop_assume!(proved(&h, &l));
        let instances = all_instances(&h, &l);
        prop_assume!(!instances.is_empty());
        let inst = pick.get(&instances);
        for p in &inst.premisses {
            prop_assert!(proved(p, &l), "{} on {}: premiss {} not derivable", inst.rule, h, p);
        }
    }

    #[test]
    fn countermodels_falsify_refuted_hypersequents(seed in any::<u64>(), l in logic()) {
        let h = hypersequent(seed);
        if let SearchOutcome::Refuted(r) = prove_with(&h, &l, &SearchConfig { budget: 1_000_000 }).unwrap().outcome {
            let m = extract_bi_countermodel(&r.leaf, &l).unwrap();
            prop_assert!(check_bi_conditions(&m, &l).passed());
            for c in h.components() {
                let f = c.sequent.interpret();
                prop_assert!(m.worlds.iter().any(|&w| !m.force(w, &f).unwrap()), "{} not falsified", c.sequent);
            }
        }
    }

    #[test]
    fn transformations_preserve_forcing(seed in any::<u64>()) {
        let atoms: Vec<String> = vec!["p".into(), "q".into()];
        let mut r = rng(seed);
        let bi = random_bi_model(&mut r, 5, 3, &atoms);
        let st = random_standard_model(&mut r, 5, 3, &atoms);
        let fs: Vec<Formula> = (0..10).map(|_| random_formula(&mut r, &small())).collect();
        let s: BTreeSet<Formula> = fs.iter().flat_map(|f| f.subformulas()).collect();
        let rough = standard_from_bi_rough(&bi, DEFAULT_ROUGH_CAP).unwrap();
        let fine = standard_from_bi_fine(&bi, &s, false, DEFAULT_ROUGH_CAP).unwrap();
        let back = bi_from_standard(&st, false);
        for f in &fs {
            prop_assert_eq!(bi.truth_set(f), rough.truth_set(f), "rough on {}", f);
            prop_assert_eq!(bi.truth_set(f), fine.truth_set(f), "fine on {}", f);
            prop_assert_eq!(st.truth_set(f), back.truth_set(f), "standard to bi on {}", f);
        }
    }

    /// Distinct hypersequents have distinct labelled images.
    #[test]
    fn labelled_translation_is_injective(a in any::<u64>(), b in any::<u64>()) {
        let l = LogicSpec::E;
        let (g, h) = (hypersequent(a), hypersequent(b));
        let (tg, th) = (translate_hypersequent(&g, &l).unwrap(), translate_hypersequent(&h, &l).unwrap());
        prop_assert_eq!(g == h, tg == th, "{} vs {}", g, h);
    }
}

#[test]
fn labelled_translation_separates_near_misses() {
    let l = LogicSpec::E;
    let inputs = ["<p, q> =>", "<p>, <q> =>", "<p> => q", "p => q", "=> p | => q", "=> p, q", "<p, p> =>", "<p> =>"];
    let images: BTreeSet<String> = inputs
        .iter()
        .map(|s| translate_hypersequent(&parse_hypersequent(s).unwrap(), &l).unwrap().to_string())
        .collect();
    assert_eq!(images.len(), inputs.len());
}
