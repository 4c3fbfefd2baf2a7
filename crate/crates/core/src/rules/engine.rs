use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{FatigueLevel, FatigueSource, Levels, RuleError, RulePack};
use crate::kstore::{Fact, FactBase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiredRule {
    pub rule: String,
    pub individual: String,
    /// 1-based pass number.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub factbase: FactBase,
    pub fired: Vec<FiredRule>,
    /// Passes that asserted at least one membership.
    pub rounds: usize,
}

/// Evaluation order for [`infer_with`]. The default visits rules in pack
/// order and individuals in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalOrder {
    /// Permutation of rule indices.
    pub rule_order: Option<Vec<usize>>,
    /// Seed for shuffling anchor individuals on each visit.
    pub individual_seed: Option<u64>,
}

/// Forward chaining to fixpoint in the default order.
pub fn infer(fb: &FactBase, pack: &RulePack) -> Result<Inference, RuleError> {
    infer_with(fb, pack, &EvalOrder::default())
}

/// Forward chaining to fixpoint. Conclusions are asserted as soon as a rule
/// fires, so later rules in the same pass see them.
pub fn infer_with(fb: &FactBase, pack: &RulePack, order: &EvalOrder) -> Result<Inference, RuleError> {
    pack.validate(fb.taxonomy())?;
    let rule_order: Vec<usize> = match &order.rule_order {
        Some(p) => {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            assert!(sorted.iter().copied().eq(0..pack.len()), "rule_order is not a permutation of the pack");
            p.clone()
        }
        None => (0..pack.len()).collect(),
    };
    let mut rng = order.individual_seed.map(ChaCha8Rng::seed_from_u64);

    let mut work = fb.clone();
    let mut fired = Vec::new();
    let mut rounds = 0;
    let mut pass = 0;
    loop {
        pass += 1;
        let mut changed = false;
        for &ri in &rule_order {
            let rule = &pack.rules()[ri];
            let satisfied = rule
                .requires
                .iter()
                .all(|c| work.is_inhabited(c).expect("classes validated"));
            if !satisfied {
                continue;
            }
            let mut anchors: Vec<String> =
                work.query_class(&rule.anchor_class).expect("classes validated").into_iter().collect();
            if let Some(rng) = rng.as_mut() {
                anchors.shuffle(rng);
            }
            for ind in anchors {
                let fact = Fact::member(ind.clone(), rule.conclusion.clone());
                if work.insert(&fact).expect("classes validated") {
                    changed = true;
                    fired.push(FiredRule { rule: rule.name.clone(), individual: ind, iteration: pass });
                }
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
    }
    Ok(Inference { factbase: work, fired, rounds })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{individual}` is entailed in conflicting {origin} levels {levels:?}")]
pub struct AmbiguityError {
    pub origin: FatigueSource,
    pub individual: String,
    pub levels: Vec<FatigueLevel>,
}

/// Per source, the most severe level any anchor individual is entailed in.
/// Where one level class is a subclass of another only the more specific one
/// counts; two unrelated levels on one individual are an error.
pub fn read_fatigue(fb: &FactBase) -> Result<Levels, AmbiguityError> {
    let tax = fb.taxonomy();
    let mut out = Levels::new();
    for src in FatigueSource::SUB_SOURCES {
        let Ok(anchors) = fb.query_class(src.anchor_class()) else { continue };
        for ind in anchors {
            let entailed: Vec<(FatigueLevel, String)> = FatigueLevel::ALL
                .into_iter()
                .map(|l| (l, src.level_class(l)))
                .filter(|(_, c)| fb.entails(&ind, c).unwrap_or(false))
                .collect();
            let specific: BTreeSet<FatigueLevel> = entailed
                .iter()
                .filter(|(_, c)| !entailed.iter().any(|(_, d)| d != c && tax.is_subclass(d, c)))
                .map(|(l, _)| *l)
                .collect();
            match specific.len() {
                0 => {}
                1 => {
                    let level = *specific.first().expect("one element");
                    let slot = out.entry(src).or_insert(level);
                    *slot = (*slot).max(level);
                }
                _ => {
                    return Err(AmbiguityError { origin: src, individual: ind, levels: specific.into_iter().collect() })
                }
            }
        }
    }
    Ok(out)
}
