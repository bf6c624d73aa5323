//! Batch evaluation over corpora: a data-parallel map (rayon) with a
//! sequential fallback when the `parallel` feature is disabled. Results keep
//! input order, so aggregation is deterministic either way.

use crate::hypersequent::Hypersequent;
use crate::logic::LogicSpec;
use crate::search::{self, SearchConfig, SearchError, SearchReport};

/// Whether batch maps run in parallel in this build.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// Applies `f` to every item, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Applies `f` to every item, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential map, available in every build (used as the baseline).
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Runs the invertible search on every input.
pub fn prove_all(inputs: &[Hypersequent], l: &LogicSpec, config: &SearchConfig) -> Vec<Result<SearchReport, SearchError>> {
    map(inputs, |h| search::prove_with(h, l, config))
}

/// Runs the invertible search on every input, sequentially.
pub fn prove_all_sequential(
    inputs: &[Hypersequent],
    l: &LogicSpec,
    config: &SearchConfig,
) -> Vec<Result<SearchReport, SearchError>> {
    map_sequential(inputs, |h| search::prove_with(h, l, config))
}

/// Aggregate counts over a batch of searches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub proved: usize,
    pub refuted: usize,
    pub exhausted: usize,
    pub max_components: usize,
    pub max_component_size: usize,
    pub visited: usize,
}

pub fn summarise(results: &[Result<SearchReport, SearchError>]) -> BatchSummary {
    let mut s = BatchSummary::default();
    for r in results {
        match r {
            Ok(rep) => {
                if rep.outcome.is_proved() {
                    s.proved += 1;
                } else {
                    s.refuted += 1;
                }
                s.visited += rep.stats.visited;
                s.max_components = s.max_components.max(rep.stats.max_components);
                s.max_component_size = s.max_component_size.max(rep.stats.max_component_size);
            }
            Err(SearchError::BudgetExceeded { stats, .. }) => {
                s.exhausted += 1;
                s.visited += stats.visited;
            }
        }
    }
    s
}
