//! Which ranks of the ordered column norms power-based selection picks under
//! partial connectivity.
//!
//! With i.i.d. column norms every assignment of ranks to antennas is equally
//! likely. Walking the ranks from the largest down, rank `r` lands in group
//! `g` with probability proportional to the group's unassigned antennas, and
//! it is selected while the group still has budget left. The exact solver
//! runs this chain over a canonical state (multiset of per-group
//! `(unassigned, budget)` pairs plus the ranks selected so far), so its cost
//! grows with the number of distinct states rather than with `N!`.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::channel::RngStream;
use crate::connectivity::ConnectivityMap;
use crate::scalar::Exact;

/// Largest `N` solved exactly by default.
pub const DEFAULT_EXACT_LIMIT: usize = 12;
pub const DEFAULT_MC_SAMPLES: usize = 200_000;
const MC_CHUNK: usize = 10_000;

/// Distribution of the selected rank set (ranks from the largest, 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RankSetDistribution {
    pub sets: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    /// Present in exact mode.
    pub exact: Option<Vec<Exact>>,
    /// Present in Monte Carlo mode.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct RankSetEntry<'a> {
    ranks: &'a [usize],
    p: f64,
}

impl RankSetDistribution {
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `[{"ranks": [1, 3], "p": 0.3}, ...]`
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<RankSetEntry> =
            self.sets.iter().zip(&self.probs).map(|(ranks, &p)| RankSetEntry { ranks, p }).collect();
        serde_json::to_value(entries).unwrap_or_default()
    }

    /// Probability of one rank set, zero if it never occurs.
    pub fn prob_of(&self, ranks: &[usize]) -> f64 {
        self.sets.iter().position(|s| s == ranks).map_or(0.0, |i| self.probs[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankSetOptions {
    pub exact_limit: usize,
    pub mc_samples: usize,
    pub stream: RngStream,
}

impl Default for RankSetOptions {
    fn default() -> Self {
        Self { exact_limit: DEFAULT_EXACT_LIMIT, mc_samples: DEFAULT_MC_SAMPLES, stream: RngStream::new(0x5eed) }
    }
}

/// Exact below the enumeration limit, Monte Carlo (flagged by `samples`)
/// above it.
pub fn rank_set_distribution(map: &ConnectivityMap, options: &RankSetOptions) -> Result<RankSetDistribution, AnalysisError> {
    if map.n_antennas <= options.exact_limit.min(64) {
        rank_set_distribution_exact(map)
    } else {
        rank_set_distribution_mc(map, options.mc_samples, &options.stream)
    }
}

/// State of the rank-assignment chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ChainState {
    /// `(unassigned antennas, remaining budget)` of groups with budget left,
    /// sorted so equivalent groups collapse.
    open: Vec<(u32, u32)>,
    /// Unassigned antennas in groups whose budget is spent.
    closed: u32,
    selected: u64,
}

pub fn rank_set_distribution_exact(map: &ConnectivityMap) -> Result<RankSetDistribution, AnalysisError> {
    let n = map.n_antennas;
    if n > 64 {
        return Err(AnalysisError::EnumerationLimit { n, limit: 64 });
    }
    let mut open: Vec<(u32, u32)> =
        map.antenna_groups.iter().zip(&map.budgets).map(|(g, &b)| (g.len() as u32, b as u32)).filter(|&(_, b)| b > 0).collect();
    open.sort_unstable();
    let closed = map.antenna_groups.iter().zip(&map.budgets).filter(|&(_, &b)| b == 0).map(|(g, _)| g.len() as u32).sum();
    let mut frontier: HashMap<ChainState, Exact> = HashMap::new();
    frontier.insert(ChainState { open, closed, selected: 0 }, Ratio::from_integer(1));
    let mut done: BTreeMap<u64, Exact> = BTreeMap::new();
    for rank in 0..n {
        let mut next: HashMap<ChainState, Exact> = HashMap::new();
        for (state, p) in frontier {
            if state.open.is_empty() {
                *done.entry(state.selected).or_insert_with(Exact::zero) += p;
                continue;
            }
            let total: u32 = state.closed + state.open.iter().map(|g| g.0).sum::<u32>();
            if state.closed > 0 {
                let mut s = state.clone();
                s.closed -= 1;
                *next.entry(s).or_insert_with(Exact::zero) += p * Ratio::new(i64::from(state.closed), i64::from(total));
            }
            let mut i = 0;
            while i < state.open.len() {
                let group = state.open[i];
                let mult = state.open[i..].iter().take_while(|&&g| g == group).count();
                let weight = Ratio::new(i64::from(group.0) * mult as i64, i64::from(total));
                let mut s = state.clone();
                s.selected |= 1 << rank;
                let (slots, budget) = (group.0 - 1, group.1 - 1);
                s.open.remove(i);
                if budget == 0 {
                    s.closed += slots;
                } else {
                    s.open.push((slots, budget));
                    s.open.sort_unstable();
                }
                *next.entry(s).or_insert_with(Exact::zero) += p * weight;
                i += mult;
            }
        }
        frontier = next;
    }
    for (state, p) in frontier {
        if !state.open.is_empty() {
            return Err(AnalysisError::InvalidSpec("connectivity budgets exceed group sizes"));
        }
        *done.entry(state.selected).or_insert_with(Exact::zero) += p;
    }
    let mut entries: Vec<(Vec<usize>, Exact)> =
        done.into_iter().map(|(mask, p)| ((0..n).filter(|r| mask >> r & 1 == 1).map(|r| r + 1).collect(), p)).collect();
    entries.sort();
    Ok(RankSetDistribution {
        probs: entries.iter().map(|(_, p)| p.to_f64().unwrap_or(f64::NAN)).collect(),
        exact: Some(entries.iter().map(|(_, p)| *p).collect()),
        sets: entries.into_iter().map(|(s, _)| s).collect(),
        samples: None,
    })
}

/// Selected ranks when ranks `1..=N` are dealt to antennas in the order of
/// `labels` (group of the antenna receiving each rank).
fn selected_ranks(labels: &[usize], budgets: &[usize], left: &mut Vec<usize>) -> Vec<usize> {
    left.clear();
    left.extend_from_slice(budgets);
    let mut need: usize = budgets.iter().sum();
    let mut out = Vec::with_capacity(need);
    for (r, &g) in labels.iter().enumerate() {
        if need == 0 {
            break;
        }
        if left[g] > 0 {
            left[g] -= 1;
            need -= 1;
            out.push(r + 1);
        }
    }
    out
}

/// Random-permutation estimate with `samples` draws.
pub fn rank_set_distribution_mc(
    map: &ConnectivityMap,
    samples: usize,
    stream: &RngStream,
) -> Result<RankSetDistribution, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::InvalidSpec("Monte Carlo needs at least one sample"));
    }
    let owner = map.group_of_antenna();
    let chunks = samples.div_ceil(MC_CHUNK);
    let counts: Vec<BTreeMap<Vec<usize>, usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.rng(c as u64);
            let mut labels = owner.clone();
            let mut left = Vec::new();
            let mut counts = BTreeMap::new();
            let draws = MC_CHUNK.min(samples - c * MC_CHUNK);
            for _ in 0..draws {
                labels.shuffle(&mut rng);
                *counts.entry(selected_ranks(&labels, &map.budgets, &mut left)).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut total: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for chunk in counts {
        for (k, v) in chunk {
            *total.entry(k).or_insert(0) += v;
        }
    }
    Ok(RankSetDistribution {
        probs: total.values().map(|&c| c as f64 / samples as f64).collect(),
        sets: total.into_keys().collect(),
        exact: None,
        samples: Some(samples),
    })
}
