//! Partial-connectivity structure of the interleaved switching fabric.
//!
//! Antennas are split into disjoint groups, each served by a disjoint set of
//! RF chains. A selection is implementable iff it activates exactly as many
//! antennas of every group as that group has chains.
//!
//! Indices are 0-based in memory and 1-based in the JSON form.

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConnectivityError {
    #[error("invalid dimensions: need 1 <= M <= N, got N={n}, M={m}")]
    InvalidDimensions { n: usize, m: usize },
    #[error("inconsistent connectivity map for N={n}, M={m}: {reason}")]
    InconsistentMap { n: usize, m: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityMap {
    pub n_antennas: usize,
    pub n_chains: usize,
    /// Number of groups (one selection constraint per group).
    pub s_cons: usize,
    /// Index stride between antennas on a chain.
    pub n_dist: usize,
    /// Index stride between chains sharing antennas.
    pub m_dist: usize,
    /// Antennas that can reach more than one chain.
    pub n_overlap: usize,
    pub antenna_groups: Vec<Vec<usize>>,
    pub chain_groups: Vec<Vec<usize>>,
    pub budgets: Vec<usize>,
    /// Single group covering everything: no selection constraint at all.
    pub unconstrained: bool,
}

impl ConnectivityMap {
    /// One group holding every antenna and every chain.
    pub fn fully_flexible(n: usize, m: usize) -> Result<Self, ConnectivityError> {
        if m < 1 || m > n {
            return Err(ConnectivityError::InvalidDimensions { n, m });
        }
        Ok(Self {
            n_antennas: n,
            n_chains: m,
            s_cons: 1,
            n_dist: 1,
            m_dist: 1,
            n_overlap: 0,
            antenna_groups: vec![(0..n).collect()],
            chain_groups: vec![(0..m).collect()],
            budgets: vec![m],
            unconstrained: true,
        })
    }

    /// Group index of every antenna.
    pub fn group_of_antenna(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.n_antennas];
        for (g, members) in self.antenna_groups.iter().enumerate() {
            for &a in members {
                owner[a] = g;
            }
        }
        owner
    }

    /// Checks the partition and budget invariants.
    pub fn validate(&self) -> Result<(), ConnectivityError> {
        let fail = |reason: String| ConnectivityError::InconsistentMap { n: self.n_antennas, m: self.n_chains, reason };
        if self.antenna_groups.len() != self.chain_groups.len() || self.budgets.len() != self.antenna_groups.len() {
            return Err(fail("group, chain and budget counts differ".into()));
        }
        check_partition(&self.antenna_groups, self.n_antennas).map_err(|r| fail(format!("antennas: {r}")))?;
        check_partition(&self.chain_groups, self.n_chains).map_err(|r| fail(format!("chains: {r}")))?;
        for (i, ((ants, chains), &b)) in self.antenna_groups.iter().zip(&self.chain_groups).zip(&self.budgets).enumerate() {
            if b != chains.len() {
                return Err(fail(format!("group {} budget {b} != {} chains", i + 1, chains.len())));
            }
            if b == 0 || b > ants.len() {
                return Err(fail(format!("group {} budget {b} not in 1..={}", i + 1, ants.len())));
            }
        }
        if self.budgets.iter().sum::<usize>() != self.n_chains {
            return Err(fail("budgets do not sum to M".into()));
        }
        Ok(())
    }

    /// Whether `selected` activates exactly `budgets[i]` antennas of group `i`.
    pub fn admits(&self, selected: &[usize]) -> bool {
        let owner = self.group_of_antenna();
        let mut used = vec![0usize; self.budgets.len()];
        for &a in selected {
            match owner.get(a) {
                Some(&g) if g != usize::MAX => used[g] += 1,
                _ => return false,
            }
        }
        used == self.budgets
    }

    /// `{"groups": [[1, 3, 5], [2, 4]], "chains": [[1], [2]]}`, 1-based.
    pub fn to_json(&self) -> serde_json::Value {
        let one_based = |sets: &[Vec<usize>]| -> Vec<Vec<usize>> {
            sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect()
        };
        json!({
            "groups": one_based(&self.antenna_groups),
            "chains": one_based(&self.chain_groups),
        })
    }
}

fn check_partition(sets: &[Vec<usize>], size: usize) -> Result<(), String> {
    let mut seen = vec![false; size];
    for s in sets {
        if s.is_empty() {
            return Err("empty group".into());
        }
        for &i in s {
            if i >= size {
                return Err(format!("index {} out of range", i + 1));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(format!("index {} in two groups", i + 1));
            }
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(i) => Err(format!("index {} uncovered", i + 1)),
        None => Ok(()),
    }
}

/// `{i, i + stride, ...}` within `1..=len`, returned 0-based.
fn strided(i: usize, stride: usize, len: usize) -> Vec<usize> {
    (i..=len).step_by(stride).map(|x| x - 1).collect()
}

/// Builds the interleaved connectivity map for `n` antennas and `m` chains.
///
/// `m == n` yields the unconstrained single-group map.
pub fn build_connectivity(n: usize, m: usize) -> Result<ConnectivityMap, ConnectivityError> {
    if m < 1 || m > n {
        return Err(ConnectivityError::InvalidDimensions { n, m });
    }
    if m == n {
        return ConnectivityMap::fully_flexible(n, m);
    }
    let n_overlap = (2 * m).saturating_sub(n);
    let s_cons = m - n_overlap;
    let map = if n / m >= 2 {
        // every antenna hangs off exactly one chain
        let antenna_groups = (1..=s_cons).map(|i| strided(i, m, n)).collect();
        let chain_groups: Vec<Vec<usize>> = (0..s_cons).map(|i| vec![i]).collect();
        ConnectivityMap {
            n_antennas: n,
            n_chains: m,
            s_cons,
            n_dist: m,
            m_dist: 1,
            n_overlap,
            antenna_groups,
            budgets: vec![1; s_cons],
            chain_groups,
            unconstrained: s_cons == 1,
        }
    } else {
        let dist = n - m;
        let antenna_groups = (1..=s_cons).map(|i| strided(i, dist, n)).collect();
        let chain_groups: Vec<Vec<usize>> = (1..=s_cons).map(|i| strided(i, dist, m)).collect();
        ConnectivityMap {
            n_antennas: n,
            n_chains: m,
            s_cons,
            n_dist: dist,
            m_dist: dist,
            n_overlap,
            antenna_groups,
            budgets: chain_groups.iter().map(Vec::len).collect(),
            chain_groups,
            unconstrained: s_cons == 1,
        }
    };
    map.validate()?;
    Ok(map)
}
