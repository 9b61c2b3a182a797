//! Analytical ergodic-capacity approximations for power-based selection.
//!
//! The selected channel is modelled as an i.i.d. matrix `G` scaled by the
//! average power of the ordered column norms that the selection keeps.
//! Fully flexible switching always keeps the `M` largest norms; partial
//! connectivity keeps a random rank set whose law comes from [`rank_sets`].

pub mod quadrature;
pub mod rank_sets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{iid_matrix, RngStream};
use crate::linalg::CMatrix;
use crate::scalar::{real, to_f64, CompensatedSum, MeanStderr, Real};
use crate::selection::weighted_log2_det;

pub use quadrature::{moment_ordered_norm, GaussJacobi, OrderStatSpec, OrderStatistics};
pub use rank_sets::{DEFAULT_EXACT_LIMIT, DEFAULT_MC_SAMPLES, rank_set_distribution, rank_set_distribution_exact, rank_set_distribution_mc, RankSetDistribution, RankSetOptions};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid analysis parameters: {0}")]
    InvalidSpec(&'static str),
    #[error("rank {t} outside 1..={n}")]
    RankOutOfRange { t: usize, n: usize },
    #[error("non-finite quadrature result {0}")]
    NonFinite(f64),
    #[error("exact enumeration supports N <= {limit}, got {n}")]
    EnumerationLimit { n: usize, limit: usize },
    #[error("cannot select {m} of {n} antennas")]
    InvalidCount { n: usize, m: usize },
}

/// Average power factor of the selected columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerScaling<T: Real> {
    pub value: T,
    /// `(P(T_j), P̂_j)` per rank set, for the mixture approximation.
    pub per_set: Option<Vec<(T, T)>>,
}

/// `(1/(K M)) Σ_{i<=M} E[B_{N-i+1:N}]`: the `M` largest norms.
pub fn power_scaling_ff<T: Real>(m: usize, stats: &OrderStatistics<T>) -> Result<PowerScaling<T>, AnalysisError> {
    let OrderStatSpec { n, k, .. } = *stats.spec();
    if m == 0 || m > n {
        return Err(AnalysisError::InvalidCount { n, m });
    }
    let mut sum = T::zero();
    for i in 1..=m {
        sum += stats.moment(n - i + 1)?;
    }
    Ok(PowerScaling { value: sum / real((k * m) as f64), per_set: None })
}

/// `Σ_j P(T_j) P̂_j` with `P̂_j` the scaling of rank set `j`.
pub fn power_scaling_pc<T: Real>(dist: &RankSetDistribution, stats: &OrderStatistics<T>) -> Result<PowerScaling<T>, AnalysisError> {
    let OrderStatSpec { n, k, .. } = *stats.spec();
    let moments = stats.all_moments()?;
    let mut per_set = Vec::with_capacity(dist.sets.len());
    let mut value = T::zero();
    for (set, &p) in dist.sets.iter().zip(&dist.probs) {
        let mut s = T::zero();
        for &rank in set {
            if rank == 0 || rank > n {
                return Err(AnalysisError::RankOutOfRange { t: rank, n });
            }
            // ranks count from the largest; moments from the smallest
            s += moments[n - rank];
        }
        let p_hat = s / real((k * set.len()) as f64);
        let p = real::<T>(p);
        value += p * p_hat;
        per_set.push((p, p_hat));
    }
    Ok(PowerScaling { value, per_set: Some(per_set) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApproxMode {
    /// One averaged scaling factor.
    Single,
    /// Probability-weighted capacities of the per-set scalings.
    Mixture,
}

/// `E_G[log2 det(I + ρ P̃ G Gᴴ)]` (single) or
/// `Σ_j P(T_j) E_G[log2 det(I + ρ P̂_j G Gᴴ)]` (mixture), with `G` a K x M
/// i.i.d. `CN(0, 1)` matrix. Both modes reuse the same `G` draws, so their
/// difference carries no independent sampling noise.
pub fn approx_capacity<T: Real>(
    ps: &PowerScaling<T>,
    k: usize,
    m: usize,
    rho: T,
    mode: ApproxMode,
    g_trials: usize,
    stream: &RngStream,
) -> Result<MeanStderr, AnalysisError> {
    if g_trials == 0 || k == 0 || m == 0 {
        return Err(AnalysisError::InvalidSpec("need K, M and g_trials >= 1"));
    }
    if !(rho > T::zero()) {
        return Err(AnalysisError::InvalidSpec("rho must be positive"));
    }
    let mixture: Vec<(T, T)> = match (mode, &ps.per_set) {
        (ApproxMode::Mixture, Some(sets)) => sets.clone(),
        _ => vec![(T::one(), ps.value)],
    };
    let ones = vec![T::one(); m];
    let samples: Vec<f64> = (0..g_trials as u64)
        .map(|t| {
            let g: CMatrix<T> = iid_matrix(k, m, &mut stream.rng(t));
            let mut acc = CompensatedSum::default();
            for &(p, scale) in &mixture {
                if p > T::zero() && scale > T::zero() {
                    let v = weighted_log2_det(&g, &ones, rho * scale).map_or(f64::NAN, to_f64);
                    acc.add(to_f64(p) * v);
                }
            }
            acc.value()
        })
        .collect();
    Ok(MeanStderr::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::build_connectivity;

    #[test]
    fn full_selection_has_unit_scaling() {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(8, 2)).unwrap();
        let ps = power_scaling_ff(8, &stats).unwrap();
        assert!((ps.value - 1.0).abs() < 1e-3, "{}", ps.value);
    }

    #[test]
    fn ff_scaling_decreases_with_m() {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(16, 4)).unwrap();
        let vals: Vec<f64> = (1..=16).map(|m| power_scaling_ff(m, &stats).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn pc_scaling_matches_mixture_formula() {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(5, 2)).unwrap();
        let dist = rank_set_distribution_exact(&build_connectivity(5, 2).unwrap()).unwrap();
        let ps = power_scaling_pc(&dist, &stats).unwrap();
        let b = |rank: usize| stats.moment(5 - rank + 1).unwrap();
        let p_hat = |a: usize, c: usize| (b(a) + b(c)) / 4.0;
        let expected = 0.6 * p_hat(1, 2) + 0.3 * p_hat(1, 3) + 0.1 * p_hat(1, 4);
        assert!((ps.value - expected).abs() < 1e-12);
        assert!(ps.value <= power_scaling_ff(2, &stats).unwrap().value);
    }

    #[test]
    fn degenerate_map_reproduces_ff() {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(6, 2)).unwrap();
        let map = crate::connectivity::ConnectivityMap::fully_flexible(6, 3).unwrap();
        let dist = rank_set_distribution_exact(&map).unwrap();
        let pc = power_scaling_pc(&dist, &stats).unwrap().value;
        let ff = power_scaling_ff(3, &stats).unwrap().value;
        assert!((pc - ff).abs() < 1e-12);
    }

    #[test]
    fn zero_scaling_gives_zero_capacity() {
        let ps = PowerScaling { value: 0.0, per_set: None };
        let c = approx_capacity(&ps, 2, 3, 10.0, ApproxMode::Single, 10, &RngStream::new(1)).unwrap();
        assert_eq!(c.mean, 0.0);
    }

    #[test]
    fn mixture_never_exceeds_single() {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(8, 2)).unwrap();
        let dist = rank_set_distribution_exact(&build_connectivity(8, 3).unwrap()).unwrap();
        let ps = power_scaling_pc(&dist, &stats).unwrap();
        let s = RngStream::new(9);
        let single = approx_capacity(&ps, 2, 3, 10.0, ApproxMode::Single, 500, &s).unwrap();
        let mix = approx_capacity(&ps, 2, 3, 10.0, ApproxMode::Mixture, 500, &s).unwrap();
        assert!(mix.mean <= single.mean + 1e-12);
    }
}
