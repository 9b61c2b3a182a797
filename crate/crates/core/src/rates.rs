//! Sum rates of the selected downlink channel and TDD frame bookkeeping.

use nalgebra::{Complex, ComplexField, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{gram, hermitize, ln_det_hpd, CMatrix};
use crate::scalar::{real, to_f64, MeanStderr, Real};
use crate::selection::{PowerAllocation, SelectionMask};

/// Residual row energy, relative to the row energy, below which a user is
/// treated as linearly dependent on the previous ones.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("infeasible frame: {eta_tr} training symbols do not fit in a coherence block of {eta_coh}")]
    InfeasibleFrame { eta_coh: usize, eta_tr: usize },
    #[error("dl_fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("power allocation has {got} entries for {k} users")]
    AllocationMismatch { k: usize, got: usize },
    #[error("{failed} of {trials} trials failed (first: {first})")]
    TooManyFailures { failed: usize, trials: usize, first: String },
    #[error("channel or power allocation is not finite")]
    NonFinite,
    #[error("no trials requested")]
    NoTrials,
}

/// How the base station learns the channel before selecting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrainingMode {
    /// Every antenna is sounded, `M` at a time.
    Instantaneous,
    /// Only the selected antennas are sounded.
    PowerBased,
}

/// Training symbols per coherence block.
pub fn training_overhead(n: usize, m: usize, k: usize, mode: TrainingMode) -> usize {
    match mode {
        TrainingMode::Instantaneous if m > 0 && m < n => k * n.div_ceil(m),
        _ => k,
    }
}

/// Symbol budget of one coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub eta_coh: usize,
    pub eta_tr: usize,
    pub eta_ul: usize,
    pub eta_dl: usize,
    pub dl_fraction: f64,
}

impl FrameConfig {
    /// Every symbol carries downlink data.
    pub fn no_overhead() -> Self {
        Self { eta_coh: 1, eta_tr: 0, eta_ul: 0, eta_dl: 1, dl_fraction: 1.0 }
    }

    /// Fraction of the block spent on downlink data.
    pub fn prelog(&self) -> f64 {
        self.eta_dl as f64 / self.eta_coh as f64
    }
}

/// Splits the symbols left after training between downlink and uplink.
pub fn frame_split(eta_coh: usize, eta_tr: usize, dl_fraction: f64) -> Result<FrameConfig, RateError> {
    if !(dl_fraction > 0.0 && dl_fraction <= 1.0) {
        return Err(RateError::InvalidFraction(dl_fraction));
    }
    if eta_tr >= eta_coh {
        return Err(RateError::InfeasibleFrame { eta_coh, eta_tr });
    }
    let data = eta_coh - eta_tr;
    // the epsilon keeps products such as 0.7 * 180 = 126.00000000000001 from
    // rounding up to the next symbol
    let eta_dl = ((dl_fraction * data as f64 - 1e-9).ceil().max(0.0) as usize).min(data);
    Ok(FrameConfig { eta_coh, eta_tr, eta_ul: data - eta_dl, eta_dl, dl_fraction })
}

/// One realisation's rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSample {
    pub sum_rate: f64,
    pub mask: SelectionMask,
    pub prelog: f64,
    /// Users given zero rate because their channel was linearly dependent.
    pub dropped_users: Vec<usize>,
}

/// `prelog · log2 det(I + ρ P^{1/2} H Hᴴ P^{1/2})`, the determinant
/// identity making the argument Hermitian.
pub fn sum_capacity<T: Real>(h_sel: &CMatrix<T>, p: &PowerAllocation<T>, rho_eff: T, prelog: T) -> Result<T, RateError> {
    let k = h_sel.nrows();
    if p.k() != k {
        return Err(RateError::AllocationMismatch { k, got: p.k() });
    }
    let g = gram(h_sel);
    let d: Vec<T> = p.p.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    let mut a = DMatrix::from_fn(k, k, |i, j| g[(i, j)] * Complex::new(rho_eff * d[i] * d[j], T::zero()));
    for i in 0..k {
        a[(i, i)] += Complex::new(T::one(), T::zero());
    }
    hermitize(&mut a);
    // I + PSD is always positive definite; a failure means non-finite input
    let ln_det = ln_det_hpd(&a).ok_or(RateError::NonFinite)?;
    Ok(prelog * ln_det.max(T::zero()) / T::ln_2())
}

/// Zero-forcing rate with equal per-user power.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfRate<T> {
    pub sum_rate: T,
    pub snr: Vec<T>,
    pub dropped_users: Vec<usize>,
}

/// Users whose channel row is (numerically) a combination of earlier rows,
/// by modified Gram-Schmidt in user order.
pub fn dependent_users<T: Real>(h: &CMatrix<T>) -> Vec<usize> {
    let tol = real::<T>(RANK_TOLERANCE);
    let mut basis: Vec<Vec<Complex<T>>> = Vec::new();
    let mut dropped = Vec::new();
    for (k, row) in h.row_iter().enumerate() {
        let mut v: Vec<Complex<T>> = row.iter().copied().collect();
        let energy = v.iter().fold(T::zero(), |a, z| a + z.modulus_squared());
        for q in &basis {
            let c = q.iter().zip(&v).fold(Complex::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * y);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        let residual = v.iter().fold(T::zero(), |a, z| a + z.modulus_squared());
        if energy <= T::zero() || residual <= tol * energy {
            dropped.push(k);
        } else {
            let norm = Complex::new(residual.sqrt(), T::zero());
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    dropped
}

/// `prelog · Σ_k log2(1 + ρ / [(H Hᴴ)⁻¹]_kk)`, dependent users getting 0.
pub fn zf_sum_rate<T: Real>(h_sel: &CMatrix<T>, rho_eff: T, prelog: T) -> ZfRate<T> {
    let k = h_sel.nrows();
    let dropped = dependent_users(h_sel);
    let kept: Vec<usize> = (0..k).filter(|u| !dropped.contains(u)).collect();
    let mut snr = vec![T::zero(); k];
    if !kept.is_empty() {
        let h = h_sel.select_rows(&kept);
        let mut g = gram(&h);
        hermitize(&mut g);
        if let Some(chol) = g.cholesky() {
            let inv = chol.inverse();
            for (i, &u) in kept.iter().enumerate() {
                let d = inv[(i, i)].re;
                snr[u] = if d > T::zero() { rho_eff / d } else { T::zero() };
            }
        }
    }
    let sum_rate = snr.iter().fold(T::zero(), |a, &s| a + (T::one() + s).log2()) * prelog;
    ZfRate { sum_rate, snr, dropped_users: dropped }
}

/// Runs `trial(i)` for `i in 0..trials` in parallel and reduces in index
/// order, so the estimate does not depend on the thread count. More than 1%
/// failed trials abort the estimate; fewer are skipped.
pub fn ergodic_mean<E, F>(trials: usize, trial: F) -> Result<MeanStderr, RateError>
where
    E: std::fmt::Display + Send,
    F: Fn(u64) -> Result<f64, E> + Sync,
{
    if trials == 0 {
        return Err(RateError::NoTrials);
    }
    let results: Vec<Result<f64, E>> = (0..trials as u64).into_par_iter().map(&trial).collect();
    let mut samples = Vec::with_capacity(trials);
    let mut failed = 0;
    let mut first = None;
    for r in results {
        match r {
            Ok(v) => samples.push(v),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed * 100 > trials || samples.is_empty() {
        return Err(RateError::TooManyFailures { failed, trials, first: first.unwrap_or_default() });
    }
    Ok(MeanStderr::from_samples(&samples))
}

/// Effective SNR when the fabric loss is not precompensated.
pub fn rho_after_loss<T: Real>(rho: T, loss_db: T) -> T {
    rho / crate::scalar::db_to_linear(loss_db)
}

/// Convenience: uniform-power capacity of a selected channel in `f64`.
pub fn uniform_capacity<T: Real>(h_sel: &CMatrix<T>, rho_eff: T, prelog: T) -> f64 {
    sum_capacity(h_sel, &PowerAllocation::uniform(h_sel.nrows()), rho_eff, prelog).map_or(f64::NAN, to_f64)
}
