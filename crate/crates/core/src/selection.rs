//! Antenna-selection solvers and downlink user power allocation.
//!
//! * power-based selection keeps the strongest columns, either globally or
//!   per connectivity group;
//! * instantaneous-CSI selection relaxes the binary mask, runs projected
//!   gradient ascent on the log-det capacity, rounds per group and polishes
//!   the result with single swaps;
//! * [`waterfill_users`] maximises the same log-det over the user powers.
//!
//! Ties are always resolved towards the lowest index.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::connectivity::ConnectivityMap;
use crate::linalg::{cholesky_lower, ln_det_from_cholesky, weighted_covariance, whitened_column_powers, CMatrix};
use crate::scalar::{real, to_f64, Real};

/// Relative objective change at which the relaxed selection stops.
pub const CSI_TOLERANCE: f64 = 1e-6;
pub const CSI_MAX_ITERATIONS: usize = 500;
/// Relative objective change at which the power allocation stops.
pub const WATERFILL_TOLERANCE: f64 = 1e-8;
pub const WATERFILL_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("cannot select {m} of {n} antennas")]
    InvalidCount { n: usize, m: usize },
    #[error("power vector has {got} entries, connectivity map expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("selection violates the connectivity budgets")]
    BudgetViolation,
    #[error("rho must be positive and finite")]
    InvalidRho,
    #[error("numerical breakdown: {0}")]
    Numerical(&'static str),
}

/// Selected antenna indices (0-based, ascending).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SelectionMask {
    selected: Vec<usize>,
}

impl SelectionMask {
    pub fn new(mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        selected.dedup();
        Self { selected }
    }

    pub fn all(n: usize) -> Self {
        Self { selected: (0..n).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.selected.binary_search(&i).is_ok()
    }

    /// Diagonal of the binary selection matrix over `n` antennas.
    pub fn as_diagonal(&self, n: usize) -> Vec<bool> {
        let mut d = vec![false; n];
        for &i in &self.selected {
            d[i] = true;
        }
        d
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.selected.iter().map(|i| i + 1).collect()
    }
}

/// Diagonal of the user power matrix, summing to `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T: Real> {
    pub p: DVector<T>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn uniform(k: usize) -> Self {
        Self { p: DVector::from_element(k, T::one()) }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }
}

/// Indices of the `k` largest `values[idx]` over `idx`, lowest index first
/// among equals. NaN ranks below everything.
pub fn top_k<T: Real>(values: &[T], idx: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        match vb.partial_cmp(&va) {
            Some(Ordering::Equal) | None => match (va.partial_cmp(&va).is_none(), vb.partial_cmp(&vb).is_none()) {
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                _ => a.cmp(&b),
            },
            Some(o) => o,
        }
    });
    order.truncate(k);
    order
}

/// The `m` strongest antennas.
pub fn select_power_ff<T: Real>(powers: &[T], m: usize) -> Result<SelectionMask, SelectionError> {
    let n = powers.len();
    if m > n {
        return Err(SelectionError::InvalidCount { n, m });
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(SelectionMask::new(top_k(powers, &all, m)))
}

/// The `budgets[i]` strongest antennas of every connectivity group.
pub fn select_power_pc<T: Real>(powers: &[T], map: &ConnectivityMap) -> Result<SelectionMask, SelectionError> {
    if powers.len() != map.n_antennas {
        return Err(SelectionError::LengthMismatch { expected: map.n_antennas, got: powers.len() });
    }
    let picked = map.antenna_groups.iter().zip(&map.budgets).flat_map(|(g, &b)| top_k(powers, g, b)).collect();
    Ok(SelectionMask::new(picked))
}

/// Groups and per-group budgets a selection must respect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budgets {
    pub groups: Vec<Vec<usize>>,
    pub budgets: Vec<usize>,
}

impl Budgets {
    /// Any `m` of `n` antennas.
    pub fn fully_flexible(n: usize, m: usize) -> Result<Self, SelectionError> {
        if m > n {
            return Err(SelectionError::InvalidCount { n, m });
        }
        Ok(Self { groups: vec![(0..n).collect()], budgets: vec![m] })
    }

    pub fn from_map(map: &ConnectivityMap) -> Self {
        Self { groups: map.antenna_groups.clone(), budgets: map.budgets.clone() }
    }

    pub fn n_antennas(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn total(&self) -> usize {
        self.budgets.iter().sum()
    }

    pub fn admits(&self, mask: &SelectionMask) -> bool {
        self.groups.iter().zip(&self.budgets).all(|(g, &b)| g.iter().filter(|&&a| mask.contains(a)).count() == b)
            && mask.len() == self.total()
    }
}

/// Outcome of the instantaneous-CSI solver.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSelection {
    pub mask: SelectionMask,
    /// `log2 det(I + ρ H_sel H_selᴴ)` of the returned mask.
    pub capacity: f64,
    /// Relaxed optimum (an upper bound on `capacity`).
    pub relaxed_capacity: f64,
    pub iterations: usize,
    /// `false` when the relaxation hit the iteration cap and the greedy
    /// selection was used instead.
    pub converged: bool,
}

/// `log2 det(I + ρ Σ_i w_i h_i h_iᴴ)`.
pub fn weighted_log2_det<T: Real>(h: &CMatrix<T>, weights: &[T], rho: T) -> Option<T> {
    let l = cholesky_lower(&weighted_covariance(h, weights, rho))?;
    Some(ln_det_from_cholesky(&l) / T::ln_2())
}

/// `log2 det(I + ρ H_sel H_selᴴ)` for a mask.
pub fn mask_log2_det<T: Real>(h: &CMatrix<T>, mask: &SelectionMask, rho: T) -> Option<T> {
    let w: Vec<T> = mask.as_diagonal(h.ncols()).into_iter().map(|s| if s { T::one() } else { T::zero() }).collect();
    weighted_log2_det(h, &w, rho)
}

/// Objective and gradient of the relaxed selection problem.
fn relaxed_value_grad<T: Real>(h: &CMatrix<T>, s: &[T], rho: T) -> Option<(T, Vec<T>)> {
    let l = cholesky_lower(&weighted_covariance(h, s, rho))?;
    let value = ln_det_from_cholesky(&l) / T::ln_2();
    let (_, p) = whitened_column_powers(&l, h)?;
    let scale = rho / T::ln_2();
    Some((value, p.iter().map(|&x| x * scale).collect()))
}

/// Euclidean projection of `v` onto `{x : 0 <= x <= cap, Σx = total}`.
///
/// Solved by bisection on the shift `τ` in `clamp(v - τ, 0, cap)`.
pub fn project_capped_simplex<T: Real>(v: &[T], total: T, cap: T) -> Vec<T> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    if total >= cap * real::<T>(n as f64) {
        return vec![cap; n];
    }
    if total <= T::zero() {
        return vec![T::zero(); n];
    }
    let clamp_sum = |tau: T| v.iter().fold(T::zero(), |acc, &x| acc + (x - tau).max(T::zero()).min(cap));
    let (mut lo, mut hi) = v.iter().fold((v[0], v[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    lo -= cap;
    // clamp_sum(lo) = n·cap >= total, clamp_sum(hi) = 0 <= total
    for _ in 0..200 {
        let mid = (lo + hi) * real(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if clamp_sum(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = (lo + hi) * real(0.5);
    let mut x: Vec<T> = v.iter().map(|&vi| (vi - tau).max(T::zero()).min(cap)).collect();
    // remove the residual of the bisection on the free coordinates
    let residual = total - x.iter().fold(T::zero(), |a, &b| a + b);
    let free: Vec<usize> = (0..n).filter(|&i| x[i] > T::zero() && x[i] < cap).collect();
    if !free.is_empty() {
        let share = residual / real(free.len() as f64);
        for i in free {
            x[i] = (x[i] + share).max(T::zero()).min(cap);
        }
    }
    x
}

struct Ascent<T> {
    x: Vec<T>,
    value: T,
    iterations: usize,
    converged: bool,
}

/// Projected gradient ascent with Armijo backtracking along the projection
/// arc. Stops once the relative objective change falls below `tol`.
fn projected_ascent<T: Real>(
    x0: Vec<T>,
    eval: impl Fn(&[T]) -> Option<(T, Vec<T>)>,
    project: impl Fn(&[T]) -> Vec<T>,
    tol: f64,
    max_iter: usize,
) -> Option<Ascent<T>> {
    let sigma = real::<T>(1e-4);
    let tol = real::<T>(tol);
    let mut x = project(&x0);
    let (mut fx, mut gx) = eval(&x)?;
    let mut step = {
        let gmax = gx.iter().fold(T::zero(), |a, g| a.max(g.abs()));
        if gmax > T::zero() { T::one() / gmax } else { T::one() }
    };
    for it in 1..=max_iter {
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = x.iter().zip(&gx).map(|(&xi, &gi)| xi + step * gi).collect();
            let cand = project(&trial);
            let ascent = cand.iter().zip(&x).zip(&gx).fold(T::zero(), |a, ((&c, &xi), &gi)| a + gi * (c - xi));
            if ascent <= T::zero() {
                // projected gradient vanishes: stationary point
                return Some(Ascent { x, value: fx, iterations: it, converged: true });
            }
            match eval(&cand) {
                Some((fc, gc)) if fc >= fx + sigma * ascent => {
                    accepted = Some((cand, fc, gc));
                    break;
                }
                _ => step *= real(0.5),
            }
        }
        let Some((cand, fc, gc)) = accepted else {
            return Some(Ascent { x, value: fx, iterations: it, converged: true });
        };
        let change = (fc - fx).abs() / fx.abs().max(T::one());
        x = cand;
        fx = fc;
        gx = gc;
        if change < tol {
            return Some(Ascent { x, value: fx, iterations: it, converged: true });
        }
        step *= real(2.0);
    }
    Some(Ascent { x, value: fx, iterations: max_iter, converged: false })
}

fn project_groups<T: Real>(v: &[T], budgets: &Budgets) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for (g, &b) in budgets.groups.iter().zip(&budgets.budgets) {
        let sub: Vec<T> = g.iter().map(|&i| v[i]).collect();
        for (&i, x) in g.iter().zip(project_capped_simplex(&sub, real(b as f64), T::one())) {
            out[i] = x;
        }
    }
    out
}

/// Greedy capacity-increment selection within the budgets.
pub fn select_greedy<T: Real>(h: &CMatrix<T>, budgets: &Budgets, rho: T) -> Result<SelectionMask, SelectionError> {
    let n = h.ncols();
    let owner = owner_of(budgets, n)?;
    let mut left = budgets.budgets.clone();
    let mut weights = vec![T::zero(); n];
    for _ in 0..budgets.total() {
        let l = cholesky_lower(&weighted_covariance(h, &weights, rho)).ok_or(SelectionError::Numerical("greedy"))?;
        let (_, gain) = whitened_column_powers(&l, h).ok_or(SelectionError::Numerical("greedy"))?;
        let best = (0..n)
            .filter(|&i| weights[i] == T::zero() && left[owner[i]] > 0)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if gain[b] >= gain[i] => Some(b),
                _ => Some(i),
            })
            .ok_or(SelectionError::BudgetViolation)?;
        weights[best] = T::one();
        left[owner[best]] -= 1;
    }
    Ok(SelectionMask::new((0..n).filter(|&i| weights[i] == T::one()).collect()))
}

fn owner_of(budgets: &Budgets, n: usize) -> Result<Vec<usize>, SelectionError> {
    let mut owner = vec![usize::MAX; n];
    for (g, members) in budgets.groups.iter().enumerate() {
        for &a in members {
            if a >= n {
                return Err(SelectionError::LengthMismatch { expected: budgets.n_antennas(), got: n });
            }
            owner[a] = g;
        }
    }
    if owner.contains(&usize::MAX) || budgets.groups.iter().zip(&budgets.budgets).any(|(g, &b)| b > g.len()) {
        return Err(SelectionError::BudgetViolation);
    }
    Ok(owner)
}

/// One pass of in-group swaps, each accepted when it raises the determinant.
///
/// For a selected `i` and unselected `j` of the same group the determinant
/// ratio is `(1 - ρ g_ii)(1 + ρ g_jj) + ρ² |g_ij|²` with `g = Hᴴ A⁻¹ H`,
/// `A = I + ρ H_sel H_selᴴ`, so every candidate is scored without refactoring.
fn exchange_polish<T: Real>(h: &CMatrix<T>, budgets: &Budgets, mask: SelectionMask, rho: T) -> Result<SelectionMask, SelectionError> {
    let n = h.ncols();
    let mut sel = mask.as_diagonal(n);
    let threshold = T::one() + real(1e-10);
    let numerical = || SelectionError::Numerical("exchange polish");
    for group in &budgets.groups {
        let members_in: Vec<usize> = group.iter().copied().filter(|&a| sel[a]).collect();
        for i in members_in {
            let weights: Vec<T> = sel.iter().map(|&s| if s { T::one() } else { T::zero() }).collect();
            let l = cholesky_lower(&weighted_covariance(h, &weights, rho)).ok_or_else(numerical)?;
            let w = l.solve_lower_triangular(h).ok_or_else(numerical)?;
            let wi = w.column(i);
            let gii = wi.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
            let remove = T::one() - rho * gii;
            let mut best: Option<(usize, T)> = None;
            for &j in group.iter().filter(|&&j| !sel[j]) {
                let wj = w.column(j);
                let gjj = wj.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
                let gij = wi.iter().zip(wj.iter()).fold(Complex::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * y);
                let ratio = remove * (T::one() + rho * gjj) + rho * rho * gij.norm_sqr();
                if ratio > threshold && best.is_none_or(|(_, r)| ratio > r) {
                    best = Some((j, ratio));
                }
            }
            if let Some((j, _)) = best {
                sel[i] = false;
                sel[j] = true;
            }
        }
    }
    Ok(SelectionMask::new((0..n).filter(|&a| sel[a]).collect()))
}

/// Instantaneous-CSI selection within `budgets`.
pub fn select_csi_budgets<T: Real>(h: &CMatrix<T>, budgets: &Budgets, rho: T) -> Result<CsiSelection, SelectionError> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(SelectionError::InvalidRho);
    }
    let n = h.ncols();
    owner_of(budgets, n)?;
    let x0: Vec<T> = {
        let mut x = vec![T::zero(); n];
        for (g, &b) in budgets.groups.iter().zip(&budgets.budgets) {
            for &a in g {
                x[a] = real::<T>(b as f64) / real(g.len() as f64);
            }
        }
        x
    };
    let ascent = projected_ascent(
        x0,
        |s| relaxed_value_grad(h, s, rho),
        |v| project_groups(v, budgets),
        CSI_TOLERANCE,
        CSI_MAX_ITERATIONS,
    )
    .ok_or(SelectionError::Numerical("relaxed selection"))?;
    let rounded = if ascent.converged {
        SelectionMask::new(budgets.groups.iter().zip(&budgets.budgets).flat_map(|(g, &b)| top_k(&ascent.x, g, b)).collect())
    } else {
        select_greedy(h, budgets, rho)?
    };
    let mask = exchange_polish(h, budgets, rounded, rho)?;
    let capacity = mask_log2_det(h, &mask, rho).ok_or(SelectionError::Numerical("capacity"))?;
    Ok(CsiSelection {
        mask,
        capacity: to_f64(capacity),
        relaxed_capacity: to_f64(ascent.value),
        iterations: ascent.iterations,
        converged: ascent.converged,
    })
}

/// Instantaneous-CSI selection of `m` antennas; `map = None` means fully
/// flexible switching.
pub fn select_csi<T: Real>(
    h: &CMatrix<T>,
    m: usize,
    map: Option<&ConnectivityMap>,
    rho: T,
) -> Result<CsiSelection, SelectionError> {
    let budgets = match map {
        Some(map) if map.n_chains != m => return Err(SelectionError::InvalidCount { n: map.n_antennas, m }),
        Some(map) => Budgets::from_map(map),
        None => Budgets::fully_flexible(h.ncols(), m)?,
    };
    select_csi_budgets(h, &budgets, rho)
}

/// `log2 det(I + ρ P^{1/2} G P^{1/2})` with `G = H Hᴴ`.
pub fn allocation_log2_det<T: Real>(gram: &CMatrix<T>, p: &[T], rho: T) -> Option<T> {
    let k = gram.nrows();
    let d: Vec<T> = p.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    let mut a = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] * Complex::new(rho * d[i] * d[j], T::zero()));
    for i in 0..k {
        a[(i, i)] += Complex::new(T::one(), T::zero());
    }
    crate::linalg::hermitize(&mut a);
    crate::linalg::ln_det_hpd(&a).map(|v| v / T::ln_2())
}

/// `ρ [(I + ρ G P)⁻¹ G]_kk / ln 2`.
fn allocation_gradient<T: Real>(gram: &CMatrix<T>, p: &[T], rho: T) -> Option<Vec<T>> {
    let k = gram.nrows();
    let mut a = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] * Complex::new(rho * p[j], T::zero()));
    for i in 0..k {
        a[(i, i)] += Complex::new(T::one(), T::zero());
    }
    let x = a.lu().solve(gram)?;
    let scale = rho / T::ln_2();
    Some((0..k).map(|i| x[(i, i)].re * scale).collect())
}

/// User powers maximising `log2 det(I + ρ P H Hᴴ)` subject to `p >= 0`,
/// `Σ p = K`.
pub fn waterfill_users<T: Real>(h_sel: &CMatrix<T>, rho: T) -> Result<PowerAllocation<T>, SelectionError> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(SelectionError::InvalidRho);
    }
    let k = h_sel.nrows();
    if k <= 1 {
        return Ok(PowerAllocation::uniform(k));
    }
    let gram = crate::linalg::gram(h_sel);
    let total = real::<T>(k as f64);
    let ascent = projected_ascent(
        vec![T::one(); k],
        |p| Some((allocation_log2_det(&gram, p, rho)?, allocation_gradient(&gram, p, rho)?)),
        |v| project_capped_simplex(v, total, total),
        WATERFILL_TOLERANCE,
        WATERFILL_MAX_ITERATIONS,
    )
    .ok_or(SelectionError::Numerical("power allocation"))?;
    let uniform = allocation_log2_det(&gram, &vec![T::one(); k], rho).ok_or(SelectionError::Numerical("power allocation"))?;
    if ascent.value < uniform {
        return Ok(PowerAllocation::uniform(k));
    }
    Ok(PowerAllocation { p: DVector::from_vec(ascent.x) })
}
