//! Gauss-Jacobi rules and ordered Gamma moments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::scalar::{real, to_f64, Real};

/// Nodes and weights of the `n`-point Gauss-Jacobi rule for the weight
/// `(1 - x)^α (1 + x)^β` on `[-1, 1]`, by Golub-Welsch.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussJacobi<T> {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self, AnalysisError> {
        if n == 0 || alpha <= -1.0 || beta <= -1.0 {
            return Err(AnalysisError::InvalidSpec("Gauss-Jacobi needs n >= 1 and exponents > -1"));
        }
        // Jacobi matrix in f64; the eigen-solve dominates the cost and is
        // done once per rule.
        let ab = alpha + beta;
        let diag = |i: usize| -> f64 {
            let k = i as f64;
            if i == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
            }
        };
        let off = |i: usize| -> f64 {
            // coupling between rows i-1 and i, i >= 1
            let k = i as f64;
            let s = 2.0 * k + ab;
            (4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
        };
        let mut j = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = diag(i);
            if i + 1 < n {
                let b = off(i + 1);
                j[(i, i + 1)] = b;
                j[(i + 1, i)] = b;
            }
        }
        let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
        let eig = j.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { nodes: pairs.iter().map(|p| real(p.0)).collect(), weights: pairs.iter().map(|p| real(p.1)).collect() })
    }

    /// `∫ w(x) g(x) dx`.
    pub fn integrate(&self, g: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |acc, (&x, &w)| acc + w * g(x))
    }
}

/// Γ(x) for the small positive arguments the rule needs (Lanczos).
fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// ln Γ(x), x > 0, Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let a = G.iter().enumerate().skip(1).fold(G[0], |acc, (i, &g)| acc + g / (x + i as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln n!` as an exact sum of logarithms.
pub fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, i| acc + real::<T>(i as f64).ln())
}

/// Parameters of the ordered column-norm moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderStatSpec {
    /// Number of column norms `N`.
    pub n: usize,
    /// Degrees of freedom: every norm is Gamma(K, 1).
    pub k: usize,
    /// Truncation of the norm support; `y = c (x + 1)² / 4` maps `[-1, 1]`
    /// onto `[0, c]`.
    pub c: f64,
    pub quadrature_nodes: usize,
}

impl OrderStatSpec {
    pub const DEFAULT_C: f64 = 100.0;
    pub const DEFAULT_NODES: usize = 200;

    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k, c: Self::DEFAULT_C, quadrature_nodes: Self::DEFAULT_NODES }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.n == 0 || self.k == 0 {
            return Err(AnalysisError::InvalidSpec("N and K must be positive"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(AnalysisError::InvalidSpec("c must be positive"));
        }
        if self.quadrature_nodes < 16 {
            return Err(AnalysisError::InvalidSpec("at least 16 quadrature nodes are required"));
        }
        Ok(())
    }
}

/// `(ln P(K, y), ln Q(K, y))` of the regularised incomplete gamma function
/// for integer `K`, both accurate in their tails.
fn ln_gamma_cdf_sf<T: Real>(k: usize, y: T) -> (T, T) {
    // Q(K, y) = e^{-y} Σ_{j<K} y^j / j!
    let mut term = T::one();
    let mut partial = T::one();
    for j in 1..k {
        term *= y / real(j as f64);
        partial += term;
    }
    let ln_q = -y + partial.ln();
    let k_t = real::<T>(k as f64);
    let ln_p = if y < k_t + T::one() {
        // P(K, y) = e^{-y} y^K / K! · Σ_n y^n K! / (K + n)!
        let mut term = T::one();
        let mut sum = T::one();
        let eps = real::<T>(1e-17);
        for n in 1..10_000 {
            term *= y / (k_t + real(n as f64));
            sum += term;
            if term < eps * sum {
                break;
            }
        }
        -y + k_t * y.ln() - ln_factorial::<T>(k) + sum.ln()
    } else {
        (-ln_q.exp()).ln_1p()
    };
    (ln_p, ln_q)
}

/// Precomputed rule for repeated moment evaluations with one spec.
#[derive(Debug, Clone)]
pub struct OrderStatistics<T: Real> {
    spec: OrderStatSpec,
    rule: GaussJacobi<T>,
    /// Per node: `(ln F, ln(1 - F), -y + K ln y)`.
    node_terms: Vec<(T, T, T)>,
}

impl<T: Real> OrderStatistics<T> {
    pub fn new(spec: OrderStatSpec) -> Result<Self, AnalysisError> {
        spec.validate()?;
        let rule = GaussJacobi::<T>::new(spec.quadrature_nodes, 0.0, 1.0)?;
        let c = real::<T>(spec.c);
        let k = real::<T>(spec.k as f64);
        let node_terms = rule
            .nodes
            .iter()
            .map(|&x| {
                let y = c * (x + T::one()) * (x + T::one()) / real(4.0);
                let (lp, lq) = ln_gamma_cdf_sf(spec.k, y);
                (lp, lq, -y + k * y.ln())
            })
            .collect();
        Ok(Self { spec, rule, node_terms })
    }

    pub fn spec(&self) -> &OrderStatSpec {
        &self.spec
    }

    /// `E[B_{t:N}]`, the mean of the `t`-th smallest of `N` i.i.d.
    /// Gamma(K, 1) variables.
    pub fn moment(&self, t: usize) -> Result<T, AnalysisError> {
        let OrderStatSpec { n, k, c, .. } = self.spec;
        if t == 0 || t > n {
            return Err(AnalysisError::RankOutOfRange { t, n });
        }
        let ln_prefactor = (real::<T>(c) / real(2.0)).ln() + ln_factorial::<T>(n)
            - ln_factorial::<T>(t - 1)
            - ln_factorial::<T>(n - t)
            - ln_factorial::<T>(k - 1);
        let (a, b) = (real::<T>((t - 1) as f64), real::<T>((n - t) as f64));
        let mut acc = T::zero();
        for (&w, &(lp, lq, lkern)) in self.rule.weights.iter().zip(&self.node_terms) {
            let mut ln_g = lkern + ln_prefactor;
            if t > 1 {
                ln_g += a * lp;
            }
            if t < n {
                ln_g += b * lq;
            }
            acc += w * ln_g.exp();
        }
        if !acc.is_finite() {
            return Err(AnalysisError::NonFinite(to_f64(acc)));
        }
        Ok(acc)
    }

    /// `E[B_{t:N}]` for `t = 1..=N` (index `t - 1`).
    pub fn all_moments(&self) -> Result<Vec<T>, AnalysisError> {
        (1..=self.spec.n).map(|t| self.moment(t)).collect()
    }
}

/// Mean of the `t`-th smallest (`1 <= t <= N`) of `N` i.i.d. Gamma(K, 1)
/// column norms.
pub fn moment_ordered_norm<T: Real>(t: usize, spec: &OrderStatSpec) -> Result<T, AnalysisError> {
    OrderStatistics::<T>::new(*spec)?.moment(t)
}

/// Vector form used by the power-scaling helpers.
pub fn moments_vector<T: Real>(spec: &OrderStatSpec) -> Result<DVector<T>, AnalysisError> {
    Ok(DVector::from_vec(OrderStatistics::<T>::new(*spec)?.all_moments()?))
}
