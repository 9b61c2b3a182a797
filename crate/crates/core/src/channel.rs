//! Random channel realisations `H = R^{1/2} F` and per-antenna powers.
//!
//! Every trial draws from its own counter-derived ChaCha stream, so a
//! realisation depends only on `(seed, domain, trial)` and never on the order
//! or thread in which trials run.

use std::io::{BufRead, Write};

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::scalar::{real, to_f64, Real};

/// Eigenvalues below `-PSD_TOLERANCE` reject a covariance matrix; smaller
/// negative ones are clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("covariance must be {k}x{k}, got {rows}x{cols}")]
    CovarianceShape { k: usize, rows: usize, cols: usize },
    #[error("covariance is not Hermitian")]
    NotHermitian,
    #[error("covariance is not positive semi-definite (eigenvalue {0:e})")]
    NonPsdCovariance(f64),
    #[error("channel dimensions must be positive, got K={k}, N={n}")]
    EmptyChannel { k: usize, n: usize },
    #[error("channel CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic family of per-trial random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub domain: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, domain: 0 }
    }

    /// Independent family for another purpose (another sweep point, the
    /// capacity-approximation draws, ...).
    pub fn derive(&self, label: u64) -> Self {
        Self { master_seed: self.master_seed, domain: mix64(self.domain ^ mix64(label)) }
    }

    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(self.master_seed) ^ self.domain);
        rng.set_stream(trial);
        rng
    }
}

/// Draws one `CN(0, 1)` sample as `(x + iy)/sqrt(2)`.
pub fn complex_normal<T: Real, R: rand::Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    Complex::new(real(x * std::f64::consts::FRAC_1_SQRT_2), real(y * std::f64::consts::FRAC_1_SQRT_2))
}

/// `rows x cols` matrix of i.i.d. `CN(0, 1)` entries, filled column by column.
pub fn iid_matrix<T: Real, R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex<T>> {
    let data: Vec<Complex<T>> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    DMatrix::from_vec(rows, cols, data)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec<T: Real> {
    /// Uncorrelated Rayleigh fading.
    Identity,
    /// User-side covariance `R` (K x K, Hermitian PSD).
    Matrix(DMatrix<Complex<T>>),
}

impl<T: Real> CovarianceSpec<T> {
    /// Diagonal covariance from per-user powers.
    pub fn diagonal(powers: &[f64]) -> Self {
        let k = powers.len();
        Self::Matrix(DMatrix::from_fn(k, k, |i, j| if i == j { Complex::new(real(powers[i]), T::zero()) } else { Complex::new(T::zero(), T::zero()) }))
    }

    /// Hermitian square root, computed once and reused for every trial.
    pub fn sqrt(&self, k: usize) -> Result<CovarianceSqrt<T>, ChannelError> {
        let r = match self {
            Self::Identity => return Ok(CovarianceSqrt { k, root: None }),
            Self::Matrix(r) => r,
        };
        if r.nrows() != k || r.ncols() != k {
            return Err(ChannelError::CovarianceShape { k, rows: r.nrows(), cols: r.ncols() });
        }
        let scale = r.iter().map(|z| to_f64(z.modulus())).fold(1.0, f64::max);
        let asym = (r - r.adjoint()).iter().map(|z| to_f64(z.modulus())).fold(0.0, f64::max);
        if asym > 1e-10 * scale {
            return Err(ChannelError::NotHermitian);
        }
        let eig = r.clone().symmetric_eigen();
        let mut roots = eig.eigenvalues.clone();
        for lambda in roots.iter_mut() {
            let l = to_f64(*lambda);
            if l < -PSD_TOLERANCE {
                return Err(ChannelError::NonPsdCovariance(l));
            }
            *lambda = if l < 0.0 { T::zero() } else { lambda.sqrt() };
        }
        let v = &eig.eigenvectors;
        let diag = DMatrix::from_diagonal(&roots.map(|s| Complex::new(s, T::zero())));
        Ok(CovarianceSqrt { k, root: Some(v * diag * v.adjoint()) })
    }
}

/// Cached `R^{1/2}`; `None` stands for the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSqrt<T: Real> {
    k: usize,
    root: Option<DMatrix<Complex<T>>>,
}

impl<T: Real> CovarianceSqrt<T> {
    pub fn identity(k: usize) -> Self {
        Self { k, root: None }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> Option<&DMatrix<Complex<T>>> {
        self.root.as_ref()
    }
}

/// K x N downlink channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T: Real> {
    h: DMatrix<Complex<T>>,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn new(h: DMatrix<Complex<T>>) -> Result<Self, ChannelError> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(ChannelError::EmptyChannel { k: h.nrows(), n: h.ncols() });
        }
        Ok(Self { h })
    }

    pub fn k_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.h
    }

    /// `‖h_i‖²` for every antenna column.
    pub fn column_powers(&self) -> DVector<T> {
        column_powers(&self.h)
    }

    /// K x |selected| submatrix in the order given.
    pub fn select_columns(&self, selected: &[usize]) -> DMatrix<Complex<T>> {
        self.h.select_columns(selected)
    }

    /// One line per user row, `re,im` pairs per antenna.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ChannelError> {
        for row in self.h.row_iter() {
            let line: Vec<String> = row.iter().map(|z| format!("{:e},{:e}", to_f64(z.re), to_f64(z.im))).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, ChannelError> {
        let mut rows: Vec<Vec<Complex<T>>> = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| ChannelError::Csv(format!("`{v}`: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() % 2 != 0 {
                return Err(ChannelError::Csv("odd number of values in a row".into()));
            }
            rows.push(values.chunks(2).map(|p| Complex::new(real(p[0]), real(p[1]))).collect());
        }
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(ChannelError::Csv("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }
}

/// `‖h_i‖²` of every column of `h`.
pub fn column_powers<T: Real>(h: &DMatrix<Complex<T>>) -> DVector<T> {
    DVector::from_iterator(h.ncols(), h.column_iter().map(|c| c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())))
}

/// Draws the channel of `trial`.
pub fn draw_channel<T: Real>(
    k: usize,
    n: usize,
    cov: &CovarianceSqrt<T>,
    stream: &RngStream,
    trial: u64,
) -> Result<ChannelMatrix<T>, ChannelError> {
    if k == 0 || n == 0 {
        return Err(ChannelError::EmptyChannel { k, n });
    }
    if cov.k != k {
        return Err(ChannelError::CovarianceShape { k, rows: cov.k, cols: cov.k });
    }
    let f = iid_matrix(k, n, &mut stream.rng(trial));
    let h = match &cov.root {
        None => f,
        Some(root) => root * f,
    };
    ChannelMatrix::new(h)
}
