//! Small dense helpers on complex matrices shared by the solvers and rate
//! formulas.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::scalar::{real, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;

/// `H Hᴴ`.
pub fn gram<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    h * h.adjoint()
}

/// `I + ρ Σ_i w_i h_i h_iᴴ` over the columns of `h`.
pub fn weighted_covariance<T: Real>(h: &CMatrix<T>, weights: &[T], rho: T) -> CMatrix<T> {
    let mut scaled = h.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(weights) {
        col *= Complex::new(w, T::zero());
    }
    let mut a = &scaled * h.adjoint() * Complex::new(rho, T::zero());
    for i in 0..a.nrows() {
        a[(i, i)] += Complex::new(T::one(), T::zero());
    }
    hermitize(&mut a);
    a
}

/// Replaces `a` by `(a + aᴴ)/2` to remove round-off asymmetry.
pub fn hermitize<T: Real>(a: &mut CMatrix<T>) {
    let half = real::<T>(0.5);
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = Complex::new(a[(i, i)].re, T::zero());
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * Complex::new(half, T::zero());
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
///
/// The complex factorisation takes square roots of complex pivots and so
/// never fails on its own; a non-positive pivot shows up as a diagonal entry
/// of `L` that is not real and positive.
pub fn cholesky_lower<T: Real>(a: &CMatrix<T>) -> Option<CMatrix<T>> {
    let l = a.clone().cholesky()?.l();
    let eps = T::default_epsilon().sqrt();
    (0..l.nrows())
        .all(|i| {
            let d = l[(i, i)];
            d.re > T::zero() && d.re.is_finite() && d.im.abs() <= eps * d.re
        })
        .then_some(l)
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn ln_det_hpd<T: Real>(a: &CMatrix<T>) -> Option<T> {
    let l = cholesky_lower(a)?;
    Some(ln_det_from_cholesky(&l))
}

pub fn ln_det_from_cholesky<T: Real>(l: &CMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    acc + acc
}

/// `‖L⁻¹ h_i‖²` for every column of `h`, i.e. `h_iᴴ A⁻¹ h_i` with `A = L Lᴴ`.
pub fn whitened_column_powers<T: Real>(l: &CMatrix<T>, h: &CMatrix<T>) -> Option<(CMatrix<T>, DVector<T>)> {
    let w = l.solve_lower_triangular(h)?;
    let p = DVector::from_iterator(w.ncols(), w.column_iter().map(|c| c.iter().fold(T::zero(), |s, z| s + z.modulus_squared())));
    Some((w, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_diagonal() {
        let a = CMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![Complex::new(2.0, 0.0), Complex::new(3.0, 0.0)]));
        assert!((ln_det_hpd(&a).unwrap() - 6.0_f64.ln()).abs() < 1e-14);
        let bad = CMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![Complex::new(-1.0, 0.0)]));
        assert!(ln_det_hpd(&bad).is_none());
    }

    #[test]
    fn whitened_powers_match_inverse() {
        let h = CMatrix::<f64>::from_row_slice(2, 2, &[
            Complex::new(1.0, 0.5), Complex::new(0.0, 1.0),
            Complex::new(-0.3, 0.0), Complex::new(2.0, -1.0),
        ]);
        let a = weighted_covariance(&h, &[0.7, 0.2], 3.0);
        let l = cholesky_lower(&a).unwrap();
        let (_, p) = whitened_column_powers(&l, &h).unwrap();
        let inv = a.try_inverse().unwrap();
        for i in 0..2 {
            let direct = (h.column(i).adjoint() * &inv * h.column(i))[(0, 0)].re;
            assert!((p[i] - direct).abs() < 1e-12);
        }
    }
}
