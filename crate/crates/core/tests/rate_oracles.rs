use antsel::channel::{draw_channel, CovarianceSqrt, RngStream};
use antsel::linalg::CMatrix;
use antsel::rates::{ergodic_mean, sum_capacity, uniform_capacity, zf_sum_rate};
use antsel::selection::{waterfill_users, PowerAllocation};

fn channel(k: usize, n: usize, seed: u64, trial: u64) -> CMatrix<f64> {
    draw_channel(k, n, &CovarianceSqrt::identity(k), &RngStream::new(seed), trial).unwrap().matrix().clone()
}

/// Link-level rate of an explicit pseudo-inverse precoder with unit-norm
/// beams and power `rho` per user, interference included.
fn pinv_precoder_rate(h: &CMatrix<f64>, rho: f64) -> f64 {
    let mut w = h.clone().pseudo_inverse(1e-12).unwrap();
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        col /= nalgebra::Complex::new(norm, 0.0);
    }
    let gains = h * &w;
    (0..h.nrows())
        .map(|k| {
            let signal = rho * gains[(k, k)].norm_sqr();
            let interference: f64 = (0..h.nrows()).filter(|&j| j != k).map(|j| rho * gains[(k, j)].norm_sqr()).sum();
            (1.0 + signal / (1.0 + interference)).log2()
        })
        .sum()
}

#[test]
fn zf_matches_pseudo_inverse_precoder() {
    for t in 0..50 {
        let h = channel(2, 4, 31, t);
        let zf = zf_sum_rate(&h, 10.0, 1.0);
        let oracle = pinv_precoder_rate(&h, 10.0);
        assert!((zf.sum_rate - oracle).abs() < 1e-9, "trial {t}: {} vs {oracle}", zf.sum_rate);
    }
}

#[test]
fn rate_orderings_per_realisation() {
    for t in 0..200 {
        let h = channel(4, 6, 12, t);
        let rho = 3.0;
        let uniform = sum_capacity(&h, &PowerAllocation::uniform(4), rho, 1.0).unwrap();
        let p = waterfill_users(&h, rho).unwrap();
        let water = sum_capacity(&h, &p, rho, 1.0).unwrap();
        assert!(water >= uniform - 1e-10);
        let zf = zf_sum_rate(&h, rho, 1.0).sum_rate;
        assert!(zf <= uniform + 1e-10, "trial {t}: zf {zf} > {uniform}");
        assert!(zf >= 0.0);
    }
}

#[test]
fn stderr_shrinks_with_trials() {
    let rate = |t: u64| Ok::<_, String>(uniform_capacity(&channel(2, 4, 3, t), 10.0, 1.0));
    let small = ergodic_mean(4000, rate).unwrap();
    let large = ergodic_mean(8000, rate).unwrap();
    let ratio = small.stderr / large.stderr;
    // twice the trials shrinks the standard error by sqrt(2)
    assert!((ratio / 2.0_f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn zf_is_exact_for_orthogonal_users() {
    let h = CMatrix::<f64>::identity(3, 5);
    let r = zf_sum_rate(&h, 7.0, 0.5);
    assert!((r.sum_rate - 1.5 * 8.0_f64.log2()).abs() < 1e-12);
}
