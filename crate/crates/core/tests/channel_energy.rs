//! Channel statistics and power-model monotonicity.

use antsel::channel::{draw_channel, CovarianceSqrt, RngStream};
use antsel::energy::{energy_efficiency, total_power, EnergyParams};
use antsel::experiments::{preset, run_experiment};
use antsel::rates::{frame_split, training_overhead, TrainingMode};

#[test]
fn column_powers_are_gamma_k() {
    let (k, n, trials) = (8, 64, 100_000u64 / 64);
    let cov = CovarianceSqrt::identity(k);
    let stream = RngStream::new(3);
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0.0);
    for t in 0..trials {
        let h = draw_channel::<f64>(k, n, &cov, &stream, t).unwrap();
        for &p in h.column_powers().iter() {
            sum += p;
            sum_sq += p * p;
            count += 1.0;
        }
    }
    let mean = sum / count;
    let var = sum_sq / count - mean * mean;
    assert!((mean / k as f64 - 1.0).abs() < 0.02, "mean {mean}");
    assert!((var / k as f64 - 1.0).abs() < 0.02, "variance {var}");
}

fn frame(m: usize) -> antsel::rates::FrameConfig {
    frame_split(200, training_overhead(128, m, 16, TrainingMode::PowerBased), 0.7).unwrap()
}

#[test]
fn efficiency_falls_with_loss() {
    let params = EnergyParams::default();
    let mut last = f64::INFINITY;
    for tenths in 0..=60 {
        let report = total_power(32, 16, tenths as f64 / 10.0, &frame(32), &params);
        let xi = energy_efficiency(40.0, &params, &report).unwrap().xi;
        assert!(xi < last);
        last = xi;
    }
}

#[test]
fn power_grows_with_active_chains() {
    let params = EnergyParams::default();
    let mut last = 0.0;
    for m in 16..=128 {
        let total = total_power(m, 16, 1.0, &frame(m), &params).total;
        assert!(total > last, "M = {m}");
        last = total;
    }
}

#[test]
fn partial_connectivity_draws_least_power() {
    let table = run_experiment(&preset("fig8").unwrap()).unwrap();
    assert_eq!(table.errors().count(), 0);
    let partial: Vec<_> = table.series("partial", "total_power_w").collect();
    let min_loss: Vec<_> = table.series("ff_min_loss", "total_power_w").collect();
    assert_eq!(partial.len(), min_loss.len());
    assert!(!partial.is_empty());
    for (p, f) in partial.iter().zip(&min_loss) {
        assert_eq!(p.m, f.m);
        assert!(p.mean_rate <= f.mean_rate, "M = {}: {} > {}", p.m, p.mean_rate, f.mean_rate);
    }
}
