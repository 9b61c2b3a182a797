use antsel::analysis::{
    approx_capacity, power_scaling_ff, power_scaling_pc, rank_set_distribution_exact, rank_set_distribution_mc, ApproxMode,
    OrderStatSpec, OrderStatistics,
};
use antsel::channel::RngStream;
use antsel::connectivity::build_connectivity;
use rand_distr::{Distribution, Gamma};

/// Mean of each order statistic of `n` Gamma(k, 1) draws over `samples`.
fn mc_order_means(n: usize, k: usize, samples: usize, seed: u64) -> Vec<f64> {
    let gamma = Gamma::new(k as f64, 1.0).unwrap();
    let mut rng = RngStream::new(seed).rng(0);
    let mut sums = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for _ in 0..samples {
        for b in buf.iter_mut() {
            *b = gamma.sample(&mut rng);
        }
        buf.sort_by(f64::total_cmp);
        for (s, b) in sums.iter_mut().zip(&buf) {
            *s += b;
        }
    }
    sums.into_iter().map(|s| s / samples as f64).collect()
}

#[test]
fn moments_match_monte_carlo() {
    for (n, k) in [(8, 2), (5, 3), (3, 8)] {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(n, k)).unwrap();
        let mc = mc_order_means(n, k, 200_000, 40 + n as u64);
        for t in 1..=n {
            let q = stats.moment(t).unwrap();
            assert!((q / mc[t - 1] - 1.0).abs() < 0.01, "N={n} K={k} t={t}: {q} vs {}", mc[t - 1]);
        }
    }
}

#[test]
fn moments_partition_the_sample_sum() {
    for n in [1, 4, 8, 16, 32] {
        for k in [1, 2, 8, 16] {
            let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(n, k)).unwrap();
            let total: f64 = stats.all_moments().unwrap().iter().sum();
            let expected = (n * k) as f64;
            assert!((total / expected - 1.0).abs() < 1e-3, "N={n} K={k}: {total}");
        }
    }
}

#[test]
fn quadrature_has_converged_at_default_nodes() {
    for n in [1, 2, 5, 8, 12, 16] {
        for k in [1, 2, 4, 8, 16] {
            let base = OrderStatSpec::new(n, k);
            let fine = OrderStatSpec { quadrature_nodes: 2 * base.quadrature_nodes, ..base };
            let a = OrderStatistics::<f64>::new(base).unwrap();
            let b = OrderStatistics::<f64>::new(fine).unwrap();
            for t in 1..=n {
                let (x, y) = (a.moment(t).unwrap(), b.moment(t).unwrap());
                assert!((x / y - 1.0).abs() < 1e-6, "N={n} K={k} t={t}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn max_of_eight_scaling_matches_monte_carlo() {
    let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(8, 2)).unwrap();
    let ps = power_scaling_ff(1, &stats).unwrap();
    let mc = mc_order_means(8, 2, 200_000, 7)[7] / 2.0;
    assert!((ps.value / mc - 1.0).abs() < 0.01);
}

#[test]
fn exact_rank_sets_agree_with_permutations() {
    let stream = RngStream::new(77);
    for n in 2..=10 {
        for m in 1..n {
            let map = build_connectivity(n, m).unwrap();
            let exact = rank_set_distribution_exact(&map).unwrap();
            let samples = 40_000;
            let mc = rank_set_distribution_mc(&map, samples, &stream.derive((n * 100 + m) as u64)).unwrap();
            for set in exact.sets.iter().chain(&mc.sets) {
                let p = exact.prob_of(set);
                let q = mc.prob_of(set);
                // binomial 3 sigma, with a one-count floor for rare sets
                let sigma = (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64);
                assert!((p - q).abs() <= 3.5 * sigma, "N={n} M={m} {set:?}: exact {p} mc {q}");
            }
        }
    }
}

#[test]
fn pc_scaling_bounded_by_ff() {
    for (n, m) in [(5, 2), (8, 3), (8, 5), (10, 4), (12, 7)] {
        let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(n, 2)).unwrap();
        let dist = rank_set_distribution_exact(&build_connectivity(n, m).unwrap()).unwrap();
        let pc = power_scaling_pc(&dist, &stats).unwrap().value;
        let ff = power_scaling_ff(m, &stats).unwrap().value;
        assert!(pc <= ff + 1e-12, "N={n} M={m}");
    }
}

#[test]
fn mixture_below_single_on_many_maps() {
    let stream = RngStream::new(5);
    let mut checked = 0;
    for n in 3..=12 {
        for m in 1..n {
            let stats = OrderStatistics::<f64>::new(OrderStatSpec::new(n, 2)).unwrap();
            let dist = rank_set_distribution_exact(&build_connectivity(n, m).unwrap()).unwrap();
            let ps = power_scaling_pc(&dist, &stats).unwrap();
            let single = approx_capacity(&ps, 2, m, 10.0, ApproxMode::Single, 200, &stream).unwrap();
            let mix = approx_capacity(&ps, 2, m, 10.0, ApproxMode::Mixture, 200, &stream).unwrap();
            assert!(mix.mean <= single.mean + 1e-12, "N={n} M={m}");
            checked += 1;
        }
    }
    assert!(checked >= 55);
}
