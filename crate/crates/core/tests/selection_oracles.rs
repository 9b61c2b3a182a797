use antsel::channel::{column_powers, draw_channel, CovarianceSqrt, RngStream};
use antsel::connectivity::build_connectivity;
use antsel::linalg::{gram, CMatrix};
use antsel::selection::{
    allocation_log2_det, mask_log2_det, select_csi, select_power_ff, select_power_pc, waterfill_users, SelectionMask,
};
use proptest::prelude::*;

fn channel(k: usize, n: usize, seed: u64, trial: u64) -> CMatrix<f64> {
    draw_channel(k, n, &CovarianceSqrt::identity(k), &RngStream::new(seed), trial).unwrap().matrix().clone()
}

fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|b| b.count_ones() as usize == m)
        .map(|b| (0..n).filter(|&i| b >> i & 1 == 1).collect())
        .collect()
}

fn best_capacity(h: &CMatrix<f64>, candidates: &[Vec<usize>], rho: f64) -> f64 {
    candidates
        .iter()
        .map(|s| mask_log2_det(h, &SelectionMask::new(s.clone()), rho).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn csi_selection_close_to_exhaustive_search() {
    let (n, m, k, rho) = (8, 4, 2, 10.0);
    let map = build_connectivity(n, m).unwrap();
    let all = subsets(n, m);
    let feasible: Vec<Vec<usize>> = all.iter().filter(|s| map.admits(s)).cloned().collect();
    let (mut ff, mut ff_opt, mut pc, mut pc_opt) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..200 {
        let h = channel(k, n, 2024, t);
        let a = select_csi(&h, m, None, rho).unwrap();
        let b = select_csi(&h, m, Some(&map), rho).unwrap();
        assert!(map.admits(b.mask.indices()));
        let (oa, ob) = (best_capacity(&h, &all, rho), best_capacity(&h, &feasible, rho));
        assert!(a.capacity <= oa + 1e-9 && b.capacity <= ob + 1e-9);
        // the fully flexible optimum dominates the constrained one
        assert!(oa >= ob - 1e-12);
        ff += a.capacity;
        ff_opt += oa;
        pc += b.capacity;
        pc_opt += ob;
    }
    assert!(ff / ff_opt >= 0.99, "FF ratio {}", ff / ff_opt);
    assert!(pc / pc_opt >= 0.97, "PC ratio {}", pc / pc_opt);
}

#[test]
fn waterfill_matches_grid_search() {
    let rho = 10.0;
    for t in 0..20 {
        let h = channel(2, 4, 77, t);
        let g = gram(&h);
        let p = waterfill_users(&h, rho).unwrap();
        let got = allocation_log2_det(&g, p.p.as_slice(), rho).unwrap();
        let grid = (0..=2000)
            .map(|i| {
                let p1 = i as f64 * 1e-3;
                allocation_log2_det(&g, &[p1, 2.0 - p1], rho).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((got - grid).abs() < 1e-4 || got > grid, "trial {t}: {got} vs grid {grid}");
    }
}

#[test]
fn power_pc_agrees_with_ff_when_top_m_is_feasible() {
    let map = build_connectivity(9, 4).unwrap();
    let mut agreed = 0;
    for t in 0..10_000 {
        let h = channel(2, 9, 5, t);
        let powers: Vec<f64> = column_powers(&h).iter().copied().collect();
        let ff = select_power_ff(&powers, 4).unwrap();
        let pc = select_power_pc(&powers, &map).unwrap();
        if map.admits(ff.indices()) {
            assert_eq!(ff, pc);
            agreed += 1;
        }
        // the strongest antenna is always reachable
        let top = select_power_ff(&powers, 1).unwrap().indices()[0];
        assert!(pc.contains(top));
    }
    assert!(agreed > 0);
}

#[test]
fn fully_flexible_csi_dominates_constrained() {
    let map = build_connectivity(10, 6).unwrap();
    let (mut ff, mut pc) = (0.0, 0.0);
    for t in 0..50 {
        let h = channel(3, 10, 8, t);
        ff += select_csi(&h, 6, None, 10.0).unwrap().capacity;
        pc += select_csi(&h, 6, Some(&map), 10.0).unwrap().capacity;
    }
    assert!(ff >= pc);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masks_have_m_antennas_and_meet_budgets(n in 2usize..16, frac in 0.0f64..1.0, seed in 0u64..1000) {
        let m = 1 + ((n - 1) as f64 * frac) as usize;
        let map = build_connectivity(n, m).unwrap();
        let h = channel(2, n, seed, 0);
        let powers: Vec<f64> = column_powers(&h).iter().copied().collect();
        let ff = select_power_ff(&powers, m).unwrap();
        let pc = select_power_pc(&powers, &map).unwrap();
        let csi = select_csi(&h, m, Some(&map), 10.0).unwrap();
        prop_assert_eq!(ff.len(), m);
        prop_assert!(map.admits(pc.indices()));
        prop_assert!(map.admits(csi.mask.indices()));
    }
}
