use qrd_core::protocol::{simulate_teleportation_rd, CodebookMode, SimulationConfig};

/// `(1 − S_k 4^{−n})^M` with `S_k = Σ_{j≤k} C(n,j) 3^j`, in plain floats.
fn ensemble_target(n: usize, m: u64, k: usize) -> f64 {
    let mut binom = 1.0;
    let mut s = 0.0;
    for j in 0..=k {
        s += binom * 3f64.powi(j as i32);
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    (1.0 - s / 4f64.powi(n as i32)).powf(m as f64)
}

#[test]
fn fresh_codebooks_are_unbiased_across_seeds() {
    let (n, m, d, trials) = (6usize, 40u64, 1.0 / 6.0, 4000u64);
    let target = ensemble_target(n, m, 1);
    let sd = (target * (1.0 - target) / trials as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    for seed in 0..30 {
        let r = simulate_teleportation_rd(&SimulationConfig {
            n,
            m,
            d,
            trials,
            seed,
            codebook_mode: CodebookMode::FreshPerTrial,
        })
        .unwrap();
        assert!((r.target - target).abs() < 1e-12, "{} vs {target}", r.target);
        assert!(r.ci_low <= r.empirical_excess && r.empirical_excess <= r.ci_high);
        assert_eq!(r.excess_from_histogram(), r.excess_count);
        worst = worst.max((r.empirical_excess - target).abs() / sd);
        total += r.empirical_excess;
    }
    assert!(worst < 4.0, "max |z| = {worst}");
    let pooled_z = (total / 30.0 - target).abs() / (sd / 30f64.sqrt());
    assert!(pooled_z < 4.0, "pooled |z| = {pooled_z}");
}

#[test]
fn full_codebook_and_large_distortion_never_exceed() {
    for (m, d, mode) in [(256u64, 0.0, CodebookMode::Exhaustive), (5, 1.0, CodebookMode::Fixed)] {
        let r = simulate_teleportation_rd(&SimulationConfig {
            n: 4,
            m,
            d,
            trials: 500,
            seed: 9,
            codebook_mode: mode,
        })
        .unwrap();
        assert_eq!(r.excess_count, 0, "{mode:?}");
    }
}
