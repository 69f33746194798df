use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use supercool::closed_form::k_alpha;
use supercool::densities::IntensitySpec;
use supercool::mean_field::{
    asymptotic_speed, estimate_contraction, eval_gamma, physical_jump_size, solve_minimal, uniform_grid,
    GammaEvalConfig, GridFunction, JumpSize, SolveOptions, SolverMethod, Speed, SubBarrierDensity,
};
use supercool::sampling::SeedSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma_is_monotone_in_its_argument(c in 0.0f64..2.0, q in 0.0f64..1.0, lift in 0.0f64..0.3, root in 0u64..1000) {
        let g = IntensitySpec::travelling_wave(1.0).unwrap();
        let grid = uniform_grid(1.0, 0.05).unwrap();
        let f1 = GridFunction::from_fn(grid.clone(), |t| c * t).unwrap();
        let f2 = GridFunction::from_fn(grid, |t| c * t + q * t * t + lift).unwrap();
        let cfg = GammaEvalConfig::new(2000, SeedSpec::new(root));
        let a = eval_gamma(&f1, &g, &cfg).unwrap();
        let b = eval_gamma(&f2, &g, &cfg).unwrap();
        prop_assert!(a.value.values().iter().zip(b.value.values()).all(|(x, y)| x <= y));
    }
}

#[test]
fn picard_iterates_increase() {
    let g = IntensitySpec::constant(0.6).unwrap();
    let grid = uniform_grid(1.0, 0.02).unwrap();
    let cfg = GammaEvalConfig::new(5000, SeedSpec::new(12));
    let iterate = |k: usize| {
        let opts = SolveOptions { method: SolverMethod::Picard, max_iter: k, tol: Some(0.0), ..SolveOptions::default() };
        solve_minimal(&g, &grid, &cfg, &opts).unwrap().0
    };
    let mut prev = iterate(1);
    for k in 2..=8 {
        let next = iterate(k);
        assert!(prev.values().iter().zip(next.values()).all(|(a, b)| a <= b), "iterate {k}");
        prev = next;
    }
}

fn holder_constant(lam: &GridFunction) -> f64 {
    let (t, v) = (lam.grid(), lam.values());
    let mut best: f64 = 0.0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            best = best.max((v[j] - v[i]) / (t[j] - t[i]).sqrt());
        }
    }
    best
}

#[test]
fn weak_feedback_solutions_are_half_holder() {
    let g = IntensitySpec::constant(0.5).unwrap();
    let cfg = GammaEvalConfig::new(20_000, SeedSpec::new(3)).with_control_variate(true);
    let h: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| holder_constant(&solve_minimal(&g, &uniform_grid(1.0, dt).unwrap(), &cfg, &SolveOptions::default()).unwrap().0))
        .collect();
    let k = k_alpha(0.5).unwrap();
    for w in h.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{h:?}");
    }
    assert!(h.iter().all(|&x| x < 1.5 * k), "{h:?} vs K = {k}");
}

fn brute_jump(dx: f64, bins: &[f64]) -> JumpSize {
    let mut c = 0.0;
    for (k, &d) in bins.iter().enumerate() {
        let x0 = k as f64 * dx;
        let h0 = c - x0;
        let h1 = h0 + (d - 1.0) * dx;
        if h1 < 0.0 {
            return JumpSize::Finite(if k == 0 { 0.0 } else { x0 + h0 / (1.0 - d) });
        }
        c += d * dx;
    }
    JumpSize::Explosion
}

#[test]
fn physical_jump_matches_brute_force() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let dx = 1.0 / 16.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..200);
        let bins: Vec<f64> = (0..len).map(|_| rng.random_range(0..=16) as f64 / 8.0).collect();
        let dens = SubBarrierDensity::from_bins(dx, &bins, 0.0).unwrap();
        assert_eq!(physical_jump_size(&dens), brute_jump(dx, &bins), "{bins:?}");
    }
}

#[test]
fn contraction_is_first_order_in_the_lift() {
    let g = IntensitySpec::travelling_wave(1.0).unwrap();
    let grid = uniform_grid(2.0, 0.01).unwrap();
    let cfg = GammaEvalConfig::new(20_000, SeedSpec::new(2)).with_control_variate(true);
    let (lam, _) = solve_minimal(&g, &grid, &cfg, &SolveOptions::default()).unwrap();
    let a = estimate_contraction(&g, &lam, 1e-2, 2.0, &cfg).unwrap();
    let b = estimate_contraction(&g, &lam, 5e-3, 2.0, &cfg).unwrap();
    assert!(a.weak_feedback && a.kappa < 1.0);
    assert!((a.kappa - b.kappa).abs() < 3.0 * (a.se * a.se + b.se * b.se).sqrt(), "{a:?} {b:?}");
}

#[test]
fn strong_density_explodes_at_once() {
    let g = IntensitySpec::constant(3.0).unwrap();
    let grid = uniform_grid(1.0, 0.1).unwrap();
    let cfg = GammaEvalConfig::new(100, SeedSpec::new(1));
    let (_, rep) = solve_minimal(&g, &grid, &cfg, &SolveOptions::default().with_cap(100.0)).unwrap();
    assert_eq!(rep.exploded, Some(0.0));
}

#[test]
fn speed_regimes() {
    assert_eq!(asymptotic_speed(&IntensitySpec::travelling_wave(2.0).unwrap()), Speed::Linear(1.0));
    match asymptotic_speed(&IntensitySpec::constant(0.5).unwrap()) {
        Speed::Sqrt(k) => assert_eq!(k, k_alpha(0.5).unwrap()),
        other => panic!("{other:?}"),
    }
    assert_eq!(asymptotic_speed(&IntensitySpec::constant(1.0).unwrap()), Speed::NotApplicable);
}

#[test]
fn solutions_reproduce_across_worker_counts() {
    let g = IntensitySpec::travelling_wave(1.0).unwrap();
    let grid = uniform_grid(1.0, 0.02).unwrap();
    let cfg = GammaEvalConfig::new(10_000, SeedSpec::new(6)).with_control_variate(true);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| solve_minimal(&g, &grid, &cfg, &SolveOptions::default()).unwrap());
    let b = three.install(|| solve_minimal(&g, &grid, &cfg, &SolveOptions::default()).unwrap());
    assert_eq!(a, b);
}
