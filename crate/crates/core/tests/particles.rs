use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use supercool::closed_form::LinearBarrier;
use supercool::densities::{IntensitySpec, Scan};
use supercool::particle_sim::{
    linear_bound, resolve_cascade, resolve_cascade_brute, run, run_fixed_barrier, FixedBarrier, Resample, Scheme,
    SimConfig, Terminal,
};
use supercool::sampling::{sample_ppp, SeedSpec};

fn half() -> IntensitySpec {
    IntensitySpec::constant(0.5).unwrap()
}

#[test]
fn cascade_resolver_matches_brute_force() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let count = rng.random_range(1..=50);
        let a = rng.random_range(0.01..0.5);
        let b = rng.random_range(-1.0..1.0);
        let spread = rng.random_range(0.05..5.0);
        let mut pos = vec![b];
        for _ in 1..count {
            // some exact ties on grid multiples, some continuous
            let x: f64 = if rng.random_bool(0.2) {
                b + a * rng.random_range(0..10) as f64
            } else {
                b + spread * rng.random::<f64>()
            };
            pos.push(x);
        }
        pos.sort_by(f64::total_cmp);
        assert_eq!(resolve_cascade(&pos, b, a).unwrap(), resolve_cascade_brute(&pos, b, a), "{pos:?} {b} {a}");
    }
}

fn check_log(cfg: &SimConfig) {
    let log = run(cfg).unwrap();
    let mut total = 0;
    let mut last = f64::NEG_INFINITY;
    for e in &log.events {
        assert!(e.time >= last && e.time <= cfg.horizon);
        assert_eq!(e.barrier_before, cfg.jump_unit * total as f64);
        assert_eq!(e.absorbed.len(), e.k);
        total += e.k;
        last = e.time;
    }
    assert_eq!(log.final_barrier(), cfg.jump_unit * log.absorbed_total() as f64);
    let d = &log.diagnostics;
    assert_eq!(d.alive_at_end + log.absorbed_total() + d.truncation_violations, d.particles);
    let path = log.path();
    let ts: Vec<f64> = (0..=100).map(|k| cfg.horizon * k as f64 / 100.0).collect();
    assert!(ts.windows(2).all(|w| path.value_at(w[0]) <= path.value_at(w[1])));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accounting_and_monotone_barrier(root in 0u64..10_000, n in 20.0f64..400.0, a in 0.1f64..0.95, euler in any::<bool>()) {
        let scheme = if euler { Scheme::Euler { dt: 1e-2 } } else { Scheme::Exact { resample: Resample::Lazy } };
        let cfg = SimConfig::n_system(IntensitySpec::constant(a).unwrap(), n, 1.0, SeedSpec::new(root)).with_scheme(scheme);
        check_log(&cfg);
    }
}

#[test]
fn replays_are_identical() {
    for scheme in [Scheme::Exact { resample: Resample::Lazy }, Scheme::Exact { resample: Resample::Full }, Scheme::Euler { dt: 1e-3 }] {
        let cfg = SimConfig::n_system(half(), 300.0, 1.0, SeedSpec::new(4)).with_scheme(scheme);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }
}

#[test]
fn larger_jumps_dominate_on_coupled_paths() {
    for r in 0..50 {
        let mk = |unit: f64| {
            SimConfig::new(half(), 300.0, unit, 1.0, SeedSpec::new(77).replica(r))
                .with_scheme(Scheme::Euler { dt: 1e-3 })
                .with_barrier_bound(4.0)
        };
        let small = run(&mk(1.0 / 300.0)).unwrap();
        let large = run(&mk(1.1 / 300.0)).unwrap();
        assert_eq!(small.diagnostics.extensions + large.diagnostics.extensions, 0);
        for k in 0..=1000 {
            let t = k as f64 * 1e-3;
            assert!(large.barrier_at(t) >= small.barrier_at(t), "replica {r} at t={t}");
        }
    }
}

#[test]
fn a_barrier_that_outruns_its_own_losses_bounds_the_system() {
    let f = LinearBarrier::new(2.0, 1.0);
    let n = 2000.0;
    let horizon = 1.0;
    for r in 0..30 {
        let seed = SeedSpec::new(31).replica(r);
        let cloud = sample_ppp(&half(), n, f.value(horizon) + 8.0, &seed).unwrap();
        let fixed = run_fixed_barrier(&cloud, &FixedBarrier::Linear(f), horizon, Scheme::default(), &seed).unwrap();
        let below = (0..=200).all(|k| {
            let t = horizon * k as f64 / 200.0;
            fixed.value_at(t) < f.value(t)
        });
        assert!(below);
        let log = run(&SimConfig::n_system(half(), n, horizon, seed)).unwrap();
        for k in 0..=200 {
            let t = horizon * k as f64 / 200.0;
            assert!(log.barrier_at(t) <= f.value(t));
        }
    }
}

#[test]
fn linear_bound_holds_in_nearly_every_replica() {
    let bound = linear_bound(&half(), 1.0, &Scan::new(200.0, 0.01)).expect("(A2) holds");
    // the fixed desk line 2t + 1 and the constructed one
    let lines = [2.0 + 1.0, bound.z];
    let n = 1e4;
    let finals: Vec<f64> = (0..200)
        .map(|r| run(&SimConfig::n_system(half(), n, 1.0, SeedSpec::new(5).replica(r))).unwrap().final_barrier())
        .collect();
    for z in lines {
        let over = finals.iter().filter(|&&v| v > z).count();
        assert!((over as f64) < 0.01 * 200.0, "{over} above {z}");
    }
}

#[test]
fn strong_feedback_needs_a_cap() {
    let g = IntensitySpec::constant(3.0).unwrap();
    let cfg = SimConfig::n_system(g.clone(), 100.0, 1.0, SeedSpec::new(1));
    assert!(run(&cfg).is_err());
    let log = run(&cfg.with_cap(5.0).with_barrier_bound(5.0)).unwrap();
    assert!(matches!(log.terminal, Terminal::Exploded { .. }));
}
