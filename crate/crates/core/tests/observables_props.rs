use exclusion_lab::coupling::burn_in_coupled;
use exclusion_lab::engine::{
    default_buffer, evolve_to, sample_initial_step, Configuration, EventSource, EventStream,
    LightCone, Window,
};
use exclusion_lab::kernel_profile::integrated_profile;
use exclusion_lab::observables::{
    bernoulli_marginal_test, empirical_density, estimate_x_infinity, flux_identity_check,
    lln_error, subadditive_array, FluxCounter,
};
use exclusion_lab::{JumpKernel, StepProfileParams};
use proptest::prelude::*;

fn kernel(lit: &str) -> JumpKernel {
    lit.parse().unwrap()
}

/// Net flux through bond (r, r+1) from particle labels: every particle
/// keeps an identity and the exclusion rule is applied directly.
fn label_flux(initial: &Configuration, k: &JumpKernel, seed: u64, t: f64, r: i64) -> i64 {
    let window = initial.window();
    let mut particles: Vec<(i64, i64)> = initial.occupied_sites().map(|x| (x, x)).collect();
    let mut stream = EventStream::new(seed, k, window);
    while let Some(e) = stream.next_until(t) {
        let target = e.target();
        if !window.contains(target) || particles.iter().any(|p| p.1 == target) {
            continue;
        }
        if let Some(p) = particles.iter_mut().find(|p| p.1 == e.site) {
            p.1 = target;
        }
    }
    particles
        .iter()
        .map(|&(a, b)| i64::from(a <= r && b > r) - i64::from(a > r && b <= r))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flux_counter_agrees_with_labels(seed in any::<u64>(), r in -6i64..6, lit_idx in 0usize..3) {
        let lits = ["1:1", "2:0.5,-1:0.5", "3:0.2,1:0.3,-2:0.5"];
        let k = kernel(lits[lit_idx]);
        let window = Window::new(-15, 15).unwrap();
        let params = StepProfileParams::new(0.8, 0.4).unwrap();
        let initial = sample_initial_step(window, &params, seed);
        let mut config = initial.clone();
        let mut counter = FluxCounter::new(r as f64);
        evolve_to(&mut config, &mut EventStream::new(seed, &k, window), 6.0, &mut [&mut counter]);
        prop_assert_eq!(counter.count, label_flux(&initial, &k, seed, 6.0, r));
        let check = flux_identity_check(&initial, &mut EventStream::new(seed, &k, window), 6.0, r as f64);
        prop_assert!(check.holds());
        prop_assert_eq!(check.flux, counter.count);
    }
}

#[test]
fn flux_observe_matches_observer_path() {
    let k = kernel("1:0.6,-1:0.4");
    let window = Window::new(-10, 10).unwrap();
    let mut config = sample_initial_step(window, &StepProfileParams::new(0.9, 0.1).unwrap(), 8);
    let mut manual = FluxCounter::new(0.0);
    let mut stream = EventStream::new(8, &k, window);
    let mut hooked = config.clone();
    let mut observer = FluxCounter::new(0.0);
    evolve_to(&mut hooked, &mut EventStream::new(8, &k, window), 15.0, &mut [&mut observer]);
    while let Some(e) = stream.next_until(15.0) {
        manual.observe(&e, &config);
        exclusion_lab::engine::apply_event(&mut config, &e);
    }
    assert_eq!(manual.count, observer.count);
}

#[test]
fn subadditivity_holds_for_an_asymmetric_kernel() {
    let k = kernel("2:0.35,1:0.25,-1:0.4");
    let params = StepProfileParams::new(0.85, 0.2).unwrap();
    let (u, n_max) = (0.7, 14usize);
    let buffer = default_buffer(&k, n_max as f64 / u);
    let window = Window::new(-buffer, n_max as i64 + buffer).unwrap();
    for seed in 0..40 {
        let pair = burn_in_coupled(&params, &k, window, window.len() as f64, seed).unwrap();
        let record = subadditive_array(&k, u, n_max, seed, &pair).unwrap();
        assert_eq!(record.subadditivity_violation(), None, "seed {seed}");
        assert!(record.get(0, 1) <= record.origin_crossings());
        for n in 0..=n_max {
            assert_eq!(record.get(n, n), 0);
        }
    }
}

#[test]
fn equal_densities_have_no_second_class_particles() {
    let k = kernel("1:1");
    let params = StepProfileParams::new(0.4, 0.4).unwrap();
    let window = Window::new(-60, 80).unwrap();
    let pair = burn_in_coupled(&params, &k, window, 0.0, 1).unwrap();
    let record = subadditive_array(&k, 1.0, 10, 1, &pair).unwrap();
    let est = estimate_x_infinity(&record).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn stationary_measure_stays_bernoulli() {
    let k = kernel("1:0.7,-1:0.3");
    let params = StepProfileParams::new(0.5, 0.5).unwrap();
    let window = Window::new(-400, 400).unwrap();
    let t = 100.0;
    let mut configs = Vec::new();
    let mut region = (window.lo(), window.hi());
    for seed in 0..20 {
        let mut config = sample_initial_step(window, &params, seed);
        let mut cone = LightCone::new(window, k.reach());
        evolve_to(&mut config, &mut EventStream::new(seed, &k, window), t, &mut [&mut cone]);
        let (a, b) = cone.clean_region().unwrap();
        region = (region.0.max(a), region.1.min(b));
        let err = lln_error(&config, -1.0, 1.0, t, &k, &params, Some(&cone)).unwrap();
        // binomial sd of the count is sqrt(201 / 4); 4 sd in density units
        assert!(err.abs() <= 4.0 * (201.0f64 / 4.0).sqrt() / t, "seed {seed}: {err}");
        configs.push(config);
    }
    let report = bernoulli_marginal_test(&configs, region.0, region.1, 0.5).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn uncertified_interval_is_reported() {
    let k = kernel("1:1");
    let params = StepProfileParams::new(1.0, 0.0).unwrap();
    let window = Window::new(-30, 30).unwrap();
    let mut config = sample_initial_step(window, &params, 2);
    let mut cone = LightCone::new(window, 1);
    evolve_to(&mut config, &mut EventStream::new(2, &k, window), 25.0, &mut [&mut cone]);
    assert!(empirical_density(&config, -1.0, 1.0, 25.0, Some(&cone)).is_err());
    assert!(empirical_density(&config, -1.0, 1.0, 25.0, None).is_ok());
    assert_eq!(integrated_profile(-1.0, 1.0, &k, &params).unwrap(), 1.0);
}
