use exclusion_lab::engine::{
    apply_event, count_interval, evolve_to, sample_initial_step, shift_stream, Configuration,
    Event, EventLog, EventSource, EventStream, JumpOutcome, LightCone, Window,
};
use exclusion_lab::{JumpKernel, StepProfileParams};
use proptest::prelude::*;

fn kernel(lit: &str) -> JumpKernel {
    lit.parse().unwrap()
}

fn drain_until<S: EventSource>(stream: &mut S, t: f64) -> Vec<Event> {
    std::iter::from_fn(|| stream.next_until(t)).collect()
}

#[test]
fn per_site_ring_counts_are_poisson() {
    let n_sites = 10_000;
    let t = 10.0;
    let window = Window::new(0, n_sites - 1).unwrap();
    let mut stream = EventStream::new(77, &kernel("1:0.5,-1:0.5"), window);
    let mut counts = vec![0u64; n_sites as usize];
    while let Some(e) = stream.next_until(t) {
        counts[e.site as usize] += 1;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = (t / n).sqrt();
    assert!((mean - t).abs() <= 3.0 * sigma, "mean {mean}");
    // sd of the sample variance of Poisson(t) is about sqrt((t + 2t^2)/n)
    let var_sd = ((t + 2.0 * t * t) / n).sqrt();
    assert!((var - t).abs() <= 4.0 * var_sd, "variance {var}");
}

#[test]
fn displacement_frequencies_follow_the_kernel() {
    let k = kernel("3:0.2,1:0.5,-2:0.3");
    let mut stream = EventStream::new(5, &k, Window::new(-200, 200).unwrap());
    let events = drain_until(&mut stream, 50.0);
    let n = events.len() as f64;
    for &(z, p) in k.support() {
        let hits = events.iter().filter(|e| e.displacement == z).count() as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((hits - n * p).abs() <= 4.0 * sd, "z={z}: {hits} of {n}");
    }
}

#[test]
fn total_rings_match_window_size_times_time() {
    let window = Window::new(-50, 49).unwrap();
    let t = 5.0;
    let k = kernel("1:0.7,-1:0.3");
    let params = StepProfileParams::new(0.7, 0.2).unwrap();
    let replicas = 200;
    let mut total = 0u64;
    for seed in 0..replicas {
        let mut config = sample_initial_step(window, &params, seed);
        let mut stream = EventStream::new(seed, &k, window);
        total += evolve_to(&mut config, &mut stream, t, &mut []).events;
    }
    let expected = window.len() as f64 * t;
    let mean = total as f64 / replicas as f64;
    let sigma = (expected / replicas as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * sigma, "mean {mean} vs {expected}");
}

#[test]
fn closed_window_conserves_particles() {
    let window = Window::new(-20, 20).unwrap();
    let params = StepProfileParams::new(0.9, 0.3).unwrap();
    let mut suppressed = 0;
    for seed in 0..20 {
        let mut config = sample_initial_step(window, &params, seed);
        let before = config.count();
        let stats = evolve_to(
            &mut config,
            &mut EventStream::new(seed, &kernel("2:0.6,-1:0.4"), window),
            30.0,
            &mut [],
        );
        assert_eq!(config.count(), before);
        suppressed += stats.suppressed;
    }
    assert!(suppressed > 0);
}

#[test]
fn observers_see_configuration_before_each_move() {
    let window = Window::new(-10, 10).unwrap();
    let k = kernel("1:0.6,-1:0.4");
    let mut config = sample_initial_step(window, &StepProfileParams::new(0.8, 0.2).unwrap(), 3);
    let mut replay = config.clone();
    let mut log = EventLog::default();
    let mut mismatches = 0;
    let mut checker = |e: &Event, outcome: JumpOutcome, before: &Configuration| {
        if before != &replay {
            mismatches += 1;
        }
        assert_eq!(apply_event(&mut replay, e), outcome);
    };
    evolve_to(&mut config, &mut EventStream::new(3, &k, window), 10.0, &mut [&mut log, &mut checker]);
    assert_eq!(mismatches, 0);
    assert_eq!(config, replay);
    let mut csv = Vec::new();
    log.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("time,site,displacement,applied\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shifting_replays_the_remaining_events(seed in any::<u64>(), s in 0.0f64..8.0) {
        let k = kernel("2:0.3,1:0.4,-1:0.3");
        let window = Window::new(-25, 25).unwrap();
        let params = StepProfileParams::new(0.75, 0.25).unwrap();
        let t = 8.0;
        let mut direct = sample_initial_step(window, &params, seed);
        evolve_to(&mut direct, &mut EventStream::new(seed, &k, window), t, &mut []);

        let base = EventStream::new(seed, &k, window);
        let mut split = sample_initial_step(window, &params, seed);
        evolve_to(&mut split, &mut EventStream::new(seed, &k, window), s, &mut []);
        let mut tail = shift_stream(&base, s);
        evolve_to(&mut split, &mut tail, t, &mut []);
        prop_assert_eq!(direct, split);
    }

    #[test]
    fn enlarging_the_window_keeps_certified_sites(seed in any::<u64>(), extra in 1i64..40) {
        let k = kernel("1:0.5,2:0.2,-1:0.3");
        let params = StepProfileParams::new(0.85, 0.15).unwrap();
        let small = Window::new(-30, 30).unwrap();
        let large = Window::new(-30 - extra, 30 + 2 * extra).unwrap();
        let t = 6.0;
        let mut a = sample_initial_step(small, &params, seed);
        let mut cone = LightCone::new(small, k.reach());
        evolve_to(&mut a, &mut EventStream::new(seed, &k, small), t, &mut [&mut cone]);
        let mut b = sample_initial_step(large, &params, seed);
        evolve_to(&mut b, &mut EventStream::new(seed, &k, large), t, &mut []);
        if let Some((from, to)) = cone.clean_region() {
            for x in from..=to {
                prop_assert_eq!(a.get(x), b.get(x), "site {}", x);
            }
        }
    }

    #[test]
    fn streams_depend_only_on_seed_and_site(seed in any::<u64>(), lo in -20i64..0, hi in 1i64..20) {
        let k = kernel("1:0.5,-1:0.5");
        let inner = drain_until(&mut EventStream::new(seed, &k, Window::new(lo, hi).unwrap()), 4.0);
        let outer = drain_until(&mut EventStream::new(seed, &k, Window::new(lo - 7, hi + 9).unwrap()), 4.0);
        let restricted: Vec<Event> = outer.into_iter().filter(|e| lo <= e.site && e.site <= hi).collect();
        prop_assert_eq!(inner, restricted);
    }

    #[test]
    fn interval_counts_clip_to_integer_sites(a in -10.0f64..10.0, len in 0.0f64..10.0) {
        let window = Window::new(-10, 20).unwrap();
        let full = Configuration::full(window);
        let b = a + len;
        let expected = (a.ceil() as i64..=b.floor() as i64).count();
        prop_assert_eq!(count_interval(&full, a, b).unwrap(), expected);
    }
}

#[test]
fn crossing_rings_have_mean_k_times_first_moment() {
    // every ring of x with x ≤ 0 < x + z crosses bond (0, 1)
    let k = kernel("2:0.25,1:0.25,-1:0.5");
    let m = k.first_moment();
    let reach = k.reach();
    let horizon = 10.0;
    let replicas = 2000;
    let mut counts = Vec::with_capacity(replicas);
    for seed in 0..replicas as u64 {
        let mut stream = EventStream::new(seed, &k, Window::new(-reach, reach).unwrap());
        counts.push(drain_until(&mut stream, horizon).iter().filter(|e| e.crosses_bond(0)).count() as f64);
    }
    let mean = counts.iter().sum::<f64>() / replicas as f64;
    let sigma = (horizon * m / replicas as f64).sqrt();
    assert!((mean - horizon * m).abs() <= 3.0 * sigma, "mean {mean} vs {}", horizon * m);
}
