//! Exact pathwise checks run by `verify` and by `kind = invariants`.
//!
//! Every check is a deterministic function of a seed; a failure message
//! names the first discrepancy.

use rayon::prelude::*;

use crate::coupling::{
    burn_in_coupled, class_view, evolve_nested, merge_t, reclass_at, reflect_holes,
    sample_coupled_pair, truncate_left, truncate_right, NestedFamily,
};
use crate::engine::rng::initial_uniform;
use crate::engine::{
    default_buffer, evolve_to, reflect_stream, sample_initial_step, Configuration, EventSource,
    EventStream, LightCone, Window,
};
use crate::kernel_profile::{JumpKernel, StepProfileParams};
use crate::observables::{flux_identity_check, subadditive_array, FluxCounter};

pub const CHECKS: [&str; 12] = [
    "attractiveness",
    "nested_marginals",
    "class_conservation",
    "reflection_conjugacy",
    "flux_identity",
    "flux_label_oracle",
    "reflected_flux",
    "window_extension",
    "shift_replay",
    "reclass_structure",
    "subadditivity",
    "origin_crossing_bound",
];

/// Sizes used by the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSetup {
    pub kernel: JumpKernel,
    pub params: StepProfileParams,
    /// Half-width of the symmetric window for the small-system checks.
    pub half_width: i64,
    pub horizon: f64,
    /// Size of the subadditive array.
    pub n_max: usize,
    pub u: f64,
}

impl InvariantSetup {
    pub fn new(kernel: JumpKernel, params: StepProfileParams) -> Self {
        Self {
            kernel,
            params,
            half_width: 30,
            horizon: 20.0,
            n_max: 20,
            u: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    pub runs: usize,
    pub passed: usize,
    /// Seed and message of the first failing run.
    pub first_failure: Option<(u64, String)>,
}

impl CheckSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.runs
    }
}

type Outcome = Result<(), String>;

/// Runs every check for every seed, in parallel over seeds.
pub fn run_suite(setup: &InvariantSetup, seeds: &[u64]) -> Vec<CheckSummary> {
    let per_seed: Vec<Vec<Outcome>> = seeds.par_iter().map(|&s| check_seed(setup, s)).collect();
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let mut summary = CheckSummary {
                name,
                runs: seeds.len(),
                passed: 0,
                first_failure: None,
            };
            for (seed, outcomes) in seeds.iter().zip(&per_seed) {
                match &outcomes[i] {
                    Ok(()) => summary.passed += 1,
                    Err(msg) if summary.first_failure.is_none() => {
                        summary.first_failure = Some((*seed, msg.clone()))
                    }
                    Err(_) => {}
                }
            }
            summary
        })
        .collect()
}

/// Outcomes in the order of [`CHECKS`].
pub fn check_seed(setup: &InvariantSetup, seed: u64) -> Vec<Outcome> {
    let (sub, crossing) = subadditivity(setup, seed);
    vec![
        attractiveness(setup, seed),
        nested_marginals(setup, seed),
        class_conservation(setup, seed),
        reflection_conjugacy(setup, seed),
        flux_identity(setup, seed),
        flux_label_oracle(setup, seed),
        reflected_flux(setup, seed),
        window_extension(setup, seed),
        shift_replay(setup, seed),
        reclass_structure(setup, seed),
        sub,
        crossing,
    ]
}

fn small_window(setup: &InvariantSetup) -> Window {
    Window::symmetric(setup.half_width)
}

/// Three nested levels with densities 0.3, 0.55, 0.8 from shared uniforms.
fn three_level_family(window: Window, seed: u64) -> NestedFamily {
    let levels = [0.3, 0.55, 0.8]
        .iter()
        .map(|&d| Configuration::from_fn(window, |x| initial_uniform(seed, x) <= d))
        .collect();
    NestedFamily::new(levels).expect("thresholds are increasing")
}

fn first_mismatch(a: &Configuration, b: &Configuration) -> Option<i64> {
    a.window().sites().find(|&x| a.get(x) != b.get(x))
}

fn attractiveness(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let mut family = three_level_family(window, seed);
    let mut stream = EventStream::new(seed, &setup.kernel, window);
    while let Some(event) = stream.next_until(setup.horizon) {
        family.apply(&event);
        for j in 1..family.arity() {
            if let Some(x) = family.level(j).first_excess_over(family.level(j + 1)) {
                return Err(format!(
                    "level {j} exceeds level {} at site {x} after event at t={}",
                    j + 1,
                    event.time
                ));
            }
        }
    }
    Ok(())
}

fn nested_marginals(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let mut family = three_level_family(window, seed);
    let mut stream = EventStream::new(seed, &setup.kernel, window);
    evolve_nested(&mut family, &mut stream, setup.horizon, &mut |_| {});
    let initial = three_level_family(window, seed);
    for j in 1..=3 {
        let mut alone = initial.level(j).clone();
        let mut stream = EventStream::new(seed, &setup.kernel, window);
        evolve_to(&mut alone, &mut stream, setup.horizon, &mut []);
        if let Some(x) = first_mismatch(&alone, family.level(j)) {
            return Err(format!("level {j} differs from its solo run at site {x}"));
        }
    }
    Ok(())
}

fn class_conservation(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let mut family = three_level_family(window, seed);
    let before = class_view(&family);
    let mut stream = EventStream::new(seed, &setup.kernel, window);
    evolve_nested(&mut family, &mut stream, setup.horizon, &mut |_| {});
    let after = class_view(&family);
    for class in 0..=3u8 {
        if before.count(class) != after.count(class) {
            return Err(format!(
                "class {class} count changed from {} to {}",
                before.count(class),
                after.count(class)
            ));
        }
    }
    Ok(())
}

fn reflection_conjugacy(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let initial = sample_initial_step(window, &setup.params, seed);
    let mut direct = initial.clone();
    evolve_to(
        &mut direct,
        &mut EventStream::new(seed, &setup.kernel, window),
        setup.horizon,
        &mut [],
    );
    let mut holes = reflect_holes(&initial).map_err(|e| e.to_string())?;
    let mut reflected = reflect_stream(EventStream::new(seed, &setup.kernel, window));
    evolve_to(&mut holes, &mut reflected, setup.horizon, &mut []);
    let expected = reflect_holes(&direct).map_err(|e| e.to_string())?;
    match first_mismatch(&holes, &expected) {
        Some(x) => Err(format!("reflected evolution differs at site {x}")),
        None => Ok(()),
    }
}

fn flux_identity(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let initial = sample_initial_step(window, &setup.params, seed);
    for r in [-7.5, -1.0, 0.0, 0.5, 3.0] {
        let mut stream = EventStream::new(seed, &setup.kernel, window);
        let check = flux_identity_check(&initial, &mut stream, setup.horizon, r);
        if !check.holds() {
            return Err(format!(
                "flux {} through {r} but mass change {}",
                check.flux, check.mass_change
            ));
        }
    }
    Ok(())
}

/// Net flux through the bond `(r, r+1)` computed by following labelled
/// particles with an independent implementation of the exclusion rule.
pub fn labelled_flux(
    initial: &Configuration,
    kernel: &JumpKernel,
    seed: u64,
    t: f64,
    r: i64,
) -> i64 {
    let window = initial.window();
    let idx = |x: i64| (x - window.lo()) as usize;
    let mut owner: Vec<Option<usize>> = vec![None; window.len()];
    let mut start = Vec::new();
    for x in initial.occupied_sites() {
        owner[idx(x)] = Some(start.len());
        start.push(x);
    }
    let mut position = start.clone();
    let mut stream = EventStream::new(seed, kernel, window);
    while let Some(event) = stream.next_until(t) {
        let Some(id) = owner[idx(event.site)] else { continue };
        let y = event.target();
        if window.contains(y) && owner[idx(y)].is_none() {
            owner[idx(y)] = Some(id);
            owner[idx(event.site)] = None;
            position[id] = y;
        }
    }
    start
        .iter()
        .zip(&position)
        .map(|(&a, &b)| match (a <= r, b <= r) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        })
        .sum()
}

fn flux_label_oracle(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let initial = sample_initial_step(window, &setup.params, seed);
    for r in [-4, 0, 5] {
        let mut config = initial.clone();
        let mut counter = FluxCounter::new(r as f64);
        let mut stream = EventStream::new(seed, &setup.kernel, window);
        evolve_to(&mut config, &mut stream, setup.horizon, &mut [&mut counter]);
        let oracle = labelled_flux(&initial, &setup.kernel, seed, setup.horizon, r);
        if counter.count != oracle {
            return Err(format!("counter {} vs labelled particles {oracle} at r={r}", counter.count));
        }
    }
    Ok(())
}

/// A particle jump `x -> y` is a hole jump `y -> x`, which the mirror map
/// turns into `-y -> -x`: the reflected holes carry the particle flux through
/// `r` across the mirrored position `-r`.
fn reflected_flux(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let initial = sample_initial_step(window, &setup.params, seed);
    let holes = reflect_holes(&initial).map_err(|e| e.to_string())?;
    for r in [-3.5, 0.5, 2.5] {
        let mut particles = initial.clone();
        let mut direct = FluxCounter::new(r);
        let mut stream = EventStream::new(seed, &setup.kernel, window);
        evolve_to(&mut particles, &mut stream, setup.horizon, &mut [&mut direct]);
        let mut mirrored = holes.clone();
        let mut reflected = FluxCounter::new(-r);
        let mut stream = reflect_stream(EventStream::new(seed, &setup.kernel, window));
        evolve_to(&mut mirrored, &mut stream, setup.horizon, &mut [&mut reflected]);
        // unmirrored hole flux is the negative of either count
        if reflected.count != direct.count {
            return Err(format!(
                "particle flux {} through {r} but reflected hole flux {} through {}",
                direct.count, reflected.count, -r
            ));
        }
    }
    Ok(())
}

fn window_extension(setup: &InvariantSetup, seed: u64) -> Outcome {
    let small = small_window(setup);
    let large = Window::symmetric(2 * setup.half_width);
    let run = |window: Window| {
        let mut config = sample_initial_step(window, &setup.params, seed);
        let mut cone = LightCone::new(window, setup.kernel.reach());
        let mut stream = EventStream::new(seed, &setup.kernel, window);
        evolve_to(&mut config, &mut stream, setup.horizon / 4.0, &mut [&mut cone]);
        (config, cone)
    };
    let (a, cone) = run(small);
    let (b, _) = run(large);
    let Some((from, to)) = cone.clean_region() else {
        return Ok(());
    };
    match (from..=to).find(|&x| a.get(x) != b.get(x)) {
        Some(x) => Err(format!("certified site {x} differs after enlarging the window")),
        None => Ok(()),
    }
}

fn shift_replay(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let s = setup.horizon / 2.0;
    let mut direct = sample_initial_step(window, &setup.params, seed);
    evolve_to(
        &mut direct,
        &mut EventStream::new(seed, &setup.kernel, window),
        setup.horizon,
        &mut [],
    );
    let mut split = sample_initial_step(window, &setup.params, seed);
    let first = EventStream::new(seed, &setup.kernel, window);
    let mut head = first.shifted(0.0);
    evolve_to(&mut split, &mut head, s, &mut []);
    let mut tail = first.shifted(s);
    evolve_to(&mut split, &mut tail, setup.horizon, &mut []);
    match first_mismatch(&direct, &split) {
        Some(x) => Err(format!("replay through time {s} differs at site {x}")),
        None => Ok(()),
    }
}

fn reclass_structure(setup: &InvariantSetup, seed: u64) -> Outcome {
    let window = small_window(setup);
    let pair = sample_coupled_pair(window, &setup.params, seed);
    let (sigma, theta) = (pair.level(1), pair.level(2));
    let second = merge_t(sigma, theta).map_err(|e| e.to_string())?;
    let mut base = NestedFamily::new(vec![sigma.clone(), second.clone(), second, theta.clone()])
        .map_err(|e| e.to_string())?;
    let mut stream = EventStream::new(seed, &setup.kernel, window);
    evolve_nested(&mut base, &mut stream, setup.horizon / 2.0, &mut |_| {});
    let xi = base.class(2);
    let zeta = base.class(4);
    let both = xi.plus(&zeta).map_err(|e| e.to_string())?;
    for m in [-5, 0, 3, 11] {
        let split = reclass_at(&base, m).map_err(|e| e.to_string())?;
        let expected = [
            truncate_left(&both, m),
            truncate_right(&xi, m),
            truncate_right(&zeta, m),
        ];
        if split.top() != base.top() || split.level(1) != base.level(1) {
            return Err(format!("re-splitting at {m} changed the outer levels"));
        }
        for (j, want) in (2..=4).zip(&expected) {
            if let Some(x) = first_mismatch(&split.class(j), want) {
                return Err(format!("re-split at {m}: class {j} wrong at site {x}"));
            }
        }
    }
    Ok(())
}

fn subadditivity(setup: &InvariantSetup, seed: u64) -> (Outcome, Outcome) {
    let horizon = setup.n_max as f64 / setup.u;
    // the support front and the boundary contamination approach each other
    let buffer = 2 * default_buffer(&setup.kernel, horizon);
    let window = match Window::new(-buffer, setup.n_max as i64 + buffer) {
        Ok(w) => w,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let record = burn_in_coupled(&setup.params, &setup.kernel, window, window.len() as f64, seed)
        .and_then(|pair| subadditive_array(&setup.kernel, setup.u, setup.n_max, seed, &pair));
    let record = match record {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let sub = match record.subadditivity_violation() {
        Some((m, n)) => Err(format!(
            "X_0,{n} = {} > X_0,{m} + X_{m},{n} = {} + {}",
            record.get(0, n),
            record.get(0, m),
            record.get(m, n)
        )),
        None => Ok(()),
    };
    let crossing = if record.get(0, 1) <= record.origin_crossings() {
        Ok(())
    } else {
        Err(format!(
            "X_0,1 = {} exceeds {} crossing rings",
            record.get(0, 1),
            record.origin_crossings()
        ))
    };
    (sub, crossing)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_a_few_seeds() {
        let setup = InvariantSetup::new(
            "2:0.4,1:0.2,-1:0.4".parse().unwrap(),
            StepProfileParams::new(0.8, 0.3).unwrap(),
        );
        for summary in run_suite(&setup, &[1, 2, 3]) {
            assert!(summary.all_passed(), "{summary:?}");
        }
    }

    #[test]
    fn labelled_flux_counts_a_single_jump() {
        let w = Window::new(-3, 3).unwrap();
        let kernel: JumpKernel = "1:1".parse().unwrap();
        let initial = Configuration::from_sites(w, [0]).unwrap();
        let mut config = initial.clone();
        let mut counter = FluxCounter::new(0.0);
        let mut stream = EventStream::new(4, &kernel, w);
        evolve_to(&mut config, &mut stream, 3.0, &mut [&mut counter]);
        assert_eq!(counter.count, labelled_flux(&initial, &kernel, 4, 3.0, 0));
    }
}
