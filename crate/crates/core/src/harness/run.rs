use std::time::Instant;

use rayon::prelude::*;

use super::invariants::{run_suite, InvariantSetup};
use super::spec::{format_intervals, ExperimentKind, ExperimentSpec};
use super::table::{ResultRow, ResultTable};
use crate::coupling::{burn_in_coupled, default_burn_in};
use crate::engine::rng::{derive_seed, purpose};
use crate::engine::{evolve_to, observation_window, sample_initial_step, EventStream, LightCone, Window};
use crate::error::{Error, Result};
use crate::kernel_profile::integrated_profile;
use crate::observables::{
    bernoulli_marginal_test, combine_subadditive_limits, empirical_density, estimate_x_infinity,
    predicted_second_class_mass, subadditive_array,
};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "EXCLUSION_LAB_WORKERS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Record wall-clock time per replica in `runtime_ms`. Off by default so
    /// that output files are byte-stable.
    pub timings: bool,
}

impl RunOptions {
    pub fn from_env() -> Result<Self> {
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "{WORKERS_ENV} must be a positive integer, got `{s}`"
                    )))
                }
            },
            Err(_) => None,
        };
        Ok(Self {
            workers,
            timings: false,
        })
    }
}

/// Seed of replica `r`.
pub fn replica_seed(master: u64, r: usize) -> u64 {
    derive_seed(master, purpose::REPLICA, r as u64)
}

/// Runs all replicas of an experiment and tabulates the results.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ResultTable> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut table = pool.install(|| match spec.kind {
        ExperimentKind::Subadditive => run_subadditive(spec, options),
        ExperimentKind::Invariants => Ok(run_invariants(spec)),
        _ => run_density(spec, options),
    })?;
    table.metadata = metadata(spec);
    table.sort_rows();
    Ok(table)
}

fn metadata(spec: &ExperimentSpec) -> Vec<(String, String)> {
    let mut m = vec![
        ("kind", spec.kind.to_string()),
        ("kernel", spec.kernel.to_string()),
        ("alpha", spec.kernel.drift().to_string()),
        ("first_moment", spec.kernel.first_moment().to_string()),
        ("lambda", spec.params.lambda().to_string()),
        ("rho", spec.params.rho().to_string()),
        ("t_final", spec.t_final.to_string()),
        ("intervals", format_intervals(&spec.intervals)),
        ("replicas", spec.replicas.to_string()),
        ("seed", spec.seed.to_string()),
        ("buffer", spec.buffer().to_string()),
    ];
    if spec.kind == ExperimentKind::Subadditive {
        let t_burn = spec
            .t_burn
            .unwrap_or_else(|| default_burn_in(subadditive_window(spec)));
        m.push(("t_burn", t_burn.to_string()));
    }
    m.push(("version", env!("CARGO_PKG_VERSION").to_string()));
    m.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn elapsed_ms(start: Instant, options: RunOptions) -> u64 {
    if options.timings {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn failure_row(seed: u64, kind: &str, u: f64, v: f64, t: f64) -> ResultRow {
    ResultRow {
        seed,
        kind: format!("{kind}:buffer_failure"),
        u,
        v,
        t,
        empirical: f64::NAN,
        predicted: f64::NAN,
        error: f64::NAN,
        runtime_ms: 0,
    }
}

fn run_density(spec: &ExperimentSpec, options: RunOptions) -> Result<ResultTable> {
    let t = spec.t_final;
    let u_min = spec.intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
    let v_max = spec.intervals.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max);
    let window = observation_window(u_min, v_max, t, spec.buffer());
    let predictions: Vec<f64> = spec
        .intervals
        .iter()
        .map(|&(u, v)| integrated_profile(u, v, &spec.kernel, &spec.params))
        .collect::<Result<_>>()?;
    let kind = spec.kind.as_str();

    let replicas: Vec<_> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(spec.seed, r);
            let start = Instant::now();
            let mut config = sample_initial_step(window, &spec.params, seed);
            let mut cone = LightCone::new(window, spec.kernel.reach());
            let mut stream = EventStream::new(seed, &spec.kernel, window);
            evolve_to(&mut config, &mut stream, t, &mut [&mut cone]);
            let ms = elapsed_ms(start, options);
            let mut rows = Vec::new();
            for (&(u, v), &predicted) in spec.intervals.iter().zip(&predictions) {
                match empirical_density(&config, u, v, t, Some(&cone)) {
                    Ok(empirical) => rows.push(ResultRow {
                        seed,
                        kind: kind.to_string(),
                        u,
                        v,
                        t,
                        empirical,
                        predicted,
                        error: empirical - predicted,
                        runtime_ms: ms,
                    }),
                    Err(Error::BufferInadequate(_)) => rows.push(failure_row(seed, kind, u, v, t)),
                    Err(e) => return Err(e),
                }
            }
            Ok((rows, config, cone.clean_region()))
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new();
    let mut configs = Vec::new();
    let mut common: Option<(i64, i64)> = Some((window.lo(), window.hi()));
    for (rows, config, clean) in replicas {
        table.rows.extend(rows);
        configs.push(config);
        common = match (common, clean) {
            (Some((a, b)), Some((c, d))) if a.max(c) <= b.min(d) => Some((a.max(c), b.min(d))),
            _ => None,
        };
    }
    if spec.kind == ExperimentKind::Stationary {
        table.rows.push(bernoulli_row(spec, &configs, common)?);
    }
    Ok(table)
}

/// Pass/fail of the Bernoulli product test on the sites certified in every
/// replica; `u` and `v` hold the first and last site tested.
fn bernoulli_row(
    spec: &ExperimentSpec,
    configs: &[crate::engine::Configuration],
    region: Option<(i64, i64)>,
) -> Result<ResultRow> {
    let (empirical, (from, to)) = match region {
        Some((from, to)) => {
            let report = bernoulli_marginal_test(configs, from, to, spec.params.rho())?;
            (if report.passed { 1.0 } else { 0.0 }, (from, to))
        }
        None => (0.0, (0, -1)),
    };
    Ok(ResultRow {
        seed: spec.seed,
        kind: "stationary:bernoulli".into(),
        u: from as f64,
        v: to as f64,
        t: spec.t_final,
        empirical,
        predicted: 1.0,
        error: empirical - 1.0,
        runtime_ms: 0,
    })
}

fn speeds(spec: &ExperimentSpec) -> Vec<f64> {
    let mut s: Vec<f64> = spec.intervals.iter().flat_map(|&(u, v)| [u, v]).collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

fn subadditive_window(spec: &ExperimentSpec) -> Window {
    let top = speeds(spec).last().copied().unwrap_or(1.0);
    let b = spec.buffer();
    Window::new(-b, (top * spec.t_final).ceil() as i64 + b).expect("positive speeds")
}

/// For each replica, one array per distinct speed `s` with `n_max =
/// floor(s t_final)`; `X_∞(s)` rows and the combined `G(u, v)` rows.
fn run_subadditive(spec: &ExperimentSpec, options: RunOptions) -> Result<ResultTable> {
    let window = subadditive_window(spec);
    let t_burn = spec.t_burn.unwrap_or_else(|| default_burn_in(window));
    let speeds = speeds(spec);
    let x_pred: Vec<f64> = speeds
        .iter()
        .map(|&s| Ok(predicted_second_class_mass(s, &spec.kernel, &spec.params)? / s))
        .collect::<Result<_>>()?;
    let g_pred: Vec<f64> = spec
        .intervals
        .iter()
        .map(|&(u, v)| integrated_profile(u, v, &spec.kernel, &spec.params))
        .collect::<Result<_>>()?;

    let per_replica: Vec<Vec<ResultRow>> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(spec.seed, r);
            let start = Instant::now();
            let pair = burn_in_coupled(&spec.params, &spec.kernel, window, t_burn, seed)?;
            let mut estimates = Vec::with_capacity(speeds.len());
            for &s in &speeds {
                let n_max = (s * spec.t_final).floor() as usize;
                match subadditive_array(&spec.kernel, s, n_max, seed, &pair) {
                    Ok(record) => estimates.push(Some(estimate_x_infinity(&record)?.value)),
                    Err(Error::BufferInadequate(_)) => estimates.push(None),
                    Err(e) => return Err(e),
                }
            }
            let ms = elapsed_ms(start, options);
            let mut rows = Vec::new();
            for ((&s, est), &predicted) in speeds.iter().zip(&estimates).zip(&x_pred) {
                rows.push(match est {
                    Some(value) => ResultRow {
                        seed,
                        kind: "subadditive:x_infinity".into(),
                        u: s,
                        v: s,
                        t: spec.t_final,
                        empirical: *value,
                        predicted,
                        error: value - predicted,
                        runtime_ms: ms,
                    },
                    None => failure_row(seed, "subadditive", s, s, spec.t_final),
                });
            }
            let lookup = |x: f64| speeds.iter().position(|&s| s == x).and_then(|i| estimates[i]);
            for (&(u, v), &predicted) in spec.intervals.iter().zip(&g_pred) {
                rows.push(match (lookup(u), lookup(v)) {
                    (Some(xu), Some(xv)) => {
                        let g = combine_subadditive_limits(u, v, xu, xv, &spec.params);
                        ResultRow {
                            seed,
                            kind: "subadditive".into(),
                            u,
                            v,
                            t: spec.t_final,
                            empirical: g,
                            predicted,
                            error: g - predicted,
                            runtime_ms: ms,
                        }
                    }
                    _ => failure_row(seed, "subadditive", u, v, spec.t_final),
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new();
    table.rows = per_replica.into_iter().flatten().collect();
    Ok(table)
}

/// One row per check: the fraction of replica seeds that passed.
fn run_invariants(spec: &ExperimentSpec) -> ResultTable {
    let mut setup = InvariantSetup::new(spec.kernel.clone(), spec.params);
    setup.horizon = spec.t_final;
    let seeds: Vec<u64> = (0..spec.replicas).map(|r| replica_seed(spec.seed, r)).collect();
    let mut table = ResultTable::new();
    for summary in run_suite(&setup, &seeds) {
        let fraction = summary.passed as f64 / summary.runs as f64;
        table.rows.push(ResultRow {
            seed: spec.seed,
            kind: format!("invariants:{}", summary.name),
            u: f64::NAN,
            v: f64::NAN,
            t: spec.t_final,
            empirical: fraction,
            predicted: 1.0,
            error: fraction - 1.0,
            runtime_ms: 0,
        });
    }
    table
}
