//! Quantities measured along trajectories.

use crate::coupling::{merge_t, reclass_at, NestedFamily};
use crate::engine::{
    count_interval, evolve_to, Configuration, Event, EventSource, EventStream, JumpOutcome,
    LightCone, Observer, RightwardFront,
};
use crate::error::{Error, Result};
use crate::kernel_profile::{characteristic_speeds, integrated_profile, JumpKernel, StepProfileParams};

/// Net number of particles that crossed the real position `r` rightward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCounter {
    pub boundary: f64,
    pub count: i64,
}

impl FluxCounter {
    pub fn new(boundary: f64) -> Self {
        Self { boundary, count: 0 }
    }

    /// Updates for one event, judged against the configuration it acts on.
    pub fn observe(&mut self, event: &Event, before: &Configuration) {
        let outcome = crate::engine::peek_outcome(before, event);
        self.record(event, outcome);
    }

    #[inline]
    fn record(&mut self, event: &Event, outcome: JumpOutcome) {
        if !outcome.applied() {
            return;
        }
        let (from, to) = (event.site as f64, event.target() as f64);
        if from <= self.boundary && self.boundary < to {
            self.count += 1;
        } else if to <= self.boundary && self.boundary < from {
            self.count -= 1;
        }
    }
}

impl Observer for FluxCounter {
    fn on_event(&mut self, event: &Event, outcome: JumpOutcome, _before: &Configuration) {
        self.record(event, outcome);
    }
}

/// Counts clock rings whose jump crosses the bond `(r, r+1)`, whether or
/// not the jump happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingCounter {
    pub bond: i64,
    pub count: u64,
}

impl CrossingCounter {
    pub fn new(bond: i64) -> Self {
        Self { bond, count: 0 }
    }

    #[inline]
    pub fn observe(&mut self, event: &Event) {
        if event.crosses_bond(self.bond) {
            self.count += 1;
        }
    }
}

impl Observer for CrossingCounter {
    fn on_event(&mut self, event: &Event, _outcome: JumpOutcome, _before: &Configuration) {
        self.observe(event);
    }
}

/// Both sides of the flux balance `J_t = Σ_{x>r} (η_t(x) - η_0(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluxCheck {
    pub flux: i64,
    pub mass_change: i64,
}

impl FluxCheck {
    pub fn holds(&self) -> bool {
        self.flux == self.mass_change
    }
}

/// Evolves `initial` to time `t` while counting the flux through `r`, then
/// compares it with the change of mass to the right of `r`.
pub fn flux_identity_check<S: EventSource + ?Sized>(
    initial: &Configuration,
    stream: &mut S,
    t: f64,
    r: f64,
) -> FluxCheck {
    let mut config = initial.clone();
    let mut counter = FluxCounter::new(r);
    evolve_to(&mut config, stream, t, &mut [&mut counter]);
    FluxCheck {
        flux: counter.count,
        mass_change: mass_right_of(&config, r) - mass_right_of(initial, r),
    }
}

fn mass_right_of(config: &Configuration, r: f64) -> i64 {
    let first = (r.floor() as i64).saturating_add(1);
    config.count_sites(first, config.window().hi()) as i64
}

/// One trajectory's array `X_{m,n}`, `0 ≤ m ≤ n ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubadditiveRecord {
    u: f64,
    n_max: usize,
    // rows[m][n - m] = X_{m,n}
    rows: Vec<Vec<u64>>,
    origin_crossings: u64,
}

impl SubadditiveRecord {
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, m: usize, n: usize) -> u64 {
        assert!(m <= n && n <= self.n_max, "X_{{{m},{n}}} not recorded");
        self.rows[m][n - m]
    }

    /// Clock rings crossing the bond `(0, 1)` during `[0, 1/u]`.
    pub fn origin_crossings(&self) -> u64 {
        self.origin_crossings
    }

    /// First `(m, n)` with `X_{0,n} > X_{0,m} + X_{m,n}`, if any.
    pub fn subadditivity_violation(&self) -> Option<(usize, usize)> {
        for n in 0..=self.n_max {
            for m in 0..=n {
                if self.get(0, n) > self.get(0, m) + self.get(m, n) {
                    return Some((m, n));
                }
            }
        }
        None
    }
}

/// Builds the array `X_{m,n} = Σ_{y>n} ξ^m_{n/u}(y)` along one trajectory.
///
/// `initial` is the coupled pair `(σ, θ)`. The four-class process starts
/// from `(σ, ξ = T_0(θ-σ), γ ≡ 0, ζ = θ-σ-ξ)`; at each time `m/u` a copy
/// re-split at site `m` is spawned and evolved with the same clocks. Every
/// recorded entry is certified against the infinite lattice by light
/// cones; otherwise the window is reported inadequate.
pub fn subadditive_array(
    kernel: &JumpKernel,
    u: f64,
    n_max: usize,
    seed: u64,
    initial: &NestedFamily,
) -> Result<SubadditiveRecord> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidArgument(format!("speed u must be positive, got {u}")));
    }
    if initial.arity() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected the coupled pair (σ, θ), got {} levels",
            initial.arity()
        )));
    }
    let window = initial.window();
    let (sigma, theta) = (initial.level(1), initial.level(2));
    let second = merge_t(sigma, theta)?;
    let base = NestedFamily::new(vec![sigma.clone(), second.clone(), second, theta.clone()])?;

    let mut families = vec![base];
    let mut stream = EventStream::new(seed, kernel, window);
    let mut cone = LightCone::new(window, kernel.reach());
    // every ξ^m particle sits at or left of this front
    let mut support = RightwardFront::new(0);
    let mut crossings = CrossingCounter::new(0);
    let mut rows: Vec<Vec<u64>> = (0..=n_max).map(|m| vec![0; n_max - m + 1]).collect();

    for n in 1..=n_max {
        let t_n = n as f64 / u;
        while let Some(event) = stream.next_until(t_n) {
            cone.observe(&event);
            support.observe(&event);
            if n == 1 {
                crossings.observe(&event);
            }
            for family in families.iter_mut() {
                family.apply(&event);
            }
        }
        let edge = support.position();
        if edge > n as i64 && !cone.is_clean_sites(n as i64 + 1, edge) {
            return Err(Error::BufferInadequate(format!(
                "second-class region ({n}, {edge}] at time {t_n} is not certified in window {window}"
            )));
        }
        let hi = window.hi();
        for (m, family) in families.iter().enumerate() {
            let first = n as i64 + 1;
            let count = family.level(2).count_sites(first, hi) - family.level(1).count_sites(first, hi);
            rows[m][n - m] = count as u64;
        }
        if n < n_max {
            families.push(reclass_at(&families[0], n as i64)?);
            support.extend_to(n as i64);
        }
    }

    Ok(SubadditiveRecord {
        u,
        n_max,
        rows,
        origin_crossings: crossings.count,
    })
}

/// `X_{0,n}/n` at `n = n_max`, with the least-squares slope of `X_{0,n}/n`
/// over the last half of `n` as a convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XInfinityEstimate {
    pub value: f64,
    pub slope: f64,
}

pub fn estimate_x_infinity(record: &SubadditiveRecord) -> Result<XInfinityEstimate> {
    let n_max = record.n_max();
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("need n_max ≥ 2, got {n_max}")));
    }
    let value = record.get(0, n_max) as f64 / n_max as f64;
    let points: Vec<(f64, f64)> = (n_max.div_ceil(2).max(1)..=n_max)
        .map(|n| (n as f64, record.get(0, n) as f64 / n as f64))
        .collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(XInfinityEstimate { value, slope })
}

/// `X(u) = lim (1/t) Σ_{x≥ut} ξ_t(x) = ∫_u^∞ (f(s) - ρ) ds` for `u ≥ 0`.
pub fn predicted_second_class_mass(
    u: f64,
    kernel: &JumpKernel,
    params: &StepProfileParams,
) -> Result<f64> {
    let (_, right) = characteristic_speeds(kernel, params);
    let far = u.max(right) + 1.0;
    Ok(integrated_profile(u, far, kernel, params)? - params.rho() * (far - u))
}

/// `G(u, v) = ρ(v - u) + X(u) - X(v)`, where `X(s) = s · X_∞(s)` since the
/// array is indexed by `n = s t`.
pub fn combine_subadditive_limits(
    u: f64,
    v: f64,
    x_inf_u: f64,
    x_inf_v: f64,
    params: &StepProfileParams,
) -> f64 {
    params.rho() * (v - u) + u * x_inf_u - v * x_inf_v
}

/// `(1/t) Σ_{ut ≤ x ≤ vt} η_t(x)`. With a light cone, the interval must be
/// certified.
pub fn empirical_density(
    config: &Configuration,
    u: f64,
    v: f64,
    t: f64,
    cone: Option<&LightCone>,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let (a, b) = (u * t, v * t);
    if let Some(cone) = cone {
        if !cone.is_clean(a, b) {
            return Err(Error::BufferInadequate(format!(
                "interval [{a}, {b}] not certified; clean region {:?}",
                cone.clean_region()
            )));
        }
    }
    Ok(count_interval(config, a, b)? as f64 / t)
}

/// Empirical density minus `∫_u^v f`.
pub fn lln_error(
    config: &Configuration,
    u: f64,
    v: f64,
    t: f64,
    kernel: &JumpKernel,
    params: &StepProfileParams,
    cone: Option<&LightCone>,
) -> Result<f64> {
    Ok(empirical_density(config, u, v, t, cone)? - integrated_profile(u, v, kernel, params)?)
}

/// Outcome of testing replicas against the Bernoulli product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub sites: usize,
    pub replicas: usize,
    pub density: f64,
    /// Pooled occupation frequency.
    pub mean: f64,
    pub mean_z: f64,
    /// Largest per-site deviation in binomial standard units.
    pub max_site_z: f64,
    /// Average of `(η(x) - ρ)(η(x+1) - ρ)` over adjacent pairs.
    pub covariance: f64,
    pub covariance_z: f64,
    pub passed: bool,
}

pub const SIGMA_BAND: f64 = 3.0;

/// Checks replicas on sites `[from, to]` against density `density`: pooled
/// mean within the 3σ binomial band, and the adjacent-pair covariance within
/// 3σ of its null spread.
pub fn bernoulli_marginal_test(
    configs: &[Configuration],
    from: i64,
    to: i64,
    density: f64,
) -> Result<MarginalReport> {
    if configs.is_empty() || from > to {
        return Err(Error::InvalidArgument("need replicas and a non-empty region".into()));
    }
    for c in configs {
        if !c.window().contains(from) || !c.window().contains(to) {
            return Err(Error::InvalidArgument(format!(
                "region [{from}, {to}] outside window {}",
                c.window()
            )));
        }
    }
    let sites = (to - from + 1) as usize;
    let replicas = configs.len();
    let var = density * (1.0 - density);

    let mut site_hits = vec![0usize; sites];
    let mut cov_sum = 0.0;
    for c in configs {
        for (i, x) in (from..=to).enumerate() {
            if c.get(x) {
                site_hits[i] += 1;
            }
            if x < to {
                let a = f64::from(u8::from(c.get(x))) - density;
                let b = f64::from(u8::from(c.get(x + 1))) - density;
                cov_sum += a * b;
            }
        }
    }
    let total: usize = site_hits.iter().sum();
    let n = (sites * replicas) as f64;
    let pairs = ((sites - 1) * replicas) as f64;
    let mean = total as f64 / n;
    let covariance = if pairs > 0.0 { cov_sum / pairs } else { 0.0 };

    let z = |dev: f64, sd: f64| {
        if sd > 0.0 {
            dev / sd
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mean_z = z(mean - density, (var / n).sqrt());
    let covariance_z = if pairs > 0.0 {
        z(covariance, var / pairs.sqrt())
    } else {
        0.0
    };
    let site_sd = (var / replicas as f64).sqrt();
    let max_site_z = site_hits
        .iter()
        .map(|&h| z(h as f64 / replicas as f64 - density, site_sd).abs())
        .fold(0.0, f64::max);
    let passed = mean_z.abs() <= SIGMA_BAND && covariance_z.abs() <= SIGMA_BAND;

    Ok(MarginalReport {
        sites,
        replicas,
        density,
        mean,
        mean_z,
        max_site_z,
        covariance,
        covariance_z,
        passed,
    })
}
