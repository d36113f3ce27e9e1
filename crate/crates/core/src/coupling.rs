//! Several configurations driven by one set of clocks.
//!
//! A [`NestedFamily`] holds levels `c_1 ≤ c_2 ≤ … ≤ c_K`; the class-`j`
//! particles are `c_j - c_{j-1}`. Every level sees the same events, and the
//! exclusion rule keeps the ordering (attractiveness), so lower classes never
//! notice higher ones while a higher-class particle is swapped backwards when
//! a lower-class particle jumps onto it.

use std::io::Write;

use crate::engine::rng::{derive_seed, initial_uniform, keyed_uniform, purpose};
use crate::engine::{
    apply_event_with, Boundary, Configuration, Event, EventSource, EventStream, Window,
};
use crate::error::{Error, Result};
use crate::kernel_profile::{JumpKernel, StepProfileParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedFamily {
    levels: Vec<Configuration>,
}

impl NestedFamily {
    pub fn new(levels: Vec<Configuration>) -> Result<Self> {
        let first = levels
            .first()
            .ok_or_else(|| Error::InvalidArgument("a family needs at least one level".into()))?;
        let window = first.window();
        if levels.iter().any(|c| c.window() != window) {
            return Err(Error::WindowMismatch);
        }
        for (j, pair) in levels.windows(2).enumerate() {
            if let Some(site) = pair[0].first_excess_over(&pair[1]) {
                return Err(Error::NestingViolated {
                    level: j + 1,
                    next: j + 2,
                    site,
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn window(&self) -> Window {
        self.levels[0].window()
    }

    pub fn arity(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Configuration] {
        &self.levels
    }

    /// Level `j`, counted from 1.
    pub fn level(&self, j: usize) -> &Configuration {
        &self.levels[j - 1]
    }

    pub fn top(&self) -> &Configuration {
        &self.levels[self.levels.len() - 1]
    }

    pub fn into_levels(self) -> Vec<Configuration> {
        self.levels
    }

    /// Class-`j` occupancy `c_j - c_{j-1}`, with `c_0 ≡ 0`.
    pub fn class(&self, j: usize) -> Configuration {
        if j == 1 {
            self.levels[0].clone()
        } else {
            self.levels[j - 1]
                .minus(&self.levels[j - 2])
                .expect("levels are nested")
        }
    }

    #[inline]
    pub fn apply_with(&mut self, event: &Event, boundary: Boundary) {
        for level in &mut self.levels {
            apply_event_with(level, event, boundary);
        }
    }

    #[inline]
    pub fn apply(&mut self, event: &Event) {
        self.apply_with(event, Boundary::Closed);
    }
}

/// Evolves every level with the same events up to time `t`; `on_event` sees
/// each event before it is applied. Returns the number of events.
pub fn evolve_nested<S: EventSource + ?Sized>(
    family: &mut NestedFamily,
    stream: &mut S,
    t: f64,
    on_event: &mut dyn FnMut(&Event),
) -> u64 {
    evolve_nested_with(family, stream, t, Boundary::Closed, on_event)
}

pub fn evolve_nested_with<S: EventSource + ?Sized>(
    family: &mut NestedFamily,
    stream: &mut S,
    t: f64,
    boundary: Boundary,
    on_event: &mut dyn FnMut(&Event),
) -> u64 {
    let mut n = 0;
    while let Some(event) = stream.next_until(t) {
        on_event(&event);
        family.apply_with(&event, boundary);
        n += 1;
    }
    n
}

/// Per-site class labels: 0 for empty, `j` where `c_j = 1` and `c_{j-1} = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassView {
    window: Window,
    labels: Vec<u8>,
}

pub fn class_view(family: &NestedFamily) -> ClassView {
    let window = family.window();
    let labels = window
        .sites()
        .map(|x| {
            family
                .levels
                .iter()
                .position(|c| c.get(x))
                .map_or(0, |j| (j + 1) as u8)
        })
        .collect();
    ClassView { window, labels }
}

impl ClassView {
    pub fn label(&self, x: i64) -> u8 {
        if self.window.contains(x) {
            self.labels[(x - self.window.lo()) as usize]
        } else {
            0
        }
    }

    /// Number of sites carrying label `class`.
    pub fn count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    /// CSV with columns `site,class`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "site,class")?;
        for (x, l) in self.window.sites().zip(&self.labels) {
            writeln!(out, "{x},{l}")?;
        }
        Ok(())
    }
}

/// `T_m`: keeps sites `≤ m`.
pub fn truncate_left(config: &Configuration, m: i64) -> Configuration {
    Configuration::from_fn(config.window(), |x| x <= m && config.get(x))
}

/// `V_m`: keeps sites `> m`.
pub fn truncate_right(config: &Configuration, m: i64) -> Configuration {
    Configuration::from_fn(config.window(), |x| x > m && config.get(x))
}

/// `T(σ, θ) = σ + T_0(θ - σ)`: θ at sites `≤ 0`, σ at sites `> 0`.
pub fn merge_t(sigma: &Configuration, theta: &Configuration) -> Result<Configuration> {
    if sigma.window() != theta.window() {
        return Err(Error::WindowMismatch);
    }
    if let Some(site) = sigma.first_excess_over(theta) {
        return Err(Error::NestingViolated {
            level: 1,
            next: 2,
            site,
        });
    }
    Ok(Configuration::from_fn(sigma.window(), |x| {
        if x <= 0 {
            theta.get(x)
        } else {
            sigma.get(x)
        }
    }))
}

/// Reflected hole configuration `x -> 1 - η(-x)`.
pub fn reflect_holes(config: &Configuration) -> Result<Configuration> {
    let w = config.window();
    if !w.is_symmetric() {
        return Err(Error::InvalidArgument(format!(
            "hole reflection needs a window symmetric about 0, got {w}"
        )));
    }
    Ok(Configuration::from_fn(w, |x| !config.get(-x)))
}

/// Re-splits the four-class family `(σ, σ+ξ, σ+ξ+γ, σ+ξ+γ+ζ)` at site `m`:
///
/// `σ' = σ`, `ξ' = T_m(ξ + ζ)`, `γ' = V_m(ξ)`, `ζ' = V_m(ζ)`.
///
/// The third class must be empty, as it is when the family was started with
/// `γ ≡ 0`; the top level is then left untouched.
pub fn reclass_at(family: &NestedFamily, m: i64) -> Result<NestedFamily> {
    if family.arity() != 4 {
        return Err(Error::InvalidArgument(format!(
            "re-splitting needs four levels, got {}",
            family.arity()
        )));
    }
    if family.level(3) != family.level(2) {
        return Err(Error::InvalidArgument(
            "third class must be empty before re-splitting".into(),
        ));
    }
    let w = family.window();
    let [sigma, second, _, top] = [family.level(1), family.level(2), family.level(3), family.level(4)];
    // second class ξ lives in (second - sigma), fourth class ζ in (top - second)
    let level2 = Configuration::from_fn(w, |x| {
        if x <= m {
            top.get(x)
        } else {
            sigma.get(x)
        }
    });
    let level3 = Configuration::from_fn(w, |x| {
        if x <= m {
            top.get(x)
        } else {
            second.get(x)
        }
    });
    NestedFamily::new(vec![sigma.clone(), level2, level3, top.clone()])
}

/// The shared-uniform pair `(σ, θ)` with `σ(x) = 1{U_x ≤ ρ}`, `θ(x) = 1{U_x ≤ λ}`.
pub fn sample_coupled_pair(window: Window, params: &StepProfileParams, seed: u64) -> NestedFamily {
    let (mut sigma, mut theta) = (Configuration::empty(window), Configuration::empty(window));
    for x in window.sites() {
        let u = initial_uniform(seed, x);
        sigma.set(x, u <= params.rho());
        theta.set(x, u <= params.lambda());
    }
    NestedFamily::new(vec![sigma, theta]).expect("rho ≤ lambda nests the pair")
}

/// Default burn-in length for a window: ten sweeps of its length.
pub fn default_burn_in(window: Window) -> f64 {
    10.0 * window.len() as f64
}

/// Burn-in horizon drawn uniformly from `[t_burn, 2 t_burn]`.
pub fn burn_in_time(t_burn: f64, seed: u64) -> f64 {
    t_burn * (1.0 + keyed_uniform(seed, purpose::BURN_IN_TIME, 0))
}

/// Whether the shared-uniform pair is already stationary for the coupled
/// dynamics: equal densities, or one of the two levels frozen.
pub fn pair_is_stationary(params: &StepProfileParams) -> bool {
    params.lambda() == params.rho() || params.rho() == 0.0 || params.lambda() == 1.0
}

/// Approximate sample of the stationary coupled pair.
///
/// Starts from [`sample_coupled_pair`] and evolves the two levels on the
/// window taken periodically, so both marginals stay exactly Bernoulli, up
/// to a time drawn from `[t_burn, 2 t_burn]`. When the initial pair is
/// already stationary it is returned as is.
pub fn burn_in_coupled(
    params: &StepProfileParams,
    kernel: &JumpKernel,
    window: Window,
    t_burn: f64,
    seed: u64,
) -> Result<NestedFamily> {
    if !(t_burn >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "burn-in time must be non-negative, got {t_burn}"
        )));
    }
    let mut pair = sample_coupled_pair(window, params, seed);
    if pair_is_stationary(params) || t_burn == 0.0 {
        return Ok(pair);
    }
    let horizon = burn_in_time(t_burn, seed);
    let mut stream = EventStream::new(derive_seed(seed, purpose::BURN_IN_EVENTS, 0), kernel, window);
    evolve_nested_with(&mut pair, &mut stream, horizon, Boundary::Periodic, &mut |_| {});
    Ok(pair)
}
