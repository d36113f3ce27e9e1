//! Jump kernel and the closed-form hydrodynamic profile.
//!
//! Everything here is deterministic. The profile `f(u)` is the entropy
//! solution at time one of the Burgers equation with flux `alpha*r*(1-r)`
//! started from a step with density `lambda` on the left and `rho` on the
//! right, `rho <= lambda`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on the total probability mass of a kernel.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Displacement law `p(0, .)` of the underlying random walk, with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel {
    support: Vec<(i64, f64)>,
    cumulative: Vec<f64>,
    drift: f64,
    first_moment: f64,
    reach: i64,
}

impl JumpKernel {
    /// Validates raw `(displacement, probability)` pairs. Repeated
    /// displacements are merged by summing their probabilities.
    pub fn new(raw_entries: &[(i64, f64)]) -> Result<Self> {
        if raw_entries.is_empty() {
            return Err(Error::InvalidKernel("empty support".into()));
        }
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(raw_entries.len());
        for &(z, p) in raw_entries {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "probability of displacement {z} must be positive, got {p}"
                )));
            }
            match merged.iter_mut().find(|(d, _)| *d == z) {
                Some(entry) => entry.1 += p,
                None => merged.push((z, p)),
            }
        }
        merged.sort_by_key(|&(z, _)| z);

        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidKernel(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        if merged.iter().all(|&(z, _)| z == 0) {
            return Err(Error::InvalidKernel(
                "at least one nonzero displacement is required".into(),
            ));
        }
        if merged.iter().any(|&(_, p)| p > 1.0 + PROBABILITY_SUM_TOLERANCE) {
            return Err(Error::InvalidKernel("probability exceeds 1".into()));
        }

        let drift = merged.iter().map(|&(z, p)| z as f64 * p).sum();
        let first_moment = merged.iter().map(|&(z, p)| z.unsigned_abs() as f64 * p).sum();
        let reach = merged.iter().map(|&(z, _)| z.abs()).max().unwrap_or(0);
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();

        Ok(Self {
            support: merged,
            cumulative,
            drift,
            first_moment,
            reach,
        })
    }

    /// Mean displacement, `alpha`.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `M = sum |z| p(z)`, the rate at which jumps cross any fixed bond.
    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    /// Largest `|z|` in the support.
    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn support(&self) -> &[(i64, f64)] {
        &self.support
    }

    /// Inverse-CDF sampling from a uniform variate in `[0, 1)`.
    #[inline]
    pub fn sample(&self, uniform: f64) -> i64 {
        for (i, &c) in self.cumulative.iter().enumerate() {
            if uniform < c {
                return self.support[i].0;
            }
        }
        // cumulative sum can land a hair below 1
        self.support[self.support.len() - 1].0
    }

    /// The same kernel with every displacement negated.
    pub fn mirrored(&self) -> Self {
        let raw: Vec<(i64, f64)> = self.support.iter().map(|&(z, p)| (-z, p)).collect();
        Self::new(&raw).expect("mirror of a valid kernel is valid")
    }
}

/// Parses the `displacement:probability` comma list, e.g. `1:0.667,-1:0.333`.
impl FromStr for JumpKernel {
    type Err = Error;

    fn from_str(literal: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for part in literal.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (z, p) = part.split_once(':').ok_or_else(|| {
                Error::InvalidKernel(format!("expected displacement:probability, got `{part}`"))
            })?;
            let z: i64 = z
                .trim()
                .parse()
                .map_err(|_| Error::InvalidKernel(format!("bad displacement `{}`", z.trim())))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidKernel(format!("bad probability `{}`", p.trim())))?;
            raw.push((z, p));
        }
        Self::new(&raw)
    }
}

impl fmt::Display for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (z, p)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{z}:{p}")?;
        }
        Ok(())
    }
}

/// Same as [`JumpKernel::new`].
pub fn validate_kernel(raw_entries: &[(i64, f64)]) -> Result<JumpKernel> {
    JumpKernel::new(raw_entries)
}

/// Left density `lambda` and right density `rho` of the step initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepProfileParams {
    lambda: f64,
    rho: f64,
}

impl StepProfileParams {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParams(format!(
                "densities must lie in [0, 1], got lambda={lambda}, rho={rho}"
            )));
        }
        if rho > lambda {
            return Err(Error::InvalidParams(format!(
                "requires rho ≤ lambda, got rho={rho} > lambda={lambda}"
            )));
        }
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Parameters of the reflected hole system, `(1 - rho, 1 - lambda)`.
    pub fn hole_dual(&self) -> Self {
        Self {
            lambda: 1.0 - self.rho,
            rho: 1.0 - self.lambda,
        }
    }
}

/// Edges of the rarefaction fan for positive drift, or the shock speed
/// duplicated in both slots for non-positive drift.
pub fn characteristic_speeds(kernel: &JumpKernel, params: &StepProfileParams) -> (f64, f64) {
    let alpha = kernel.drift();
    if alpha > 0.0 {
        (
            alpha * (1.0 - 2.0 * params.lambda),
            alpha * (1.0 - 2.0 * params.rho),
        )
    } else {
        let s = alpha * (1.0 - params.lambda - params.rho);
        (s, s)
    }
}

/// The entropic density profile `f(u)`.
///
/// For positive drift: `lambda` strictly left of the fan, `(1 - u/alpha)/2`
/// on the closed fan, `rho` strictly right of it. For non-positive drift:
/// `lambda` strictly left of the shock, `rho` at and right of it.
pub fn burgers_profile(u: f64, kernel: &JumpKernel, params: &StepProfileParams) -> f64 {
    let alpha = kernel.drift();
    let (left, right) = characteristic_speeds(kernel, params);
    if alpha > 0.0 {
        if u < left {
            params.lambda
        } else if u <= right {
            0.5 * (1.0 - u / alpha)
        } else {
            params.rho
        }
    } else if u < left {
        params.lambda
    } else {
        params.rho
    }
}

/// Exact `∫_u^v f(s) ds`, computed branch by branch.
pub fn integrated_profile(
    u: f64,
    v: f64,
    kernel: &JumpKernel,
    params: &StepProfileParams,
) -> Result<f64> {
    if !(u < v) {
        return Err(Error::InvalidArgument(format!(
            "integration bounds require u < v, got u={u}, v={v}"
        )));
    }
    let alpha = kernel.drift();
    let (left, right) = characteristic_speeds(kernel, params);

    // length of [u, v] ∩ (-inf, left] and [u, v] ∩ [right, inf)
    let left_len = (v.min(left) - u).max(0.0);
    let right_len = (v - u.max(right)).max(0.0);
    let mut total = params.lambda * left_len + params.rho * right_len;

    if alpha > 0.0 {
        let p = u.max(left);
        let q = v.min(right);
        if q > p {
            // ∫_p^q (1 - s/alpha)/2 ds
            total += 0.5 * ((q - p) - (q - p) * (q + p) / (2.0 * alpha));
        }
    }
    Ok(total)
}
