use std::fmt;
use std::io::Write;

use super::rng::initial_uniform;
use crate::error::{Error, Result};
use crate::kernel_profile::StepProfileParams;

/// Inclusive site range `[lo, hi]` standing in for the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `[-half, half]`.
    pub fn symmetric(half: i64) -> Self {
        Self::new(-half.abs(), half.abs()).expect("symmetric window is ordered")
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_symmetric(&self) -> bool {
        self.lo == -self.hi
    }

    /// Image under `x -> -x`.
    pub fn mirrored(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    #[inline]
    pub(crate) fn offset(&self, x: i64) -> usize {
        debug_assert!(self.contains(x));
        (x - self.lo) as usize
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Occupation variables `η(x) ∈ {0, 1}` on a window, one bit per site.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    window: Window,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(window: Window) -> Self {
        Self {
            window,
            words: vec![0; window.len().div_ceil(64)],
        }
    }

    pub fn full(window: Window) -> Self {
        let mut config = Self::empty(window);
        for w in config.words.iter_mut() {
            *w = u64::MAX;
        }
        config.clear_tail();
        config
    }

    /// Occupies exactly the listed sites.
    pub fn from_sites(window: Window, sites: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut config = Self::empty(window);
        for x in sites {
            if !window.contains(x) {
                return Err(Error::InvalidArgument(format!(
                    "site {x} outside window {window}"
                )));
            }
            config.set(x, true);
        }
        Ok(config)
    }

    pub fn from_fn(window: Window, mut occupied: impl FnMut(i64) -> bool) -> Self {
        let mut config = Self::empty(window);
        for x in window.sites() {
            if occupied(x) {
                config.set(x, true);
            }
        }
        config
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Sites outside the window read as empty.
    #[inline]
    pub fn get(&self, x: i64) -> bool {
        if !self.window.contains(x) {
            return false;
        }
        let i = self.window.offset(x);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: i64, occupied: bool) {
        let i = self.window.offset(x);
        let mask = 1u64 << (i & 63);
        if occupied {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Occupied sites in the integer range `[from, to]`, clipped to the window.
    pub fn count_sites(&self, from: i64, to: i64) -> usize {
        let from = from.max(self.window.lo);
        let to = to.min(self.window.hi);
        if from > to {
            return 0;
        }
        let (a, b) = (self.window.offset(from), self.window.offset(to));
        let (wa, wb) = (a >> 6, b >> 6);
        let low_mask = u64::MAX << (a & 63);
        let high_mask = u64::MAX >> (63 - (b & 63));
        if wa == wb {
            return (self.words[wa] & low_mask & high_mask).count_ones() as usize;
        }
        let mut total = (self.words[wa] & low_mask).count_ones() as usize;
        total += self.words[wa + 1..wb]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        total + (self.words[wb] & high_mask).count_ones() as usize
    }

    pub fn occupied_sites(&self) -> impl Iterator<Item = i64> + '_ {
        self.window.sites().filter(move |&x| self.get(x))
    }

    /// Coordinatewise `self ≤ other`.
    pub fn is_dominated_by(&self, other: &Configuration) -> bool {
        self.window == other.window
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// First site where `self` is occupied and `other` is not.
    pub(crate) fn first_excess_over(&self, other: &Configuration) -> Option<i64> {
        self.window.sites().find(|&x| self.get(x) && !other.get(x))
    }

    /// `self - other` for `other ≤ self`.
    pub fn minus(&self, other: &Configuration) -> Result<Configuration> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        if !other.is_dominated_by(self) {
            return Err(Error::InvalidArgument(
                "subtrahend is not dominated by minuend".into(),
            ));
        }
        Ok(self.zip_words(other, |a, b| a & !b))
    }

    /// `self + other` for disjoint supports.
    pub fn plus(&self, other: &Configuration) -> Result<Configuration> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        if self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0) {
            return Err(Error::InvalidArgument(
                "sum would place two particles on one site".into(),
            ));
        }
        Ok(self.zip_words(other, |a, b| a | b))
    }

    fn zip_words(&self, other: &Configuration, op: impl Fn(u64, u64) -> u64) -> Configuration {
        Configuration {
            window: self.window,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.window.len() & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// CSV snapshot with columns `site,occupied`.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "site,occupied")?;
        for x in self.window.sites() {
            writeln!(out, "{},{}", x, u8::from(self.get(x)))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration{} ", self.window)?;
        if self.window.len() <= 128 {
            for x in self.window.sites() {
                f.write_str(if self.get(x) { "1" } else { "0" })?;
            }
            Ok(())
        } else {
            write!(f, "({} particles)", self.count())
        }
    }
}

/// Samples the step product measure: `x` is occupied iff `U_x ≤ lambda` for
/// `x ≤ 0` and `U_x ≤ rho` for `x > 0`, with `U_x` keyed by `(seed, x)`.
pub fn sample_initial_step(window: Window, params: &StepProfileParams, seed: u64) -> Configuration {
    Configuration::from_fn(window, |x| {
        let density = if x <= 0 { params.lambda() } else { params.rho() };
        initial_uniform(seed, x) <= density
    })
}

/// Number of particles on integer sites `x` with `a ≤ x ≤ b`.
pub fn count_interval(config: &Configuration, a: f64, b: f64) -> Result<usize> {
    let w = config.window();
    if !(a >= w.lo() as f64 && b <= w.hi() as f64) {
        return Err(Error::OutsideWindow {
            a,
            b,
            lo: w.lo(),
            hi: w.hi(),
        });
    }
    if a > b {
        return Ok(0);
    }
    Ok(config.count_sites(a.ceil() as i64, b.floor() as i64))
}
