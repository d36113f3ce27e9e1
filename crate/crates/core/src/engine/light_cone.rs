use super::config::Window;
use super::dynamics::{JumpOutcome, Observer};
use super::stream::{ordered, Event};
use super::Configuration;

/// A front sweeping rightward: every site `≤ position` is reached, and any
/// event touching a reached site reaches both of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RightwardFront {
    position: i64,
}

impl RightwardFront {
    pub fn new(position: i64) -> Self {
        Self { position }
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    /// Sites up to `x` are now reached too.
    pub fn extend_to(&mut self, x: i64) {
        self.position = self.position.max(x);
    }

    #[inline]
    pub fn observe(&mut self, event: &Event) {
        let (a, b) = ordered(event.site, event.target());
        if a <= self.position && b > self.position {
            self.position = b;
        }
    }
}

/// Mirror of [`RightwardFront`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeftwardFront {
    position: i64,
}

impl LeftwardFront {
    pub fn new(position: i64) -> Self {
        Self { position }
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    #[inline]
    pub fn observe(&mut self, event: &Event) {
        let (a, b) = ordered(event.site, event.target());
        if b >= self.position && a < self.position {
            self.position = a;
        }
    }
}

/// Tracks which sites of a closed window may differ from the same sites of
/// the infinite-lattice process driven by the same clocks.
///
/// Disagreement can only enter through the `reach` outermost sites at each
/// edge (jumps into the window from outside, suppressed jumps out of it)
/// and then spreads only along events touching an already suspect site.
/// Sites strictly between the two fronts are certified exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LightCone {
    window: Window,
    left: RightwardFront,
    right: LeftwardFront,
}

impl LightCone {
    pub fn new(window: Window, reach: i64) -> Self {
        let reach = reach.max(1);
        Self {
            window,
            left: RightwardFront::new(window.lo() + reach - 1),
            right: LeftwardFront::new(window.hi() - reach + 1),
        }
    }

    #[inline]
    pub fn observe(&mut self, event: &Event) {
        self.left.observe(event);
        self.right.observe(event);
    }

    /// Certified sites, if any remain.
    pub fn clean_region(&self) -> Option<(i64, i64)> {
        let (a, b) = (self.left.position() + 1, self.right.position() - 1);
        (a <= b).then_some((a, b))
    }

    /// Whether every integer site of the real interval `[a, b]` is certified.
    pub fn is_clean(&self, a: f64, b: f64) -> bool {
        match self.clean_region() {
            Some((lo, hi)) => a.ceil() >= lo as f64 && b.floor() <= hi as f64,
            None => false,
        }
    }

    pub fn is_clean_sites(&self, from: i64, to: i64) -> bool {
        from > self.left.position() && to < self.right.position()
    }

    pub fn window(&self) -> Window {
        self.window
    }
}

impl Observer for LightCone {
    fn on_event(&mut self, event: &Event, _outcome: JumpOutcome, _before: &Configuration) {
        self.observe(event);
    }
}
