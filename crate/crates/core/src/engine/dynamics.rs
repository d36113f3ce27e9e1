use std::io::Write;

use super::config::Configuration;
use super::stream::{Event, EventSource};
use crate::error::Result;

/// What an event did to a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpOutcome {
    /// The particle moved to the target.
    Moved,
    /// The target was occupied.
    Blocked,
    /// No particle at the source.
    Vacant,
    /// Source or target lies outside the window (closed boundary).
    Suppressed,
}

impl JumpOutcome {
    pub fn applied(self) -> bool {
        self == JumpOutcome::Moved
    }
}

/// How a window treats jumps that leave it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Jumps leaving the window are suppressed.
    #[default]
    Closed,
    /// Sites are taken modulo the window length.
    Periodic,
}

#[inline]
fn resolve(config: &Configuration, event: &Event, boundary: Boundary) -> (JumpOutcome, i64, i64) {
    let w = config.window();
    let (mut source, mut target) = (event.site, event.target());
    match boundary {
        Boundary::Closed => {
            if !w.contains(source) || !w.contains(target) {
                return (JumpOutcome::Suppressed, source, target);
            }
        }
        Boundary::Periodic => {
            let n = w.len() as i64;
            source = w.lo() + (source - w.lo()).rem_euclid(n);
            target = w.lo() + (target - w.lo()).rem_euclid(n);
        }
    }
    let outcome = if !config.get(source) {
        JumpOutcome::Vacant
    } else if config.get(target) {
        // a zero displacement lands here too
        JumpOutcome::Blocked
    } else {
        JumpOutcome::Moved
    };
    (outcome, source, target)
}

/// Exclusion rule: the particle at the source jumps iff the target is empty.
#[inline]
pub fn apply_event(config: &mut Configuration, event: &Event) -> JumpOutcome {
    apply_event_with(config, event, Boundary::Closed)
}

#[inline]
pub fn apply_event_with(config: &mut Configuration, event: &Event, boundary: Boundary) -> JumpOutcome {
    let (outcome, source, target) = resolve(config, event, boundary);
    if outcome == JumpOutcome::Moved {
        config.set(source, false);
        config.set(target, true);
    }
    outcome
}

/// Outcome `event` would have on `config`, without applying it.
pub fn peek_outcome(config: &Configuration, event: &Event) -> JumpOutcome {
    resolve(config, event, Boundary::Closed).0
}

/// Hook called once per delivered event, before the configuration changes.
pub trait Observer {
    fn on_event(&mut self, event: &Event, outcome: JumpOutcome, before: &Configuration);
}

impl<F: FnMut(&Event, JumpOutcome, &Configuration)> Observer for F {
    fn on_event(&mut self, event: &Event, outcome: JumpOutcome, before: &Configuration) {
        self(event, outcome, before)
    }
}

/// Event tallies of one evolution call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvolveStats {
    pub events: u64,
    pub moved: u64,
    pub suppressed: u64,
}

impl std::ops::AddAssign for EvolveStats {
    fn add_assign(&mut self, rhs: Self) {
        self.events += rhs.events;
        self.moved += rhs.moved;
        self.suppressed += rhs.suppressed;
    }
}

/// Applies, in time order, every pending event of `stream` with time `≤ t`.
pub fn evolve_to<S: EventSource + ?Sized>(
    config: &mut Configuration,
    stream: &mut S,
    t: f64,
    observers: &mut [&mut dyn Observer],
) -> EvolveStats {
    evolve_to_with(config, stream, t, Boundary::Closed, observers)
}

pub fn evolve_to_with<S: EventSource + ?Sized>(
    config: &mut Configuration,
    stream: &mut S,
    t: f64,
    boundary: Boundary,
    observers: &mut [&mut dyn Observer],
) -> EvolveStats {
    let mut stats = EvolveStats::default();
    while let Some(event) = stream.next_until(t) {
        stats.events += 1;
        let outcome = if observers.is_empty() {
            apply_event_with(config, &event, boundary)
        } else {
            let (outcome, source, target) = resolve(config, &event, boundary);
            for obs in observers.iter_mut() {
                obs.on_event(&event, outcome, config);
            }
            if outcome == JumpOutcome::Moved {
                config.set(source, false);
                config.set(target, true);
            }
            outcome
        };
        match outcome {
            JumpOutcome::Moved => stats.moved += 1,
            JumpOutcome::Suppressed => stats.suppressed += 1,
            _ => {}
        }
    }
    stats
}

/// Records every delivered event; for small debugging runs.
#[derive(Debug, Default, Clone)]
pub struct EventLog {
    pub entries: Vec<(Event, bool)>,
}

impl Observer for EventLog {
    fn on_event(&mut self, event: &Event, outcome: JumpOutcome, _before: &Configuration) {
        self.entries.push((*event, outcome.applied()));
    }
}

impl EventLog {
    /// CSV with columns `time,site,displacement,applied`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,site,displacement,applied")?;
        for (e, applied) in &self.entries {
            writeln!(out, "{},{},{},{}", e.time, e.site, e.displacement, u8::from(*applied))?;
        }
        Ok(())
    }
}
