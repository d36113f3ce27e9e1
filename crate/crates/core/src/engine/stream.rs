use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use super::config::Window;
use super::rng::{clock_stream, uniform_open};
use crate::kernel_profile::JumpKernel;

/// One ring of a site's Poisson clock: the particle at `site` (if any)
/// attempts to move by `displacement` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub site: i64,
    pub displacement: i64,
}

impl Event {
    #[inline]
    pub fn target(&self) -> i64 {
        self.site + self.displacement
    }

    /// Whether the jump crosses the bond between `r` and `r + 1`.
    #[inline]
    pub fn crosses_bond(&self, r: i64) -> bool {
        let (a, b) = ordered(self.site, self.target());
        a <= r && r < b
    }
}

#[inline]
pub(crate) fn ordered(x: i64, y: i64) -> (i64, i64) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// A time-ordered source of events.
pub trait EventSource {
    /// Sites whose clocks this source carries.
    fn window(&self) -> Window;

    /// Time of the next pending event.
    fn peek_time(&self) -> f64;

    /// Pops the globally earliest pending event.
    fn next_event(&mut self) -> Event;

    /// Pops the next event if it happens no later than `t`.
    fn next_until(&mut self, t: f64) -> Option<Event> {
        if self.peek_time() <= t {
            Some(self.next_event())
        } else {
            None
        }
    }
}

impl<S: EventSource + ?Sized> EventSource for &mut S {
    fn window(&self) -> Window {
        (**self).window()
    }
    fn peek_time(&self) -> f64 {
        (**self).peek_time()
    }
    fn next_event(&mut self) -> Event {
        (**self).next_event()
    }
    fn next_until(&mut self, t: f64) -> Option<Event> {
        (**self).next_until(t)
    }
}

struct SiteClock {
    rng: ChaCha8Rng,
    time: f64,
    displacement: i64,
}

impl SiteClock {
    fn new(seed: u64, site: i64, kernel: &JumpKernel) -> Self {
        let mut clock = Self {
            rng: clock_stream(seed, site),
            time: 0.0,
            displacement: 0,
        };
        clock.advance(kernel);
        clock
    }

    /// Draws the next ring: two keystream words per event, exponential
    /// waiting time first, then the displacement.
    #[inline]
    fn advance(&mut self, kernel: &JumpKernel) {
        self.time += -uniform_open(self.rng.next_u64()).ln();
        self.displacement = kernel.sample(uniform_open(self.rng.next_u64()));
    }
}

/// Rate-one Poisson clocks on every site of a window, merged in time order.
///
/// The k-th ring of site `x` depends only on `(seed, x, k)`, so the same
/// site produces the same rings whatever window it is embedded in. Ties in
/// time are broken by the smaller site.
pub struct EventStream {
    seed: u64,
    kernel: JumpKernel,
    window: Window,
    start: f64,
    clocks: Vec<SiteClock>,
    queue: BinaryHeap<Reverse<(u64, u32)>>,
}

impl EventStream {
    pub fn new(seed: u64, kernel: &JumpKernel, window: Window) -> Self {
        Self::starting_after(seed, kernel, window, 0.0)
    }

    /// The stream restricted to events with time strictly greater than `s`;
    /// times are not shifted.
    pub fn starting_after(seed: u64, kernel: &JumpKernel, window: Window, s: f64) -> Self {
        assert!(s >= 0.0, "shift must be non-negative");
        let clocks: Vec<SiteClock> = window
            .sites()
            .map(|x| {
                let mut clock = SiteClock::new(seed, x, kernel);
                while clock.time <= s {
                    clock.advance(kernel);
                }
                clock
            })
            .collect();
        let queue = clocks
            .iter()
            .enumerate()
            .map(|(i, c)| Reverse((c.time.to_bits(), i as u32)))
            .collect();
        Self {
            seed,
            kernel: kernel.clone(),
            window,
            start: s,
            clocks,
            queue,
        }
    }

    /// Fresh view of the same clocks delivering only events after `s`.
    pub fn shifted(&self, s: f64) -> Self {
        Self::starting_after(self.seed, &self.kernel, self.window, s)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    /// Lower bound (exclusive) on delivered times.
    pub fn start(&self) -> f64 {
        self.start
    }
}

impl EventSource for EventStream {
    fn window(&self) -> Window {
        self.window
    }

    #[inline]
    fn peek_time(&self) -> f64 {
        let Reverse((bits, _)) = self.queue.peek().expect("stream has at least one site");
        f64::from_bits(*bits)
    }

    #[inline]
    fn next_event(&mut self) -> Event {
        let mut top = self.queue.peek_mut().expect("stream has at least one site");
        let Reverse((_, idx)) = *top;
        let clock = &mut self.clocks[idx as usize];
        let event = Event {
            time: clock.time,
            site: self.window.lo() + i64::from(idx),
            displacement: clock.displacement,
        };
        clock.advance(&self.kernel);
        *top = Reverse((clock.time.to_bits(), idx));
        event
    }
}

/// Same as [`EventStream::shifted`].
pub fn shift_stream(stream: &EventStream, s: f64) -> EventStream {
    stream.shifted(s)
}

/// Particle-hole conjugate of a stream: each `(t, x, z)` becomes
/// `(t, -(x + z), z)`, the jump of the reflected hole that the particle
/// jump leaves behind.
pub struct ReflectedStream<S> {
    inner: S,
}

pub fn reflect_stream<S: EventSource>(stream: S) -> ReflectedStream<S> {
    ReflectedStream { inner: stream }
}

impl<S> ReflectedStream<S> {
    pub fn into_inner(self) -> S {
        self.inner
    }
}

#[inline]
pub fn reflect_event(event: &Event) -> Event {
    Event {
        time: event.time,
        site: -event.target(),
        displacement: event.displacement,
    }
}

impl<S: EventSource> EventSource for ReflectedStream<S> {
    fn window(&self) -> Window {
        self.inner.window().mirrored()
    }

    fn peek_time(&self) -> f64 {
        self.inner.peek_time()
    }

    fn next_event(&mut self) -> Event {
        reflect_event(&self.inner.next_event())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> JumpKernel {
        "2:0.3,1:0.4,-1:0.3".parse().unwrap()
    }

    fn take_until<S: EventSource>(s: &mut S, t: f64) -> Vec<Event> {
        std::iter::from_fn(|| s.next_until(t)).collect()
    }

    #[test]
    fn single_site_window_replays_its_clock() {
        let w = Window::new(4, 4).unwrap();
        let mut s = EventStream::new(11, &kernel(), w);
        let events = take_until(&mut s, 50.0);
        assert!(events.iter().all(|e| e.site == 4));
        assert!(events.windows(2).all(|p| p[0].time < p[1].time));
        let mut again = EventStream::new(11, &kernel(), w);
        assert_eq!(events, take_until(&mut again, 50.0));
    }

    #[test]
    fn events_are_globally_ordered() {
        let mut s = EventStream::new(5, &kernel(), Window::new(-30, 30).unwrap());
        let events = take_until(&mut s, 20.0);
        assert!(events.windows(2).all(|p| p[0].time <= p[1].time));
        let support: Vec<i64> = kernel().support().iter().map(|&(z, _)| z).collect();
        assert!(events.iter().all(|e| support.contains(&e.displacement)));
    }

    #[test]
    fn merged_disjoint_windows_equal_union() {
        let k = kernel();
        let left = take_until(&mut EventStream::new(3, &k, Window::new(-10, -1).unwrap()), 15.0);
        let right = take_until(&mut EventStream::new(3, &k, Window::new(0, 12).unwrap()), 15.0);
        let union = take_until(&mut EventStream::new(3, &k, Window::new(-10, 12).unwrap()), 15.0);
        let mut merged: Vec<Event> = left.into_iter().chain(right).collect();
        merged.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        assert_eq!(merged, union);
    }

    #[test]
    fn shift_drops_early_events_only() {
        let k = kernel();
        let w = Window::new(-8, 8).unwrap();
        let all = take_until(&mut EventStream::new(9, &k, w), 10.0);
        let mut shifted = EventStream::new(9, &k, w).shifted(4.0);
        let late = take_until(&mut shifted, 10.0);
        let expected: Vec<Event> = all.into_iter().filter(|e| e.time > 4.0).collect();
        assert_eq!(late, expected);
        let zero = take_until(&mut EventStream::new(9, &k, w).shifted(0.0), 10.0);
        assert_eq!(zero, take_until(&mut EventStream::new(9, &k, w), 10.0));
    }

    #[test]
    fn reflection_is_an_involution() {
        let k = kernel();
        let w = Window::symmetric(6);
        let plain = take_until(&mut EventStream::new(2, &k, w), 5.0);
        let twice = take_until(&mut reflect_stream(reflect_stream(EventStream::new(2, &k, w))), 5.0);
        assert_eq!(plain, twice);
        let e = Event { time: 1.0, site: 3, displacement: 2 };
        let r = reflect_event(&e);
        assert_eq!((r.site, r.target()), (-5, -3));
    }

    #[test]
    fn bond_crossing() {
        let e = Event { time: 0.5, site: 0, displacement: 1 };
        assert!(e.crosses_bond(0));
        assert!(!e.crosses_bond(1));
        let e = Event { time: 0.5, site: 2, displacement: -3 };
        assert!(e.crosses_bond(-1) && e.crosses_bond(0) && e.crosses_bond(1));
        assert!(!e.crosses_bond(2) && !e.crosses_bond(-2));
    }
}
