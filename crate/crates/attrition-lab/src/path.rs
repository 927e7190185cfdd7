//! Piecewise reputation paths for two players.
//!
//! A player with ultimatum opportunities runs one of two Bernoulli
//! flows: quiet `(lambda - gamma, gamma)` or challenging
//! `(lambda - gamma, gamma/nu)`. It challenges exactly while the
//! opponent's reputation is below its threshold, so the path is a chain
//! of closed-form segments joined at threshold crossings. Paths can be
//! traced forward or backward in time; backward tracing runs the
//! reversed flows.

use crate::bernoulli::{BernoulliDynamics, BernoulliError};

/// Two crossings closer than this are handled as one event.
pub const EVENT_TIE_EPS: f64 = 1e-12;

/// Distance to a flow's fixed point under which a reputation is held
/// constant instead of integrated.
pub const PIN_EPS: f64 = 1e-10;

const MAX_SEGMENTS: usize = 16;

/// Rates and court terms of one player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Side {
    pub a: f64,
    pub z: f64,
    pub r: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Posterior on this player as a challenger that leaves the defender
    /// indifferent.
    pub nu_star: f64,
    /// Challenge cost (fraction of D).
    pub c: f64,
    /// Seeing cost (fraction of D).
    pub k: f64,
    /// Court win probability as an unjustified challenger.
    pub w: f64,
}

impl Side {
    pub fn can_challenge(&self) -> bool {
        self.gamma > 0.0
    }

    /// This player challenges while the opponent's reputation is below this.
    pub fn opponent_threshold(&self) -> f64 {
        1.0 - self.c
    }

    pub fn flow(&self, challenging: bool) -> BernoulliDynamics {
        let drift = self.lambda - self.gamma;
        if challenging {
            BernoulliDynamics::new(drift, self.gamma / self.nu_star)
        } else {
            BernoulliDynamics::new(drift, self.gamma)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    /// Path parameter at which the segment starts.
    pub start: f64,
    pub mu: [f64; 2],
    pub challenging: [bool; 2],
    pub pinned: [bool; 2],
}

/// A traced path: reputations as a function of a nonnegative parameter.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Trace {
    pub segments: Vec<Segment>,
    pub backward: bool,
    sides: [Side; 2],
}

impl Trace {
    fn flow(&self, player: usize, challenging: bool) -> BernoulliDynamics {
        let f = self.sides[player].flow(challenging);
        if self.backward {
            f.reversed()
        } else {
            f
        }
    }

    fn make_segment(&self, start: f64, mu: [f64; 2], challenging: [bool; 2]) -> Segment {
        let mut pinned = [false; 2];
        for i in 0..2 {
            if challenging[i] {
                if let Some(p) = self.sides[i].flow(true).fixed_point() {
                    pinned[i] = (mu[i] - p).abs() <= PIN_EPS;
                }
            }
        }
        Segment {
            start,
            mu,
            challenging,
            pinned,
        }
    }

    /// Traces from `mu` with the given initial modes, toggling a player's
    /// mode whenever the opponent's reputation crosses its threshold.
    pub fn build(
        sides: [Side; 2],
        mu: [f64; 2],
        challenging: [bool; 2],
        backward: bool,
    ) -> Result<Trace, BernoulliError> {
        let mut trace = Trace {
            segments: Vec::new(),
            backward,
            sides,
        };
        let first = trace.make_segment(0.0, mu, challenging);
        trace.segments.push(first);
        while trace.segments.len() < MAX_SEGMENTS {
            let seg = *trace.segments.last().unwrap();
            let mut events: Vec<(f64, usize)> = Vec::new();
            for i in 0..2 {
                if !sides[i].can_challenge() {
                    continue;
                }
                let j = 1 - i;
                let threshold = sides[i].opponent_threshold();
                if seg.pinned[j] || seg.mu[j] == threshold {
                    continue;
                }
                if let Ok(t) = trace.flow(j, seg.challenging[j]).hitting_time(seg.mu[j], threshold) {
                    if t > 0.0 {
                        events.push((t, i));
                    }
                }
            }
            let Some(&(first_t, _)) = events.iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            else {
                break;
            };
            let mut next_mu = [0.0; 2];
            for i in 0..2 {
                next_mu[i] = if seg.pinned[i] {
                    seg.mu[i]
                } else {
                    trace.flow(i, seg.challenging[i]).evolve(seg.mu[i], first_t)?
                };
            }
            let mut modes = seg.challenging;
            // Simultaneous crossings are applied together, lower index first.
            let mut toggled: Vec<usize> = events
                .iter()
                .filter(|(t, _)| *t - first_t <= EVENT_TIE_EPS * first_t.max(1.0))
                .map(|(_, i)| *i)
                .collect();
            toggled.sort_unstable();
            for i in toggled {
                let j = 1 - i;
                let threshold = sides[i].opponent_threshold();
                let heading_down = seg.mu[j] > threshold;
                next_mu[j] = threshold;
                modes[i] = heading_down;
            }
            let next = trace.make_segment(seg.start + first_t, next_mu, modes);
            trace.segments.push(next);
        }
        Ok(trace)
    }

    fn segment_index(&self, s: f64) -> usize {
        match self
            .segments
            .iter()
            .rposition(|seg| seg.start <= s)
        {
            Some(k) => k,
            None => 0,
        }
    }

    pub fn segment_at(&self, s: f64) -> &Segment {
        &self.segments[self.segment_index(s)]
    }

    /// Reputation of `player` at path parameter `s >= 0`.
    pub fn mu(&self, player: usize, s: f64) -> f64 {
        let seg = self.segment_at(s);
        if seg.pinned[player] {
            return seg.mu[player];
        }
        self.flow(player, seg.challenging[player])
            .evolve_unchecked(seg.mu[player], s - seg.start)
    }

    /// Smallest parameter at which `player`'s reputation equals `target`.
    pub fn time_to(&self, player: usize, target: f64) -> Option<f64> {
        for (k, seg) in self.segments.iter().enumerate() {
            let from = seg.mu[player];
            if from == target {
                return Some(seg.start);
            }
            if seg.pinned[player] {
                continue;
            }
            let flow = self.flow(player, seg.challenging[player]);
            match self.segments.get(k + 1) {
                Some(next) => {
                    let to = next.mu[player];
                    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
                    if target >= lo && target <= hi {
                        let t = flow.hitting_time(from, target).unwrap_or(next.start - seg.start);
                        return Some(seg.start + t.min(next.start - seg.start));
                    }
                }
                None => return flow.hitting_time(from, target).ok().map(|t| seg.start + t),
            }
        }
        None
    }

    /// Parameter at which `player` first enters the challenging mode.
    #[cfg(test)]
    pub fn first_challenge(&self, player: usize) -> Option<f64> {
        self.segments
            .iter()
            .find(|seg| seg.challenging[player])
            .map(|seg| seg.start)
    }
}
