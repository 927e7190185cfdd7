//! Equilibrium profiles shared by the one-sided and two-sided games.
//!
//! A profile is a reputation path plus time-0 concession atoms. All
//! strategy objects are closed forms in the path: the survival of a
//! strategic type is `S(t) = (z/(1-z)) e^{-gamma t} (1/mu(t) - 1)`,
//! concessions arrive with density `(z/(1-z)) lambda e^{-gamma t}/mu(t)`,
//! and challenges (while challenging) with density
//! `(z/(1-z)) ((1-nu)/nu) gamma e^{-gamma t}`.
//!
//! Deviation payoffs integrate these objects by quadrature and serve as
//! the brute-force oracle for the indifference conditions.

use serde::Serialize;
use thiserror::Error;

use crate::bernoulli::BernoulliError;
use crate::path::{Side, Trace};
use crate::quadrature::{integrate_with_breaks, QuadratureFailure};

/// Relative tolerance for a prior that already lies on the curve.
pub const CURVE_TIE_EPS: f64 = 1e-12;

/// Absolute tolerance of deviation-payoff quadrature.
pub const DEVIATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("reputation path failed: {0}")]
    Path(#[from] BernoulliError),
    #[error("no player's reputation reaches its prior along the path")]
    NoTermination,
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
}

/// How the path ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Both reputations reach one at `horizon`.
    Finite { horizon: f64 },
    /// Reputations reach the challenge thresholds at `absorption` and
    /// stay there, with steady challenge hazards.
    Absorbing { absorption: f64, steady_chi: [f64; 2] },
    /// Reputations drift toward zero forever.
    Drifting,
}

/// Forward-time interval with fixed challenge modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub challenging: [bool; 2],
    /// Past the end of the path (after `T`, or absorbed).
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub sides: [Side; 2],
    /// Disputed amount `a1 + a2 - 1`.
    pub d: f64,
    pub shape: Shape,
    /// Time-0 concession probabilities of the strategic types.
    pub atoms: [f64; 2],
    /// Reputations right after the atoms.
    pub start: [f64; 2],
    pub phases: Vec<Phase>,
    trace: Trace,
    /// Forward time `t` maps to trace parameter `anchor - t` (backward
    /// traces) or `t` (forward traces).
    anchor: f64,
    terminal: [f64; 2],
    yield_scale: [f64; 2],
}

fn odds(z: f64) -> f64 {
    z / (1.0 - z)
}

/// Atom that moves a prior `z` to the posterior `target > z`.
pub fn atom_to_reach(z: f64, target: f64) -> f64 {
    1.0 - odds(z) / odds(target)
}

impl Equilibrium {
    /// Unique finite-horizon profile: trace back from `(1, 1)` and let the
    /// player that would need longer concede at time 0.
    pub fn finite(sides: [Side; 2], d: f64) -> Result<Equilibrium, EngineError> {
        let trace = Trace::build(sides, [1.0, 1.0], [false, false], true)?;
        let reach = [trace.time_to(0, sides[0].z), trace.time_to(1, sides[1].z)];
        let (horizon, loser) = match reach {
            [None, None] => return Err(EngineError::NoTermination),
            [Some(s1), None] => (s1, 1),
            [None, Some(s2)] => (s2, 0),
            [Some(s1), Some(s2)] => {
                if s1 <= s2 {
                    (s1, 1)
                } else {
                    (s2, 0)
                }
            }
        };
        let mut start = [sides[0].z, sides[1].z];
        let mut atoms = [0.0; 2];
        let on_path = trace.mu(loser, horizon);
        let z = sides[loser].z;
        if (z - on_path).abs() > CURVE_TIE_EPS * on_path {
            atoms[loser] = atom_to_reach(z, on_path).max(0.0);
            start[loser] = on_path;
        }
        let phases = backward_phases(&trace, horizon, false);
        Ok(Equilibrium {
            sides,
            d,
            shape: Shape::Finite { horizon },
            atoms,
            start,
            phases,
            trace,
            anchor: horizon,
            terminal: [1.0, 1.0],
            yield_scale: [1.0, 1.0],
        })
    }

    /// Profile that follows a backward trace from the thresholds and stays
    /// there after `absorption`.
    pub(crate) fn absorbing(
        sides: [Side; 2],
        d: f64,
        trace: Trace,
        absorption: f64,
        atoms: [f64; 2],
        start: [f64; 2],
        steady_chi: [f64; 2],
    ) -> Equilibrium {
        let terminal = trace.segments[0].mu;
        let phases = backward_phases(&trace, absorption, true);
        Equilibrium {
            sides,
            d,
            shape: Shape::Absorbing {
                absorption,
                steady_chi,
            },
            atoms,
            start,
            phases,
            trace,
            anchor: absorption,
            terminal,
            yield_scale: [1.0, 1.0],
        }
    }

    /// Profile that follows a forward trace from the post-atom point.
    pub(crate) fn drifting(sides: [Side; 2], d: f64, trace: Trace, atoms: [f64; 2]) -> Equilibrium {
        let start = trace.segments[0].mu;
        let mut phases: Vec<Phase> = Vec::new();
        for (k, seg) in trace.segments.iter().enumerate() {
            let end = trace
                .segments
                .get(k + 1)
                .map_or(f64::INFINITY, |n| n.start);
            phases.push(Phase {
                start: seg.start,
                end,
                challenging: [
                    seg.challenging[0] && sides[0].can_challenge(),
                    seg.challenging[1] && sides[1].can_challenge(),
                ],
                terminal: false,
            });
        }
        Equilibrium {
            sides,
            d,
            shape: Shape::Drifting,
            atoms,
            start,
            phases,
            trace,
            anchor: 0.0,
            terminal: [0.0, 0.0],
            yield_scale: [1.0, 1.0],
        }
    }

    /// Copy whose yield probabilities are scaled, for testing deviation
    /// audits against a profile that is not an equilibrium.
    pub fn with_yield_scale(&self, scale: [f64; 2]) -> Equilibrium {
        Equilibrium {
            yield_scale: scale,
            ..self.clone()
        }
    }

    /// Time at which the path ends (`T` or the absorption time).
    pub fn horizon(&self) -> f64 {
        match self.shape {
            Shape::Finite { horizon } => horizon,
            Shape::Absorbing { absorption, .. } => absorption,
            Shape::Drifting => f64::INFINITY,
        }
    }

    /// Last time at which `player` challenges on the path (`T_i`); 0 when
    /// it never does, infinite when it challenges forever.
    pub fn challenge_end(&self, player: usize) -> f64 {
        if let Shape::Absorbing { steady_chi, .. } = self.shape {
            if steady_chi[player] > 0.0 && self.sides[player].can_challenge() {
                return f64::INFINITY;
            }
        }
        self.phases
            .iter()
            .filter(|p| p.challenging[player])
            .map(|p| p.end)
            .fold(0.0, f64::max)
    }

    fn phase_at(&self, t: f64) -> &Phase {
        let k = self
            .phases
            .iter()
            .rposition(|p| p.start <= t)
            .unwrap_or(0);
        &self.phases[k]
    }

    /// Boundaries of all phases, for quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.phases
            .iter()
            .flat_map(|p| [p.start, p.end])
            .filter(|t| t.is_finite())
            .collect()
    }

    fn past_end(&self, t: f64) -> bool {
        !matches!(self.shape, Shape::Drifting) && t >= self.anchor
    }

    /// Posterior reputation of `player` at time `t` on the path.
    pub fn mu(&self, player: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return self.start[player];
        }
        if self.past_end(t) {
            return self.terminal[player];
        }
        match self.shape {
            Shape::Drifting => self.trace.mu(player, t),
            _ => self.trace.mu(player, self.anchor - t),
        }
    }

    fn challenging(&self, player: usize, t: f64) -> bool {
        let phase = self.phase_at(t);
        phase.challenging[player] && !phase.terminal
    }

    fn absorbed_chi(&self, player: usize, t: f64) -> Option<f64> {
        match self.shape {
            Shape::Absorbing { steady_chi, .. } if t >= self.anchor => Some(steady_chi[player]),
            _ => None,
        }
    }

    /// Probability that the strategic type of `player` has neither conceded
    /// nor challenged by time `t` (right limit at 0).
    pub fn survival(&self, player: usize, t: f64) -> f64 {
        if let Shape::Finite { horizon } = self.shape {
            if t >= horizon {
                return 0.0;
            }
        }
        let side = &self.sides[player];
        let mu = self.mu(player, t);
        odds(side.z) * (-side.gamma * t.max(0.0)).exp() * (1.0 / mu - 1.0)
    }

    /// Concession density of the strategic type at `t > 0`.
    pub fn concession_density(&self, player: usize, t: f64) -> f64 {
        if let Shape::Finite { horizon } = self.shape {
            if t >= horizon {
                return 0.0;
            }
        }
        let side = &self.sides[player];
        odds(side.z) * side.lambda * (-side.gamma * t).exp() / self.mu(player, t)
    }

    /// Challenge density of the strategic type at `t > 0`.
    pub fn challenge_density(&self, player: usize, t: f64) -> f64 {
        let side = &self.sides[player];
        if !side.can_challenge() {
            return 0.0;
        }
        if let Some(chi) = self.absorbed_chi(player, t) {
            return self.survival(player, t) * chi;
        }
        if self.challenging(player, t) {
            odds(side.z) * ((1.0 - side.nu_star) / side.nu_star) * side.gamma * (-side.gamma * t).exp()
        } else {
            0.0
        }
    }

    /// Cumulative challenge probability of the strategic type.
    pub fn challenge_cdf(&self, player: usize, t: f64) -> f64 {
        let side = &self.sides[player];
        if !side.can_challenge() || t <= 0.0 {
            return 0.0;
        }
        let g = side.gamma;
        let mut total = 0.0;
        for phase in &self.phases {
            if phase.start >= t {
                break;
            }
            let hi = phase.end.min(t);
            let decay = (-g * phase.start).exp() - (-g * hi).exp();
            if phase.terminal {
                if let Shape::Absorbing { steady_chi, .. } = self.shape {
                    let level = odds(side.z) * (1.0 / self.terminal[player] - 1.0);
                    total += level * steady_chi[player] * decay / g;
                }
            } else if phase.challenging[player] {
                total += odds(side.z) * ((1.0 - side.nu_star) / side.nu_star) * decay;
            }
        }
        total
    }

    /// Cumulative concession probability of the strategic type, including
    /// the time-0 atom.
    pub fn concession_cdf(&self, player: usize, t: f64) -> f64 {
        (1.0 - self.survival(player, t) - self.challenge_cdf(player, t)).clamp(0.0, 1.0)
    }

    /// Concession hazard `lambda/(1 - mu)` of the strategic type.
    pub fn concession_hazard(&self, player: usize, t: f64) -> f64 {
        if self.survival(player, t) == 0.0 {
            return 0.0;
        }
        self.sides[player].lambda / (1.0 - self.mu(player, t))
    }

    /// Challenge hazard of the strategic type.
    pub fn challenge_hazard(&self, player: usize, t: f64) -> f64 {
        let side = &self.sides[player];
        if !side.can_challenge() {
            return 0.0;
        }
        if let Some(chi) = self.absorbed_chi(player, t) {
            return chi;
        }
        if !self.challenging(player, t) {
            return 0.0;
        }
        let mu = self.mu(player, t);
        ((1.0 - side.nu_star) / side.nu_star) * (mu / (1.0 - mu)) * side.gamma
    }

    /// Probability that the strategic `defender` yields when challenged at
    /// time `t`. Outside the challenger's active window it is 1, including
    /// at the window's right end.
    pub fn yield_probability(&self, defender: usize, t: f64) -> f64 {
        let challenger = 1 - defender;
        let side = &self.sides[challenger];
        let scale = self.yield_scale[defender];
        if !side.can_challenge() || self.absorbed_chi(challenger, t).is_some() || !self.challenging(challenger, t)
        {
            return scale;
        }
        let mu = self.mu(defender, t);
        let q = (side.c / (1.0 - mu) - side.w) / (1.0 - side.w);
        scale * q.clamp(0.0, 1.0)
    }

    /// Equilibrium payoff of the strategic type of `player`.
    pub fn payoff(&self, player: usize) -> f64 {
        let opp = 1 - player;
        1.0 - self.sides[opp].a + (1.0 - self.sides[opp].z) * self.atoms[opp] * self.d
    }

    /// Probability that the opponent of `player` is still negotiating at `t`.
    fn opponent_active(&self, player: usize, t: f64) -> f64 {
        let j = 1 - player;
        let side = &self.sides[j];
        (1.0 - side.z) * self.survival(j, t) + side.z * (-side.gamma * t).exp()
    }

    /// Discounted payoff flow collected by `player` before `t` from the
    /// opponent's actions (concessions and challenges).
    fn flow_integrand(&self, player: usize, s: f64) -> f64 {
        let me = &self.sides[player];
        let j = 1 - player;
        let opp = &self.sides[j];
        let d = self.d;
        let disc = (-me.r * s).exp();
        let see = 1.0 - self.yield_probability(player, s);
        let mut v = (1.0 - opp.z) * me.a * self.concession_density(j, s);
        if opp.can_challenge() {
            v += opp.z * (1.0 - opp.a - see * me.k * d) * opp.gamma * (-opp.gamma * s).exp();
            v += (1.0 - opp.z)
                * (1.0 - opp.a + see * ((1.0 - opp.w) - me.k) * d)
                * self.challenge_density(j, s);
        }
        disc * v
    }

    fn cumulative_flow(&self, player: usize, grid: &[f64]) -> Result<Vec<f64>, EngineError> {
        let breaks = self.breakpoints();
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in grid {
            acc += integrate_with_breaks(|s| self.flow_integrand(player, s), prev, t, &breaks, DEVIATION_TOL)?;
            prev = t;
            out.push(acc);
        }
        Ok(out)
    }

    fn opponent_atom_value(&self, player: usize) -> f64 {
        let j = 1 - player;
        (1.0 - self.sides[j].z) * self.atoms[j] * self.sides[player].a
    }

    fn concede_from_flow(&self, player: usize, t: f64, flow: f64) -> f64 {
        let j = 1 - player;
        let opp_a = self.sides[j].a;
        if t == 0.0 {
            // Simultaneous concessions split the disputed amount equally.
            let atom = (1.0 - self.sides[j].z) * self.atoms[j];
            let split = 0.5 * (self.sides[player].a + 1.0 - opp_a);
            return atom * split + (1.0 - atom) * (1.0 - opp_a);
        }
        let disc = (-self.sides[player].r * t).exp();
        self.opponent_atom_value(player) + flow + disc * (1.0 - opp_a) * self.opponent_active(player, t)
    }

    fn challenge_from_flow(&self, player: usize, t: f64, flow: f64) -> f64 {
        let me = &self.sides[player];
        let j = 1 - player;
        let opp = &self.sides[j];
        let disc = (-me.r * t).exp();
        let q = self.yield_probability(j, t);
        let strategic_left = (1.0 - opp.z) * self.survival(j, t);
        // Concession beats challenge at the same instant, so the opponent's
        // atom is collected even at t = 0.
        self.opponent_atom_value(player)
            + flow
            + disc * strategic_left * ((1.0 - q) * me.w + q) * self.d
            + disc * self.opponent_active(player, t) * (1.0 - opp.a - me.c * self.d)
    }

    /// Payoff of `player` from conceding at `t` against the profile.
    pub fn concede_payoff(&self, player: usize, t: f64) -> Result<f64, EngineError> {
        let flow = self.cumulative_flow(player, &[t])?[0];
        Ok(self.concede_from_flow(player, t, flow))
    }

    /// Payoff of `player` from challenging at `t` (if it ever can).
    pub fn challenge_payoff(&self, player: usize, t: f64) -> Result<Option<f64>, EngineError> {
        if !self.sides[player].can_challenge() {
            return Ok(None);
        }
        let flow = self.cumulative_flow(player, &[t])?[0];
        Ok(Some(self.challenge_from_flow(player, t, flow)))
    }

    /// Concede and challenge deviation payoffs on an increasing grid.
    pub fn deviation_curve(&self, player: usize, grid: &[f64]) -> Result<Vec<DeviationPoint>, EngineError> {
        let flows = self.cumulative_flow(player, grid)?;
        Ok(grid
            .iter()
            .zip(flows)
            .map(|(&t, flow)| DeviationPoint {
                t,
                concede: self.concede_from_flow(player, t, flow),
                challenge: self
                    .sides[player]
                    .can_challenge()
                    .then(|| self.challenge_from_flow(player, t, flow)),
            })
            .collect())
    }

    /// Largest gap between the path reputation and the Bayes posterior
    /// rebuilt from numerically integrated concession and challenge
    /// densities. On a finite path the remaining strategic mass is the
    /// tail integral up to `T`, which keeps its error relative as it
    /// vanishes.
    pub fn bayes_gap(&self, player: usize, grid: &[f64]) -> Result<f64, EngineError> {
        let side = &self.sides[player];
        let breaks = self.breakpoints();
        let density = |s: f64| self.concession_density(player, s) + self.challenge_density(player, s);
        let mut remaining = vec![0.0; grid.len()];
        if let Shape::Finite { horizon } = self.shape {
            let mut tail = 0.0;
            let mut next = horizon;
            for (k, &t) in grid.iter().enumerate().rev() {
                tail += integrate_with_breaks(density, t.min(next), next, &breaks, 1e-13)?;
                next = t.min(next);
                remaining[k] = tail;
            }
        } else {
            let mut conceded = self.atoms[player];
            let mut prev = 0.0;
            for (k, &t) in grid.iter().enumerate() {
                conceded += integrate_with_breaks(|s| self.concession_density(player, s), prev, t, &breaks, 1e-12)?;
                prev = t;
                remaining[k] = (1.0 - conceded - self.challenge_cdf(player, t)).max(0.0);
            }
        }
        let mut worst: f64 = 0.0;
        for (&t, &rest) in grid.iter().zip(&remaining) {
            let justified = side.z * (-side.gamma * t).exp();
            let posterior = justified / (justified + (1.0 - side.z) * rest);
            worst = worst.max((posterior - self.mu(player, t)).abs());
        }
        Ok(worst)
    }
}

/// Deviation payoffs at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationPoint {
    pub t: f64,
    pub concede: f64,
    pub challenge: Option<f64>,
}

fn backward_phases(trace: &Trace, anchor: f64, absorbing: bool) -> Vec<Phase> {
    let mut phases = Vec::new();
    for (k, seg) in trace.segments.iter().enumerate() {
        if seg.start >= anchor {
            break;
        }
        let next = trace.segments.get(k + 1).map_or(f64::INFINITY, |n| n.start);
        let start = anchor - next.min(anchor);
        let end = anchor - seg.start;
        phases.push(Phase {
            start,
            end,
            challenging: seg.challenging,
            terminal: false,
        });
    }
    phases.reverse();
    if let Some(first) = phases.first_mut() {
        first.start = 0.0;
    }
    phases.push(Phase {
        start: anchor,
        end: f64::INFINITY,
        challenging: if absorbing { [true, true] } else { [false, false] },
        terminal: true,
    });
    phases
}

/// Time grid on `(0, end)` with geometric clustering near both ends.
pub fn audit_grid(end: f64, points: usize) -> Vec<f64> {
    let half = points / 2;
    let mut grid = Vec::with_capacity(points);
    let tiny: f64 = 1e-6;
    for k in 0..half {
        let frac = tiny * (0.5 / tiny).powf(k as f64 / half.max(1) as f64);
        grid.push(end * frac);
    }
    for k in (0..points - half).rev() {
        let frac = tiny * (0.5 / tiny).powf(k as f64 / (points - half).max(1) as f64);
        grid.push(end * (1.0 - frac));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
