//! Monte Carlo play of a solved profile, empirical hazards, and the
//! best-response audit.
//!
//! Each replication draws types, then each player's planned action: a
//! justified player challenges at an exponential time; a strategic player
//! acts at a time drawn from the closed-form survival function and
//! concedes or challenges in proportion to the two densities at that time.
//! The earlier plan ends the game. Replications run in fixed chunks with
//! their own ChaCha stream, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::equilibrium::{EngineError, Equilibrium, Shape};

/// Replications per random stream.
pub const CHUNK: usize = 4096;

/// Largest number of bins in a hazard series.
pub const MAX_BINS: usize = 1_000_000;

const SURVIVAL_BISECTIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("no durations to estimate from")]
    EmptyInput,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub replications: usize,
    pub seed: u64,
    /// Horizon for profiles that never end by themselves.
    pub time_cap: f64,
    /// Points on the best-response audit grid; 0 skips the audit.
    pub grid: usize,
    pub bin_width: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.replications == 0 {
            return Err(MonteCarloError::InvalidConfig("replications >= 1 violated".into()));
        }
        if !(self.time_cap.is_finite() && self.time_cap > 0.0) {
            return Err(MonteCarloError::InvalidConfig(format!("time_cap > 0 violated: {}", self.time_cap)));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(MonteCarloError::InvalidConfig(format!("bin_width > 0 violated: {}", self.bin_width)));
        }
        Ok(())
    }
}

/// How the defender answered a challenge and what the court did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Yield,
    /// Justified challenger, defender went to court.
    CourtForChallenger,
    /// Unjustified challenger against a justified defender.
    CourtForDefender,
    /// Unjustified challenger against an unjustified defender: split `w`.
    CourtSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// Player (0-based) conceded.
    Concession { player: usize },
    /// Both conceded at the same instant and split the disputed amount.
    Simultaneous,
    Challenge { challenger: usize, response: Response },
    /// Still negotiating at the time cap.
    Censored,
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Concession { player } => format!("concession_{}", player + 1),
            Outcome::Simultaneous => "simultaneous_concession".into(),
            Outcome::Challenge { challenger, response } => {
                let r = match response {
                    Response::Yield => "yield",
                    Response::CourtForChallenger => "court_for_challenger",
                    Response::CourtForDefender => "court_for_defender",
                    Response::CourtSplit => "court_split",
                };
                format!("challenge_{}_{r}", challenger + 1)
            }
            Outcome::Censored => "censored".into(),
        }
    }

    fn index(&self) -> usize {
        match *self {
            Outcome::Concession { player } => player,
            Outcome::Simultaneous => 2,
            Outcome::Challenge { challenger, response } => {
                3 + 4 * challenger
                    + match response {
                        Response::Yield => 0,
                        Response::CourtForChallenger => 1,
                        Response::CourtForDefender => 2,
                        Response::CourtSplit => 3,
                    }
            }
            Outcome::Censored => 11,
        }
    }

    fn all() -> Vec<Outcome> {
        let mut out = vec![
            Outcome::Concession { player: 0 },
            Outcome::Concession { player: 1 },
            Outcome::Simultaneous,
        ];
        for challenger in 0..2 {
            for response in [
                Response::Yield,
                Response::CourtForChallenger,
                Response::CourtForDefender,
                Response::CourtSplit,
            ] {
                out.push(Outcome::Challenge { challenger, response });
            }
        }
        out.push(Outcome::Censored);
        out
    }
}

/// One simulated negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Replication {
    pub justified: [bool; 2],
    /// Time the negotiation ended (the time cap when censored).
    pub end: f64,
    pub outcome: Outcome,
    /// Discounted payoffs.
    pub payoffs: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Plan {
    Concede(f64),
    Challenge(f64),
    Never,
}

impl Plan {
    fn time(&self) -> f64 {
        match *self {
            Plan::Concede(t) | Plan::Challenge(t) => t,
            Plan::Never => f64::INFINITY,
        }
    }
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

fn strategic_plan(eq: &Equilibrium, player: usize, cap: f64, rng: &mut ChaCha8Rng) -> Plan {
    let u: f64 = rng.random();
    if u >= eq.survival(player, 0.0) {
        return Plan::Concede(0.0);
    }
    let end = eq.horizon().min(cap);
    if eq.survival(player, end) > u {
        return Plan::Never;
    }
    let (mut lo, mut hi) = (0.0, end);
    for _ in 0..SURVIVAL_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if eq.survival(player, mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let concede = eq.concession_density(player, t);
    let challenge = eq.challenge_density(player, t);
    let total = concede + challenge;
    if total > 0.0 && rng.random::<f64>() * total < challenge {
        Plan::Challenge(t)
    } else {
        Plan::Concede(t)
    }
}

fn play(eq: &Equilibrium, cap: f64, rng: &mut ChaCha8Rng) -> Replication {
    let sides = &eq.sides;
    let justified = [rng.random::<f64>() < sides[0].z, rng.random::<f64>() < sides[1].z];
    let plans: Vec<Plan> = (0..2)
        .map(|i| {
            if justified[i] {
                let t = exponential(rng, sides[i].gamma);
                if t.is_finite() {
                    Plan::Challenge(t)
                } else {
                    Plan::Never
                }
            } else {
                strategic_plan(eq, i, cap, rng)
            }
        })
        .collect();
    let t = plans[0].time().min(plans[1].time());
    let d = eq.d;
    let a = [sides[0].a, sides[1].a];
    let discount = |i: usize, v: f64| (-sides[i].r * t).exp() * v;
    if t > cap || !t.is_finite() {
        return Replication {
            justified,
            end: cap,
            outcome: Outcome::Censored,
            payoffs: [0.0, 0.0],
        };
    }
    let conceding: Vec<usize> = (0..2)
        .filter(|&i| matches!(plans[i], Plan::Concede(s) if s == t))
        .collect();
    if conceding.len() == 2 {
        let split = |i: usize| 0.5 * (a[i] + 1.0 - a[1 - i]);
        return Replication {
            justified,
            end: t,
            outcome: Outcome::Simultaneous,
            payoffs: [discount(0, split(0)), discount(1, split(1))],
        };
    }
    // Concession beats a challenge at the same instant.
    if let Some(&i) = conceding.first() {
        let j = 1 - i;
        let mut payoffs = [0.0; 2];
        payoffs[i] = discount(i, 1.0 - a[j]);
        payoffs[j] = discount(j, a[j]);
        return Replication {
            justified,
            end: t,
            outcome: Outcome::Concession { player: i },
            payoffs,
        };
    }
    // Simultaneous challenges: the lower index moves first.
    let c = if plans[0].time() == t { 0 } else { 1 };
    let e = 1 - c;
    let (cs, es) = (&sides[c], &sides[e]);
    let yields = !justified[e] && rng.random::<f64>() < eq.yield_probability(e, t);
    let (response, challenger_gets, defender_gets) = if yields {
        (Response::Yield, a[c] - cs.c * d, 1.0 - a[c])
    } else if justified[c] {
        (Response::CourtForChallenger, a[c] - cs.c * d, 1.0 - a[c] - es.k * d)
    } else if justified[e] {
        (Response::CourtForDefender, 1.0 - a[e] - cs.c * d, a[e] - es.k * d)
    } else {
        (
            Response::CourtSplit,
            1.0 - a[e] + cs.w * d - cs.c * d,
            1.0 - a[c] + (1.0 - cs.w) * d - es.k * d,
        )
    };
    let mut payoffs = [0.0; 2];
    payoffs[c] = discount(c, challenger_gets);
    payoffs[e] = discount(e, defender_gets);
    Replication {
        justified,
        end: t,
        outcome: Outcome::Challenge { challenger: c, response },
        payoffs,
    }
}

/// Raw replications in a fixed order determined by the seed alone.
pub fn simulate_records(eq: &Equilibrium, cfg: &SimConfig) -> Result<Vec<Replication>, MonteCarloError> {
    cfg.validate()?;
    let chunks = cfg.replications.div_ceil(CHUNK);
    let parts: Vec<Vec<Replication>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let n = CHUNK.min(cfg.replications - k * CHUNK);
            (0..n).map(|_| play(eq, cfg.time_cap, &mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeShare {
    pub outcome: String,
    pub count: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffStat {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
}

fn mean_and_error(values: &[f64]) -> PayoffStat {
    let n = values.len();
    if n == 0 {
        return PayoffStat {
            samples: 0,
            mean: f64::NAN,
            std_error: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    PayoffStat {
        samples: n,
        mean,
        std_error: (var / n as f64).sqrt(),
    }
}

/// Share of justified players among negotiations still open at `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorBin {
    pub t: f64,
    pub alive: usize,
    pub justified: [usize; 2],
    pub predicted: [f64; 2],
    /// Standardized gap between the empirical share and the prediction.
    pub z_score: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardBin {
    pub start: f64,
    pub end: f64,
    pub at_risk: usize,
    pub events: usize,
    /// Total time at risk inside the bin.
    pub exposure: f64,
    /// `events / (at_risk * width)`; `None` when nobody is at risk.
    pub hazard: Option<f64>,
    /// `events / exposure`; `None` when there is no exposure.
    pub exposure_hazard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardSeries {
    pub bin_width: f64,
    pub bins: Vec<HazardBin>,
}

impl HazardSeries {
    /// CSV with columns `bin_start, bin_end, at_risk, events, hazard`; a
    /// missing hazard is an empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,at_risk,events,hazard\n");
        for b in &self.bins {
            let h = b.hazard.map(|h| format!("{h:.14e}")).unwrap_or_default();
            out.push_str(&format!("{:.14e},{:.14e},{},{},{h}\n", b.start, b.end, b.at_risk, b.events));
        }
        out
    }
}

/// Binned hazard of durations; censored ones leave the risk set without
/// an event. Bins run up to the longest duration.
pub fn empirical_hazard(durations: &[f64], censored: &[bool], bin_width: f64) -> Result<HazardSeries, MonteCarloError> {
    let longest = durations.iter().cloned().fold(0.0, f64::max);
    empirical_hazard_until(durations, censored, bin_width, longest)
}

/// As [`empirical_hazard`], with bins covering at least `[0, horizon]`.
pub fn empirical_hazard_until(
    durations: &[f64],
    censored: &[bool],
    bin_width: f64,
    horizon: f64,
) -> Result<HazardSeries, MonteCarloError> {
    if durations.is_empty() {
        return Err(MonteCarloError::EmptyInput);
    }
    if durations.len() != censored.len() {
        return Err(MonteCarloError::InvalidConfig(format!(
            "{} durations but {} censoring flags",
            durations.len(),
            censored.len()
        )));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(MonteCarloError::InvalidConfig(format!("bin_width > 0 violated: {bin_width}")));
    }
    if let Some(bad) = durations.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(MonteCarloError::InvalidConfig(format!("durations must be finite and >= 0, got {bad}")));
    }
    let longest = durations.iter().cloned().fold(horizon.max(0.0), f64::max);
    let n_bins = (longest / bin_width).floor() as usize + 1;
    if n_bins > MAX_BINS {
        return Err(MonteCarloError::InvalidConfig(format!("{n_bins} bins exceed the limit of {MAX_BINS}")));
    }
    let mut leaving = vec![0usize; n_bins];
    let mut events = vec![0usize; n_bins];
    let mut partial = vec![0.0; n_bins];
    for (&d, &cens) in durations.iter().zip(censored) {
        let k = ((d / bin_width).floor() as usize).min(n_bins - 1);
        leaving[k] += 1;
        partial[k] += d - k as f64 * bin_width;
        if !cens {
            events[k] += 1;
        }
    }
    let mut at_risk = durations.len();
    let bins = (0..n_bins)
        .map(|k| {
            let exposure = (at_risk - leaving[k]) as f64 * bin_width + partial[k];
            let bin = HazardBin {
                start: k as f64 * bin_width,
                end: (k + 1) as f64 * bin_width,
                at_risk,
                events: events[k],
                exposure,
                hazard: (at_risk > 0).then(|| events[k] as f64 / (at_risk as f64 * bin_width)),
                exposure_hazard: (exposure > 0.0).then(|| events[k] as f64 / exposure),
            };
            at_risk -= leaving[k];
            bin
        })
        .collect();
    Ok(HazardSeries { bin_width, bins })
}

/// Exposure-weighted hazard of events on `[from, to)`.
pub fn interval_hazard(durations: &[f64], events: &[bool], from: f64, to: f64) -> Option<f64> {
    let mut exposure = 0.0;
    let mut count = 0usize;
    for (&d, &e) in durations.iter().zip(events) {
        if d <= from {
            continue;
        }
        exposure += d.min(to) - from;
        if e && d < to {
            count += 1;
        }
    }
    (exposure > 0.0).then(|| count as f64 / exposure)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of binned events to a constant hazard `rate` on
/// `[from, to)`; expected counts come from each bin's exposure. Bins with
/// fewer than five expected events are pooled with their neighbours.
pub fn flat_hazard_test(series: &HazardSeries, rate: f64, from: f64, to: f64) -> Option<ChiSquareTest> {
    let mut cells = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for b in series.bins.iter().filter(|b| b.start >= from && b.end <= to) {
        obs += b.events as f64;
        exp += rate * b.exposure;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    if cells.is_empty() {
        return None;
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len();
    let p_value = ChiSquared::new(dof as f64).ok()?.sf(statistic);
    Some(ChiSquareTest { statistic, dof, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationBest {
    pub t: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerAudit {
    /// Expected payoff of the profile's own mixed plan.
    pub profile_value: f64,
    pub best_concede: DeviationBest,
    pub best_challenge: Option<DeviationBest>,
    /// Largest gain from answering a challenge other than as prescribed.
    pub response_advantage: f64,
    /// Largest gain from a pure action on the grid over the profile value.
    pub max_advantage: f64,
    /// Largest gain from acting after the path ends.
    pub late_advantage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub players: [PlayerAudit; 2],
    pub max_advantage: f64,
}

/// Expected value of `values` (one per grid point, starting at time 0)
/// against the plan of `player`, by midpoint weights on exact CDF increments.
fn plan_value(eq: &Equilibrium, player: usize, grid: &[f64], concede: &[f64], challenge: &[Option<f64>]) -> f64 {
    let mut total = eq.atoms[player] * concede[0];
    for k in 1..grid.len() {
        let (t0, t1) = (grid[k - 1], grid[k]);
        let df = eq.concession_cdf(player, t1) - eq.concession_cdf(player, t0).max(eq.atoms[player]);
        let dg = eq.challenge_cdf(player, t1) - eq.challenge_cdf(player, t0);
        let c = 0.5 * (concede[k - 1] + concede[k]);
        total += df.max(0.0) * c;
        if let (Some(a), Some(b)) = (challenge[k - 1], challenge[k]) {
            total += dg.max(0.0) * 0.5 * (a + b);
        }
    }
    total
}

/// Defender's value of yielding and of seeing after a challenge at `t`.
fn response_values(eq: &Equilibrium, defender: usize, t: f64) -> Option<(f64, f64)> {
    let c = 1 - defender;
    let cs = &eq.sides[c];
    if !cs.can_challenge() {
        return None;
    }
    let justified = cs.z * cs.gamma * (-cs.gamma * t).exp();
    let strategic = (1.0 - cs.z) * eq.challenge_density(c, t);
    let p = justified / (justified + strategic);
    let d = eq.d;
    let k = eq.sides[defender].k;
    let yield_value = 1.0 - cs.a;
    let see_value = p * (1.0 - cs.a - k * d) + (1.0 - p) * (1.0 - cs.a + (1.0 - cs.w) * d - k * d);
    Some((yield_value, see_value))
}

/// Deviation payoffs for both strategic players on a grid of `points`
/// times, compared with the value of the profile's own plan.
pub fn best_response_audit(eq: &Equilibrium, points: usize, time_cap: f64) -> Result<AuditReport, MonteCarloError> {
    let end = match eq.shape {
        Shape::Finite { horizon } => horizon,
        _ => time_cap,
    };
    let mut grid = vec![0.0];
    grid.extend(crate::equilibrium::audit_grid(end, points.max(8)));
    grid.push(end);
    let late: Vec<f64> = match eq.shape {
        Shape::Finite { horizon } => (1..=4).map(|k| horizon * (1.0 + 0.25 * k as f64)).collect(),
        _ => Vec::new(),
    };
    let mut players = Vec::new();
    for player in 0..2 {
        let mut all = grid.clone();
        all.extend(&late);
        let curve = eq.deviation_curve(player, &all)?;
        let n = grid.len();
        let concede: Vec<f64> = curve[..n].iter().map(|p| p.concede).collect();
        let challenge: Vec<Option<f64>> = curve[..n].iter().map(|p| p.challenge).collect();
        let profile_value = plan_value(eq, player, &grid, &concede, &challenge);
        let best_concede = curve[..n]
            .iter()
            .map(|p| DeviationBest { t: p.t, payoff: p.concede })
            .max_by(|x, y| x.payoff.total_cmp(&y.payoff))
            .expect("grid is not empty");
        let best_challenge = curve[..n]
            .iter()
            .filter_map(|p| p.challenge.map(|v| DeviationBest { t: p.t, payoff: v }))
            .max_by(|x, y| x.payoff.total_cmp(&y.payoff));
        let best = best_challenge.map_or(best_concede.payoff, |c| c.payoff.max(best_concede.payoff));
        let late_advantage = (!late.is_empty()).then(|| {
            curve[n..]
                .iter()
                .flat_map(|p| [Some(p.concede), p.challenge])
                .flatten()
                .fold(f64::NEG_INFINITY, f64::max)
                - profile_value
        });
        let mut response_advantage: f64 = 0.0;
        for &t in grid.iter().filter(|&&t| t > 0.0 && t < end) {
            if let Some((y, s)) = response_values(eq, player, t) {
                let q = eq.yield_probability(player, t);
                response_advantage = response_advantage.max(y.max(s) - (q * y + (1.0 - q) * s));
            }
        }
        players.push(PlayerAudit {
            profile_value,
            best_concede,
            best_challenge,
            response_advantage,
            max_advantage: best - profile_value,
            late_advantage,
        });
    }
    let max_advantage = players
        .iter()
        .map(|p| p.max_advantage.max(p.response_advantage))
        .fold(f64::NEG_INFINITY, f64::max);
    let players: [PlayerAudit; 2] = players.try_into().expect("two players");
    Ok(AuditReport { players, max_advantage })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub outcomes: Vec<OutcomeShare>,
    /// Discounted payoffs of the strategic types.
    pub payoffs: [PayoffStat; 2],
    /// Profile payoffs of the strategic types, for comparison.
    pub profile_payoffs: [f64; 2],
    pub posteriors: Vec<PosteriorBin>,
    /// Hazard of the negotiation ending, among those open after time 0.
    pub resolution_hazard: HazardSeries,
    /// Hazard of each player conceding, among those open after time 0.
    pub concession_hazard: [HazardSeries; 2],
    /// Bound on the payoff lost by stopping at the time cap.
    pub truncation_bound: f64,
    pub audit: Option<AuditReport>,
}

/// Simulates `cfg.replications` negotiations under the profile.
pub fn simulate(eq: &Equilibrium, cfg: &SimConfig) -> Result<SimReport, MonteCarloError> {
    let records = simulate_records(eq, cfg)?;
    let n = records.len() as f64;
    let mut counts = [0usize; 12];
    for r in &records {
        counts[r.outcome.index()] += 1;
    }
    let outcomes = Outcome::all()
        .into_iter()
        .map(|o| OutcomeShare {
            outcome: o.label(),
            count: counts[o.index()],
            probability: counts[o.index()] as f64 / n,
        })
        .collect();
    let payoffs = [0, 1].map(|i| {
        let v: Vec<f64> = records.iter().filter(|r| !r.justified[i]).map(|r| r.payoffs[i]).collect();
        mean_and_error(&v)
    });
    let bin_end = eq.horizon().min(cfg.time_cap);
    let mut posteriors = Vec::new();
    let mut t = 0.0;
    while t < bin_end {
        let open: Vec<&Replication> = records.iter().filter(|r| r.end > t).collect();
        let alive = open.len();
        let justified = [0, 1].map(|i| open.iter().filter(|r| r.justified[i]).count());
        let predicted = [0, 1].map(|i| eq.mu(i, t));
        let z_score = [0, 1].map(|i| {
            let p = predicted[i];
            let sd = (p * (1.0 - p) / alive as f64).sqrt();
            (justified[i] as f64 / alive as f64 - p) / sd
        });
        posteriors.push(PosteriorBin {
            t,
            alive,
            justified,
            predicted,
            z_score,
        });
        t += cfg.bin_width;
    }
    let open: Vec<&Replication> = records.iter().filter(|r| r.end > 0.0).collect();
    let durations: Vec<f64> = open.iter().map(|r| r.end).collect();
    let hazard_of = |is_event: &dyn Fn(&Outcome) -> bool| -> Result<HazardSeries, MonteCarloError> {
        let censored: Vec<bool> = open.iter().map(|r| !is_event(&r.outcome)).collect();
        if durations.is_empty() {
            return Ok(HazardSeries {
                bin_width: cfg.bin_width,
                bins: Vec::new(),
            });
        }
        empirical_hazard(&durations, &censored, cfg.bin_width)
    };
    let resolution_hazard = hazard_of(&|o| !matches!(o, Outcome::Censored))?;
    let concession_hazard = [
        hazard_of(&|o| matches!(o, Outcome::Concession { player: 0 }))?,
        hazard_of(&|o| matches!(o, Outcome::Concession { player: 1 }))?,
    ];
    let truncation_bound = match eq.shape {
        Shape::Finite { .. } if eq.sides.iter().all(|s| s.can_challenge() || s.z == 0.0) => 0.0,
        _ => eq
            .sides
            .iter()
            .map(|s| (-s.r * cfg.time_cap).exp())
            .fold(0.0, f64::max),
    };
    let audit = if cfg.grid > 0 {
        Some(best_response_audit(eq, cfg.grid, cfg.time_cap)?)
    } else {
        None
    };
    Ok(SimReport {
        config: *cfg,
        outcomes,
        payoffs,
        profile_payoffs: [eq.payoff(0), eq.payoff(1)],
        posteriors,
        resolution_hazard,
        concession_hazard,
        truncation_bound,
        audit,
    })
}
