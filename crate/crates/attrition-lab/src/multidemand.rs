//! One-sided game with several justified demands per player.
//!
//! Player 1 announces a demand, player 2 accepts it or announces her own,
//! and the single-demand game is played from the resulting posteriors.
//! Player 2's mimicking mix is found by bisecting on her common payoff
//! level; player 1's mix by the same bisection one level up.
//!
//! After announcements `(a1, a2)` with posteriors `(x, y)`, player 2 never
//! concedes at time 0, so `y >= tilde_mu2(x)`. The largest mass she can
//! put on `a2` is therefore the one that lands `y` exactly on the curve:
//! `sigma_bar = z2 pi2(a2) (1/tilde_mu2(x) - 1) / (1 - z2)`, capped at one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::equilibrium::atom_to_reach;
use crate::model::{ModelError, MultiDemandGame};
use crate::onesided::CoevolutionCurve;

/// Target residual on the total mimicking mass.
pub const MASS_TOL: f64 = 1e-11;

/// Allowed spread of payoffs across a mix's support.
pub const PAYOFF_TOL: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;

/// Points in the scan that checks monotonicity of player 1's payoff.
pub const SCAN_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultiDemandError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("bisection did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("rich grid needs K >= 4, got {0}")]
    GridTooCoarse(usize),
}

/// Bracket perturbation for restart probes; `None` is the plain solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub seed: Option<u64>,
}

struct Jitter(Option<ChaCha8Rng>);

impl Jitter {
    fn new(options: SolverOptions, salt: u64) -> Jitter {
        Jitter(options.seed.map(|s| ChaCha8Rng::seed_from_u64(s ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))))
    }

    /// Split point inside `(0, 1)`; the midpoint unless jittered.
    fn split(&mut self) -> f64 {
        match &mut self.0 {
            Some(rng) => rng.random_range(0.2..0.8),
            None => 0.5,
        }
    }

    /// Extra room above a bracket's upper end.
    fn widen(&mut self) -> f64 {
        match &mut self.0 {
            Some(rng) => rng.random_range(0.0..0.5),
            None => 0.0,
        }
    }
}

/// The subgame after player 1 announced `a1`.
#[derive(Debug, Clone)]
struct Stage {
    a1: f64,
    z2: f64,
    demands2: Vec<f64>,
    pi2: Vec<f64>,
    /// Curves for incompatible demands; `None` for compatible ones.
    curves: Vec<Option<CoevolutionCurve>>,
}

impl Stage {
    fn new(game: &MultiDemandGame, a1: f64) -> Stage {
        let curves = game
            .demands2
            .iter()
            .map(|&a2| (a1 + a2 > 1.0).then(|| CoevolutionCurve::new(game.pair(a1, a2))))
            .collect();
        Stage {
            a1,
            z2: game.z2,
            demands2: game.demands2.clone(),
            pi2: game.pi2.clone(),
            curves,
        }
    }

    fn y_star(&self, j: usize, sigma: f64) -> f64 {
        let justified = self.z2 * self.pi2[j];
        justified / (justified + (1.0 - self.z2) * sigma)
    }

    fn disagreement(&self, j: usize) -> f64 {
        self.a1 + self.demands2[j] - 1.0
    }

    fn sigma_bar(&self, j: usize, x: f64) -> f64 {
        let Some(curve) = &self.curves[j] else {
            return 0.0;
        };
        if x >= 1.0 {
            return 0.0;
        }
        let Ok(on_curve) = curve.tilde_mu2(x) else {
            return 1.0;
        };
        if on_curve <= 0.0 {
            return 1.0;
        }
        let sigma = self.z2 * self.pi2[j] * (1.0 / on_curve - 1.0) / (1.0 - self.z2);
        sigma.clamp(0.0, 1.0)
    }

    /// Player 1's time-0 concession after `a2` is mimicked with `sigma`.
    fn q1(&self, j: usize, x: f64, sigma: f64) -> f64 {
        let Some(curve) = &self.curves[j] else {
            return 0.0;
        };
        let y = if sigma == 0.0 { 1.0 } else { self.y_star(j, sigma) };
        match curve.tilde_mu1(y) {
            Ok(target) if target > x => atom_to_reach(x, target),
            _ => 0.0,
        }
    }

    fn u2_star(&self, j: usize, x: f64, sigma: f64) -> f64 {
        1.0 - self.a1 + (1.0 - x) * self.q1(j, x, sigma) * self.disagreement(j)
    }

    /// Mass on `a2` that yields payoff `level`, within `[0, sigma_bar]`.
    fn sigma_at_level(&self, j: usize, x: f64, level: f64, cap: f64) -> f64 {
        let Some(curve) = &self.curves[j] else {
            return 0.0;
        };
        let share = (level - (1.0 - self.a1)) / ((1.0 - x) * self.disagreement(j));
        if share >= 1.0 {
            return 0.0;
        }
        if share <= 0.0 {
            return cap;
        }
        let odds = x / (1.0 - x) / (1.0 - share);
        let target = odds / (1.0 + odds);
        let y = match curve.tilde_mu2(target) {
            Ok(y) if y > 0.0 => y,
            _ => return cap,
        };
        let sigma = self.z2 * self.pi2[j] * (1.0 / y - 1.0) / (1.0 - self.z2);
        sigma.clamp(0.0, cap)
    }
}

/// Player 2's response to an announced `a1` at player 1's posterior `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MimicDistribution {
    pub a1: f64,
    pub x: f64,
    /// Mass on each demand of player 2.
    pub sigma: Vec<f64>,
    /// Mass on accepting `a1` at once.
    pub accept: f64,
    pub sigma_bar: Vec<f64>,
    /// Player 2's posterior after each demand (`None` when never announced).
    pub y_star: Vec<Option<f64>>,
    /// Player 1's posterior after his time-0 concession.
    pub x_star: Vec<Option<f64>>,
    pub q1: Vec<f64>,
    /// Common payoff of a strategic player 2.
    pub level: f64,
    pub residual: f64,
}

/// Mimicking mix of player 2 after `a1` at posterior `x`.
pub fn solve_sigma2(
    game: &MultiDemandGame,
    a1: f64,
    x: f64,
    options: SolverOptions,
) -> Result<MimicDistribution, MultiDemandError> {
    game.validate()?;
    solve_stage(&Stage::new(game, a1), x, options)
}

fn solve_stage(stage: &Stage, x: f64, options: SolverOptions) -> Result<MimicDistribution, MultiDemandError> {
    let n = stage.demands2.len();
    let caps: Vec<f64> = (0..n).map(|j| stage.sigma_bar(j, x)).collect();
    let floor = 1.0 - stage.a1;
    let mut jitter = Jitter::new(options, x.to_bits() ^ stage.a1.to_bits());
    let (sigma, residual) = if x >= 1.0 {
        (vec![0.0; n], 0.0)
    } else {
        let capped: f64 = caps.iter().sum();
        if capped <= 1.0 {
            (caps.clone(), 0.0)
        } else {
            let top = stage
                .demands2
                .iter()
                .map(|a2| stage.a1 + a2 - 1.0)
                .fold(0.0, f64::max);
            let mass = |level: f64| -> Vec<f64> { (0..n).map(|j| stage.sigma_at_level(j, x, level, caps[j])).collect() };
            let mut lo = floor;
            let mut hi = floor + (1.0 - x) * top * (1.0 + jitter.widen());
            let mut best = (mass(hi), hi);
            for _ in 0..MAX_BISECTIONS {
                let mid = lo + jitter.split() * (hi - lo);
                if mid <= lo || mid >= hi {
                    break;
                }
                let m = mass(mid);
                let total: f64 = m.iter().sum();
                best = (m, mid);
                if (total - 1.0).abs() < 1e-14 {
                    break;
                }
                if total > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // With small priors the mass is very steep in the level, so the
            // bisection can stall short of MASS_TOL. The leftover goes to the
            // demand whose payoff moves least when it absorbs it.
            let (mut s, _) = best;
            let total: f64 = s.iter().sum();
            let residual = (total - 1.0).abs();
            let delta = 1.0 - total;
            let shift = |j: usize| (stage.u2_star(j, x, s[j] + delta) - stage.u2_star(j, x, s[j])).abs();
            let flattest = (0..n)
                .filter(|&j| s[j] > 0.0 && (0.0..=caps[j]).contains(&(s[j] + delta)))
                .min_by(|&i, &j| shift(i).total_cmp(&shift(j)));
            match flattest {
                Some(j) => s[j] += delta,
                None => s.iter_mut().for_each(|v| *v /= total),
            }
            let payoffs: Vec<f64> = (0..n).filter(|&j| s[j] > 0.0).map(|j| stage.u2_star(j, x, s[j])).collect();
            let spread = payoffs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - payoffs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            if residual > MASS_TOL && spread > PAYOFF_TOL {
                return Err(MultiDemandError::ConvergenceFailure(format!(
                    "player 2 mass residual {residual:e}, payoff spread {spread:e} after a1 = {}",
                    stage.a1
                )));
            }
            (s, residual)
        }
    };
    let mut accept = (1.0 - sigma.iter().sum::<f64>()).max(0.0);
    if accept < 1e-12 {
        accept = 0.0;
    }
    let level = if accept > 0.0 {
        floor
    } else {
        (0..n)
            .filter(|&j| sigma[j] > 0.0)
            .map(|j| stage.u2_star(j, x, sigma[j]))
            .fold(floor, f64::max)
    };
    let q1: Vec<f64> = (0..n).map(|j| stage.q1(j, x, sigma[j])).collect();
    let y_star = (0..n)
        .map(|j| (stage.curves[j].is_some() && (sigma[j] > 0.0 || stage.pi2[j] > 0.0)).then(|| stage.y_star(j, sigma[j])))
        .collect();
    let x_star = (0..n)
        .map(|j| stage.curves[j].is_some().then(|| x / (x + (1.0 - x) * (1.0 - q1[j]))))
        .collect();
    Ok(MimicDistribution {
        a1: stage.a1,
        x,
        sigma,
        accept,
        sigma_bar: caps,
        y_star,
        x_star,
        q1,
        level,
        residual,
    })
}

/// Payoff of a strategic player 1 facing `response`: his demand when
/// player 2 accepts or announces a compatible demand, otherwise he is the
/// one who concedes and collects `1 - a2`.
fn player1_payoff(stage: &Stage, response: &MimicDistribution) -> f64 {
    let z2 = stage.z2;
    let mut total = stage.a1 * (1.0 - z2) * response.accept;
    for (j, &a2) in stage.demands2.iter().enumerate() {
        let announce = z2 * stage.pi2[j] + (1.0 - z2) * response.sigma[j];
        total += if stage.curves[j].is_some() {
            announce * (1.0 - a2)
        } else {
            announce * stage.a1
        };
    }
    total
}

/// Equilibrium payoff of a strategic player 1 who announced `a1` and holds
/// posterior `x`.
pub fn player1_value(game: &MultiDemandGame, a1: f64, x: f64) -> Result<f64, MultiDemandError> {
    let stage = Stage::new(game, a1);
    Ok(player1_payoff(&stage, &solve_stage(&stage, x, SolverOptions::default())?))
}

/// Time for player 1's reputation to climb from `x` to one after `(a1, a2)`.
pub fn time_to_one(game: &MultiDemandGame, a1: f64, a2: f64, x: f64) -> f64 {
    analysis::time_to_one(&CoevolutionCurve::new(game.pair(a1, a2)), x)
}

/// Time for player 2's reputation to climb from `y` to one after `(a1, a2)`.
pub fn time_to_one_2(game: &MultiDemandGame, a1: f64, a2: f64, y: f64) -> f64 {
    -y.ln() / game.pair(a1, a2).lambda2
}

/// Largest mass player 2 can put on `a2` without conceding at time 0.
pub fn sigma_bar(game: &MultiDemandGame, a1: f64, a2: f64, x: f64) -> f64 {
    let stage = Stage::new(game, a1);
    match stage.demands2.iter().position(|&d| d == a2) {
        Some(j) => stage.sigma_bar(j, x),
        None => {
            let mut single = stage;
            single.demands2 = vec![a2];
            single.curves = vec![(a1 + a2 > 1.0).then(|| CoevolutionCurve::new(game.pair(a1, a2)))];
            single.pi2 = vec![0.0];
            single.sigma_bar(0, x)
        }
    }
}

/// Player 1's payoff as a function of his posterior after one demand.
struct Schedule {
    stage: Stage,
    x_min: f64,
    /// Largest `x` on the initial flat stretch.
    x_flat: f64,
    flat_value: f64,
    top_value: f64,
    /// Largest decrease seen on the scan grid.
    monotone_violation: f64,
    options: SolverOptions,
}

impl Schedule {
    fn value(&self, x: f64) -> Result<f64, MultiDemandError> {
        Ok(player1_payoff(&self.stage, &solve_stage(&self.stage, x, self.options)?))
    }

    fn build(game: &MultiDemandGame, i: usize, options: SolverOptions) -> Result<Schedule, MultiDemandError> {
        let a1 = game.demands1[i];
        let justified = game.z1 * game.pi1[i];
        let x_min = justified / (justified + 1.0 - game.z1);
        let mut schedule = Schedule {
            stage: Stage::new(game, a1),
            x_min,
            x_flat: x_min,
            flat_value: 0.0,
            top_value: 0.0,
            monotone_violation: 0.0,
            options,
        };
        let span = (1.0 / x_min).ln();
        let grid: Vec<f64> = (0..SCAN_POINTS)
            .map(|k| (x_min * (span * k as f64 / (SCAN_POINTS - 1) as f64).exp()).min(1.0))
            .collect();
        let values = grid.iter().map(|&x| schedule.value(x)).collect::<Result<Vec<_>, _>>()?;
        schedule.flat_value = values[0];
        schedule.top_value = schedule.value(1.0)?;
        for w in values.windows(2) {
            schedule.monotone_violation = schedule.monotone_violation.max(w[0] - w[1]);
        }
        let flat_tol = 1e-12;
        let last_flat = values
            .iter()
            .rposition(|v| (v - values[0]).abs() <= flat_tol)
            .unwrap_or(0);
        if last_flat + 1 < grid.len() {
            let (mut lo, mut hi) = (grid[last_flat], grid[last_flat + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (schedule.value(mid)? - values[0]).abs() <= flat_tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            schedule.x_flat = lo;
        } else {
            schedule.x_flat = 1.0;
        }
        Ok(schedule)
    }

    /// Posterior at which the payoff equals `level`, on the rising stretch.
    fn posterior_at(&self, level: f64) -> Result<f64, MultiDemandError> {
        let bracket = self.posterior_bracket(level)?;
        Ok(0.5 * (bracket.0 .0 + bracket.1 .0))
    }

    /// Adjacent posteriors `(x, payoff)` either side of `level`.
    #[allow(clippy::type_complexity)]
    fn posterior_bracket(&self, level: f64) -> Result<((f64, f64), (f64, f64)), MultiDemandError> {
        let start = self.x_flat.max(self.x_min);
        let (mut lo, mut hi) = ((start, self.value(start)?), (1.0, self.top_value));
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo.0 + hi.0);
            if mid <= lo.0 || mid >= hi.0 {
                break;
            }
            let v = self.value(mid)?;
            if v < level {
                lo = (mid, v);
            } else {
                hi = (mid, v);
            }
        }
        Ok((lo, hi))
    }

    fn sigma_of(&self, x: f64, justified: f64, z1: f64) -> f64 {
        (justified * (1.0 / x - 1.0) / (1.0 - z1)).clamp(0.0, 1.0)
    }

    /// Mass player 1 puts on this demand when his common payoff is `level`.
    fn mass_at(&self, level: f64, justified: f64, z1: f64) -> Result<f64, MultiDemandError> {
        if level >= self.top_value {
            return Ok(0.0);
        }
        if level <= self.flat_value {
            return Ok(1.0);
        }
        let x = self.posterior_at(level)?;
        Ok(self.sigma_of(x, justified, z1))
    }
}

/// Per-pair entry of the outcome distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub a1: f64,
    /// `None` for immediate acceptance of `a1` by a strategic player 2.
    pub a2: Option<f64>,
    /// Probability that this pair of announcements occurs.
    pub probability: f64,
    /// Probability that it occurs and the game ends at time 0.
    pub immediate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub pairs: Vec<PairOutcome>,
    pub immediate_agreement: f64,
    /// Per demand of player 1: probability that a strategic player 1
    /// announces it and does not concede at time 0.
    pub holdout_mass: Vec<f64>,
}

impl OutcomeDistribution {
    /// Largest absolute difference between two distributions.
    pub fn distance(&self, other: &OutcomeDistribution) -> f64 {
        let mut worst = (self.immediate_agreement - other.immediate_agreement).abs();
        for (p, q) in self.pairs.iter().zip(&other.pairs) {
            worst = worst.max((p.probability - q.probability).abs());
            worst = worst.max((p.immediate - q.immediate).abs());
        }
        for (p, q) in self.holdout_mass.iter().zip(&other.holdout_mass) {
            worst = worst.max((p - q).abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiDemandSolution {
    pub sigma1: Vec<f64>,
    /// Player 1's posterior after each demand.
    pub x: Vec<f64>,
    /// Common payoff of a strategic player 1.
    pub u1: f64,
    /// Payoff of a strategic player 1 from each demand at its posterior.
    pub u1_by_demand: Vec<f64>,
    /// Payoff range across the posterior step of each demand; a single
    /// point unless the payoff jumps between adjacent floats.
    pub u1_range: Vec<(f64, f64)>,
    /// Ex-ante payoff of a strategic player 2.
    pub u2: f64,
    pub responses: Vec<MimicDistribution>,
    pub outcome: OutcomeDistribution,
    /// Demands whose payoff sits on its flat stretch at the common level.
    pub flat_demands: Vec<usize>,
    /// Largest decrease of a payoff schedule on the scan grid.
    pub monotone_violation: f64,
}

/// Full equilibrium: player 1's mix over demands and player 2's responses.
pub fn solve_game(game: &MultiDemandGame, options: SolverOptions) -> Result<MultiDemandSolution, MultiDemandError> {
    game.validate()?;
    let m = game.demands1.len();
    let schedules: Vec<Schedule> = (0..m)
        .into_par_iter()
        .map(|i| {
            let opts = SolverOptions {
                seed: options.seed.map(|s| s.wrapping_add(i as u64)),
            };
            Schedule::build(game, i, opts)
        })
        .collect::<Result<_, _>>()?;
    let justified: Vec<f64> = (0..m).map(|i| game.z1 * game.pi1[i]).collect();
    let masses = |level: f64| -> Result<Vec<f64>, MultiDemandError> {
        (0..m)
            .into_par_iter()
            .map(|i| schedules[i].mass_at(level, justified[i], game.z1))
            .collect()
    };
    let mut lo = schedules.iter().map(|s| s.flat_value).fold(f64::INFINITY, f64::min);
    let mut hi = schedules.iter().map(|s| s.top_value).fold(f64::NEG_INFINITY, f64::max);
    let mut jitter = Jitter::new(options, 0x5eed);
    hi += jitter.widen() * (hi - lo).max(1e-3);
    let mut at_lo = masses(lo)?;
    let mut at_hi = masses(hi)?;
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + jitter.split() * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let at_mid = masses(mid)?;
        let total: f64 = at_mid.iter().sum();
        if total > 1.0 {
            lo = mid;
            at_lo = at_mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
        if (total - 1.0).abs() < 1e-14 {
            lo = mid;
            at_lo = at_hi.clone();
            break;
        }
    }
    // A jump in total mass marks demands on their flat stretch; split the
    // remaining mass across them in proportion to the jump.
    let sum_hi: f64 = at_hi.iter().sum();
    let sum_lo: f64 = at_lo.iter().sum();
    let mut sigma1 = at_hi.clone();
    let mut flat_demands = Vec::new();
    if (sum_hi - 1.0).abs() > MASS_TOL && sum_lo > sum_hi {
        let share = (1.0 - sum_hi) / (sum_lo - sum_hi);
        for i in 0..m {
            let jump = at_lo[i] - at_hi[i];
            if jump > 1e-9 {
                flat_demands.push(i);
            }
            sigma1[i] = at_hi[i] + share * jump;
        }
    }
    let total: f64 = sigma1.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(MultiDemandError::ConvergenceFailure(format!(
            "player 1 mass residual {:e}",
            (total - 1.0).abs()
        )));
    }
    for s in &mut sigma1 {
        *s /= total;
    }
    let level = 0.5 * (lo + hi);
    // Near an asymptote the payoff can rise by a large step between
    // adjacent floats. Such a demand keeps the posterior on the side
    // closer to the level and reports the payoff range across the step.
    let placed: Vec<(f64, f64, (f64, f64))> = (0..m)
        .into_par_iter()
        .map(|i| {
            let schedule = &schedules[i];
            if sigma1[i] <= 0.0 {
                return Ok((0.0, 1.0, (schedule.top_value, schedule.top_value)));
            }
            let x = justified[i] / (justified[i] + (1.0 - game.z1) * sigma1[i]);
            if x <= schedule.x_flat || flat_demands.contains(&i) {
                let v = schedule.value(x)?;
                return Ok((sigma1[i], x, (v, v)));
            }
            let ((x_lo, v_lo), (x_hi, v_hi)) = schedule.posterior_bracket(level)?;
            if v_hi - v_lo <= PAYOFF_TOL {
                let v = schedule.value(x)?;
                return Ok((sigma1[i], x, (v, v)));
            }
            let x = if level - v_lo <= v_hi - level { x_lo } else { x_hi };
            Ok((schedule.sigma_of(x, justified[i], game.z1), x, (v_lo, v_hi)))
        })
        .collect::<Result<_, MultiDemandError>>()?;
    let sigma1: Vec<f64> = placed.iter().map(|p| p.0).collect();
    let x: Vec<f64> = placed.iter().map(|p| p.1).collect();
    let u1_range: Vec<(f64, f64)> = placed.iter().map(|p| p.2).collect();
    let responses: Vec<MimicDistribution> = (0..m)
        .into_par_iter()
        .map(|i| solve_stage(&schedules[i].stage, x[i], SolverOptions::default()))
        .collect::<Result<_, _>>()?;
    let u1_by_demand: Vec<f64> = (0..m).map(|i| player1_payoff(&schedules[i].stage, &responses[i])).collect();
    let resolved = (0..m)
        .filter(|&i| sigma1[i] > 0.0 && u1_range[i].1 - u1_range[i].0 <= PAYOFF_TOL)
        .max_by(|&i, &j| sigma1[i].total_cmp(&sigma1[j]));
    let u1 = resolved.map_or(level, |i| u1_by_demand[i]);
    let outcome = outcome_of(game, &sigma1, &x, &responses);
    let u2 = (0..m)
        .map(|i| (game.z1 * game.pi1[i] + (1.0 - game.z1) * sigma1[i]) * responses[i].level)
        .sum();
    Ok(MultiDemandSolution {
        sigma1,
        x,
        u1,
        u1_by_demand,
        u1_range,
        u2,
        responses,
        outcome,
        flat_demands,
        monotone_violation: schedules.iter().map(|s| s.monotone_violation).fold(0.0, f64::max),
    })
}

fn outcome_of(game: &MultiDemandGame, sigma1: &[f64], x: &[f64], responses: &[MimicDistribution]) -> OutcomeDistribution {
    let (z1, z2) = (game.z1, game.z2);
    let mut pairs = Vec::new();
    let mut immediate_agreement = 0.0;
    let mut holdout_mass = Vec::new();
    for (i, &a1) in game.demands1.iter().enumerate() {
        let announce1 = z1 * game.pi1[i] + (1.0 - z1) * sigma1[i];
        let resp = &responses[i];
        let accept = announce1 * (1.0 - z2) * resp.accept;
        pairs.push(PairOutcome {
            a1,
            a2: None,
            probability: accept,
            immediate: accept,
        });
        immediate_agreement += accept;
        let mut holdout = 0.0;
        for (j, &a2) in game.demands2.iter().enumerate() {
            let announce2 = z2 * game.pi2[j] + (1.0 - z2) * resp.sigma[j];
            let probability = announce1 * announce2;
            let immediate = if a1 + a2 > 1.0 {
                holdout += (1.0 - z1) * sigma1[i] * announce2 * (1.0 - resp.q1[j]);
                probability * (1.0 - x[i]) * resp.q1[j]
            } else {
                probability
            };
            immediate_agreement += immediate;
            pairs.push(PairOutcome {
                a1,
                a2: Some(a2),
                probability,
                immediate,
            });
        }
        holdout_mass.push(holdout);
    }
    OutcomeDistribution {
        pairs,
        immediate_agreement,
        holdout_mass,
    }
}

/// Lower bounds on limit payoffs with the rich grid `{2/K, ..., (K-1)/K}`.
pub fn limit_payoffs_rich(r1: f64, r2: f64, gamma1: f64, k: usize) -> Result<(f64, f64), MultiDemandError> {
    if k < 4 {
        return Err(MultiDemandError::GridTooCoarse(k));
    }
    let fast = r1.max(gamma1);
    let step = 1.0 / k as f64;
    Ok((r2 / (fast + r2) - step, fast / (fast + r2) - step))
}

/// Game on the grid `{2/K, ..., (K-1)/K}` with uniform priors over demands.
#[allow(clippy::too_many_arguments)]
pub fn rich_grid_game(k: usize, z: f64, r1: f64, r2: f64, gamma1: f64, c1: f64, k2: f64, w1: f64) -> MultiDemandGame {
    let grid: Vec<f64> = (2..k).map(|i| i as f64 / k as f64).collect();
    let pi = vec![1.0 / grid.len() as f64; grid.len()];
    MultiDemandGame {
        demands1: grid.clone(),
        demands2: grid,
        pi1: pi.clone(),
        pi2: pi,
        z1: z,
        z2: z,
        r1,
        r2,
        gamma1,
        c1,
        k2,
        w1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_game, OneSidedGame};
    use crate::onesided;

    fn single(g: &OneSidedGame) -> MultiDemandGame {
        MultiDemandGame {
            demands1: vec![g.a1],
            demands2: vec![g.a2],
            pi1: vec![1.0],
            pi2: vec![1.0],
            z1: g.z1,
            z2: g.z2,
            r1: g.r1,
            r2: g.r2,
            gamma1: g.gamma1,
            c1: g.c1,
            k2: g.k2,
            w1: g.w1,
        }
    }

    fn three_by_three() -> MultiDemandGame {
        MultiDemandGame {
            demands1: vec![0.4, 0.6, 0.8],
            demands2: vec![0.5, 0.7, 0.9],
            pi1: vec![0.2, 0.5, 0.3],
            pi2: vec![0.3, 0.3, 0.4],
            z1: 0.05,
            z2: 0.05,
            r1: 1.0,
            r2: 1.0,
            gamma1: 0.5,
            c1: 0.5,
            k2: 0.3,
            w1: 0.2,
        }
    }

    #[test]
    fn hand_examples() {
        let g = single(&reference_game());
        let t2 = time_to_one_2(&g, 0.6, 0.6, 0.5);
        assert!((t2 - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(time_to_one(&g, 0.6, 0.6, 1.0), 0.0);
        assert_eq!(sigma_bar(&g, 0.6, 0.4, 0.3), 0.0);
        let fast = MultiDemandGame { gamma1: 4.0, ..g.clone() };
        // lambda1 = 2, gamma1 = 4: asymptote at 0.5 * 0.625.
        assert!(time_to_one(&fast, 0.6, 0.6, 0.3).is_infinite());
        assert_eq!(sigma_bar(&fast, 0.6, 0.6, 0.3), 1.0);
        let lim = limit_payoffs_rich(1.0, 1.0, 2.0, 1_000_000).unwrap();
        assert!((lim.0 - 1.0 / 3.0).abs() < 1e-5 && (lim.1 - 2.0 / 3.0).abs() < 1e-5);
        let (b1, b2) = limit_payoffs_rich(1.0, 3.0, 0.5, 10).unwrap();
        assert!((b1 - (0.75 - 0.1)).abs() < 1e-15);
        assert!((b1 + b2 - (1.0 - 0.2)).abs() < 1e-15);
        assert!(limit_payoffs_rich(1.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn equal_time_residual_on_cap() {
        let g = three_by_three();
        for (a1, a2, x) in [(0.6, 0.7, 0.3), (0.6, 0.5, 0.2), (0.4, 0.9, 0.6)] {
            let cap = sigma_bar(&g, a1, a2, x);
            assert!(cap > 0.0 && cap < 1.0);
            let j = g.demands2.iter().position(|&d| d == a2).unwrap();
            let y = g.z2 * g.pi2[j] / (g.z2 * g.pi2[j] + (1.0 - g.z2) * cap);
            let gap = time_to_one(&g, a1, a2, x) - time_to_one_2(&g, a1, a2, y);
            assert!(gap.abs() < 1e-9, "{gap}");
        }
    }

    #[test]
    fn player2_fixed_point_properties() {
        let g = three_by_three();
        for &a1 in &g.demands1 {
            for x in [0.01, 0.05, 0.2, 0.6] {
                let d = solve_sigma2(&g, a1, x, SolverOptions::default()).unwrap();
                let total: f64 = d.sigma.iter().sum::<f64>() + d.accept;
                assert!((total - 1.0).abs() < 1e-12);
                let stage = Stage::new(&g, a1);
                let mut support_started = false;
                for (j, &a2) in g.demands2.iter().enumerate() {
                    assert!(d.sigma[j] >= 0.0 && d.sigma[j] <= d.sigma_bar[j] + 1e-12);
                    if a2 <= 1.0 - a1 {
                        assert_eq!(d.sigma[j], 0.0);
                        continue;
                    }
                    if d.sigma[j] > 0.0 {
                        support_started = true;
                        let u = stage.u2_star(j, x, d.sigma[j]);
                        assert!((u - d.level).abs() < 1e-9, "{u} {}", d.level);
                    } else {
                        assert!(!support_started, "support is not upward closed");
                    }
                }
                if d.accept > 0.0 {
                    assert_eq!(d.level, 1.0 - a1);
                }
            }
        }
        let certain = solve_sigma2(&g, 0.6, 1.0, SolverOptions::default()).unwrap();
        assert_eq!(certain.accept, 1.0);
    }

    #[test]
    fn restarts_agree() {
        let g = three_by_three();
        let plain = solve_sigma2(&g, 0.8, 0.1, SolverOptions::default()).unwrap();
        for seed in 0..20 {
            let other = solve_sigma2(&g, 0.8, 0.1, SolverOptions { seed: Some(seed) }).unwrap();
            for (p, q) in plain.sigma.iter().zip(&other.sigma) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_demands_match_one_sided() {
        for g in [
            reference_game(),
            OneSidedGame { z1: 0.5, z2: 0.05, ..reference_game() },
            OneSidedGame { gamma1: 3.0, z1: 0.6, ..reference_game() },
        ] {
            let one = onesided::solve(&g).unwrap();
            let multi = solve_game(&single(&g), SolverOptions::default()).unwrap();
            assert!((multi.u1 - one.u1).abs() < 1e-9, "{} {}", multi.u1, one.u1);
            assert!((multi.responses[0].level - one.u2).abs() < 1e-9);
            assert!((multi.responses[0].accept - one.q2).abs() < 1e-9);
        }
    }

    #[test]
    fn player1_mix_equalizes_payoffs() {
        let g = three_by_three();
        let sol = solve_game(&g, SolverOptions::default()).unwrap();
        assert!(sol.monotone_violation < 1e-12);
        assert!((sol.sigma1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (i, &s) in sol.sigma1.iter().enumerate() {
            if s > 0.0 {
                assert!((sol.u1_by_demand[i] - sol.u1).abs() < 1e-9);
                assert_eq!(sol.u1_range[i].0, sol.u1_range[i].1);
            } else {
                assert!(sol.u1_by_demand[i] <= sol.u1 + 1e-9);
            }
        }
    }

    #[test]
    fn rich_grid_payoff_near_limit() {
        for gamma in [0.5, 2.0] {
            let g = rich_grid_game(10, 1e-6, 1.0, 1.0, gamma, 0.5, 0.3, 0.2);
            let sol = solve_game(&g, SolverOptions::default()).unwrap();
            let target = 1.0 / (gamma.max(1.0) + 1.0);
            assert!((sol.u1 - target).abs() <= 0.1 + 0.02, "{}", sol.u1);
            for (i, &s) in sol.sigma1.iter().enumerate() {
                let (lo, hi) = sol.u1_range[i];
                if s > 0.0 {
                    assert!(lo - 1e-9 <= sol.u1 && sol.u1 <= hi + 1e-9);
                } else {
                    assert!(hi <= sol.u1 + 1e-9);
                }
            }
        }
    }
}
