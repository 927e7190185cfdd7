//! Welfare and comparative statics of the one-sided game: who gains from
//! ultimatum opportunities, payoffs in the limit of vanishing priors,
//! signed payoff responses to parameter changes and to the arrival rate.
//!
//! Player 1's payoff is `1 - a2 + (1 - z2) Q2 D` and player 2's is
//! `1 - a1 + (1 - z1) Q1 D`, so every sign question reduces to how the
//! coevolution curve moves.

use serde::Serialize;
use thiserror::Error;

use crate::bernoulli::BernoulliDynamics;
use crate::model::{OneSidedGame, RATE_TIE_EPS};
use crate::onesided::{self, CoevolutionCurve, OneSidedError};

/// Lower end of the bracket for the crossings of the two curves.
pub const BRACKET_EPS: f64 = 1e-9;

/// Relative tolerance for the knife-edge rate comparisons.
pub const KNIFE_EDGE_EPS: f64 = 1e-9;

/// Relative step of the centered finite difference in `gamma1`.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    OneSided(#[from] OneSidedError),
    #[error("no benefit region: {0}")]
    NoBenefitRegion(String),
    #[error("could not bracket a crossing on [{lo}, {hi}]")]
    BracketingFailure { lo: f64, hi: f64 },
    #[error("analysis needs gamma1 > 0")]
    NeedsChallenge,
}

fn curve_for(game: &OneSidedGame) -> Result<CoevolutionCurve, AnalysisError> {
    Ok(CoevolutionCurve::new(game.derive().map_err(OneSidedError::from)?))
}

fn without_challenge(game: &OneSidedGame) -> OneSidedGame {
    OneSidedGame { gamma1: 0.0, ..*game }
}

/// Time for player 1's reputation to climb from `mu1` to one on the
/// equilibrium path; infinite at or below the curve's asymptote.
pub fn time_to_one(curve: &CoevolutionCurve, mu1: f64) -> f64 {
    let d = &curve.derived;
    if mu1 >= 1.0 {
        return 0.0;
    }
    let drift = d.lambda1 - d.gamma1;
    let quiet = BernoulliDynamics::new(drift, d.gamma1);
    if !d.challenge_enabled() || mu1 >= d.mu1_n {
        return quiet.hitting_time(mu1, 1.0).unwrap_or(f64::INFINITY);
    }
    let challenge = BernoulliDynamics::new(drift, d.gamma1 / d.nu1_star);
    let first = challenge.hitting_time(mu1, d.mu1_n).unwrap_or(f64::INFINITY);
    first + quiet.hitting_time(d.mu1_n, 1.0).unwrap_or(f64::INFINITY)
}

/// `tilde_mu2` extended by zero below its asymptote.
fn curve2_or_zero(curve: &CoevolutionCurve, mu1: f64) -> f64 {
    curve.tilde_mu2(mu1).unwrap_or(0.0)
}

/// Sign test from the single-peak structure: positive iff the curve with
/// challenges lies above the one without at `mu1 = nu1*`.
pub fn peak_sign_test(game: &OneSidedGame) -> Result<f64, AnalysisError> {
    let d = game.derive().map_err(OneSidedError::from)?;
    let (l1, l2, g, nu, m) = (d.lambda1, d.lambda2, d.gamma1, d.nu1_star, d.mu2_star);
    let power = m.powf((l1 - g) / l2);
    let bracket = (1.0 - nu.powf(-g / l1)) / (1.0 - nu) * nu + (g / l1) * power;
    Ok((l1 - g) * bracket)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenefitRegion {
    pub condition_a_holds: bool,
    /// `mu1_n > nu1*`.
    pub reaches_good_news: bool,
    /// `t1(nu1* | gamma1)` and `t1(nu1* | 0)`.
    pub time_with: f64,
    pub time_without: f64,
    pub mu1_lower: Option<f64>,
    pub mu1_upper: Option<f64>,
    pub mu1_n: f64,
    pub nu1_star: f64,
}

impl BenefitRegion {
    /// Whether a strategic player 1 with priors `(z1, z2)` strictly gains.
    pub fn benefits(&self, game: &OneSidedGame) -> Result<bool, AnalysisError> {
        let (Some(lo), Some(hi)) = (self.mu1_lower, self.mu1_upper) else {
            return Ok(false);
        };
        if !(game.z1 > lo && game.z1 < hi) {
            return Ok(false);
        }
        let curve = curve_for(game)?;
        Ok(game.z2 < curve2_or_zero(&curve, game.z1))
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Result<f64, AnalysisError> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(AnalysisError::BracketingFailure { lo, hi });
    }
    let rising = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reputation region in which ultimatum opportunities help a strategic
/// player 1. Crossings of the curves with and without challenges are
/// bracketed on either side of `nu1*`, where their difference peaks.
///
/// The benefit direction is a shorter climb to one: a higher curve for
/// player 2 at `z1` means a larger concession by player 2 at time 0.
pub fn who_benefits(game: &OneSidedGame) -> Result<BenefitRegion, AnalysisError> {
    if game.gamma1 <= 0.0 {
        return Err(AnalysisError::NeedsChallenge);
    }
    let with = curve_for(game)?;
    let without = curve_for(&without_challenge(game))?;
    let d = with.derived;
    let nu = d.nu1_star;
    let reaches_good_news = d.mu1_n > nu;
    let time_with = time_to_one(&with, nu);
    let time_without = time_to_one(&without, nu);
    let condition_a_holds = reaches_good_news && time_with < time_without;
    let mut region = BenefitRegion {
        condition_a_holds,
        reaches_good_news,
        time_with,
        time_without,
        mu1_lower: None,
        mu1_upper: None,
        mu1_n: d.mu1_n,
        nu1_star: nu,
    };
    if !condition_a_holds {
        return Ok(region);
    }
    let gap = |mu1: f64| curve2_or_zero(&with, mu1) - curve2_or_zero(&without, mu1);
    let floor = (d.asymptote() + BRACKET_EPS).max(BRACKET_EPS);
    region.mu1_lower = Some(bisect(gap, floor, nu)?);
    region.mu1_upper = Some(bisect(gap, nu, d.mu1_n)?);
    Ok(region)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCase {
    /// `lambda1 < gamma1`: the curve meets zero above `phi1* nu1*`.
    FastUltimatums,
    /// `gamma1 <= lambda1 < gamma1 + lambda2`.
    SlowerBuilder,
    /// `lambda1 > gamma1 + lambda2`.
    FasterBuilder,
    /// `lambda1 = gamma1 + lambda2`.
    KnifeEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitPayoffs {
    pub case: LimitCase,
    /// `None` at the knife edge.
    pub winner: Option<u8>,
    pub payoffs: Option<[f64; 2]>,
    pub efficient: bool,
    /// `lambda1` within tolerance of `gamma1` (still classified).
    pub nongeneric: bool,
}

/// Payoff pair as both priors vanish at the same order.
pub fn limit_payoffs_single(game: &OneSidedGame) -> Result<LimitPayoffs, AnalysisError> {
    let d = game.derive().map_err(OneSidedError::from)?;
    let (l1, l2, g) = (d.lambda1, d.lambda2, d.gamma1);
    let edge = g + l2;
    let nongeneric = (l1 - g).abs() <= KNIFE_EDGE_EPS * l1.max(g);
    let player2 = [1.0 - game.a2, game.a2];
    let player1 = [game.a1, 1.0 - game.a1];
    let (case, winner, payoffs) = if (l1 - edge).abs() <= KNIFE_EDGE_EPS * l1.max(edge) {
        (LimitCase::KnifeEdge, None, None)
    } else if l1 < g && !nongeneric {
        (LimitCase::FastUltimatums, Some(2), Some(player2))
    } else if l1 < edge {
        (LimitCase::SlowerBuilder, Some(2), Some(player2))
    } else {
        (LimitCase::FasterBuilder, Some(1), Some(player1))
    };
    Ok(LimitPayoffs {
        case,
        winner,
        payoffs,
        efficient: payoffs.is_some(),
        nongeneric,
    })
}

/// Parameters covered by the comparative statics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Z1,
    Z2,
    R1,
    R2,
    C1,
    K2,
    W1,
}

impl Param {
    pub const ALL: [Param; 7] = [Param::Z1, Param::Z2, Param::R1, Param::R2, Param::C1, Param::K2, Param::W1];

    pub fn name(self) -> &'static str {
        match self {
            Param::Z1 => "z1",
            Param::Z2 => "z2",
            Param::R1 => "r1",
            Param::R2 => "r2",
            Param::C1 => "c1",
            Param::K2 => "k2",
            Param::W1 => "w1",
        }
    }

    pub fn parse(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn get(self, g: &OneSidedGame) -> f64 {
        match self {
            Param::Z1 => g.z1,
            Param::Z2 => g.z2,
            Param::R1 => g.r1,
            Param::R2 => g.r2,
            Param::C1 => g.c1,
            Param::K2 => g.k2,
            Param::W1 => g.w1,
        }
    }

    pub fn with(self, g: &OneSidedGame, value: f64) -> OneSidedGame {
        let mut out = *g;
        match self {
            Param::Z1 => out.z1 = value,
            Param::Z2 => out.z2 = value,
            Param::R1 => out.r1 = value,
            Param::R2 => out.r2 = value,
            Param::C1 => out.c1 = value,
            Param::K2 => out.k2 = value,
            Param::W1 => out.w1 = value,
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Increase,
    Decrease,
    Constant,
    /// On a region boundary or the step crosses one.
    Unsigned,
}

impl Prediction {
    fn holds(self, delta: f64) -> bool {
        match self {
            Prediction::Increase => delta > 0.0,
            Prediction::Decrease => delta < 0.0,
            Prediction::Constant => delta.abs() < 1e-9,
            Prediction::Unsigned => true,
        }
    }

    fn flip(self) -> Prediction {
        match self {
            Prediction::Increase => Prediction::Decrease,
            Prediction::Decrease => Prediction::Increase,
            p => p,
        }
    }
}

/// Which side of the curve and of the phase boundaries the priors sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    /// `z1 > tilde_mu1(z2)`: player 2 concedes at time 0.
    pub player2_concedes: bool,
    /// `z1 < tilde_mu1(z2)`: player 1 concedes at time 0.
    pub player1_concedes: bool,
    /// `z1 < mu1_n`.
    pub below_mu1_n: bool,
    /// `z2 < mu2*`.
    pub below_mu2_star: bool,
}

pub fn window_of(game: &OneSidedGame) -> Result<Window, AnalysisError> {
    let curve = curve_for(game)?;
    let d = curve.derived;
    let on_curve = curve.tilde_mu1(game.z2)?;
    Ok(Window {
        player2_concedes: game.z1 > on_curve,
        player1_concedes: game.z1 < on_curve,
        below_mu1_n: game.z1 < d.mu1_n,
        below_mu2_star: game.z2 < d.mu2_star,
    })
}

/// Predicted signs of `(du1, du2)` for an increase in `param`.
pub fn predicted_signs(param: Param, window: &Window) -> [Prediction; 2] {
    let w = window;
    let on_curve = !w.player1_concedes && !w.player2_concedes;
    if on_curve {
        return [Prediction::Unsigned, Prediction::Unsigned];
    }
    // A higher prior or patience for player i helps i when the opponent
    // concedes, and hurts the opponent when i concedes.
    let own_side = |i: usize| -> [Prediction; 2] {
        let opponent_concedes = if i == 0 { w.player2_concedes } else { w.player1_concedes };
        let mut out = [Prediction::Constant; 2];
        if opponent_concedes {
            out[i] = Prediction::Increase;
        } else {
            out[1 - i] = Prediction::Decrease;
        }
        out
    };
    // A costlier challenge shortens the challenge stretch and hurts
    // player 1. Higher seeing costs or court odds lower nu1*, which speeds
    // player 1's reputation on that stretch and helps him.
    let court = || -> [Prediction; 2] {
        [
            if w.player2_concedes && w.below_mu1_n {
                Prediction::Decrease
            } else {
                Prediction::Constant
            },
            if w.player1_concedes && w.below_mu2_star {
                Prediction::Increase
            } else {
                Prediction::Constant
            },
        ]
    };
    match param {
        Param::Z1 => own_side(0),
        Param::Z2 => own_side(1),
        Param::R1 => own_side(0).map(Prediction::flip),
        Param::R2 => own_side(1).map(Prediction::flip),
        Param::C1 => court(),
        Param::K2 | Param::W1 => court().map(Prediction::flip),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub param: Param,
    pub delta: f64,
    pub base: [f64; 2],
    pub perturbed: [f64; 2],
    pub change: [f64; 2],
    pub window: Window,
    /// Both evaluation points lie in the same window.
    pub same_window: bool,
    pub predicted: [Prediction; 2],
    pub violations: Vec<String>,
}

/// Re-solves at `game` and at `param + delta` and compares the payoff
/// changes with the predicted signs.
pub fn comp_statics_check(game: &OneSidedGame, param: Param, delta: f64) -> Result<MonotonicityReport, AnalysisError> {
    let moved = param.with(game, param.get(game) + delta);
    let base = onesided::solve(game)?;
    let after = onesided::solve(&moved)?;
    let window = window_of(game)?;
    let same_window = window == window_of(&moved)?;
    let mut predicted = predicted_signs(param, &window);
    if delta < 0.0 {
        predicted = predicted.map(Prediction::flip);
    }
    if !same_window {
        predicted = [Prediction::Unsigned; 2];
    }
    let change = [after.u1 - base.u1, after.u2 - base.u2];
    let violations = (0..2)
        .filter(|&i| !predicted[i].holds(change[i]))
        .map(|i| format!("u{} changed by {:e}, predicted {:?}", i + 1, change[i], predicted[i]))
        .collect();
    Ok(MonotonicityReport {
        param,
        delta,
        base: [base.u1, base.u2],
        perturbed: [after.u1, after.u2],
        change,
        window,
        same_window,
        predicted,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRegion {
    /// `z1 < tilde_mu1(z2)`: player 1 concedes, payoff flat.
    Conceding,
    /// `tilde_mu1(z2) <= z1 <= mu1_n`: sign given by the expression.
    ChallengeStretch,
    /// `z1 >= max(tilde_mu1(z2), mu1_n)`: payoff falls.
    QuietStretch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub region: GammaRegion,
    /// The closed-form slope expression as commonly displayed.
    pub displayed_expression: Option<f64>,
    /// `d log tilde_mu2(z1) / d gamma1` on the challenge stretch.
    pub log_slope: Option<f64>,
    pub finite_difference: f64,
    /// Both finite-difference points lie in the same region.
    pub same_region: bool,
}

fn gamma_region(game: &OneSidedGame) -> Result<GammaRegion, AnalysisError> {
    let curve = curve_for(game)?;
    let on_curve = curve.tilde_mu1(game.z2)?;
    Ok(if game.z1 < on_curve {
        GammaRegion::Conceding
    } else if game.z1 <= curve.derived.mu1_n {
        GammaRegion::ChallengeStretch
    } else {
        GammaRegion::QuietStretch
    })
}

/// Expression whose sign matches `du1/dgamma1` on the challenge stretch,
/// in the form usually displayed: the middle denominator reads
/// `1/z1 + gamma1 (1/nu - 1/z1)` and the last term has no normalization.
pub fn displayed_gamma_expression(game: &OneSidedGame) -> Result<f64, AnalysisError> {
    let curve = curve_for(game)?;
    let d = curve.derived;
    let (l1, l2, g, nu, m, z1) = (d.lambda1, d.lambda2, d.gamma1, d.nu1_star, d.mu2_star, game.z1);
    let mu2 = curve.tilde_mu2(z1)?;
    let gap = 1.0 / nu - 1.0 / z1;
    let power = m.powf((l1 - g) / l2);
    let inner = -mu2.ln() / l2 + gap / (1.0 / z1 + g * gap) + (1.0 - nu) / nu / l1 * power * ((g / l2) * m.ln() - 1.0);
    Ok(l2 / (g - l1) * inner)
}

/// `d log tilde_mu2(z1) / d gamma1` on the challenge stretch, from
/// differentiating the closed form of the curve.
pub fn log_curve_gamma_slope(game: &OneSidedGame) -> Result<f64, AnalysisError> {
    let curve = curve_for(game)?;
    let d = curve.derived;
    let (l1, l2, g, nu, m, z1) = (d.lambda1, d.lambda2, d.gamma1, d.nu1_star, d.mu2_star, game.z1);
    let mu2 = curve.tilde_mu2(z1)?;
    let gap = 1.0 / nu - 1.0 / z1;
    let power = m.powf((l1 - g) / l2);
    let norm = 1.0 + (1.0 - nu) / nu * (g / l1) * power;
    let inner = -mu2.ln() / l2
        + gap / (l1 / z1 + g * gap)
        + (1.0 - nu) / nu / l1 * power * ((g / l2) * m.ln() - 1.0) / norm;
    Ok(l2 / (g - l1) * inner)
}

/// Sign of the payoff response to `gamma1`, with a centered finite
/// difference of the solved payoff as the oracle.
pub fn gamma_sensitivity(game: &OneSidedGame) -> Result<SignReport, AnalysisError> {
    if game.gamma1 <= 0.0 {
        return Err(AnalysisError::NeedsChallenge);
    }
    let d = game.derive().map_err(OneSidedError::from)?;
    let tied = (d.lambda1 - d.gamma1).abs() < RATE_TIE_EPS * d.lambda1.max(d.gamma1);
    let region = gamma_region(game)?;
    let h = FD_STEP * game.gamma1;
    let up = OneSidedGame {
        gamma1: game.gamma1 + h,
        ..*game
    };
    let down = OneSidedGame {
        gamma1: game.gamma1 - h,
        ..*game
    };
    let same_region = gamma_region(&up)? == region && gamma_region(&down)? == region;
    let finite_difference = (onesided::solve(&up)?.u1 - onesided::solve(&down)?.u1) / (2.0 * h);
    let (displayed_expression, log_slope) = if region == GammaRegion::ChallengeStretch && !tied {
        (
            Some(displayed_gamma_expression(game)?),
            Some(log_curve_gamma_slope(game)?),
        )
    } else {
        (None, None)
    };
    Ok(SignReport {
        region,
        displayed_expression,
        log_slope,
        finite_difference,
        same_region,
    })
}
