//! One-sided single-demand game: the coevolution curve, time-0 atoms,
//! the equilibrium profile and the hazard schedule.
//!
//! The profile is built on the shared two-player engine with player 2
//! never challenging, so the two-sided solver with `gamma2 = 0` produces
//! the same numbers bit for bit.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{atom_to_reach, EngineError, Equilibrium, Shape, CURVE_TIE_EPS};
use crate::model::{no_challenge_branch, Derived, ModelError, OneSidedGame, RATE_TIE_EPS};
use crate::twosided;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OneSidedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("curve evaluated outside its domain at {0}")]
    Domain(f64),
}

/// Locus of reputation pairs that reach one at the same time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoevolutionCurve {
    pub derived: Derived,
}

impl CoevolutionCurve {
    pub fn new(derived: Derived) -> Self {
        Self { derived }
    }

    fn rates_tied(&self) -> bool {
        let d = &self.derived;
        (d.lambda1 - d.gamma1).abs() < RATE_TIE_EPS * d.lambda1.max(d.gamma1)
    }

    /// Player 1's reputation on the curve when player 2's is `mu2`.
    pub fn tilde_mu1(&self, mu2: f64) -> Result<f64, OneSidedError> {
        let d = &self.derived;
        if !(mu2 > 0.0 && mu2 <= 1.0) {
            return Err(OneSidedError::Domain(mu2));
        }
        if !d.challenge_enabled() || mu2 >= d.mu2_star {
            return Ok(no_challenge_branch(d.lambda1, d.lambda2, d.gamma1, mu2));
        }
        let g = d.gamma1;
        let extra = g / d.nu1_star - g;
        let log_ratio = (mu2 / d.mu2_star).ln();
        if self.rates_tied() {
            let inv = 1.0 - (g / d.lambda2) * d.mu2_star.ln() - (g / d.nu1_star) * log_ratio / d.lambda2;
            return Ok(1.0 / inv);
        }
        let drift = d.lambda1 - g;
        let exponent = -drift / d.lambda2;
        let den = d.lambda1 * (exponent * mu2.ln()).exp_m1() + extra * (exponent * log_ratio).exp_m1() + drift;
        Ok(drift / den)
    }

    /// Player 2's reputation on the curve when player 1's is `mu1`.
    pub fn tilde_mu2(&self, mu1: f64) -> Result<f64, OneSidedError> {
        let d = &self.derived;
        if !(mu1 > self.derived.asymptote() && mu1 <= 1.0) {
            return Err(OneSidedError::Domain(mu1));
        }
        let drift = d.lambda1 - d.gamma1;
        let tied = self.rates_tied();
        if mu1 >= d.mu1_n {
            let log = if tied {
                -(d.lambda2 / d.lambda1) * (1.0 / mu1 - 1.0)
            } else {
                -(d.lambda2 / drift) * ((drift / d.lambda1) * (1.0 / mu1 - 1.0)).ln_1p()
            };
            return Ok(log.exp().min(1.0));
        }
        let b = d.gamma1 / d.nu1_star;
        let gap = 1.0 / mu1 - 1.0 / d.mu1_n;
        let elapsed = if tied {
            gap / b
        } else {
            (drift * gap / (drift / d.mu1_n + b)).ln_1p() / drift
        };
        if !elapsed.is_finite() {
            return Err(OneSidedError::Domain(mu1));
        }
        Ok(d.mu2_star * (-d.lambda2 * elapsed).exp())
    }
}

/// Time-0 concessions that put the priors on the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomSplit {
    pub q1: f64,
    pub q2: f64,
    /// 1 or 2 for the conceding player; `None` when the priors lie on the curve.
    pub loser: Option<u8>,
}

pub fn initial_atoms(game: &OneSidedGame, curve: &CoevolutionCurve) -> Result<AtomSplit, OneSidedError> {
    let target = curve.tilde_mu1(game.z2)?;
    if (game.z1 - target).abs() <= CURVE_TIE_EPS * target {
        return Ok(AtomSplit {
            q1: 0.0,
            q2: 0.0,
            loser: None,
        });
    }
    if game.z1 < target {
        Ok(AtomSplit {
            q1: atom_to_reach(game.z1, target),
            q2: 0.0,
            loser: Some(1),
        })
    } else {
        let target2 = curve.tilde_mu2(game.z1)?;
        Ok(AtomSplit {
            q1: 0.0,
            q2: atom_to_reach(game.z2, target2),
            loser: Some(2),
        })
    }
}

/// Solved one-sided equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    pub game: OneSidedGame,
    pub derived: Derived,
    pub equilibrium: Equilibrium,
    /// Time at which both reputations reach one.
    pub t_end: f64,
    /// Last challenge time of player 1.
    pub t_challenge_end: f64,
    pub q1: f64,
    pub q2: f64,
    pub u1: f64,
    pub u2: f64,
}

/// Scalar summary for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "T1")]
    pub t_challenge_end: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q2")]
    pub q2: f64,
    pub u1: f64,
    pub u2: f64,
    pub mu1_0: f64,
    pub mu2_0: f64,
}

pub fn solve(game: &OneSidedGame) -> Result<EquilibriumProfile, OneSidedError> {
    let derived = game.derive()?;
    let two = game.as_two_sided();
    let two_derived = two.derive().map_err(OneSidedError::Model)?;
    let equilibrium = Equilibrium::finite(twosided::sides_of(&two, &two_derived), two_derived.d)?;
    let Shape::Finite { horizon } = equilibrium.shape else {
        unreachable!("finite constructor returns a finite shape")
    };
    Ok(EquilibriumProfile {
        game: *game,
        derived,
        t_end: horizon,
        t_challenge_end: equilibrium.challenge_end(0),
        q1: equilibrium.atoms[0],
        q2: equilibrium.atoms[1],
        u1: equilibrium.payoff(0),
        u2: equilibrium.payoff(1),
        equilibrium,
    })
}

impl EquilibriumProfile {
    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            t_end: self.t_end,
            t_challenge_end: self.t_challenge_end,
            q1: self.q1,
            q2: self.q2,
            u1: self.u1,
            u2: self.u2,
            mu1_0: self.equilibrium.start[0],
            mu2_0: self.equilibrium.start[1],
        }
    }

    pub fn mu1(&self, t: f64) -> f64 {
        self.equilibrium.mu(0, t)
    }
    pub fn mu2(&self, t: f64) -> f64 {
        self.equilibrium.mu(1, t)
    }
    /// Cumulative concession of strategic player 1.
    pub fn f1(&self, t: f64) -> f64 {
        self.equilibrium.concession_cdf(0, t)
    }
    pub fn f2(&self, t: f64) -> f64 {
        self.equilibrium.concession_cdf(1, t)
    }
    /// Cumulative challenge of strategic player 1.
    pub fn g1(&self, t: f64) -> f64 {
        self.equilibrium.challenge_cdf(0, t)
    }
    /// Probability that strategic player 2 yields to a challenge at `t`.
    pub fn q2(&self, t: f64) -> f64 {
        self.equilibrium.yield_probability(1, t)
    }
    pub fn chi1(&self, t: f64) -> f64 {
        self.equilibrium.challenge_hazard(0, t)
    }
    pub fn kappa(&self, player: usize, t: f64) -> f64 {
        self.equilibrium.concession_hazard(player, t)
    }

    /// Payoff of player `i` (1 or 2) from conceding at `t`.
    pub fn deviation_payoff_concede(&self, player: u8, t: f64) -> Result<f64, OneSidedError> {
        Ok(self.equilibrium.concede_payoff(usize::from(player - 1), t)?)
    }

    /// Payoff of player 1 from challenging at `t`.
    pub fn deviation_payoff_challenge(&self, t: f64) -> Result<f64, OneSidedError> {
        Ok(self
            .equilibrium
            .challenge_payoff(0, t)?
            .expect("challenge payoff requires gamma1 > 0"))
    }

    pub fn hazard_schedule(&self) -> HazardSchedule {
        hazard_schedule(self)
    }
}

/// A located discontinuity of an overall hazard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardJump {
    pub at: f64,
    pub label: &'static str,
    pub challenge_left: f64,
    pub challenge_right: f64,
    pub resolution_left: f64,
    pub resolution_right: f64,
}

/// Overall hazards of challenging and of resolution across both types.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardSchedule {
    pub t_end: f64,
    pub t_challenge_end: f64,
    pub gamma1: f64,
    pub nu1_star: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub jumps: Vec<HazardJump>,
    equilibrium: Equilibrium,
}

impl HazardSchedule {
    fn challenge_with(&self, t: f64, challenge_phase: bool) -> f64 {
        if t >= self.t_end {
            return self.gamma1;
        }
        let mu1 = self.equilibrium.mu(0, t);
        if challenge_phase {
            mu1 * self.gamma1 / self.nu1_star
        } else {
            mu1 * self.gamma1
        }
    }

    /// Overall challenge hazard at `t` (right-continuous).
    pub fn challenge(&self, t: f64) -> f64 {
        self.challenge_with(t, t < self.t_challenge_end)
    }

    /// Overall resolution hazard at `t` (right-continuous).
    pub fn resolution(&self, t: f64) -> f64 {
        if t >= self.t_end {
            return self.gamma1;
        }
        self.challenge(t) + self.lambda1 + self.lambda2
    }
}

pub fn hazard_schedule(profile: &EquilibriumProfile) -> HazardSchedule {
    let d = &profile.derived;
    let mut schedule = HazardSchedule {
        t_end: profile.t_end,
        t_challenge_end: profile.t_challenge_end,
        gamma1: d.gamma1,
        nu1_star: d.nu1_star,
        lambda1: d.lambda1,
        lambda2: d.lambda2,
        jumps: Vec::new(),
        equilibrium: profile.equilibrium.clone(),
    };
    let t1 = profile.t_challenge_end;
    if t1 > 0.0 && d.challenge_enabled() {
        let left = schedule.challenge_with(t1, true);
        let right = schedule.challenge_with(t1, false);
        let base = d.lambda1 + d.lambda2;
        schedule.jumps.push(HazardJump {
            at: t1,
            label: "T1",
            challenge_left: left,
            challenge_right: right,
            resolution_left: left + base,
            resolution_right: right + base,
        });
    }
    let t = profile.t_end;
    schedule.jumps.push(HazardJump {
        at: t,
        label: "T",
        challenge_left: d.gamma1,
        challenge_right: d.gamma1,
        resolution_left: d.gamma1 + d.lambda1 + d.lambda2,
        resolution_right: d.gamma1,
    });
    schedule
}
