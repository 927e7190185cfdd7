//! Two-sided ultimatum games.
//!
//! When some player's arrival rate does not exceed its concession rate
//! the equilibrium is unique with a finite horizon. When both players
//! receive ultimatums faster than they concede, reputations need not
//! reach one: they may drift to zero (type 1) or be absorbed at the
//! challenge thresholds (type 2). This module classifies priors into
//! these regimes and builds representative profiles.
//!
//! Notation per player `i`: `theta_i = 1 - c_j` (the opponent challenges
//! while `mu_i < theta_i`), `phi_i = 1 - lambda_i/gamma_i` and
//! `p_i = phi_i nu_i`, the fixed points of the quiet and challenging
//! flows.

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{atom_to_reach, EngineError, Equilibrium, Shape, CURVE_TIE_EPS};
use crate::model::{ModelError, TwoSidedDerived, TwoSidedGame};
use crate::path::{Side, Trace};

/// Distance under which a prior or threshold counts as lying on a
/// region boundary.
pub const BOUNDARY_EPS: f64 = 1e-10;

/// Tolerance when matching a caller-supplied atom to the required one.
pub const ATOM_MATCH_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoSidedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("atom out of range: {0}")]
    AtomOutOfRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UniqueFiniteT,
    Type1Only,
    Type2Only,
    Type1AndType2,
    Boundary,
}

/// Time-0 concession by one player (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomChoice {
    pub player: u8,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub theta: f64,
    pub phi_star: Option<f64>,
    pub phi_nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeClass {
    pub regime: Regime,
    pub thresholds: [Thresholds; 2],
    /// For each player, the atoms `[0, max]` it may concede in a type-1
    /// profile; the upper end puts its reputation on its fixed line.
    pub type1_atoms: Option<[(f64, f64); 2]>,
    /// The atom required to land on the absorbing path, if type 2 exists.
    pub type2_atom: Option<AtomChoice>,
    pub note: String,
}

/// Per-player engine inputs.
pub fn sides_of(game: &TwoSidedGame, derived: &TwoSidedDerived) -> [Side; 2] {
    let prims = game.sides();
    let mut out = [Side {
        a: 0.0,
        z: 0.0,
        r: 0.0,
        lambda: 0.0,
        gamma: 0.0,
        nu_star: 0.0,
        c: 0.0,
        k: 0.0,
        w: 0.0,
    }; 2];
    for i in 0..2 {
        let p = prims[i];
        let consts = derived.players[i];
        out[i] = Side {
            a: p.a,
            z: p.z,
            r: p.r,
            lambda: consts.lambda,
            gamma: p.gamma,
            nu_star: consts.nu_star,
            c: p.c,
            k: p.k,
            w: p.w,
        };
    }
    out
}

struct Fast {
    theta: [f64; 2],
    phi: [f64; 2],
    p: [f64; 2],
}

fn fast_thresholds(derived: &TwoSidedDerived) -> Option<Fast> {
    let [a, b] = derived.players;
    if a.gamma > a.lambda && b.gamma > b.lambda {
        let phi = [a.phi_star?, b.phi_star?];
        Some(Fast {
            theta: [a.theta, b.theta],
            phi,
            p: [phi[0] * a.nu_star, phi[1] * b.nu_star],
        })
    } else {
        None
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= BOUNDARY_EPS
}

fn boundary_note(game: &TwoSidedGame, fast: &Fast) -> Option<String> {
    let z = [game.z1, game.z2];
    for i in 0..2 {
        for (name, level) in [("phi*nu*", fast.p[i]), ("phi*", fast.phi[i])] {
            if near(z[i], level) {
                return Some(format!("z{} lies on {name} of player {}", i + 1, i + 1));
            }
            if near(fast.theta[i], level) {
                return Some(format!("theta{} lies on {name} of player {}", i + 1, i + 1));
            }
        }
    }
    None
}

/// Steady challenge hazards at the thresholds; both must be positive.
pub fn steady_state_rates(game: &TwoSidedGame) -> Result<[f64; 2], TwoSidedError> {
    let derived = game.derive()?;
    let fast = fast_thresholds(&derived)
        .ok_or_else(|| TwoSidedError::RegimeMismatch("absorption needs gamma_i > lambda_i for both players".into()))?;
    let mut chi = [0.0; 2];
    for i in 0..2 {
        let pc = derived.players[i];
        chi[i] = pc.gamma - pc.lambda / (1.0 - pc.theta);
        if !(fast.theta[i] < fast.phi[i]) || chi[i] <= 0.0 {
            return Err(TwoSidedError::RegimeMismatch(format!(
                "steady challenge hazard of player {} is not positive (theta >= phi*)",
                i + 1
            )));
        }
    }
    Ok(chi)
}

/// Residual of the reputation balance at the thresholds under `chi`.
pub fn steady_residual(game: &TwoSidedGame, chi: [f64; 2]) -> Result<[f64; 2], TwoSidedError> {
    let derived = game.derive()?;
    Ok([0, 1].map(|i| {
        let pc = derived.players[i];
        pc.lambda - (1.0 - pc.theta) * pc.gamma + (1.0 - pc.theta) * chi[i]
    }))
}

/// The path toward the thresholds: a lower branch approached from below
/// while both challenge, and an upper branch approached from above while
/// neither does.
struct Dashed {
    lower: Option<Trace>,
    upper: Trace,
    theta: [f64; 2],
    low_end: [f64; 2],
    phi: [f64; 2],
}

impl Dashed {
    fn new(sides: [Side; 2], fast: &Fast) -> Result<Dashed, TwoSidedError> {
        let upper = Trace::build(sides, fast.theta, [false, false], true).map_err(EngineError::from)?;
        let lower = if fast.theta[0] > fast.p[0] && fast.theta[1] > fast.p[1] {
            Some(Trace::build(sides, fast.theta, [true, true], true).map_err(EngineError::from)?)
        } else {
            None
        };
        let low_end = if lower.is_some() { fast.p } else { fast.theta };
        Ok(Dashed {
            lower,
            upper,
            theta: fast.theta,
            low_end,
            phi: fast.phi,
        })
    }

    /// Trace and parameter of the path point where `player` has reputation `v`.
    fn locate(&self, player: usize, v: f64) -> Option<(&Trace, f64)> {
        if !(v > self.low_end[player] && v < self.phi[player]) {
            return None;
        }
        let trace = if v >= self.theta[player] {
            &self.upper
        } else {
            self.lower.as_ref()?
        };
        trace.time_to(player, v).map(|s| (trace, s))
    }

    /// Atom needed for `z` to land on the path, with the landing point.
    fn landing(&self, z: [f64; 2]) -> Option<(Option<AtomChoice>, &Trace, f64, [f64; 2])> {
        if z == self.theta {
            return Some((None, &self.upper, 0.0, z));
        }
        if let Some((trace, s)) = self.locate(0, z[0]) {
            let other = trace.mu(1, s);
            if (z[1] - other).abs() <= CURVE_TIE_EPS * other {
                return Some((None, trace, s, [z[0], other]));
            }
            if z[1] < other {
                let q = atom_to_reach(z[1], other);
                return Some((Some(AtomChoice { player: 2, q }), trace, s, [z[0], other]));
            }
        }
        if let Some((trace, s)) = self.locate(1, z[1]) {
            let other = trace.mu(0, s);
            if z[0] < other {
                let q = atom_to_reach(z[0], other);
                return Some((Some(AtomChoice { player: 1, q }), trace, s, [other, z[1]]));
            }
        }
        None
    }
}

/// Regime of a two-sided game with its priors.
pub fn classify(game: &TwoSidedGame) -> Result<RegimeClass, TwoSidedError> {
    let derived = game.derive()?;
    let thresholds = derived.players.map(|p| Thresholds {
        theta: p.theta,
        phi_star: p.phi_star,
        phi_nu: p.phi_star.map(|phi| phi * p.nu_star),
    });
    let Some(fast) = fast_thresholds(&derived) else {
        return Ok(RegimeClass {
            regime: Regime::UniqueFiniteT,
            thresholds,
            type1_atoms: None,
            type2_atom: None,
            note: "gamma_i <= lambda_i for some player".into(),
        });
    };
    if let Some(note) = boundary_note(game, &fast) {
        return Ok(RegimeClass {
            regime: Regime::Boundary,
            thresholds,
            type1_atoms: None,
            type2_atom: None,
            note,
        });
    }
    let z = [game.z1, game.z2];
    let type1 = z[0] < fast.p[0] && z[1] < fast.p[1];
    let type1_atoms = type1.then(|| [0, 1].map(|i| (0.0, atom_to_reach(z[i], fast.p[i]))));
    let mut type2_atom = None;
    let mut type2 = false;
    if fast.theta[0] < fast.phi[0] && fast.theta[1] < fast.phi[1] {
        let dashed = Dashed::new(sides_of(game, &derived), &fast)?;
        if let Some((atom, ..)) = dashed.landing(z) {
            type2 = true;
            type2_atom = Some(atom.unwrap_or(AtomChoice { player: 0, q: 0.0 }));
        }
    }
    let (regime, note) = match (type1, type2) {
        (true, true) => (Regime::Type1AndType2, String::new()),
        (true, false) => (Regime::Type1Only, String::new()),
        (false, true) => (Regime::Type2Only, String::new()),
        // Priors outside both infinite regions are only finite-T if the
        // backward trace actually reaches them; otherwise refuse.
        (false, false) => match Equilibrium::finite(sides_of(game, &derived), derived.d) {
            Err(EngineError::NoTermination) => (
                Regime::Boundary,
                "priors outside the covered regions: no finite-horizon path reaches them".into(),
            ),
            _ => (Regime::UniqueFiniteT, String::new()),
        },
    };
    Ok(RegimeClass {
        regime,
        thresholds,
        type1_atoms,
        type2_atom,
        note,
    })
}

/// Finite-horizon profile of a two-sided game.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedProfile {
    pub equilibrium: Equilibrium,
    pub t_end: f64,
    /// Last challenge time per player.
    pub t_challenge_end: [f64; 2],
    pub atoms: [f64; 2],
    pub payoffs: [f64; 2],
}

pub fn solve_finite(game: &TwoSidedGame) -> Result<TwoSidedProfile, TwoSidedError> {
    let class = classify(game)?;
    if class.regime != Regime::UniqueFiniteT {
        return Err(TwoSidedError::RegimeMismatch(format!(
            "regime is {:?}; a finite-horizon profile needs the unique finite regime",
            class.regime
        )));
    }
    let derived = game.derive()?;
    let equilibrium = match Equilibrium::finite(sides_of(game, &derived), derived.d) {
        Err(EngineError::NoTermination) => {
            return Err(TwoSidedError::RegimeMismatch(
                "neither reputation path reaches its prior".into(),
            ))
        }
        other => other?,
    };
    let Shape::Finite { horizon } = equilibrium.shape else {
        unreachable!("finite constructor returns a finite shape")
    };
    Ok(TwoSidedProfile {
        t_end: horizon,
        t_challenge_end: [equilibrium.challenge_end(0), equilibrium.challenge_end(1)],
        atoms: equilibrium.atoms,
        payoffs: [equilibrium.payoff(0), equilibrium.payoff(1)],
        equilibrium,
    })
}

/// Infinite-horizon profile (type 1 or type 2).
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteProfile {
    pub equilibrium: Equilibrium,
    pub atoms: [f64; 2],
    pub payoffs: [f64; 2],
}

impl InfiniteProfile {
    /// Payoff of `player` from conceding at a horizon where discounting
    /// leaves less than `1e-10` of value.
    pub fn truncated_payoff(&self, player: usize) -> Result<f64, TwoSidedError> {
        let r = self.equilibrium.sides[player].r;
        let horizon = (1e10f64).ln() / r;
        Ok(self.equilibrium.concede_payoff(player, horizon)?)
    }
}

fn apply_atom(z: [f64; 2], atom: Option<AtomChoice>) -> Result<([f64; 2], [f64; 2]), TwoSidedError> {
    let mut post = z;
    let mut atoms = [0.0; 2];
    if let Some(choice) = atom {
        if choice.player == 0 || choice.q == 0.0 {
            return Ok((post, atoms));
        }
        if !(choice.player == 1 || choice.player == 2) || !(0.0..1.0).contains(&choice.q) {
            return Err(TwoSidedError::AtomOutOfRange(format!(
                "atom must name player 1 or 2 with 0 <= Q < 1, got {choice:?}"
            )));
        }
        let i = usize::from(choice.player - 1);
        atoms[i] = choice.q;
        post[i] = z[i] / (z[i] + (1.0 - z[i]) * (1.0 - choice.q));
    }
    Ok((post, atoms))
}

fn require_fast(derived: &TwoSidedDerived) -> Result<Fast, TwoSidedError> {
    fast_thresholds(derived).ok_or_else(|| {
        TwoSidedError::RegimeMismatch("infinite-horizon profiles need gamma_i > lambda_i for both players".into())
    })
}

/// Profile in which both reputations drift to zero.
pub fn construct_type1(game: &TwoSidedGame, atom: Option<AtomChoice>) -> Result<InfiniteProfile, TwoSidedError> {
    let derived = game.derive()?;
    let fast = require_fast(&derived)?;
    let (mut post, atoms) = apply_atom([game.z1, game.z2], atom)?;
    for i in 0..2 {
        if near(post[i], fast.p[i]) {
            post[i] = fast.p[i];
        } else if post[i] > fast.p[i] {
            return Err(TwoSidedError::AtomOutOfRange(format!(
                "posterior of player {} is {} > phi*nu* = {}",
                i + 1,
                post[i],
                fast.p[i]
            )));
        }
    }
    let sides = sides_of(game, &derived);
    let modes = [post[1] < fast.theta[1], post[0] < fast.theta[0]];
    let trace = Trace::build(sides, post, modes, false).map_err(EngineError::from)?;
    let equilibrium = Equilibrium::drifting(sides, derived.d, trace, atoms);
    Ok(InfiniteProfile {
        payoffs: [equilibrium.payoff(0), equilibrium.payoff(1)],
        atoms,
        equilibrium,
    })
}

/// Profile absorbed at the thresholds. Without an explicit atom the
/// required one is used; an explicit atom must match it.
pub fn construct_type2(game: &TwoSidedGame, atom: Option<AtomChoice>) -> Result<InfiniteProfile, TwoSidedError> {
    let derived = game.derive()?;
    let fast = require_fast(&derived)?;
    if let Some(note) = boundary_note(game, &fast) {
        return Err(TwoSidedError::RegimeMismatch(format!("boundary case: {note}")));
    }
    let chi = steady_state_rates(game)?;
    let sides = sides_of(game, &derived);
    let dashed = Dashed::new(sides, &fast)?;
    let z = [game.z1, game.z2];
    let (required, trace, absorption, start) = dashed.landing(z).ok_or_else(|| {
        TwoSidedError::AtomOutOfRange("no single atom puts the priors on the absorbing path".into())
    })?;
    if let Some(choice) = atom {
        let wanted = required.unwrap_or(AtomChoice { player: 0, q: 0.0 });
        let same = if choice.q == 0.0 || wanted.q == 0.0 {
            (choice.q - wanted.q).abs() <= ATOM_MATCH_EPS
        } else {
            choice.player == wanted.player && (choice.q - wanted.q).abs() <= ATOM_MATCH_EPS
        };
        if !same {
            return Err(TwoSidedError::AtomOutOfRange(format!(
                "absorption requires atom {wanted:?}, got {choice:?}"
            )));
        }
    }
    let mut atoms = [0.0; 2];
    if let Some(choice) = required {
        atoms[usize::from(choice.player - 1)] = choice.q;
    }
    let equilibrium = Equilibrium::absorbing(sides, derived.d, trace.clone(), absorption, atoms, start, chi);
    Ok(InfiniteProfile {
        payoffs: [equilibrium.payoff(0), equilibrium.payoff(1)],
        atoms,
        equilibrium,
    })
}
