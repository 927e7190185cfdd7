//! Game primitives, derived constants and validation.
//!
//! Every rate is per unit time. Player indices are 1 and 2 in docs and
//! 0 and 1 in arrays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema tag required on every game document.
pub const SCHEMA: &str = "attrition-lab/v1";

/// Relative tolerance under which `gamma1` and `lambda1` count as equal
/// in closed forms that divide by their difference.
pub const RATE_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("malformed game document: {0}")]
    Malformed(String),
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidGame(msg.into())
}

fn check_unit_open(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("0 < {name} < 1 violated: {name} = {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} > 0 violated: {name} = {v}")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} >= 0 violated: {name} = {v}")))
    }
}

fn check_incompatible(a1: f64, a2: f64) -> Result<(), ModelError> {
    let d = a1 + a2 - 1.0;
    if d > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "D > 0 violated (a2 > 1 - a1 required): a1 = {a1}, a2 = {a2}, D = {d}"
        )))
    }
}

/// Court parameters for one challenger/defender pair: `w < c < 1` and
/// `0 < k < 1 - w`.
fn check_court(c: &str, k: &str, w: &str, cv: f64, kv: f64, wv: f64) -> Result<(), ModelError> {
    if !(wv.is_finite() && (0.0..1.0).contains(&wv)) {
        return Err(invalid(format!("0 <= {w} < 1 violated: {w} = {wv}")));
    }
    if !(cv.is_finite() && wv < cv && cv < 1.0) {
        return Err(invalid(format!(
            "{w} < {c} < 1 violated: {w} = {wv}, {c} = {cv}"
        )));
    }
    if !(kv.is_finite() && kv > 0.0 && kv < 1.0 - wv) {
        return Err(invalid(format!(
            "0 < {k} < 1 - {w} violated: {k} = {kv}, {w} = {wv}"
        )));
    }
    Ok(())
}

/// One-sided single-demand game: only player 1 receives ultimatum
/// opportunities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneSidedGame {
    pub a1: f64,
    pub a2: f64,
    pub z1: f64,
    pub z2: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma1: f64,
    /// Challenge cost, as a fraction of `D`.
    pub c1: f64,
    /// Seeing cost, as a fraction of `D`.
    pub k2: f64,
    /// Court win probability of an unjustified challenger.
    pub w1: f64,
}

impl OneSidedGame {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_unit_open("a1", self.a1)?;
        check_unit_open("a2", self.a2)?;
        check_incompatible(self.a1, self.a2)?;
        check_unit_open("z1", self.z1)?;
        check_unit_open("z2", self.z2)?;
        check_positive("r1", self.r1)?;
        check_positive("r2", self.r2)?;
        check_nonnegative("gamma1", self.gamma1)?;
        check_court("c1", "k2", "w1", self.c1, self.k2, self.w1)
    }

    /// Validated derived constants.
    pub fn derive(&self) -> Result<Derived, ModelError> {
        self.validate()?;
        Ok(Derived::from_rates(
            self.a1, self.a2, self.r1, self.r2, self.gamma1, self.c1, self.k2, self.w1,
        ))
    }

    /// The same game as a two-sided game whose player 2 never gets
    /// ultimatum opportunities. `c2`, `k1`, `w2` are inert fillers.
    pub fn as_two_sided(&self) -> TwoSidedGame {
        TwoSidedGame {
            a1: self.a1,
            a2: self.a2,
            z1: self.z1,
            z2: self.z2,
            r1: self.r1,
            r2: self.r2,
            gamma1: self.gamma1,
            gamma2: 0.0,
            c1: self.c1,
            c2: 0.5,
            k1: 0.25,
            k2: self.k2,
            w1: self.w1,
            w2: 0.25,
        }
    }
}

/// Constants of a one-sided game that do not depend on the priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub d: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    /// Player 1 challenges while player 2's reputation is below this.
    pub mu2_star: f64,
    /// Posterior on a challenger that leaves the defender indifferent.
    pub nu1_star: f64,
    /// `1 - lambda1/gamma1`; `None` when `gamma1 = 0`.
    pub phi1_star: Option<f64>,
    /// Player 1's reputation at the moment player 2's reaches `mu2_star`.
    pub mu1_n: f64,
}

impl Derived {
    /// Constants for an arbitrary demand pair; no validation.
    #[allow(clippy::too_many_arguments)]
    pub fn from_rates(
        a1: f64,
        a2: f64,
        r1: f64,
        r2: f64,
        gamma1: f64,
        c1: f64,
        k2: f64,
        w1: f64,
    ) -> Derived {
        let d = a1 + a2 - 1.0;
        let lambda1 = r2 * (1.0 - a1) / d;
        let lambda2 = r1 * (1.0 - a2) / d;
        let mu2_star = 1.0 - c1;
        let nu1_star = 1.0 - k2 / (1.0 - w1);
        let phi1_star = (gamma1 > 0.0).then(|| 1.0 - lambda1 / gamma1);
        let mu1_n = no_challenge_branch(lambda1, lambda2, gamma1, mu2_star);
        Derived {
            d,
            lambda1,
            lambda2,
            gamma1,
            mu2_star,
            nu1_star,
            phi1_star,
            mu1_n,
        }
    }

    pub fn challenge_enabled(&self) -> bool {
        self.gamma1 > 0.0
    }

    /// Lower edge of the domain of player 2's curve, `max(0, phi1* nu1*)`.
    pub fn asymptote(&self) -> f64 {
        self.phi1_star
            .map_or(0.0, |phi| (phi * self.nu1_star).max(0.0))
    }
}

/// Player 1's reputation on the no-challenge stretch of the curve, as a
/// function of player 2's reputation `mu2 >= mu2_star`.
pub(crate) fn no_challenge_branch(lambda1: f64, lambda2: f64, gamma1: f64, mu2: f64) -> f64 {
    let drift = lambda1 - gamma1;
    let ln_mu2 = mu2.ln();
    if drift.abs() < RATE_TIE_EPS * lambda1.max(gamma1) {
        return 1.0 / (1.0 - (gamma1 / lambda2) * ln_mu2);
    }
    let exponent = -drift / lambda2;
    drift / (lambda1 * (exponent * ln_mu2).exp_m1() + drift)
}

/// Two-sided game: both players may receive ultimatum opportunities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSidedGame {
    pub a1: f64,
    pub a2: f64,
    pub z1: f64,
    pub z2: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub k1: f64,
    pub k2: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Per-player constants of a two-sided game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlayerConstants {
    pub lambda: f64,
    pub gamma: f64,
    /// Threshold on this player's reputation: the opponent challenges
    /// while this player's reputation is below it (`1 - c_opponent`).
    pub theta: f64,
    /// Posterior on this player as a challenger that leaves the opponent
    /// indifferent (`1 - k_opponent/(1 - w_self)`).
    pub nu_star: f64,
    /// `1 - lambda/gamma`; `None` when `gamma = 0`.
    pub phi_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSidedDerived {
    pub d: f64,
    pub players: [PlayerConstants; 2],
}

impl TwoSidedGame {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_unit_open("a1", self.a1)?;
        check_unit_open("a2", self.a2)?;
        check_incompatible(self.a1, self.a2)?;
        check_unit_open("z1", self.z1)?;
        check_unit_open("z2", self.z2)?;
        check_positive("r1", self.r1)?;
        check_positive("r2", self.r2)?;
        check_nonnegative("gamma1", self.gamma1)?;
        check_nonnegative("gamma2", self.gamma2)?;
        check_court("c1", "k2", "w1", self.c1, self.k2, self.w1)?;
        check_court("c2", "k1", "w2", self.c2, self.k1, self.w2)
    }

    pub fn derive(&self) -> Result<TwoSidedDerived, ModelError> {
        self.validate()?;
        let d = self.a1 + self.a2 - 1.0;
        let lambda1 = self.r2 * (1.0 - self.a1) / d;
        let lambda2 = self.r1 * (1.0 - self.a2) / d;
        let player = |lambda: f64, gamma: f64, c_opp: f64, k_opp: f64, w_self: f64| {
            PlayerConstants {
                lambda,
                gamma,
                theta: 1.0 - c_opp,
                nu_star: 1.0 - k_opp / (1.0 - w_self),
                phi_star: (gamma > 0.0).then(|| 1.0 - lambda / gamma),
            }
        };
        Ok(TwoSidedDerived {
            d,
            players: [
                player(lambda1, self.gamma1, self.c2, self.k2, self.w1),
                player(lambda2, self.gamma2, self.c1, self.k1, self.w2),
            ],
        })
    }

    /// Per-player primitives in index order.
    pub fn sides(&self) -> [PlayerPrimitives; 2] {
        [
            PlayerPrimitives {
                a: self.a1,
                z: self.z1,
                r: self.r1,
                gamma: self.gamma1,
                c: self.c1,
                k: self.k1,
                w: self.w1,
            },
            PlayerPrimitives {
                a: self.a2,
                z: self.z2,
                r: self.r2,
                gamma: self.gamma2,
                c: self.c2,
                k: self.k2,
                w: self.w2,
            },
        ]
    }

    pub fn with_priors(&self, z1: f64, z2: f64) -> TwoSidedGame {
        TwoSidedGame { z1, z2, ..*self }
    }
}

/// Primitives of one player, indexed by role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerPrimitives {
    pub a: f64,
    pub z: f64,
    pub r: f64,
    pub gamma: f64,
    /// Cost this player pays when challenging.
    pub c: f64,
    /// Cost this player pays when seeing a challenge.
    pub k: f64,
    /// Court win probability of this player as an unjustified challenger.
    pub w: f64,
}

/// One-sided game where each player's justified type may hold one of
/// several demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiDemandGame {
    #[serde(rename = "A1")]
    pub demands1: Vec<f64>,
    #[serde(rename = "A2")]
    pub demands2: Vec<f64>,
    pub pi1: Vec<f64>,
    pub pi2: Vec<f64>,
    pub z1: f64,
    pub z2: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma1: f64,
    pub c1: f64,
    pub k2: f64,
    pub w1: f64,
}

fn check_grid(name: &str, grid: &[f64], prior_name: &str, prior: &[f64]) -> Result<(), ModelError> {
    if grid.is_empty() {
        return Err(invalid(format!("{name} must be nonempty")));
    }
    for (i, &a) in grid.iter().enumerate() {
        check_unit_open(&format!("{name}[{i}]"), a)?;
        if i > 0 && a <= grid[i - 1] {
            return Err(invalid(format!("{name} must be strictly increasing")));
        }
    }
    if prior.len() != grid.len() {
        return Err(invalid(format!(
            "{prior_name} must have one entry per element of {name}"
        )));
    }
    if let Some(p) = prior.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(invalid(format!("{prior_name} entries > 0 violated: {p}")));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!(
            "{prior_name} must sum to 1 within 1e-12: sum = {total}"
        )));
    }
    Ok(())
}

impl MultiDemandGame {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_grid("A1", &self.demands1, "pi1", &self.pi1)?;
        check_grid("A2", &self.demands2, "pi2", &self.pi2)?;
        let (min1, max1) = (self.demands1[0], *self.demands1.last().unwrap());
        let (min2, max2) = (self.demands2[0], *self.demands2.last().unwrap());
        if max1 + min2 <= 1.0 || max2 + min1 <= 1.0 {
            return Err(invalid(
                "max A_i + min A_j > 1 violated: maximal demands must be incompatible",
            ));
        }
        check_unit_open("z1", self.z1)?;
        check_unit_open("z2", self.z2)?;
        check_positive("r1", self.r1)?;
        check_positive("r2", self.r2)?;
        check_nonnegative("gamma1", self.gamma1)?;
        check_court("c1", "k2", "w1", self.c1, self.k2, self.w1)
    }

    /// Constants of the single-demand game played after demands `a1`, `a2`.
    pub fn pair(&self, a1: f64, a2: f64) -> Derived {
        Derived::from_rates(a1, a2, self.r1, self.r2, self.gamma1, self.c1, self.k2, self.w1)
    }

    /// The single-demand game after demands `(a1, a2)` with posteriors `(x, y)`.
    pub fn subgame(&self, a1: f64, a2: f64, x: f64, y: f64) -> OneSidedGame {
        OneSidedGame {
            a1,
            a2,
            z1: x,
            z2: y,
            r1: self.r1,
            r2: self.r2,
            gamma1: self.gamma1,
            c1: self.c1,
            k2: self.k2,
            w1: self.w1,
        }
    }
}

/// Any game document accepted by the tools.
#[derive(Debug, Clone, PartialEq)]
pub enum GameDocument {
    OneSided(OneSidedGame),
    TwoSided(TwoSidedGame),
    MultiDemand(MultiDemandGame),
}

impl GameDocument {
    /// Parses and validates a versioned game document.
    ///
    /// The variant is chosen by its distinguishing fields: `A1` marks a
    /// multi-demand game and `gamma2` a two-sided one.
    pub fn from_json(text: &str) -> Result<GameDocument, ModelError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let object = value
            .as_object_mut()
            .ok_or_else(|| ModelError::Malformed("top level must be an object".into()))?;
        match object.remove("schema") {
            Some(serde_json::Value::String(tag)) if tag == SCHEMA => {}
            Some(other) => {
                return Err(ModelError::Malformed(format!(
                    "unsupported schema {other}; expected \"{SCHEMA}\""
                )))
            }
            None => {
                return Err(ModelError::Malformed(format!(
                    "missing schema tag \"{SCHEMA}\""
                )))
            }
        }
        let parse_err = |e: serde_json::Error| ModelError::Malformed(e.to_string());
        let doc = if object.contains_key("A1") {
            GameDocument::MultiDemand(serde_json::from_value(value).map_err(parse_err)?)
        } else if object.contains_key("gamma2") {
            GameDocument::TwoSided(serde_json::from_value(value).map_err(parse_err)?)
        } else {
            GameDocument::OneSided(serde_json::from_value(value).map_err(parse_err)?)
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            GameDocument::OneSided(g) => g.validate(),
            GameDocument::TwoSided(g) => g.validate(),
            GameDocument::MultiDemand(g) => g.validate(),
        }
    }

    /// Serializes with the schema tag first.
    pub fn to_json(&self) -> serde_json::Value {
        let body = match self {
            GameDocument::OneSided(g) => serde_json::to_value(g),
            GameDocument::TwoSided(g) => serde_json::to_value(g),
            GameDocument::MultiDemand(g) => serde_json::to_value(g),
        }
        .expect("game structs serialize");
        let mut out = serde_json::Map::new();
        out.insert("schema".into(), SCHEMA.into());
        if let serde_json::Value::Object(fields) = body {
            out.extend(fields);
        }
        serde_json::Value::Object(out)
    }
}

/// The reference game used throughout the test suites.
pub fn reference_game() -> OneSidedGame {
    OneSidedGame {
        a1: 0.6,
        a2: 0.6,
        z1: 0.1,
        z2: 0.1,
        r1: 1.0,
        r2: 1.0,
        gamma1: 0.5,
        c1: 0.5,
        k2: 0.3,
        w1: 0.2,
    }
}
