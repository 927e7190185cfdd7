//! Closed-form solution and hitting times of `mu' = A mu + B mu^2`.
//!
//! Substituting `y = 1/mu` gives the linear equation `y' = -A y - B`, so
//! `1/mu(t) = e^{-At}/mu0 - B t h(-At)` with `h(x) = (e^x - 1)/x`. The
//! reciprocal is monotone in `t`, which makes blowup and exit checks
//! exact.

use thiserror::Error;

/// Below this magnitude of `A` the `A = 0` forms are used.
pub const LINEAR_EPS: f64 = 1e-9;

/// Slack allowed above 1 before a trajectory counts as leaving `(0, 1]`.
const UNIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BernoulliError {
    #[error("trajectory escapes to infinity at t* = {t_star}")]
    Blowup { t_star: f64 },
    #[error("trajectory leaves (0, 1] at t = {t_exit}")]
    LeavesUnitInterval { t_exit: f64 },
    #[error("target reputation is not reachable from the starting point")]
    Unreachable,
    #[error("reputation {0} is outside (0, 1]")]
    OutOfDomain(f64),
}

/// `mu' = linear mu + quadratic mu^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliDynamics {
    pub linear: f64,
    pub quadratic: f64,
}

/// `(e^x - 1)/x`, continuous at zero.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

impl BernoulliDynamics {
    pub fn new(linear: f64, quadratic: f64) -> Self {
        Self { linear, quadratic }
    }

    /// The same flow run backwards in time.
    pub fn reversed(&self) -> Self {
        Self::new(-self.linear, -self.quadratic)
    }

    pub fn rate(&self, mu: f64) -> f64 {
        mu * (self.linear + self.quadratic * mu)
    }

    /// Interior fixed point `-A/B`, if any.
    pub fn fixed_point(&self) -> Option<f64> {
        (self.quadratic != 0.0).then(|| -self.linear / self.quadratic)
    }

    /// `1/mu(t)` without any domain checks.
    pub fn reciprocal_at(&self, mu0: f64, t: f64) -> f64 {
        let a = self.linear;
        let b = self.quadratic;
        if a.abs() < LINEAR_EPS {
            1.0 / mu0 - b * t
        } else {
            (-a * t).exp() / mu0 - b * t * expm1_ratio(-a * t)
        }
    }

    /// Closed-form value without domain checks; callers must already know
    /// the trajectory stays in `(0, 1]` up to `t`.
    pub fn evolve_unchecked(&self, mu0: f64, t: f64) -> f64 {
        (1.0 / self.reciprocal_at(mu0, t)).min(1.0)
    }

    /// Reputation after time `t >= 0` starting from `mu0`.
    pub fn evolve(&self, mu0: f64, t: f64) -> Result<f64, BernoulliError> {
        if !(mu0 > 0.0 && mu0 <= 1.0) {
            return Err(BernoulliError::OutOfDomain(mu0));
        }
        if t == 0.0 {
            return Ok(mu0);
        }
        let y = self.reciprocal_at(mu0, t);
        if y <= 0.0 || !y.is_finite() {
            return Err(BernoulliError::Blowup {
                t_star: self.blowup_time(mu0).unwrap_or(t),
            });
        }
        if y < 1.0 - UNIT_SLACK {
            let t_exit = self.hitting_time(mu0, 1.0).unwrap_or(0.0);
            return Err(BernoulliError::LeavesUnitInterval { t_exit });
        }
        Ok((1.0 / y).min(1.0))
    }

    /// Time at which `1/mu` reaches zero, if it ever does going forward.
    pub fn blowup_time(&self, mu0: f64) -> Option<f64> {
        let a = self.linear;
        let b = self.quadratic;
        if b <= 0.0 && a.abs() < LINEAR_EPS {
            return None;
        }
        if a.abs() < LINEAR_EPS {
            return Some(1.0 / (b * mu0));
        }
        // e^{-A t*} (1/mu0 + B/A) = B/A.
        let ratio = 1.0 + a / (b * mu0);
        if b == 0.0 || ratio <= 0.0 {
            return None;
        }
        let t = ratio.ln() / a;
        (t > 0.0).then_some(t)
    }

    /// Elapsed time for the flow to carry `mu0` to `target`.
    pub fn hitting_time(&self, mu0: f64, target: f64) -> Result<f64, BernoulliError> {
        for v in [mu0, target] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(BernoulliError::OutOfDomain(v));
            }
        }
        if target == mu0 {
            return Ok(0.0);
        }
        let slope = self.rate(mu0);
        if slope == 0.0 || (slope > 0.0) != (target > mu0) {
            return Err(BernoulliError::Unreachable);
        }
        if let Some(p) = self.fixed_point() {
            let (lo, hi) = if mu0 < target { (mu0, target) } else { (target, mu0) };
            if p > lo && p <= hi {
                return Err(BernoulliError::Unreachable);
            }
        }
        let a = self.linear;
        let b = self.quadratic;
        let gap = 1.0 / mu0 - 1.0 / target;
        let t = if a.abs() < LINEAR_EPS {
            gap / b
        } else {
            let u = a * gap / (a / target + b);
            u.ln_1p() / a
        };
        if t.is_finite() && t >= 0.0 {
            Ok(t)
        } else {
            Err(BernoulliError::Unreachable)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponential_branch() {
        let dyn_ = BernoulliDynamics::new(2.0, 0.0);
        let mu = dyn_.evolve(0.1, 0.5).unwrap();
        assert!((mu - 0.1 * 1f64.exp()).abs() < 1e-14);
        assert!((mu - 0.271828).abs() < 1e-6);
        let t = dyn_.hitting_time(0.1, 1.0).unwrap();
        assert!((t - 0.5 * 10f64.ln()).abs() < 1e-14);
        assert!((t - 1.151293).abs() < 1e-6);
    }

    #[test]
    fn trivial_cases() {
        let dyn_ = BernoulliDynamics::new(-1.0, 2.0);
        assert_eq!(dyn_.evolve(0.3, 0.0).unwrap(), 0.3);
        for t in [0.1, 1.0, 7.0] {
            assert!((dyn_.evolve(0.5, t).unwrap() - 0.5).abs() < 1e-15);
        }
        assert_eq!(dyn_.hitting_time(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(
            dyn_.hitting_time(0.4, 0.6),
            Err(BernoulliError::Unreachable)
        );
        // Moving toward the fixed point never reaches it.
        assert_eq!(
            dyn_.hitting_time(0.7, 0.5),
            Err(BernoulliError::Unreachable)
        );
        let zero = BernoulliDynamics::new(0.0, 0.0);
        assert_eq!(zero.evolve(0.42, 3.0).unwrap(), 0.42);
    }

    #[test]
    fn blowup_and_exit_reported() {
        let grow = BernoulliDynamics::new(1.0, 0.0);
        assert!(matches!(
            grow.evolve(0.5, 1.0),
            Err(BernoulliError::LeavesUnitInterval { .. })
        ));
        let explode = BernoulliDynamics::new(0.0, 4.0);
        // 1/mu = 1/mu0 - B t vanishes at t = 1/(B mu0) = 0.5.
        match explode.evolve(0.5, 1.0) {
            Err(BernoulliError::Blowup { t_star }) => assert!((t_star - 0.5).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
        assert!(explode.evolve(0.1, 1.0).is_ok());
    }

    #[test]
    fn linear_branch_switch_is_continuous() {
        // Both sides of the switch agree with the A = 0 form to O(A t^2).
        let t = 1.3;
        let exact = 1.0 / (1.0 / 0.2 - 0.7 * t);
        let exact_time = (1.0 / 0.2 - 1.0 / 0.5) / 0.7;
        for a in [LINEAR_EPS * 0.999, LINEAR_EPS * 1.001] {
            for s in [1.0, -1.0] {
                let d = BernoulliDynamics::new(s * a, 0.7);
                let mu = d.evolve(0.2, t).unwrap();
                assert!((mu - exact).abs() < 4.0 * LINEAR_EPS * t * t, "{mu} {exact}");
                let hit = d.hitting_time(0.2, 0.5).unwrap();
                assert!((hit - exact_time).abs() < 4.0 * LINEAR_EPS * exact_time * exact_time);
            }
        }
    }

    #[test]
    fn reversed_flow_undoes_forward_flow() {
        let d = BernoulliDynamics::new(-0.5, 1.2);
        let forward = d.evolve(0.3, 0.8).unwrap();
        let back = d.reversed().evolve(forward, 0.8).unwrap();
        assert!((back - 0.3).abs() < 1e-14);
    }

    fn dynamics() -> impl Strategy<Value = BernoulliDynamics> {
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| BernoulliDynamics::new(a, b))
    }

    proptest! {
        #[test]
        fn semigroup(d in dynamics(), mu0 in 0.01f64..1.0, s in 0.0f64..1.5, t in 0.0f64..1.5) {
            if let (Ok(mid), Ok(whole)) = (d.evolve(mu0, s), d.evolve(mu0, s + t)) {
                if let Ok(two_step) = d.evolve(mid, t) {
                    prop_assert!((two_step - whole).abs() < 1e-12, "{} vs {}", two_step, whole);
                }
            }
        }

        #[test]
        fn round_trip(d in dynamics(), mu0 in 0.01f64..1.0, t in 0.0f64..3.0) {
            if let Ok(mu) = d.evolve(mu0, t) {
                if (mu - mu0).abs() > 1e-9 {
                    let back = d.hitting_time(mu0, mu).unwrap();
                    let again = d.evolve(mu0, back).unwrap();
                    prop_assert!((again - mu).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn derivative_matches_rate(d in dynamics(), mu0 in 0.05f64..0.95, t in 0.01f64..2.0) {
            let h = 1e-6;
            if let (Ok(lo), Ok(mid), Ok(hi)) = (d.evolve(mu0, t - h), d.evolve(mu0, t), d.evolve(mu0, t + h)) {
                let fd = (hi - lo) / (2.0 * h);
                prop_assert!((fd - d.rate(mid)).abs() < 1e-6 * (1.0 + d.rate(mid).abs()));
            }
        }
    }
}
