//! Acceptance suite. Each criterion prints one PASS or FAIL line with the
//! measured quantities; the process fails if any criterion fails.
//!
//! Every tolerance is a named constant next to the criterion that uses it.

use std::time::{Duration, Instant};

use attrition_lab::analysis::{self, LimitCase, Param};
use attrition_lab::bernoulli::BernoulliDynamics;
use attrition_lab::equilibrium::Equilibrium;
use attrition_lab::model::{reference_game, MultiDemandGame, OneSidedGame, TwoSidedGame};
use attrition_lab::montecarlo::{self, Outcome, SimConfig};
use attrition_lab::multidemand::{self, MultiDemandSolution, SolverOptions};
use attrition_lab::onesided::{self, CoevolutionCurve};
use attrition_lab::sampling::{random_one_sided, random_two_sided, GameRng};
use attrition_lab::twosided::{self, Regime};

type Verdict = Result<String, String>;

/// Collects failures while a criterion runs so every check is reported.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        } else if !ok {
            self.failures.push(String::new());
        }
    }

    fn finish(self, summary: String) -> Verdict {
        if self.failures.is_empty() {
            Ok(summary)
        } else {
            let shown: Vec<&str> = self.failures.iter().filter(|f| !f.is_empty()).map(String::as_str).collect();
            Err(format!("{summary}; {} failures: {}", self.failures.len(), shown.join(" | ")))
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Closed-form reputation dynamics against numeric integration.

const C1_CASES: usize = 1000;
const C1_RK4_STEPS: usize = 10_000;
const C1_EVOLVE_TOL: f64 = 1e-8;
const C1_ROUND_TRIP_TOL: f64 = 1e-10;
const C1_BUDGET: Duration = Duration::from_secs(10);

fn rk4(a: f64, b: f64, mu0: f64, t: f64) -> f64 {
    let f = |m: f64| a * m + b * m * m;
    let h = t / C1_RK4_STEPS as f64;
    let mut m = mu0;
    for _ in 0..C1_RK4_STEPS {
        let k1 = f(m);
        let k2 = f(m + 0.5 * h * k1);
        let k3 = f(m + 0.5 * h * k2);
        let k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    m
}

fn criterion_1() -> Verdict {
    let mut rng = GameRng::new(1);
    let mut checks = Checks::default();
    let (mut worst_evolve, mut worst_trip, mut trips, mut rejected) = (0.0f64, 0.0f64, 0, 0);
    let mut accepted = 0;
    while accepted < C1_CASES {
        // Every tenth case sits on a degenerate coefficient.
        let mut a = rng.uniform(-5.0, 5.0);
        let mut b = rng.uniform(-5.0, 5.0);
        match accepted % 20 {
            0 => a = 0.0,
            10 => b = 0.0,
            _ => {}
        }
        let mu0 = rng.uniform(0.01, 1.0);
        let t = rng.uniform(0.01, 2.0);
        let dynamics = BernoulliDynamics::new(a, b);
        let Ok(mu) = dynamics.evolve(mu0, t) else {
            rejected += 1;
            continue;
        };
        accepted += 1;
        let numeric = rk4(a, b, mu0, t);
        let err = (mu - numeric).abs();
        worst_evolve = worst_evolve.max(err);
        checks.require(err <= C1_EVOLVE_TOL, || format!("A={a} B={b} mu0={mu0} t={t}: {mu} vs {numeric}"));
        if (mu - mu0).abs() > 1e-9 {
            trips += 1;
            let trip = dynamics
                .hitting_time(mu0, mu)
                .and_then(|back| dynamics.evolve(mu0, back))
                .map(|again| (again - mu).abs())
                .unwrap_or(f64::INFINITY);
            worst_trip = worst_trip.max(trip);
            checks.require(trip < C1_ROUND_TRIP_TOL, || format!("round trip A={a} B={b} mu0={mu0} -> {mu}: {trip:e}"));
        }
    }
    checks.finish(format!(
        "{C1_CASES} dynamics ({rejected} leaving (0,1] redrawn): max |closed - RK4| = {worst_evolve:.2e} (tol {C1_EVOLVE_TOL:e}); \
         {trips} round trips, max error {worst_trip:.2e} (tol {C1_ROUND_TRIP_TOL:e})"
    ))
}

// ---------------------------------------------------------------------------
// 2. Reduction to the game without ultimatums.

const C2_POINTS: usize = 1000;
const C2_CURVE_TOL: f64 = 1e-10;
const C2_ORACLE_TOL: f64 = 1e-12;
const C2_SWEEP: [f64; 3] = [1e-3, 1e-4, 1e-5];
const C2_SWEEP_TOL: f64 = 1e-3;
/// Largest allowed ratio of successive sweep gaps (first order gives 0.1).
const C2_ORDER_RATIO: f64 = 0.2;
const C2_GAMES: usize = 20;

/// Payoffs of the plain war of attrition: the player who needs longer to
/// reach certainty concedes at time 0 just enough to equalize the times.
fn plain_attrition_payoffs(g: &OneSidedGame) -> [f64; 2] {
    let d = g.a1 + g.a2 - 1.0;
    let rate1 = g.r2 * (1.0 - g.a1) / d;
    let rate2 = g.r1 * (1.0 - g.a2) / d;
    let time1 = -g.z1.ln() / rate1;
    let time2 = -g.z2.ln() / rate2;
    let after_atom = |z: f64, target: f64| 1.0 - z * (1.0 - target) / (target * (1.0 - z));
    if time1 > time2 {
        let q1 = after_atom(g.z1, g.z2.powf(rate1 / rate2));
        let conceded = (1.0 - g.z1) * q1;
        [1.0 - g.a2, conceded * g.a2 + (1.0 - conceded) * (1.0 - g.a1)]
    } else if time2 > time1 {
        let q2 = after_atom(g.z2, g.z1.powf(rate2 / rate1));
        let conceded = (1.0 - g.z2) * q2;
        [conceded * g.a1 + (1.0 - conceded) * (1.0 - g.a2), 1.0 - g.a1]
    } else {
        [1.0 - g.a2, 1.0 - g.a1]
    }
}

fn criterion_2() -> Verdict {
    let mut rng = GameRng::new(2);
    let mut games = vec![reference_game()];
    games.extend((1..C2_GAMES).map(|_| random_one_sided(&mut rng)));
    let mut checks = Checks::default();
    let (mut worst_curve, mut worst_oracle, mut worst_sweep, mut worst_limit) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (n, g) in games.iter().enumerate() {
        let plain = OneSidedGame { gamma1: 0.0, ..*g };
        let derived = plain.derive().map_err(|e| e.to_string())?;
        let curve = CoevolutionCurve::new(derived);
        let exponent = derived.lambda1 / derived.lambda2;
        for k in 1..=C2_POINTS {
            let mu2 = k as f64 / C2_POINTS as f64;
            let got = curve.tilde_mu1(mu2).map_err(|e| e.to_string())?;
            let err = (got - mu2.powf(exponent)).abs();
            worst_curve = worst_curve.max(err);
            checks.require(err <= C2_CURVE_TOL, || format!("curve at mu2={mu2}: {err:e}"));
        }
        let oracle = plain_attrition_payoffs(&plain);
        let base = onesided::solve(&plain).map_err(|e| e.to_string())?;
        for (i, u) in [base.u1, base.u2].into_iter().enumerate() {
            let err = (u - oracle[i]).abs();
            worst_oracle = worst_oracle.max(err);
            checks.require(err <= C2_ORACLE_TOL, || format!("gamma1=0 u{} {u} vs {}", i + 1, oracle[i]));
        }
        let mut gaps = [0.0f64; C2_SWEEP.len()];
        for (step, gamma1) in C2_SWEEP.into_iter().enumerate() {
            let p = onesided::solve(&OneSidedGame { gamma1, ..*g }).map_err(|e| e.to_string())?;
            gaps[step] = (p.u1 - oracle[0]).abs().max((p.u2 - oracle[1]).abs());
        }
        worst_sweep = worst_sweep.max(gaps[0]);
        let label = if n == 0 { "P0".to_string() } else { format!("game {n}") };
        if n == 0 {
            for (gamma1, gap) in C2_SWEEP.into_iter().zip(gaps) {
                checks.require(gap <= C2_SWEEP_TOL, || format!("P0 gamma1={gamma1}: {gap:e}"));
            }
        } else {
            // The gap is O(gamma1); each tenfold step must shrink it accordingly.
            for w in gaps.windows(2) {
                checks.require(w[1] <= C2_ORDER_RATIO * w[0] + C2_ORACLE_TOL, || {
                    format!("{label}: gap {:e} -> {:e} is not first order", w[0], w[1])
                });
            }
        }
        let last = gaps[C2_SWEEP.len() - 1];
        worst_limit = worst_limit.max(last);
        checks.require(last <= C2_SWEEP_TOL, || format!("{label} gamma1={}: {last:e}", C2_SWEEP[2]));
    }
    checks.finish(format!(
        "{} games: curve vs mu2^(l1/l2) {worst_curve:.2e} (tol {C2_CURVE_TOL:e}); gamma1=0 payoffs vs plain attrition {worst_oracle:.2e}; \
         sweep {C2_SWEEP:?}: max gap {worst_sweep:.2e} at gamma1={}, {worst_limit:.2e} at gamma1={} (tol {C2_SWEEP_TOL:e})",
        games.len(),
        C2_SWEEP[0],
        C2_SWEEP[2]
    ))
}

// ---------------------------------------------------------------------------
// 3. Indifference along the path.

const C3_RANDOM_GAMES: usize = 50;
const C3_GRID: usize = 200;
const C3_TOL: f64 = 1e-6;
/// Points closer to T1 than this fraction of (T - T1) are not used for the
/// strict inequality, where the gap closes continuously.
const C3_STRICT_MARGIN: f64 = 0.01;
/// Discount-and-survival weight below which V1 and U1 agree to the ulp.
const C3_RESOLVABLE_WEIGHT: f64 = 1e-6;
const C3_BUDGET: Duration = Duration::from_secs(120);

fn criterion_3() -> Verdict {
    let mut rng = GameRng::new(3);
    let mut games = vec![reference_game()];
    games.extend((0..C3_RANDOM_GAMES).map(|_| random_one_sided(&mut rng)));
    let mut checks = Checks::default();
    let (mut worst_u, mut worst_v, mut strict_points, mut min_gap) = (0.0f64, 0.0f64, 0usize, f64::INFINITY);
    let mut unresolved = 0usize;
    for (n, g) in games.iter().enumerate() {
        let p = onesided::solve(g).map_err(|e| e.to_string())?;
        let eq = &p.equilibrium;
        let grid: Vec<f64> = (1..=C3_GRID).map(|k| p.t_end * k as f64 / (C3_GRID + 1) as f64).collect();
        let payoffs = [p.u1, p.u2];
        for player in 0..2 {
            let curve = eq.deviation_curve(player, &grid).map_err(|e| e.to_string())?;
            for point in &curve {
                let err = (point.concede - payoffs[player]).abs();
                worst_u = worst_u.max(err);
                checks.require(err <= C3_TOL, || format!("game {n} U{} at t={}: {err:e}", player + 1, point.t));
                if player != 0 {
                    continue;
                }
                let v = point.challenge.ok_or("player 1 must be able to challenge")?;
                if point.t < p.t_challenge_end {
                    let err = (v - point.concede).abs();
                    worst_v = worst_v.max(err);
                    checks.require(err <= C3_TOL, || format!("game {n} V1 at t={}: {err:e}", point.t));
                } else if point.t > p.t_challenge_end + C3_STRICT_MARGIN * (p.t_end - p.t_challenge_end) {
                    checks.require(v <= point.concede + C3_TOL, || format!("game {n} V1 > U1 at t={}", point.t));
                    // Both values carry the factor below; once it is tiny the
                    // gap sits under double precision and only V1 <= U1 is testable.
                    let weight = (-g.r1 * point.t).exp() * (1.0 - (1.0 - g.z2) * eq.concession_cdf(1, point.t));
                    if weight >= C3_RESOLVABLE_WEIGHT {
                        strict_points += 1;
                        min_gap = min_gap.min(point.concede - v);
                        checks.require(v < point.concede, || format!("game {n} V1 >= U1 at t={}", point.t));
                    } else {
                        unresolved += 1;
                    }
                }
            }
        }
    }
    checks.finish(format!(
        "P0 + {C3_RANDOM_GAMES} games: max |U_i - u_i| {worst_u:.2e}, max |V1 - U1| on (0,T1) {worst_v:.2e} (tol {C3_TOL:e}); \
         V1 < U1 at {strict_points} points past T1, smallest gap {min_gap:.2e}; \
         {unresolved} points with weight below {C3_RESOLVABLE_WEIGHT:e} checked for V1 <= U1 only"
    ))
}

// ---------------------------------------------------------------------------
// 4. Drop of the challenge hazard at T1.

const C4_GAMES: usize = 50;
const C4_ANALYTIC_TOL: f64 = 1e-9;
const C4_REPLICATIONS: usize = 100_000;
const C4_SEED: u64 = 20_240_401;
const C4_MC_REL_TOL: f64 = 0.15;
const C4_COMPENSATOR_STEPS: usize = 20_000;

/// Cumulative `integral_0^t mu1 gamma1` on a fine grid, linearly interpolated.
struct Compensator {
    step: f64,
    values: Vec<f64>,
}

impl Compensator {
    fn new(eq: &Equilibrium, end: f64) -> Compensator {
        let step = end / C4_COMPENSATOR_STEPS as f64;
        let gamma = eq.sides[0].gamma;
        let mut values = vec![0.0];
        let mut prev = eq.mu(0, 0.0) * gamma;
        for k in 1..=C4_COMPENSATOR_STEPS {
            let next = eq.mu(0, k as f64 * step) * gamma;
            values.push(values[k - 1] + 0.5 * step * (prev + next));
            prev = next;
        }
        Compensator { step, values }
    }

    fn at(&self, t: f64) -> f64 {
        let x = (t / self.step).clamp(0.0, C4_COMPENSATOR_STEPS as f64);
        let k = (x.floor() as usize).min(C4_COMPENSATOR_STEPS - 1);
        let frac = x - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

fn criterion_4() -> Verdict {
    let mut rng = GameRng::new(4);
    let mut checks = Checks::default();
    let mut worst = 0.0f64;
    let mut tested = 0;
    let p0 = reference_game();
    let mut games = vec![p0];
    games.extend((0..C4_GAMES).map(|_| random_one_sided(&mut rng)));
    for g in &games {
        let p = onesided::solve(g).map_err(|e| e.to_string())?;
        if p.t_challenge_end <= 0.0 {
            continue;
        }
        tested += 1;
        let jump = p.hazard_schedule().jumps.into_iter().find(|j| j.label == "T1").ok_or("no jump at T1")?;
        let err = (jump.challenge_left / jump.challenge_right - 1.0 / p.derived.nu1_star).abs();
        worst = worst.max(err);
        checks.require(err <= C4_ANALYTIC_TOL, || format!("{g:?}: ratio error {err:e}"));
    }
    // P0 values: T1 = ln 5 / 2 and nu1* = 0.625.
    let p = onesided::solve(&p0).map_err(|e| e.to_string())?;
    checks.require((p.t_challenge_end - 0.5 * 5f64.ln()).abs() < 1e-12, || format!("P0 T1 = {}", p.t_challenge_end));
    checks.require((p.derived.nu1_star - 0.625).abs() < 1e-15, || "P0 nu1*".into());

    // Events per unit of justified challenge intensity before and after T1.
    let cfg = SimConfig {
        replications: C4_REPLICATIONS,
        seed: C4_SEED,
        time_cap: 50.0,
        grid: 0,
        bin_width: 0.05,
    };
    let records = montecarlo::simulate_records(&p.equilibrium, &cfg).map_err(|e| e.to_string())?;
    let (t1, t_end) = (p.t_challenge_end, p.t_end);
    let compensator = Compensator::new(&p.equilibrium, t_end);
    let (mut events, mut exposure) = ([0usize; 2], [0.0f64; 2]);
    for r in records.iter().filter(|r| r.end > 0.0) {
        let stop = r.end.min(t_end);
        exposure[0] += compensator.at(stop.min(t1));
        if stop > t1 {
            exposure[1] += compensator.at(stop) - compensator.at(t1);
        }
        // Justified challenges after T fall outside the exposure window.
        if let (Outcome::Challenge { challenger: 0, .. }, true) = (r.outcome, r.end < t_end) {
            events[usize::from(r.end >= t1)] += 1;
        }
    }
    let ratio = (events[0] as f64 / exposure[0]) / (events[1] as f64 / exposure[1]);
    let target = 1.0 / p.derived.nu1_star;
    let rel = (ratio / target - 1.0).abs();
    checks.require(rel <= C4_MC_REL_TOL, || format!("Monte Carlo ratio {ratio:.4} vs {target}"));
    checks.finish(format!(
        "{tested} games with a challenge stretch: max |ratio - 1/nu1*| {worst:.2e} (tol {C4_ANALYTIC_TOL:e}); \
         P0 Monte Carlo ({C4_REPLICATIONS} runs, {}+{} challenges) ratio {ratio:.4} vs {target} (rel err {rel:.3}, tol {C4_MC_REL_TOL})",
        events[0], events[1]
    ))
}

// ---------------------------------------------------------------------------
// 5. Bayes consistency of simulated survivors.

const C5_REPLICATIONS: usize = 100_000;
const C5_SEED: u64 = 5;
const C5_BIN: f64 = 0.05;
const C5_MAX_Z: f64 = 3.0;

fn criterion_5() -> Verdict {
    let p = onesided::solve(&reference_game()).map_err(|e| e.to_string())?;
    let cfg = SimConfig {
        replications: C5_REPLICATIONS,
        seed: C5_SEED,
        time_cap: 50.0,
        grid: 0,
        bin_width: C5_BIN,
    };
    let report = montecarlo::simulate(&p.equilibrium, &cfg).map_err(|e| e.to_string())?;
    let mut checks = Checks::default();
    let mut worst = 0.0f64;
    for bin in &report.posteriors {
        for i in 0..2 {
            let z = bin.z_score[i];
            worst = worst.max(z.abs());
            checks.require(z.abs() <= C5_MAX_Z, || format!("player {} at t={}: z={z:.2}", i + 1, bin.t));
        }
    }
    checks.finish(format!(
        "P0, {C5_REPLICATIONS} runs, {} bins of width {C5_BIN} per player: max |z| {worst:.2} (limit {C5_MAX_Z})",
        report.posteriors.len()
    ))
}

// ---------------------------------------------------------------------------
// 6. Vanishing priors.

const C6_N: i32 = 20;
const C6_TOL: f64 = 0.02;

fn criterion_6() -> Verdict {
    let p0 = reference_game();
    // One game per generic case with the limit pair it must reach.
    let cases = [
        ("slower builder", p0, LimitCase::SlowerBuilder, [0.4, 0.6]),
        ("faster builder", OneSidedGame { r2: 3.0, ..p0 }, LimitCase::FasterBuilder, [0.6, 0.4]),
        ("fast ultimatums", OneSidedGame { gamma1: 3.0, ..p0 }, LimitCase::FastUltimatums, [0.4, 0.6]),
    ];
    let z = 2f64.powi(-C6_N);
    let mut checks = Checks::default();
    let mut parts = Vec::new();
    for (name, g, case, pair) in cases {
        let lim = analysis::limit_payoffs_single(&g).map_err(|e| e.to_string())?;
        checks.require(lim.case == case, || format!("{name}: classified as {:?}", lim.case));
        let payoffs = lim.payoffs.ok_or("generic case without a limit pair")?;
        checks.require(payoffs == pair, || format!("{name}: limit pair {payoffs:?}"));
        let p = onesided::solve(&OneSidedGame { z1: z, z2: z, ..g }).map_err(|e| e.to_string())?;
        let gap = (p.u1 - pair[0]).abs().max((p.u2 - pair[1]).abs());
        checks.require(gap <= C6_TOL, || format!("{name}: ({}, {}) vs {pair:?}", p.u1, p.u2));
        parts.push(format!("{name} ({:.4}, {:.4}) vs {pair:?}", p.u1, p.u2));
    }
    checks.finish(format!("z = 2^-{C6_N}: {} (tol {C6_TOL})", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 7. Who gains from ultimatum opportunities.

const C7_GAMES: usize = 100;
/// Payoff differences at or below this count as no gain.
const C7_ZERO: f64 = 1e-12;

fn criterion_7() -> Verdict {
    let mut rng = GameRng::new(7);
    let mut checks = Checks::default();
    let (mut gainers, mut tested) = (0, 0);
    let mut smallest_gain = f64::INFINITY;
    while tested < C7_GAMES {
        let mut g = random_one_sided(&mut rng);
        let region = analysis::who_benefits(&g).map_err(|e| format!("{g:?}: {e}"))?;
        // Half the games are moved into the region when it exists.
        if tested % 2 == 1 {
            let (Some(lo), Some(hi)) = (region.mu1_lower, region.mu1_upper) else {
                continue;
            };
            g.z1 = rng.uniform(lo, hi);
            let derived = g.derive().map_err(|e| e.to_string())?;
            let top = CoevolutionCurve::new(derived).tilde_mu2(g.z1).map_err(|e| e.to_string())?;
            if top <= 1e-6 {
                continue;
            }
            g.z2 = rng.uniform(0.0, top).max(1e-6);
        }
        tested += 1;
        let benefits = region.benefits(&g).map_err(|e| e.to_string())?;
        let with = onesided::solve(&g).map_err(|e| e.to_string())?.u1;
        let without = onesided::solve(&OneSidedGame { gamma1: 0.0, ..g }).map_err(|e| e.to_string())?.u1;
        let gain = with - without;
        if benefits {
            gainers += 1;
            smallest_gain = smallest_gain.min(gain);
        }
        checks.require(benefits == (gain > C7_ZERO), || format!("{g:?}: benefits={benefits}, gain={gain:e}"));
    }
    checks.finish(format!(
        "{C7_GAMES} games, {gainers} inside the benefit region (smallest gain {smallest_gain:.2e}); sign agrees with classification"
    ))
}

// ---------------------------------------------------------------------------
// 8. Comparative statics.

const C8_TRIPLES: usize = 200;
/// Relative perturbation size.
const C8_STEP: f64 = 1e-3;

fn criterion_8() -> Verdict {
    let mut rng = GameRng::new(8);
    let mut checks = Checks::default();
    let (mut done, mut crossed, mut signed, mut flat) = (0, 0, 0, 0);
    let mut worst_flat = 0.0f64;
    while done < C8_TRIPLES {
        let g = random_one_sided(&mut rng);
        let param = Param::ALL[rng.index(Param::ALL.len())];
        let sign = if rng.uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        let delta = sign * C8_STEP * param.get(&g).abs().max(0.05);
        let Ok(report) = analysis::comp_statics_check(&g, param, delta) else {
            continue;
        };
        if !report.same_window {
            crossed += 1;
            continue;
        }
        done += 1;
        for i in 0..2 {
            match report.predicted[i] {
                analysis::Prediction::Constant => {
                    flat += 1;
                    worst_flat = worst_flat.max(report.change[i].abs());
                }
                analysis::Prediction::Unsigned => {}
                _ => signed += 1,
            }
        }
        checks.require(report.violations.is_empty(), || format!("{:?} d={delta:e} {g:?}: {:?}", param, report.violations));
    }
    checks.finish(format!(
        "{C8_TRIPLES} triples ({crossed} steps crossing a window redrawn): {signed} signed predictions hold, \
         {flat} out-of-window changes max {worst_flat:.2e} (tol 1e-9)"
    ))
}

// ---------------------------------------------------------------------------
// 9. Several justified demands.

const C9_EQUAL_TOL: f64 = 1e-9;
const C9_RESTARTS: u64 = 20;
const C9_RESTART_TOL: f64 = 1e-9;
const C9_K: usize = 10;
const C9_RICH_SLACK: f64 = 0.02;
const C9_BUDGET: Duration = Duration::from_secs(300);

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

fn two_by_four() -> MultiDemandGame {
    MultiDemandGame {
        demands1: vec![0.55, 0.75],
        demands2: vec![0.35, 0.5, 0.65, 0.8],
        pi1: vec![0.6, 0.4],
        pi2: vec![0.1, 0.2, 0.3, 0.4],
        z1: 0.1,
        z2: 0.08,
        r1: 0.8,
        r2: 1.3,
        gamma1: 1.5,
        c1: 0.4,
        k2: 0.5,
        w1: 0.1,
    }
}

/// Rebuilds each player's payoff from one-sided subgames at the reported
/// posteriors and checks the indifference conditions.
fn check_equalization(g: &MultiDemandGame, sol: &MultiDemandSolution, checks: &mut Checks) -> Result<(f64, f64), String> {
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for (i, &a1) in g.demands1.iter().enumerate() {
        let (lo, hi) = sol.u1_range[i];
        if sol.sigma1[i] <= 0.0 {
            checks.require(hi <= sol.u1 + C9_EQUAL_TOL, || format!("unsupported a1={a1} pays {hi} > {}", sol.u1));
            continue;
        }
        checks.require(lo - C9_EQUAL_TOL <= sol.u1 && sol.u1 <= hi + C9_EQUAL_TOL, || {
            format!("supported a1={a1}: range [{lo}, {hi}] misses {}", sol.u1)
        });
        let resp = &sol.responses[i];
        let x = sol.x[i];
        let mut rebuilt = (1.0 - g.z2) * resp.accept * a1;
        for (j, &a2) in g.demands2.iter().enumerate() {
            let weight = g.z2 * g.pi2[j] + (1.0 - g.z2) * resp.sigma[j];
            if a1 + a2 <= 1.0 {
                rebuilt += weight * a1;
                continue;
            }
            let y = g.z2 * g.pi2[j] / weight;
            let sub = onesided::solve(&g.subgame(a1, a2, x, y)).map_err(|e| e.to_string())?;
            rebuilt += weight * sub.u1;
            if resp.sigma[j] > 0.0 {
                let err = (sub.u2 - resp.level).abs();
                worst2 = worst2.max(err);
                checks.require(err <= C9_EQUAL_TOL, || format!("a1={a1} a2={a2}: u2 {} vs level {}", sub.u2, resp.level));
            }
        }
        if lo == hi {
            let err = (rebuilt - sol.u1).abs();
            worst1 = worst1.max(err);
            checks.require(err <= C9_EQUAL_TOL, || format!("a1={a1}: rebuilt u1 {rebuilt} vs {}", sol.u1));
        }
    }
    Ok((worst1, worst2))
}

fn criterion_9() -> Verdict {
    let mut checks = Checks::default();
    let mut parts = Vec::new();
    for (name, g) in [("3x3", three_by_three()), ("2x4", two_by_four())] {
        let sol = multidemand::solve_game(&g, SolverOptions::default()).map_err(|e| e.to_string())?;
        let (w1, w2) = check_equalization(&g, &sol, &mut checks)?;
        let mut spread = 0.0f64;
        for seed in 0..C9_RESTARTS {
            let other = multidemand::solve_game(&g, SolverOptions { seed: Some(seed) }).map_err(|e| e.to_string())?;
            spread = spread.max(sol.outcome.distance(&other.outcome));
        }
        checks.require(spread <= C9_RESTART_TOL, || format!("{name}: restart spread {spread:e}"));
        parts.push(format!("{name}: u1 gap {w1:.1e}, u2 gap {w2:.1e}, restart spread {spread:.1e}"));
    }
    for gamma1 in [0.5, 2.0] {
        let (r1, r2) = (1.0, 1.0);
        let g = multidemand::rich_grid_game(C9_K, 1e-6, r1, r2, gamma1 * r1, 0.5, 0.3, 0.2);
        let sol = multidemand::solve_game(&g, SolverOptions::default()).map_err(|e| e.to_string())?;
        check_equalization(&g, &sol, &mut checks)?;
        let (bound1, _) = multidemand::limit_payoffs_rich(r1, r2, gamma1 * r1, C9_K).map_err(|e| e.to_string())?;
        let limit = bound1 + 1.0 / C9_K as f64;
        let allowed = 1.0 / C9_K as f64 + C9_RICH_SLACK;
        checks.require((sol.u1 - limit).abs() <= allowed, || format!("gamma1={gamma1}: u1 {} vs {limit}", sol.u1));
        checks.require(sol.u1 >= bound1 - C9_RICH_SLACK, || format!("gamma1={gamma1}: u1 {} below bound {bound1}", sol.u1));
        parts.push(format!("K={C9_K} gamma1={gamma1}: u1 {:.4} vs {limit:.4} (allowed {allowed:.2})", sol.u1));
    }
    checks.finish(parts.join("; "))
}

// ---------------------------------------------------------------------------
// 10. Two-sided games.

const C10_BIT_GAMES: usize = 50;
const C10_AUDIT_GAMES: usize = 10;
const C10_AUDIT_POINTS: usize = 200;
const C10_AUDIT_TOL: f64 = 1e-5;
const C10_STEADY_TOL: f64 = 1e-14;
const C10_STEADY_GAMES: usize = 20;
const C10_PRIORS: usize = 400;

fn bit_match(g: &OneSidedGame) -> Result<bool, String> {
    let one = onesided::solve(g).map_err(|e| e.to_string())?;
    let two = twosided::solve_finite(&g.as_two_sided()).map_err(|e| e.to_string())?;
    let (a, b) = (&one.equilibrium, &two.equilibrium);
    let mut same = one.t_end.to_bits() == two.t_end.to_bits()
        && one.t_challenge_end.to_bits() == two.t_challenge_end[0].to_bits()
        && [one.u1, one.u2] == two.payoffs
        && [one.q1, one.q2] == two.atoms;
    for k in 0..=100 {
        let t = one.t_end * k as f64 / 100.0;
        for i in 0..2 {
            same &= a.mu(i, t).to_bits() == b.mu(i, t).to_bits()
                && a.concession_cdf(i, t).to_bits() == b.concession_cdf(i, t).to_bits()
                && a.challenge_cdf(i, t).to_bits() == b.challenge_cdf(i, t).to_bits()
                && a.yield_probability(i, t).to_bits() == b.yield_probability(i, t).to_bits();
        }
    }
    Ok(same)
}

/// Random two-sided game in which both players' arrival rates exceed
/// their concession rates, so perpetual-delay profiles exist.
fn fast_game(rng: &mut GameRng) -> TwoSidedGame {
    loop {
        let g = random_two_sided(rng, 4.0);
        if let Ok(d) = g.derive() {
            if d.players.iter().all(|p| p.gamma > p.lambda) {
                return g;
            }
        }
    }
}

fn criterion_10() -> Verdict {
    let mut rng = GameRng::new(10);
    let mut checks = Checks::default();

    let mut games = vec![reference_game()];
    games.extend((0..C10_BIT_GAMES).map(|_| random_one_sided(&mut rng)));
    let mut matched = 0;
    for g in &games {
        let same = bit_match(g)?;
        matched += usize::from(same);
        checks.require(same, || format!("gamma2 = 0 differs for {g:?}"));
    }

    let mut audited = 0;
    let mut worst_audit = f64::NEG_INFINITY;
    while audited < C10_AUDIT_GAMES {
        let g = random_two_sided(&mut rng, 0.3);
        if twosided::classify(&g).map_err(|e| e.to_string())?.regime != Regime::UniqueFiniteT {
            continue;
        }
        audited += 1;
        let p = twosided::solve_finite(&g).map_err(|e| e.to_string())?;
        let audit = montecarlo::best_response_audit(&p.equilibrium, C10_AUDIT_POINTS, 1.0).map_err(|e| e.to_string())?;
        let late = audit.players.iter().filter_map(|a| a.late_advantage).fold(f64::NEG_INFINITY, f64::max);
        let worst = audit.max_advantage.max(late);
        worst_audit = worst_audit.max(worst);
        checks.require(worst <= C10_AUDIT_TOL, || format!("audit {worst:e} for {g:?}"));
    }

    let (mut worst_steady, mut steady_games, mut refused) = (0.0f64, 0, 0);
    while steady_games < C10_STEADY_GAMES {
        let g = fast_game(&mut rng);
        let d = g.derive().map_err(|e| e.to_string())?;
        // Absorption needs theta_i below phi_i* for both players.
        let admissible = d.players.iter().all(|p| p.theta < 1.0 - p.lambda / p.gamma);
        let Ok(chi) = twosided::steady_state_rates(&g) else {
            refused += 1;
            checks.require(!admissible, || format!("steady rates refused for admissible {g:?}"));
            continue;
        };
        checks.require(admissible, || format!("steady rates accepted for inadmissible {g:?}"));
        steady_games += 1;
        let residual = twosided::steady_residual(&g, chi).map_err(|e| e.to_string())?;
        let r = residual[0].abs().max(residual[1].abs());
        worst_steady = worst_steady.max(r);
        checks.require(r <= C10_STEADY_TOL, || format!("steady residual {r:e} for {g:?}"));
    }

    let bases = [fast_game(&mut rng), fast_game(&mut rng), fast_game(&mut rng), fast_game(&mut rng)];
    let mut tally = std::collections::BTreeMap::new();
    let mut boundary = 0;
    for k in 0..C10_PRIORS {
        let base = &bases[k % bases.len()];
        let g = base.with_priors(rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99));
        let class = twosided::classify(&g).map_err(|e| e.to_string())?;
        let type1 = twosided::construct_type1(&g, None).is_ok();
        let type2 = twosided::construct_type2(&g, None).is_ok();
        let expected = match class.regime {
            Regime::Type1Only => (true, false),
            Regime::Type2Only => (false, true),
            Regime::Type1AndType2 => (true, true),
            Regime::UniqueFiniteT => (false, false),
            Regime::Boundary => {
                boundary += 1;
                continue;
            }
        };
        *tally.entry(format!("{:?}", class.regime)).or_insert(0) += 1;
        checks.require((type1, type2) == expected, || {
            format!("{:?} but constructions gave ({type1}, {type2}) at z = ({}, {})", class.regime, g.z1, g.z2)
        });
        if class.regime == Regime::UniqueFiniteT {
            let finite = twosided::solve_finite(&g);
            checks.require(finite.is_ok(), || format!("finite solve failed at z = ({}, {}): {finite:?}", g.z1, g.z2));
        }
    }
    checks.finish(format!(
        "gamma2 = 0 bit-matches one-sided on {matched}/{} games; finite-horizon audit max advantage {worst_audit:.2e} over {audited} games \
         (tol {C10_AUDIT_TOL:e}); steady residual {worst_steady:.1e} over {steady_games} games (tol {C10_STEADY_TOL:e}, {refused} inadmissible refused); {C10_PRIORS} priors classified {tally:?}, \
         {boundary} on a boundary",
        games.len()
    ))
}

// ---------------------------------------------------------------------------

struct Criterion {
    id: u8,
    title: &'static str,
    run: fn() -> Verdict,
    budget: Option<Duration>,
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "reputation dynamics closed form", run: criterion_1, budget: Some(C1_BUDGET) },
        Criterion { id: 2, title: "reduction without ultimatums", run: criterion_2, budget: None },
        Criterion { id: 3, title: "indifference along the path", run: criterion_3, budget: Some(C3_BUDGET) },
        Criterion { id: 4, title: "challenge hazard drop at T1", run: criterion_4, budget: None },
        Criterion { id: 5, title: "Bayes consistency of survivors", run: criterion_5, budget: None },
        Criterion { id: 6, title: "vanishing priors", run: criterion_6, budget: None },
        Criterion { id: 7, title: "who gains from ultimatums", run: criterion_7, budget: None },
        Criterion { id: 8, title: "comparative statics signs", run: criterion_8, budget: None },
        Criterion { id: 9, title: "multi-demand fixed point", run: criterion_9, budget: Some(C9_BUDGET) },
        Criterion { id: 10, title: "two-sided games", run: criterion_10, budget: None },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut verdict = (c.run)();
        let elapsed = start.elapsed();
        if let Some(budget) = c.budget {
            if elapsed > budget {
                verdict = Err(format!("took {elapsed:.1?}, budget {budget:?}; {}", verdict.unwrap_or_else(|e| e)));
            }
        }
        let (status, detail) = match verdict {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        println!("{status} criterion {:>2} ({}) [{elapsed:.1?}]: {detail}", c.id, c.title);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
