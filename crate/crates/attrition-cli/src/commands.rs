//! Subcommand bodies. Each reads and validates its input, delegates to the
//! library, and writes its files through [`OutputDir`].

use std::fs;
use std::path::Path;

use attrition_lab::analysis::{self, AnalysisError, Param};
use attrition_lab::equilibrium::{EngineError, Equilibrium};
use attrition_lab::model::{GameDocument, ModelError, OneSidedGame, TwoSidedGame};
use attrition_lab::montecarlo::{self, MonteCarloError, SimConfig};
use attrition_lab::multidemand::{self, MultiDemandError, SolverOptions};
use attrition_lab::onesided::{self, CoevolutionCurve, OneSidedError};
use attrition_lab::twosided::{self, AtomChoice, Regime, TwoSidedError};
use serde_json::{json, Value};

use crate::output::{cell, numeric_csv, render_json, render_json_line, OutputDir};
use crate::CliError;

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<OneSidedError> for CliError {
    fn from(e: OneSidedError) -> Self {
        match e {
            OneSidedError::Model(m) => m.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<TwoSidedError> for CliError {
    fn from(e: TwoSidedError) -> Self {
        match e {
            TwoSidedError::Model(m) => m.into(),
            TwoSidedError::Engine(m) => m.into(),
            other => CliError::Regime(other.to_string(), None),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::OneSided(m) => m.into(),
            AnalysisError::NoBenefitRegion(_) => CliError::Regime(e.to_string(), None),
            AnalysisError::NeedsChallenge => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<MultiDemandError> for CliError {
    fn from(e: MultiDemandError) -> Self {
        match e {
            MultiDemandError::Model(m) => m.into(),
            MultiDemandError::ConvergenceFailure(_) => CliError::Numerical(e.to_string()),
            MultiDemandError::GridTooCoarse(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Engine(m) => m.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library reports serialize")
}

struct Input {
    bytes: Vec<u8>,
    doc: GameDocument,
}

impl Input {
    fn manifest_entry<'a>(&'a self, path: &'a Path) -> Option<(&'a Path, &'a [u8], Option<Value>)> {
        Some((path, &self.bytes, Some(self.doc.to_json())))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_game(path: &Path) -> Result<Input, CliError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Validation(e.to_string()))?;
    let doc = GameDocument::from_json(&text)?;
    Ok(Input { bytes, doc })
}

fn one_sided(doc: &GameDocument, command: &str) -> Result<OneSidedGame, CliError> {
    match doc {
        GameDocument::OneSided(g) => Ok(*g),
        _ => Err(CliError::Validation(format!("`{command}` needs a one-sided game"))),
    }
}

fn linspace(end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| end * k as f64 / n as f64).collect()
}

/// Reputations, cumulative strategies, yield probabilities and hazards on a grid.
fn equilibrium_csv(eq: &Equilibrium, end: f64, n: usize) -> String {
    let header = [
        "t", "mu1", "mu2", "F1", "F2", "G1", "G2", "q1", "q2", "chi1", "chi2", "kappa1", "kappa2",
    ];
    let rows = linspace(end, n).into_iter().map(|t| {
        vec![
            t,
            eq.mu(0, t),
            eq.mu(1, t),
            eq.concession_cdf(0, t),
            eq.concession_cdf(1, t),
            eq.challenge_cdf(0, t),
            eq.challenge_cdf(1, t),
            eq.yield_probability(0, t),
            eq.yield_probability(1, t),
            eq.challenge_hazard(0, t),
            eq.challenge_hazard(1, t),
            eq.concession_hazard(0, t),
            eq.concession_hazard(1, t),
        ]
    });
    numeric_csv(&header, rows)
}

fn one_sided_profile(game: &OneSidedGame) -> Result<(onesided::EquilibriumProfile, Value), CliError> {
    let profile = onesided::solve(game)?;
    let s = profile.summary();
    let value = json!({
        "game": GameDocument::OneSided(*game).to_json(),
        "T": s.t_end,
        "T1": s.t_challenge_end,
        "Q1": s.q1,
        "Q2": s.q2,
        "u1": s.u1,
        "u2": s.u2,
        "mu1_0": s.mu1_0,
        "mu2_0": s.mu2_0,
        "derived": to_value(&profile.derived),
        "hazard_jumps": to_value(&profile.hazard_schedule().jumps),
    });
    Ok((profile, value))
}

fn parse_atom(raw: Option<&str>) -> Result<Option<AtomChoice>, CliError> {
    let Some(raw) = raw else {
        return Ok(None);
    };
    if raw == "none" {
        return Ok(Some(AtomChoice { player: 0, q: 0.0 }));
    }
    let bad = || CliError::Validation(format!("--atom must be `player:Q` with player 1 or 2, or `none`; got {raw:?}"));
    let (p, q) = raw.split_once(':').ok_or_else(bad)?;
    let player: u8 = p.trim().parse().map_err(|_| bad())?;
    let q: f64 = q.trim().parse().map_err(|_| bad())?;
    if !(player == 1 || player == 2) || !(0.0..1.0).contains(&q) {
        return Err(bad());
    }
    Ok(Some(AtomChoice { player, q }))
}

/// A solved two-sided profile of whichever kind the regime allows.
struct TwoSidedSolution {
    regime: Value,
    kind: &'static str,
    equilibrium: Equilibrium,
    atoms: [f64; 2],
    payoffs: [f64; 2],
    t_end: Option<f64>,
}

fn solve_two_sided(game: &TwoSidedGame, atom: Option<&str>, kind: Option<&str>) -> Result<TwoSidedSolution, CliError> {
    let class = twosided::classify(game)?;
    let report = to_value(&class);
    let atom = parse_atom(atom)?;
    let regime_error = |msg: &str| CliError::Regime(msg.to_string(), Some(report.clone()));
    let wanted = match kind {
        None => None,
        Some("type1") => Some(1),
        Some("type2") => Some(2),
        Some(other) => return Err(CliError::Validation(format!("--kind must be type1 or type2, got {other:?}"))),
    };
    let family = match class.regime {
        Regime::UniqueFiniteT => {
            if atom.is_some() || wanted.is_some() {
                return Err(CliError::Validation(
                    "--atom and --kind apply only to profiles without a finite end".into(),
                ));
            }
            let p = twosided::solve_finite(game)?;
            return Ok(TwoSidedSolution {
                regime: report,
                kind: "finite",
                atoms: p.atoms,
                payoffs: p.payoffs,
                t_end: Some(p.t_end),
                equilibrium: p.equilibrium,
            });
        }
        Regime::Boundary => return Err(regime_error("priors sit on a regime boundary; nothing is constructed")),
        Regime::Type1Only => 1,
        Regime::Type2Only => 2,
        Regime::Type1AndType2 => wanted.ok_or_else(|| regime_error("both equilibrium families exist; pass --kind"))?,
    };
    if wanted.is_some_and(|w| w != family) {
        return Err(regime_error("the requested --kind does not exist in this regime"));
    }
    let p = if family == 1 {
        // Any small enough atom supports a drifting profile, so one must be chosen.
        let atom = atom.ok_or_else(|| regime_error("drifting profiles form a continuum; pass --atom player:Q or none"))?;
        twosided::construct_type1(game, Some(atom))?
    } else {
        twosided::construct_type2(game, atom)?
    };
    Ok(TwoSidedSolution {
        regime: report,
        kind: if family == 1 { "type1" } else { "type2" },
        atoms: p.atoms,
        payoffs: p.payoffs,
        t_end: None,
        equilibrium: p.equilibrium,
    })
}

fn two_sided_value(game: &TwoSidedGame, s: &TwoSidedSolution) -> Value {
    let eq = &s.equilibrium;
    let challenge_end = [0, 1].map(|i| Some(eq.challenge_end(i)).filter(|t| t.is_finite()));
    json!({
        "game": GameDocument::TwoSided(*game).to_json(),
        "regime": s.regime,
        "kind": s.kind,
        "T": s.t_end,
        "T_challenge": challenge_end,
        "Q1": s.atoms[0],
        "Q2": s.atoms[1],
        "u1": s.payoffs[0],
        "u2": s.payoffs[1],
        "mu1_0": eq.start[0],
        "mu2_0": eq.start[1],
        "shape": to_value(&eq.shape),
        "phases": to_value(&eq.phases),
    })
}

pub fn solve(input: &Path, out: &Path, grid: usize) -> Result<(), CliError> {
    let src = read_game(input)?;
    let mut dir = OutputDir::create(out)?;
    match &src.doc {
        GameDocument::OneSided(game) => {
            let (profile, value) = one_sided_profile(game)?;
            dir.write_json("profile.json", &value)?;
            dir.write("curves.csv", &equilibrium_csv(&profile.equilibrium, profile.t_end, grid))?;
        }
        GameDocument::TwoSided(game) => {
            let class = twosided::classify(game)?;
            if class.regime != Regime::UniqueFiniteT {
                return Err(CliError::Regime(
                    "no unique finite-time equilibrium; use `twosided --solve --atom`".into(),
                    Some(to_value(&class)),
                ));
            }
            let s = solve_two_sided(game, None, None)?;
            dir.write_json("profile.json", &two_sided_value(game, &s))?;
            dir.write("curves.csv", &equilibrium_csv(&s.equilibrium, s.t_end.unwrap_or(0.0), grid))?;
        }
        GameDocument::MultiDemand(game) => {
            let sol = multidemand::solve_game(game, SolverOptions::default())?;
            let value = json!({"game": src.doc.to_json(), "solution": to_value(&sol)});
            dir.write_json("profile.json", &value)?;
        }
    }
    dir.finish("solve", src.manifest_entry(input), None)
}

pub fn curve(input: &Path, out: &Path, points: usize) -> Result<(), CliError> {
    let src = read_game(input)?;
    let game = one_sided(&src.doc, "curve")?;
    let derived = game.derive()?;
    let curve = CoevolutionCurve::new(derived);
    let n = points.max(2);
    let mut forward = Vec::with_capacity(n);
    for k in 1..=n {
        let mu2 = k as f64 / n as f64;
        forward.push(vec![mu2, curve.tilde_mu1(mu2)?]);
    }
    let floor = derived.asymptote();
    let mut inverse = Vec::with_capacity(n);
    for k in 1..=n {
        let mu1 = floor + (1.0 - floor) * k as f64 / n as f64;
        inverse.push(vec![mu1, curve.tilde_mu2(mu1)?]);
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("curve.csv", &numeric_csv(&["mu2", "tilde_mu1"], forward))?;
    dir.write("inverse.csv", &numeric_csv(&["mu1", "tilde_mu2"], inverse))?;
    dir.finish("curve", src.manifest_entry(input), None)
}

pub fn hazard(input: &Path, out: &Path, grid: usize) -> Result<(), CliError> {
    let src = read_game(input)?;
    let game = one_sided(&src.doc, "hazard")?;
    let profile = onesided::solve(&game)?;
    let schedule = profile.hazard_schedule();
    let on_jump = |t: f64| schedule.jumps.iter().any(|j| (j.at - t).abs() <= 1e-12 * j.at.max(1.0));
    // Rank orders rows sharing a time: grid, then left limit, then right limit.
    let mut rows: Vec<(f64, u8, f64, f64, String)> = linspace(1.25 * profile.t_end, grid)
        .into_iter()
        .filter(|&t| !on_jump(t))
        .map(|t| (t, 0, schedule.challenge(t), schedule.resolution(t), String::new()))
        .collect();
    for j in &schedule.jumps {
        rows.push((j.at, 1, j.challenge_left, j.resolution_left, format!("{}_left", j.label)));
        rows.push((j.at, 2, j.challenge_right, j.resolution_right, format!("{}_right", j.label)));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut csv = String::from("t,challenge,resolution,jump\n");
    for (t, _, c, r, label) in rows {
        csv.push_str(&format!("{},{},{},{label}\n", cell(t), cell(c), cell(r)));
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("hazard.csv", &csv)?;
    dir.write_json("jumps.json", &to_value(&schedule.jumps))?;
    dir.finish("hazard", src.manifest_entry(input), None)
}

pub fn compstat(input: &Path, param: &str, delta: f64, out: Option<&Path>) -> Result<(), CliError> {
    let src = read_game(input)?;
    let game = one_sided(&src.doc, "compstat")?;
    let param = Param::parse(param)
        .ok_or_else(|| CliError::Validation(format!("unknown parameter {param:?}; expected z1, z2, r1, r2, c1, k2 or w1")))?;
    let report = to_value(&analysis::comp_statics_check(&game, param, delta)?);
    print!("{}", render_json(&report));
    if let Some(out) = out {
        let mut dir = OutputDir::create(out)?;
        dir.write_json("compstat.json", &report)?;
        dir.finish("compstat", src.manifest_entry(input), None)?;
    }
    Ok(())
}

pub fn limit(input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let src = read_game(input)?;
    let (headline, detail) = match &src.doc {
        GameDocument::OneSided(game) => {
            let l = analysis::limit_payoffs_single(game)?;
            (json!({"winner": l.winner, "payoffs": l.payoffs}), to_value(&l))
        }
        GameDocument::TwoSided(game) => {
            let d = game.derive()?;
            let net = d.players.map(|p| p.lambda - p.gamma);
            let a = [game.a1, game.a2];
            let (winner, payoffs) = if (net[0] - net[1]).abs() <= analysis::KNIFE_EDGE_EPS * net[0].abs().max(net[1].abs()) {
                (None, None)
            } else if net[0] > net[1] {
                (Some(1), Some([a[0], 1.0 - a[0]]))
            } else {
                (Some(2), Some([1.0 - a[1], a[1]]))
            };
            let headline = json!({"winner": winner, "payoffs": payoffs});
            let mut detail = headline.clone();
            detail["net_rates"] = json!(net);
            (headline, detail)
        }
        GameDocument::MultiDemand(_) => {
            return Err(CliError::Validation("`limit` takes a one- or two-sided game".into()));
        }
    };
    println!("{}", render_json_line(&headline));
    if let Some(out) = out {
        let mut dir = OutputDir::create(out)?;
        dir.write_json("limit.json", &detail)?;
        dir.finish("limit", src.manifest_entry(input), None)?;
    }
    Ok(())
}

pub fn multi(input: &Path, out: &Path, restarts: u64, seed: u64) -> Result<(), CliError> {
    let src = read_game(input)?;
    let GameDocument::MultiDemand(game) = &src.doc else {
        return Err(CliError::Validation("`multi` needs a multi-demand game".into()));
    };
    let sol = multidemand::solve_game(game, SolverOptions::default())?;
    let mut spread: f64 = 0.0;
    for k in 0..restarts {
        let other = multidemand::solve_game(
            game,
            SolverOptions {
                seed: Some(seed.wrapping_add(k)),
            },
        )?;
        spread = spread.max(sol.outcome.distance(&other.outcome));
    }
    let value = json!({
        "game": src.doc.to_json(),
        "solution": to_value(&sol),
        "restarts": restarts,
        "restart_spread": spread,
    });
    let mut dir = OutputDir::create(out)?;
    dir.write_json("profile.json", &value)?;
    let rows = sol
        .outcome
        .pairs
        .iter()
        .map(|p| vec![p.a1, p.a2.unwrap_or(f64::NAN), p.probability, p.immediate]);
    dir.write("outcomes.csv", &numeric_csv(&["a1", "a2", "probability", "immediate"], rows))?;
    dir.finish("multi", src.manifest_entry(input), (restarts > 0).then_some(seed))
}

#[allow(clippy::too_many_arguments)]
pub fn twosided(
    input: &Path,
    classify: bool,
    atom: Option<&str>,
    kind: Option<&str>,
    out: Option<&Path>,
    grid: usize,
    horizon: f64,
) -> Result<(), CliError> {
    let src = read_game(input)?;
    let GameDocument::TwoSided(game) = &src.doc else {
        return Err(CliError::Validation("`twosided` needs a two-sided game".into()));
    };
    if classify {
        let report = to_value(&twosided::classify(game)?);
        print!("{}", render_json(&report));
        if let Some(out) = out {
            let mut dir = OutputDir::create(out)?;
            dir.write_json("regime.json", &report)?;
            dir.finish("twosided", src.manifest_entry(input), None)?;
        }
        return Ok(());
    }
    let out = out.ok_or_else(|| CliError::Validation("`twosided --solve` needs --out".into()))?;
    let s = solve_two_sided(game, atom, kind)?;
    let end = s.t_end.unwrap_or(horizon);
    let mut dir = OutputDir::create(out)?;
    dir.write_json("profile.json", &two_sided_value(game, &s))?;
    dir.write("curves.csv", &equilibrium_csv(&s.equilibrium, end, grid))?;
    dir.finish("twosided", src.manifest_entry(input), None)
}

pub struct SimArgs {
    pub seed: u64,
    pub replications: usize,
    pub time_cap: f64,
    pub bin_width: f64,
    pub grid: usize,
    pub atom: Option<String>,
    pub kind: Option<String>,
}

pub fn simulate(input: &Path, out: &Path, args: SimArgs) -> Result<(), CliError> {
    let src = read_game(input)?;
    let eq = match &src.doc {
        GameDocument::OneSided(game) => {
            if args.atom.is_some() || args.kind.is_some() {
                return Err(CliError::Validation("--atom and --kind apply only to two-sided games".into()));
            }
            onesided::solve(game)?.equilibrium
        }
        GameDocument::TwoSided(game) => solve_two_sided(game, args.atom.as_deref(), args.kind.as_deref())?.equilibrium,
        GameDocument::MultiDemand(_) => {
            return Err(CliError::Validation("`simulate` takes a one- or two-sided game".into()));
        }
    };
    let cfg = SimConfig {
        replications: args.replications,
        seed: args.seed,
        time_cap: args.time_cap,
        grid: args.grid,
        bin_width: args.bin_width,
    };
    let report = montecarlo::simulate(&eq, &cfg)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_json("report.json", &to_value(&report))?;
    dir.write("hazard.csv", &report.resolution_hazard.to_csv())?;
    dir.write("concession_hazard_1.csv", &report.concession_hazard[0].to_csv())?;
    dir.write("concession_hazard_2.csv", &report.concession_hazard[1].to_csv())?;
    dir.finish("simulate", src.manifest_entry(input), Some(args.seed))
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

pub fn hazardfit(input: &Path, out: &Path, bin_width: f64) -> Result<(), CliError> {
    let bytes = read_bytes(input)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| CliError::Validation(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("missing column `{name}`")))
    };
    let (d_col, c_col) = (column("duration")?, column("censored")?);
    let mut durations = Vec::new();
    let mut censored = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(e.to_string()))?;
        let row = line + 2;
        let d: f64 = record
            .get(d_col)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Validation(format!("row {row}: duration is not a number")))?;
        let c = record
            .get(c_col)
            .and_then(parse_flag)
            .ok_or_else(|| CliError::Validation(format!("row {row}: censored must be 0/1 or true/false")))?;
        durations.push(d);
        censored.push(c);
    }
    let series = montecarlo::empirical_hazard(&durations, &censored, bin_width)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("hazard.csv", &series.to_csv())?;
    dir.finish("hazardfit", Some((input, &bytes, None)), None)
}
