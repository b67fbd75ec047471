//! Property-verification suites.

use std::str::FromStr;

use secmimo::analytics::{
    decodable_rate_delta_floor, defense_rate, leakage_delta_conjugate, sinr_conjugate,
};
use secmimo::config::{AttackKind, AttackSpec, RawConfig, SystemConfig};
use secmimo::estimation::Regime;
use secmimo::montecarlo::waterfill::solve_waterfilling;
use secmimo::montecarlo::{
    mc_distribution_identity, mc_end_to_end, mc_estimator_moments, mc_leakage, mc_sinr,
    EndToEndOptions, McEstimate, McRun, Z_GATE,
};
use secmimo::thresholds::{g_epsilon, s1_epsilon, s_epsilon, v_of_r};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::table::{Provenance, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Formulas,
    Statistics,
    All,
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "formulas" => Ok(Suite::Formulas),
            "statistics" => Ok(Suite::Statistics),
            "all" => Ok(Suite::All),
            _ => Err(CliError::Invalid(format!("unknown suite `{s}`"))),
        }
    }
}

pub const DEFAULT_TRIALS: usize = 4000;

/// Metric by which a check is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// |value - target| / |target|.
    Relative,
    /// |value - target|.
    Absolute,
    /// |z| of a Monte-Carlo estimate.
    Z,
    /// value <= target.
    AtMost,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Relative => "relative_residual",
            Metric::Absolute => "absolute_residual",
            Metric::Z => "z",
            Metric::AtMost => "upper_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub metric: Metric,
    pub score: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn relative(suite: &'static str, name: &str, value: f64, target: f64, tol: f64) -> Self {
        let score = (value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
        Self::build(suite, name, value, target, Metric::Relative, score, tol)
    }

    pub fn absolute(suite: &'static str, name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::build(suite, name, value, target, Metric::Absolute, (value - target).abs(), tol)
    }

    pub fn at_most(suite: &'static str, name: &str, value: f64, bound: f64) -> Self {
        let mut c = Self::build(suite, name, value, bound, Metric::AtMost, value - bound, 0.0);
        c.pass = value <= bound;
        c
    }

    pub fn z(suite: &'static str, name: &str, e: &McEstimate) -> Self {
        let target = e.target.unwrap_or(f64::NAN);
        let score = e.z().map(f64::abs).unwrap_or(f64::INFINITY);
        Self::build(suite, name, e.estimate, target, Metric::Z, score, Z_GATE)
    }

    fn build(suite: &'static str, name: &str, value: f64, target: f64, metric: Metric, score: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.to_owned(),
            value,
            target,
            metric,
            score,
            tolerance,
            pass: score <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub table: ResultTable,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Deterministic point i of a d-dimensional low-discrepancy sequence in
/// [0, 1)^d (additive recurrence on square roots of primes).
pub fn sweep_point(i: usize, d: usize) -> Vec<f64> {
    const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    (0..d).map(|j| ((i + 1) as f64 * PRIMES[j % 8].sqrt()).fract()).collect()
}

fn lerp(u: f64, lo: f64, hi: f64) -> f64 {
    lo + u * (hi - lo)
}

pub const SWEEP_POINTS: usize = 100;

fn fig3_config() -> SystemConfig {
    RawConfig::equal_power(100, 1, 1, 5, 1, 1.0, 1.0, 1.0).validate().expect("valid")
}

pub fn example2(m: usize) -> SystemConfig {
    RawConfig {
        l_pilots: Some(m),
        ..RawConfig::equal_power(m, 1, 5, 3 * m, m, 10.0, 1.0, 1.0)
    }
    .validate()
    .expect("valid")
}

/// Random (M_e, ρ, T, T_r) configuration for sweep point u.
fn sweep_config(u: &[f64]) -> SystemConfig {
    let m_e = 1 + (u[0] * 8.0) as usize;
    let t_r = 1 + (u[1] * 20.0) as usize;
    let t = t_r + 1 + (u[2] * 200.0) as usize;
    let rho = lerp(u[3], 0.1, 10.0);
    let rho_r = lerp(u[4], 0.1, 10.0);
    RawConfig::equal_power(64, m_e, 1, t, t_r, rho_r, rho, rho_r * u[5])
        .validate()
        .expect("sweep configurations are valid")
}

pub fn formula_checks() -> CliResult<Vec<Check>> {
    const S: &str = "formulas";
    let mut out = Vec::new();

    let fig3 = fig3_config();
    let s = s_epsilon(&fig3, 0.05, 0.7)?.value;
    out.push(Check::relative(S, "s_epsilon_fig3_oracle", s, 85.91643493241248, 1e-9));
    out.push(Check::at_most(S, "s_epsilon_fig3_at_most_100", s, 100.0));
    out.push(Check::relative(
        S,
        "leakage_delta_reference",
        leakage_delta_conjugate(&fig3, 100.0, 0.7, 0),
        0.0450567439092228,
        1e-12,
    ));

    let mut worst_s = 0.0f64;
    let mut worst_v = 0.0f64;
    let mut worst_s1 = 0.0f64;
    for i in 0..SWEEP_POINTS {
        let u = sweep_point(i, 8);
        let cfg = sweep_config(&u);
        let eps = lerp(u[6], 0.001, 0.5);
        let delta = lerp(u[7], 0.05, 0.95);
        let s = s_epsilon(&cfg, eps, delta)?;
        worst_s = worst_s.max((leakage_delta_conjugate(&cfg, s.value, delta, 0) - eps).abs() / eps);
        let r = lerp(u[6], 0.01, 3.0);
        let v = v_of_r(&cfg, &[r], delta)?;
        worst_v = worst_v.max((decodable_rate_delta_floor(&cfg, v.value, delta, 0) - r).abs() / r);
        let s1 = s1_epsilon(&cfg, eps, delta, 1.0)?;
        worst_s1 = worst_s1.max((s1.value - s.value).abs() / s.value);
    }
    out.push(Check::absolute(S, "s_inverts_leakage_sweep", worst_s, 0.0, 1e-9));
    out.push(Check::absolute(S, "v_inverts_decodable_floor_sweep", worst_v, 0.0, 1e-9));
    out.push(Check::absolute(S, "s1_equals_s_sweep", worst_s1, 0.0, 1e-12));

    let ex = example2(200);
    out.push(Check::relative(S, "g_two_thirds", g_epsilon(&ex, 2.0 / 3.0)?.value, 17.64, 1e-9));
    let base = defense_rate(&ex, 200.0)?;
    let mut worst_j = 0.0f64;
    for j in [1, 7, 50, 200] {
        let r = defense_rate(&ex.with_jammed_subset(j)?, 200.0)?;
        for (a, b) in r.users.iter().zip(&base.users) {
            worst_j = worst_j.max((a.rate - b.rate).abs());
        }
    }
    out.push(Check::absolute(S, "defense_rate_j_invariant", worst_j, 0.0, 0.0));
    out.push(Check::absolute(
        S,
        "defense_dof_example_m200",
        base.users[0].rate / 200f64.log2(),
        0.3326783460603009,
        1e-12,
    ));

    let sinr_cfg = RawConfig::equal_power(256, 1, 4, 1000, 10, 0.9, 1.0, 1.0).validate()?;
    out.push(Check::relative(S, "sinr_conjugate_reference", sinr_conjugate(&sinr_cfg, 256.0, 0).sinr, 38.4, 1e-12));

    for m in [2usize, 8, 64, 1024] {
        let w = solve_waterfilling(m, 10.0, 1e-8)?;
        out.push(Check::at_most(S, &format!("waterfill_lambda_bound_m{m}"), w.lambda, w.lambda_bound()));
        out.push(Check::at_most(S, &format!("waterfill_residual_m{m}"), w.residual, 1e-8));
    }
    Ok(out)
}

fn stats_config() -> SystemConfig {
    RawConfig::equal_power(64, 1, 4, 40, 10, 0.9, 1.0, 1.0).validate().expect("valid")
}

pub fn statistics_checks(seed: u64, trials: usize, workers: usize) -> CliResult<Vec<Check>> {
    const S: &str = "statistics";
    let run = McRun::new(seed, trials).with_workers(workers);
    let cfg = stats_config();
    let mut out = Vec::new();

    for (tag, regime) in [
        ("no_jam", Regime::NoJam),
        ("pilot_matching", Regime::PilotMatching { target: 1 }),
        ("random_subset", Regime::RandomSubset { jammed: 2 }),
    ] {
        let m = mc_estimator_moments(&cfg, regime, &run)?;
        let mut all = vec![&m.power, &m.adversary_re, &m.adversary_im];
        all.extend(m.cross_re.iter());
        all.extend(m.cross_im.iter());
        for e in all {
            out.push(Check::z(S, &format!("moments_{tag}_{}", e.label), e));
        }
    }

    let s = mc_sinr(&cfg, &run)?;
    for e in [&s.var_t0, &s.var_t1, &s.var_t2, &s.var_t3, &s.sinr] {
        out.push(Check::z(S, &format!("sinr_{}", e.label), e));
    }

    let leak_cfg = RawConfig::equal_power(100, 1, 2, 40, 10, 0.9, 1.0, 1.0).validate()?;
    let l = mc_leakage(&leak_cfg, 0.7, &run)?;
    if let Some(c) = &l.correlation_power {
        out.push(Check::z(S, "leakage_correlation_power", c));
    }
    out.push(Check::z(S, "leakage_adversary_power", &l.adversary_power));

    let id_cfg = RawConfig::equal_power(64, 1, 3, 40, 10, 1.0, 1.0, 0.5).validate()?;
    for row in mc_distribution_identity(&id_cfg, 1, &run)? {
        out.push(Check::z(S, &format!("identity_{}", row.name), &row.difference));
    }

    let jam = AttackSpec::new(AttackKind::DataOnlyJam, &cfg)?;
    let e = mc_end_to_end(&cfg, &jam, EndToEndOptions::default(), &run)?;
    out.push(Check::z(S, "end_to_end_data_jam_decodable", &e.decodable));
    out.push(Check::z(S, "end_to_end_data_jam_leakage", &e.leakage));

    let def_cfg = RawConfig {
        l_pilots: Some(10),
        j_subset: 5,
        ..RawConfig::equal_power(64, 1, 4, 30, 10, 10.0, 1.0, 1.0)
    }
    .validate()?;
    let attack = AttackSpec::new(AttackKind::RandomSubsetJam { jammed: 5 }, &def_cfg)?;
    let opts = EndToEndOptions {
        randomize_assignment: true,
        ..Default::default()
    };
    let e = mc_end_to_end(&def_cfg, &attack, opts, &run)?;
    out.push(Check::z(S, "end_to_end_defense_decodable", &e.decodable));
    out.push(Check::z(S, "end_to_end_defense_leakage", &e.leakage));
    Ok(out)
}

pub const COLUMNS: [&str; 8] = ["suite", "check", "value", "target", "metric", "score", "tolerance", "pass"];

pub fn run_verify(suite: Suite, seed: u64, trials: usize, workers: usize) -> CliResult<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Formulas | Suite::All) {
        checks.extend(formula_checks()?);
    }
    if matches!(suite, Suite::Statistics | Suite::All) {
        checks.extend(statistics_checks(seed, trials, workers)?);
    }
    let name = match suite {
        Suite::Formulas => "formulas",
        Suite::Statistics => "statistics",
        Suite::All => "all",
    };
    let tree = json!({ "suite": name });
    let prov = Provenance::new(format!("verify --suite {name}"), &tree).with_run(seed, trials);
    let mut table = ResultTable::new(prov, &COLUMNS);
    for c in &checks {
        table.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.value.into(),
            c.target.into(),
            c.metric.name().into(),
            c.score.into(),
            c.tolerance.into(),
            c.pass.into(),
        ])?;
    }
    Ok(VerifyReport { checks, table })
}
