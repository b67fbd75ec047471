//! Analytic sweeps behind figures 2 to 6.

use std::path::Path;

use secmimo::analytics::{defense_rate, rate_no_training_jamming};
use secmimo::thresholds::{g_epsilon, s_epsilon, v_of_r};
use secmimo::SystemConfig;

use crate::config::{
    load_with, AttackName, BeamformingKind, FileConfig, UserPowers,
};
use crate::error::{CliError, CliResult};
use crate::table::{Provenance, ResultTable};

pub const FIGURES: [u32; 5] = [2, 3, 4, 5, 6];

/// Fig 2 antenna grid: M = 2^4 .. 2^14.
pub fn fig2_antennas() -> Vec<usize> {
    (4..=14).map(|p| 1usize << p).collect()
}
pub const FIG2_ADVERSARY_ANTENNAS: [usize; 4] = [1, 2, 4, 8];

/// ε in 0.01 .. 0.30.
pub fn fig3_epsilons() -> Vec<f64> {
    (1..=30).map(|i| i as f64 / 100.0).collect()
}

/// δ in 0.01 .. 0.99.
pub fn fig4_deltas() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}
pub const FIG4_EPSILON: f64 = 0.05;
pub const FIG4_RATE: f64 = 0.2;

/// ε in 0.05 .. 1 in steps of 1/60 (contains 2/3).
pub fn fig5_epsilons() -> Vec<f64> {
    (3..=60).map(|i| i as f64 / 60.0).collect()
}

/// 60 log-spaced training lengths from M up to T inclusive.
pub fn fig6_training(m: usize, t: usize) -> Vec<usize> {
    let n = 60;
    let (lo, hi) = ((m as f64).ln(), (t as f64).ln());
    let mut v: Vec<usize> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    v[0] = m;
    v[n - 1] = t;
    v.dedup();
    v
}

fn equal(m: usize, m_e: usize, k: usize, t: usize, t_r: usize, rho_r: f64, rho_jam: f64) -> FileConfig {
    let mut c = FileConfig::default();
    c.system.m = m;
    c.system.m_e = m_e;
    c.system.k_users = k;
    c.system.t_block = t;
    c.system.t_train = t_r;
    c.power.rho_r = rho_r;
    c.power.rho_jam = rho_jam;
    c.power.rho_users = UserPowers::Equal(1.0);
    c.attack.kind = AttackName::None;
    c
}

/// Per-figure defaults, taken from the captions where they are stated.
pub fn figure_defaults(id: u32) -> CliResult<FileConfig> {
    let c = match id {
        // ρ_k=1, ρ_f=10, T_d/T=0.99, ρ_jam=1, a=0.9
        2 => equal(1024, 1, 10, 1000, 10, 0.9, 1.0),
        // ρ_k=1, δ=0.7, T/T_d=5/4, M_e=1
        3 => {
            let mut c = equal(100, 1, 1, 5, 1, 1.0, 1.0);
            c.beamforming.kind = BeamformingKind::DeltaConjugate;
            c.beamforming.delta = 0.7;
            c
        }
        // ε=0.05, T/T_d=5/4, M_e=1, ρ_k=1, R_k=0.2
        4 => equal(100, 1, 10, 50, 10, 0.9, 1.0),
        // γ=1, T=3·10^5, T_d=2·10^5, ρ_jam=1, K=5, ρ_f=5, M_e=1, ρ_r=10
        5 | 6 => {
            let mut c = equal(200, 1, 5, 300_000, 100_000, 10.0, 1.0);
            c.defense.l_pilots = Some(100_000);
            c.defense.randomize_assignment = true;
            c
        }
        _ => return Err(CliError::Invalid(format!("unknown figure {id}; expected one of 2-6"))),
    };
    Ok(c)
}

pub fn run_figure(id: u32, config: Option<&Path>, overrides: &[String]) -> CliResult<ResultTable> {
    let file = load_with(&figure_defaults(id)?, config, overrides)?;
    let resolved = file.resolve()?;
    let prov = Provenance::new(format!("figure {id}"), &resolved.tree);
    let cfg = &resolved.system;
    match id {
        2 => figure2(cfg, prov),
        3 => figure3(cfg, resolved.delta, prov),
        4 => figure4(cfg, prov),
        5 => figure5(cfg, prov),
        6 => figure6(cfg, prov),
        _ => unreachable!("validated by figure_defaults"),
    }
}

fn figure2(cfg: &SystemConfig, prov: Provenance) -> CliResult<ResultTable> {
    let mut t = ResultTable::new(prov, &["m", "m_e", "rate", "decodable", "leakage", "rate_over_log2_m"]);
    for &m_e in &FIG2_ADVERSARY_ANTENNAS {
        let mut raw = cfg.to_raw();
        raw.m_e = m_e;
        let c = raw.validate()?;
        for m in fig2_antennas() {
            let u = rate_no_training_jamming(&c, m as f64).users[0].clone();
            let mf = m as f64;
            t.push(vec![m.into(), m_e.into(), u.rate.into(), u.decodable.into(), u.leakage.into(), (u.rate / mf.log2()).into()])?;
        }
    }
    Ok(t)
}

fn figure3(cfg: &SystemConfig, delta: f64, prov: Provenance) -> CliResult<ResultTable> {
    let mut t = ResultTable::new(prov, &["epsilon", "s_epsilon"]);
    for eps in fig3_epsilons() {
        t.push(vec![eps.into(), s_epsilon(cfg, eps, delta)?.value.into()])?;
    }
    Ok(t)
}

fn figure4(cfg: &SystemConfig, prov: Provenance) -> CliResult<ResultTable> {
    let mut t = ResultTable::new(prov, &["delta", "v_r", "s_epsilon", "max_v_s"]);
    let rates = vec![FIG4_RATE; cfg.k()];
    for delta in fig4_deltas() {
        let v = v_of_r(cfg, &rates, delta)?.value;
        let s = s_epsilon(cfg, FIG4_EPSILON, delta)?.value;
        t.push(vec![delta.into(), v.into(), s.into(), v.max(s).into()])?;
    }
    Ok(t)
}

fn figure5(cfg: &SystemConfig, prov: Provenance) -> CliResult<ResultTable> {
    let mut t = ResultTable::new(prov, &["epsilon", "g_epsilon"]);
    for eps in fig5_epsilons() {
        t.push(vec![eps.into(), g_epsilon(cfg, eps)?.value.into()])?;
    }
    Ok(t)
}

/// ε = T_d/T - R_k/log2 M under the defense, with L = T_r and
/// ρ_r = (T_d/T_r) ρ_f. At T_r = T nothing is sent and both columns are 0.
fn figure6(cfg: &SystemConfig, prov: Provenance) -> CliResult<ResultTable> {
    let mut t = ResultTable::new(
        prov,
        &["t_r", "tr_over_t", "rho_r", "epsilon", "data_fraction", "rate_over_log2_m"],
    );
    let (m, total) = (cfg.m(), cfg.t());
    let log_m = (m as f64).log2();
    for t_r in fig6_training(m.max(cfg.k()), total) {
        let frac = t_r as f64 / total as f64;
        if t_r >= total {
            t.push(vec![t_r.into(), frac.into(), 0.0.into(), 0.0.into(), 0.0.into(), 0.0.into()])?;
            continue;
        }
        let mut raw = cfg.to_raw();
        raw.t_train = t_r;
        raw.l_pilots = Some(t_r);
        raw.j_subset = raw.j_subset.min(t_r);
        raw.rho_r = (total - t_r) as f64 / t_r as f64 * cfg.rho_f();
        let c = raw.validate()?;
        let rate = defense_rate(&c, m as f64)?.users[0].rate;
        let td = c.data_fraction();
        t.push(vec![
            t_r.into(),
            frac.into(),
            c.rho_r().into(),
            (td - rate / log_m).into(),
            td.into(),
            (rate / log_m).into(),
        ])?;
    }
    Ok(t)
}
