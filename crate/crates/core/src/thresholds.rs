//! Antenna-count thresholds and the δ search for max(V, S).

use serde::Serialize;

use crate::analytics::{
    decodable_rate_delta_floor, defense_decodable_rate_delta_floor, defense_leakage_delta,
    leakage_delta_conjugate, quiet_a,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    S,
    V,
    G,
    S1,
    V1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub quantity: Threshold,
    /// Real-valued antenna count.
    pub value: f64,
    /// Smallest integer M with M ≥ value.
    pub antennas: u64,
    pub epsilon: Option<f64>,
    pub rates: Vec<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    /// Defining quantity at M = value minus its target: leakage - ε for S and
    /// S1, decodable floor - max R for V and V1, DoF slack for G.
    pub residual: f64,
}

impl ThresholdReport {
    fn new(quantity: Threshold, value: f64) -> Self {
        Self {
            quantity,
            value,
            antennas: value.ceil().max(0.0) as u64,
            epsilon: None,
            rates: Vec::new(),
            delta: None,
            gamma: None,
            residual: 0.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// 2^{(T/T_d) ε} - 1.
fn epsilon_gap(cfg: &SystemConfig, epsilon: f64) -> f64 {
    (epsilon / cfg.data_fraction() * std::f64::consts::LN_2).exp_m1()
}

fn argmax_user(cfg: &SystemConfig) -> usize {
    let rho_max = cfg.rho_max();
    cfg.rho_users().iter().position(|&r| r == rho_max).unwrap_or(0)
}

/// S(ε) = (M_e ρ_max / (2^{(T/T_d) ε} - 1))^{1/δ}.
pub fn s_epsilon(cfg: &SystemConfig, epsilon: f64, delta: f64) -> Result<ThresholdReport> {
    positive("epsilon", epsilon)?;
    positive("delta", delta)?;
    let value = (cfg.m_e() as f64 * cfg.rho_max() / epsilon_gap(cfg, epsilon)).powf(1.0 / delta);
    let mut r = ThresholdReport::new(Threshold::S, value);
    r.epsilon = Some(epsilon);
    r.delta = Some(delta);
    r.residual = leakage_delta_conjugate(cfg, value, delta, argmax_user(cfg)) - epsilon;
    Ok(r)
}

fn check_rates(cfg: &SystemConfig, rates: &[f64]) -> Result<()> {
    if rates.len() != cfg.k() {
        return Err(Error::Parameter(format!(
            "need one target rate per user ({}), got {}",
            cfg.k(),
            rates.len()
        )));
    }
    if rates.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::Parameter("target rates must be finite and non-negative".into()));
    }
    Ok(())
}

fn open_unit(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// max over users of ((2^{R_k T/T_d} - 1) · factor / ρ_k)^{1/(1-δ)}, with the
/// maximizing user.
fn rate_threshold(cfg: &SystemConfig, rates: &[f64], delta: f64, factor: f64) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (k, &r) in rates.iter().enumerate() {
        let gap = epsilon_gap(cfg, r);
        let base = if gap == 0.0 { 0.0 } else { gap * factor / cfg.rho(k) };
        let v = base.powf(1.0 / (1.0 - delta));
        if v > best.0 {
            best = (v, k);
        }
    }
    best
}

/// V(R) = max_k ((2^{R_k T/T_d} - 1)(ρ_f+ρ_jam+1)/(a ρ_k))^{1/(1-δ)}.
pub fn v_of_r(cfg: &SystemConfig, rates: &[f64], delta: f64) -> Result<ThresholdReport> {
    check_rates(cfg, rates)?;
    open_unit(delta)?;
    let factor = (cfg.rho_f() + cfg.rho_jam() + 1.0) / quiet_a(cfg);
    let (value, user) = rate_threshold(cfg, rates, delta, factor);
    let mut r = ThresholdReport::new(Threshold::V, value);
    r.rates = rates.to_vec();
    r.delta = Some(delta);
    if value > 0.0 {
        r.residual = decodable_rate_delta_floor(cfg, value, delta, user) - rates[user];
    }
    Ok(r)
}

/// G(ε) = ((1 + M_e ρ_max + M_e ρ_max ρ_jam/ρ_r)(ρ_f+ρ_jam+1)(ρ_r+ρ_jam+1)/(ρ_min ρ_r))^{T_d/(T ε)}.
pub fn g_epsilon(cfg: &SystemConfig, epsilon: f64) -> Result<ThresholdReport> {
    positive("epsilon", epsilon)?;
    let (rr, rj) = (cfg.rho_r(), cfg.rho_jam());
    let me_rho = cfg.m_e() as f64 * cfg.rho_max();
    let base = (1.0 + me_rho + me_rho * rj / rr) * (cfg.rho_f() + rj + 1.0) * (rr + rj + 1.0)
        / (cfg.rho_min() * rr);
    let td = cfg.data_fraction();
    let value = base.powf(td / epsilon);
    let mut r = ThresholdReport::new(Threshold::G, value);
    r.epsilon = Some(epsilon);
    // At M = G, (T_d/T) log base / log M equals ε.
    r.residual = td * base.ln() / value.ln() - epsilon;
    Ok(r)
}

/// S1(ε) = (ρ_max M_e max(1, ρ_jam/ρ_r) / (2^{(T/T_d) ε} - 1))^{1/min(δ, δ+γ-1)}.
pub fn s1_epsilon(cfg: &SystemConfig, epsilon: f64, delta: f64, gamma: f64) -> Result<ThresholdReport> {
    positive("epsilon", epsilon)?;
    positive("delta", delta)?;
    positive("gamma", gamma)?;
    if delta + gamma <= 1.0 {
        return Err(Error::Parameter(format!(
            "delta + gamma must exceed 1, got {}",
            delta + gamma
        )));
    }
    let ratio = (cfg.rho_jam() / cfg.rho_r()).max(1.0);
    let exponent = delta.min(delta + gamma - 1.0);
    let value = (cfg.rho_max() * cfg.m_e() as f64 * ratio / epsilon_gap(cfg, epsilon)).powf(1.0 / exponent);
    let mut r = ThresholdReport::new(Threshold::S1, value);
    r.epsilon = Some(epsilon);
    r.delta = Some(delta);
    r.gamma = Some(gamma);
    r.residual = defense_leakage_delta(cfg, value, delta, gamma, argmax_user(cfg))? - epsilon;
    Ok(r)
}

/// V1(R) = max_k ((2^{R_k T/T_d} - 1)(ρ_f+ρ_jam+1)(ρ_r+ρ_jam+1)/(ρ_r ρ_k))^{1/(1-δ)}.
pub fn v1_of_r(cfg: &SystemConfig, rates: &[f64], delta: f64) -> Result<ThresholdReport> {
    check_rates(cfg, rates)?;
    open_unit(delta)?;
    let (rr, rj) = (cfg.rho_r(), cfg.rho_jam());
    let factor = (cfg.rho_f() + rj + 1.0) * (rr + rj + 1.0) / rr;
    let (value, user) = rate_threshold(cfg, rates, delta, factor);
    let mut r = ThresholdReport::new(Threshold::V1, value);
    r.rates = rates.to_vec();
    r.delta = Some(delta);
    if value > 0.0 {
        r.residual = defense_decodable_rate_delta_floor(cfg, value, delta, user) - rates[user];
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaChoice {
    pub delta: f64,
    pub value: f64,
    pub v: f64,
    pub s: f64,
}

/// Grid argmin of max(V(R, δ), S(ε, δ)); ties go to the smaller δ.
pub fn optimize_delta(cfg: &SystemConfig, rates: &[f64], epsilon: f64, grid: &[f64]) -> Result<DeltaChoice> {
    let mut points: Vec<f64> = grid.to_vec();
    points.sort_by(f64::total_cmp);
    let mut best: Option<DeltaChoice> = None;
    for &delta in &points {
        let v = v_of_r(cfg, rates, delta)?.value;
        let s = s_epsilon(cfg, epsilon, delta)?.value;
        let value = v.max(s);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(DeltaChoice { delta, value, v, s });
        }
    }
    best.ok_or(Error::EmptyGrid)
}
