//! Closed-form rates, SINR, leakage and limits. All rates are in bits per
//! channel use; `m` is taken as a real number so thresholds can invert the
//! formulas at non-integer antenna counts.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// log2(1 + x), accurate for small x.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// MMSE coefficient a = T_r ρ_r / (T_r ρ_r + 1) under silent training.
pub fn quiet_a(cfg: &SystemConfig) -> f64 {
    let x = cfg.pilot_energy();
    x / (x + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// Conjugate beamforming with silent training; no clamp.
    NoTrainingJamming,
    /// Hidden random pilot assignment with L = T_r; clamped.
    Defense,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRate {
    pub user: usize,
    pub rate: f64,
    /// SINR numerator at the legitimate user.
    pub signal: f64,
    /// SINR denominator: interference + jamming + noise.
    pub interference: f64,
    /// Effective SNR inside the leakage logarithm.
    pub leakage_snr: f64,
    pub decodable: f64,
    pub leakage: f64,
    /// Whether the formula carries a [.]^+ clamp.
    pub clamped: bool,
    /// Set when an unclamped formula evaluates below zero.
    pub negative: bool,
    pub dof_ratio: f64,
}

impl UserRate {
    fn build(user: usize, td: f64, m: f64, signal: f64, interference: f64, leakage_snr: f64, clamped: bool) -> Self {
        let decodable = td * log2_1p(signal / interference);
        let leakage = td * log2_1p(leakage_snr);
        let raw = decodable - leakage;
        let rate = if clamped { raw.max(0.0) } else { raw };
        Self {
            user,
            rate,
            signal,
            interference,
            leakage_snr,
            decodable,
            leakage,
            clamped,
            negative: !clamped && raw < 0.0,
            dof_ratio: rate / m.log2(),
        }
    }

    /// Rate rebuilt from the stored components.
    pub fn recombined(&self) -> f64 {
        let raw = self.decodable - self.leakage;
        if self.clamped {
            raw.max(0.0)
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub formula: RateFormula,
    pub m: f64,
    pub users: Vec<UserRate>,
}

impl RateReport {
    pub fn user(&self, k: usize) -> &UserRate {
        &self.users[k]
    }
}

/// R_k = (T_d/T)[log2(1 + M ρ_k a/(ρ_f+ρ_jam+1)) - log2(1 + M_e ρ_k)].
pub fn rate_no_training_jamming(cfg: &SystemConfig, m: f64) -> RateReport {
    let a = quiet_a(cfg);
    let td = cfg.data_fraction();
    let interference = cfg.rho_f() + cfg.rho_jam() + 1.0;
    let users = (0..cfg.k())
        .map(|k| {
            let rho = cfg.rho(k);
            UserRate::build(k, td, m, m * rho * a, interference, cfg.m_e() as f64 * rho, false)
        })
        .collect();
    RateReport {
        formula: RateFormula::NoTrainingJamming,
        m,
        users,
    }
}

/// Variance decomposition of the received sample under conjugate beamforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrDecomposition {
    pub user: usize,
    /// Effective signal Var[T0] = M ρ_k a.
    pub var_t0: f64,
    /// Beamforming gain uncertainty Var[T1] = ρ_k.
    pub var_t1: f64,
    /// Inter-user interference Var[T2] = Σ_{j≠k} ρ_j.
    pub var_t2: f64,
    /// Jamming plus noise Var[T3] = ρ_jam + 1.
    pub var_t3: f64,
    pub sinr: f64,
}

pub fn sinr_conjugate(cfg: &SystemConfig, m: f64, user: usize) -> SinrDecomposition {
    let rho = cfg.rho(user);
    let var_t0 = m * rho * quiet_a(cfg);
    let var_t1 = rho;
    let var_t2 = cfg.rho_f() - rho;
    let var_t3 = cfg.rho_jam() + 1.0;
    SinrDecomposition {
        user,
        var_t0,
        var_t1,
        var_t2,
        var_t3,
        sinr: var_t0 / (var_t1 + var_t2 + var_t3),
    }
}

/// (T_d/T) log2(1 + M_e ρ_k / M^δ).
pub fn leakage_delta_conjugate(cfg: &SystemConfig, m: f64, delta: f64, user: usize) -> f64 {
    cfg.data_fraction() * log2_1p(cfg.m_e() as f64 * cfg.rho(user) * m.powf(-delta))
}

/// (T_d/T) log2(1 + M^{1-δ} a ρ_k / (M^{-δ} ρ_f + ρ_jam + 1)).
pub fn decodable_rate_delta(cfg: &SystemConfig, m: f64, delta: f64, user: usize) -> f64 {
    let den = m.powf(-delta) * cfg.rho_f() + cfg.rho_jam() + 1.0;
    cfg.data_fraction() * log2_1p(m.powf(1.0 - delta) * quiet_a(cfg) * cfg.rho(user) / den)
}

/// Lower envelope of [`decodable_rate_delta`] with ρ_f in place of M^{-δ} ρ_f.
/// V(R) is the exact inverse of this form.
pub fn decodable_rate_delta_floor(cfg: &SystemConfig, m: f64, delta: f64, user: usize) -> f64 {
    let den = cfg.rho_f() + cfg.rho_jam() + 1.0;
    cfg.data_fraction() * log2_1p(m.powf(1.0 - delta) * quiet_a(cfg) * cfg.rho(user) / den)
}

/// Defense counterpart of [`decodable_rate_delta_floor`], inverted by V1(R).
pub fn defense_decodable_rate_delta_floor(cfg: &SystemConfig, m: f64, delta: f64, user: usize) -> f64 {
    let (rr, rj) = (cfg.rho_r(), cfg.rho_jam());
    let den = (cfg.rho_f() + rj + 1.0) * (rr + rj + 1.0);
    cfg.data_fraction() * log2_1p(m.powf(1.0 - delta) * rr * cfg.rho(user) / den)
}

/// Pilot-matching example coefficients (a, b) for the target user.
fn matching_ab(cfg: &SystemConfig) -> (f64, f64) {
    let t_r = cfg.t_r() as f64;
    let x = cfg.pilot_energy();
    let d = x + 1.0 + t_r * cfg.rho_jam();
    (x / d, t_r * (cfg.rho_r() * cfg.rho_jam()).sqrt() / d)
}

/// [log2(a²/b²)]^+ = [log2(ρ_r/ρ_jam)]^+. Infinite when ρ_jam = 0.
pub fn pilot_matching_rate_limit(cfg: &SystemConfig) -> f64 {
    let (a, b) = matching_ab(cfg);
    (2.0 * (a / b).log2()).max(0.0)
}

/// [log2(1/M + ρ_k v) - log2(1/M + ρ_k w)]^+, without the T_d/T factor.
pub fn pilot_matching_bound_sample(v: f64, w: f64, rho_k: f64, m: f64) -> f64 {
    let inv = 1.0 / m;
    ((inv + rho_k * v).log2() - (inv + rho_k * w).log2()).max(0.0)
}

/// Large-M limits of the normalized correlations v_k and w_k for the
/// pilot-matching target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LlnStats {
    pub v: f64,
    pub w: f64,
    pub v_limit: f64,
    pub w_limit: f64,
    /// γ_k = |E[H_k,m Ĥ*_k,m]|².
    pub gamma_k: f64,
    /// π_k = |E[H_e,m Ĥ*_k,m]|².
    pub pi_k: f64,
}

impl LlnStats {
    pub fn limits(cfg: &SystemConfig) -> Self {
        let (a, b) = matching_ab(cfg);
        let t_r = cfg.t_r() as f64;
        let c = cfg.pilot_energy().sqrt() / (cfg.pilot_energy() + 1.0 + t_r * cfg.rho_jam());
        let alpha = a * a + b * b + c * c;
        Self {
            v: f64::NAN,
            w: f64::NAN,
            v_limit: a * a / alpha,
            w_limit: b * b / alpha,
            gamma_k: a * a,
            pi_k: b * b,
        }
    }

    pub fn with_samples(self, v: f64, w: f64) -> Self {
        Self { v, w, ..self }
    }
}

fn require_defense(cfg: &SystemConfig) -> Result<()> {
    if cfg.l() != cfg.t_r() {
        return Err(Error::Parameter(format!(
            "defense formulas need L = T_r, got L = {} and T_r = {}",
            cfg.l(),
            cfg.t_r()
        )));
    }
    Ok(())
}

/// Rate under hidden random pilot assignment with L = T_r (independent of J):
/// [(T_d/T) log2(1 + M ρ_k ρ_r T_r/((ρ_f+ρ_jam+1)(ρ_r T_r+ρ_jam+1)))
///  - (T_d/T) log2(1 + M_e ρ_k + M_e M ρ_k ρ_jam/(ρ_r T_r+ρ_jam+1))]^+.
pub fn defense_rate(cfg: &SystemConfig, m: f64) -> Result<RateReport> {
    require_defense(cfg)?;
    let td = cfg.data_fraction();
    let x = cfg.pilot_energy();
    let rj = cfg.rho_jam();
    let me = cfg.m_e() as f64;
    let interference = (cfg.rho_f() + rj + 1.0) * (x + rj + 1.0);
    let users = (0..cfg.k())
        .map(|k| {
            let rho = cfg.rho(k);
            let leak = me * rho + me * m * rho * rj / (x + rj + 1.0);
            UserRate::build(k, td, m, m * rho * x, interference, leak, true)
        })
        .collect();
    Ok(RateReport {
        formula: RateFormula::Defense,
        m,
        users,
    })
}

/// (T_d/T) min(1, γ) - ε.
pub fn defense_dof_lower_bound(cfg: &SystemConfig, gamma: f64, epsilon: f64) -> f64 {
    cfg.data_fraction() * gamma.min(1.0) - epsilon
}

/// (T_d/T) log2(1 + M_e ρ_k/M^δ + M^{1-δ-γ} M_e ρ_k ρ_jam/ρ_r), for δ + γ > 1.
pub fn defense_leakage_delta(cfg: &SystemConfig, m: f64, delta: f64, gamma: f64, user: usize) -> Result<f64> {
    if delta + gamma <= 1.0 {
        return Err(Error::Parameter(format!(
            "delta + gamma must exceed 1, got {}",
            delta + gamma
        )));
    }
    let me_rho = cfg.m_e() as f64 * cfg.rho(user);
    let snr = me_rho * m.powf(-delta) + m.powf(1.0 - delta - gamma) * me_rho * cfg.rho_jam() / cfg.rho_r();
    Ok(cfg.data_fraction() * log2_1p(snr))
}
