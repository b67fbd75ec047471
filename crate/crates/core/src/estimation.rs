//! Channel estimation at the BS.
//!
//! The signal path projects the training observation onto each user's pilot
//! and scales it: Ĥ_k = s_k · (Y_tr φ_ℓk*)ᵀ. The [`CoefficientRecord`] holds
//! the per-user scale, the per-element second moment α_k of the result, and
//! the closed-form coefficients of the regime in force.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::Serialize;

use crate::airsim::{BlockChannels, PilotAssignment, PilotSet, TrainingObservation};
use crate::config::{AttackKind, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{complex_normal_matrix, SeedPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Silent training (no attack or data-only jamming).
    NoJam,
    PilotMatching { target: usize },
    RandomSubset { jammed: usize },
}

impl Regime {
    pub fn from_attack(kind: AttackKind) -> Self {
        match kind {
            AttackKind::None | AttackKind::DataOnlyJam => Regime::NoJam,
            AttackKind::PilotMatching { target } => Regime::PilotMatching { target },
            AttackKind::RandomSubsetJam { jammed } => Regime::RandomSubset { jammed },
        }
    }
}

/// Closed-form description of the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Coefficients {
    /// Ĥ_k = a H_k + b V_k.
    NoJam { a: f64, b: f64 },
    /// Target: a H_k + b H_e + c V_k. Others: d H_l + e V_l.
    PilotMatching { target: usize, a: f64, b: f64, c: f64, d: f64, e: f64 },
    /// Ĥ_k = x1 (√(T_r ρ_r) H_k + Π Σ_n √(T_r ρ_jam/(M_e J)) H_e,n + V_k),
    /// with P(Π = 1) = J/L.
    RandomSubset { x1: f64, jammed: usize, pilots: usize, jam_gain: f64, hit_probability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRecord {
    pub regime: Regime,
    pub coefficients: Coefficients,
    /// Multiplier applied to the pilot projection, per user.
    pub scale: Vec<f64>,
    /// Per-element second moment E|Ĥ_k,m|² of the estimate, per user.
    pub alpha: Vec<f64>,
    /// True when the BS scales as if training were silent regardless of the attack.
    pub mismatched: bool,
}

impl CoefficientRecord {
    pub fn users(&self) -> usize {
        self.alpha.len()
    }

    /// Per-element cross moment E[Ĥ*_k,m H_k,m] (real for every regime).
    pub fn own_correlation(&self, user: usize, cfg: &SystemConfig) -> f64 {
        let x = cfg.pilot_energy();
        self.scale[user] * x
    }

    /// Per-element cross moment E[Ĥ*_k,m H_e,m] against adversary antenna 0.
    pub fn adversary_correlation(&self, user: usize, cfg: &SystemConfig) -> f64 {
        let t_r = cfg.t_r() as f64;
        match self.regime {
            Regime::NoJam => 0.0,
            Regime::PilotMatching { target } if target == user => {
                self.scale[user] * t_r * (cfg.rho_r() * cfg.rho_jam()).sqrt()
            }
            Regime::PilotMatching { .. } => 0.0,
            Regime::RandomSubset { jammed } => {
                let p = jammed as f64 / cfg.l() as f64;
                let amp = t_r * (cfg.rho_r() * cfg.rho_jam() / (cfg.m_e() * jammed) as f64).sqrt();
                p * self.scale[user] * amp
            }
        }
    }
    /// Per-element cross moment E[Ĥ_k,m Ĥ*_l,m] between distinct users.
    /// Nonzero only under random-subset jamming, where both estimates carry
    /// the common jamming term when both pilots are hit.
    pub fn cross_correlation(&self, user: usize, other: usize, cfg: &SystemConfig) -> f64 {
        match (self.regime, self.coefficients) {
            (Regime::RandomSubset { jammed }, Coefficients::RandomSubset { x1, .. }) if user != other => {
                let (j, l) = (jammed as f64, cfg.l() as f64);
                if l < 2.0 {
                    return 0.0;
                }
                x1 * x1 * cfg.t_r() as f64 * cfg.rho_jam() * (j - 1.0) / (l * (l - 1.0))
            }
            _ => 0.0,
        }
    }
}

fn check_regime(cfg: &SystemConfig, regime: Regime) -> Result<()> {
    match regime {
        Regime::NoJam => Ok(()),
        Regime::PilotMatching { target } if target < cfg.k() && cfg.m_e() >= 1 => Ok(()),
        Regime::RandomSubset { jammed } if jammed >= 1 && jammed <= cfg.l() && cfg.m_e() >= 1 => {
            Ok(())
        }
        _ => Err(Error::RegimeMismatch(format!("{regime:?} is not valid for this configuration"))),
    }
}

/// Genie MMSE coefficients for `regime`.
pub fn mmse_coefficients(cfg: &SystemConfig, regime: Regime) -> Result<CoefficientRecord> {
    check_regime(cfg, regime)?;
    let k = cfg.k();
    let t_r = cfg.t_r() as f64;
    let x = cfg.pilot_energy();
    let rj = cfg.rho_jam();
    let quiet_a = x / (x + 1.0);
    let quiet_b = x.sqrt() / (x + 1.0);

    let (coefficients, scale, alpha) = match regime {
        Regime::NoJam => (
            Coefficients::NoJam { a: quiet_a, b: quiet_b },
            vec![1.0 / (x + 1.0); k],
            vec![quiet_a; k],
        ),
        Regime::PilotMatching { target } => {
            let d = x + 1.0 + t_r * rj;
            let mut scale = vec![1.0 / (x + 1.0); k];
            let mut alpha = vec![quiet_a; k];
            scale[target] = 1.0 / d;
            alpha[target] = x / d;
            (
                Coefficients::PilotMatching {
                    target,
                    a: x / d,
                    b: t_r * (cfg.rho_r() * rj).sqrt() / d,
                    c: x.sqrt() / d,
                    d: quiet_a,
                    e: quiet_b,
                },
                scale,
                alpha,
            )
        }
        Regime::RandomSubset { jammed } => {
            let (j, l) = (jammed as f64, cfg.l() as f64);
            let m = cfg.m() as f64;
            let x1 = 1.0 / (m.sqrt() * (x + 1.0 + t_r * rj / j).sqrt());
            // Mixture over the hit indicator: Π = 1 with probability J/L.
            let alpha = x1 * x1 * (x + 1.0 + t_r * rj / l);
            (
                Coefficients::RandomSubset {
                    x1,
                    jammed,
                    pilots: cfg.l(),
                    jam_gain: (t_r * rj / (cfg.m_e() as f64 * j)).sqrt(),
                    hit_probability: j / l,
                },
                vec![x1 / x.sqrt(); k],
                vec![alpha; k],
            )
        }
    };
    Ok(CoefficientRecord {
        regime,
        coefficients,
        scale,
        alpha,
        mismatched: false,
    })
}

/// Estimator that ignores training-phase jamming: every user is scaled by
/// 1/(T_r ρ_r + 1). α_k is the true second moment under the actual attack.
pub fn mismatched_coefficients(cfg: &SystemConfig, regime: Regime) -> Result<CoefficientRecord> {
    let mut rec = mmse_coefficients(cfg, regime)?;
    let x = cfg.pilot_energy();
    let t_r = cfg.t_r() as f64;
    let rj = cfg.rho_jam();
    let s = 1.0 / (x + 1.0);
    // Second moment of the raw projection, per element.
    let proj_moment = |jam: f64| x * (x + jam + 1.0);
    rec.scale = vec![s; cfg.k()];
    rec.alpha = (0..cfg.k())
        .map(|user| {
            let jam = match regime {
                Regime::NoJam => 0.0,
                Regime::PilotMatching { target } if target == user => t_r * rj,
                Regime::PilotMatching { .. } => 0.0,
                Regime::RandomSubset { .. } => t_r * rj / cfg.l() as f64,
            };
            s * s * proj_moment(jam)
        })
        .collect();
    rec.mismatched = true;
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// K x M, row k is Ĥ_k.
    pub hhat: Array2<Complex64>,
    pub record: CoefficientRecord,
    /// Contamination indicators for the block (all false when not applicable).
    pub hits: Vec<bool>,
}

impl ChannelEstimate {
    pub fn alpha(&self, user: usize) -> f64 {
        self.record.alpha[user]
    }
}

/// Projects Y_tr onto each assigned pilot and applies the record's scaling.
pub fn estimate_channels(
    obs: &TrainingObservation,
    pilots: &PilotSet,
    assignment: &PilotAssignment,
    record: &CoefficientRecord,
) -> Result<ChannelEstimate> {
    let (m, t_r) = obs.y_tr.dim();
    if t_r != pilots.t_r() {
        return Err(Error::Dimension(format!(
            "training observation has {t_r} uses, pilots have {}",
            pilots.t_r()
        )));
    }
    if assignment.users() != record.users() {
        return Err(Error::RegimeMismatch(format!(
            "record covers {} users, assignment {}",
            record.users(),
            assignment.users()
        )));
    }
    if Regime::from_attack(obs.attack) != record.regime {
        return Err(Error::RegimeMismatch(format!(
            "observation synthesized under {:?}, record is {:?}",
            obs.attack, record.regime
        )));
    }
    let sq_r = pilots.rho_r().sqrt();
    let k = record.users();
    let mut hhat = Array2::zeros((k, m));
    for user in 0..k {
        let u = pilots.unit_row(assignment.pilot_of(user));
        let s = record.scale[user] * sq_r;
        for (out, y_row) in hhat.row_mut(user).iter_mut().zip(obs.y_tr.rows()) {
            let acc: Complex64 = y_row.iter().zip(u.iter()).map(|(y, p)| y * p.conj()).sum();
            *out = acc * s;
        }
    }
    Ok(ChannelEstimate {
        hhat,
        record: record.clone(),
        hits: obs.hits.clone(),
    })
}

/// Rebuilds the estimate from its closed form, using V_k = W φ_ℓk* / √(T_r ρ_r)
/// computed from the same training noise W. Requires ρ_r > 0.
pub fn coefficient_form(
    channels: &BlockChannels,
    training_noise: &Array2<Complex64>,
    pilots: &PilotSet,
    assignment: &PilotAssignment,
    record: &CoefficientRecord,
    hits: &[bool],
) -> Result<Array2<Complex64>> {
    if record.mismatched {
        return Err(Error::RegimeMismatch("closed form is defined for the genie estimator".into()));
    }
    let m = channels.m();
    let t_r = pilots.t_r() as f64;
    let norm = (t_r * pilots.rho_r()).sqrt();
    let k = record.users();
    let mut out = Array2::zeros((k, m));
    for user in 0..k {
        let u = pilots.unit_row(assignment.pilot_of(user));
        let v: Array1<Complex64> = training_noise
            .rows()
            .into_iter()
            .map(|w| w.iter().zip(u.iter()).map(|(w, p)| w * p.conj()).sum::<Complex64>() / t_r.sqrt())
            .collect();
        let h = channels.h.row(user);
        let row = match record.coefficients {
            Coefficients::NoJam { a, b } => &h.mapv(|z| z * a) + &v.mapv(|z| z * b),
            Coefficients::PilotMatching { target, a, b, c, d, e } => {
                if user == target {
                    &(&h.mapv(|z| z * a) + &channels.h_e.row(0).mapv(|z| z * b)) + &v.mapv(|z| z * c)
                } else {
                    &h.mapv(|z| z * d) + &v.mapv(|z| z * e)
                }
            }
            Coefficients::RandomSubset { x1, jam_gain, .. } => {
                let mut acc = &h.mapv(|z| z * norm) + &v;
                if hits[user] {
                    acc = &acc + &channels.h_e.sum_axis(Axis(0)).mapv(|z| z * jam_gain);
                }
                acc.mapv(|z| z * x1)
            }
        };
        out.row_mut(user).assign(&row);
    }
    Ok(out)
}

/// H̃_k = b H_k + a H_e + c V with a fresh V ~ CN(0, I_M), for the target user.
pub fn construct_tilde_channel(
    channels: &BlockChannels,
    record: &CoefficientRecord,
    seed: &SeedPath,
) -> Result<Array1<Complex64>> {
    let Coefficients::PilotMatching { target, a, b, c, .. } = record.coefficients else {
        return Err(Error::RegimeMismatch("tilde channel needs a pilot-matching record".into()));
    };
    let m = channels.m();
    let v = complex_normal_matrix(&mut seed.child("tilde_v").rng(), 1, m, 1.0);
    let h = channels.h.row(target);
    let he = channels.h_e.row(0);
    Ok(Array1::from_shape_fn(m, |i| b * h[i] + a * he[i] + c * v[[0, i]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airsim::{
        assign_pilots, build_orthogonal_pilots, sample_block_channels, sample_training_noise,
        synth_training, AssignmentPolicy,
    };
    use crate::config::{AttackSpec, RawConfig};

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn no_jam_coefficients() {
        let cfg = RawConfig::equal_power(16, 1, 2, 20, 10, 0.9, 1.0, 1.0).validate().unwrap();
        let rec = mmse_coefficients(&cfg, Regime::NoJam).unwrap();
        let Coefficients::NoJam { a, b } = rec.coefficients else { panic!() };
        close(a, 0.9);
        close(b, 0.3);
        close(rec.alpha[0], 0.9);
    }

    #[test]
    fn pilot_matching_coefficients() {
        let cfg = RawConfig::equal_power(16, 1, 2, 20, 10, 1.0, 1.0, 1.0).validate().unwrap();
        let rec = mmse_coefficients(&cfg, Regime::PilotMatching { target: 0 }).unwrap();
        let Coefficients::PilotMatching { a, b, c, d, e, .. } = rec.coefficients else { panic!() };
        close(a, 0.47619047619047616);
        close(b, 0.47619047619047616);
        close(c, 0.15058465048420854);
        close(d, 10.0 / 11.0);
        close(e, 10f64.sqrt() / 11.0);
        close(rec.alpha[0], a * a + b * b + c * c);
        close(rec.alpha[0], 10.0 / 21.0);
        close(rec.alpha[1], d);
    }

    #[test]
    fn random_subset_alpha_is_the_mixture_moment() {
        let cfg = RawConfig {
            l_pilots: Some(8),
            ..RawConfig::equal_power(32, 2, 2, 20, 8, 2.0, 1.0, 3.0)
        }
        .validate()
        .unwrap();
        let rec = mmse_coefficients(&cfg, Regime::RandomSubset { jammed: 2 }).unwrap();
        let Coefficients::RandomSubset { x1, jam_gain, hit_probability, .. } = rec.coefficients else {
            panic!()
        };
        let x = 16.0;
        let hit = x + 1.0 + jam_gain * jam_gain * 2.0;
        let miss = x + 1.0;
        close(rec.alpha[0], x1 * x1 * (hit_probability * hit + (1.0 - hit_probability) * miss));
        // Conditioned on a hit, E||Ĥ||² = 1.
        close(32.0 * x1 * x1 * (x + 1.0 + 8.0 * 3.0 / 2.0), 1.0);
    }

    fn surrogate_matches(raw: RawConfig, kind: AttackKind, policy: AssignmentPolicy) {
        let cfg = raw.validate().unwrap();
        let attack = AttackSpec::new(kind, &cfg).unwrap();
        let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r()).unwrap();
        let rec = mmse_coefficients(&cfg, Regime::from_attack(kind)).unwrap();
        for block in 0..20 {
            let seed = SeedPath::new(77).index(block);
            let ch = sample_block_channels(&cfg, &seed);
            let asg = assign_pilots(policy, &cfg, &seed);
            let obs = synth_training(&ch, &pilots, &asg, &attack, &seed).unwrap();
            let est = estimate_channels(&obs, &pilots, &asg, &rec).unwrap();
            let w = sample_training_noise(cfg.m(), cfg.t_r(), &seed);
            let form = coefficient_form(&ch, &w, &pilots, &asg, &rec, &obs.hits).unwrap();
            for (x, y) in est.hhat.iter().zip(form.iter()) {
                assert!((x - y).norm() <= 1e-9 * (1.0 + y.norm()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn signal_path_equals_closed_form() {
        surrogate_matches(
            RawConfig::equal_power(24, 1, 3, 30, 5, 1.8, 1.0, 0.7),
            AttackKind::None,
            AssignmentPolicy::Static,
        );
        surrogate_matches(
            RawConfig::equal_power(24, 1, 3, 30, 5, 1.8, 1.0, 0.7),
            AttackKind::PilotMatching { target: 1 },
            AssignmentPolicy::Static,
        );
        surrogate_matches(
            RawConfig {
                l_pilots: Some(8),
                ..RawConfig::equal_power(24, 3, 3, 30, 8, 1.2, 1.0, 2.0)
            },
            AttackKind::RandomSubsetJam { jammed: 3 },
            AssignmentPolicy::RandomPerBlock,
        );
    }

    #[test]
    fn regime_mismatch_detected() {
        let cfg = RawConfig::equal_power(8, 1, 2, 20, 4, 1.0, 1.0, 1.0).validate().unwrap();
        let pilots = build_orthogonal_pilots(2, 4, 1.0).unwrap();
        let seed = SeedPath::new(1);
        let ch = sample_block_channels(&cfg, &seed);
        let asg = assign_pilots(AssignmentPolicy::Static, &cfg, &seed);
        let attack = AttackSpec::new(AttackKind::PilotMatching { target: 0 }, &cfg).unwrap();
        let obs = synth_training(&ch, &pilots, &asg, &attack, &seed).unwrap();
        let rec = mmse_coefficients(&cfg, Regime::NoJam).unwrap();
        assert!(matches!(
            estimate_channels(&obs, &pilots, &asg, &rec),
            Err(Error::RegimeMismatch(_))
        ));
        assert!(construct_tilde_channel(&ch, &rec, &seed).is_err());
    }

    #[test]
    fn mismatched_estimator_alpha() {
        let cfg = RawConfig::equal_power(8, 1, 2, 20, 10, 1.0, 1.0, 1.0).validate().unwrap();
        let rec = mismatched_coefficients(&cfg, Regime::PilotMatching { target: 0 }).unwrap();
        // (100 + 100 + 10) / 121
        close(rec.alpha[0], 210.0 / 121.0);
        close(rec.alpha[1], 10.0 / 11.0);
    }
}
