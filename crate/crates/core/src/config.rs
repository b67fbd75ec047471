//! System parameters and adversary description.
//!
//! [`RawConfig`] is the unchecked, serializable parameter set; [`SystemConfig`]
//! is only obtainable through [`validate`] and is immutable afterwards. All
//! rates derived from it are in bits per channel use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unchecked parameter set as read from a config file or built in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    /// BS antenna count.
    pub m: usize,
    /// Adversary antenna count. Zero models an eavesdropper-free cell.
    pub m_e: usize,
    pub k_users: usize,
    /// Coherence block length in channel uses.
    pub t_block: usize,
    /// Training length; the data phase is `t_block - t_train`.
    pub t_train: usize,
    pub rho_r: f64,
    pub rho_jam: f64,
    pub rho_users: Vec<f64>,
    /// Optional declared cumulative power; checked against the sum of `rho_users`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_f: Option<f64>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Pilot set size; defaults to `k_users`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_pilots: Option<usize>,
    #[serde(default = "default_j")]
    pub j_subset: usize,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_j() -> usize {
    1
}

impl RawConfig {
    /// Equal per-user powers, pilot set of size K, no δ rolloff.
    #[allow(clippy::too_many_arguments)]
    pub fn equal_power(
        m: usize,
        m_e: usize,
        k_users: usize,
        t_block: usize,
        t_train: usize,
        rho_r: f64,
        rho_user: f64,
        rho_jam: f64,
    ) -> Self {
        Self {
            m,
            m_e,
            k_users,
            t_block,
            t_train,
            rho_r,
            rho_jam,
            rho_users: vec![rho_user; k_users],
            rho_f: None,
            delta: 0.0,
            gamma: 1.0,
            l_pilots: None,
            j_subset: 1,
        }
    }

    pub fn validate(&self) -> Result<SystemConfig> {
        validate(self)
    }
}

/// Validated system parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    m: usize,
    m_e: usize,
    k: usize,
    t: usize,
    t_r: usize,
    rho_r: f64,
    rho_users: Vec<f64>,
    rho_f: f64,
    rho_jam: f64,
    delta: f64,
    gamma: f64,
    l: usize,
    j: usize,
}

fn check(cond: bool, name: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ViolatedInvariant(name.to_owned()))
    }
}

fn power_ok(p: f64) -> bool {
    p.is_finite() && p >= 0.0
}

/// Checks every parameter invariant and computes the cumulative power.
pub fn validate(raw: &RawConfig) -> Result<SystemConfig> {
    check(raw.m >= 1, "m >= 1")?;
    check(raw.k_users >= 1, "k_users >= 1")?;
    check(raw.t_train >= 1, "t_train >= 1")?;
    check(raw.t_block > raw.t_train, "t_block = t_train + t_data with t_data >= 1")?;
    check(
        raw.rho_users.len() == raw.k_users,
        "rho_users has one entry per user",
    )?;
    check(power_ok(raw.rho_r), "rho_r >= 0")?;
    check(power_ok(raw.rho_jam), "rho_jam >= 0")?;
    check(raw.rho_users.iter().all(|&p| power_ok(p)), "rho_users >= 0")?;
    let rho_f: f64 = raw.rho_users.iter().sum();
    if let Some(declared) = raw.rho_f {
        let tol = 1e-12 * rho_f.abs().max(1.0);
        check(
            declared.is_finite() && (declared - rho_f).abs() <= tol,
            "rho_f equals the sum of rho_users",
        )?;
    }
    check(raw.delta.is_finite() && raw.delta >= 0.0, "delta >= 0")?;
    check(raw.gamma.is_finite() && raw.gamma > 0.0, "gamma > 0")?;
    let l = raw.l_pilots.unwrap_or(raw.k_users);
    check(l >= raw.k_users, "k_users <= l_pilots")?;
    if l > raw.t_train {
        return Err(Error::Dimension(format!(
            "{l} orthogonal pilots do not fit in a training window of {}",
            raw.t_train
        )));
    }
    check(raw.j_subset >= 1 && raw.j_subset <= l, "1 <= j_subset <= l_pilots")?;

    Ok(SystemConfig {
        m: raw.m,
        m_e: raw.m_e,
        k: raw.k_users,
        t: raw.t_block,
        t_r: raw.t_train,
        rho_r: raw.rho_r,
        rho_users: raw.rho_users.clone(),
        rho_f,
        rho_jam: raw.rho_jam,
        delta: raw.delta,
        gamma: raw.gamma,
        l,
        j: raw.j_subset,
    })
}

impl SystemConfig {
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn m_e(&self) -> usize {
        self.m_e
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn t_r(&self) -> usize {
        self.t_r
    }
    pub fn t_d(&self) -> usize {
        self.t - self.t_r
    }
    /// Fraction of the block spent on data, T_d / T.
    pub fn data_fraction(&self) -> f64 {
        self.t_d() as f64 / self.t as f64
    }
    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }
    pub fn rho_users(&self) -> &[f64] {
        &self.rho_users
    }
    pub fn rho(&self, user: usize) -> f64 {
        self.rho_users[user]
    }
    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }
    pub fn rho_jam(&self) -> f64 {
        self.rho_jam
    }
    pub fn rho_max(&self) -> f64 {
        self.rho_users.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn rho_min(&self) -> f64 {
        self.rho_users.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn j(&self) -> usize {
        self.j
    }

    /// Pilot energy per user, T_r·ρ_r.
    pub fn pilot_energy(&self) -> f64 {
        self.t_r as f64 * self.rho_r
    }

    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            m: self.m,
            m_e: self.m_e,
            k_users: self.k,
            t_block: self.t,
            t_train: self.t_r,
            rho_r: self.rho_r,
            rho_jam: self.rho_jam,
            rho_users: self.rho_users.clone(),
            rho_f: Some(self.rho_f),
            delta: self.delta,
            gamma: self.gamma,
            l_pilots: Some(self.l),
            j_subset: self.j,
        }
    }

    /// Same parameters with a different BS antenna count.
    pub fn with_antennas(&self, m: usize) -> Result<Self> {
        let mut raw = self.to_raw();
        raw.m = m;
        validate(&raw)
    }

    pub fn with_rho_jam(&self, rho_jam: f64) -> Result<Self> {
        let mut raw = self.to_raw();
        raw.rho_jam = rho_jam;
        validate(&raw)
    }

    pub fn with_jammed_subset(&self, j: usize) -> Result<Self> {
        let mut raw = self.to_raw();
        raw.j_subset = j;
        validate(&raw)
    }
}

/// What the adversary does during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    /// Passive eavesdropper; no jamming at all.
    None,
    /// Gaussian jamming in the data phase only, silent during training.
    DataOnlyJam,
    /// Replays the target user's pilot from one antenna (known assignment).
    PilotMatching { target: usize },
    /// Jams `jammed` pilots drawn uniformly from the pilot set each block.
    RandomSubsetJam { jammed: usize },
}

/// A validated adversary model bound to a configuration's jamming power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackSpec {
    kind: AttackKind,
    rho_jam: f64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, cfg: &SystemConfig) -> Result<Self> {
        match kind {
            AttackKind::None | AttackKind::DataOnlyJam => {}
            AttackKind::PilotMatching { target } => {
                check(target < cfg.k(), "pilot-matching target is a valid user")?;
                check(cfg.m_e() >= 1, "pilot matching needs an adversary antenna")?;
            }
            AttackKind::RandomSubsetJam { jammed } => {
                check(jammed >= 1 && jammed <= cfg.l(), "1 <= jammed <= l_pilots")?;
                check(cfg.m_e() >= 1, "random-subset jamming needs an adversary antenna")?;
            }
        }
        Ok(Self {
            kind,
            rho_jam: cfg.rho_jam(),
        })
    }

    pub fn none(cfg: &SystemConfig) -> Self {
        Self::new(AttackKind::None, cfg).expect("passive attack is always valid")
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn rho_jam(&self) -> f64 {
        self.rho_jam
    }

    pub fn jams_data(&self) -> bool {
        !matches!(self.kind, AttackKind::None)
    }

    pub fn jams_training(&self) -> bool {
        matches!(
            self.kind,
            AttackKind::PilotMatching { .. } | AttackKind::RandomSubsetJam { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> RawConfig {
        RawConfig::equal_power(64, 1, 4, 20, 4, 2.5, 1.0, 1.0)
    }

    #[test]
    fn valid_config_derives_data_length() {
        let cfg = validate(&base()).unwrap();
        assert_eq!(cfg.t_d(), 16);
        assert_eq!(cfg.l(), 4);
        assert_eq!(cfg.rho_f(), 4.0);
    }

    #[test]
    fn too_many_pilots_is_dimension_error() {
        let mut raw = base();
        raw.l_pilots = Some(5);
        assert!(matches!(validate(&raw), Err(Error::Dimension(_))));
    }

    #[test]
    fn declared_rho_f_accepted_when_consistent() {
        let mut raw = RawConfig::equal_power(64, 1, 5, 20, 5, 10.0, 1.0, 1.0);
        raw.rho_f = Some(5.0);
        let cfg = validate(&raw).unwrap();
        assert_eq!(cfg.rho_f(), 5.0);
        raw.rho_f = Some(6.0);
        assert!(matches!(validate(&raw), Err(Error::ViolatedInvariant(_))));
    }

    #[test]
    fn each_invariant_is_enforced() {
        let cases: Vec<Box<dyn Fn(&mut RawConfig)>> = vec![
            Box::new(|r| r.m = 0),
            Box::new(|r| r.k_users = 0),
            Box::new(|r| r.t_train = 0),
            Box::new(|r| r.t_block = r.t_train),
            Box::new(|r| r.rho_users.pop().map(|_| ()).unwrap()),
            Box::new(|r| r.rho_r = -1.0),
            Box::new(|r| r.rho_jam = f64::NAN),
            Box::new(|r| r.rho_users[0] = -0.5),
            Box::new(|r| r.delta = -0.1),
            Box::new(|r| r.gamma = 0.0),
            Box::new(|r| r.l_pilots = Some(3)),
            Box::new(|r| r.j_subset = 0),
            Box::new(|r| r.j_subset = 5),
        ];
        for (i, mutate) in cases.iter().enumerate() {
            let mut raw = base();
            mutate(&mut raw);
            assert!(validate(&raw).is_err(), "case {i} accepted");
        }
    }

    #[test]
    fn attack_targets_are_checked() {
        let cfg = validate(&base()).unwrap();
        assert!(AttackSpec::new(AttackKind::PilotMatching { target: 3 }, &cfg).is_ok());
        assert!(AttackSpec::new(AttackKind::PilotMatching { target: 4 }, &cfg).is_err());
        assert!(AttackSpec::new(AttackKind::RandomSubsetJam { jammed: 0 }, &cfg).is_err());
        assert!(AttackSpec::new(AttackKind::RandomSubsetJam { jammed: 4 }, &cfg).is_ok());
        assert!(AttackSpec::new(AttackKind::RandomSubsetJam { jammed: 5 }, &cfg).is_err());
        let mut raw = base();
        raw.m_e = 0;
        let no_adv = validate(&raw).unwrap();
        assert!(AttackSpec::new(AttackKind::PilotMatching { target: 0 }, &no_adv).is_err());
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(
            m in 1usize..512,
            m_e in 0usize..8,
            k in 1usize..6,
            extra_l in 0usize..4,
            extra_tr in 0usize..4,
            t_d in 1usize..50,
            rho_r in 0.0f64..20.0,
            rho_jam in 0.0f64..5.0,
            delta in 0.0f64..1.0,
            gamma in 0.01f64..2.0,
            powers in proptest::collection::vec(0.0f64..3.0, 6),
        ) {
            let l = k + extra_l;
            let t_r = l + extra_tr;
            let raw = RawConfig {
                m, m_e, k_users: k, t_block: t_r + t_d, t_train: t_r,
                rho_r, rho_jam, rho_users: powers[..k].to_vec(), rho_f: None,
                delta, gamma, l_pilots: Some(l), j_subset: 1,
            };
            let once = validate(&raw).unwrap();
            let twice = validate(&once.to_raw()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn invalid_pilot_fits_are_rejected(k in 1usize..6, short in 1usize..4) {
            let l = k + 2;
            let raw = RawConfig {
                l_pilots: Some(l),
                ..RawConfig::equal_power(32, 1, k, 100, l.saturating_sub(short).max(1), 1.0, 1.0, 0.0)
            };
            prop_assert!(validate(&raw).is_err());
        }
    }
}
