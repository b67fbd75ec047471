//! JSON config file with sections system/power/beamforming/attack/defense/mc
//! and dotted `key=value` overrides.

use std::path::Path;

use secmimo::config::{AttackKind, AttackSpec, RawConfig, SystemConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub m: usize,
    pub m_e: usize,
    pub k_users: usize,
    pub t_block: usize,
    pub t_train: usize,
}

/// Either one power for every user or one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserPowers {
    Equal(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub rho_r: f64,
    pub rho_jam: f64,
    pub rho_users: UserPowers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformingKind {
    Conjugate,
    DeltaConjugate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamformingSection {
    pub kind: BeamformingKind,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackName {
    None,
    DataOnlyJam,
    PilotMatching,
    RandomSubsetJam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackName,
    #[serde(default)]
    pub target_user: usize,
    #[serde(default = "one")]
    pub j_subset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseSection {
    #[serde(default)]
    pub l_pilots: Option<usize>,
    #[serde(default)]
    pub randomize_assignment: bool,
    #[serde(default = "one_f")]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: SystemSection,
    pub power: PowerSection,
    pub beamforming: BeamformingSection,
    pub attack: AttackSection,
    pub defense: DefenseSection,
    pub mc: McSection,
}

impl Default for FileConfig {
    /// M=256, K=4, M_e=1, T=1000, T_r=10, ρ_r=0.9, ρ_k=1, ρ_jam=1, conjugate
    /// beamforming, passive adversary, static pilots.
    fn default() -> Self {
        Self {
            system: SystemSection {
                m: 256,
                m_e: 1,
                k_users: 4,
                t_block: 1000,
                t_train: 10,
            },
            power: PowerSection {
                rho_r: 0.9,
                rho_jam: 1.0,
                rho_users: UserPowers::Equal(1.0),
            },
            beamforming: BeamformingSection {
                kind: BeamformingKind::Conjugate,
                delta: 0.0,
            },
            attack: AttackSection {
                kind: AttackName::None,
                target_user: 0,
                j_subset: 1,
            },
            defense: DefenseSection {
                l_pilots: None,
                randomize_assignment: false,
                gamma: 1.0,
            },
            mc: McSection { trials: 1000, seed: 1 },
        }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: FileConfig,
    pub system: SystemConfig,
    pub attack: AttackSpec,
    /// δ actually applied (0 for conjugate beamforming).
    pub delta: f64,
    /// Canonical JSON tree, used for the provenance hash.
    pub tree: Value,
}

impl FileConfig {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn raw(&self) -> RawConfig {
        let k = self.system.k_users;
        let rho_users = match &self.power.rho_users {
            UserPowers::Equal(p) => vec![*p; k],
            UserPowers::PerUser(v) => v.clone(),
        };
        RawConfig {
            m: self.system.m,
            m_e: self.system.m_e,
            k_users: k,
            t_block: self.system.t_block,
            t_train: self.system.t_train,
            rho_r: self.power.rho_r,
            rho_jam: self.power.rho_jam,
            rho_users,
            rho_f: None,
            delta: self.delta(),
            gamma: self.defense.gamma,
            l_pilots: self.defense.l_pilots,
            j_subset: self.attack.j_subset,
        }
    }

    pub fn delta(&self) -> f64 {
        match self.beamforming.kind {
            BeamformingKind::Conjugate => 0.0,
            BeamformingKind::DeltaConjugate => self.beamforming.delta,
        }
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let system = self.raw().validate()?;
        let kind = match self.attack.kind {
            AttackName::None => AttackKind::None,
            AttackName::DataOnlyJam => AttackKind::DataOnlyJam,
            AttackName::PilotMatching => AttackKind::PilotMatching {
                target: self.attack.target_user,
            },
            AttackName::RandomSubsetJam => AttackKind::RandomSubsetJam {
                jammed: self.attack.j_subset,
            },
        };
        let attack = AttackSpec::new(kind, &system)?;
        Ok(Resolved {
            file: self.clone(),
            system,
            attack,
            delta: self.delta(),
            tree: self.to_value(),
        })
    }
}

/// Sets `a.b.c` in a JSON tree. The value is parsed as JSON when possible
/// and kept as a string otherwise.
pub fn apply_override(tree: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Invalid(format!("`{key}` descends into a non-section")))?;
        if i + 1 == parts.len() {
            map.insert((*part).to_owned(), value);
            return Ok(());
        }
        node = map.entry((*part).to_owned()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Invalid(format!("empty override key in `{assignment}`")))
}

/// Starts from `base`, merges the file at `path` (if any) section by
/// section, then applies the overrides.
pub fn load_with(base: &FileConfig, path: Option<&Path>, overrides: &[String]) -> CliResult<FileConfig> {
    let mut tree = base.to_value();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", p.display())))?;
        let file: Value = serde_json::from_str(&text)?;
        merge(&mut tree, file);
    }
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    serde_json::from_value(tree).map_err(|e| CliError::Invalid(format!("config: {e}")))
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<FileConfig> {
    load_with(&FileConfig::default(), path, overrides)
}

fn merge(into: &mut Value, from: Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_resolves() {
        let r = FileConfig::default().resolve().unwrap();
        assert_eq!(r.system.m(), 256);
        assert_eq!(r.system.rho_f(), 4.0);
    }

    #[test]
    fn overrides_parse_types() {
        let c = load(None, &["system.m=64".into(), "attack.kind=pilot_matching".into(), "power.rho_users=[1,2,1,1]".into()]).unwrap();
        assert_eq!(c.system.m, 64);
        assert_eq!(c.attack.kind, AttackName::PilotMatching);
        assert_eq!(c.raw().rho_users, vec![1.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(load(None, &["system.antennas=3".into()]), Err(CliError::Invalid(_))));
        assert!(matches!(load(None, &["nonsense".into()]), Err(CliError::Invalid(_))));
    }

    #[test]
    fn too_many_pilots_is_invalid_input() {
        let c = load(None, &["defense.l_pilots=20".into()]).unwrap();
        let err = c.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
