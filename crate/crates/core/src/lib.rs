//! Physical-layer security laboratory for single-cell TDD massive-MIMO
//! downlink.
//!
//! The crate synthesizes training and data phases under three adversary
//! models, estimates channels, applies conjugate and δ-conjugate
//! beamforming, evaluates the closed-form secure rates, leakage terms and
//! antenna thresholds, and checks them against Monte-Carlo experiments.
//! Rates are in bits per channel use. User, pilot and antenna indices are
//! 0-based.
//!
//! ```
//! use secmimo::config::RawConfig;
//! use secmimo::thresholds::s_epsilon;
//!
//! let cfg = RawConfig::equal_power(100, 1, 1, 5, 1, 1.0, 1.0, 1.0).validate().unwrap();
//! let s = s_epsilon(&cfg, 0.05, 0.7).unwrap();
//! assert!(s.antennas <= 100);
//! ```

pub mod airsim;
pub mod analytics;
pub mod config;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod precoding;
pub mod rng;
pub mod thresholds;

pub use config::{AttackKind, AttackSpec, RawConfig, SystemConfig};
pub use error::{Error, Result};
pub use rng::{derive_seed, SeedPath};
