//! Block-fading channel sampling and received-signal synthesis.
//!
//! Seed layout: every function takes a block-level [`SeedPath`] and draws from
//! fixed named children of it (`h`, `h_e`, `h_jam`, `w`, `w_e`, `jam_set`,
//! `v`, `v_e`, `v_jam`, `assign`). Toggling the attack therefore never changes
//! the channel or noise realization for the same block path.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{AttackKind, AttackSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{complex_normal_matrix, sample_distinct, SeedLabel, SeedPath};

/// Channel gains for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannels {
    /// K x M, row k is H_k.
    pub h: Array2<Complex64>,
    /// M_e x M.
    pub h_e: Array2<Complex64>,
    /// K x M_e, row k is H_jam,k.
    pub h_jam: Array2<Complex64>,
    pub block: u64,
}

impl BlockChannels {
    pub fn m(&self) -> usize {
        self.h.ncols()
    }
    pub fn k(&self) -> usize {
        self.h.nrows()
    }
    pub fn m_e(&self) -> usize {
        self.h_e.nrows()
    }
}

fn block_index(seed: &SeedPath) -> u64 {
    match seed.labels().last() {
        Some(SeedLabel::Index(i)) => *i,
        _ => 0,
    }
}

pub fn sample_block_channels(cfg: &SystemConfig, seed: &SeedPath) -> BlockChannels {
    let (m, m_e, k) = (cfg.m(), cfg.m_e(), cfg.k());
    BlockChannels {
        h: complex_normal_matrix(&mut seed.child("h").rng(), k, m, 1.0),
        h_e: complex_normal_matrix(&mut seed.child("h_e").rng(), m_e, m, 1.0),
        h_jam: complex_normal_matrix(&mut seed.child("h_jam").rng(), k, m_e, 1.0),
        block: block_index(seed),
    }
}

/// L mutually orthogonal pilots of length T_r with per-use power ρ_r.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    /// L x T_r, unit-modulus DFT rows. The transmitted pilot is √ρ_r times a row.
    unit: Array2<Complex64>,
    rho_r: f64,
}

impl PilotSet {
    pub fn len(&self) -> usize {
        self.unit.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.unit.nrows() == 0
    }
    pub fn t_r(&self) -> usize {
        self.unit.ncols()
    }
    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }
    /// Full pilot matrix Phi (L x T_r), rows φ_ℓ.
    pub fn phi(&self) -> Array2<Complex64> {
        self.unit.mapv(|z| z * self.rho_r.sqrt())
    }
    /// Unit-modulus row ℓ, i.e. φ_ℓ/√ρ_r.
    pub fn unit_row(&self, l: usize) -> ArrayView1<'_, Complex64> {
        self.unit.row(l)
    }
}

pub fn build_orthogonal_pilots(l: usize, t_r: usize, rho_r: f64) -> Result<PilotSet> {
    if l > t_r {
        return Err(Error::Dimension(format!(
            "{l} orthogonal pilots do not fit in length {t_r}"
        )));
    }
    // Reduce the phase index mod T_r before scaling to keep it exact.
    let unit = Array2::from_shape_fn((l, t_r), |(row, t)| {
        let idx = (row * t) % t_r;
        Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / t_r as f64)
    });
    Ok(PilotSet { unit, rho_r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// User k always gets pilot k.
    Static,
    /// A fresh uniform injection users -> pilots every block.
    RandomPerBlock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAssignment {
    pilot_of: Vec<usize>,
    policy: AssignmentPolicy,
    hidden: bool,
}

impl PilotAssignment {
    pub fn pilot_of(&self, user: usize) -> usize {
        self.pilot_of[user]
    }
    pub fn pilots(&self) -> &[usize] {
        &self.pilot_of
    }
    pub fn policy(&self) -> AssignmentPolicy {
        self.policy
    }
    /// Whether the assignment is kept secret from the adversary.
    pub fn hidden(&self) -> bool {
        self.hidden
    }
    pub fn users(&self) -> usize {
        self.pilot_of.len()
    }
}

/// Draws the assignment for one block. Random assignments are marked hidden.
pub fn assign_pilots(policy: AssignmentPolicy, cfg: &SystemConfig, seed: &SeedPath) -> PilotAssignment {
    let pilot_of = match policy {
        AssignmentPolicy::Static => (0..cfg.k()).collect(),
        AssignmentPolicy::RandomPerBlock => {
            sample_distinct(&mut seed.child("assign").rng(), cfg.l(), cfg.k())
        }
    };
    PilotAssignment {
        pilot_of,
        policy,
        hidden: policy == AssignmentPolicy::RandomPerBlock,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingObservation {
    /// M x T_r, received at the BS.
    pub y_tr: Array2<Complex64>,
    /// M_e x T_r, received at the adversary.
    pub z_tr: Array2<Complex64>,
    /// Pilot indices jammed this block (random-subset attack only).
    pub jammed: Vec<usize>,
    /// Per user: whether the user's pilot was contaminated this block.
    pub hits: Vec<bool>,
    pub attack: AttackKind,
}

/// The BS training noise W (M x T_r) for a block path.
pub fn sample_training_noise(m: usize, t_r: usize, seed: &SeedPath) -> Array2<Complex64> {
    complex_normal_matrix(&mut seed.child("w").rng(), m, t_r, 1.0)
}

/// Adds `scale * g^T u` to `y` (g an M-vector, u a length-T_r row).
fn add_outer(y: &mut Array2<Complex64>, g: ArrayView1<Complex64>, u: ArrayView1<Complex64>, scale: f64) {
    for (mut row, &gm) in y.rows_mut().into_iter().zip(g.iter()) {
        let c = gm * scale;
        row.zip_mut_with(&u, |yv, &uv| *yv += c * uv);
    }
}

pub fn synth_training(
    channels: &BlockChannels,
    pilots: &PilotSet,
    assignment: &PilotAssignment,
    attack: &AttackSpec,
    seed: &SeedPath,
) -> Result<TrainingObservation> {
    let (m, k, m_e) = (channels.m(), channels.k(), channels.m_e());
    let t_r = pilots.t_r();
    if assignment.users() != k {
        return Err(Error::Dimension(format!(
            "assignment covers {} users, channels have {k}",
            assignment.users()
        )));
    }
    if assignment.pilots().iter().any(|&p| p >= pilots.len()) {
        return Err(Error::Dimension("assignment references a missing pilot".into()));
    }
    let sq_r = pilots.rho_r().sqrt();

    let mut y = sample_training_noise(m, t_r, seed);
    for user in 0..k {
        add_outer(&mut y, channels.h.row(user), pilots.unit_row(assignment.pilot_of(user)), sq_r);
    }

    let mut jammed = Vec::new();
    let mut hits = vec![false; k];
    match attack.kind() {
        AttackKind::None | AttackKind::DataOnlyJam => {}
        AttackKind::PilotMatching { target } => {
            if target >= k {
                return Err(Error::AttackMismatch(format!(
                    "target user {target} has no pilot in an assignment of {k} users"
                )));
            }
            // √(ρ_jam/ρ_r)·φ_ℓ = √ρ_jam · unit row.
            let row = pilots.unit_row(assignment.pilot_of(target));
            add_outer(&mut y, channels.h_e.row(0), row, attack.rho_jam().sqrt());
            hits[target] = true;
        }
        AttackKind::RandomSubsetJam { jammed: j } => {
            if j > pilots.len() || m_e == 0 {
                return Err(Error::AttackMismatch(format!(
                    "cannot jam {j} of {} pilots with {m_e} antennas",
                    pilots.len()
                )));
            }
            jammed = sample_distinct(&mut seed.child("jam_set").rng(), pilots.len(), j);
            let amp = (attack.rho_jam() / (m_e * j) as f64).sqrt();
            let sum_e: Array1<Complex64> = channels.h_e.sum_axis(ndarray::Axis(0));
            for &l in &jammed {
                add_outer(&mut y, sum_e.view(), pilots.unit_row(l), amp);
            }
            for (user, hit) in hits.iter_mut().enumerate() {
                *hit = jammed.contains(&assignment.pilot_of(user));
            }
        }
    }

    let mut z = complex_normal_matrix(&mut seed.child("w_e").rng(), m_e, t_r, 1.0);
    for user in 0..k {
        add_outer(&mut z, channels.h_jam.row(user), pilots.unit_row(assignment.pilot_of(user)), sq_r);
    }

    Ok(TrainingObservation {
        y_tr: y,
        z_tr: z,
        jammed,
        hits,
        attack: attack.kind(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataObservation {
    /// K x n, row k is the sequence Y_k.
    pub y: Array2<Complex64>,
    /// M_e x n.
    pub z: Array2<Complex64>,
    /// M_e x n, all zero when the attack does not jam data.
    pub v_jam: Array2<Complex64>,
}

/// Data-phase outputs for a channel input X (M x n, one column per use).
pub fn synth_data(
    channels: &BlockChannels,
    x: &Array2<Complex64>,
    attack: &AttackSpec,
    seed: &SeedPath,
) -> Result<DataObservation> {
    let (m, k, m_e) = (channels.m(), channels.k(), channels.m_e());
    if x.nrows() != m {
        return Err(Error::Dimension(format!(
            "channel input has {} rows, expected {m}",
            x.nrows()
        )));
    }
    let n = x.ncols();
    let v_jam = if attack.jams_data() {
        complex_normal_matrix(&mut seed.child("v_jam").rng(), m_e, n, attack.rho_jam())
    } else {
        Array2::zeros((m_e, n))
    };
    let mut y = channels.h.dot(x);
    y += &channels.h_jam.dot(&v_jam);
    y += &complex_normal_matrix(&mut seed.child("v").rng(), k, n, 1.0);
    let mut z = channels.h_e.dot(x);
    z += &complex_normal_matrix(&mut seed.child("v_e").rng(), m_e, n, 1.0);
    Ok(DataObservation { y, z, v_jam })
}
