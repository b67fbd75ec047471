//! Monte-Carlo experiments checking the closed forms.
//!
//! Every experiment draws trial `i` from `seed/<label>/i` and reduces results
//! in trial order, so outputs are identical for any worker count.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;
use serde::Serialize;

use super::stats::{batch_se, mean_se, McEstimate, McRun};
use crate::airsim::{
    assign_pilots, build_orthogonal_pilots, sample_block_channels, synth_data, synth_training,
    AssignmentPolicy, BlockChannels, PilotSet,
};
use crate::analytics::{
    defense_rate, log2_1p, rate_no_training_jamming, sinr_conjugate, pilot_matching_bound_sample, LlnStats,
};
use crate::config::{AttackKind, AttackSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    construct_tilde_channel, estimate_channels, mmse_coefficients, ChannelEstimate, CoefficientRecord,
    Regime,
};
use crate::precoding::{delta_conjugate_precode, precoder, sample_symbols};
use crate::rng::SeedPath;

/// Uses per block in data-phase experiments (capped by T_d).
pub const USES_PER_BLOCK: usize = 8;
const BATCHES: usize = 50;

fn inner(a: ArrayView1<Complex64>, b: ArrayView1<Complex64>) -> Complex64 {
    // a · conj(b)
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

fn attack_for(cfg: &SystemConfig, regime: Regime) -> Result<AttackSpec> {
    let kind = match regime {
        Regime::NoJam if cfg.rho_jam() > 0.0 => AttackKind::DataOnlyJam,
        Regime::NoJam => AttackKind::None,
        Regime::PilotMatching { target } => AttackKind::PilotMatching { target },
        Regime::RandomSubset { jammed } => AttackKind::RandomSubsetJam { jammed },
    };
    AttackSpec::new(kind, cfg)
}

/// One block through training and estimation.
struct TrainedBlock {
    channels: BlockChannels,
    estimate: ChannelEstimate,
}

fn train_block(
    cfg: &SystemConfig,
    pilots: &PilotSet,
    attack: &AttackSpec,
    record: &CoefficientRecord,
    policy: AssignmentPolicy,
    seed: &SeedPath,
) -> Result<TrainedBlock> {
    let channels = sample_block_channels(cfg, seed);
    let assignment = assign_pilots(policy, cfg, seed);
    let obs = synth_training(&channels, pilots, &assignment, attack, seed)?;
    let estimate = estimate_channels(&obs, pilots, &assignment, record)?;
    Ok(TrainedBlock { channels, estimate })
}

fn policy_for(regime: Regime) -> AssignmentPolicy {
    match regime {
        Regime::RandomSubset { .. } => AssignmentPolicy::RandomPerBlock,
        _ => AssignmentPolicy::Static,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorMoments {
    /// Per-element E|Ĥ_k,m|², target α_k.
    pub power: McEstimate,
    /// Re and Im of E[Ĥ*_k,m H_e,m].
    pub adversary_re: McEstimate,
    pub adversary_im: McEstimate,
    /// Re and Im of the per-element E[Ĥ_k Ĥ_l*] against another user (absent when K = 1).
    pub cross_re: Option<McEstimate>,
    pub cross_im: Option<McEstimate>,
}

/// Block-mean samples of the estimator moments for user 0 (the target in
/// the pilot-matching regime).
pub fn mc_estimator_moments(cfg: &SystemConfig, regime: Regime, run: &McRun) -> Result<EstimatorMoments> {
    if cfg.m_e() == 0 {
        return Err(Error::Parameter("estimator moments need an adversary antenna".into()));
    }
    let user = match regime {
        Regime::PilotMatching { target } => target,
        _ => 0,
    };
    let attack = attack_for(cfg, regime)?;
    let record = mmse_coefficients(cfg, regime)?;
    let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r())?;
    let m = cfg.m() as f64;
    let label = "estimator_moments";
    let rows = run.map(label, |_, seed| -> Result<[f64; 5]> {
        let b = train_block(cfg, &pilots, &attack, &record, policy_for(regime), seed)?;
        let hk = b.estimate.hhat.row(user);
        let power = hk.iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
        // Σ_m Ĥ*_k,m H_e,m
        let adv = inner(b.channels.h_e.row(0), hk) / m;
        let cross = if cfg.k() > 1 {
            let other = if user == 0 { 1 } else { 0 };
            inner(hk, b.estimate.hhat.row(other)) / m
        } else {
            Complex64::new(0.0, 0.0)
        };
        Ok([power, adv.re, adv.im, cross.re, cross.im])
    });
    let rows: Vec<[f64; 5]> = rows.into_iter().collect::<Result<_>>()?;
    let path = run.label_path(label);
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    let est = |name: &str, i: usize| McEstimate::from_samples(name, &col(i), &path);
    let adv_target = record.adversary_correlation(user, cfg);
    let cross_target = record.cross_correlation(user, if user == 0 { 1 } else { 0 }, cfg);
    Ok(EstimatorMoments {
        power: est("estimate_power", 0).with_target(record.alpha[user]),
        adversary_re: est("adversary_correlation_re", 1).with_target(adv_target),
        adversary_im: est("adversary_correlation_im", 2).with_target(0.0),
        cross_re: (cfg.k() > 1).then(|| est("cross_user_re", 3).with_target(cross_target)),
        cross_im: (cfg.k() > 1).then(|| est("cross_user_im", 4).with_target(0.0)),
    })
}

/// Per-block data-phase quantities for one observed user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrBlock {
    /// Normalized own gain H_k w_k (w_k the precoding column).
    pub gain: Complex64,
    /// Σ over uses of |s_k|².
    pub symbol_energy: f64,
    /// Σ over uses of |T2|², the other users' contribution.
    pub interference_energy: f64,
    /// Σ over uses of |T3|² = |Y - gain·s_k - T2|².
    pub noise_energy: f64,
    /// Σ over uses and adversary antennas of |H_e,n w_k s_k|².
    pub leakage_energy: f64,
    pub uses: usize,
    /// Contamination indicator for the user this block.
    pub hit: bool,
}

/// Variance decomposition estimated from a run of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrParts {
    pub var_t0: f64,
    pub var_t1: f64,
    pub var_t2: f64,
    pub var_t3: f64,
    pub sinr: f64,
    pub leakage_snr: f64,
}

impl SinrParts {
    pub fn from_blocks(blocks: &[SinrBlock]) -> Self {
        let nb = blocks.len() as f64;
        let uses: f64 = blocks.iter().map(|b| b.uses as f64).sum();
        let mean_gain = blocks.iter().map(|b| b.gain).sum::<Complex64>() / nb;
        let sym = blocks.iter().map(|b| b.symbol_energy).sum::<f64>() / uses;
        let var_t0 = mean_gain.norm_sqr() * sym;
        let var_t1 = blocks
            .iter()
            .map(|b| (b.gain - mean_gain).norm_sqr() * b.symbol_energy)
            .sum::<f64>()
            / uses;
        let var_t2 = blocks.iter().map(|b| b.interference_energy).sum::<f64>() / uses;
        let var_t3 = blocks.iter().map(|b| b.noise_energy).sum::<f64>() / uses;
        let leakage_snr = blocks.iter().map(|b| b.leakage_energy).sum::<f64>() / uses;
        Self {
            var_t0,
            var_t1,
            var_t2,
            var_t3,
            sinr: var_t0 / (var_t1 + var_t2 + var_t3),
            leakage_snr,
        }
    }
}

/// Runs one block through training, precoding and the data phase and
/// records the decomposition of Y_user.
#[allow(clippy::too_many_arguments)]
fn data_block(
    cfg: &SystemConfig,
    pilots: &PilotSet,
    attack: &AttackSpec,
    record: &CoefficientRecord,
    policy: AssignmentPolicy,
    delta: f64,
    user: usize,
    seed: &SeedPath,
) -> Result<SinrBlock> {
    let b = train_block(cfg, pilots, attack, record, policy, seed)?;
    let uses = USES_PER_BLOCK.min(cfg.t_d());
    let symbols = sample_symbols(cfg, uses, seed);
    let input = delta_conjugate_precode(&b.estimate, &symbols, delta)?;
    let data = synth_data(&b.channels, &input.x, attack, seed)?;
    let w = precoder(&b.estimate, delta)?;
    // Effective gains H_user W (1 x K) and H_e W (M_e x K).
    let g = b.channels.h.row(user).dot(&w);
    let ge = b.channels.h_e.dot(&w.column(user));
    let leak_gain: f64 = ge.iter().map(|z| z.norm_sqr()).sum();
    let mut rec = SinrBlock {
        gain: g[user],
        symbol_energy: 0.0,
        interference_energy: 0.0,
        noise_energy: 0.0,
        leakage_energy: 0.0,
        uses,
        hit: b.estimate.hits[user],
    };
    for j in 0..uses {
        let s = symbols.s.column(j);
        let own = g[user] * s[user];
        let t2: Complex64 = (0..cfg.k()).filter(|&l| l != user).map(|l| g[l] * s[l]).sum();
        let t3 = data.y[[user, j]] - own - t2;
        rec.symbol_energy += s[user].norm_sqr();
        rec.interference_energy += t2.norm_sqr();
        rec.noise_energy += t3.norm_sqr();
        rec.leakage_energy += leak_gain * s[user].norm_sqr();
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrEstimate {
    pub var_t0: McEstimate,
    pub var_t1: McEstimate,
    pub var_t2: McEstimate,
    pub var_t3: McEstimate,
    pub sinr: McEstimate,
}

/// SINR decomposition of user 0 under conjugate beamforming with silent
/// training; one trial is one block.
pub fn mc_sinr(cfg: &SystemConfig, run: &McRun) -> Result<SinrEstimate> {
    let attack = attack_for(cfg, Regime::NoJam)?;
    let record = mmse_coefficients(cfg, Regime::NoJam)?;
    let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r())?;
    let label = "sinr";
    let blocks: Vec<SinrBlock> = run
        .map(label, |_, seed| data_block(cfg, &pilots, &attack, &record, AssignmentPolicy::Static, 0.0, 0, seed))
        .into_iter()
        .collect::<Result<_>>()?;
    let parts = SinrParts::from_blocks(&blocks);
    let target = sinr_conjugate(cfg, cfg.m() as f64, 0);
    let path = run.label_path(label);
    let n = blocks.len();
    let est = |name: &str, value: f64, stat: fn(&SinrParts) -> f64, t: f64| {
        let se = batch_se(&blocks, BATCHES, |b| stat(&SinrParts::from_blocks(b)));
        McEstimate::new(name, value, se, n, &path).with_target(t)
    };
    Ok(SinrEstimate {
        var_t0: est("var_t0", parts.var_t0, |p| p.var_t0, target.var_t0),
        var_t1: est("var_t1", parts.var_t1, |p| p.var_t1, target.var_t1),
        var_t2: est("var_t2", parts.var_t2, |p| p.var_t2, target.var_t2),
        var_t3: est("var_t3", parts.var_t3, |p| p.var_t3, target.var_t3),
        sinr: est("sinr", parts.sinr, |p| p.sinr, target.sinr),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageEstimate {
    /// (1/M) E|Ĥ_k H*_e,m|², target α_k. Absent when M_e = 0.
    pub correlation_power: Option<McEstimate>,
    /// Adversary-received power per use from user 0, target M_e ρ_k / M^δ.
    pub adversary_power: McEstimate,
}

/// Leakage moments under δ-conjugate beamforming with silent training.
pub fn mc_leakage(cfg: &SystemConfig, delta: f64, run: &McRun) -> Result<LeakageEstimate> {
    let attack = attack_for(cfg, Regime::NoJam)?;
    let record = mmse_coefficients(cfg, Regime::NoJam)?;
    let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r())?;
    let m = cfg.m() as f64;
    let label = "leakage";
    let rows: Vec<(f64, f64)> = run
        .map(label, |_, seed| -> Result<(f64, f64)> {
            let block = data_block(cfg, &pilots, &attack, &record, AssignmentPolicy::Static, delta, 0, seed)?;
            let corr = if cfg.m_e() > 0 {
                let b = train_block(cfg, &pilots, &attack, &record, AssignmentPolicy::Static, seed)?;
                inner(b.estimate.hhat.row(0), b.channels.h_e.row(0)).norm_sqr() / m
            } else {
                0.0
            };
            Ok((corr, block.leakage_energy / block.uses as f64))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let path = run.label_path(label);
    let corr: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let power: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let target = cfg.m_e() as f64 * cfg.rho(0) * m.powf(-delta);
    Ok(LeakageEstimate {
        correlation_power: (cfg.m_e() > 0)
            .then(|| McEstimate::from_samples("correlation_power", &corr, &path).with_target(record.alpha[0])),
        adversary_power: McEstimate::from_samples("adversary_power", &power, &path).with_target(target),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnPoint {
    pub m: usize,
    pub v: McEstimate,
    pub w: McEstimate,
    /// (T_d/T) E[[log2(1/M + ρ_k v) - log2(1/M + ρ_k w)]^+].
    pub bound: McEstimate,
    pub limits: LlnStats,
}

/// v_k = |H_k Ĥ_k*|²/(α_k M²) and w_k = |H_k H̃_k*|²/(α_k M²) for the
/// pilot-matching target, over a grid of antenna counts.
pub fn mc_lln(cfg: &SystemConfig, target: usize, m_grid: &[usize], run: &McRun) -> Result<Vec<LlnPoint>> {
    let mut out = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let cfg_m = cfg.with_antennas(m)?;
        let regime = Regime::PilotMatching { target };
        let attack = attack_for(&cfg_m, regime)?;
        let record = mmse_coefficients(&cfg_m, regime)?;
        let pilots = build_orthogonal_pilots(cfg_m.l(), cfg_m.t_r(), cfg_m.rho_r())?;
        let alpha = record.alpha[target];
        let mf = m as f64;
        let rho = cfg_m.rho(target);
        let td = cfg_m.data_fraction();
        let label = format!("lln_m{m}");
        let rows: Vec<(f64, f64, f64)> = run
            .map(&label, |_, seed| -> Result<(f64, f64, f64)> {
                let b = train_block(&cfg_m, &pilots, &attack, &record, AssignmentPolicy::Static, seed)?;
                let tilde: Array1<Complex64> = construct_tilde_channel(&b.channels, &record, seed)?;
                let hk = b.channels.h.row(target);
                let norm = alpha * mf * mf;
                let v = inner(hk, b.estimate.hhat.row(target)).norm_sqr() / norm;
                let w = inner(hk, tilde.view()).norm_sqr() / norm;
                Ok((v, w, td * pilot_matching_bound_sample(v, w, rho, mf)))
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let path = run.label_path(&label);
        let limits = LlnStats::limits(&cfg_m);
        let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let v = McEstimate::from_samples("v", &col(|r| r.0), &path).with_target(limits.v_limit);
        let w = McEstimate::from_samples("w", &col(|r| r.1), &path).with_target(limits.w_limit);
        let bound = McEstimate::from_samples("bound", &col(|r| r.2), &path);
        out.push(LlnPoint {
            m,
            limits: limits.with_samples(v.estimate, w.estimate),
            v,
            w,
            bound,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentComparison {
    pub name: String,
    /// Moment of (H_e, Ĥ_k).
    pub observed: McEstimate,
    /// The same moment of (H_k, H̃_k).
    pub constructed: McEstimate,
    /// Paired difference, target 0.
    pub difference: McEstimate,
}

/// Compares first and second moments of (H_e, Ĥ_k) and (H_k, H̃_k) for the
/// pilot-matching target. Each block contributes the antenna-average of each
/// moment.
pub fn mc_distribution_identity(cfg: &SystemConfig, target: usize, run: &McRun) -> Result<Vec<MomentComparison>> {
    let regime = Regime::PilotMatching { target };
    let attack = attack_for(cfg, regime)?;
    let record = mmse_coefficients(cfg, regime)?;
    let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r())?;
    let m = cfg.m() as f64;
    const NAMES: [&str; 14] = [
        "mean_x_re", "mean_x_im", "mean_y_re", "mean_y_im",
        "power_x", "power_y",
        "cross_re", "cross_im",
        "pseudo_cross_re", "pseudo_cross_im",
        "pseudo_x_re", "pseudo_x_im", "pseudo_y_re", "pseudo_y_im",
    ];
    // For a pair (x, y): x = H_e or H_k, y = Ĥ_k or H̃_k.
    let moments = |x: ArrayView1<Complex64>, y: ArrayView1<Complex64>| -> [f64; 14] {
        let mut acc = [0.0; 14];
        for (&a, &b) in x.iter().zip(y.iter()) {
            let vals = [
                a.re, a.im, b.re, b.im,
                a.norm_sqr(), b.norm_sqr(),
                (b.conj() * a).re, (b.conj() * a).im,
                (a * b).re, (a * b).im,
                (a * a).re, (a * a).im, (b * b).re, (b * b).im,
            ];
            for (s, v) in acc.iter_mut().zip(vals) {
                *s += v;
            }
        }
        acc.map(|s| s / m)
    };
    let label = "distribution_identity";
    let rows: Vec<([f64; 14], [f64; 14])> = run
        .map(label, |_, seed| -> Result<_> {
            let b = train_block(cfg, &pilots, &attack, &record, AssignmentPolicy::Static, seed)?;
            let tilde = construct_tilde_channel(&b.channels, &record, seed)?;
            Ok((
                moments(b.channels.h_e.row(0), b.estimate.hhat.row(target)),
                moments(b.channels.h.row(target), tilde.view()),
            ))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let path = run.label_path(label);
    Ok(NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let obs: Vec<f64> = rows.iter().map(|r| r.0[i]).collect();
            let con: Vec<f64> = rows.iter().map(|r| r.1[i]).collect();
            let diff: Vec<f64> = obs.iter().zip(&con).map(|(a, b)| a - b).collect();
            MomentComparison {
                name: (*name).to_owned(),
                observed: McEstimate::from_samples(name, &obs, &path),
                constructed: McEstimate::from_samples(name, &con, &path),
                difference: McEstimate::from_samples(name, &diff, &path).with_target(0.0),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndToEndOptions {
    /// Hide the assignment by drawing a fresh random one each block.
    pub randomize_assignment: bool,
    /// 0 for conjugate beamforming.
    pub delta: f64,
    /// Observed user.
    pub user: usize,
}

impl Default for EndToEndOptions {
    fn default() -> Self {
        Self {
            randomize_assignment: false,
            delta: 0.0,
            user: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndToEnd {
    pub blocks: Vec<SinrBlock>,
    pub parts: Option<SinrParts>,
    /// (T_d/T) log2(1 + empirical SINR).
    pub decodable: McEstimate,
    /// (T_d/T) log2(1 + empirical adversary SNR).
    pub leakage: McEstimate,
    /// decodable - leakage.
    pub secure: McEstimate,
}

/// Rate figures implied by the empirical SINR and adversary SNR.
fn rates_of(blocks: &[SinrBlock], td: f64) -> (f64, f64) {
    let p = SinrParts::from_blocks(blocks);
    (td * log2_1p(p.sinr), td * log2_1p(p.leakage_snr))
}

/// Full chain: channels, training under `attack`, estimation, δ-conjugate
/// precoding and the data phase. Targets are attached where a closed form
/// applies: the silent-training rate, or the defense rate when the
/// assignment is randomized and the attack jams a random pilot subset.
pub fn mc_end_to_end(cfg: &SystemConfig, attack: &AttackSpec, options: EndToEndOptions, run: &McRun) -> Result<EndToEnd> {
    let regime = Regime::from_attack(attack.kind());
    let record = mmse_coefficients(cfg, regime)?;
    let pilots = build_orthogonal_pilots(cfg.l(), cfg.t_r(), cfg.rho_r())?;
    let policy = if options.randomize_assignment {
        AssignmentPolicy::RandomPerBlock
    } else {
        AssignmentPolicy::Static
    };
    if options.user >= cfg.k() {
        return Err(Error::Parameter(format!("user {} out of range", options.user)));
    }
    let label = "end_to_end";
    let blocks: Vec<SinrBlock> = run
        .map(label, |_, seed| {
            data_block(cfg, &pilots, attack, &record, policy, options.delta, options.user, seed)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let path = run.label_path(label);
    let td = cfg.data_fraction();
    let n = blocks.len();
    if n == 0 {
        let empty = |name: &str| McEstimate::new(name, f64::NAN, f64::NAN, 0, &path);
        return Ok(EndToEnd {
            blocks,
            parts: None,
            decodable: empty("decodable"),
            leakage: empty("leakage"),
            secure: empty("secure"),
        });
    }
    let (dec, leak) = rates_of(&blocks, td);
    let se = |f: fn((f64, f64)) -> f64| batch_se(&blocks, BATCHES, |b| f(rates_of(b, td)));
    let mut decodable = McEstimate::new("decodable", dec, se(|r| r.0), n, &path);
    let mut leakage = McEstimate::new("leakage", leak, se(|r| r.1), n, &path);
    let mut secure = McEstimate::new("secure", dec - leak, se(|r| r.0 - r.1), n, &path);

    let m = cfg.m() as f64;
    // A passive adversary contributes no jamming term.
    let effective = if attack.jams_data() { cfg.clone() } else { cfg.with_rho_jam(0.0)? };
    let target = match (regime, options.randomize_assignment) {
        (Regime::NoJam, _) if options.delta == 0.0 => Some(rate_no_training_jamming(&effective, m)),
        (Regime::RandomSubset { .. }, true) if options.delta == 0.0 && cfg.l() == cfg.t_r() => {
            Some(defense_rate(cfg, m)?)
        }
        _ => None,
    };
    if let Some(report) = target {
        let u = report.user(options.user);
        decodable = decodable.with_target(u.decodable);
        leakage = leakage.with_target(u.leakage);
        secure = secure.with_target(u.decodable - u.leakage);
    }
    Ok(EndToEnd {
        parts: Some(SinrParts::from_blocks(&blocks)),
        blocks,
        decodable,
        leakage,
        secure,
    })
}

/// Mean and standard error of a column of per-block values.
pub fn column_stats(values: &[f64]) -> (f64, f64) {
    mean_se(values)
}
