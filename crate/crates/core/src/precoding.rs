//! Conjugate and δ-conjugate beamforming plus power-constraint auditing.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::ChannelEstimate;
use crate::rng::{complex_normal, SeedPath};

/// Per-user data symbols for the data phase of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    /// K x n, row k is s_k over n channel uses.
    pub s: Array2<Complex64>,
    pub rho: Vec<f64>,
}

impl SymbolBlock {
    pub fn uses(&self) -> usize {
        self.s.ncols()
    }
}

/// Gaussian codeword surrogate: i.i.d. CN(0, ρ_k) per user per use.
/// Each user draws from its own substream.
pub fn sample_symbols(cfg: &SystemConfig, uses: usize, seed: &SeedPath) -> SymbolBlock {
    let k = cfg.k();
    let mut s = Array2::zeros((k, uses));
    for (user, mut row) in s.rows_mut().into_iter().enumerate() {
        let mut rng = seed.child("s").index(user as u64).rng();
        let rho = cfg.rho(user);
        row.iter_mut().for_each(|v| *v = complex_normal(&mut rng, rho));
    }
    SymbolBlock {
        s,
        rho: cfg.rho_users().to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Beamformer {
    Conjugate,
    DeltaConjugate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInput {
    /// M x n, column j is X at use j.
    pub x: Array2<Complex64>,
    pub kind: Beamformer,
    pub delta: f64,
}

/// Beamforming matrix W (M x K) with columns Ĥ_k* / √(M^{1+δ} α_k).
pub fn precoder(estimate: &ChannelEstimate, delta: f64) -> Result<Array2<Complex64>> {
    let (k, m) = estimate.hhat.dim();
    let mf = m as f64;
    let mut w = Array2::zeros((m, k));
    for user in 0..k {
        let alpha = estimate.alpha(user);
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::DegenerateEstimate { user });
        }
        let norm = 1.0 / (mf.powf(1.0 + delta) * alpha).sqrt();
        w.column_mut(user)
            .zip_mut_with(&estimate.hhat.row(user), |wv, h| *wv = h.conj() * norm);
    }
    Ok(w)
}

fn precode(estimate: &ChannelEstimate, symbols: &SymbolBlock, delta: f64) -> Result<Array2<Complex64>> {
    if symbols.s.nrows() != estimate.hhat.nrows() {
        return Err(Error::Dimension(format!(
            "{} symbol streams for {} estimated users",
            symbols.s.nrows(),
            estimate.hhat.nrows()
        )));
    }
    Ok(precoder(estimate, delta)?.dot(&symbols.s))
}

pub fn conjugate_precode(estimate: &ChannelEstimate, symbols: &SymbolBlock) -> Result<ChannelInput> {
    Ok(ChannelInput {
        x: precode(estimate, symbols, 0.0)?,
        kind: Beamformer::Conjugate,
        delta: 0.0,
    })
}

pub fn delta_conjugate_precode(
    estimate: &ChannelEstimate,
    symbols: &SymbolBlock,
    delta: f64,
) -> Result<ChannelInput> {
    Ok(ChannelInput {
        x: precode(estimate, symbols, delta)?,
        kind: Beamformer::DeltaConjugate,
        delta,
    })
}

/// Running power audit. Each recorded block contributes one sample of the
/// per-user mean symbol power and of the mean ||X||²; standard errors are
/// taken across blocks (or across uses when only one block was recorded).
#[derive(Debug, Clone, Default)]
pub struct PowerAudit {
    user_sum: Vec<f64>,
    user_sq: Vec<f64>,
    total_sum: f64,
    total_sq: f64,
    blocks: usize,
    single_user_se: Vec<f64>,
    single_total_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub user_power: Vec<f64>,
    pub user_se: Vec<f64>,
    pub total_power: f64,
    pub total_se: f64,
    /// Expected total power M^{-δ} ρ_f for the beamformer in use.
    pub total_budget: f64,
    pub user_flags: Vec<bool>,
    pub total_flag: bool,
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl PowerAudit {
    pub fn new(users: usize) -> Self {
        Self {
            user_sum: vec![0.0; users],
            user_sq: vec![0.0; users],
            single_user_se: vec![0.0; users],
            ..Self::default()
        }
    }

    pub fn record(&mut self, input: &ChannelInput, symbols: &SymbolBlock) {
        for (user, row) in symbols.s.rows().into_iter().enumerate() {
            let (mean, se) = mean_se(row.iter().map(|z| z.norm_sqr()));
            self.user_sum[user] += mean;
            self.user_sq[user] += mean * mean;
            self.single_user_se[user] = se;
        }
        let (mean, se) = mean_se(input.x.columns().into_iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()));
        self.total_sum += mean;
        self.total_sq += mean * mean;
        self.single_total_se = se;
        self.blocks += 1;
    }

    fn stats(&self, sum: f64, sq: f64, single_se: f64) -> (f64, f64) {
        let n = self.blocks as f64;
        if self.blocks == 0 {
            return (0.0, 0.0);
        }
        let mean = sum / n;
        if self.blocks == 1 {
            return (mean, single_se);
        }
        let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// Flags averages exceeding their budget by more than three standard errors.
    pub fn report(&self, cfg: &SystemConfig, delta: f64) -> PowerReport {
        let users = self.user_sum.len();
        let (mut user_power, mut user_se, mut user_flags) = (vec![], vec![], vec![]);
        for user in 0..users {
            let (mean, se) = self.stats(self.user_sum[user], self.user_sq[user], self.single_user_se[user]);
            user_flags.push(mean > cfg.rho(user) + 3.0 * se + 1e-12);
            user_power.push(mean);
            user_se.push(se);
        }
        let (total_power, total_se) = self.stats(self.total_sum, self.total_sq, self.single_total_se);
        let total_budget = cfg.rho_f() * (cfg.m() as f64).powf(-delta);
        PowerReport {
            user_power,
            user_se,
            total_power,
            total_se,
            total_budget,
            user_flags,
            total_flag: total_power > total_budget + 3.0 * total_se + 1e-12,
        }
    }
}

/// Audit of a single block.
pub fn audit_power(input: &ChannelInput, symbols: &SymbolBlock, cfg: &SystemConfig) -> PowerReport {
    let mut audit = PowerAudit::new(symbols.s.nrows());
    audit.record(input, symbols);
    audit.report(cfg, input.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;
    use crate::estimation::{mmse_coefficients, Regime};
    use proptest::prelude::*;

    fn estimate(hhat: Array2<Complex64>, alpha: f64, cfg: &SystemConfig) -> ChannelEstimate {
        let mut record = mmse_coefficients(cfg, Regime::NoJam).unwrap();
        record.alpha = vec![alpha; hhat.nrows()];
        ChannelEstimate {
            hits: vec![false; hhat.nrows()],
            hhat,
            record,
        }
    }

    #[test]
    fn single_user_all_ones() {
        let cfg = RawConfig::equal_power(9, 1, 1, 10, 1, 1.0, 1.0, 0.0).validate().unwrap();
        let est = estimate(Array2::from_elem((1, 9), Complex64::new(1.0, 0.0)), 1.0, &cfg);
        let sym = SymbolBlock {
            s: Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)),
            rho: vec![1.0],
        };
        let x = conjugate_precode(&est, &sym).unwrap().x;
        for v in x.iter() {
            assert!((v - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_alpha_is_degenerate() {
        let cfg = RawConfig::equal_power(4, 1, 2, 10, 2, 1.0, 1.0, 0.0).validate().unwrap();
        let mut est = estimate(Array2::zeros((2, 4)), 1.0, &cfg);
        est.record.alpha[1] = 0.0;
        let sym = sample_symbols(&cfg, 3, &SeedPath::new(0));
        assert_eq!(
            conjugate_precode(&est, &sym).unwrap_err(),
            Error::DegenerateEstimate { user: 1 }
        );
    }

    #[test]
    fn zero_power_user_has_zero_stream() {
        let mut raw = RawConfig::equal_power(4, 1, 2, 10, 2, 1.0, 1.0, 0.0);
        raw.rho_users = vec![0.0, 2.0];
        let cfg = raw.validate().unwrap();
        let sym = sample_symbols(&cfg, 100, &SeedPath::new(5));
        assert!(sym.s.row(0).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn audit_flags() {
        let cfg = RawConfig::equal_power(16, 1, 2, 10, 2, 1.0, 1.0, 0.0).validate().unwrap();
        let est = estimate(Array2::zeros((2, 16)), 1.0, &cfg);
        let zero = SymbolBlock { s: Array2::zeros((2, 50)), rho: vec![1.0, 1.0] };
        let rep = audit_power(&conjugate_precode(&est, &zero).unwrap(), &zero, &cfg);
        assert_eq!(rep.user_power, vec![0.0, 0.0]);
        assert!(!rep.user_flags.iter().any(|&f| f) && !rep.total_flag);

        let mut raw = cfg.to_raw();
        raw.rho_users = vec![2.0, 1.0];
        raw.rho_f = None;
        let hot = sample_symbols(&raw.validate().unwrap(), 20_000, &SeedPath::new(3));
        let rep = audit_power(&conjugate_precode(&est, &hot).unwrap(), &hot, &cfg);
        assert_eq!(rep.user_flags, vec![true, false]);
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<Complex64>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), rows * cols).prop_map(move |v| {
            Array2::from_shape_vec((rows, cols), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn precoding_is_linear(
            h in arb_matrix(3, 8),
            s1 in arb_matrix(3, 5),
            s2 in arb_matrix(3, 5),
            delta in 0.0f64..1.5,
        ) {
            let cfg = RawConfig::equal_power(8, 1, 3, 10, 3, 1.0, 1.0, 0.0).validate().unwrap();
            let est = estimate(h, 0.7, &cfg);
            let sum = SymbolBlock { s: &s1 + &s2, rho: vec![1.0; 3] };
            let a = SymbolBlock { s: s1, rho: vec![1.0; 3] };
            let b = SymbolBlock { s: s2, rho: vec![1.0; 3] };
            let xs = delta_conjugate_precode(&est, &sum, delta).unwrap().x;
            let xa = delta_conjugate_precode(&est, &a, delta).unwrap().x;
            let xb = delta_conjugate_precode(&est, &b, delta).unwrap().x;
            for ((s, a), b) in xs.iter().zip(xa.iter()).zip(xb.iter()) {
                prop_assert!((s - (a + b)).norm() <= 1e-12 * (1.0 + s.norm()));
            }
        }

        #[test]
        fn delta_scales_power_exactly(
            h in arb_matrix(2, 6),
            s in arb_matrix(2, 4),
            delta in 0.0f64..2.0,
        ) {
            let cfg = RawConfig::equal_power(6, 1, 2, 10, 2, 1.0, 1.0, 0.0).validate().unwrap();
            let est = estimate(h, 1.3, &cfg);
            let sym = SymbolBlock { s, rho: vec![1.0; 2] };
            let p0: f64 = conjugate_precode(&est, &sym).unwrap().x.iter().map(|z| z.norm_sqr()).sum();
            let pd: f64 = delta_conjugate_precode(&est, &sym, delta).unwrap().x.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((pd - p0 * 6f64.powf(-delta)).abs() <= 1e-12 * (1.0 + p0));
        }

        #[test]
        fn single_antenna_ignores_delta(h in arb_matrix(1, 1), s in arb_matrix(1, 3), delta in 0.0f64..3.0) {
            let cfg = RawConfig::equal_power(1, 1, 1, 10, 1, 1.0, 1.0, 0.0).validate().unwrap();
            let est = estimate(h, 0.5, &cfg);
            let sym = SymbolBlock { s, rho: vec![1.0] };
            prop_assert_eq!(
                conjugate_precode(&est, &sym).unwrap().x,
                delta_conjugate_precode(&est, &sym, delta).unwrap().x
            );
        }
    }
}
