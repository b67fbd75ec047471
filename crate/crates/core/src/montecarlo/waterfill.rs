//! Water-filling over the squared channel norm Q ~ Gamma(M, 1).
//!
//! P(Q) = (λ - 1/Q)^+ with λ chosen so that E[P(Q)] = ρ_f. Expectations are
//! computed by adaptive quadrature over the Gamma density, so the solver is
//! deterministic.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::quadrature::integrate;
use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 4000;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillingSolution {
    pub m: usize,
    pub rho_f: f64,
    /// Water level λ_M.
    pub lambda: f64,
    /// E[P(Q)] at λ_M.
    pub expected_power: f64,
    /// |E[P(Q)] - ρ_f|.
    pub residual: f64,
    /// E[log2(1 + P(Q) Q)], before the T_d/T factor.
    pub capacity_per_use: f64,
    pub iterations: usize,
}

impl WaterfillingSolution {
    /// C = (T_d/T) E[log2(1 + P(Q) Q)].
    pub fn capacity(&self, td_over_t: f64) -> f64 {
        td_over_t * self.capacity_per_use
    }

    /// Upper end of the λ bracket, ρ_f + 1/(M-1) = ρ_f + E[1/Q].
    pub fn lambda_bound(&self) -> f64 {
        lambda_upper(self.m, self.rho_f)
    }
}

fn lambda_upper(m: usize, rho_f: f64) -> f64 {
    rho_f + 1.0 / (m as f64 - 1.0)
}

/// Gamma(M, 1) density.
struct GammaDensity {
    shape: f64,
    log_norm: f64,
}

impl GammaDensity {
    fn new(m: usize) -> Self {
        let shape = m as f64;
        Self {
            shape,
            log_norm: ln_gamma(shape),
        }
    }

    fn pdf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        ((self.shape - 1.0) * q.ln() - q - self.log_norm).exp()
    }

    /// Interval outside of which the mass is negligible.
    fn support(&self) -> (f64, f64) {
        let (m, sd) = (self.shape, self.shape.sqrt());
        ((m - 40.0 * sd - 40.0).max(0.0), m + 40.0 * sd + 40.0)
    }

    /// ∫ g(q) f(q) dq over q > lower, split at the mode for accuracy.
    fn expect(&self, lower: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.support();
        let lo = lo.max(lower);
        if lo >= hi {
            return 0.0;
        }
        let mode = (self.shape - 1.0).clamp(lo, hi);
        let sd = self.shape.sqrt();
        let mut cuts = vec![lo];
        for k in [-8.0, -3.0, 0.0, 3.0, 8.0] {
            let c = mode + k * sd;
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| integrate(|q| g(q) * self.pdf(q), w[0], w[1], REL_TOL, 1e-300, MAX_INTERVALS).value)
            .sum()
    }
}

/// E[(λ - 1/Q)^+].
pub fn expected_power(m: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    GammaDensity::new(m).expect(1.0 / lambda, |q| lambda - 1.0 / q)
}

/// E[log2(max(1, λQ))].
pub fn expected_log_gain(m: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    GammaDensity::new(m).expect(1.0 / lambda, |q| (lambda * q).log2())
}

/// Bisection for λ on [0, ρ_f + 1/(M-1)].
pub fn solve_waterfilling(m: usize, rho_f: f64, tolerance: f64) -> Result<WaterfillingSolution> {
    if m < 2 {
        return Err(Error::Parameter(format!("water-filling needs M >= 2, got {m}")));
    }
    if !(rho_f > 0.0 && rho_f.is_finite()) {
        return Err(Error::Parameter(format!("rho_f must be positive, got {rho_f}")));
    }
    let density = GammaDensity::new(m);
    let power = |lambda: f64| density.expect(1.0 / lambda, |q| lambda - 1.0 / q);
    let (mut lo, mut hi) = (0.0, lambda_upper(m, rho_f));
    let mut best = (hi, power(hi));
    for it in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let p = power(mid);
        if (p - rho_f).abs() < (best.1 - rho_f).abs() {
            best = (mid, p);
        }
        if (p - rho_f).abs() <= tolerance {
            let capacity_per_use = density.expect(1.0 / mid, |q| (mid * q).log2());
            return Ok(WaterfillingSolution {
                m,
                rho_f,
                lambda: mid,
                expected_power: p,
                residual: (p - rho_f).abs(),
                capacity_per_use,
                iterations: it,
            });
        }
        if p < rho_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        iterations: MAX_BISECTIONS,
        residual: (best.1 - rho_f).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedPath;
    use rand_distr::{Distribution, Gamma};
    use statrs::function::gamma::gamma_ur;

    /// E[(λ - 1/Q)^+] = λ Q(M, 1/λ) - Q(M-1, 1/λ)/(M-1), Q the regularized
    /// upper incomplete gamma.
    fn closed_form_power(m: usize, lambda: f64) -> f64 {
        let t = 1.0 / lambda;
        let mf = m as f64;
        lambda * gamma_ur(mf, t) - gamma_ur(mf - 1.0, t) / (mf - 1.0)
    }

    #[test]
    fn quadrature_matches_incomplete_gamma() {
        for &m in &[2usize, 3, 8, 64, 1024, 16384] {
            for &lambda in &[0.05, 0.7, 3.0, 10.5] {
                let q = expected_power(m, lambda);
                let c = closed_form_power(m, lambda);
                assert!((q - c).abs() <= 1e-10 * c.abs().max(1e-12), "M={m} λ={lambda}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn solution_respects_bound_and_tolerance() {
        for &m in &[2usize, 8, 64, 1024] {
            let s = solve_waterfilling(m, 10.0, 1e-8).unwrap();
            assert!(s.residual <= 1e-8);
            assert!(s.lambda >= 0.0 && s.lambda <= s.lambda_bound());
            assert!((closed_form_power(m, s.lambda) - 10.0).abs() <= 1e-7);
        }
        assert!(solve_waterfilling(2, 10.0, 1e-8).unwrap().lambda <= 11.0);
    }

    #[test]
    fn monte_carlo_cross_check() {
        let m = 8;
        let s = solve_waterfilling(m, 10.0, 1e-10).unwrap();
        let gamma = Gamma::new(m as f64, 1.0).unwrap();
        let mut rng = SeedPath::new(17).child("waterfill").rng();
        let n = 200_000;
        let (mut p, mut c, mut p2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let q: f64 = gamma.sample(&mut rng);
            let pw = (s.lambda - 1.0 / q).max(0.0);
            p += pw;
            p2 += pw * pw;
            c += (1.0 + pw * q).log2();
        }
        let n = n as f64;
        let mean = p / n;
        let se = ((p2 / n - mean * mean) / n).sqrt();
        assert!((mean - 10.0).abs() <= 4.0 * se);
        assert!((c / n - s.capacity_per_use).abs() < 0.01);
    }

    #[test]
    fn capacity_dof_approaches_data_fraction() {
        let td = 0.99;
        let r10 = solve_waterfilling(1 << 10, 10.0, 1e-8).unwrap().capacity(td) / 10.0;
        let r14 = solve_waterfilling(1 << 14, 10.0, 1e-8).unwrap().capacity(td) / 14.0;
        assert!(r14 < r10 && r14 > td);
    }

    #[test]
    fn rejects_single_antenna() {
        assert!(solve_waterfilling(1, 1.0, 1e-8).is_err());
    }
}
