//! Acceptance suite: one PASS/FAIL line per criterion, with runtime.

use std::time::{Duration, Instant};

use rand::Rng;
use secmimo::analytics::{
    decodable_rate_delta, decodable_rate_delta_floor, defense_rate, leakage_delta_conjugate,
    sinr_conjugate,
};
use secmimo::config::{RawConfig, SystemConfig};
use secmimo::estimation::Regime;
use secmimo::montecarlo::waterfill::solve_waterfilling;
use secmimo::montecarlo::{
    mc_distribution_identity, mc_estimator_moments, mc_leakage, mc_lln, mc_sinr, McRun,
};
use secmimo::thresholds::{g_epsilon, s1_epsilon, s_epsilon, v_of_r};
use secmimo::SeedPath;
use secmimo_cli::verify::{example2, run_verify, Suite, DEFAULT_TRIALS};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), notes: Vec::new() }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fig3() -> SystemConfig {
    RawConfig::equal_power(100, 1, 1, 5, 1, 1.0, 1.0, 1.0).validate().unwrap()
}

fn ac1() -> Outcome {
    let s = s_epsilon(&fig3(), 0.05, 0.7).unwrap().value;
    let oracle = 85.91643493241248;
    Outcome::new(
        s <= 100.0 && rel(s, oracle) <= 1e-9,
        format!("S(0.05) = {s:.10} (oracle {oracle}, rel {:.1e}, <= 100)", rel(s, oracle)),
    )
}

/// 100 random configurations with M_e, ρ_k, ρ_r, ρ_jam, T, T_r, K, ε, δ, R drawn uniformly.
fn random_point(rng: &mut impl Rng) -> (SystemConfig, f64, f64, Vec<f64>) {
    let k = rng.random_range(1..=6);
    let t_r = rng.random_range(k..=k + 10);
    let t = t_r + rng.random_range(1..=200);
    let rho_r = rng.random_range(0.1..10.0);
    let raw = RawConfig {
        rho_users: (0..k).map(|_| rng.random_range(0.1..5.0)).collect(),
        ..RawConfig::equal_power(64, rng.random_range(1..=8), k, t, t_r, rho_r, 1.0, rho_r * rng.random_range(0.0..1.0))
    };
    let rates = (0..k).map(|_| rng.random_range(0.01..3.0)).collect();
    (raw.validate().unwrap(), rng.random_range(0.001..0.5), rng.random_range(0.05..0.95), rates)
}

fn ac2() -> Outcome {
    let mut rng = SeedPath::new(SEED).child("round_trip").rng();
    let (mut worst_s, mut worst_v, mut worst_floor) = (0.0f64, 0.0f64, 0.0f64);
    let mut above = true;
    for _ in 0..100 {
        let (cfg, eps, delta, rates) = random_point(&mut rng);
        let s = s_epsilon(&cfg, eps, delta).unwrap().value;
        let argmax = (0..cfg.k()).find(|&k| cfg.rho(k) == cfg.rho_max()).unwrap();
        worst_s = worst_s.max(rel(leakage_delta_conjugate(&cfg, s, delta, argmax), eps));
        let v = v_of_r(&cfg, &rates, delta).unwrap().value;
        // The user that sets V is the one whose rate is met with equality.
        let (user, r_user) = (0..cfg.k())
            .map(|k| (k, rates[k], v_of_r(&cfg, &single(&rates, k), delta).unwrap().value))
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(k, r, _)| (k, r))
            .unwrap();
        let exact = decodable_rate_delta(&cfg, v, delta, user);
        worst_v = worst_v.max(rel(exact, r_user));
        worst_floor = worst_floor.max(rel(decodable_rate_delta_floor(&cfg, v, delta, user), r_user));
        if v >= 1.0 {
            above &= (0..cfg.k()).all(|k| decodable_rate_delta(&cfg, v, delta, k) >= rates[k] * (1.0 - 1e-12));
        }
    }
    Outcome::new(
        worst_s <= 1e-9 && worst_v <= 1e-9,
        format!("max rel |leakage(S) - eps| = {worst_s:.1e}; max rel |decodable(V) - R| for the binding user = {worst_v:.1e}"),
    )
    .note(format!("V inverts the rho_f floor form exactly: max rel residual {worst_floor:.1e}"))
    .note(format!("decodable(V) >= R_k for every user when V >= 1: {above}"))
}

/// Rates with every user but `k` set to zero.
fn single(rates: &[f64], k: usize) -> Vec<f64> {
    rates.iter().enumerate().map(|(i, &r)| if i == k { r } else { 0.0 }).collect()
}

fn ac3() -> Outcome {
    let cfg = RawConfig::equal_power(256, 1, 4, 1000, 10, 0.9, 1.0, 1.0).validate().unwrap();
    let target = sinr_conjugate(&cfg, 256.0, 0);
    let s = mc_sinr(&cfg, &McRun::new(SEED, 10_000)).unwrap();
    let zs: Vec<f64> = [&s.var_t0, &s.var_t1, &s.var_t2, &s.var_t3].iter().map(|e| e.z().unwrap()).collect();
    let sinr_ok = rel(s.sinr.estimate, 38.4) <= 0.05 && rel(target.sinr, 38.4) <= 1e-12;
    Outcome::new(
        sinr_ok && zs.iter().all(|z| z.abs() <= 3.0),
        format!(
            "SINR {:.3} vs 38.4 (rel {:.2}%); z(Var T0..T3) = [{}]",
            s.sinr.estimate,
            100.0 * rel(s.sinr.estimate, 38.4),
            zs.iter().map(|z| format!("{z:+.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn ac4() -> Outcome {
    let cfg = RawConfig::equal_power(100, 1, 4, 1000, 10, 0.9, 1.0, 1.0).validate().unwrap();
    // 1000 blocks of 100 antenna elements each.
    let m = mc_estimator_moments(&cfg, Regime::NoJam, &McRun::new(SEED, 1000)).unwrap();
    let (z_re, z_im) = (m.adversary_re.z().unwrap(), m.adversary_im.z().unwrap());
    let l = mc_leakage(&cfg, 0.7, &McRun::new(SEED, 20_000)).unwrap();
    let target = 100f64.powf(-0.7);
    let err = rel(l.adversary_power.estimate, target);
    Outcome::new(
        z_re.abs() <= 4.0 && z_im.abs() <= 4.0 && err <= 0.05,
        format!(
            "E[Hhat H_e*]: z = {z_re:+.2} / {z_im:+.2} over 1e5 samples; adversary power {:.5} vs {target:.5} ({:.2}%)",
            l.adversary_power.estimate,
            100.0 * err
        ),
    )
}

fn ac5() -> Outcome {
    let grid = [100usize, 1000, 10_000];
    let base = RawConfig::equal_power(10, 1, 2, 50, 10, 1.0, 1.0, 1.0);
    let equal = base.clone().validate().unwrap();
    let strong = RawConfig { rho_r: 10.0, ..base }.validate().unwrap();
    let run = McRun::new(SEED, 400);
    let a = mc_lln(&equal, 0, &grid, &run).unwrap();
    let b = mc_lln(&strong, 0, &grid, &run).unwrap();
    let per_log = |pts: &[secmimo::montecarlo::LlnPoint]| -> Vec<f64> {
        pts.iter().map(|p| p.bound.estimate / (p.m as f64).log2()).collect()
    };
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let (pa, pb) = (per_log(&a), per_log(&b));
    let limit = strong.data_fraction() * 10f64.log2();
    let ok_a = a[2].bound.estimate <= 0.05;
    let ok_b = rel(b[2].bound.estimate, limit) <= 0.10;
    Outcome::new(
        ok_a && ok_b && decreasing(&pa) && decreasing(&pb),
        format!(
            "rho_r=rho_jam: bound(1e4) = {:.4}; rho_r=10: bound(1e4) = {:.4} vs {limit:.4}; bound/log2M decreasing: {} / {}",
            a[2].bound.estimate,
            b[2].bound.estimate,
            decreasing(&pa),
            decreasing(&pb)
        ),
    )
}

fn ac6() -> Outcome {
    let cfg = RawConfig::equal_power(100, 1, 3, 40, 10, 1.0, 1.0, 0.5).validate().unwrap();
    let rows = mc_distribution_identity(&cfg, 1, &McRun::new(SEED, 1000)).unwrap();
    let worst = rows.iter().map(|r| r.difference.z().unwrap().abs()).fold(0.0, f64::max);
    Outcome::new(worst <= 4.0, format!("{} moments, max |z| = {worst:.2}", rows.len()))
}

fn ac7() -> Outcome {
    let ex = example2(200);
    let base = defense_rate(&ex, 200.0).unwrap();
    let invariant = [1usize, 2, 17, 100, 200].iter().all(|&j| {
        defense_rate(&ex.with_jammed_subset(j).unwrap(), 200.0).unwrap().users == base.users
    });
    let dof = base.users[0].rate / 200f64.log2();
    let oracle = 0.3326783460603009;
    let gaps: Vec<f64> = [200usize, 2000, 20_000]
        .iter()
        .map(|&m| {
            let c = example2(m);
            c.data_fraction() - defense_rate(&c, m as f64).unwrap().users[0].rate / (m as f64).log2()
        })
        .collect();
    let g = g_epsilon(&ex, 2.0 / 3.0).unwrap().value;
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        invariant && (dof - oracle).abs() <= 0.05 && shrinking && rel(g, 17.64) <= 1e-9,
        format!(
            "J-invariant: {invariant}; R/log2M(200) = {dof:.4} (oracle {oracle:.4}); gaps {:.4} > {:.4} > {:.4}; G(2/3) = {g}",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn ac8() -> Outcome {
    let mut rng = SeedPath::new(SEED).child("degeneracy").rng();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (cfg, eps, delta, _) = random_point(&mut rng);
        let s = s_epsilon(&cfg, eps, delta).unwrap().value;
        let s1 = s1_epsilon(&cfg, eps, delta, 1.0).unwrap().value;
        worst = worst.max(rel(s1, s));
    }
    Outcome::new(worst <= 1e-12, format!("max rel |S1 - S| = {worst:.1e} over 100 points"))
}

fn ac9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [2usize, 8, 64, 1024] {
        let w = solve_waterfilling(m, 10.0, 1e-8).unwrap();
        ok &= w.lambda <= w.lambda_bound() && w.residual <= 1e-8;
        parts.push(format!("M={m}: lambda {:.6} <= {:.6}", w.lambda, w.lambda_bound()));
    }
    let td = 0.99;
    let c = |p: i32| solve_waterfilling(1 << p, 10.0, 1e-8).unwrap().capacity(td) / p as f64;
    let (c10, c14) = (c(10), c(14));
    ok &= c14 < c10 && c14 > td;
    Outcome::new(ok, format!("{}; C/log2M {c10:.4} -> {c14:.4} (T_d/T = {td})", parts.join("; ")))
}

fn ac10() -> Outcome {
    let a = run_verify(Suite::All, SEED, DEFAULT_TRIALS, 0).unwrap();
    let b = run_verify(Suite::All, SEED, DEFAULT_TRIALS, 0).unwrap();
    let c = run_verify(Suite::All, SEED, DEFAULT_TRIALS, 1).unwrap();
    let d = run_verify(Suite::All, SEED, DEFAULT_TRIALS, 3).unwrap();
    let (ta, tb, tc, td) = (a.table.to_csv(), b.table.to_csv(), c.table.to_csv(), d.table.to_csv());
    let same = ta == tb;
    let workers = ta == tc && ta == td;
    Outcome::new(
        same && workers,
        format!(
            "repeat byte-identical: {same}; workers 0/1/3 identical: {workers}; {} checks, all pass: {}",
            a.checks.len(),
            a.passed()
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 10] = [
        ("AC1", "S(eps) reproduction", Duration::from_secs(1), ac1),
        ("AC2", "round-trip identities", Duration::from_secs(5), ac2),
        ("AC3", "SINR decomposition", Duration::from_secs(120), ac3),
        ("AC4", "no-training-jam security", Duration::from_secs(60), ac4),
        ("AC5", "pilot-matching attack", Duration::from_secs(180), ac5),
        ("AC6", "tilde-distribution identity", Duration::from_secs(60), ac6),
        ("AC7", "defense", Duration::from_secs(120), ac7),
        ("AC8", "S1 degeneracy", Duration::from_secs(1), ac8),
        ("AC9", "water-filling bound", Duration::from_secs(30), ac9),
        ("AC10", "determinism", Duration::from_secs(600), ac10),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{id:<5} {} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        for n in out.notes {
            println!("      note: {n}");
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
