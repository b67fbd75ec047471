use secmimo::config::{AttackKind, AttackSpec, RawConfig, SystemConfig};
use secmimo::estimation::Regime;
use secmimo::montecarlo::{
    mc_distribution_identity, mc_end_to_end, mc_estimator_moments, mc_leakage, mc_lln, mc_sinr,
    EndToEndOptions, McEstimate, McRun, Z_GATE,
};

fn small() -> SystemConfig {
    RawConfig::equal_power(64, 1, 4, 40, 10, 0.9, 1.0, 1.0).validate().unwrap()
}

fn gate(e: &McEstimate) {
    let z = e.z().expect("target");
    println!("{:<28} est={:.6} se={:.2e} target={:.6} z={:+.2}", e.label, e.estimate, e.se, e.target.unwrap(), z);
    assert!(z.abs() <= Z_GATE, "{} z={z}", e.label);
}

#[test]
fn estimator_moments_all_regimes() {
    let cfg = small();
    let run = McRun::new(11, 3000);
    for regime in [
        Regime::NoJam,
        Regime::PilotMatching { target: 2 },
        Regime::RandomSubset { jammed: 3 },
    ] {
        let m = mc_estimator_moments(&cfg, regime, &run).unwrap();
        gate(&m.power);
        gate(&m.adversary_re);
        gate(&m.adversary_im);
        gate(m.cross_re.as_ref().unwrap());
        gate(m.cross_im.as_ref().unwrap());
    }
}

#[test]
fn sinr_decomposition() {
    let cfg = small();
    let s = mc_sinr(&cfg, &McRun::new(12, 3000)).unwrap();
    for e in [&s.var_t0, &s.var_t1, &s.var_t2, &s.var_t3, &s.sinr] {
        gate(e);
    }
}

#[test]
fn leakage_moments() {
    let cfg = small();
    let l = mc_leakage(&cfg, 0.7, &McRun::new(13, 3000)).unwrap();
    gate(l.correlation_power.as_ref().unwrap());
    gate(&l.adversary_power);
}

#[test]
fn distribution_identity() {
    let cfg = RawConfig::equal_power(64, 1, 3, 40, 10, 1.0, 1.0, 0.5).validate().unwrap();
    for row in mc_distribution_identity(&cfg, 1, &McRun::new(14, 3000)).unwrap() {
        gate(&row.difference);
    }
}

#[test]
fn lln_concentrates() {
    let cfg = RawConfig::equal_power(10, 1, 2, 40, 10, 1.0, 1.0, 1.0).validate().unwrap();
    let pts = mc_lln(&cfg, 0, &[100, 1000], &McRun::new(15, 400)).unwrap();
    let dev = |p: &secmimo::montecarlo::LlnPoint| (p.v.estimate - p.limits.v_limit).abs() + (p.w.estimate - p.limits.w_limit).abs();
    println!("{:?}", pts.iter().map(|p| (p.m, p.v.estimate, p.limits.v_limit, p.w.estimate, p.limits.w_limit)).collect::<Vec<_>>());
    assert!(dev(&pts[1]) < dev(&pts[0]) || dev(&pts[1]) < 0.01);
    assert!(pts[1].bound.estimate <= 0.05);
}

#[test]
fn end_to_end_silent_training_matches_rate() {
    let cfg = small();
    let attack = AttackSpec::new(AttackKind::DataOnlyJam, &cfg).unwrap();
    let e = mc_end_to_end(&cfg, &attack, EndToEndOptions::default(), &McRun::new(16, 3000)).unwrap();
    gate(&e.decodable);
    gate(&e.leakage);
}

#[test]
fn end_to_end_defense_matches_rate() {
    let cfg = RawConfig {
        l_pilots: Some(10),
        j_subset: 5,
        ..RawConfig::equal_power(64, 1, 4, 30, 10, 10.0, 1.0, 1.0)
    }
    .validate()
    .unwrap();
    let attack = AttackSpec::new(AttackKind::RandomSubsetJam { jammed: 5 }, &cfg).unwrap();
    let opts = EndToEndOptions { randomize_assignment: true, ..Default::default() };
    let e = mc_end_to_end(&cfg, &attack, opts, &McRun::new(17, 3000)).unwrap();
    gate(&e.decodable);
    gate(&e.leakage);
}

#[test]
fn runs_are_worker_independent() {
    let cfg = small();
    let a = mc_leakage(&cfg, 0.5, &McRun::new(3, 200).with_workers(1)).unwrap();
    let b = mc_leakage(&cfg, 0.5, &McRun::new(3, 200).with_workers(4)).unwrap();
    assert_eq!(a, b);
}
