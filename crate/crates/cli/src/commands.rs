//! `thresholds` and `mc` subcommands.

use std::str::FromStr;

use secmimo::estimation::Regime;
use secmimo::montecarlo::waterfill::solve_waterfilling;
use secmimo::montecarlo::{
    mc_distribution_identity, mc_end_to_end, mc_estimator_moments, mc_leakage, mc_lln, mc_sinr,
    EndToEndOptions, McEstimate, McRun,
};
use secmimo::thresholds::{g_epsilon, optimize_delta, s1_epsilon, s_epsilon, v1_of_r, v_of_r, ThresholdReport};
use secmimo::AttackKind;

use crate::config::Resolved;
use crate::error::{CliError, CliResult};
use crate::figures::fig4_deltas;
use crate::table::{Cell, Provenance, ResultTable};

pub const THRESHOLD_COLUMNS: [&str; 7] = ["quantity", "value", "antennas", "epsilon", "delta", "gamma", "residual"];

fn threshold_row(name: &str, r: &ThresholdReport) -> Vec<Cell> {
    vec![
        name.into(),
        r.value.into(),
        r.antennas.into(),
        r.epsilon.into(),
        r.delta.into(),
        r.gamma.into(),
        r.residual.into(),
    ]
}

/// S, V, G, S1, V1 and the grid-optimal δ for one configuration.
pub fn run_thresholds(resolved: &Resolved, epsilon: f64, rate: f64, delta: Option<f64>) -> CliResult<ResultTable> {
    let cfg = &resolved.system;
    let delta = delta.unwrap_or(resolved.delta);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::Invalid(format!(
            "thresholds need 0 < delta < 1 (use --delta or beamforming.delta), got {delta}"
        )));
    }
    let gamma = cfg.gamma();
    let rates = vec![rate; cfg.k()];
    let prov = Provenance::new(format!("thresholds --epsilon {epsilon} --rate {rate} --delta {delta}"), &resolved.tree);
    let mut t = ResultTable::new(prov, &THRESHOLD_COLUMNS);
    t.push(threshold_row("s_epsilon", &s_epsilon(cfg, epsilon, delta)?))?;
    t.push(threshold_row("v_of_r", &v_of_r(cfg, &rates, delta)?))?;
    t.push(threshold_row("g_epsilon", &g_epsilon(cfg, epsilon)?))?;
    match s1_epsilon(cfg, epsilon, delta, gamma) {
        Ok(r) => t.push(threshold_row("s1_epsilon", &r))?,
        Err(secmimo::Error::Parameter(_)) => {}
        Err(e) => return Err(e.into()),
    }
    t.push(threshold_row("v1_of_r", &v1_of_r(cfg, &rates, delta)?))?;
    let best = optimize_delta(cfg, &rates, epsilon, &fig4_deltas())?;
    t.push(vec![
        "optimal_delta".into(),
        best.value.into(),
        (best.value.ceil() as u64).into(),
        epsilon.into(),
        best.delta.into(),
        Cell::Num(f64::NAN),
        Cell::Num(f64::NAN),
    ])?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Moments,
    Sinr,
    Leakage,
    Lln,
    Identity,
    EndToEnd,
    Waterfill,
}

impl FromStr for Experiment {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "moments" => Experiment::Moments,
            "sinr" => Experiment::Sinr,
            "leakage" => Experiment::Leakage,
            "lln" => Experiment::Lln,
            "identity" => Experiment::Identity,
            "end-to-end" => Experiment::EndToEnd,
            "waterfill" => Experiment::Waterfill,
            _ => return Err(CliError::Invalid(format!("unknown experiment `{s}`"))),
        })
    }
}

pub const MC_COLUMNS: [&str; 8] = ["experiment", "label", "estimate", "se", "target", "z", "trials", "seed"];

fn mc_row(experiment: &str, label: &str, e: &McEstimate) -> Vec<Cell> {
    vec![
        experiment.into(),
        label.into(),
        e.estimate.into(),
        e.se.into(),
        e.target.into(),
        e.z().into(),
        e.trials.into(),
        e.seed.clone().into(),
    ]
}

fn regime_of(resolved: &Resolved) -> Regime {
    Regime::from_attack(resolved.attack.kind())
}

fn matching_target(resolved: &Resolved) -> usize {
    match resolved.attack.kind() {
        AttackKind::PilotMatching { target } => target,
        _ => resolved.file.attack.target_user,
    }
}

/// One Monte-Carlo experiment on the resolved configuration.
pub fn run_mc(experiment: Experiment, resolved: &Resolved, seed: u64, trials: usize, workers: usize) -> CliResult<ResultTable> {
    let cfg = &resolved.system;
    let run = McRun::new(seed, trials).with_workers(workers);
    let name = format!("{experiment:?}").to_lowercase();
    let prov = Provenance::new(format!("mc {name}"), &resolved.tree).with_run(seed, trials);
    let mut t = ResultTable::new(prov, &MC_COLUMNS);
    match experiment {
        Experiment::Moments => {
            let m = mc_estimator_moments(cfg, regime_of(resolved), &run)?;
            for e in [Some(&m.power), Some(&m.adversary_re), Some(&m.adversary_im), m.cross_re.as_ref(), m.cross_im.as_ref()]
                .into_iter()
                .flatten()
            {
                t.push(mc_row(&name, &e.label, e))?;
            }
        }
        Experiment::Sinr => {
            let s = mc_sinr(cfg, &run)?;
            for e in [&s.var_t0, &s.var_t1, &s.var_t2, &s.var_t3, &s.sinr] {
                t.push(mc_row(&name, &e.label, e))?;
            }
        }
        Experiment::Leakage => {
            let l = mc_leakage(cfg, resolved.delta, &run)?;
            if let Some(c) = &l.correlation_power {
                t.push(mc_row(&name, &c.label, c))?;
            }
            t.push(mc_row(&name, &l.adversary_power.label, &l.adversary_power))?;
        }
        Experiment::Lln => {
            let grid = [100usize, 1000, 10_000];
            for p in mc_lln(cfg, matching_target(resolved), &grid, &run)? {
                for e in [&p.v, &p.w, &p.bound] {
                    t.push(mc_row(&name, &format!("{}_m{}", e.label, p.m), e))?;
                }
            }
        }
        Experiment::Identity => {
            for row in mc_distribution_identity(cfg, matching_target(resolved), &run)? {
                t.push(mc_row(&name, &format!("{}_observed", row.name), &row.observed))?;
                t.push(mc_row(&name, &format!("{}_constructed", row.name), &row.constructed))?;
                t.push(mc_row(&name, &format!("{}_difference", row.name), &row.difference))?;
            }
        }
        Experiment::EndToEnd => {
            let opts = EndToEndOptions {
                randomize_assignment: resolved.file.defense.randomize_assignment,
                delta: resolved.delta,
                user: 0,
            };
            let e = mc_end_to_end(cfg, &resolved.attack, opts, &run)?;
            for est in [&e.decodable, &e.leakage, &e.secure] {
                t.push(mc_row(&name, &est.label, est))?;
            }
        }
        Experiment::Waterfill => {
            let w = solve_waterfilling(cfg.m(), cfg.rho_f(), 1e-8)?;
            let path = run.label_path("waterfill");
            let exact = |label: &str, v: f64| McEstimate::new(label, v, 0.0, 0, &path);
            t.push(mc_row(&name, "lambda", &exact("lambda", w.lambda)))?;
            t.push(mc_row(&name, "lambda_bound", &exact("lambda_bound", w.lambda_bound())))?;
            t.push(mc_row(&name, "residual", &exact("residual", w.residual)))?;
            t.push(mc_row(&name, "capacity", &exact("capacity", w.capacity(cfg.data_fraction()))))?;
        }
    }
    Ok(t)
}
