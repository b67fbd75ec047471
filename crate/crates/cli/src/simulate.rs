//! End-to-end block simulation with per-block and aggregate rows.

use secmimo::analytics::rate_no_training_jamming;
use secmimo::config::AttackSpec;
use secmimo::montecarlo::{mc_end_to_end, EndToEnd, EndToEndOptions, McEstimate, McRun};

use crate::config::Resolved;
use crate::error::CliResult;
use crate::table::{Cell, Provenance, ResultTable};

pub const COLUMNS: [&str; 13] = [
    "record",
    "block",
    "gain_re",
    "gain_im",
    "symbol_energy",
    "interference_energy",
    "noise_energy",
    "leakage_energy",
    "hit",
    "estimate",
    "se",
    "target",
    "z",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulateOptions {
    pub user: usize,
    /// Also run a passive-adversary baseline on the same seeds and report
    /// the rate gap caused by data-phase jamming.
    pub baseline: bool,
    pub workers: usize,
}

fn blank() -> Cell {
    Cell::Text(String::new())
}

fn aggregate_row(name: &str, e: &McEstimate) -> Vec<Cell> {
    let mut row = vec![format!("aggregate:{name}").into()];
    row.extend((0..8).map(|_| blank()));
    row.extend([e.estimate.into(), e.se.into(), e.target.into(), e.z().into()]);
    row
}

pub fn run_simulate(resolved: &Resolved, blocks: usize, seed: u64, options: SimulateOptions) -> CliResult<(ResultTable, EndToEnd)> {
    let cfg = &resolved.system;
    let run = McRun::new(seed, blocks).with_workers(options.workers);
    let e2e_opts = EndToEndOptions {
        randomize_assignment: resolved.file.defense.randomize_assignment,
        delta: resolved.delta,
        user: options.user,
    };
    let result = mc_end_to_end(cfg, &resolved.attack, e2e_opts, &run)?;
    let prov = Provenance::new("simulate", &resolved.tree).with_run(seed, blocks);
    let mut table = ResultTable::new(prov, &COLUMNS);
    if blocks == 0 {
        return Ok((table, result));
    }
    for (i, b) in result.blocks.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            "block".into(),
            i.into(),
            b.gain.re.into(),
            b.gain.im.into(),
            b.symbol_energy.into(),
            b.interference_energy.into(),
            b.noise_energy.into(),
            b.leakage_energy.into(),
            b.hit.into(),
        ];
        row.extend((0..4).map(|_| blank()));
        table.push(row)?;
    }
    table.push(aggregate_row("decodable", &result.decodable))?;
    table.push(aggregate_row("leakage", &result.leakage))?;
    table.push(aggregate_row("secure", &result.secure))?;

    if options.baseline {
        let passive = AttackSpec::none(cfg);
        let base = mc_end_to_end(cfg, &passive, e2e_opts, &run)?;
        table.push(aggregate_row("baseline_decodable", &base.decodable))?;
        // Paired difference: both runs share every channel and noise draw.
        let m = cfg.m() as f64;
        let quiet = cfg.with_rho_jam(0.0)?;
        let target = rate_no_training_jamming(&quiet, m).user(options.user).decodable
            - rate_no_training_jamming(cfg, m).user(options.user).decodable;
        let gap = McEstimate::new(
            "rate_gap",
            base.decodable.estimate - result.decodable.estimate,
            f64::NAN,
            blocks,
            &run.label_path("end_to_end"),
        )
        .with_target(target);
        table.push(aggregate_row("rate_gap", &gap))?;
    }
    Ok((table, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load;

    #[test]
    fn zero_blocks_gives_header_only() {
        let r = load(None, &[]).unwrap().resolve().unwrap();
        let (t, _) = run_simulate(&r, 0, 1, SimulateOptions::default()).unwrap();
        assert!(t.rows().is_empty());
        assert_eq!(t.to_csv().lines().count(), 2);
    }

    #[test]
    fn rows_per_block_plus_aggregates() {
        let r = load(None, &["system.m=16".into(), "attack.kind=data_only_jam".into()]).unwrap().resolve().unwrap();
        let (t, _) = run_simulate(&r, 5, 1, SimulateOptions::default()).unwrap();
        assert_eq!(t.rows().len(), 5 + 3);
    }
}
