//! The `run` and `bench` commands, shared by the binary and the tests.

use std::path::Path;

use super::config::RunConfig;
use super::output::{self, write_file, write_outputs};
use crate::bench::{self, ConvergenceTable, InvariantReport, ScenarioRun, FIELD_NAMES};
use crate::error::{Error, Result};
use crate::stepper::{run, RunOptions};

/// Targets of the shear-band study.
pub const ALPHA_T: (f64, f64) = (2.0 / 3.0, 0.10);
pub const ALPHA_KAPPA: (f64, f64) = (1.0 / 3.0, 0.07);
/// Largest share of the hyperstress energy in the plastic-gradient energy.
pub const KAPPA0_FRACTION: f64 = 0.01;
/// Bound on consecutive-difference ratios in the Cauchy studies.
pub const CONTRACTION: f64 = 0.9;
/// Allowed spread (max/min over levels) of energies and dissipation in the
/// Yosida study.
pub const UNIFORM_BOUND: f64 = 2.0;

type Summary = Vec<(String, String)>;

fn entry(summary: &mut Summary, key: impl Into<String>, value: impl ToString) {
    summary.push((key.into(), value.to_string()));
}

fn invariant_entries(summary: &mut Summary, prefix: &str, inv: &InvariantReport) {
    entry(summary, format!("{prefix}cumulative_balance"), format!("{:.6e}", inv.cumulative_balance));
    if let Some(e) = inv.entropy {
        entry(summary, format!("{prefix}entropy_worst_decrease"), format!("{:.6e}", e.worst_decrease));
        entry(summary, format!("{prefix}entropy_pass"), e.pass);
    }
    entry(summary, format!("{prefix}min_vartheta"), format!("{:.6e}", inv.min_vartheta));
    entry(summary, format!("{prefix}min_detP"), format!("{:.6e}", inv.min_det_p));
    entry(summary, format!("{prefix}invariants_pass"), inv.pass);
}

/// Runs a configuration and writes `diagnostics.csv`, the snapshots and
/// `summary.txt` into `out`. Outputs are written even when a step fails; the
/// step error is returned afterwards.
pub fn execute_run(cfg: &RunConfig, out: &Path) -> Result<InvariantReport> {
    let (solver, state) = cfg.build(cfg.workers)?;
    let opts = RunOptions {
        steps: cfg.steps,
        snapshot_every: cfg.output.snapshot_every,
    };
    let result = run(&solver, state, opts)?;
    let inv = bench::check_invariants(&solver, &result.records);
    let mut summary = Summary::new();
    entry(&mut summary, "steps_completed", result.records.len() - 1);
    entry(
        &mut summary,
        "status",
        match &result.error {
            None => "ok".to_string(),
            Some(e) => format!("failed: {e}"),
        },
    );
    invariant_entries(&mut summary, "", &inv);
    if let Some(last) = result.records.last() {
        entry(&mut summary, "final_total_energy", format!("{:.16e}", last.total_energy()));
        entry(&mut summary, "final_entropy", format!("{:.16e}", last.entropy_total));
    }
    write_outputs(out, &solver.disc, &result.records, &result.snapshots, &summary)?;
    match result.error {
        Some(e) => Err(e),
        None => Ok(inv),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    ShearBand,
    Yosida,
    Refine,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::ShearBand => "shear-band",
            BenchKind::Yosida => "yosida",
            BenchKind::Refine => "refine",
        }
    }
}

/// Outcome of a study: the summary lines and the overall verdict.
#[derive(Debug)]
pub struct BenchOutcome {
    pub summary: Vec<(String, String)>,
    pub pass: bool,
}

fn write_runs(out: Option<&Path>, runs: &[ScenarioRun]) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for r in runs {
            let name = format!("{}.csv", r.label.replace(['=', ' '], "_"));
            write_file(&dir.join(name), &output::diagnostics_csv(&r.records))?;
        }
    }
    Ok(())
}

fn table_entries(summary: &mut Summary, table: &ConvergenceTable) {
    for (i, row) in table.rows.iter().enumerate() {
        entry(summary, format!("row{i}"), &row.label);
        for (name, v) in FIELD_NAMES.iter().zip(row.fields()) {
            entry(summary, format!("row{i}_{name}"), format!("{v:.6e}"));
        }
    }
    for (i, r) in table.ratios.iter().enumerate() {
        for (name, v) in FIELD_NAMES.iter().zip(r) {
            entry(summary, format!("ratio{i}_{name}"), format!("{v:.4}"));
        }
    }
    entry(summary, "worst_ratio", format!("{:.4}", table.worst_ratio()));
    entry(summary, "ratio_bound", CONTRACTION);
}

/// Runs a study and writes per-scenario CSVs plus `bench_summary.txt`.
pub fn execute_bench(kind: BenchKind, cfg: &RunConfig, out: Option<&Path>) -> Result<BenchOutcome> {
    let mut summary = Summary::new();
    entry(&mut summary, "bench", kind.name());
    let pass = match kind {
        BenchKind::ShearBand => {
            let r = bench::shear_band(cfg, cfg.workers)?;
            let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
            entry(&mut summary, "kappa1", fmt(&r.kappa1));
            entry(&mut summary, "times", fmt(&r.times));
            for (k, w) in r.widths.iter().enumerate() {
                entry(&mut summary, format!("half_width_kappa{k}"), fmt(w));
            }
            entry(&mut summary, "alpha_t", format!("{:.4}", r.alpha_t));
            entry(&mut summary, "alpha_kappa", format!("{:.4}", r.alpha_kappa));
            entry(&mut summary, "alpha_t_per_kappa", fmt(&r.alpha_t_per_kappa));
            entry(&mut summary, "alpha_kappa_per_time", fmt(&r.alpha_kappa_per_time));
            entry(&mut summary, "kappa0_fraction", format!("{:.3e}", r.kappa0_fraction));
            let t_ok = (r.alpha_t - ALPHA_T.0).abs() <= ALPHA_T.1;
            let k_ok = (r.alpha_kappa - ALPHA_KAPPA.0).abs() <= ALPHA_KAPPA.1;
            let inv_ok = r.runs.iter().all(|run| run.invariants.pass);
            for run in &r.runs {
                invariant_entries(&mut summary, &format!("{}.", run.label), &run.invariants);
            }
            entry(&mut summary, "alpha_t_pass", t_ok);
            entry(&mut summary, "alpha_kappa_pass", k_ok);
            entry(&mut summary, "kappa0_fraction_pass", r.kappa0_fraction <= KAPPA0_FRACTION);
            write_runs(out, &r.runs)?;
            t_ok && k_ok && inv_ok && r.kappa0_fraction <= KAPPA0_FRACTION
        }
        BenchKind::Yosida => {
            let r = bench::yosida_limit(cfg, cfg.workers)?;
            table_entries(&mut summary, &r.table);
            let e_spread = bench::YosidaResult::spread(&r.max_mech_energy);
            let d_spread = bench::YosidaResult::spread(&r.dissipation);
            entry(&mut summary, "energy_spread", format!("{e_spread:.4}"));
            entry(&mut summary, "dissipation_spread", format!("{d_spread:.4}"));
            for run in &r.table.runs {
                invariant_entries(&mut summary, &format!("{}.", run.label), &run.invariants);
            }
            write_runs(out, &r.table.runs)?;
            r.table.contracting(CONTRACTION)
                && e_spread <= UNIFORM_BOUND
                && d_spread <= UNIFORM_BOUND
                && r.table.runs.iter().all(|run| run.invariants.pass)
        }
        BenchKind::Refine => {
            let r = bench::refinement_study(cfg, cfg.workers)?;
            table_entries(&mut summary, &r.table);
            entry(&mut summary, "deterministic_1_vs_8_workers", r.deterministic);
            for run in &r.table.runs {
                invariant_entries(&mut summary, &format!("{}.", run.label), &run.invariants);
            }
            write_runs(out, &r.table.runs)?;
            r.table.contracting(CONTRACTION) && r.deterministic && r.table.runs.iter().all(|run| run.invariants.pass)
        }
    };
    entry(&mut summary, "pass", pass);
    if let Some(dir) = out {
        write_file(&dir.join("bench_summary.txt"), &output::summary_text(&summary))?;
    }
    Ok(BenchOutcome { summary, pass })
}
