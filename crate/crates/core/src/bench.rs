//! Scripted studies: shear-band width scaling, the Yosida limit and mesh
//! refinement.
//!
//! Each study runs complete simulations from a base [`RunConfig`] and checks
//! the thermodynamic invariants of every run on the way.

use crate::cli::config::RunConfig;
use crate::diagnostics::{self, DiagnosticsRecord, EntropyCheck};
use crate::discretization::{Discretization, DET_FLOOR, P_COMPONENTS};
use crate::error::{Error, Result};
use crate::state::{sample_line, Field, SimState};
use crate::stepper::{run_with, RunOptions, Solver};

/// Relative cumulative energy defect accepted in benchmark runs.
pub const BALANCE_TOL: f64 = 1e-3;
/// Per-step entropy decrease tolerated in isolated runs.
pub const ENTROPY_TOL: f64 = 1e-8;
/// Gradient threshold, as a fraction of the peak, that delimits the band.
pub const BAND_THRESHOLD: f64 = 0.05;
/// Smallest band, in elements across, that counts as resolved.
pub const MIN_BAND_ELEMENTS: f64 = 4.0;

/// Invariants checked on every benchmark run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    pub cumulative_balance: f64,
    /// only meaningful for isolated runs (`K = 0`)
    pub entropy: Option<EntropyCheck>,
    pub min_vartheta: f64,
    pub min_det_p: f64,
    pub pass: bool,
}

pub fn check_invariants(solver: &Solver, records: &[DiagnosticsRecord]) -> InvariantReport {
    let cumulative_balance = diagnostics::cumulative_balance(records);
    let entropy = (solver.params.k_heat == 0.0).then(|| diagnostics::entropy_check(records, ENTROPY_TOL));
    let min_vartheta = records.iter().map(|r| r.min_vartheta).fold(f64::INFINITY, f64::min);
    let min_det_p = records.iter().map(|r| r.min_det_p).fold(f64::INFINITY, f64::min);
    let pass = cumulative_balance <= BALANCE_TOL
        && entropy.is_none_or(|e| e.pass)
        && min_vartheta >= 0.0
        && min_det_p >= DET_FLOOR;
    InvariantReport {
        cumulative_balance,
        entropy,
        min_vartheta,
        min_det_p,
        pass,
    }
}

/// One finished simulation.
#[derive(Debug)]
pub struct ScenarioRun {
    pub label: String,
    pub solver: Solver,
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    pub invariants: InvariantReport,
    /// nodal `Ṗ P⁻¹` after every step
    pub rate_history: Vec<Vec<f64>>,
}

fn run_scenario<F>(cfg: &RunConfig, label: String, workers: usize, mut observe: F) -> Result<ScenarioRun>
where
    F: FnMut(&Solver, &SimState) -> Result<()>,
{
    let (solver, mut state) = cfg.build(workers)?;
    let mut rate_history = Vec::with_capacity(cfg.steps);
    let mut failure = None;
    let opts = RunOptions {
        steps: cfg.steps,
        snapshot_every: 0,
    };
    let (records, _, error) = run_with(&solver, &mut state, opts, |s, _, up| {
        rate_history.push(up.rate.clone());
        if failure.is_none() {
            if let Err(e) = observe(&solver, s) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = error.or(failure) {
        return Err(e);
    }
    let invariants = check_invariants(&solver, &records);
    Ok(ScenarioRun {
        label,
        solver,
        state,
        records,
        invariants,
        rate_history,
    })
}

// ------------------------------------------------------------- shear band

/// Half-width of the band `{x₂ : |∂P₁₂/∂x₂| > 5% of its max}` on the
/// vertical centerline `x₁ = L_x/2`, from differences of nodal values.
pub fn band_half_width(disc: &Discretization, state: &SimState) -> Result<f64> {
    let (pos, vals) = sample_line(disc, state, Field::P(0, 1), 0, 0.5 * disc.mesh.lx)?;
    let slopes: Vec<f64> = pos
        .windows(2)
        .zip(vals.windows(2))
        .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
        .collect();
    let peak = slopes.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::BenchFailure("no plastic shear on the centerline".into()));
    }
    // slopes live at interval midpoints; edges are located by linear
    // interpolation of the threshold crossing between neighbouring midpoints
    let thr = BAND_THRESHOLD * peak;
    let mid: Vec<f64> = pos.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect();
    let inside: Vec<usize> = (0..slopes.len()).filter(|&i| slopes[i] > thr).collect();
    let (first, last) = (inside[0], inside[inside.len() - 1]);
    let cross = |i: usize, j: usize| {
        let s = (thr - slopes[i]) / (slopes[j] - slopes[i]);
        mid[i] + s * (mid[j] - mid[i])
    };
    let lo = if first == 0 { pos[0] } else { cross(first - 1, first) };
    let hi = if last + 1 == slopes.len() { pos[pos.len() - 1] } else { cross(last, last + 1) };
    let width = hi - lo;
    let h = disc.mesh.hy;
    if width < MIN_BAND_ELEMENTS * h * (1.0 - 1e-9) {
        return Err(Error::BenchFailure(format!(
            "band unresolved: {:.2} elements across (need {MIN_BAND_ELEMENTS})",
            width / h
        )));
    }
    Ok(0.5 * width)
}

/// Least-squares fit of `ln ℓ = c + α_t ln t + α_κ ln κ₁`.
pub fn fit_exponents(samples: &[(f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    // normal equations of the 3-parameter linear model
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for &(t, k, l) in samples {
        let row = [1.0, t.ln(), k.ln()];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            b[i] += row[i] * l.ln();
        }
    }
    let inv = crate::tensor::Mat::new3(a).inv()?;
    let x: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[(i, j)] * b[j]).sum()).collect();
    Ok((x[1], x[2], x[0]))
}

/// Slope of a one-variable log–log least-squares fit.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug)]
pub struct ShearBandResult {
    pub kappa1: Vec<f64>,
    pub times: Vec<f64>,
    /// `widths[k][j]`: half-width for `kappa1[k]` at `times[j]`
    pub widths: Vec<Vec<f64>>,
    pub alpha_t: f64,
    pub alpha_kappa: f64,
    /// time exponent fitted separately for each `κ₁`
    pub alpha_t_per_kappa: Vec<f64>,
    /// `κ₁` exponent fitted separately at each time
    pub alpha_kappa_per_time: Vec<f64>,
    /// largest `hyper / plast_grad` energy ratio at the sampled times
    pub kappa0_fraction: f64,
    pub runs: Vec<ScenarioRun>,
}

/// Shear-band scan. Uses the `[bench]` gradient exponent and hyperstress
/// modulus; each `κ₁` is run to the last sampling time.
pub fn shear_band(base: &RunConfig, workers: usize) -> Result<ShearBandResult> {
    let spec = &base.bench;
    let mut times = spec.times.clone();
    times.sort_by(f64::total_cmp);
    if times.len() < 2 || spec.kappa1.len() < 2 {
        return Err(Error::config("bench", "need at least two times and two kappa1 values"));
    }
    let dt = base.step.dt;
    let steps = (times[times.len() - 1] / dt).round() as usize;
    let mut widths = Vec::new();
    let mut runs = Vec::new();
    let mut kappa0_fraction: f64 = 0.0;
    for &k1 in &spec.kappa1 {
        let mut cfg = base.clone();
        cfg.params.kappa1 = k1;
        cfg.params.q = spec.q;
        cfg.params.kappa0 = spec.kappa0;
        cfg.steps = steps;
        let mut row = Vec::with_capacity(times.len());
        let mut next = 0;
        let run = run_scenario(&cfg, format!("kappa1={k1:e}"), workers, |solver, s| {
            if next < times.len() && s.t >= times[next] - 0.5 * dt {
                row.push(band_half_width(&solver.disc, s)?);
                // energy share of the hyperstress at the sampled times
                let e = solver.disc.energies(&solver.params, &s.y, &s.p)?;
                kappa0_fraction = kappa0_fraction.max(e.hyper / e.plast_grad);
                next += 1;
            }
            Ok(())
        })?;
        widths.push(row);
        runs.push(run);
    }
    let mut samples = Vec::new();
    for (k, &k1) in spec.kappa1.iter().enumerate() {
        for (j, &t) in times.iter().enumerate() {
            samples.push((t, k1, widths[k][j]));
        }
    }
    let (alpha_t, alpha_kappa, _) = fit_exponents(&samples)?;
    let alpha_t_per_kappa = widths.iter().map(|w| loglog_slope(&times, w)).collect();
    let alpha_kappa_per_time = (0..times.len())
        .map(|j| {
            let w: Vec<f64> = widths.iter().map(|row| row[j]).collect();
            loglog_slope(&spec.kappa1, &w)
        })
        .collect();
    Ok(ShearBandResult {
        kappa1: spec.kappa1.clone(),
        times,
        widths,
        alpha_t,
        alpha_kappa,
        alpha_t_per_kappa,
        alpha_kappa_per_time,
        kappa0_fraction,
        runs,
    })
}

// --------------------------------------------------------- Cauchy studies

/// L² differences between two consecutive levels of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub label: String,
    /// displacement at the nodes
    pub y: f64,
    pub p: f64,
    pub vartheta: f64,
    /// `Ṗ P⁻¹` in `L²(Q)`
    pub rate: f64,
}

impl ConvergenceRow {
    pub fn fields(&self) -> [f64; 4] {
        [self.y, self.p, self.vartheta, self.rate]
    }
}

pub const FIELD_NAMES: [&str; 4] = ["y", "P", "vartheta", "PdotPinv"];

/// Consecutive-difference table with the ratios between rows.
#[derive(Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `rows[i+1] / rows[i]` per field
    pub ratios: Vec<[f64; 4]>,
    pub runs: Vec<ScenarioRun>,
}

impl ConvergenceTable {
    fn new(rows: Vec<ConvergenceRow>, runs: Vec<ScenarioRun>) -> Self {
        let ratios = rows
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].fields(), w[1].fields());
                std::array::from_fn(|k| b[k] / a[k])
            })
            .collect();
        ConvergenceTable { rows, ratios, runs }
    }

    pub fn worst_ratio(&self) -> f64 {
        self.ratios.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Every field decreases with ratio below `bound` between consecutive rows.
    pub fn contracting(&self, bound: f64) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().flatten().all(|r| *r < bound)
    }
}

/// Map from the nodes of `coarse` to the coinciding nodes of `fine`.
fn injection(coarse: &Discretization, fine: &Discretization) -> Result<Vec<usize>> {
    let (c, f) = (&coarse.mesh, &fine.mesh);
    if f.nx % c.nx != 0 || f.ny % c.ny != 0 || f.nx / c.nx != f.ny / c.ny {
        return Err(Error::config("bench.nx", "meshes must be nested"));
    }
    let r = f.nx / c.nx;
    let mut map = Vec::with_capacity(c.num_nodes());
    for j in 0..=c.ny {
        for i in 0..=c.nx {
            map.push(f.node_index(r * i, r * j));
        }
    }
    Ok(map)
}

fn compare(a: &ScenarioRun, b: &ScenarioRun, label: String) -> Result<ConvergenceRow> {
    let da = &a.solver.disc;
    let db = &b.solver.disc;
    let map = injection(da, db)?;
    let m = &da.lumped;
    let nodal = |fa: &[f64], fb: &[f64], stride: usize| -> f64 {
        let mut acc = 0.0;
        for (i, &j) in map.iter().enumerate() {
            for c in 0..stride {
                let d = fa[stride * i + c] - fb[stride * j + c];
                acc += m[i] * d * d;
            }
        }
        acc
    };
    let disp = |s: &SimState, d: &Discretization, node: usize, c: usize| s.y[c * d.ns + 4 * node] - d.mesh.coords[node][c];
    let mut y = 0.0;
    for (i, &j) in map.iter().enumerate() {
        for c in 0..2 {
            let d = disp(&a.state, da, i, c) - disp(&b.state, db, j, c);
            y += m[i] * d * d;
        }
    }
    let p = nodal(&a.state.p, &b.state.p, P_COMPONENTS);
    let vartheta = nodal(&a.state.vartheta, &b.state.vartheta, 1);
    let dt = a.solver.cfg.dt;
    let rate: f64 = a
        .rate_history
        .iter()
        .zip(&b.rate_history)
        .map(|(ra, rb)| dt * nodal(ra, rb, P_COMPONENTS))
        .sum();
    Ok(ConvergenceRow {
        label,
        y: y.sqrt(),
        p: p.sqrt(),
        vartheta: vartheta.sqrt(),
        rate: rate.sqrt(),
    })
}

/// Yosida study: identical runs at each `ε`, compared level to level.
#[derive(Debug)]
pub struct YosidaResult {
    pub eps: Vec<f64>,
    pub table: ConvergenceTable,
    /// largest mechanical energy along each run
    pub max_mech_energy: Vec<f64>,
    /// total mechanical dissipation `∫∫ ∂R_ε(R):R` of each run
    pub dissipation: Vec<f64>,
}

impl YosidaResult {
    /// Largest over smallest value of a per-level quantity.
    pub fn spread(values: &[f64]) -> f64 {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

pub fn yosida_limit(base: &RunConfig, workers: usize) -> Result<YosidaResult> {
    let eps = base.bench.eps.clone();
    if eps.len() < 2 {
        return Err(Error::config("bench.eps", "need at least two levels"));
    }
    let mut runs = Vec::new();
    let mut max_mech_energy = Vec::new();
    let mut dissipation = Vec::new();
    for &e in &eps {
        let mut cfg = base.clone();
        cfg.step.eps = e;
        let run = run_scenario(&cfg, format!("eps={e:e}"), workers, |_, _| Ok(()))?;
        max_mech_energy.push(run.records.iter().map(|r| r.mech_energy()).fold(0.0, f64::max));
        // mech. dissipation = −(ΔE_mech − W_ext) summed over the run
        dissipation.push(
            run.records
                .windows(2)
                .map(|w| w[1].dissipation_step.max(0.0))
                .sum::<f64>(),
        );
        runs.push(run);
    }
    let mut rows = Vec::new();
    for k in 0..runs.len() - 1 {
        rows.push(compare(&runs[k], &runs[k + 1], format!("eps {:e} -> {:e}", eps[k], eps[k + 1]))?);
    }
    Ok(YosidaResult {
        eps,
        table: ConvergenceTable::new(rows, runs),
        max_mech_energy,
        dissipation,
    })
}

/// Refinement study on nested meshes.
#[derive(Debug)]
pub struct RefinementResult {
    pub nx: Vec<usize>,
    pub table: ConvergenceTable,
    /// diagnostics of the coarsest level are byte-identical for 1 and 8 workers
    pub deterministic: bool,
}

pub fn refinement_study(base: &RunConfig, workers: usize) -> Result<RefinementResult> {
    let nx = base.bench.nx.clone();
    if nx.len() < 2 {
        return Err(Error::config("bench.nx", "need at least two resolutions"));
    }
    let aspect = base.mesh.ny as f64 / base.mesh.nx as f64;
    let level = |n: usize| {
        let mut cfg = base.clone();
        cfg.mesh.nx = n;
        cfg.mesh.ny = ((n as f64) * aspect).round().max(2.0) as usize;
        cfg
    };
    let mut runs = Vec::new();
    for &n in &nx {
        runs.push(run_scenario(&level(n), format!("nx={n}"), workers, |_, _| Ok(()))?);
    }
    let mut rows = Vec::new();
    for k in 0..runs.len() - 1 {
        rows.push(compare(&runs[k], &runs[k + 1], format!("nx {} -> {}", nx[k], nx[k + 1]))?);
    }
    let csv = |w: usize| -> Result<String> {
        let run = run_scenario(&level(nx[0]), String::new(), w, |_, _| Ok(()))?;
        Ok(crate::cli::output::diagnostics_csv(&run.records))
    };
    let deterministic = csv(1)? == csv(8)?;
    Ok(RefinementResult {
        nx,
        table: ConvergenceTable::new(rows, runs),
        deterministic,
    })
}
