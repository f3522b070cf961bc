//! Energies, entropy and balance residuals.

use crate::discretization::P_COMPONENTS;
use crate::error::Result;
use crate::materials::THETA_FLOOR;
use crate::state::SimState;
use crate::stepper::{Solver, StepReport};

/// Column names of `diagnostics.csv`, in record order.
pub const COLUMNS: [&str; 17] = [
    "step",
    "t",
    "kinetic",
    "elastic",
    "hardening",
    "hyper",
    "plast_grad",
    "boundary_spring",
    "enthalpy_total",
    "entropy_total",
    "dissipation_step",
    "ext_power_step",
    "heat_flux_step",
    "mech_balance_residual",
    "total_balance_residual",
    "min_detP",
    "min_vartheta",
];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub hardening: f64,
    pub hyper: f64,
    pub plast_grad: f64,
    pub boundary_spring: f64,
    pub enthalpy_total: f64,
    pub entropy_total: f64,
    /// heat produced by dissipation during the step, `∫ r_ε dx dt`
    pub dissipation_step: f64,
    /// work of the bulk force and the support during the step
    pub ext_power_step: f64,
    /// heat leaving through the boundary during the step, `∫ K(θ − θ_♭ε) dS dt`
    pub heat_flux_step: f64,
    pub mech_balance_residual: f64,
    pub total_balance_residual: f64,
    pub min_det_p: f64,
    pub min_vartheta: f64,
}

impl DiagnosticsRecord {
    pub fn mech_energy(&self) -> f64 {
        self.kinetic + self.elastic + self.hardening + self.hyper + self.plast_grad + self.boundary_spring
    }

    pub fn total_energy(&self) -> f64 {
        self.mech_energy() + self.enthalpy_total
    }

    pub fn values(&self) -> [f64; 17] {
        [
            self.step as f64,
            self.t,
            self.kinetic,
            self.elastic,
            self.hardening,
            self.hyper,
            self.plast_grad,
            self.boundary_spring,
            self.enthalpy_total,
            self.entropy_total,
            self.dissipation_step,
            self.ext_power_step,
            self.heat_flux_step,
            self.mech_balance_residual,
            self.total_balance_residual,
            self.min_det_p,
            self.min_vartheta,
        ]
    }
}

/// Mechanical energy components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MechEnergy {
    pub kinetic: f64,
    pub elastic: f64,
    pub hardening: f64,
    pub hyper: f64,
    pub plast_grad: f64,
    pub boundary_spring: f64,
}

impl MechEnergy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.hardening + self.hyper + self.plast_grad + self.boundary_spring
    }
}

pub fn mech_energy(solver: &Solver, state: &SimState) -> Result<MechEnergy> {
    let d = &solver.disc;
    let parts = d.energies(&solver.params, &state.y, &state.p)?;
    Ok(MechEnergy {
        kinetic: d.half_quad_form(&d.mass_y, &state.v),
        elastic: parts.elastic,
        hardening: parts.hardening,
        hyper: parts.hyper,
        plast_grad: parts.plast_grad,
        boundary_spring: d.half_quad_form(&d.spring, &state.y),
    })
}

/// `∫ ϑ dx` with the lumped mass used by the heat step.
pub fn enthalpy_total(solver: &Solver, state: &SimState) -> f64 {
    solver.disc.lumped.iter().zip(&state.vartheta).map(|(m, v)| m * v).sum()
}

/// `∫ c_v0 ln θ dx` with nodal `θ` floored before the logarithm.
pub fn entropy_total(solver: &Solver, state: &SimState) -> f64 {
    let p = &solver.params;
    solver
        .disc
        .lumped
        .iter()
        .zip(&state.vartheta)
        .map(|(m, v)| m * p.entropy_density(p.cv_inv(*v).max(THETA_FLOOR)))
        .sum()
}

/// Signed defect of the total energy balance between two records,
/// `ΔE − (W_ext − Q_out)`.
pub fn balance_defect(prev: &DiagnosticsRecord, next: &DiagnosticsRecord) -> f64 {
    next.total_energy() - prev.total_energy() - (next.ext_power_step - next.heat_flux_step)
}

/// `|ΔE − (W_ext − Q_out)| / max(E, 1)`.
pub fn total_balance_residual(prev: &DiagnosticsRecord, next: &DiagnosticsRecord) -> f64 {
    balance_defect(prev, next).abs() / next.total_energy().abs().max(1.0)
}

/// Cumulative total-energy defect over a record series, normalized by the
/// largest total energy seen (at least 1).
pub fn cumulative_balance(records: &[DiagnosticsRecord]) -> f64 {
    let defect: f64 = records.windows(2).map(|w| balance_defect(&w[0], &w[1])).sum();
    let scale = records.iter().fold(1.0f64, |m, r| m.max(r.total_energy().abs()));
    defect.abs() / scale
}

/// Builds the record for `state`. `report` describes the step that produced
/// it and `prev` is the preceding record (both absent for the initial state).
pub fn record(
    solver: &Solver,
    state: &SimState,
    report: Option<&StepReport>,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord> {
    let mech = mech_energy(solver, state)?;
    let report = report.copied().unwrap_or_default();
    let mut rec = DiagnosticsRecord {
        step: state.step,
        t: state.t,
        kinetic: mech.kinetic,
        elastic: mech.elastic,
        hardening: mech.hardening,
        hyper: mech.hyper,
        plast_grad: mech.plast_grad,
        boundary_spring: mech.boundary_spring,
        enthalpy_total: enthalpy_total(solver, state),
        entropy_total: entropy_total(solver, state),
        dissipation_step: report.heat_production,
        ext_power_step: report.ext_work,
        heat_flux_step: -report.heat_in,
        mech_balance_residual: 0.0,
        total_balance_residual: 0.0,
        min_det_p: solver.disc.min_det_p(&state.p),
        min_vartheta: state.vartheta.iter().fold(f64::INFINITY, |m, v| m.min(*v)),
    };
    if let Some(prev) = prev {
        let scale = rec.total_energy().abs().max(1.0);
        rec.mech_balance_residual =
            (rec.mech_energy() - prev.mech_energy() - report.ext_work + report.mech_dissipation).abs() / scale;
        rec.total_balance_residual = total_balance_residual(prev, &rec);
    }
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCheck {
    pub pass: bool,
    /// most negative per-step entropy change (0 if none decreased)
    pub worst_decrease: f64,
    /// step index where it happened
    pub worst_step: usize,
}

/// Total entropy must not decrease by more than `tol` in any step.
pub fn entropy_check(records: &[DiagnosticsRecord], tol: f64) -> EntropyCheck {
    let mut worst = 0.0;
    let mut worst_step = 0;
    for w in records.windows(2) {
        let d = w[1].entropy_total - w[0].entropy_total;
        if d < worst {
            worst = d;
            worst_step = w[1].step;
        }
    }
    EntropyCheck {
        pass: worst >= -tol,
        worst_decrease: worst,
        worst_step,
    }
}

/// Lower bound for the entropy change of a step with boundary heat exchange,
/// `dt ∫_Γ K(θ_♭ε/θ − 1) dS` evaluated with the post-step nodal temperature.
pub fn boundary_entropy_bound(solver: &Solver, state: &SimState) -> f64 {
    let p = &solver.params;
    let tb = solver.bc.theta_flat_eps(solver.cfg.eps);
    solver.cfg.dt
        * p.k_heat
        * state
            .vartheta
            .iter()
            .zip(&solver.disc.boundary_lumped)
            .map(|(v, g)| g * (tb / p.cv_inv(*v).max(THETA_FLOOR) - 1.0))
            .sum::<f64>()
}

/// Space–time weak residual of the momentum equation against the test
/// function `ỹ(x, t) = z(x)(T − t)/T`, where `z` is a deformation dof vector
/// and `T` is the time of the last state in `history`:
///
/// `∫₀ᵀ χ(t) zᵀ(K y − f_el(y, P) − f_ext(t)) dt + (1/T)∫₀ᵀ vᵀ M z dt − v₀ᵀ M z`,
/// with `χ(t) = (T − t)/T`, integrated by the trapezoidal rule over the history.
pub fn weak_residual_momentum(solver: &Solver, history: &[SimState], z: &[f64]) -> Result<f64> {
    let d = &solver.disc;
    if history.len() < 2 {
        return Ok(0.0);
    }
    let t0 = history[0].t;
    let tt = history.last().map(|s| s.t).unwrap_or(t0) - t0;
    let mz = d.apply_blockwise(&d.mass_y, z);
    let kz = d.apply_blockwise(&solver.k_lin, z);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let integrand = |s: &SimState| -> Result<f64> {
        let chi = (tt - (s.t - t0)) / tt;
        let f = solver.explicit_force(&s.y, &s.p, s.t)?;
        Ok(chi * (dot(&kz, &s.y) - dot(&f, z)) + dot(&s.v, &mz) / tt)
    };
    let mut acc = 0.0;
    let mut prev = integrand(&history[0])?;
    for w in history.windows(2) {
        let cur = integrand(&w[1])?;
        acc += 0.5 * (w[1].t - w[0].t) * (prev + cur);
        prev = cur;
    }
    Ok(acc - dot(&history[0].v, &mz))
}

/// L²-type norm of a nodal field with `stride` components, using the lumped mass.
pub fn nodal_l2(solver: &Solver, f: &[f64], stride: usize) -> f64 {
    solver.disc.lumped_dot(f, f, stride).sqrt()
}

/// Smallest nodal value of `det P`.
pub fn min_nodal_det(state: &SimState) -> f64 {
    (0..state.p.len() / P_COMPONENTS)
        .map(|i| state.p_at(i).det())
        .fold(f64::INFINITY, f64::min)
}
