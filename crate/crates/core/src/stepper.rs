//! Staggered time integration: momentum, then plastic flow, then heat.
//!
//! Momentum uses a kick–drift–kick splitting. The nonlinear elastic force is
//! applied as two half-step kicks, while the linear biharmonic and spring
//! terms together with the body force and support load are advanced by the
//! trapezoidal rule (Newmark `β = ¼, γ = ½`) in the drift. The drift conserves the quadratic
//! energy exactly and the whole step is second order and symplectic-like, so
//! the discrete energy does not drift over long runs. Both the consistent mass
//! and the drift matrix are factored once.
//!
//! The plastic step inverts the regularized flow rule node by node from the
//! lumped-mass representative of the driving stress. The heat step is
//! implicit Euler with the conductivity frozen at the new plastic strain.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::discretization::banded::BandedCholesky;
use crate::discretization::sparse::{pcg, CsrMatrix};
use crate::discretization::{Discretization, DET_FLOOR, P_COMPONENTS};
use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::state::{BoundaryData, SimState};
use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    /// Yosida regularization parameter
    pub eps: f64,
    /// relative residual accepted from the momentum solves
    pub lin_tol: f64,
    /// relative residual of the heat CG solve; tight so enthalpy is conserved
    pub heat_tol: f64,
    pub max_iter: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-3,
            eps: 1e-2,
            lin_tol: 1e-10,
            heat_tol: 1e-13,
            max_iter: 5000,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("dt", format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config("eps", format!("regularization must be positive, got {}", self.eps)));
        }
        if !(self.lin_tol > 0.0 && self.heat_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::config("stepper", "solver tolerances and iteration cap must be positive"));
        }
        Ok(())
    }
}

/// Energy exchanged during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// work of the body force and the support load
    pub ext_work: f64,
    /// `dt Σ m_i ∂R_ε(R_i):R_i`, removed from the mechanical energy
    pub mech_dissipation: f64,
    /// `dt Σ m_i r_ε,i`, added to the enthalpy
    pub heat_production: f64,
    /// `dt ∫_Γ K(θ_♭ε − θ) dS`, heat entering through the boundary
    pub heat_in: f64,
    /// largest nodal `|Ṗ P⁻¹|`
    pub max_rate: f64,
}

/// Output of the plastic substep.
#[derive(Clone, Debug)]
pub struct PlasticUpdate {
    pub p: Vec<f64>,
    /// nodal plastification rate `R = Ṗ P⁻¹`, row-major
    pub rate: Vec<f64>,
    /// nodal heat production `r_ε`
    pub heat: Vec<f64>,
    /// nodal driving target `T = −Σ_in Pᵀ`
    pub target: Vec<f64>,
    pub mech_dissipation: f64,
}

/// Constant operators, factorizations and loads for one problem setup.
#[derive(Clone, Debug)]
pub struct Solver {
    pub disc: Discretization,
    pub params: MaterialParams,
    pub bc: BoundaryData,
    pub cfg: StepConfig,
    /// biharmonic + spring, per component
    pub k_lin: CsrMatrix,
    mass: BandedCholesky,
    drift: BandedCholesky,
    body: Vec<f64>,
}

impl Solver {
    pub fn new(disc: Discretization, params: MaterialParams, bc: BoundaryData, cfg: StepConfig) -> Result<Self> {
        cfg.validate()?;
        bc.validate()?;
        let mut k_band = disc.banded(&disc.biharm);
        k_band.add_scaled(&disc.banded(&disc.spring), 1.0);
        let mass_band = disc.banded(&disc.mass_y);
        let mass = BandedCholesky::factor(&mass_band)?;
        let mut a = mass_band;
        a.add_scaled(&k_band, 0.25 * cfg.dt * cfg.dt);
        let drift = BandedCholesky::factor(&a)?;
        let k_lin = k_band.to_csr();
        let body = disc.body_load(bc.gravity);
        Ok(Solver {
            disc,
            params,
            bc,
            cfg,
            k_lin,
            mass,
            drift,
            body,
        })
    }

    /// The support map `y_♭(t)` interpolated in the deformation space; exact
    /// because every support motion is affine.
    pub fn support_dofs(&self, t: f64) -> Vec<f64> {
        let (lx, ly) = (self.disc.mesh.lx, self.disc.mesh.ly);
        let motion = self.bc.y_flat;
        let g = motion.gradient(t, lx, ly);
        self.disc.interpolate_y(|x| (motion.position(x, t, lx, ly), g, [0.0, 0.0]))
    }

    /// Support load `∫_Γ N y_♭(t)·φ dS`, evaluated as `S ŷ_♭(t)` so that a body
    /// resting on its supports is balanced to the last bit.
    pub fn support_load(&self, t: f64) -> Vec<f64> {
        self.disc.apply_blockwise(&self.disc.spring, &self.support_dofs(t))
    }

    /// Body force plus support load at time `t`.
    pub fn external_load(&self, t: f64) -> Vec<f64> {
        let mut f = self.support_load(t);
        for (fi, bi) in f.iter_mut().zip(&self.body) {
            *fi += bi;
        }
        f
    }

    /// Explicit momentum force: elastic force plus external load.
    pub fn explicit_force(&self, y: &[f64], p: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut f = self.disc.elastic_force(&self.params, y, p)?;
        for (fi, li) in f.iter_mut().zip(self.external_load(t)) {
            *fi += li;
        }
        Ok(f)
    }

    fn solve_blockwise(&self, chol: &BandedCholesky, rhs: &[f64]) -> Result<Vec<f64>> {
        chol.solve_many(rhs, self.cfg.lin_tol)
    }

    /// `M⁻¹ f` with the consistent deformation mass.
    pub fn mass_solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.solve_blockwise(&self.mass, f)
    }

    /// Advances `(y, v)` by one step with `P` frozen; returns the external work.
    pub fn step_momentum(&self, state: &mut SimState) -> Result<f64> {
        let dt = self.cfg.dt;
        let t0 = state.t;
        // support position averaged over the step
        let (s0, s1) = (self.support_dofs(t0), self.support_dofs(t0 + dt));
        let support: Vec<f64> = s0.iter().zip(&s1).map(|(a, b)| 0.5 * (a + b)).collect();
        let gap: Vec<f64> = state.y.iter().zip(&support).map(|(y, s)| y - s).collect();
        let spring_gap = self.disc.apply_blockwise(&self.disc.spring, &gap);
        let load: Vec<f64> = self
            .disc
            .apply_blockwise(&self.disc.spring, &support)
            .iter()
            .zip(&self.body)
            .map(|(a, b)| a + b)
            .collect();

        // kick v' = v + dt/2 M⁻¹f₀, then the trapezoidal drift for
        // M ÿ = −K y + f_ext in increment form:
        // (M + dt²/4 K) Δy = dt M v' − dt²/2 (B y + S(y − ŷ_♭) − f_g)
        let f0 = self.disc.elastic_force(&self.params, &state.y, &state.p)?;
        let mv = self.disc.apply_blockwise(&self.disc.mass_y, &state.v);
        let by = self.disc.apply_blockwise(&self.disc.biharm, &state.y);
        let rhs: Vec<f64> = (0..mv.len())
            .map(|i| dt * mv[i] + 0.5 * dt * dt * (f0[i] - by[i] - spring_gap[i] + self.body[i]))
            .collect();
        let dy = self.solve_blockwise(&self.drift, &rhs)?;
        let y1: Vec<f64> = state.y.iter().zip(&dy).map(|(y, d)| y + d).collect();

        // v'' = 2Δy/dt − v' and the closing kick combine to
        // v¹ = 2Δy/dt − v + dt/2 M⁻¹(f₁ − f₀)
        let f1 = self.disc.elastic_force(&self.params, &y1, &state.p)?;
        let df: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let a = self.mass_solve(&df)?;
        let v1: Vec<f64> = (0..y1.len())
            .map(|i| 2.0 * dy[i] / dt - state.v[i] + 0.5 * dt * a[i])
            .collect();

        let ext_work: f64 = load.iter().zip(&dy).map(|(l, d)| l * d).sum();
        if y1.iter().chain(&v1).any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteState("deformation"));
        }
        state.y = y1;
        state.v = v1;
        Ok(ext_work)
    }

    /// Nodal flow-rule update. Does not modify `state`.
    pub fn step_plastic(&self, state: &SimState) -> Result<PlasticUpdate> {
        let disc = &self.disc;
        let dt = self.cfg.dt;
        let eps = self.cfg.eps;
        let grad = disc.plastic_gradient(&self.params, &state.y, &state.p)?;
        let nn = disc.num_nodes();
        let nodal = disc.workers.map(nn, |i| {
            let pi = state.p_at(i);
            if disc.mesh.is_boundary[i] {
                return (pi, Mat::zeros(2), Mat::zeros(2), 0.0, 0.0);
            }
            let sigma = Mat::from_row_slice(2, &grad[P_COMPONENTS * i..P_COMPONENTS * (i + 1)])
                .scale(1.0 / disc.lumped[i]);
            let target = -(sigma * pi.transpose());
            let theta = self.params.cv_inv(state.vartheta[i].max(0.0));
            let rate = self.params.invert_flow(theta, &target, eps);
            let p_new = pi + (rate * pi).scale(dt);
            let heat = self.params.heat_production(theta, &rate, eps);
            let diss = self.params.dr_eps(theta, &rate, eps).contract2(&rate);
            (p_new, rate, target, heat, diss)
        });
        let mut up = PlasticUpdate {
            p: vec![0.0; disc.p_len()],
            rate: vec![0.0; disc.p_len()],
            heat: vec![0.0; nn],
            target: vec![0.0; disc.p_len()],
            mech_dissipation: 0.0,
        };
        for (i, (p_new, rate, target, heat, diss)) in nodal.into_iter().enumerate() {
            let s = P_COMPONENTS * i..P_COMPONENTS * (i + 1);
            p_new.write_row_slice(&mut up.p[s.clone()]);
            rate.write_row_slice(&mut up.rate[s.clone()]);
            target.write_row_slice(&mut up.target[s]);
            up.heat[i] = heat;
            up.mech_dissipation += dt * disc.lumped[i] * diss;
        }
        if up.p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteState("plastic strain"));
        }
        let min_det = disc.min_det_p(&up.p);
        if !(min_det >= DET_FLOOR) {
            return Err(Error::DegeneratePlasticState {
                min_det,
                floor: DET_FLOOR,
            });
        }
        Ok(up)
    }

    /// Implicit-Euler enthalpy update with nodal source `heat`; returns the
    /// heat that entered through the boundary.
    pub fn step_heat(&self, state: &mut SimState, heat: &[f64]) -> Result<f64> {
        let disc = &self.disc;
        let dt = self.cfg.dt;
        let k = self.params.k_heat;
        let theta_b = self.bc.theta_flat_eps(self.cfg.eps);
        let a = disc.assemble_heat_system(&self.params, &state.p, &state.vartheta, dt)?;
        let rhs: Vec<f64> = (0..disc.num_nodes())
            .map(|i| {
                disc.lumped[i] * (state.vartheta[i] / dt + heat[i]) + k * theta_b * disc.boundary_lumped[i]
            })
            .collect();
        let mut x = state.vartheta.clone();
        pcg(&a, &rhs, &mut x, self.cfg.heat_tol, self.cfg.max_iter)?;
        let max = x.iter().fold(0.0f64, |m, v| m.max(*v));
        let min = x.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::NonfiniteState("enthalpy"));
        }
        if min < -1e-12 * max {
            return Err(Error::NegativeTemperature { min, max });
        }
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        let heat_in = dt
            * k
            * (0..disc.num_nodes())
                .map(|i| disc.boundary_lumped[i] * (theta_b - self.params.cv_inv(x[i])))
                .sum::<f64>();
        state.vartheta = x;
        Ok(heat_in)
    }

    /// One full step: momentum, plastic flow, heat. On error the state is left unchanged.
    pub fn step(&self, state: &mut SimState) -> Result<(StepReport, PlasticUpdate)> {
        let mut next = state.clone();
        let ext_work = self.step_momentum(&mut next)?;
        let up = self.step_plastic(&next)?;
        next.p.clone_from(&up.p);
        let heat_in = self.step_heat(&mut next, &up.heat)?;
        next.t = state.t + self.cfg.dt;
        next.step = state.step + 1;
        let heat_production = self.cfg.dt * self.disc.lumped.iter().zip(&up.heat).map(|(m, r)| m * r).sum::<f64>();
        let max_rate = up
            .rate
            .chunks_exact(P_COMPONENTS)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        *state = next;
        Ok((
            StepReport {
                ext_work,
                mech_dissipation: up.mech_dissipation,
                heat_production,
                heat_in,
                max_rate,
            },
            up,
        ))
    }
}

/// Options for [`run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub steps: usize,
    /// keep a snapshot every `k` steps (0 = initial and final only)
    pub snapshot_every: usize,
}

#[derive(Debug)]
pub struct RunOutput {
    pub state: SimState,
    /// one record per step, preceded by the initial record
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<SimState>,
    /// the step error that ended the run early, if any
    pub error: Option<Error>,
}

/// Runs `opts.steps` steps from `state`, recording diagnostics after every step.
///
/// A failing step ends the run; the records and snapshots gathered so far
/// are returned together with the error.
pub fn run(solver: &Solver, mut state: SimState, opts: RunOptions) -> Result<RunOutput> {
    run_with(solver, &mut state, opts, |_, _, _| {}).map(|(records, snapshots, error)| RunOutput {
        state,
        records,
        snapshots,
        error,
    })
}

type RunParts = (Vec<DiagnosticsRecord>, Vec<SimState>, Option<Error>);

/// [`run`] with a callback invoked after every accepted step.
pub fn run_with<F>(solver: &Solver, state: &mut SimState, opts: RunOptions, mut observe: F) -> Result<RunParts>
where
    F: FnMut(&SimState, &StepReport, &PlasticUpdate),
{
    let mut records = vec![diagnostics::record(solver, state, None, None)?];
    let mut snapshots = vec![state.clone()];
    let mut error = None;
    for k in 1..=opts.steps {
        match solver.step(state) {
            Ok((report, up)) => {
                observe(state, &report, &up);
                let rec = diagnostics::record(solver, state, Some(&report), records.last())?;
                records.push(rec);
                if (opts.snapshot_every > 0 && k % opts.snapshot_every == 0) || k == opts.steps {
                    snapshots.push(state.clone());
                }
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    Ok((records, snapshots, error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Mesh, Side, Workers};
    use crate::state::{init_state, InitialConditions, SupportMotion};

    fn solver(params: MaterialParams, bc: BoundaryData, cfg: StepConfig, sides: &[Side]) -> Solver {
        let mesh = Mesh::new(1.0, 1.0, 4, 4).unwrap();
        let disc = Discretization::new(mesh, &params, sides, Workers::new(2).unwrap()).unwrap();
        Solver::new(disc, params, bc, cfg).unwrap()
    }

    #[test]
    fn rest_state_is_an_equilibrium() {
        let params = MaterialParams {
            delta: 0.0,
            ..Default::default()
        };
        let s = solver(params.clone(), BoundaryData::default(), StepConfig::default(), &Side::ALL);
        let mut st = init_state(&s.disc, &params, &InitialConditions::default(), s.cfg.eps).unwrap();
        let st0 = st.clone();
        for _ in 0..100 {
            s.step(&mut st).unwrap();
        }
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff(&st.y, &st0.y) < 1e-12);
        assert!(diff(&st.v, &st0.v) < 1e-12);
        assert!(diff(&st.p, &st0.p) < 1e-12);
        assert!(diff(&st.vartheta, &st0.vartheta) < 1e-12);
    }

    #[test]
    fn quadratic_energy_conserved_by_drift() {
        // the drift alone conserves ½vᵀMv + ½yᵀKy
        let params = MaterialParams {
            n_spring: 0.0,
            ..Default::default()
        };
        let s = solver(params.clone(), BoundaryData::default(), StepConfig::default(), &[]);
        let mut rng_state = 1u64;
        let mut rnd = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let ns = s.disc.ns;
        let mut y: Vec<f64> = (0..2 * ns).map(|_| 0.01 * rnd()).collect();
        let mut v: Vec<f64> = (0..2 * ns).map(|_| 0.01 * rnd()).collect();
        let energy = |y: &[f64], v: &[f64]| {
            s.disc.half_quad_form(&s.disc.mass_y, v) + s.disc.half_quad_form(&s.k_lin, y)
        };
        let e0 = energy(&y, &v);
        let dt = s.cfg.dt;
        for _ in 0..100 {
            // drift only
            let mv = s.disc.apply_blockwise(&s.disc.mass_y, &v);
            let ky = s.disc.apply_blockwise(&s.k_lin, &y);
            let rhs: Vec<f64> = (0..mv.len()).map(|i| dt * mv[i] - 0.5 * dt * dt * ky[i]).collect();
            let dy = s.solve_blockwise(&s.drift, &rhs).unwrap();
            v = (0..dy.len()).map(|i| 2.0 * dy[i] / dt - v[i]).collect();
            for (yi, di) in y.iter_mut().zip(&dy) {
                *yi += di;
            }
        }
        let e1 = energy(&y, &v);
        assert!(((e1 - e0) / e0).abs() < 1e-10, "{e0} {e1}");
    }

    #[test]
    fn gravity_accelerates_rigidly() {
        let params = MaterialParams {
            n_spring: 0.0,
            delta: 0.0,
            ..Default::default()
        };
        let g = [0.3, -1.0];
        let bc = BoundaryData {
            gravity: g,
            ..Default::default()
        };
        let s = solver(params.clone(), bc, StepConfig::default(), &[]);
        let mut st = init_state(&s.disc, &params, &InitialConditions::default(), s.cfg.eps).unwrap();
        for k in 1..=5 {
            s.step(&mut st).unwrap();
            for node in 0..s.disc.num_nodes() {
                for c in 0..2 {
                    let v = st.v[c * s.disc.ns + 4 * node];
                    assert!((v - k as f64 * s.cfg.dt * g[c] / params.rho).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn support_load_matches_edge_quadrature() {
        let params = MaterialParams::default();
        let bc = BoundaryData {
            y_flat: SupportMotion::Shear { rate: 0.3, t_stop: 1.0 },
            ..Default::default()
        };
        let s = solver(params.clone(), bc, StepConfig::default(), &Side::ALL);
        let t = 0.4;
        let direct = s
            .disc
            .boundary_load(&params, |x| bc.y_flat.position(x, t, 1.0, 1.0));
        let via_interp = s.support_load(t);
        for (a, b) in direct.iter().zip(&via_interp) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn maxwell_creep_rate() {
        let params = MaterialParams {
            sigma0: 0.0,
            mu_v: 2.0,
            ..Default::default()
        };
        let t = Mat::new2([[0.0, 0.3], [0.1, 0.0]]);
        let r = params.invert_flow(1.0, &t, 1e-3);
        assert!((r.norm() - t.norm() / params.mu_v).abs() < 1e-15);
    }

    #[test]
    fn flow_rule_holds_nodewise() {
        let params = MaterialParams::default();
        let bc = BoundaryData {
            y_flat: SupportMotion::Shear { rate: 0.2, t_stop: 1.0 },
            ..Default::default()
        };
        let s = solver(params.clone(), bc, StepConfig::default(), &[Side::Bottom, Side::Top]);
        let mut st = init_state(&s.disc, &params, &InitialConditions::default(), s.cfg.eps).unwrap();
        for _ in 0..30 {
            let before = st.vartheta.clone();
            let (_, up) = s.step(&mut st).unwrap();
            for i in 0..s.disc.num_nodes() {
                let sl = 4 * i..4 * i + 4;
                let rate = Mat::from_row_slice(2, &up.rate[sl.clone()]);
                let target = Mat::from_row_slice(2, &up.target[sl]);
                let theta = params.cv_inv(before[i]);
                let res = (params.dr_eps(theta, &rate, s.cfg.eps) - target).norm();
                assert!(res <= 1e-10 * (1.0 + target.norm()));
                assert!(up.heat[i] >= 0.0);
            }
        }
    }

    #[test]
    fn heat_step_conserves_and_integrates_sources() {
        let params = MaterialParams::default();
        let s = solver(params.clone(), BoundaryData::default(), StepConfig::default(), &Side::ALL);
        let mut st = init_state(&s.disc, &params, &InitialConditions::default(), s.cfg.eps).unwrap();
        for (i, v) in st.vartheta.iter_mut().enumerate() {
            *v = 1.0 + 0.5 * ((i * 7) % 5) as f64;
        }
        let total = |st: &SimState| -> f64 { s.disc.lumped.iter().zip(&st.vartheta).map(|(m, v)| m * v).sum() };
        let e0 = total(&st);
        s.step_heat(&mut st, &vec![0.0; s.disc.num_nodes()]).unwrap();
        assert!(((total(&st) - e0) / e0).abs() < 1e-12);
        let e1 = total(&st);
        let c = 0.7;
        s.step_heat(&mut st, &vec![c; s.disc.num_nodes()]).unwrap();
        let growth = total(&st) - e1;
        assert!((growth - c * 1.0 * s.cfg.dt).abs() < 1e-12 * e1);
    }
}
