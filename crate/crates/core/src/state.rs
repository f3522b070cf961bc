//! Simulation state, boundary data and initial conditions.

use crate::discretization::{Discretization, DET_FLOOR, P_COMPONENTS};
use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::tensor::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    /// deformation dofs, component-major BFS layout
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// plastic strain, 4 row-major components per node
    pub p: Vec<f64>,
    /// nodal enthalpy
    pub vartheta: Vec<f64>,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && [&self.y, &self.v, &self.p, &self.vartheta]
                .iter()
                .all(|f| f.iter().all(|v| v.is_finite()))
    }

    pub fn p_at(&self, node: usize) -> Mat {
        Mat::from_row_slice(2, &self.p[P_COMPONENTS * node..P_COMPONENTS * (node + 1)])
    }
}

/// Closed-form position of the boundary support, `y_♭(x, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportMotion {
    /// `y_♭ = x`
    Identity,
    /// Simple shear of amplitude `a(t)`: `y_♭ = x + a(t)(2x₂/L_y − 1) e₁`,
    /// so the top moves by `+a` and the bottom by `−a`.
    Shear { rate: f64, t_stop: f64 },
    /// Uniaxial stretch: `y_♭ = x + a(t)(x₁/L_x − ½) e₁`.
    Stretch { rate: f64, t_stop: f64 },
}

impl SupportMotion {
    /// Amplitude `a(t) = rate·min(t, t_stop)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        match *self {
            SupportMotion::Identity => 0.0,
            SupportMotion::Shear { rate, t_stop } | SupportMotion::Stretch { rate, t_stop } => {
                rate * t.clamp(0.0, t_stop)
            }
        }
    }

    /// Constant gradient of the (affine) support map.
    pub fn gradient(&self, t: f64, lx: f64, ly: f64) -> [[f64; 2]; 2] {
        let a = self.amplitude(t);
        match self {
            SupportMotion::Identity => [[1.0, 0.0], [0.0, 1.0]],
            SupportMotion::Shear { .. } => [[1.0, 2.0 * a / ly], [0.0, 1.0]],
            SupportMotion::Stretch { .. } => [[1.0 + a / lx, 0.0], [0.0, 1.0]],
        }
    }

    pub fn position(&self, x: [f64; 2], t: f64, lx: f64, ly: f64) -> [f64; 2] {
        let a = self.amplitude(t);
        match self {
            SupportMotion::Identity => x,
            SupportMotion::Shear { .. } => [x[0] + a * (2.0 * x[1] / ly - 1.0), x[1]],
            SupportMotion::Stretch { .. } => [x[0] + a * (x[0] / lx - 0.5), x[1]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    pub y_flat: SupportMotion,
    /// external temperature (constant in time)
    pub theta_flat: f64,
    /// uniform bulk force density
    pub gravity: [f64; 2],
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData {
            y_flat: SupportMotion::Identity,
            theta_flat: 1.0,
            gravity: [0.0, 0.0],
        }
    }
}

impl BoundaryData {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_flat >= 0.0) || !self.theta_flat.is_finite() {
            return Err(Error::config("theta_flat", "external temperature must be >= 0"));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::config("gravity", "must be finite"));
        }
        Ok(())
    }

    /// Regularized external temperature `θ_♭/(1 + εθ_♭)`.
    pub fn theta_flat_eps(&self, eps: f64) -> f64 {
        self.theta_flat / (1.0 + eps * self.theta_flat)
    }
}

/// Initial conditions. The deformation starts at `y₀ = x + u₀` with a
/// closed-form displacement, and the temperature may carry a hot strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialConditions {
    /// uniform initial velocity
    pub v0: [f64; 2],
    /// adds the shear velocity `s(2x₂/L_y − 1) e₁`, matching a shear support
    /// moving at rate `s`
    pub shear_velocity: f64,
    /// uniform initial plastic strain
    pub p0: Mat,
    pub theta0: f64,
    /// extra temperature in the strip `|x₂ − L_y/2| ≤ width/2`
    pub hot_strip: Option<HotStrip>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HotStrip {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        InitialConditions {
            v0: [0.0, 0.0],
            shear_velocity: 0.0,
            p0: Mat::identity(2),
            theta0: 1.0,
            hot_strip: None,
        }
    }
}

impl InitialConditions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 >= 0.0) || !self.theta0.is_finite() {
            return Err(Error::config(
                "theta0",
                format!("initial temperature must satisfy theta0 >= 0, got {}", self.theta0),
            ));
        }
        let det = self.p0.det();
        if !(det > DET_FLOOR) {
            return Err(Error::config("p0", format!("det P0 = {det} must be positive")));
        }
        if !self.shear_velocity.is_finite() || !self.v0.iter().all(|v| v.is_finite()) {
            return Err(Error::config("v0", "initial velocity must be finite"));
        }
        if let Some(h) = self.hot_strip {
            if !(h.amplitude >= 0.0 && h.width > 0.0) {
                return Err(Error::config("hot_strip", "amplitude must be >= 0 and width > 0"));
            }
        }
        Ok(())
    }

    pub fn theta_at(&self, x: [f64; 2], ly: f64) -> f64 {
        match self.hot_strip {
            Some(h) if (x[1] - 0.5 * ly).abs() <= 0.5 * h.width + 1e-12 => self.theta0 + h.amplitude,
            _ => self.theta0,
        }
    }
}

/// Builds the initial state; the enthalpy is `C_v(θ₀/(1 + εθ₀))`.
///
/// `P = I` is imposed on boundary nodes whatever `P₀` is.
pub fn init_state(
    disc: &Discretization,
    params: &MaterialParams,
    ic: &InitialConditions,
    eps: f64,
) -> Result<SimState> {
    ic.validate()?;
    let mesh = &disc.mesh;
    let y = disc.identity_y();
    let s = ic.shear_velocity;
    let v = disc.interpolate_y(|x| {
        (
            [ic.v0[0] + s * (2.0 * x[1] / mesh.ly - 1.0), ic.v0[1]],
            [[0.0, 2.0 * s / mesh.ly], [0.0, 0.0]],
            [0.0, 0.0],
        )
    });
    let mut p = vec![0.0; disc.p_len()];
    let ident = Mat::identity(2);
    for node in 0..mesh.num_nodes() {
        let pn = if mesh.is_boundary[node] { ident } else { ic.p0 };
        pn.write_row_slice(&mut p[P_COMPONENTS * node..P_COMPONENTS * (node + 1)]);
    }
    let vartheta = mesh
        .coords
        .iter()
        .map(|x| {
            let th = ic.theta_at(*x, mesh.ly);
            params.cv_primitive(th / (1.0 + eps * th))
        })
        .collect();
    Ok(SimState {
        t: 0.0,
        step: 0,
        y,
        v,
        p,
        vartheta,
    })
}

/// Nodal fields that can be sampled along grid lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// component `(i, j)` of `P`
    P(usize, usize),
    Vartheta,
    /// displacement component `y_c − x_c` at the nodes
    Displacement(usize),
}

impl Field {
    pub fn parse(s: &str) -> Option<Field> {
        match s {
            "P11" => Some(Field::P(0, 0)),
            "P12" => Some(Field::P(0, 1)),
            "P21" => Some(Field::P(1, 0)),
            "P22" => Some(Field::P(1, 1)),
            "vartheta" => Some(Field::Vartheta),
            "u1" => Some(Field::Displacement(0)),
            "u2" => Some(Field::Displacement(1)),
            _ => None,
        }
    }

    pub fn nodal_value(&self, disc: &Discretization, state: &SimState, node: usize) -> f64 {
        match *self {
            Field::P(i, j) => state.p[P_COMPONENTS * node + 2 * i + j],
            Field::Vartheta => state.vartheta[node],
            Field::Displacement(c) => state.y[c * disc.ns + 4 * node] - disc.mesh.coords[node][c],
        }
    }
}

/// Profile of a nodal field along the line `x_axis = coordinate`, linearly
/// interpolated between the two adjacent grid lines.
///
/// Returns `(positions along the other axis, values)`.
pub fn sample_line(
    disc: &Discretization,
    state: &SimState,
    field: Field,
    axis: usize,
    coordinate: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mesh = &disc.mesh;
    let (len, h, n_across, n_along) = if axis == 0 {
        (mesh.lx, mesh.hx, mesh.nx, mesh.ny)
    } else {
        (mesh.ly, mesh.hy, mesh.ny, mesh.nx)
    };
    if axis > 1 || !(coordinate >= -1e-12 * len && coordinate <= len * (1.0 + 1e-12)) {
        return Err(Error::OutOfDomain { axis, coordinate });
    }
    let s = (coordinate / h).clamp(0.0, n_across as f64);
    let i0 = (s.floor() as usize).min(n_across - 1);
    let w = s - i0 as f64;
    let node = |line: usize, k: usize| {
        if axis == 0 {
            mesh.node_index(line, k)
        } else {
            mesh.node_index(k, line)
        }
    };
    let h_along = if axis == 0 { mesh.hy } else { mesh.hx };
    let mut pos = Vec::with_capacity(n_along + 1);
    let mut vals = Vec::with_capacity(n_along + 1);
    for k in 0..=n_along {
        let a = field.nodal_value(disc, state, node(i0, k));
        let b = field.nodal_value(disc, state, node(i0 + 1, k));
        pos.push(k as f64 * h_along);
        vals.push((1.0 - w) * a + w * b);
    }
    Ok((pos, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Mesh, Side, Workers};

    fn disc() -> Discretization {
        let mesh = Mesh::new(1.0, 2.0, 4, 8).unwrap();
        Discretization::new(mesh, &MaterialParams::default(), &Side::ALL, Workers::new(1).unwrap()).unwrap()
    }

    #[test]
    fn default_initial_state() {
        let d = disc();
        let params = MaterialParams::default();
        let s = init_state(&d, &params, &InitialConditions::default(), 0.0).unwrap();
        assert_eq!(s.y, d.identity_y());
        assert!(s.v.iter().all(|v| *v == 0.0));
        assert!((0..d.num_nodes()).all(|n| s.p_at(n) == Mat::identity(2)));
        assert!(s.vartheta.iter().all(|v| *v == params.cv_primitive(1.0)));
        let e = d.energies(&params, &s.y, &s.p).unwrap();
        assert!((e.hardening - params.delta * 2.0).abs() < 1e-14);
        assert!(e.elastic.abs() < 1e-25);
    }

    #[test]
    fn regularized_initial_temperature() {
        let d = disc();
        let params = MaterialParams::default();
        let eps = 0.25;
        let ic = InitialConditions {
            theta0: 1.0 / eps,
            ..Default::default()
        };
        let s = init_state(&d, &params, &ic, eps).unwrap();
        let expected = params.cv_primitive(1.0 / (2.0 * eps));
        assert!(s.vartheta.iter().all(|v| (v - expected).abs() < 1e-14));
    }

    #[test]
    fn invalid_initial_conditions() {
        let d = disc();
        let params = MaterialParams::default();
        let ic = InitialConditions {
            theta0: -1.0,
            ..Default::default()
        };
        assert!(matches!(init_state(&d, &params, &ic, 0.1), Err(Error::InvalidConfig { .. })));
        let ic = InitialConditions {
            p0: Mat::diag(&[1.0, -1.0]),
            ..Default::default()
        };
        assert!(init_state(&d, &params, &ic, 0.1).is_err());
    }

    #[test]
    fn line_sampling() {
        let d = disc();
        let params = MaterialParams::default();
        let mut s = init_state(&d, &params, &InitialConditions::default(), 0.0).unwrap();
        let (_, vals) = sample_line(&d, &s, Field::Vartheta, 0, 0.37).unwrap();
        assert!(vals.iter().all(|v| *v == 1.0));
        for (n, x) in d.mesh.coords.iter().enumerate() {
            s.p[4 * n + 1] = 0.3 * x[1];
        }
        let (pos, vals) = sample_line(&d, &s, Field::P(0, 1), 0, 0.6).unwrap();
        for (x2, v) in pos.iter().zip(&vals) {
            assert!((v - 0.3 * x2).abs() < 1e-13);
        }
        let (pos, vals) = sample_line(&d, &s, Field::P(0, 1), 1, 0.9).unwrap();
        assert_eq!(pos.len(), 5);
        assert!(vals.iter().all(|v| (v - 0.27).abs() < 1e-13));
        assert!(matches!(
            sample_line(&d, &s, Field::Vartheta, 0, 1.5),
            Err(Error::OutOfDomain { axis: 0, .. })
        ));
    }

    #[test]
    fn support_motion() {
        let m = SupportMotion::Shear { rate: 0.5, t_stop: 1.0 };
        assert_eq!(m.amplitude(0.5), 0.25);
        assert_eq!(m.amplitude(3.0), 0.5);
        let top = m.position([0.3, 1.0], 2.0, 1.0, 1.0);
        let bottom = m.position([0.3, 0.0], 2.0, 1.0, 1.0);
        assert!((top[0] - 0.8).abs() < 1e-15 && (bottom[0] + 0.2).abs() < 1e-15);
        assert_eq!(SupportMotion::Identity.position([0.1, 0.2], 5.0, 1.0, 1.0), [0.1, 0.2]);
    }
}
