//! Operators on the uniform mesh.
//!
//! Element kernels run on the worker pool; their local results are collected
//! in element order and scattered sequentially, so every assembled quantity
//! is bit-identical for any number of workers.

use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::banded::BandedSym;
use super::basis::{edge_points, ElementTables, BFS_LOCAL, DOFS_PER_NODE};
use super::mesh::{Mesh, Side};
use super::quadrature::{gauss_legendre_unit, QuadratureRule};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::tensor::Mat;

/// Smallest admissible `det P` at nodes and quadrature points.
pub const DET_FLOOR: f64 = 1e-6;

/// Components of a 2×2 tensor stored per node, row-major.
pub const P_COMPONENTS: usize = 4;

/// Fixed-size worker pool used for element loops.
#[derive(Clone)]
pub struct Workers {
    pool: Arc<ThreadPool>,
}

impl Workers {
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        Ok(Workers { pool: Arc::new(pool) })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `(0..n).map(f)` evaluated on the pool, results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Workers({})", self.threads())
    }
}

/// Value, gradient and Hessian of the deformation at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct YPoint {
    pub y: [f64; 2],
    pub grad: Mat,
    /// `[component][xx, xy, yy]`
    pub hess: [[f64; 3]; 2],
}

/// Stored-energy contributions of the mechanical free energy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    pub elastic: f64,
    pub hardening: f64,
    pub hyper: f64,
    pub plast_grad: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.elastic + self.hardening + self.hyper + self.plast_grad
    }
}

/// Mesh, bases, quadrature and the constant operators.
///
/// `mass_y`, `biharm` and `spring` act on one displacement component; the
/// full operators are block-diagonal with two identical blocks.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub quad: QuadratureRule,
    pub tables: ElementTables,
    pub edge_quad: [(Vec<f64>, ElementTables); 4],
    pub ns: usize,
    pub bandwidth: usize,
    pub mass_y: CsrMatrix,
    pub biharm: CsrMatrix,
    pub spring: CsrMatrix,
    pub spring_sides: Vec<Side>,
    /// Row-sum lumped Q1 mass, `∫ N_i dx`.
    pub lumped: Vec<f64>,
    /// Lumped boundary measure, `∫_Γ N_i dS`.
    pub boundary_lumped: Vec<f64>,
    pub workers: Workers,
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Bottom => 0,
        Side::Right => 1,
        Side::Top => 2,
        Side::Left => 3,
    }
}

impl Discretization {
    pub fn new(mesh: Mesh, params: &MaterialParams, spring_sides: &[Side], workers: Workers) -> Result<Self> {
        let quad = QuadratureRule::tensor_gauss(4, mesh.hx, mesh.hy);
        let tables = ElementTables::at_points(&quad.points, mesh.hx, mesh.hy);
        let (g, gw) = gauss_legendre_unit(4);
        let edge_quad = Side::ALL.map(|side| {
            let len = match side {
                Side::Bottom | Side::Top => mesh.hx,
                Side::Left | Side::Right => mesh.hy,
            };
            let w: Vec<f64> = gw.iter().map(|w| w * len).collect();
            (w, ElementTables::at_points(&edge_points(side, &g), mesh.hx, mesh.hy))
        });
        let nn = mesh.num_nodes();
        let ns = DOFS_PER_NODE * nn;
        let bandwidth = DOFS_PER_NODE * (mesh.nx + 2) + DOFS_PER_NODE - 1;

        let mut d = Discretization {
            quad,
            tables,
            edge_quad,
            ns,
            bandwidth,
            mass_y: CsrMatrix::from_adjacency(&[]),
            biharm: CsrMatrix::from_adjacency(&[]),
            spring: CsrMatrix::from_adjacency(&[]),
            spring_sides: spring_sides.to_vec(),
            lumped: vec![0.0; nn],
            boundary_lumped: vec![0.0; nn],
            workers,
            mesh,
        };
        d.assemble_constant_ops(params);
        Ok(d)
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// Length of the deformation dof vector (both components).
    pub fn y_len(&self) -> usize {
        2 * self.ns
    }

    pub fn p_len(&self) -> usize {
        P_COMPONENTS * self.num_nodes()
    }

    /// Scalar BFS dofs of element `e` in local order `4 a + k`.
    pub fn bfs_dofs(&self, e: usize) -> [usize; BFS_LOCAL] {
        let nodes = self.mesh.elements[e];
        std::array::from_fn(|n| DOFS_PER_NODE * nodes[n / 4] + n % 4)
    }

    fn assemble_constant_ops(&mut self, params: &MaterialParams) {
        let t = &self.tables;
        let w = &self.quad.weights;
        let mut m_loc = [[0.0; BFS_LOCAL]; BFS_LOCAL];
        let mut b_loc = [[0.0; BFS_LOCAL]; BFS_LOCAL];
        for (q, wq) in w.iter().enumerate() {
            let p = &t.bfs[q];
            for a in 0..BFS_LOCAL {
                for b in 0..BFS_LOCAL {
                    m_loc[a][b] += wq * params.rho * p.val[a] * p.val[b];
                    let (ha, hb) = (p.hess[a], p.hess[b]);
                    b_loc[a][b] += wq * params.kappa0 * (ha[0] * hb[0] + 2.0 * ha[1] * hb[1] + ha[2] * hb[2]);
                }
            }
        }
        // edge spring matrices per side
        let mut s_loc = [[[0.0; BFS_LOCAL]; BFS_LOCAL]; 4];
        for side in Side::ALL {
            let (ew, et) = &self.edge_quad[side_index(side)];
            let s = &mut s_loc[side_index(side)];
            for (q, wq) in ew.iter().enumerate() {
                let p = &et.bfs[q];
                for a in 0..BFS_LOCAL {
                    for b in 0..BFS_LOCAL {
                        s[a][b] += wq * params.n_spring * p.val[a] * p.val[b];
                    }
                }
            }
        }
        let area4 = self.mesh.element_area() / 4.0;
        let (ns, bw) = (self.ns, self.bandwidth);
        let (mut mass, mut biharm, mut spring) =
            (BandedSym::zeros(ns, bw), BandedSym::zeros(ns, bw), BandedSym::zeros(ns, bw));
        for e in 0..self.mesh.num_elements() {
            let dofs = self.bfs_dofs(e);
            for a in 0..BFS_LOCAL {
                for b in 0..BFS_LOCAL {
                    mass.add_full(dofs[a], dofs[b], m_loc[a][b]);
                    biharm.add_full(dofs[a], dofs[b], b_loc[a][b]);
                }
            }
            for &node in &self.mesh.elements[e] {
                self.lumped[node] += area4;
            }
        }
        for edge in &self.mesh.boundary_edges {
            for &node in &edge.nodes {
                self.boundary_lumped[node] += 0.5 * edge.length;
            }
            if self.spring_sides.contains(&edge.side) {
                let dofs = self.bfs_dofs(edge.element);
                let s = &s_loc[side_index(edge.side)];
                for a in 0..BFS_LOCAL {
                    for b in 0..BFS_LOCAL {
                        spring.add_full(dofs[a], dofs[b], s[a][b]);
                    }
                }
            }
        }
        self.mass_y = mass.to_csr();
        self.biharm = biharm.to_csr();
        self.spring = spring.to_csr();
    }

    /// Band form of a per-component operator, for factorization.
    pub fn banded(&self, op: &CsrMatrix) -> BandedSym {
        BandedSym::from_csr(op, self.bandwidth)
    }

    /// Applies a per-component operator to the two-component dof vector.
    pub fn apply_blockwise(&self, op: &CsrMatrix, y: &[f64]) -> Vec<f64> {
        let ns = self.ns;
        let mut out = vec![0.0; 2 * ns];
        let (o0, o1) = out.split_at_mut(ns);
        op.matvec(&y[..ns], o0);
        op.matvec(&y[ns..], o1);
        out
    }

    /// `½ yᵀ A y` summed over both components.
    pub fn half_quad_form(&self, op: &CsrMatrix, y: &[f64]) -> f64 {
        0.5 * (op.quad_form(&y[..self.ns]) + op.quad_form(&y[self.ns..]))
    }

    /// Local displacement dofs `y − x` of element `e`. Working with the
    /// displacement keeps `∇y = I` exact for the undeformed state.
    fn gather_y(&self, y: &[f64], e: usize) -> [[f64; BFS_LOCAL]; 2] {
        let dofs = self.bfs_dofs(e);
        let nodes = self.mesh.elements[e];
        let mut loc = [[0.0; BFS_LOCAL]; 2];
        for c in 0..2 {
            for n in 0..BFS_LOCAL {
                let ident = match n % 4 {
                    0 => self.mesh.coords[nodes[n / 4]][c],
                    k if k == c + 1 => 1.0,
                    _ => 0.0,
                };
                loc[c][n] = y[c * self.ns + dofs[n]] - ident;
            }
        }
        loc
    }

    fn qp_coords(&self, e: usize, q: usize) -> [f64; 2] {
        let o = self.mesh.element_origin(e);
        let r = self.quad.points[q];
        [o[0] + r[0] * self.mesh.hx, o[1] + r[1] * self.mesh.hy]
    }

    fn gather_p(&self, p: &[f64], e: usize) -> [[f64; 4]; 4] {
        let nodes = self.mesh.elements[e];
        std::array::from_fn(|a| std::array::from_fn(|c| p[P_COMPONENTS * nodes[a] + c]))
    }

    fn y_point(tables: &ElementTables, q: usize, loc: &[[f64; BFS_LOCAL]; 2], x: [f64; 2]) -> YPoint {
        let b = &tables.bfs[q];
        let mut y = x;
        let mut g = [[1.0, 0.0], [0.0, 1.0]];
        let mut h = [[0.0; 3]; 2];
        for c in 0..2 {
            for n in 0..BFS_LOCAL {
                let v = loc[c][n];
                y[c] += v * b.val[n];
                g[c][0] += v * b.grad[n][0];
                g[c][1] += v * b.grad[n][1];
                for k in 0..3 {
                    h[c][k] += v * b.hess[n][k];
                }
            }
        }
        YPoint {
            y,
            grad: Mat::new2(g),
            hess: h,
        }
    }

    /// `∇y` alone, for kernels that need no value or Hessian.
    fn grad_y_point(tables: &ElementTables, q: usize, loc: &[[f64; BFS_LOCAL]; 2]) -> Mat {
        let b = &tables.bfs[q];
        let mut g = [[1.0, 0.0], [0.0, 1.0]];
        for c in 0..2 {
            for n in 0..BFS_LOCAL {
                g[c][0] += loc[c][n] * b.grad[n][0];
                g[c][1] += loc[c][n] * b.grad[n][1];
            }
        }
        Mat::new2(g)
    }

    /// `(P, ∇P)` at quadrature point `q`; `dp[k][c] = ∂_k P_c`.
    fn p_point(tables: &ElementTables, q: usize, loc: &[[f64; 4]; 4]) -> (Mat, [[f64; 4]; 2]) {
        let b = &tables.q1[q];
        let mut v = [0.0; 4];
        let mut dp = [[0.0; 4]; 2];
        for a in 0..4 {
            for c in 0..4 {
                v[c] += b.val[a] * loc[a][c];
                dp[0][c] += b.grad[a][0] * loc[a][c];
                dp[1][c] += b.grad[a][1] * loc[a][c];
            }
        }
        (Mat::from_row_slice(2, &v), dp)
    }

    /// Deformation, its gradient and Hessian at every quadrature point of element `e`.
    pub fn eval_y_at_qp(&self, y: &[f64], e: usize) -> Vec<YPoint> {
        let loc = self.gather_y(y, e);
        (0..self.quad.len())
            .map(|q| Self::y_point(&self.tables, q, &loc, self.qp_coords(e, q)))
            .collect()
    }

    /// Plastic strain at every quadrature point of element `e`.
    pub fn eval_p_at_qp(&self, p: &[f64], e: usize) -> Vec<Mat> {
        let loc = self.gather_p(p, e);
        (0..self.quad.len()).map(|q| Self::p_point(&self.tables, q, &loc).0).collect()
    }

    /// `−∂/∂y ∫ ψ_el(∇y P⁻¹) dx`, the explicit part of the momentum force.
    pub fn elastic_force(&self, params: &MaterialParams, y: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let locals = self.workers.map(self.mesh.num_elements(), |e| -> Result<[[f64; BFS_LOCAL]; 2]> {
            let yl = self.gather_y(y, e);
            let pl = self.gather_p(p, e);
            let mut f = [[0.0; BFS_LOCAL]; 2];
            for (q, wq) in self.quad.weights.iter().enumerate() {
                let grad = Self::grad_y_point(&self.tables, q, &yl);
                let (pm, _) = Self::p_point(&self.tables, q, &pl);
                let (d_f, _) = params.dpsi_el_fp(&grad, &pm)?;
                let b = &self.tables.bfs[q];
                for c in 0..2 {
                    let (s0, s1) = (d_f[(c, 0)], d_f[(c, 1)]);
                    for n in 0..BFS_LOCAL {
                        f[c][n] -= wq * (s0 * b.grad[n][0] + s1 * b.grad[n][1]);
                    }
                }
            }
            Ok(f)
        });
        let mut out = vec![0.0; self.y_len()];
        for (e, loc) in locals.into_iter().enumerate() {
            let loc = loc?;
            let dofs = self.bfs_dofs(e);
            for c in 0..2 {
                for n in 0..BFS_LOCAL {
                    out[c * self.ns + dofs[n]] += loc[c][n];
                }
            }
        }
        Ok(out)
    }

    /// Gradient of `Ψ_M = ∫ ψ_el(∇y P⁻¹) + ψ_H(P) + (κ₁/q)|∇P|^q dx` with
    /// respect to the nodal values of `P` (all nodes, boundary included).
    pub fn plastic_gradient(&self, params: &MaterialParams, y: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.p_gradient_impl(params, Some(y), p)
    }

    /// `G_i = ∫ κ₁|∇P|^{q−2} ∇P ⋮ ∇φ_i dx` per nodal component.
    pub fn qlap_residual(&self, params: &MaterialParams, p: &[f64]) -> Vec<f64> {
        self.p_gradient_impl(params, None, p).expect("the gradient term alone cannot fail")
    }

    fn p_gradient_impl(&self, params: &MaterialParams, y: Option<&[f64]>, p: &[f64]) -> Result<Vec<f64>> {
        let locals = self.workers.map(self.mesh.num_elements(), |e| -> Result<[[f64; 4]; 4]> {
            let pl = self.gather_p(p, e);
            let yl = y.map(|y| self.gather_y(y, e));
            let mut g = [[0.0; 4]; 4];
            for (q, wq) in self.quad.weights.iter().enumerate() {
                let (pm, dp) = Self::p_point(&self.tables, q, &pl);
                let b = &self.tables.q1[q];
                let sq: f64 = dp.iter().flatten().map(|v| v * v).sum();
                let coef = params.kappa1 * grad_power(sq, params.q);
                let mut local = [0.0; 4];
                if let Some(yl) = &yl {
                    let grad = Self::grad_y_point(&self.tables, q, yl);
                    let (_, d_p) = params.dpsi_el_fp(&grad, &pm)?;
                    let s = d_p + params.dpsi_h(&pm);
                    s.write_row_slice(&mut local);
                }
                for a in 0..4 {
                    for c in 0..4 {
                        g[a][c] += wq
                            * (local[c] * b.val[a] + coef * (dp[0][c] * b.grad[a][0] + dp[1][c] * b.grad[a][1]));
                    }
                }
            }
            Ok(g)
        });
        let mut out = vec![0.0; self.p_len()];
        for (e, loc) in locals.into_iter().enumerate() {
            let loc = loc?;
            for (a, &node) in self.mesh.elements[e].iter().enumerate() {
                for c in 0..4 {
                    out[P_COMPONENTS * node + c] += loc[a][c];
                }
            }
        }
        Ok(out)
    }

    /// Bulk energy terms of the mechanical free energy.
    pub fn energies(&self, params: &MaterialParams, y: &[f64], p: &[f64]) -> Result<EnergyParts> {
        let locals = self.workers.map(self.mesh.num_elements(), |e| -> Result<[f64; 3]> {
            let yl = self.gather_y(y, e);
            let pl = self.gather_p(p, e);
            let mut acc = [0.0; 3];
            for (q, wq) in self.quad.weights.iter().enumerate() {
                let grad = Self::grad_y_point(&self.tables, q, &yl);
                let (pm, dp) = Self::p_point(&self.tables, q, &pl);
                let det = pm.det();
                if !(det > 0.0) {
                    return Err(Error::DegeneratePlasticState {
                        min_det: det,
                        floor: DET_FLOOR,
                    });
                }
                acc[0] += wq * params.psi_el_fp(&grad, &pm)?;
                acc[1] += wq * params.psi_h(&pm);
                let sq: f64 = dp.iter().flatten().map(|v| v * v).sum();
                acc[2] += wq * params.kappa1 / params.q * sq.powf(0.5 * params.q);
            }
            Ok(acc)
        });
        let mut parts = EnergyParts {
            hyper: self.half_quad_form(&self.biharm, y),
            ..Default::default()
        };
        for loc in locals {
            let loc = loc?;
            parts.elastic += loc[0];
            parts.hardening += loc[1];
            parts.plast_grad += loc[2];
        }
        Ok(parts)
    }

    /// `∫ g·φ dx` for a uniform body force density `g`.
    pub fn body_load(&self, g: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.y_len()];
        if g == [0.0, 0.0] {
            return out;
        }
        let mut loc = [0.0; BFS_LOCAL];
        for (q, wq) in self.quad.weights.iter().enumerate() {
            for n in 0..BFS_LOCAL {
                loc[n] += wq * self.tables.bfs[q].val[n];
            }
        }
        for e in 0..self.mesh.num_elements() {
            let dofs = self.bfs_dofs(e);
            for c in 0..2 {
                for n in 0..BFS_LOCAL {
                    out[c * self.ns + dofs[n]] += g[c] * loc[n];
                }
            }
        }
        out
    }

    /// `∫_Γ N y_♭·φ dS` over the spring sides for the support position `y_flat`.
    pub fn boundary_load(&self, params: &MaterialParams, y_flat: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.y_len()];
        if params.n_spring == 0.0 {
            return out;
        }
        for edge in &self.mesh.boundary_edges {
            if !self.spring_sides.contains(&edge.side) {
                continue;
            }
            let (ew, et) = &self.edge_quad[side_index(edge.side)];
            let origin = self.mesh.element_origin(edge.element);
            let dofs = self.bfs_dofs(edge.element);
            for (q, wq) in ew.iter().enumerate() {
                let b = &et.bfs[q];
                let xq = [
                    origin[0] + et_point(edge.side, q, ew.len()).0 * self.mesh.hx,
                    origin[1] + et_point(edge.side, q, ew.len()).1 * self.mesh.hy,
                ];
                let yb = y_flat(xq);
                for c in 0..2 {
                    for n in 0..BFS_LOCAL {
                        out[c * self.ns + dofs[n]] += wq * params.n_spring * yb[c] * b.val[n];
                    }
                }
            }
        }
        out
    }

    /// Q1 stiffness `∫ ∇φ_i · A ∇φ_j dx` for a coefficient given per `(element, qp)`.
    pub fn q1_stiffness<C>(&self, coeff: C) -> Result<CsrMatrix>
    where
        C: Fn(usize, usize) -> Result<Mat> + Sync + Send,
    {
        let locals = self.workers.map(self.mesh.num_elements(), |e| -> Result<[[f64; 4]; 4]> {
            let mut k = [[0.0; 4]; 4];
            for (q, wq) in self.quad.weights.iter().enumerate() {
                let a = coeff(e, q)?;
                let g = &self.tables.q1[q].grad;
                for i in 0..4 {
                    let ag = [
                        a[(0, 0)] * g[i][0] + a[(0, 1)] * g[i][1],
                        a[(1, 0)] * g[i][0] + a[(1, 1)] * g[i][1],
                    ];
                    for j in 0..4 {
                        k[j][i] += wq * (ag[0] * g[j][0] + ag[1] * g[j][1]);
                    }
                }
            }
            Ok(k)
        });
        let mut m = CsrMatrix::from_adjacency(&self.mesh.node_neighbours());
        for (e, loc) in locals.into_iter().enumerate() {
            m.add_local(&self.mesh.elements[e], &loc?);
        }
        Ok(m)
    }

    /// Heat conduction stiffness for `𝕶 = K(P, θ)/c_v`, with `P` from the nodal field.
    pub fn heat_stiffness(&self, params: &MaterialParams, p: &[f64], vartheta: &[f64]) -> Result<CsrMatrix> {
        self.q1_stiffness(|e, q| {
            let pl = self.gather_p(p, e);
            let (pm, _) = Self::p_point(&self.tables, q, &pl);
            let det = pm.det();
            if !(det > DET_FLOOR) {
                return Err(Error::DegeneratePlasticState {
                    min_det: det,
                    floor: DET_FLOOR,
                });
            }
            let nodes = self.mesh.elements[e];
            let th: f64 = (0..4).map(|a| self.tables.q1[q].val[a] * vartheta[nodes[a]]).sum();
            let theta = params.cv_inv(th.max(0.0));
            Ok(params.kappa_eff(&pm, theta)?.scale(1.0 / params.cv(theta)))
        })
    }

    /// Implicit-Euler heat matrix `M_L/dt + K_𝕶 + (K/c_v) M_Γ`.
    pub fn assemble_heat_system(
        &self,
        params: &MaterialParams,
        p: &[f64],
        vartheta: &[f64],
        dt: f64,
    ) -> Result<CsrMatrix> {
        let mut a = self.heat_stiffness(params, p, vartheta)?;
        let diag: Vec<f64> = self
            .lumped
            .iter()
            .zip(&self.boundary_lumped)
            .map(|(m, g)| m / dt + params.k_heat / params.cv0 * g)
            .collect();
        a.add_diagonal(&diag);
        Ok(a)
    }

    /// Minimum of `det P` over nodes and quadrature points.
    pub fn min_det_p(&self, p: &[f64]) -> f64 {
        let nodal = p
            .chunks_exact(P_COMPONENTS)
            .map(|c| Mat::from_row_slice(2, c).det())
            .fold(f64::INFINITY, f64::min);
        let qp = self
            .workers
            .map(self.mesh.num_elements(), |e| {
                self.eval_p_at_qp(p, e).iter().map(|m| m.det()).fold(f64::INFINITY, f64::min)
            })
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        nodal.min(qp)
    }

    /// Lumped L² inner product of two nodal fields with `stride` components per node.
    pub fn lumped_dot(&self, a: &[f64], b: &[f64], stride: usize) -> f64 {
        let mut s = 0.0;
        for (i, m) in self.lumped.iter().enumerate() {
            for c in 0..stride {
                s += m * a[stride * i + c] * b[stride * i + c];
            }
        }
        s
    }

    /// Interpolates an affine-or-polynomial map into the BFS space using its
    /// nodal value, gradient and mixed derivative.
    pub fn interpolate_y(&self, f: impl Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2], [f64; 2])) -> Vec<f64> {
        let mut out = vec![0.0; self.y_len()];
        for (node, x) in self.mesh.coords.iter().enumerate() {
            let (v, g, dxy) = f(*x);
            for c in 0..2 {
                let base = c * self.ns + DOFS_PER_NODE * node;
                out[base] = v[c];
                out[base + 1] = g[c][0];
                out[base + 2] = g[c][1];
                out[base + 3] = dxy[c];
            }
        }
        out
    }

    /// Identity deformation `y(x) = x`.
    pub fn identity_y(&self) -> Vec<f64> {
        self.interpolate_y(|x| (x, [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]))
    }

    /// Evaluates the deformation at an arbitrary point of the domain.
    pub fn eval_y(&self, y: &[f64], x: [f64; 2]) -> Result<YPoint> {
        let (e, loc) = self.mesh.locate(x).ok_or_else(|| {
            let axis = usize::from(x[0] >= 0.0 && x[0] <= self.mesh.lx);
            Error::OutOfDomain {
                axis,
                coordinate: x[axis],
            }
        })?;
        let tables = ElementTables::at_points(&[loc], self.mesh.hx, self.mesh.hy);
        Ok(Self::y_point(&tables, 0, &self.gather_y(y, e), x))
    }
}

/// `|∇P|^{q−2}` from the squared norm; exactly 1 for `q = 2`.
fn grad_power(sq: f64, q: f64) -> f64 {
    if q == 2.0 {
        1.0
    } else if sq == 0.0 {
        0.0
    } else {
        sq.powf(0.5 * (q - 2.0))
    }
}

/// Reference coordinates of edge Gauss point `q` (matches [`edge_points`]).
fn et_point(side: Side, q: usize, n: usize) -> (f64, f64) {
    let (g, _) = gauss_legendre_unit(n);
    let p = edge_points(side, &g)[q];
    (p[0], p[1])
}
