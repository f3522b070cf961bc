//! Shape-function tables.
//!
//! The deformation uses the Bogner–Fox–Schmit bicubic Hermite element (C¹
//! across edges); plastic strain and enthalpy use bilinear Q1 functions.
//! Because the mesh is uniform, one set of tables at the quadrature points
//! serves every element.

use super::mesh::Side;

/// Number of deformation dofs per node and per displacement component
/// (value, ∂x, ∂y, ∂xy).
pub const DOFS_PER_NODE: usize = 4;
/// BFS functions per element and component.
pub const BFS_LOCAL: usize = 16;

/// Local corner positions in the counter-clockwise element order.
pub const CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/// Cubic Hermite functions on `[0,1]`: value and slope at 0, value and slope at 1.
/// Returns (values, first derivatives, second derivatives).
pub fn hermite1d(t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [1.0 - 3.0 * t2 + 2.0 * t3, t - 2.0 * t2 + t3, 3.0 * t2 - 2.0 * t3, -t2 + t3],
        [-6.0 * t + 6.0 * t2, 1.0 - 4.0 * t + 3.0 * t2, 6.0 * t - 6.0 * t2, -2.0 * t + 3.0 * t2],
        [-6.0 + 12.0 * t, -4.0 + 6.0 * t, 6.0 - 12.0 * t, -2.0 + 6.0 * t],
    )
}

/// Values, physical gradients and Hessians (xx, xy, yy) of the 16 BFS
/// functions at one point.
#[derive(Clone, Debug)]
pub struct BfsPoint {
    pub val: [f64; BFS_LOCAL],
    pub grad: [[f64; 2]; BFS_LOCAL],
    pub hess: [[f64; 3]; BFS_LOCAL],
}

/// Evaluates the BFS element functions at reference point `(ξ, η)` for an
/// `hx × hy` element. Local index `4 a + k`: corner `a`, dof kind `k`.
pub fn bfs_eval(xi: f64, eta: f64, hx: f64, hy: f64) -> BfsPoint {
    let (vx, dx, ddx) = hermite1d(xi);
    let (vy, dy, ddy) = hermite1d(eta);
    let mut p = BfsPoint {
        val: [0.0; BFS_LOCAL],
        grad: [[0.0; 2]; BFS_LOCAL],
        hess: [[0.0; 3]; BFS_LOCAL],
    };
    for (a, c) in CORNERS.iter().enumerate() {
        // index into the 1-D tables: value fn = 2c, slope fn = 2c + 1
        let (vi, si) = (2 * c[0], 2 * c[0] + 1);
        let (vj, sj) = (2 * c[1], 2 * c[1] + 1);
        // (x-function index, x-scale, y-function index, y-scale) per dof kind
        let kinds = [(vi, 1.0, vj, 1.0), (si, hx, vj, 1.0), (vi, 1.0, sj, hy), (si, hx, sj, hy)];
        for (k, (fx, sx, fy, sy)) in kinds.into_iter().enumerate() {
            let n = 4 * a + k;
            let s = sx * sy;
            p.val[n] = s * vx[fx] * vy[fy];
            p.grad[n] = [s * dx[fx] * vy[fy] / hx, s * vx[fx] * dy[fy] / hy];
            p.hess[n] = [
                s * ddx[fx] * vy[fy] / (hx * hx),
                s * dx[fx] * dy[fy] / (hx * hy),
                s * vx[fx] * ddy[fy] / (hy * hy),
            ];
        }
    }
    p
}

/// Q1 values and physical gradients at one point.
#[derive(Clone, Copy, Debug)]
pub struct Q1Point {
    pub val: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

pub fn q1_eval(xi: f64, eta: f64, hx: f64, hy: f64) -> Q1Point {
    let fx = [1.0 - xi, xi];
    let fy = [1.0 - eta, eta];
    let gx = [-1.0 / hx, 1.0 / hx];
    let gy = [-1.0 / hy, 1.0 / hy];
    let mut p = Q1Point {
        val: [0.0; 4],
        grad: [[0.0; 2]; 4],
    };
    for (a, c) in CORNERS.iter().enumerate() {
        p.val[a] = fx[c[0]] * fy[c[1]];
        p.grad[a] = [gx[c[0]] * fy[c[1]], fx[c[0]] * gy[c[1]]];
    }
    p
}

/// Tables at a fixed list of reference points.
#[derive(Clone, Debug)]
pub struct ElementTables {
    pub bfs: Vec<BfsPoint>,
    pub q1: Vec<Q1Point>,
}

impl ElementTables {
    pub fn at_points(points: &[[f64; 2]], hx: f64, hy: f64) -> Self {
        ElementTables {
            bfs: points.iter().map(|p| bfs_eval(p[0], p[1], hx, hy)).collect(),
            q1: points.iter().map(|p| q1_eval(p[0], p[1], hx, hy)).collect(),
        }
    }
}

/// Reference coordinates of Gauss points along one side of the element.
pub fn edge_points(side: Side, gauss: &[f64]) -> Vec<[f64; 2]> {
    gauss
        .iter()
        .map(|&t| match side {
            Side::Bottom => [t, 0.0],
            Side::Right => [1.0, t],
            Side::Top => [t, 1.0],
            Side::Left => [0.0, t],
        })
        .collect()
}
