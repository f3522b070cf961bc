use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|side| side.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryEdge {
    pub element: usize,
    pub side: Side,
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

/// Uniform structured mesh of the rectangle `[0, lx] × [0, ly]`.
///
/// Nodes are numbered row by row (`id = j (nx + 1) + i`); element `e = j nx + i`
/// lists its corners counter-clockwise from the lower-left one.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub boundary_nodes: Vec<usize>,
    pub is_boundary: Vec<bool>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::config("mesh", format!("extents must be positive, got {lx} x {ly}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::config("mesh", format!("need at least 2x2 elements, got {nx}x{ny}")));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let node = |i: usize, j: usize| j * (nx + 1) + i;

        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut is_boundary = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([i as f64 * hx, j as f64 * hy]);
                is_boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }
        let boundary_nodes = (0..coords.len()).filter(|&n| is_boundary[n]).collect();

        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        let mut push = |element: usize, side: Side, nodes: [usize; 2], length: f64| {
            boundary_edges.push(BoundaryEdge {
                element,
                side,
                nodes,
                normal: side.normal(),
                length,
            });
        };
        for i in 0..nx {
            push(i, Side::Bottom, [node(i, 0), node(i + 1, 0)], hx);
            push((ny - 1) * nx + i, Side::Top, [node(i, ny), node(i + 1, ny)], hx);
        }
        for j in 0..ny {
            push(j * nx, Side::Left, [node(0, j), node(0, j + 1)], hy);
            push(j * nx + nx - 1, Side::Right, [node(nx, j), node(nx, j + 1)], hy);
        }

        Ok(Mesh {
            lx,
            ly,
            nx,
            ny,
            hx,
            hy,
            coords,
            elements,
            boundary_nodes,
            is_boundary,
            boundary_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        self.coords[self.elements[e][0]]
    }

    /// Element containing the point together with its local coordinates in `[0,1]²`.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let tol = 1e-12;
        if x[0] < -tol * self.lx || x[0] > self.lx * (1.0 + tol) || x[1] < -tol * self.ly || x[1] > self.ly * (1.0 + tol) {
            return None;
        }
        let fi = (x[0] / self.hx).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let fj = (x[1] / self.hy).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        let xi = (x[0] / self.hx - fi as f64).clamp(0.0, 1.0);
        let eta = (x[1] / self.hy - fj as f64).clamp(0.0, 1.0);
        Some((fj * self.nx + fi, [xi, eta]))
    }

    /// Node adjacency through shared elements (including the node itself), sorted.
    pub fn node_neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::with_capacity(9); self.num_nodes()];
        for el in &self.elements {
            for &a in el {
                for &b in el {
                    adj[a].push(b);
                }
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_two_by_two() {
        let m = Mesh::new(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.boundary_nodes.len(), 8);
        assert!(!m.is_boundary[4]);
        assert_eq!(m.boundary_edges.len(), 8);
    }

    #[test]
    fn areas_and_normals() {
        let m = Mesh::new(2.0, 0.5, 5, 3).unwrap();
        let total: f64 = (0..m.num_elements()).map(|_| m.element_area()).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let perimeter: f64 = m.boundary_edges.iter().map(|e| e.length).sum();
        assert!((perimeter - 5.0).abs() < 1e-13);
        for e in &m.boundary_edges {
            let n = e.normal;
            assert_eq!(n[0] * n[0] + n[1] * n[1], 1.0);
            assert!(n[0] == 0.0 || n[1] == 0.0);
            for &node in &e.nodes {
                assert!(m.is_boundary[node]);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(Mesh::new(1.0, 1.0, 1, 4).is_err());
        assert!(Mesh::new(0.0, 1.0, 4, 4).is_err());
        assert!(Mesh::new(1.0, -1.0, 4, 4).is_err());
    }

    #[test]
    fn locate_points() {
        let m = Mesh::new(1.0, 1.0, 4, 4).unwrap();
        let (e, loc) = m.locate([0.3, 0.9]).unwrap();
        assert_eq!(e, 3 * 4 + 1);
        assert!((loc[0] - 0.2).abs() < 1e-12 && (loc[1] - 0.6).abs() < 1e-12);
        assert_eq!(m.locate([1.0, 1.0]).unwrap().0, 15);
        assert!(m.locate([1.5, 0.2]).is_none());
    }
}
