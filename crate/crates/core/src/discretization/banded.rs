//! Symmetric banded matrices and their Cholesky factorization.
//!
//! The BFS deformation operators are block-diagonal in the displacement
//! component and banded under the row-major node numbering, so a direct
//! factorization of one `ns × ns` block is cheap and reusable for the whole run.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: entry `(i, j)` with `i − bw ≤ j ≤ i`.
#[derive(Clone, Debug)]
pub struct BandedSym {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds to the symmetric pair `(i, j)`/`(j, i)`; entries above the
    /// diagonal are ignored so that full local matrices can be scattered as is.
    pub fn add_full(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
            let k = self.idx(i, j);
            self.data[k] += v;
        }
    }

    pub fn add_scaled(&mut self, other: &BandedSym, a: f64) {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let off = self.bw + j0 - i;
            let mut s = row[self.bw] * x[i];
            for (t, j) in (j0..i).enumerate() {
                let a = row[off + t];
                s += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += s;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Row sums `A·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(&vec![1.0; self.n], &mut y);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nonzero entries as a full (both triangles) compressed-row matrix.
    /// Element matrices fill only a small part of the band, so products are
    /// much cheaper in this form.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let (mut col, mut val) = (Vec::new(), Vec::new());
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n) {
                let v = self.get(i, j);
                if v != 0.0 {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col,
            val,
        }
    }

    /// Band form of a symmetric compressed-row matrix.
    pub fn from_csr(a: &CsrMatrix, bw: usize) -> Self {
        let mut b = BandedSym::zeros(a.n, bw);
        for i in 0..a.n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                b.add_full(i, a.col[k], a.val[k]);
            }
        }
        b
    }
}

/// `D⁻¹AD⁻¹ = L Lᵀ` with the Jacobi scaling `D = diag(A)^{1/2}`, stored in band
/// form, and the original matrix kept for residual checks.
///
/// The scaling matters for Hermite elements, whose derivative dofs make the
/// unscaled mass matrix badly conditioned.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    a: CsrMatrix,
    l: BandedSym,
    scale: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &BandedSym) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = a.get(i, i);
            if !(d > 0.0) {
                return Err(Error::LinearSolveFailure {
                    residual: f64::NAN,
                    iterations: i,
                });
            }
            scale.push(1.0 / d.sqrt());
        }
        let mut l = a.clone();
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let k = l.idx(i, j);
                l.data[k] *= scale[i] * scale[j];
            }
        }
        let w = bw + 1;
        for j in 0..n {
            // diagonal
            let k0 = j.saturating_sub(bw);
            let rj = j * w;
            let mut d = l.data[rj + bw];
            for k in k0..j {
                let v = l.data[rj + bw + k - j];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::LinearSolveFailure {
                    residual: f64::NAN,
                    iterations: j,
                });
            }
            let djj = d.sqrt();
            l.data[rj + bw] = djj;
            // column below the diagonal
            for i in j + 1..(j + bw + 1).min(n) {
                let ri = i * w;
                let k_start = i.saturating_sub(bw).max(k0);
                let mut s = l.data[ri + bw + j - i];
                for k in k_start..j {
                    s -= l.data[ri + bw + k - i] * l.data[rj + bw + k - j];
                }
                l.data[ri + bw + j - i] = s / djj;
            }
        }
        Ok(BandedCholesky { a: a.to_csr(), l, scale })
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    /// Solves for `m` right-hand sides stored back to back in `b`, sweeping
    /// the factor once for all of them.
    fn substitute(&self, b: &[f64], x: &mut [f64], m: usize) {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let d = &self.l.data;
        // L z = D⁻¹ b
        for i in 0..n {
            let ri = i * w;
            let k0 = i.saturating_sub(bw);
            let row = &d[ri + bw + k0 - i..ri + bw];
            for r in 0..m {
                let xr = &mut x[r * n..(r + 1) * n];
                let mut s = b[r * n + i] * self.scale[i];
                for (l, xk) in row.iter().zip(&xr[k0..i]) {
                    s -= l * xk;
                }
                xr[i] = s / d[ri + bw];
            }
        }
        // Lᵀ x = z, sweeping rows of L from the bottom
        for i in (0..n).rev() {
            let ri = i * w;
            let k0 = i.saturating_sub(bw);
            let row = &d[ri + bw + k0 - i..ri + bw];
            for r in 0..m {
                let xr = &mut x[r * n..(r + 1) * n];
                let xi = xr[i] / d[ri + bw];
                xr[i] = xi;
                for (l, xk) in row.iter().zip(&mut xr[k0..i]) {
                    *xk -= l * xi;
                }
            }
        }
        for r in 0..m {
            for (xi, si) in x[r * n..(r + 1) * n].iter_mut().zip(&self.scale) {
                *xi *= si;
            }
        }
    }

    /// `A x` for `m` stacked vectors.
    fn residuals(&self, b: &[f64], x: &[f64], m: usize) -> Vec<f64> {
        let n = self.a.n;
        let mut r = vec![0.0; m * n];
        for k in 0..m {
            self.a.matvec(&x[k * n..(k + 1) * n], &mut r[k * n..(k + 1) * n]);
        }
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }

    /// Solves `A x = b`, applies one step of iterative refinement when the
    /// relative residual exceeds `tol`, and fails if it still does.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.solve_many(b, tol)
    }

    /// [`solve`](Self::solve) for several right-hand sides stacked in `b`;
    /// the tolerance applies to each of them.
    pub fn solve_many(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.a.n;
        assert!(n > 0 && b.len().is_multiple_of(n), "right-hand side length {} is not a multiple of {n}", b.len());
        let m = b.len() / n;
        let mut x = vec![0.0; b.len()];
        self.substitute(b, &mut x, m);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = |r: &[f64]| -> f64 {
            (0..m)
                .map(|k| {
                    let bn = norm(&b[k * n..(k + 1) * n]);
                    if bn == 0.0 {
                        0.0
                    } else {
                        norm(&r[k * n..(k + 1) * n]) / bn
                    }
                })
                .fold(0.0, f64::max)
        };
        let r = self.residuals(b, &x, m);
        if rel(&r) > tol {
            let mut dx = vec![0.0; b.len()];
            self.substitute(&r, &mut dx, m);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            let res = rel(&self.residuals(b, &x, m));
            if !(res <= tol) {
                return Err(Error::LinearSolveFailure {
                    residual: res,
                    iterations: 2,
                });
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteState("banded solve"));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, bw: usize, rng: &mut impl Rng) -> BandedSym {
        let mut a = BandedSym::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = rng.gen_range(-1.0..1.0);
                a.add_full(i, j, v);
            }
        }
        // diagonal dominance
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
            a.add_full(i, i, off + 1.0);
        }
        a
    }

    #[test]
    fn matvec_is_symmetric_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(30, 4, &mut rng);
        let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; 30];
        a.matvec(&x, &mut y);
        for i in 0..30 {
            let dense: f64 = (0..30).map(|j| a.get(i, j) * x[j]).sum();
            assert!((dense - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_solves_to_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_spd(300, 17, &mut rng);
        let exact: Vec<f64> = (0..300).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; 300];
        a.matvec(&exact, &mut b);
        let ch = BandedCholesky::factor(&a).unwrap();
        let x = ch.solve(&b, 1e-12).unwrap();
        for i in 0..300 {
            assert!((x[i] - exact[i]).abs() < 1e-11);
        }
        let mut b2 = b.clone();
        b2.extend(b.iter().map(|v| -2.0 * v));
        let x2 = ch.solve_many(&b2, 1e-12).unwrap();
        assert_eq!(&x2[..300], &x[..]);
        for i in 0..300 {
            assert!((x2[300 + i] + 2.0 * exact[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut a = BandedSym::zeros(3, 1);
        a.add_full(0, 0, 1.0);
        a.add_full(1, 0, 2.0);
        a.add_full(1, 1, 1.0);
        a.add_full(2, 2, 1.0);
        assert!(BandedCholesky::factor(&a).is_err());
    }
}
