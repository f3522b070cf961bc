//! Small dense tensor algebra for d = 2 or d = 3.
//!
//! [`Mat`] carries its dimension at runtime so the same constitutive code
//! runs in 2-D (the solver) and 3-D (unit tests). Storage is always a fixed
//! 3×3 array; entries outside the active `dim × dim` block stay zero.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    dim: usize,
    e: [[f64; 3]; 3],
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| &self.e[i][..self.dim]).collect();
        write!(f, "Mat{:?}", rows)
    }
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3, got {dim}");
        Mat {
            dim,
            e: [[0.0; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m.e[i][i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.e[i][i] = *v;
        }
        m
    }

    pub fn new2(a: [[f64; 2]; 2]) -> Self {
        let mut m = Mat::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] = a[i][j];
            }
        }
        m
    }

    pub fn new3(a: [[f64; 3]; 3]) -> Self {
        Mat { dim: 3, e: a }
    }

    /// Builds a matrix from a row-major slice of length `dim²`.
    pub fn from_row_slice(dim: usize, s: &[f64]) -> Self {
        assert_eq!(s.len(), dim * dim);
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.e[i][j] = s[i * dim + j];
            }
        }
        m
    }

    pub fn write_row_slice(&self, out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.e[i][j];
            }
        }
    }

    /// Planar rotation by `angle` (d = 2).
    pub fn rotation2(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat::new2([[c, -s], [s, c]])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.e[i][j] = self.e[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.e[i][i]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.contract2(self).sqrt()
    }

    /// Frobenius inner product `A:B = Σ AᵢⱼBᵢⱼ`.
    pub fn contract2(&self, other: &Mat) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.e[i][j] * other.e[i][j];
            }
        }
        s
    }

    pub fn scale(&self, a: f64) -> Mat {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.e[i][j] *= a;
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.e[i][j].is_finite()))
    }

    pub fn det(&self) -> f64 {
        let e = &self.e;
        match self.dim {
            2 => e[0][0] * e[1][1] - e[0][1] * e[1][0],
            _ => {
                e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                    - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                    + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
            }
        }
    }

    /// Cofactor matrix; equals `det(A) A⁻ᵀ` whenever A is invertible.
    pub fn cof(&self) -> Mat {
        let e = &self.e;
        match self.dim {
            2 => Mat::new2([[e[1][1], -e[1][0]], [-e[0][1], e[0][0]]]),
            _ => {
                let mut c = Mat::zeros(3);
                for i in 0..3 {
                    for j in 0..3 {
                        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                        c.e[i][j] = e[i1][j1] * e[i2][j2] - e[i1][j2] * e[i2][j1];
                    }
                }
                c
            }
        }
    }

    /// Scale-aware singularity threshold `1e-12 ‖A‖^d`.
    pub fn singular_tol(&self) -> f64 {
        1e-12 * self.norm().powi(self.dim as i32)
    }

    pub fn inv(&self) -> Result<Mat> {
        let det = self.det();
        let tol = self.singular_tol();
        if !(det.abs() > tol) {
            return Err(Error::SingularMatrix { det, tol });
        }
        Ok(self.cof().transpose().scale(1.0 / det))
    }

    /// Derivative of `P ↦ P⁻¹`, as the 4th-order tensor
    /// `∂(P⁻¹)ᵢⱼ/∂Pₖₗ = −(P⁻¹)ᵢₖ (P⁻¹)ₗⱼ`.
    pub fn dinv(&self) -> Result<Tensor4> {
        let pi = self.inv()?;
        let d = self.dim;
        let mut t = Tensor4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t.set(i, j, k, l, -pi.e[i][k] * pi.e[l][j]);
                    }
                }
            }
        }
        Ok(t)
    }

    /// Dyadic product `(A ⊗ B)ᵢⱼₖₗ = AᵢⱼBₖₗ`.
    pub fn outer(&self, other: &Mat) -> Tensor4 {
        let d = self.dim;
        let mut t = Tensor4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t.set(i, j, k, l, self.e[i][j] * other.e[k][l]);
                    }
                }
            }
        }
        t
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.e[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.e[i][j]
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        self += rhs;
        self
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.e[i][j] += rhs.e[i][j];
            }
        }
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        self -= rhs;
        self
    }
}

impl SubAssign for Mat {
    fn sub_assign(&mut self, rhs: Mat) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.e[i][j] -= rhs.e[i][j];
            }
        }
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.e[i][k] * rhs.e[k][j];
                }
                m.e[i][j] = s;
            }
        }
        m
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, a: f64) -> Mat {
        self.scale(a)
    }
}

/// Fourth-order tensor over `d`, stored densely (`d⁴` entries).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    e: [f64; 81],
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3);
        Tensor4 { dim, e: [0.0; 81] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * 3 + j) * 3 + k) * 3 + l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.e[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.idx(i, j, k, l);
        self.e[n] = v;
    }

    /// `(T:H)ᵢⱼ = Σₖₗ Tᵢⱼₖₗ Hₖₗ`
    pub fn contract_right(&self, h: &Mat) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += self.get(i, j, k, l) * h[(k, l)];
                    }
                }
                m[(i, j)] = s;
            }
        }
        m
    }

    /// `(H:T)ₖₗ = Σᵢⱼ Hᵢⱼ Tᵢⱼₖₗ`
    pub fn contract_left(&self, h: &Mat) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for k in 0..d {
            for l in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += h[(i, j)] * self.get(i, j, k, l);
                    }
                }
                m[(k, l)] = s;
            }
        }
        m
    }
}
