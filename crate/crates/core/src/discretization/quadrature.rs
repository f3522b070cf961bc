/// Gauss–Legendre points and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    // nodes/weights on [-1, 1]
    let (x, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let r = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * r) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * r) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = (10.0f64 / 7.0).sqrt();
            let a = (5.0 - 2.0 * s).sqrt() / 3.0;
            let b = (5.0 + 2.0 * s).sqrt() / 3.0;
            let w0 = 128.0 / 225.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, w0, wa, wb])
        }
        _ => panic!("Gauss rule with {n} points not tabulated"),
    };
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Tensor-product Gauss rule on one (uniform) element.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// reference coordinates in `[0,1]²`
    pub points: Vec<[f64; 2]>,
    /// physical weights; they sum to the element area
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn tensor_gauss(n: usize, hx: f64, hy: f64) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (j, yj) in x.iter().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                points.push([*xi, *yj]);
                weights.push(w[i] * w[j] * hx * hy);
            }
        }
        QuadratureRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        let q = QuadratureRule::tensor_gauss(4, 0.25, 0.5);
        let s: f64 = q.weights.iter().sum();
        assert!((s - 0.125).abs() < 1e-15);
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn exact_up_to_degree_seven() {
        for n in 1..=5 {
            let (x, w) = gauss_legendre_unit(n);
            for p in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }
}
