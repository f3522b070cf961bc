//! Constitutive laws.
//!
//! Everything here is a pure function of the material constants, so a
//! [`MaterialParams`] can be shared read-only between assembly workers.

use crate::error::{Error, Result};
use crate::tensor::Mat;

/// Value returned by energies that are infinite (e.g. `ψ_H` for `det P ≤ 0`).
pub const INFINITE_ENERGY: f64 = f64::INFINITY;

/// Floor applied to the temperature before taking logarithms.
pub const THETA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams {
    /// mass density
    pub rho: f64,
    /// first Lamé constant of the St. Venant–Kirchhoff law
    pub lambda: f64,
    /// shear modulus
    pub mu: f64,
    /// hyperstress modulus of the `|∇²y|²` term
    pub kappa0: f64,
    /// plastic-gradient modulus of the `|∇P|^q` term
    pub kappa1: f64,
    /// plastic-gradient exponent
    pub q: f64,
    /// isochoric penalty parameter; `0` disables the hardening term
    pub delta: f64,
    /// hardening exponent
    pub r: f64,
    /// reference yield stress (0 gives pure Maxwell creep)
    pub sigma0: f64,
    /// temperature at which the yield stress halves
    pub theta_ref: f64,
    /// viscous creep modulus
    pub mu_v: f64,
    /// heat capacity
    pub cv0: f64,
    /// heat conductivity
    pub k0: f64,
    /// boundary spring stiffness
    pub n_spring: f64,
    /// boundary heat-transfer coefficient
    pub k_heat: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            rho: 1.0,
            lambda: 1.0,
            mu: 1.0,
            kappa0: 1e-4,
            kappa1: 1e-3,
            q: 4.0,
            delta: 0.1,
            r: 4.0,
            sigma0: 0.01,
            theta_ref: 1.0,
            mu_v: 1.0,
            cv0: 1.0,
            k0: 0.01,
            n_spring: 100.0,
            k_heat: 0.0,
        }
    }
}

impl MaterialParams {
    /// Checks the admissibility constraints on the constants for spatial dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let d = dim as f64;
        let positive = [
            ("rho", self.rho),
            ("mu", self.mu),
            ("kappa0", self.kappa0),
            ("kappa1", self.kappa1),
            ("mu_v", self.mu_v),
            ("cv0", self.cv0),
            ("k0", self.k0),
            ("theta_ref", self.theta_ref),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.lambda + self.mu > 0.0) {
            return Err(Error::config("lambda", "lambda + mu must be positive"));
        }
        self.validate_q(dim)?;
        let r_min = self.q * d / (self.q - d);
        if self.r < r_min {
            return Err(Error::config(
                "r",
                format!("r = {} violates r >= q d/(q - d) = {r_min}", self.r),
            ));
        }
        let nonneg = [
            ("delta", self.delta),
            ("sigma0", self.sigma0),
            ("n_spring", self.n_spring),
            ("k_heat", self.k_heat),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn validate_q(&self, dim: usize) -> Result<()> {
        if !(self.q > dim as f64) {
            return Err(Error::config(
                "q",
                format!("assumption q > d violated: q = {}, d = {dim}", self.q),
            ));
        }
        Ok(())
    }

    // ---------------------------------------------------------------- elastic

    /// St. Venant–Kirchhoff energy `(λ/2)(tr E)² + μ E:E`, `E = ½(FᵀF − I)`.
    pub fn psi_el(&self, fe: &Mat) -> f64 {
        let e = green_lagrange(fe);
        let tr = e.trace();
        0.5 * self.lambda * tr * tr + self.mu * e.contract2(&e)
    }

    /// `∂ψ_el/∂F = F(λ tr(E) I + 2μE)`.
    pub fn dpsi_el(&self, fe: &Mat) -> Mat {
        let e = green_lagrange(fe);
        let s = Mat::identity(fe.dim()).scale(self.lambda * e.trace()) + e.scale(2.0 * self.mu);
        *fe * s
    }

    /// Elastic energy written in terms of the total and plastic strain, `ψ_el(F P⁻¹)`.
    pub fn psi_el_fp(&self, f: &Mat, p: &Mat) -> Result<f64> {
        Ok(self.psi_el(&(*f * p.inv()?)))
    }

    /// Returns the derivatives of `ψ_el(F P⁻¹)` with respect to `F` and to `P`.
    ///
    /// The `P`-derivative uses the closed form `−F_elᵀ ψ_el'(F_el) P⁻ᵀ`, which
    /// equals `Fᵀψ_el'(F_el):(P⁻¹)'` contracted through [`Mat::dinv`].
    pub fn dpsi_el_fp(&self, f: &Mat, p: &Mat) -> Result<(Mat, Mat)> {
        let p_inv = p.inv()?;
        let fe = *f * p_inv;
        let s = self.dpsi_el(&fe);
        let pit = p_inv.transpose();
        let d_f = s * pit;
        let d_p = -(fe.transpose() * s * pit);
        Ok((d_f, d_p))
    }

    // -------------------------------------------------------------- hardening

    fn hardening_enabled(&self) -> bool {
        self.delta > 0.0
    }

    /// Scalar profile of the isochoric penalty as a function of `J = det P`.
    pub fn psi_h_of_det(&self, j: f64) -> f64 {
        if !self.hardening_enabled() {
            return 0.0;
        }
        if j <= 0.0 {
            return INFINITE_ENERGY;
        }
        let dl = self.delta;
        dl / j.max(1.0).powf(self.r) + (j - 1.0) * (j - 1.0) / (2.0 * dl)
    }

    /// `dψ_H/dJ`. At `J = 1` the branch `J ≤ 1` is taken, so `P = I` is stress free.
    pub fn dpsi_h_of_det(&self, j: f64) -> f64 {
        if !self.hardening_enabled() || j <= 0.0 {
            return 0.0;
        }
        let dl = self.delta;
        let mut g = (j - 1.0) / dl;
        if j > 1.0 {
            g -= self.r * dl * j.powf(-self.r - 1.0);
        }
        g
    }

    pub fn psi_h(&self, p: &Mat) -> f64 {
        self.psi_h_of_det(p.det())
    }

    /// Gradient of `ψ_H`, using `(det P)' = Cof P`.
    pub fn dpsi_h(&self, p: &Mat) -> Mat {
        p.cof().scale(self.dpsi_h_of_det(p.det()))
    }

    // ------------------------------------------------------------ dissipation

    /// Temperature-dependent yield stress `σ0/(1 + θ/θ_ref)`.
    pub fn sigma_yield(&self, theta: f64) -> f64 {
        self.sigma0 / (1.0 + theta.max(0.0) / self.theta_ref)
    }

    /// Yosida-regularized rate-independent part `R_{1,ε}` as a function of `s = |R|`.
    pub fn r1_eps_scalar(&self, theta: f64, s: f64, eps: f64) -> f64 {
        let sy = self.sigma_yield(theta);
        if s <= eps {
            sy * s * s / (2.0 * eps)
        } else {
            sy * (s - 0.5 * eps)
        }
    }

    /// Unregularized rate-independent part `σ_Y(θ)|R|`.
    pub fn r1(&self, theta: f64, rate: &Mat) -> f64 {
        self.sigma_yield(theta) * rate.norm()
    }

    /// Regularized dissipation potential `R_ε = R_{1,ε} + (μ_v/2)|R|²`.
    pub fn r_eps(&self, theta: f64, rate: &Mat, eps: f64) -> f64 {
        let s = rate.norm();
        self.r1_eps_scalar(theta, s, eps) + 0.5 * self.mu_v * s * s
    }

    /// Magnitude map `h(s)` with `∂_R R_ε(R) = h(|R|) R/|R|`.
    fn flow_magnitude(&self, theta: f64, s: f64, eps: f64) -> f64 {
        self.sigma_yield(theta) * (s / eps).min(1.0) + self.mu_v * s
    }

    /// `∂_R R_ε(θ; R)`.
    pub fn dr_eps(&self, theta: f64, rate: &Mat, eps: f64) -> Mat {
        let s = rate.norm();
        let sy = self.sigma_yield(theta);
        if s <= eps {
            rate.scale(sy / eps + self.mu_v)
        } else {
            rate.scale(sy / s + self.mu_v)
        }
    }

    /// Solves `∂_R R_ε(θ; R) = T` for `R` in closed form.
    pub fn invert_flow(&self, theta: f64, target: &Mat, eps: f64) -> Mat {
        let t = target.norm();
        let sy = self.sigma_yield(theta);
        if t == 0.0 {
            return Mat::zeros(target.dim());
        }
        if t <= sy + self.mu_v * eps {
            target.scale(1.0 / (sy / eps + self.mu_v))
        } else {
            let s = (t - sy) / self.mu_v;
            target.scale(s / t)
        }
    }

    /// Damped heat-production rate `∂_R R_ε(R):R / (1 + ε|R|²)`.
    pub fn heat_production(&self, theta: f64, rate: &Mat, eps: f64) -> f64 {
        let s = rate.norm();
        if s == 0.0 {
            return 0.0;
        }
        let num = if eps > 0.0 {
            self.flow_magnitude(theta, s, eps) * s
        } else {
            (self.sigma_yield(theta) + self.mu_v * s) * s
        };
        num / (1.0 + eps * s * s)
    }

    // ------------------------------------------------------------------ heat

    /// Conductivity pulled back through the plastic strain, `Cof Pᵀ 𝕂 Cof P / det P`
    /// with isotropic `𝕂 = k0 I`.
    pub fn kappa_eff(&self, p: &Mat, _theta: f64) -> Result<Mat> {
        let det = p.det();
        let tol = p.singular_tol();
        if !(det > tol) {
            return Err(Error::SingularMatrix { det, tol });
        }
        let c = p.cof();
        Ok((c.transpose() * c).scale(self.k0 / det))
    }

    /// Heat capacity `c_v(θ)`.
    pub fn cv(&self, _theta: f64) -> f64 {
        self.cv0
    }

    /// Enthalpy transform `ϑ = C_v(θ)` (primitive of `c_v` vanishing at 0).
    pub fn cv_primitive(&self, theta: f64) -> f64 {
        self.cv0 * theta
    }

    pub fn cv_inv(&self, vartheta: f64) -> f64 {
        vartheta / self.cv0
    }

    /// Thermal free energy `ψ_T(θ) = −c_v0 θ (ln θ − 1)`.
    pub fn psi_t(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        -self.cv0 * theta * (theta.ln() - 1.0)
    }

    /// Entropy density `η = −ψ_T'(θ) = c_v0 ln θ`; `−∞` at `θ = 0`.
    pub fn entropy_density(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.cv0 * theta.ln()
    }
}

/// `E = ½(FᵀF − I)`.
pub fn green_lagrange(f: &Mat) -> Mat {
    (f.transpose() * *f - Mat::identity(f.dim())).scale(0.5)
}
