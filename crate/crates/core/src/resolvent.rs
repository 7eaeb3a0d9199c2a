//! Shared solver for the resolvent defining relations on the Pontryagin
//! space. The same componentwise system describes both the lifted resolvent
//! of the order-n counterterm generator (with renormalized data at index n)
//! and its limit, the resolvent of the singular operator (with limit data).
//!
//! Given (gamma, rho, phi) the solution (gamma~, rho~, phi~) together with an
//! auxiliary scalar c~ satisfies
//!
//!   gamma_s = lambda gamma~_s + gamma~_{s+1},        s = 1..m-1,
//!   gamma_m = lambda gamma~_m + c~,
//!   phi     = (T + lambda) phi~ + c~ T^{-m} chi,
//!   rho_j   = rho~_{j-1} + lambda rho~_j + g_{j+m} c~,   j = 2..m,
//!   rho~_m  = (T^{-m} chi, phi~) - z2m c~,
//!   sum_s g_s gamma~_s + g_{m+1} c~ = rho_1 - lambda rho~_1.
//!
//! Every component is affine in the single unknown gamma~_1, whose coefficient
//! in the last relation equals the rescaled symbol a-bar(lambda); the solver
//! eliminates it numerically and the identity with a-bar is pinned by tests.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{cr, CMatrix, CVector};
use crate::pontryagin::PontryaginVector;
use crate::spectral::SpectralModel;

/// Data slice determining one resolvent family member.
#[derive(Debug, Clone)]
pub struct ResolventData {
    pub m: usize,
    /// g[l-1] = g_l for l = 1..=2m+1 (renormalized moments of chi).
    pub g: Vec<f64>,
    /// Counterterm entering the rho~_m relation: z_{2m} for index-n data,
    /// g_{2m+1} minus the raw (2m+1)-moment for limit data (zero for even k).
    pub z2m: f64,
    /// Coefficients of chi (index-n: the mollified vector; limit: chi itself).
    pub chi: Vec<f64>,
}

impl ResolventData {
    /// Rescaled symbol a-bar(lambda) = (-lambda)^{2m} a(lambda): the
    /// polynomial part sum_s g_s (-lambda)^{s-1} minus
    /// lambda^{2m+1} (chi, T^{-2m-1} (T+lambda)^{-1} chi).
    pub fn a_bar(&self, model: &SpectralModel, lambda: f64) -> f64 {
        let mut poly = 0.0;
        let mut pw = 1.0;
        for s in 1..=(2 * self.m + 1) {
            poly += self.g[s - 1] * pw;
            pw *= -lambda;
        }
        let q: f64 = self
            .chi
            .iter()
            .zip(model.eigenvalues())
            .map(|(&x, &l)| x * x / (l.powi(2 * self.m as i32 + 1) * (l + lambda)))
            .sum();
        poly - lambda.powi(2 * self.m as i32 + 1) * q
    }

    /// Apply the resolvent to a vector. Fails when a-bar(lambda) vanishes or
    /// lambda hits the spectrum of -T.
    pub fn apply(
        &self,
        model: &SpectralModel,
        lambda: f64,
        input: &PontryaginVector,
    ) -> Result<PontryaginVector> {
        let m = self.m;
        assert_eq!(input.m(), m, "vector rank mismatch");
        assert_eq!(input.dim_h(), model.dim(), "vector dimension mismatch");
        if model
            .eigenvalues()
            .iter()
            .any(|&l| (l + lambda).abs() < 1e-14)
        {
            return Err(CoreError::SingularResolvent {
                lambda,
                a_bar: f64::NAN,
            });
        }

        let a_bar = self.a_bar(model, lambda);
        let g_scale = self.g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if a_bar.abs() <= 1e-12 * g_scale {
            return Err(CoreError::SingularResolvent { lambda, a_bar });
        }

        // (T + lambda)^{-1} phi and T^{-m} (T + lambda)^{-1} chi.
        let r_phi = CVector::from_iterator(
            input.phi.len(),
            input
                .phi
                .iter()
                .zip(model.eigenvalues())
                .map(|(&p, &l)| p / cr(l + lambda)),
        );
        let r_chi: Vec<f64> = self
            .chi
            .iter()
            .zip(model.eigenvalues())
            .map(|(&x, &l)| x / (l.powi(m as i32) * (l + lambda)))
            .collect();

        if m == 0 {
            // Rank-one reduction: c~ = ((T+lambda)^{-1} chi, phi) / a-bar.
            let p: Complex64 = r_chi
                .iter()
                .zip(input.phi.iter())
                .map(|(&rc, &p)| p * rc)
                .sum();
            let c_tilde = p / cr(a_bar);
            let phi = CVector::from_iterator(
                input.phi.len(),
                r_phi.iter().zip(&r_chi).map(|(&rp, &rc)| rp - c_tilde * rc),
            );
            return Ok(PontryaginVector {
                gamma: CVector::zeros(0),
                rho: CVector::zeros(0),
                phi,
            });
        }

        // Affine pieces in the unknown u = gamma~_1.
        // gamma~_s(u) = a_gamma[s-1] + (-lambda)^{s-1} u
        let mut a_gamma = vec![Complex64::default(); m];
        for s in 2..=m {
            let mut acc = Complex64::default();
            let mut pw = 1.0;
            for j in 0..=(s - 2) {
                acc += input.gamma[s - j - 2] * pw;
                pw *= -lambda;
            }
            a_gamma[s - 1] = acc;
        }
        // c~(u) = c0 + (-lambda)^m u
        let mut c0 = Complex64::default();
        {
            let mut pw = 1.0;
            for j in 0..m {
                c0 += input.gamma[m - j - 1] * pw;
                pw *= -lambda;
            }
        }

        // rho~_m(u) = p - c~(u) w with
        //   p = ((T+lambda)^{-1} T^{-m} chi, phi),
        //   w = z2m + (chi, T^{-2m} (T+lambda)^{-1} chi).
        let p: Complex64 = r_chi
            .iter()
            .zip(input.phi.iter())
            .map(|(&rc, &phi_i)| phi_i * rc)
            .sum();
        let w = self.z2m
            + self
                .chi
                .iter()
                .zip(model.eigenvalues())
                .map(|(&x, &l)| x * x / (l.powi(2 * m as i32) * (l + lambda)))
                .sum::<f64>();

        // Downward recursion rho~_{j-1} = rho_j - lambda rho~_j - g_{j+m} c~,
        // evaluated as affine functions of u.
        let eval = |u: Complex64| -> (Vec<Complex64>, Complex64, Vec<Complex64>) {
            let mut gam = vec![Complex64::default(); m];
            let mut pw = 1.0;
            for s in 1..=m {
                gam[s - 1] = a_gamma[s - 1] + u * pw;
                pw *= -lambda;
            }
            let c_tilde = c0 + u * cr((-lambda).powi(m as i32));
            let mut rho = vec![Complex64::default(); m];
            rho[m - 1] = p - c_tilde * w;
            for j in (2..=m).rev() {
                rho[j - 2] = input.rho[j - 1] - rho[j - 1] * lambda - c_tilde * self.g[j + m - 1];
            }
            (gam, c_tilde, rho)
        };
        let residual = |u: Complex64| -> Complex64 {
            let (gam, c_tilde, rho) = eval(u);
            let mut f = Complex64::default();
            for s in 1..=m {
                f += gam[s - 1] * self.g[s - 1];
            }
            f += c_tilde * self.g[m];
            f += rho[0] * lambda - input.rho[0];
            f
        };

        let f0 = residual(Complex64::default());
        let f1 = residual(cr(1.0));
        let slope = f1 - f0;
        if slope.norm() <= 1e-12 * g_scale {
            return Err(CoreError::SingularResolvent {
                lambda,
                a_bar: slope.norm(),
            });
        }
        let u = -f0 / slope;

        let (gam, c_tilde, rho) = eval(u);
        let phi = CVector::from_iterator(
            input.phi.len(),
            r_phi.iter().zip(&r_chi).map(|(&rp, &rc)| rp - c_tilde * rc),
        );
        Ok(PontryaginVector {
            gamma: CVector::from_vec(gam),
            rho: CVector::from_vec(rho),
            phi,
        })
    }

    /// Coefficient of the unknown in the closing relation, computed by the
    /// explicit derivative recursion; equals a_bar(lambda) in exact
    /// arithmetic (pinned by tests).
    pub fn closing_slope(&self, model: &SpectralModel, lambda: f64) -> f64 {
        let m = self.m;
        if m == 0 {
            return self.a_bar(model, lambda);
        }
        let w = self.z2m
            + self
                .chi
                .iter()
                .zip(model.eigenvalues())
                .map(|(&x, &l)| x * x / (l.powi(2 * m as i32) * (l + lambda)))
                .sum::<f64>();
        // d gamma~_s / du = (-lambda)^{s-1}; d c~ / du = (-lambda)^m;
        // d rho~_m / du = -(-lambda)^m w; recursion for the rest.
        let mut dgam = vec![0.0; m];
        let mut pw = 1.0;
        for s in 1..=m {
            dgam[s - 1] = pw;
            pw *= -lambda;
        }
        let dc = (-lambda).powi(m as i32);
        let mut drho = vec![0.0; m];
        drho[m - 1] = -dc * w;
        for j in (2..=m).rev() {
            drho[j - 2] = -lambda * drho[j - 1] - self.g[j + m - 1] * dc;
        }
        let mut slope = 0.0;
        for s in 1..=m {
            slope += self.g[s - 1] * dgam[s - 1];
        }
        slope += self.g[m] * dc;
        slope += lambda * drho[0];
        slope
    }

    /// Dense matrix of the resolvent in flat [gamma, rho, phi] coordinates.
    pub fn matrix(&self, model: &SpectralModel, lambda: f64) -> Result<CMatrix> {
        let m = self.m;
        let n = model.dim();
        let dim = 2 * m + n;
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = CVector::zeros(dim);
            e[col] = cr(1.0);
            let v = PontryaginVector::from_coords(m, n, &e);
            let r = self.apply(model, lambda, &v)?;
            out.set_column(col, &r.coords());
        }
        Ok(out)
    }
}

/// Scan a-bar over a lambda grid; useful for locating admissible lambda and
/// bracketing roots where the resolvent degenerates.
pub fn scan_a_bar(data: &ResolventData, model: &SpectralModel, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().map(|&l| (l, data.a_bar(model, l))).collect()
}

/// Bisect a sign change of a-bar inside [lo, hi]; returns the root when the
/// endpoints bracket one.
pub fn bracket_a_bar_root(
    data: &ResolventData,
    model: &SpectralModel,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (data.a_bar(model, a), data.a_bar(model, b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = data.a_bar(model, mid);
        if fm == 0.0 || (b - a) < 1e-14 * (1.0 + mid.abs()) {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}
