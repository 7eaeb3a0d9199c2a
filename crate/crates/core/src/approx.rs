//! The order-n approximating system: the space C^{k-1} (+) H with its
//! counterterm inner product, the generator pair (Z_n, H_n), the projection
//! P_n from the Pontryagin space, the lift Q_n back into it, resolvents and
//! evolution operators.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, cr, CMatrix, CVector, RMatrix, RVector};
use crate::pontryagin::{product_with_g, PontryaginSpace, PontryaginVector};
use crate::resolvent::ResolventData;
use crate::spectral::{RegularizedFamily, SpectralModel};

/// Element (c^0..c^{k-2}, psi) of the approximating space.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxVector {
    pub c: CVector,
    pub psi: CVector,
}

impl ApproxVector {
    pub fn zero(k: usize, dim: usize) -> Self {
        Self {
            c: CVector::zeros(k - 1),
            psi: CVector::zeros(dim),
        }
    }

    pub fn coords(&self) -> CVector {
        let kc = self.c.len();
        let mut v = CVector::zeros(kc + self.psi.len());
        v.rows_mut(0, kc).copy_from(&self.c);
        v.rows_mut(kc, self.psi.len()).copy_from(&self.psi);
        v
    }

    pub fn from_coords(k: usize, dim: usize, v: &CVector) -> Self {
        assert_eq!(v.len(), k - 1 + dim, "coordinate length mismatch");
        Self {
            c: v.rows(0, k - 1).into_owned(),
            psi: v.rows(k - 1, dim).into_owned(),
        }
    }

    pub fn euclid_norm(&self) -> f64 {
        (self.c.norm_squared() + self.psi.norm_squared()).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            c: &self.c - &other.c,
            psi: &self.psi - &other.psi,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            c: &self.c + &other.c,
            psi: &self.psi + &other.psi,
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            c: self.c.map(|x| x * a),
            psi: self.psi.map(|x| x * a),
        }
    }
}

/// Hankel gram of the counterterm block: entry (j, s) is z_{j+s+1} with the
/// convention z_l = 0 for l >= k. This block carries the m negative squares
/// of the space.
pub fn counterterm_block_gram(z: &[f64]) -> RMatrix {
    let k = z.len();
    RMatrix::from_fn(k.saturating_sub(1), k.saturating_sub(1), |j, s| {
        z.get(j + s + 1).copied().unwrap_or(0.0)
    })
}

/// The approximating space at one regularization index.
#[derive(Debug, Clone)]
pub struct ApproxSpace {
    model: SpectralModel,
    family: RegularizedFamily,
}

impl ApproxSpace {
    pub fn new(model: &SpectralModel, family: RegularizedFamily) -> Result<Self> {
        let k = model.k();
        if family.z.len() != k {
            return Err(CoreError::InvalidModel(format!(
                "family carries {} counterterms for k = {k}",
                family.z.len()
            )));
        }
        let z_last = family.z[k - 1];
        if z_last == 0.0 || !z_last.is_finite() {
            return Err(CoreError::DegenerateGenerator(format!(
                "leading counterterm z_{} = {z_last} at n = {}",
                k - 1,
                family.n
            )));
        }
        Ok(Self {
            model: model.clone(),
            family,
        })
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn family(&self) -> &RegularizedFamily {
        &self.family
    }

    pub fn n(&self) -> u32 {
        self.family.n
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn dim_h(&self) -> usize {
        self.model.dim()
    }

    /// Total dimension k - 1 + N.
    pub fn dim(&self) -> usize {
        self.k() - 1 + self.dim_h()
    }

    /// Indefinite inner product of the space: (psi, psi') plus the
    /// counterterm Hankel form on the c block.
    pub fn inner_product(&self, a: &ApproxVector, b: &ApproxVector) -> Complex64 {
        let k = self.k();
        let mut acc = a.psi.dotc(&b.psi);
        for j in 0..k.saturating_sub(1) {
            for s in 0..k - 1 {
                acc += a.c[j].conj() * b.c[s] * self.family.z_eff(j + s + 1);
            }
        }
        acc
    }

    /// Dense gram in flat [c, psi] coordinates.
    pub fn gram_matrix(&self) -> RMatrix {
        let k = self.k();
        let n = self.dim_h();
        let mut g = RMatrix::zeros(self.dim(), self.dim());
        g.view_mut((0, 0), (k - 1, k - 1))
            .copy_from(&counterterm_block_gram(&self.family.z));
        for i in 0..n {
            g[(k - 1 + i, k - 1 + i)] = 1.0;
        }
        g
    }

    /// The auxiliary product on the Pontryagin space carrying the index-n
    /// renormalized moments; the lift is an exact isometry onto it.
    pub fn aux_product(&self, a: &PontryaginVector, b: &PontryaginVector) -> Complex64 {
        let m = self.m();
        let mut g_table = vec![0.0; 2 * m + 2];
        for (l, gl) in self.family.g_n_moments.iter().enumerate() {
            g_table[l + 1] = *gl;
        }
        product_with_g(&g_table, a, b)
    }

    /// Multiplier matrix Z_n: identity except the leading counterterm on the
    /// last c slot. For k = 1 it is the identity on H.
    pub fn z_matrix(&self) -> RMatrix {
        let mut z = RMatrix::identity(self.dim(), self.dim());
        let k = self.k();
        if k >= 2 {
            z[(k - 2, k - 2)] = self.family.z[k - 1];
        }
        z
    }

    /// Stiffness part H_n: a shift on the c block, the counterterm row
    /// coupling to (chi_n, psi), and T psi + c^0 chi_n on the regular block.
    pub fn h_matrix(&self) -> RMatrix {
        let k = self.k();
        let n = self.dim_h();
        let chi_n = &self.family.chi_n;
        let mut h = RMatrix::zeros(self.dim(), self.dim());
        if k >= 2 {
            for j in 0..k.saturating_sub(2) {
                h[(j, j + 1)] = 1.0;
            }
            for l in 0..=(k - 2) {
                h[(k - 2, l)] = -self.family.z[l];
            }
            for i in 0..n {
                h[(k - 2, k - 1 + i)] = chi_n[i];
                h[(k - 1 + i, 0)] = chi_n[i];
            }
        }
        for i in 0..n {
            h[(k - 1 + i, k - 1 + i)] = self.model.eigenvalues()[i];
        }
        if k == 1 {
            // The scalar relation z_0 c = (chi_n, psi) eliminates c and the
            // system collapses to the rank-one-coupled equation on H.
            let g_n = 1.0 / self.family.z[0];
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += g_n * chi_n[i] * chi_n[j];
                }
            }
        }
        h
    }

    /// Generator Z_n^{-1} H_n as a dense real matrix.
    pub fn generator(&self) -> RMatrix {
        let k = self.k();
        let mut g = self.h_matrix();
        if k >= 2 {
            let zl = self.family.z[k - 1];
            for j in 0..g.ncols() {
                g[(k - 2, j)] /= zl;
            }
        }
        g
    }

    /// Projection of a Pontryagin vector onto the approximating space:
    /// the leading gammas become c^0..c^{m-1}, the regular part is shifted by
    /// the mollified singular tail (with the rho_m-matching adjustment for
    /// even k), and the remaining c entries follow by back-substitution
    /// against the moment rows.
    pub fn project_pn(&self, v: &PontryaginVector) -> Result<ApproxVector> {
        let k = self.k();
        let m = self.m();
        let model = &self.model;
        let chi_n = &self.family.chi_n;
        assert_eq!(v.m(), m, "vector rank mismatch");
        assert_eq!(v.dim_h(), self.dim_h(), "vector dimension mismatch");

        let mut out = ApproxVector::zero(k, self.dim_h());
        for j in 0..m {
            out.c[j] = v.gamma[j];
        }

        // Adjusted regular part phi_n.
        let phi_n = if k % 2 == 0 && m >= 1 {
            let denom = model.moment(chi_n, 2 * m as u32);
            if denom <= f64::MIN_POSITIVE {
                return Err(CoreError::DegenerateProjection(format!(
                    "vanishing ||T^-m chi_n|| at n = {}",
                    self.family.n
                )));
            }
            let num = v.rho[m - 1] - model.weighted_dot(chi_n, m as u32, &v.phi);
            let tmchi = model.weighted_vector(chi_n, m as u32);
            let mut phi = v.phi.clone();
            for i in 0..phi.len() {
                phi[i] += num * (tmchi[i] / denom);
            }
            phi
        } else {
            v.phi.clone()
        };

        // psi_n = -sum_j gamma_{j+1} T^{-j-1} chi_n + phi_n
        out.psi = phi_n.clone();
        for j in 0..m {
            let tj = model.weighted_vector(chi_n, j as u32 + 1);
            for i in 0..out.psi.len() {
                out.psi[i] -= v.gamma[j] * tj[i];
            }
        }

        // Back-substitution from the last resolved moment row upward.
        let z_last = self.family.z[k - 1];
        let j_hi = if k % 2 == 1 { m } else { m.saturating_sub(1) };
        for j in (1..=j_hi).rev() {
            let unknown = (k - 1) - j;
            let mut rhs = model.weighted_dot(chi_n, j as u32, &phi_n) - v.rho[j - 1];
            for idx in m..unknown {
                rhs -= out.c[idx] * self.family.z_eff(j + idx);
            }
            out.c[unknown] = rhs / cr(z_last);
        }
        Ok(out)
    }

    /// Lift into the Pontryagin space: the leading c entries become gammas,
    /// phi recovers the mollified singular tail, and the rho rows pair the
    /// moments of chi_n against phi minus the counterterm corrections.
    pub fn lift_qn(&self, v: &ApproxVector) -> PontryaginVector {
        let k = self.k();
        let m = self.m();
        let model = &self.model;
        let chi_n = &self.family.chi_n;
        assert_eq!(v.c.len(), k - 1, "vector rank mismatch");
        assert_eq!(v.psi.len(), self.dim_h(), "vector dimension mismatch");

        let mut phi = v.psi.clone();
        for j in 0..m {
            let tj = model.weighted_vector(chi_n, j as u32 + 1);
            for i in 0..phi.len() {
                phi[i] += v.c[j] * tj[i];
            }
        }
        let gamma = CVector::from_fn(m, |j, _| v.c[j]);
        let mut rho = CVector::zeros(m);
        for j in 1..=m {
            let mut r = model.weighted_dot(chi_n, j as u32, &phi);
            for idx in m..(k - 1) {
                r -= v.c[idx] * self.family.z_eff(j + idx);
            }
            rho[j - 1] = r;
        }
        PontryaginVector { gamma, rho, phi }
    }

    /// Resolvent data of the generator with index-n renormalized moments.
    pub fn n_resolvent_data(&self) -> ResolventData {
        let m = self.m();
        ResolventData {
            m,
            g: self.family.g_n_moments.clone(),
            z2m: self.family.z_eff(2 * m),
            chi: self.family.chi_n.clone(),
        }
    }

    /// Rescaled symbol of the lifted resolvent at index n.
    pub fn a_bar_n(&self, lambda: f64) -> f64 {
        self.n_resolvent_data().a_bar(&self.model, lambda)
    }

    /// Dense inverse of (Z_n^{-1} H_n + lambda).
    pub fn resolvent_direct(&self, lambda: f64) -> Result<RMatrix> {
        let dim = self.dim();
        let a = self.generator() + RMatrix::identity(dim, dim).scale(lambda);
        linalg::invert_real(
            &a,
            &format!("generator + {lambda} at n = {}", self.family.n),
        )
    }

    /// Apply the closed-form lifted resolvent to a Pontryagin vector.
    pub fn resolvent_lifted_apply(
        &self,
        lambda: f64,
        v: &PontryaginVector,
    ) -> Result<PontryaginVector> {
        self.n_resolvent_data().apply(&self.model, lambda, v)
    }

    /// exp(-i G t) with G = Z_n^{-1} H_n.
    pub fn schrodinger_propagator(&self, t: f64) -> Result<CMatrix> {
        let g = linalg::complexify(&self.generator()).map(|x| x * Complex64::new(0.0, -t));
        linalg::expm(&g)
    }

    /// exp(-G t).
    pub fn parabolic_propagator(&self, t: f64) -> Result<RMatrix> {
        linalg::expm_real(&self.generator().scale(-t))
    }

    /// Cosine-family pair (V_n(t), W_n(t)) of -y'' = G y.
    pub fn hyperbolic_propagators(&self, t: f64) -> Result<(RMatrix, RMatrix)> {
        crate::exact::block_cosine_pair(&self.generator(), t)
    }

    pub fn evolve_schrodinger(&self, t: f64, v: &ApproxVector) -> Result<ApproxVector> {
        let u = self.schrodinger_propagator(t)?;
        Ok(ApproxVector::from_coords(
            self.k(),
            self.dim_h(),
            &(u * v.coords()),
        ))
    }

    pub fn evolve_parabolic(&self, t: f64, v: &ApproxVector) -> Result<ApproxVector> {
        let u = linalg::complexify(&self.parabolic_propagator(t)?);
        Ok(ApproxVector::from_coords(
            self.k(),
            self.dim_h(),
            &(u * v.coords()),
        ))
    }

    pub fn evolve_hyperbolic(
        &self,
        t: f64,
        v: &ApproxVector,
        vdot: &ApproxVector,
    ) -> Result<(ApproxVector, ApproxVector)> {
        let (vv, ww) = self.hyperbolic_propagators(t)?;
        let g = self.generator();
        let x = v.coords();
        let xd = vdot.coords();
        let vv = linalg::complexify(&vv);
        let ww = linalg::complexify(&ww);
        let y = &vv * &x + &ww * &xd;
        let yd = linalg::complexify(&g).map(|z| -z) * &ww * x + vv * xd;
        Ok((
            ApproxVector::from_coords(self.k(), self.dim_h(), &y),
            ApproxVector::from_coords(self.k(), self.dim_h(), &yd),
        ))
    }
}

/// Majorant norm on the approximating space built from the transported
/// negative subspace (G + lambda)^{-1} P_n (H + lambda) L_m, orthonormalized
/// in the indefinite metric. Fails when the transported gram is not negative
/// definite (possible at very small n), in which case callers fall back to
/// the Euclidean norm and flag the row.
#[derive(Debug, Clone)]
pub struct BnMajorant {
    basis: Vec<ApproxVector>,
    gram: RMatrix,
}

impl BnMajorant {
    pub fn euclidean(space: &ApproxSpace) -> Self {
        Self {
            basis: Vec::new(),
            gram: RMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn transported(
        space: &ApproxSpace,
        pi_space: &PontryaginSpace,
        ham: &crate::exact::Hamiltonian,
        lambda: f64,
    ) -> Result<Self> {
        let m = space.m();
        let g_n = space.gram_matrix();
        if m == 0 {
            return Ok(Self {
                basis: Vec::new(),
                gram: g_n,
            });
        }
        let e_basis = pi_space.negative_basis_in_domain()?;
        let dim = space.dim();
        let shifted = space.generator() + RMatrix::identity(dim, dim).scale(lambda);
        let lu = shifted.lu();

        let mut transported: Vec<ApproxVector> = Vec::with_capacity(m);
        for e in &e_basis {
            let he = ham.apply(e).add(&e.scale(cr(lambda)));
            let pe = space.project_pn(&he)?;
            // real data end to end
            let rhs = RVector::from_iterator(dim, pe.coords().iter().map(|x| x.re));
            let sol = lu.solve(&rhs).ok_or_else(|| {
                CoreError::SingularMatrix(format!(
                    "generator + {lambda} while transporting the negative subspace"
                ))
            })?;
            let cx = CVector::from_iterator(dim, sol.iter().map(|&x| cr(x)));
            transported.push(ApproxVector::from_coords(space.k(), space.dim_h(), &cx));
        }

        // Indefinite Gram-Schmidt with <e, e> = -1 normalization.
        let mut basis: Vec<ApproxVector> = Vec::with_capacity(m);
        for mut f in transported {
            for e in &basis {
                let c = space.inner_product(e, &f);
                f = f.add(&e.scale(c));
            }
            let p = space.inner_product(&f, &f).re;
            if p >= -1e-12 {
                return Err(CoreError::InconsistentGram(format!(
                    "transported subspace not negative definite at n = {} (product {p:.3e})",
                    space.n()
                )));
            }
            basis.push(f.scale(cr(1.0 / (-p).sqrt())));
        }

        let mut gram = g_n.clone();
        for e in &basis {
            let ec = e.coords();
            let er = RVector::from_iterator(ec.len(), ec.iter().map(|x| x.re));
            let ge = &g_n * er;
            gram += (&ge * ge.transpose()).scale(2.0);
        }
        // The majorant must be positive definite when the transported
        // subspace is maximal negative; verify rather than assume.
        let min_eig = nalgebra::SymmetricEigen::new(gram.clone())
            .eigenvalues
            .min();
        if min_eig <= 0.0 {
            return Err(CoreError::InconsistentGram(format!(
                "transported majorant not positive definite at n = {} (min eigenvalue {min_eig:.3e})",
                space.n()
            )));
        }
        Ok(Self { basis, gram })
    }

    pub fn norm(&self, v: &ApproxVector) -> f64 {
        let c = v.coords();
        let s = &self.gram;
        let mut acc = 0.0;
        for i in 0..c.len() {
            for j in 0..c.len() {
                acc += (c[i].conj() * c[j]).re * s[(i, j)];
            }
        }
        acc.max(0.0).sqrt()
    }

    pub fn gram(&self) -> &RMatrix {
        &self.gram
    }

    pub fn basis(&self) -> &[ApproxVector] {
        &self.basis
    }
}
