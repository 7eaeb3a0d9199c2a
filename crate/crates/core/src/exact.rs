//! The exact renormalized operator on the Pontryagin space: closed-form
//! resolvent, reconstruction of the operator, and its Schrodinger, parabolic
//! and hyperbolic evolution operators.
//!
//! Finite-dimensional peculiarity: for even k the closed-form resolvent built
//! from limit data annihilates one explicit direction (gamma = delta_m,
//! rho_j = g_{m+j}, phi = T^{-m} chi) and maps onto the complementary
//! hyperplane rho_m = (T^{-m} chi, phi). On the genuine infinite-dimensional
//! space that direction has infinite norm and does not exist; the surrogate
//! therefore restricts the operator to the hyperplane, and callers project
//! initial data onto it. For odd k the resolvent is invertible on the whole
//! space and no restriction happens.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, cr, CMatrix, CVector, RMatrix, RVector};
use crate::pontryagin::{PontryaginSpace, PontryaginVector};
use crate::resolvent::ResolventData;

/// Resolvent data with limit (renormalized) moments and the unmollified chi.
pub fn limit_resolvent_data(space: &PontryaginSpace) -> ResolventData {
    let m = space.m();
    ResolventData {
        m,
        g: (1..=2 * m + 1).map(|s| space.g_reg(s)).collect(),
        // zero for even k, where the (2m+1)-th regularized moment is raw
        z2m: space.g_reg(2 * m + 1) - space.mu(2 * m + 1),
        chi: space.model().amplitudes().to_vec(),
    }
}

/// Rescaled symbol of the limit resolvent, defined for every real lambda
/// away from the spectrum of -T; its value at 0 is g_1.
pub fn a_limit(space: &PontryaginSpace, lambda: f64) -> f64 {
    limit_resolvent_data(space).a_bar(space.model(), lambda)
}

/// Closed-form resolvent of the exact operator at one lambda.
#[derive(Debug, Clone)]
pub struct ResolventExact {
    pub lambda: f64,
    pub a_bar: f64,
    pub matrix: CMatrix,
}

/// Assemble the resolvent matrix at lambda. Fails when the symbol vanishes.
pub fn resolvent_exact(space: &PontryaginSpace, lambda: f64) -> Result<ResolventExact> {
    let data = limit_resolvent_data(space);
    let a_bar = data.a_bar(space.model(), lambda);
    let matrix = data.matrix(space.model(), lambda)?;
    Ok(ResolventExact {
        lambda,
        a_bar,
        matrix,
    })
}

/// Apply the limit resolvent to a single vector without assembling a matrix.
pub fn resolvent_exact_apply(
    space: &PontryaginSpace,
    lambda: f64,
    v: &PontryaginVector,
) -> Result<PontryaginVector> {
    limit_resolvent_data(space).apply(space.model(), lambda, v)
}

/// Direct componentwise action of the inverse operator (the zero-energy
/// resolvent): a shift on gamma, moment rows on rho, and
/// phi~ = T^{-1} phi - gamma_m T^{-m-1} chi. Serves as an independent route
/// against the system-solved resolvent at lambda = 0.
pub fn zero_energy_inverse_action(
    space: &PontryaginSpace,
    v: &PontryaginVector,
) -> PontryaginVector {
    let m = space.m();
    let model = space.model();
    let chi = model.amplitudes();
    let g1 = space.g_reg(1);

    if m == 0 {
        // Rank-one closed form with alpha = -1/g_1.
        let t1chi = model.weighted_vector(chi, 1);
        let alpha = -1.0 / g1;
        let pairing = model.weighted_dot(chi, 1, &v.phi);
        let phi = CVector::from_iterator(
            v.phi.len(),
            v.phi
                .iter()
                .zip(model.eigenvalues())
                .zip(t1chi.iter())
                .map(|((&p, &l), &tc)| p / cr(l) + pairing * (alpha * tc)),
        );
        return PontryaginVector {
            gamma: CVector::zeros(0),
            rho: CVector::zeros(0),
            phi,
        };
    }

    let gm = v.gamma[m - 1];
    let mut gamma = CVector::zeros(m);
    let mut acc = Complex64::default();
    for s in 1..=m {
        acc += v.gamma[s - 1] * space.g_reg(s + 1);
    }
    gamma[0] = (v.rho[0] - acc) / cr(g1);
    for s in 1..m {
        gamma[s] = v.gamma[s - 1];
    }

    let mut rho = CVector::zeros(m);
    for s in 1..m {
        rho[s - 1] = v.rho[s] - gm * space.g_reg(m + s + 1);
    }
    rho[m - 1] = model.weighted_dot(chi, m as u32 + 1, &v.phi) - gm * space.g_reg(2 * m + 1);

    let tm1chi = model.weighted_vector(chi, m as u32 + 1);
    let phi = CVector::from_iterator(
        v.phi.len(),
        v.phi
            .iter()
            .zip(model.eigenvalues())
            .zip(tm1chi.iter())
            .map(|((&p, &l), &tc)| p / cr(l) - gm * tc),
    );

    PontryaginVector { gamma, rho, phi }
}

/// Defect direction of the even-k surrogate: the kernel of the limit
/// resolvent, together with the linear functional cutting out its range.
#[derive(Debug, Clone)]
pub struct DomainDefect {
    pub vector: PontryaginVector,
    /// Real coefficients of the functional l(v) = rho_m - (T^{-m} chi, phi)
    /// in flat coordinates.
    functional: RVector,
    /// l evaluated on the defect vector: g_k minus the raw k-th moment.
    pub margin: f64,
}

impl DomainDefect {
    pub fn eval(&self, v: &PontryaginVector) -> Complex64 {
        let c = v.coords();
        self.functional
            .iter()
            .zip(c.iter())
            .map(|(&f, &x)| x * f)
            .sum()
    }
}

/// Compute the even-k defect data; `None` for odd k where the operator lives
/// on the whole space.
pub fn domain_defect(space: &PontryaginSpace) -> Result<Option<DomainDefect>> {
    let k = space.k();
    let m = space.m();
    if k % 2 == 1 {
        return Ok(None);
    }
    let model = space.model();
    let chi = model.amplitudes();

    let mut vector = PontryaginVector::zero(m, space.dim_h());
    vector.gamma[m - 1] = cr(1.0);
    for j in 1..=m {
        vector.rho[j - 1] = cr(space.g_reg(m + j));
    }
    let tmchi = model.weighted_vector(chi, m as u32);
    for i in 0..space.dim_h() {
        vector.phi[i] = cr(tmchi[i]);
    }

    let mut functional = RVector::zeros(space.dim());
    functional[2 * m - 1] = 1.0; // rho_m slot
    for i in 0..space.dim_h() {
        functional[2 * m + i] = -tmchi[i];
    }

    let margin = space.g_reg(2 * m) - space.mu(2 * m);
    if margin.abs() < 1e-8 * space.mu(2 * m).abs().max(1.0) {
        return Err(CoreError::InconsistentGram(format!(
            "g_k = {} is too close to the raw k-th moment {}; the surrogate is \
             not singular enough to separate the defect direction",
            space.g_reg(2 * m),
            space.mu(2 * m)
        )));
    }

    Ok(Some(DomainDefect {
        vector,
        functional,
        margin,
    }))
}

/// The exact operator, held on its domain: the full space for odd k, the
/// defect-complement hyperplane for even k.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    m: usize,
    dim_h: usize,
    lambda0: f64,
    /// Orthonormal basis of the domain in flat coordinates (None: identity).
    basis: Option<RMatrix>,
    defect: Option<DomainDefect>,
    /// Real matrix of the operator in domain coordinates.
    h: RMatrix,
}

/// Candidate shifts for reconstructing the operator from its resolvent:
/// smallest entry with |a-bar| above the symbol-scale threshold wins.
pub const LAMBDA0_SCAN: [f64; 5] = [0.0, 1.0, 2.0, 5.0, 10.0];

/// Pick the first admissible lambda0 from the scan list.
pub fn admissible_lambda0(space: &PontryaginSpace) -> Result<f64> {
    let data = limit_resolvent_data(space);
    let g_scale = data.g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for &l in LAMBDA0_SCAN.iter() {
        if data.a_bar(space.model(), l).abs() > 1e-6 * g_scale.max(1.0) {
            return Ok(l);
        }
    }
    Err(CoreError::SingularResolvent {
        lambda: *LAMBDA0_SCAN.last().unwrap(),
        a_bar: 0.0,
    })
}

/// Reconstruct the operator from its resolvent at lambda0:
/// H = R(lambda0)^{-1} - lambda0, inverted on the domain.
pub fn build_hamiltonian(space: &PontryaginSpace, lambda0: f64) -> Result<Hamiltonian> {
    let res = resolvent_exact(space, lambda0)?;
    // Limit data is real, so the resolvent matrix is too.
    let im_max = res.matrix.iter().fold(0.0f64, |a, x| a.max(x.im.abs()));
    if im_max > 1e-12 {
        return Err(CoreError::IllConditioned(format!(
            "resolvent matrix unexpectedly complex (imaginary part {im_max:.3e})"
        )));
    }
    let r_real = RMatrix::from_fn(res.matrix.nrows(), res.matrix.ncols(), |i, j| {
        res.matrix[(i, j)].re
    });

    let defect = domain_defect(space)?;
    let (basis, reduced) = match &defect {
        None => (None, r_real.clone()),
        Some(d) => {
            // Safety net: the defect direction must be annihilated.
            let rv = &res.matrix * d.vector.coords();
            let fnorm = rv.norm() / d.vector.coords().norm();
            if fnorm > 1e-8 {
                return Err(CoreError::IllConditioned(format!(
                    "resolvent does not annihilate the defect direction (residual {fnorm:.3e})"
                )));
            }
            let b = hyperplane_basis(&d.functional);
            let reduced = b.transpose() * &r_real * &b;
            (Some(b), reduced)
        }
    };

    let inv = linalg::invert_real(&reduced, "resolvent restricted to the domain").map_err(
        |_| {
            CoreError::IllConditioned(format!(
                "resolvent at lambda0 = {lambda0} is numerically singular on the domain"
            ))
        },
    )?;
    let p = inv.nrows();
    let h = inv - RMatrix::identity(p, p).scale(lambda0);

    Ok(Hamiltonian {
        m: space.m(),
        dim_h: space.dim_h(),
        lambda0,
        basis,
        defect,
        h,
    })
}

/// Orthonormal basis of the hyperplane orthogonal to `normal` (Householder
/// reflector columns; deterministic).
fn hyperplane_basis(normal: &RVector) -> RMatrix {
    let n = normal.len();
    let v = normal.normalize();
    // Householder vector mapping e_p -> v, with p the largest |v| component
    // for stability.
    let p = v.iamax();
    let sign = if v[p] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = v.clone();
    u[p] += sign;
    let u = u.normalize();
    // Reflector Q = I - 2 u u^T maps v to -sign * e_p; its columns other than
    // p form an orthonormal basis of the complement of v.
    let q = RMatrix::identity(n, n) - (&u * u.transpose()).scale(2.0);
    let mut b = RMatrix::zeros(n, n - 1);
    let mut col = 0;
    for j in 0..n {
        if j != p {
            b.set_column(col, &q.column(j));
            col += 1;
        }
    }
    b
}

impl Hamiltonian {
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Dimension of the domain the operator acts on.
    pub fn dim_reduced(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix_reduced(&self) -> &RMatrix {
        &self.h
    }

    pub fn defect(&self) -> Option<&DomainDefect> {
        self.defect.as_ref()
    }

    /// Split v into its domain part and the coefficient along the defect
    /// direction (zero for odd k).
    pub fn project_to_domain(&self, v: &PontryaginVector) -> (PontryaginVector, Complex64) {
        match &self.defect {
            None => (v.clone(), Complex64::default()),
            Some(d) => {
                let coeff = d.eval(v) / cr(d.margin);
                (v.sub(&d.vector.scale(coeff)), coeff)
            }
        }
    }

    fn to_reduced(&self, v: &PontryaginVector) -> CVector {
        let (proj, _) = self.project_to_domain(v);
        match &self.basis {
            None => proj.coords(),
            Some(b) => linalg::complexify(&b.transpose()) * proj.coords(),
        }
    }

    fn embed_reduced(&self, x: &CVector) -> PontryaginVector {
        let coords = match &self.basis {
            None => x.clone(),
            Some(b) => linalg::complexify(b) * x,
        };
        PontryaginVector::from_coords(self.m, self.dim_h, &coords)
    }

    /// Apply the operator (after projecting onto its domain).
    pub fn apply(&self, v: &PontryaginVector) -> PontryaginVector {
        let x = self.to_reduced(v);
        self.embed_reduced(&(linalg::complexify(&self.h) * x))
    }

    /// exp(-i H t) in domain coordinates.
    pub fn schrodinger_propagator(&self, t: f64) -> Result<CMatrix> {
        let a = linalg::complexify(&self.h).map(|x| x * Complex64::new(0.0, -t));
        linalg::expm(&a)
    }

    /// exp(-H t) in domain coordinates.
    pub fn parabolic_propagator(&self, t: f64) -> Result<RMatrix> {
        linalg::expm_real(&self.h.scale(-t))
    }

    /// Cosine-family pair (V(t), W(t)) of -y'' = H y via the first-order
    /// block exponential.
    pub fn hyperbolic_propagators(&self, t: f64) -> Result<(RMatrix, RMatrix)> {
        block_cosine_pair(&self.h, t)
    }

    /// Same pair through the scaled Taylor/double-angle cosine route; used to
    /// cross-check the block exponential.
    pub fn hyperbolic_cosine_route(&self, t: f64) -> Result<(RMatrix, RMatrix)> {
        linalg::cosine_family(&self.h, t)
    }

    pub fn evolve_schrodinger(&self, t: f64, v: &PontryaginVector) -> Result<PontryaginVector> {
        let u = self.schrodinger_propagator(t)?;
        Ok(self.embed_reduced(&(u * self.to_reduced(v))))
    }

    pub fn evolve_parabolic(&self, t: f64, v: &PontryaginVector) -> Result<PontryaginVector> {
        let u = linalg::complexify(&self.parabolic_propagator(t)?);
        Ok(self.embed_reduced(&(u * self.to_reduced(v))))
    }

    /// Evolve second-order initial data (v, vdot); returns (v(t), vdot(t)).
    pub fn evolve_hyperbolic(
        &self,
        t: f64,
        v: &PontryaginVector,
        vdot: &PontryaginVector,
    ) -> Result<(PontryaginVector, PontryaginVector)> {
        let (vv, ww) = self.hyperbolic_propagators(t)?;
        let x = self.to_reduced(v);
        let xd = self.to_reduced(vdot);
        let vv = linalg::complexify(&vv);
        let ww = linalg::complexify(&ww);
        let minus_h = linalg::complexify(&self.h).map(|z| -z);
        let y = &vv * &x + &ww * &xd;
        let yd = minus_h * &ww * x + vv * xd;
        Ok((self.embed_reduced(&y), self.embed_reduced(&yd)))
    }

    /// Eigenvalues of the operator on its domain, sorted by real then
    /// imaginary part. Nonreal pairs are possible and simply reported.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut eigs: Vec<Complex64> = self.h.complex_eigenvalues().iter().copied().collect();
        eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        eigs
    }

    /// The majorant gram expressed in domain coordinates, for measuring
    /// operator norms of the propagators.
    pub fn majorant_gram_reduced(&self, space: &PontryaginSpace) -> RMatrix {
        let s = space.majorant_gram();
        match &self.basis {
            None => s,
            Some(b) => b.transpose() * s * b,
        }
    }

    /// Largest defect of <Hu, v> = <u, Hv> over the domain basis.
    pub fn j_selfadjoint_defect(&self, space: &PontryaginSpace) -> f64 {
        let g = space.gram_matrix();
        let b = match &self.basis {
            None => RMatrix::identity(space.dim(), space.dim()),
            Some(b) => b.clone(),
        };
        let hb = &b * &self.h; // columns H d_i in flat coordinates
        let m1 = hb.transpose() * &g * &b; // <H d_i, d_j>
        let m2 = b.transpose() * &g * &hb; // <d_i, H d_j>
        (m1 - m2).amax()
    }
}

/// (V(t), W(t)) from the exponential of the block [[0, I], [-A, 0]] t.
pub fn block_cosine_pair(a: &RMatrix, t: f64) -> Result<(RMatrix, RMatrix)> {
    let n = a.nrows();
    let mut blk = RMatrix::zeros(2 * n, 2 * n);
    blk.view_mut((0, n), (n, n))
        .copy_from(&RMatrix::identity(n, n));
    blk.view_mut((n, 0), (n, n)).copy_from(&(-a.clone()));
    let e = linalg::expm_real(&blk.scale(t))?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    ))
}
