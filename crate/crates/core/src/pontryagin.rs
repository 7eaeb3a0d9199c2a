//! The Pontryagin space C^{2m} (+) H carried by the surrogate, with its
//! indefinite inner product, the embedding of singular-plus-regular states,
//! negative-square counting and the majorant (Hilbert) norm.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, cr, CMatrix, CVector, RMatrix, RVector};
use crate::spectral::SpectralModel;

/// Element (gamma, rho, phi) of the space C^m x C^m x H.
#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginVector {
    pub gamma: CVector,
    pub rho: CVector,
    pub phi: CVector,
}

impl PontryaginVector {
    pub fn zero(m: usize, dim: usize) -> Self {
        Self {
            gamma: CVector::zeros(m),
            rho: CVector::zeros(m),
            phi: CVector::zeros(dim),
        }
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    pub fn dim_h(&self) -> usize {
        self.phi.len()
    }

    /// Flat coordinates [gamma, rho, phi].
    pub fn coords(&self) -> CVector {
        let mut v = CVector::zeros(2 * self.m() + self.dim_h());
        v.rows_mut(0, self.m()).copy_from(&self.gamma);
        v.rows_mut(self.m(), self.m()).copy_from(&self.rho);
        v.rows_mut(2 * self.m(), self.dim_h()).copy_from(&self.phi);
        v
    }

    pub fn from_coords(m: usize, dim: usize, v: &CVector) -> Self {
        assert_eq!(v.len(), 2 * m + dim, "coordinate length mismatch");
        Self {
            gamma: v.rows(0, m).into_owned(),
            rho: v.rows(m, m).into_owned(),
            phi: v.rows(2 * m, dim).into_owned(),
        }
    }

    /// Max of component magnitudes: max(||phi||, |gamma_s|, |rho_s|).
    pub fn norm1(&self) -> f64 {
        let mut n = self.phi.norm();
        for x in self.gamma.iter().chain(self.rho.iter()) {
            n = n.max(x.norm());
        }
        n
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            gamma: self.gamma.map(|x| x * a),
            rho: self.rho.map(|x| x * a),
            phi: self.phi.map(|x| x * a),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            gamma: &self.gamma + &other.gamma,
            rho: &self.rho + &other.rho,
            phi: &self.phi + &other.phi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            gamma: &self.gamma - &other.gamma,
            rho: &self.rho - &other.rho,
            phi: &self.phi - &other.phi,
        }
    }
}

/// Indefinite product with explicit gram data: g[s] is the regularized moment
/// of order s (1-based, entries for s = 2..=2m used here). Antilinear in the
/// first argument.
pub fn product_with_g(g: &[f64], a: &PontryaginVector, b: &PontryaginVector) -> Complex64 {
    let m = a.m();
    assert_eq!(b.m(), m, "rank mismatch");
    assert_eq!(a.dim_h(), b.dim_h(), "regular-part dimension mismatch");
    let mut acc = Complex64::default();
    for s in 1..=m {
        for u in 1..=m {
            acc += a.gamma[s - 1].conj() * b.gamma[u - 1] * g[s + u];
        }
    }
    for s in 0..m {
        acc -= a.gamma[s].conj() * b.rho[s] + b.gamma[s] * a.rho[s].conj();
    }
    acc += a.phi.dotc(&b.phi); // nalgebra dotc conjugates self
    acc
}

/// The space Pi_m over a spectral surrogate: regularized moment table, the
/// chosen maximal negative subspace and the majorant norm it induces.
#[derive(Debug, Clone)]
pub struct PontryaginSpace {
    model: SpectralModel,
    g_targets: Vec<f64>,
    alpha: f64,
    /// g_reg[s] for s = 1..=s_max: the free targets for s <= k, the raw
    /// moments of chi for s >= k+1. Index 0 unused.
    g_reg: Vec<f64>,
    /// Raw moments mu[s] = (chi, T^{-s} chi), same indexing.
    mu: Vec<f64>,
    /// Gram of the (gamma, rho, 0) sector, 2m x 2m, real symmetric.
    block_gram: RMatrix,
    negative_basis: Vec<PontryaginVector>,
    /// Negative basis constrained to rho_m = 0 (even k), or why none exists.
    domain_basis: std::result::Result<Vec<PontryaginVector>, String>,
}

/// Eigenvalues below -REL_NEG_TOL * spectral_radius count as genuinely
/// negative when selecting the negative subspace.
const REL_NEG_TOL: f64 = 1e-10;

impl PontryaginSpace {
    /// Build the space for a model with renormalized parameters g_1..g_k and
    /// coupling alpha (g_1 = -1/alpha enforced).
    pub fn new(model: &SpectralModel, g_targets: &[f64], alpha: f64) -> Result<Self> {
        let k = model.k();
        let m = model.m();
        if g_targets.len() != k {
            return Err(CoreError::InvalidModel(format!(
                "`g_targets` must have length k = {k}, got {}",
                g_targets.len()
            )));
        }
        if alpha == 0.0 {
            return Err(CoreError::InvalidModel(
                "`alpha` = 0 leaves g_1 undefined".into(),
            ));
        }
        let rel = (g_targets[0] + 1.0 / alpha).abs() / (1.0 / alpha.abs()).max(1.0);
        if rel > 1e-9 {
            return Err(CoreError::InvalidModel(format!(
                "`g_targets[0]` = {} must equal -1/alpha = {}",
                g_targets[0],
                -1.0 / alpha
            )));
        }

        let s_max = (3 * m + 2).max(2 * m + 1).max(k + 1);
        let mut g_reg = vec![0.0; s_max + 1];
        let mut mu = vec![0.0; s_max + 1];
        for s in 1..=s_max {
            mu[s] = model.moment(model.amplitudes(), s as u32);
            g_reg[s] = if s <= k { g_targets[s - 1] } else { mu[s] };
        }

        let block_gram = block_gram_from(&g_reg, m);
        let negative_basis = negative_basis_from_block(&block_gram, m, model.dim(), &[])?;
        let domain_basis = if k % 2 == 1 || m == 0 {
            Ok(negative_basis.clone())
        } else {
            negative_basis_from_block(&block_gram, m, model.dim(), &[2 * m - 1])
                .map_err(|e| e.to_string())
        };

        Ok(Self {
            model: model.clone(),
            g_targets: g_targets.to_vec(),
            alpha,
            g_reg,
            mu,
            block_gram,
            negative_basis,
            domain_basis,
        })
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn dim_h(&self) -> usize {
        self.model.dim()
    }

    /// Total dimension 2m + N of the surrogate space.
    pub fn dim(&self) -> usize {
        2 * self.m() + self.dim_h()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g_targets(&self) -> &[f64] {
        &self.g_targets
    }

    /// Regularized moment of order s (targets below k, raw above).
    pub fn g_reg(&self, s: usize) -> f64 {
        self.g_reg[s]
    }

    pub fn g_reg_table(&self) -> &[f64] {
        &self.g_reg
    }

    /// Raw moment (chi, T^{-s} chi) on the surrogate.
    pub fn mu(&self, s: usize) -> f64 {
        self.mu[s]
    }

    /// The indefinite product of the space.
    pub fn indefinite_product(&self, a: &PontryaginVector, b: &PontryaginVector) -> Complex64 {
        assert_eq!(a.m(), self.m(), "vector rank mismatch");
        assert_eq!(a.dim_h(), self.dim_h(), "vector dimension mismatch");
        product_with_g(&self.g_reg, a, b)
    }

    /// Embedding of a singular-plus-regular state with coefficients c_1..c_2m
    /// on the powers T^{-1}chi..T^{-2m}chi and regular part psi_reg.
    pub fn embed(&self, c: &[Complex64], psi_reg: &CVector) -> PontryaginVector {
        let m = self.m();
        assert_eq!(c.len(), 2 * m, "need 2m coefficients");
        assert_eq!(psi_reg.len(), self.dim_h(), "regular part dimension");
        let model = &self.model;
        let chi = model.amplitudes();

        let gamma = CVector::from_fn(m, |j, _| -c[j]);
        let mut rho = CVector::zeros(m);
        for j in 1..=m {
            let mut r = Complex64::default();
            for l in (m + 1)..=(2 * m) {
                r += c[l - 1] * self.g_reg[l + j];
            }
            r += model.weighted_dot(chi, j as u32, psi_reg);
            rho[j - 1] = r;
        }
        let mut phi = psi_reg.clone();
        for l in (m + 1)..=(2 * m) {
            let tl = model.weighted_vector(chi, l as u32);
            for i in 0..phi.len() {
                phi[i] += c[l - 1] * tl[i];
            }
        }
        PontryaginVector { gamma, rho, phi }
    }

    /// Gram matrix of the full space in [gamma, rho, phi] coordinates.
    pub fn gram_matrix(&self) -> RMatrix {
        let m = self.m();
        let n = self.dim_h();
        let mut g = RMatrix::zeros(2 * m + n, 2 * m + n);
        g.view_mut((0, 0), (2 * m, 2 * m))
            .copy_from(&self.block_gram);
        for i in 0..n {
            g[(2 * m + i, 2 * m + i)] = 1.0;
        }
        g
    }

    /// Gram of the (gamma, rho, 0) sector.
    pub fn block_gram(&self) -> &RMatrix {
        &self.block_gram
    }

    /// The chosen maximal negative subspace: m vectors of the form
    /// (gamma, rho, 0) with pairwise products -delta_ij.
    pub fn negative_basis(&self) -> &[PontryaginVector] {
        &self.negative_basis
    }

    /// A negative basis constrained to rho_m = 0. For even k this keeps the
    /// subspace inside the domain hyperplane of the surrogate operator; it
    /// requires g_k < 0 to supply the m-th negative direction. For odd k the
    /// unconstrained basis is returned.
    pub fn negative_basis_in_domain(&self) -> Result<Vec<PontryaginVector>> {
        self.domain_basis
            .clone()
            .map_err(CoreError::InconsistentGram)
    }

    /// A second admissible choice of the negative subspace(s): mix each basis
    /// vector with a seeded random combination of its sector and
    /// re-orthonormalize in the indefinite metric. Errors if the mixing
    /// destroys negativity (choose a small magnitude).
    pub fn with_perturbed_negative_bases(&self, seed: u64, magnitude: f64) -> Result<Self> {
        let mut out = self.clone();
        out.negative_basis = perturb_basis(
            &self.block_gram,
            &self.negative_basis,
            self.m(),
            self.dim_h(),
            &[],
            seed,
            magnitude,
        )?;
        if let Ok(db) = &self.domain_basis {
            let dropped: Vec<usize> = if self.k() % 2 == 0 && self.m() > 0 {
                vec![2 * self.m() - 1]
            } else {
                vec![]
            };
            out.domain_basis = perturb_basis(
                &self.block_gram,
                db,
                self.m(),
                self.dim_h(),
                &dropped,
                seed ^ 0x646f6d,
                magnitude,
            )
            .map_err(|e| e.to_string());
        }
        Ok(out)
    }

    /// Majorant norm induced by the chosen negative subspace:
    /// ||v||^2 = <v, v> + 2 sum_i |<e_i, v>|^2.
    pub fn majorant_norm(&self, v: &PontryaginVector) -> f64 {
        self.majorant_norm_with(&self.negative_basis, v)
    }

    /// Majorant norm for an arbitrary orthonormalized negative basis.
    pub fn majorant_norm_with(&self, basis: &[PontryaginVector], v: &PontryaginVector) -> f64 {
        let mut sq = self.indefinite_product(v, v).re;
        for e in basis {
            sq += 2.0 * self.indefinite_product(e, v).norm_sqr();
        }
        sq.max(0.0).sqrt()
    }

    /// Dense SPD gram of the majorant norm in flat coordinates.
    pub fn majorant_gram(&self) -> RMatrix {
        self.majorant_gram_with(&self.negative_basis)
    }

    pub fn majorant_gram_with(&self, basis: &[PontryaginVector]) -> RMatrix {
        let g = self.gram_matrix();
        let mut s = g.clone();
        for e in basis {
            let ec = e.coords();
            // basis vectors are real-coefficient by construction
            let er = RVector::from_iterator(ec.len(), ec.iter().map(|x| x.re));
            let ge = &g * &er;
            s += (&ge * ge.transpose()).scale(2.0);
        }
        s
    }
}

/// Gram of the (gamma, rho) sector: gamma-gamma entries are the regularized
/// moments g_{s+u}, the gamma-rho pairing is -identity.
fn block_gram_from(g_reg: &[f64], m: usize) -> RMatrix {
    let mut b = RMatrix::zeros(2 * m, 2 * m);
    for s in 1..=m {
        for u in 1..=m {
            b[(s - 1, u - 1)] = g_reg[s + u];
        }
        b[(s - 1, m + s - 1)] = -1.0;
        b[(m + s - 1, s - 1)] = -1.0;
    }
    b
}

/// Negative squares of a Hermitian gram via its eigenvalues, with the
/// congruence-reduction count available as a cross oracle in `linalg`.
pub fn negative_squares(gram: &CMatrix) -> Result<usize> {
    Ok(linalg::inertia_eigen(gram, REL_NEG_TOL)?.0)
}

/// Pick the m most negative eigendirections of the block gram (optionally
/// with some coordinates pinned to zero), then orthonormalize in the
/// indefinite metric so that <e_i, e_j> = -delta_ij.
fn negative_basis_from_block(
    block: &RMatrix,
    m: usize,
    dim_h: usize,
    dropped: &[usize],
) -> Result<Vec<PontryaginVector>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let keep: Vec<usize> = (0..2 * m).filter(|i| !dropped.contains(i)).collect();
    let sub = RMatrix::from_fn(keep.len(), keep.len(), |i, j| block[(keep[i], keep[j])]);
    let eig = nalgebra::SymmetricEigen::new(sub.clone());
    let radius = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = REL_NEG_TOL * radius.max(f64::MIN_POSITIVE);

    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let negatives: Vec<usize> = order
        .into_iter()
        .take(m)
        .filter(|&i| eig.eigenvalues[i] < -tol)
        .collect();
    if negatives.len() < m {
        return Err(CoreError::InconsistentGram(format!(
            "found only {} of {m} negative directions in the block gram",
            negatives.len()
        )));
    }

    // Raw candidates in full block coordinates.
    let mut raw: Vec<RVector> = Vec::with_capacity(m);
    for &i in &negatives {
        let mut v = RVector::zeros(2 * m);
        for (r, &orig) in keep.iter().enumerate() {
            v[orig] = eig.eigenvectors[(r, i)];
        }
        raw.push(v);
    }

    // Gram-Schmidt in the indefinite block metric, normalizing to <e,e> = -1.
    let prod = |a: &RVector, b: &RVector| (a.transpose() * block * b)[(0, 0)];
    let mut basis_block: Vec<RVector> = Vec::with_capacity(m);
    for mut v in raw {
        for e in &basis_block {
            let c = prod(e, &v); // <e, v> with <e,e> = -1
            v += e.scale(c);
        }
        let p = prod(&v, &v);
        if p >= -tol {
            return Err(CoreError::InconsistentGram(format!(
                "negative-subspace candidate degenerated (product {p:.3e})"
            )));
        }
        basis_block.push(v.scale(1.0 / (-p).sqrt()));
    }

    Ok(basis_block
        .into_iter()
        .map(|v| PontryaginVector {
            gamma: CVector::from_fn(m, |i, _| cr(v[i])),
            rho: CVector::from_fn(m, |i, _| cr(v[m + i])),
            phi: CVector::zeros(dim_h),
        })
        .collect())
}

/// Mix an orthonormalized negative basis with a random rotation of its
/// sector (keeping dropped coordinates at zero) and re-run the indefinite
/// Gram-Schmidt. Yields a different admissible subspace choice.
fn perturb_basis(
    block: &RMatrix,
    basis: &[PontryaginVector],
    m: usize,
    dim_h: usize,
    dropped: &[usize],
    seed: u64,
    magnitude: f64,
) -> Result<Vec<PontryaginVector>> {
    use rand::{Rng, SeedableRng};
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let prod = |a: &RVector, b: &RVector| (a.transpose() * block * b)[(0, 0)];

    let mut mixed: Vec<RVector> = Vec::with_capacity(basis.len());
    for e in basis {
        let mut v = RVector::zeros(2 * m);
        for i in 0..m {
            v[i] = e.gamma[i].re;
            v[m + i] = e.rho[i].re;
        }
        // mix inside the span of the basis plus a small sector component
        for other in basis {
            let c = magnitude * (rng.random::<f64>() - 0.5);
            for i in 0..m {
                v[i] += c * other.gamma[i].re;
                v[m + i] += c * other.rho[i].re;
            }
        }
        for i in 0..2 * m {
            if !dropped.contains(&i) {
                v[i] += 0.1 * magnitude * (rng.random::<f64>() - 0.5);
            }
        }
        mixed.push(v);
    }

    let mut ortho: Vec<RVector> = Vec::with_capacity(basis.len());
    for mut v in mixed {
        for e in &ortho {
            let c = prod(e, &v);
            v += e.scale(c);
        }
        let p = prod(&v, &v);
        if p >= -1e-10 {
            return Err(CoreError::InconsistentGram(format!(
                "perturbed subspace lost negativity (product {p:.3e})"
            )));
        }
        ortho.push(v.scale(1.0 / (-p).sqrt()));
    }
    Ok(ortho
        .into_iter()
        .map(|v| PontryaginVector {
            gamma: CVector::from_fn(m, |i, _| cr(v[i])),
            rho: CVector::from_fn(m, |i, _| cr(v[m + i])),
            phi: CVector::zeros(dim_h),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_model, ModelConfig};
    use approx::assert_abs_diff_eq;

    fn space_k2(g2: f64) -> PontryaginSpace {
        let model = build_model(&ModelConfig {
            eigenvalues: Some(vec![1.0, 2.0, 4.0]),
            amplitudes: Some(vec![1.0, 1.0, 0.5]),
            k: Some(2),
            ..Default::default()
        })
        .unwrap();
        PontryaginSpace::new(&model, &[-1.0, g2], 1.0).unwrap()
    }

    #[test]
    fn product_pure_regular_part() {
        let sp = space_k2(0.0);
        let mut v = PontryaginVector::zero(1, 3);
        v.phi[0] = cr(2.0);
        v.phi[2] = Complex64::new(0.0, 1.0);
        let p = sp.indefinite_product(&v, &v);
        assert_abs_diff_eq!(p.re, 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn product_gamma_square_uses_g2() {
        let sp = space_k2(0.5);
        let mut v = PontryaginVector::zero(1, 3);
        v.gamma[0] = cr(1.0);
        assert_abs_diff_eq!(sp.indefinite_product(&v, &v).re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn product_gamma_rho_cross_term() {
        let sp = space_k2(0.0);
        let mut v = PontryaginVector::zero(1, 3);
        v.gamma[0] = cr(1.0);
        v.rho[0] = cr(1.0);
        assert_abs_diff_eq!(sp.indefinite_product(&v, &v).re, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn product_hermitian_symmetry() {
        use rand::{Rng, SeedableRng};
        let sp = space_k2(0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut rnd = |m: usize, n: usize| {
            let mut v = PontryaginVector::zero(m, n);
            for x in v
                .gamma
                .iter_mut()
                .chain(v.rho.iter_mut())
                .chain(v.phi.iter_mut())
            {
                *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            v
        };
        for _ in 0..20 {
            let a = rnd(1, 3);
            let b = rnd(1, 3);
            let ab = sp.indefinite_product(&a, &b);
            let ba = sp.indefinite_product(&b, &a);
            assert_abs_diff_eq!(ab.re, ba.re, epsilon = 1e-13);
            assert_abs_diff_eq!(ab.im, -ba.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn embed_zero_coefficients_is_identity_on_regular_part() {
        // With all coefficients zero the phi part is untouched and the rho
        // entries carry the moment pairing (T^-j chi, psi_reg); dropping that
        // pairing would break the isometry of the embedding against vectors
        // with nonzero gamma.
        let sp = space_k2(0.0);
        let psi = CVector::from_vec(vec![cr(1.0), cr(-2.0), cr(0.5)]);
        let v = sp.embed(&[Complex64::default(); 2], &psi);
        assert_eq!(v.gamma[0], Complex64::default());
        let expect = sp.model().weighted_dot(sp.model().amplitudes(), 1, &psi);
        assert_abs_diff_eq!(v.rho[0].re, expect.re, epsilon = 1e-14);
        assert_eq!(v.phi, psi);

        // And it vanishes when psi_reg is orthogonal to the weighted chi.
        let t1chi = sp.model().weighted_vector(sp.model().amplitudes(), 1);
        let mut psi_perp = CVector::zeros(3);
        psi_perp[0] = cr(t1chi[1]);
        psi_perp[1] = cr(-t1chi[0]);
        let w = sp.embed(&[Complex64::default(); 2], &psi_perp);
        assert_abs_diff_eq!(w.rho[0].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_first_coefficient_flips_sign() {
        let sp = space_k2(0.0);
        let psi = CVector::zeros(3);
        let v = sp.embed(&[cr(1.0), Complex64::default()], &psi);
        assert_abs_diff_eq!(v.gamma[0].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.rho[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.phi.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn embed_second_coefficient_produces_moment_row() {
        let sp = space_k2(0.0);
        let psi = CVector::zeros(3);
        let v = sp.embed(&[Complex64::default(), cr(1.0)], &psi);
        assert_abs_diff_eq!(v.gamma[0].norm(), 0.0, epsilon = 1e-15);
        // rho_1 = regularized third moment; k = 2 so this is the raw one
        assert_abs_diff_eq!(v.rho[0].re, sp.mu(3), epsilon = 1e-14);
        let t2chi = sp.model().weighted_vector(sp.model().amplitudes(), 2);
        for i in 0..3 {
            assert_abs_diff_eq!(v.phi[i].re, t2chi[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn embed_is_linear() {
        use rand::{Rng, SeedableRng};
        let sp = space_k2(0.25);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut rc = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let c1 = [rc(), rc()];
        let c2 = [rc(), rc()];
        let p1 = CVector::from_fn(3, |_, _| rc());
        let p2 = CVector::from_fn(3, |_, _| rc());
        let a = rc();
        let lhs = sp.embed(
            &[c1[0] + a * c2[0], c1[1] + a * c2[1]],
            &(&p1 + p2.map(|x| x * a)),
        );
        let rhs = sp.embed(&c1, &p1).add(&sp.embed(&c2, &p2).scale(a));
        assert!(lhs.sub(&rhs).norm1() < 1e-13);
    }

    #[test]
    fn negative_subspace_normalized() {
        for g2 in [0.0, 0.5, -1.0, 3.0] {
            let sp = space_k2(g2);
            let basis = sp.negative_basis();
            assert_eq!(basis.len(), 1);
            let e = &basis[0];
            assert_abs_diff_eq!(sp.indefinite_product(e, e).re, -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.phi.norm(), 0.0);
        }
    }

    #[test]
    fn block_gram_has_m_negatives_for_any_g() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for k in [2usize, 3, 4, 5] {
            let m = k / 2;
            for _ in 0..20 {
                let mut g = vec![0.0; 3 * m + 3];
                for s in 2..g.len() {
                    g[s] = rng.random::<f64>() * 4.0 - 2.0;
                }
                let block = block_gram_from(&g, m);
                let counts = linalg::inertia_eigen(&linalg::complexify(&block), 1e-10).unwrap();
                assert_eq!(counts.0, m, "k = {k}: block gram negatives");
                assert_eq!(counts.2, m, "k = {k}: block gram positives");
            }
        }
    }

    #[test]
    fn domain_basis_even_k_has_zero_last_rho() {
        let sp = space_k2(-1.0);
        let basis = sp.negative_basis_in_domain().unwrap();
        assert_eq!(basis.len(), 1);
        let e = &basis[0];
        assert_abs_diff_eq!(e.rho[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.indefinite_product(e, e).re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn domain_basis_even_k_needs_negative_gk() {
        let sp = space_k2(0.0);
        assert!(sp.negative_basis_in_domain().is_err());
    }

    #[test]
    fn majorant_flips_negative_directions() {
        let sp = space_k2(0.0);
        let e = sp.negative_basis()[0].clone();
        let n = sp.majorant_norm(&e);
        assert_abs_diff_eq!(n * n, 1.0, epsilon = 1e-12);
        // regular part orthogonal to the block: plain norm
        let mut v = PontryaginVector::zero(1, 3);
        v.phi[1] = cr(3.0);
        assert_abs_diff_eq!(sp.majorant_norm(&v), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn majorant_dominates_indefinite_product() {
        use rand::{Rng, SeedableRng};
        let sp = space_k2(0.7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let mut v = PontryaginVector::zero(1, 3);
            for x in v
                .gamma
                .iter_mut()
                .chain(v.rho.iter_mut())
                .chain(v.phi.iter_mut())
            {
                *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let maj = sp.majorant_norm(&v);
            let ip = sp.indefinite_product(&v, &v).re.abs();
            assert!(maj * maj + 1e-12 >= ip, "majorant {maj} vs product {ip}");
        }
    }

    #[test]
    fn majorant_gram_matches_norm() {
        use rand::{Rng, SeedableRng};
        let sp = space_k2(0.4);
        let s = sp.majorant_gram();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let mut v = PontryaginVector::zero(1, 3);
            for x in v
                .gamma
                .iter_mut()
                .chain(v.rho.iter_mut())
                .chain(v.phi.iter_mut())
            {
                *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let c = v.coords();
            let via_gram = (c.adjoint() * linalg::complexify(&s) * &c)[(0, 0)].re;
            let direct = sp.majorant_norm(&v).powi(2);
            assert_abs_diff_eq!(via_gram, direct, epsilon = 1e-11);
        }
    }

    #[test]
    fn norm1_examples() {
        let v = PontryaginVector::zero(1, 2);
        assert_abs_diff_eq!(v.norm1(), 0.0);
        let mut w = PontryaginVector::zero(1, 2);
        w.gamma[0] = cr(2.0);
        w.rho[0] = cr(-3.0);
        w.phi[0] = cr(1.0);
        assert_abs_diff_eq!(w.norm1(), 3.0, epsilon = 1e-15);
    }
}
