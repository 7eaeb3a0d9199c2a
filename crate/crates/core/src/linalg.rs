//! Dense linear-algebra helpers: inertia counts, matrix exponentials,
//! cosine families and gram-weighted operator norms.
//!
//! Everything here is desk scale (dimensions in the hundreds), so dense
//! factorizations are used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Shorthand for a purely real complex scalar.
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Promote a real matrix to a complex one.
pub fn complexify(a: &RMatrix) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| cr(a[(i, j)]))
}

/// Inertia (negative, zero, positive eigenvalue counts) of a Hermitian matrix,
/// computed from its eigenvalues. Eigenvalues with |mu| <= rel_tol * radius
/// count as zero, where radius is the spectral radius.
pub fn inertia_eigen(gram: &CMatrix, rel_tol: f64) -> Result<(usize, usize, usize)> {
    check_hermitian(gram)?;
    if gram.nrows() == 0 {
        return Ok((0, 0, 0));
    }
    let sym = (gram + gram.adjoint()).scale(0.5);
    let eigs = nalgebra::SymmetricEigen::new(sym).eigenvalues;
    let radius = eigs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = rel_tol * radius.max(f64::MIN_POSITIVE);
    let mut counts = (0usize, 0usize, 0usize);
    for &mu in eigs.iter() {
        if mu < -tol {
            counts.0 += 1;
        } else if mu > tol {
            counts.2 += 1;
        } else {
            counts.1 += 1;
        }
    }
    Ok(counts)
}

/// Inertia of a Hermitian matrix via congruence reduction (completion of
/// squares). Serves as an eigenvalue-free cross oracle for `inertia_eigen`.
///
/// At each step either a dominant diagonal pivot contributes one square of its
/// sign, or a dominant off-diagonal pair with negligible diagonal contributes
/// one positive and one negative square (a hyperbolic pair); the pivot block is
/// then eliminated by a Schur complement. Sylvester's law of inertia keeps the
/// counts invariant under these congruences.
pub fn inertia_reduction(gram: &CMatrix, rel_tol: f64) -> Result<(usize, usize, usize)> {
    check_hermitian(gram)?;
    let mut m = (gram + gram.adjoint()).scale(0.5);
    let n = m.nrows();
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut alive: Vec<usize> = (0..n).collect();
    let mut neg = 0usize;
    let mut pos = 0usize;

    while !alive.is_empty() {
        // Largest diagonal and largest off-diagonal among the remaining block.
        let (pd, dmax) = alive
            .iter()
            .map(|&i| (i, m[(i, i)].re.abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let mut od = (0usize, 0usize, 0.0f64);
        for (a, &i) in alive.iter().enumerate() {
            for &j in alive.iter().skip(a + 1) {
                let v = m[(i, j)].norm();
                if v > od.2 {
                    od = (i, j, v);
                }
            }
        }

        if dmax <= tol && od.2 <= tol {
            // Remaining block is numerically zero.
            break;
        }

        if dmax >= od.2 {
            // Diagonal pivot: one square of sign(m[pd,pd]).
            let piv = m[(pd, pd)].re;
            if piv < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
            alive.retain(|&i| i != pd);
            for &i in &alive {
                for &j in &alive {
                    let upd = m[(i, pd)] * m[(pd, j)] / cr(piv);
                    m[(i, j)] -= upd;
                }
            }
        } else {
            // Hyperbolic pivot on (p, q): the 2x2 block has negative
            // determinant, hence exactly one positive and one negative square.
            let (p, q, _) = od;
            let app = m[(p, p)];
            let aqq = m[(q, q)];
            let apq = m[(p, q)];
            let det = (app * aqq - apq * apq.conj()).re;
            if det >= 0.0 {
                return Err(CoreError::InconsistentGram(format!(
                    "hyperbolic pivot with nonnegative determinant {det:.3e}"
                )));
            }
            neg += 1;
            pos += 1;
            alive.retain(|&i| i != p && i != q);
            // Schur complement with the exact 2x2 inverse.
            let inv = [
                [aqq / cr(det), -apq / cr(det)],
                [-apq.conj() / cr(det), app / cr(det)],
            ];
            for &i in &alive {
                let bi = [m[(i, p)], m[(i, q)]];
                for &j in &alive {
                    let cj = [m[(p, j)], m[(q, j)]];
                    let upd = bi[0] * (inv[0][0] * cj[0] + inv[0][1] * cj[1])
                        + bi[1] * (inv[1][0] * cj[0] + inv[1][1] * cj[1]);
                    m[(i, j)] -= upd;
                }
            }
        }
    }

    let zero = n - neg - pos;
    Ok((neg, zero, pos))
}

fn check_hermitian(gram: &CMatrix) -> Result<()> {
    if gram.nrows() != gram.ncols() {
        return Err(CoreError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let scale = gram.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let defect = (gram - gram.adjoint()).norm();
    if defect > 1e-10 * scale.max(1.0) {
        return Err(CoreError::NotHermitian { defect });
    }
    Ok(())
}

/// Matrix exponential of a complex matrix, with a finiteness guard.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let e = a.clone().exp();
    if e.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Ok(e)
    } else {
        Err(CoreError::NumericOverflow(
            "matrix exponential produced non-finite entries".into(),
        ))
    }
}

/// Matrix exponential of a real matrix.
pub fn expm_real(a: &RMatrix) -> Result<RMatrix> {
    let e = a.clone().exp();
    if e.iter().all(|x| x.is_finite()) {
        Ok(e)
    } else {
        Err(CoreError::NumericOverflow(
            "matrix exponential produced non-finite entries".into(),
        ))
    }
}

/// Cosine family (V(t), W(t)) of the second-order problem -y'' = A y, i.e.
/// V(t) = cos(sqrt(A) t) and W(t) = sin(sqrt(A) t)/sqrt(A), both entire
/// functions of A. Evaluated by a Taylor series in B = t^2 A after scaling,
/// then recovered through the double-angle recurrences
/// V(2s) = 2 V(s)^2 - I and W(2s) = 2 V(s) W(s).
///
/// No square root of A is taken, so the formulas are valid for any spectrum
/// and any (non)diagonalizable A.
pub fn cosine_family(a: &RMatrix, t: f64) -> Result<(RMatrix, RMatrix)> {
    let n = a.nrows();
    let b = a.scale(t * t);
    let norm = b.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) * n as f64;
    let s = if norm > 0.25 {
        ((norm / 0.25).log2() / 2.0).ceil().max(0.0) as u32
    } else {
        0
    };
    let bs = b.scale(0.25f64.powi(s as i32));

    // cos-like and sinc-like Taylor sums in bs; ||bs|| <= 0.25 makes 16 terms
    // far more than machine precision.
    let id = RMatrix::identity(n, n);
    let mut v = id.clone();
    let mut w = id.clone();
    let mut term = id.clone();
    for j in 1..=16usize {
        term = (&term * &bs).scale(-1.0);
        let tj = 2 * j;
        let fact_v = ((tj - 1) * tj) as f64;
        term /= fact_v;
        v += &term;
        w += term.scale(1.0 / (tj + 1) as f64);
    }
    let mut w = w.scale(t / 2f64.powi(s as i32));
    for _ in 0..s {
        let v2 = (&v * &v).scale(2.0) - &id;
        w = (&v * &w).scale(2.0);
        v = v2;
    }
    if v.iter().chain(w.iter()).all(|x| x.is_finite()) {
        Ok((v, w))
    } else {
        Err(CoreError::NumericOverflow(
            "cosine family produced non-finite entries".into(),
        ))
    }
}

/// Dense inverse through LU with a singularity error.
pub fn invert(a: &CMatrix, what: &str) -> Result<CMatrix> {
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| CoreError::SingularMatrix(what.into()))
}

pub fn invert_real(a: &RMatrix, what: &str) -> Result<RMatrix> {
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| CoreError::SingularMatrix(what.into()))
}

/// Largest singular value.
pub fn opnorm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values[0]
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt_pair(s: &RMatrix) -> Result<(RMatrix, RMatrix)> {
    let eig = nalgebra::SymmetricEigen::new(s.clone());
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(CoreError::InconsistentGram(format!(
            "gram matrix not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    let q = &eig.eigenvectors;
    let half = q * RMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * q.transpose();
    let inv_half =
        q * RMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt())) * q.transpose();
    Ok((half, inv_half))
}

/// Operator norm of `a` in the inner product defined by the SPD gram `s`,
/// i.e. the 2-norm of s^{1/2} a s^{-1/2}.
pub fn opnorm_weighted(a: &CMatrix, s: &RMatrix) -> Result<f64> {
    let (half, inv_half) = spd_sqrt_pair(s)?;
    let m = complexify(&half) * a * complexify(&inv_half);
    Ok(opnorm(&m))
}

/// Fixed-step RK4 integration of y' = f(t, y) on [0, t_end].
pub fn rk4_integrate<F>(f: F, y0: &CVector, t_end: f64, steps: usize) -> CVector
where
    F: Fn(f64, &CVector) -> CVector,
{
    let h = t_end / steps as f64;
    let mut y = y0.clone();
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &(&y + k1.scale(0.5 * h)));
        let k3 = f(t + 0.5 * h, &(&y + k2.scale(0.5 * h)));
        let k4 = f(t + h, &(&y + k3.scale(h)));
        y += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        t += h;
    }
    y
}

/// Least-squares slope of log(y) against log(x), skipping entries below the
/// floor. Returns None when fewer than two usable points remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > floor)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cm(rows: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_fn(rows, rows, |i, j| cr(data[i * rows + j]))
    }

    #[test]
    fn inertia_matches_on_diagonal() {
        let g = cm(3, &[-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0]);
        assert_eq!(inertia_eigen(&g, 1e-10).unwrap(), (1, 1, 1));
        assert_eq!(inertia_reduction(&g, 1e-10).unwrap(), (1, 1, 1));
    }

    #[test]
    fn inertia_hyperbolic_pair() {
        // [[0, 1], [1, 0]] has eigenvalues +-1.
        let g = cm(2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(inertia_eigen(&g, 1e-10).unwrap(), (1, 0, 1));
        assert_eq!(inertia_reduction(&g, 1e-10).unwrap(), (1, 0, 1));
    }

    #[test]
    fn inertia_random_agreement() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 5, 8] {
            for _ in 0..50 {
                let mut g = CMatrix::zeros(dim, dim);
                for i in 0..dim {
                    for j in i..dim {
                        let re = rng.random::<f64>() * 2.0 - 1.0;
                        let im = if i == j {
                            0.0
                        } else {
                            rng.random::<f64>() * 2.0 - 1.0
                        };
                        g[(i, j)] = Complex64::new(re, im);
                        g[(j, i)] = Complex64::new(re, -im);
                    }
                }
                let a = inertia_eigen(&g, 1e-10).unwrap();
                let b = inertia_reduction(&g, 1e-10).unwrap();
                assert_eq!(a, b, "inertia mismatch for {g}");
            }
        }
    }

    #[test]
    fn inertia_rejects_non_hermitian() {
        let g = cm(2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(
            inertia_eigen(&g, 1e-10),
            Err(CoreError::NotHermitian { .. })
        ));
    }

    #[test]
    fn cosine_family_scalar() {
        let a = RMatrix::from_element(1, 1, 4.0); // omega^2 = 4
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let (v, w) = cosine_family(&a, t).unwrap();
            assert_abs_diff_eq!(v[(0, 0)], (2.0 * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(w[(0, 0)], (2.0 * t).sin() / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cosine_family_trig_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let a = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let (v, w) = cosine_family(&a, 0.8).unwrap();
        // V^2 + A W^2 = I for any A.
        let res = (&v * &v + &a * &w * &w - RMatrix::identity(n, n)).norm();
        assert!(res < 1e-11, "identity residual {res}");
    }

    #[test]
    fn cosine_family_matches_block_exponential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let a = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let t = 0.7;
        let mut blk = RMatrix::zeros(2 * n, 2 * n);
        blk.view_mut((0, n), (n, n))
            .copy_from(&RMatrix::identity(n, n));
        blk.view_mut((n, 0), (n, n)).copy_from(&(-a.clone()));
        let e = expm_real(&blk.scale(t)).unwrap();
        let (v, w) = cosine_family(&a, t).unwrap();
        assert!((e.view((0, 0), (n, n)) - &v).norm() < 1e-11);
        assert!((e.view((0, n), (n, n)) - &w).norm() < 1e-11);
    }

    #[test]
    fn rk4_matches_exponential() {
        let a = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(-1.0), cr(0.0)]);
        let y0 = CVector::from_vec(vec![cr(1.0), cr(0.0)]);
        let y = rk4_integrate(|_, y| &a * y, &y0, 1.0, 2000);
        assert_abs_diff_eq!(y[0].re, 1.0f64.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(y[1].re, -(1.0f64.sin()), epsilon = 1e-10);
    }

    #[test]
    fn weighted_opnorm_identity_gram_is_plain() {
        let a = cm(2, &[1.0, 2.0, 0.0, 1.0]);
        let s = RMatrix::identity(2, 2);
        assert_abs_diff_eq!(
            opnorm_weighted(&a, &s).unwrap(),
            opnorm(&a),
            epsilon = 1e-12
        );
    }
}
