//! Finite spectral surrogate of the Hilbert scale: the diagonal operator T,
//! the singular vector chi, its mollified family chi_n and the counterterms.
//!
//! The surrogate keeps one fixed ambient dimension for all regularization
//! indices n; strong singularity (divergence of the k-th negative moment) is
//! emulated by a heavy coefficient tail and demonstrated as a trend over the
//! ambient dimension rather than asserted.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{CVector, RVector};

/// Diagonal surrogate of (T, chi): eigenvalues of T (ascending, positive),
/// the coefficients of chi in the eigenbasis, and the singularity order k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    eigenvalues: Vec<f64>,
    amplitudes: Vec<f64>,
    k: usize,
    a_shift: f64,
}

/// Configuration for [`build_model`]. Either explicit `eigenvalues` and
/// `amplitudes` are given, or a generator law: lambda_j = a_shift + j^p with
/// p = `growth_exponent` (default 2/d) and x_j = amplitude_scale * j^q with
/// q = `amplitude_exponent` (default 0, the flat profile).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub a_shift: f64,
    #[serde(default)]
    pub growth_exponent: Option<f64>,
    #[serde(default)]
    pub amplitude_exponent: f64,
    #[serde(default = "default_one")]
    pub amplitude_scale: f64,
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
}

fn default_one() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: None,
            k: None,
            d: None,
            a_shift: 0.0,
            growth_exponent: None,
            amplitude_exponent: 0.0,
            amplitude_scale: 1.0,
            eigenvalues: None,
            amplitudes: None,
        }
    }
}

/// Build a validated [`SpectralModel`] from a configuration.
///
/// The singularity order is taken from `k` directly or from the spatial
/// dimension through k = floor(d/2); when both are present they must agree.
pub fn build_model(cfg: &ModelConfig) -> Result<SpectralModel> {
    let k = match (cfg.k, cfg.d) {
        (Some(k), None) => k,
        (None, Some(d)) => d / 2,
        (Some(k), Some(d)) => {
            if k != d / 2 {
                return Err(CoreError::InvalidModel(format!(
                    "key `k` = {k} conflicts with `d` = {d} (floor(d/2) = {})",
                    d / 2
                )));
            }
            k
        }
        (None, None) => {
            return Err(CoreError::InvalidModel(
                "one of the keys `k` or `d` is required".into(),
            ))
        }
    };
    if k == 0 {
        return Err(CoreError::InvalidModel(
            "key `k` must be at least 1 (got 0)".into(),
        ));
    }

    let (eigenvalues, amplitudes) = match (&cfg.eigenvalues, &cfg.amplitudes) {
        (Some(ev), Some(am)) => {
            if ev.len() != am.len() {
                return Err(CoreError::InvalidModel(format!(
                    "`eigenvalues` has length {} but `amplitudes` has length {}",
                    ev.len(),
                    am.len()
                )));
            }
            if let Some(dim) = cfg.dim {
                if dim != ev.len() {
                    return Err(CoreError::InvalidModel(format!(
                        "key `dim` = {dim} conflicts with explicit lists of length {}",
                        ev.len()
                    )));
                }
            }
            (ev.clone(), am.clone())
        }
        (None, None) => {
            let dim = cfg.dim.ok_or_else(|| {
                CoreError::InvalidModel("key `dim` is required for a generated model".into())
            })?;
            let p = match (cfg.growth_exponent, cfg.d) {
                (Some(p), _) => p,
                (None, Some(d)) => 2.0 / d as f64,
                (None, None) => {
                    return Err(CoreError::InvalidModel(
                        "key `growth_exponent` is required when `d` is not given".into(),
                    ))
                }
            };
            let ev: Vec<f64> = (1..=dim)
                .map(|j| cfg.a_shift + (j as f64).powf(p))
                .collect();
            let am: Vec<f64> = (1..=dim)
                .map(|j| cfg.amplitude_scale * (j as f64).powf(cfg.amplitude_exponent))
                .collect();
            (ev, am)
        }
        _ => {
            return Err(CoreError::InvalidModel(
                "`eigenvalues` and `amplitudes` must be given together".into(),
            ))
        }
    };

    if eigenvalues.is_empty() {
        return Err(CoreError::InvalidModel("model dimension is zero".into()));
    }
    for (j, &l) in eigenvalues.iter().enumerate() {
        if l <= 0.0 || !l.is_finite() {
            return Err(CoreError::InvalidModel(format!(
                "eigenvalue {l} at position {j} is not strictly positive"
            )));
        }
        if j > 0 && l < eigenvalues[j - 1] {
            return Err(CoreError::InvalidModel(format!(
                "eigenvalues must be nondecreasing (position {j})"
            )));
        }
    }
    if amplitudes.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::InvalidModel("amplitudes must be finite".into()));
    }

    Ok(SpectralModel {
        eigenvalues,
        amplitudes,
        k,
        a_shift: cfg.a_shift,
    })
}

impl SpectralModel {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of negative squares m = floor(k/2).
    pub fn m(&self) -> usize {
        self.k / 2
    }

    pub fn a_shift(&self) -> f64 {
        self.a_shift
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Raw negative moment (chi, T^{-s} chi) = sum_j chi_j^2 / lambda_j^s
    /// for an arbitrary real coefficient vector.
    pub fn moment(&self, chi: &[f64], s: u32) -> f64 {
        chi.iter()
            .zip(&self.eigenvalues)
            .map(|(&x, &l)| x * x / l.powi(s as i32))
            .sum()
    }

    /// (T^{-p} a, v) for a real coefficient vector a and complex v, antilinear
    /// in the first slot (a is real so conjugation is trivial).
    pub fn weighted_dot(&self, a: &[f64], p: u32, v: &CVector) -> num_complex::Complex64 {
        a.iter()
            .zip(&self.eigenvalues)
            .zip(v.iter())
            .map(|((&x, &l), &vi)| vi * (x / l.powi(p as i32)))
            .sum()
    }

    /// The real vector T^{-p} a.
    pub fn weighted_vector(&self, a: &[f64], p: u32) -> RVector {
        RVector::from_iterator(
            self.dim(),
            a.iter()
                .zip(&self.eigenvalues)
                .map(|(&x, &l)| x / l.powi(p as i32)),
        )
    }

    /// Mollified coefficients chi_n = exp(-T/n) chi.
    pub fn regularize(&self, n: u32) -> Vec<f64> {
        assert!(n >= 1, "regularization index must be at least 1");
        let nf = n as f64;
        self.amplitudes
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&x, &l)| x * (-l / nf).exp())
            .collect()
    }

    /// Exact-cancellation counterterms: z_{l-1} = g_l - (chi_n, T^{-l} chi_n)
    /// for l = 1..=k, so the renormalized moments hit their targets exactly.
    pub fn counterterms(&self, chi_n: &[f64], g_targets: &[f64]) -> Vec<f64> {
        assert_eq!(g_targets.len(), self.k, "need one target per order");
        (1..=self.k)
            .map(|l| g_targets[l - 1] - self.moment(chi_n, l as u32))
            .collect()
    }
}

/// Counterterm scheme: `Exact` cancels to the targets with zero defect;
/// `Noisy` adds a deterministic O(1/n) perturbation to exercise robustness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "scheme")]
pub enum CountertermScheme {
    #[default]
    Exact,
    Noisy {
        amplitude: f64,
    },
}

/// Per-index-n data: the mollified vector chi_n, counterterms z_{0..k-1},
/// the targets g_1..g_k, the coupling parameter alpha and the renormalized
/// moments g_l^(n) = (chi_n, T^{-l} chi_n) + z_{l-1} for l = 1..=2m+1.
#[derive(Debug, Clone)]
pub struct RegularizedFamily {
    pub n: u32,
    pub chi_n: Vec<f64>,
    pub z: Vec<f64>,
    pub g_targets: Vec<f64>,
    pub alpha: f64,
    pub g_n_moments: Vec<f64>,
}

impl RegularizedFamily {
    /// Build the family member at index n. With the exact scheme the
    /// renormalized moments equal the targets for every n; the noisy scheme
    /// perturbs each counterterm by amplitude * u_l / n with u_l drawn from a
    /// seeded generator.
    pub fn build(
        model: &SpectralModel,
        n: u32,
        g_targets: &[f64],
        alpha: f64,
        scheme: CountertermScheme,
        seed: u64,
    ) -> Result<Self> {
        let k = model.k();
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

        let chi_n = model.regularize(n);
        let mut z = model.counterterms(&chi_n, g_targets);
        if let CountertermScheme::Noisy { amplitude } = scheme {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x636f756e74657274);
            for zl in z.iter_mut() {
                let u = rng.random::<f64>() * 2.0 - 1.0;
                *zl += amplitude * u / n as f64;
            }
        }

        let m = model.m();
        let g_n_moments = (1..=2 * m + 1)
            .map(|l| model.moment(&chi_n, l as u32) + if l <= k { z[l - 1] } else { 0.0 })
            .collect();

        Ok(RegularizedFamily {
            n,
            chi_n,
            z,
            g_targets: g_targets.to_vec(),
            alpha,
            g_n_moments,
        })
    }

    /// z_l with the convention z_l = 0 for l >= k.
    pub fn z_eff(&self, l: usize) -> f64 {
        self.z.get(l).copied().unwrap_or(0.0)
    }
}

/// One row of the singularity-trend report: ambient dimension and the norm
/// ||T^{-k/2} chi|| on that surrogate.
#[derive(Debug, Clone, Serialize)]
pub struct SingularTrendRow {
    pub dim: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularTrendReport {
    pub rows: Vec<SingularTrendRow>,
    pub monotone: bool,
    pub growth_ratio: f64,
    /// True when the partial sums keep growing across the family, i.e. the
    /// emulated k-th negative moment behaves like a divergent series.
    pub strongly_singular: bool,
}

/// Minimum growth of ||T^{-k/2} chi|| across the ambient-dimension family for
/// the surrogate to count as strongly singular. A convergent tail saturates
/// (ratio near 1); a divergent one keeps climbing.
pub const SINGULAR_TREND_MIN_GROWTH: f64 = 1.1;

/// Inspect a family of surrogates with growing ambient dimension and decide
/// whether the k-th negative moment shows the divergence trend.
pub fn verify_singular_trend(models: &[SpectralModel]) -> Result<SingularTrendReport> {
    if models.is_empty() {
        return Err(CoreError::InvalidModel(
            "singular-trend check needs at least one model".into(),
        ));
    }
    let k = models[0].k();
    if models.iter().any(|m| m.k() != k) {
        return Err(CoreError::InvalidModel(
            "all models in the family must share the same k".into(),
        ));
    }
    let rows: Vec<SingularTrendRow> = models
        .iter()
        .map(|m| SingularTrendRow {
            dim: m.dim(),
            norm: m.moment(m.amplitudes(), k as u32).sqrt(),
        })
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].norm > w[0].norm * (1.0 + 1e-14))
        && rows.len() > 1;
    let growth_ratio =
        rows.last().unwrap().norm / rows.first().unwrap().norm.max(f64::MIN_POSITIVE);
    Ok(SingularTrendReport {
        monotone,
        growth_ratio,
        strongly_singular: monotone && growth_ratio >= SINGULAR_TREND_MIN_GROWTH,
        rows,
    })
}

/// Convenience: the family of truncations of one law to increasing dimensions.
pub fn truncation_family(cfg: &ModelConfig, dims: &[usize]) -> Result<Vec<SpectralModel>> {
    dims.iter()
        .map(|&dim| {
            let mut c = cfg.clone();
            c.dim = Some(dim);
            c.eigenvalues = None;
            c.amplitudes = None;
            build_model(&c)
        })
        .collect()
}
