//! Experiment configuration: one TOML file drives a whole scenario. Unknown
//! keys are rejected, duplicates are parse errors, and semantic validation
//! names the offending key.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use sevlab_core::convergence::EvolutionKind;
use sevlab_core::spectral::{self, CountertermScheme, ModelConfig, SpectralModel};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub ladder: Option<LadderSection>,
    #[serde(default)]
    pub projection: Option<ProjectionSection>,
    #[serde(default)]
    pub conservation: Option<ConservationSection>,
    #[serde(default)]
    pub m0: Option<M0Section>,
    #[serde(default)]
    pub singular_trend: Option<SingularTrendSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Ambient dimension; defaults to 80 for generated models and to the
    /// list length for explicit ones.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "default_a_shift")]
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

/// Default ambient dimension for generated models.
pub const DEFAULT_DIM: usize = 80;

fn default_a_shift() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    #[serde(default = "default_one")]
    pub alpha: f64,
    /// Renormalized targets g_1..g_k. Default: g_1 = -1/alpha, all middle
    /// entries 0 and, for even k, g_k = -1 (a strictly negative leading
    /// target keeps the domain-compatible negative subspace available).
    #[serde(default)]
    pub g_targets: Option<Vec<f64>>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub noise_amplitude: f64,
}

fn default_scheme() -> String {
    "exact".into()
}

impl Default for FamilySection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            g_targets: None,
            scheme: default_scheme(),
            noise_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<String>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u32>,
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub lambda_values: Vec<f64>,
    #[serde(default = "default_random_probes")]
    pub random_probes: usize,
}

fn default_kinds() -> Vec<String> {
    vec![
        "schrodinger".into(),
        "parabolic".into(),
        "hyperbolic".into(),
    ]
}

fn default_n_values() -> Vec<u32> {
    vec![4, 8, 16, 32, 64, 128, 256]
}

fn default_t_values() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_random_probes() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSection {
    #[serde(default = "default_projection_n")]
    pub n_values: Vec<u32>,
    #[serde(default = "default_random_probes")]
    pub random_probes: usize,
}

fn default_projection_n() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32, 64, 128, 256]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationSection {
    #[serde(default = "default_n_check")]
    pub n_check: u32,
    #[serde(default = "default_conservation_t")]
    pub t_values: Vec<f64>,
    #[serde(default = "default_probe_count")]
    pub probes: usize,
}

fn default_n_check() -> u32 {
    16
}

fn default_conservation_t() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

fn default_probe_count() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M0Section {
    #[serde(default = "default_m0_n")]
    pub n_values: Vec<u32>,
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default = "default_random_probes")]
    pub probes: usize,
}

fn default_m0_n() -> Vec<u32> {
    vec![4, 16, 64]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularTrendSection {
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_json")]
    pub json: String,
}

fn default_out_dir() -> String {
    "runs".into()
}

fn default_csv() -> String {
    "rows.csv".into()
}

fn default_json() -> String {
    "summary.json".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            csv: default_csv(),
            json: default_json(),
        }
    }
}

/// Parse and semantically validate a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).context("config parse error")?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.family.alpha == 0.0 {
        bail!("key `family.alpha` must be nonzero (g_1 = -1/alpha)");
    }
    match cfg.family.scheme.as_str() {
        "exact" | "noisy" => {}
        other => bail!("key `family.scheme` must be \"exact\" or \"noisy\", got \"{other}\""),
    }
    if cfg.family.scheme == "noisy" && cfg.family.noise_amplitude < 0.0 {
        bail!("key `family.noise_amplitude` must be nonnegative");
    }
    if let Some(ladder) = &cfg.ladder {
        for kind in &ladder.kinds {
            parse_kind(kind)?;
        }
        if ladder.n_values.is_empty() {
            bail!("key `ladder.n_values` must not be empty");
        }
        if ladder.n_values.windows(2).any(|w| w[1] <= w[0]) {
            bail!("key `ladder.n_values` must be strictly ascending");
        }
        if ladder.n_values[0] == 0 {
            bail!("key `ladder.n_values` entries must be >= 1");
        }
        if ladder.kinds.iter().any(|k| k == "resolvent") && ladder.lambda_values.is_empty() {
            bail!("key `ladder.lambda_values` must not be empty for the resolvent kind");
        }
    }
    if let Some(p) = &cfg.projection {
        if p.n_values.is_empty() {
            bail!("key `projection.n_values` must not be empty");
        }
    }
    if let Some(ts) = &cfg.singular_trend {
        if ts.dims.is_empty() {
            bail!("key `singular_trend.dims` must not be empty");
        }
    }
    // Model-level checks go through the core builder.
    let model = build_model(cfg)?;
    let _ = g_targets(cfg, model.k())?;
    Ok(())
}

pub fn parse_kind(kind: &str) -> Result<EvolutionKind> {
    match kind {
        "schrodinger" => Ok(EvolutionKind::Schrodinger),
        "parabolic" => Ok(EvolutionKind::Parabolic),
        "hyperbolic" => Ok(EvolutionKind::Hyperbolic),
        "resolvent" => Ok(EvolutionKind::Resolvent),
        other => bail!(
            "key `ladder.kinds` contains \"{other}\"; expected schrodinger, parabolic, \
             hyperbolic or resolvent"
        ),
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<SpectralModel> {
    let m = &cfg.model;
    let dim = match (&m.eigenvalues, m.dim) {
        (Some(_), d) => d,
        (None, Some(d)) => Some(d),
        (None, None) => Some(DEFAULT_DIM),
    };
    let model_cfg = ModelConfig {
        dim,
        k: m.k,
        d: m.d,
        a_shift: m.a_shift,
        growth_exponent: m.growth_exponent,
        amplitude_exponent: m.amplitude_exponent,
        amplitude_scale: m.amplitude_scale,
        eigenvalues: m.eigenvalues.clone(),
        amplitudes: m.amplitudes.clone(),
    };
    spectral::build_model(&model_cfg).context("section `model`")
}

/// Effective renormalized targets: explicit list or the documented defaults.
pub fn g_targets(cfg: &ExperimentConfig, k: usize) -> Result<Vec<f64>> {
    match &cfg.family.g_targets {
        Some(g) => {
            if g.len() != k {
                bail!(
                    "key `family.g_targets` must have length k = {k}, got {}",
                    g.len()
                );
            }
            let expected = -1.0 / cfg.family.alpha;
            if (g[0] - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                bail!(
                    "key `family.g_targets[0]` = {} must equal -1/alpha = {expected}",
                    g[0]
                );
            }
            Ok(g.clone())
        }
        None => {
            let mut g = vec![0.0; k];
            g[0] = -1.0 / cfg.family.alpha;
            if k % 2 == 0 && k >= 2 {
                g[k - 1] = -1.0;
            }
            Ok(g)
        }
    }
}

pub fn scheme(cfg: &ExperimentConfig) -> CountertermScheme {
    match cfg.family.scheme.as_str() {
        "noisy" => CountertermScheme::Noisy {
            amplitude: cfg.family.noise_amplitude,
        },
        _ => CountertermScheme::Exact,
    }
}
