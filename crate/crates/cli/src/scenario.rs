//! Scenario orchestration: build the laboratory from a configuration, run
//! the configured experiments, and write the machine-readable outputs
//! (CSV rows plus a JSON summary).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use sevlab_core::convergence::{
    run_conservation, run_evolution_ladder, run_m0_reduction, run_projection_ladder, LabContext,
    LadderConfig,
};
use sevlab_core::linalg;
use sevlab_core::pontryagin::negative_squares;
use sevlab_core::report::{ConvergenceReport, LadderRow, RowStatus};
use sevlab_core::spectral::{truncation_family, verify_singular_trend, ModelConfig};

use crate::config::{self, ExperimentConfig};

/// Fixed CSV column order; floats carry 17 significant digits.
pub const CSV_HEADER: &str = "experiment,k,n,x_kind,x,probe,error,error_euclid,status,note";

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_row(row: &LadderRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        row.experiment,
        row.k,
        row.n,
        row.x_kind,
        fmt_f64(row.x),
        row.probe,
        fmt_f64(row.error),
        fmt_f64(row.error_euclid),
        row.status,
        row.note.replace(',', ";"),
    )
}

#[derive(Debug, Serialize)]
struct ExperimentSummary {
    experiment: String,
    passed: bool,
    verdicts: Vec<sevlab_core::report::TrendVerdict>,
    constants: BTreeMap<String, f64>,
    notes: Vec<String>,
    rows: usize,
    skipped: usize,
    per_n_max_error: Vec<(u32, f64)>,
}

#[derive(Debug, Serialize)]
struct GramAudit {
    g_targets: Vec<f64>,
    g_reg: Vec<f64>,
    raw_moments: Vec<f64>,
    block_negative_squares: usize,
    block_reduction_negative_squares: usize,
    counterterms_at_n: BTreeMap<u32, Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct SpectralSummary {
    lambda0: f64,
    j_selfadjoint_defect: f64,
    h_eigenvalues: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
struct ScenarioSummary {
    seed: u64,
    k: usize,
    m: usize,
    dim: usize,
    alpha: f64,
    all_passed: bool,
    experiments: Vec<ExperimentSummary>,
    gram_audit: GramAudit,
    spectral: SpectralSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    singular_trend: Option<sevlab_core::spectral::SingularTrendReport>,
}

pub struct ScenarioOutcome {
    pub all_passed: bool,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    /// (experiment name, passed) in run order, plus the trend flag if any.
    pub lines: Vec<(String, bool)>,
}

/// Run everything the configuration asks for and write the artifacts.
pub fn run_scenario(
    cfg: &ExperimentConfig,
    out_dir_override: Option<&Path>,
) -> Result<ScenarioOutcome> {
    let model = config::build_model(cfg)?;
    let g = config::g_targets(cfg, model.k())?;
    let ctx = LabContext::new(&model, &g, cfg.family.alpha, config::scheme(cfg), cfg.seed)
        .context("building the laboratory context")?;

    let mut reports: Vec<ConvergenceReport> = Vec::new();

    if let Some(ladder) = &cfg.ladder {
        for kind_name in &ladder.kinds {
            let kind = config::parse_kind(kind_name)?;
            let lc = LadderConfig {
                kind,
                n_values: ladder.n_values.clone(),
                t_values: ladder.t_values.clone(),
                lambda_values: ladder.lambda_values.clone(),
                random_probes: ladder.random_probes,
            };
            reports.push(
                run_evolution_ladder(&ctx, &lc).with_context(|| format!("{kind_name} ladder"))?,
            );
        }
    }
    if let Some(p) = &cfg.projection {
        reports.push(
            run_projection_ladder(&ctx, &p.n_values, p.random_probes)
                .context("projection ladder")?,
        );
    }
    if let Some(c) = &cfg.conservation {
        reports.push(
            run_conservation(&ctx, c.n_check, &c.t_values, c.probes)
                .context("conservation check")?,
        );
    }
    if let Some(m0) = &cfg.m0 {
        reports.push(
            run_m0_reduction(&ctx, &m0.n_values, &m0.t_values, m0.probes)
                .context("m0 reduction check (requires k = 1)")?,
        );
    }

    let singular_trend = match &cfg.singular_trend {
        Some(ts) => {
            let law = ModelConfig {
                dim: None,
                k: cfg.model.k,
                d: cfg.model.d,
                a_shift: cfg.model.a_shift,
                growth_exponent: cfg.model.growth_exponent,
                amplitude_exponent: cfg.model.amplitude_exponent,
                amplitude_scale: cfg.model.amplitude_scale,
                eigenvalues: None,
                amplitudes: None,
            };
            let family = truncation_family(&law, &ts.dims).context("singular-trend family")?;
            Some(verify_singular_trend(&family)?)
        }
        None => None,
    };

    // Gram and signature audit.
    let block = linalg::complexify(ctx.pi_space.block_gram());
    let (neg_eigen, neg_reduction) = if ctx.pi_space.m() > 0 {
        (
            negative_squares(&block)?,
            linalg::inertia_reduction(&block, 1e-10)?.0,
        )
    } else {
        (0, 0)
    };
    let mut counterterms_at_n = BTreeMap::new();
    for n in [1u32, 16, 256] {
        if let Ok(f) = ctx.family(n) {
            counterterms_at_n.insert(n, f.z.clone());
        }
    }
    let s_max = 2 * ctx.pi_space.m() + 1;
    let gram_audit = GramAudit {
        g_targets: g.clone(),
        g_reg: (1..=s_max).map(|s| ctx.pi_space.g_reg(s)).collect(),
        raw_moments: (1..=s_max).map(|s| ctx.pi_space.mu(s)).collect(),
        block_negative_squares: neg_eigen,
        block_reduction_negative_squares: neg_reduction,
        counterterms_at_n,
    };

    let spectral = SpectralSummary {
        lambda0: ctx.lambda0,
        j_selfadjoint_defect: ctx.ham.j_selfadjoint_defect(&ctx.pi_space),
        h_eigenvalues: ctx.ham.spectrum().iter().map(|e| (e.re, e.im)).collect(),
    };

    let trend_pass = singular_trend
        .as_ref()
        .map(|t| t.strongly_singular)
        .unwrap_or(true);
    let all_passed = reports.iter().all(|r| r.passed()) && trend_pass;

    let experiments: Vec<ExperimentSummary> = reports
        .iter()
        .map(|r| ExperimentSummary {
            experiment: r.experiment.clone(),
            passed: r.passed(),
            verdicts: r.verdicts.clone(),
            constants: r.constants.clone(),
            notes: r.notes.clone(),
            rows: r.rows.len(),
            skipped: r
                .rows
                .iter()
                .filter(|row| row.status == RowStatus::Skipped)
                .count(),
            per_n_max_error: r.per_n_max_error(),
        })
        .collect();

    let summary = ScenarioSummary {
        seed: cfg.seed,
        k: model.k(),
        m: model.m(),
        dim: model.dim(),
        alpha: cfg.family.alpha,
        all_passed,
        experiments,
        gram_audit,
        spectral,
        singular_trend,
    };

    // Serialize: CSV rows in deterministic order, then the JSON summary.
    let out_dir = out_dir_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let csv_path = out_dir.join(&cfg.output.csv);
    let json_path = out_dir.join(&cfg.output.json);

    let mut csv = String::new();
    writeln!(&mut csv, "{CSV_HEADER}")?;
    for report in &reports {
        for row in &report.rows {
            writeln!(&mut csv, "{}", csv_row(row))?;
        }
    }
    std::fs::write(&csv_path, csv.as_bytes())
        .with_context(|| format!("writing {}", csv_path.display()))?;

    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&json_path, json.as_bytes())
        .with_context(|| format!("writing {}", json_path.display()))?;

    let mut lines: Vec<(String, bool)> = summary
        .experiments
        .iter()
        .map(|e| (e.experiment.clone(), e.passed))
        .collect();
    if let Some(t) = &summary.singular_trend {
        lines.push(("singular-trend".into(), t.strongly_singular));
    }

    Ok(ScenarioOutcome {
        all_passed,
        csv_path,
        json_path,
        lines,
    })
}

/// Model and family dump for audit: moments, counterterms, symbol scan and
/// the signature of the counterterm block at a few indices.
pub fn dump_model(cfg: &ExperimentConfig) -> Result<String> {
    let model = config::build_model(cfg)?;
    let g = config::g_targets(cfg, model.k())?;
    let ctx = LabContext::new(&model, &g, cfg.family.alpha, config::scheme(cfg), cfg.seed)?;

    #[derive(Serialize)]
    struct FamilyDump {
        n: u32,
        z: Vec<f64>,
        g_n_moments: Vec<f64>,
        chi_n_norm: f64,
        counterterm_block_negative_squares: usize,
        a_bar_at: BTreeMap<String, f64>,
    }

    #[derive(Serialize)]
    struct ModelDump {
        k: usize,
        m: usize,
        dim: usize,
        a_shift: f64,
        eigenvalue_range: (f64, f64),
        raw_moments: Vec<f64>,
        g_reg: Vec<f64>,
        lambda0: f64,
        families: Vec<FamilyDump>,
    }

    let s_max = (3 * model.m() + 2).max(model.k() + 1);
    let mut families = Vec::new();
    for n in [1u32, 4, 16, 64, 256] {
        let f = ctx.family(n)?;
        let aspace = ctx.approx_space(n)?;
        let block = linalg::complexify(&sevlab_core::approx::counterterm_block_gram(&f.z));
        let negs = if model.k() >= 2 {
            negative_squares(&block)?
        } else {
            0
        };
        let mut a_bar_at = BTreeMap::new();
        for lambda in [0.0, 0.5, 1.0, 2.0, 5.0] {
            a_bar_at.insert(format!("{lambda}"), aspace.a_bar_n(lambda));
        }
        families.push(FamilyDump {
            n,
            z: f.z.clone(),
            g_n_moments: f.g_n_moments.clone(),
            chi_n_norm: model.moment(&f.chi_n, 0).sqrt(),
            counterterm_block_negative_squares: negs,
            a_bar_at,
        });
    }

    let dump = ModelDump {
        k: model.k(),
        m: model.m(),
        dim: model.dim(),
        a_shift: model.a_shift(),
        eigenvalue_range: (model.eigenvalues()[0], *model.eigenvalues().last().unwrap()),
        raw_moments: (1..=s_max)
            .map(|s| model.moment(model.amplitudes(), s as u32))
            .collect(),
        g_reg: (1..=s_max).map(|s| ctx.pi_space.g_reg(s)).collect(),
        lambda0: ctx.lambda0,
        families,
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}
