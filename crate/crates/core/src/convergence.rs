//! Generalized strong-convergence experiments: ladders over the
//! regularization index comparing the counterterm-system evolutions and
//! resolvents against the exact ones through the projections P_n.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::approx::{ApproxSpace, ApproxVector, BnMajorant};
use crate::error::{CoreError, Result};
use crate::exact::{self, Hamiltonian};
use crate::linalg::{self, cr, CMatrix, CVector};
use crate::pontryagin::{PontryaginSpace, PontryaginVector};
use crate::report::{ConvergenceReport, LadderRow, RowStatus, TrendVerdict, XKind};
use crate::spectral::{CountertermScheme, RegularizedFamily, SpectralModel};

/// Which evolution family a ladder compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionKind {
    Schrodinger,
    Parabolic,
    Hyperbolic,
    Resolvent,
}

impl std::fmt::Display for EvolutionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvolutionKind::Schrodinger => write!(f, "schrodinger"),
            EvolutionKind::Parabolic => write!(f, "parabolic"),
            EvolutionKind::Hyperbolic => write!(f, "hyperbolic"),
            EvolutionKind::Resolvent => write!(f, "resolvent"),
        }
    }
}

/// One ladder experiment: which kind, which regularization indices, which
/// times (or shifts for the resolvent kind) and how many random probes.
#[derive(Debug, Clone)]
pub struct LadderConfig {
    pub kind: EvolutionKind,
    pub n_values: Vec<u32>,
    pub t_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub random_probes: usize,
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(CoreError::InvalidModel(
                "`n_values` must not be empty".into(),
            ));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidModel(
                "`n_values` must be strictly ascending".into(),
            ));
        }
        if self.n_values[0] == 0 {
            return Err(CoreError::InvalidModel(
                "`n_values` must start at >= 1".into(),
            ));
        }
        match self.kind {
            EvolutionKind::Resolvent => {
                if self.lambda_values.is_empty() {
                    return Err(CoreError::InvalidModel(
                        "`lambda_values` must not be empty for the resolvent kind".into(),
                    ));
                }
            }
            _ => {
                if self.t_values.is_empty() {
                    return Err(CoreError::InvalidModel(
                        "`t_values` must not be empty for evolution kinds".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Shared exact-side data of one laboratory run.
#[derive(Debug, Clone)]
pub struct LabContext {
    pub model: SpectralModel,
    pub pi_space: PontryaginSpace,
    pub ham: Hamiltonian,
    pub lambda0: f64,
    pub scheme: CountertermScheme,
    pub seed: u64,
}

impl LabContext {
    pub fn new(
        model: &SpectralModel,
        g_targets: &[f64],
        alpha: f64,
        scheme: CountertermScheme,
        seed: u64,
    ) -> Result<Self> {
        let pi_space = PontryaginSpace::new(model, g_targets, alpha)?;
        let lambda0 = exact::admissible_lambda0(&pi_space)?;
        let ham = exact::build_hamiltonian(&pi_space, lambda0)?;
        Ok(Self {
            model: model.clone(),
            pi_space,
            ham,
            lambda0,
            scheme,
            seed,
        })
    }

    /// Same laboratory with a second admissible negative subspace; only the
    /// norms change (within equivalence constants), never the operators.
    pub fn with_perturbed_subspace(&self, seed: u64, magnitude: f64) -> Result<Self> {
        let mut out = self.clone();
        out.pi_space = self
            .pi_space
            .with_perturbed_negative_bases(seed, magnitude)?;
        Ok(out)
    }

    pub fn family(&self, n: u32) -> Result<RegularizedFamily> {
        RegularizedFamily::build(
            &self.model,
            n,
            self.pi_space.g_targets(),
            self.pi_space.alpha(),
            self.scheme,
            self.seed,
        )
    }

    pub fn approx_space(&self, n: u32) -> Result<ApproxSpace> {
        ApproxSpace::new(&self.model, self.family(n)?)
    }

    /// Majorant for one rung, falling back to the Euclidean norm (with a
    /// note) when the transported subspace degenerates at small n.
    pub fn bn_majorant(&self, aspace: &ApproxSpace) -> (BnMajorant, Option<String>) {
        match BnMajorant::transported(aspace, &self.pi_space, &self.ham, self.lambda0) {
            Ok(m) => (m, None),
            Err(e) => (
                BnMajorant::euclidean(aspace),
                Some(format!("euclidean fallback at n = {}: {e}", aspace.n())),
            ),
        }
    }
}

/// A named probe vector on the Pontryagin space.
#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub vector: PontryaginVector,
}

/// Canonical basis directions of the (gamma, rho) sector plus seeded random
/// regular-part probes, domain-projected (relevant for even k) and normalized
/// to majorant norm one.
pub fn standard_probes(ctx: &LabContext, random_phi: usize) -> Vec<Probe> {
    let m = ctx.pi_space.m();
    let dim = ctx.pi_space.dim_h();
    let mut raw: Vec<(String, PontryaginVector)> = Vec::new();
    for s in 0..m {
        let mut v = PontryaginVector::zero(m, dim);
        v.gamma[s] = cr(1.0);
        raw.push((format!("gamma{}", s + 1), v));
        let mut v = PontryaginVector::zero(m, dim);
        v.rho[s] = cr(1.0);
        raw.push((format!("rho{}", s + 1), v));
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x70726f6265);
    for i in 0..random_phi {
        let mut v = PontryaginVector::zero(m, dim);
        for x in v.phi.iter_mut() {
            *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        raw.push((format!("phi{}", i + 1), v));
    }
    finalize_probes(ctx, raw)
}

/// Fully random probes across all components, for conservation checks.
pub fn random_full_probes(ctx: &LabContext, count: usize, salt: u64) -> Vec<Probe> {
    use rand::{Rng, SeedableRng};
    let m = ctx.pi_space.m();
    let dim = ctx.pi_space.dim_h();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed ^ salt);
    let mut raw = Vec::new();
    for i in 0..count {
        let mut v = PontryaginVector::zero(m, dim);
        for x in v
            .gamma
            .iter_mut()
            .chain(v.rho.iter_mut())
            .chain(v.phi.iter_mut())
        {
            *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        raw.push((format!("rand{}", i + 1), v));
    }
    finalize_probes(ctx, raw)
}

fn finalize_probes(ctx: &LabContext, raw: Vec<(String, PontryaginVector)>) -> Vec<Probe> {
    raw.into_iter()
        .filter_map(|(name, v)| {
            let (proj, _) = ctx.ham.project_to_domain(&v);
            let norm = ctx.pi_space.majorant_norm(&proj);
            if norm < 1e-10 {
                return None;
            }
            Some(Probe {
                name,
                vector: proj.scale(cr(1.0 / norm)),
            })
        })
        .collect()
}

/// Defect of generalized strong convergence for one operator pair at one
/// probe: || A_n P_n v - P_n A v || in the majorant norm of the rung.
pub fn pn_strong_error(
    aspace: &ApproxSpace,
    majorant: &BnMajorant,
    a_n: &CMatrix,
    pi_dim: (usize, usize),
    a: &CMatrix,
    v: &PontryaginVector,
) -> Result<(f64, f64)> {
    let (m, dim_h) = pi_dim;
    let av = PontryaginVector::from_coords(m, dim_h, &(a * v.coords()));
    let p_av = aspace.project_pn(&av)?;
    let pv = aspace.project_pn(v)?;
    let anpv = ApproxVector::from_coords(aspace.k(), dim_h, &(a_n * pv.coords()));
    let diff = anpv.sub(&p_av);
    Ok((majorant.norm(&diff), diff.euclid_norm()))
}

/// Distance of a sequence element to the canonical representative P_n u,
/// in the majorant norm (class membership defect).
pub fn class_membership_error(
    aspace: &ApproxSpace,
    majorant: &BnMajorant,
    u_n: &ApproxVector,
    u: &PontryaginVector,
) -> Result<f64> {
    let pu = aspace.project_pn(u)?;
    Ok(majorant.norm(&u_n.sub(&pu)))
}

/// Errors are treated as at the rounding floor below this value (probes are
/// normalized to majorant norm one).
pub const ERROR_FLOOR: f64 = 1e-12;

/// Required total error drop across a ladder for a pass verdict.
pub const REQUIRED_DROP: f64 = 10.0;

/// Log-log slope plus total-drop verdict for one error series over n.
pub fn trend_verdict(name: &str, ns: &[f64], errs: &[f64], drop_required: f64) -> TrendVerdict {
    if errs.iter().all(|&e| e <= ERROR_FLOOR) {
        return TrendVerdict {
            name: name.into(),
            pass: true,
            slope: None,
            drop_ratio: None,
            detail: "all errors at rounding floor".into(),
        };
    }
    let slope = linalg::loglog_slope(ns, errs, ERROR_FLOOR);
    let first = errs.first().copied().unwrap_or(0.0);
    let last = errs.last().copied().unwrap_or(0.0);
    let drop_ratio = if last > 0.0 {
        first / last
    } else {
        f64::INFINITY
    };
    let slope_ok = slope.map(|s| s < 0.0).unwrap_or(false);
    let drop_ok = last <= ERROR_FLOOR || drop_ratio >= drop_required;
    TrendVerdict {
        name: name.into(),
        pass: slope_ok && drop_ok,
        slope,
        drop_ratio: Some(drop_ratio),
        detail: format!(
            "first {:.3e}, last {:.3e}{}",
            first,
            last,
            if slope_ok && drop_ok {
                ""
            } else {
                "; trend not established"
            }
        ),
    }
}

/// Monotone-decrease plus total-drop verdict (used where the trend must not
/// wiggle, e.g. the lift-project consistency ladder).
pub fn monotone_drop_verdict(name: &str, errs: &[f64], drop_required: f64) -> TrendVerdict {
    if errs.iter().all(|&e| e <= ERROR_FLOOR) {
        return TrendVerdict {
            name: name.into(),
            pass: true,
            slope: None,
            drop_ratio: None,
            detail: "all errors at rounding floor".into(),
        };
    }
    let monotone = errs
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] <= ERROR_FLOOR);
    let first = errs.first().copied().unwrap_or(0.0);
    let last = errs.last().copied().unwrap_or(0.0);
    let drop_ratio = if last > 0.0 {
        first / last
    } else {
        f64::INFINITY
    };
    let drop_ok = last <= ERROR_FLOOR || drop_ratio >= drop_required;
    TrendVerdict {
        name: name.into(),
        pass: monotone && drop_ok,
        slope: None,
        drop_ratio: Some(drop_ratio),
        detail: format!(
            "monotone: {monotone}, first {:.3e}, last {:.3e}",
            first, last
        ),
    }
}

/// Pass iff every error stays below the tolerance.
pub fn exactness_verdict(name: &str, errs: &[f64], tol: f64) -> TrendVerdict {
    let max = errs.iter().fold(0.0f64, |a, &b| a.max(b));
    TrendVerdict {
        name: name.into(),
        pass: max <= tol,
        slope: None,
        drop_ratio: None,
        detail: format!("max {max:.3e} against tolerance {tol:.1e}"),
    }
}

struct RungOutput {
    rows: Vec<LadderRow>,
    constants: BTreeMap<String, f64>,
    notes: Vec<String>,
}

/// Run one evolution-ladder experiment (Schrodinger, parabolic or
/// hyperbolic kind). The rows carry, for every (n, t, probe), the defect
/// || U_n(t) P_n v - P_n U(t) v || measured in the transported majorant norm
/// of the rung; hyperbolic rows are split into V/ and W/ series.
pub fn run_evolution_ladder(ctx: &LabContext, ladder: &LadderConfig) -> Result<ConvergenceReport> {
    ladder.validate()?;
    let kind = ladder.kind;
    if kind == EvolutionKind::Resolvent {
        return run_resolvent_ladder(ctx, ladder);
    }
    let k = ctx.pi_space.k();
    let mut report = ConvergenceReport::new(format!("{kind}-ladder-k{k}"));
    let probes = standard_probes(ctx, ladder.random_probes);
    let m = ctx.pi_space.m();
    let dim_h = ctx.pi_space.dim_h();

    // Exact side, cached per (t, probe).
    let zero = PontryaginVector::zero(m, dim_h);
    let mut exact_evolved: BTreeMap<(usize, usize), Vec<PontryaginVector>> = BTreeMap::new();
    for (ti, &t) in ladder.t_values.iter().enumerate() {
        for (pi, probe) in probes.iter().enumerate() {
            let vs = match kind {
                EvolutionKind::Schrodinger => vec![ctx.ham.evolve_schrodinger(t, &probe.vector)?],
                EvolutionKind::Parabolic => vec![ctx.ham.evolve_parabolic(t, &probe.vector)?],
                EvolutionKind::Hyperbolic => {
                    let (v_part, _) = ctx.ham.evolve_hyperbolic(t, &probe.vector, &zero)?;
                    let (w_part, _) = ctx.ham.evolve_hyperbolic(t, &zero, &probe.vector)?;
                    vec![v_part, w_part]
                }
                EvolutionKind::Resolvent => unreachable!(),
            };
            exact_evolved.insert((ti, pi), vs);
        }
    }

    let rungs: Vec<RungOutput> = ladder
        .n_values
        .par_iter()
        .map(|&n| evolution_rung(ctx, ladder, n, &probes, &exact_evolved))
        .collect();
    for rung in rungs {
        report.rows.extend(rung.rows);
        for (key, val) in rung.constants {
            let e = report.constants.entry(key).or_insert(val);
            if val > *e {
                *e = val;
            }
        }
        report.notes.extend(rung.notes);
    }
    report.sort_rows();

    // Monitored semigroup bound of the exact side at the largest time.
    if let Some(&t_max) = ladder
        .t_values
        .iter()
        .max_by(|a, b| a.total_cmp(b))
        .filter(|&&t| t > 0.0)
    {
        let s_red = ctx.ham.majorant_gram_reduced(&ctx.pi_space);
        let prop = match kind {
            EvolutionKind::Schrodinger => Some(ctx.ham.schrodinger_propagator(t_max)?),
            EvolutionKind::Parabolic => {
                Some(linalg::complexify(&ctx.ham.parabolic_propagator(t_max)?))
            }
            EvolutionKind::Hyperbolic => {
                let (v, _) = ctx.ham.hyperbolic_propagators(t_max)?;
                Some(linalg::complexify(&v))
            }
            EvolutionKind::Resolvent => None,
        };
        if let Some(p) = prop {
            if let Ok(opn) = linalg::opnorm_weighted(&p, &s_red) {
                report
                    .constants
                    .insert(format!("log_opnorm_per_t_exact_{kind}"), opn.ln() / t_max);
            }
        }
    }

    // Verdicts per (t, probe) series; hyperbolic gets separate V and W series.
    let ns: Vec<f64> = ladder.n_values.iter().map(|&n| n as f64).collect();
    let prefixes: &[&str] = match kind {
        EvolutionKind::Hyperbolic => &["V/", "W/"],
        _ => &[""],
    };
    for &t in &ladder.t_values {
        for probe in &probes {
            for pre in prefixes {
                let label = format!("{pre}{}", probe.name);
                let errs: Vec<f64> = ladder
                    .n_values
                    .iter()
                    .map(|&n| {
                        report
                            .rows
                            .iter()
                            .find(|r| {
                                r.n == n
                                    && r.x == t
                                    && r.probe == label
                                    && r.status == RowStatus::Ok
                            })
                            .map(|r| r.error)
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                if errs.iter().any(|e| e.is_nan()) {
                    report.verdicts.push(TrendVerdict {
                        name: format!("{kind}-k{k} t={t} probe={label}"),
                        pass: false,
                        slope: None,
                        drop_ratio: None,
                        detail: "missing rows (failed rungs)".into(),
                    });
                } else {
                    report.verdicts.push(trend_verdict(
                        &format!("{kind}-k{k} t={t} probe={label}"),
                        &ns,
                        &errs,
                        REQUIRED_DROP,
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// One rung of an evolution ladder. Failures (degenerate generator, overflow
/// for excessive times) are recorded per row and the run continues.
fn evolution_rung(
    ctx: &LabContext,
    ladder: &LadderConfig,
    n: u32,
    probes: &[Probe],
    exact_evolved: &BTreeMap<(usize, usize), Vec<PontryaginVector>>,
) -> RungOutput {
    let kind = ladder.kind;
    let k = ctx.pi_space.k();
    let mut out = RungOutput {
        rows: Vec::new(),
        constants: BTreeMap::new(),
        notes: Vec::new(),
    };
    let prefixes: &[&str] = match kind {
        EvolutionKind::Hyperbolic => &["V/", "W/"],
        _ => &[""],
    };
    let experiment = format!("{kind}-ladder-k{k}");
    let fail_all = |out: &mut RungOutput, reason: &str| {
        for &t in &ladder.t_values {
            for probe in probes {
                for pre in prefixes {
                    out.rows.push(LadderRow {
                        experiment: experiment.clone(),
                        k,
                        n,
                        x_kind: XKind::Time,
                        x: t,
                        probe: format!("{pre}{}", probe.name),
                        error: f64::NAN,
                        error_euclid: f64::NAN,
                        status: RowStatus::Failed,
                        note: reason.to_string(),
                    });
                }
            }
        }
    };

    let aspace = match ctx.approx_space(n) {
        Ok(a) => a,
        Err(e) => {
            fail_all(&mut out, &e.to_string());
            return out;
        }
    };
    let (majorant, fallback) = ctx.bn_majorant(&aspace);
    out.notes.extend(fallback);

    let pn_probes: Vec<ApproxVector> = match probes
        .iter()
        .map(|p| aspace.project_pn(&p.vector))
        .collect::<Result<_>>()
    {
        Ok(v) => v,
        Err(e) => {
            fail_all(&mut out, &e.to_string());
            return out;
        }
    };

    // Uniform-boundedness proxy: majorant norm of P_n on unit probes.
    let pn_bound = pn_probes
        .iter()
        .fold(0.0f64, |a, p| a.max(majorant.norm(p)));
    out.constants.insert("pn_norm_max".into(), pn_bound);

    for (ti, &t) in ladder.t_values.iter().enumerate() {
        let props: Result<Vec<CMatrix>> = match kind {
            EvolutionKind::Schrodinger => aspace.schrodinger_propagator(t).map(|p| vec![p]),
            EvolutionKind::Parabolic => aspace
                .parabolic_propagator(t)
                .map(|p| vec![linalg::complexify(&p)]),
            EvolutionKind::Hyperbolic => aspace
                .hyperbolic_propagators(t)
                .map(|(v, w)| vec![linalg::complexify(&v), linalg::complexify(&w)]),
            EvolutionKind::Resolvent => unreachable!(),
        };
        let props = match props {
            Ok(p) => p,
            Err(e) => {
                // truncated run: record the failure for this time, keep going
                for probe in probes {
                    for pre in prefixes {
                        out.rows.push(LadderRow {
                            experiment: experiment.clone(),
                            k,
                            n,
                            x_kind: XKind::Time,
                            x: t,
                            probe: format!("{pre}{}", probe.name),
                            error: f64::NAN,
                            error_euclid: f64::NAN,
                            status: RowStatus::Failed,
                            note: e.to_string(),
                        });
                    }
                }
                continue;
            }
        };
        for (pi, probe) in probes.iter().enumerate() {
            let exact_parts = &exact_evolved[&(ti, pi)];
            for (part, (prop, pre)) in props.iter().zip(prefixes).enumerate() {
                let evolved_n = ApproxVector::from_coords(
                    aspace.k(),
                    aspace.dim_h(),
                    &(prop * pn_probes[pi].coords()),
                );
                let row = match aspace.project_pn(&exact_parts[part]) {
                    Ok(p_exact) => {
                        let diff = evolved_n.sub(&p_exact);
                        LadderRow {
                            experiment: experiment.clone(),
                            k,
                            n,
                            x_kind: XKind::Time,
                            x: t,
                            probe: format!("{pre}{}", probe.name),
                            error: majorant.norm(&diff),
                            error_euclid: diff.euclid_norm(),
                            status: RowStatus::Ok,
                            note: String::new(),
                        }
                    }
                    Err(e) => LadderRow {
                        experiment: experiment.clone(),
                        k,
                        n,
                        x_kind: XKind::Time,
                        x: t,
                        probe: format!("{pre}{}", probe.name),
                        error: f64::NAN,
                        error_euclid: f64::NAN,
                        status: RowStatus::Failed,
                        note: e.to_string(),
                    },
                };
                out.rows.push(row);
            }
        }
    }

    // Monitored semigroup-bound constants at t = max(t_values).
    if let Some(&t_max) = ladder
        .t_values
        .iter()
        .max_by(|a, b| a.total_cmp(b))
        .filter(|&&t| t > 0.0)
    {
        let prop = match kind {
            EvolutionKind::Schrodinger => aspace.schrodinger_propagator(t_max),
            EvolutionKind::Parabolic => aspace
                .parabolic_propagator(t_max)
                .map(|p| linalg::complexify(&p)),
            EvolutionKind::Hyperbolic => aspace
                .hyperbolic_propagators(t_max)
                .map(|(v, _)| linalg::complexify(&v)),
            EvolutionKind::Resolvent => unreachable!(),
        };
        if let Ok(opn) = prop.and_then(|p| linalg::opnorm_weighted(&p, majorant.gram())) {
            out.constants
                .insert(format!("log_opnorm_per_t_{kind}"), opn.ln() / t_max);
        }
    }
    out
}

/// Resolvent-convergence ladder: rows measure
/// || (G_n + lambda)^{-1} P_n v - P_n (H + lambda)^{-1} v ||; shifts where
/// the index-n symbol nearly vanishes are skipped with a note.
pub fn run_resolvent_ladder(ctx: &LabContext, ladder: &LadderConfig) -> Result<ConvergenceReport> {
    ladder.validate()?;
    let k = ctx.pi_space.k();
    let mut report = ConvergenceReport::new(format!("resolvent-ladder-k{k}"));
    let probes = standard_probes(ctx, ladder.random_probes);

    // Exact side per (lambda, probe).
    let mut exact_res: BTreeMap<(usize, usize), Option<PontryaginVector>> = BTreeMap::new();
    for (li, &lambda) in ladder.lambda_values.iter().enumerate() {
        for (pi, probe) in probes.iter().enumerate() {
            let r = exact::resolvent_exact_apply(&ctx.pi_space, lambda, &probe.vector).ok();
            exact_res.insert((li, pi), r);
        }
    }

    let rungs: Vec<RungOutput> = ladder
        .n_values
        .par_iter()
        .map(|&n| {
            let mut out = RungOutput {
                rows: Vec::new(),
                constants: BTreeMap::new(),
                notes: Vec::new(),
            };
            let push = |out: &mut RungOutput,
                        lambda: f64,
                        probe: &Probe,
                        status: RowStatus,
                        error: f64,
                        error_euclid: f64,
                        note: String| {
                out.rows.push(LadderRow {
                    experiment: format!("resolvent-ladder-k{k}"),
                    k,
                    n,
                    x_kind: XKind::Lambda,
                    x: lambda,
                    probe: probe.name.clone(),
                    error,
                    error_euclid,
                    status,
                    note,
                });
            };
            let aspace = match ctx.approx_space(n) {
                Ok(a) => a,
                Err(e) => {
                    for &lambda in &ladder.lambda_values {
                        for probe in &probes {
                            push(
                                &mut out,
                                lambda,
                                probe,
                                RowStatus::Failed,
                                f64::NAN,
                                f64::NAN,
                                e.to_string(),
                            );
                        }
                    }
                    return out;
                }
            };
            let (majorant, fallback) = ctx.bn_majorant(&aspace);
            out.notes.extend(fallback);
            for (li, &lambda) in ladder.lambda_values.iter().enumerate() {
                let a_bar_n = aspace.a_bar_n(lambda);
                let g_scale = aspace
                    .family()
                    .g_n_moments
                    .iter()
                    .fold(1.0f64, |a, x| a.max(x.abs()));
                let usable = a_bar_n.abs() > 1e-8 * g_scale;
                let solver = if usable {
                    aspace.resolvent_direct(lambda).ok()
                } else {
                    None
                };
                for (pi, probe) in probes.iter().enumerate() {
                    let exact_part = exact_res[&(li, pi)].as_ref();
                    match (&solver, exact_part) {
                        (Some(rn), Some(rv)) => {
                            let solved = aspace.project_pn(&probe.vector).and_then(|pn_v| {
                                let lhs = ApproxVector::from_coords(
                                    aspace.k(),
                                    aspace.dim_h(),
                                    &(linalg::complexify(rn) * pn_v.coords()),
                                );
                                Ok((lhs, aspace.project_pn(rv)?))
                            });
                            match solved {
                                Ok((lhs, rhs)) => {
                                    let diff = lhs.sub(&rhs);
                                    push(
                                        &mut out,
                                        lambda,
                                        probe,
                                        RowStatus::Ok,
                                        majorant.norm(&diff),
                                        diff.euclid_norm(),
                                        String::new(),
                                    );
                                }
                                Err(e) => push(
                                    &mut out,
                                    lambda,
                                    probe,
                                    RowStatus::Failed,
                                    f64::NAN,
                                    f64::NAN,
                                    e.to_string(),
                                ),
                            }
                        }
                        _ => push(
                            &mut out,
                            lambda,
                            probe,
                            RowStatus::Skipped,
                            f64::NAN,
                            f64::NAN,
                            format!("a_n({lambda}) = {a_bar_n:.3e} ~ 0 or exact side singular"),
                        ),
                    }
                }
            }
            out
        })
        .collect();
    for rung in rungs {
        report.rows.extend(rung.rows);
        report.notes.extend(rung.notes);
    }
    report.sort_rows();

    let ns: Vec<f64> = ladder.n_values.iter().map(|&n| n as f64).collect();
    for &lambda in &ladder.lambda_values {
        for probe in &probes {
            let series: Vec<Option<f64>> = ladder
                .n_values
                .iter()
                .map(|&n| {
                    report
                        .rows
                        .iter()
                        .find(|r| r.n == n && r.x == lambda && r.probe == probe.name)
                        .and_then(|r| (r.status == RowStatus::Ok).then_some(r.error))
                })
                .collect();
            let name = format!("resolvent-k{k} lambda={lambda} probe={}", probe.name);
            let any_failed = report
                .rows
                .iter()
                .any(|r| r.x == lambda && r.probe == probe.name && r.status == RowStatus::Failed);
            if any_failed {
                report.verdicts.push(TrendVerdict {
                    name,
                    pass: false,
                    slope: None,
                    drop_ratio: None,
                    detail: "failed rows in the series".into(),
                });
            } else if series.iter().any(|e| e.is_none()) {
                report.verdicts.push(TrendVerdict {
                    name,
                    pass: true,
                    slope: None,
                    drop_ratio: None,
                    detail: "skipped (symbol near zero)".into(),
                });
            } else {
                let errs: Vec<f64> = series.into_iter().map(Option::unwrap).collect();
                report
                    .verdicts
                    .push(trend_verdict(&name, &ns, &errs, REQUIRED_DROP));
            }
        }
    }
    Ok(report)
}

/// Lift-project consistency ladder: for every rung it measures
/// || Q_n P_n v - v || (majorant norm on the Pontryagin space) and the inner
/// product defect |<P_n v, P_n v> - <v, v>|. Verdicts are at the operator
/// level (max over probes per rung): exactness for odd k, monotone decrease
/// with the required drop for even k.
pub fn run_projection_ladder(
    ctx: &LabContext,
    n_values: &[u32],
    random_probes: usize,
) -> Result<ConvergenceReport> {
    let k = ctx.pi_space.k();
    let mut report = ConvergenceReport::new(format!("projection-ladder-k{k}"));
    let probes = standard_probes(ctx, random_probes);

    let mut qnpn_max: Vec<f64> = Vec::with_capacity(n_values.len());
    let mut prod_max: Vec<f64> = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let aspace = ctx.approx_space(n)?;
        let (mut qmax, mut pmax) = (0.0f64, 0.0f64);
        for probe in &probes {
            let pn_v = aspace.project_pn(&probe.vector)?;
            let back = aspace.lift_qn(&pn_v);
            let qd = ctx.pi_space.majorant_norm(&back.sub(&probe.vector));
            let before = ctx
                .pi_space
                .indefinite_product(&probe.vector, &probe.vector)
                .re;
            let after = aspace.inner_product(&pn_v, &pn_v).re;
            let pd = (after - before).abs();
            qmax = qmax.max(qd);
            pmax = pmax.max(pd);
            for (label, err) in [("qnpn", qd), ("product", pd)] {
                report.rows.push(LadderRow {
                    experiment: format!("projection-ladder-k{k}"),
                    k,
                    n,
                    x_kind: XKind::None,
                    x: 0.0,
                    probe: format!("{label}/{}", probe.name),
                    error: err,
                    error_euclid: err,
                    status: RowStatus::Ok,
                    note: String::new(),
                });
            }
        }
        qnpn_max.push(qmax);
        prod_max.push(pmax);
    }
    report.sort_rows();

    if k % 2 == 1 {
        report.verdicts.push(exactness_verdict(
            &format!("qnpn-exact-k{k}"),
            &qnpn_max,
            1e-12,
        ));
        report.verdicts.push(exactness_verdict(
            &format!("product-exact-k{k}"),
            &prod_max,
            1e-12,
        ));
    } else {
        report.verdicts.push(monotone_drop_verdict(
            &format!("qnpn-trend-k{k}"),
            &qnpn_max,
            REQUIRED_DROP,
        ));
        report.verdicts.push(monotone_drop_verdict(
            &format!("product-trend-k{k}"),
            &prod_max,
            REQUIRED_DROP,
        ));
    }
    Ok(report)
}

/// Indefinite-product conservation of the exact group and of the order-n
/// system over a time grid; drift must stay at rounding level.
pub fn run_conservation(
    ctx: &LabContext,
    n_check: u32,
    t_grid: &[f64],
    probe_count: usize,
) -> Result<ConvergenceReport> {
    let k = ctx.pi_space.k();
    let mut report = ConvergenceReport::new(format!("conservation-k{k}"));
    let probes = random_full_probes(ctx, probe_count, 0x636f6e73);
    let mut drifts = Vec::new();

    for probe in &probes {
        let before = ctx
            .pi_space
            .indefinite_product(&probe.vector, &probe.vector)
            .re;
        let mut drift = 0.0f64;
        for &t in t_grid {
            let evolved = ctx.ham.evolve_schrodinger(t, &probe.vector)?;
            let after = ctx.pi_space.indefinite_product(&evolved, &evolved).re;
            drift = drift.max((after - before).abs());
        }
        drifts.push(drift);
        report.rows.push(LadderRow {
            experiment: format!("conservation-k{k}"),
            k,
            n: 0,
            x_kind: XKind::Time,
            x: *t_grid.last().unwrap_or(&0.0),
            probe: format!("exact/{}", probe.name),
            error: drift,
            error_euclid: drift,
            status: RowStatus::Ok,
            note: String::new(),
        });
    }

    // Order-n side (the group of the counterterm system).
    let aspace = ctx.approx_space(n_check)?;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x636f6e7332);
    for i in 0..probe_count {
        let mut v = ApproxVector::zero(aspace.k(), aspace.dim_h());
        for x in v.c.iter_mut().chain(v.psi.iter_mut()) {
            *x = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let scale = v.euclid_norm();
        let v = v.scale(cr(1.0 / scale));
        let before = aspace.inner_product(&v, &v).re;
        let mut drift = 0.0f64;
        for &t in t_grid {
            let w = aspace.evolve_schrodinger(t, &v)?;
            let after = aspace.inner_product(&w, &w).re;
            drift = drift.max((after - before).abs());
        }
        drifts.push(drift);
        report.rows.push(LadderRow {
            experiment: format!("conservation-k{k}"),
            k,
            n: n_check,
            x_kind: XKind::Time,
            x: *t_grid.last().unwrap_or(&0.0),
            probe: format!("ordern/rand{}", i + 1),
            error: drift,
            error_euclid: drift,
            status: RowStatus::Ok,
            note: String::new(),
        });
    }

    report.sort_rows();
    report.verdicts.push(exactness_verdict(
        &format!("conservation-k{k}"),
        &drifts,
        1e-8,
    ));
    Ok(report)
}

/// Direct integration of the rank-one-coupled first-order system (the k = 1
/// reduction) with RK4; independent of the matrix-exponential path.
pub fn m0_direct_integration(aspace: &ApproxSpace, psi0: &CVector, t: f64) -> CVector {
    let chi: Vec<f64> = aspace.family().chi_n.clone();
    let g_n = 1.0 / aspace.family().z[0];
    let eigs: Vec<f64> = aspace.model().eigenvalues().to_vec();
    let lam_max = eigs.last().copied().unwrap_or(1.0);
    let steps = ((t * lam_max.max(1.0) / 5e-4).ceil() as usize).clamp(100, 400_000);
    let rhs = move |_t: f64, y: &CVector| -> CVector {
        let pairing: Complex64 = chi.iter().zip(y.iter()).map(|(&c, &yi)| yi * c).sum();
        CVector::from_iterator(
            y.len(),
            y.iter()
                .zip(&eigs)
                .zip(&chi)
                .map(|((&yi, &l), &c)| Complex64::new(0.0, -1.0) * (yi * l + pairing * (g_n * c))),
        )
    };
    linalg::rk4_integrate(rhs, psi0, t, steps)
}

/// The m = 0 reduction check: the k = 1 counterterm-system evolution must
/// match direct integration of the rank-one equation with coupling 1/z_0.
pub fn run_m0_reduction(
    ctx: &LabContext,
    n_values: &[u32],
    t_values: &[f64],
    probe_count: usize,
) -> Result<ConvergenceReport> {
    if ctx.pi_space.k() != 1 {
        return Err(CoreError::InvalidModel(
            "the m = 0 reduction check requires k = 1".into(),
        ));
    }
    let mut report = ConvergenceReport::new("m0-reduction".to_string());
    let probes = standard_probes(ctx, probe_count);
    let mut errs = Vec::new();
    for &n in n_values {
        let aspace = ctx.approx_space(n)?;
        for &t in t_values {
            let u = aspace.schrodinger_propagator(t)?;
            for probe in &probes {
                let pn = aspace.project_pn(&probe.vector)?;
                let via_expm = &u * pn.coords();
                let via_rk4 = m0_direct_integration(&aspace, &pn.psi, t);
                let err = (via_expm - via_rk4).norm();
                errs.push(err);
                report.rows.push(LadderRow {
                    experiment: "m0-reduction".into(),
                    k: 1,
                    n,
                    x_kind: XKind::Time,
                    x: t,
                    probe: probe.name.clone(),
                    error: err,
                    error_euclid: err,
                    status: RowStatus::Ok,
                    note: String::new(),
                });
            }
        }
    }
    report.sort_rows();
    report
        .verdicts
        .push(exactness_verdict("m0-reduction", &errs, 1e-9));
    Ok(report)
}
