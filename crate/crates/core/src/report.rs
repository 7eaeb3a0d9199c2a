//! Report data carried from the experiment runners to the serialization
//! layer: per-ladder-point rows, trend verdicts and measured constants.

use std::collections::BTreeMap;

use serde::Serialize;

/// What the `x` column of a row means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum XKind {
    Time,
    Lambda,
    None,
}

impl std::fmt::Display for XKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            XKind::Time => write!(f, "t"),
            XKind::Lambda => write!(f, "lambda"),
            XKind::None => write!(f, "-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Skipped,
    Failed,
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowStatus::Ok => write!(f, "ok"),
            RowStatus::Skipped => write!(f, "skipped"),
            RowStatus::Failed => write!(f, "failed"),
        }
    }
}

/// One measured ladder point.
#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub experiment: String,
    pub k: usize,
    pub n: u32,
    pub x_kind: XKind,
    pub x: f64,
    pub probe: String,
    /// Error in the majorant norm of the approximating space.
    pub error: f64,
    /// The same defect in the plain Euclidean norm, for conditioning audit.
    pub error_euclid: f64,
    pub status: RowStatus,
    pub note: String,
}

/// Outcome of one trend check over a ladder.
#[derive(Debug, Clone, Serialize)]
pub struct TrendVerdict {
    pub name: String,
    pub pass: bool,
    pub slope: Option<f64>,
    pub drop_ratio: Option<f64>,
    pub detail: String,
}

/// Everything one experiment produces.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub rows: Vec<LadderRow>,
    pub verdicts: Vec<TrendVerdict>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
            && !self.rows.iter().any(|r| r.status == RowStatus::Failed)
    }

    /// Deterministic row order: (n, x, probe).
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.x.total_cmp(&b.x))
                .then(a.probe.cmp(&b.probe))
        });
    }

    /// Per-n maxima of the error column (finite rows only), for the summary
    /// aggregation mirroring the CSV contents.
    pub fn per_n_max_error(&self) -> Vec<(u32, f64)> {
        let mut agg: BTreeMap<u32, f64> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.status == RowStatus::Ok) {
            let e = agg.entry(r.n).or_insert(0.0);
            if r.error > *e {
                *e = r.error;
            }
        }
        agg.into_iter().collect()
    }
}
