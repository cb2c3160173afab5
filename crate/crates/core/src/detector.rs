//! Existence and uniqueness of the conditional MLE.
//!
//! Two checks decide the verdict. The rank check assembles the matrix of
//! softmax-centered attribute rows at a handful of probe coefficients. The
//! separation check minimizes `|Σ λ_k w_k|²` over `λ_k ≥ 1`, where the `w_k`
//! are the unit-normalized attribute gaps `Σ_t (d_t − y_t) x_t` over every
//! alternative sequence: a zero minimum means no direction weakly improves
//! every alternative over the observed outcome, so a finite maximizer
//! exists. A positive minimum comes with the optimal combination `u*`,
//! whose direction is a separating direction.
//!
//! The pooled check runs the same machinery on the stacked cross-section
//! with an intercept, which is the classical logistic-regression criterion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::altsets::{softmax_weights, PanelDifferences, DEFAULT_ENUMERATION_GUARD};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values_of_rows};
use crate::panel::PanelDataset;
use crate::qp::{QpOptions, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    ExistsUnique,
    Separated,
    RankDeficient,
}

impl Status {
    pub fn exists(self) -> bool {
        self == Status::ExistsUnique
    }

    pub fn banner(self) -> &'static str {
        match self {
            Status::ExistsUnique => "EXISTS",
            Status::Separated => "SEPARATED",
            Status::RankDeficient => "RANK DEFICIENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Conditional (fixed-effects) check on alternative sets.
    Panel,
    /// Cross-sectional check on the stacked observations.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRank {
    pub beta: Vec<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Rank condition evaluated at finitely many coefficient vectors. A pass
/// means "probed", not "proved" for every β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub ok: bool,
    /// Smallest rank seen across probes.
    pub rank: usize,
    pub dim: usize,
    pub rows: usize,
    pub probes: Vec<ProbeRank>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub kind: CheckKind,
    pub status: Status,
    pub rank: RankReport,
    /// Minimized objective on the normalized constraint vectors.
    pub qp_min: f64,
    /// Unit-normalized `u*`, present iff `status` is `separated`.
    pub direction: Option<Vec<f64>>,
    /// `min_k direction'w_k`.
    pub kkt_min: Option<f64>,
    pub certificate_ok: Option<bool>,
    pub iterations: u64,
    /// Distinct nonzero constraint vectors in the QP.
    pub constraints: usize,
    /// Informative individuals (panel) or observations (pooled).
    pub units: usize,
    pub dropped: usize,
    pub tol: f64,
    pub message: Option<String>,
}

impl ExistenceReport {
    pub fn exists(&self) -> bool {
        self.status.exists()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Decision tolerance on the normalized QP objective.
    pub tol: f64,
    /// Tolerance for the separating-direction certificate.
    pub kkt_tol: f64,
    /// Seed for the random rank probes.
    pub seed: u64,
    /// Random probes in addition to β = 0.
    pub random_probes: usize,
    pub guard: u64,
    pub qp: QpOptions,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            tol: 1e-8,
            kkt_tol: 1e-6,
            seed: 0,
            random_probes: 5,
            guard: DEFAULT_ENUMERATION_GUARD,
            qp: QpOptions::default(),
        }
    }
}

impl DetectOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.qp.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iter(mut self, max_iter: u64) -> Self {
        self.qp.max_iter = max_iter;
        self
    }
}

/// β = 0 followed by `count` standard-normal draws.
pub fn default_probes(dim: usize, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = vec![vec![0.0; dim]];
    probes.extend(
        (0..count).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()),
    );
    probes
}

/// Full-column-rank check of the centered attribute matrix at each probe.
pub fn rank_check(data: &PanelDataset, probes: &[Vec<f64>], guard: u64) -> Result<RankReport> {
    let diffs = PanelDifferences::build(data, guard)?;
    rank_check_prepared(&diffs, probes)
}

pub(crate) fn rank_check_prepared(diffs: &PanelDifferences, probes: &[Vec<f64>]) -> Result<RankReport> {
    let dim = diffs.dim();
    if dim == 0 {
        return Err(Error::contract("rank check needs p ≥ 1"));
    }
    if probes.is_empty() {
        return Err(Error::contract("rank check needs at least one probe"));
    }
    let mut out = Vec::with_capacity(probes.len());
    for beta in probes {
        if beta.len() != dim || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::contract("probe must be a finite vector of length p"));
        }
        // Centering differences (not raw attributes) keeps rows exactly zero
        // when an individual has no within variation.
        let rows = diffs.groups().flat_map(|(_, vs)| {
            let (w, _) = softmax_weights(vs, beta);
            let mut mean = vec![0.0; dim];
            for (v, wj) in vs.iter().zip(&w) {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += wj * x;
                }
            }
            vs.iter()
                .map(move |v| v.iter().zip(&mean).map(|(a, m)| a - m).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        });
        let sv = singular_values_of_rows(dim, rows);
        out.push(ProbeRank {
            beta: beta.clone(),
            rank: numerical_rank(&sv, diffs.total_rows()),
            singular_values: sv,
        });
    }
    let rank = out.iter().map(|p| p.rank).min().unwrap_or(0);
    Ok(RankReport {
        ok: rank == dim,
        rank,
        dim,
        rows: diffs.total_rows(),
        probes: out,
    })
}

/// The conditional separation check on alternative sets.
pub fn detect_panel_separation(data: &PanelDataset, opts: &DetectOptions) -> Result<ExistenceReport> {
    let subset = data.informative_subset()?;
    let diffs = PanelDifferences::build(&subset.data, opts.guard)?;
    let probes = default_probes(data.dim(), opts.seed, opts.random_probes);
    let rank = rank_check_prepared(&diffs, &probes)?;
    let qp = QpProblem::new(data.dim(), diffs.vectors().cloned());
    decide(
        CheckKind::Panel,
        rank,
        &qp,
        subset.data.len(),
        subset.dropped(),
        opts,
    )
}

/// Cross-sectional check: does some `(b0, b) ≠ 0` weakly separate the pooled
/// outcomes, `(2y − 1)(b0 + x'b) ≥ 0` at every observation?
pub fn detect_pooled_separation(data: &PanelDataset, opts: &DetectOptions) -> Result<ExistenceReport> {
    let dim = data.dim() + 1;
    let design: Vec<Vec<f64>> = data
        .observations()
        .map(|(x, _)| std::iter::once(1.0).chain(x.iter().copied()).collect())
        .collect();
    let signed = design.iter().zip(data.observations()).map(|(row, (_, y))| {
        let s = if y == 1 { 1.0 } else { -1.0 };
        row.iter().map(|v| s * v).collect::<Vec<_>>()
    });
    let qp = QpProblem::new(dim, signed);

    let sv = singular_values_of_rows(dim, &design);
    let r = numerical_rank(&sv, design.len());
    let rank = RankReport {
        ok: r == dim,
        rank: r,
        dim,
        rows: design.len(),
        probes: vec![ProbeRank {
            beta: vec![0.0; dim],
            rank: r,
            singular_values: sv,
        }],
    };

    let ones = data.observations().filter(|(_, y)| *y == 1).count();
    let mut report = decide(CheckKind::Pooled, rank, &qp, design.len(), 0, opts)?;
    if ones == 0 || ones == design.len() {
        report.status = Status::Separated;
        report.message = Some("degenerate: one outcome class".into());
        if report.direction.is_none() {
            report.direction = Some(single_class_direction(dim, ones > 0));
            report.kkt_min = report.direction.as_deref().map(|d| qp.min_support(d));
            report.certificate_ok = report.kkt_min.map(|k| k >= -opts.kkt_tol);
        }
    }
    Ok(report)
}

fn single_class_direction(dim: usize, positive: bool) -> Vec<f64> {
    let mut d = vec![0.0; dim];
    d[0] = if positive { 1.0 } else { -1.0 };
    d
}

fn decide(
    kind: CheckKind,
    rank: RankReport,
    qp: &QpProblem,
    units: usize,
    dropped: usize,
    opts: &DetectOptions,
) -> Result<ExistenceReport> {
    let mut report = ExistenceReport {
        kind,
        status: Status::RankDeficient,
        rank,
        qp_min: 0.0,
        direction: None,
        kkt_min: None,
        certificate_ok: None,
        iterations: 0,
        constraints: qp.len(),
        units,
        dropped,
        tol: opts.tol,
        message: None,
    };
    if qp.is_empty() {
        report.message = Some("no covariate variation within any alternative set".into());
        return Ok(report);
    }
    let qp_opts = QpOptions {
        tol: opts.tol,
        ..opts.qp
    };
    let sol = qp.solve(&qp_opts)?;
    report.qp_min = sol.objective;
    report.iterations = sol.iterations;
    if !report.rank.ok {
        report.message = Some(format!(
            "rank condition failed: rank {} < p = {} at a probed β",
            report.rank.rank, report.rank.dim
        ));
        return Ok(report);
    }
    if sol.objective <= opts.tol {
        report.status = Status::ExistsUnique;
    } else {
        let norm = sol.objective.sqrt();
        let dir: Vec<f64> = sol.u.iter().map(|x| x / norm).collect();
        let kkt = qp.min_support(&dir);
        report.status = Status::Separated;
        report.kkt_min = Some(kkt);
        report.certificate_ok = Some(kkt >= -opts.kkt_tol);
        report.direction = Some(dir);
    }
    Ok(report)
}
