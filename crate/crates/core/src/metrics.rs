//! Evaluation metrics and embedding-space diagnostics.
//!
//! Classification scores work on confusion counts with undefined values
//! flagged (`None`) rather than coerced to 0. Diagnostics (silhouette,
//! inter/intra ratio, kNN purity, cluster purity) are geometry-agnostic:
//! they consume a validated pairwise distance matrix, so hyperbolic and
//! Euclidean embeddings are scored identically. Representation similarity
//! uses linear CKA over column-centered features. Everything here is pure
//! and deterministic; ties break by index or lexicographic id so repeated
//! runs produce byte-identical tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingRecord;
use crate::encoder::{word_similarity, EncoderError, ToyEncoderParams};
use crate::geometry::{
    ambient_cosine, geodesic_distance, CurvatureParams, GeometryError, HyperbolicPoint,
};
use crate::hsvdd::{fit_exact, HsvddError};

/// Neighborhood size used by the kNN purity diagnostic.
pub const DEFAULT_KNN_K: usize = 5;

/// Errors from metric computations.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("matrix must be square, got {rows} rows of width {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must be symmetric with zero diagonal (violation at [{i}][{j}])")]
    NotSymmetric { i: usize, j: usize },
    #[error("distances must be finite and nonnegative (violation at [{i}][{j}])")]
    BadDistance { i: usize, j: usize },
    #[error("labels length {labels} does not match instance count {n}")]
    LabelMismatch { labels: usize, n: usize },
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("k must be at least 1")]
    BadK,
    #[error("no safety label for id '{id}'")]
    MissingLabel { id: String },
    #[error("feature rows must share one width, got {0} and {1}")]
    RaggedMatrix(usize, usize),
    #[error("feature matrices disagree on row count: {0} vs {1}")]
    RowCountMismatch(usize, usize),
    #[error("zero-variance input: {0}")]
    ZeroVariance(&'static str),
    #[error("count {count} exceeds total {total}")]
    CountExceedsTotal { count: u64, total: u64 },
    #[error("total must be positive")]
    ZeroTotal,
    #[error("nu must lie in (0, 1], got {0}")]
    BadNu(f64),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("detector error: {0}")]
    Detector(#[from] HsvddError),
    #[error("encoder error: {0}")]
    Encoder(#[from] EncoderError),
}

// ---------------------------------------------------------------------------
// Classification scores
// ---------------------------------------------------------------------------

/// Binary confusion counts; the positive class is label 1 (harmful).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Tallies (predicted, actual) label pairs.
    pub fn tally(pairs: impl IntoIterator<Item = (u8, u8)>) -> Self {
        let mut cc = Self::default();
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (1, 1) => cc.tp += 1,
                (1, 0) => cc.fp += 1,
                (0, 0) => cc.tn += 1,
                _ => cc.fn_ += 1,
            }
        }
        cc
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Precision/recall/F1 with zero-denominator cases flagged as `None`
/// instead of being coerced to 0 or 1. F1 is defined only when both
/// precision and recall are defined and not both zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn precision_recall_f1(cc: &ConfusionCounts) -> PrecisionRecallF1 {
    let precision = (cc.tp + cc.fp > 0).then(|| cc.tp as f64 / (cc.tp + cc.fp) as f64);
    let recall = (cc.tp + cc.fn_ > 0).then(|| cc.tp as f64 / (cc.tp + cc.fn_) as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    PrecisionRecallF1 {
        precision,
        recall,
        f1,
    }
}

/// Fraction of correct verdicts.
pub fn accuracy(cc: &ConfusionCounts) -> Result<f64, MetricsError> {
    let total = cc.total();
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    Ok((cc.tp + cc.tn) as f64 / total as f64)
}

/// Attack success rate: evasions over attempts.
pub fn asr(evasions: u64, total: u64) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    if evasions > total {
        return Err(MetricsError::CountExceedsTotal {
            count: evasions,
            total,
        });
    }
    Ok(evasions as f64 / total as f64)
}

// ---------------------------------------------------------------------------
// Retrieval scores
// ---------------------------------------------------------------------------

/// A retrieval score plus a flag set when some ranking held fewer than `k`
/// items and was scored over what was available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub value: f64,
    pub truncated: bool,
}

/// Fraction of queries whose relevant id appears in the top-k of its
/// ranking.
pub fn recall_at_k(
    rankings: &[Vec<String>],
    relevant: &[String],
    k: usize,
) -> Result<AtK, MetricsError> {
    if k == 0 {
        return Err(MetricsError::BadK);
    }
    if rankings.is_empty() {
        return Err(MetricsError::Empty("rankings"));
    }
    if rankings.len() != relevant.len() {
        return Err(MetricsError::LabelMismatch {
            labels: relevant.len(),
            n: rankings.len(),
        });
    }
    let mut hits = 0usize;
    let mut truncated = false;
    for (ranking, rel) in rankings.iter().zip(relevant) {
        if ranking.is_empty() {
            return Err(MetricsError::Empty("ranking"));
        }
        let depth = k.min(ranking.len());
        truncated |= depth < k;
        hits += usize::from(ranking[..depth].iter().any(|id| id == rel));
    }
    Ok(AtK {
        value: hits as f64 / rankings.len() as f64,
        truncated,
    })
}

/// Mean over queries of the fraction of safe items among the top-k
/// retrieved.
pub fn safe_at_k(
    rankings: &[Vec<String>],
    safety: &BTreeMap<String, bool>,
    k: usize,
) -> Result<AtK, MetricsError> {
    if k == 0 {
        return Err(MetricsError::BadK);
    }
    if rankings.is_empty() {
        return Err(MetricsError::Empty("rankings"));
    }
    let mut sum = 0.0;
    let mut truncated = false;
    for ranking in rankings {
        if ranking.is_empty() {
            return Err(MetricsError::Empty("ranking"));
        }
        let depth = k.min(ranking.len());
        truncated |= depth < k;
        let mut safe = 0usize;
        for id in &ranking[..depth] {
            match safety.get(id) {
                Some(true) => safe += 1,
                Some(false) => {}
                None => return Err(MetricsError::MissingLabel { id: id.clone() }),
            }
        }
        sum += safe as f64 / depth as f64;
    }
    Ok(AtK {
        value: sum / rankings.len() as f64,
        truncated,
    })
}

/// Ranks a pool by descending ambient cosine against the query; ties break
/// by ascending id so output order is total and reproducible.
pub fn rank_by_cosine(
    query: &HyperbolicPoint,
    pool: &[EmbeddingRecord],
) -> Result<Vec<String>, MetricsError> {
    if pool.is_empty() {
        return Err(MetricsError::Empty("pool"));
    }
    let mut scored: Vec<(f64, &str)> = Vec::with_capacity(pool.len());
    for record in pool {
        scored.push((ambient_cosine(query, &record.point)?, record.id.as_str()));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("cosines are finite")
            .then_with(|| a.1.cmp(b.1))
    });
    Ok(scored.into_iter().map(|(_, id)| id.to_string()).collect())
}

// ---------------------------------------------------------------------------
// Distance-matrix diagnostics
// ---------------------------------------------------------------------------

/// Validated square symmetric pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Absolute slack allowed when validating externally supplied matrices.
const MATRIX_SYMMETRY_TOL: f64 = 1e-9;
const MATRIX_DIAGONAL_TOL: f64 = 1e-12;

impl DistanceMatrix {
    /// Validates and adopts a full matrix given as rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricsError::Empty("distance matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MetricsError::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricsError::BadDistance { i, j });
                }
            }
            if row[i].abs() > MATRIX_DIAGONAL_TOL {
                return Err(MetricsError::NotSymmetric { i, j: i });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > MATRIX_SYMMETRY_TOL {
                    return Err(MetricsError::NotSymmetric { i, j });
                }
            }
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Self { n, data })
    }

    /// Pairwise geodesic distances, rows computed in parallel blocks.
    pub fn from_points(
        points: &[HyperbolicPoint],
        c: &CurvatureParams,
    ) -> Result<Self, MetricsError> {
        if points.is_empty() {
            return Err(MetricsError::Empty("points"));
        }
        let n = points.len();
        let threads = std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
            .min(8)
            .min(n);
        let block = n.div_ceil(threads);
        let mut rows: Vec<Result<Vec<f64>, GeometryError>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for start in (0..n).step_by(block) {
                let end = (start + block).min(n);
                handles.push(scope.spawn(move || {
                    let mut out = Vec::with_capacity(end - start);
                    for i in start..end {
                        let mut row = Vec::with_capacity(n);
                        for j in 0..n {
                            // d(i,i) is exactly zero; off-diagonal entries are
                            // symmetric because the Lorentz inner product is
                            // evaluated in the same index order either way.
                            row.push(if i == j {
                                0.0
                            } else {
                                geodesic_distance(&points[i], &points[j], c)?
                            });
                        }
                        out.push(row);
                    }
                    Ok(out)
                }));
            }
            for handle in handles {
                match handle.join().expect("distance worker panicked") {
                    Ok(block_rows) => rows.extend(block_rows.into_iter().map(Ok)),
                    Err(e) => rows.push(Err(e)),
                }
            }
        });
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend(row?);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

fn check_labels(dm: &DistanceMatrix, labels: &[usize]) -> Result<(), MetricsError> {
    if labels.len() != dm.n() {
        return Err(MetricsError::LabelMismatch {
            labels: labels.len(),
            n: dm.n(),
        });
    }
    Ok(())
}

fn class_count(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Mean silhouette width over all points. Points in singleton classes
/// contribute 0.
pub fn silhouette(dm: &DistanceMatrix, labels: &[usize]) -> Result<f64, MetricsError> {
    check_labels(dm, labels)?;
    let n = dm.n();
    let classes = class_count(labels);
    if classes < 2 {
        return Err(MetricsError::TooFewClasses(classes));
    }
    let mut class_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *class_sizes.entry(l).or_insert(0) += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if class_sizes[&own] == 1 {
            continue; // s(i) = 0
        }
        let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
        for j in 0..n {
            if j != i {
                *sums.entry(labels[j]).or_insert(0.0) += dm.get(i, j);
            }
        }
        let a = sums[&own] / (class_sizes[&own] - 1) as f64;
        let b = sums
            .iter()
            .filter(|(l, _)| **l != own)
            .map(|(l, s)| s / class_sizes[l] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Mean distance between points of different classes divided by the mean
/// distance between points of the same class (over unordered pairs).
/// Larger means better-separated classes.
pub fn inter_intra_ratio(dm: &DistanceMatrix, labels: &[usize]) -> Result<f64, MetricsError> {
    check_labels(dm, labels)?;
    if class_count(labels) < 2 {
        return Err(MetricsError::TooFewClasses(class_count(labels)));
    }
    let n = dm.n();
    let (mut inter_sum, mut inter_cnt) = (0.0, 0u64);
    let (mut intra_sum, mut intra_cnt) = (0.0, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                intra_sum += dm.get(i, j);
                intra_cnt += 1;
            } else {
                inter_sum += dm.get(i, j);
                inter_cnt += 1;
            }
        }
    }
    if intra_cnt == 0 {
        return Err(MetricsError::Degenerate("no same-class pairs"));
    }
    let intra = intra_sum / intra_cnt as f64;
    if intra == 0.0 {
        return Err(MetricsError::Degenerate("intra-class distances are all zero"));
    }
    Ok((inter_sum / inter_cnt as f64) / intra)
}

/// Mean over points of the fraction of their k nearest neighbors (self
/// excluded, distance ties broken by index order) sharing the point's label.
pub fn knn_purity(dm: &DistanceMatrix, labels: &[usize], k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::BadK);
    }
    check_labels(dm, labels)?;
    let n = dm.n();
    if n < 2 {
        return Err(MetricsError::Degenerate("need at least two points"));
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut neighbors: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        neighbors.sort_by(|&a, &b| {
            dm.get(i, a)
                .partial_cmp(&dm.get(i, b))
                .expect("distances are finite")
                .then(a.cmp(&b))
        });
        let depth = k.min(neighbors.len());
        let same = neighbors[..depth]
            .iter()
            .filter(|&&j| labels[j] == labels[i])
            .count();
        total += same as f64 / depth as f64;
    }
    Ok(total / n as f64)
}

/// Clusters the points with deterministic k-medoids (k = number of distinct
/// labels, farthest-point initialization seeded at the most central point,
/// ties to the lower index) and returns the purity of the resulting
/// clustering against the labels.
pub fn cluster_purity(dm: &DistanceMatrix, labels: &[usize]) -> Result<f64, MetricsError> {
    check_labels(dm, labels)?;
    let n = dm.n();
    let k = class_count(labels);
    if k == 0 {
        return Err(MetricsError::Empty("labels"));
    }

    // Farthest-point seeding: start from the medoid of the whole set, then
    // repeatedly add the point farthest from the chosen set.
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let central = (0..n)
        .min_by(|&a, &b| {
            let sa: f64 = (0..n).map(|j| dm.get(a, j)).sum();
            let sb: f64 = (0..n).map(|j| dm.get(b, j)).sum();
            sa.partial_cmp(&sb).expect("finite").then(a.cmp(&b))
        })
        .expect("n >= 1");
    medoids.push(central);
    while medoids.len() < k {
        let next = (0..n)
            .filter(|i| !medoids.contains(i))
            .max_by(|&a, &b| {
                let da = medoids.iter().map(|&m| dm.get(a, m)).fold(f64::INFINITY, f64::min);
                let db = medoids.iter().map(|&m| dm.get(b, m)).fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).expect("finite").then(b.cmp(&a))
            })
            .expect("fewer medoids than points");
        medoids.push(next);
    }

    let assign = |medoids: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                (0..medoids.len())
                    .min_by(|&a, &b| {
                        dm.get(i, medoids[a])
                            .partial_cmp(&dm.get(i, medoids[b]))
                            .expect("finite")
                            .then(a.cmp(&b))
                    })
                    .expect("k >= 1")
            })
            .collect()
    };

    let mut assignment = assign(&medoids);
    for _ in 0..100 {
        let mut next_medoids = medoids.clone();
        for (cluster, slot) in next_medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == cluster).collect();
            if members.is_empty() {
                continue;
            }
            *slot = members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let sa: f64 = members.iter().map(|&j| dm.get(a, j)).sum();
                    let sb: f64 = members.iter().map(|&j| dm.get(b, j)).sum();
                    sa.partial_cmp(&sb).expect("finite").then(a.cmp(&b))
                })
                .expect("nonempty");
        }
        let next_assignment = assign(&next_medoids);
        if next_medoids == medoids && next_assignment == assignment {
            break;
        }
        medoids = next_medoids;
        assignment = next_assignment;
    }

    let mut purity_sum = 0usize;
    for cluster in 0..k {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..n {
            if assignment[i] == cluster {
                *counts.entry(labels[i]).or_insert(0) += 1;
            }
        }
        purity_sum += counts.values().copied().max().unwrap_or(0);
    }
    Ok(purity_sum as f64 / n as f64)
}

// ---------------------------------------------------------------------------
// Representation similarity
// ---------------------------------------------------------------------------

/// Linear centered kernel alignment between two feature matrices (rows are
/// samples). Invariant to orthogonal transforms and isotropic scaling of
/// either argument.
pub fn linear_cka(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricsError::Empty("feature matrix"));
    }
    if x.len() != y.len() {
        return Err(MetricsError::RowCountMismatch(x.len(), y.len()));
    }
    let center = |m: &[Vec<f64>]| -> Result<Vec<Vec<f64>>, MetricsError> {
        let cols = m[0].len();
        for row in m {
            if row.len() != cols {
                return Err(MetricsError::RaggedMatrix(cols, row.len()));
            }
        }
        let n = m.len() as f64;
        let means: Vec<f64> = (0..cols)
            .map(|j| m.iter().map(|row| row[j]).sum::<f64>() / n)
            .collect();
        Ok(m.iter()
            .map(|row| row.iter().zip(&means).map(|(v, mu)| v - mu).collect())
            .collect())
    };
    let xc = center(x)?;
    let yc = center(y)?;

    // Frobenius norms of cross- and self-covariance (gram) products via
    // feature-space sums: ||X^T Y||_F^2 = sum_{a,b} (x_a . y_b)^2.
    let cross_sq = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        let pa = a[0].len();
        let pb = b[0].len();
        let mut total = 0.0;
        for ca in 0..pa {
            for cb in 0..pb {
                let dot: f64 = a.iter().zip(b).map(|(ra, rb)| ra[ca] * rb[cb]).sum();
                total += dot * dot;
            }
        }
        total
    };
    let xx = cross_sq(&xc, &xc);
    let yy = cross_sq(&yc, &yc);
    if xx == 0.0 {
        return Err(MetricsError::ZeroVariance("first argument"));
    }
    if yy == 0.0 {
        return Err(MetricsError::ZeroVariance("second argument"));
    }
    Ok(cross_sq(&xc, &yc) / (xx.sqrt() * yy.sqrt()))
}

/// Embedding-space diagnostics over one labeled set; `None` marks metrics
/// whose preconditions the input did not meet (e.g. a single class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub silhouette: Option<f64>,
    pub inter_intra_ratio: Option<f64>,
    pub knn5_purity: Option<f64>,
    pub cluster_purity: Option<f64>,
    pub cka: Option<f64>,
}

/// Runs every distance-based diagnostic, mapping degenerate-input failures
/// to `None` and propagating structural errors (bad matrix, label
/// mismatch). CKA is supplied by the caller when a second view exists.
pub fn diagnostics_report(
    dm: &DistanceMatrix,
    labels: &[usize],
    cka: Option<f64>,
) -> Result<DiagnosticsReport, MetricsError> {
    check_labels(dm, labels)?;
    let soften = |r: Result<f64, MetricsError>| -> Result<Option<f64>, MetricsError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricsError::TooFewClasses(_)) | Err(MetricsError::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(DiagnosticsReport {
        silhouette: soften(silhouette(dm, labels))?,
        inter_intra_ratio: soften(inter_intra_ratio(dm, labels))?,
        knn5_purity: soften(knn_purity(dm, labels, DEFAULT_KNN_K))?,
        cluster_purity: soften(cluster_purity(dm, labels))?,
        cka,
    })
}

// ---------------------------------------------------------------------------
// Detector sweeps
// ---------------------------------------------------------------------------

/// One row of a slack-fraction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSweepRow {
    pub nu: f64,
    pub radius: f64,
    /// Fraction of label-0 eval points inside the boundary.
    pub benign_accuracy: Option<f64>,
    /// Fraction of label-1 eval points outside the boundary.
    pub malicious_accuracy: Option<f64>,
    pub f1: Option<f64>,
}

/// Refits the boundary radius for each ν on the grid and scores the eval
/// pairs (origin distance, label) against it.
pub fn nu_sweep(
    train_distances: &[f64],
    eval: &[(f64, u8)],
    nu_grid: &[f64],
) -> Result<Vec<NuSweepRow>, MetricsError> {
    if nu_grid.is_empty() {
        return Err(MetricsError::Empty("nu grid"));
    }
    if eval.is_empty() {
        return Err(MetricsError::Empty("eval set"));
    }
    for &nu in nu_grid {
        if !(nu.is_finite() && nu > 0.0 && nu <= 1.0) {
            return Err(MetricsError::BadNu(nu));
        }
    }
    let mut rows = Vec::with_capacity(nu_grid.len());
    for &nu in nu_grid {
        let radius = fit_exact(train_distances, nu)?;
        let mut cc = ConfusionCounts::default();
        let (mut benign_ok, mut benign_n, mut mal_ok, mut mal_n) = (0u64, 0u64, 0u64, 0u64);
        for &(d, label) in eval {
            let predicted = u8::from(d > radius);
            match (predicted, label) {
                (1, 1) => cc.tp += 1,
                (1, 0) => cc.fp += 1,
                (0, 0) => cc.tn += 1,
                _ => cc.fn_ += 1,
            }
            if label == 0 {
                benign_n += 1;
                benign_ok += u64::from(predicted == 0);
            } else {
                mal_n += 1;
                mal_ok += u64::from(predicted == 1);
            }
        }
        rows.push(NuSweepRow {
            nu,
            radius,
            benign_accuracy: (benign_n > 0).then(|| benign_ok as f64 / benign_n as f64),
            malicious_accuracy: (mal_n > 0).then(|| mal_ok as f64 / mal_n as f64),
            f1: precision_recall_f1(&cc).f1,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Word frequency and semantic similarity
// ---------------------------------------------------------------------------

/// One aggregated flagged-word row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: u64,
}

/// Aggregates the top-`top_k` flagged words of each prompt into a frequency
/// table sorted by descending count, then word. Prompts with fewer flagged
/// words contribute what they have.
pub fn word_frequency_report(
    ranked_words_per_prompt: &[Vec<String>],
    top_k: usize,
) -> Result<Vec<WordCount>, MetricsError> {
    if top_k == 0 {
        return Err(MetricsError::BadK);
    }
    if ranked_words_per_prompt.is_empty() {
        return Err(MetricsError::Empty("word lists"));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for words in ranked_words_per_prompt {
        for word in words.iter().take(top_k) {
            *counts.entry(word.as_str()).or_insert(0) += 1;
        }
    }
    let mut rows: Vec<WordCount> = counts
        .into_iter()
        .map(|(word, count)| WordCount {
            word: word.to_string(),
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    Ok(rows)
}

/// Cosine similarity of the pooled pre-map vectors of two prompts:
/// symmetric, 1 for identical prompts.
pub fn semantic_similarity(
    a: &str,
    b: &str,
    params: &ToyEncoderParams,
) -> Result<f64, MetricsError> {
    Ok(word_similarity(a, b, params)?)
}
