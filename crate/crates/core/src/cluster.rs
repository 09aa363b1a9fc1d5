//! Spatial k-means over event locations with elbow-based model selection.
//!
//! Seeding is deterministic for a fixed seed: candidate centers are drawn
//! with the squared-distance weighting from a lexicographically sorted copy
//! of the points, so permuting the input changes labels but not centroids.
//! The elbow curve reuses each best solution as a warm start for the next
//! k, which keeps explained variance monotone in k.

use crate::geometry::Vec3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default Lloyd iteration cap per restart.
pub const DEFAULT_MAX_ITERS: usize = 20;
/// Default relative distortion change that stops iteration.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of independent seeding restarts.
pub const DEFAULT_N_INIT: usize = 10;
/// Default marginal-gain threshold (percentage points) for the elbow plateau.
pub const DEFAULT_GAIN_THRESHOLD_PCT: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {distinct} distinct points available")]
    InsufficientPoints { k: usize, distinct: usize },
    #[error("empty k range")]
    EmptyKRange,
}

/// Result of one k-means fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster index per input point, in input order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; 3]>,
    /// Mean squared point-to-centroid distance, m^2.
    pub distortion: f64,
    pub iterations_run: usize,
}

impl ClusterModel {
    pub fn centroid_vec(&self, i: usize) -> Vec3 {
        Vec3::new(self.centroids[i][0], self.centroids[i][1], self.centroids[i][2])
    }

    pub fn member_count(&self, cluster: usize) -> usize {
        self.assignments.iter().filter(|&&a| a == cluster).count()
    }
}

/// Knobs shared by [`kmeans`] and [`elbow_curve`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iters: usize,
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            n_init: DEFAULT_N_INIT,
            seed: 0,
        }
    }
}

fn count_distinct(points: &[Vec3]) -> usize {
    let mut sorted = points.to_vec();
    sort_lexicographic(&mut sorted);
    let mut distinct = 0;
    for (i, p) in sorted.iter().enumerate() {
        if i == 0 || sorted[i - 1] != *p {
            distinct += 1;
        }
    }
    distinct
}

fn sort_lexicographic(points: &mut [Vec3]) {
    points.sort_by(|a, b| {
        (a.x, a.y, a.z)
            .partial_cmp(&(b.x, b.y, b.z))
            .expect("event coordinates must not be NaN")
    });
}

/// Squared-distance-weighted seeding on a sorted copy of the points.
fn seed_centroids(sorted: &[Vec3], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut centers: Vec<Vec3> = Vec::with_capacity(k);
    centers.push(sorted[rng.gen_range(0..sorted.len())]);
    let mut d2: Vec<f64> = sorted.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = sorted.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            sorted[pick]
        } else {
            // All remaining mass is on existing centers; take the first
            // point not already chosen (guaranteed by the distinct check).
            *sorted
                .iter()
                .find(|p| !centers.contains(p))
                .expect("distinct point count checked before seeding")
        };
        centers.push(next);
        for (i, p) in sorted.iter().enumerate() {
            d2[i] = d2[i].min((p - next).norm_squared());
        }
    }
    centers
}

struct LloydFit {
    assignments: Vec<usize>,
    centroids: Vec<Vec3>,
    distortion: f64,
    iterations: usize,
}

fn assign(points: &[Vec3], centers: &[Vec3], assignments: &mut [usize]) -> f64 {
    let mut sse = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = (p - center).norm_squared();
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        sse += best_d;
    }
    sse / points.len() as f64
}

fn lloyd(points: &[Vec3], mut centers: Vec<Vec3>, max_iters: usize, tol: f64) -> LloydFit {
    let k = centers.len();
    let mut assignments = vec![0usize; points.len()];
    let mut distortion = assign(points, &centers, &mut assignments);
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let mut sums = vec![Vec3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(assignments.iter()) {
            sums[a] += p;
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c] / counts[c] as f64;
            }
        }
        // Empty clusters steal the point farthest from the centroid of the
        // largest cluster.
        while let Some(empty) = counts.iter().position(|&n| n == 0) {
            let largest = (0..k).max_by_key(|&c| counts[c]).unwrap();
            let (far_idx, _) = points
                .iter()
                .enumerate()
                .filter(|(i, _)| assignments[*i] == largest)
                .map(|(i, p)| (i, (p - centers[largest]).norm_squared()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .expect("largest cluster is non-empty");
            centers[empty] = points[far_idx];
            assignments[far_idx] = empty;
            counts[empty] = 1;
            counts[largest] -= 1;
        }

        let new_distortion = assign(points, &centers, &mut assignments);
        let converged = if distortion > 0.0 {
            (distortion - new_distortion).abs() <= tol * distortion
        } else {
            true
        };
        distortion = new_distortion;
        if converged {
            break;
        }
    }
    LloydFit { assignments, centroids: centers, distortion, iterations }
}

fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ restart.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn fit_to_model(fit: LloydFit, k: usize) -> ClusterModel {
    ClusterModel {
        k,
        assignments: fit.assignments,
        centroids: fit.centroids.iter().map(|c| [c.x, c.y, c.z]).collect(),
        distortion: fit.distortion,
        iterations_run: fit.iterations,
    }
}

/// Fits k clusters with `params.n_init` seeded restarts and returns the
/// lowest-distortion model (ties broken toward the earlier restart).
pub fn kmeans(points: &[Vec3], k: usize, params: &KMeansParams) -> Result<ClusterModel, ClusterError> {
    kmeans_with_extra_start(points, k, params, None)
}

fn kmeans_with_extra_start(
    points: &[Vec3],
    k: usize,
    params: &KMeansParams,
    extra_start: Option<Vec<Vec3>>,
) -> Result<ClusterModel, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(ClusterError::InsufficientPoints { k, distinct });
    }
    let mut sorted = points.to_vec();
    sort_lexicographic(&mut sorted);

    let mut best: Option<LloydFit> = None;
    let starts = (0..params.n_init.max(1))
        .map(|r| seed_centroids(&sorted, k, &mut restart_rng(params.seed, r as u64)))
        .chain(extra_start);
    for centers in starts {
        let fit = lloyd(points, centers, params.max_iters, params.tol);
        let better = match &best {
            None => true,
            Some(b) => fit.distortion < b.distortion,
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(fit_to_model(best.expect("at least one restart"), k))
}

/// Explained-variance curve over a k range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    /// `(k, percent of total variance explained)` in increasing k.
    pub entries: Vec<(usize, f64)>,
}

/// Fits every k in `k_min..=k_max` and reports the percentage of total
/// variance explained. The best centroid set at k-1, augmented with the
/// point farthest from its centroid, seeds one extra restart at k, which
/// makes the curve non-decreasing.
pub fn elbow_curve(
    points: &[Vec3],
    k_min: usize,
    k_max: usize,
    params: &KMeansParams,
) -> Result<(ElbowCurve, Vec<ClusterModel>), ClusterError> {
    if k_min == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k_max < k_min {
        return Err(ClusterError::EmptyKRange);
    }
    let distinct = count_distinct(points);
    if k_max > distinct {
        return Err(ClusterError::InsufficientPoints { k: k_max, distinct });
    }

    let mean = points.iter().sum::<Vec3>() / points.len() as f64;
    let total_variance =
        points.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / points.len() as f64;

    let mut entries = Vec::new();
    let mut models: Vec<ClusterModel> = Vec::new();
    let mut prev: Option<ClusterModel> = None;
    for k in k_min..=k_max {
        let warm = prev.as_ref().map(|m| {
            let mut centers: Vec<Vec3> = (0..m.k).map(|i| m.centroid_vec(i)).collect();
            let (far, _) = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - m.centroid_vec(m.assignments[i])).norm_squared()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .expect("points non-empty");
            centers.push(points[far]);
            centers
        });
        let model = kmeans_with_extra_start(points, k, params, warm)?;
        let pct = if total_variance > 0.0 {
            100.0 * (1.0 - model.distortion / total_variance)
        } else {
            100.0
        };
        entries.push((k, pct));
        prev = Some(model.clone());
        models.push(model);
    }
    Ok((ElbowCurve { entries }, models))
}

/// Elbow plateau: every k from the first k whose successor adds less than
/// `gain_threshold_pct` percentage points, through the end of the range.
/// Defaults to the last k when the curve never flattens.
pub fn plateau(curve: &ElbowCurve, gain_threshold_pct: f64) -> Vec<usize> {
    let e = &curve.entries;
    for idx in 0..e.len() - 1 {
        if e[idx + 1].1 - e[idx].1 < gain_threshold_pct {
            return e[idx..].iter().map(|&(k, _)| k).collect();
        }
    }
    vec![e[e.len() - 1].0]
}

/// Picks the cluster count: the plateau member equal to the larger of the
/// two focal-mechanism peak counts when present, otherwise the smallest
/// plateau member.
pub fn select_k(
    curve: &ElbowCurve,
    strike_peaks: usize,
    dip_peaks: usize,
    gain_threshold_pct: f64,
) -> usize {
    let candidates = plateau(curve, gain_threshold_pct);
    let preferred = strike_peaks.max(dip_peaks);
    if candidates.contains(&preferred) {
        preferred
    } else {
        candidates[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use rand_chacha::ChaCha8Rng;

    fn blob(center: Vec3, n: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                center
                    + Vec3::new(
                        rng.gen_range(-spread..spread),
                        rng.gen_range(-spread..spread),
                        rng.gen_range(-spread..spread),
                    )
            })
            .collect()
    }

    #[test]
    fn one_cluster_recovers_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = blob(Vec3::new(5.0, -3.0, 2.0), 200, 10.0, &mut rng);
        let model = kmeans(&pts, 1, &KMeansParams::default()).unwrap();
        let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
        let var = pts.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / pts.len() as f64;
        assert_relative_eq!(model.centroid_vec(0).x, mean.x, epsilon = 1e-9);
        assert_relative_eq!(model.centroid_vec(0).y, mean.y, epsilon = 1e-9);
        assert_relative_eq!(model.centroid_vec(0).z, mean.z, epsilon = 1e-9);
        assert_relative_eq!(model.distortion, var, epsilon = 1e-9);
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_distortion() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(10.0, 0.0, 0.0),
            Vec3::new(0.0, 10.0, 0.0),
            Vec3::new(0.0, 0.0, 10.0),
        ];
        let model = kmeans(&pts, 4, &KMeansParams::default()).unwrap();
        assert_relative_eq!(model.distortion, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn k_beyond_distinct_points_errors() {
        let pts = vec![Vec3::zeros(), Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(
            kmeans(&pts, 3, &KMeansParams::default()),
            Err(ClusterError::InsufficientPoints { k: 3, distinct: 2 })
        );
        assert_eq!(kmeans(&pts, 0, &KMeansParams::default()), Err(ClusterError::ZeroK));
    }

    #[test]
    fn well_separated_blobs_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centers = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(100.0, 0.0, 0.0),
            Vec3::new(0.0, 100.0, 0.0),
        ];
        let mut pts = Vec::new();
        for c in centers {
            pts.extend(blob(c, 80, 5.0, &mut rng));
        }
        let model = kmeans(&pts, 3, &KMeansParams::default()).unwrap();
        for c in centers {
            let nearest = (0..3)
                .map(|i| (model.centroid_vec(i) - c).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 3.0, "no centroid near {c:?} (best {nearest})");
        }
    }

    #[test]
    fn permuting_points_preserves_the_centroid_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut pts = blob(Vec3::zeros(), 60, 20.0, &mut rng);
        pts.extend(blob(Vec3::new(200.0, 50.0, -30.0), 60, 20.0, &mut rng));
        let params = KMeansParams::default();
        let base = kmeans(&pts, 2, &params).unwrap();
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut rng);
        let other = kmeans(&shuffled, 2, &params).unwrap();

        let mut a = base.centroids.clone();
        let mut b = other.centroids.clone();
        let key = |c: &[f64; 3]| (c[0], c[1], c[2]);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (ca, cb) in a.iter().zip(&b) {
            for d in 0..3 {
                assert_relative_eq!(ca[d], cb[d], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn elbow_curve_is_monotone_and_spans_zero_to_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pts: Vec<Vec3> = (0..12)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                )
            })
            .collect();
        let (curve, _) = elbow_curve(&pts, 1, 12, &KMeansParams::default()).unwrap();
        assert_relative_eq!(curve.entries[0].1, 0.0, epsilon = 1e-9);
        assert_relative_eq!(curve.entries.last().unwrap().1, 100.0, epsilon = 1e-9);
        for w in curve.entries.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9, "explained variance dropped: {w:?}");
        }
    }

    #[test]
    fn select_k_prefers_the_focal_peak_count_inside_the_plateau() {
        let curve = ElbowCurve {
            entries: vec![(1, 0.0), (2, 70.0), (3, 95.0), (4, 96.0), (5, 96.5)],
        };
        assert_eq!(plateau(&curve, 5.0), vec![3, 4, 5]);
        assert_eq!(select_k(&curve, 2, 3, 5.0), 3);
        assert_eq!(select_k(&curve, 2, 2, 5.0), 3); // falls back to smallest
        assert_eq!(select_k(&curve, 4, 2, 5.0), 4);
    }

    #[test]
    fn steep_curve_plateau_is_the_last_k() {
        let curve = ElbowCurve { entries: vec![(1, 0.0), (2, 50.0), (3, 80.0), (4, 99.0)] };
        assert_eq!(plateau(&curve, 5.0), vec![4]);
        assert_eq!(select_k(&curve, 4, 4, 5.0), 4);
    }
}
