//! Orientation statistics from event coordinates.
//!
//! Every 3-combination of events defines a candidate fracture plane. The
//! strike and dip angles of all such planes are accumulated into normalized
//! histograms; dominant histogram peaks become hard orientation intervals
//! for the downstream length inversion. The full enumeration is exact, so
//! guard rails on the combination count keep runtime bounded.

use crate::cluster::ClusterModel;
use crate::geometry::{plane_from_points, strike_dip_from_plane, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default histogram bin width, degrees.
pub const DEFAULT_BIN_WIDTH_DEG: f64 = 10.0;
/// Default fraction of the maximum bin mass a bin must reach to join a peak.
pub const DEFAULT_MASS_THRESHOLD: f64 = 0.25;
/// Default cap on the number of enumerated 3-combinations.
pub const DEFAULT_MAX_COMBINATIONS: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OrientationError {
    #[error("need at least 3 events, got {0}")]
    TooFewEvents(usize),
    #[error("{count} 3-combinations exceed the cap of {cap}")]
    TooManyCombinations { count: u64, cap: u64 },
    #[error("every 3-combination was degenerate")]
    AllDegenerate,
    #[error("bin width {0} does not divide 180 into a whole number of bins")]
    BadBinWidth(f64),
    #[error("cluster {cluster} has only {members} members, need at least 3")]
    InsufficientClusterMembers { cluster: usize, members: usize },
}

/// Which angle a distribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleKind {
    Strike,
    Dip,
}

/// Normalized histogram over `[0, 180]` degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDistribution {
    pub kind: AngleKind,
    pub bin_width_deg: f64,
    /// Mass per bin; sums to 1 unless the distribution is empty.
    pub masses: Vec<f64>,
}

impl AngleDistribution {
    pub fn from_counts(
        kind: AngleKind,
        bin_width_deg: f64,
        counts: &[u64],
    ) -> Result<Self, OrientationError> {
        let n = n_bins(bin_width_deg)?;
        assert_eq!(counts.len(), n, "count vector does not match bin grid");
        let total: u64 = counts.iter().sum();
        let masses = if total == 0 {
            vec![0.0; n]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        Ok(AngleDistribution { kind, bin_width_deg, masses })
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    /// Total mass in `[lo_deg, hi_deg)`, summed over whole bins.
    pub fn mass_in(&self, lo_deg: f64, hi_deg: f64) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let bin_lo = *i as f64 * self.bin_width_deg;
                bin_lo >= lo_deg - 1e-9 && bin_lo < hi_deg - 1e-9
            })
            .map(|(_, m)| m)
            .sum()
    }
}

/// Half-open angle interval `[lo_deg, hi_deg)` within `[0, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub lo_deg: f64,
    pub hi_deg: f64,
}

impl AngleInterval {
    pub fn contains(&self, angle_deg: f64) -> bool {
        angle_deg >= self.lo_deg && angle_deg < self.hi_deg
    }

    pub fn width(&self) -> f64 {
        self.hi_deg - self.lo_deg
    }

    pub fn intersect(&self, other: &AngleInterval) -> Option<AngleInterval> {
        let lo = self.lo_deg.max(other.lo_deg);
        let hi = self.hi_deg.min(other.hi_deg);
        if lo < hi {
            Some(AngleInterval { lo_deg: lo, hi_deg: hi })
        } else {
            None
        }
    }
}

/// Strike and dip histograms from one enumeration run, with triple counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationHistograms {
    pub strike: AngleDistribution,
    pub dip: AngleDistribution,
    pub accepted_triples: u64,
    pub degenerate_triples: u64,
}

/// Exact number of 3-combinations of `n` items.
pub fn combination_count(n: usize) -> u64 {
    let n = n as u128;
    if n < 3 {
        return 0;
    }
    (n * (n - 1) * (n - 2) / 6) as u64
}

pub(crate) fn n_bins(bin_width_deg: f64) -> Result<usize, OrientationError> {
    if !(bin_width_deg > 0.0) {
        return Err(OrientationError::BadBinWidth(bin_width_deg));
    }
    let n = 180.0 / bin_width_deg;
    if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
        return Err(OrientationError::BadBinWidth(bin_width_deg));
    }
    Ok(n.round() as usize)
}

pub(crate) fn bin_index(angle_deg: f64, bin_width_deg: f64, n: usize) -> usize {
    ((angle_deg / bin_width_deg) as usize).min(n - 1)
}

/// Raw integer histogram state for one enumeration chunk.
#[derive(Clone)]
struct ChunkCounts {
    strike: Vec<u64>,
    dip: Vec<u64>,
    accepted: u64,
    degenerate: u64,
}

impl ChunkCounts {
    fn new(n_bins: usize) -> Self {
        ChunkCounts {
            strike: vec![0; n_bins],
            dip: vec![0; n_bins],
            accepted: 0,
            degenerate: 0,
        }
    }

    fn record(&mut self, coords: &[Vec3], i: usize, j: usize, k: usize, width: f64) {
        match plane_from_points(coords[i], coords[j], coords[k]) {
            Ok(plane) => {
                let sd = strike_dip_from_plane(&plane);
                let n = self.strike.len();
                self.strike[bin_index(sd.strike_deg, width, n)] += 1;
                self.dip[bin_index(sd.dip_deg, width, n)] += 1;
                self.accepted += 1;
            }
            Err(_) => self.degenerate += 1,
        }
    }

    fn merge(mut self, other: &ChunkCounts) -> ChunkCounts {
        for (a, b) in self.strike.iter_mut().zip(&other.strike) {
            *a += b;
        }
        for (a, b) in self.dip.iter_mut().zip(&other.dip) {
            *a += b;
        }
        self.accepted += other.accepted;
        self.degenerate += other.degenerate;
        self
    }
}

/// Maps a lexicographic combination rank to the triple `(i, j, k)`.
fn unrank_triple(n: usize, rank: u64) -> (usize, usize, usize) {
    let mut r = rank;
    let mut i = 0usize;
    loop {
        // Number of triples starting at i is C(n-1-i, 2).
        let m = (n - 1 - i) as u64;
        let c2 = m * m.saturating_sub(1) / 2;
        if r < c2 {
            break;
        }
        r -= c2;
        i += 1;
    }
    let mut j = i + 1;
    loop {
        let m = (n - 1 - j) as u64;
        if r < m {
            break;
        }
        r -= m;
        j += 1;
    }
    let k = j + 1 + r as usize;
    (i, j, k)
}

/// Advances `(i, j, k)` to the next triple in lexicographic order.
fn next_triple(n: usize, t: &mut (usize, usize, usize)) {
    if t.2 + 1 < n {
        t.2 += 1;
    } else if t.1 + 2 < n {
        t.1 += 1;
        t.2 = t.1 + 1;
    } else {
        t.0 += 1;
        t.1 = t.0 + 1;
        t.2 = t.1 + 1;
    }
}

fn enumerate_range(
    coords: &[Vec3],
    start: u64,
    end: u64,
    width: f64,
    n_bins: usize,
) -> ChunkCounts {
    let mut counts = ChunkCounts::new(n_bins);
    if start >= end {
        return counts;
    }
    let mut t = unrank_triple(coords.len(), start);
    for _ in start..end {
        counts.record(coords, t.0, t.1, t.2, width);
        next_triple(coords.len(), &mut t);
    }
    counts
}

/// Strike/dip histograms over every 3-combination of `coords`.
///
/// Enumeration is split into contiguous rank ranges processed in parallel;
/// each range keeps private integer bin counts and the final merge sums
/// them, so the result is bit-identical to a sequential pass.
pub fn triple_angle_distribution(
    coords: &[Vec3],
    max_combinations: u64,
    bin_width_deg: f64,
) -> Result<OrientationHistograms, OrientationError> {
    triple_angle_distribution_impl(coords, max_combinations, bin_width_deg, true)
}

/// Sequential variant, exposed so tests can check the parallel merge.
pub fn triple_angle_distribution_sequential(
    coords: &[Vec3],
    max_combinations: u64,
    bin_width_deg: f64,
) -> Result<OrientationHistograms, OrientationError> {
    triple_angle_distribution_impl(coords, max_combinations, bin_width_deg, false)
}

fn triple_angle_distribution_impl(
    coords: &[Vec3],
    max_combinations: u64,
    bin_width_deg: f64,
    parallel: bool,
) -> Result<OrientationHistograms, OrientationError> {
    let bins = n_bins(bin_width_deg)?;
    if coords.len() < 3 {
        return Err(OrientationError::TooFewEvents(coords.len()));
    }
    let total = combination_count(coords.len());
    if total >= max_combinations {
        return Err(OrientationError::TooManyCombinations { count: total, cap: max_combinations });
    }

    let counts = if parallel {
        let chunks = (rayon::current_num_threads() as u64 * 8).clamp(1, total.max(1));
        let ranges: Vec<(u64, u64)> = (0..chunks)
            .map(|c| (c * total / chunks, (c + 1) * total / chunks))
            .collect();
        ranges
            .into_par_iter()
            .map(|(s, e)| enumerate_range(coords, s, e, bin_width_deg, bins))
            .collect::<Vec<_>>()
            .iter()
            .fold(ChunkCounts::new(bins), |acc, c| acc.merge(c))
    } else {
        enumerate_range(coords, 0, total, bin_width_deg, bins)
    };

    if counts.accepted == 0 {
        return Err(OrientationError::AllDegenerate);
    }
    if counts.degenerate * 2 > total {
        log::warn!(
            "{} of {} event triples were degenerate; orientation histograms may be unreliable",
            counts.degenerate,
            total
        );
    }
    Ok(OrientationHistograms {
        strike: AngleDistribution::from_counts(AngleKind::Strike, bin_width_deg, &counts.strike)?,
        dip: AngleDistribution::from_counts(AngleKind::Dip, bin_width_deg, &counts.dip)?,
        accepted_triples: counts.accepted,
        degenerate_triples: counts.degenerate,
    })
}

/// Per-cluster triple histograms. Clusters with fewer than 3 members (or
/// other per-cluster failures) are carried as errors without aborting the
/// remaining clusters.
pub fn per_cluster_distributions(
    coords: &[Vec3],
    model: &ClusterModel,
    max_combinations: u64,
    bin_width_deg: f64,
) -> Vec<Result<OrientationHistograms, OrientationError>> {
    (0..model.k)
        .map(|c| {
            let members: Vec<Vec3> = coords
                .iter()
                .zip(&model.assignments)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| *p)
                .collect();
            if members.len() < 3 {
                return Err(OrientationError::InsufficientClusterMembers {
                    cluster: c,
                    members: members.len(),
                });
            }
            triple_angle_distribution(&members, max_combinations, bin_width_deg)
        })
        .collect()
}

/// Peaks of one distribution: contiguous runs of bins at or above
/// `mass_threshold` times the maximum bin mass, each widened by one bin on
/// both sides and clamped to `[0, 180]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub intervals: Vec<AngleInterval>,
    pub peak_count: usize,
    /// Interval whose run contains the highest-mass bin.
    pub dominant: Option<AngleInterval>,
}

/// Strike and dip bounds constraining one fracture during inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractureConstraint {
    pub strike: AngleInterval,
    pub dip: AngleInterval,
}

/// Finds peak intervals in a single angle distribution.
pub fn extract_peaks(dist: &AngleDistribution, mass_threshold: f64) -> PeakSet {
    let w = dist.bin_width_deg;
    let max_mass = dist.masses.iter().cloned().fold(0.0, f64::max);
    if max_mass <= 0.0 {
        return PeakSet { intervals: vec![], peak_count: 0, dominant: None };
    }
    let cut = mass_threshold * max_mass;
    let max_bin = dist
        .masses
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();

    let mut intervals = Vec::new();
    let mut dominant = None;
    let mut run_start: Option<usize> = None;
    for i in 0..=dist.masses.len() {
        let hot = i < dist.masses.len() && dist.masses[i] >= cut;
        match (run_start, hot) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                let e = i - 1;
                let interval = AngleInterval {
                    lo_deg: (s as f64 - 1.0).max(0.0) * w,
                    hi_deg: ((e + 2) as f64 * w).min(180.0),
                };
                if (s..=e).contains(&max_bin) {
                    dominant = Some(interval);
                }
                intervals.push(interval);
                run_start = None;
            }
            _ => {}
        }
    }
    PeakSet { peak_count: intervals.len(), intervals, dominant }
}

/// Peak sets for a list of distributions, one per input.
pub fn extract_constraints(dists: &[AngleDistribution], mass_threshold: f64) -> Vec<PeakSet> {
    dists.iter().map(|d| extract_peaks(d, mass_threshold)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normal_from_strike_dip;
    use crate::geometry::StrikeDip;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn combination_counts_are_exact() {
        assert_eq!(combination_count(3), 1);
        assert_eq!(combination_count(4), 4);
        assert_eq!(combination_count(332), 6_044_060);
        assert_eq!(combination_count(2), 0);
        // Large n stays exact through the u128 intermediate.
        assert_eq!(combination_count(100_000), 166_661_666_700_000);
    }

    #[test]
    fn unrank_agrees_with_enumeration_order() {
        let n = 9;
        let mut rank = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    assert_eq!(unrank_triple(n, rank), (i, j, k));
                    rank += 1;
                }
            }
        }
        assert_eq!(rank, combination_count(n));
    }

    fn points_on_plane(sd: StrikeDip, n_points: usize, seed: u64) -> Vec<Vec3> {
        let normal = normal_from_strike_dip(sd);
        let helper = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let u = normal.cross(&helper).normalize();
        let v = normal.cross(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_points)
            .map(|_| u * rng.gen_range(-50.0..50.0) + v * rng.gen_range(-50.0..50.0))
            .collect()
    }

    #[test]
    fn coplanar_points_concentrate_in_one_dip_bin() {
        // Four generic points on a 45-degree dipping plane: all four triples
        // recover that plane exactly.
        let pts = points_on_plane(StrikeDip { strike_deg: 0.0, dip_deg: 45.0 }, 4, 5);
        let h = triple_angle_distribution(&pts, 1000, 10.0).unwrap();
        assert_eq!(h.accepted_triples, 4);
        assert_relative_eq!(h.dip.masses[4], 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.strike.masses[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_points_give_point_mass() {
        let pts = points_on_plane(StrikeDip { strike_deg: 117.0, dip_deg: 65.0 }, 3, 8);
        let h = triple_angle_distribution(&pts, 1000, 10.0).unwrap();
        assert_eq!(h.accepted_triples, 1);
        assert_relative_eq!(h.strike.mass_in(110.0, 120.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.dip.mass_in(60.0, 70.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn masses_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec3> = (0..40)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                )
            })
            .collect();
        let h = triple_angle_distribution(&pts, 1_000_000, 10.0).unwrap();
        assert_relative_eq!(h.strike.masses.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.dip.masses.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parallel_merge_equals_sequential_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec3> = (0..120)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                )
            })
            .collect();
        let par = triple_angle_distribution(&pts, 10_000_000, 10.0).unwrap();
        let seq = triple_angle_distribution_sequential(&pts, 10_000_000, 10.0).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn permuting_events_does_not_change_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut pts: Vec<Vec3> = (0..60)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                    rng.gen_range(-100.0..100.0),
                )
            })
            .collect();
        let base = triple_angle_distribution(&pts, 10_000_000, 10.0).unwrap();
        pts.shuffle(&mut rng);
        let shuffled = triple_angle_distribution(&pts, 10_000_000, 10.0).unwrap();
        assert_eq!(base.strike.masses, shuffled.strike.masses);
        assert_eq!(base.dip.masses, shuffled.dip.masses);
    }

    #[test]
    fn guards_reject_bad_inputs() {
        let pts = points_on_plane(StrikeDip { strike_deg: 0.0, dip_deg: 45.0 }, 30, 5);
        assert_eq!(
            triple_angle_distribution(&pts[..2], 1000, 10.0),
            Err(OrientationError::TooFewEvents(2))
        );
        assert_eq!(
            triple_angle_distribution(&pts, 100, 10.0),
            Err(OrientationError::TooManyCombinations { count: combination_count(30), cap: 100 })
        );
        assert!(matches!(
            triple_angle_distribution(&pts, 100_000, 7.0),
            Err(OrientationError::BadBinWidth(_))
        ));
        let collinear: Vec<Vec3> =
            (0..5).map(|i| Vec3::new(i as f64, i as f64, i as f64)).collect();
        assert_eq!(
            triple_angle_distribution(&collinear, 1000, 10.0),
            Err(OrientationError::AllDegenerate)
        );
    }

    #[test]
    fn point_mass_widens_to_three_bins() {
        let mut masses = vec![0.0; 18];
        masses[9] = 1.0;
        let dist = AngleDistribution { kind: AngleKind::Dip, bin_width_deg: 10.0, masses };
        let peaks = extract_peaks(&dist, 0.25);
        assert_eq!(peaks.peak_count, 1);
        assert_eq!(peaks.intervals[0], AngleInterval { lo_deg: 80.0, hi_deg: 110.0 });
        assert_eq!(peaks.dominant, Some(AngleInterval { lo_deg: 80.0, hi_deg: 110.0 }));
    }

    #[test]
    fn two_separated_masses_give_two_peaks() {
        let mut masses = vec![0.0; 18];
        masses[1] = 0.5;
        masses[12] = 0.5;
        let dist = AngleDistribution { kind: AngleKind::Strike, bin_width_deg: 10.0, masses };
        let peaks = extract_peaks(&dist, 0.25);
        assert_eq!(peaks.peak_count, 2);
        assert_eq!(peaks.intervals[0], AngleInterval { lo_deg: 0.0, hi_deg: 30.0 });
        assert_eq!(peaks.intervals[1], AngleInterval { lo_deg: 110.0, hi_deg: 140.0 });
    }

    #[test]
    fn sub_threshold_bins_do_not_form_peaks() {
        let mut masses = vec![0.0; 18];
        masses[3] = 0.8;
        masses[10] = 0.1; // below 0.25 * 0.8
        let dist = AngleDistribution { kind: AngleKind::Strike, bin_width_deg: 10.0, masses };
        let peaks = extract_peaks(&dist, 0.25);
        assert_eq!(peaks.peak_count, 1);
        assert_eq!(peaks.intervals[0], AngleInterval { lo_deg: 20.0, hi_deg: 50.0 });
    }

    #[test]
    fn edge_peaks_clamp_to_the_angle_range() {
        let mut masses = vec![0.0; 18];
        masses[0] = 0.6;
        masses[17] = 0.4;
        let dist = AngleDistribution { kind: AngleKind::Strike, bin_width_deg: 10.0, masses };
        let peaks = extract_peaks(&dist, 0.25);
        assert_eq!(peaks.intervals[0], AngleInterval { lo_deg: 0.0, hi_deg: 20.0 });
        assert_eq!(peaks.intervals[1], AngleInterval { lo_deg: 160.0, hi_deg: 180.0 });
        assert_eq!(peaks.dominant, Some(peaks.intervals[0]));
    }
}
