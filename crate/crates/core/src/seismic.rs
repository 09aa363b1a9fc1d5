//! Synthetic microseismic catalogs drawn on a known fracture network.
//!
//! Hosts are picked with probability proportional to clipped polygon
//! area. Each event sits on its host plane at an in-plane Gaussian offset
//! from the fracture center (the seismic cloud concentrates around the
//! stimulated center rather than covering the whole plane), truncated to
//! the clipped polygon, then perturbed by isotropic Gaussian location
//! noise. Each event carries the host fracture's strike and dip plus
//! Gaussian angular noise, folded back into the valid ranges.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dfn::DFNRealization;
use crate::geometry::{point_in_convex_polygon, polygon_area, StrikeDip, Vec3};
use crate::orientation::{bin_index, n_bins, AngleDistribution, AngleKind, OrientationError};

/// In-plane standard deviation of event offsets, as a fraction of each
/// semi-axis.
pub const IN_PLANE_SPREAD: f64 = 0.08;

#[derive(Debug, Error)]
pub enum SeismicError {
    #[error("no fracture with positive clipped area to host events")]
    EmptyNetwork,
    #[error("event count must be at least 1")]
    NoEvents,
    #[error("noise sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicroseismicEvent {
    pub location: Vec3,
    pub focal: StrikeDip,
    /// Index of the generating fracture; known only for synthetic truth.
    pub host_fracture_id: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicroseismicCatalog {
    pub events: Vec<MicroseismicEvent>,
    pub noise_sigma_m: f64,
    pub focal_noise_sigma_deg: f64,
    pub rng_seed: u64,
}

/// Strike values wrap modulo 180; 180 maps to 0.
pub fn fold_strike(strike_deg: f64) -> f64 {
    let s = strike_deg.rem_euclid(180.0);
    if s >= 180.0 {
        0.0
    } else {
        s
    }
}

/// Dip values reflect at 0 and 180 so the result stays in `[0, 180]`.
pub fn fold_dip(dip_deg: f64) -> f64 {
    let d = dip_deg.rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Uniform point on a convex polygon: pick a fan triangle by area, then
/// sample it with the square-root barycentric map.
fn sample_polygon_point<R: Rng>(poly: &[Vec3], rng: &mut R) -> Vec3 {
    debug_assert!(poly.len() >= 3);
    let mut tri_areas = Vec::with_capacity(poly.len() - 2);
    let mut total = 0.0;
    for i in 1..poly.len() - 1 {
        let area = 0.5 * (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0])).norm();
        total += area;
        tri_areas.push(area);
    }
    let mut pick = rng.gen::<f64>() * total;
    let mut tri = tri_areas.len() - 1;
    for (i, &area) in tri_areas.iter().enumerate() {
        if pick < area {
            tri = i;
            break;
        }
        pick -= area;
    }
    let (a, b, c) = (poly[0], poly[tri + 1], poly[tri + 2]);
    let r1 = rng.gen::<f64>().sqrt();
    let r2 = rng.gen::<f64>();
    a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
}

fn event_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// In-plane Gaussian offset from the fracture center, truncated to the
/// clipped polygon. Falls back to a uniform polygon point if the Gaussian
/// keeps missing (possible only for extreme truncation).
fn sample_event_point<R: Rng>(
    fracture: &crate::dfn::FractureInstance,
    spread: f64,
    rng: &mut R,
) -> Vec3 {
    let (u_hat, v_hat) = fracture.ellipse.plane_frame();
    let sigma_u = spread * fracture.ellipse.major_radius();
    let sigma_v = spread * fracture.ellipse.minor_radius;
    let normal01 = Normal::new(0.0, 1.0).expect("unit normal");
    for _ in 0..256 {
        let point = fracture.ellipse.center
            + u_hat * (sigma_u * normal01.sample(rng))
            + v_hat * (sigma_v * normal01.sample(rng));
        if point_in_convex_polygon(&fracture.polygon, &point) {
            return point;
        }
    }
    sample_polygon_point(&fracture.polygon, rng)
}

pub fn generate_catalog(
    truth: &DFNRealization,
    n_events: usize,
    noise_sigma_m: f64,
    focal_noise_sigma_deg: f64,
    seed: u64,
) -> Result<MicroseismicCatalog, SeismicError> {
    generate_catalog_with_spread(
        truth,
        n_events,
        noise_sigma_m,
        focal_noise_sigma_deg,
        seed,
        IN_PLANE_SPREAD,
    )
}

pub(crate) fn generate_catalog_with_spread(
    truth: &DFNRealization,
    n_events: usize,
    noise_sigma_m: f64,
    focal_noise_sigma_deg: f64,
    seed: u64,
    spread: f64,
) -> Result<MicroseismicCatalog, SeismicError> {
    if n_events == 0 {
        return Err(SeismicError::NoEvents);
    }
    for sigma in [noise_sigma_m, focal_noise_sigma_deg] {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(SeismicError::BadSigma(sigma));
        }
    }
    let areas: Vec<f64> = truth.fractures.iter().map(|f| polygon_area(&f.polygon)).collect();
    let total_area: f64 = areas.iter().sum();
    if !(total_area > 0.0) {
        return Err(SeismicError::EmptyNetwork);
    }

    let loc_noise = Normal::new(0.0, noise_sigma_m).expect("validated sigma");
    let focal_noise = Normal::new(0.0, focal_noise_sigma_deg).expect("validated sigma");

    let mut events = Vec::with_capacity(n_events);
    for index in 0..n_events {
        // One stream per event: the rejection loop's draw count cannot
        // shift any other event's randomness.
        let mut rng = event_rng(seed, index);
        let mut pick = rng.gen::<f64>() * total_area;
        let mut host = areas.len() - 1;
        for (i, &area) in areas.iter().enumerate() {
            if pick < area {
                host = i;
                break;
            }
            pick -= area;
        }
        let fracture = &truth.fractures[host];
        let truth_angles = fracture.ellipse.strike_dip();
        let focal = StrikeDip {
            strike_deg: fold_strike(truth_angles.strike_deg + focal_noise.sample(&mut rng)),
            dip_deg: fold_dip(truth_angles.dip_deg + focal_noise.sample(&mut rng)),
        };
        let on_plane = sample_event_point(fracture, spread, &mut rng);
        let location = Vec3::new(
            on_plane.x + loc_noise.sample(&mut rng),
            on_plane.y + loc_noise.sample(&mut rng),
            on_plane.z + loc_noise.sample(&mut rng),
        );
        events.push(MicroseismicEvent { location, focal, host_fracture_id: Some(host) });
    }

    Ok(MicroseismicCatalog {
        events,
        noise_sigma_m,
        focal_noise_sigma_deg,
        rng_seed: seed,
    })
}

/// Normalized strike and dip histograms of the catalog's focal angles.
pub fn focal_angle_histograms(
    catalog: &MicroseismicCatalog,
    bin_width_deg: f64,
) -> Result<(AngleDistribution, AngleDistribution), SeismicError> {
    let n = n_bins(bin_width_deg)?;
    let mut strike_counts = vec![0u64; n];
    let mut dip_counts = vec![0u64; n];
    for event in &catalog.events {
        strike_counts[bin_index(event.focal.strike_deg, bin_width_deg, n)] += 1;
        dip_counts[bin_index(event.focal.dip_deg, bin_width_deg, n)] += 1;
    }
    let strike = AngleDistribution::from_counts(AngleKind::Strike, bin_width_deg, &strike_counts)?;
    let dip = AngleDistribution::from_counts(AngleKind::Dip, bin_width_deg, &dip_counts)?;
    Ok((strike, dip))
}
