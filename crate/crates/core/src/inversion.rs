//! Latin-Hypercube parameter search over fracture geometries and closure
//! parameters, driven by a pressure misfit against observed values.
//!
//! Each sample draws per-fracture strike, dip, minor-axis length, and
//! aspect ratio (plus case-specific closure parameters), builds a
//! realization, runs the steady flow solve, and scores the extracted
//! observation pressures. Failed forward runs keep their slot with an
//! infinite misfit so the sampling design stays intact.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dfn::{build_realization, ClosureCase, DFNRealization, FractureSample};
use crate::flow::{extract_observation, solve_steady, BoundaryConditions, FluidProperties};
use crate::geometry::{AxisBox, Vec3};
use crate::mesh::mesh_dfn;
use crate::orientation::AngleInterval;

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum InversionError {
    #[error("model has {model} pressures but observations have {obs}")]
    LengthMismatch { model: usize, obs: usize },
    #[error("observation pressures must be positive and finite")]
    BadObservation,
    #[error("sampling ranges invalid: {0}")]
    BadRange(String),
    #[error("need one observation per fracture: {fractures} fractures, {observations} observations")]
    ObservationCountMismatch { fractures: usize, observations: usize },
    #[error("every sample failed its forward run")]
    AllSamplesFailed,
}

/// Orientation constraint and fixed center for one fracture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractureRanges {
    pub strike: AngleInterval,
    pub dip: AngleInterval,
    /// Fracture center, fixed at the event-cluster centroid.
    pub center: [f64; 3],
}

/// Case-specific closure parameter ranges; fixed values stay fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseRanges {
    ConstantAperture { log10_aperture: (f64, f64), log10_permeability: (f64, f64) },
    LogNormalAperture { log10_mean_aperture: f64, log10_sigma: (f64, f64) },
    TransmissivityPowerLaw { coefficient: f64, alpha: (f64, f64) },
    AperturePowerLaw { coefficient: f64, alpha: (f64, f64) },
}

impl CaseRanges {
    fn n_dims(&self) -> usize {
        match self {
            CaseRanges::ConstantAperture { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub fractures: Vec<FractureRanges>,
    /// Full minor-axis length range, meters.
    pub minor_axis_m: (f64, f64),
    pub aspect_ratio: (f64, f64),
    pub case: CaseRanges,
}

impl SamplingRanges {
    pub fn validate(&self) -> Result<(), InversionError> {
        if self.fractures.is_empty() {
            return Err(InversionError::BadRange("no fracture constraints".into()));
        }
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.minor_axis_m) || self.minor_axis_m.0 <= 0.0 {
            return Err(InversionError::BadRange(format!(
                "minor axis range {:?}",
                self.minor_axis_m
            )));
        }
        if !ordered(self.aspect_ratio) || self.aspect_ratio.0 < 1.0 {
            return Err(InversionError::BadRange(format!(
                "aspect ratio range {:?}",
                self.aspect_ratio
            )));
        }
        for (i, f) in self.fractures.iter().enumerate() {
            for iv in [&f.strike, &f.dip] {
                if !(iv.lo_deg.is_finite() && iv.hi_deg.is_finite() && iv.lo_deg <= iv.hi_deg) {
                    return Err(InversionError::BadRange(format!(
                        "fracture {i} angle interval [{}, {}]",
                        iv.lo_deg, iv.hi_deg
                    )));
                }
            }
        }
        let case_ok = match &self.case {
            CaseRanges::ConstantAperture { log10_aperture, log10_permeability } => {
                ordered(*log10_aperture) && ordered(*log10_permeability)
            }
            CaseRanges::LogNormalAperture { log10_mean_aperture, log10_sigma } => {
                log10_mean_aperture.is_finite() && ordered(*log10_sigma) && log10_sigma.0 >= 0.0
            }
            CaseRanges::TransmissivityPowerLaw { coefficient, alpha }
            | CaseRanges::AperturePowerLaw { coefficient, alpha } => {
                *coefficient > 0.0 && ordered(*alpha)
            }
        };
        if !case_ok {
            return Err(InversionError::BadRange("closure parameter range".into()));
        }
        Ok(())
    }

    pub fn n_dims(&self) -> usize {
        4 * self.fractures.len() + self.case.n_dims()
    }
}

/// Stratified unit-cube design: one sample per stratum in every dimension.
#[derive(Debug, Clone)]
pub struct LhsDesign {
    pub n_samples: usize,
    /// `unit[sample][dim]` in [0,1).
    pub unit: Vec<Vec<f64>>,
    pub seed: u64,
}

pub fn lhs_unit(n_samples: usize, n_dims: usize, seed: u64) -> LhsDesign {
    assert!(n_samples >= 1, "need at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = vec![vec![0.0; n_dims]; n_samples];
    for dim in 0..n_dims {
        let mut strata: Vec<usize> = (0..n_samples).collect();
        strata.shuffle(&mut rng);
        for (row, &stratum) in unit.iter_mut().zip(&strata) {
            row[dim] = (stratum as f64 + rng.gen::<f64>()) / n_samples as f64;
        }
    }
    LhsDesign { n_samples, unit, seed }
}

/// One parameter draw: complete geometry plus the closure case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleParameters {
    pub fractures: Vec<FractureSample>,
    pub case: ClosureCase,
}

fn lerp((lo, hi): (f64, f64), v: f64) -> f64 {
    lo + v * (hi - lo)
}

fn sample_from_unit(ranges: &SamplingRanges, unit: &[f64]) -> SampleParameters {
    let mut fractures = Vec::with_capacity(ranges.fractures.len());
    for (i, fr) in ranges.fractures.iter().enumerate() {
        let base = 4 * i;
        fractures.push(FractureSample {
            strike_deg: lerp((fr.strike.lo_deg, fr.strike.hi_deg), unit[base]),
            dip_deg: lerp((fr.dip.lo_deg, fr.dip.hi_deg), unit[base + 1]),
            minor_axis_m: lerp(ranges.minor_axis_m, unit[base + 2]),
            aspect_ratio: lerp(ranges.aspect_ratio, unit[base + 3]),
            center: fr.center,
        });
    }
    let c = 4 * ranges.fractures.len();
    let case = match &ranges.case {
        CaseRanges::ConstantAperture { log10_aperture, log10_permeability } => {
            ClosureCase::ConstantAperture {
                aperture_m: 10f64.powf(lerp(*log10_aperture, unit[c])),
                permeability_m2: 10f64.powf(lerp(*log10_permeability, unit[c + 1])),
            }
        }
        CaseRanges::LogNormalAperture { log10_mean_aperture, log10_sigma } => {
            ClosureCase::LogNormalAperture {
                log10_mean_aperture: *log10_mean_aperture,
                log10_sigma: lerp(*log10_sigma, unit[c]),
            }
        }
        CaseRanges::TransmissivityPowerLaw { coefficient, alpha } => {
            ClosureCase::TransmissivityPowerLaw {
                coefficient: *coefficient,
                alpha: lerp(*alpha, unit[c]),
            }
        }
        CaseRanges::AperturePowerLaw { coefficient, alpha } => ClosureCase::AperturePowerLaw {
            coefficient: *coefficient,
            alpha: lerp(*alpha, unit[c]),
        },
    };
    SampleParameters { fractures, case }
}

/// Maps an LHS design into concrete parameter draws.
pub fn lhs_sample(
    ranges: &SamplingRanges,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SampleParameters>, InversionError> {
    ranges.validate()?;
    let design = lhs_unit(n_samples, ranges.n_dims(), seed);
    Ok(design.unit.iter().map(|u| sample_from_unit(ranges, u)).collect())
}

/// Normalized sum of squared pressure deviations, in pascals.
pub fn misfit(model_pa: &[f64], obs_pa: &[f64]) -> Result<f64, InversionError> {
    if model_pa.len() != obs_pa.len() || obs_pa.is_empty() {
        return Err(InversionError::LengthMismatch { model: model_pa.len(), obs: obs_pa.len() });
    }
    let p_maxobs = obs_pa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(p_maxobs > 0.0) || obs_pa.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(InversionError::BadObservation);
    }
    Ok(model_pa
        .iter()
        .zip(obs_pa)
        .map(|(p, o)| (p - o) * (p - o) / p_maxobs)
        .sum())
}

/// Observed pressures and where they were measured.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationSet {
    pub points: Vec<[f64; 3]>,
    pub pressures_pa: Vec<f64>,
}

/// Forward-model settings shared by every sample evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardConfig {
    pub fluid: FluidProperties,
    pub boundary: BoundaryConditions,
    pub target_h_m: f64,
    pub n_vertices: usize,
    pub rel_tol: f64,
    pub max_cg_iters: usize,
}

/// Per-fracture material and size summary of an evaluated sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractureProperties {
    pub aperture_m: f64,
    pub permeability_m2: f64,
    pub minor_length_m: f64,
    pub major_length_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleResult {
    pub parameters: SampleParameters,
    /// Empty when the forward run failed.
    pub fracture_properties: Vec<FractureProperties>,
    /// Empty when the forward run failed.
    pub model_pressures_pa: Vec<f64>,
    pub misfit_pa: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionReport {
    pub samples: Vec<SampleResult>,
    pub best_index: usize,
    /// How many leading samples were injected rather than drawn.
    pub n_injected: usize,
    pub observations: ObservationSet,
    pub seed: u64,
}

/// Realization seed for the sample at `index` under master `seed`.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(SEED_STRIDE)
}

/// Builds, meshes, and solves one sample; returns extracted pressures and
/// per-fracture properties.
pub fn evaluate_sample(
    params: &SampleParameters,
    domain: &AxisBox,
    forward: &ForwardConfig,
    points: &[[f64; 3]],
    realization_seed: u64,
) -> Result<(Vec<f64>, Vec<FractureProperties>, DFNRealization), String> {
    let realization = build_realization(
        &params.fractures,
        &params.case,
        domain,
        forward.n_vertices,
        &forward.fluid,
        realization_seed,
    )
    .map_err(|e| e.to_string())?;
    let mesh = mesh_dfn(&realization, forward.target_h_m).map_err(|e| e.to_string())?;
    let solution = solve_steady(&mesh, &forward.fluid, &forward.boundary, forward.rel_tol, forward.max_cg_iters)
        .map_err(|e| e.to_string())?;
    let pressures = points
        .iter()
        .map(|p| extract_observation(&solution, &mesh, &Vec3::new(p[0], p[1], p[2])))
        .collect();
    let properties = realization
        .fractures
        .iter()
        .map(|f| FractureProperties {
            aperture_m: f.aperture_m,
            permeability_m2: f.permeability_m2,
            minor_length_m: f.minor_length(),
            major_length_m: f.major_length(),
        })
        .collect();
    Ok((pressures, properties, realization))
}

/// Evaluates injected samples followed by an LHS draw and selects the
/// misfit argmin (ties break to the lower index).
pub fn run_inversion(
    ranges: &SamplingRanges,
    observations: &ObservationSet,
    domain: &AxisBox,
    forward: &ForwardConfig,
    n_lhs: usize,
    seed: u64,
    injected: &[SampleParameters],
) -> Result<InversionReport, InversionError> {
    ranges.validate()?;
    if observations.points.len() != observations.pressures_pa.len()
        || observations.points.len() != ranges.fractures.len()
    {
        return Err(InversionError::ObservationCountMismatch {
            fractures: ranges.fractures.len(),
            observations: observations.points.len(),
        });
    }
    misfit(&observations.pressures_pa, &observations.pressures_pa)?;

    let mut all: Vec<SampleParameters> = injected.to_vec();
    all.extend(lhs_sample(ranges, n_lhs, seed)?);

    let samples: Vec<SampleResult> = all
        .par_iter()
        .enumerate()
        .map(|(index, params)| {
            match evaluate_sample(
                params,
                domain,
                forward,
                &observations.points,
                sample_seed(seed, index),
            ) {
                Ok((pressures, properties, _)) => {
                    let m = misfit(&pressures, &observations.pressures_pa)
                        .expect("lengths checked above");
                    SampleResult {
                        parameters: params.clone(),
                        fracture_properties: properties,
                        model_pressures_pa: pressures,
                        misfit_pa: m,
                        failure: None,
                    }
                }
                Err(reason) => SampleResult {
                    parameters: params.clone(),
                    fracture_properties: Vec::new(),
                    model_pressures_pa: Vec::new(),
                    misfit_pa: f64::INFINITY,
                    failure: Some(reason),
                },
            }
        })
        .collect();

    let best_index = samples
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.misfit_pa.total_cmp(&b.misfit_pa).then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
        .expect("at least one sample");
    if !samples[best_index].misfit_pa.is_finite() {
        return Err(InversionError::AllSamplesFailed);
    }

    Ok(InversionReport {
        samples,
        best_index,
        n_injected: injected.len(),
        observations: observations.clone(),
        seed,
    })
}

/// Ground-truth values for error reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSummary {
    pub apertures_m: Vec<f64>,
    pub permeabilities_m2: Vec<f64>,
    pub pressures_pa: Vec<f64>,
    pub minor_lengths_m: Vec<f64>,
    pub major_lengths_m: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub quantity: String,
    pub fracture: usize,
    pub value: f64,
    pub truth: f64,
    /// value/truth − 1.
    pub relative_error: f64,
}

fn error_row(quantity: &str, fracture: usize, value: f64, truth: f64) -> ErrorRow {
    ErrorRow {
        quantity: quantity.to_string(),
        fracture,
        value,
        truth,
        relative_error: value / truth - 1.0,
    }
}

/// Rows comparing the best sample against ground truth: aperture,
/// permeability, observation pressures, and axis lengths per fracture.
pub fn relative_error_table(report: &InversionReport, truth: &TruthSummary) -> Vec<ErrorRow> {
    let best = &report.samples[report.best_index];
    let mut rows = Vec::new();
    for (i, props) in best.fracture_properties.iter().enumerate() {
        rows.push(error_row("aperture_m", i, props.aperture_m, truth.apertures_m[i]));
    }
    for (i, props) in best.fracture_properties.iter().enumerate() {
        rows.push(error_row(
            "permeability_m2",
            i,
            props.permeability_m2,
            truth.permeabilities_m2[i],
        ));
    }
    for (i, p) in best.model_pressures_pa.iter().enumerate() {
        rows.push(error_row("pressure_pa", i, *p, truth.pressures_pa[i]));
    }
    for (i, props) in best.fracture_properties.iter().enumerate() {
        rows.push(error_row("minor_length_m", i, props.minor_length_m, truth.minor_lengths_m[i]));
    }
    for (i, props) in best.fracture_properties.iter().enumerate() {
        rows.push(error_row("major_length_m", i, props.major_length_m, truth.major_lengths_m[i]));
    }
    rows
}
