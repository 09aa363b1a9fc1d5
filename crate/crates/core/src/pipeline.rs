//! Stage orchestration: synth, cluster, orient, invert, report.
//!
//! Every stage reads its inputs from files written by earlier stages and
//! writes its own outputs back, so a run can resume from any completed
//! stage. All randomness derives from the configured master seed, making
//! repeated runs byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{self, ClusterModel, KMeansParams};
use crate::config::{ConfigError, PipelineConfig};
use crate::dfn::{build_realization, ClosureCase, DFNRealization, DfnError};
use crate::flow::{solve_steady, FlowError};
use crate::geometry::Vec3;
use crate::inversion::{
    evaluate_sample, run_inversion, sample_seed, FractureRanges, InversionError, InversionReport,
    ObservationSet, SampleParameters, SamplingRanges, TruthSummary,
};
use crate::io::{self, IoError};
use crate::mesh::{mesh_dfn, MeshError};
use crate::orientation::{
    extract_peaks, per_cluster_distributions, AngleDistribution, AngleInterval, AngleKind,
    FractureConstraint, OrientationError,
};
use crate::seismic::{focal_angle_histograms, generate_catalog, MicroseismicCatalog, SeismicError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Seismic(#[from] SeismicError),
    #[error(transparent)]
    Cluster(#[from] cluster::ClusterError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Dfn(#[from] DfnError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error("missing artifact {path}: run `{produced_by}` first")]
    MissingArtifact { path: PathBuf, produced_by: &'static str },
    #[error("stage `{0}` needs [truth] in the configuration")]
    MissingTruth(&'static str),
    #[error("{0}")]
    Stage(String),
}

/// File layout under the output directory.
#[derive(Debug, Clone)]
pub struct ArtifactPaths {
    root: PathBuf,
}

impl ArtifactPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ArtifactPaths { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn catalog_csv(&self) -> PathBuf {
        self.root.join("catalog.csv")
    }

    pub fn elbow_csv(&self) -> PathBuf {
        self.root.join("elbow.csv")
    }

    pub fn clusters_csv(&self) -> PathBuf {
        self.root.join("clusters.csv")
    }

    pub fn centroids_json(&self) -> PathBuf {
        self.root.join("centroids.json")
    }

    pub fn focal_histogram_csv(&self, kind: AngleKind) -> PathBuf {
        self.root.join(format!("focal_{}.csv", kind_slug(kind)))
    }

    pub fn cluster_histogram_csv(&self, cluster: usize, kind: AngleKind) -> PathBuf {
        self.root.join(format!("cluster_{cluster}_{}.csv", kind_slug(kind)))
    }

    pub fn constraints_json(&self) -> PathBuf {
        self.root.join("constraints.json")
    }

    pub fn observations_json(&self) -> PathBuf {
        self.root.join("observations.json")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn best_realization_json(&self) -> PathBuf {
        self.root.join("best_realization.json")
    }

    pub fn best_mesh_cells_csv(&self) -> PathBuf {
        self.root.join("best_mesh_cells.csv")
    }

    pub fn best_solution_csv(&self) -> PathBuf {
        self.root.join("best_solution.csv")
    }

    pub fn best_solution_summary_json(&self) -> PathBuf {
        self.root.join("best_solution_summary.json")
    }

    pub fn error_table_csv(&self, quantity: &str) -> PathBuf {
        self.root.join(format!("errors_{quantity}.csv"))
    }

    pub fn summary_txt(&self) -> PathBuf {
        self.root.join("summary.txt")
    }
}

fn kind_slug(kind: AngleKind) -> &'static str {
    match kind {
        AngleKind::Strike => "strike",
        AngleKind::Dip => "dip",
    }
}

fn read_artifact(path: &Path, produced_by: &'static str) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingArtifact { path: path.to_path_buf(), produced_by });
    }
    Ok(io::read_text(path)?)
}

/// Truth network realized with its constant closure parameters.
pub fn truth_realization(config: &PipelineConfig) -> Result<DFNRealization, PipelineError> {
    let truth = config.truth.as_ref().ok_or(PipelineError::MissingTruth("synth"))?;
    let domain = config.domain_box()?;
    let case = ClosureCase::ConstantAperture {
        aperture_m: truth.aperture_m,
        permeability_m2: truth.permeability_m2,
    };
    Ok(build_realization(
        &truth.fractures,
        &case,
        &domain,
        config.flow.n_vertices,
        &config.flow.fluid,
        config.catalog_seed(),
    )?)
}

/// Truth geometry plus its constant closure, for injection as sample 0.
pub fn truth_parameters(config: &PipelineConfig) -> Option<SampleParameters> {
    config.truth.as_ref().map(|truth| SampleParameters {
        fractures: truth.fractures.clone(),
        case: ClosureCase::ConstantAperture {
            aperture_m: truth.aperture_m,
            permeability_m2: truth.permeability_m2,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    pub n_events: usize,
    pub n_fractures: usize,
}

pub fn run_synth(config: &PipelineConfig) -> Result<SynthSummary, PipelineError> {
    let realization = truth_realization(config)?;
    let catalog = generate_catalog(
        &realization,
        config.catalog.n_events,
        config.catalog.noise_sigma_m,
        config.catalog.focal_noise_sigma_deg,
        config.catalog_seed(),
    )?;
    let paths = ArtifactPaths::new(&config.out_dir);
    io::write_text(&paths.catalog_csv(), &io::catalog_to_csv(&catalog.events))?;
    Ok(SynthSummary { n_events: catalog.events.len(), n_fractures: realization.fractures.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterStageSummary {
    pub k: usize,
    pub explained_pct: f64,
    pub distortion_m2: f64,
    pub strike_peaks: usize,
    pub dip_peaks: usize,
}

fn load_catalog(config: &PipelineConfig) -> Result<MicroseismicCatalog, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let text = read_artifact(&paths.catalog_csv(), "synth")?;
    let events = io::catalog_from_csv(&text)?;
    Ok(MicroseismicCatalog {
        events,
        noise_sigma_m: config.catalog.noise_sigma_m,
        focal_noise_sigma_deg: config.catalog.focal_noise_sigma_deg,
        rng_seed: config.catalog_seed(),
    })
}

pub fn run_cluster(config: &PipelineConfig) -> Result<ClusterStageSummary, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let catalog = load_catalog(config)?;
    let points: Vec<Vec3> = catalog.events.iter().map(|e| e.location).collect();

    let c = &config.clustering;
    let params = KMeansParams {
        max_iters: c.max_iters,
        tol: c.tolerance_m2,
        n_init: c.n_init,
        seed: config.clustering_seed(),
    };
    let (curve, models) = cluster::elbow_curve(&points, c.k_min, c.k_max, &params)?;

    let mut elbow = String::from("k,explained_pct\n");
    for &(k, pct) in &curve.entries {
        elbow.push_str(&format!("{k},{}\n", io::format_sig9(pct)));
    }
    io::write_text(&paths.elbow_csv(), &elbow)?;

    let o = &config.orientation;
    let (strike_hist, dip_hist) = focal_angle_histograms(&catalog, o.bin_width_deg)?;
    let strike_peaks = extract_peaks(&strike_hist, o.peak_mass_threshold).peak_count;
    let dip_peaks = extract_peaks(&dip_hist, o.peak_mass_threshold).peak_count;

    let model = if c.k_override > 0 {
        if (c.k_min..=c.k_max).contains(&c.k_override) {
            models[c.k_override - c.k_min].clone()
        } else {
            cluster::kmeans(&points, c.k_override, &params)?
        }
    } else {
        let k = cluster::select_k(&curve, strike_peaks, dip_peaks, c.gain_threshold_pct);
        models[k - c.k_min].clone()
    };

    io::write_text(&paths.clusters_csv(), &io::clusters_to_csv(&model))?;
    let summary = io::ClusterSummary::of(&model);
    io::write_text(&paths.centroids_json(), &io::centroids_to_json(&summary)?)?;

    let explained_pct = curve
        .entries
        .iter()
        .find(|&&(k, _)| k == model.k)
        .map(|&(_, pct)| pct)
        .unwrap_or(f64::NAN);
    Ok(ClusterStageSummary {
        k: model.k,
        explained_pct,
        distortion_m2: model.distortion,
        strike_peaks,
        dip_peaks,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientSummary {
    pub constraints: Vec<FractureConstraint>,
    pub strike_peaks: usize,
    pub dip_peaks: usize,
}

fn load_cluster_model(config: &PipelineConfig, n_events: usize) -> Result<ClusterModel, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let assignments = io::clusters_from_csv(&read_artifact(&paths.clusters_csv(), "cluster")?)?;
    let summary = io::centroids_from_json(&read_artifact(&paths.centroids_json(), "cluster")?)?;
    if assignments.len() != n_events {
        return Err(PipelineError::Stage(format!(
            "clusters.csv covers {} events but catalog.csv has {n_events}",
            assignments.len()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= summary.k) {
        return Err(PipelineError::Stage(format!(
            "clusters.csv assigns cluster {bad} but centroids.json holds k = {}",
            summary.k
        )));
    }
    Ok(ClusterModel {
        k: summary.k,
        assignments,
        centroids: summary.centroids,
        distortion: summary.distortion_m2,
        iterations_run: summary.iterations_run,
    })
}

/// Of the candidate intervals, the one whose mean density under `dist`
/// is highest (mass inside divided by interval width); earlier candidates
/// win ties.
fn densest_interval(
    candidates: &[AngleInterval],
    dist: &AngleDistribution,
) -> Option<AngleInterval> {
    candidates
        .iter()
        .fold(None::<(AngleInterval, f64)>, |acc, iv| {
            let density = dist.mass_in(iv.lo_deg, iv.hi_deg) / iv.width();
            match acc {
                Some((_, best)) if best >= density => acc,
                _ => Some((*iv, density)),
            }
        })
        .map(|(iv, _)| iv)
}

pub fn run_orient(config: &PipelineConfig) -> Result<OrientSummary, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let catalog = load_catalog(config)?;
    let model = load_cluster_model(config, catalog.events.len())?;
    let o = &config.orientation;

    let (strike_hist, dip_hist) = focal_angle_histograms(&catalog, o.bin_width_deg)?;
    io::write_text(
        &paths.focal_histogram_csv(AngleKind::Strike),
        &io::histogram_to_csv(&strike_hist),
    )?;
    io::write_text(&paths.focal_histogram_csv(AngleKind::Dip), &io::histogram_to_csv(&dip_hist))?;
    let focal_strike = extract_peaks(&strike_hist, o.peak_mass_threshold);
    let focal_dip = extract_peaks(&dip_hist, o.peak_mass_threshold);
    if focal_strike.intervals.is_empty() || focal_dip.intervals.is_empty() {
        return Err(PipelineError::Stage(
            "focal histograms yield no peak intervals".into(),
        ));
    }

    let coords: Vec<Vec3> = catalog.events.iter().map(|e| e.location).collect();
    let dists = per_cluster_distributions(&coords, &model, o.max_combinations, o.bin_width_deg);

    // The focal peaks are sharp but unassigned; the per-cluster triple fits
    // are assigned but broad. Each cluster takes the focal interval its own
    // triple-fit distribution weights most heavily.
    let mut constraints = Vec::with_capacity(model.k);
    for (i, dist) in dists.into_iter().enumerate() {
        let hists = dist?;
        io::write_text(
            &paths.cluster_histogram_csv(i, AngleKind::Strike),
            &io::histogram_to_csv(&hists.strike),
        )?;
        io::write_text(
            &paths.cluster_histogram_csv(i, AngleKind::Dip),
            &io::histogram_to_csv(&hists.dip),
        )?;
        let strike = densest_interval(&focal_strike.intervals, &hists.strike)
            .ok_or_else(|| PipelineError::Stage(format!("cluster {i} has no strike peak")))?;
        let dip = densest_interval(&focal_dip.intervals, &hists.dip)
            .ok_or_else(|| PipelineError::Stage(format!("cluster {i} has no dip peak")))?;
        constraints.push(FractureConstraint { strike, dip });
    }
    io::write_text(&paths.constraints_json(), &io::constraints_to_json(&constraints)?)?;
    Ok(OrientSummary {
        constraints,
        strike_peaks: focal_strike.peak_count,
        dip_peaks: focal_dip.peak_count,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertSummary {
    pub n_samples: usize,
    pub n_failed: usize,
    pub best_index: usize,
    pub best_misfit_pa: f64,
    pub observed_pa: Vec<f64>,
    pub best_pa: Vec<f64>,
}

/// Observed pressures at the cluster centroids: reuses `observations.json`
/// when present, otherwise forward-runs the truth network.
fn load_or_make_observations(
    config: &PipelineConfig,
    points: &[[f64; 3]],
) -> Result<ObservationSet, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let path = paths.observations_json();
    if path.exists() {
        let obs: ObservationSet =
            serde_json::from_str(&io::read_text(&path)?).map_err(IoError::from)?;
        if obs.points.len() != obs.pressures_pa.len() || obs.points.is_empty() {
            return Err(PipelineError::Stage(
                "observations.json points and pressures do not line up".into(),
            ));
        }
        return Ok(obs);
    }
    let truth = truth_parameters(config).ok_or(PipelineError::MissingTruth("invert"))?;
    let domain = config.domain_box()?;
    let forward = config.forward_config();
    let (pressures_pa, _, _) = evaluate_sample(&truth, &domain, &forward, points, 0)
        .map_err(PipelineError::Stage)?;
    let obs = ObservationSet { points: points.to_vec(), pressures_pa };
    io::write_text(&path, &serde_json::to_string_pretty(&obs).map_err(IoError::from)?)?;
    Ok(obs)
}

pub fn run_invert(config: &PipelineConfig) -> Result<InvertSummary, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let constraints =
        io::constraints_from_json(&read_artifact(&paths.constraints_json(), "orient")?)?;
    let summary = io::centroids_from_json(&read_artifact(&paths.centroids_json(), "cluster")?)?;
    if constraints.len() != summary.k {
        return Err(PipelineError::Stage(format!(
            "constraints.json holds {} fractures but centroids.json holds k = {}",
            constraints.len(),
            summary.k
        )));
    }

    let observations = load_or_make_observations(config, &summary.centroids)?;
    if observations.points.len() != summary.k {
        return Err(PipelineError::Stage(format!(
            "observations.json holds {} points but centroids.json holds k = {}",
            observations.points.len(),
            summary.k
        )));
    }

    let ranges = SamplingRanges {
        fractures: constraints
            .iter()
            .zip(&summary.centroids)
            .map(|(c, &center)| FractureRanges { strike: c.strike, dip: c.dip, center })
            .collect(),
        minor_axis_m: config.inversion.minor_axis_m,
        aspect_ratio: config.inversion.aspect_ratio,
        case: config.case_ranges(),
    };
    let injected: Vec<SampleParameters> = if config.inversion.inject_truth {
        vec![truth_parameters(config).ok_or(PipelineError::MissingTruth("invert"))?]
    } else {
        Vec::new()
    };

    let domain = config.domain_box()?;
    let forward = config.forward_config();
    let report = run_inversion(
        &ranges,
        &observations,
        &domain,
        &forward,
        config.inversion.n_lhs,
        config.lhs_seed(),
        &injected,
    )?;
    io::write_text(&paths.report_json(), &io::report_to_json(&report)?)?;

    let best = &report.samples[report.best_index];
    let realization = build_realization(
        &best.parameters.fractures,
        &best.parameters.case,
        &domain,
        forward.n_vertices,
        &forward.fluid,
        sample_seed(config.lhs_seed(), report.best_index),
    )?;
    let mesh = mesh_dfn(&realization, forward.target_h_m)?;
    let solution =
        solve_steady(&mesh, &forward.fluid, &forward.boundary, forward.rel_tol, forward.max_cg_iters)?;
    io::write_text(&paths.best_realization_json(), &io::realization_to_json(&realization)?)?;
    io::write_text(&paths.best_mesh_cells_csv(), &io::mesh_cells_to_csv(&mesh))?;
    io::write_text(&paths.best_solution_csv(), &io::solution_to_csv(&mesh, &solution))?;
    io::write_text(
        &paths.best_solution_summary_json(),
        &serde_json::to_string_pretty(&io::solution_summary(&solution)).map_err(IoError::from)?,
    )?;

    Ok(InvertSummary {
        n_samples: report.samples.len(),
        n_failed: report.samples.iter().filter(|s| s.failure.is_some()).count(),
        best_index: report.best_index,
        best_misfit_pa: best.misfit_pa,
        observed_pa: report.observations.pressures_pa.clone(),
        best_pa: best.model_pressures_pa.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub n_error_rows: usize,
    pub summary_path: PathBuf,
}

pub const ERROR_QUANTITIES: [&str; 5] =
    ["aperture_m", "permeability_m2", "pressure_pa", "minor_length_m", "major_length_m"];

fn truth_summary(config: &PipelineConfig, report: &InversionReport) -> Option<TruthSummary> {
    let truth = config.truth.as_ref()?;
    let n = truth.fractures.len();
    let best = &report.samples[report.best_index];
    if best.fracture_properties.len() != n || report.observations.pressures_pa.len() != n {
        log::warn!(
            "best sample has {} fractures and {} observations but truth has {n}; skipping error tables",
            best.fracture_properties.len(),
            report.observations.pressures_pa.len()
        );
        return None;
    }
    Some(TruthSummary {
        apertures_m: vec![truth.aperture_m; n],
        permeabilities_m2: vec![truth.permeability_m2; n],
        pressures_pa: report.observations.pressures_pa.clone(),
        minor_lengths_m: truth.fractures.iter().map(|f| f.minor_axis_m).collect(),
        major_lengths_m: truth.fractures.iter().map(|f| f.minor_axis_m * f.aspect_ratio).collect(),
    })
}

pub fn run_report(config: &PipelineConfig) -> Result<ReportSummary, PipelineError> {
    let paths = ArtifactPaths::new(&config.out_dir);
    let report = io::report_from_json(&read_artifact(&paths.report_json(), "invert")?)?;
    let best = &report.samples[report.best_index];

    let mut text = String::new();
    text.push_str(&format!(
        "inversion summary\n\
         case: {}\nseed: {}\nsamples: {} ({} injected)\nbest sample: {}\nmisfit: {} Pa\n\n",
        config.case,
        report.seed,
        report.samples.len(),
        report.n_injected,
        report.best_index,
        io::format_sig9(best.misfit_pa),
    ));
    text.push_str("fracture, minor_m, major_m, aperture_m, permeability_m2\n");
    for (i, p) in best.fracture_properties.iter().enumerate() {
        text.push_str(&format!(
            "{}, {}, {}, {}, {}\n",
            i + 1,
            io::format_sig9(p.minor_length_m),
            io::format_sig9(p.major_length_m),
            io::format_sig9(p.aperture_m),
            io::format_sig9(p.permeability_m2),
        ));
    }
    text.push_str("\npoint, observed_pa, model_pa\n");
    for (i, (obs, model)) in
        report.observations.pressures_pa.iter().zip(&best.model_pressures_pa).enumerate()
    {
        text.push_str(&format!(
            "{}, {}, {}\n",
            i + 1,
            io::format_sig9(*obs),
            io::format_sig9(*model)
        ));
    }

    let mut n_error_rows = 0;
    if let Some(truth) = truth_summary(config, &report) {
        let rows = crate::inversion::relative_error_table(&report, &truth);
        for quantity in ERROR_QUANTITIES {
            io::write_text(
                &paths.error_table_csv(quantity),
                &io::error_table_to_csv(&rows, quantity),
            )?;
        }
        text.push_str("\nquantity, fracture, value, truth, relative_error\n");
        for row in &rows {
            text.push_str(&format!(
                "{}, {}, {}, {}, {}\n",
                row.quantity,
                row.fracture + 1,
                io::format_sig9(row.value),
                io::format_sig9(row.truth),
                io::format_sig9(row.relative_error),
            ));
        }
        n_error_rows = rows.len();
    }

    let summary_path = paths.summary_txt();
    io::write_text(&summary_path, &text)?;
    Ok(ReportSummary { n_error_rows, summary_path })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllSummary {
    pub synth: SynthSummary,
    pub cluster: ClusterStageSummary,
    pub orient: OrientSummary,
    pub invert: InvertSummary,
    pub report: ReportSummary,
}

pub fn run_all(config: &PipelineConfig) -> Result<AllSummary, PipelineError> {
    Ok(AllSummary {
        synth: run_synth(config)?,
        cluster: run_cluster(config)?,
        orient: run_orient(config)?,
        invert: run_invert(config)?,
        report: run_report(config)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn fast_config(dir: &Path) -> PipelineConfig {
        let mut config =
            PipelineConfig { out_dir: dir.to_path_buf(), ..PipelineConfig::default() };
        config.flow.target_h_m = 25.0;
        config.inversion.n_lhs = 2;
        config.catalog.n_events = 120;
        config
    }

    #[test]
    fn stages_chain_through_files() {
        let dir = TempDir::new().unwrap();
        let config = fast_config(dir.path());
        let paths = ArtifactPaths::new(&config.out_dir);

        let synth = run_synth(&config).unwrap();
        assert_eq!(synth.n_events, 120);
        assert!(paths.catalog_csv().exists());

        let cluster = run_cluster(&config).unwrap();
        assert!(cluster.k >= 1);
        assert!(paths.clusters_csv().exists());
        assert!(paths.centroids_json().exists());
        assert!(paths.elbow_csv().exists());

        let orient = run_orient(&config).unwrap();
        assert_eq!(orient.constraints.len(), cluster.k);
        assert!(paths.constraints_json().exists());
        assert!(paths.focal_histogram_csv(AngleKind::Strike).exists());
        assert!(paths.cluster_histogram_csv(0, AngleKind::Dip).exists());

        let invert = run_invert(&config).unwrap();
        assert_eq!(invert.n_samples, 2);
        assert!(invert.best_misfit_pa.is_finite());
        assert!(paths.report_json().exists());
        assert!(paths.observations_json().exists());
        assert!(paths.best_realization_json().exists());

        let report = run_report(&config).unwrap();
        let expected_rows = if cluster.k == 3 { 15 } else { 0 };
        assert_eq!(report.n_error_rows, expected_rows);
        assert!(paths.summary_txt().exists());
    }

    #[test]
    fn missing_artifacts_name_the_producer_stage() {
        let dir = TempDir::new().unwrap();
        let config = fast_config(dir.path());
        match run_cluster(&config) {
            Err(PipelineError::MissingArtifact { produced_by, .. }) => {
                assert_eq!(produced_by, "synth")
            }
            other => panic!("expected missing artifact, got {other:?}"),
        }
        match run_invert(&config) {
            Err(PipelineError::MissingArtifact { produced_by, .. }) => {
                assert_eq!(produced_by, "orient")
            }
            other => panic!("expected missing artifact, got {other:?}"),
        }
    }

    #[test]
    fn synth_without_truth_is_rejected() {
        let dir = TempDir::new().unwrap();
        let mut config = fast_config(dir.path());
        config.truth = None;
        match run_synth(&config) {
            Err(PipelineError::MissingTruth(stage)) => assert_eq!(stage, "synth"),
            other => panic!("expected missing truth, got {other:?}"),
        }
    }
}
