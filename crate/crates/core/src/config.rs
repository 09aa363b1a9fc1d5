//! Pipeline configuration: one TOML file drives every stage.
//!
//! All defaults reproduce the reference synthetic scenario, so an empty
//! document is a complete, runnable configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dfn::FractureSample;
use crate::flow::{BoundaryConditions, FluidProperties};
use crate::geometry::{AxisBox, GeometryError};
use crate::inversion::{CaseRanges, ForwardConfig};
use crate::mesh::FaceId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("domain: {0}")]
    Domain(#[from] GeometryError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { min: [-100.0, -100.0, 0.0], max: [100.0, 100.0, 200.0] }
    }
}

/// Ground-truth network used to synthesize the catalog and observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub fractures: Vec<FractureSample>,
    pub aperture_m: f64,
    pub permeability_m2: f64,
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig {
            fractures: vec![
                FractureSample {
                    strike_deg: 118.790,
                    dip_deg: 132.524,
                    minor_axis_m: 250.0,
                    aspect_ratio: 1.1,
                    center: [-5.543, -19.861, 98.218],
                },
                FractureSample {
                    strike_deg: 4.421,
                    dip_deg: 87.822,
                    minor_axis_m: 250.0,
                    aspect_ratio: 1.2,
                    center: [0.577, 19.39, 91.1],
                },
                FractureSample {
                    strike_deg: 113.843,
                    dip_deg: 51.446,
                    minor_axis_m: 250.0,
                    aspect_ratio: 1.25,
                    center: [9.42, 39.088, 53.548],
                },
            ],
            aperture_m: 1e-5,
            permeability_m2: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub n_events: usize,
    pub noise_sigma_m: f64,
    pub focal_noise_sigma_deg: f64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig { n_events: 332, noise_sigma_m: 5.0, focal_noise_sigma_deg: 5.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub max_iters: usize,
    pub tolerance_m2: f64,
    pub n_init: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Relative distortion-gain threshold (percent) for the elbow plateau.
    pub gain_threshold_pct: f64,
    /// Fixed cluster count; 0 selects k automatically from the plateau.
    pub k_override: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            max_iters: 20,
            tolerance_m2: 1e-8,
            n_init: 10,
            k_min: 1,
            k_max: 8,
            gain_threshold_pct: 5.0,
            k_override: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrientationConfig {
    pub bin_width_deg: f64,
    pub max_combinations: u64,
    /// Peaks keep bins at or above this fraction of the maximum bin mass.
    pub peak_mass_threshold: f64,
}

impl Default for OrientationConfig {
    fn default() -> Self {
        OrientationConfig {
            bin_width_deg: 10.0,
            max_combinations: 10_000_000,
            peak_mass_threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropAxis {
    X,
    Y,
    Z,
}

impl DropAxis {
    pub fn faces(self) -> (FaceId, FaceId) {
        match self {
            DropAxis::X => (FaceId::XMin, FaceId::XMax),
            DropAxis::Y => (FaceId::YMin, FaceId::YMax),
            DropAxis::Z => (FaceId::ZMin, FaceId::ZMax),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub pressure_in_pa: f64,
    pub pressure_out_pa: f64,
    pub drop_axis: DropAxis,
    pub target_h_m: f64,
    pub n_vertices: usize,
    pub rel_tol: f64,
    pub max_cg_iters: usize,
    pub fluid: FluidProperties,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            pressure_in_pa: 30e6,
            pressure_out_pa: 10e6,
            drop_axis: DropAxis::Y,
            target_h_m: 10.0,
            n_vertices: 24,
            rel_tol: 1e-10,
            max_cg_iters: 200_000,
            fluid: FluidProperties::water(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub n_lhs: usize,
    pub minor_axis_m: (f64, f64),
    pub aspect_ratio: (f64, f64),
    pub case1_log10_aperture: (f64, f64),
    pub case1_log10_permeability: (f64, f64),
    pub case2_log10_mean_aperture: f64,
    pub case2_log10_sigma: (f64, f64),
    pub case3_coefficient: f64,
    pub case3_alpha: (f64, f64),
    pub case4_coefficient: f64,
    pub case4_alpha: (f64, f64),
    /// Inject the truth parameters as sample 0 (self-consistency check).
    pub inject_truth: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            n_lhs: 10,
            minor_axis_m: (200.0, 300.0),
            aspect_ratio: (1.0, 1.5),
            case1_log10_aperture: (-6.0, -4.0),
            case1_log10_permeability: (-13.0, -11.0),
            case2_log10_mean_aperture: -5.0,
            case2_log10_sigma: (0.6, 0.9),
            case3_coefficient: 1.6e-9,
            case3_alpha: (0.5, 2.0),
            case4_coefficient: 5e-5,
            case4_alpha: (0.5, 2.0),
            inject_truth: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Closure case to invert: 1-4.
    pub case: u8,
    pub seed: u64,
    pub domain: DomainConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthConfig>,
    pub catalog: CatalogConfig,
    pub clustering: ClusteringConfig,
    pub orientation: OrientationConfig,
    pub flow: FlowConfig,
    pub inversion: InversionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            out_dir: PathBuf::from("out"),
            case: 3,
            seed: 43,
            domain: DomainConfig::default(),
            truth: Some(TruthConfig::default()),
            catalog: CatalogConfig::default(),
            clustering: ClusteringConfig::default(),
            orientation: OrientationConfig::default(),
            flow: FlowConfig::default(),
            inversion: InversionConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain_box()?;
        if !(1..=4).contains(&self.case) {
            return Err(invalid(format!("case must be 1-4, got {}", self.case)));
        }
        if self.catalog.n_events == 0 {
            return Err(invalid("catalog.n_events must be at least 1"));
        }
        for (name, sigma) in [
            ("catalog.noise_sigma_m", self.catalog.noise_sigma_m),
            ("catalog.focal_noise_sigma_deg", self.catalog.focal_noise_sigma_deg),
        ] {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(invalid(format!("{name} must be finite and >= 0, got {sigma}")));
            }
        }
        let c = &self.clustering;
        if c.k_min == 0 || c.k_min > c.k_max {
            return Err(invalid(format!(
                "clustering k range [{}, {}] invalid",
                c.k_min, c.k_max
            )));
        }
        if c.max_iters == 0 || c.n_init == 0 {
            return Err(invalid("clustering.max_iters and n_init must be at least 1"));
        }
        if !(c.tolerance_m2 > 0.0) || !(c.gain_threshold_pct > 0.0) {
            return Err(invalid("clustering tolerance and gain threshold must be positive"));
        }
        let o = &self.orientation;
        let bins = 180.0 / o.bin_width_deg;
        if !(o.bin_width_deg > 0.0) || (bins - bins.round()).abs() > 1e-9 {
            return Err(invalid(format!(
                "orientation.bin_width_deg {} must divide 180",
                o.bin_width_deg
            )));
        }
        if o.max_combinations == 0 {
            return Err(invalid("orientation.max_combinations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&o.peak_mass_threshold) {
            return Err(invalid("orientation.peak_mass_threshold must be in [0, 1]"));
        }
        let f = &self.flow;
        f.fluid.validate().map_err(|e| invalid(e.to_string()))?;
        if !(f.pressure_in_pa > 0.0) || !(f.pressure_out_pa > 0.0) {
            return Err(invalid("flow pressures must be positive"));
        }
        if !(f.target_h_m > 0.0) {
            return Err(invalid("flow.target_h_m must be positive"));
        }
        if f.n_vertices < 3 {
            return Err(invalid("flow.n_vertices must be at least 3"));
        }
        if !(f.rel_tol > 0.0) || f.max_cg_iters == 0 {
            return Err(invalid("flow solver tolerance and iteration budget must be positive"));
        }
        let inv = &self.inversion;
        if inv.n_lhs == 0 {
            return Err(invalid("inversion.n_lhs must be at least 1"));
        }
        let ordered = |name: &str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(())
            } else {
                Err(invalid(format!("inversion.{name} range ({lo}, {hi}) invalid")))
            }
        };
        ordered("minor_axis_m", inv.minor_axis_m)?;
        if inv.minor_axis_m.0 <= 0.0 {
            return Err(invalid("inversion.minor_axis_m must be positive"));
        }
        ordered("aspect_ratio", inv.aspect_ratio)?;
        if inv.aspect_ratio.0 < 1.0 {
            return Err(invalid("inversion.aspect_ratio must start at 1 or above"));
        }
        ordered("case1_log10_aperture", inv.case1_log10_aperture)?;
        ordered("case1_log10_permeability", inv.case1_log10_permeability)?;
        ordered("case2_log10_sigma", inv.case2_log10_sigma)?;
        ordered("case3_alpha", inv.case3_alpha)?;
        ordered("case4_alpha", inv.case4_alpha)?;
        if !(inv.case3_coefficient > 0.0) || !(inv.case4_coefficient > 0.0) {
            return Err(invalid("inversion power-law coefficients must be positive"));
        }
        if let Some(truth) = &self.truth {
            if truth.fractures.is_empty() {
                return Err(invalid("truth.fractures must not be empty when truth is given"));
            }
            if !(truth.aperture_m > 0.0) || !(truth.permeability_m2 > 0.0) {
                return Err(invalid("truth aperture and permeability must be positive"));
            }
            for (i, s) in truth.fractures.iter().enumerate() {
                if !(s.minor_axis_m > 0.0) || !(s.aspect_ratio >= 1.0) {
                    return Err(invalid(format!("truth fracture {i} has invalid axes")));
                }
            }
        }
        Ok(())
    }

    pub fn domain_box(&self) -> Result<AxisBox, ConfigError> {
        Ok(AxisBox::new(self.domain.min, self.domain.max)?)
    }

    pub fn boundary_conditions(&self) -> BoundaryConditions {
        let (face_in, face_out) = self.flow.drop_axis.faces();
        let mut dirichlet = BTreeMap::new();
        dirichlet.insert(face_in, self.flow.pressure_in_pa);
        dirichlet.insert(face_out, self.flow.pressure_out_pa);
        BoundaryConditions { dirichlet_pa: dirichlet }
    }

    pub fn forward_config(&self) -> ForwardConfig {
        ForwardConfig {
            fluid: self.flow.fluid,
            boundary: self.boundary_conditions(),
            target_h_m: self.flow.target_h_m,
            n_vertices: self.flow.n_vertices,
            rel_tol: self.flow.rel_tol,
            max_cg_iters: self.flow.max_cg_iters,
        }
    }

    pub fn case_ranges(&self) -> CaseRanges {
        let inv = &self.inversion;
        match self.case {
            1 => CaseRanges::ConstantAperture {
                log10_aperture: inv.case1_log10_aperture,
                log10_permeability: inv.case1_log10_permeability,
            },
            2 => CaseRanges::LogNormalAperture {
                log10_mean_aperture: inv.case2_log10_mean_aperture,
                log10_sigma: inv.case2_log10_sigma,
            },
            3 => CaseRanges::TransmissivityPowerLaw {
                coefficient: inv.case3_coefficient,
                alpha: inv.case3_alpha,
            },
            4 => CaseRanges::AperturePowerLaw {
                coefficient: inv.case4_coefficient,
                alpha: inv.case4_alpha,
            },
            other => unreachable!("case {other} rejected by validate"),
        }
    }

    /// Stage seeds derived from the master seed.
    pub fn catalog_seed(&self) -> u64 {
        self.seed
    }

    pub fn clustering_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn lhs_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }
}

pub fn parse_config_toml(text: &str) -> Result<PipelineConfig, ConfigError> {
    let config: PipelineConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_scenario() {
        let config = parse_config_toml("").unwrap();
        assert_eq!(config.case, 3);
        assert_eq!(config.catalog.n_events, 332);
        assert_eq!(config.clustering.max_iters, 20);
        assert_eq!(config.clustering.tolerance_m2, 1e-8);
        assert_eq!(config.orientation.max_combinations, 10_000_000);
        assert_eq!(config.inversion.n_lhs, 10);
        let truth = config.truth.as_ref().unwrap();
        assert_eq!(truth.fractures.len(), 3);
        assert_eq!(truth.fractures[0].minor_axis_m, 250.0);
        assert_eq!(truth.fractures[2].center, [9.42, 39.088, 53.548]);
        assert_eq!(truth.aperture_m, 1e-5);
        assert_eq!(config.flow.drop_axis, DropAxis::Y);
        assert_eq!(config.flow.fluid.density_kg_m3, 997.0);
        assert_eq!(config.flow.fluid.gravity_m_s2, 9.8);
    }

    #[test]
    fn overrides_change_only_named_fields() {
        let text = "case = 1\n[flow]\ntarget_h_m = 20.0\n";
        let config = parse_config_toml(text).unwrap();
        assert_eq!(config.case, 1);
        assert_eq!(config.flow.target_h_m, 20.0);
        assert_eq!(config.flow.pressure_in_pa, 30e6);
        assert_eq!(config.inversion.n_lhs, 10);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_config_toml("case = 5").is_err());
        assert!(parse_config_toml("[catalog]\nn_events = 0").is_err());
        assert!(parse_config_toml("[catalog]\nnoise_sigma_m = -1.0").is_err());
        assert!(parse_config_toml("[clustering]\nk_min = 4\nk_max = 2").is_err());
        assert!(parse_config_toml("[orientation]\nbin_width_deg = 7.0").is_err());
        assert!(parse_config_toml("[flow]\ntarget_h_m = 0.0").is_err());
        assert!(parse_config_toml("[inversion]\nminor_axis_m = [300.0, 200.0]").is_err());
        assert!(parse_config_toml("[domain]\nmin = [0.0, 0.0, 0.0]\nmax = [0.0, 1.0, 1.0]").is_err());
        assert!(parse_config_toml("not toml at all [").is_err());
        assert!(parse_config_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn boundary_conditions_follow_the_drop_axis() {
        let config = PipelineConfig::default();
        let bcs = config.boundary_conditions();
        assert_eq!(bcs.dirichlet_pa.get(&FaceId::YMin), Some(&30e6));
        assert_eq!(bcs.dirichlet_pa.get(&FaceId::YMax), Some(&10e6));
        assert_eq!(bcs.dirichlet_pa.len(), 2);

        let text = "[flow]\ndrop_axis = \"x\"\n";
        let config = parse_config_toml(text).unwrap();
        let bcs = config.boundary_conditions();
        assert_eq!(bcs.dirichlet_pa.get(&FaceId::XMin), Some(&30e6));
    }

    #[test]
    fn case_ranges_match_configured_case() {
        let config = PipelineConfig { case: 4, ..PipelineConfig::default() };
        match config.case_ranges() {
            CaseRanges::AperturePowerLaw { coefficient, alpha } => {
                assert_eq!(coefficient, 5e-5);
                assert_eq!(alpha, (0.5, 2.0));
            }
            other => panic!("wrong ranges {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let config = PipelineConfig::default();
        let text = toml::to_string_pretty(&config).unwrap();
        let back = parse_config_toml(&text).unwrap();
        assert_eq!(back.seed, config.seed);
        assert_eq!(back.truth.unwrap().fractures.len(), 3);
    }
}
