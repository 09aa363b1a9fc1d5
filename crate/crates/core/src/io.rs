//! File formats for the pipeline artifacts.
//!
//! Every numeric text format uses locale-independent decimal notation with
//! 9 significant digits, so a write/read/write cycle is byte-stable. The
//! parsers never panic on malformed input; they return errors carrying the
//! offending line.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterModel;
use crate::dfn::DFNRealization;
use crate::flow::FlowSolution;
use crate::geometry::{StrikeDip, Vec3};
use crate::inversion::{ErrorRow, InversionReport};
use crate::mesh::DFNMesh;
use crate::orientation::{AngleDistribution, FractureConstraint};
use crate::seismic::MicroseismicEvent;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{context}: line {line}: {reason}")]
    Malformed { context: &'static str, line: usize, reason: String },
}

fn malformed(context: &'static str, line: usize, reason: impl Into<String>) -> IoError {
    IoError::Malformed { context, line, reason: reason.into() }
}

/// 9 significant digits, locale-independent.
pub fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn parse_f64(
    context: &'static str,
    line: usize,
    field: &str,
    raw: &str,
) -> Result<f64, IoError> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|e| malformed(context, line, format!("{field} `{raw}`: {e}")))?;
    if !value.is_finite() {
        return Err(malformed(context, line, format!("{field} `{raw}` is not finite")));
    }
    Ok(value)
}

fn split_columns<'a>(
    context: &'static str,
    line_no: usize,
    line: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>, IoError> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != expected {
        return Err(malformed(
            context,
            line_no,
            format!("expected {expected} columns, found {}", cols.len()),
        ));
    }
    Ok(cols)
}

pub const CATALOG_HEADER: &str = "x,y,z,strike,dip";

pub fn catalog_to_csv(events: &[MicroseismicEvent]) -> String {
    let mut out = String::from(CATALOG_HEADER);
    out.push('\n');
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig9(e.location.x),
            format_sig9(e.location.y),
            format_sig9(e.location.z),
            format_sig9(e.focal.strike_deg),
            format_sig9(e.focal.dip_deg),
        ));
    }
    out
}

pub fn catalog_from_csv(text: &str) -> Result<Vec<MicroseismicEvent>, IoError> {
    const CTX: &str = "catalog csv";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CATALOG_HEADER => {}
        Some((_, header)) => {
            return Err(malformed(CTX, 1, format!("bad header `{header}`")));
        }
        None => return Err(malformed(CTX, 1, "empty file")),
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(CTX, i + 1, line, 5)?;
        let x = parse_f64(CTX, i + 1, "x", cols[0])?;
        let y = parse_f64(CTX, i + 1, "y", cols[1])?;
        let z = parse_f64(CTX, i + 1, "z", cols[2])?;
        let strike = parse_f64(CTX, i + 1, "strike", cols[3])?;
        let dip = parse_f64(CTX, i + 1, "dip", cols[4])?;
        if !(0.0..180.0).contains(&strike) {
            return Err(malformed(CTX, i + 1, format!("strike {strike} outside [0,180)")));
        }
        if !(0.0..=180.0).contains(&dip) {
            return Err(malformed(CTX, i + 1, format!("dip {dip} outside [0,180]")));
        }
        events.push(MicroseismicEvent {
            location: Vec3::new(x, y, z),
            focal: StrikeDip { strike_deg: strike, dip_deg: dip },
            host_fracture_id: None,
        });
    }
    if events.is_empty() {
        return Err(malformed(CTX, 1, "no events"));
    }
    Ok(events)
}

pub const CLUSTERS_HEADER: &str = "event_index,cluster_index";

pub fn clusters_to_csv(model: &ClusterModel) -> String {
    let mut out = String::from(CLUSTERS_HEADER);
    out.push('\n');
    for (event, cluster) in model.assignments.iter().enumerate() {
        out.push_str(&format!("{event},{cluster}\n"));
    }
    out
}

pub fn clusters_from_csv(text: &str) -> Result<Vec<usize>, IoError> {
    const CTX: &str = "clusters csv";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CLUSTERS_HEADER => {}
        Some((_, header)) => return Err(malformed(CTX, 1, format!("bad header `{header}`"))),
        None => return Err(malformed(CTX, 1, "empty file")),
    }
    let mut assignments = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(CTX, i + 1, line, 2)?;
        let event: usize = cols[0]
            .trim()
            .parse()
            .map_err(|e| malformed(CTX, i + 1, format!("event_index `{}`: {e}", cols[0])))?;
        if event != assignments.len() {
            return Err(malformed(
                CTX,
                i + 1,
                format!("event_index {event} out of order, expected {}", assignments.len()),
            ));
        }
        let cluster: usize = cols[1]
            .trim()
            .parse()
            .map_err(|e| malformed(CTX, i + 1, format!("cluster_index `{}`: {e}", cols[1])))?;
        assignments.push(cluster);
    }
    if assignments.is_empty() {
        return Err(malformed(CTX, 1, "no assignments"));
    }
    Ok(assignments)
}

/// Centroid-level view of a cluster model, exported as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub centroids: Vec<[f64; 3]>,
    pub distortion_m2: f64,
    pub iterations_run: usize,
}

impl ClusterSummary {
    pub fn of(model: &ClusterModel) -> Self {
        ClusterSummary {
            k: model.k,
            centroids: model.centroids.clone(),
            distortion_m2: model.distortion,
            iterations_run: model.iterations_run,
        }
    }
}

pub fn centroids_to_json(summary: &ClusterSummary) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(summary)?)
}

pub fn centroids_from_json(text: &str) -> Result<ClusterSummary, IoError> {
    let summary: ClusterSummary = serde_json::from_str(text)?;
    if summary.k == 0 || summary.centroids.len() != summary.k {
        return Err(malformed(
            "centroids json",
            1,
            format!("k = {} but {} centroids", summary.k, summary.centroids.len()),
        ));
    }
    if summary.centroids.iter().flatten().any(|v| !v.is_finite()) {
        return Err(malformed("centroids json", 1, "non-finite centroid coordinate"));
    }
    Ok(summary)
}

pub const HISTOGRAM_HEADER: &str = "bin_lo_deg,bin_hi_deg,mass";

pub fn histogram_to_csv(dist: &AngleDistribution) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for (i, mass) in dist.masses.iter().enumerate() {
        let lo = i as f64 * dist.bin_width_deg;
        let hi = lo + dist.bin_width_deg;
        out.push_str(&format!("{},{},{}\n", format_sig9(lo), format_sig9(hi), format_sig9(*mass)));
    }
    out
}

pub fn constraints_to_json(constraints: &[FractureConstraint]) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(constraints)?)
}

pub fn constraints_from_json(text: &str) -> Result<Vec<FractureConstraint>, IoError> {
    let constraints: Vec<FractureConstraint> = serde_json::from_str(text)?;
    if constraints.is_empty() {
        return Err(malformed("constraints json", 1, "no fracture constraints"));
    }
    for (i, c) in constraints.iter().enumerate() {
        for iv in [&c.strike, &c.dip] {
            if !(iv.lo_deg.is_finite() && iv.hi_deg.is_finite() && iv.lo_deg <= iv.hi_deg) {
                return Err(malformed(
                    "constraints json",
                    1,
                    format!("fracture {i}: interval [{}, {}]", iv.lo_deg, iv.hi_deg),
                ));
            }
        }
    }
    Ok(constraints)
}

/// Per-fracture geometry and material row of a realization export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractureExport {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub minor_axis_m: f64,
    pub major_axis_m: f64,
    pub aspect_ratio: f64,
    pub aperture_m: f64,
    pub permeability_m2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationExport {
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
    pub fractures: Vec<FractureExport>,
}

pub fn realization_to_json(realization: &DFNRealization) -> Result<String, IoError> {
    let fractures = realization
        .fractures
        .iter()
        .map(|f| FractureExport {
            center: [f.ellipse.center.x, f.ellipse.center.y, f.ellipse.center.z],
            normal: [
                f.ellipse.unit_normal.x,
                f.ellipse.unit_normal.y,
                f.ellipse.unit_normal.z,
            ],
            minor_axis_m: f.minor_length(),
            major_axis_m: f.major_length(),
            aspect_ratio: f.ellipse.aspect_ratio,
            aperture_m: f.aperture_m,
            permeability_m2: f.permeability_m2,
        })
        .collect();
    let export = RealizationExport {
        domain_min: realization.domain.min,
        domain_max: realization.domain.max,
        fractures,
    };
    Ok(serde_json::to_string_pretty(&export)?)
}

pub const MESH_CELLS_HEADER: &str = "cell_id,fracture_id,x,y,z,area_m2";
pub const MESH_ADJACENCY_HEADER: &str = "kind,cell_a,cell_b,length_m,distance_a_m,distance_b_m";

pub fn mesh_cells_to_csv(mesh: &DFNMesh) -> String {
    let mut out = String::from(MESH_CELLS_HEADER);
    out.push('\n');
    for (id, cell) in mesh.cells.iter().enumerate() {
        out.push_str(&format!(
            "{id},{},{},{},{},{}\n",
            cell.fracture,
            format_sig9(cell.center.x),
            format_sig9(cell.center.y),
            format_sig9(cell.center.z),
            format_sig9(cell.area_m2),
        ));
    }
    out
}

pub fn mesh_adjacency_to_csv(mesh: &DFNMesh) -> String {
    let mut out = String::from(MESH_ADJACENCY_HEADER);
    out.push('\n');
    for adj in &mesh.adjacency {
        let half = 0.5 * adj.distance_m;
        out.push_str(&format!(
            "face,{},{},{},{},{}\n",
            adj.a,
            adj.b,
            format_sig9(adj.edge_length_m),
            format_sig9(half),
            format_sig9(half),
        ));
    }
    for link in &mesh.intersections {
        out.push_str(&format!(
            "intersection,{},{},{},{},{}\n",
            link.a,
            link.b,
            format_sig9(link.overlap_m),
            format_sig9(link.dist_a_m),
            format_sig9(link.dist_b_m),
        ));
    }
    out
}

pub const SOLUTION_HEADER: &str = "cell_id,x,y,z,pressure_Pa";

pub fn solution_to_csv(mesh: &DFNMesh, solution: &FlowSolution) -> String {
    let mut out = String::from(SOLUTION_HEADER);
    out.push('\n');
    for (id, (cell, p)) in mesh.cells.iter().zip(&solution.pressures_pa).enumerate() {
        out.push_str(&format!(
            "{id},{},{},{},{}\n",
            format_sig9(cell.center.x),
            format_sig9(cell.center.y),
            format_sig9(cell.center.z),
            format_sig9(*p),
        ));
    }
    out
}

/// Mass-budget view of one solve, exported as JSON next to the solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub boundary_fluxes_kg_s: BTreeMap<String, f64>,
    pub inflow_kg_s: f64,
    pub outflow_kg_s: f64,
    pub mass_imbalance: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
    pub pinned_cells: usize,
}

pub fn solution_summary(solution: &FlowSolution) -> SolutionSummary {
    SolutionSummary {
        boundary_fluxes_kg_s: solution
            .boundary_fluxes_kg_s
            .iter()
            .map(|(face, flux)| (format!("{face:?}"), *flux))
            .collect(),
        inflow_kg_s: solution.inflow_kg_s,
        outflow_kg_s: solution.outflow_kg_s,
        mass_imbalance: crate::flow::mass_balance(solution),
        cg_iterations: solution.stats.iterations,
        cg_relative_residual: solution.stats.relative_residual,
        pinned_cells: solution.pinned_cells.len(),
    }
}

pub fn report_to_json(report: &InversionReport) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn report_from_json(text: &str) -> Result<InversionReport, IoError> {
    let report: InversionReport = serde_json::from_str(text)?;
    if report.samples.is_empty() || report.best_index >= report.samples.len() {
        return Err(malformed(
            "report json",
            1,
            format!("best index {} of {} samples", report.best_index, report.samples.len()),
        ));
    }
    Ok(report)
}

pub const ERROR_TABLE_HEADER: &str = "fracture,value,ground_truth,relative_error";

/// One Tables-1..4-style CSV for the given quantity.
pub fn error_table_to_csv(rows: &[ErrorRow], quantity: &str) -> String {
    let mut out = String::from(ERROR_TABLE_HEADER);
    out.push('\n');
    for row in rows.iter().filter(|r| r.quantity == quantity) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.fracture + 1,
            format_sig9(row.value),
            format_sig9(row.truth),
            format_sig9(row.relative_error),
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    Ok(std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StrikeDip;
    use crate::orientation::AngleInterval;

    fn sample_events() -> Vec<MicroseismicEvent> {
        vec![
            MicroseismicEvent {
                location: Vec3::new(-5.54321, -19.861, 98.218),
                focal: StrikeDip { strike_deg: 118.79, dip_deg: 132.524 },
                host_fracture_id: Some(0),
            },
            MicroseismicEvent {
                location: Vec3::new(0.577, 19.39, 91.1),
                focal: StrikeDip { strike_deg: 4.421, dip_deg: 87.822 },
                host_fracture_id: Some(1),
            },
        ]
    }

    #[test]
    fn catalog_round_trip_is_byte_stable() {
        let text = catalog_to_csv(&sample_events());
        let parsed = catalog_from_csv(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert!(parsed.iter().all(|e| e.host_fracture_id.is_none()));
        let again = catalog_to_csv(&parsed);
        assert_eq!(text, again);
    }

    #[test]
    fn catalog_rejects_malformed_input() {
        assert!(catalog_from_csv("").is_err());
        assert!(catalog_from_csv("x,y,z\n1,2,3\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\n1,2,3,4\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\n1,2,3,4,abc\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\n1,2,3,200,10\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\n1,2,3,10,190\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\nnan,2,3,10,90\n").is_err());
        assert!(catalog_from_csv("x,y,z,strike,dip\n").is_err());
    }

    #[test]
    fn clusters_round_trip() {
        let model = ClusterModel {
            k: 2,
            assignments: vec![0, 1, 1, 0],
            centroids: vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
            distortion: 0.5,
            iterations_run: 3,
        };
        let text = clusters_to_csv(&model);
        let parsed = clusters_from_csv(&text).unwrap();
        assert_eq!(parsed, vec![0, 1, 1, 0]);
        assert!(clusters_from_csv("event_index,cluster_index\n1,0\n").is_err());
        assert!(clusters_from_csv("bad\n0,0\n").is_err());
    }

    #[test]
    fn centroids_round_trip_and_validation() {
        let summary = ClusterSummary {
            k: 2,
            centroids: vec![[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]],
            distortion_m2: 12.5,
            iterations_run: 4,
        };
        let text = centroids_to_json(&summary).unwrap();
        let back = centroids_from_json(&text).unwrap();
        assert_eq!(back.centroids, summary.centroids);
        assert!(centroids_from_json("{\"k\":1,\"centroids\":[],\"distortion_m2\":0,\"iterations_run\":0}").is_err());
        assert!(centroids_from_json("not json").is_err());
    }

    #[test]
    fn constraints_round_trip_and_validation() {
        let constraints = vec![FractureConstraint {
            strike: AngleInterval { lo_deg: 110.0, hi_deg: 130.0 },
            dip: AngleInterval { lo_deg: 120.0, hi_deg: 140.0 },
        }];
        let text = constraints_to_json(&constraints).unwrap();
        let back = constraints_from_json(&text).unwrap();
        assert_eq!(back, constraints);
        assert!(constraints_from_json("[]").is_err());
        let bad = r#"[{"strike":{"lo_deg":20.0,"hi_deg":10.0},"dip":{"lo_deg":0.0,"hi_deg":1.0}}]"#;
        assert!(constraints_from_json(bad).is_err());
    }

    #[test]
    fn sig9_formatting_is_locale_independent_and_stable() {
        let x = -19.861234567;
        let text = format_sig9(x);
        assert_eq!(text, "-1.98612346e1");
        let back: f64 = text.parse().unwrap();
        assert_eq!(format_sig9(back), text);
    }

    #[test]
    fn histogram_csv_lists_every_bin() {
        let dist = AngleDistribution {
            kind: crate::orientation::AngleKind::Strike,
            bin_width_deg: 90.0,
            masses: vec![0.25, 0.75],
        };
        let text = histogram_to_csv(&dist);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], HISTOGRAM_HEADER);
        assert!(lines[1].starts_with("0.00000000e0,9.00000000e1,"));
    }
}
