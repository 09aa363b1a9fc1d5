//! Conforming-enough meshing of fracture networks for two-point flux.
//!
//! Each fracture polygon is covered by a structured in-plane quad grid of
//! target size `h`, with boundary cells clipped to the polygon. Cells of the
//! same fracture connect through shared grid edges; cells of different
//! fractures connect where their footprints cross the fracture-pair
//! intersection segment; cell edges resting on the domain box become
//! boundary faces for Dirichlet conditions.

use crate::dfn::DFNRealization;
use crate::geometry::{plane_intersection_segment, polygon_area, AxisBox, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance tolerance for a cell edge to count as lying on a domain face, m.
pub const BOUNDARY_FACE_TOL: f64 = 1e-6;

/// Minimum cells a fracture must receive before the mesh is usable.
pub const MIN_CELLS_PER_FRACTURE: usize = 4;

/// Shortest overlap or edge length carried into the connectivity, m.
const LENGTH_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cell size must be positive, got {0}")]
    NonPositiveCellSize(f64),
    #[error("fracture {fracture} received {cells} cells; refine h below {h}")]
    MeshTooCoarse { fracture: usize, cells: usize, h: f64 },
    #[error("realization has no fractures")]
    EmptyRealization,
}

/// Domain box face carrying a boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceId {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl FaceId {
    pub const ALL: [FaceId; 6] =
        [FaceId::XMin, FaceId::XMax, FaceId::YMin, FaceId::YMax, FaceId::ZMin, FaceId::ZMax];

    fn axis_bound(self, bbox: &AxisBox) -> (usize, f64) {
        match self {
            FaceId::XMin => (0, bbox.min[0]),
            FaceId::XMax => (0, bbox.max[0]),
            FaceId::YMin => (1, bbox.min[1]),
            FaceId::YMax => (1, bbox.max[1]),
            FaceId::ZMin => (2, bbox.min[2]),
            FaceId::ZMax => (2, bbox.max[2]),
        }
    }
}

/// One finite-volume cell (a clipped quad on some fracture).
#[derive(Debug, Clone)]
pub struct Cell {
    pub fracture: usize,
    pub center: Vec3,
    pub area_m2: f64,
    pub aperture_m: f64,
    pub permeability_m2: f64,
}

/// Shared-edge connection between two cells of the same fracture.
#[derive(Debug, Clone, Copy)]
pub struct Adjacency {
    pub a: usize,
    pub b: usize,
    /// Shared edge length, m.
    pub edge_length_m: f64,
    /// Cell-center distance, m.
    pub distance_m: f64,
}

/// Connection between cells of two fractures along their intersection.
#[derive(Debug, Clone, Copy)]
pub struct IntersectionLink {
    pub a: usize,
    pub b: usize,
    /// Length of the shared piece of the intersection segment, m.
    pub overlap_m: f64,
    /// In-plane distances from each cell center to the segment line, m.
    pub dist_a_m: f64,
    pub dist_b_m: f64,
}

/// Cell edge lying on a domain face.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub cell: usize,
    pub face: FaceId,
    pub edge_length_m: f64,
    /// In-plane distance from the cell center to the edge line, m.
    pub distance_m: f64,
    /// z coordinate of the edge midpoint, for the gravity term.
    pub edge_mid_z_m: f64,
}

/// Finite-volume mesh over a fracture network.
#[derive(Debug, Clone)]
pub struct DFNMesh {
    pub cells: Vec<Cell>,
    pub adjacency: Vec<Adjacency>,
    pub intersections: Vec<IntersectionLink>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Cell index ranges per fracture, in fracture order.
    pub fracture_cells: Vec<std::ops::Range<usize>>,
    pub domain: AxisBox,
    pub target_h_m: f64,
}

#[derive(Clone, Copy, PartialEq, Debug)]
struct P2 {
    x: f64,
    y: f64,
}

fn p2(x: f64, y: f64) -> P2 {
    P2 { x, y }
}

/// In-plane coordinate frame of one fracture.
struct Frame {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
}

impl Frame {
    fn to_2d(&self, p: &Vec3) -> P2 {
        let d = p - self.origin;
        p2(d.dot(&self.u), d.dot(&self.v))
    }

    fn to_3d(&self, p: P2) -> Vec3 {
        self.origin + self.u * p.x + self.v * p.y
    }
}

fn poly_area_2d(poly: &[P2]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn poly_centroid_2d(poly: &[P2]) -> P2 {
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut a = 0.0;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
        a += w;
    }
    if a.abs() < 1e-300 {
        let n = poly.len().max(1) as f64;
        return p2(poly.iter().map(|p| p.x).sum::<f64>() / n, poly.iter().map(|p| p.y).sum::<f64>() / n);
    }
    p2(cx / (3.0 * a), cy / (3.0 * a))
}

/// Clips `subject` against one half-plane `n . (p - a) >= 0`.
fn clip_poly_half_plane_2d(subject: &[P2], a: P2, n: P2) -> Vec<P2> {
    let side = |p: &P2| n.x * (p.x - a.x) + n.y * (p.y - a.y);
    let mut out = Vec::with_capacity(subject.len() + 2);
    for i in 0..subject.len() {
        let cur = subject[i];
        let next = subject[(i + 1) % subject.len()];
        let (dc, dn) = (side(&cur), side(&next));
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push(p2(cur.x + (next.x - cur.x) * t, cur.y + (next.y - cur.y) * t));
        }
    }
    out
}

/// Clips `subject` to a convex counterclockwise polygon.
fn clip_poly_to_convex_2d(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut poly = subject.to_vec();
    for i in 0..clip.len() {
        if poly.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let e = p2(b.x - a.x, b.y - a.y);
        if e.x == 0.0 && e.y == 0.0 {
            continue;
        }
        // Interior of a CCW polygon is left of each edge.
        let inward = p2(-e.y, e.x);
        poly = clip_poly_half_plane_2d(&poly, a, inward);
    }
    poly
}

/// Parameter interval of the segment `s0 + t (s1 - s0)`, `t` in `[0, 1]`,
/// inside a convex counterclockwise polygon.
fn segment_interval_in_convex_2d(s0: P2, s1: P2, poly: &[P2]) -> Option<(f64, f64)> {
    let d = p2(s1.x - s0.x, s1.y - s0.y);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let e = p2(b.x - a.x, b.y - a.y);
        let n = p2(-e.y, e.x);
        let alpha = n.x * (s0.x - a.x) + n.y * (s0.y - a.y);
        let beta = n.x * d.x + n.y * d.y;
        if beta.abs() < 1e-14 * (n.x.hypot(n.y)).max(1e-300) {
            if alpha < 0.0 {
                return None;
            }
            continue;
        }
        let t = -alpha / beta;
        if beta > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

struct FractureGrid {
    /// Global cell index per occupied grid slot.
    cell_of_slot: Vec<Option<usize>>,
    nx: usize,
    /// Clipped cell footprints in plane coordinates, per occupied slot.
    footprints: Vec<Option<Vec<P2>>>,
}

impl FractureGrid {
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Builds the finite-volume mesh for a realization.
pub fn mesh_dfn(realization: &DFNRealization, h: f64) -> Result<DFNMesh, MeshError> {
    if !(h > 0.0) {
        return Err(MeshError::NonPositiveCellSize(h));
    }
    if realization.fractures.is_empty() {
        return Err(MeshError::EmptyRealization);
    }

    let mut cells = Vec::new();
    let mut adjacency = Vec::new();
    let mut boundary_faces = Vec::new();
    let mut fracture_cells = Vec::new();
    let mut frames = Vec::new();
    let mut grids = Vec::new();

    for (fi, frac) in realization.fractures.iter().enumerate() {
        let (u, v) = frac.ellipse.plane_frame();
        let frame = Frame { origin: frac.ellipse.center, u, v };
        let mut poly2: Vec<P2> = frac.polygon.iter().map(|p| frame.to_2d(p)).collect();
        if poly_area_2d(&poly2) < 0.0 {
            poly2.reverse();
        }

        let (mut u_min, mut u_max, mut v_min, mut v_max) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &poly2 {
            u_min = u_min.min(p.x);
            u_max = u_max.max(p.x);
            v_min = v_min.min(p.y);
            v_max = v_max.max(p.y);
        }
        let nx = ((u_max - u_min) / h).ceil().max(1.0) as usize;
        let ny = ((v_max - v_min) / h).ceil().max(1.0) as usize;
        let hx = (u_max - u_min) / nx as f64;
        let hy = (v_max - v_min) / ny as f64;

        let first_cell = cells.len();
        let mut grid = FractureGrid {
            cell_of_slot: vec![None; nx * ny],
            nx,
            footprints: vec![None; nx * ny],
        };

        for j in 0..ny {
            for i in 0..nx {
                let rect = [
                    p2(u_min + i as f64 * hx, v_min + j as f64 * hy),
                    p2(u_min + (i + 1) as f64 * hx, v_min + j as f64 * hy),
                    p2(u_min + (i + 1) as f64 * hx, v_min + (j + 1) as f64 * hy),
                    p2(u_min + i as f64 * hx, v_min + (j + 1) as f64 * hy),
                ];
                let footprint = clip_poly_to_convex_2d(&rect, &poly2);
                if footprint.len() < 3 {
                    continue;
                }
                let area = poly_area_2d(&footprint);
                if area <= LENGTH_TOL * hx * hy {
                    continue;
                }
                let c2 = poly_centroid_2d(&footprint);
                let slot = grid.slot(i, j);
                grid.cell_of_slot[slot] = Some(cells.len());
                grid.footprints[slot] = Some(footprint);
                cells.push(Cell {
                    fracture: fi,
                    center: frame.to_3d(c2),
                    area_m2: area,
                    aperture_m: frac.aperture_m,
                    permeability_m2: frac.permeability_m2,
                });
            }
        }

        let n_cells = cells.len() - first_cell;
        if n_cells < MIN_CELLS_PER_FRACTURE {
            return Err(MeshError::MeshTooCoarse { fracture: fi, cells: n_cells, h });
        }
        fracture_cells.push(first_cell..cells.len());

        // Interior adjacencies across shared grid edges, clipped to the
        // polygon so boundary pairs get the true shared length.
        for j in 0..ny {
            for i in 0..nx {
                let Some(ca) = grid.cell_of_slot[grid.slot(i, j)] else { continue };
                if i + 1 < nx {
                    if let Some(cb) = grid.cell_of_slot[grid.slot(i + 1, j)] {
                        let x = u_min + (i + 1) as f64 * hx;
                        let (s0, s1) =
                            (p2(x, v_min + j as f64 * hy), p2(x, v_min + (j + 1) as f64 * hy));
                        if let Some((lo, hi)) = segment_interval_in_convex_2d(s0, s1, &poly2) {
                            let len = (hi - lo) * hy;
                            if len > LENGTH_TOL {
                                adjacency.push(Adjacency {
                                    a: ca,
                                    b: cb,
                                    edge_length_m: len,
                                    distance_m: (cells[ca].center - cells[cb].center).norm(),
                                });
                            }
                        }
                    }
                }
                if j + 1 < ny {
                    if let Some(cb) = grid.cell_of_slot[grid.slot(i, j + 1)] {
                        let y = v_min + (j + 1) as f64 * hy;
                        let (s0, s1) =
                            (p2(u_min + i as f64 * hx, y), p2(u_min + (i + 1) as f64 * hx, y));
                        if let Some((lo, hi)) = segment_interval_in_convex_2d(s0, s1, &poly2) {
                            let len = (hi - lo) * hx;
                            if len > LENGTH_TOL {
                                adjacency.push(Adjacency {
                                    a: ca,
                                    b: cb,
                                    edge_length_m: len,
                                    distance_m: (cells[ca].center - cells[cb].center).norm(),
                                });
                            }
                        }
                    }
                }
            }
        }

        // Boundary faces: footprint edges whose endpoints both rest on a
        // domain face plane.
        for slot in 0..grid.cell_of_slot.len() {
            let (Some(cell_idx), Some(fp)) = (grid.cell_of_slot[slot], &grid.footprints[slot])
            else {
                continue;
            };
            let center = cells[cell_idx].center;
            for e in 0..fp.len() {
                let a3 = frame.to_3d(fp[e]);
                let b3 = frame.to_3d(fp[(e + 1) % fp.len()]);
                let edge_len = (b3 - a3).norm();
                if edge_len <= LENGTH_TOL {
                    continue;
                }
                for face in FaceId::ALL {
                    let (axis, bound) = face.axis_bound(&realization.domain);
                    if (a3[axis] - bound).abs() <= BOUNDARY_FACE_TOL
                        && (b3[axis] - bound).abs() <= BOUNDARY_FACE_TOL
                    {
                        let t = (b3 - a3) / edge_len;
                        let rel = center - a3;
                        let dist = (rel - t * rel.dot(&t)).norm();
                        boundary_faces.push(BoundaryFace {
                            cell: cell_idx,
                            face,
                            edge_length_m: edge_len,
                            distance_m: dist,
                            edge_mid_z_m: 0.5 * (a3.z + b3.z),
                        });
                        break;
                    }
                }
            }
        }

        frames.push(frame);
        grids.push(grid);
    }

    // Intersection links between every fracture pair that shares a segment.
    let mut intersections = Vec::new();
    for fa in 0..realization.fractures.len() {
        for fb in fa + 1..realization.fractures.len() {
            let seg = plane_intersection_segment(
                &realization.fractures[fa].polygon,
                &realization.fractures[fb].polygon,
            );
            let Some((s0, s1)) = seg else { continue };
            let seg_len = (s1 - s0).norm();
            let spans_a = segment_spans(&frames[fa], &grids[fa], s0, s1, seg_len);
            let spans_b = segment_spans(&frames[fb], &grids[fb], s0, s1, seg_len);
            let dir = (s1 - s0) / seg_len;
            for &(cell_a, a_lo, a_hi) in &spans_a {
                for &(cell_b, b_lo, b_hi) in &spans_b {
                    let overlap = (a_hi.min(b_hi) - a_lo.max(b_lo)) * seg_len;
                    if overlap <= LENGTH_TOL {
                        continue;
                    }
                    let dist = |c: &Vec3| {
                        let rel = c - s0;
                        (rel - dir * rel.dot(&dir)).norm()
                    };
                    intersections.push(IntersectionLink {
                        a: cell_a,
                        b: cell_b,
                        overlap_m: overlap,
                        dist_a_m: dist(&cells[cell_a].center),
                        dist_b_m: dist(&cells[cell_b].center),
                    });
                }
            }
        }
    }

    Ok(DFNMesh {
        cells,
        adjacency,
        intersections,
        boundary_faces,
        fracture_cells,
        domain: realization.domain,
        target_h_m: h,
    })
}

/// Parameter spans (cell, t_lo, t_hi) of the intersection segment across
/// one fracture's cell footprints, with t normalized to `[0, 1]`. A segment
/// riding exactly on a grid line falls inside two closed footprints; the
/// sweep below trims such duplicates so the spans partition the segment.
fn segment_spans(
    frame: &Frame,
    grid: &FractureGrid,
    s0: Vec3,
    s1: Vec3,
    seg_len: f64,
) -> Vec<(usize, f64, f64)> {
    let a2 = frame.to_2d(&s0);
    let b2 = frame.to_2d(&s1);
    let mut spans = Vec::new();
    for slot in 0..grid.cell_of_slot.len() {
        let (Some(cell), Some(fp)) = (grid.cell_of_slot[slot], &grid.footprints[slot]) else {
            continue;
        };
        if let Some((lo, hi)) = segment_interval_in_convex_2d(a2, b2, fp) {
            if (hi - lo) * seg_len > LENGTH_TOL {
                spans.push((cell, lo, hi));
            }
        }
    }
    spans.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut claimed_to = 0.0f64;
    let mut out = Vec::with_capacity(spans.len());
    for (cell, lo, hi) in spans {
        let lo = lo.max(claimed_to);
        if (hi - lo) * seg_len > LENGTH_TOL {
            out.push((cell, lo, hi));
            claimed_to = hi;
        }
    }
    out
}

impl DFNMesh {
    /// Total footprint area per fracture, m^2.
    pub fn fracture_area(&self, fracture: usize) -> f64 {
        self.fracture_cells[fracture].clone().map(|c| self.cells[c].area_m2).sum()
    }
}

/// Reference area of the clipped polygon, for conservation checks.
pub fn clipped_polygon_area(realization: &DFNRealization, fracture: usize) -> f64 {
    polygon_area(&realization.fractures[fracture].polygon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfn::{build_realization, ClosureCase, DFNRealization, FractureInstance, FractureSample};
    use crate::flow::FluidProperties;
    use crate::geometry::EllipticalFracture;
    use approx::assert_relative_eq;

    fn fluid() -> FluidProperties {
        FluidProperties {
            density_kg_m3: 997.0,
            viscosity_pa_s: 8.94e-4,
            gravity_m_s2: 9.8,
            porosity: 0.25,
        }
    }

    /// One vertical rectangle spanning the box in x and z at y = 0.
    pub(crate) fn single_rectangle_realization(domain: AxisBox) -> DFNRealization {
        let ellipse = EllipticalFracture::new(
            Vec3::new(
                0.5 * (domain.min[0] + domain.max[0]),
                0.0,
                0.5 * (domain.min[2] + domain.max[2]),
            ),
            Vec3::new(0.0, 1.0, 0.0),
            1.0,
            1.0,
            8,
        )
        .unwrap();
        let polygon = vec![
            Vec3::new(domain.min[0], 0.0, domain.min[2]),
            Vec3::new(domain.min[0], 0.0, domain.max[2]),
            Vec3::new(domain.max[0], 0.0, domain.max[2]),
            Vec3::new(domain.max[0], 0.0, domain.min[2]),
        ];
        DFNRealization {
            fractures: vec![FractureInstance {
                ellipse,
                polygon,
                aperture_m: 1e-5,
                permeability_m2: 1e-12,
                source_index: 0,
            }],
            domain,
        }
    }

    #[test]
    fn square_fracture_meshes_into_regular_grid() {
        let domain = AxisBox::new([-100.0, -100.0, -100.0], [100.0, 100.0, 100.0]).unwrap();
        let real = single_rectangle_realization(domain);
        let mesh = mesh_dfn(&real, 50.0).unwrap();
        assert_eq!(mesh.cells.len(), 16);
        assert_eq!(mesh.adjacency.len(), 24);
        assert!(mesh.intersections.is_empty());
        for adj in &mesh.adjacency {
            assert_relative_eq!(adj.edge_length_m, 50.0, epsilon = 1e-9);
            assert_relative_eq!(adj.distance_m, 50.0, epsilon = 1e-9);
        }
        for c in &mesh.cells {
            assert_relative_eq!(c.area_m2, 2500.0, epsilon = 1e-9);
        }
        // Edges on x faces: 4 per side; z faces contribute 4 each as well.
        let per_face = |f: FaceId| mesh.boundary_faces.iter().filter(|b| b.face == f).count();
        assert_eq!(per_face(FaceId::XMin), 4);
        assert_eq!(per_face(FaceId::XMax), 4);
        assert_eq!(per_face(FaceId::ZMin), 4);
        assert_eq!(per_face(FaceId::ZMax), 4);
        assert_eq!(per_face(FaceId::YMin), 0);
        for b in &mesh.boundary_faces {
            assert_relative_eq!(b.distance_m, 25.0, epsilon = 1e-9);
            assert_relative_eq!(b.edge_length_m, 50.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cell_areas_tile_the_clipped_polygon() {
        let domain = AxisBox::new([-100.0, -100.0, 0.0], [100.0, 100.0, 200.0]).unwrap();
        let samples = vec![FractureSample {
            strike_deg: 118.79,
            dip_deg: 132.52,
            minor_axis_m: 250.0,
            aspect_ratio: 1.1,
            center: [-5.543, -19.861, 98.218],
        }];
        let real = build_realization(
            &samples,
            &ClosureCase::ConstantAperture { aperture_m: 1e-5, permeability_m2: 1e-12 },
            &domain,
            24,
            &fluid(),
            0,
        )
        .unwrap();
        let poly_area = clipped_polygon_area(&real, 0);
        let mesh = mesh_dfn(&real, 10.0).unwrap();
        assert_relative_eq!(mesh.fracture_area(0), poly_area, max_relative = 5e-3);
    }

    #[test]
    fn too_coarse_mesh_is_rejected() {
        let domain = AxisBox::new([-100.0, -100.0, -100.0], [100.0, 100.0, 100.0]).unwrap();
        let real = single_rectangle_realization(domain);
        assert!(matches!(
            mesh_dfn(&real, 500.0),
            Err(MeshError::MeshTooCoarse { fracture: 0, .. })
        ));
        assert!(mesh_dfn(&real, 0.0).is_err());
    }

    /// Two congruent orthogonal squares crossing through each other's
    /// centers, centered in the box.
    fn crossing_squares(domain: AxisBox) -> DFNRealization {
        let horizontal = FractureInstance {
            ellipse: EllipticalFracture::new(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
                1.0,
                1.0,
                8,
            )
            .unwrap(),
            polygon: vec![
                Vec3::new(-80.0, -80.0, 0.0),
                Vec3::new(80.0, -80.0, 0.0),
                Vec3::new(80.0, 80.0, 0.0),
                Vec3::new(-80.0, 80.0, 0.0),
            ],
            aperture_m: 1e-5,
            permeability_m2: 1e-12,
            source_index: 0,
        };
        let vertical = FractureInstance {
            ellipse: EllipticalFracture::new(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                1.0,
                1.0,
                8,
            )
            .unwrap(),
            polygon: vec![
                Vec3::new(-80.0, 0.0, -80.0),
                Vec3::new(80.0, 0.0, -80.0),
                Vec3::new(80.0, 0.0, 80.0),
                Vec3::new(-80.0, 0.0, 80.0),
            ],
            aperture_m: 1e-5,
            permeability_m2: 1e-12,
            source_index: 1,
        };
        DFNRealization { fractures: vec![horizontal, vertical], domain }
    }

    #[test]
    fn intersection_overlaps_tile_the_segment_on_both_sides() {
        let domain = AxisBox::new([-100.0, -100.0, -100.0], [100.0, 100.0, 100.0]).unwrap();
        let real = crossing_squares(domain);
        let mesh = mesh_dfn(&real, 20.0).unwrap();
        assert!(!mesh.intersections.is_empty());

        // The trace is the x axis between -80 and 80; the link overlaps
        // partition it, so they sum to its length exactly once.
        let seg_len = 160.0;
        let covered: f64 = mesh.intersections.iter().map(|l| l.overlap_m).sum();
        assert_relative_eq!(covered, seg_len, epsilon = 1e-9);
        // The trace rides a grid line of both 8x8 grids, so one row of 8
        // cells claims it per side and the aligned pieces pair one-to-one.
        assert_eq!(mesh.intersections.len(), 8);
        for link in &mesh.intersections {
            assert_eq!(mesh.cells[link.a].fracture, 0);
            assert_eq!(mesh.cells[link.b].fracture, 1);
            assert_relative_eq!(link.overlap_m, 20.0, epsilon = 1e-9);
            // Claiming cell centers sit half a cell off the trace.
            assert_relative_eq!(link.dist_a_m, 10.0, epsilon = 1e-9);
            assert_relative_eq!(link.dist_b_m, 10.0, epsilon = 1e-9);
        }

        // Shifting the vertical fracture to y = 5 moves the trace off the
        // horizontal grid lines; the partition property must still hold.
        let mut shifted = crossing_squares(domain);
        shifted.fractures[1].ellipse = EllipticalFracture::new(
            Vec3::new(0.0, 5.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            1.0,
            1.0,
            8,
        )
        .unwrap();
        for p in &mut shifted.fractures[1].polygon {
            p.y = 5.0;
        }
        let mesh = mesh_dfn(&shifted, 20.0).unwrap();
        let covered: f64 = mesh.intersections.iter().map(|l| l.overlap_m).sum();
        assert_relative_eq!(covered, seg_len, epsilon = 1e-9);
        for link in &mesh.intersections {
            assert_relative_eq!(link.dist_a_m, 5.0, epsilon = 1e-9);
            assert_relative_eq!(link.dist_b_m, 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_faces_only_touch_spanned_faces() {
        let domain = AxisBox::new([-80.0, -100.0, -80.0], [80.0, 100.0, 80.0]).unwrap();
        let real = crossing_squares(domain);
        let mesh = mesh_dfn(&real, 20.0).unwrap();
        let faces: std::collections::BTreeSet<FaceId> =
            mesh.boundary_faces.iter().map(|b| b.face).collect();
        // The squares span x and z exactly to the box, never y.
        assert!(faces.contains(&FaceId::XMin));
        assert!(faces.contains(&FaceId::XMax));
        assert!(faces.contains(&FaceId::ZMin));
        assert!(faces.contains(&FaceId::ZMax));
        assert!(!faces.contains(&FaceId::YMin));
        assert!(!faces.contains(&FaceId::YMax));
    }
}
