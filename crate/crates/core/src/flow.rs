//! Steady saturated Darcy flow on a fracture-network mesh.
//!
//! Two-point flux finite volumes over the cells of a [`DFNMesh`], with
//! Dirichlet pressures on selected domain faces and no-flow everywhere
//! else. Gravity is folded into the solved potential `p - rho g z`, so the
//! system stays symmetric positive definite and is solved with
//! Jacobi-preconditioned conjugate gradients.

use crate::mesh::{DFNMesh, FaceId};
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default relative residual for the conjugate-gradient solve.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Fraction of the target cell size used as a floor on center-to-interface
/// distances, so cells sitting on an intersection keep finite conductance.
const DISTANCE_FLOOR_FRAC: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("fluid properties out of range: {0}")]
    InvalidFluid(String),
    #[error("boundary conditions list no Dirichlet face")]
    NoDirichlet,
    #[error("no connected component of the mesh touches a Dirichlet face")]
    SingularSystem,
    #[error("solver stalled after {iterations} iterations at relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Single-phase fluid description.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FluidProperties {
    pub density_kg_m3: f64,
    pub viscosity_pa_s: f64,
    pub gravity_m_s2: f64,
    /// Carried for completeness; inert at steady state.
    pub porosity: f64,
}

impl FluidProperties {
    /// Water near 25 C with standard gravity.
    pub fn water() -> Self {
        FluidProperties {
            density_kg_m3: 997.0,
            viscosity_pa_s: 8.94e-4,
            gravity_m_s2: 9.8,
            porosity: 0.25,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.density_kg_m3 > 0.0) || !self.density_kg_m3.is_finite() {
            return Err(FlowError::InvalidFluid(format!("density {}", self.density_kg_m3)));
        }
        if !(self.viscosity_pa_s > 0.0) || !self.viscosity_pa_s.is_finite() {
            return Err(FlowError::InvalidFluid(format!("viscosity {}", self.viscosity_pa_s)));
        }
        if !(self.gravity_m_s2 >= 0.0) || !self.gravity_m_s2.is_finite() {
            return Err(FlowError::InvalidFluid(format!("gravity {}", self.gravity_m_s2)));
        }
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(FlowError::InvalidFluid(format!("porosity {}", self.porosity)));
        }
        Ok(())
    }
}

/// Dirichlet pressures per domain face; unlisted faces are no-flow.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub dirichlet_pa: BTreeMap<FaceId, f64>,
}

impl BoundaryConditions {
    /// Pressure drop along x: `p_x_min` on the x- face, `p_x_max` on x+.
    pub fn x_drop(p_x_min: f64, p_x_max: f64) -> Self {
        let mut dirichlet_pa = BTreeMap::new();
        dirichlet_pa.insert(FaceId::XMin, p_x_min);
        dirichlet_pa.insert(FaceId::XMax, p_x_max);
        BoundaryConditions { dirichlet_pa }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if self.dirichlet_pa.is_empty() {
            return Err(FlowError::NoDirichlet);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solved pressure field and boundary fluxes.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Cell pressures, Pa, in mesh cell order.
    pub pressures_pa: Vec<f64>,
    /// Net mass flux into the domain per Dirichlet face, kg/s.
    pub boundary_fluxes_kg_s: BTreeMap<FaceId, f64>,
    /// Total inflow over all boundary edges, kg/s (>= 0).
    pub inflow_kg_s: f64,
    /// Total outflow over all boundary edges, kg/s (<= 0).
    pub outflow_kg_s: f64,
    /// Cells in components with no Dirichlet contact, held at the mean
    /// Dirichlet pressure.
    pub pinned_cells: Vec<usize>,
    pub stats: SolverStats,
}

/// Harmonic mean of two conductivity products.
pub fn harmonic_pair(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    2.0 * a * b / (a + b)
}

/// One off-diagonal coupling of the assembled system.
struct Coupling {
    a: usize,
    b: usize,
    transmissibility: f64,
}

/// Dirichlet attachment of one cell.
struct BoundaryTerm {
    cell: usize,
    face: FaceId,
    transmissibility: f64,
    /// Potential imposed at the face edge, Pa.
    potential: f64,
}

/// Assembled symmetric positive definite system over the active cells.
pub struct AssembledSystem {
    /// Active cell count.
    n: usize,
    /// Global cell index -> active row, dense over mesh cells.
    active_row: Vec<Option<usize>>,
    diag: Vec<f64>,
    /// Off-diagonal neighbors per row: (column, coefficient).
    neighbors: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    boundary_terms: Vec<BoundaryTerm>,
    pinned: Vec<usize>,
    mean_dirichlet_pa: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Builds the finite-volume system for the potential `p - rho g z`.
pub fn assemble(
    mesh: &DFNMesh,
    fluid: &FluidProperties,
    bcs: &BoundaryConditions,
) -> Result<AssembledSystem, FlowError> {
    fluid.validate()?;
    bcs.validate()?;

    let n_cells = mesh.cells.len();
    let mu = fluid.viscosity_pa_s;
    let rho_g = fluid.density_kg_m3 * fluid.gravity_m_s2;
    let d_floor = DISTANCE_FLOOR_FRAC * mesh.target_h_m;

    let mut couplings = Vec::with_capacity(mesh.adjacency.len() + mesh.intersections.len());
    for adj in &mesh.adjacency {
        let ca = &mesh.cells[adj.a];
        let cb = &mesh.cells[adj.b];
        let kb = harmonic_pair(
            ca.permeability_m2 * ca.aperture_m,
            cb.permeability_m2 * cb.aperture_m,
        );
        let d = adj.distance_m.max(d_floor);
        couplings.push(Coupling {
            a: adj.a,
            b: adj.b,
            transmissibility: kb * adj.edge_length_m / (mu * d),
        });
    }
    for link in &mesh.intersections {
        let ca = &mesh.cells[link.a];
        let cb = &mesh.cells[link.b];
        let res_a = link.dist_a_m.max(d_floor) / (ca.permeability_m2 * ca.aperture_m);
        let res_b = link.dist_b_m.max(d_floor) / (cb.permeability_m2 * cb.aperture_m);
        couplings.push(Coupling {
            a: link.a,
            b: link.b,
            transmissibility: link.overlap_m / (mu * (res_a + res_b)),
        });
    }

    let mut boundary_terms = Vec::new();
    for bf in &mesh.boundary_faces {
        let Some(&pressure) = bcs.dirichlet_pa.get(&bf.face) else { continue };
        let cell = &mesh.cells[bf.cell];
        let kb = cell.permeability_m2 * cell.aperture_m;
        let d = bf.distance_m.max(d_floor);
        boundary_terms.push(BoundaryTerm {
            cell: bf.cell,
            face: bf.face,
            transmissibility: kb * bf.edge_length_m / (mu * d),
            potential: pressure - rho_g * bf.edge_mid_z_m,
        });
    }

    // Components reachable from a Dirichlet face stay in the system; the
    // rest are pinned to the mean Dirichlet pressure.
    let mut uf = UnionFind::new(n_cells);
    for c in &couplings {
        uf.union(c.a, c.b);
    }
    let mut component_has_bc = vec![false; n_cells];
    for term in &boundary_terms {
        let root = uf.find(term.cell);
        component_has_bc[root] = true;
    }
    let mut active_row = vec![None; n_cells];
    let mut pinned = Vec::new();
    let mut n_active = 0;
    for i in 0..n_cells {
        if component_has_bc[uf.find(i)] {
            active_row[i] = Some(n_active);
            n_active += 1;
        } else {
            pinned.push(i);
        }
    }
    if n_active == 0 {
        return Err(FlowError::SingularSystem);
    }
    if !pinned.is_empty() {
        log::warn!(
            "{} of {} cells sit in components without Dirichlet contact; pinning them",
            pinned.len(),
            n_cells
        );
    }

    let mut diag = vec![0.0; n_active];
    let mut neighbors = vec![Vec::new(); n_active];
    let mut rhs = vec![0.0; n_active];
    for c in &couplings {
        let (Some(ra), Some(rb)) = (active_row[c.a], active_row[c.b]) else { continue };
        diag[ra] += c.transmissibility;
        diag[rb] += c.transmissibility;
        neighbors[ra].push((rb, -c.transmissibility));
        neighbors[rb].push((ra, -c.transmissibility));
    }
    for term in &boundary_terms {
        let Some(row) = active_row[term.cell] else { continue };
        diag[row] += term.transmissibility;
        rhs[row] += term.transmissibility * term.potential;
    }

    let mean_dirichlet_pa =
        bcs.dirichlet_pa.values().sum::<f64>() / bcs.dirichlet_pa.len() as f64;

    Ok(AssembledSystem {
        n: n_active,
        active_row,
        diag,
        neighbors,
        rhs,
        boundary_terms,
        pinned,
        mean_dirichlet_pa,
    })
}

impl AssembledSystem {
    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for &(j, a) in &self.neighbors[i] {
                acc += a * x[j];
            }
            y[i] = acc;
        }
    }

    /// Jacobi-preconditioned conjugate gradients.
    fn solve_cg(&self, rel_tol: f64, max_iters: usize) -> Result<(Vec<f64>, SolverStats), FlowError> {
        let n = self.n;
        let b_norm = self.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            return Ok((vec![0.0; n], SolverStats { iterations: 0, relative_residual: 0.0 }));
        }

        // Starting from the mean boundary potential removes the bulk offset.
        let x0 = self.boundary_terms.iter().map(|t| t.potential).sum::<f64>()
            / self.boundary_terms.len().max(1) as f64;
        let mut x = vec![x0; n];
        let mut r = vec![0.0; n];
        self.matvec(&x, &mut r);
        for (res, rhs) in r.iter_mut().zip(&self.rhs) {
            *res = rhs - *res;
        }
        let inv_diag: Vec<f64> =
            self.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let mut z: Vec<f64> = (0..n).map(|i| inv_diag[i] * r[i]).collect();
        let mut p = z.clone();
        let mut rz: f64 = (0..n).map(|i| r[i] * z[i]).sum();
        let mut ap = vec![0.0; n];

        let mut res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        let mut iterations = 0;
        while res > rel_tol {
            if iterations >= max_iters {
                return Err(FlowError::NoConvergence { iterations, residual: res });
            }
            self.matvec(&p, &mut ap);
            let pap: f64 = (0..n).map(|i| p[i] * ap[i]).sum();
            if pap <= 0.0 {
                return Err(FlowError::NoConvergence { iterations, residual: res });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_next: f64 = (0..n).map(|i| r[i] * z[i]).sum();
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
            iterations += 1;
        }
        Ok((x, SolverStats { iterations, relative_residual: res }))
    }
}

/// Assembles and solves the steady pressure field.
pub fn solve_steady(
    mesh: &DFNMesh,
    fluid: &FluidProperties,
    bcs: &BoundaryConditions,
    rel_tol: f64,
    max_iters: usize,
) -> Result<FlowSolution, FlowError> {
    let system = assemble(mesh, fluid, bcs)?;
    let (potential, stats) = system.solve_cg(rel_tol, max_iters)?;

    let rho_g = fluid.density_kg_m3 * fluid.gravity_m_s2;
    let mut pressures_pa = vec![0.0; mesh.cells.len()];
    for (cell, row) in system.active_row.iter().enumerate() {
        match row {
            Some(r) => {
                pressures_pa[cell] = potential[*r] + rho_g * mesh.cells[cell].center.z;
            }
            None => pressures_pa[cell] = system.mean_dirichlet_pa,
        }
    }

    let mut boundary_fluxes_kg_s: BTreeMap<FaceId, f64> =
        bcs.dirichlet_pa.keys().map(|&f| (f, 0.0)).collect();
    let mut inflow_kg_s = 0.0;
    let mut outflow_kg_s = 0.0;
    for term in &system.boundary_terms {
        let Some(row) = system.active_row[term.cell] else { continue };
        let into_domain =
            fluid.density_kg_m3 * term.transmissibility * (term.potential - potential[row]);
        *boundary_fluxes_kg_s.get_mut(&term.face).unwrap() += into_domain;
        if into_domain >= 0.0 {
            inflow_kg_s += into_domain;
        } else {
            outflow_kg_s += into_domain;
        }
    }

    Ok(FlowSolution {
        pressures_pa,
        boundary_fluxes_kg_s,
        inflow_kg_s,
        outflow_kg_s,
        pinned_cells: system.pinned,
        stats,
    })
}

/// Relative mass imbalance over all boundary edges.
pub fn mass_balance(solution: &FlowSolution) -> f64 {
    let scale = solution.inflow_kg_s.max(-solution.outflow_kg_s);
    if scale == 0.0 {
        return 0.0;
    }
    (solution.inflow_kg_s + solution.outflow_kg_s).abs() / scale
}

/// Pressure of the cell whose center is nearest to `point`; ties go to the
/// lowest cell index.
pub fn extract_observation(solution: &FlowSolution, mesh: &DFNMesh, point: &Vec3) -> f64 {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, cell) in mesh.cells.iter().enumerate() {
        let d2 = (cell.center - point).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    solution.pressures_pa[best]
}
