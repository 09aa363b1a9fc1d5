//! Sequential inversion toolkit for discrete fracture networks (DFN).
//!
//! The library chains two stages. A geophysical stage constrains fracture
//! orientations from a microseismic event catalog: exhaustive three-point
//! plane fitting turns event triples into strike/dip histograms, k-means
//! with an elbow criterion groups events into fracture candidates, and
//! per-cluster histograms are reduced to hard orientation intervals. A flow
//! stage then constrains fracture sizes and hydraulic properties: candidate
//! networks are drawn by Latin hypercube sampling inside the orientation
//! intervals, meshed, and run through a steady-state Darcy solver, and the
//! candidate whose pressures best match the observations is selected.

// Validation guards are written `!(x > 0.0)` so NaN fails them; the
// comparison clippy prefers would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod config;
pub mod dfn;
pub mod flow;
pub mod geometry;
pub mod inversion;
pub mod io;
pub mod mesh;
pub mod orientation;
pub mod pipeline;
pub mod seismic;
