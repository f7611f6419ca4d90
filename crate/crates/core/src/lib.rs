//! Numerical laboratory for minimal surfaces in 3-space and Einstein
//! 4-manifold model geometries.
//!
//! The crate is organized around six labs:
//!
//! - [`surface`]: parametric patches, fundamental forms, discrete curvature,
//!   areas, and the minimal surface equation residual.
//! - [`flow`]: mean curvature flow on meshes and Ricci flow on
//!   finite-dimensional metric families.
//! - [`spectra`]: Jacobi operators with Morse index, and the Lichnerowicz
//!   Laplacian on transverse-traceless tensors over the flat 4-torus.
//! - [`chart`]: coordinate-chart Riemannian machinery (curvature oracle,
//!   Einstein residuals, functionals, geodesic-ball volumes, topology gates).
//! - [`decompose`]: monotonicity and regularity probes on surfaces, plus the
//!   thick/thin and sheeted/non-sheeted decompositions.
//! - [`veronese`]: complex projective plane, the Veronese embedding and its
//!   unit lift, the Hopf fibration, the projector immersion into the sphere,
//!   and Takahashi-condition certification.
//!
//! Everything is plain `f64` numerics over [`nalgebra`] types; no file IO
//! happens here (the companion CLI crate owns formats and persistence).

pub mod chart;
pub mod decompose;
pub mod flow;
pub mod mesh;
pub mod sparse;
pub mod spectra;
pub mod surface;
pub mod veronese;

pub use nalgebra;
