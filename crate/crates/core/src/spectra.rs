//! Discretized second-variation operators.
//!
//! The Jacobi operator of a minimal immersion is realized as the generalized
//! pencil `(K - M diag(|A|^2 + ric), M)` with the cotangent stiffness K and
//! lumped mixed-area mass M, Dirichlet on boundary vertices. Operators are
//! assembled positive-semidefinite-leaning (Delta = -div grad), so an
//! unstable direction shows up as a negative eigenvalue and the Morse index
//! is the count of those.
//!
//! The Lichnerowicz Laplacian is realized spectrally on the flat 4-torus,
//! where the curvature term vanishes and the operator is the nonnegative
//! Fourier multiplier `(2 pi / L)^2 |k|^2` on transverse-traceless modes.

use crate::mesh::TriangleMesh;
use crate::sparse::{smallest_generalized_eigenvalue, CooBuilder, CsrMatrix, SparseError};
use crate::surface::{evaluate_forms, ParametricPatch, SurfaceError};
use nalgebra::{DMatrix, Matrix4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("assembled operator asymmetric: max |A - A^T| = {0:e}")]
    Asymmetric(f64),
    #[error("mesh carries no parameter coordinates; cannot evaluate |A|^2 from the patch")]
    MissingParams,
    #[error("requested {k} eigenvalues from an operator of size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("operator is empty (no interior degrees of freedom)")]
    Empty,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Solver(#[from] SparseError),
}

/// Sorted eigenvalues with the negative count.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Count of eigenvalues below `-tol_neg`.
    pub index: usize,
    pub tol_neg: f64,
    pub operator_size: usize,
}

impl SpectralReport {
    pub fn new(mut eigenvalues: Vec<f64>, tol_neg: f64, operator_size: usize) -> Self {
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let index = eigenvalues.iter().filter(|&&e| e < -tol_neg).count();
        SpectralReport {
            eigenvalues,
            index,
            tol_neg,
            operator_size,
        }
    }
}

/// Morse index: the number of eigenvalues below `-tol_neg`.
pub fn morse_index(report: &SpectralReport) -> usize {
    report
        .eigenvalues
        .iter()
        .filter(|&&e| e < -report.tol_neg)
        .count()
}

/// Generalized symmetric pencil `A x = lambda M x` with diagonal mass.
#[derive(Debug, Clone)]
pub struct GeneralizedOperator {
    /// `K - M diag(potential)`.
    pub matrix: CsrMatrix,
    /// Lumped mass per degree of freedom.
    pub mass: Vec<f64>,
    /// Mesh vertex id per degree of freedom.
    pub vertex_ids: Vec<usize>,
    /// Smallest potential value; used to pick spectral shifts.
    pub potential_min: f64,
}

impl GeneralizedOperator {
    pub fn size(&self) -> usize {
        self.matrix.n
    }
}

/// Cotangent stiffness + lumped mass on the non-Dirichlet vertices, minus the
/// mass-weighted potential. Dirichlet rows are the mesh boundary vertices.
pub fn assemble_operator(
    mesh: &TriangleMesh,
    potential: &[f64],
) -> Result<GeneralizedOperator, SpectraError> {
    let nv = mesh.vertices.len();
    assert_eq!(potential.len(), nv, "one potential value per vertex");
    let mut dof = vec![usize::MAX; nv];
    let mut vertex_ids = Vec::new();
    for v in 0..nv {
        if !mesh.boundary[v] {
            dof[v] = vertex_ids.len();
            vertex_ids.push(v);
        }
    }
    let n = vertex_ids.len();
    if n == 0 {
        return Err(SpectraError::Empty);
    }
    let mut builder = CooBuilder::new(n);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let angles = mesh.triangle_angles(t);
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let w = 0.5 / angles[(k + 2) % 3].tan();
            let (da, db) = (dof[a], dof[b]);
            if da != usize::MAX {
                builder.add(da, da, w);
            }
            if db != usize::MAX {
                builder.add(db, db, w);
            }
            if da != usize::MAX && db != usize::MAX {
                builder.add(da, db, -w);
                builder.add(db, da, -w);
            }
        }
    }
    let areas = mesh.mixed_vertex_areas();
    let mass: Vec<f64> = vertex_ids.iter().map(|&v| areas[v]).collect();
    let mut potential_min = f64::INFINITY;
    for (d, &v) in vertex_ids.iter().enumerate() {
        builder.add(d, d, -mass[d] * potential[v]);
        potential_min = potential_min.min(potential[v]);
    }
    let matrix = builder.build();
    let asym = matrix.asymmetry();
    if asym > 1e-12 {
        return Err(SpectraError::Asymmetric(asym));
    }
    Ok(GeneralizedOperator {
        matrix,
        mass,
        vertex_ids,
        potential_min,
    })
}

/// Plain Laplacian (zero potential).
pub fn assemble_laplace(mesh: &TriangleMesh) -> Result<GeneralizedOperator, SpectraError> {
    assemble_operator(mesh, &vec![0.0; mesh.vertices.len()])
}

/// Jacobi operator `Delta - (|A|^2 + ric)` of a patch-backed mesh, with
/// `|A|^2` evaluated analytically at each vertex's parameter point.
pub fn assemble_jacobi(
    patch: &ParametricPatch,
    mesh: &TriangleMesh,
    ambient_ric: f64,
) -> Result<GeneralizedOperator, SpectraError> {
    let params = mesh.params.as_ref().ok_or(SpectraError::MissingParams)?;
    let mut potential = Vec::with_capacity(mesh.vertices.len());
    for &(u, v) in params {
        let forms = evaluate_forms(patch, u, v)?;
        potential.push(forms.a2 + ambient_ric);
    }
    assemble_operator(mesh, &potential)
}

/// `k` smallest eigenvalues of the pencil via a dense symmetric solve of
/// `M^{-1/2} A M^{-1/2}`.
pub fn spectrum(op: &GeneralizedOperator, k: usize) -> Result<SpectralReport, SpectraError> {
    let n = op.size();
    if k > n {
        return Err(SpectraError::KTooLarge { k, size: n });
    }
    let inv_sqrt: Vec<f64> = op.mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut dense = DMatrix::zeros(n, n);
    for i in 0..n {
        for idx in op.matrix.row_ptr[i]..op.matrix.row_ptr[i + 1] {
            let j = op.matrix.col_idx[idx];
            dense[(i, j)] = op.matrix.values[idx] * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = dense.symmetric_eigenvalues();
    let mut all: Vec<f64> = eig.iter().copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = all
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()))
        .max(1.0);
    let tol_neg = 1e-9 * scale;
    all.truncate(k);
    Ok(SpectralReport::new(all, tol_neg, n))
}

/// Smallest eigenvalue only, via sparse shifted inverse iteration. Much
/// cheaper than [`spectrum`] inside bisection loops.
pub fn smallest_eigenvalue(op: &GeneralizedOperator) -> Result<f64, SpectraError> {
    let sigma = (-op.potential_min).max(0.0) + 1.0;
    Ok(smallest_generalized_eigenvalue(
        &op.matrix, &op.mass, sigma, 1e-10,
    )?)
}

/// Basis of transverse-traceless symmetric tensors at one lattice mode.
///
/// Tensors are built from integer vectors orthogonal to `k`, so the trace and
/// mode-k divergence vanish exactly in floating point.
#[derive(Debug, Clone)]
pub struct TTModeBasis {
    pub k: [i64; 4],
    pub eigenvalue: f64,
    pub basis: Vec<Matrix4<f64>>,
}

impl TTModeBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Max |Tr h| over the basis.
    pub fn max_trace(&self) -> f64 {
        self.basis
            .iter()
            .map(|h| h.trace().abs())
            .fold(0.0, f64::max)
    }

    /// Max |k_i h_ij| over the basis and j.
    pub fn max_divergence(&self) -> f64 {
        let kv = nalgebra::Vector4::new(
            self.k[0] as f64,
            self.k[1] as f64,
            self.k[2] as f64,
            self.k[3] as f64,
        );
        self.basis
            .iter()
            .map(|h| (h * kv).amax())
            .fold(0.0, f64::max)
    }
}

fn constant_tt_basis() -> Vec<Matrix4<f64>> {
    let mut basis = Vec::with_capacity(9);
    // diagonal traceless
    for i in 0..3 {
        let mut m = Matrix4::zeros();
        m[(i, i)] = 1.0;
        m[(3, 3)] = -1.0;
        basis.push(m);
    }
    // symmetric off-diagonal
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut m = Matrix4::zeros();
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
            basis.push(m);
        }
    }
    basis
}

fn mode_tt_basis(k: [i64; 4]) -> Vec<Matrix4<f64>> {
    let p = (0..4).find(|&i| k[i] != 0).expect("nonzero mode");
    // integer vectors spanning the orthogonal complement of k
    let mut perp = Vec::with_capacity(3);
    for q in 0..4 {
        if q == p {
            continue;
        }
        let mut a = [0i64; 4];
        a[q] = k[p];
        a[p] = -k[q];
        perp.push(a);
    }
    let sym = |a: &[i64; 4], b: &[i64; 4]| {
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = (a[i] * b[j] + a[j] * b[i]) as f64;
            }
        }
        m
    };
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let products: Vec<Matrix4<f64>> = pairs
        .iter()
        .map(|&(i, j)| sym(&perp[i], &perp[j]))
        .collect();
    let traces: Vec<f64> = products.iter().map(|m| m.trace()).collect();
    // trace-free integer combinations against the (0,0) product
    let mut basis = Vec::with_capacity(5);
    for q in 1..6 {
        basis.push(traces[0] * products[q] - traces[q] * products[0]);
    }
    basis
}

/// Spectrum of the Lichnerowicz Laplacian on TT tensors over the flat 4-torus
/// of the given side, enumerated over lattice modes with `|k|^2 <= cutoff^2`
/// (one representative per `{k, -k}` class).
///
/// On the flat torus the curvature term vanishes, so the eigenvalue at mode k
/// is `(2 pi / side)^2 |k|^2` with multiplicity 5 (9 constants at k = 0).
pub fn lichnerowicz_torus_spectrum(
    side: f64,
    mode_cutoff: i64,
) -> (SpectralReport, Vec<TTModeBasis>) {
    assert!(side > 0.0 && mode_cutoff >= 1);
    let factor = (2.0 * std::f64::consts::PI / side).powi(2);
    let mut modes = Vec::new();
    modes.push(TTModeBasis {
        k: [0; 4],
        eigenvalue: 0.0,
        basis: constant_tt_basis(),
    });
    let c = mode_cutoff;
    let c2 = c * c;
    for k0 in -c..=c {
        for k1 in -c..=c {
            for k2 in -c..=c {
                for k3 in -c..=c {
                    let k = [k0, k1, k2, k3];
                    let norm2 = k.iter().map(|&x| x * x).sum::<i64>();
                    if norm2 == 0 || norm2 > c2 {
                        continue;
                    }
                    // canonical representative of {k, -k}
                    let first = k.iter().find(|&&x| x != 0).copied().unwrap();
                    if first < 0 {
                        continue;
                    }
                    modes.push(TTModeBasis {
                        k,
                        eigenvalue: factor * norm2 as f64,
                        basis: mode_tt_basis(k),
                    });
                }
            }
        }
    }
    let mut eigenvalues = Vec::new();
    for mode in &modes {
        for _ in 0..mode.dimension() {
            eigenvalues.push(mode.eigenvalue);
        }
    }
    let scale = eigenvalues.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
    let n = eigenvalues.len();
    let report = SpectralReport::new(eigenvalues, 1e-9 * scale, n);
    (report, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk_mesh, triangulate};
    use crate::surface::patches;

    #[test]
    fn plane_jacobi_equals_plain_laplacian() {
        let patch = patches::plane();
        let mesh = triangulate(&patch, 8, 8, false, false).unwrap();
        let jac = assemble_jacobi(&patch, &mesh, 0.0).unwrap();
        let lap = assemble_laplace(&mesh).unwrap();
        assert_eq!(jac.matrix.values.len(), lap.matrix.values.len());
        for (a, b) in jac.matrix.values.iter().zip(&lap.matrix.values) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn assembly_is_symmetric() {
        let patch = patches::catenoid(1.0);
        let mesh = triangulate(&patch, 24, 12, true, false).unwrap();
        let op = assemble_jacobi(&patch, &mesh, 0.0).unwrap();
        assert!(op.matrix.asymmetry() < 1e-12);
    }

    #[test]
    fn catenoid_potential_is_two_sech_fourth() {
        let patch = patches::catenoid(1.0);
        let mesh = triangulate(&patch, 16, 8, true, false).unwrap();
        for &(_, v) in mesh.params.as_ref().unwrap() {
            let forms = evaluate_forms(&patch, 1.0, v).unwrap();
            let expected = 2.0 / v.cosh().powi(4);
            assert!((forms.a2 - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn disk_dirichlet_ground_state_is_bessel() {
        // lambda_1 of the unit disk = j_{0,1}^2 = 5.7831859629...
        let mesh = disk_mesh(1.0, 24);
        let op = assemble_laplace(&mesh).unwrap();
        let lam = smallest_eigenvalue(&op).unwrap();
        let exact = 5.783185962946785;
        assert!(
            (lam - exact).abs() / exact < 0.01,
            "lambda_1 = {lam}, exact {exact}"
        );
        // dense route agrees with the sparse route
        let coarse = disk_mesh(1.0, 10);
        let op_c = assemble_laplace(&coarse).unwrap();
        let dense = spectrum(&op_c, 1).unwrap().eigenvalues[0];
        let sparse = smallest_eigenvalue(&op_c).unwrap();
        assert!((dense - sparse).abs() < 1e-7 * dense.abs());
    }

    #[test]
    fn catenoid_index_zero_then_one() {
        let short = patches::catenoid(0.5);
        let mesh = triangulate(&short, 40, 10, true, false).unwrap();
        let op = assemble_jacobi(&short, &mesh, 0.0).unwrap();
        let report = spectrum(&op, 6).unwrap();
        assert_eq!(morse_index(&report), 0, "{:?}", &report.eigenvalues);
        assert!(report.eigenvalues[0] > 0.0);

        let long = patches::catenoid(2.0);
        let mesh = triangulate(&long, 40, 32, true, false).unwrap();
        let op = assemble_jacobi(&long, &mesh, 0.0).unwrap();
        let report = spectrum(&op, 6).unwrap();
        assert_eq!(morse_index(&report), 1, "{:?}", &report.eigenvalues);
    }

    #[test]
    fn morse_index_counts_directly() {
        let report = SpectralReport::new(vec![-1.0, 2.0, 3.0], 1e-9, 3);
        assert_eq!(morse_index(&report), 1);
        assert_eq!(report.index, 1);
    }

    #[test]
    fn lichnerowicz_flat_torus_modes() {
        let (report, modes) = lichnerowicz_torus_spectrum(1.0, 2);
        // k = 0: exactly nine zero eigenvalues
        let zeros = report.eigenvalues.iter().filter(|&&e| e == 0.0).count();
        assert_eq!(zeros, 9);
        // smallest positive eigenvalue is (2 pi)^2
        let smallest_pos = report
            .eigenvalues
            .iter()
            .copied()
            .find(|&e| e > 0.0)
            .unwrap();
        assert!((smallest_pos - (2.0 * std::f64::consts::PI).powi(2)).abs() < 1e-9);
        // TT dimension 5 at every nonzero mode, constraints exact
        for mode in modes.iter().skip(1) {
            assert_eq!(mode.dimension(), 5, "mode {:?}", mode.k);
            assert_eq!(mode.max_trace(), 0.0);
            assert_eq!(mode.max_divergence(), 0.0);
        }
        // Einstein index of the flat torus is zero
        assert_eq!(morse_index(&report), 0);
    }

    #[test]
    fn tt_mode_dimension_is_rank_five() {
        // independent linear-algebra oracle: rank of the vectorized basis
        let basis = mode_tt_basis([1, -2, 0, 3]);
        let mut m = DMatrix::zeros(basis.len(), 16);
        for (r, h) in basis.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    m[(r, i * 4 + j)] = h[(i, j)];
                }
            }
        }
        let svd = m.svd(false, false);
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-8).count();
        assert_eq!(rank, 5);
    }
}
