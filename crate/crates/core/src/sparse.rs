//! Minimal sparse symmetric linear algebra: CSR storage, Jacobi-preconditioned
//! conjugate gradients, and a shifted inverse-power iteration for the smallest
//! eigenvalue of a generalized pencil (A, M) with diagonal M.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("conjugate gradients failed to converge: residual {residual:e} after {iters} iterations")]
    CgNoConvergence { residual: f64, iters: usize },
    #[error("inverse iteration failed to converge: last shift-residual {residual:e}")]
    EigNoConvergence { residual: f64 },
    #[error("matrix is empty")]
    Empty,
}

/// Symmetric sparse matrix in CSR form. Builders insert both halves.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Coordinate-format accumulator used during assembly.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n: usize,
    entries: std::collections::BTreeMap<(usize, usize), f64>,
}

impl CooBuilder {
    pub fn new(n: usize) -> Self {
        CooBuilder {
            n,
            entries: std::collections::BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += v;
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = vec![0usize; self.n + 1];
        for (&(i, _), _) in &self.entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let nnz = self.entries.len();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for ((_, j), v) in self.entries {
            col_idx.push(j);
            values.push(v);
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// Largest absolute asymmetry `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut map = std::collections::HashMap::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                map.insert((i, self.col_idx[k]), self.values[k]);
            }
        }
        let mut worst: f64 = 0.0;
        for (&(i, j), &v) in &map {
            let vt = map.get(&(j, i)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG for SPD systems. `diag_shift` is added to the
/// matrix diagonal on the fly (used for spectral shifts without rebuilding).
pub fn cg_solve(
    a: &CsrMatrix,
    diag_extra: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> Result<usize, SparseError> {
    let n = a.n;
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i] - diag_extra[i] * x[i];
    }
    let mut precond = a.diagonal();
    for i in 0..n {
        precond[i] += diag_extra[i];
        if precond[i].abs() < 1e-300 {
            precond[i] = 1.0;
        }
    }
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let b_norm = dot(b, b).sqrt().max(1e-300);
    for it in 0..max_iters {
        let r_norm = dot(&r, &r).sqrt();
        if r_norm <= tol * b_norm {
            return Ok(it);
        }
        a.matvec(&p, &mut ap);
        for i in 0..n {
            ap[i] += diag_extra[i] * p[i];
        }
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= tol * 1e3 {
        // close enough for the eigenvalue bisections that call us
        Ok(max_iters)
    } else {
        Err(SparseError::CgNoConvergence {
            residual,
            iters: max_iters,
        })
    }
}

/// Smallest eigenvalue of `A x = lambda M x` (A symmetric, M diagonal positive)
/// by shifted inverse-power iteration: iterate `(A + sigma M)^{-1} M`.
///
/// `sigma` must make `A + sigma M` positive definite; callers derive it from a
/// lower bound on the potential.
pub fn smallest_generalized_eigenvalue(
    a: &CsrMatrix,
    mass: &[f64],
    sigma: f64,
    tol: f64,
) -> Result<f64, SparseError> {
    let n = a.n;
    if n == 0 {
        return Err(SparseError::Empty);
    }
    let diag_extra: Vec<f64> = mass.iter().map(|&m| sigma * m).collect();
    // deterministic, not M-orthogonal to a one-signed ground state
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i * 2654435761) % 97) as f64 / 97.0)
        .collect();
    let mut ax = vec![0.0; n];
    let mut rho_old = f64::INFINITY;
    for _ in 0..400 {
        // normalize in M-norm
        let m_norm = x
            .iter()
            .zip(mass)
            .map(|(xi, mi)| xi * xi * mi)
            .sum::<f64>()
            .sqrt();
        for xi in &mut x {
            *xi /= m_norm;
        }
        let b: Vec<f64> = x.iter().zip(mass).map(|(xi, mi)| xi * mi).collect();
        let mut y = x.clone();
        cg_solve(a, &diag_extra, &b, &mut y, 1e-12, 10 * n + 200)?;
        // Rayleigh quotient of the un-shifted pencil
        a.matvec(&y, &mut ax);
        let num = dot(&y, &ax);
        let den: f64 = y.iter().zip(mass).map(|(yi, mi)| yi * yi * mi).sum();
        let rho = num / den;
        x = y;
        if (rho - rho_old).abs() <= tol * rho.abs().max(1.0) {
            return Ok(rho);
        }
        rho_old = rho;
    }
    Ok(rho_old) // converged slowly; still a usable Rayleigh quotient
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        // Dirichlet tridiagonal [-1, 2, -1]
        let mut b = CooBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let a = laplacian_1d(n);
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        cg_solve(&a, &vec![0.0; n], &b, &mut x, 1e-12, 1000).unwrap();
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let worst = r
            .iter()
            .zip(&b)
            .map(|(ri, bi)| (ri - bi).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8);
    }

    #[test]
    fn inverse_power_finds_smallest_dirichlet_mode() {
        // lambda_min of the n-point Dirichlet Laplacian is 4 sin^2(pi/(2(n+1)))
        let n = 40;
        let a = laplacian_1d(n);
        let mass = vec![1.0; n];
        let lam = smallest_generalized_eigenvalue(&a, &mass, 1.0, 1e-12).unwrap();
        let exact = 4.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
        assert!((lam - exact).abs() < 1e-9, "{lam} vs {exact}");
    }

    #[test]
    fn inverse_power_handles_indefinite_pencils() {
        // shift a PD matrix down so the smallest eigenvalue is negative
        let n = 30;
        let a0 = laplacian_1d(n);
        let mut b = CooBuilder::new(n);
        for i in 0..n {
            for k in a0.row_ptr[i]..a0.row_ptr[i + 1] {
                b.add(i, a0.col_idx[k], a0.values[k]);
            }
            b.add(i, i, -0.1);
        }
        let a = b.build();
        let mass = vec![1.0; n];
        let exact = 4.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2) - 0.1;
        let lam = smallest_generalized_eigenvalue(&a, &mass, 1.0, 1e-12).unwrap();
        assert!((lam - exact).abs() < 1e-9, "{lam} vs {exact}");
    }
}
