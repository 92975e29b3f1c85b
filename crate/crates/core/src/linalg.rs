//! Structured linear algebra: symmetric block-tridiagonal systems and small dense kernels.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Smallest admissible eigenvalue of a pivot block, relative to its largest.
const PIVOT_REL_TOL: f64 = 1e-13;

/// Symmetric block-tridiagonal matrix.
///
/// `diag[k]` is the `(k, k)` block and `sub[k]` is the `(k + 1, k)` block; the
/// super-diagonal is implied as `sub[k]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    diag: Vec<DMatrix<f64>>,
    sub: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<DMatrix<f64>>, sub: Vec<DMatrix<f64>>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("block-tridiagonal matrix needs at least one block"));
        }
        if sub.len() + 1 != diag.len() {
            return Err(invalid(format!("expected {} sub-diagonal blocks, got {}", diag.len() - 1, sub.len())));
        }
        let n = diag[0].nrows();
        for (k, d) in diag.iter().enumerate() {
            if d.shape() != (n, n) {
                return Err(invalid(format!("diagonal block {k} has shape {:?}", d.shape())));
            }
        }
        for (k, e) in sub.iter().enumerate() {
            if e.shape() != (n, n) {
                return Err(invalid(format!("sub-diagonal block {k} has shape {:?}", e.shape())));
            }
        }
        Ok(Self { diag, sub })
    }

    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag[0].nrows()
    }

    pub fn diag(&self) -> &[DMatrix<f64>] {
        &self.diag
    }

    pub fn sub(&self) -> &[DMatrix<f64>] {
        &self.sub
    }

    /// Dense copy. Only meant for small instances and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block_size();
        let dim = n * self.num_blocks();
        let mut out = DMatrix::zeros(dim, dim);
        for (k, d) in self.diag.iter().enumerate() {
            out.view_mut((k * n, k * n), (n, n)).copy_from(d);
        }
        for (k, e) in self.sub.iter().enumerate() {
            out.view_mut(((k + 1) * n, k * n), (n, n)).copy_from(e);
            out.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&e.transpose());
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.block_size();
        let nb = self.num_blocks();
        assert_eq!(x.len(), n * nb, "vector length does not match matrix");
        let mut y = DVector::zeros(n * nb);
        for k in 0..nb {
            let mut yk = &self.diag[k] * x.rows(k * n, n);
            if k > 0 {
                yk += &self.sub[k - 1] * x.rows((k - 1) * n, n);
            }
            if k + 1 < nb {
                yk += self.sub[k].tr_mul(&x.rows((k + 1) * n, n));
            }
            y.rows_mut(k * n, n).copy_from(&yk);
        }
        y
    }

    /// Block Cholesky sweep. Fails with [`Error::NotSpd`] naming the first bad pivot.
    pub fn factor(&self) -> Result<BlockCholesky> {
        self.clone().into_factor()
    }

    /// [`Self::factor`] reusing the storage of `self`.
    pub fn into_factor(self) -> Result<BlockCholesky> {
        let nb = self.num_blocks();
        let n = self.block_size();
        let mut pivots: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(nb);
        let mut x = DMatrix::zeros(n, n);
        for (k, mut pivot) in self.diag.into_iter().enumerate() {
            if k > 0 {
                let e = &self.sub[k - 1];
                e.transpose_to(&mut x);
                pivots[k - 1].solve_mut(&mut x);
                pivot.gemm(-1.0, e, &x, 1.0);
                symmetrize(&mut pivot);
            }
            pivots.push(checked_cholesky(pivot).ok_or(Error::NotSpd { block: k })?);
        }
        Ok(BlockCholesky { pivots, sub: self.sub })
    }
}

/// Factorization produced by [`BlockTridiagonal::factor`].
#[derive(Debug, Clone)]
pub struct BlockCholesky {
    pivots: Vec<Cholesky<f64, Dyn>>,
    sub: Vec<DMatrix<f64>>,
}

impl BlockCholesky {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let nb = self.pivots.len();
        let n = self.pivots[0].l_dirty().nrows();
        assert_eq!(rhs.len(), n * nb, "rhs length does not match factorization");

        let mut x = rhs.clone();
        let mut tmp = DVector::zeros(n);
        for k in 1..nb {
            tmp.copy_from(&x.rows((k - 1) * n, n));
            self.pivots[k - 1].solve_mut(&mut tmp);
            x.rows_mut(k * n, n).gemv(-1.0, &self.sub[k - 1], &tmp, 1.0);
        }
        for k in (0..nb).rev() {
            if k + 1 < nb {
                tmp.copy_from(&x.rows((k + 1) * n, n));
                x.rows_mut(k * n, n).gemv_tr(-1.0, &self.sub[k], &tmp, 1.0);
            }
            self.pivots[k].solve_mut(&mut x.rows_mut(k * n, n));
        }
        x
    }
}

/// Solves `T x = rhs` for a symmetric positive definite block-tridiagonal `T` with
/// `Θ(N)` block operations.
pub fn block_tridiag_factor_solve(t: &BlockTridiagonal, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != t.block_size() * t.num_blocks() {
        return Err(invalid(format!(
            "rhs has length {}, matrix has dimension {}",
            rhs.len(),
            t.block_size() * t.num_blocks()
        )));
    }
    Ok(t.factor()?.solve(rhs))
}

/// Assembles `Φ = GᵀΩʷG + HᵀΩᵛH` for the block-bidiagonal `G` built from
/// `transitions` (diagonal identity, sub-diagonal `-G_{k+1}`).
///
/// `omega_w[k]` and `omega_v[k]` are the per-step `n × n` weights (the latter already
/// sandwiched by `H_k`). `transitions[0]` is never read.
pub fn assemble_phi(
    transitions: &[DMatrix<f64>],
    omega_w: &[DMatrix<f64>],
    omega_v: &[DMatrix<f64>],
) -> Result<BlockTridiagonal> {
    let nb = omega_w.len();
    if nb == 0 || omega_v.len() != nb || transitions.len() != nb {
        return Err(invalid(format!(
            "assemble_phi: {} transitions, {} process weights, {} measurement weights",
            transitions.len(),
            nb,
            omega_v.len()
        )));
    }
    let n = omega_w[0].nrows();
    let shapes_ok = omega_w.iter().chain(omega_v).chain(&transitions[1..]).all(|m| m.shape() == (n, n));
    if !shapes_ok {
        return Err(invalid("assemble_phi: all blocks must be n × n"));
    }

    Ok(phi_from_weights(transitions, omega_w.to_vec(), omega_v.to_vec()))
}

/// [`assemble_phi`] for already validated weights, reusing their storage.
pub(crate) fn phi_from_weights(
    transitions: &[DMatrix<f64>],
    mut omega_w: Vec<DMatrix<f64>>,
    mut diag: Vec<DMatrix<f64>>,
) -> BlockTridiagonal {
    let nb = diag.len();
    let n = diag[0].nrows();
    for (d, w) in diag.iter_mut().zip(&omega_w) {
        *d += w;
    }
    let mut wg = DMatrix::zeros(n, n);
    for k in 0..nb - 1 {
        let g = &transitions[k + 1];
        wg.gemm(1.0, &omega_w[k + 1], g, 0.0);
        diag[k].gemm_tr(1.0, g, &wg, 1.0);
        omega_w[k].copy_from(&wg);
        omega_w[k].neg_mut();
    }
    omega_w.truncate(nb - 1);
    for d in &mut diag {
        symmetrize(d);
    }
    BlockTridiagonal { diag, sub: omega_w }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factorization that also rejects numerically singular pivots
/// (smallest eigenvalue below `1e-13` times the largest).
pub fn checked_cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Gershgorin lower bound against the trace, an upper bound on the largest eigenvalue.
    let gershgorin = (0..m.nrows())
        .map(|i| 2.0 * m[(i, i)] - m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if gershgorin > PIVOT_REL_TOL * m.trace() {
        return m.cholesky();
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > PIVOT_REL_TOL * max) {
        return None;
    }
    m.cholesky()
}

/// Symmetric inverse square root `V Λ^{-1/2} Vᵀ` of an SPD matrix.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    sym_power(m, -0.5)
}

/// Symmetric square root `V Λ^{1/2} Vᵀ` of an SPD matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    sym_power(m, 0.5)
}

fn sym_power(m: &DMatrix<f64>, p: f64) -> Option<DMatrix<f64>> {
    m.clone().cholesky()?;
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let scaled = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.powf(p)));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&scaled) * v.transpose();
    symmetrize(&mut out);
    Some(out)
}

/// True when `m` is symmetric (to `1e-12` relative) and Cholesky succeeds.
pub fn is_spd(m: &DMatrix<f64>) -> bool {
    m.is_square() && is_symmetric(m, 1e-12) && m.clone().cholesky().is_some()
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= rel_tol * scale
}

/// Orthonormal basis of the null space of a symmetric positive semidefinite matrix:
/// eigenvectors whose eigenvalue is at most `rel_tol` times the largest. Columns are
/// sign-normalized so their first significant entry is positive.
pub fn psd_null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let dim = m.nrows();
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= rel_tol * max)
        .map(|(i, _)| sign_normalized(eig.eigenvectors.column(i).into_owned()))
        .collect();
    columns_to_matrix(dim, &cols)
}

/// Orthonormal bases `(range, null)` of a symmetric PSD matrix.
pub(crate) fn psd_range_and_null(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut range = Vec::new();
    let mut null = Vec::new();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = sign_normalized(eig.eigenvectors.column(i).into_owned());
        if l > rel_tol * max {
            range.push(v);
        } else {
            null.push(v);
        }
    }
    (columns_to_matrix(dim, &range), columns_to_matrix(dim, &null))
}

pub(crate) fn columns_to_matrix(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

fn sign_normalized(mut v: DVector<f64>) -> DVector<f64> {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Block-diagonal concatenation of (possibly rectangular, possibly empty) blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        if b.nrows() > 0 && b.ncols() > 0 {
            out.view_mut((r, c), b.shape()).copy_from(*b);
        }
        r += b.nrows();
        c += b.ncols();
    }
    out
}
