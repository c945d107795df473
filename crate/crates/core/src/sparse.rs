//! Sparse matrix storage, 2x2 block composition, and direct linear solving.
//!
//! Matrices are built from `(row, col, value)` triplets with duplicate
//! summation and stored compressed by rows. Finalization is permutation
//! invariant: duplicates are summed in a canonical order, so shuffling the
//! triplet stream produces a bit-identical matrix.
//!
//! The linear solve contract is residual-based: `solve` returns `x` with
//! `||Ax - b||_2 <= tol * max(1, ||b||_2)` or an error carrying the achieved
//! residual. The backend is a sparse LU factorization with partial pivoting
//! (via `faer`), followed by iterative refinement against the stored matrix
//! until the contract is met.

use std::sync::Once;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};

use crate::error::{Error, Result};

static FAER_SETUP: Once = Once::new();

// Single-threaded numerics: keeps solves deterministic and makes per-thread
// CPU accounting of coarse/fine phases honest.
fn configure_backend() {
    FAER_SETUP.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Compressed sparse row matrix over `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from triplets, summing duplicates.
    ///
    /// Duplicate entries are ordered canonically (by row, column, then value
    /// bits) before summation, and entries whose sum is exactly `0.0` are
    /// dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::invalid(format!(
                    "triplet ({r}, {c}) out of bounds for {nrows}x{ncols} matrix"
                )));
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        let mut it = sorted.iter().peekable();
        while let Some(&(r, c, v)) = it.next() {
            let mut sum = v;
            while let Some(&&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    sum += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if sum != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                vals.push(sum);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.vals[span])
    }

    pub fn triplet_iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[i] = acc;
        }
        y
    }

    /// `alpha * self + beta * other` by a linear row merge.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::invalid(format!(
                "cannot add {}x{} and {}x{} matrices",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let (c, v) = if q >= cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    let e = (ca[p], alpha * va[p]);
                    p += 1;
                    e
                } else if p >= ca.len() || cb[q] < ca[p] {
                    let e = (cb[q], beta * vb[q]);
                    q += 1;
                    e
                } else {
                    let e = (ca[p], alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                    e
                };
                if v != 0.0 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= alpha;
        }
        out
    }

    /// True when both matrices share the same sparsity pattern.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }
}

/// 2x2 arrangement of scaled sparse blocks plus a two-part right-hand side.
///
/// Blocks may be absent (`None`) or carry a scalar factor; a factor of `0.0`
/// leaves the block structurally absent in the composed matrix.
pub struct BlockSystem<'a> {
    blocks: [[Option<(&'a SparseMatrix, f64)>; 2]; 2],
    pub rhs: [Vec<f64>; 2],
    row_dims: [usize; 2],
    col_dims: [usize; 2],
}

impl<'a> BlockSystem<'a> {
    pub fn new(
        blocks: [[Option<(&'a SparseMatrix, f64)>; 2]; 2],
        rhs: [Vec<f64>; 2],
    ) -> Result<Self> {
        let mut row_dims = [usize::MAX; 2];
        let mut col_dims = [usize::MAX; 2];
        for (i, row) in blocks.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                if let Some((m, _)) = blk {
                    if row_dims[i] == usize::MAX {
                        row_dims[i] = m.nrows();
                    } else if row_dims[i] != m.nrows() {
                        return Err(Error::invalid(format!(
                            "block row {i} has inconsistent heights"
                        )));
                    }
                    if col_dims[j] == usize::MAX {
                        col_dims[j] = m.ncols();
                    } else if col_dims[j] != m.ncols() {
                        return Err(Error::invalid(format!(
                            "block column {j} has inconsistent widths"
                        )));
                    }
                }
            }
        }
        for i in 0..2 {
            if row_dims[i] == usize::MAX {
                row_dims[i] = rhs[i].len();
            }
            if rhs[i].len() != row_dims[i] {
                return Err(Error::invalid(format!(
                    "rhs part {i} has length {} but block row height is {}",
                    rhs[i].len(),
                    row_dims[i]
                )));
            }
            if col_dims[i] == usize::MAX {
                return Err(Error::invalid(format!("block column {i} is empty")));
            }
        }
        Ok(BlockSystem {
            blocks,
            rhs,
            row_dims,
            col_dims,
        })
    }

    pub fn row_dims(&self) -> [usize; 2] {
        self.row_dims
    }

    /// Monolithic sparse matrix reproducing the blockwise action.
    pub fn compose(&self) -> SparseMatrix {
        let nrows = self.row_dims[0] + self.row_dims[1];
        let ncols = self.col_dims[0] + self.col_dims[1];
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for bi in 0..2 {
            let row_off = if bi == 0 { 0 } else { self.row_dims[0] };
            for local in 0..self.row_dims[bi] {
                for bj in 0..2 {
                    let col_off = if bj == 0 { 0 } else { self.col_dims[0] };
                    if let Some((m, factor)) = self.blocks[bi][bj] {
                        if factor == 0.0 {
                            continue;
                        }
                        let (cols, v) = m.row(local);
                        for (&c, &x) in cols.iter().zip(v) {
                            col_idx.push(c + col_off);
                            vals.push(factor * x);
                        }
                    }
                }
                row_ptr[row_off + local + 1] = col_idx.len();
            }
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Blockwise matrix-vector product (reference semantics for `compose`).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.col_dims[0] + self.col_dims[1]);
        let (x0, x1) = x.split_at(self.col_dims[0]);
        let mut y = vec![0.0; self.row_dims[0] + self.row_dims[1]];
        for bi in 0..2 {
            let row_off = if bi == 0 { 0 } else { self.row_dims[0] };
            for bj in 0..2 {
                if let Some((m, factor)) = self.blocks[bi][bj] {
                    if factor == 0.0 {
                        continue;
                    }
                    let part = m.matvec(if bj == 0 { x0 } else { x1 });
                    for (k, v) in part.iter().enumerate() {
                        y[row_off + k] += factor * v;
                    }
                }
            }
        }
        y
    }

    pub fn stacked_rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.rhs[0].len() + self.rhs[1].len());
        b.extend_from_slice(&self.rhs[0]);
        b.extend_from_slice(&self.rhs[1]);
        b
    }
}

/// Composes a 2x2 block arrangement into a monolithic sparse matrix.
pub fn compose_block(blocks: [[Option<(&SparseMatrix, f64)>; 2]; 2]) -> Result<SparseMatrix> {
    let mut row_dims = [usize::MAX; 2];
    for (i, row) in blocks.iter().enumerate() {
        for blk in row {
            if let Some((m, _)) = blk {
                row_dims[i] = m.nrows();
            }
        }
    }
    let rhs = [
        vec![0.0; if row_dims[0] == usize::MAX { 0 } else { row_dims[0] }],
        vec![0.0; if row_dims[1] == usize::MAX { 0 } else { row_dims[1] }],
    ];
    Ok(BlockSystem::new(blocks, rhs)?.compose())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse LU with reuse of the symbolic analysis across matrices that
/// share a sparsity pattern (the step systems of a time loop).
pub struct DirectSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl DirectSolver {
    pub fn new() -> Self {
        configure_backend();
        DirectSolver { cached: None }
    }

    /// Factorizes `a`, reusing the cached symbolic analysis when the pattern
    /// matches the previous call.
    pub fn factor(&mut self, a: &SparseMatrix) -> Result<Factorization> {
        if a.nrows != a.ncols {
            return Err(Error::invalid(format!(
                "cannot factorize non-square {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        // Our CSR of A is the CSC layout of A^T; factor A^T and solve with
        // the transposed factors.
        let symbolic_view = SymbolicSparseColMatRef::new_checked(
            a.ncols,
            a.nrows,
            &a.row_ptr,
            None,
            &a.col_idx,
        );
        let reuse = match &self.cached {
            Some((rp, ci, _)) => rp == &a.row_ptr && ci == &a.col_idx,
            None => false,
        };
        if !reuse {
            let sym = SymbolicLu::try_new(symbolic_view).map_err(|e| Error::SolverFailure {
                detail: format!("symbolic analysis failed: {e:?}"),
                residual: f64::INFINITY,
            })?;
            self.cached = Some((a.row_ptr.clone(), a.col_idx.clone(), sym));
        }
        let sym = &self.cached.as_ref().unwrap().2;
        let mat = SparseColMatRef::new(symbolic_view, &a.vals);
        let lu = Lu::try_new_with_symbolic(sym.clone(), mat).map_err(|e| Error::SolverFailure {
            detail: format!("LU factorization failed: {e:?}"),
            residual: f64::INFINITY,
        })?;
        Ok(Factorization { lu, n: a.nrows })
    }
}

/// A numeric LU factorization ready to solve right-hand sides.
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        // The factors are of A^T, so the transposed solve yields A x = b.
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `a x = b` to the residual contract
    /// `||Ax - b||_2 <= tol * max(1, ||b||_2)`, applying up to `max_refine`
    /// iterative refinement passes with the stored factors.
    pub fn solve_checked(
        &self,
        a: &SparseMatrix,
        b: &[f64],
        tol: f64,
        max_refine: usize,
    ) -> Result<Vec<f64>> {
        if tol <= 0.0 {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if b.len() != self.n || a.nrows() != self.n {
            return Err(Error::invalid("solve dimension mismatch"));
        }
        let bound = tol * norm2(b).max(1.0);
        let mut x = self.apply(b);
        let mut residual = f64::INFINITY;
        for _ in 0..=max_refine {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            residual = norm2(&r);
            if residual <= bound {
                return Ok(x);
            }
            let dx = self.apply(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Err(Error::SolverFailure {
            detail: format!("residual bound {bound:.3e} not reached"),
            residual,
        })
    }
}

/// One-shot direct solve of `a x = b` under the residual contract.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    DirectSolver::new()
        .factor(a)?
        .solve_checked(a, b, tol, max_iter)
}
