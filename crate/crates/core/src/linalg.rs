//! Dense complex matrices and the Hermitian eigen machinery.
//!
//! The matrices this crate meets are tiny (composite dimension ≤ 64 on a
//! desk-scale problem), so a cyclic complex Jacobi sweep is both fast enough
//! and easy to keep bit-deterministic. Determinism matters: the trajectory
//! tables downstream are required to be reproducible byte for byte, and the
//! canonical eigenbasis contract below is what makes reports stable when a
//! spectrum is degenerate.

use num_complex::Complex;

use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// Errors from matrix construction and decomposition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("matrix deviates from Hermitian by {deviation:e} (allowed {allowed:e})")]
    NotHermitian { deviation: f64, allowed: f64 },
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("eigendecomposition reconstructs input to {deviation:e} (allowed {allowed:e})")]
    ReconstructionFailed { deviation: f64, allowed: f64 },
}

/// Which factor of a bipartite index survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Left,
    Right,
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    left: format!("row of {c}"),
                    right: format!("row of {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex<T>]) {
        debug_assert_eq!(col.len(), self.rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Complex::conj).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "apply",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("vector of {}", v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..self.cols {
                    acc = acc + self[(i, j)] * v[j];
                }
                acc
            })
            .collect())
    }

    /// Kronecker product; index layout is `i_left * rhs_dim + i_right`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        Self::from_fn(rows, cols, |i, j| {
            let (il, ir) = (i / rhs.rows, i % rhs.rows);
            let (jl, jr) = (j / rhs.cols, j % rhs.cols);
            self[(il, jl)] * rhs[(ir, jr)]
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_entries(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_entries(rhs, "sub", |a, b| a - b)
    }

    fn zip_entries(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    pub fn trace(&self) -> Result<Complex<T>, LinalgError> {
        let n = self.dim()?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            acc = acc + self[(i, i)];
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Max entrywise `|M - M†|`; zero for exactly Hermitian input.
    pub fn hermiticity_deviation(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max entrywise `|U†U - I|`.
    pub fn unitarity_deviation(&self) -> T {
        let gram = self.dagger().matmul(self).expect("square product");
        gram.max_abs_diff(&Self::identity(self.cols))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square() && self.unitarity_deviation() <= tol
    }

    /// Traces out one tensor factor of a `d_left * d_right` square matrix.
    pub fn partial_trace(
        &self,
        d_left: usize,
        d_right: usize,
        keep: Part,
    ) -> Result<Self, LinalgError> {
        let n = self.dim()?;
        if d_left * d_right != n {
            return Err(LinalgError::DimensionMismatch {
                op: "partial_trace",
                left: format!("{d_left}*{d_right}"),
                right: format!("{n}"),
            });
        }
        Ok(match keep {
            Part::Left => Self::from_fn(d_left, d_left, |i, j| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for r in 0..d_right {
                    acc = acc + self[(i * d_right + r, j * d_right + r)];
                }
                acc
            }),
            Part::Right => Self::from_fn(d_right, d_right, |r, s| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for i in 0..d_left {
                    acc = acc + self[(i * d_right + r, i * d_right + s)];
                }
                acc
            }),
        })
    }

    fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |acc, x| acc + x)
            .sqrt()
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues sorted descending plus matching orthonormal eigenvector columns.
///
/// Canonical form contract: across degenerate clusters the basis is the
/// Gram–Schmidt completion of the projected computational axes (so it depends
/// only on the eigenspace, not on solver history), and every column's
/// largest-magnitude component is made real and positive. Diagonal inputs
/// therefore decompose exactly into computational basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ_k λ_k v_k v_k†`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let lim = self.values[k];
            for i in 0..n {
                let vik = self.vectors[(i, k)];
                if vik.re == T::zero() && vik.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vik * self.vectors[(j, k)].conj() * lim;
                }
            }
        }
        out
    }

    /// Max entrywise `|V†V - I|`.
    pub fn orthonormality_deviation(&self) -> T {
        self.vectors.unitarity_deviation()
    }

    /// Contiguous runs of eigenvalues whose adjacent gaps fall below
    /// `gap * max |λ|`; singleton runs are included.
    pub fn degenerate_clusters(&self, gap: T) -> Vec<std::ops::Range<usize>> {
        let n = self.dim();
        let max_abs = self.values.iter().map(|v| v.abs()).fold(T::zero(), T::max);
        let threshold = gap * max_abs;
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..n {
            if (self.values[i - 1] - self.values[i]).abs() > threshold {
                clusters.push(start..i);
                start = i;
            }
        }
        if n > 0 {
            clusters.push(start..n);
        }
        clusters
    }

    /// Replaces the basis inside each degenerate cluster by `V_c · Q` where
    /// `Q = make_block(cluster_len)`. Used to probe invariance of downstream
    /// quantities under the residual basis freedom.
    pub fn rotate_degenerate_clusters(
        &self,
        gap: T,
        mut make_block: impl FnMut(usize) -> ComplexMatrix<T>,
    ) -> Self {
        let n = self.dim();
        let mut vectors = self.vectors.clone();
        for cluster in self.degenerate_clusters(gap) {
            let k = cluster.len();
            if k < 2 {
                continue;
            }
            let q = make_block(k);
            debug_assert_eq!((q.rows(), q.cols()), (k, k));
            for i in 0..n {
                let old: Vec<Complex<T>> = cluster.clone().map(|c| self.vectors[(i, c)]).collect();
                for (qc, c) in cluster.clone().enumerate() {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (qr, &o) in old.iter().enumerate() {
                        acc = acc + o * q[(qr, qc)];
                    }
                    vectors[(i, c)] = acc;
                }
            }
        }
        Self {
            values: self.values.clone(),
            vectors,
        }
    }
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Diagonalizes a Hermitian matrix with a cyclic complex Jacobi sweep.
///
/// Output satisfies the canonical form contract on [`SpectralDecomposition`]:
/// values descending, degenerate clusters canonicalized, phases fixed. Fails
/// if the input is not Hermitian within `tol.hermiticity`, if sweeps do not
/// converge, or if the result does not reconstruct the input within
/// `tol.reconstruction`.
pub fn hermitian_eig<T: Scalar>(
    matrix: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<SpectralDecomposition<T>, LinalgError> {
    let n = matrix.dim()?;
    let herm = matrix.hermiticity_deviation();
    if herm > tol.hermiticity {
        return Err(LinalgError::NotHermitian {
            deviation: herm.as_f64(),
            allowed: tol.hermiticity.as_f64(),
        });
    }

    // Work on the Hermitian average so roundoff asymmetry cannot leak in.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| {
        (matrix[(i, j)] + matrix[(j, i)].conj()).scale(T::cst(0.5))
    });
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    if scale > T::zero() {
        let target = T::epsilon() * scale * T::from_usize(n).expect("dim fits scalar");
        let mut converged = false;
        for _ in 0..MAX_JACOBI_SWEEPS {
            if off_diagonal_norm(&a) <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&a) > target {
            return Err(LinalgError::NoConvergence(MAX_JACOBI_SWEEPS));
        }
    }

    let mut decomp = sort_descending(&a, &v);
    canonicalize_clusters(&mut decomp, tol.degeneracy_gap);
    fix_phases(&mut decomp.vectors);

    let deviation = decomp.reconstruct().max_abs_diff(matrix);
    if deviation > tol.reconstruction {
        return Err(LinalgError::ReconstructionFailed {
            deviation: deviation.as_f64(),
            allowed: tol.reconstruction.as_f64(),
        });
    }
    Ok(decomp)
}

fn off_diagonal_norm<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += a[(p, q)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One two-sided rotation `A ← G†AG`, `V ← VG` eliminating the `(p,q)` entry.
///
/// `G` acts on coordinates `p,q` as `D·R` where `D = diag(1, conj(g)/|g|)`
/// turns the pivot real and `R` is the standard symmetric Jacobi rotation.
fn jacobi_rotate<T: Scalar>(
    a: &mut ComplexMatrix<T>,
    v: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
) {
    let g = a[(p, q)];
    let ag = g.norm();
    if ag == T::zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if ag <= T::epsilon() * (app.abs() + aqq.abs()) * T::cst(0.5) {
        // Below representable significance relative to the diagonal: flush
        // to keep already-diagonal inputs bit-stable.
        a[(p, q)] = Complex::new(T::zero(), T::zero());
        a[(q, p)] = Complex::new(T::zero(), T::zero());
        return;
    }

    let d = g.conj().scale(T::one() / ag); // unit phase, |d| = 1
    let theta = (aqq - app) / (ag * T::cst(2.0));
    let t = if theta.abs() > T::cst(1e18) {
        // Asymptotic branch avoids overflow in theta^2.
        (theta * T::cst(2.0)).recip()
    } else {
        let sign = if theta >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;

    let n = a.rows();
    let cs = Complex::new(c, T::zero());
    let sc = Complex::new(s, T::zero());
    let ds = d.scale(s);
    let dc = d.scale(c);

    // Columns: B = A·G.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip.scale(c) - ds * aiq;
        a[(i, q)] = aip.scale(s) + dc * aiq;
    }
    // Rows: A' = G†·B.
    let dsc = ds.conj();
    let dcc = dc.conj();
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj * cs - dsc * aqj;
        a[(q, j)] = apj * sc + dcc * aqj;
    }
    // The pivot is eliminated analytically; pin the invariants exactly.
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip.scale(c) - ds * viq;
        v[(i, q)] = vip.scale(s) + dc * viq;
    }
}

fn sort_descending<T: Scalar>(
    a: &ComplexMatrix<T>,
    v: &ComplexMatrix<T>,
) -> SpectralDecomposition<T> {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending by value; index order breaks exact ties deterministically.
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .expect("eigenvalues are finite")
            .then(i.cmp(&j))
    });
    let values: Vec<T> = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    SpectralDecomposition { values, vectors }
}

/// Rebuilds each degenerate cluster's basis from the projected computational
/// axes (Gram–Schmidt in axis order), so that the output depends only on the
/// eigenspace. Acceptance thresholds step down until the cluster is filled;
/// any still-missing columns fall back to the solver's own vectors.
fn canonicalize_clusters<T: Scalar>(decomp: &mut SpectralDecomposition<T>, gap: T) {
    let n = decomp.dim();
    for cluster in decomp.degenerate_clusters(gap) {
        let k = cluster.len();
        if k < 2 {
            continue;
        }
        let cols: Vec<Vec<Complex<T>>> =
            cluster.clone().map(|c| decomp.vectors.column(c)).collect();
        let mut picked: Vec<Vec<Complex<T>>> = Vec::with_capacity(k);
        for &threshold in &[0.25, 1e-3, 1e-8] {
            picked.clear();
            let threshold = T::cst(threshold);
            for axis in 0..n {
                if picked.len() == k {
                    break;
                }
                // w = P e_axis where P projects onto the cluster eigenspace.
                let mut w = vec![Complex::new(T::zero(), T::zero()); n];
                for col in &cols {
                    let coef = col[axis].conj();
                    for (wi, &ci) in w.iter_mut().zip(col) {
                        *wi = *wi + ci * coef;
                    }
                }
                for _ in 0..2 {
                    for u in &picked {
                        let coef = dot_conj(u, &w);
                        for (wi, &ui) in w.iter_mut().zip(u) {
                            *wi = *wi - ui * coef;
                        }
                    }
                }
                let norm = vec_norm(&w);
                if norm > threshold {
                    let inv = norm.recip();
                    for wi in &mut w {
                        *wi = wi.scale(inv);
                    }
                    picked.push(w);
                }
            }
            if picked.len() == k {
                break;
            }
        }
        // Unreachable in practice; keeps the decomposition well-formed anyway.
        for col in &cols {
            if picked.len() == k {
                break;
            }
            let mut w = col.clone();
            for u in &picked {
                let coef = dot_conj(u, &w);
                for (wi, &ui) in w.iter_mut().zip(u) {
                    *wi = *wi - ui * coef;
                }
            }
            let norm = vec_norm(&w);
            if norm > T::cst(1e-6) {
                let inv = norm.recip();
                for wi in &mut w {
                    *wi = wi.scale(inv);
                }
                picked.push(w);
            }
        }
        for (slot, w) in cluster.clone().zip(&picked) {
            decomp.vectors.set_column(slot, w);
        }
    }
}

/// Rotates each column so its largest-magnitude component (first such index)
/// is real and positive. Exact zeros are untouched.
fn fix_phases<T: Scalar>(vectors: &mut ComplexMatrix<T>) {
    let n = vectors.rows();
    for j in 0..vectors.cols() {
        let mut best = 0;
        let mut best_norm = T::zero();
        for i in 0..n {
            let nrm = vectors[(i, j)].norm_sqr();
            if nrm > best_norm {
                best_norm = nrm;
                best = i;
            }
        }
        if best_norm == T::zero() {
            continue;
        }
        let pivot = vectors[(best, j)];
        let phase = pivot.conj().scale(pivot.norm().recip());
        if phase.re == T::one() && phase.im == T::zero() {
            continue;
        }
        for i in 0..n {
            vectors[(i, j)] = vectors[(i, j)] * phase;
        }
        // The pivot itself is exactly |pivot| after the rotation.
        vectors[(best, j)] = Complex::new(pivot.norm(), T::zero());
    }
}

fn dot_conj<T: Scalar>(u: &[Complex<T>], w: &[Complex<T>]) -> Complex<T> {
    u.iter()
        .zip(w)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&ui, &wi)| {
            acc + ui.conj() * wi
        })
}

fn vec_norm<T: Scalar>(w: &[Complex<T>]) -> T {
    w.iter()
        .map(|x| x.norm_sqr())
        .fold(T::zero(), |acc, x| acc + x)
        .sqrt()
}
