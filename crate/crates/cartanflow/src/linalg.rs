//! Dense helpers shared by every module. All matrices are stored as complex
//! `DMatrix`; real families keep a zero imaginary part.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

const MAX_SWEEPS: usize = 10_000;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(re)
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius inner product `Re tr(a* b)`.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

pub fn drop_imag(m: &CMat) -> CMat {
    m.map(|z| re(z.re))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn herm_eig(h: &CMat, real: bool) -> Result<HermEig> {
    let n = h.nrows();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let h = hermitian_part(h);
    let (values, vectors) = if real {
        let eig = SymmetricEigen::try_new(real_part(&h), f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("symmetric eigensolver".into()))?;
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), from_real(&eig.eigenvectors))
    } else {
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("hermitian eigensolver".into()))?;
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    Ok(HermEig {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: select_columns(&vectors, &order),
    })
}

/// Full singular value decomposition `y = left * diag(sigma) * right^*` with
/// `left` square `p x p`, `right` square `q x q`, singular values descending.
/// Requires `p >= q`.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub left: CMat,
    pub sigma: Vec<f64>,
    pub right: CMat,
}

pub fn svd_full(y: &CMat, real: bool) -> Result<FullSvd> {
    let (p, q) = y.shape();
    debug_assert!(p >= q);
    if q == 0 {
        return Ok(FullSvd {
            left: eye(p),
            sigma: vec![],
            right: zeros(0, 0),
        });
    }
    let (sigma, u, v) = if real {
        let svd = SVD::try_new(real_part(y), true, true, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("real svd".into()))?;
        let u = svd.u.ok_or_else(|| Error::SolverFailure("svd: missing U".into()))?;
        let vt = svd.v_t.ok_or_else(|| Error::SolverFailure("svd: missing V".into()))?;
        (
            svd.singular_values.iter().copied().collect::<Vec<_>>(),
            from_real(&u),
            from_real(&vt.transpose()),
        )
    } else {
        let svd = SVD::try_new(y.clone(), true, true, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("complex svd".into()))?;
        let u = svd.u.ok_or_else(|| Error::SolverFailure("svd: missing U".into()))?;
        let vt = svd.v_t.ok_or_else(|| Error::SolverFailure("svd: missing V".into()))?;
        (svd.singular_values.iter().copied().collect::<Vec<_>>(), u, vt.adjoint())
    };
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::SolverFailure("non-finite singular value".into()));
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let u = select_columns(&u, &order);
    let right = select_columns(&v, &order);
    let left = complete_basis(&u);
    Ok(FullSvd {
        left,
        sigma: order.iter().map(|&i| sigma[i]).collect(),
        right,
    })
}

/// Extends orthonormal columns to a full unitary whose leading columns are
/// exactly `cols`.
pub fn complete_basis(cols: &CMat) -> CMat {
    let (n, k) = cols.shape();
    if k >= n {
        return cols.clone();
    }
    let mut aug = zeros(n, k + n);
    aug.columns_mut(0, k).copy_from(cols);
    aug.columns_mut(k, n).copy_from(&eye(n));
    let q = aug.qr().q();
    let mut out = q.columns(0, n).into_owned();
    out.columns_mut(0, k).copy_from(cols);
    out
}

/// Gram-Schmidt with one re-orthogonalization pass, in column order.
pub fn orthonormalize(m: &CMat) -> CMat {
    let (n, k) = m.shape();
    let mut out = m.clone();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = out.column(i).dotc(&out.column(j));
                let ci = out.column(i).into_owned();
                let mut cj = out.column_mut(j);
                cj -= ci * proj;
            }
        }
        let nrm = out.column(j).norm();
        if nrm > 0.0 {
            out.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    debug_assert_eq!(out.nrows(), n);
    out
}

/// Nearest unitary (orthogonal when `real`) matrix in Frobenius norm.
pub fn polar_unitary(m: &CMat, real: bool) -> Result<CMat> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    if real {
        let svd = SVD::try_new(real_part(m), true, true, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("polar retraction".into()))?;
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        Ok(from_real(&(u * vt)))
    } else {
        let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::SolverFailure("polar retraction".into()))?;
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        Ok(u * vt)
    }
}

pub fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn submatrix(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Replaces the columns `idx` of `m` by `m[:, idx] * v`.
pub fn rotate_columns(m: &mut CMat, idx: &[usize], v: &CMat) {
    let sub = select_columns(m, idx) * v;
    for (j, &col) in idx.iter().enumerate() {
        m.set_column(col, &sub.column(j));
    }
}

pub fn det(m: &CMat) -> C64 {
    if m.is_empty() {
        return re(1.0);
    }
    m.clone().determinant()
}

/// `max(|m* m - I|_max)`.
pub fn unitarity_defect(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    max_abs(&(m.adjoint() * m - eye(m.ncols())))
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Single-linkage clusters of a descending sequence: returns the start index
/// of each run whose consecutive gaps are at most `thr`.
pub fn cluster_runs(desc: &[f64], thr: f64) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=desc.len() {
        if i == desc.len() || (desc[i - 1] - desc[i]).abs() > thr {
            if i > start {
                runs.push(start..i);
            }
            start = i;
        }
    }
    runs
}
