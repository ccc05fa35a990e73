//! Registry of supported decompositions and the pointwise machinery for each:
//! membership, the maximal abelian subspace `a`, the group action and the
//! single-matrix diagonalizer.
//!
//! Every family is realized through a Hermitian "ambient" operator:
//! the matrix itself for the eigenvalue families, `i x` for skew-symmetric
//! matrices and the block `[[0, Y], [Y^*, 0]]` for singular value families.
//! Commutants and ad-inverses are computed in that picture (see `lie_ops`).

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, c, re, CMat};
use crate::tolerances::Tolerances;
use crate::weyl::{WeylElement, WeylType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    RealSymEvd(usize),
    HermEvd(usize),
    RealSvd(usize, usize),
    ComplexSvd(usize, usize),
    SkewEvd(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    Real,
    Complex,
}

const UNSUPPORTED: &[&str] = &[
    "quat-evd",
    "quaternion-evd",
    "quat-svd",
    "aii",
    "cii",
    "ci",
    "diii",
    "takagi",
    "real-takagi",
    "complex-takagi",
    "hamiltonian-evd",
    "exceptional",
];

/// Largest matrix side accepted in a family id.
pub const MAX_DIM: usize = 1024;

impl Family {
    /// Checks the dimension constraints of the family.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Family::RealSymEvd(n) | Family::HermEvd(n) => (1..=MAX_DIM).contains(&n),
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => q >= 1 && p >= q && p <= MAX_DIM,
            Family::SkewEvd(n) => (2..=MAX_DIM).contains(&n),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidFamily(self.to_string()))
        }
    }

    pub fn ambient_shape(&self) -> (usize, usize) {
        match *self {
            Family::RealSymEvd(n) | Family::HermEvd(n) | Family::SkewEvd(n) => (n, n),
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => (p, q),
        }
    }

    pub fn a_dim(&self) -> usize {
        self.weyl_type().rank()
    }

    pub fn scalar_field(&self) -> ScalarField {
        match self {
            Family::HermEvd(_) | Family::ComplexSvd(..) => ScalarField::Complex,
            _ => ScalarField::Real,
        }
    }

    pub fn is_real(&self) -> bool {
        self.scalar_field() == ScalarField::Real
    }

    pub fn is_svd(&self) -> bool {
        matches!(self, Family::RealSvd(..) | Family::ComplexSvd(..))
    }

    pub fn weyl_type(&self) -> WeylType {
        match *self {
            Family::RealSymEvd(n) | Family::HermEvd(n) => WeylType::PermA(n),
            Family::RealSvd(_, q) | Family::ComplexSvd(_, q) => WeylType::SignedPermB(q),
            Family::SkewEvd(n) if n % 2 == 1 => WeylType::SignedPermB(n / 2),
            Family::SkewEvd(n) => WeylType::SignedPermD(n / 2),
        }
    }

    /// Size of the Hermitian ambient operator.
    pub fn hermitian_dim(&self) -> usize {
        match *self {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => p + q,
            Family::RealSymEvd(n) | Family::HermEvd(n) | Family::SkewEvd(n) => n,
        }
    }

    /// Whether the ambient Hermitian operator has real entries.
    fn hermitian_is_real(&self) -> bool {
        !matches!(self, Family::HermEvd(_) | Family::ComplexSvd(..) | Family::SkewEvd(_))
    }

    /// A few representative members of the registry.
    pub fn registry() -> Vec<Family> {
        vec![
            Family::RealSymEvd(2),
            Family::RealSymEvd(3),
            Family::HermEvd(2),
            Family::HermEvd(4),
            Family::RealSvd(3, 2),
            Family::ComplexSvd(3, 2),
            Family::SkewEvd(3),
            Family::SkewEvd(4),
        ]
    }

    pub fn description(&self) -> &'static str {
        match self {
            Family::RealSymEvd(_) => "traceless real symmetric EVD, group SO(n)",
            Family::HermEvd(_) => "traceless Hermitian EVD, group SU(n)",
            Family::RealSvd(..) => "real SVD of a p x q block, group S(O(p) x O(q))",
            Family::ComplexSvd(..) => "complex SVD of a p x q block, group S(U(p) x U(q))",
            Family::SkewEvd(_) => "real skew-symmetric canonical form, group SO(n)",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::RealSymEvd(n) => write!(f, "real-sym-evd:{n}"),
            Family::HermEvd(n) => write!(f, "herm-evd:{n}"),
            Family::RealSvd(p, q) => write!(f, "real-svd:{p}x{q}"),
            Family::ComplexSvd(p, q) => write!(f, "complex-svd:{p}x{q}"),
            Family::SkewEvd(n) => write!(f, "skew-evd:{n}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, dims) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::InvalidFamily(s.to_string());
        let one = |d: &str| d.parse::<usize>().map_err(|_| bad());
        let two = |d: &str| -> Result<(usize, usize)> {
            let (p, q) = d.split_once('x').ok_or_else(bad)?;
            Ok((one(p)?, one(q)?))
        };
        let family = match name.to_ascii_lowercase().as_str() {
            "real-sym-evd" => Family::RealSymEvd(one(dims)?),
            "herm-evd" => Family::HermEvd(one(dims)?),
            "real-svd" => {
                let (p, q) = two(dims)?;
                Family::RealSvd(p, q)
            }
            "complex-svd" => {
                let (p, q) = two(dims)?;
                Family::ComplexSvd(p, q)
            }
            "skew-evd" => Family::SkewEvd(one(dims)?),
            other if UNSUPPORTED.contains(&other) => {
                return Err(Error::UnsupportedFamily(s.to_string()))
            }
            _ => return Err(bad()),
        };
        family.validated()
    }
}

fn check_shape(family: Family, m: &CMat) -> Result<()> {
    let expected = family.ambient_shape();
    if m.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: m.shape(),
        });
    }
    Ok(())
}

fn check_family(a: Family, b: Family) -> Result<()> {
    if a != b {
        return Err(Error::FamilyMismatch {
            expected: a.to_string(),
            found: b.to_string(),
        });
    }
    Ok(())
}

/// An element of `p`: the matrices being diagonalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PElement {
    pub family: Family,
    pub data: CMat,
}

impl PElement {
    pub fn new(family: Family, data: CMat) -> Result<Self> {
        check_shape(family, &data)?;
        Ok(PElement { family, data })
    }

    pub fn from_real(family: Family, data: &linalg::RMat) -> Result<Self> {
        Self::new(family, linalg::from_real(data))
    }

    pub fn zero(family: Family) -> Self {
        let (r, c) = family.ambient_shape();
        PElement {
            family,
            data: linalg::zeros(r, c),
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::fro(&self.data)
    }

    pub fn inner(&self, other: &PElement) -> f64 {
        linalg::inner(&self.data, &other.data)
    }

    pub(crate) fn same_family(&self, other: &PElement) -> Result<()> {
        check_family(self.family, other.family)?;
        check_shape(self.family, &other.data)
    }

    /// The Hermitian ambient operator representing this element.
    pub fn to_hermitian(&self) -> CMat {
        match self.family {
            Family::RealSymEvd(_) | Family::HermEvd(_) => self.data.clone(),
            Family::SkewEvd(_) => &self.data * c(0.0, 1.0),
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
                let mut h = linalg::zeros(p + q, p + q);
                h.view_mut((0, p), (p, q)).copy_from(&self.data);
                h.view_mut((p, 0), (q, p)).copy_from(&self.data.adjoint());
                h
            }
        }
    }

    /// Inverse of [`PElement::to_hermitian`] on its image.
    pub fn from_hermitian(family: Family, h: &CMat) -> PElement {
        let data = match family {
            Family::RealSymEvd(_) | Family::HermEvd(_) => h.clone(),
            Family::SkewEvd(_) => h * c(0.0, -1.0),
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => h.view((0, p), (p, q)).into_owned(),
        };
        let data = if family.is_real() {
            linalg::drop_imag(&data)
        } else {
            data
        };
        PElement { family, data }
    }

    pub(crate) fn hermitian_is_real(&self) -> bool {
        self.family.hermitian_is_real()
    }
}

impl Add for &PElement {
    type Output = PElement;
    fn add(self, rhs: &PElement) -> PElement {
        assert_eq!(self.family, rhs.family);
        PElement {
            family: self.family,
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &PElement {
    type Output = PElement;
    fn sub(self, rhs: &PElement) -> PElement {
        assert_eq!(self.family, rhs.family);
        PElement {
            family: self.family,
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &PElement {
    type Output = PElement;
    fn mul(self, s: f64) -> PElement {
        PElement {
            family: self.family,
            data: &self.data * re(s),
        }
    }
}

/// Max-norm violation of the defining constraints of `p`.
pub fn validate_p(x: &PElement) -> Result<f64> {
    check_shape(x.family, &x.data)?;
    let d = &x.data;
    let imag = if x.family.is_real() {
        linalg::max_imag(d)
    } else {
        0.0
    };
    let structural = match x.family {
        Family::RealSymEvd(_) | Family::HermEvd(_) => {
            let asym = linalg::max_abs(&(d - d.adjoint()));
            asym.max(d.trace().norm())
        }
        Family::SkewEvd(_) => linalg::max_abs(&(d + d.transpose())),
        Family::RealSvd(..) | Family::ComplexSvd(..) => 0.0,
    };
    Ok(structural.max(imag))
}

/// Canonical coordinates of an element of the maximal abelian subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct AVector {
    pub family: Family,
    pub coords: Vec<f64>,
}

impl AVector {
    pub fn new(family: Family, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != family.a_dim() {
            return Err(Error::ShapeMismatch {
                expected: (family.a_dim(), 1),
                found: (coords.len(), 1),
            });
        }
        Ok(AVector { family, coords })
    }

    pub fn zero(family: Family) -> Self {
        AVector {
            family,
            coords: vec![0.0; family.a_dim()],
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &AVector) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn embed_a(v: &AVector) -> PElement {
    let (rows, cols) = v.family.ambient_shape();
    let mut m = linalg::zeros(rows, cols);
    match v.family {
        Family::RealSymEvd(_) | Family::HermEvd(_) | Family::RealSvd(..) | Family::ComplexSvd(..) => {
            for (i, &x) in v.coords.iter().enumerate() {
                m[(i, i)] = re(x);
            }
        }
        Family::SkewEvd(_) => {
            for (j, &a) in v.coords.iter().enumerate() {
                m[(2 * j, 2 * j + 1)] = re(a);
                m[(2 * j + 1, 2 * j)] = re(-a);
            }
        }
    }
    PElement {
        family: v.family,
        data: m,
    }
}

/// Reads off the `a` coordinates; the second value is the max-norm of the
/// off-pattern remainder `x - embed_a(result)`.
pub fn project_a(x: &PElement) -> (AVector, f64) {
    let coords: Vec<f64> = match x.family {
        Family::RealSymEvd(n) | Family::HermEvd(n) => (0..n).map(|i| x.data[(i, i)].re).collect(),
        Family::RealSvd(_, q) | Family::ComplexSvd(_, q) => (0..q).map(|i| x.data[(i, i)].re).collect(),
        Family::SkewEvd(n) => (0..n / 2)
            .map(|j| 0.5 * (x.data[(2 * j, 2 * j + 1)].re - x.data[(2 * j + 1, 2 * j)].re))
            .collect(),
    };
    let v = AVector {
        family: x.family,
        coords,
    };
    let residual = linalg::max_abs(&(&x.data - &embed_a(&v).data));
    (v, residual)
}

/// A group element acting on `p`: one matrix for the eigenvalue families, a
/// pair `(U_L, U_R)` acting by `Y -> U_L Y U_R^*` for the SVD families.
#[derive(Debug, Clone, PartialEq)]
pub struct KElement {
    pub family: Family,
    pub left: CMat,
    pub right: Option<CMat>,
    /// The determinant condition could not be met inside the Weyl structure
    /// and was relaxed to `|det| = 1`.
    pub det_relaxed: bool,
}

impl KElement {
    pub fn identity(family: Family) -> Self {
        match family {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => KElement {
                family,
                left: linalg::eye(p),
                right: Some(linalg::eye(q)),
                det_relaxed: false,
            },
            _ => KElement {
                family,
                left: linalg::eye(family.hermitian_dim()),
                right: None,
                det_relaxed: false,
            },
        }
    }

    pub fn new(family: Family, left: CMat, right: Option<CMat>) -> Result<Self> {
        let expect_left = match family {
            Family::RealSvd(p, _) | Family::ComplexSvd(p, _) => p,
            _ => family.hermitian_dim(),
        };
        if left.shape() != (expect_left, expect_left) {
            return Err(Error::ShapeMismatch {
                expected: (expect_left, expect_left),
                found: left.shape(),
            });
        }
        match (family, &right) {
            (Family::RealSvd(_, q) | Family::ComplexSvd(_, q), Some(r)) if r.shape() == (q, q) => {}
            (Family::RealSvd(_, q) | Family::ComplexSvd(_, q), r) => {
                return Err(Error::ShapeMismatch {
                    expected: (q, q),
                    found: r.as_ref().map_or((0, 0), |m| m.shape()),
                })
            }
            (_, None) => {}
            (_, Some(r)) => {
                return Err(Error::ShapeMismatch {
                    expected: (0, 0),
                    found: r.shape(),
                })
            }
        }
        Ok(KElement {
            family,
            left,
            right,
            det_relaxed: false,
        })
    }

    pub fn inverse(&self) -> Self {
        KElement {
            family: self.family,
            left: self.left.adjoint(),
            right: self.right.as_ref().map(|r| r.adjoint()),
            det_relaxed: self.det_relaxed,
        }
    }

    /// Group product `self * other`.
    pub fn compose(&self, other: &KElement) -> Self {
        assert_eq!(self.family, other.family);
        KElement {
            family: self.family,
            left: &self.left * &other.left,
            right: match (&self.right, &other.right) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
            det_relaxed: self.det_relaxed || other.det_relaxed,
        }
    }

    pub fn det(&self) -> linalg::C64 {
        let d = linalg::det(&self.left);
        match &self.right {
            Some(r) => d * linalg::det(r),
            None => d,
        }
    }

    /// Largest violation of unitarity and the determinant condition.
    pub fn group_residual(&self) -> f64 {
        let mut res = linalg::unitarity_defect(&self.left);
        if let Some(r) = &self.right {
            res = res.max(linalg::unitarity_defect(r));
        }
        if self.family.is_real() {
            res = res.max(linalg::max_imag(&self.left));
            if let Some(r) = &self.right {
                res = res.max(linalg::max_imag(r));
            }
        }
        let d = self.det();
        let det_res = if self.det_relaxed {
            (d.norm() - 1.0).abs()
        } else {
            (d - re(1.0)).norm()
        };
        res.max(det_res)
    }

    /// Flattened entries in column-major order (left block first).
    pub fn flatten(&self) -> Vec<linalg::C64> {
        let mut out: Vec<linalg::C64> = self.left.iter().copied().collect();
        if let Some(r) = &self.right {
            out.extend(r.iter().copied());
        }
        out
    }
}

pub fn adjoint_action(u: &KElement, x: &PElement) -> Result<PElement> {
    check_family(u.family, x.family)?;
    check_shape(x.family, &x.data)?;
    let data = match &u.right {
        Some(r) => &u.left * &x.data * r.adjoint(),
        None => &u.left * &x.data * u.left.adjoint(),
    };
    Ok(PElement {
        family: x.family,
        data,
    })
}

/// `Ad_U^{-1}(x)`.
pub fn adjoint_action_inv(u: &KElement, x: &PElement) -> Result<PElement> {
    check_family(u.family, x.family)?;
    check_shape(x.family, &x.data)?;
    let data = match &u.right {
        Some(r) => u.left.adjoint() * &x.data * r,
        None => u.left.adjoint() * &x.data * &u.left,
    };
    Ok(PElement {
        family: x.family,
        data,
    })
}

/// A group element `m` with `Ad_m(embed_a(v)) = embed_a(w v)` for all `v`.
pub fn weyl_representative(family: Family, w: &WeylElement) -> KElement {
    let mut k = KElement::identity(family);
    match family {
        Family::RealSymEvd(n) | Family::HermEvd(n) => {
            let mut m = linalg::zeros(n, n);
            for (j, &d) in w.perm.iter().enumerate() {
                m[(d, j)] = re(1.0);
            }
            if linalg::det(&m).re < 0.0 {
                m.column_mut(0).neg_mut();
            }
            k.left = m;
        }
        Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
            let mut l = linalg::eye(p);
            let mut r = linalg::zeros(q, q);
            for j in 0..q {
                l[(j, j)] = re(0.0);
            }
            for (j, &d) in w.perm.iter().enumerate() {
                l[(d, j)] = re(f64::from(w.signs[d]));
                r[(d, j)] = re(1.0);
            }
            let sign: i8 = w.signs.iter().product();
            if sign < 0 {
                match family {
                    Family::ComplexSvd(..) => {
                        let col_l = l.column(0) * c(0.0, 1.0);
                        l.set_column(0, &col_l);
                        let col_r = r.column(0) * c(0.0, 1.0);
                        r.set_column(0, &col_r);
                    }
                    _ if p > q => {
                        l.column_mut(p - 1).neg_mut();
                    }
                    _ => k.det_relaxed = true,
                }
            }
            // the permutation part contributes det(P)^2 = 1 in the real case
            k.left = l;
            k.right = Some(r);
        }
        Family::SkewEvd(n) => {
            let mut m = linalg::zeros(n, n);
            for (j, &d) in w.perm.iter().enumerate() {
                if w.signs[d] > 0 {
                    m[(2 * d, 2 * j)] = re(1.0);
                    m[(2 * d + 1, 2 * j + 1)] = re(1.0);
                } else {
                    m[(2 * d + 1, 2 * j)] = re(1.0);
                    m[(2 * d, 2 * j + 1)] = re(1.0);
                }
            }
            if n % 2 == 1 {
                m[(n - 1, n - 1)] = re(1.0);
                if linalg::det(&m).re < 0.0 {
                    m[(n - 1, n - 1)] = re(-1.0);
                }
            }
            k.left = m;
        }
    }
    k
}

/// Canonical form of a real skew-symmetric matrix without determinant repair:
/// returns an orthogonal `U` and coordinates `a_j >= 0` (descending) with
/// `U^T x U` block diagonal with blocks `[[0, a_j], [-a_j, 0]]`.
pub(crate) fn raw_skew(x: &CMat) -> Result<(CMat, Vec<f64>)> {
    let n = x.nrows();
    let r = n / 2;
    let xr = linalg::drop_imag(x);
    let h = &xr * c(0.0, 1.0);
    let eig = linalg::herm_eig(&h, false)?;
    // eigenvectors of i x for tiny eigenvalues cannot be paired reliably; such
    // directions are left in the (near) kernel
    let thr = 1e-12 * (1.0 + linalg::fro(&xr));
    let pairs: Vec<usize> = (0..r).filter(|&k| eig.values[k] > thr).collect();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut cols = linalg::zeros(n, 2 * pairs.len());
    for (b, &k) in pairs.iter().enumerate() {
        let z = eig.vectors.column(k);
        for i in 0..n {
            cols[(i, 2 * b)] = re(sqrt2 * z[i].im);
            cols[(i, 2 * b + 1)] = re(sqrt2 * z[i].re);
        }
    }
    let cols = linalg::orthonormalize(&cols);
    let u = linalg::drop_imag(&linalg::orthonormalize(&linalg::complete_basis(&cols)));
    let y = u.transpose() * &xr * &u;
    let coords = (0..r)
        .map(|j| 0.5 * (y[(2 * j, 2 * j + 1)].re - y[(2 * j + 1, 2 * j)].re))
        .collect();
    Ok((u, coords))
}

/// Restores the determinant condition by an element of the stabilizer of the
/// diagonal form (or, for even skew families, a type-D sign change of the last
/// coordinate). Returns `(det_relaxed, negated_last)`.
pub(crate) fn repair_det(family: Family, left: &mut CMat, right: &mut Option<CMat>) -> (bool, bool) {
    match family {
        Family::RealSymEvd(_) | Family::HermEvd(_) => {
            let n = left.ncols();
            let d = linalg::det(left);
            if family.is_real() {
                if d.re < 0.0 {
                    left.column_mut(n - 1).neg_mut();
                }
            } else if d.norm() > 0.0 {
                let phase = d.conj() / d.norm();
                let col = left.column(n - 1) * phase;
                left.set_column(n - 1, &col);
            }
            (false, false)
        }
        Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
            let r = right.as_mut().expect("svd families carry a right factor");
            let d = linalg::det(left) * linalg::det(r);
            if !family.is_real() {
                if d.norm() > 0.0 {
                    let phase = linalg::C64::from_polar(1.0, -0.5 * d.arg());
                    let cl = left.column(q - 1) * phase;
                    left.set_column(q - 1, &cl);
                    let cr = r.column(q - 1) * phase;
                    r.set_column(q - 1, &cr);
                }
                (false, false)
            } else if d.re < 0.0 {
                if p > q {
                    left.column_mut(p - 1).neg_mut();
                    (false, false)
                } else {
                    (true, false)
                }
            } else {
                (false, false)
            }
        }
        Family::SkewEvd(n) => {
            if linalg::det(left).re < 0.0 {
                left.column_mut(n - 1).neg_mut();
                (false, n % 2 == 0)
            } else {
                (false, false)
            }
        }
    }
}

/// Diagonalizes one element: `Ad_U^{-1}(x) = embed_a(lambda)` with `lambda`
/// in the closed Weyl chamber.
pub fn diagonalize_point(x: &PElement) -> Result<(KElement, AVector)> {
    diagonalize_point_with(x, &Tolerances::default())
}

pub fn diagonalize_point_with(x: &PElement, tol: &Tolerances) -> Result<(KElement, AVector)> {
    check_shape(x.family, &x.data)?;
    let (u, mut ls) = crate::simultaneous::diagonalize_tuple(&[x], tol)?;
    Ok((u, ls.pop().expect("one element")))
}

/// Reconstruction residual `|Ad_U(embed_a(lambda)) - x|_F`.
pub fn reconstruction_residual(u: &KElement, lambda: &AVector, x: &PElement) -> Result<f64> {
    let rec = adjoint_action(u, &embed_a(lambda))?;
    Ok(linalg::fro(&(&rec.data - &x.data)))
}

/// Diagonalizes and checks the residual against `tol`.
pub fn diagonalize_checked(x: &PElement, tol: &Tolerances) -> Result<(KElement, AVector)> {
    let (u, l) = diagonalize_point_with(x, tol)?;
    let res = reconstruction_residual(&u, &l, x)?;
    if !(res <= tol.eps_solve(x.norm())) {
        return Err(Error::SolverFailure(format!("reconstruction residual {res:e}")));
    }
    Ok((u, l))
}
