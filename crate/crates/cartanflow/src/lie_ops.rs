//! Brackets, commutant projections and the restricted inverse of `ad_x`.
//!
//! Everything is computed from the spectral decomposition of the Hermitian
//! ambient operator of `x`: with eigenvectors `V` and cluster labels, the
//! projection `sum_k P_k b P_k` is `V ((V^* B V) o M) V^*` for the 0/1 block
//! mask `M`, and the inverse divides the off-cluster blocks by the eigenvalue
//! differences instead.

use crate::error::{Error, Result};
use crate::families::{Family, KElement, PElement};
use crate::linalg::{self, re, CMat};
use crate::tolerances::Tolerances;
use crate::weyl::WeylType;

pub const DEFAULT_GAP_MIN: f64 = 1e-10;

/// An element of the Lie algebra of K.
#[derive(Debug, Clone, PartialEq)]
pub struct KTangent {
    pub family: Family,
    pub left: CMat,
    /// `Omega_R` for the SVD families.
    pub right: Option<CMat>,
}

impl KTangent {
    pub fn zero(family: Family) -> Self {
        Self::from_ambient(family, &linalg::zeros(family.hermitian_dim(), family.hermitian_dim()))
    }

    pub fn new(family: Family, left: CMat, right: Option<CMat>) -> Result<Self> {
        let t = KTangent { family, left, right };
        let (l, r) = t.block_sizes();
        if t.left.shape() != (l, l) {
            return Err(Error::ShapeMismatch {
                expected: (l, l),
                found: t.left.shape(),
            });
        }
        match (&t.right, r) {
            (None, 0) => {}
            (Some(m), r) if r > 0 && m.shape() == (r, r) => {}
            (m, r) => {
                return Err(Error::ShapeMismatch {
                    expected: (r, r),
                    found: m.as_ref().map_or((0, 0), |m| m.shape()),
                })
            }
        }
        Ok(t)
    }

    fn block_sizes(&self) -> (usize, usize) {
        match self.family {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => (p, q),
            f => (f.hermitian_dim(), 0),
        }
    }

    /// Block-diagonal ambient realization (`diag(Omega_L, Omega_R)` for SVD).
    pub fn to_ambient(&self) -> CMat {
        match &self.right {
            Some(r) => linalg::block_diag(&self.left, r),
            None => self.left.clone(),
        }
    }

    pub fn from_ambient(family: Family, k: &CMat) -> Self {
        let clean = |m: CMat| if family.is_real() { linalg::drop_imag(&m) } else { m };
        match family {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => KTangent {
                family,
                left: clean(k.view((0, 0), (p, p)).into_owned()),
                right: Some(clean(k.view((p, p), (q, q)).into_owned())),
            },
            _ => KTangent {
                family,
                left: clean(k.clone()),
                right: None,
            },
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::fro(&self.to_ambient())
    }

    pub fn scaled(&self, s: f64) -> Self {
        KTangent {
            family: self.family,
            left: &self.left * re(s),
            right: self.right.as_ref().map(|r| r * re(s)),
        }
    }

    pub fn plus(&self, other: &KTangent) -> Self {
        KTangent {
            family: self.family,
            left: &self.left + &other.left,
            right: match (&self.right, &other.right) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        }
    }

    /// Max-norm deviation from skew-Hermitian (and real, for real families).
    pub fn skew_residual(&self) -> f64 {
        let a = self.to_ambient();
        let mut r = linalg::max_abs(&(&a + a.adjoint()));
        if self.family.is_real() {
            r = r.max(linalg::max_imag(&a));
        }
        r
    }

    /// `exp(t k)` as a group element.
    pub fn exp(&self, t: f64) -> KElement {
        let left = (&self.left * re(t)).exp();
        let right = self.right.as_ref().map(|r| (r * re(t)).exp());
        let clean = |m: CMat| if self.family.is_real() { linalg::drop_imag(&m) } else { m };
        KElement {
            family: self.family,
            left: clean(left),
            right: right.map(clean),
            det_relaxed: false,
        }
    }

    /// Multiplies on the right of a group element: returns `k U` in the
    /// ambient sense, used for `U' = k U`.
    pub fn times(&self, u: &KElement) -> (CMat, Option<CMat>) {
        let left = &self.left * &u.left;
        let right = match (&self.right, &u.right) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        (left, right)
    }
}

/// `[x, y]` as an element of the Lie algebra of K.
pub fn bracket_pp(x: &PElement, y: &PElement) -> Result<KTangent> {
    x.same_family(y)?;
    match x.family {
        Family::RealSvd(..) | Family::ComplexSvd(..) => {
            let (a, b) = (&x.data, &y.data);
            let left = a * b.adjoint() - b * a.adjoint();
            let right = a.adjoint() * b - b.adjoint() * a;
            Ok(KTangent {
                family: x.family,
                left,
                right: Some(right),
            })
        }
        _ => Ok(KTangent {
            family: x.family,
            left: linalg::commutator(&x.data, &y.data),
            right: None,
        }),
    }
}

/// `ad_k(x) = [k, x]`.
pub fn bracket_kp(k: &KTangent, x: &PElement) -> Result<PElement> {
    if k.family != x.family {
        return Err(Error::FamilyMismatch {
            expected: x.family.to_string(),
            found: k.family.to_string(),
        });
    }
    let shape = x.family.ambient_shape();
    if x.data.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: x.data.shape(),
        });
    }
    let data = match &k.right {
        Some(r) => &k.left * &x.data - &x.data * r,
        None => linalg::commutator(&k.left, &x.data),
    };
    Ok(PElement {
        family: x.family,
        data,
    })
}

/// Root values of the family's root system evaluated at `a` (only the
/// absolute values matter).
pub fn root_values(wt: WeylType, a: &[f64]) -> Vec<f64> {
    let r = a.len();
    let mut out = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            out.push((a[i] - a[j]).abs());
            if !matches!(wt, WeylType::PermA(_)) {
                out.push((a[i] + a[j]).abs());
            }
        }
        if matches!(wt, WeylType::SignedPermB(_)) {
            out.push(a[i].abs());
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct EigenStructure {
    pub family: Family,
    pub base: PElement,
    /// Distinct eigenvalues of the ambient operator, descending.
    pub distinct_values: Vec<f64>,
    pub projections: Vec<CMat>,
    /// Smallest root value above the clustering threshold (0 if none).
    pub gap: f64,
    /// Smallest root value overall (`inf` when the root system is empty).
    pub min_root: f64,
    pub regular: bool,
    vectors: CMat,
    labels: Vec<usize>,
}

pub fn eigen_structure(x: &PElement, cluster_tol: f64) -> Result<EigenStructure> {
    let h = x.to_hermitian();
    let eig = linalg::herm_eig(&h, x.hermitian_is_real())?;
    let thr = cluster_tol * (1.0 + x.norm());
    let runs = linalg::cluster_runs(&eig.values, thr);
    let mut labels = vec![0; eig.values.len()];
    let mut distinct_values = Vec::with_capacity(runs.len());
    let mut projections = Vec::with_capacity(runs.len());
    for (k, run) in runs.iter().enumerate() {
        let idx: Vec<usize> = run.clone().collect();
        for &i in &idx {
            labels[i] = k;
        }
        distinct_values.push(idx.iter().map(|&i| eig.values[i]).sum::<f64>() / idx.len() as f64);
        let v = linalg::select_columns(&eig.vectors, &idx);
        projections.push(&v * v.adjoint());
    }
    let wt = x.family.weyl_type();
    let a = &eig.values[..wt.rank()];
    let roots = root_values(wt, a);
    let min_root = roots.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = roots.iter().copied().filter(|&v| v > thr).fold(f64::INFINITY, f64::min);
    Ok(EigenStructure {
        family: x.family,
        base: x.clone(),
        distinct_values,
        projections,
        gap: if gap.is_finite() { gap } else { 0.0 },
        min_root,
        regular: min_root > thr,
        vectors: eig.vectors,
        labels,
    })
}

impl EigenStructure {
    fn check(&self, b: &PElement) -> Result<()> {
        self.base.same_family(b)
    }

    fn in_eigenbasis(&self, m: &CMat) -> CMat {
        self.vectors.adjoint() * m * &self.vectors
    }

    fn from_eigenbasis(&self, m: &CMat) -> CMat {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// `Pi_x(b)`.
    pub fn project(&self, b: &PElement) -> Result<PElement> {
        self.check(b)?;
        let mut w = self.in_eigenbasis(&b.to_hermitian());
        for j in 0..w.ncols() {
            for i in 0..w.nrows() {
                if self.labels[i] != self.labels[j] {
                    w[(i, j)] = re(0.0);
                }
            }
        }
        Ok(PElement::from_hermitian(self.family, &self.from_eigenbasis(&w)))
    }

    /// `b - Pi_x(b)`.
    pub fn project_perp(&self, b: &PElement) -> Result<PElement> {
        let p = self.project(b)?;
        Ok(b - &p)
    }

    /// `sum_{k != l} P_k c P_l / (lambda_k - lambda_l)`, which satisfies
    /// `[x, result] = Pi_perp(c)`; no precondition checks.
    pub fn ad_inverse_unchecked(&self, cc: &PElement) -> Result<KTangent> {
        self.check(cc)?;
        let mut w = self.in_eigenbasis(&cc.to_hermitian());
        for j in 0..w.ncols() {
            for i in 0..w.nrows() {
                let (ki, kj) = (self.labels[i], self.labels[j]);
                w[(i, j)] = if ki == kj {
                    re(0.0)
                } else {
                    w[(i, j)] / (self.distinct_values[ki] - self.distinct_values[kj])
                };
            }
        }
        let k = self.from_eigenbasis(&w);
        let k = (&k - k.adjoint()) * re(0.5);
        Ok(KTangent::from_ambient(self.family, &k))
    }

    pub fn ad_inverse(&self, cc: &PElement, gap_min: f64, tol: &Tolerances) -> Result<KTangent> {
        self.check(cc)?;
        if self.gap < gap_min {
            return Err(Error::NearSingularPoint {
                t: None,
                gap: self.gap,
                gap_min,
            });
        }
        let residual = self.project(cc)?.norm();
        if residual > tol.eps_solve(self.base.norm()) * cc.norm() {
            return Err(Error::NotInImage { residual });
        }
        self.ad_inverse_unchecked(cc)
    }
}

pub fn commutant_projection(x: &PElement, b: &PElement) -> Result<PElement> {
    x.same_family(b)?;
    eigen_structure(x, Tolerances::default().cluster)?.project(b)
}

pub fn commutant_complement(x: &PElement, b: &PElement) -> Result<PElement> {
    x.same_family(b)?;
    eigen_structure(x, Tolerances::default().cluster)?.project_perp(b)
}

/// Restricted inverse of `ad_x` with default tolerances: `[x, result] = c`.
pub fn ad_inverse(x: &PElement, cc: &PElement, gap_min: f64) -> Result<KTangent> {
    x.same_family(cc)?;
    let tol = Tolerances::default();
    eigen_structure(x, tol.cluster)?.ad_inverse(cc, gap_min, &tol)
}
