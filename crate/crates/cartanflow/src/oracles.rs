//! Reference machinery used to check the engines: exhaustive Weyl search,
//! finite-difference eigenprojection derivatives, named example paths and
//! seeded random instances.
//!
//! Nothing here goes through `lie_ops`; only the dense helpers and the family
//! embeddings are shared.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::families::{adjoint_action, embed_a, AVector, Family, KElement, PElement};
use crate::lie_ops::KTangent;
use crate::linalg::{self, c, re, CMat, C64};
use crate::path::{eval_path, Builtin, PathKind, PathSpec};
use crate::tolerances::Tolerances;
use crate::weyl::{WeylElement, WeylType};

pub const BRUTE_FORCE_MAX_RANK: usize = 6;

/// Every element of the Weyl group, for `rank <= 6`.
pub fn weyl_elements(wt: WeylType) -> Result<Vec<WeylElement>> {
    let r = wt.rank();
    if r > BRUTE_FORCE_MAX_RANK {
        return Err(Error::TooLarge {
            rank: r,
            max: BRUTE_FORCE_MAX_RANK,
        });
    }
    let mut perms = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(r);
    fn permute(r: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == r {
            out.push(current.clone());
            return;
        }
        for d in 0..r {
            if !current.contains(&d) {
                current.push(d);
                permute(r, current, out);
                current.pop();
            }
        }
    }
    permute(r, &mut current, &mut perms);
    let sign_patterns: Vec<Vec<i8>> = match wt {
        WeylType::PermA(_) => vec![vec![1; r]],
        _ => (0..1u32 << r)
            .map(|mask| (0..r).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect::<Vec<i8>>())
            .filter(|s| !matches!(wt, WeylType::SignedPermD(_)) || s.iter().product::<i8>() == 1)
            .collect(),
    };
    let mut out = Vec::with_capacity(perms.len() * sign_patterns.len());
    for p in &perms {
        for s in &sign_patterns {
            out.push(WeylElement {
                weyl_type: wt,
                perm: p.clone(),
                signs: s.clone(),
            });
        }
    }
    Ok(out)
}

/// `min_w |u - w v|` by exhaustive enumeration.
pub fn brute_force_weyl_min(wt: WeylType, u: &[f64], v: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for w in weyl_elements(wt)? {
        let wv = w.apply(v);
        let d = u.iter().zip(&wv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        best = best.min(d);
    }
    Ok(best)
}

/// Eigenvalue clusters (descending) of the Hermitian picture of `x` with
/// their spectral projectors.
fn clustered_projectors(x: &PElement, cluster_tol: f64) -> Result<(Vec<f64>, Vec<CMat>)> {
    let h = x.to_hermitian();
    let eig = linalg::herm_eig(&h, false)?;
    let thr = cluster_tol * (1.0 + x.norm());
    let mut values = Vec::new();
    let mut projs = Vec::new();
    for run in linalg::cluster_runs(&eig.values, thr) {
        let idx: Vec<usize> = run.clone().collect();
        values.push(idx.iter().map(|&i| eig.values[i]).sum::<f64>() / idx.len() as f64);
        let v = linalg::select_columns(&eig.vectors, &idx);
        projs.push(&v * v.adjoint());
    }
    Ok((values, projs))
}

/// Matches clusters of `from` to clusters of `to` by nearest eigenvalue.
/// With equal counts on a line this is the order-preserving assignment;
/// it is computed as a bipartite minimum to stay honest about ties.
fn match_clusters(from: &[f64], to: &[f64]) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::ClusterMismatch {
            left: from.len(),
            right: to.len(),
        });
    }
    let cost: Vec<Vec<f64>> = from
        .iter()
        .map(|a| to.iter().map(|b| (a - b) * (a - b)).collect())
        .collect();
    Ok(crate::weyl::hungarian(&cost))
}

/// Spectral projectors at `t` and their central-difference derivatives.
pub fn finite_diff_projectors_with(
    spec: &PathSpec,
    t: f64,
    h: f64,
    cluster_tol: f64,
) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let (x0, _) = eval_path(spec, t)?;
    let (xm, _) = eval_path(spec, t - h)?;
    let (xp, _) = eval_path(spec, t + h)?;
    let (v0, p0) = clustered_projectors(&x0, cluster_tol)?;
    let (vm, pm) = clustered_projectors(&xm, cluster_tol)?;
    let (vp, pp) = clustered_projectors(&xp, cluster_tol)?;
    let to_m = match_clusters(&v0, &vm)?;
    let to_p = match_clusters(&v0, &vp)?;
    let derivs = (0..v0.len())
        .map(|k| (&pp[to_p[k]] - &pm[to_m[k]]) * re(0.5 / h))
        .collect();
    Ok((p0, derivs))
}

/// Central-difference derivatives of the spectral projectors at `t`.
pub fn finite_diff_projectors(spec: &PathSpec, t: f64, h: f64) -> Result<Vec<CMat>> {
    Ok(finite_diff_projectors_with(spec, t, h, Tolerances::default().cluster)?.1)
}

/// Named example paths.
pub fn corpus(name: &str) -> Result<PathSpec> {
    Ok(PathSpec::builtin(name.parse::<Builtin>()?))
}

/// `[[a, b], [b, -a]] -> a + i b`.
pub fn iota_sym2(x: &PElement) -> C64 {
    c(x.data[(0, 0)].re, x.data[(0, 1)].re)
}

/// Rotation by `phi` maps to `e^{2 i phi}`.
pub fn iota_so2(o: &KElement) -> C64 {
    let phi = o.left[(1, 0)].re.atan2(o.left[(0, 0)].re);
    C64::from_polar(1.0, 2.0 * phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralProfile {
    Generic,
    /// The `k` leading coordinates coincide.
    Clustered(usize),
    /// Paths with one simple eigenvalue crossing.
    CrossingEngineered,
}

/// Seeded generator of random elements and paths. The underlying generator is
/// SplitMix64 (increment `0x9E3779B97F4A7C15`, mixing multipliers
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`); Gaussians come from the
/// ziggurat sampler of `rand_distr`.
pub struct InstanceGenerator {
    pub family: Family,
    pub seed: u64,
    pub profile: SpectralProfile,
    rng: SplitMix64,
}

impl InstanceGenerator {
    pub fn new(family: Family, seed: u64, profile: SpectralProfile) -> Self {
        InstanceGenerator {
            family,
            seed,
            profile,
            rng: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn gaussian_matrix(&mut self, rows: usize, cols: usize, complex: bool) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            let a = self.rng.sample(StandardNormal);
            let b = if complex { self.rng.sample(StandardNormal) } else { 0.0 };
            c(a, b)
        })
    }

    /// Haar-distributed unitary (orthogonal when `real`) with determinant 1.
    pub fn special_unitary(&mut self, n: usize, real: bool) -> CMat {
        let g = self.gaussian_matrix(n, n, !real);
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
        let d = linalg::det(&q);
        if n > 0 {
            let fix = if real { re(d.re.signum()) } else { d.conj() / d.norm() };
            let col = q.column(0) * fix;
            q.set_column(0, &col);
        }
        q
    }

    /// Random group element.
    pub fn group_element(&mut self) -> KElement {
        let f = self.family;
        let real = f.is_real();
        match f {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
                let mut left = self.special_unitary(p, real);
                let right = self.special_unitary(q, real);
                if !real {
                    // S(U(p) x U(q)): spread a random phase over both factors
                    let phi = self.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                    let col = left.column(0) * C64::from_polar(1.0, phi);
                    left.set_column(0, &col);
                    let mut right = right;
                    let col = right.column(0) * C64::from_polar(1.0, -phi);
                    right.set_column(0, &col);
                    return KElement {
                        family: f,
                        left,
                        right: Some(right),
                        det_relaxed: false,
                    };
                }
                KElement {
                    family: f,
                    left,
                    right: Some(right),
                    det_relaxed: false,
                }
            }
            _ => KElement {
                family: f,
                left: self.special_unitary(f.hermitian_dim(), real),
                right: None,
                det_relaxed: false,
            },
        }
    }

    /// Random element of `p` with Gaussian entries.
    pub fn gaussian_point(&mut self) -> PElement {
        let f = self.family;
        let (rows, cols) = f.ambient_shape();
        let g = self.gaussian_matrix(rows, cols, !f.is_real());
        let data = match f {
            Family::RealSymEvd(n) | Family::HermEvd(n) => {
                let h = linalg::hermitian_part(&g);
                let shift = h.trace() / re(n as f64);
                &h - linalg::eye(n) * shift
            }
            Family::SkewEvd(_) => (&g - g.transpose()) * re(0.5),
            Family::RealSvd(..) | Family::ComplexSvd(..) => g,
        };
        let data = if f.is_real() { linalg::drop_imag(&data) } else { data };
        PElement { family: f, data }
    }

    /// Random chamber vector shaped by the profile.
    pub fn a_vector(&mut self) -> AVector {
        let f = self.family;
        let r = f.a_dim();
        let mut v: Vec<f64> = (0..r).map(|_| self.gaussian()).collect();
        if let SpectralProfile::Clustered(k) = self.profile {
            for i in 1..k.min(r) {
                v[i] = v[0];
            }
        }
        if matches!(f, Family::RealSymEvd(_) | Family::HermEvd(_)) {
            let mean = v.iter().sum::<f64>() / r as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        let (sorted, _) = crate::weyl::chamber_sort(f.weyl_type(), &v);
        AVector { family: f, coords: sorted }
    }

    /// Random element of `p`: Gaussian for the generic profile, otherwise a
    /// random conjugate of a profile-shaped diagonal element.
    pub fn point(&mut self) -> PElement {
        match self.profile {
            SpectralProfile::Generic => self.gaussian_point(),
            _ => {
                let a = self.a_vector();
                let u = self.group_element();
                adjoint_action(&u, &embed_a(&a)).expect("same family")
            }
        }
    }

    /// Random element of the Lie algebra of K.
    pub fn tangent(&mut self) -> KTangent {
        let f = self.family;
        let n = f.hermitian_dim();
        let g = self.gaussian_matrix(n, n, !f.is_real());
        let skew = (&g - g.adjoint()) * re(0.5);
        KTangent::from_ambient(f, &skew)
    }

    fn scaled_to(&self, m: CMat, norm: f64) -> CMat {
        let f = linalg::fro(&m);
        if f > 0.0 {
            m * re(norm / f)
        } else {
            m
        }
    }

    /// Trigonometric path with Gaussian coefficients (order 2).
    pub fn generic_path(&mut self) -> PathSpec {
        let f = self.family;
        let constant = self.gaussian_point().data;
        let cos = (0..2).map(|_| self.gaussian_point().data).collect();
        let sin = (0..2).map(|_| self.gaussian_point().data).collect();
        PathSpec::new(f, PathKind::TrigPoly { constant, cos, sin }, None, &Tolerances::default())
            .expect("generated coefficients are members")
    }

    /// Trigonometric path that stays regular: a well separated constant term
    /// (root values at least 1) plus order-2 perturbations of Frobenius norm
    /// 0.15 each, which move root values by less than 0.85.
    pub fn regular_path(&mut self) -> PathSpec {
        let f = self.family;
        let r = f.a_dim();
        let coords: Vec<f64> = match f.weyl_type() {
            WeylType::PermA(n) => (0..n).map(|i| 1.5 * ((n - 1) as f64 / 2.0 - i as f64)).collect(),
            _ => (0..r).map(|i| 1.0 + 1.5 * (r - 1 - i) as f64).collect(),
        };
        let u = self.group_element();
        let constant = adjoint_action(&u, &embed_a(&AVector { family: f, coords }))
            .expect("same family")
            .data;
        let perturbation = |gen: &mut Self| {
            let m = gen.gaussian_point().data;
            gen.scaled_to(m, 0.15)
        };
        let cos = vec![perturbation(self), perturbation(self)];
        let sin = vec![perturbation(self), perturbation(self)];
        PathSpec::new(f, PathKind::TrigPoly { constant, cos, sin }, None, &Tolerances::default())
            .expect("generated coefficients are members")
    }

    /// Eigenvalue-family path on `[0, 1]` with exactly one simple crossing:
    /// `Q diag(M1 + sin(t) I, M2 - sin(t) I) Q^*` with 2x2 blocks whose
    /// spectra are `{5, m}` and `{m + delta, -5 - 2m - delta}`, so the
    /// eigenvalues `m + sin t` and `m + delta - sin t` cross at
    /// `sin t = delta / 2`. Requires an eigenvalue family with `n = 4`.
    pub fn crossing_path(&mut self) -> Result<(PathSpec, f64)> {
        let f = self.family;
        let real = f.is_real();
        if !matches!(f, Family::RealSymEvd(4) | Family::HermEvd(4)) {
            return Err(Error::InvalidSpec(format!("crossing paths need a 4x4 eigenvalue family, got {f}")));
        }
        let m = self.uniform(-1.0, 1.0);
        let delta = self.uniform(0.2, 0.6);
        let block = |gen: &mut Self, a: f64, b: f64| {
            let v = gen.special_unitary(2, real);
            let d = linalg::from_real(&linalg::RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b])));
            &v * d * v.adjoint()
        };
        let m1 = block(self, 5.0, m);
        let m2 = block(self, m + delta, -5.0 - 2.0 * m - delta);
        let q = self.special_unitary(4, real);
        let constant = &q * linalg::block_diag(&m1, &m2) * q.adjoint();
        let signs = linalg::block_diag(&linalg::eye(2), &(linalg::eye(2) * re(-1.0)));
        let sin = vec![&q * signs * q.adjoint()];
        let clean = |m: CMat| {
            let m = linalg::hermitian_part(&m);
            if real {
                linalg::drop_imag(&m)
            } else {
                m
            }
        };
        let kind = PathKind::TrigPoly {
            constant: clean(constant),
            cos: vec![],
            sin: sin.into_iter().map(clean).collect(),
        };
        let spec = PathSpec::new(f, kind, Some((0.0, 1.0)), &Tolerances::default())?;
        Ok((spec, (0.5 * delta).asin()))
    }
}
