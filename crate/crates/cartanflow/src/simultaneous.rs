//! Joint diagonalization of commuting tuples by recursive refinement inside
//! eigenvalue clusters.
//!
//! The frame starts as the identity with one degenerate block. Each element
//! rotates every block into its own eigenbasis and splits it along eigenvalue
//! clusters: a block is a set of `a` coordinates that every element seen so
//! far treats identically, together with the columns of the frame spanning
//! it. Rotating inside a single cluster keeps tiny but distinct values exact.

use crate::error::{Error, Result};
use crate::families::{self, adjoint_action_inv, project_a, AVector, Family, KElement, PElement};
use crate::linalg::{self, c, re, CMat};
use crate::tolerances::Tolerances;
use crate::weyl::{WeylElement, WeylType};

#[derive(Debug, Clone)]
enum Block {
    /// Eigenvalue families: coordinate `j` is column `j`.
    Plain(Vec<usize>),
    /// Singular values that are nonzero: column `j` of both factors.
    Paired(Vec<usize>),
    /// Zero singular values (SVD) or zero rotation blocks (skew); the free
    /// rows / trailing column belong to this block.
    Zero(Vec<usize>),
    /// Skew blocks with a common nonzero rotation speed: columns `2j, 2j+1`.
    Complex(Vec<usize>),
}

struct Frame {
    family: Family,
    left: CMat,
    right: Option<CMat>,
    blocks: Vec<Block>,
}

impl Frame {
    fn new(family: Family) -> Self {
        let r = family.a_dim();
        let all: Vec<usize> = (0..r).collect();
        let (left, right, block) = match family {
            Family::RealSymEvd(n) | Family::HermEvd(n) => (linalg::eye(n), None, Block::Plain(all)),
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
                (linalg::eye(p), Some(linalg::eye(q)), Block::Zero(all))
            }
            Family::SkewEvd(n) => (linalg::eye(n), None, Block::Zero(all)),
        };
        Frame {
            family,
            left,
            right,
            blocks: vec![block],
        }
    }

    /// `x` expressed in the current frame.
    fn local(&self, x: &PElement) -> CMat {
        match &self.right {
            Some(r) => self.left.adjoint() * &x.data * r,
            None => self.left.adjoint() * &x.data * &self.left,
        }
    }

    fn refine(&mut self, x: &PElement, thr: f64) -> Result<()> {
        let z = self.local(x);
        let real = self.family.is_real();
        let blocks = std::mem::take(&mut self.blocks);
        for block in blocks {
            match block {
                Block::Plain(j) => {
                    if j.len() == 1 {
                        self.blocks.push(Block::Plain(j));
                        continue;
                    }
                    let sub = linalg::submatrix(&z, &j, &j);
                    let eig = linalg::herm_eig(&sub, real)?;
                    let runs = linalg::cluster_runs(&eig.values, thr);
                    linalg::rotate_columns(&mut self.left, &j, &eig.vectors);
                    self.blocks.extend(runs.into_iter().map(|r| Block::Plain(j[r].to_vec())));
                }
                Block::Paired(j) => {
                    if j.len() == 1 {
                        self.blocks.push(Block::Paired(j));
                        continue;
                    }
                    let sub = linalg::submatrix(&z, &j, &j);
                    let eig = linalg::herm_eig(&sub, real)?;
                    let runs = linalg::cluster_runs(&eig.values, thr);
                    linalg::rotate_columns(&mut self.left, &j, &eig.vectors);
                    let right = self.right.as_mut().expect("svd frame");
                    linalg::rotate_columns(right, &j, &eig.vectors);
                    self.blocks.extend(runs.into_iter().map(|r| Block::Paired(j[r].to_vec())));
                }
                Block::Zero(j) => self.refine_zero(&z, j, thr)?,
                Block::Complex(j) => {
                    if j.len() == 1 {
                        self.blocks.push(Block::Complex(j));
                        continue;
                    }
                    let m = j.len();
                    let mut a = linalg::zeros(m, m);
                    for (bp, &jp) in j.iter().enumerate() {
                        for (b, &jb) in j.iter().enumerate() {
                            a[(bp, b)] = c(z[(2 * jp, 2 * jb)].re, -z[(2 * jp + 1, 2 * jb)].re);
                        }
                    }
                    // eigenvalues mu of iA give rotation speeds -mu; ascending mu
                    // is descending speed
                    let eig = linalg::herm_eig(&(&a * c(0.0, 1.0)), false)?;
                    let order: Vec<usize> = (0..m).rev().collect();
                    let speeds: Vec<f64> = order.iter().map(|&k| -eig.values[k]).collect();
                    let w = linalg::select_columns(&eig.vectors, &order);
                    let runs = linalg::cluster_runs(&speeds, thr);
                    let mut rot = linalg::zeros(2 * m, 2 * m);
                    for b in 0..m {
                        for k in 0..m {
                            let wv = w[(b, k)];
                            rot[(2 * b, 2 * k)] = re(wv.re);
                            rot[(2 * b + 1, 2 * k)] = re(-wv.im);
                            rot[(2 * b, 2 * k + 1)] = re(wv.im);
                            rot[(2 * b + 1, 2 * k + 1)] = re(wv.re);
                        }
                    }
                    let cols: Vec<usize> = j.iter().flat_map(|&jj| [2 * jj, 2 * jj + 1]).collect();
                    linalg::rotate_columns(&mut self.left, &cols, &rot);
                    self.blocks.extend(runs.into_iter().map(|r| Block::Complex(j[r].to_vec())));
                }
            }
        }
        Ok(())
    }

    fn refine_zero(&mut self, z: &CMat, j: Vec<usize>, thr: f64) -> Result<()> {
        let real = self.family.is_real();
        match self.family {
            Family::RealSvd(p, q) | Family::ComplexSvd(p, q) => {
                let rows: Vec<usize> = j.iter().copied().chain(q..p).collect();
                let sub = linalg::submatrix(z, &rows, &j);
                if linalg::max_abs(&sub) == 0.0 {
                    self.blocks.push(Block::Zero(j));
                    return Ok(());
                }
                let svd = linalg::svd_full(&sub, real)?;
                linalg::rotate_columns(&mut self.left, &rows, &svd.left);
                let right = self.right.as_mut().expect("svd frame");
                linalg::rotate_columns(right, &j, &svd.right);
                for run in linalg::cluster_runs(&svd.sigma, thr) {
                    let idx = j[run.clone()].to_vec();
                    if svd.sigma[run.end - 1] <= thr {
                        self.blocks.push(Block::Zero(idx));
                    } else {
                        self.blocks.push(Block::Paired(idx));
                    }
                }
            }
            Family::SkewEvd(n) => {
                let mut cols: Vec<usize> = j.iter().flat_map(|&jj| [2 * jj, 2 * jj + 1]).collect();
                if n % 2 == 1 {
                    cols.push(n - 1);
                }
                let sub = linalg::submatrix(z, &cols, &cols);
                if linalg::max_abs(&sub) == 0.0 {
                    self.blocks.push(Block::Zero(j));
                    return Ok(());
                }
                let (v, speeds) = families::raw_skew(&sub)?;
                linalg::rotate_columns(&mut self.left, &cols, &v);
                for run in linalg::cluster_runs(&speeds, thr) {
                    let idx = j[run.clone()].to_vec();
                    if speeds[run.end - 1] <= thr {
                        self.blocks.push(Block::Zero(idx));
                    } else {
                        self.blocks.push(Block::Complex(idx));
                    }
                }
            }
            _ => unreachable!("zero blocks only occur for svd and skew families"),
        }
        Ok(())
    }
}

/// Weyl element putting the tuple of coordinate vectors in lexicographic
/// chamber order: the first element decides, later ones break ties among
/// coordinates that agree (within `thrs`) on all earlier elements.
pub(crate) fn lex_chamber_order(wt: WeylType, coords: &[Vec<f64>], thrs: &[f64]) -> WeylElement {
    let r = wt.rank();
    let levels = coords.len();
    let mut flip = vec![1i8; r];
    if !matches!(wt, WeylType::PermA(_)) && levels > 0 {
        for (j, s) in flip.iter_mut().enumerate() {
            let lead = (0..levels - 1).find(|&i| coords[i][j].abs() > thrs[i]);
            let v = match lead {
                Some(i) => coords[i][j],
                None => coords[levels - 1][j],
            };
            if v < 0.0 {
                *s = -1;
            }
        }
    }
    let value = |level: usize, j: usize| f64::from(flip[j]) * coords[level][j];

    fn sort_level(idx: Vec<usize>, level: usize, levels: usize, thrs: &[f64], value: &dyn Fn(usize, usize) -> f64) -> Vec<usize> {
        if level >= levels || idx.len() < 2 {
            return idx;
        }
        let mut idx = idx;
        idx.sort_by(|&a, &b| value(level, b).total_cmp(&value(level, a)));
        let vals: Vec<f64> = idx.iter().map(|&j| value(level, j)).collect();
        linalg::cluster_runs(&vals, thrs[level])
            .into_iter()
            .flat_map(|run| sort_level(idx[run].to_vec(), level + 1, levels, thrs, value))
            .collect()
    }

    let order = sort_level((0..r).collect(), 0, levels, thrs, &value);
    let mut perm = vec![0; r];
    let mut signs = vec![1i8; r];
    for (d, &j) in order.iter().enumerate() {
        perm[j] = d;
        signs[d] = flip[j];
    }
    if matches!(wt, WeylType::SignedPermD(_)) && r > 0 && flip.iter().product::<i8>() < 0 {
        signs[r - 1] = -signs[r - 1];
    }
    WeylElement {
        weyl_type: wt,
        perm,
        signs,
    }
}

/// Checks pairwise commutation; the residual is relative to
/// `(1 + |x_i|)(1 + |x_j|)`.
pub fn commutation_residual(xs: &[PElement]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let h_i = xs[i].to_hermitian();
            let h_j = xs[j].to_hermitian();
            let r = linalg::fro(&linalg::commutator(&h_i, &h_j));
            worst = worst.max(r / ((1.0 + xs[i].norm()) * (1.0 + xs[j].norm())));
        }
    }
    worst
}

pub(crate) fn diagonalize_tuple(xs: &[&PElement], tol: &Tolerances) -> Result<(KElement, Vec<AVector>)> {
    let family = xs[0].family;
    let mut frame = Frame::new(family);
    let thrs: Vec<f64> = xs.iter().map(|x| tol.cluster_thr(x.norm())).collect();
    for (x, &thr) in xs.iter().zip(&thrs) {
        frame.refine(x, thr)?;
    }
    let (mut left, mut right) = (frame.left, frame.right);
    if family.is_real() {
        left = linalg::drop_imag(&left);
        right = right.map(|r| linalg::drop_imag(&r));
    }
    let (relaxed, _) = families::repair_det(family, &mut left, &mut right);
    let mut u = KElement {
        family,
        left,
        right,
        det_relaxed: relaxed,
    };
    let mut coords = Vec::with_capacity(xs.len());
    for x in xs {
        coords.push(project_a(&adjoint_action_inv(&u, x)?).0.coords);
    }
    let w = lex_chamber_order(family.weyl_type(), &coords, &thrs);
    if !w.is_identity() {
        let rep = families::weyl_representative(family, &w);
        u = u.compose(&rep.inverse());
        u.det_relaxed |= relaxed;
    }
    let lambdas = coords
        .iter()
        .map(|v| AVector {
            family,
            coords: w.apply(v),
        })
        .collect();
    Ok((u, lambdas))
}

/// Finds one group element putting every (pairwise commuting) element of
/// `xs` into `a`. Commutation is checked against `tol`.
pub fn simultaneous_diagonalize(xs: &[PElement], tol: f64) -> Result<(KElement, Vec<AVector>)> {
    let tols = Tolerances {
        solve: tol,
        ..Tolerances::default()
    };
    simultaneous_diagonalize_with(xs, &tols)
}

pub fn simultaneous_diagonalize_with(xs: &[PElement], tol: &Tolerances) -> Result<(KElement, Vec<AVector>)> {
    let Some(first) = xs.first() else {
        return Err(Error::InvalidSpec("empty tuple".into()));
    };
    for x in &xs[1..] {
        first.same_family(x)?;
    }
    let residual = commutation_residual(xs);
    if residual > tol.solve {
        return Err(Error::NotCommuting { residual });
    }
    let refs: Vec<&PElement> = xs.iter().collect();
    diagonalize_tuple(&refs, tol)
}
