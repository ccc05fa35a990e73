//! Weyl chamber geometry for the three reflection groups that occur: plain
//! permutations (type A), signed permutations (type B) and signed
//! permutations with an even number of sign changes (type D).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeylType {
    PermA(usize),
    SignedPermB(usize),
    SignedPermD(usize),
}

impl WeylType {
    pub fn rank(&self) -> usize {
        match *self {
            WeylType::PermA(r) | WeylType::SignedPermB(r) | WeylType::SignedPermD(r) => r,
        }
    }

    pub fn letter(&self) -> char {
        match self {
            WeylType::PermA(_) => 'A',
            WeylType::SignedPermB(_) => 'B',
            WeylType::SignedPermD(_) => 'D',
        }
    }

    fn has_signs(&self) -> bool {
        !matches!(self, WeylType::PermA(_))
    }

    /// Order of the group.
    pub fn order(&self) -> u128 {
        let r = self.rank() as u128;
        let fact: u128 = (1..=r).product();
        match self {
            WeylType::PermA(_) => fact,
            WeylType::SignedPermB(_) => fact << r,
            WeylType::SignedPermD(_) => (fact << r) >> 1,
        }
    }
}

/// A signed permutation acting by `(w v)_i = signs_i * v_{perm^{-1}(i)}`.
///
/// `perm[j]` is the destination of source coordinate `j`; `signs` is indexed
/// by destination.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeylElement {
    pub weyl_type: WeylType,
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl WeylElement {
    pub fn identity(weyl_type: WeylType) -> Self {
        let r = weyl_type.rank();
        WeylElement {
            weyl_type,
            perm: (0..r).collect(),
            signs: vec![1; r],
        }
    }

    pub fn new(weyl_type: WeylType, perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let w = WeylElement {
            weyl_type,
            perm,
            signs,
        };
        if w.is_valid() {
            Ok(w)
        } else {
            Err(Error::InvalidSpec(format!("not an element of {weyl_type:?}: {w}")))
        }
    }

    pub fn is_valid(&self) -> bool {
        let r = self.weyl_type.rank();
        if self.perm.len() != r || self.signs.len() != r {
            return false;
        }
        let mut seen = vec![false; r];
        for &p in &self.perm {
            if p >= r || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return false;
        }
        match self.weyl_type {
            WeylType::PermA(_) => self.signs.iter().all(|&s| s == 1),
            WeylType::SignedPermB(_) => true,
            WeylType::SignedPermD(_) => self.sign_product() == 1,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.signs.iter().all(|&s| s == 1)
    }

    fn sign_product(&self) -> i8 {
        self.signs.iter().product()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.perm.len(), "Weyl element rank mismatch");
        let mut out = vec![0.0; v.len()];
        for (j, &x) in v.iter().enumerate() {
            let d = self.perm[j];
            out[d] = f64::from(self.signs[d]) * x;
        }
        out
    }

    pub fn inverse(&self) -> Self {
        let r = self.perm.len();
        let mut perm = vec![0; r];
        let mut signs = vec![1; r];
        for (j, &d) in self.perm.iter().enumerate() {
            perm[d] = j;
            signs[j] = self.signs[d];
        }
        WeylElement {
            weyl_type: self.weyl_type,
            perm,
            signs,
        }
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &WeylElement) -> Self {
        let r = self.perm.len();
        let mut perm = vec![0; r];
        let mut signs = vec![1; r];
        for j in 0..r {
            let mid = other.perm[j];
            let d = self.perm[mid];
            perm[j] = d;
            signs[d] = self.signs[d] * other.signs[mid];
        }
        WeylElement {
            weyl_type: self.weyl_type,
            perm,
            signs,
        }
    }

    /// Source index feeding each destination slot.
    pub fn sources(&self) -> Vec<usize> {
        self.inverse().perm
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.weyl_type.letter())?;
        for (i, src) in self.sources().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let s = if self.signs[i] < 0 { "-" } else { "" };
            write!(f, "{s}{}", src + 1)?;
        }
        write!(f, "]")
    }
}

/// Sorts `v` into the closed chamber; returns the sorted vector and the Weyl
/// element mapping `v` onto it.
pub fn chamber_sort(wt: WeylType, v: &[f64]) -> (Vec<f64>, WeylElement) {
    let r = wt.rank();
    assert_eq!(v.len(), r, "rank mismatch in chamber_sort");
    let keys: Vec<f64> = if wt.has_signs() {
        v.iter().map(|x| x.abs()).collect()
    } else {
        v.to_vec()
    };
    let mut order: Vec<usize> = (0..r).collect();
    // stable: equal keys keep their relative order
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    let mut perm = vec![0; r];
    let mut signs = vec![1i8; r];
    for (dest, &src) in order.iter().enumerate() {
        perm[src] = dest;
        if wt.has_signs() && v[src] < 0.0 {
            signs[dest] = -1;
        }
    }
    if matches!(wt, WeylType::SignedPermD(_)) && r > 0 && signs.iter().product::<i8>() < 0 {
        signs[r - 1] = -signs[r - 1];
    }
    let w = WeylElement {
        weyl_type: wt,
        perm,
        signs,
    };
    (w.apply(v), w)
}

pub fn in_chamber(wt: WeylType, v: &[f64], tol: f64) -> bool {
    let r = v.len();
    if r != wt.rank() {
        return false;
    }
    let sorted_ok = |hi: usize| (1..hi).all(|i| v[i - 1] >= v[i] - tol);
    match wt {
        WeylType::PermA(_) => sorted_ok(r),
        WeylType::SignedPermB(_) => sorted_ok(r) && (r == 0 || v[r - 1] >= -tol),
        WeylType::SignedPermD(_) => {
            if r < 2 {
                return true;
            }
            sorted_ok(r - 1) && v[r - 2] >= v[r - 1].abs() - tol
        }
    }
}

/// Open face of the closed chamber containing a point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaceLabel {
    pub weyl_type: WeylType,
    /// Equality classes (0-based coordinate indices), in chamber order.
    pub classes: Vec<Vec<usize>>,
    /// Class pinned at zero (type B) or carrying the sign ambiguity (type D).
    pub zero_class: Option<usize>,
    /// Type D only: the last class is joined through `v_{r-1} = -v_r`.
    pub negated_tail: bool,
}

impl FaceLabel {
    pub fn is_regular(&self) -> bool {
        let singletons = self.classes.iter().all(|c| c.len() == 1);
        match self.weyl_type {
            WeylType::SignedPermB(_) => singletons && self.zero_class.is_none(),
            _ => singletons,
        }
    }

    /// Compact label such as `A:{12}{3}` or `B:{1}{2:0}`.
    pub fn hash_string(&self) -> String {
        let r = self.weyl_type.rank();
        let sep = if r > 9 { "," } else { "" };
        let mut s = format!("{}:", self.weyl_type.letter());
        let last = self.classes.len().saturating_sub(1);
        for (k, class) in self.classes.iter().enumerate() {
            s.push('{');
            let idx: Vec<String> = class.iter().map(|i| (i + 1).to_string()).collect();
            s.push_str(&idx.join(sep));
            if self.zero_class == Some(k) {
                s.push_str(":0");
            }
            if self.negated_tail && k == last {
                s.push('-');
            }
            s.push('}');
        }
        s
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hash_string())
    }
}

/// Face of `v`; coordinates closer than `tol * (1 + |v|)` are identified.
pub fn face_of(wt: WeylType, v: &[f64], tol: f64) -> Result<FaceLabel> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let thr = tol * (1.0 + norm);
    if !in_chamber(wt, v, thr) {
        return Err(Error::NotInChamber);
    }
    let r = v.len();
    let mut keys = v.to_vec();
    if matches!(wt, WeylType::SignedPermD(_)) && r > 0 {
        keys[r - 1] = keys[r - 1].abs();
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..r {
        if i > 0 && (keys[i - 1] - keys[i]).abs() <= thr {
            classes.last_mut().unwrap().push(i);
        } else {
            classes.push(vec![i]);
        }
    }
    let mut zero_class = None;
    let mut negated_tail = false;
    if r > 0 {
        let tail_zero = keys[r - 1].abs() <= thr;
        match wt {
            WeylType::SignedPermB(_) | WeylType::SignedPermD(_) if tail_zero => {
                zero_class = Some(classes.len() - 1);
            }
            WeylType::SignedPermD(_) => {
                negated_tail = v[r - 1] < 0.0 && classes.last().map_or(false, |c| c.len() > 1);
            }
            _ => {}
        }
    }
    Ok(FaceLabel {
        weyl_type: wt,
        classes,
        zero_class,
        negated_tail,
    })
}

/// Outcome of matching one jet against another.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatch {
    pub w: WeylElement,
    pub cost: f64,
    /// More than one group element attains the minimum.
    pub ambiguous: bool,
}

/// Exhaustive dynamic program is used up to this rank; beyond it a Hungarian
/// assignment with a greedy parity repair.
const DP_MAX_RANK: usize = 10;

/// Finds `w` minimizing `|w next_v - prev_v|^2 + beta |w next_d - prev_d|^2`.
///
/// Ties resolve to the lexicographically smallest (source-per-slot, sign)
/// sequence with `+1` ordered before `-1`.
pub fn match_jet(
    wt: WeylType,
    prev: (&[f64], &[f64]),
    next: (&[f64], &[f64]),
    beta: f64,
) -> JetMatch {
    let r = wt.rank();
    assert!(
        prev.0.len() == r && prev.1.len() == r && next.0.len() == r && next.1.len() == r,
        "match_jet: rank mismatch"
    );
    let entry = |slot: usize, src: usize, s: f64| -> f64 {
        let dv = s * next.0[src] - prev.0[slot];
        let dd = s * next.1[src] - prev.1[slot];
        dv * dv + beta * dd * dd
    };
    if r <= DP_MAX_RANK {
        match_dp(wt, &entry)
    } else {
        match_hungarian(wt, &entry)
    }
}

fn sign_choices(wt: WeylType) -> &'static [i8] {
    if wt.has_signs() {
        &[1, -1]
    } else {
        &[1]
    }
}

fn match_dp(wt: WeylType, entry: &dyn Fn(usize, usize, f64) -> f64) -> JetMatch {
    let r = wt.rank();
    let full = (1usize << r) - 1;
    let parity_matters = matches!(wt, WeylType::SignedPermD(_));
    // best[mask][parity]: minimal cost to fill the remaining slots, where
    // `mask` holds the sources already used and `parity` counts sign flips.
    let mut best = vec![[f64::INFINITY; 2]; 1 << r];
    best[full][0] = 0.0;
    best[full][1] = if parity_matters { f64::INFINITY } else { 0.0 };
    for mask in (0..full).rev() {
        let slot = mask.count_ones() as usize;
        for parity in 0..2 {
            let mut m = f64::INFINITY;
            for src in 0..r {
                if mask & (1 << src) != 0 {
                    continue;
                }
                for &s in sign_choices(wt) {
                    let np = parity ^ usize::from(s < 0);
                    let c = entry(slot, src, f64::from(s)) + best[mask | (1 << src)][np];
                    if c < m {
                        m = c;
                    }
                }
            }
            best[mask][parity] = m;
        }
    }
    let total = best[0][0];
    let tie = 1e-12 * (1.0 + total.abs());
    let mut mask = 0usize;
    let mut parity = 0usize;
    let mut sources = Vec::with_capacity(r);
    let mut signs = Vec::with_capacity(r);
    let mut ambiguous = false;
    for slot in 0..r {
        let target = best[mask][parity];
        let mut chosen: Option<(usize, i8)> = None;
        for src in 0..r {
            if mask & (1 << src) != 0 {
                continue;
            }
            for &s in sign_choices(wt) {
                let np = parity ^ usize::from(s < 0);
                let c = entry(slot, src, f64::from(s)) + best[mask | (1 << src)][np];
                if (c - target).abs() <= tie {
                    if chosen.is_none() {
                        chosen = Some((src, s));
                    } else {
                        ambiguous = true;
                    }
                }
            }
        }
        let (src, s) = chosen.expect("dynamic program lost its optimum");
        sources.push(src);
        signs.push(s);
        mask |= 1 << src;
        parity ^= usize::from(s < 0);
    }
    let mut perm = vec![0; r];
    for (slot, &src) in sources.iter().enumerate() {
        perm[src] = slot;
    }
    JetMatch {
        w: WeylElement {
            weyl_type: wt,
            perm,
            signs,
        },
        cost: total,
        ambiguous,
    }
}

fn match_hungarian(wt: WeylType, entry: &dyn Fn(usize, usize, f64) -> f64) -> JetMatch {
    let r = wt.rank();
    let mut cost = vec![vec![0.0; r]; r];
    let mut sign = vec![vec![1i8; r]; r];
    let mut sign_tie = vec![vec![false; r]; r];
    for slot in 0..r {
        for src in 0..r {
            let plus = entry(slot, src, 1.0);
            if wt.has_signs() {
                let minus = entry(slot, src, -1.0);
                sign_tie[slot][src] = (plus - minus).abs() <= 1e-12 * (1.0 + plus.abs());
                if minus < plus {
                    cost[slot][src] = minus;
                    sign[slot][src] = -1;
                    continue;
                }
            }
            cost[slot][src] = plus;
        }
    }
    let sources = hungarian(&cost);
    let mut signs: Vec<i8> = (0..r).map(|slot| sign[slot][sources[slot]]).collect();
    let mut total: f64 = (0..r).map(|slot| cost[slot][sources[slot]]).sum();
    if matches!(wt, WeylType::SignedPermD(_)) && signs.iter().product::<i8>() < 0 {
        // flip the sign whose change costs least
        let (slot, extra) = (0..r)
            .map(|slot| {
                let src = sources[slot];
                let alt = entry(slot, src, -f64::from(signs[slot]));
                (slot, alt - cost[slot][src])
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("rank > 0");
        signs[slot] = -signs[slot];
        total += extra;
    }
    let ambiguous = (0..r).any(|slot| sign_tie[slot][sources[slot]]);
    let mut perm = vec![0; r];
    for (slot, &src) in sources.iter().enumerate() {
        perm[src] = slot;
    }
    JetMatch {
        w: WeylElement {
            weyl_type: wt,
            perm,
            signs,
        },
        cost: total,
        ambiguous,
    }
}

/// Minimum-cost assignment (rows to columns) by the shortest augmenting path
/// method with potentials. Returns the column assigned to each row.
pub(crate) fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
