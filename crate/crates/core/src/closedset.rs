//! Structured closed subsets of `[0,1]`: points, intervals and convergent sequences.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::FanError;
use crate::pwl::PiecewiseLinearMap;
use crate::rational::{fmt_q, one, pow, q, to_f64, zero, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Terms lie above the limit.
    Above,
    /// Terms lie below the limit.
    Below,
}

impl Direction {
    fn sign(self) -> i64 {
        match self {
            Direction::Above => 1,
            Direction::Below => -1,
        }
    }
}

/// One building block of a closed set. Every sequence atom includes its limit(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Point(Q),
    Interval(Q, Q),
    /// `{limit ± offset·ratio^k : k ≥ 1} ∪ {limit}`.
    GeomSeq { limit: Q, offset: Q, ratio: Q, dir: Direction },
    /// `{limit ± scale/k : k ≥ start} ∪ {limit}`.
    HarSeq { limit: Q, scale: Q, dir: Direction, start: u64 },
    /// `{p_i : i ∈ ℤ} ∪ {lo, hi}` with `p_0 = (lo+hi)/2`, `p_i = hi − w·ratio^i`, `p_{−i} = lo + w·ratio^i`, `w = (hi−lo)/2`.
    BiSeq { lo: Q, hi: Q, ratio: Q },
}

impl Atom {
    pub fn geo(limit: Q, offset: Q, ratio: Q, dir: Direction) -> Self {
        Atom::GeomSeq { limit, offset, ratio, dir }
    }

    pub fn har(limit: Q, scale: Q, dir: Direction) -> Self {
        Atom::HarSeq { limit, scale, dir, start: 1 }
    }

    pub fn is_sequence(&self) -> bool {
        matches!(self, Atom::GeomSeq { .. } | Atom::HarSeq { .. } | Atom::BiSeq { .. })
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Atom::Point(_) => 0,
            Atom::Interval(..) => 1,
            Atom::GeomSeq { .. } => 2,
            Atom::HarSeq { .. } => 3,
            Atom::BiSeq { .. } => 4,
        }
    }

    pub fn validate(&self) -> Result<(), FanError> {
        let unit = |v: &Q| -> Result<(), FanError> {
            if v.is_negative() || *v > one() {
                Err(FanError::Range { value: fmt_q(v) })
            } else {
                Ok(())
            }
        };
        let ratio_ok = |r: &Q| -> Result<(), FanError> {
            if r.is_positive() && *r < one() {
                Ok(())
            } else {
                Err(FanError::InvalidAtom(format!("ratio {} not in (0,1)", fmt_q(r))))
            }
        };
        match self {
            Atom::Point(p) => unit(p),
            Atom::Interval(a, b) => {
                unit(a)?;
                unit(b)?;
                if a >= b {
                    return Err(FanError::InvalidAtom(format!("interval [{}, {}] is degenerate", fmt_q(a), fmt_q(b))));
                }
                Ok(())
            }
            Atom::GeomSeq { limit, offset, ratio, .. } => {
                unit(limit)?;
                ratio_ok(ratio)?;
                if !offset.is_positive() {
                    return Err(FanError::InvalidAtom("offset must be positive".into()));
                }
                unit(&self.far_term())
            }
            Atom::HarSeq { limit, scale, start, .. } => {
                unit(limit)?;
                if !scale.is_positive() || *start == 0 {
                    return Err(FanError::InvalidAtom("scale must be positive and start ≥ 1".into()));
                }
                unit(&self.far_term())
            }
            Atom::BiSeq { lo, hi, ratio } => {
                unit(lo)?;
                unit(hi)?;
                ratio_ok(ratio)?;
                if lo >= hi {
                    return Err(FanError::InvalidAtom("biseq needs lo < hi".into()));
                }
                Ok(())
            }
        }
    }

    /// First (farthest from the limit) term of a one-sided sequence.
    fn far_term(&self) -> Q {
        self.seq_term(1).unwrap_or_else(zero)
    }

    /// `k`-th term (`k ≥ 1`) of a one-sided sequence.
    pub fn seq_term(&self, k: u64) -> Option<Q> {
        let (limit, dir) = self.limit_dir()?;
        Some(limit + q(dir.sign(), 1) * self.seq_dist(k)?)
    }

    /// Distance of the `k`-th term from the limit.
    fn seq_dist(&self, k: u64) -> Option<Q> {
        match self {
            Atom::GeomSeq { offset, ratio, .. } => Some(offset * pow(ratio, k)),
            Atom::HarSeq { scale, start, .. } => Some(scale / Q::from_integer(BigInt::from(start + k - 1))),
            _ => None,
        }
    }

    fn limit_dir(&self) -> Option<(&Q, Direction)> {
        match self {
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => Some((limit, *dir)),
            _ => None,
        }
    }

    /// Smallest `k ≥ 1` whose term lies within distance `d` of the limit.
    fn first_index_within(&self, d: &Q) -> Option<u64> {
        if !d.is_positive() {
            return None;
        }
        match self {
            Atom::GeomSeq { offset, ratio, .. } => {
                let est = (to_f64(&(d / offset)).ln() / to_f64(ratio).ln()).ceil();
                let mut k = if est.is_finite() && est > 1.0 { est as u64 } else { 1 };
                while k > 1 && self.seq_dist(k - 1)? <= *d {
                    k -= 1;
                }
                while self.seq_dist(k)? > *d {
                    k += 1;
                }
                Some(k)
            }
            Atom::HarSeq { scale, start, .. } => {
                let t = scale / d;
                let c = ceil_q(&t).to_u64()?;
                Some(c.saturating_sub(*start).saturating_add(1).max(1))
            }
            _ => None,
        }
    }

    /// Index `k` with `seq_dist(k) == d`, if any.
    fn index_at_dist(&self, d: &Q) -> Option<u64> {
        let k = self.first_index_within(d)?;
        (self.seq_dist(k)? == *d).then_some(k)
    }

    pub fn biseq_term(&self, i: i64) -> Option<Q> {
        match self {
            Atom::BiSeq { lo, hi, ratio } => {
                let w = (hi - lo) / q(2, 1);
                Some(if i >= 0 { hi - &w * pow(ratio, i as u64) } else { lo + &w * pow(ratio, (-i) as u64) })
            }
            _ => None,
        }
    }

    /// Index `i` with `p_i == v` for a two-sided sequence.
    pub fn biseq_index(&self, v: &Q) -> Option<i64> {
        let Atom::BiSeq { lo, hi, ratio } = self else { return None };
        let w = (hi - lo) / q(2, 1);
        let mid = lo + &w;
        if *v == mid {
            return Some(0);
        }
        if v > &mid && v < hi {
            geo_exponent(&((hi - v) / &w), ratio).filter(|&j| j >= 1).map(|j| j as i64)
        } else if v > lo && v < &mid {
            geo_exponent(&((v - lo) / &w), ratio).filter(|&j| j >= 1).map(|j| -(j as i64))
        } else {
            None
        }
    }

    /// Largest `i` with `p_i ≤ a`; `None` when every term exceeds `a`.
    pub fn biseq_floor(&self, a: &Q) -> Option<i64> {
        let Atom::BiSeq { lo, hi, ratio } = self else { return None };
        if a <= lo {
            return None;
        }
        let w = (hi - lo) / q(2, 1);
        let lr = to_f64(ratio).ln();
        let est = if *a >= *hi {
            return None;
        } else if *a >= lo + &w {
            (to_f64(&((hi - a) / &w)).ln() / lr).floor()
        } else {
            -(to_f64(&((a - lo) / &w)).ln() / lr).ceil()
        };
        let mut i = if est.is_finite() { est.clamp(-1e6, 1e6) as i64 } else { 0 };
        while self.biseq_term(i)? > *a {
            i -= 1;
        }
        while self.biseq_term(i + 1)? <= *a {
            i += 1;
        }
        Some(i)
    }

    /// Smallest `i` with `p_i ≥ b`; `None` when every term lies below `b`.
    fn biseq_ceil(&self, b: &Q) -> Option<i64> {
        let Atom::BiSeq { lo, hi, .. } = self else { return None };
        if b >= hi {
            return None;
        }
        if b <= lo {
            return None;
        }
        match self.biseq_floor(b) {
            Some(i) if self.biseq_term(i)? == *b => Some(i),
            Some(i) => Some(i + 1),
            None => {
                let mut i = -1i64;
                while self.biseq_term(i - 1)? >= *b {
                    i -= 1;
                }
                Some(i)
            }
        }
    }

    pub fn inf(&self) -> Q {
        match self {
            Atom::Point(p) => p.clone(),
            Atom::Interval(a, _) => a.clone(),
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => match dir {
                Direction::Above => limit.clone(),
                Direction::Below => self.far_term(),
            },
            Atom::BiSeq { lo, .. } => lo.clone(),
        }
    }

    pub fn sup(&self) -> Q {
        match self {
            Atom::Point(p) => p.clone(),
            Atom::Interval(_, b) => b.clone(),
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => match dir {
                Direction::Above => self.far_term(),
                Direction::Below => limit.clone(),
            },
            Atom::BiSeq { hi, .. } => hi.clone(),
        }
    }

    pub fn contains(&self, v: &Q) -> bool {
        match self {
            Atom::Point(p) => p == v,
            Atom::Interval(a, b) => a <= v && v <= b,
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => {
                if v == limit {
                    return true;
                }
                let d = (v - limit) * q(dir.sign(), 1);
                d.is_positive() && self.index_at_dist(&d).is_some()
            }
            Atom::BiSeq { lo, hi, .. } => v == lo || v == hi || self.biseq_index(v).is_some(),
        }
    }

    /// True when `v` is a limit of other points of this atom.
    pub fn accumulates_at(&self, v: &Q) -> bool {
        match self {
            Atom::Point(_) => false,
            Atom::Interval(a, b) => a <= v && v <= b,
            Atom::GeomSeq { limit, .. } | Atom::HarSeq { limit, .. } => v == limit,
            Atom::BiSeq { lo, hi, .. } => v == lo || v == hi,
        }
    }

    /// Terms (not limits) lying in the closed range `[a, b]`; `None` when infinitely many.
    fn has_term_in(&self, a: &Q, b: &Q) -> bool {
        match self {
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => {
                let (dnear, dfar) = match dir {
                    Direction::Above => (a - limit, b - limit),
                    Direction::Below => (limit - b, limit - a),
                };
                if !dfar.is_positive() {
                    return false;
                }
                if !dnear.is_positive() {
                    return true;
                }
                match self.first_index_within(&dfar) {
                    Some(k) => self.seq_dist(k).is_some_and(|d| d >= dnear),
                    None => false,
                }
            }
            Atom::BiSeq { lo, hi, .. } => {
                if b <= lo || a >= hi {
                    return false;
                }
                if a <= lo || b >= hi {
                    return true;
                }
                // Interval strictly inside the hull: scan the terms near it.
                let mut i = 0i64;
                let mut up = self.biseq_term(0).unwrap();
                while &up < a {
                    i += 1;
                    up = self.biseq_term(i).unwrap();
                }
                let mut down = self.biseq_term(0).unwrap();
                let mut j = 0i64;
                while &down > b {
                    j -= 1;
                    down = self.biseq_term(j).unwrap();
                }
                (&up >= a && &up <= b) || (&down >= a && &down <= b)
            }
            _ => false,
        }
    }
}

fn ceil_q(t: &Q) -> BigInt {
    let (qt, r) = t.numer().div_rem(t.denom());
    if r.is_positive() {
        qt + 1
    } else {
        qt
    }
}

/// `j ≥ 0` with `ratio^j == t`, if any.
fn geo_exponent(t: &Q, ratio: &Q) -> Option<u64> {
    if !t.is_positive() || *t > one() {
        return None;
    }
    if t.is_one() {
        return Some(0);
    }
    let est = (to_f64(t).ln() / to_f64(ratio).ln()).round();
    let base = if est.is_finite() && est > 2.0 { est as u64 - 2 } else { 0 };
    let mut p = pow(ratio, base);
    for j in base..base + 5 {
        if p == *t {
            return Some(j);
        }
        if p < *t {
            return None;
        }
        p *= ratio;
    }
    None
}

/// Finite structured description of a closed subset of `[0,1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSetDesc {
    pub atoms: Vec<Atom>,
    pub canonical: bool,
}

impl ClosedSetDesc {
    pub fn raw(atoms: Vec<Atom>) -> Self {
        Self { atoms, canonical: false }
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new(), canonical: true }
    }

    pub fn points(values: &[Q]) -> Self {
        normalize(&Self::raw(values.iter().cloned().map(Atom::Point).collect())).expect("points are always valid")
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, v: &Q) -> bool {
        contains(self, v)
    }

    /// True when every atom is a point.
    pub fn is_finite(&self) -> bool {
        self.atoms.iter().all(|a| matches!(a, Atom::Point(_)))
    }
}

impl fmt::Display for ClosedSetDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "empty");
        }
        let dir = |d: &Direction| match d {
            Direction::Above => "above",
            Direction::Below => "below",
        };
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Point(p) => format!("pt({})", fmt_q(p)),
                Atom::Interval(x, y) => format!("iv({},{})", fmt_q(x), fmt_q(y)),
                Atom::GeomSeq { limit, offset, ratio, dir: d } => {
                    format!("geo({},{},{},{})", fmt_q(limit), fmt_q(offset), fmt_q(ratio), dir(d))
                }
                Atom::HarSeq { limit, scale, dir: d, start } => {
                    if *start == 1 {
                        format!("har({},{},{})", fmt_q(limit), fmt_q(scale), dir(d))
                    } else {
                        format!("har({},{},{},{})", fmt_q(limit), fmt_q(scale), dir(d), start)
                    }
                }
                Atom::BiSeq { lo, hi, ratio } => format!("biseq({},{},{})", fmt_q(lo), fmt_q(hi), fmt_q(ratio)),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Canonical form: merged intervals, absorbed points and sequences, atoms sorted by infimum.
pub fn normalize(desc: &ClosedSetDesc) -> Result<ClosedSetDesc, FanError> {
    for a in &desc.atoms {
        a.validate()?;
    }
    let mut intervals: Vec<(Q, Q)> = Vec::new();
    let mut points: Vec<Q> = Vec::new();
    let mut seqs: Vec<Atom> = Vec::new();
    for a in &desc.atoms {
        match a {
            Atom::Point(p) => points.push(p.clone()),
            Atom::Interval(x, y) => intervals.push((x.clone(), y.clone())),
            other => seqs.push(other.clone()),
        }
    }
    intervals.sort();
    let mut merged: Vec<(Q, Q)> = Vec::new();
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => merged.push((a, b)),
        }
    }
    let mut kept: Vec<Atom> = Vec::new();
    for s in seqs {
        if kept.contains(&s) {
            continue;
        }
        let (lo, hi) = (s.inf(), s.sup());
        if merged.iter().any(|(a, b)| *a <= lo && hi <= *b) {
            continue;
        }
        for (a, b) in &merged {
            if *b < lo || *a > hi {
                continue;
            }
            let touches_only_at_limit = match &s {
                Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => match dir {
                    Direction::Above => b == limit,
                    Direction::Below => a == limit,
                },
                Atom::BiSeq { lo: l, hi: h, .. } => b == l || a == h,
                _ => false,
            };
            if touches_only_at_limit {
                continue;
            }
            let limit_inside = match &s {
                Atom::GeomSeq { limit, .. } | Atom::HarSeq { limit, .. } => a <= limit && limit <= b,
                Atom::BiSeq { lo: l, hi: h, .. } => (a <= l && l <= b) || (a <= h && h <= b),
                _ => false,
            };
            if limit_inside || s.has_term_in(a, b) {
                return Err(FanError::Overlap(format!("interval [{}, {}] cuts through a sequence", fmt_q(a), fmt_q(b))));
            }
        }
        kept.push(s);
    }
    let mut atoms: Vec<Atom> = merged.into_iter().map(|(a, b)| Atom::Interval(a, b)).collect();
    atoms.extend(kept);
    let mut seen = BTreeSet::new();
    for p in points {
        if atoms.iter().any(|a| a.contains(&p)) || !seen.insert(p.clone()) {
            continue;
        }
        atoms.push(Atom::Point(p));
    }
    atoms.sort_by_key(|x| (x.inf(), x.sup(), x.kind_rank()));
    Ok(ClosedSetDesc { atoms, canonical: true })
}

pub fn contains(desc: &ClosedSetDesc, v: &Q) -> bool {
    desc.atoms.iter().any(|a| a.contains(v))
}

pub fn is_isolated(desc: &ClosedSetDesc, v: &Q) -> Result<bool, FanError> {
    if !contains(desc, v) {
        return Err(FanError::NotMember(fmt_q(v)));
    }
    Ok(!desc.atoms.iter().any(|a| a.accumulates_at(v)))
}

pub fn max_value(desc: &ClosedSetDesc) -> Result<Q, FanError> {
    desc.atoms.iter().map(|a| a.sup()).max().ok_or(FanError::EmptySet)
}

pub fn min_value(desc: &ClosedSetDesc) -> Result<Q, FanError> {
    desc.atoms.iter().map(|a| a.inf()).min().ok_or(FanError::EmptySet)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FanKind {
    SimpleNOd,
    CantorFan,
    LelekFan,
    CountableType,
    ProductType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfeasibleReason {
    /// Nonempty and contains neither 0 nor 1.
    NoEndpointRule,
    /// Contains 1 as a non-isolated point and is not `[0,1]`.
    OneNotIsolated,
    /// Contains 1 as an isolated point, omits 0, and is not `{1}`.
    CountUncountConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityVerdict {
    Feasible(FanKind),
    Infeasible(InfeasibleReason),
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityVerdict::Feasible(_))
    }

    pub fn kind(&self) -> Option<FanKind> {
        match self {
            FeasibilityVerdict::Feasible(k) => Some(*k),
            _ => None,
        }
    }

    pub fn reason(&self) -> Option<InfeasibleReason> {
        match self {
            FeasibilityVerdict::Infeasible(r) => Some(*r),
            _ => None,
        }
    }
}

pub fn is_unit_interval(desc: &ClosedSetDesc) -> bool {
    desc.atoms.len() == 1 && desc.atoms[0] == Atom::Interval(zero(), one())
}

pub fn is_singleton_one(desc: &ClosedSetDesc) -> bool {
    desc.atoms.len() == 1 && desc.atoms[0] == Atom::Point(one())
}

pub fn classify_feasibility(desc: &ClosedSetDesc) -> FeasibilityVerdict {
    use FeasibilityVerdict::*;
    if desc.is_empty() {
        return Feasible(FanKind::SimpleNOd);
    }
    if is_singleton_one(desc) {
        return Feasible(FanKind::CantorFan);
    }
    if is_unit_interval(desc) {
        return Feasible(FanKind::LelekFan);
    }
    let has0 = contains(desc, &zero());
    let has1 = contains(desc, &one());
    if !has0 && !has1 {
        return Infeasible(InfeasibleReason::NoEndpointRule);
    }
    if has1 && !is_isolated(desc, &one()).unwrap_or(false) {
        return Infeasible(InfeasibleReason::OneNotIsolated);
    }
    match (has0, has1) {
        (true, false) => Feasible(FanKind::CountableType),
        (true, true) => Feasible(FanKind::ProductType),
        _ => Infeasible(InfeasibleReason::CountUncountConflict),
    }
}

/// Largest element of the set that is `≤ a`.
pub fn sup_below(desc: &ClosedSetDesc, a: &Q) -> Option<Q> {
    desc.atoms.iter().filter_map(|atom| atom_sup_below(atom, a)).max()
}

/// Smallest element of the set that is `≥ b`.
pub fn inf_above(desc: &ClosedSetDesc, b: &Q) -> Option<Q> {
    desc.atoms.iter().filter_map(|atom| atom_inf_above(atom, b)).min()
}

/// `true` when the set meets `[a, b]`.
pub fn meets_range(desc: &ClosedSetDesc, a: &Q, b: &Q) -> bool {
    inf_above(desc, a).is_some_and(|v| v <= *b)
}

fn atom_sup_below(atom: &Atom, a: &Q) -> Option<Q> {
    if atom.inf() > *a {
        return None;
    }
    if atom.sup() <= *a {
        return Some(atom.sup());
    }
    match atom {
        Atom::Point(_) => None,
        Atom::Interval(..) => Some(a.clone()),
        Atom::GeomSeq { limit, dir: Direction::Above, .. } | Atom::HarSeq { limit, dir: Direction::Above, .. } => {
            // Terms decrease towards the limit; the first one within reach is the largest ≤ a.
            let k = atom.first_index_within(&(a - limit));
            Some(k.and_then(|k| atom.seq_term(k)).unwrap_or_else(|| limit.clone()))
        }
        Atom::GeomSeq { limit, dir: Direction::Below, .. } | Atom::HarSeq { limit, dir: Direction::Below, .. } => {
            // Terms increase towards the limit, which lies above a.
            let need = limit - a;
            let k = atom.first_index_within(&need)?;
            let k = if atom.seq_dist(k)? == need { k } else { k.checked_sub(1)? };
            if k == 0 {
                None
            } else {
                atom.seq_term(k)
            }
        }
        Atom::BiSeq { lo, .. } => Some(atom.biseq_floor(a).and_then(|i| atom.biseq_term(i)).unwrap_or_else(|| lo.clone())),
    }
}

fn atom_inf_above(atom: &Atom, b: &Q) -> Option<Q> {
    if atom.sup() < *b {
        return None;
    }
    if atom.inf() >= *b {
        return Some(atom.inf());
    }
    match atom {
        Atom::Point(_) => None,
        Atom::Interval(..) => Some(b.clone()),
        Atom::GeomSeq { limit, dir: Direction::Below, .. } | Atom::HarSeq { limit, dir: Direction::Below, .. } => {
            let k = atom.first_index_within(&(limit - b));
            Some(k.and_then(|k| atom.seq_term(k)).unwrap_or_else(|| limit.clone()))
        }
        Atom::GeomSeq { limit, dir: Direction::Above, .. } | Atom::HarSeq { limit, dir: Direction::Above, .. } => {
            let need = b - limit;
            let k = atom.first_index_within(&need)?;
            let k = if atom.seq_dist(k)? == need { k } else { k.checked_sub(1)? };
            if k == 0 {
                None
            } else {
                atom.seq_term(k)
            }
        }
        Atom::BiSeq { hi, .. } => Some(atom.biseq_ceil(b).and_then(|i| atom.biseq_term(i)).unwrap_or_else(|| hi.clone())),
    }
}

/// `true` for `{0}`.
pub fn is_finite_zero_only(desc: &ClosedSetDesc) -> bool {
    desc.atoms.len() == 1 && desc.atoms[0] == Atom::Point(zero())
}

/// Removes an isolated point from the set (used to pass from `X` to `X \ {1}`).
pub fn remove_isolated_point(desc: &ClosedSetDesc, v: &Q) -> Result<ClosedSetDesc, FanError> {
    if !is_isolated(desc, v)? {
        return Err(FanError::Argument(format!("{} is not isolated", fmt_q(v))));
    }
    let mut atoms = Vec::new();
    for a in &desc.atoms {
        if !a.contains(v) {
            atoms.push(a.clone());
            continue;
        }
        match a {
            Atom::Point(_) => {}
            Atom::GeomSeq { limit, offset, ratio, dir } => {
                let (lim, d) = (limit.clone(), *dir);
                let k = a.index_at_dist(&((v - limit) * q(d.sign(), 1))).unwrap_or(1);
                if k != 1 {
                    return Err(FanError::Argument("only the first term of a sequence can be removed".into()));
                }
                atoms.push(Atom::GeomSeq { limit: lim, offset: offset * ratio, ratio: ratio.clone(), dir: d });
            }
            Atom::HarSeq { limit, scale, dir, start } => {
                let k = a.index_at_dist(&((v - limit) * q(dir.sign(), 1))).unwrap_or(1);
                if k != 1 {
                    return Err(FanError::Argument("only the first term of a sequence can be removed".into()));
                }
                atoms.push(Atom::HarSeq { limit: limit.clone(), scale: scale.clone(), dir: *dir, start: start + 1 });
            }
            _ => return Err(FanError::Argument("point cannot be removed from this atom".into())),
        }
    }
    normalize(&ClosedSetDesc::raw(atoms))
}

/// Origin of one element of the dense enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenseSource {
    Point,
    IntervalDyadic { atom: usize },
    SeqTerm { atom: usize, k: u64 },
    BiTerm { atom: usize, i: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseEntry {
    pub value: Q,
    pub source: DenseSource,
}

fn interval_element(a: &Q, b: &Q, t: u64) -> Q {
    match t {
        0 => b.clone(),
        1 => a.clone(),
        _ => {
            let mut r = t - 2;
            let mut j = 1u32;
            while r >= 1u64 << (j - 1) {
                r -= 1u64 << (j - 1);
                j += 1;
            }
            let frac = Q::new(BigInt::from(2 * r + 1), BigInt::from(2u32).pow(j));
            a + (b - a) * frac
        }
    }
}

fn biseq_round_index(t: u64) -> i64 {
    if t == 0 {
        0
    } else if t % 2 == 1 {
        t.div_ceil(2) as i64
    } else {
        -((t / 2) as i64)
    }
}

/// First `count` elements of the countable dense subset `D ⊆ X \ {0}`.
///
/// Order: nonzero point atoms in descending order, then a round robin over the
/// infinite atoms (interval dyadics by depth, sequence terms by index).
/// Duplicates and zero are skipped. Returns fewer elements only when `D` is finite.
pub fn dense_prefix(desc: &ClosedSetDesc, count: usize) -> Vec<DenseEntry> {
    let mut out: Vec<DenseEntry> = Vec::new();
    let mut seen: BTreeSet<Q> = BTreeSet::new();
    let mut pts: Vec<Q> = desc
        .atoms
        .iter()
        .filter_map(|a| match a {
            Atom::Point(p) if !p.is_zero() => Some(p.clone()),
            _ => None,
        })
        .collect();
    pts.sort_by(|a, b| b.cmp(a));
    for p in pts {
        if out.len() >= count {
            return out;
        }
        if seen.insert(p.clone()) {
            out.push(DenseEntry { value: p, source: DenseSource::Point });
        }
    }
    let infinite: Vec<usize> = (0..desc.atoms.len()).filter(|&i| !matches!(desc.atoms[i], Atom::Point(_))).collect();
    if infinite.is_empty() {
        return out;
    }
    let mut t = 0u64;
    while out.len() < count {
        for &ai in &infinite {
            if out.len() >= count {
                break;
            }
            let atom = &desc.atoms[ai];
            let entry = match atom {
                Atom::Interval(a, b) => {
                    DenseEntry { value: interval_element(a, b, t), source: DenseSource::IntervalDyadic { atom: ai } }
                }
                Atom::GeomSeq { .. } | Atom::HarSeq { .. } => DenseEntry {
                    value: atom.seq_term(t + 1).unwrap(),
                    source: DenseSource::SeqTerm { atom: ai, k: t + 1 },
                },
                Atom::BiSeq { .. } => {
                    let i = biseq_round_index(t);
                    DenseEntry { value: atom.biseq_term(i).unwrap(), source: DenseSource::BiTerm { atom: ai, i } }
                }
                Atom::Point(_) => unreachable!(),
            };
            if !entry.value.is_zero() && seen.insert(entry.value.clone()) {
                out.push(entry);
            }
        }
        t += 1;
    }
    out
}

/// Position (1-based) in the dense enumeration of `y_n`.
///
/// Finite `D` of size `r`: `((n−1) mod r) + 1`. Infinite `D`: `(odd(n)+1)/2`
/// where `odd(n)` is the odd part of `n`, so `d_k` recurs at `(2k−1)·2^a`.
pub fn schedule_position(n: u64, finite_size: Option<usize>) -> usize {
    match finite_size {
        Some(r) => ((n - 1) % r as u64) as usize + 1,
        None => {
            let odd = n >> n.trailing_zeros();
            odd.div_ceil(2) as usize
        }
    }
}

/// Smallest `n` in the class `Y_k = {n : y_n = d_k}` scaled by `2^a` (infinite `D` only).
pub fn schedule_member(k: usize, a: u32) -> u64 {
    (2 * k as u64 - 1) << a
}

fn dense_size(desc: &ClosedSetDesc) -> Option<usize> {
    if desc.is_finite() {
        Some(desc.atoms.iter().filter(|a| !matches!(a, Atom::Point(p) if p.is_zero())).count())
    } else {
        None
    }
}

fn check_construction_hypothesis(desc: &ClosedSetDesc) -> Result<(), FanError> {
    if !contains(desc, &zero()) {
        return Err(FanError::Hypothesis("0 must belong to X".into()));
    }
    if contains(desc, &one()) {
        return Err(FanError::Hypothesis("1 must not belong to X".into()));
    }
    if desc.atoms.iter().all(|a| matches!(a, Atom::Point(p) if p.is_zero())) {
        return Err(FanError::Hypothesis("X must meet (0,1)".into()));
    }
    Ok(())
}

/// `y_1..y_count` for a set with a nonempty dense part; no hypothesis check.
pub fn y_values(desc: &ClosedSetDesc, count: usize) -> Vec<Q> {
    let size = dense_size(desc);
    let needed = (1..=count as u64).map(|n| schedule_position(n, size)).max().unwrap_or(0);
    let d = dense_prefix(desc, needed);
    (1..=count as u64).map(|n| d[schedule_position(n, size) - 1].value.clone()).collect()
}

/// `y_n` of the construction sequence; each element of `D` recurs infinitely often.
pub fn dense_sequence(desc: &ClosedSetDesc, n: u64) -> Result<Q, FanError> {
    check_construction_hypothesis(desc)?;
    if n == 0 {
        return Err(FanError::Argument("n must be positive".into()));
    }
    let size = dense_size(desc);
    let pos = schedule_position(n, size);
    Ok(dense_prefix(desc, pos)[pos - 1].value.clone())
}

pub fn dense_sequence_prefix(desc: &ClosedSetDesc, count: usize) -> Result<Vec<Q>, FanError> {
    check_construction_hypothesis(desc)?;
    Ok(y_values(desc, count))
}

/// 1-based position of a value in the dense enumeration (searching at most `limit` entries).
pub fn dense_position(desc: &ClosedSetDesc, v: &Q, limit: usize) -> Option<usize> {
    dense_prefix(desc, limit).iter().position(|e| e.value == *v).map(|i| i + 1)
}

/// Whether `D` is finite, with its size.
pub fn dense_finite_size(desc: &ClosedSetDesc) -> Option<usize> {
    dense_size(desc)
}

/// `X_A = {0} ∪ {1/n : n ≥ 1} ∪ ⋃_{n∈A} [a_n, b_n]` with `a_n, b_n` the quarter points of `(1/(n+1), 1/n)`.
pub fn x_family(a: &BTreeSet<u64>) -> ClosedSetDesc {
    let mut atoms = vec![Atom::har(zero(), one(), Direction::Above)];
    for &n in a {
        let (lo, hi) = x_family_interval(n);
        atoms.push(Atom::Interval(lo, hi));
    }
    normalize(&ClosedSetDesc::raw(atoms)).expect("x_family intervals sit in the gaps of 1/n")
}

/// `(a_n, b_n) = ((4n+1)/(4n(n+1)), (4n+3)/(4n(n+1)))`.
pub fn x_family_interval(n: u64) -> (Q, Q) {
    let n = n as i64;
    let den = 4 * n * (n + 1);
    (q(4 * n + 1, den), q(4 * n + 3, den))
}

// ---------------------------------------------------------------------------
// Equivalent embedding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum TailShape {
    Geo { offset: Q, ratio: Q, first: u64 },
    Har { scale: Q, first: u64 },
}

impl TailShape {
    fn dist(&self, i: u64) -> Q {
        match self {
            TailShape::Geo { offset, ratio, first } => offset * pow(ratio, first + i),
            TailShape::Har { scale, first } => scale / Q::from_integer(BigInt::from(first + i)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Elem {
    Point { v: Q, isolated: bool },
    Interval { lo: Q, hi: Q },
    Tail { limit: Q, dir: Direction, prefix: Vec<Q>, shape: TailShape },
}

impl Elem {
    fn key(&self) -> (Q, i8) {
        match self {
            Elem::Point { v, .. } => (v.clone(), 0),
            Elem::Interval { lo, .. } => (lo.clone(), 0),
            Elem::Tail { limit, dir: Direction::Above, .. } => (limit.clone(), 1),
            Elem::Tail { limit, dir: Direction::Below, .. } => (limit.clone(), -1),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Elem::Point { isolated: true, .. } => "isolated point",
            Elem::Point { isolated: false, .. } => "limit point",
            Elem::Interval { .. } => "interval",
            Elem::Tail { dir: Direction::Above, .. } => "sequence from above",
            Elem::Tail { dir: Direction::Below, .. } => "sequence from below",
        }
    }

    /// `i`-th term counted from the far end.
    fn tail_term(&self, i: usize) -> Option<Q> {
        let Elem::Tail { limit, dir, prefix, shape } = self else { return None };
        if i < prefix.len() {
            return Some(prefix[i].clone());
        }
        Some(limit + q(dir.sign(), 1) * shape.dist((i - prefix.len()) as u64))
    }
}

/// Order signature: membership and isolation of 0 and 1, then the linearized element kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSignature {
    pub has0: bool,
    pub has1: bool,
    pub kinds: Vec<&'static str>,
}

/// Range a witness is guaranteed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessScope {
    /// Maps the whole first set onto the second.
    Exact,
    /// Exact on endpoints, limits and the first `n` terms of every sequence.
    Prefix(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Yes { witness: PiecewiseLinearMap, scope: WitnessScope },
    No(String),
    Unknown(String),
}

const WITNESS_TERMS: usize = 16;
const MAX_EXPLICIT_TERMS: u64 = 10_000;

fn linearize(desc: &ClosedSetDesc) -> Result<Vec<Elem>, String> {
    let atoms = &desc.atoms;
    let interval_ends: BTreeSet<Q> =
        atoms.iter().filter_map(|a| if let Atom::Interval(x, y) = a { Some([x.clone(), y.clone()]) } else { None }).flatten().collect();
    let mut elems: Vec<Elem> = Vec::new();
    let mut limits: BTreeSet<Q> = BTreeSet::new();
    for (i, a) in atoms.iter().enumerate() {
        match a {
            Atom::Point(p) => elems.push(Elem::Point { v: p.clone(), isolated: true }),
            Atom::Interval(x, y) => elems.push(Elem::Interval { lo: x.clone(), hi: y.clone() }),
            Atom::GeomSeq { limit, dir, .. } | Atom::HarSeq { limit, dir, .. } => {
                let far = a.seq_term(1).unwrap();
                let mut cutoff: Option<Q> = None;
                for (j, z) in atoms.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let inside = match dir {
                        Direction::Above => z.inf() > *limit && z.inf() < far,
                        Direction::Below => z.sup() < *limit && z.sup() > far,
                    };
                    if !inside {
                        continue;
                    }
                    if matches!(z, Atom::BiSeq { .. }) {
                        return Err("two-sided sequence nested inside another sequence".into());
                    }
                    let edge = match dir {
                        Direction::Above => z.inf(),
                        Direction::Below => z.sup(),
                    };
                    cutoff = Some(match (cutoff, dir) {
                        (None, _) => edge,
                        (Some(c), Direction::Above) => c.min(edge),
                        (Some(c), Direction::Below) => c.max(edge),
                    });
                }
                let first_tail = match &cutoff {
                    None => 1,
                    Some(c) => {
                        let d = (c - limit) * q(dir.sign(), 1);
                        a.first_index_within(&d).ok_or("sequence cutoff not representable")?
                    }
                };
                if first_tail > MAX_EXPLICIT_TERMS {
                    return Err("too many sequence terms precede an interleaved atom".into());
                }
                for k in 1..first_tail {
                    elems.push(Elem::Point { v: a.seq_term(k).unwrap(), isolated: true });
                }
                let shape = match a {
                    Atom::GeomSeq { offset, ratio, .. } => {
                        TailShape::Geo { offset: offset.clone(), ratio: ratio.clone(), first: first_tail }
                    }
                    Atom::HarSeq { scale, start, .. } => TailShape::Har { scale: scale.clone(), first: start + first_tail - 1 },
                    _ => unreachable!(),
                };
                elems.push(Elem::Tail { limit: limit.clone(), dir: *dir, prefix: Vec::new(), shape });
                limits.insert(limit.clone());
            }
            Atom::BiSeq { lo, hi, ratio } => {
                if interval_ends.contains(lo) || interval_ends.contains(hi) {
                    return Err("two-sided sequence shares a limit with an interval".into());
                }
                if atoms.iter().enumerate().any(|(j, z)| j != i && z.sup() > *lo && z.inf() < *hi) {
                    return Err("atom nested inside a two-sided sequence".into());
                }
                let w = (hi - lo) / q(2, 1);
                elems.push(Elem::Tail {
                    limit: lo.clone(),
                    dir: Direction::Above,
                    prefix: Vec::new(),
                    shape: TailShape::Geo { offset: w.clone(), ratio: ratio.clone(), first: 0 },
                });
                elems.push(Elem::Tail {
                    limit: hi.clone(),
                    dir: Direction::Below,
                    prefix: Vec::new(),
                    shape: TailShape::Geo { offset: w, ratio: ratio.clone(), first: 1 },
                });
                limits.insert(lo.clone());
                limits.insert(hi.clone());
            }
        }
    }
    for l in limits {
        if !interval_ends.contains(&l) {
            elems.push(Elem::Point { v: l, isolated: false });
        }
    }
    elems.sort_by_key(|a| a.key());
    // Nothing may sit inside the hull of a tail.
    for (i, e) in elems.iter().enumerate() {
        if let Elem::Tail { limit, dir, .. } = e {
            let far = e.tail_term(0).unwrap();
            let (lo, hi) = match dir {
                Direction::Above => (limit.clone(), far),
                Direction::Below => (far, limit.clone()),
            };
            for (j, o) in elems.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (olo, ohi) = match o {
                    Elem::Point { v, .. } => (v.clone(), v.clone()),
                    Elem::Interval { lo, hi } => (lo.clone(), hi.clone()),
                    Elem::Tail { limit, dir, .. } => {
                        let f = o.tail_term(0).unwrap();
                        match dir {
                            Direction::Above => (limit.clone(), f),
                            Direction::Below => (f, limit.clone()),
                        }
                    }
                };
                let overlaps = ohi > lo && olo < hi;
                let touches_limit_only = (ohi == *limit && *dir == Direction::Above) || (olo == *limit && *dir == Direction::Below);
                if overlaps && !touches_limit_only {
                    return Err("interleaved sequences".into());
                }
            }
        }
    }
    // Absorb isolated points adjacent to the far end of a tail.
    let mut out: Vec<Elem> = Vec::new();
    let mut i = 0;
    while i < elems.len() {
        let e = elems[i].clone();
        match e {
            Elem::Tail { limit, dir: Direction::Above, mut prefix, shape } => {
                let mut extra = Vec::new();
                let mut j = i + 1;
                while let Some(Elem::Point { v, isolated: true }) = elems.get(j) {
                    extra.push(v.clone());
                    j += 1;
                }
                extra.reverse();
                extra.append(&mut prefix);
                out.push(Elem::Tail { limit, dir: Direction::Above, prefix: extra, shape });
                i = j;
            }
            Elem::Tail { limit, dir: Direction::Below, mut prefix, shape } => {
                let mut extra = Vec::new();
                while let Some(Elem::Point { isolated: true, .. }) = out.last() {
                    if let Some(Elem::Point { v, .. }) = out.pop() {
                        extra.push(v);
                    }
                }
                extra.reverse();
                extra.append(&mut prefix);
                out.push(Elem::Tail { limit, dir: Direction::Below, prefix: extra, shape });
                i += 1;
            }
            other => {
                out.push(other);
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Order signature of a canonical description, or the reason it falls outside the decidable fragment.
pub fn order_signature(desc: &ClosedSetDesc) -> Result<OrderSignature, String> {
    let elems = linearize(desc)?;
    Ok(OrderSignature {
        has0: contains(desc, &zero()),
        has1: contains(desc, &one()),
        kinds: elems.iter().map(|e| e.tag()).collect(),
    })
}

/// Decides whether an order-preserving homeomorphism of `[0,1]` carries `a` onto `b`.
///
/// Decidable fragment: descriptions whose two-sided sequences neither contain
/// other atoms nor share a limit with an interval, and whose one-sided
/// sequences are not interleaved with other infinite atoms.
pub fn equivalently_embedded(a: &ClosedSetDesc, b: &ClosedSetDesc) -> Equivalence {
    let ea = match linearize(a) {
        Ok(e) => e,
        Err(r) => return Equivalence::Unknown(format!("first set: {r}")),
    };
    let eb = match linearize(b) {
        Ok(e) => e,
        Err(r) => return Equivalence::Unknown(format!("second set: {r}")),
    };
    let (a0, b0) = (contains(a, &zero()), contains(b, &zero()));
    if a0 != b0 {
        return Equivalence::No("membership of 0".into());
    }
    let (a1, b1) = (contains(a, &one()), contains(b, &one()));
    if a1 != b1 {
        return Equivalence::No("membership of 1".into());
    }
    for (i, (x, y)) in ea.iter().zip(eb.iter()).enumerate() {
        if x.tag() != y.tag() {
            return Equivalence::No(format!("element {i}: {} vs {}", x.tag(), y.tag()));
        }
    }
    if ea.len() != eb.len() {
        return Equivalence::No(format!("element count {} vs {}", ea.len(), eb.len()));
    }
    let mut pts: Vec<(Q, Q)> = vec![(zero(), zero()), (one(), one())];
    let mut exact = true;
    for (x, y) in ea.iter().zip(eb.iter()) {
        match (x, y) {
            (Elem::Point { v: p, .. }, Elem::Point { v: r, .. }) => pts.push((p.clone(), r.clone())),
            (Elem::Interval { lo: l1, hi: h1 }, Elem::Interval { lo: l2, hi: h2 }) => {
                pts.push((l1.clone(), l2.clone()));
                pts.push((h1.clone(), h2.clone()));
            }
            (Elem::Tail { prefix: pa, shape: sa, .. }, Elem::Tail { prefix: pb, shape: sb, .. }) => {
                let n = pa.len().max(pb.len()) + WITNESS_TERMS;
                for k in 0..n {
                    pts.push((x.tail_term(k).unwrap(), y.tail_term(k).unwrap()));
                }
                let aligned = match (sa, sb) {
                    (TailShape::Geo { ratio: r1, .. }, TailShape::Geo { ratio: r2, .. }) => r1 == r2,
                    (TailShape::Har { first: f1, .. }, TailShape::Har { first: f2, .. }) => {
                        *f1 as i64 - pa.len() as i64 == *f2 as i64 - pb.len() as i64
                    }
                    _ => false,
                };
                exact &= aligned;
            }
            _ => unreachable!("tags already matched"),
        }
    }
    pts.sort();
    pts.dedup();
    match PiecewiseLinearMap::new(pts) {
        Ok(witness) => Equivalence::Yes {
            witness,
            scope: if exact { WitnessScope::Exact } else { WitnessScope::Prefix(WITNESS_TERMS) },
        },
        Err(e) => Equivalence::Unknown(format!("witness construction failed: {e}")),
    }
}

/// Endpoints, limits and the first `terms` terms of each atom (for witness checks and fuzzing).
pub fn sample_points(desc: &ClosedSetDesc, terms: usize) -> Vec<Q> {
    let mut out = Vec::new();
    for a in &desc.atoms {
        match a {
            Atom::Point(p) => out.push(p.clone()),
            Atom::Interval(x, y) => {
                out.push(x.clone());
                out.push(y.clone());
                out.push((x + y) / q(2, 1));
            }
            Atom::GeomSeq { limit, .. } | Atom::HarSeq { limit, .. } => {
                out.push(limit.clone());
                for k in 1..=terms as u64 {
                    out.push(a.seq_term(k).unwrap());
                }
            }
            Atom::BiSeq { lo, hi, .. } => {
                out.push(lo.clone());
                out.push(hi.clone());
                for i in -(terms as i64)..=(terms as i64) {
                    out.push(a.biseq_term(i).unwrap());
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        let chars: Vec<(usize, char)> = text.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        Self { chars, pos: 0, len: text.len() }
    }

    fn at(&self) -> usize {
        self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FanError> {
        Err(FanError::Parse { pos: self.at(), msg: msg.into() })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn expect(&mut self, c: char) -> Result<(), FanError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_alphabetic()) {
            s.push(c);
            self.pos += 1;
        }
        s
    }

    fn integer(&mut self) -> Result<BigInt, FanError> {
        let mut s = String::new();
        if self.peek() == Some('-') {
            s.push('-');
            self.pos += 1;
        }
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            s.push(c);
            self.pos += 1;
        }
        s.parse().or_else(|_| self.err("expected an integer"))
    }

    fn rational(&mut self) -> Result<Q, FanError> {
        let n = self.integer()?;
        if self.peek() == Some('/') {
            self.pos += 1;
            let at = self.at();
            let d = self.integer()?;
            if d.is_zero() || d.is_negative() {
                return Err(FanError::Parse { pos: at, msg: "denominator must be positive".into() });
            }
            Ok(Q::new(n, d))
        } else {
            Ok(Q::from_integer(n))
        }
    }

    fn direction(&mut self) -> Result<Direction, FanError> {
        match self.word().as_str() {
            "above" => Ok(Direction::Above),
            "below" => Ok(Direction::Below),
            _ => self.err("expected `above` or `below`"),
        }
    }

    fn term(&mut self) -> Result<Atom, FanError> {
        let start = self.at();
        let name = self.word();
        self.expect('(')?;
        let atom = match name.as_str() {
            "pt" => Atom::Point(self.rational()?),
            "iv" => {
                let a = self.rational()?;
                self.expect(',')?;
                Atom::Interval(a, self.rational()?)
            }
            "geo" => {
                let limit = self.rational()?;
                self.expect(',')?;
                let offset = self.rational()?;
                self.expect(',')?;
                let ratio = self.rational()?;
                self.expect(',')?;
                Atom::GeomSeq { limit, offset, ratio, dir: self.direction()? }
            }
            "har" => {
                let limit = self.rational()?;
                self.expect(',')?;
                let scale = self.rational()?;
                self.expect(',')?;
                let dir = self.direction()?;
                let mut start_idx = 1u64;
                if self.peek() == Some(',') {
                    self.pos += 1;
                    let k = self.integer()?;
                    start_idx = k.to_u64().filter(|&k| k >= 1).map_or_else(|| self.err("start index must be ≥ 1"), Ok)?;
                }
                Atom::HarSeq { limit, scale, dir, start: start_idx }
            }
            "biseq" => {
                let lo = self.rational()?;
                self.expect(',')?;
                let hi = self.rational()?;
                self.expect(',')?;
                Atom::BiSeq { lo, hi, ratio: self.rational()? }
            }
            "" => return self.err("expected a term"),
            other => return Err(FanError::Parse { pos: start, msg: format!("unknown term `{other}`") }),
        };
        self.expect(')')?;
        Ok(atom)
    }
}

/// Parses a set expression such as `pt(0) + har(0,1,above)`; `empty` denotes ∅.
pub fn parse_set_expr(text: &str) -> Result<ClosedSetDesc, FanError> {
    let mut p = Parser::new(text);
    if p.chars.iter().map(|c| c.1).collect::<String>() == "empty" {
        return Ok(ClosedSetDesc::empty());
    }
    let mut atoms = vec![p.term()?];
    while p.peek() == Some('+') {
        p.pos += 1;
        atoms.push(p.term()?);
    }
    if p.pos != p.chars.len() {
        return p.err("unexpected trailing input");
    }
    normalize(&ClosedSetDesc::raw(atoms))
}
