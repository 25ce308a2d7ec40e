//! Finite truncations of combs over the Cantor set.
//!
//! A comb is stored as its blades: one vertical segment `{x} × [0, tip]` per
//! Cantor left endpoint `x`. The base line `[0,1] × {0}` is implicit.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::closedset::{self, ClosedSetDesc};
use crate::error::FanError;
use crate::pwl::PiecewiseLinearMap;
use crate::rational::{fmt_q, from_ternary_digits, is_cantor_left_endpoint, one, ternary_digits, zero, Q};

/// `(n_1, …, n_k)`; the empty index is the leftmost blade at `x = 0`.
pub type BladeIndex = Vec<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BladeKind {
    Plain,
    TypeI,
    TypeII,
}

impl BladeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BladeKind::Plain => "plain",
            BladeKind::TypeI => "typeI",
            BladeKind::TypeII => "typeII",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(BladeKind::Plain),
            "typeI" => Some(BladeKind::TypeI),
            "typeII" => Some(BladeKind::TypeII),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    EpgConstruction,
    Product,
    Canonical,
    Maximal,
    Imported,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::EpgConstruction => "epg-construction",
            Provenance::Product => "product",
            Provenance::Canonical => "canonical",
            Provenance::Maximal => "maximal",
            Provenance::Imported => "imported",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "epg-construction" => Some(Provenance::EpgConstruction),
            "product" => Some(Provenance::Product),
            "canonical" => Some(Provenance::Canonical),
            "maximal" => Some(Provenance::Maximal),
            "imported" => Some(Provenance::Imported),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blade {
    pub index: BladeIndex,
    pub x: Q,
    pub tip: Q,
    /// Scale `s` of the trace: the trace of this blade is `φ_B[X]` with `φ_B(u) = s·u` below `max X`.
    pub trace_scale: Option<Q>,
    pub kind: BladeKind,
}

impl Blade {
    pub fn new(index: BladeIndex, x: Q, tip: Q, trace_scale: Option<Q>) -> Self {
        Self { index, x, tip, trace_scale, kind: BladeKind::Plain }
    }
}

/// Finite comb: blades sorted by `x`, addressable by index.
#[derive(Debug, Clone)]
pub struct Comb {
    blades: Vec<Blade>,
    by_index: HashMap<BladeIndex, usize>,
    pub source: Option<ClosedSetDesc>,
    pub depth: usize,
    pub branch: usize,
    pub provenance: Provenance,
}

impl PartialEq for Comb {
    fn eq(&self, other: &Self) -> bool {
        self.blades == other.blades
            && self.source == other.source
            && self.depth == other.depth
            && self.branch == other.branch
            && self.provenance == other.provenance
    }
}

impl Comb {
    /// Sorts blades by `x`. Duplicate indices keep the first occurrence in the lookup table.
    pub fn new(
        mut blades: Vec<Blade>,
        source: Option<ClosedSetDesc>,
        depth: usize,
        branch: usize,
        provenance: Provenance,
    ) -> Self {
        blades.sort_by(|a, b| a.x.cmp(&b.x).then_with(|| a.index.cmp(&b.index)));
        let mut by_index = HashMap::with_capacity(blades.len());
        for (i, b) in blades.iter().enumerate() {
            by_index.entry(b.index.clone()).or_insert(i);
        }
        Self { blades, by_index, source, depth, branch, provenance }
    }

    pub fn blades(&self) -> &[Blade] {
        &self.blades
    }

    pub fn len(&self) -> usize {
        self.blades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blades.is_empty()
    }

    pub fn blade(&self, index: &[u32]) -> Option<&Blade> {
        self.by_index.get(index).map(|&i| &self.blades[i])
    }

    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.by_index.get(index).copied()
    }

    pub fn blade_at_x(&self, x: &Q) -> Option<&Blade> {
        self.blades.binary_search_by(|b| b.x.cmp(x)).ok().map(|i| &self.blades[i])
    }

    /// Blades with `lo < x < hi` (strict), in increasing `x`.
    pub fn blades_in_open(&self, lo: &Q, hi: &Q) -> &[Blade] {
        let a = self.blades.partition_point(|b| b.x <= *lo);
        let b = self.blades.partition_point(|b| b.x < *hi);
        if a >= b {
            &[]
        } else {
            &self.blades[a..b]
        }
    }

    pub fn leftmost(&self) -> Option<&Blade> {
        self.blades.first()
    }

    /// Maximum of the source set used for `φ_B`; the isolated point 1 of a product source is excluded.
    pub fn source_max(&self) -> Result<Q, FanError> {
        let src = self.source.as_ref().ok_or_else(|| FanError::Metadata("no source set".into()))?;
        if src.is_empty() {
            return Ok(zero());
        }
        if self.provenance == Provenance::Product {
            let y = closedset::remove_isolated_point(src, &one())?;
            return Ok(closedset::max_value(&y).unwrap_or_else(|_| zero()));
        }
        closedset::max_value(src)
    }

    pub fn has_metadata(&self) -> bool {
        self.source.is_some() && self.blades.iter().all(|b| b.trace_scale.is_some())
    }
}

/// A point of the quotient fan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FanPoint {
    Top,
    OnBlade { index: BladeIndex, height: Q },
}

impl FanPoint {
    pub fn on(index: BladeIndex, height: Q) -> Self {
        FanPoint::OnBlade { index, height }
    }

    pub fn tip_of(c: &Comb, index: &[u32]) -> Option<Self> {
        c.blade(index).map(|b| FanPoint::OnBlade { index: b.index.clone(), height: b.tip.clone() })
    }

    /// Checks `0 < height ≤ tip` for the referenced blade.
    pub fn validate(&self, c: &Comb) -> Result<(), FanError> {
        match self {
            FanPoint::Top => Ok(()),
            FanPoint::OnBlade { index, height } => {
                let b = c.blade(index).ok_or_else(|| FanError::InvalidPoint(format!("no blade {index:?}")))?;
                if !height.is_positive() || *height > b.tip {
                    return Err(FanError::InvalidPoint(format!(
                        "height {} outside (0, {}] on blade {index:?}",
                        fmt_q(height),
                        fmt_q(&b.tip)
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Clause of the comb definition (or a stored-metadata constraint) that a comb violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Clause (1): the base row must be full; a blade with non-positive tip breaks the blade model.
    BaseRow(String),
    /// Clause (2): a blade sits off the Cantor set's left endpoints.
    OffCantor(String),
    /// Clause (3): level sets fail to nest.
    Nesting(String),
    /// Clause (4): at most two blades.
    TooFewBlades(usize),
    DuplicateX(String),
    TraceScale(String),
}

impl Violation {
    pub fn clause(&self) -> &'static str {
        match self {
            Violation::BaseRow(_) => "clause-1",
            Violation::OffCantor(_) => "clause-2",
            Violation::Nesting(_) => "clause-3",
            Violation::TooFewBlades(_) => "clause-4",
            Violation::DuplicateX(_) => "distinct-x",
            Violation::TraceScale(_) => "trace-scale",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BaseRow(s)
            | Violation::OffCantor(s)
            | Violation::Nesting(s)
            | Violation::DuplicateX(s)
            | Violation::TraceScale(s) => write!(f, "{}: {s}", self.clause()),
            Violation::TooFewBlades(n) => write!(f, "{}: only {n} blades", self.clause()),
        }
    }
}

pub fn validate_comb(c: &Comb) -> Vec<Violation> {
    let mut out = Vec::new();
    for b in c.blades() {
        if !b.tip.is_positive() || b.tip > one() {
            out.push(Violation::BaseRow(format!("blade {:?} has tip {} outside (0,1]", b.index, fmt_q(&b.tip))));
        }
        if !is_cantor_left_endpoint(&b.x) {
            out.push(Violation::OffCantor(format!("x = {} of blade {:?}", fmt_q(&b.x), b.index)));
        }
    }
    // Level sets {x : tip(x) ≥ y} nest automatically for a blade model;
    // a repeated x with differing tips would be the only way to break it.
    for w in c.blades().windows(2) {
        if w[0].x == w[1].x {
            out.push(Violation::DuplicateX(format!("{} at blades {:?} and {:?}", fmt_q(&w[0].x), w[0].index, w[1].index)));
            if w[0].tip != w[1].tip {
                out.push(Violation::Nesting(format!("two heights over x = {}", fmt_q(&w[0].x))));
            }
        }
    }
    if c.len() <= 2 {
        out.push(Violation::TooFewBlades(c.len()));
    }
    if let Ok(m) = c.source_max() {
        for b in c.blades() {
            if let Some(s) = &b.trace_scale {
                if s.is_negative() || (s * &m) > b.tip {
                    out.push(Violation::TraceScale(format!("blade {:?}: s·M exceeds the tip", b.index)));
                }
            }
        }
    }
    out
}

/// `x = 2·Σ_i 3^{−(n_1+…+n_i)}`.
pub fn index_to_x(index: &[u32]) -> Q {
    let total: u32 = index.iter().sum();
    let mut digits = vec![0u8; total as usize];
    let mut pos = 0usize;
    for &n in index {
        pos += n as usize;
        digits[pos - 1] = 2;
    }
    from_ternary_digits(&digits)
}

/// Inverse of [`index_to_x`]: gaps between the positions of the digit 2.
pub fn x_to_index(x: &Q) -> Option<BladeIndex> {
    let digits = ternary_digits(x)?;
    let mut out = Vec::new();
    let mut last = 0usize;
    for (i, &d) in digits.iter().enumerate() {
        match d {
            2 => {
                out.push((i + 1 - last) as u32);
                last = i + 1;
            }
            0 => {}
            _ => return None,
        }
    }
    Some(out)
}

/// Every left endpoint of the `2^d` depth-`d` Cantor cells, all tips 1.
pub fn maximal_comb(depth: usize) -> Comb {
    let mut blades = Vec::with_capacity(1 << depth);
    for word in 0u64..(1u64 << depth) {
        let digits: Vec<u8> = (0..depth).map(|i| if word >> (depth - 1 - i) & 1 == 1 { 2 } else { 0 }).collect();
        let x = from_ternary_digits(&digits);
        let index = x_to_index(&x).expect("digits are 0 or 2");
        blades.push(Blade::new(index, x, one(), Some(one())));
    }
    Comb::new(blades, Some(ClosedSetDesc::points(&[one()])), depth, 2, Provenance::Maximal)
}

/// `C_y = {x : tip(x) ≥ y}`.
pub fn level_set(c: &Comb, y: &Q) -> BTreeSet<Q> {
    c.blades().iter().filter(|b| b.tip >= *y).map(|b| b.x.clone()).collect()
}

/// `φ_B`: breakpoints `(0,0)`, `(M, s·M)`, `(1, tip)`.
pub fn phi_blade(c: &Comb, index: &[u32]) -> Result<PiecewiseLinearMap, FanError> {
    let b = c.blade(index).ok_or_else(|| FanError::Argument(format!("no blade {index:?}")))?;
    let s = b.trace_scale.clone().ok_or_else(|| FanError::Metadata(format!("blade {index:?} has no trace scale")))?;
    let m = c.source_max()?;
    phi_from_params(&m, &s, &b.tip)
}

pub fn phi_from_params(m: &Q, s: &Q, tip: &Q) -> Result<PiecewiseLinearMap, FanError> {
    let mut pts = vec![(zero(), zero())];
    if m.is_positive() && *m < one() {
        pts.push((m.clone(), s * m));
    }
    if m.is_one() && *s != *tip {
        return Err(FanError::Metadata("a source with maximum 1 needs s = tip".into()));
    }
    pts.push((one(), tip.clone()));
    PiecewiseLinearMap::new(pts)
}

pub fn tips(c: &Comb) -> BTreeSet<(Q, Q)> {
    c.blades().iter().map(|b| (b.x.clone(), b.tip.clone())).collect()
}

/// Largest tip among blades other than the leftmost one.
pub fn max_non_leftmost_tip(c: &Comb) -> Q {
    c.blades().iter().skip(1).map(|b| b.tip.clone()).max().unwrap_or_else(Q::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn maximal_combs() {
        let c1 = maximal_comb(1);
        let xs: Vec<Q> = c1.blades().iter().map(|b| b.x.clone()).collect();
        assert_eq!(xs, vec![q(0, 1), q(2, 3)]);
        let c2 = maximal_comb(2);
        let xs: Vec<Q> = c2.blades().iter().map(|b| b.x.clone()).collect();
        assert_eq!(xs, vec![q(0, 1), q(2, 9), q(2, 3), q(8, 9)]);
        assert_eq!(maximal_comb(3).len(), 8);
        assert!(validate_comb(&maximal_comb(3)).is_empty());
        assert_eq!(tips(&c1), [(q(0, 1), q(1, 1)), (q(2, 3), q(1, 1))].into_iter().collect());
    }

    #[test]
    fn index_encoding_round_trips() {
        for idx in [vec![], vec![1], vec![2], vec![1, 1], vec![1, 2], vec![3, 1, 4]] {
            assert_eq!(x_to_index(&index_to_x(&idx)).unwrap(), idx);
        }
        assert_eq!(index_to_x(&[1, 2]), q(2, 3) + q(2, 27));
    }

    #[test]
    fn violations_are_reported() {
        let two = Comb::new(
            vec![Blade::new(vec![], q(0, 1), q(1, 1), None), Blade::new(vec![1], q(2, 3), q(1, 2), None)],
            None,
            1,
            1,
            Provenance::Imported,
        );
        assert_eq!(validate_comb(&two).iter().map(|v| v.clause()).collect::<Vec<_>>(), vec!["clause-4"]);
        let dup = Comb::new(
            vec![
                Blade::new(vec![], q(0, 1), q(1, 1), None),
                Blade::new(vec![1], q(2, 3), q(1, 2), None),
                Blade::new(vec![9], q(2, 3), q(1, 2), None),
            ],
            None,
            1,
            1,
            Provenance::Imported,
        );
        assert!(validate_comb(&dup).iter().any(|v| v.clause() == "distinct-x"));
        let off = Comb::new(
            vec![
                Blade::new(vec![], q(0, 1), q(1, 1), None),
                Blade::new(vec![1], q(1, 3), q(1, 2), None),
                Blade::new(vec![2], q(2, 9), q(1, 2), None),
            ],
            None,
            1,
            1,
            Provenance::Imported,
        );
        assert!(validate_comb(&off).iter().any(|v| v.clause() == "clause-2"));
    }

    #[test]
    fn level_sets_of_maximal_comb() {
        let c = maximal_comb(2);
        assert_eq!(level_set(&c, &q(1, 1)).len(), 4);
    }

    #[test]
    fn fan_point_validation() {
        let c = maximal_comb(1);
        assert!(FanPoint::on(vec![1], q(1, 2)).validate(&c).is_ok());
        assert!(FanPoint::on(vec![1], q(0, 1)).validate(&c).is_err());
        assert!(FanPoint::on(vec![5], q(1, 2)).validate(&c).is_err());
    }
}
