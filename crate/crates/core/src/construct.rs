//! Explicit comb constructions: the EPG comb for countable-type sets, the
//! product with the Cantor set for sets containing an isolated 1, the four
//! canonical fans, and a 3D non-smooth model.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::closedset::{self, Atom, ClosedSetDesc, FanKind, FeasibilityVerdict};
use crate::comb::{index_to_x, maximal_comb, x_to_index, Blade, BladeIndex, BladeKind, Comb, Provenance};
use crate::error::FanError;
use crate::rational::{from_ternary_digits, one, pow, q, ternary_digits, third_pow, zero, Q};

/// Blade parameters as functions of the index: position, tip, trace scale and digit sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BladeParams {
    pub x: Q,
    pub tip: Q,
    pub scale: Q,
    pub digit_sum: u64,
}

/// Closed-form engine behind the EPG comb: `M` and the sequence `y_1, y_2, …`.
#[derive(Debug, Clone)]
pub struct EpgEngine {
    pub m: Q,
    ys: Vec<Q>,
    source: ClosedSetDesc,
}

impl EpgEngine {
    /// Engine for a countable-type set (`0 ∈ X`, `1 ∉ X`, `X ∩ (0,1) ≠ ∅`).
    pub fn new(x: &ClosedSetDesc, n: usize) -> Result<Self, FanError> {
        let m = closedset::max_value(x)?;
        let ys = closedset::dense_sequence_prefix(x, n)?;
        Ok(Self { m, ys, source: x.clone() })
    }

    /// Engine with `M = 1` over the dyadic enumeration of `(0,1]`.
    pub fn lelek(n: usize) -> Self {
        let src = ClosedSetDesc { atoms: vec![Atom::Interval(zero(), one())], canonical: true };
        let ys = closedset::y_values(&src, n);
        Self { m: one(), ys, source: src }
    }

    pub fn source(&self) -> &ClosedSetDesc {
        &self.source
    }

    /// `y_n`, extending the cached prefix when needed.
    pub fn y(&mut self, n: u32) -> Q {
        let n = n as usize;
        if n > self.ys.len() {
            self.ys = closedset::y_values(&self.source, n.max(2 * self.ys.len()));
        }
        self.ys[n - 1].clone()
    }

    pub fn ys(&self) -> &[Q] {
        &self.ys
    }

    /// Parameters of any index; works past the stored truncation.
    pub fn params(&mut self, index: &[u32]) -> BladeParams {
        let mut p = BladeParams { x: zero(), tip: one(), scale: one(), digit_sum: 0 };
        for &j in index {
            p = self.child(&p, j);
        }
        p
    }

    /// Child `j`: `tip = s·y_j`, `s' = tip·M^j`, `x' = x + 2·3^{−(S+j)}`.
    pub fn child(&mut self, parent: &BladeParams, j: u32) -> BladeParams {
        let tip = &parent.scale * self.y(j);
        let scale = &tip * pow(&self.m, j as u64);
        let digit_sum = parent.digit_sum + j as u64;
        let x = &parent.x + q(2, 1) * third_pow(digit_sum);
        BladeParams { x, tip, scale, digit_sum }
    }
}

/// All indices of length ≤ `depth` with entries in `1..=branch`, in depth-first order.
pub fn enumerate_indices(depth: usize, branch: usize) -> Vec<BladeIndex> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * branch);
        for idx in &frontier {
            for j in 1..=branch as u32 {
                let mut c: Vec<u32> = idx.clone();
                c.push(j);
                next.push(c);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn engine_comb(mut engine: EpgEngine, depth: usize, branch: usize, provenance: Provenance) -> Comb {
    let mut blades = Vec::new();
    let mut stack: Vec<(BladeIndex, BladeParams)> = vec![(Vec::new(), engine.params(&[]))];
    let mut powers = vec![one()];
    for _ in 0..branch {
        let last = powers.last().unwrap() * &engine.m;
        powers.push(last);
    }
    let ys: Vec<Q> = (1..=branch as u32).map(|j| engine.y(j)).collect();
    while let Some((idx, p)) = stack.pop() {
        if idx.len() < depth {
            for j in 1..=branch as u32 {
                let tip = &p.scale * &ys[j as usize - 1];
                let scale = &tip * &powers[j as usize];
                let digit_sum = p.digit_sum + j as u64;
                let x = &p.x + q(2, 1) * third_pow(digit_sum);
                let mut c = idx.clone();
                c.push(j);
                stack.push((c, BladeParams { x, tip, scale, digit_sum }));
            }
        }
        blades.push(Blade::new(idx, p.x, p.tip, Some(p.scale)));
    }
    Comb::new(blades, Some(engine.source), depth, branch, provenance)
}

/// The comb for a countable-type set, truncated to index length ≤ `depth` and entries ≤ `branch`.
pub fn build_epg_comb(x: &ClosedSetDesc, depth: usize, branch: usize) -> Result<Comb, FanError> {
    match closedset::classify_feasibility(x) {
        FeasibilityVerdict::Feasible(FanKind::CountableType) => {}
        other => return Err(FanError::Hypothesis(format!("set is not of countable type: {other:?}"))),
    }
    if closedset::is_finite_zero_only(x) {
        return Err(FanError::Hypothesis("X ∩ (0,1) is empty; use the star".into()));
    }
    if depth == 0 || branch == 0 {
        return Err(FanError::Argument("depth and branch must be positive".into()));
    }
    let engine = EpgEngine::new(x, branch)?;
    Ok(engine_comb(engine, depth, branch, Provenance::EpgConstruction))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalKind {
    Nod(usize),
    Star,
    Cantor,
    Lelek,
}

/// Simple `n`-od, star, Cantor fan or Lelek fan truncation.
pub fn build_canonical(kind: CanonicalKind, depth: usize, branch: usize) -> Result<Comb, FanError> {
    match kind {
        CanonicalKind::Nod(n) => {
            if n < 3 {
                return Err(FanError::Argument("a simple n-od needs n ≥ 3".into()));
            }
            let d = usize::BITS as usize - (n - 1).leading_zeros() as usize;
            let mut blades = Vec::new();
            for word in 0..n as u64 {
                let digits: Vec<u8> = (0..d).map(|i| if word >> (d - 1 - i) & 1 == 1 { 2 } else { 0 }).collect();
                let x = from_ternary_digits(&digits);
                let index = x_to_index(&x).expect("digits are 0 or 2");
                blades.push(Blade::new(index, x, one(), Some(zero())));
            }
            Ok(Comb::new(blades, Some(ClosedSetDesc::empty()), d, 2, Provenance::Canonical))
        }
        CanonicalKind::Star => {
            if branch < 2 {
                return Err(FanError::Argument("the star needs branch ≥ 2".into()));
            }
            Ok(star_comb(branch))
        }
        CanonicalKind::Cantor => {
            if depth == 0 {
                return Err(FanError::Argument("depth must be positive".into()));
            }
            let mut c = maximal_comb(depth);
            c.provenance = Provenance::Canonical;
            Ok(c)
        }
        CanonicalKind::Lelek => {
            if depth == 0 || branch == 0 {
                return Err(FanError::Argument("depth and branch must be positive".into()));
            }
            Ok(engine_comb(EpgEngine::lelek(branch), depth, branch, Provenance::Canonical))
        }
    }
}

/// Blade `j` at `2/3^j` with tip `2^{−j}` for `j ≤ branch`, plus the unit blade at 0.
fn star_comb(branch: usize) -> Comb {
    let mut blades = vec![Blade::new(Vec::new(), zero(), one(), Some(zero()))];
    for j in 1..=branch as u32 {
        blades.push(Blade::new(vec![j], index_to_x(&[j]), q(1, 1) / pow(&q(2, 1), j as u64), Some(zero())));
    }
    Comb::new(blades, Some(ClosedSetDesc::points(&[zero()])), 1, branch, Provenance::Canonical)
}

/// Comb for a set `X` with `0, 1 ∈ X` and 1 isolated: the comb for `Y = X \ {1}` times the Cantor set.
#[derive(Debug, Clone)]
pub struct ProductComb {
    pub base: Comb,
    pub cantor_depth: usize,
    pub source: ClosedSetDesc,
}

pub fn build_product(x: &ClosedSetDesc, depth: usize, branch: usize, cantor_depth: usize) -> Result<ProductComb, FanError> {
    match closedset::classify_feasibility(x) {
        FeasibilityVerdict::Feasible(FanKind::ProductType) => {}
        other => return Err(FanError::Hypothesis(format!("set is not of product type: {other:?}"))),
    }
    let y = closedset::remove_isolated_point(x, &one())?;
    let base = if closedset::is_finite_zero_only(&y) { star_comb(branch) } else { build_epg_comb(&y, depth, branch)? };
    Ok(ProductComb { base, cantor_depth, source: x.clone() })
}

/// Cantor point whose ternary digits interleave `base` (odd positions) and `word` (even positions).
pub fn interleave_x(base_x: &Q, word: &[u8]) -> Q {
    let b = ternary_digits(base_x).expect("base x is a ternary rational");
    let len = (2 * b.len()).saturating_sub(1).max(2 * word.len());
    let mut digits = vec![0u8; len];
    for (i, &d) in b.iter().enumerate() {
        digits[2 * i] = d;
    }
    for (i, &d) in word.iter().enumerate() {
        digits[2 * i + 1] = d;
    }
    from_ternary_digits(&digits)
}

/// Splits an interleaved Cantor point back into its base and word digit strings.
pub fn deinterleave_x(x: &Q) -> Option<(Q, Vec<u8>)> {
    let digits = ternary_digits(x)?;
    let base: Vec<u8> = digits.iter().step_by(2).copied().collect();
    let word: Vec<u8> = digits.iter().skip(1).step_by(2).copied().collect();
    Some((from_ternary_digits(&base), word))
}

/// `{0,2}`-word of length `d` for the binary number `w` (most significant digit first).
pub fn cantor_word(w: u64, d: usize) -> Vec<u8> {
    (0..d).map(|i| if w >> (d - 1 - i) & 1 == 1 { 2 } else { 0 }).collect()
}

/// Index of a product blade: the base index followed by `2^d + w`.
pub fn product_index(base: &[u32], w: u64, d: usize) -> BladeIndex {
    let mut idx = base.to_vec();
    idx.push(((1u64 << d) + w) as u32);
    idx
}

/// Recovers `(base index, w, d)` from a product index.
pub fn split_product_index(index: &[u32]) -> Option<(BladeIndex, u64, usize)> {
    let (&last, base) = index.split_last()?;
    if last == 0 {
        return None;
    }
    let d = (u32::BITS - 1 - last.leading_zeros()) as usize;
    Some((base.to_vec(), (last as u64) - (1u64 << d), d))
}

impl ProductComb {
    pub fn blade_count(&self) -> usize {
        self.base.len() << self.cantor_depth
    }

    pub fn product_blade(&self, base: &Blade, w: u64) -> Blade {
        let d = self.cantor_depth;
        Blade {
            index: product_index(&base.index, w, d),
            x: interleave_x(&base.x, &cantor_word(w, d)),
            tip: base.tip.clone(),
            trace_scale: base.trace_scale.clone(),
            kind: BladeKind::Plain,
        }
    }

    /// Inverse of [`ProductComb::flatten`] for `d ≥ 1`: reads the base from the word-0 blades.
    pub fn from_flat(c: &Comb) -> Result<ProductComb, FanError> {
        if c.provenance != Provenance::Product {
            return Err(FanError::Metadata("comb is not a product comb".into()));
        }
        let source = c.source.clone().ok_or_else(|| FanError::Metadata("product comb has no source set".into()))?;
        let y = closedset::remove_isolated_point(&source, &one())?;
        let mut cantor_depth = None;
        let mut blades = Vec::new();
        for b in c.blades() {
            let (base_index, w, d) = split_product_index(&b.index)
                .ok_or_else(|| FanError::Metadata(format!("blade {:?} is not a product index", b.index)))?;
            if *cantor_depth.get_or_insert(d) != d {
                return Err(FanError::Metadata("product blades disagree on the Cantor depth".into()));
            }
            if w != 0 {
                continue;
            }
            let (x, word) = deinterleave_x(&b.x).ok_or_else(|| FanError::Metadata(format!("blade {:?} has no ternary position", b.index)))?;
            if word.iter().any(|&digit| digit != 0) {
                return Err(FanError::Metadata(format!("blade {:?} is not the word-0 copy", b.index)));
            }
            blades.push(Blade { index: base_index, x, tip: b.tip.clone(), trace_scale: b.trace_scale.clone(), kind: BladeKind::Plain });
        }
        let provenance = if closedset::is_finite_zero_only(&y) { Provenance::Canonical } else { Provenance::EpgConstruction };
        let base = Comb::new(blades, Some(y), c.depth, c.branch, provenance);
        Ok(ProductComb { base, cantor_depth: cantor_depth.unwrap_or(0), source })
    }

    /// Plain comb with interleaved positions; `d = 0` gives the base itself.
    pub fn flatten(&self) -> Comb {
        if self.cantor_depth == 0 {
            return self.base.clone();
        }
        let mut blades = Vec::with_capacity(self.blade_count());
        for b in self.base.blades() {
            for w in 0..(1u64 << self.cantor_depth) {
                blades.push(self.product_blade(b, w));
            }
        }
        Comb::new(blades, Some(self.source.clone()), self.base.depth, self.base.branch, Provenance::Product)
    }
}

/// Binary `{0,2}`-words in breadth-first order: `0, 2, 00, 02, 20, 22, 000, …`.
pub fn basic_cell(n: usize) -> Vec<u8> {
    assert!(n >= 1);
    let mut depth = 1usize;
    let mut rem = n - 1;
    while rem >= 1 << depth {
        rem -= 1 << depth;
        depth += 1;
    }
    cantor_word(rem as u64, depth)
}

/// Places the digits of a Cantor point at the even offsets after `cell`; odd offsets are 0.
pub fn sheet_embed(cell: &[u8], x: &Q) -> Q {
    let inner = ternary_digits(x).expect("lelek x is a ternary rational");
    let mut digits = cell.to_vec();
    for d in inner {
        digits.push(0);
        digits.push(d);
    }
    from_ternary_digits(&digits)
}

/// Blade of a tilted sheet: up the vertical at `x` to height 1, then into the sheet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SheetBlade {
    pub x: Q,
    pub polyline: Vec<[Q; 3]>,
}

impl SheetBlade {
    /// Sheet height `e` of the far end.
    pub fn sheet_tip(&self, n: usize) -> Q {
        let last = self.polyline.last().expect("polyline is nonempty");
        &last[2] * Q::from_integer(BigInt::from(2 * n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sheet {
    pub n: usize,
    pub cell: Vec<u8>,
    pub blades: Vec<SheetBlade>,
}

impl Sheet {
    /// `(φ_n(x), 1 − y/2, y/(2n))` for a point at sheet height `y` over the attachment `x`.
    pub fn point(&self, x: &Q, y: &Q) -> [Q; 3] {
        let n = Q::from_integer(BigInt::from(self.n));
        [x.clone(), one() - y / q(2, 1), y / (q(2, 1) * n)]
    }

    pub fn cell_string(&self) -> String {
        self.cell.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialModel {
    pub base: Comb,
    pub sheets: Vec<Sheet>,
}

/// Maximal comb of depth `depth` with `m` tilted Lelek sheets in the top half.
pub fn build_nonsmooth_3d(m: usize, depth: usize, branch: usize) -> Result<SpatialModel, FanError> {
    if m == 0 {
        return Err(FanError::Argument("need at least one sheet".into()));
    }
    let lelek = build_canonical(CanonicalKind::Lelek, depth, branch)?;
    let mut sheets = Vec::with_capacity(m);
    let mut attachments = BTreeSet::new();
    for n in 1..=m {
        let cell = basic_cell(n);
        let nq = Q::from_integer(BigInt::from(n));
        let mut blades = Vec::with_capacity(lelek.len());
        for b in lelek.blades() {
            let x = sheet_embed(&cell, &b.x);
            attachments.insert(x.clone());
            let polyline = vec![
                [x.clone(), zero(), zero()],
                [x.clone(), one(), zero()],
                [x.clone(), one() - &b.tip / q(2, 1), &b.tip / (q(2, 1) * &nq)],
            ];
            blades.push(SheetBlade { x, polyline });
        }
        sheets.push(Sheet { n, cell, blades });
    }
    let base = maximal_comb(depth);
    let mut blades: Vec<Blade> = base.blades().to_vec();
    for b in &mut blades {
        b.kind = if attachments.contains(&b.x) { BladeKind::TypeII } else { BladeKind::TypeI };
    }
    let base = Comb::new(blades, base.source.clone(), base.depth, base.branch, Provenance::Maximal);
    Ok(SpatialModel { base, sheets })
}

/// `true` when `x`, relative to `cell`, has a nonzero digit at an odd offset (so it lies outside `K_n`).
pub fn outside_sheet_set(cell: &[u8], x: &Q) -> bool {
    let Some(mut digits) = ternary_digits(x) else { return true };
    if digits.len() < cell.len() {
        digits.resize(cell.len(), 0);
    }
    if digits[..cell.len()] != *cell {
        return true;
    }
    digits[cell.len()..].iter().enumerate().any(|(i, &d)| i % 2 == 0 && d != 0)
}

impl SpatialModel {
    pub fn sheet(&self, n: usize) -> Option<&Sheet> {
        self.sheets.get(n.checked_sub(1)?)
    }

    pub fn blade_count(&self) -> usize {
        self.base.len() + self.sheets.iter().map(|s| s.blades.len()).sum::<usize>()
    }
}

/// `true` for `X = {0}`, realized by the star.
pub fn is_star_source(x: &ClosedSetDesc) -> bool {
    closedset::is_finite_zero_only(x)
}

/// Dispatches on the feasibility kind: EPG comb, flattened product, or canonical fan.
pub fn build_for_set(x: &ClosedSetDesc, depth: usize, branch: usize, cantor_depth: usize) -> Result<Comb, FanError> {
    match closedset::classify_feasibility(x) {
        FeasibilityVerdict::Infeasible(r) => Err(FanError::Hypothesis(format!("no smooth fan realizes this set: {r:?}"))),
        FeasibilityVerdict::Feasible(kind) => match kind {
            FanKind::SimpleNOd => build_canonical(CanonicalKind::Nod(branch.max(3)), depth, branch),
            FanKind::CantorFan => build_canonical(CanonicalKind::Cantor, depth, branch),
            FanKind::LelekFan => build_canonical(CanonicalKind::Lelek, depth, branch),
            FanKind::CountableType if is_star_source(x) => build_canonical(CanonicalKind::Star, depth, branch),
            FanKind::CountableType => build_epg_comb(x, depth, branch),
            FanKind::ProductType => Ok(build_product(x, depth, branch, cantor_depth)?.flatten()),
        },
    }
}

/// Σ_{k=0}^{K} N^k.
pub fn expected_blade_count(depth: usize, branch: usize) -> usize {
    (0..=depth).map(|k| branch.pow(k as u32)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedset::parse_set_expr;
    use crate::comb::validate_comb;

    #[test]
    fn flattened_product_recovers_base() {
        for (expr, n) in [("pt(0)+pt(1/2)+pt(1)", 3), ("pt(0)+pt(1)", 4)] {
            let pc = build_product(&parse_set_expr(expr).unwrap(), 2, n, 2).unwrap();
            let back = ProductComb::from_flat(&pc.flatten()).unwrap();
            assert_eq!(back.base.blades(), pc.base.blades());
            assert_eq!(back.cantor_depth, 2);
            assert_eq!(back.flatten(), pc.flatten());
        }
    }

    fn x3() -> ClosedSetDesc {
        parse_set_expr("pt(0) + pt(1/2) + pt(3/4)").unwrap()
    }

    #[test]
    fn figure_blades_are_exact() {
        let c = build_epg_comb(&x3(), 2, 2).unwrap();
        let b1 = c.blade(&[1]).unwrap();
        assert_eq!((b1.x.clone(), b1.tip.clone()), (q(2, 3), q(3, 4)));
        assert_eq!(b1.trace_scale, Some(q(9, 16)));
        let b11 = c.blade(&[1, 1]).unwrap();
        assert_eq!((b11.x.clone(), b11.tip.clone()), (q(8, 9), q(27, 64)));
        let b12 = c.blade(&[1, 2]).unwrap();
        assert_eq!((b12.x.clone(), b12.tip.clone()), (q(2, 3) + q(2, 27), q(9, 32)));
        let b2 = c.blade(&[2]).unwrap();
        assert_eq!((b2.x.clone(), b2.tip.clone()), (q(2, 9), q(1, 2)));
    }

    #[test]
    fn blade_counts_and_validity() {
        let c = build_epg_comb(&x3(), 3, 4).unwrap();
        assert_eq!(c.len(), expected_blade_count(3, 4));
        assert!(validate_comb(&c).is_empty());
        assert!(build_epg_comb(&parse_set_expr("pt(1/2)").unwrap(), 2, 2).is_err());
    }

    #[test]
    fn engine_params_match_enumeration() {
        let c = build_epg_comb(&x3(), 3, 3).unwrap();
        let mut e = EpgEngine::new(&x3(), 3).unwrap();
        for b in c.blades() {
            let p = e.params(&b.index);
            assert_eq!(p.x, b.x);
            assert_eq!(p.tip, b.tip);
            assert_eq!(Some(p.scale), b.trace_scale);
        }
    }

    #[test]
    fn canonical_fans() {
        let nod = build_canonical(CanonicalKind::Nod(3), 1, 1).unwrap();
        assert_eq!(nod.len(), 3);
        assert!(nod.blades().iter().all(|b| b.tip == one()));
        let star = build_canonical(CanonicalKind::Star, 1, 4).unwrap();
        let tips: Vec<Q> = star.blades().iter().map(|b| b.tip.clone()).collect();
        assert_eq!(tips, vec![q(1, 1), q(1, 16), q(1, 8), q(1, 4), q(1, 2)]);
        assert_eq!(build_canonical(CanonicalKind::Cantor, 3, 1).unwrap().len(), 8);
        assert!(build_canonical(CanonicalKind::Nod(2), 1, 1).is_err());
        let lelek = build_canonical(CanonicalKind::Lelek, 2, 3).unwrap();
        assert!(validate_comb(&lelek).is_empty());
        assert!(lelek.blades().iter().all(|b| b.trace_scale.as_ref() == Some(&b.tip)));
    }

    #[test]
    fn product_shapes() {
        let x = parse_set_expr("pt(0) + pt(1)").unwrap();
        let p = build_product(&x, 2, 3, 1).unwrap();
        assert_eq!(p.base.len(), 4);
        assert_eq!(p.flatten().len(), 8);
        let x2 = parse_set_expr("pt(0) + pt(1/2) + pt(1)").unwrap();
        let p2 = build_product(&x2, 2, 3, 2).unwrap();
        assert_eq!(p2.flatten().len(), p2.base.len() * 4);
        assert!(validate_comb(&p2.flatten()).is_empty());
        let p0 = build_product(&x2, 2, 3, 0).unwrap();
        assert_eq!(p0.flatten(), p0.base);
    }

    #[test]
    fn interleaving_round_trips() {
        let bx = q(2, 3) + q(2, 27);
        let w = vec![2, 0, 2];
        let x = interleave_x(&bx, &w);
        let (b2, w2) = deinterleave_x(&x).unwrap();
        assert_eq!(b2, bx);
        assert_eq!(&w2[..3], &w[..]);
        assert_eq!(split_product_index(&product_index(&[1, 2], 5, 3)), Some((vec![1, 2], 5, 3)));
    }

    #[test]
    fn cells_in_breadth_first_order() {
        let cells: Vec<Vec<u8>> = (1..=7).map(basic_cell).collect();
        assert_eq!(cells, vec![vec![0], vec![2], vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2], vec![0, 0, 0]]);
    }

    #[test]
    fn spatial_model_coordinates() {
        let s = build_nonsmooth_3d(3, 2, 3).unwrap();
        for sheet in &s.sheets {
            let bound = q(1, 2 * sheet.n as i64);
            for b in &sheet.blades {
                let last = b.polyline.last().unwrap();
                assert!(last[2] <= bound);
                assert!(last[1] >= q(1, 2) && last[1] <= one());
                assert!(!outside_sheet_set(&sheet.cell, &b.x));
            }
        }
        assert!(s.base.blades().iter().any(|b| b.kind == BladeKind::TypeI));
        assert!(s.base.blades().iter().any(|b| b.kind == BladeKind::TypeII));
    }
}
