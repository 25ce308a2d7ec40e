//! Cell maps of the EPG comb: the self-similarity maps `h^k`, the endpoint
//! swap `H`, the vertical adjustment `h_0` and the blade shift of the even
//! partition scheme. Descriptors hold exact parameters; `apply` evaluates them.

use std::cell::RefCell;

use num_traits::{Signed, Zero};

use crate::closedset::{self, Atom, ClosedSetDesc, DenseSource};
use crate::comb::{phi_from_params, BladeIndex, Comb, FanPoint, Provenance};
use crate::construct::{BladeParams, EpgEngine};
use crate::error::FanError;
use crate::pwl::PiecewiseLinearMap;
use crate::rational::{fmt_q, one, pow, q, third_pow, zero, Q};

/// Engine reproducing the blade parameters of an EPG comb, including blades past its truncation.
pub fn engine_for(c: &Comb) -> Result<EpgEngine, FanError> {
    if c.provenance != Provenance::EpgConstruction {
        return Err(FanError::Metadata(format!("provenance {} has no cell maps", c.provenance.as_str())));
    }
    let src = c.source.as_ref().ok_or_else(|| FanError::Metadata("no source set".into()))?;
    EpgEngine::new(src, c.branch.max(1))
}

fn upper_branch(y: &Q, m_from: &Q, e_from: &Q, m_to: &Q, e_to: &Q) -> Q {
    m_to + (y - m_from) * (e_to - m_to) / (e_from - m_from)
}

/// `h^k` for the blade `index`: maps the cell `V^k` onto the whole comb.
///
/// Lower branch `(x, y) ↦ (3^S (x − x^k), y / s^k)`; on the blade above `m^k`,
/// `y ↦ M + (1 − M)(y − m^k)/(e^k − m^k)`. The tip goes to `(0, 1)`.
pub fn self_similar_map(c: &Comb, index: &[u32], p: (&Q, &Q)) -> Result<(Q, Q), FanError> {
    let mut engine = engine_for(c)?;
    let k = engine.params(index);
    let mm = engine.m.clone();
    let (x, y) = p;
    let width = third_pow(k.digit_sum);
    if x < &k.x || *x > &k.x + &width {
        return Err(FanError::Domain(format!("x = {} is outside U^k", fmt_q(x))));
    }
    let full = crate::comb::x_to_index(x).ok_or_else(|| FanError::Domain(format!("x = {} is not a blade position", fmt_q(x))))?;
    if !full.starts_with(index) {
        return Err(FanError::Domain(format!("blade {full:?} does not extend {index:?}")));
    }
    let here = engine.params(&full);
    if !y.is_positive() || *y > here.tip {
        return Err(FanError::Domain(format!("height {} is off blade {full:?}", fmt_q(y))));
    }
    let m_k = &k.scale * &mm;
    if full.len() == index.len() && *y > m_k {
        return Ok((zero(), upper_branch(y, &m_k, &k.tip, &mm, &one())));
    }
    if *y > m_k {
        return Err(FanError::Domain(format!("height {} exceeds m^k off the blade", fmt_q(y))));
    }
    Ok(((x - &k.x) / width, y / &k.scale))
}

/// Outcome of [`verify_tip_shift_identity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TipShiftReport {
    pub pass: bool,
    pub checked: usize,
    pub counterexample: Option<BladeIndex>,
}

/// Checks that `h^k` sends every stored tip in the cell of `k_index` to the stored tip of the tail index.
///
/// Uses the comb's stored coordinates (not recomputed ones) so corrupted data is caught.
pub fn verify_tip_shift_identity(c: &Comb, k_index: &[u32], depth_limit: usize) -> Result<TipShiftReport, FanError> {
    let src = c.source.as_ref().ok_or_else(|| FanError::Metadata("no source set".into()))?;
    let mm = closedset::max_value(src)?;
    let k = c.blade(k_index).ok_or_else(|| FanError::Argument(format!("no blade {k_index:?}")))?;
    let s = k.trace_scale.clone().ok_or_else(|| FanError::Metadata(format!("blade {k_index:?} has no trace scale")))?;
    let digit_sum: u64 = k_index.iter().map(|&j| j as u64).sum();
    let width = third_pow(digit_sum);
    let m_k = &s * &mm;
    let mut checked = 0;
    for b in c.blades() {
        if !b.index.starts_with(k_index) || b.index.len() > depth_limit {
            continue;
        }
        let tail = &b.index[k_index.len()..];
        let Some(target) = c.blade(tail) else { continue };
        checked += 1;
        let image = if tail.is_empty() {
            (&b.x - &k.x, upper_branch(&b.tip, &m_k, &k.tip, &mm, &one()))
        } else {
            ((&b.x - &k.x) / &width, &b.tip / &s)
        };
        if image.0 != target.x || image.1 != target.tip {
            return Ok(TipShiftReport { pass: false, checked, counterexample: Some(b.index.clone()) });
        }
    }
    Ok(TipShiftReport { pass: true, checked, counterexample: None })
}

/// `H = (h^{i2})^{-1} ∘ h^{i1}` on `W`, its inverse on `h[W]`, identity elsewhere.
///
/// `W` is the blade `i1` together with its descendants whose first extra entry is `≥ cut`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapDescriptor {
    pub i1: BladeIndex,
    pub i2: BladeIndex,
    pub cut: u32,
    pub m: Q,
    pub s1: Q,
    pub s2: Q,
    pub e1: Q,
    pub e2: Q,
    pub m1: Q,
    pub m2: Q,
}

pub fn endpoint_swap(c: &Comb, i1: &[u32], i2: &[u32]) -> Result<SwapDescriptor, FanError> {
    if i1 == i2 {
        return Err(FanError::Argument("endpoint swap needs two distinct blades".into()));
    }
    let required = i1.len().max(i2.len());
    if required > c.depth {
        return Err(FanError::CellOverlap { required });
    }
    if i1.iter().chain(i2).any(|&j| j == 0 || j as usize > c.branch) {
        return Err(FanError::Argument(format!("index entries must lie in 1..={}", c.branch)));
    }
    let mut engine = engine_for(c)?;
    let mm = engine.m.clone();
    let p1 = engine.params(i1);
    let p2 = engine.params(i2);
    let cut = if i1.len() == i2.len() { 1 } else { c.branch as u32 + 1 };
    Ok(SwapDescriptor {
        i1: i1.to_vec(),
        i2: i2.to_vec(),
        cut,
        m1: &p1.scale * &mm,
        m2: &p2.scale * &mm,
        m: mm,
        s1: p1.scale,
        s2: p2.scale,
        e1: p1.tip,
        e2: p2.tip,
    })
}

impl SwapDescriptor {
    fn carry(&self, index: &[u32], y: &Q, forward: bool) -> Option<FanPoint> {
        let (from, to, s_f, s_t, e_f, e_t, m_f, m_t) = if forward {
            (&self.i1, &self.i2, &self.s1, &self.s2, &self.e1, &self.e2, &self.m1, &self.m2)
        } else {
            (&self.i2, &self.i1, &self.s2, &self.s1, &self.e2, &self.e1, &self.m2, &self.m1)
        };
        let tail = index.strip_prefix(from.as_slice())?;
        if tail.first().is_some_and(|&j| j < self.cut) {
            return None;
        }
        let mut image = to.clone();
        image.extend_from_slice(tail);
        let h = if tail.is_empty() && y > m_f { upper_branch(y, m_f, e_f, m_t, e_t) } else { y * s_t / s_f };
        Some(FanPoint::on(image, h))
    }

    pub fn apply(&self, p: &FanPoint) -> FanPoint {
        match p {
            FanPoint::Top => FanPoint::Top,
            FanPoint::OnBlade { index, height } => self
                .carry(index, height, true)
                .or_else(|| self.carry(index, height, false))
                .unwrap_or_else(|| p.clone()),
        }
    }
}

/// `h_0 = bump(lo, y1 → y2, hi)` on the heights of a column around one blade.
///
/// The column is the blade plus its descendants whose first extra entry is `≥ cut`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustDescriptor {
    pub blade: BladeIndex,
    pub y1: Q,
    pub y2: Q,
    pub eps: Q,
    pub cut: u32,
    pub h0: PiecewiseLinearMap,
}

pub fn vertical_adjust(c: &Comb, blade: &[u32], y1: &Q, y2: &Q, eps: &Q) -> Result<AdjustDescriptor, FanError> {
    if !eps.is_positive() {
        return Err(FanError::Argument("eps must be positive".into()));
    }
    let b = c.blade(blade).ok_or_else(|| FanError::Argument(format!("no blade {blade:?}")))?;
    let mut engine = engine_for(c)?;
    let params = engine.params(blade);
    if y1 == y2 {
        return Ok(AdjustDescriptor {
            blade: blade.to_vec(),
            y1: y1.clone(),
            y2: y2.clone(),
            eps: eps.clone(),
            cut: c.branch as u32 + 1,
            h0: PiecewiseLinearMap::identity(),
        });
    }
    let lo = y1.min(y2) - eps;
    let hi = y1.max(y2) + eps;
    if !lo.is_positive() || hi >= b.tip {
        return Err(FanError::TraceCollision(format!(
            "[{}, {}] must lie strictly inside (0, {})",
            fmt_q(&lo),
            fmt_q(&hi),
            fmt_q(&b.tip)
        )));
    }
    let phi = phi_from_params(&engine.m, &params.scale, &params.tip)?;
    let (u_lo, u_hi) = (phi.inverse_eval(&lo)?, phi.inverse_eval(&hi)?);
    if closedset::meets_range(engine.source(), &u_lo, &u_hi) {
        return Err(FanError::TraceCollision(format!("trace meets [{}, {}]", fmt_q(&lo), fmt_q(&hi))));
    }
    let mut cut = 1u32;
    while &params.scale * pow(&engine.m, cut as u64 + 1) >= lo {
        cut += 1;
        if cut > 10_000 {
            return Err(FanError::TraceCollision("no column clears the interval".into()));
        }
    }
    for other in c.blades() {
        let Some(tail) = other.index.strip_prefix(blade) else { continue };
        if tail.first().is_some_and(|&j| j >= cut) && other.tip >= lo && other.tip <= hi {
            return Err(FanError::TraceCollision(format!("tip of {:?} lies in the interval", other.index)));
        }
    }
    Ok(AdjustDescriptor {
        blade: blade.to_vec(),
        y1: y1.clone(),
        y2: y2.clone(),
        eps: eps.clone(),
        cut,
        h0: PiecewiseLinearMap::bump(&lo, y1, y2, &hi)?,
    })
}

impl AdjustDescriptor {
    fn in_column(&self, index: &[u32]) -> bool {
        index.strip_prefix(self.blade.as_slice()).is_some_and(|t| t.first().is_none_or(|&j| j >= self.cut))
    }

    pub fn apply(&self, p: &FanPoint) -> FanPoint {
        match p {
            FanPoint::OnBlade { index, height } if self.in_column(index) => {
                FanPoint::on(index.clone(), self.h0.eval(height).expect("heights lie in [0,1]"))
            }
            _ => p.clone(),
        }
    }
}

/// Blade shift of the even scheme: moves `p_k` to `p_{k+j−i}` on the leftmost blade.
#[derive(Debug, Clone)]
pub struct ShiftDescriptor {
    pub i: i64,
    pub j: i64,
    pub window: i64,
    /// Leftmost-blade map; exact on `p_k` for `|k| ≤ window`, fixes `[a_1, 1]`.
    pub phi: PiecewiseLinearMap,
    /// `(n, ψ(n))` for `n ≤ branch`.
    pub psi: Vec<(u32, u32)>,
    /// Indices `n ≤ branch` whose image lies past the truncation.
    pub unmatched: Vec<u32>,
    biseq: Atom,
    source: ClosedSetDesc,
    engine: RefCell<EpgEngine>,
}

impl PartialEq for ShiftDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.i == other.i && self.j == other.j && self.window == other.window && self.source == other.source
    }
}

fn even_biseq(src: &ClosedSetDesc) -> Option<Atom> {
    src.atoms.iter().find(|a| matches!(a, Atom::BiSeq { lo, .. } if lo.is_zero())).cloned()
}

pub fn blade_shift(c: &Comb, i: i64, j: i64, window: i64) -> Result<ShiftDescriptor, FanError> {
    let engine = engine_for(c)?;
    let src = engine.source().clone();
    let biseq = even_biseq(&src).ok_or_else(|| FanError::Argument("source has no two-sided sequence at 0".into()))?;
    if i.abs() > window || j.abs() > window || (j - i).abs() > window {
        return Err(FanError::Window(format!("i = {i}, j = {j} with window {window}")));
    }
    let s = j - i;
    let a1 = biseq.sup();
    let mut pts = vec![(zero(), zero())];
    if s != 0 {
        for k in -window..=window {
            pts.push((biseq.biseq_term(k).unwrap(), biseq.biseq_term(k + s).unwrap()));
        }
    }
    pts.push((a1.clone(), a1));
    pts.push((one(), one()));
    pts.dedup();
    let phi = PiecewiseLinearMap::new(pts)?;
    let mut d = ShiftDescriptor {
        i,
        j,
        window,
        phi,
        psi: Vec::new(),
        unmatched: Vec::new(),
        biseq,
        source: src,
        engine: RefCell::new(engine),
    };
    for n in 1..=c.branch as u32 {
        let t = d.psi_of(n);
        if t as usize > c.branch {
            d.unmatched.push(n);
        }
        d.psi.push((n, t));
    }
    Ok(d)
}

/// Continuity measurements of a blade shift at the leftmost blade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuityReport {
    /// Blades `n ∈ Y_1` used as scales.
    pub scales: Vec<u32>,
    /// Max-norm distance of `h(z_n)` from `(0, φ(y))` over the targets, per scale.
    pub maxima: Vec<Q>,
    pub halving: bool,
}

impl ShiftDescriptor {
    pub fn shift(&self) -> i64 {
        self.j - self.i
    }

    /// `ψ(n)`: `(2k−1)·2^a ↦ (2k'−1)·2^a` where `d_{k'} = p_{t+s}` if `d_k = p_t`.
    pub fn psi_of(&self, n: u32) -> u32 {
        let s = self.shift();
        if s == 0 {
            return n;
        }
        let a = n.trailing_zeros();
        let k = closedset::schedule_position(n as u64, None);
        let prefix = closedset::dense_prefix(&self.source, k);
        let entry = &prefix[k - 1];
        let t = match entry.source {
            DenseSource::BiTerm { i, .. } if entry.value == self.biseq.biseq_term(i).unwrap() => i,
            _ => return n,
        };
        let target = self.biseq.biseq_term(t + s).unwrap();
        let limit = self.source.atoms.len() + 2 * (t + s).unsigned_abs() as usize + 2;
        let k2 = closedset::dense_position(&self.source, &target, limit).expect("every p_i is enumerated");
        ((2 * k2 as u32) - 1) << a
    }

    fn blade1(&self, n: u32) -> (BladeParams, Q, Q) {
        let mut e = self.engine.borrow_mut();
        let p = e.params(&[n]);
        let yn = e.y(n);
        let mn = &p.scale * &e.m;
        (p, yn, mn)
    }

    /// `ℓ_n(y) = y_n (y − m_n)/(y_n − m_n)` on the upper segment of blade `(n)`.
    fn ell(&self, n: u32, y: &Q) -> Q {
        let (_, yn, mn) = self.blade1(n);
        &yn * (y - &mn) / (&yn - &mn)
    }

    fn ell_inv(&self, n: u32, v: &Q) -> Q {
        let (_, yn, mn) = self.blade1(n);
        &mn + v * (&yn - &mn) / &yn
    }

    pub fn apply(&self, p: &FanPoint) -> FanPoint {
        let FanPoint::OnBlade { index, height } = p else { return FanPoint::Top };
        if self.shift() == 0 {
            return p.clone();
        }
        let Some((&n, tail)) = index.split_first() else {
            return FanPoint::on(Vec::new(), self.phi.eval(height).expect("heights lie in [0,1]"));
        };
        let t = self.psi_of(n);
        let (pn, _, mn) = self.blade1(n);
        let mut image = vec![t];
        image.extend_from_slice(tail);
        if tail.is_empty() && *height > mn {
            let v = self.phi.eval(&self.ell(n, height)).expect("ℓ_n lands in [0,1]");
            return FanPoint::on(image, self.ell_inv(t, &v));
        }
        let (pt, _, _) = self.blade1(t);
        FanPoint::on(image, height * &pt.scale / &pn.scale)
    }

    /// Images of `z_n = (x_(n), ℓ_n^{-1}(y))` for `n ∈ {1, 2, 4, …}` and targets `y ≤ d_1`.
    pub fn continuity(&self, scales: usize) -> ContinuityReport {
        let p0 = self.biseq.biseq_term(0).unwrap();
        let mut targets = Vec::new();
        for k in 0..4 {
            let a = self.biseq.biseq_term(-k).unwrap();
            let b = self.biseq.biseq_term(-k - 1).unwrap();
            targets.push((&a + &b) / q(2, 1));
            targets.push(a);
        }
        targets.retain(|y| *y <= p0);
        let mut ns = Vec::new();
        let mut maxima = Vec::new();
        for a in 0..scales as u32 {
            let n = 1u32 << a;
            let t = self.psi_of(n);
            let x = q(2, 1) * third_pow(t as u64);
            let mut worst = zero();
            for y in &targets {
                let fy = self.phi.eval(y).expect("targets lie in [0,1]");
                let hy = self.ell_inv(t, &fy);
                let d = (&hy - &fy).abs().max(x.clone());
                worst = worst.max(d);
            }
            ns.push(n);
            maxima.push(worst);
        }
        let halving = maxima.windows(2).all(|w| w[1].clone() * q(2, 1) <= w[0]);
        ContinuityReport { scales: ns, maxima, halving }
    }
}

/// Any of the cell maps, evaluated uniformly.
#[derive(Debug, Clone, PartialEq)]
pub enum CellMapDescriptor {
    EndpointSwap(SwapDescriptor),
    VerticalAdjust(AdjustDescriptor),
    BladeShift(ShiftDescriptor),
}

impl CellMapDescriptor {
    pub fn kind(&self) -> &'static str {
        match self {
            CellMapDescriptor::EndpointSwap(_) => "endpoint_swap",
            CellMapDescriptor::VerticalAdjust(_) => "vertical_adjust",
            CellMapDescriptor::BladeShift(_) => "blade_shift",
        }
    }

    pub fn apply(&self, p: &FanPoint) -> FanPoint {
        match self {
            CellMapDescriptor::EndpointSwap(d) => d.apply(p),
            CellMapDescriptor::VerticalAdjust(d) => d.apply(p),
            CellMapDescriptor::BladeShift(d) => d.apply(p),
        }
    }

    /// Exact parameters as `(name, value)` pairs for serialization.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        let idx = |i: &[u32]| format!("{i:?}");
        match self {
            CellMapDescriptor::EndpointSwap(d) => vec![
                ("idx1", idx(&d.i1)),
                ("idx2", idx(&d.i2)),
                ("cut", d.cut.to_string()),
                ("s1", fmt_q(&d.s1)),
                ("s2", fmt_q(&d.s2)),
                ("e1", fmt_q(&d.e1)),
                ("e2", fmt_q(&d.e2)),
                ("m1", fmt_q(&d.m1)),
                ("m2", fmt_q(&d.m2)),
            ],
            CellMapDescriptor::VerticalAdjust(d) => vec![
                ("blade", idx(&d.blade)),
                ("y1", fmt_q(&d.y1)),
                ("y2", fmt_q(&d.y2)),
                ("eps", fmt_q(&d.eps)),
                ("cut", d.cut.to_string()),
            ],
            CellMapDescriptor::BladeShift(d) => vec![
                ("i", d.i.to_string()),
                ("j", d.j.to_string()),
                ("window", d.window.to_string()),
                ("unmatched", format!("{:?}", d.unmatched)),
            ],
        }
    }
}

/// A composition of cell maps, applied left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recipe {
    pub steps: Vec<CellMapDescriptor>,
}

impl Recipe {
    pub fn apply(&self, p: &FanPoint) -> FanPoint {
        self.steps.iter().fold(p.clone(), |acc, d| d.apply(&acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedset::parse_set_expr;
    use crate::construct::build_epg_comb;

    fn x3() -> ClosedSetDesc {
        parse_set_expr("pt(0)+pt(1/2)+pt(3/4)").unwrap()
    }

    fn even(window_k: usize, n: usize) -> Comb {
        build_epg_comb(&parse_set_expr("biseq(0,1/2,1/2)").unwrap(), window_k, n).unwrap()
    }

    #[test]
    fn self_similar_examples() {
        let c = build_epg_comb(&x3(), 3, 4).unwrap();
        let tip11 = c.blade(&[1, 1]).unwrap();
        assert_eq!((tip11.x.clone(), tip11.tip.clone()), (q(8, 9), q(27, 64)));
        assert_eq!(self_similar_map(&c, &[1], (&q(8, 9), &q(27, 64))).unwrap(), (q(2, 3), q(3, 4)));
        assert_eq!(self_similar_map(&c, &[1], (&q(2, 3), &q(27, 64))).unwrap(), (zero(), q(3, 4)));
        assert_eq!(self_similar_map(&c, &[1], (&q(2, 3), &q(3, 4))).unwrap(), (zero(), one()));
        assert!(matches!(self_similar_map(&c, &[1], (&q(2, 9), &q(1, 8))), Err(FanError::Domain(_))));
    }

    #[test]
    fn seam_branches_agree() {
        let c = build_epg_comb(&x3(), 3, 4).unwrap();
        let mut e = engine_for(&c).unwrap();
        for idx in [vec![1], vec![2, 1], vec![3, 2]] {
            let p = e.params(&idx);
            let m = &p.scale * &e.m;
            let lower = &m / &p.scale;
            let upper = upper_branch(&m, &m, &p.tip, &e.m, &one());
            assert_eq!(lower, upper);
        }
    }

    #[test]
    fn tip_shift_identity_and_fault() {
        let c = build_epg_comb(&x3(), 4, 5).unwrap();
        assert!(verify_tip_shift_identity(&c, &[1], 4).unwrap().pass);
        let c3 = build_epg_comb(&x3(), 3, 4).unwrap();
        assert!(verify_tip_shift_identity(&c3, &[2], 3).unwrap().pass);
        let mut blades = c.blades().to_vec();
        let pos = blades.iter().position(|b| b.index == vec![1, 2, 1]).unwrap();
        blades[pos].tip += q(1, 1000);
        let bad = Comb::new(blades, c.source.clone(), c.depth, c.branch, c.provenance);
        let r = verify_tip_shift_identity(&bad, &[1], 4).unwrap();
        assert!(!r.pass);
        assert_eq!(r.counterexample, Some(vec![1, 2, 1]));
    }

    fn tip_points(c: &Comb) -> Vec<FanPoint> {
        c.blades().iter().map(|b| FanPoint::on(b.index.clone(), b.tip.clone())).collect()
    }

    #[test]
    fn swap_maps_children_and_is_involution() {
        let c = build_epg_comb(&x3(), 3, 4).unwrap();
        let h = endpoint_swap(&c, &[1], &[2]).unwrap();
        for j in 1..=4 {
            let img = h.apply(&FanPoint::tip_of(&c, &[1, j]).unwrap());
            assert_eq!(img, FanPoint::tip_of(&c, &[2, j]).unwrap());
        }
        let tips = tip_points(&c);
        let mut images: Vec<FanPoint> = tips.iter().map(|p| h.apply(p)).collect();
        for (p, i) in tips.iter().zip(&images) {
            assert_eq!(&h.apply(i), p);
        }
        let mut sorted = tips.clone();
        let key = |p: &FanPoint| format!("{p:?}");
        images.sort_by_key(key);
        sorted.sort_by_key(key);
        assert_eq!(images, sorted);
        assert!(endpoint_swap(&c, &[1], &[1]).is_err());
        assert_eq!(endpoint_swap(&c, &[1], &[1, 1, 1, 1]), Err(FanError::CellOverlap { required: 4 }));
    }

    #[test]
    fn swap_across_lengths_is_bijective() {
        let c = build_epg_comb(&x3(), 3, 4).unwrap();
        for (a, b) in [(vec![], vec![2, 3]), (vec![1], vec![1, 3]), (vec![3, 1], vec![2])] {
            let h = endpoint_swap(&c, &a, &b).unwrap();
            let tips = tip_points(&c);
            let key = |p: &FanPoint| format!("{p:?}");
            let mut images: Vec<String> = tips.iter().map(|p| key(&h.apply(p))).collect();
            let mut orig: Vec<String> = tips.iter().map(key).collect();
            images.sort();
            orig.sort();
            assert_eq!(images, orig, "{a:?} {b:?}");
        }
    }

    #[test]
    fn vertical_adjust_cases() {
        let c = build_epg_comb(&parse_set_expr("pt(0)+pt(1/2)").unwrap(), 3, 4).unwrap();
        let d = vertical_adjust(&c, &[], &q(3, 5), &q(4, 5), &q(1, 20)).unwrap();
        assert_eq!(d.apply(&FanPoint::on(vec![], q(3, 5))), FanPoint::on(vec![], q(4, 5)));
        assert_eq!(d.apply(&FanPoint::on(vec![], q(1, 2))), FanPoint::on(vec![], q(1, 2)));
        let id = vertical_adjust(&c, &[], &q(3, 5), &q(3, 5), &q(1, 20)).unwrap();
        assert!(id.h0.is_identity());
        assert!(matches!(
            vertical_adjust(&c, &[], &q(2, 5), &q(3, 5), &q(1, 100)),
            Err(FanError::TraceCollision(_))
        ));
    }

    #[test]
    fn blade_shift_moves_p0_to_p1() {
        let c = even(3, 10);
        let d = blade_shift(&c, 0, 1, 6).unwrap();
        let bi = even_biseq(c.source.as_ref().unwrap()).unwrap();
        let p0 = bi.biseq_term(0).unwrap();
        let p1 = bi.biseq_term(1).unwrap();
        assert_eq!(d.apply(&FanPoint::on(vec![], p0)), FanPoint::on(vec![], p1));
        assert_eq!(d.apply(&FanPoint::on(vec![], q(3, 4))), FanPoint::on(vec![], q(3, 4)));
        let id = blade_shift(&c, 2, 2, 6).unwrap();
        assert_eq!(id.apply(&FanPoint::on(vec![1], q(1, 9))), FanPoint::on(vec![1], q(1, 9)));
        assert!(matches!(blade_shift(&c, -4, 4, 6), Err(FanError::Window(_))));
    }

    #[test]
    fn psi_shifts_classes() {
        let c = even(3, 10);
        let d = blade_shift(&c, 0, 1, 6).unwrap();
        // d_1 = p_0, d_2 = p_1, d_3 = p_{-1}, d_4 = p_2.
        assert_eq!(d.psi_of(1), 3);
        assert_eq!(d.psi_of(2), 6);
        assert_eq!(d.psi_of(3), 7);
        assert_eq!(d.psi_of(5), 1);
    }

    #[test]
    fn continuity_halves() {
        let c = even(4, 10);
        for s in [1, 2, -1] {
            let d = blade_shift(&c, 0, s, 6).unwrap();
            let r = d.continuity(4);
            assert_eq!(r.scales, vec![1, 2, 4, 8]);
            assert!(r.halving, "{s}: {:?}", r.maxima);
        }
    }
}
