//! Cone embedding of combs and spatial models, arcs from the top, Hausdorff
//! bounds between arcs and the smoothness scan.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use num_traits::Signed;

use crate::comb::{Comb, FanPoint};
use crate::construct::SpatialModel;
use crate::error::FanError;
use crate::rational::{fmt_q, half, one, q, to_f64, zero, Q};

/// Cone rule `(x, y) ↦ ((1−y)/2 + y·x, y)`; the top is `(1/2, 0)`.
pub fn embed_cone(c: &Comb, p: &FanPoint) -> Result<[Q; 2], FanError> {
    p.validate(c)?;
    Ok(match p {
        FanPoint::Top => [half(), zero()],
        FanPoint::OnBlade { index, height } => {
            let x = &c.blade(index).expect("validated").x;
            cone(x, height)
        }
    })
}

fn cone(x: &Q, y: &Q) -> [Q; 2] {
    [(one() - y) / q(2, 1) + y * x, y.clone()]
}

/// Spatial cone rule `(X, Y, Z) ↦ ((1−Y)/2 + Y·X, Y, Z)`.
pub fn embed_spatial(p: &[Q; 3]) -> [Q; 3] {
    let [x, y] = cone(&p[0], &p[1]);
    [x, y, p[2].clone()]
}

/// A point of a comb or of a spatial model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelPoint {
    Fan(FanPoint),
    /// Point of sheet `n` on its `blade`-th blade at sheet height `y`, on the tilted segment.
    Sheet { n: usize, blade: usize, y: Q },
}

#[derive(Debug, Clone, Copy)]
pub enum Model<'a> {
    Comb(&'a Comb),
    Spatial(&'a SpatialModel),
}

impl Model<'_> {
    fn comb(&self) -> &Comb {
        match self {
            Model::Comb(c) => c,
            Model::Spatial(s) => &s.base,
        }
    }
}

/// Polyline from the apex; comb arcs have one segment, sheet arcs two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedArc {
    pub points: Vec<[Q; 3]>,
}

impl EmbeddedArc {
    fn to_f64(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [to_f64(&p[0]), to_f64(&p[1]), to_f64(&p[2])]).collect()
    }

    pub fn end(&self) -> &[Q; 3] {
        self.points.last().expect("arcs start at the apex")
    }
}

fn apex() -> [Q; 3] {
    [half(), zero(), zero()]
}

/// Ambient position of a model point.
pub fn embed_point(model: Model<'_>, p: &ModelPoint) -> Result<[Q; 3], FanError> {
    Ok(arc_from_top(model, p)?.end().clone())
}

/// The arc `[t, p]` in the embedding.
pub fn arc_from_top(model: Model<'_>, p: &ModelPoint) -> Result<EmbeddedArc, FanError> {
    match p {
        ModelPoint::Fan(FanPoint::Top) => Ok(EmbeddedArc { points: vec![apex()] }),
        ModelPoint::Fan(fp) => {
            let [x, y] = embed_cone(model.comb(), fp)?;
            Ok(EmbeddedArc { points: vec![apex(), [x, y, zero()]] })
        }
        ModelPoint::Sheet { n, blade, y } => {
            let Model::Spatial(s) = model else {
                return Err(FanError::InvalidPoint("sheet points need a spatial model".into()));
            };
            let sheet = s.sheet(*n).ok_or_else(|| FanError::InvalidPoint(format!("no sheet {n}")))?;
            let b = sheet.blades.get(*blade).ok_or_else(|| FanError::InvalidPoint(format!("no blade {blade} on sheet {n}")))?;
            if !y.is_positive() || *y > b.sheet_tip(*n) {
                return Err(FanError::InvalidPoint(format!("sheet height {} off blade", fmt_q(y))));
            }
            let turn = [b.x.clone(), one(), zero()];
            let end = sheet.point(&b.x, y);
            Ok(EmbeddedArc { points: vec![apex(), embed_spatial(&turn), embed_spatial(&end)] })
        }
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn point_segment(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 == 0.0 { 0.0 } else { (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0) };
    let proj = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    norm(&sub(p, &proj))
}

fn point_polyline(p: &[f64; 3], line: &[[f64; 3]]) -> f64 {
    if line.len() == 1 {
        return norm(&sub(p, &line[0]));
    }
    line.windows(2).map(|w| point_segment(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
}

struct Piece {
    bound: f64,
    a: [f64; 3],
    b: [f64; 3],
    fa: f64,
    fb: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.bound == o.bound
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.bound.total_cmp(&o.bound)
    }
}

/// `sup_{p∈a} d(p, b)` bounded by bisection; the distance is 1-Lipschitz along `a`.
fn directed(a: &[[f64; 3]], b: &[[f64; 3]], res: f64) -> (f64, f64) {
    let f = |p: &[f64; 3]| point_polyline(p, b);
    let segs: Vec<([f64; 3], [f64; 3])> =
        if a.len() == 1 { vec![(a[0], a[0])] } else { a.windows(2).map(|w| (w[0], w[1])).collect() };
    let mut lo = 0f64;
    let mut heap = BinaryHeap::new();
    let piece = |a: [f64; 3], b: [f64; 3], fa: f64, fb: f64| Piece { bound: (fa + fb + norm(&sub(&b, &a))) / 2.0, a, b, fa, fb };
    for (x, y) in segs {
        let (fx, fy) = (f(&x), f(&y));
        lo = lo.max(fx).max(fy);
        heap.push(piece(x, y, fx, fy));
    }
    while let Some(top) = heap.pop() {
        if top.bound <= lo + res {
            return (lo, top.bound.max(lo));
        }
        let m = [(top.a[0] + top.b[0]) / 2.0, (top.a[1] + top.b[1]) / 2.0, (top.a[2] + top.b[2]) / 2.0];
        let fm = f(&m);
        lo = lo.max(fm);
        heap.push(piece(top.a, m, top.fa, fm));
        heap.push(piece(m, top.b, fm, top.fb));
    }
    (lo, lo)
}

/// Floating-point slack added to every bound pair.
const PAD: f64 = 1e-12;

/// Default resolution of [`hausdorff_arc_distance`].
pub const DEFAULT_RESOLUTION: f64 = 1e-4;

/// `(lower, upper)` bounds on the Hausdorff distance, `upper − lower ≤ res` up to rounding slack.
pub fn hausdorff_arc_distance(a: &EmbeddedArc, b: &EmbeddedArc, res: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (fa, fb) = (a.to_f64(), b.to_f64());
    let (l1, u1) = directed(&fa, &fb, res);
    let (l2, u2) = directed(&fb, &fa, res);
    ((l1.max(l2) - PAD).max(0.0), u1.max(u2) + PAD)
}

/// How [`smoothness_scan`] picks points converging to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceRule {
    /// The `count` points nearest the target among points at its height on other blades
    /// and points `y(1 − 2^{−k})` below it on its own blade.
    NearestTips(usize),
    /// Points `2^{−k}`, `k = 1..=count`, on the target's blade (leftmost blade for the top).
    ApexDescent(usize),
    /// One point per sheet at the sheet height over the target's height, nearest the target's `x`.
    SheetDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub converges: bool,
    /// Smallest lower gap bound over the tail of the sequence.
    pub witness_gap: f64,
    pub sequence: Vec<ModelPoint>,
    /// `(lower, upper)` Hausdorff bounds between `[t, p_j]` and `[t, target]`.
    pub gaps: Vec<(f64, f64)>,
    /// Ambient distances `|p_j − target|`.
    pub distances: Vec<f64>,
}

fn select(model: Model<'_>, target: &FanPoint, rule: SequenceRule) -> Result<Vec<ModelPoint>, FanError> {
    let c = model.comb();
    target.validate(c)?;
    match rule {
        SequenceRule::ApexDescent(count) => {
            let (index, top) = match target {
                FanPoint::Top => (c.leftmost().map(|b| b.index.clone()).unwrap_or_default(), one()),
                FanPoint::OnBlade { index, height } => (index.clone(), height.clone()),
            };
            Ok((1..=count as u64)
                .map(|k| ModelPoint::Fan(FanPoint::on(index.clone(), &top / crate::rational::pow(&q(2, 1), k))))
                .collect())
        }
        SequenceRule::NearestTips(count) => {
            let FanPoint::OnBlade { index, height } = target else {
                return select(model, target, SequenceRule::ApexDescent(count));
            };
            let t = embed_cone(c, target)?;
            let mut cands: Vec<(Q, FanPoint)> = c
                .blades()
                .iter()
                .filter(|b| b.index != *index && b.tip >= *height)
                .map(|b| {
                    let p = FanPoint::on(b.index.clone(), height.clone());
                    let e = embed_cone(c, &p).expect("height is below the tip");
                    ((&e[0] - &t[0]).abs().max((&e[1] - &t[1]).abs()), p)
                })
                .collect();
            for k in 1..=count as u64 {
                let y = height * (one() - one() / crate::rational::pow(&q(2, 1), k));
                let p = FanPoint::on(index.clone(), y);
                let e = embed_cone(c, &p)?;
                cands.push(((&e[0] - &t[0]).abs().max((&e[1] - &t[1]).abs()), p));
            }
            cands.sort_by(|a, b| a.0.cmp(&b.0));
            cands.truncate(count);
            cands.reverse();
            Ok(cands.into_iter().map(|(_, p)| ModelPoint::Fan(p)).collect())
        }
        SequenceRule::SheetDescent => {
            let Model::Spatial(s) = model else {
                return Err(FanError::Argument("sheet descent needs a spatial model".into()));
            };
            let FanPoint::OnBlade { index, height } = target else {
                return Err(FanError::Argument("sheet descent needs a blade point".into()));
            };
            let xt = &c.blade(index).expect("validated").x;
            let y = q(2, 1) * (one() - height);
            let mut out = Vec::new();
            for sheet in &s.sheets {
                let best = sheet
                    .blades
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| y.is_positive() && b.sheet_tip(sheet.n) >= y)
                    .min_by(|a, b| (&a.1.x - xt).abs().cmp(&(&b.1.x - xt).abs()));
                if let Some((i, _)) = best {
                    out.push(ModelPoint::Sheet { n: sheet.n, blade: i, y: y.clone() });
                }
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Width of the Hausdorff bound pairs.
    pub resolution: f64,
    /// Gap the last sequence point must reach for convergence.
    pub tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { resolution: DEFAULT_RESOLUTION, tolerance: 1e-3 }
    }
}

/// Hausdorff gaps between `[t, p_j]` and `[t, target]` along a selected sequence.
///
/// Converges when the last gap is within `tolerance` and no tail gap exceeds twice the
/// ambient distance plus the resolution (nearby points must carry nearby arcs).
pub fn smoothness_scan(model: Model<'_>, target: &FanPoint, rule: SequenceRule, opts: &ScanOptions) -> Result<SmoothnessReport, FanError> {
    let res = opts.resolution;
    let sequence = select(model, target, rule)?;
    if sequence.len() < 3 {
        return Err(FanError::NoSequence(sequence.len()));
    }
    let limit = arc_from_top(model, &ModelPoint::Fan(target.clone()))?;
    let lf = limit.end().iter().map(to_f64).collect::<Vec<_>>();
    let mut gaps = Vec::new();
    let mut distances = Vec::new();
    for p in &sequence {
        let arc = arc_from_top(model, p)?;
        gaps.push(hausdorff_arc_distance(&arc, &limit, res));
        let e: Vec<f64> = arc.end().iter().map(to_f64).collect();
        distances.push(norm(&[e[0] - lf[0], e[1] - lf[1], e[2] - lf[2]]));
    }
    let tail = sequence.len() / 2;
    let converges = gaps.last().is_some_and(|g| g.1 <= opts.tolerance)
        && gaps[tail..].iter().zip(&distances[tail..]).all(|(g, d)| g.0 <= 2.0 * d + res);
    let witness_gap = gaps[tail..].iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
    Ok(SmoothnessReport { converges, witness_gap, sequence, gaps, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::maximal_comb;
    use crate::construct::build_nonsmooth_3d;

    #[test]
    fn embedding_examples() {
        let c = maximal_comb(2);
        assert_eq!(embed_cone(&c, &FanPoint::Top).unwrap(), [half(), zero()]);
        assert_eq!(embed_cone(&c, &FanPoint::on(vec![], one())).unwrap(), [zero(), one()]);
        let i = c.blade_at_x(&q(2, 3)).unwrap().index.clone();
        assert_eq!(embed_cone(&c, &FanPoint::on(i, half())).unwrap(), [q(7, 12), half()]);
        assert!(embed_cone(&c, &FanPoint::on(vec![], q(3, 2))).is_err());
    }

    fn arc(c: &Comb, x: Q, y: Q) -> EmbeddedArc {
        let i = c.blade_at_x(&x).unwrap().index.clone();
        arc_from_top(Model::Comb(c), &ModelPoint::Fan(FanPoint::on(i, y))).unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        let c = maximal_comb(2);
        let a = arc(&c, zero(), one());
        assert_eq!(a.points, vec![apex(), [zero(), one(), zero()]]);
        let (lo, hi) = hausdorff_arc_distance(&a, &a, 1e-4);
        assert_eq!((lo, hi), (0.0, 0.0));
        let b = arc(&c, q(2, 3), one());
        let (lo, hi) = hausdorff_arc_distance(&a, &b, 1e-4);
        assert!((1.0 / 3.0..=2.0 / 3.0 + 1e-9).contains(&hi) && hi - lo <= 1e-4 + 1e-9);
        let h = arc(&c, zero(), half());
        let (lo, hi) = hausdorff_arc_distance(&a, &h, 1e-4);
        let far = (0.25f64.powi(2) + 0.5f64.powi(2)).sqrt();
        assert!((lo - far).abs() < 1e-4 && (hi - far).abs() < 1e-4);
    }

    #[test]
    fn dense_sampling_agrees() {
        let c = maximal_comb(2);
        let a = arc(&c, zero(), one()).to_f64();
        let b = arc(&c, q(2, 3), one()).to_f64();
        let sample = |s: &[[f64; 3]], t: &[[f64; 3]]| {
            (0..=1000)
                .map(|i| {
                    let u = i as f64 / 1000.0;
                    let p = [s[0][0] + u * (s[1][0] - s[0][0]), s[0][1] + u * (s[1][1] - s[0][1]), 0.0];
                    point_polyline(&p, t)
                })
                .fold(0.0, f64::max)
        };
        let brute = sample(&a, &b).max(sample(&b, &a));
        let (lo, hi) = directed(&a, &b, 1e-4);
        let (lo2, hi2) = directed(&b, &a, 1e-4);
        assert!(lo.max(lo2) - 1e-3 <= brute && brute <= hi.max(hi2) + 1e-9);
    }

    #[test]
    fn spatial_arcs_and_scans() {
        let s = build_nonsmooth_3d(4, 3, 3).unwrap();
        let p = ModelPoint::Sheet { n: 1, blade: 0, y: half() };
        assert!(arc_from_top(Model::Spatial(&s), &p).unwrap().points.len() >= 3);
        let i = s.base.blade_at_x(&q(8, 27)).unwrap().index.clone();
        let target = FanPoint::on(i, q(3, 4));
        let r = smoothness_scan(Model::Spatial(&s), &target, SequenceRule::SheetDescent, &ScanOptions::default()).unwrap();
        assert!(!r.converges && r.witness_gap >= 0.2, "{r:?}");
        let r = smoothness_scan(Model::Spatial(&s), &FanPoint::Top, SequenceRule::ApexDescent(12), &ScanOptions::default()).unwrap();
        assert!(r.converges);
        let r = smoothness_scan(Model::Spatial(&s), &target, SequenceRule::NearestTips(2), &ScanOptions::default());
        assert_eq!(r, Err(FanError::NoSequence(2)));
    }

    #[test]
    fn comb_scans_converge() {
        let c = maximal_comb(3);
        for b in c.blades() {
            let target = FanPoint::on(b.index.clone(), q(2, 3));
            let r = smoothness_scan(Model::Comb(&c), &target, SequenceRule::NearestTips(16), &ScanOptions::default()).unwrap();
            assert!(r.converges, "{:?}", r.gaps.last());
        }
    }
}
