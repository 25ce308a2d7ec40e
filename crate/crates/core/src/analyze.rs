//! Endpoint-trace oracle and the checks built on it: EPG verification,
//! endpoint cardinality, partition labels and orbit witnesses.
//!
//! The trace oracle reads only blade positions and tips. Verification
//! compares its output with `φ_B[X]`, which does use construction metadata.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::closedset::{self, Atom, ClosedSetDesc};
use crate::comb::{phi_from_params, BladeIndex, Comb, FanPoint};
use crate::construct::{split_product_index, ProductComb};
use crate::error::FanError;
use crate::homeo::{self, CellMapDescriptor, Recipe};
use crate::pwl::PiecewiseLinearMap;
use crate::rational::{fmt_q, one, q, ternary_len, third_pow, zero, Q};

/// Knobs of the trace oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceOptions {
    /// Fixed schedule depth; `None` selects it from coverage and resolution.
    pub depth: Option<usize>,
    /// Coverage tolerance and target resolution `ε_J ≤ tau`.
    pub tau: Q,
    /// Populated levels needed before a blade counts as resolved.
    pub min_levels: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { depth: None, tau: q(1, 54), min_levels: 2 }
    }
}

/// Approximate trace `B ∩ cl(E \ B)` of one blade as a union of exact intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceApprox {
    pub blade: BladeIndex,
    /// Sorted, pairwise disjoint.
    pub heights: Vec<(Q, Q)>,
    /// `δ_j = 3^{−(L+j)}` for `j = 1..J`, with `L` the ternary length of the blade's position.
    pub delta_schedule: Vec<Q>,
    pub includes_base: bool,
    pub resolved: bool,
    /// `ε_J = 3·δ_J`; clustering and base tolerance.
    pub eps: Q,
}

impl TraceApprox {
    fn unresolved(blade: BladeIndex) -> Self {
        Self { blade, heights: Vec::new(), delta_schedule: Vec::new(), includes_base: false, resolved: false, eps: zero() }
    }

    pub fn depth(&self) -> usize {
        self.delta_schedule.len()
    }

    /// Whether the top interval reaches the tip `tip` within `ε_J`.
    pub fn reaches(&self, tip: &Q) -> bool {
        self.heights.last().is_some_and(|(_, hi)| hi + &self.eps >= *tip)
    }
}

/// Largest `j ≥ 1` with `|d| < 3^{−(l+j)}`, or 0.
fn level(d: &Q, l: u32) -> usize {
    let num = d.numer().abs();
    let den = d.denom().clone();
    let below = |j: u32| -> bool { &num * BigInt::from(3u32).pow(l + j) < den };
    if !below(1) {
        return 0;
    }
    let bits = den.bits() as f64 - num.bits() as f64;
    let mut j = ((bits / 3f64.log2()) as i64 - l as i64 - 1).max(1) as u32;
    while j > 1 && !below(j) {
        j -= 1;
    }
    while below(j + 1) {
        j += 1;
    }
    j as usize
}

fn cluster(mut hs: Vec<Q>, eps: &Q) -> Vec<(Q, Q)> {
    hs.sort();
    hs.dedup();
    let mut out: Vec<(Q, Q)> = Vec::new();
    for h in hs {
        match out.last_mut() {
            Some(last) if &h - &last.1 <= *eps => last.1 = h,
            _ => out.push((h.clone(), h)),
        }
    }
    out
}

/// Trace of one blade with the default options.
pub fn trace_extract(c: &Comb, index: &[u32]) -> TraceApprox {
    trace_extract_with(c, index, &TraceOptions::default())
}

/// Collects neighbour tips by level, picks a depth `J` and clusters the tips at levels `≥ J`.
///
/// `J` is the deepest level whose heads still cover every head within `tau`, but at
/// least the first level with `ε_j ≤ tau`, and at most the deepest populated level.
pub fn trace_extract_with(c: &Comb, index: &[u32], opts: &TraceOptions) -> TraceApprox {
    let Some(b) = c.blade(index) else { return TraceApprox::unresolved(index.to_vec()) };
    let l = ternary_len(&b.x).unwrap_or(0);
    let d1 = third_pow(l as u64 + 1);
    let mut levels: BTreeMap<usize, Vec<Q>> = BTreeMap::new();
    for other in c.blades_in_open(&(&b.x - &d1), &(&b.x + &d1)) {
        if other.x == b.x || other.tip > b.tip {
            continue;
        }
        let lv = level(&(&other.x - &b.x), l);
        if lv >= 1 {
            levels.entry(lv).or_default().push(other.tip.clone());
        }
    }
    let lmax = levels.keys().next_back().copied().unwrap_or(0);
    if lmax < opts.min_levels.max(1) {
        return TraceApprox::unresolved(index.to_vec());
    }
    let eps_at = |j: usize| q(3, 1) * third_pow(l as u64 + j as u64);
    let j = match opts.depth {
        Some(d) => d.clamp(1, lmax),
        None => {
            let heads: Vec<(usize, Q)> = levels.iter().map(|(k, v)| (*k, v.iter().max().unwrap().clone())).collect();
            let covered = |j: usize| {
                let deep: Vec<&Q> = heads.iter().filter(|(k, _)| *k >= j).map(|(_, h)| h).collect();
                heads.iter().all(|(_, a)| deep.iter().any(|h| (a - *h).abs() <= opts.tau))
            };
            let j_cov = (1..=lmax).rev().find(|&j| covered(j)).unwrap_or(1);
            let j_eps = (1..).find(|&j| eps_at(j) <= opts.tau).unwrap();
            j_cov.max(j_eps).min(lmax)
        }
    };
    let eps = eps_at(j);
    let hs: Vec<Q> = levels.range(j..).flat_map(|(_, v)| v.iter().cloned()).collect();
    let mut heights = cluster(hs, &eps);
    let includes_base = heights.first().is_some_and(|(lo, _)| *lo <= eps);
    if includes_base {
        heights[0].0 = zero();
    }
    TraceApprox {
        blade: index.to_vec(),
        heights,
        delta_schedule: (1..=j).map(|i| third_pow(l as u64 + i as u64)).collect(),
        includes_base,
        resolved: true,
        eps,
    }
}

/// Trace of a product blade: the base blade's trace plus its tip, which the Cantor factor repeats.
pub fn trace_extract_product(pc: &ProductComb, index: &[u32], opts: &TraceOptions) -> TraceApprox {
    let base_index = if pc.cantor_depth == 0 {
        index.to_vec()
    } else {
        match split_product_index(index) {
            Some((b, _, d)) if d == pc.cantor_depth => b,
            _ => return TraceApprox::unresolved(index.to_vec()),
        }
    };
    let Some(b) = pc.base.blade(&base_index) else { return TraceApprox::unresolved(index.to_vec()) };
    let mut t = trace_extract_with(&pc.base, &base_index, opts);
    if !t.resolved {
        // The tip is a limit of the Cantor copies even when the base blade has no neighbours.
        let eps = third_pow(pc.cantor_depth as u64);
        t = TraceApprox {
            blade: index.to_vec(),
            heights: Vec::new(),
            delta_schedule: Vec::new(),
            includes_base: false,
            resolved: true,
            eps,
        };
    }
    t.blade = index.to_vec();
    let eps = t.eps.clone();
    let mut hs: Vec<(Q, Q)> = t.heights.clone();
    hs.push((b.tip.clone(), b.tip.clone()));
    hs.sort();
    let mut merged: Vec<(Q, Q)> = Vec::new();
    for (lo, hi) in hs {
        match merged.last_mut() {
            Some(last) if &lo - &last.1 <= eps => last.1 = last.1.clone().max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    t.heights = merged;
    t
}

// ---------------------------------------------------------------------------
// Hausdorff distance between finite interval unions
// ---------------------------------------------------------------------------

fn dist_to(t: &Q, set: &[(Q, Q)]) -> Q {
    let i = set.partition_point(|iv| iv.1 < *t);
    let mut best: Option<Q> = None;
    if let Some((lo, _)) = set.get(i) {
        best = Some(if lo <= t { zero() } else { lo - t });
    }
    if i > 0 {
        let d = t - &set[i - 1].1;
        best = Some(best.map_or(d.clone(), |b| b.min(d)));
    }
    best.expect("set is nonempty")
}

fn directed(a: &[(Q, Q)], b: &[(Q, Q)]) -> Q {
    let mut worst = zero();
    for (lo, hi) in a {
        let mut cands = vec![lo.clone(), hi.clone()];
        let start = b.partition_point(|iv| iv.1 < *lo).saturating_sub(1);
        for w in b[start..].windows(2) {
            let mid = (&w[0].1 + &w[1].0) / q(2, 1);
            if mid > *hi {
                break;
            }
            if mid >= *lo {
                cands.push(mid);
            }
        }
        for t in cands {
            worst = worst.max(dist_to(&t, b));
        }
    }
    worst
}

/// Exact Hausdorff distance between two sorted disjoint interval unions; `None` if exactly one is empty.
pub fn interval_hausdorff(a: &[(Q, Q)], b: &[(Q, Q)]) -> Option<Q> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Some(zero()),
        (false, false) => Some(directed(a, b).max(directed(b, a))),
        _ => None,
    }
}

fn merge(mut ivs: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    ivs.sort();
    let mut out: Vec<(Q, Q)> = Vec::new();
    for (lo, hi) in ivs {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.clone().max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// `φ[X]` as intervals, dropping sequence terms within `r` of their limit. Hausdorff error `≤ r`.
pub fn image_set(phi: &PiecewiseLinearMap, x: &ClosedSetDesc, r: &Q) -> Vec<(Q, Q)> {
    let f = |v: &Q| phi.eval(v).expect("set lies in [0,1]");
    let mut out = Vec::new();
    let point = |out: &mut Vec<(Q, Q)>, v: Q| out.push((v.clone(), v));
    for atom in &x.atoms {
        match atom {
            Atom::Point(p) => point(&mut out, f(p)),
            Atom::Interval(a, b) => out.push((f(a), f(b))),
            Atom::GeomSeq { limit, .. } | Atom::HarSeq { limit, .. } => {
                let fl = f(limit);
                point(&mut out, fl.clone());
                for k in 1..=1_000_000u64 {
                    let ft = f(&atom.seq_term(k).unwrap());
                    if (&ft - &fl).abs() <= *r {
                        break;
                    }
                    point(&mut out, ft);
                }
            }
            Atom::BiSeq { lo, hi, .. } => {
                let (flo, fhi) = (f(lo), f(hi));
                point(&mut out, flo.clone());
                point(&mut out, fhi.clone());
                for (step, end) in [(1i64, &fhi), (-1i64, &flo)] {
                    let mut k = if step > 0 { 0 } else { -1 };
                    loop {
                        let ft = f(&atom.biseq_term(k).unwrap());
                        if (&ft - end).abs() <= *r || k.abs() > 1_000_000 {
                            break;
                        }
                        point(&mut out, ft);
                        k += step;
                    }
                }
            }
        }
    }
    merge(out)
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Only blades with index length `≤ max_index_len` are checked.
    pub max_index_len: usize,
    /// Trace options; `None` uses `tau = eps/2`.
    pub trace: Option<TraceOptions>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { max_index_len: 2, trace: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BladeVerdict {
    pub index: BladeIndex,
    pub resolved: bool,
    pub pass: bool,
    pub gap_lower: Q,
    pub gap_upper: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub eps: Q,
    pub blades: Vec<BladeVerdict>,
    /// All resolved blades pass and at least one blade is resolved.
    pub pass: bool,
}

impl VerifyReport {
    pub fn unresolved(&self) -> usize {
        self.blades.iter().filter(|b| !b.resolved).count()
    }

    pub fn max_gap_upper(&self) -> Q {
        self.blades.iter().filter(|b| b.resolved).map(|b| b.gap_upper.clone()).max().unwrap_or_else(zero)
    }
}

fn verdict(trace: &TraceApprox, expected: &[(Q, Q)], r: &Q, eps: &Q) -> BladeVerdict {
    if !trace.resolved {
        return BladeVerdict { index: trace.blade.clone(), resolved: false, pass: false, gap_lower: zero(), gap_upper: zero() };
    }
    let gap = interval_hausdorff(&trace.heights, expected).unwrap_or_else(one);
    let lower = (&gap - r).max(zero());
    let upper = gap + r;
    BladeVerdict { index: trace.blade.clone(), resolved: true, pass: upper <= *eps, gap_lower: lower, gap_upper: upper }
}

fn report(eps: &Q, blades: Vec<BladeVerdict>) -> VerifyReport {
    let resolved: Vec<&BladeVerdict> = blades.iter().filter(|b| b.resolved).collect();
    let pass = !resolved.is_empty() && resolved.iter().all(|b| b.pass);
    VerifyReport { eps: eps.clone(), blades, pass }
}

/// Compares each blade's trace with `φ_B[X]` in the Hausdorff metric.
pub fn verify_epg(c: &Comb, x: &ClosedSetDesc, eps: &Q) -> Result<VerifyReport, FanError> {
    verify_epg_with(c, x, eps, &VerifyOptions::default())
}

pub fn verify_epg_with(c: &Comb, x: &ClosedSetDesc, eps: &Q, opts: &VerifyOptions) -> Result<VerifyReport, FanError> {
    if !eps.is_positive() {
        return Err(FanError::Argument("eps must be positive".into()));
    }
    let mm = c.source_max()?;
    let topts = opts.trace.clone().unwrap_or(TraceOptions { tau: eps / q(2, 1), ..TraceOptions::default() });
    let r = eps / q(8, 1);
    let mut out = Vec::new();
    for b in c.blades() {
        if b.index.len() > opts.max_index_len {
            continue;
        }
        let s = b.trace_scale.clone().ok_or_else(|| FanError::Metadata(format!("blade {:?} has no trace scale", b.index)))?;
        let phi = phi_from_params(&mm, &s, &b.tip)?;
        let expected = image_set(&phi, x, &r);
        out.push(verdict(&trace_extract_with(c, &b.index, &topts), &expected, &r, eps));
    }
    Ok(report(eps, out))
}

/// [`verify_epg_with`] for a product comb without flattening it.
///
/// Blade indices are product indices of word 0; all words of a base blade share its trace.
pub fn verify_product(pc: &ProductComb, x: &ClosedSetDesc, eps: &Q, opts: &VerifyOptions) -> Result<VerifyReport, FanError> {
    if !eps.is_positive() {
        return Err(FanError::Argument("eps must be positive".into()));
    }
    let mm = pc.base.source_max()?;
    let topts = opts.trace.clone().unwrap_or(TraceOptions { tau: eps / q(2, 1), ..TraceOptions::default() });
    let r = eps / q(8, 1);
    let mut out = Vec::new();
    for b in pc.base.blades() {
        if b.index.len() > opts.max_index_len {
            continue;
        }
        let s = b.trace_scale.clone().ok_or_else(|| FanError::Metadata(format!("blade {:?} has no trace scale", b.index)))?;
        let phi = phi_from_params(&mm, &s, &b.tip)?;
        let expected = image_set(&phi, x, &r);
        let index = pc.product_blade(b, 0).index;
        out.push(verdict(&trace_extract_product(pc, &index, &topts), &expected, &r, eps));
    }
    Ok(report(eps, out))
}

// ---------------------------------------------------------------------------
// Endpoint cardinality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    CountableType,
    CantorType,
    Mixed,
}

impl Cardinality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Cardinality::CountableType => "countable-type",
            Cardinality::CantorType => "cantor-type",
            Cardinality::Mixed => "mixed",
        }
    }
}

/// Countable-type when no resolved tip is a limit of other tips; Cantor-type when every
/// resolved tip is such a limit and the limiting tips stay away from 0.
pub fn cardinality_probe(c: &Comb) -> Cardinality {
    let small = c.len() <= 2000;
    let mut any = false;
    let mut all_perfect = true;
    let mut none_perfect = true;
    for b in c.blades() {
        if !small && b.index.len() > 2 {
            continue;
        }
        let t = trace_extract(c, &b.index);
        if !t.resolved {
            continue;
        }
        any = true;
        let perfect = t.reaches(&b.tip);
        none_perfect &= !perfect;
        all_perfect &= perfect && !t.includes_base;
    }
    if none_perfect {
        Cardinality::CountableType
    } else if any && all_perfect {
        Cardinality::CantorType
    } else {
        Cardinality::Mixed
    }
}

// ---------------------------------------------------------------------------
// Partition labels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartitionLabel {
    T,
    E,
    A(usize),
    D(usize),
    L,
    G,
}

impl fmt::Display for PartitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionLabel::T => write!(f, "T"),
            PartitionLabel::E => write!(f, "E"),
            PartitionLabel::A(i) => write!(f, "A({i})"),
            PartitionLabel::D(i) => write!(f, "D({i})"),
            PartitionLabel::L => write!(f, "L"),
            PartitionLabel::G => write!(f, "G"),
        }
    }
}

/// `Odd(m)`: `X = {0, a_1..a_m}`, `2m+3` classes. `Even(m)`: `X = {p_i} ∪ {0, a_1} ∪ {a_2..a_m}`, `2m+4` classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Odd(usize),
    Even(usize),
}

impl Scheme {
    pub fn classes(&self) -> usize {
        match self {
            Scheme::Odd(m) => 2 * m + 3,
            Scheme::Even(m) => 2 * m + 4,
        }
    }
}

#[derive(Debug, Clone)]
struct SchemeData {
    a: Vec<Q>,
    biseq: Option<Atom>,
}

fn scheme_data(src: &ClosedSetDesc, scheme: Scheme) -> Result<SchemeData, FanError> {
    let mismatch = |why: &str| FanError::SchemeMismatch(format!("{scheme:?}: {why}"));
    match scheme {
        Scheme::Odd(m) => {
            let pts: Vec<Q> = src
                .atoms
                .iter()
                .map(|a| match a {
                    Atom::Point(p) => Ok(p.clone()),
                    _ => Err(mismatch("X must be finite")),
                })
                .collect::<Result<_, _>>()?;
            if pts.len() != m + 1 || !pts[0].is_zero() || m == 0 {
                return Err(mismatch("X must be {0, a_1, …, a_m}"));
            }
            Ok(SchemeData { a: pts[1..].to_vec(), biseq: None })
        }
        Scheme::Even(m) => {
            let Some((first, rest)) = src.atoms.split_first() else { return Err(mismatch("X is empty")) };
            let Atom::BiSeq { lo, hi, .. } = first else { return Err(mismatch("X must start with a two-sided sequence")) };
            if !lo.is_zero() || rest.len() + 1 != m || m == 0 {
                return Err(mismatch("X must be {p_i} ∪ {0, a_1} ∪ {a_2, …, a_m}"));
            }
            let mut a = vec![hi.clone()];
            for atom in rest {
                match atom {
                    Atom::Point(p) => a.push(p.clone()),
                    _ => return Err(mismatch("points above a_1 must be isolated")),
                }
            }
            Ok(SchemeData { a, biseq: Some(first.clone()) })
        }
    }
}

fn label_of_pullback(u: &Q, d: &SchemeData) -> PartitionLabel {
    if let Some(i) = d.a.iter().position(|a| a == u) {
        return PartitionLabel::A(i + 1);
    }
    let below = d.a.iter().filter(|a| *a < u).count();
    match &d.biseq {
        None => PartitionLabel::D(below + 1),
        Some(bi) => {
            if below >= 1 {
                PartitionLabel::D(below)
            } else if bi.biseq_index(u).is_some() {
                PartitionLabel::L
            } else {
                PartitionLabel::G
            }
        }
    }
}

fn point_params(engine: &mut crate::construct::EpgEngine, index: &[u32]) -> (Q, PiecewiseLinearMap) {
    let p = engine.params(index);
    let phi = phi_from_params(&engine.m, &p.scale, &p.tip).expect("engine parameters are consistent");
    (p.tip, phi)
}

/// Class of a point by the pullback of its height along `φ_B`; works on blades past the truncation.
pub fn label_partition(c: &Comb, p: &FanPoint, scheme: Scheme) -> Result<PartitionLabel, FanError> {
    let mut engine = homeo::engine_for(c)?;
    let data = scheme_data(engine.source(), scheme)?;
    label_with(&mut engine, &data, p)
}

fn label_with(engine: &mut crate::construct::EpgEngine, data: &SchemeData, p: &FanPoint) -> Result<PartitionLabel, FanError> {
    let FanPoint::OnBlade { index, height } = p else { return Ok(PartitionLabel::T) };
    let (tip, phi) = point_params(engine, index);
    if !height.is_positive() || *height > tip {
        return Err(FanError::InvalidPoint(format!("height {} outside (0, {}]", fmt_q(height), fmt_q(&tip))));
    }
    if *height == tip {
        return Ok(PartitionLabel::E);
    }
    Ok(label_of_pullback(&phi.inverse_eval(height)?, data))
}

/// Pullback targets covering every class: tip, `a_i`, interval midpoints and, for the even scheme, `p_k` near 0.
fn pullback_targets(d: &SchemeData) -> Vec<Q> {
    let mut t = vec![one()];
    t.extend(d.a.iter().cloned());
    let mut cuts: Vec<Q> = d.a.clone();
    cuts.push(one());
    if d.biseq.is_none() {
        cuts.insert(0, zero());
    }
    for w in cuts.windows(2) {
        t.push((&w[0] + &w[1]) / q(2, 1));
    }
    if let Some(bi) = &d.biseq {
        for k in -3..=3 {
            t.push(bi.biseq_term(k).unwrap());
        }
        for k in -4..=2 {
            let (lo, hi) = (bi.biseq_term(k).unwrap(), bi.biseq_term(k + 1).unwrap());
            t.push((lo + hi) / q(2, 1));
        }
    }
    t
}

/// Deterministic sample of `count` points: the top plus points on blades of index length `≤ 2`.
pub fn partition_battery(c: &Comb, scheme: Scheme, count: usize) -> Result<Vec<FanPoint>, FanError> {
    let mut engine = homeo::engine_for(c)?;
    let data = scheme_data(engine.source(), scheme)?;
    let targets = pullback_targets(&data);
    let blades: Vec<BladeIndex> = c.blades().iter().filter(|b| b.index.len() <= 2).map(|b| b.index.clone()).collect();
    let mut out = vec![FanPoint::Top];
    for i in 0..count.saturating_sub(1) {
        let idx = &blades[i % blades.len()];
        let u = &targets[(i + i / blades.len()) % targets.len()];
        let (_, phi) = point_params(&mut engine, idx);
        out.push(FanPoint::on(idx.clone(), phi.eval(u)?));
    }
    Ok(out)
}

/// Class of a height on the leftmost blade read off its trace clusters instead of the pullback.
///
/// Odd scheme: clusters above the base are `a_1 < … < a_m`. Even scheme: the top `m`
/// clusters are `a_m > … > a_1`, and any cluster below them is a `p_k`.
pub fn label_by_trace(c: &Comb, h: &Q, scheme: Scheme) -> Result<PartitionLabel, FanError> {
    let root = c.blade(&[]).ok_or_else(|| FanError::Argument("comb has no leftmost blade at index ()".into()))?;
    if *h == root.tip {
        return Ok(PartitionLabel::E);
    }
    let t = trace_extract(c, &[]);
    let eps = t.eps.clone();
    let inside = |iv: &(Q, Q)| &iv.0 - &eps <= *h && *h <= &iv.1 + &eps;
    let tau = TraceOptions::default().tau;
    // Clusters within `tau` of 0 are truncation clutter around the base.
    let clusters: Vec<(Q, Q)> = t.heights.iter().filter(|iv| !(t.includes_base && iv.1 <= tau)).cloned().collect();
    match scheme {
        Scheme::Odd(m) => {
            if clusters.len() != m {
                return Err(FanError::SchemeMismatch(format!("trace has {} clusters above the base", clusters.len())));
            }
            if let Some(i) = clusters.iter().position(inside) {
                return Ok(PartitionLabel::A(i + 1));
            }
            Ok(PartitionLabel::D(clusters.iter().filter(|iv| iv.1 < *h).count() + 1))
        }
        Scheme::Even(m) => {
            if clusters.len() < m {
                return Err(FanError::SchemeMismatch(format!("trace has {} clusters above the base", clusters.len())));
            }
            let top = &clusters[clusters.len() - m..];
            if let Some(i) = top.iter().position(inside) {
                return Ok(PartitionLabel::A(i + 1));
            }
            let below = top.iter().filter(|iv| iv.1 < *h).count();
            if below >= 1 {
                return Ok(PartitionLabel::D(below));
            }
            let low = &clusters[..clusters.len() - m];
            Ok(if low.iter().any(inside) || (t.includes_base && *h <= tau) { PartitionLabel::L } else { PartitionLabel::G })
        }
    }
}

// ---------------------------------------------------------------------------
// Orbit witnesses
// ---------------------------------------------------------------------------

/// Window of the blade shift used by [`orbit_witness`].
pub const SHIFT_WINDOW: i64 = 6;

/// Recipe of cell maps carrying `p` to `q`; refuses points of different classes.
///
/// Blades are first swapped onto the leftmost blade, where the pullback equals the height,
/// then adjusted or shifted there, then swapped onto the target blade.
pub fn orbit_witness(c: &Comb, p: &FanPoint, q_pt: &FanPoint, scheme: Scheme) -> Result<Recipe, FanError> {
    let mut engine = homeo::engine_for(c)?;
    let data = scheme_data(engine.source(), scheme)?;
    let lp = label_with(&mut engine, &data, p)?;
    let lq = label_with(&mut engine, &data, q_pt)?;
    if lp != lq {
        return Err(FanError::Refusal(format!("{lp} vs {lq}")));
    }
    let (FanPoint::OnBlade { index: i1, height: y1 }, FanPoint::OnBlade { index: i2, height: y2 }) = (p, q_pt) else {
        return Ok(Recipe::default());
    };
    let mut steps = Vec::new();
    if matches!(lp, PartitionLabel::E | PartitionLabel::A(_)) {
        if i1 != i2 {
            steps.push(CellMapDescriptor::EndpointSwap(homeo::endpoint_swap(c, i1, i2)?));
        }
        return Ok(Recipe { steps });
    }
    let u1 = point_params(&mut engine, i1).1.inverse_eval(y1)?;
    let u2 = point_params(&mut engine, i2).1.inverse_eval(y2)?;
    if !i1.is_empty() {
        steps.push(CellMapDescriptor::EndpointSwap(homeo::endpoint_swap(c, i1, &[])?));
    }
    let mut u = u1.clone();
    if matches!(lp, PartitionLabel::L | PartitionLabel::G) {
        let bi = data.biseq.as_ref().expect("L and G occur only in the even scheme");
        let (a, b) = (bi.biseq_floor(&u1).unwrap(), bi.biseq_floor(&u2).unwrap());
        if a != b {
            let d = homeo::blade_shift(c, a, b, SHIFT_WINDOW)?;
            u = d.phi.eval(&u)?;
            steps.push(CellMapDescriptor::BladeShift(d));
        }
    }
    if u != u2 {
        let (lo, hi) = (u.clone().min(u2.clone()), u.clone().max(u2.clone()));
        let below = closedset::sup_below(engine.source(), &lo).unwrap_or_else(zero);
        let above = closedset::inf_above(engine.source(), &hi).unwrap_or_else(one);
        let eps = (&lo - &below).min(&above - &hi) / q(2, 1);
        steps.push(CellMapDescriptor::VerticalAdjust(homeo::vertical_adjust(c, &[], &u, &u2, &eps)?));
    }
    if !i2.is_empty() {
        steps.push(CellMapDescriptor::EndpointSwap(homeo::endpoint_swap(c, &[], i2)?));
    }
    Ok(Recipe { steps })
}

/// Labels of `battery` before and after applying `recipe`; `true` when all agree.
pub fn preserves_labels(c: &Comb, recipe: &Recipe, battery: &[FanPoint], scheme: Scheme) -> Result<bool, FanError> {
    let mut engine = homeo::engine_for(c)?;
    let data = scheme_data(engine.source(), scheme)?;
    for p in battery {
        let before = label_with(&mut engine, &data, p)?;
        let after = label_with(&mut engine, &data, &recipe.apply(p))?;
        if before != after {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedset::parse_set_expr;
    use crate::construct::{build_canonical, build_epg_comb, build_product, CanonicalKind};
    use std::collections::BTreeSet;

    fn set(s: &str) -> ClosedSetDesc {
        parse_set_expr(s).unwrap()
    }

    #[test]
    fn level_matches_definition() {
        assert_eq!(level(&q(2, 9), 0), 1);
        assert_eq!(level(&q(1, 3), 0), 0);
        assert_eq!(level(&q(2, 81), 1), 2);
        assert_eq!(level(&q(-1, 27), 0), 2);
        assert_eq!(level(&q(1, 28), 0), 3);
    }

    #[test]
    fn hausdorff_of_intervals() {
        let a = vec![(zero(), q(1, 4))];
        let b = vec![(zero(), zero()), (q(1, 4), q(1, 4))];
        assert_eq!(interval_hausdorff(&a, &b), Some(q(1, 8)));
        assert_eq!(interval_hausdorff(&b, &b), Some(zero()));
        assert_eq!(interval_hausdorff(&a, &[]), None);
        let c = vec![(q(1, 2), q(3, 4))];
        assert_eq!(interval_hausdorff(&a, &c), Some(q(1, 2)));
    }

    #[test]
    fn image_set_truncates_sequences() {
        let phi = PiecewiseLinearMap::identity();
        let e = image_set(&phi, &set("pt(0)+har(0,1,above)"), &q(1, 10));
        assert_eq!(e.len(), 10);
        assert_eq!(e[0], (zero(), zero()));
    }

    #[test]
    fn cantor_and_star_traces() {
        let cantor = build_canonical(CanonicalKind::Cantor, 4, 2).unwrap();
        let t = trace_extract(&cantor, &[]);
        assert!(t.resolved && !t.includes_base);
        assert_eq!(t.heights, vec![(one(), one())]);
        let star = build_canonical(CanonicalKind::Star, 1, 12).unwrap();
        let t = trace_extract(&star, &[]);
        assert!(t.includes_base);
        assert!(t.heights.iter().all(|(_, hi)| *hi <= q(1, 32)));
    }

    #[test]
    fn verify_x3_and_reject_smaller_set() {
        let x = set("pt(0)+pt(1/2)+pt(3/4)");
        let c = build_epg_comb(&x, 5, 12).unwrap();
        let r = verify_epg(&c, &x, &q(1, 27)).unwrap();
        assert!(r.pass, "{:?}", r.blades.iter().filter(|b| !b.pass).collect::<Vec<_>>());
        let r2 = verify_epg(&c, &set("pt(0)+pt(1/2)"), &q(1, 27)).unwrap();
        assert!(!r2.pass);
    }

    #[test]
    fn verify_cantor_fan() {
        let c = build_canonical(CanonicalKind::Cantor, 4, 2).unwrap();
        let opts = VerifyOptions { max_index_len: 4, trace: None };
        let r = verify_epg_with(&c, &set("pt(1)"), &q(1, 81), &opts).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn product_trace_adds_tip() {
        let pc = build_product(&set("pt(0)+pt(1/2)+pt(1)"), 3, 6, 3).unwrap();
        let idx = pc.product_blade(pc.base.blade(&[]).unwrap(), 0).index;
        let t = trace_extract_product(&pc, &idx, &TraceOptions::default());
        assert!(t.reaches(&one()));
        let r = verify_product(&pc, &pc.source.clone(), &q(1, 9), &VerifyOptions::default()).unwrap();
        assert!(r.blades.iter().any(|b| b.resolved));
    }

    #[test]
    fn probe_kinds() {
        assert_eq!(cardinality_probe(&build_canonical(CanonicalKind::Star, 1, 12).unwrap()), Cardinality::CountableType);
        assert_eq!(cardinality_probe(&build_canonical(CanonicalKind::Cantor, 4, 2).unwrap()), Cardinality::CantorType);
        let c = build_epg_comb(&set("pt(0)+pt(1/2)+pt(3/4)"), 4, 6).unwrap();
        assert_eq!(cardinality_probe(&c), Cardinality::CountableType);
        assert_eq!(cardinality_probe(&build_canonical(CanonicalKind::Nod(3), 1, 2).unwrap()), Cardinality::CountableType);
    }

    fn odd_comb(m: usize) -> Comb {
        let pts: Vec<String> = (1..=m).map(|i| format!("pt({}/{})", i, m + 1)).collect();
        build_epg_comb(&set(&format!("pt(0)+{}", pts.join("+"))), 3, 6).unwrap()
    }

    fn even_comb(m: usize) -> Comb {
        let mut s = "biseq(0,1/2,1/2)".to_string();
        for i in 2..=m {
            s.push_str(&format!("+pt({}/{})", m + i - 1, 2 * m));
        }
        build_epg_comb(&set(&s), 3, 10).unwrap()
    }

    #[test]
    fn label_examples() {
        let c = odd_comb(1);
        assert_eq!(label_partition(&c, &FanPoint::Top, Scheme::Odd(1)).unwrap(), PartitionLabel::T);
        let tip = FanPoint::tip_of(&c, &[2]).unwrap();
        assert_eq!(label_partition(&c, &tip, Scheme::Odd(1)).unwrap(), PartitionLabel::E);
        let b = c.blade(&[1]).unwrap();
        let s = b.trace_scale.clone().unwrap();
        let a1 = FanPoint::on(vec![1], s * q(1, 2));
        assert_eq!(label_partition(&c, &a1, Scheme::Odd(1)).unwrap(), PartitionLabel::A(1));
        assert!(matches!(label_partition(&c, &a1, Scheme::Even(1)), Err(FanError::SchemeMismatch(_))));
    }

    #[test]
    fn battery_realizes_all_classes() {
        for (c, scheme) in [
            (odd_comb(1), Scheme::Odd(1)),
            (odd_comb(2), Scheme::Odd(2)),
            (even_comb(1), Scheme::Even(1)),
            (even_comb(2), Scheme::Even(2)),
        ] {
            let bat = partition_battery(&c, scheme, 200).unwrap();
            let labels: BTreeSet<PartitionLabel> = bat.iter().map(|p| label_partition(&c, p, scheme).unwrap()).collect();
            assert_eq!(labels.len(), scheme.classes(), "{scheme:?}: {labels:?}");
        }
    }

    #[test]
    fn trace_labels_agree_on_odd_scheme() {
        let c = build_epg_comb(&set("pt(0)+pt(1/3)+pt(2/3)"), 4, 10).unwrap();
        for (h, l) in [
            (q(1, 3), PartitionLabel::A(1)),
            (q(2, 3), PartitionLabel::A(2)),
            (q(1, 2), PartitionLabel::D(2)),
            (q(5, 6), PartitionLabel::D(3)),
            (q(1, 6), PartitionLabel::D(1)),
        ] {
            assert_eq!(label_by_trace(&c, &h, Scheme::Odd(2)).unwrap(), l, "{h}");
            assert_eq!(label_partition(&c, &FanPoint::on(vec![], h.clone()), Scheme::Odd(2)).unwrap(), l);
        }
    }

    #[test]
    fn witnesses_map_p_to_q_and_preserve_labels() {
        let c = even_comb(1);
        let bi = scheme_data(c.source.as_ref().unwrap(), Scheme::Even(1)).unwrap().biseq.unwrap();
        let p = |k: i64| bi.biseq_term(k).unwrap();
        let bat = partition_battery(&c, Scheme::Even(1), 200).unwrap();
        let cases = vec![
            (FanPoint::on(vec![], p(0)), FanPoint::on(vec![], p(2)), 1usize),
            (FanPoint::on(vec![], q(3, 5)), FanPoint::on(vec![], q(4, 5)), 1),
            (FanPoint::tip_of(&c, &[1]).unwrap(), FanPoint::tip_of(&c, &[2, 3]).unwrap(), 1),
            (FanPoint::on(vec![], (p(0) + p(1)) / q(2, 1)), FanPoint::on(vec![], p(1) * q(3, 4) + p(2) / q(4, 1)), 2),
        ];
        for (a, b, _) in &cases {
            let r = orbit_witness(&c, a, b, Scheme::Even(1)).unwrap();
            assert_eq!(&r.apply(a), b);
            assert!(preserves_labels(&c, &r, &bat, Scheme::Even(1)).unwrap());
        }
        let shift = orbit_witness(&c, &cases[0].0, &cases[0].1, Scheme::Even(1)).unwrap();
        assert!(matches!(&shift.steps[..], [CellMapDescriptor::BladeShift(d)] if d.shift() == 2));
        let adj = orbit_witness(&c, &cases[1].0, &cases[1].1, Scheme::Even(1)).unwrap();
        assert!(matches!(&adj.steps[..], [CellMapDescriptor::VerticalAdjust(_)]));
        let e = orbit_witness(&c, &FanPoint::on(vec![], p(0)), &FanPoint::on(vec![], q(3, 5)), Scheme::Even(1));
        assert!(matches!(e, Err(FanError::Refusal(_))));
    }
}
