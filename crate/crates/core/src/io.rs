//! JSON interchange: comb files, spatial-model files and verification reports.
//!
//! Rationals travel as exact `"p/q"` strings; encoding is deterministic so a
//! decode/encode round trip reproduces the input bytes.

use serde::{Deserialize, Serialize};

use crate::analyze::VerifyReport;
use crate::closedset::parse_set_expr;
use crate::comb::{Blade, BladeKind, Comb, Provenance};
use crate::construct::{Sheet, SheetBlade, SpatialModel};
use crate::error::FanError;
use crate::homeo::{CellMapDescriptor, Recipe};
use crate::rational::{fmt_q, parse_q, to_decimal, Q};

pub const COMB_FORMAT: &str = "fanforge-comb/1";
pub const SPATIAL_FORMAT: &str = "fanforge-spatial/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BladeRecord {
    index: Vec<u32>,
    x: String,
    tip: String,
    trace_scale: Option<String>,
    kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombRecord {
    format: String,
    source: Option<String>,
    depth: usize,
    branch: usize,
    provenance: String,
    blades: Vec<BladeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SheetBladeRecord {
    x: String,
    polyline: Vec<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SheetRecord {
    n: usize,
    cell: String,
    blades: Vec<SheetBladeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpatialRecord {
    format: String,
    base: CombRecord,
    sheets: Vec<SheetRecord>,
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> FanError {
    FanError::Schema { path: path.into(), msg: msg.into() }
}

fn rational_at(s: &str, path: &str) -> Result<Q, FanError> {
    parse_q(s).map_err(|e| schema(path, e.to_string()))
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    s
}

fn comb_record(c: &Comb) -> CombRecord {
    CombRecord {
        format: COMB_FORMAT.into(),
        source: c.source.as_ref().map(|s| s.to_string()),
        depth: c.depth,
        branch: c.branch,
        provenance: c.provenance.as_str().into(),
        blades: c
            .blades()
            .iter()
            .map(|b| BladeRecord {
                index: b.index.clone(),
                x: fmt_q(&b.x),
                tip: fmt_q(&b.tip),
                trace_scale: b.trace_scale.as_ref().map(fmt_q),
                kind: b.kind.as_str().into(),
            })
            .collect(),
    }
}

fn comb_from_record(r: &CombRecord, path: &str) -> Result<Comb, FanError> {
    if r.format != COMB_FORMAT {
        return Err(schema(format!("{path}.format"), format!("expected {COMB_FORMAT:?}")));
    }
    let source = match &r.source {
        Some(s) => Some(parse_set_expr(s).map_err(|e| schema(format!("{path}.source"), e.to_string()))?),
        None => None,
    };
    let provenance = Provenance::parse(&r.provenance)
        .ok_or_else(|| schema(format!("{path}.provenance"), format!("unknown provenance {:?}", r.provenance)))?;
    let mut blades = Vec::with_capacity(r.blades.len());
    for (i, b) in r.blades.iter().enumerate() {
        let at = |f: &str| format!("{path}.blades[{i}].{f}");
        let kind = BladeKind::parse(&b.kind).ok_or_else(|| schema(at("kind"), format!("unknown kind {:?}", b.kind)))?;
        let trace_scale = match &b.trace_scale {
            Some(s) => Some(rational_at(s, &at("trace_scale"))?),
            None => None,
        };
        blades.push(Blade {
            index: b.index.clone(),
            x: rational_at(&b.x, &at("x"))?,
            tip: rational_at(&b.tip, &at("tip"))?,
            trace_scale,
            kind,
        });
    }
    Ok(Comb::new(blades, source, r.depth, r.branch, provenance))
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, FanError> {
    serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))
}

/// Comb interchange file, pretty-printed with a trailing newline.
pub fn encode_comb(c: &Comb) -> String {
    to_pretty(&comb_record(c))
}

pub fn decode_comb(text: &str) -> Result<Comb, FanError> {
    comb_from_record(&parse_json(text)?, "$")
}

pub fn encode_spatial(s: &SpatialModel) -> String {
    let rec = SpatialRecord {
        format: SPATIAL_FORMAT.into(),
        base: comb_record(&s.base),
        sheets: s
            .sheets
            .iter()
            .map(|sh| SheetRecord {
                n: sh.n,
                cell: sh.cell_string(),
                blades: sh
                    .blades
                    .iter()
                    .map(|b| SheetBladeRecord {
                        x: fmt_q(&b.x),
                        polyline: b.polyline.iter().map(|p| [fmt_q(&p[0]), fmt_q(&p[1]), fmt_q(&p[2])]).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    to_pretty(&rec)
}

pub fn decode_spatial(text: &str) -> Result<SpatialModel, FanError> {
    let rec: SpatialRecord = parse_json(text)?;
    if rec.format != SPATIAL_FORMAT {
        return Err(schema("$.format", format!("expected {SPATIAL_FORMAT:?}")));
    }
    let base = comb_from_record(&rec.base, "$.base")?;
    let mut sheets = Vec::with_capacity(rec.sheets.len());
    for (i, sh) in rec.sheets.iter().enumerate() {
        let cell = sh
            .cell
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '2' => Ok(2u8),
                _ => Err(schema(format!("$.sheets[{i}].cell"), "cell digits must be 0 or 2")),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        let mut blades = Vec::with_capacity(sh.blades.len());
        for (j, b) in sh.blades.iter().enumerate() {
            let at = format!("$.sheets[{i}].blades[{j}]");
            let mut polyline = Vec::with_capacity(b.polyline.len());
            for (k, p) in b.polyline.iter().enumerate() {
                let pt = |c: usize| rational_at(&p[c], &format!("{at}.polyline[{k}][{c}]"));
                polyline.push([pt(0)?, pt(1)?, pt(2)?]);
            }
            if polyline.is_empty() {
                return Err(schema(format!("{at}.polyline"), "polyline is empty"));
            }
            blades.push(SheetBlade { x: rational_at(&b.x, &format!("{at}.x"))?, polyline });
        }
        sheets.push(Sheet { n: sh.n, cell, blades });
    }
    Ok(SpatialModel { base, sheets })
}

#[derive(Serialize)]
struct ReportBlade {
    index: Vec<u32>,
    pass: bool,
    resolved: bool,
    gap_upper: String,
}

#[derive(Serialize)]
struct ReportSummary {
    pass: bool,
    resolved: usize,
    unresolved: usize,
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    comb: &'a str,
    eps: String,
    blades: Vec<ReportBlade>,
    summary: ReportSummary,
}

/// Verification report; `comb` names the checked comb (usually its file path).
pub fn encode_verify_report(comb: &str, r: &VerifyReport) -> String {
    let unresolved = r.unresolved();
    to_pretty(&ReportRecord {
        comb,
        eps: fmt_q(&r.eps),
        blades: r
            .blades
            .iter()
            .map(|b| ReportBlade {
                index: b.index.clone(),
                pass: b.pass,
                resolved: b.resolved,
                gap_upper: to_decimal(&b.gap_upper, 12),
            })
            .collect(),
        summary: ReportSummary { pass: r.pass, resolved: r.blades.len() - unresolved, unresolved },
    })
}

/// `{"kind": …, <param>: "p/q", …, "window": …}` for one cell map.
///
/// `window` is the BiSeq window for a blade shift, and the cell `{root, cut}` the map
/// acts on otherwise.
pub fn descriptor_json(d: &CellMapDescriptor) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert("kind".into(), d.kind().into());
    for (k, v) in d.params() {
        if k != "window" {
            m.insert(k.into(), v.into());
        }
    }
    let window = match d {
        CellMapDescriptor::EndpointSwap(s) => serde_json::json!({"root": s.i1, "cut": s.cut}),
        CellMapDescriptor::VerticalAdjust(a) => serde_json::json!({"root": a.blade, "cut": a.cut}),
        CellMapDescriptor::BladeShift(b) => serde_json::json!(b.window),
    };
    m.insert("window".into(), window);
    serde_json::Value::Object(m)
}

/// Recipe as an ordered list of descriptors.
pub fn recipe_json(r: &Recipe) -> serde_json::Value {
    serde_json::Value::Array(r.steps.iter().map(descriptor_json).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedset::parse_set_expr;
    use crate::construct::{build_canonical, build_epg_comb, build_nonsmooth_3d, build_product, CanonicalKind};

    #[test]
    fn comb_round_trips_byte_exactly() {
        let combs = vec![
            build_epg_comb(&parse_set_expr("pt(0)+pt(1/2)+pt(3/4)").unwrap(), 2, 6).unwrap(),
            build_canonical(CanonicalKind::Star, 1, 4).unwrap(),
            build_canonical(CanonicalKind::Nod(3), 1, 2).unwrap(),
            build_product(&parse_set_expr("pt(0)+pt(1)").unwrap(), 2, 3, 2).unwrap().flatten(),
        ];
        for c in combs {
            let text = encode_comb(&c);
            let back = decode_comb(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(encode_comb(&back), text);
        }
    }

    #[test]
    fn spatial_round_trips() {
        let s = build_nonsmooth_3d(2, 2, 2).unwrap();
        let text = encode_spatial(&s);
        let back = decode_spatial(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_spatial(&back), text);
    }

    #[test]
    fn descriptors_carry_kind_and_window() {
        let c = build_epg_comb(&parse_set_expr("pt(0)+pt(1/2)+pt(3/4)").unwrap(), 2, 3).unwrap();
        let d = CellMapDescriptor::EndpointSwap(crate::homeo::endpoint_swap(&c, &[1], &[2]).unwrap());
        let v = descriptor_json(&d);
        assert_eq!(v["kind"], "endpoint_swap");
        assert_eq!(v["window"], serde_json::json!({"root": [1], "cut": 1}));
        assert_eq!(v["s1"], "9/16");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let c = build_canonical(CanonicalKind::Star, 1, 2).unwrap();
        let bad = encode_comb(&c).replacen("\"tip\": \"1\"", "\"tip\": \"one\"", 1);
        match decode_comb(&bad) {
            Err(FanError::Schema { path, .. }) => assert!(path.ends_with(".tip"), "{path}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(decode_comb("{}"), Err(FanError::Schema { .. })));
        let wrong = encode_comb(&c).replace(COMB_FORMAT, "other/1");
        assert!(matches!(decode_comb(&wrong), Err(FanError::Schema { path, .. }) if path == "$.format"));
    }
}
