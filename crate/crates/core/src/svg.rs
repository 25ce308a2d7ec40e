//! SVG rendering of combs, cone-embedded fans and spatial models.
//!
//! Geometry is computed in exact rationals and decimalized to
//! [`SVG_DIGITS`] fractional digits when written. One `<path>` per blade.

use std::fmt::Write as _;

use crate::comb::{Comb, FanPoint};
use crate::construct::SpatialModel;
use crate::geometry::embed_cone;
use crate::rational::{to_decimal, Q};

pub const SVG_DIGITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Comb,
    Fan,
    Spatial,
}

impl Style {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "comb" => Some(Self::Comb),
            "fan" => Some(Self::Fan),
            "spatial" => Some(Self::Spatial),
            _ => None,
        }
    }
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn dec(x: &Q) -> String {
    to_decimal(x, SVG_DIGITS)
}

/// Drawing surface of width `w` and height `h`; input `y` grows upward.
struct Canvas {
    w: Q,
    h: Q,
    body: String,
}

impl Canvas {
    fn new(w: Q, h: Q) -> Self {
        Self { w, h, body: String::new() }
    }

    fn path(&mut self, class: &str, pts: &[(Q, Q)]) {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                d.push(' ');
            }
            let flipped = &self.h - y;
            let _ = write!(d, "{} {} {}", if i == 0 { "M" } else { "L" }, dec(x), dec(&flipped));
        }
        let _ = writeln!(self.body, "<path class=\"{class}\" d=\"{d}\"/>");
    }

    fn open_group(&mut self, class: &str, width: &Q) {
        let _ = writeln!(self.body, "<g class=\"{class}\" stroke-width=\"{}\">", dec(width));
    }

    fn close_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    fn finish(self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" fill=\"none\" stroke=\"black\" stroke-linecap=\"round\">",
            dec(&self.w),
            dec(&self.h)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn stroke() -> Q {
    q(1, 500)
}

/// Base segment `[0,1] × {0}` plus one vertical stroke per blade.
pub fn render_comb(c: &Comb) -> String {
    let mut cv = Canvas::new(q(1, 1), q(1, 1));
    cv.open_group("comb", &stroke());
    cv.path("base", &[(q(0, 1), q(0, 1)), (q(1, 1), q(0, 1))]);
    for b in c.blades() {
        cv.path("blade", &[(b.x.clone(), q(0, 1)), (b.x.clone(), b.tip.clone())]);
    }
    cv.close_group();
    cv.finish()
}

/// Cone embedding: every blade is a segment from the apex.
pub fn render_fan(c: &Comb) -> String {
    let mut cv = Canvas::new(q(1, 1), q(1, 1));
    let pair = |p: [Q; 2]| {
        let [u, v] = p;
        (u, v)
    };
    let apex = pair(embed_cone(c, &FanPoint::Top).expect("top is valid"));
    cv.open_group("fan", &stroke());
    for b in c.blades() {
        let tip = FanPoint::on(b.index.clone(), b.tip.clone());
        let end = pair(embed_cone(c, &tip).expect("blade tips are valid"));
        cv.path("blade", &[apex.clone(), end]);
    }
    cv.close_group();
    cv.finish()
}

/// Projection `(x, y, z) ↦ (x + z/2, y + z/3)`.
pub fn project(p: &[Q; 3]) -> (Q, Q) {
    (&p[0] + &p[2] * q(1, 2), &p[1] + &p[2] * q(1, 3))
}

/// Base comb in the `z = 0` plane, then one group per sheet; sheet `n` is drawn at
/// stroke width `stroke/(n+1)`.
pub fn render_spatial(s: &SpatialModel) -> String {
    let mut pts_max = (q(1, 1), q(1, 1));
    for sh in &s.sheets {
        for b in &sh.blades {
            for p in &b.polyline {
                let (u, v) = project(p);
                if u > pts_max.0 {
                    pts_max.0 = u;
                }
                if v > pts_max.1 {
                    pts_max.1 = v;
                }
            }
        }
    }
    let mut cv = Canvas::new(pts_max.0, pts_max.1);
    cv.open_group("base", &stroke());
    cv.path("base", &[(q(0, 1), q(0, 1)), (q(1, 1), q(0, 1))]);
    for b in s.base.blades() {
        cv.path("blade", &[(b.x.clone(), q(0, 1)), (b.x.clone(), b.tip.clone())]);
    }
    cv.close_group();
    for sh in &s.sheets {
        let w = stroke() / Q::from_integer((sh.n as i64 + 1).into());
        cv.open_group(&format!("sheet-{}", sh.n), &w);
        for b in &sh.blades {
            let pts: Vec<(Q, Q)> = b.polyline.iter().map(project).collect();
            cv.path("blade", &pts);
        }
        cv.close_group();
    }
    cv.finish()
}

pub fn render(c: &Comb, style: Style) -> Option<String> {
    match style {
        Style::Comb => Some(render_comb(c)),
        Style::Fan => Some(render_fan(c)),
        Style::Spatial => None,
    }
}

/// Number of `<path` elements with the given class.
pub fn count_paths(svg: &str, class: &str) -> usize {
    svg.matches(&format!("<path class=\"{class}\"")).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedset::parse_set_expr;
    use crate::construct::{build_canonical, build_epg_comb, build_nonsmooth_3d, CanonicalKind};

    #[test]
    fn comb_strokes_match_blades() {
        let c = build_epg_comb(&parse_set_expr("pt(0)+pt(1/2)+pt(3/4)").unwrap(), 2, 6).unwrap();
        let svg = render_comb(&c);
        assert_eq!(count_paths(&svg, "blade"), 43);
        assert_eq!(count_paths(&svg, "base"), 1);
        assert_eq!(svg, render_comb(&c));
    }

    #[test]
    fn fan_segments_start_at_apex() {
        let c = build_canonical(CanonicalKind::Star, 1, 4).unwrap();
        let svg = render_fan(&c);
        assert_eq!(count_paths(&svg, "blade"), c.len());
        for line in svg.lines().filter(|l| l.starts_with("<path")) {
            assert!(line.contains("d=\"M 0.500000000000 1.000000000000 L"), "{line}");
        }
    }

    #[test]
    fn spatial_has_group_per_sheet() {
        let s = build_nonsmooth_3d(3, 2, 2).unwrap();
        let svg = render_spatial(&s);
        for n in 1..=3 {
            assert!(svg.contains(&format!("class=\"sheet-{n}\"")));
        }
        let expected = s.base.len() + s.sheets.iter().map(|sh| sh.blades.len()).sum::<usize>();
        assert_eq!(count_paths(&svg, "blade"), expected);
    }
}
