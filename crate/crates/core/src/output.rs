//! Artifact emission: JSON documents whose scalar fields are exact
//! strings (bit-for-bit round-trip), deterministic SVG renderings, and
//! CSV tables.
//!
//! Floating point appears only in SVG coordinates, printed to 12
//! significant digits with a fixed format; captions embed the exact
//! strings, so the picture is approximate but the record is not.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admissibility::GridCase;
use crate::analysis::{
    classify, escape_distance_sides, AnalysisError, CompatibleSequence, LimitResolution,
    NontrivialPath, Verdict,
};
use crate::flow::{Direction, FlowError, HitKind, Orbit, PhasePoint, Slope, Termination};
use crate::geometry::{sigma, word_string, AngleClass, Boundary, Orientation, Point};
use crate::scalar::{QuadScalar, ScalarError};
use crate::suites::SuiteReport;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------
// Exact-string documents
// ---------------------------------------------------------------------

/// A planar point as two exact coordinate strings ("p/q" or
/// "p/q+r/s*sqrt(d)", as printed by the scalar layer).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDoc {
    pub x: String,
    pub y: String,
}

impl PointDoc {
    pub fn of(p: &Point) -> Self {
        Self {
            x: p.x.to_string(),
            y: p.y.to_string(),
        }
    }

    pub fn to_point(&self) -> Result<Point, OutputError> {
        Ok(Point::new(
            QuadScalar::from_str(&self.x)?,
            QuadScalar::from_str(&self.y)?,
        ))
    }
}

/// A direction as its two signs and an exact slope magnitude; `None`
/// slope means vertical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionDoc {
    pub sx: i8,
    pub sy: i8,
    pub slope: Option<String>,
}

impl DirectionDoc {
    pub fn of(d: &Direction) -> Self {
        Self {
            sx: d.sx(),
            sy: d.sy(),
            slope: match d.slope() {
                Slope::Finite(m) => Some(m.to_string()),
                Slope::Vertical => None,
            },
        }
    }

    pub fn to_direction(&self) -> Result<Direction, OutputError> {
        let slope = match &self.slope {
            Some(s) => Slope::Finite(QuadScalar::from_str(s)?),
            None => Slope::Vertical,
        };
        Ok(Direction::new(self.sx, self.sy, slope)?)
    }
}

/// One phase point: a position and the outgoing direction there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDoc {
    pub pos: PointDoc,
    pub dir: DirectionDoc,
}

impl StateDoc {
    pub fn of(s: &PhasePoint) -> Self {
        Self {
            pos: PointDoc::of(&s.pos),
            dir: DirectionDoc::of(&s.dir),
        }
    }

    pub fn to_phase(&self) -> Result<PhasePoint, OutputError> {
        Ok(PhasePoint::new(
            self.pos.to_point()?,
            self.dir.to_direction()?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitDoc {
    HorizontalWall,
    VerticalWall,
    ConvexCorner,
}

impl HitDoc {
    pub fn of(h: &HitKind) -> Self {
        match h {
            HitKind::Wall(Orientation::Horizontal) => Self::HorizontalWall,
            HitKind::Wall(Orientation::Vertical) => Self::VerticalWall,
            HitKind::ConvexCorner => Self::ConvexCorner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TerminationDoc {
    Periodic { period: usize },
    Singular { collision: usize, corner: PointDoc },
    ReachedSide { collision: usize },
    CapReached,
}

/// Short single-line description of a termination, for captions.
pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Periodic { period } => format!("periodic, period {period}"),
        Termination::Singular { collision, corner } => {
            format!("singular at ({}, {}), collision {}", corner.x, corner.y, collision)
        }
        Termination::ReachedSide { collision } => format!("reached stop side, collision {collision}"),
        Termination::CapReached => "cap reached".into(),
    }
}

impl TerminationDoc {
    pub fn of(t: &Termination) -> Self {
        match t {
            Termination::Periodic { period } => Self::Periodic { period: *period },
            Termination::Singular { collision, corner } => Self::Singular {
                collision: *collision,
                corner: PointDoc::of(corner),
            },
            Termination::ReachedSide { collision } => Self::ReachedSide {
                collision: *collision,
            },
            Termination::CapReached => Self::CapReached,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscapeDoc {
    pub collision: usize,
    pub removed_idx: usize,
}

/// A full traced orbit. `states[0]` is the launch phase point and
/// `states[k]` the post-reflection state of collision `k`, exactly as in
/// the flow layer; parsing the document back recovers every coordinate
/// bit for bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitDoc {
    pub table: String,
    pub level: Option<u32>,
    pub states: Vec<StateDoc>,
    pub hits: Vec<HitDoc>,
    pub termination: TerminationDoc,
    pub escapes: Vec<EscapeDoc>,
    pub returns: Vec<usize>,
    pub endpoint_hits: Vec<usize>,
}

impl OrbitDoc {
    pub fn of(orbit: &Orbit) -> Self {
        Self {
            table: orbit.table.clone(),
            level: orbit.level,
            states: orbit.states.iter().map(StateDoc::of).collect(),
            hits: orbit.hits.iter().map(HitDoc::of).collect(),
            termination: TerminationDoc::of(&orbit.termination),
            escapes: orbit
                .escapes
                .iter()
                .map(|m| EscapeDoc {
                    collision: m.collision,
                    removed_idx: m.removed_idx,
                })
                .collect(),
            returns: orbit.returns.clone(),
            endpoint_hits: orbit.endpoint_hits.clone(),
        }
    }

    /// The exact phase points encoded in the document.
    pub fn states_exact(&self) -> Result<Vec<PhasePoint>, OutputError> {
        self.states.iter().map(StateDoc::to_phase).collect()
    }
}

pub fn orbit_json(orbit: &Orbit) -> String {
    to_pretty(&OrbitDoc::of(orbit))
}

pub fn parse_orbit_json(s: &str) -> Result<OrbitDoc, OutputError> {
    Ok(serde_json::from_str(s)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub x: String,
    pub y: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedDoc {
    pub left: PointDoc,
    pub right: PointDoc,
    pub word: String,
}

/// A boundary: ordered vertex cycle, removed segments, and the removed
/// height when the boundary is a prefractal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryDoc {
    pub name: String,
    pub level: Option<u32>,
    pub sigma: Option<String>,
    pub vertices: Vec<VertexDoc>,
    pub removed: Vec<RemovedDoc>,
}

impl BoundaryDoc {
    pub fn of(b: &Boundary) -> Self {
        Self {
            name: b.name().to_string(),
            level: b.level(),
            sigma: b.level().map(|n| sigma(n).to_string()),
            vertices: b
                .corners()
                .iter()
                .map(|c| VertexDoc {
                    x: c.point.x.to_string(),
                    y: c.point.y.to_string(),
                    class: match c.class {
                        AngleClass::Convex => "convex".into(),
                        AngleClass::Reflex => "reflex".into(),
                    },
                })
                .collect(),
            removed: b
                .removed()
                .iter()
                .map(|r| RemovedDoc {
                    left: PointDoc::of(&r.left),
                    right: PointDoc::of(&r.right),
                    word: word_string(&r.word),
                })
                .collect(),
        }
    }
}

pub fn boundary_json(b: &Boundary) -> String {
    to_pretty(&BoundaryDoc::of(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDoc {
    pub level: u32,
    pub collisions: usize,
    pub termination: TerminationDoc,
    pub tau: Option<usize>,
    pub upsilon: Option<usize>,
    pub escape: Option<PointDoc>,
    pub return_point: Option<PointDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub verdict: String,
    pub evidence_level: u32,
    pub detail: String,
}

/// Per-level escape/return record of one initial condition traced across
/// a range of prefractal levels, with its classification certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub start: PointDoc,
    pub launch: DirectionDoc,
    pub levels: Vec<LevelDoc>,
    pub classification: ClassificationDoc,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Periodic => "periodic",
        Verdict::Recurrent => "recurrent",
        Verdict::Singular => "singular",
        Verdict::Undetermined => "undetermined",
    }
}

impl SequenceDoc {
    pub fn of(seq: &CompatibleSequence) -> Self {
        let classification = classify(seq);
        Self {
            start: PointDoc::of(&seq.start),
            launch: DirectionDoc::of(&seq.launch),
            levels: seq
                .levels
                .iter()
                .enumerate()
                .map(|(n, rec)| LevelDoc {
                    level: rec.level,
                    collisions: rec.orbit.collisions(),
                    termination: TerminationDoc::of(&rec.orbit.termination),
                    tau: rec.tau,
                    upsilon: rec.upsilon,
                    escape: seq.escape_point(n).map(PointDoc::of),
                    return_point: rec
                        .upsilon
                        .map(|u| PointDoc::of(&rec.orbit.states[u].pos)),
                })
                .collect(),
            classification: ClassificationDoc {
                verdict: verdict_name(classification.verdict).to_string(),
                evidence_level: classification.evidence_level,
                detail: classification.detail,
            },
        }
    }
}

pub fn sequence_json(seq: &CompatibleSequence) -> String {
    to_pretty(&SequenceDoc::of(seq))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitDoc {
    pub kind: String,
    pub address: Option<String>,
    pub point: Option<PointDoc>,
    pub lo: Option<String>,
    pub hi: Option<String>,
}

impl LimitDoc {
    pub fn of(limit: &LimitResolution) -> Self {
        match limit {
            LimitResolution::Exact { address, point } => Self {
                kind: "exact".into(),
                address: Some(address.to_string()),
                point: Some(PointDoc::of(point)),
                lo: None,
                hi: None,
            },
            LimitResolution::Bracketed { lo, hi } => Self {
                kind: "bracketed".into(),
                address: None,
                point: None,
                lo: Some(lo.to_string()),
                hi: Some(hi.to_string()),
            },
        }
    }
}

/// A nontrivial-path certificate: the escape points and nested polyline
/// sizes, plus the resolved limit endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDoc {
    pub start: PointDoc,
    pub launch: DirectionDoc,
    pub escape_points: Vec<PointDoc>,
    pub polyline_lengths: Vec<usize>,
    pub limit: LimitDoc,
}

impl PathDoc {
    pub fn of(path: &NontrivialPath) -> Self {
        Self {
            start: PointDoc::of(&path.start),
            launch: DirectionDoc::of(&path.launch),
            escape_points: path.escape_points.iter().map(PointDoc::of).collect(),
            polyline_lengths: path.level_polylines.iter().map(Vec::len).collect(),
            limit: LimitDoc::of(&path.limit),
        }
    }
}

pub fn path_json(path: &NontrivialPath) -> String {
    to_pretty(&PathDoc::of(path))
}

/// Verification report over suite runs, machine-readable.
pub fn suites_json(reports: &[SuiteReport]) -> String {
    to_pretty(&reports)
}

/// Verification report over suite runs, human-readable: one line per
/// suite and one indented line per failing check.
pub fn suites_text(reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).collect();
        writeln!(
            out,
            "{}: {} ({}/{} checks)",
            r.suite,
            if failed.is_empty() { "PASS" } else { "FAIL" },
            r.checks.len() - failed.len(),
            r.checks.len()
        )
        .expect("write to string");
        for c in failed {
            writeln!(out, "  FAIL {}: {}", c.label, c.detail).expect("write to string");
        }
    }
    out
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------

/// Admissibility grid as CSV, rows sorted by the `(x0, m)` case id so
/// assembly is deterministic regardless of traversal order.
pub fn grid_csv(cases: &[GridCase]) -> String {
    let mut rows: Vec<&GridCase> = cases.iter().collect();
    rows.sort_by(|a, b| (&a.x0, &a.m).cmp(&(&b.x0, &b.m)));
    let mut out = String::from("x0,m,periods,first_footprints\n");
    for c in rows {
        let periods = c
            .periods
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("|");
        let feet = c
            .first_footprints
            .iter()
            .map(|f| f.clone().unwrap_or_default())
            .collect::<Vec<_>>()
            .join("|");
        writeln!(out, "{},{},{},{}", c.x0, c.m, periods, feet).expect("write to string");
    }
    out
}

/// Escape distances against the binary-truncation values they must
/// equal, one row per computed level.
pub fn escape_distance_csv(seq: &CompatibleSequence) -> Result<String, AnalysisError> {
    let mut out = String::from("level,tau,upsilon,escape_x,escape_y,distance,truncation,equal\n");
    for (n, rec) in seq.levels.iter().enumerate() {
        let (lhs, rhs) = escape_distance_sides(seq, n)?;
        let esc = seq.escape_point(n).expect("sides imply an escape");
        let tau = rec.tau.expect("sides imply an escape");
        let upsilon = rec.upsilon.map(|u| u.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            rec.level,
            tau,
            upsilon,
            esc.x,
            esc.y,
            lhs,
            rhs,
            lhs == rhs
        )
        .expect("write to string");
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// SVG renderings
// ---------------------------------------------------------------------

/// `v` printed to 12 significant digits, trailing zeros trimmed. Fixed
/// notation is fine: every coordinate drawn lies within a few units of
/// the origin.
fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let dec = (11 - mag).max(0) as usize;
    let s = format!("{v:.dec$}");
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

fn esc_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Accumulates world-space elements (y up), then emits a y-flipped SVG
/// with captions below the drawing. All numeric output goes through
/// [`sig12`], so a fixed input yields a byte-identical document.
struct Svg {
    elements: Vec<String>,
    captions: Vec<String>,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Svg {
    fn new() -> Self {
        Self {
            elements: Vec::new(),
            captions: Vec::new(),
            lo: (f64::INFINITY, f64::INFINITY),
            hi: (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: (f64, f64)) {
        self.lo.0 = self.lo.0.min(p.0);
        self.lo.1 = self.lo.1.min(p.1);
        self.hi.0 = self.hi.0.max(p.0);
        self.hi.1 = self.hi.1.max(p.1);
    }

    fn world(p: &Point) -> (f64, f64) {
        (p.x.to_f64(), p.y.to_f64())
    }

    fn segment(&mut self, a: &Point, b: &Point, class: &str) {
        let a = Self::world(a);
        let b = Self::world(b);
        self.grow(a);
        self.grow(b);
        self.elements.push(format!(
            "<line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            sig12(a.0),
            sig12(-a.1),
            sig12(b.0),
            sig12(-b.1)
        ));
    }

    fn polyline(&mut self, pts: &[Point], class: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut coords = Vec::with_capacity(pts.len());
        for p in pts {
            let w = Self::world(p);
            self.grow(w);
            coords.push(format!("{},{}", sig12(w.0), sig12(-w.1)));
        }
        self.elements.push(format!(
            "<polyline class=\"{class}\" points=\"{}\"/>",
            coords.join(" ")
        ));
    }

    fn dot(&mut self, p: &Point, class: &str) {
        let w = Self::world(p);
        self.grow(w);
        self.elements.push(format!(
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"0.035\"/>",
            sig12(w.0),
            sig12(-w.1)
        ));
    }

    fn caption(&mut self, text: String) {
        self.captions.push(text);
    }

    fn finish(self) -> String {
        const MARGIN: f64 = 0.3;
        const LINE: f64 = 0.22;
        let lo_x = self.lo.0 - MARGIN;
        let lo_y = -self.hi.1 - MARGIN;
        let width = (self.hi.0 - self.lo.0) + 2.0 * MARGIN;
        let height = (self.hi.1 - self.lo.1) + 2.0 * MARGIN + LINE * (self.captions.len() as f64 + 0.5);
        let mut out = String::new();
        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"{}\" height=\"{}\">",
            sig12(lo_x),
            sig12(lo_y),
            sig12(width),
            sig12(height),
            sig12(width * 160.0),
            sig12(height * 160.0)
        )
        .expect("write to string");
        out.push_str(concat!(
            "<style>",
            ".wall{stroke:#1b1b1b;fill:none;stroke-width:0.025;stroke-linecap:square}",
            ".gap{stroke:#c23030;fill:none;stroke-width:0.02;stroke-dasharray:0.07 0.05}",
            ".orbit{stroke:#1a56c4;fill:none;stroke-width:0.014;stroke-linejoin:round}",
            ".mark{fill:#c23030;stroke:none}",
            ".start{fill:#1a56c4;stroke:none}",
            "text{font:0.15px monospace;fill:#1b1b1b}",
            "</style>\n"
        ));
        for e in &self.elements {
            out.push_str(e);
            out.push('\n');
        }
        let base = -self.lo.1 + MARGIN + LINE;
        for (i, c) in self.captions.iter().enumerate() {
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\">{}</text>",
                sig12(lo_x + MARGIN / 2.0),
                sig12(base + LINE * i as f64),
                esc_xml(c)
            )
            .expect("write to string");
        }
        out.push_str("</svg>\n");
        out
    }
}

fn draw_boundary(svg: &mut Svg, b: &Boundary) {
    for (a, z) in b.sides() {
        svg.segment(a, z, "wall");
    }
    for r in b.removed() {
        svg.segment(&r.left, &r.right, "gap");
    }
}

/// The boundary cycle, removed segments dashed, with the exact removed
/// height in the caption.
pub fn boundary_svg(b: &Boundary) -> String {
    let mut svg = Svg::new();
    draw_boundary(&mut svg, b);
    match b.level() {
        Some(n) => svg.caption(format!(
            "{}: removed segments at height {}",
            b.name(),
            sigma(n)
        )),
        None => svg.caption(b.name().to_string()),
    }
    svg.finish()
}

/// The orbit polyline over its table, start dotted, escape collisions
/// marked; the caption records the exact initial condition.
pub fn orbit_svg(b: &Boundary, orbit: &Orbit) -> String {
    let mut svg = Svg::new();
    draw_boundary(&mut svg, b);
    let pts: Vec<Point> = orbit.states.iter().map(|s| s.pos.clone()).collect();
    svg.polyline(&pts, "orbit");
    svg.dot(&pts[0], "start");
    for m in &orbit.escapes {
        svg.dot(&orbit.states[m.collision].pos, "mark");
    }
    let start = &orbit.states[0];
    svg.caption(format!(
        "start ({}, {}) dir {}",
        start.pos.x, start.pos.y, start.dir
    ));
    svg.caption(format!(
        "collisions {}, {}",
        orbit.collisions(),
        termination_label(&orbit.termination)
    ));
    svg.finish()
}

/// The deepest polyline of a nontrivial path over the given table, all
/// escape points marked, with the exact limit in the caption.
pub fn path_svg(b: &Boundary, path: &NontrivialPath) -> String {
    let mut svg = Svg::new();
    draw_boundary(&mut svg, b);
    let deepest = path
        .level_polylines
        .last()
        .expect("paths have at least one level");
    svg.polyline(deepest, "orbit");
    svg.dot(&path.start, "start");
    for p in &path.escape_points {
        svg.dot(p, "mark");
    }
    svg.caption(format!(
        "start ({}, {}) dir {}",
        path.start.x, path.start.y, path.launch
    ));
    match &path.limit {
        LimitResolution::Exact { address, point } => {
            svg.caption(format!("limit ({}, {}) address {}", point.x, point.y, address));
        }
        LimitResolution::Bracketed { lo, hi } => {
            svg.caption(format!("limit bracketed in [{lo}, {hi}] x {{3}}"));
        }
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{base_sequence, build_nontrivial_path};
    use crate::flow::trace_orbit;
    use crate::geometry::t_prefractal;
    use crate::scalar::{qrat, sqrt2_combo};

    fn sample_orbit(slope: QuadScalar, cap: usize) -> Orbit {
        let table = t_prefractal(1);
        trace_orbit(
            &table,
            Point::new(qrat(1, 3), QuadScalar::zero()),
            Direction::up_right(slope),
            cap,
        )
        .unwrap()
    }

    #[test]
    fn orbit_json_round_trips_bit_for_bit() {
        for orbit in [
            sample_orbit(qrat(1, 3), 40),
            sample_orbit(sqrt2_combo(0, 1, 1, 34), 25),
        ] {
            let json = orbit_json(&orbit);
            let doc = parse_orbit_json(&json).unwrap();
            assert_eq!(doc, OrbitDoc::of(&orbit));
            assert_eq!(doc.states_exact().unwrap(), orbit.states);
            // A second emit of the parsed document is byte-identical.
            assert_eq!(to_pretty(&doc), json);
        }
    }

    #[test]
    fn boundary_json_lists_the_exact_cycle() {
        let doc = BoundaryDoc::of(&t_prefractal(0));
        assert_eq!(doc.level, Some(0));
        assert_eq!(doc.sigma.as_deref(), Some("3/2"));
        assert_eq!(doc.vertices.len(), 8);
        assert_eq!(doc.removed.len(), 2);
        assert_eq!(doc.removed[0].word, "L");
        assert_eq!(doc.removed[1].word, "R");
        assert_eq!(
            doc.vertices.iter().filter(|v| v.class == "reflex").count(),
            2
        );
        let json = boundary_json(&t_prefractal(0));
        let back: BoundaryDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn svg_output_is_deterministic_and_embeds_exact_captions() {
        let table = t_prefractal(2);
        let one = boundary_svg(&table);
        let two = boundary_svg(&table);
        assert_eq!(one, two);
        assert!(one.starts_with("<svg "));
        assert!(one.contains("21/8"), "caption embeds the exact height");

        let orbit = sample_orbit(qrat(1, 3), 40);
        let svg = orbit_svg(&t_prefractal(1), &orbit);
        assert!(svg.contains("<polyline class=\"orbit\""));
        assert!(svg.contains("start (1/3, 0/1)"));
        assert_eq!(svg, orbit_svg(&t_prefractal(1), &orbit));
    }

    #[test]
    fn sequence_and_path_documents_capture_the_certificate() {
        let seq = base_sequence(qrat(1, 3), Direction::up_right(qrat(1, 3)), 3, 300).unwrap();
        let doc = SequenceDoc::of(&seq);
        assert_eq!(doc.levels.len(), 4);
        assert!(doc.levels.iter().all(|l| l.tau.is_some()));
        assert_eq!(doc.classification.verdict, "periodic");

        let path = build_nontrivial_path(&seq).unwrap();
        let pd = PathDoc::of(&path);
        assert_eq!(pd.escape_points.len(), 4);
        let limit = pd.limit;
        assert_eq!(limit.kind, "exact");
        assert_eq!(limit.address.as_deref(), Some("(LLRR)*"));
        assert_eq!(limit.point.unwrap().x, "-2/5");

        let svg = path_svg(&t_prefractal(3), &path);
        assert!(svg.contains("(LLRR)*"));
    }

    #[test]
    fn escape_distance_table_reports_equal_sides() {
        let seq = base_sequence(qrat(1, 3), Direction::up_right(qrat(1, 3)), 3, 300).unwrap();
        let csv = escape_distance_csv(&seq).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("level,tau,upsilon"));
        assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    }

    #[test]
    fn grid_csv_sorts_by_case_id() {
        let case = |x0: &str, m: &str| GridCase {
            x0: x0.into(),
            m: m.into(),
            periods: vec![4, 8],
            first_footprints: vec![Some("1/3".into()), None],
        };
        let csv = grid_csv(&[case("2/5", "1/3"), case("1/3", "2/3"), case("1/3", "1/5")]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x0,m,periods,first_footprints");
        assert_eq!(lines[1], "1/3,1/5,4|8,1/3|");
        assert_eq!(lines[2], "1/3,2/3,4|8,1/3|");
        assert_eq!(lines[3], "2/5,1/3,4|8,1/3|");
    }

    #[test]
    fn sig12_is_stable() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.5), "1.5");
        assert_eq!(sig12(-0.125), "-0.125");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(123_456.789), "123456.789");
    }
}
