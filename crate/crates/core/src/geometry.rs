//! Prefractal tables, their boundaries, and the limit ("elusive") segment.
//!
//! The level-0 table `T_0` is the unit square `[0,1]^2` with the rectangle
//! `[-1/2, 3/2] x [1, 3/2]` attached on top. Two contractions
//!
//! ```text
//!   phi_R(p) = p/2 + (1, 3/2)        phi_L(p) = p/2 + (-1/2, 3/2)
//! ```
//!
//! copy the whole figure at half scale onto the right and left thirds of its
//! top edge. `T_n` glues all copies up to depth `n`; what remains of the top
//! edge at height `sigma_n = 3 (1 - 2^-(n+1))` is a row of `2^(n+1)` open
//! gaps, the *removed segments*, each the image of the base `[0,1] x {0}`
//! under a depth-`n+1` word in `{L, R}`. The gaps converge to the *elusive
//! segment* `E = [-1, 2] x {3}`, which the maps permute among themselves.
//!
//! Boundaries are stored as counterclockwise rectilinear cycles with exact
//! coordinates. Corner angles are `pi/2` (convex) or `3 pi/2` (reflex);
//! maximal straight sides are split into edges at removed-segment endpoints.

use std::collections::HashMap;
use std::fmt;

use num::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{pow2, rat, QuadScalar, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point {0} does not lie on the elusive segment [-1,2] x {{3}}")]
    NotOnElusiveSegment(String),
    #[error("only rational points of the elusive segment have eventually periodic addresses")]
    IrrationalAddress,
    #[error("cannot parse {0:?} as an L/R word")]
    BadWord(String),
    #[error("invalid start for an orbit: {0}")]
    InvalidStart(String),
}

/// Exact point in the plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Point {
    pub x: QuadScalar,
    pub y: QuadScalar,
}

impl Point {
    pub fn new(x: QuadScalar, y: QuadScalar) -> Self {
        Point { x, y }
    }

    pub fn from_rationals(x: Rational, y: Rational) -> Self {
        Point::new(QuadScalar::from(x), QuadScalar::from(y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Point with machine-integer rational coordinates, mostly for tests.
pub fn pt(xn: i64, xd: i64, yn: i64, yd: i64) -> Point {
    Point::from_rationals(rat(xn, xd), rat(yn, yd))
}

/// One letter of the branching alphabet: `L` selects the left copy
/// (`phi_L`), `R` the right copy (`phi_R`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Branch {
    L,
    R,
}

impl Branch {
    pub fn swapped(self) -> Self {
        match self {
            Branch::L => Branch::R,
            Branch::R => Branch::L,
        }
    }

    fn translation(self) -> (Rational, Rational) {
        match self {
            Branch::R => (rat(1, 1), rat(3, 2)),
            Branch::L => (rat(-1, 2), rat(3, 2)),
        }
    }

    /// Action on the x-coordinate of the elusive segment.
    fn elusive_map(self, x: &Rational) -> Rational {
        match self {
            Branch::R => x / rat(2, 1) + rat(1, 1),
            Branch::L => x / rat(2, 1) - rat(1, 2),
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::L => write!(f, "L"),
            Branch::R => write!(f, "R"),
        }
    }
}

pub fn word_string(word: &[Branch]) -> String {
    word.iter().map(Branch::to_string).collect()
}

pub fn parse_word(s: &str) -> Result<Vec<Branch>, GeometryError> {
    s.chars()
        .map(|c| match c {
            'L' => Ok(Branch::L),
            'R' => Ok(Branch::R),
            _ => Err(GeometryError::BadWord(s.to_string())),
        })
        .collect()
}

/// All words of the given length in lexicographic order (`L < R`), which for
/// this system is also left-to-right spatial order of the copies.
pub fn words_of_length(len: u32) -> Vec<Vec<Branch>> {
    let count = 1usize << len;
    (0..count)
        .map(|i| {
            (0..len)
                .map(|b| {
                    if (i >> (len - 1 - b)) & 1 == 1 {
                        Branch::R
                    } else {
                        Branch::L
                    }
                })
                .collect()
        })
        .collect()
}

/// Composition `phi_{w_1} o ... o phi_{w_j}`: the affine contraction
/// `p -> p / 2^k + (tx, ty)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineContraction {
    pub k: u32,
    pub tx: Rational,
    pub ty: Rational,
}

impl AffineContraction {
    pub fn identity() -> Self {
        AffineContraction {
            k: 0,
            tx: Rational::zero(),
            ty: Rational::zero(),
        }
    }

    /// Extends the composition on the inside: `self o phi_b`.
    pub fn then(&self, b: Branch) -> Self {
        let (tx, ty) = b.translation();
        let scale = pow2(-(self.k as i32));
        AffineContraction {
            k: self.k + 1,
            tx: &self.tx + tx * &scale,
            ty: &self.ty + ty * scale,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        let s = -(self.k as i32);
        Point::new(
            p.x.scale_pow2(s) + QuadScalar::from(&self.tx),
            p.y.scale_pow2(s) + QuadScalar::from(&self.ty),
        )
    }
}

/// The contraction selected by a word, outermost letter first.
pub fn word_map(word: &[Branch]) -> AffineContraction {
    word.iter()
        .fold(AffineContraction::identity(), |m, &b| m.then(b))
}

/// Height of the removed segments of `T_n`: `sigma_n = 3 (1 - 2^-(n+1))`.
pub fn sigma(n: u32) -> Rational {
    rat(3, 1) * (Rational::one() - pow2(-(n as i32 + 1)))
}

/// Vertical gap between the removed segments of `T_n` and the elusive
/// segment: `3 - sigma_n = 3 * 2^-(n+1)`.
pub fn elusive_gap(n: u32) -> Rational {
    rat(3, 1) * pow2(-(n as i32 + 1))
}

/// Endpoints of the elusive segment `E = [-1, 2] x {3}`.
pub fn elusive_segment() -> (Point, Point) {
    (pt(-1, 1, 3, 1), pt(2, 1, 3, 1))
}

/// Eventually periodic `L/R` itinerary of a point of the elusive segment.
///
/// Canonical form: the period is primitive and the preperiod is as short as
/// possible (trailing letters that merely rotate the period are absorbed),
/// so structural equality is semantic equality of infinite words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElusiveAddress {
    preperiod: Vec<Branch>,
    period: Vec<Branch>,
}

impl ElusiveAddress {
    pub fn new(mut preperiod: Vec<Branch>, mut period: Vec<Branch>) -> Self {
        assert!(!period.is_empty(), "address period must be nonempty");
        // Shrink the period to its primitive root.
        for len in 1..period.len() {
            if period.len() % len == 0 && period.chunks(len).all(|c| c == &period[..len]) {
                period.truncate(len);
                break;
            }
        }
        // Absorb preperiod letters that agree with the rotated period.
        while let Some(&last) = preperiod.last() {
            if last == *period.last().expect("nonempty") {
                preperiod.pop();
                period.rotate_right(1);
            } else {
                break;
            }
        }
        ElusiveAddress { preperiod, period }
    }

    pub fn preperiod(&self) -> &[Branch] {
        &self.preperiod
    }

    pub fn period(&self) -> &[Branch] {
        &self.period
    }

    /// Letter at position `i` (0-based) of the infinite word.
    pub fn letter(&self, i: usize) -> Branch {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The point of the elusive segment this address converges to: the
    /// preperiod applied to the fixed point of the period contraction.
    pub fn to_point(&self) -> Point {
        // Period composition acts on x as x -> x / 2^k + c.
        let mut k = 0i32;
        let mut c = Rational::zero();
        for &b in &self.period {
            let (t, _) = b.translation();
            c = c + t * pow2(-k);
            k += 1;
        }
        let fixed = c / (Rational::one() - pow2(-k));
        let mut x = fixed;
        for &b in self.preperiod.iter().rev() {
            x = b.elusive_map(&x);
        }
        Point::from_rationals(x, rat(3, 1))
    }
}

impl fmt::Display for ElusiveAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({})*",
            word_string(&self.preperiod),
            word_string(&self.period)
        )
    }
}

/// Inverse of [`ElusiveAddress::to_point`] for rational points: expand the
/// x-coordinate by the inverse branch maps until the state repeats.
///
/// Tie-break: `x >= 1/2` selects `R` (so the overlap point `1/2` reads
/// `R(L)*` rather than `L(R)*`).
pub fn point_to_address(p: &Point) -> Result<ElusiveAddress, GeometryError> {
    let three = QuadScalar::from_int(3);
    if p.y != three {
        return Err(GeometryError::NotOnElusiveSegment(p.to_string()));
    }
    let x = p
        .x
        .as_rational()
        .ok_or(GeometryError::IrrationalAddress)?
        .clone();
    if x < rat(-1, 1) || x > rat(2, 1) {
        return Err(GeometryError::NotOnElusiveSegment(p.to_string()));
    }
    let half = rat(1, 2);
    let mut seen: HashMap<Rational, usize> = HashMap::new();
    let mut letters: Vec<Branch> = Vec::new();
    let mut cur = x;
    loop {
        if let Some(&start) = seen.get(&cur) {
            let period = letters.split_off(start);
            return Ok(ElusiveAddress::new(letters, period));
        }
        seen.insert(cur.clone(), letters.len());
        if cur >= half {
            letters.push(Branch::R);
            cur = cur * rat(2, 1) - rat(2, 1);
        } else {
            letters.push(Branch::L);
            cur = cur * rat(2, 1) + rat(1, 1);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Interior angle at a corner of a rectilinear polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AngleClass {
    /// Interior angle `pi/2`; an orbit hitting it retroreflects.
    Convex,
    /// Interior angle `3 pi/2`; an orbit hitting it stops (singular).
    Reflex,
}

#[derive(Debug, Clone, Serialize)]
pub struct Corner {
    pub point: Point,
    pub class: AngleClass,
}

/// A straight piece of the boundary: part of one maximal side, cut at
/// removed-segment endpoints.
#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    /// Endpoints in counterclockwise traversal order.
    pub a: Point,
    pub b: Point,
    pub orientation: Orientation,
    /// Index of the maximal side this edge belongs to.
    pub side: usize,
    /// Construction stage that first contributed to the supporting side.
    pub level: u32,
    /// Axis-aligned unit normal pointing into the table.
    pub inward: (i8, i8),
    /// Set when this edge coincides with a removed segment.
    pub removed_idx: Option<usize>,
}

impl Edge {
    /// The coordinate shared by both endpoints: `y` for horizontal edges,
    /// `x` for vertical ones.
    pub fn fixed_coord(&self) -> &QuadScalar {
        match self.orientation {
            Orientation::Horizontal => &self.a.y,
            Orientation::Vertical => &self.a.x,
        }
    }

    /// Low/high bounds of the varying coordinate.
    pub fn span(&self) -> (&QuadScalar, &QuadScalar) {
        match self.orientation {
            Orientation::Horizontal => minmax(&self.a.x, &self.b.x),
            Orientation::Vertical => minmax(&self.a.y, &self.b.y),
        }
    }

    /// Closed membership test.
    pub fn contains(&self, p: &Point) -> bool {
        match self.orientation {
            Orientation::Horizontal => {
                p.y == self.a.y && {
                    let (lo, hi) = minmax(&self.a.x, &self.b.x);
                    *lo <= p.x && p.x <= *hi
                }
            }
            Orientation::Vertical => {
                p.x == self.a.x && {
                    let (lo, hi) = minmax(&self.a.y, &self.b.y);
                    *lo <= p.y && p.y <= *hi
                }
            }
        }
    }
}

fn minmax<'a>(u: &'a QuadScalar, v: &'a QuadScalar) -> (&'a QuadScalar, &'a QuadScalar) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// An open gap in the top edge of a prefractal: the image of the base
/// segment under `word`. Collisions on it still reflect (the boundary is
/// solid at this level); the flag exists so escapes can be marked.
#[derive(Debug, Clone, Serialize)]
pub struct RemovedSegment {
    pub left: Point,
    pub right: Point,
    pub word: Vec<Branch>,
}

impl RemovedSegment {
    /// Closed membership test.
    pub fn contains(&self, p: &Point) -> bool {
        p.y == self.left.y && self.left.x <= p.x && p.x <= self.right.x
    }

    pub fn is_endpoint(&self, p: &Point) -> bool {
        *p == self.left || *p == self.right
    }

    pub fn length(&self) -> QuadScalar {
        &self.right.x - &self.left.x
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Corner(usize),
    /// On the edge with this index (possibly at a non-corner endpoint).
    Edge(usize),
    Interior,
    Exterior,
}

/// A billiard table: a simple rectilinear polygon with exact vertices,
/// together with removed-segment bookkeeping for prefractals.
#[derive(Debug, Clone)]
pub struct Boundary {
    name: String,
    level: Option<u32>,
    corners: Vec<Corner>,
    /// Maximal straight sides, counterclockwise, `sides[i]` running from
    /// `corners[i]` to `corners[i+1]`.
    sides: Vec<(Point, Point)>,
    edges: Vec<Edge>,
    removed: Vec<RemovedSegment>,
    base_side: usize,
    sigma: Rational,
}

impl Boundary {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Prefractal depth, `None` for plain polygons.
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn sides(&self) -> &[(Point, Point)] {
        &self.sides
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn removed(&self) -> &[RemovedSegment] {
        &self.removed
    }

    /// Index of the base side (the unique lowest horizontal side).
    pub fn base_side(&self) -> usize {
        self.base_side
    }

    /// Height of the top row (removed segments for prefractals).
    pub fn top_height(&self) -> &Rational {
        &self.sigma
    }

    pub fn corner_at(&self, p: &Point) -> Option<usize> {
        self.corners.iter().position(|c| c.point == *p)
    }

    pub fn side_contains(&self, side: usize, p: &Point) -> bool {
        let (a, b) = &self.sides[side];
        segment_contains(a, b, p)
    }

    pub fn removed_containing(&self, p: &Point) -> Option<usize> {
        self.removed.iter().position(|r| r.contains(p))
    }

    pub fn is_removed_endpoint(&self, p: &Point) -> bool {
        self.removed.iter().any(|r| r.is_endpoint(p))
    }

    /// Exact point classification. Boundary membership is decided by edge
    /// scans; interior/exterior by horizontal ray casting over the vertical
    /// edges (half-open in `y`, so vertices are not double counted).
    pub fn locate(&self, p: &Point) -> Location {
        if let Some(i) = self.corner_at(p) {
            return Location::Corner(i);
        }
        if let Some(i) = self.edges.iter().position(|e| e.contains(p)) {
            return Location::Edge(i);
        }
        let mut crossings = 0usize;
        for (a, b) in self.sides.iter() {
            if a.x != b.x {
                continue; // horizontal side: parallel to the ray
            }
            if a.x <= p.x {
                continue;
            }
            let (lo, hi) = minmax(&a.y, &b.y);
            if *lo <= p.y && p.y < *hi {
                crossings += 1;
            }
        }
        if crossings % 2 == 1 {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    /// Signed area (shoelace); positive for the counterclockwise cycles
    /// built here.
    pub fn area(&self) -> Rational {
        let mut twice = QuadScalar::zero();
        let n = self.corners.len();
        for i in 0..n {
            let p = &self.corners[i].point;
            let q = &self.corners[(i + 1) % n].point;
            twice = twice + (&p.x * &q.y - &q.x * &p.y);
        }
        let half = twice.scale_pow2(-1);
        half.as_rational().expect("rectilinear area").clone()
    }

    /// O(m^2) exact simplicity check: no two sides intersect except at
    /// shared corners. Intended for tests on small levels.
    pub fn is_simple(&self) -> bool {
        let n = self.sides.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a1, b1) = &self.sides[i];
                let (a2, b2) = &self.sides[j];
                if let Some(bad) = rectilinear_overlap(a1, b1, a2, b2) {
                    let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                    let shared_corner = adjacent
                        && ((bad == *b1 && bad == *a2) || (bad == *a1 && bad == *b2));
                    if !shared_corner {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All points where the closed segment `[a, b]` meets the boundary.
    /// A positive-length overlap with a side is reported by its two
    /// endpoints, which is enough for "meets only at one point" tests.
    pub fn segment_boundary_hits(&self, a: &Point, b: &Point) -> Vec<Point> {
        let mut hits: Vec<Point> = Vec::new();
        for (u, v) in self.sides.iter() {
            for p in segment_intersections(a, b, u, v) {
                if !hits.contains(&p) {
                    hits.push(p);
                }
            }
        }
        hits
    }
}

/// Closed membership of `p` in the axis-aligned segment `[a, b]`.
fn segment_contains(a: &Point, b: &Point, p: &Point) -> bool {
    if a.x == b.x {
        let (lo, hi) = minmax(&a.y, &b.y);
        p.x == a.x && *lo <= p.y && p.y <= *hi
    } else {
        let (lo, hi) = minmax(&a.x, &b.x);
        p.y == a.y && *lo <= p.x && p.x <= *hi
    }
}

/// Closed membership of `p` on the segment from `a` to `b`, any slope.
pub fn point_on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    let cross = (&b.x - &a.x) * (&p.y - &a.y) - (&b.y - &a.y) * (&p.x - &a.x);
    if !cross.is_zero() {
        return false;
    }
    let between = |lo: &QuadScalar, hi: &QuadScalar, v: &QuadScalar| {
        let (lo, hi) = minmax(lo, hi);
        lo <= v && v <= hi
    };
    between(&a.x, &b.x, &p.x) && between(&a.y, &b.y, &p.y)
}

/// Intersection of two axis-aligned segments as a witness point, or `None`
/// if disjoint. For overlapping collinear segments any shared endpoint is
/// returned.
fn rectilinear_overlap(a1: &Point, b1: &Point, a2: &Point, b2: &Point) -> Option<Point> {
    segment_intersections(a1, b1, a2, b2).into_iter().next()
}

/// Intersection points of the closed segment `[a, b]` (arbitrary slope)
/// with the closed axis-aligned segment `[u, v]`. Collinear overlaps yield
/// the overlap's endpoints.
fn segment_intersections(a: &Point, b: &Point, u: &Point, v: &Point) -> Vec<Point> {
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    let vertical_side = u.x == v.x;
    let (side_c, side_lo, side_hi) = if vertical_side {
        let (lo, hi) = minmax(&u.y, &v.y);
        (&u.x, lo, hi)
    } else {
        let (lo, hi) = minmax(&u.x, &v.x);
        (&u.y, lo, hi)
    };
    let (num, den) = if vertical_side {
        (side_c - &a.x, dx.clone())
    } else {
        (side_c - &a.y, dy.clone())
    };
    if den.is_zero() {
        // Segment parallel to the side.
        if !num.is_zero() {
            return vec![];
        }
        // Collinear: overlap of the cross-axis ranges.
        let (seg_lo, seg_hi, lo, hi) = if vertical_side {
            let (sl, sh) = minmax(&a.y, &b.y);
            (sl.clone(), sh.clone(), side_lo.clone(), side_hi.clone())
        } else {
            let (sl, sh) = minmax(&a.x, &b.x);
            (sl.clone(), sh.clone(), side_lo.clone(), side_hi.clone())
        };
        let start = if seg_lo >= lo { seg_lo } else { lo };
        let end = if seg_hi <= hi { seg_hi } else { hi };
        if start > end {
            return vec![];
        }
        let mk = |t: QuadScalar| {
            if vertical_side {
                Point::new(side_c.clone(), t)
            } else {
                Point::new(t, side_c.clone())
            }
        };
        if start == end {
            return vec![mk(start)];
        }
        return vec![mk(start), mk(end)];
    }
    let t = num / &den;
    if t.sign() < 0 || t > QuadScalar::one() {
        return vec![];
    }
    let p = Point::new(&a.x + &dx * &t, &a.y + &dy * &t);
    let cross = if vertical_side { &p.y } else { &p.x };
    if *side_lo <= *cross && *cross <= *side_hi {
        vec![p]
    } else {
        vec![]
    }
}

/// Cycle entry used during construction: a vertex and the construction
/// level of the edge leaving it.
type CyclePoint = (Point, u32);

fn axis_direction(a: &Point, b: &Point) -> (i8, i8) {
    let dx = (&b.x - &a.x).sign();
    let dy = (&b.y - &a.y).sign();
    assert!(
        (dx == 0) != (dy == 0),
        "boundary edges must be axis-aligned and nondegenerate: {a} -> {b}"
    );
    (dx, dy)
}

/// The counterclockwise vertex cycle of `T_0`, starting at the origin.
fn t0_cycle() -> Vec<CyclePoint> {
    [
        pt(0, 1, 0, 1),
        pt(1, 1, 0, 1),
        pt(1, 1, 1, 1),
        pt(3, 2, 1, 1),
        pt(3, 2, 3, 2),
        pt(-1, 2, 3, 2),
        pt(-1, 2, 1, 1),
        pt(0, 1, 1, 1),
    ]
    .into_iter()
    .map(|p| (p, 0))
    .collect()
}

/// Corner walk of one glued copy, from just after its base's right endpoint
/// around to just before the left endpoint, in `T_0` coordinates.
const COPY_WALK: [(i64, i64, i64, i64); 6] = [
    (1, 1, 1, 1),
    (3, 2, 1, 1),
    (3, 2, 3, 2),
    (-1, 2, 3, 2),
    (-1, 2, 1, 1),
    (0, 1, 1, 1),
];

/// Splices the copy selected by `word` (placed at construction stage
/// `stage = word.len()`) into the host cycle.
fn splice_copy(cycle: &mut Vec<CyclePoint>, word: &[Branch]) {
    let stage = word.len() as u32;
    let map = word_map(word);
    let bl = map.apply(&pt(0, 1, 0, 1));
    let br = map.apply(&pt(1, 1, 0, 1));
    let y = bl.y.clone();

    // Host edge: the unique right-to-left horizontal edge at the base
    // height that spans the copy's base.
    let n = cycle.len();
    let mut host: Option<usize> = None;
    for i in 0..n {
        let (p, _) = &cycle[i];
        let (q, _) = &cycle[(i + 1) % n];
        if p.y == y && q.y == y && q.x <= bl.x && br.x <= p.x && q.x < p.x {
            assert!(host.is_none(), "ambiguous host edge for word {}", word_string(word));
            host = Some(i);
        }
    }
    let i = host.unwrap_or_else(|| panic!("no host edge for word {}", word_string(word)));
    let host_level = cycle[i].1;
    let host_next = cycle[(i + 1) % n].0.clone();

    let mut insert: Vec<CyclePoint> = Vec::with_capacity(8);
    if br == cycle[i].0 {
        // The copy's base reaches the host edge's right corner: the edge
        // leaving that corner becomes the copy's wall.
        cycle[i].1 = stage;
    } else {
        insert.push((br, stage));
    }
    for &(xn, xd, yn, yd) in COPY_WALK.iter() {
        insert.push((map.apply(&pt(xn, xd, yn, yd)), stage));
    }
    if bl != host_next {
        insert.push((bl, host_level));
    }
    let at = i + 1;
    cycle.splice(at..at, insert);
}

/// Removes straight-through vertices, keeping the earliest construction
/// level for merged edges.
fn merge_collinear(cycle: &mut Vec<CyclePoint>) {
    loop {
        let n = cycle.len();
        assert!(n >= 4, "degenerate boundary cycle");
        let mut dropped = false;
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let d1 = axis_direction(&cycle[prev].0, &cycle[i].0);
            let d2 = axis_direction(&cycle[i].0, &cycle[next].0);
            if d1 == d2 {
                let merged = cycle[prev].1.min(cycle[i].1);
                cycle[prev].1 = merged;
                cycle.remove(i);
                dropped = true;
                break;
            }
        }
        if !dropped {
            return;
        }
    }
}

/// Finishing pipeline shared by every table constructor: canonicalize the
/// cycle, classify corners, cut sides into edges, and validate orientation.
fn finish(
    name: String,
    level: Option<u32>,
    mut cycle: Vec<CyclePoint>,
    removed: Vec<RemovedSegment>,
    sigma: Rational,
) -> Boundary {
    merge_collinear(&mut cycle);

    // Canonical start: lexicographically smallest vertex.
    let start = cycle
        .iter()
        .enumerate()
        .min_by(|(_, (p, _)), (_, (q, _))| (&p.x, &p.y).cmp(&(&q.x, &q.y)))
        .map(|(i, _)| i)
        .expect("nonempty cycle");
    cycle.rotate_left(start);

    // Orientation must be counterclockwise (positive shoelace sum).
    let n = cycle.len();
    let mut twice_area = QuadScalar::zero();
    for i in 0..n {
        let p = &cycle[i].0;
        let q = &cycle[(i + 1) % n].0;
        twice_area = twice_area + (&p.x * &q.y - &q.x * &p.y);
    }
    assert!(twice_area.sign() > 0, "boundary cycle must be counterclockwise");

    let mut corners = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let (d1x, d1y) = axis_direction(&cycle[prev].0, &cycle[i].0);
        let (d2x, d2y) = axis_direction(&cycle[i].0, &cycle[next].0);
        let cross = d1x as i32 * d2y as i32 - d1y as i32 * d2x as i32;
        let class = match cross {
            1 => AngleClass::Convex,
            -1 => AngleClass::Reflex,
            _ => unreachable!("straight-through vertex survived merging"),
        };
        corners.push(Corner {
            point: cycle[i].0.clone(),
            class,
        });
    }

    let sides: Vec<(Point, Point)> = (0..n)
        .map(|i| (cycle[i].0.clone(), cycle[(i + 1) % n].0.clone()))
        .collect();

    let mut edges = Vec::new();
    for (si, (a, b)) in sides.iter().enumerate() {
        let (dx, dy) = axis_direction(a, b);
        let orientation = if dy == 0 {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        // Inward normal: interior lies to the left of the traversal.
        let inward = (-dy, dx);
        let level_introduced = cycle[si].1;

        // Cut points: removed-segment endpoints strictly inside this side.
        let mut cuts: Vec<Point> = Vec::new();
        for r in &removed {
            for p in [&r.left, &r.right] {
                if segment_contains(a, b, p) && p != a && p != b && !cuts.contains(p) {
                    cuts.push(p.clone());
                }
            }
        }
        // Sort along the traversal direction.
        cuts.sort_by(|p, q| {
            let key = |t: &Point| if dx != 0 { t.x.clone() } else { t.y.clone() };
            let (kp, kq) = (key(p), key(q));
            if dx > 0 || dy > 0 {
                kp.cmp(&kq)
            } else {
                kq.cmp(&kp)
            }
        });

        let mut from = a.clone();
        for cut in cuts.into_iter().chain(std::iter::once(b.clone())) {
            let removed_idx = removed.iter().position(|r| {
                (r.left == from && r.right == cut) || (r.right == from && r.left == cut)
            });
            edges.push(Edge {
                a: from.clone(),
                b: cut.clone(),
                orientation,
                side: si,
                level: level_introduced,
                inward,
                removed_idx,
            });
            from = cut;
        }
    }

    // Base side: unique lowest horizontal side.
    let min_y = sides
        .iter()
        .filter(|(a, b)| a.y == b.y)
        .map(|(a, _)| a.y.clone())
        .min()
        .expect("a horizontal side exists");
    let base_candidates: Vec<usize> = sides
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| a.y == b.y && a.y == min_y)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(base_candidates.len(), 1, "base side must be unique");
    let base_side = base_candidates[0];

    Boundary {
        name,
        level,
        corners,
        sides,
        edges,
        removed,
        base_side,
        sigma,
    }
}

/// The level-`n` prefractal table `T_n`.
pub fn t_prefractal(n: u32) -> Boundary {
    let mut cycle = t0_cycle();
    for stage in 1..=n {
        for word in words_of_length(stage) {
            splice_copy(&mut cycle, &word);
        }
    }
    let removed: Vec<RemovedSegment> = words_of_length(n + 1)
        .into_iter()
        .map(|word| {
            let map = word_map(&word);
            RemovedSegment {
                left: map.apply(&pt(0, 1, 0, 1)),
                right: map.apply(&pt(1, 1, 0, 1)),
                word,
            }
        })
        .collect();
    for w in removed.windows(2) {
        assert!(w[0].right.x < w[1].left.x, "removed segments out of order");
    }
    finish(format!("T_{n}"), Some(n), cycle, removed, sigma(n))
}

/// Axis-aligned rectangle `[0, w] x [0, h]` (counterclockwise), `w, h >= 1`.
fn rectangle(name: &str, w: i64, h: i64) -> Boundary {
    let cycle = vec![
        (pt(0, 1, 0, 1), 0),
        (pt(w, 1, 0, 1), 0),
        (pt(w, 1, h, 1), 0),
        (pt(0, 1, h, 1), 0),
    ];
    finish(name.to_string(), None, cycle, Vec::new(), rat(h, 1))
}

/// The unit square table.
pub fn unit_square() -> Boundary {
    rectangle("unit_square", 1, 1)
}

/// The `[0, 4] x [0, 1]` rectangle table.
pub fn rect_4x1() -> Boundary {
    rectangle("rect_4x1", 4, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0), rat(3, 2));
        assert_eq!(sigma(1), rat(9, 4));
        assert_eq!(sigma(2), rat(21, 8));
        assert_eq!(sigma(5), rat(189, 64));
        assert_eq!(sigma(8), rat(1533, 512));
        assert_eq!(elusive_gap(0), rat(3, 2));
        assert_eq!(elusive_gap(5), rat(3, 64));
    }

    #[test]
    fn word_maps_compose_outermost_first() {
        let rl = word_map(&parse_word("RL").unwrap());
        assert_eq!(rl.apply(&pt(0, 1, 0, 1)), pt(3, 4, 9, 4));
        let lr = word_map(&parse_word("LR").unwrap());
        assert_eq!(lr.apply(&pt(0, 1, 0, 1)), pt(0, 1, 9, 4));
        assert_eq!(lr.apply(&pt(1, 1, 0, 1)), pt(1, 4, 9, 4));
    }

    #[test]
    fn t0_shape() {
        let t0 = t_prefractal(0);
        assert_eq!(t0.corners().len(), 8);
        assert_eq!(t0.sides().len(), 8);
        let reflex: Vec<Point> = t0
            .corners()
            .iter()
            .filter(|c| c.class == AngleClass::Reflex)
            .map(|c| c.point.clone())
            .collect();
        assert_eq!(reflex, vec![pt(0, 1, 1, 1), pt(1, 1, 1, 1)]);
        assert_eq!(t0.area(), rat(2, 1));
        assert!(t0.is_simple());

        // Removed segments: [-1/2, 0] and [1, 3/2] at height 3/2.
        assert_eq!(t0.removed().len(), 2);
        assert_eq!(t0.removed()[0].left, pt(-1, 2, 3, 2));
        assert_eq!(t0.removed()[0].right, pt(0, 1, 3, 2));
        assert_eq!(t0.removed()[0].word, vec![Branch::L]);
        assert_eq!(t0.removed()[1].left, pt(1, 1, 3, 2));
        assert_eq!(t0.removed()[1].right, pt(3, 2, 3, 2));
        assert_eq!(t0.removed()[1].word, vec![Branch::R]);

        // Base side is [0,1] x {0}.
        let (a, b) = &t0.sides()[t0.base_side()];
        assert_eq!((a, b), (&pt(0, 1, 0, 1), &pt(1, 1, 0, 1)));

        // The top side [-1/2, 3/2] x {3/2} is split into 3 edges.
        let top_edges: Vec<&Edge> = t0
            .edges()
            .iter()
            .filter(|e| e.a.y == QuadScalar::from(rat(3, 2)) && e.orientation == Orientation::Horizontal)
            .collect();
        assert_eq!(top_edges.len(), 3);
        assert_eq!(
            top_edges.iter().filter(|e| e.removed_idx.is_some()).count(),
            2
        );
    }

    #[test]
    fn prefractal_invariants() {
        for n in 0..=4u32 {
            let t = t_prefractal(n);
            assert!(t.is_simple(), "T_{n} boundary must be simple");
            // Rectilinear closed curve: convex corners = reflex corners + 4.
            let convex = t
                .corners()
                .iter()
                .filter(|c| c.class == AngleClass::Convex)
                .count();
            let reflex = t.corners().len() - convex;
            assert_eq!(convex, reflex + 4, "corner balance at level {n}");
            // Corner census grows by 6 per glued copy.
            assert_eq!(t.corners().len(), 6 * (1 << (n + 1)) - 4);
            // Exact area: 4 - 2^(1-n).
            assert_eq!(t.area(), rat(4, 1) - pow2(1 - n as i32));
            // Removed row: 2^(n+1) gaps of length 2^-(n+1) at height sigma_n.
            assert_eq!(t.removed().len(), 1 << (n + 1));
            let sig = QuadScalar::from(sigma(n));
            for r in t.removed() {
                assert_eq!(r.left.y, sig);
                assert_eq!(r.right.y, sig);
                assert_eq!(r.length(), QuadScalar::from(pow2(-(n as i32 + 1))));
                assert_eq!(r.word.len() as u32, n + 1);
            }
        }
    }

    #[test]
    fn t1_corner_details() {
        let t1 = t_prefractal(1);
        // (3/2, 3/2) merges into the right wall; (1, 3/2) becomes reflex.
        assert_eq!(t1.corner_at(&pt(3, 2, 3, 2)), None);
        let i = t1.corner_at(&pt(1, 1, 3, 2)).expect("corner exists");
        assert_eq!(t1.corners()[i].class, AngleClass::Reflex);
        let j = t1.corner_at(&pt(0, 1, 3, 2)).expect("corner exists");
        assert_eq!(t1.corners()[j].class, AngleClass::Reflex);
        assert_eq!(t1.corners().len(), 20);

        // Removed segments of T_1 in left-to-right (lexicographic) order.
        let words: Vec<String> = t1.removed().iter().map(|r| word_string(&r.word)).collect();
        assert_eq!(words, vec!["LL", "LR", "RL", "RR"]);
        assert_eq!(t1.removed()[1].left, pt(0, 1, 9, 4));
        assert_eq!(t1.removed()[1].right, pt(1, 4, 9, 4));
    }

    #[test]
    fn locate_classifies_points() {
        let t0 = t_prefractal(0);
        assert_eq!(t0.locate(&pt(1, 2, 1, 2)), Location::Interior);
        assert_eq!(t0.locate(&pt(1, 2, 5, 4)), Location::Interior); // in the cap
        assert_eq!(t0.locate(&pt(5, 4, 1, 2)), Location::Exterior); // right of stem
        assert_eq!(t0.locate(&pt(-1, 4, 1, 2)), Location::Exterior);
        assert_eq!(t0.locate(&pt(2, 1, 2, 1)), Location::Exterior);
        assert!(matches!(t0.locate(&pt(1, 3, 0, 1)), Location::Edge(_)));
        assert!(matches!(t0.locate(&pt(-1, 6, 3, 2)), Location::Edge(_))); // on a removed segment
        assert!(matches!(t0.locate(&pt(0, 1, 1, 1)), Location::Corner(_)));
        // On the boundary of the cap overhang.
        assert!(matches!(t0.locate(&pt(-1, 2, 5, 4)), Location::Edge(_)));

        let t1 = t_prefractal(1);
        // Old removed segment interior is now interior to T_1.
        assert_eq!(t1.locate(&pt(-1, 6, 3, 2)), Location::Interior);
        // (0, 3/2) was a regular edge point of T_0, now a reflex corner of T_1.
        let c = t1.corner_at(&pt(0, 1, 3, 2)).unwrap();
        assert_eq!(t1.corners()[c].class, AngleClass::Reflex);
    }

    #[test]
    fn elusive_maps_permute_the_segment() {
        // phi_R([-1,2]) = [1/2, 2], phi_L([-1,2]) = [-1, 1/2]: the images
        // tile E exactly.
        let (lo, hi) = elusive_segment();
        let r = word_map(&[Branch::R]);
        let l = word_map(&[Branch::L]);
        assert_eq!(r.apply(&lo), pt(1, 2, 3, 1));
        assert_eq!(r.apply(&hi), pt(2, 1, 3, 1));
        assert_eq!(l.apply(&lo), pt(-1, 1, 3, 1));
        assert_eq!(l.apply(&hi), pt(1, 2, 3, 1));
    }

    #[test]
    fn address_of_named_points() {
        // Pure words: the two endpoints.
        let right = point_to_address(&pt(2, 1, 3, 1)).unwrap();
        assert_eq!(right, ElusiveAddress::new(vec![], vec![Branch::R]));
        let left = point_to_address(&pt(-1, 1, 3, 1)).unwrap();
        assert_eq!(left, ElusiveAddress::new(vec![], vec![Branch::L]));
        // Alternating words: x = 0 and x = 1.
        let zero = point_to_address(&pt(0, 1, 3, 1)).unwrap();
        assert_eq!(zero, ElusiveAddress::new(vec![], vec![Branch::L, Branch::R]));
        let one = point_to_address(&pt(1, 1, 3, 1)).unwrap();
        assert_eq!(one, ElusiveAddress::new(vec![], vec![Branch::R, Branch::L]));
        // Tie-break at the overlap point 1/2: R then L forever.
        let half = point_to_address(&pt(1, 2, 3, 1)).unwrap();
        assert_eq!(half, ElusiveAddress::new(vec![Branch::R], vec![Branch::L]));

        for p in [pt(2, 1, 3, 1), pt(-1, 1, 3, 1), pt(0, 1, 3, 1), pt(1, 1, 3, 1), pt(1, 2, 3, 1)] {
            assert_eq!(point_to_address(&p).unwrap().to_point(), p);
        }
    }

    #[test]
    fn address_canonicalization() {
        let a = ElusiveAddress::new(vec![Branch::L], vec![Branch::R, Branch::L]);
        let b = ElusiveAddress::new(vec![], vec![Branch::L, Branch::R]);
        assert_eq!(a, b);
        let c = ElusiveAddress::new(vec![], vec![Branch::L, Branch::R, Branch::L, Branch::R]);
        assert_eq!(c.period().len(), 2);
        assert_eq!(c, b);
        assert_eq!(format!("{b}"), "(LR)*");
    }

    #[test]
    fn address_errors() {
        assert!(matches!(
            point_to_address(&pt(0, 1, 2, 1)),
            Err(GeometryError::NotOnElusiveSegment(_))
        ));
        assert!(matches!(
            point_to_address(&pt(5, 2, 3, 1)),
            Err(GeometryError::NotOnElusiveSegment(_))
        ));
        let irrational = Point::new(
            QuadScalar::sqrt_of(2).unwrap(),
            QuadScalar::from_int(3),
        );
        assert!(matches!(
            point_to_address(&irrational),
            Err(GeometryError::IrrationalAddress)
        ));
    }

    #[test]
    fn plain_tables() {
        let sq = unit_square();
        assert_eq!(sq.corners().len(), 4);
        assert!(sq
            .corners()
            .iter()
            .all(|c| c.class == AngleClass::Convex));
        assert_eq!(sq.area(), rat(1, 1));
        assert_eq!(sq.removed().len(), 0);
        let (a, b) = &sq.sides()[sq.base_side()];
        assert_eq!((a, b), (&pt(0, 1, 0, 1), &pt(1, 1, 0, 1)));

        let rect = rect_4x1();
        assert_eq!(rect.area(), rat(4, 1));
        assert_eq!(rect.corners().len(), 4);
    }

    #[test]
    fn segment_boundary_hits_counts_touches() {
        let t0 = t_prefractal(0);
        // A chord strictly inside except at its top endpoint.
        let hits = t0.segment_boundary_hits(&pt(1, 2, 1, 2), &pt(1, 2, 3, 2));
        assert_eq!(hits, vec![pt(1, 2, 3, 2)]);
        // A chord along the base overlaps a side: two endpoints reported.
        let hits = t0.segment_boundary_hits(&pt(1, 4, 0, 1), &pt(3, 4, 0, 1));
        assert_eq!(hits.len(), 2);
        // A chord crossing the whole table hits both walls.
        let hits = t0.segment_boundary_hits(&pt(-1, 1, 5, 4), &pt(2, 1, 5, 4));
        assert_eq!(hits.len(), 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn address_round_trip(num in -200i64..=400, den in 1i64..=200) {
                let x = rat(num, den);
                prop_assume!(x >= rat(-1, 1) && x <= rat(2, 1));
                let p = Point::from_rationals(x, rat(3, 1));
                let addr = point_to_address(&p).unwrap();
                prop_assert_eq!(addr.to_point(), p);
            }

            #[test]
            fn words_map_into_elusive_segment(bits in 0u32..256, len in 1u32..=8) {
                // Every word sends E into E.
                let word: Vec<Branch> = (0..len)
                    .map(|i| if (bits >> i) & 1 == 1 { Branch::R } else { Branch::L })
                    .collect();
                let map = word_map(&word);
                let (lo, hi) = elusive_segment();
                for p in [lo, hi] {
                    let q = map.apply(&p);
                    prop_assert_eq!(&q.y, &QuadScalar::from_int(3));
                    prop_assert!(q.x >= QuadScalar::from_int(-1));
                    prop_assert!(q.x <= QuadScalar::from_int(2));
                }
            }
        }
    }
}
