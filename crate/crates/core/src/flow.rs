//! Exact billiard flow: directions, collisions, reflections, and orbits.
//!
//! A direction is stored as a sign pair plus a nonnegative slope `|dy/dx|`
//! (or a vertical flag), so reflections in axis-aligned walls are sign
//! flips and never touch the slope. An orbit is the list of post-collision
//! phase points; periodicity is detected by exact equality with the initial
//! phase point, which suffices because the billiard map is invertible.
//!
//! Collisions exactly at corners follow the tangent-bundle convention for
//! rectilinear tables: at a convex corner (interior angle `pi/2`) the two
//! wall reflections compose to a well-defined retroreflection, so the orbit
//! reverses and continues; at a reflex corner (interior angle `3 pi/2`) no
//! continuation is well defined and the orbit terminates as *singular*.
//!
//! Collisions landing on a removed segment of a prefractal still reflect
//! (the wall is solid at this level) but are recorded as *escape marks*:
//! they are where the corresponding orbit at a deeper level would pass
//! through the gap.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{AngleClass, Boundary, Location, Orientation, Point};
use crate::scalar::QuadScalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("invalid direction: {0}")]
    BadDirection(String),
    #[error("invalid orbit start: {0}")]
    InvalidStart(String),
}

/// Absolute slope of a direction: `|dy/dx|`, or vertical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Slope {
    Finite(QuadScalar),
    Vertical,
}

/// An exact direction of motion, canonicalized so that equal directions are
/// structurally equal: slope `0` forces `sy = +1`, vertical forces `sx = +1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Direction {
    sx: i8,
    sy: i8,
    slope: Slope,
}

impl Direction {
    pub fn new(sx: i8, sy: i8, slope: Slope) -> Result<Self, FlowError> {
        if !(sx == 1 || sx == -1) || !(sy == 1 || sy == -1) {
            return Err(FlowError::BadDirection(format!(
                "sign pair must be +/-1, got ({sx}, {sy})"
            )));
        }
        let (sx, sy) = match &slope {
            Slope::Finite(m) => {
                if m.sign() < 0 {
                    return Err(FlowError::BadDirection(format!(
                        "slope must be nonnegative, got {m}"
                    )));
                }
                if m.is_zero() {
                    (sx, 1)
                } else {
                    (sx, sy)
                }
            }
            Slope::Vertical => (1, sy),
        };
        Ok(Direction { sx, sy, slope })
    }

    /// Non-vertical direction from the signed slope `dy/dx` and the sign of
    /// `dx`.
    pub fn from_signed_slope(sx: i8, signed: QuadScalar) -> Result<Self, FlowError> {
        let sy = if signed.sign() < 0 { -sx } else { sx };
        Self::new(sx, sy, Slope::Finite(signed.abs()))
    }

    pub fn up_right(m: QuadScalar) -> Self {
        Self::new(1, 1, Slope::Finite(m)).expect("nonnegative slope")
    }

    pub fn up_left(m: QuadScalar) -> Self {
        Self::new(-1, 1, Slope::Finite(m)).expect("nonnegative slope")
    }

    pub fn down_right(m: QuadScalar) -> Self {
        Self::new(1, -1, Slope::Finite(m)).expect("nonnegative slope")
    }

    pub fn down_left(m: QuadScalar) -> Self {
        Self::new(-1, -1, Slope::Finite(m)).expect("nonnegative slope")
    }

    pub fn sx(&self) -> i8 {
        self.sx
    }

    pub fn sy(&self) -> i8 {
        self.sy
    }

    pub fn slope(&self) -> &Slope {
        &self.slope
    }

    pub fn is_vertical(&self) -> bool {
        matches!(self.slope, Slope::Vertical)
    }

    pub fn is_horizontal(&self) -> bool {
        matches!(&self.slope, Slope::Finite(m) if m.is_zero())
    }

    /// Motion vector `(dx, dy)` normalized to unit horizontal speed
    /// (`(0, +/-1)` when vertical).
    pub fn components(&self) -> (QuadScalar, QuadScalar) {
        match &self.slope {
            Slope::Finite(m) => {
                let dx = QuadScalar::from_int(self.sx as i64);
                let dy = QuadScalar::from_int(self.sy as i64) * m.clone();
                (dx, dy)
            }
            Slope::Vertical => (
                QuadScalar::zero(),
                QuadScalar::from_int(self.sy as i64),
            ),
        }
    }

    /// Signed slope `dy/dx`, `None` when vertical.
    pub fn signed_slope(&self) -> Option<QuadScalar> {
        match &self.slope {
            Slope::Finite(m) => {
                let s = QuadScalar::from_int((self.sx * self.sy) as i64);
                Some(s * m.clone())
            }
            Slope::Vertical => None,
        }
    }

    /// Reflection in a wall of the given orientation: a horizontal wall
    /// flips `sy`, a vertical wall flips `sx`.
    pub fn reflect(&self, wall: Orientation) -> Self {
        let (sx, sy) = match wall {
            Orientation::Horizontal => (self.sx, -self.sy),
            Orientation::Vertical => (-self.sx, self.sy),
        };
        Self::new(sx, sy, self.slope.clone()).expect("reflection preserves validity")
    }

    /// Retroreflection (both signs flip), the continuation at a convex
    /// corner and the time-reversal of the flow.
    pub fn reversed(&self) -> Self {
        Self::new(-self.sx, -self.sy, self.slope.clone()).expect("reversal preserves validity")
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = |s: i8| if s > 0 { '+' } else { '-' };
        match &self.slope {
            Slope::Finite(m) => write!(f, "({}, {}; slope {})", sig(self.sx), sig(self.sy), m),
            Slope::Vertical => write!(f, "({}, {}; vertical)", sig(self.sx), sig(self.sy)),
        }
    }
}

/// A point of phase space: a position and an outgoing direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PhasePoint {
    pub pos: Point,
    pub dir: Direction,
}

impl PhasePoint {
    pub fn new(pos: Point, dir: Direction) -> Self {
        PhasePoint { pos, dir }
    }
}

/// What an orbit segment ran into, recorded per collision for unfolding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HitKind {
    Wall(Orientation),
    ConvexCorner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// `states[period] == states[0]` exactly.
    Periodic { period: usize },
    /// The trajectory ran into a reflex corner and cannot be continued.
    Singular { collision: usize, corner: Point },
    /// The requested stop side was hit (see [`trace_until_side`]).
    ReachedSide { collision: usize },
    CapReached,
}

/// A collision on a (closed) removed segment: the level at which this wall
/// is solid is the last one, so a deeper table would let the orbit through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EscapeMark {
    pub collision: usize,
    pub removed_idx: usize,
}

/// A traced orbit. `states[0]` is the initial phase point; `states[k]` for
/// `k >= 1` is the post-reflection phase point of the `k`-th collision, so
/// `hits[k-1]` describes what collision `k` hit and `states[k-1].dir` is the
/// direction of travel into it.
#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    pub table: String,
    pub level: Option<u32>,
    pub states: Vec<PhasePoint>,
    pub hits: Vec<HitKind>,
    pub termination: Termination,
    /// Collisions on closed removed segments, in order.
    pub escapes: Vec<EscapeMark>,
    /// Collisions landing on the maximal side the orbit started on
    /// (boundary starts only), in order.
    pub returns: Vec<usize>,
    /// Collisions exactly on a removed-segment endpoint; these grazing
    /// escapes are flagged for manual review.
    pub endpoint_hits: Vec<usize>,
    /// Maximal side of the initial point, when it lies on the boundary.
    pub initial_side: Option<usize>,
}

impl Orbit {
    /// Number of collisions computed.
    pub fn collisions(&self) -> usize {
        self.states.len() - 1
    }

    pub fn initial(&self) -> &PhasePoint {
        &self.states[0]
    }

    /// Direction of travel into collision `k` (1-based).
    pub fn incoming_dir(&self, k: usize) -> &Direction {
        assert!(k >= 1 && k < self.states.len());
        &self.states[k - 1].dir
    }

    /// Index of the first escape mark, if any.
    pub fn first_escape(&self) -> Option<&EscapeMark> {
        self.escapes.first()
    }

    /// Index of the first return to the initial side, if any.
    pub fn first_return(&self) -> Option<usize> {
        self.returns.first().copied()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.termination, Termination::Periodic { .. })
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.termination, Termination::Singular { .. })
    }

    /// Whether any collision landed exactly on a vertex (convex corners
    /// retroreflect, and a singular end is a reflex vertex).
    pub fn hits_vertex(&self) -> bool {
        self.is_singular() || self.hits.iter().any(|h| *h == HitKind::ConvexCorner)
    }

    /// The polygonal path traced out: all positions, including the terminal
    /// reflex corner of a singular orbit.
    pub fn polyline(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self.states.iter().map(|s| s.pos.clone()).collect();
        if let Termination::Singular { corner, .. } = &self.termination {
            pts.push(corner.clone());
        }
        pts
    }
}

/// Where the ray from `pos` in direction `dir` next meets the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollisionTarget {
    Corner { index: usize, class: AngleClass },
    Wall { edge: usize },
}

/// Exact first collision of the open ray `pos + t (dx, dy)`, `t > 0`.
///
/// Scans every edge; among candidate hits the minimal parameter is unique
/// as a point (two edges can only tie at a shared endpoint, which is the
/// same point). Panics if no edge is hit, which cannot happen for an
/// interior-pointing ray in a closed table.
pub fn next_collision(boundary: &Boundary, pos: &Point, dir: &Direction) -> (Point, CollisionTarget) {
    let (dx, dy) = dir.components();
    let mut best: Option<(QuadScalar, Point, usize)> = None;
    for (i, e) in boundary.edges().iter().enumerate() {
        let hit = match e.orientation {
            Orientation::Vertical => {
                if dx.is_zero() {
                    continue;
                }
                let t = (e.fixed_coord() - &pos.x) / &dx;
                if t.sign() <= 0 {
                    continue;
                }
                let y = &pos.y + &dy * &t;
                let (lo, hi) = e.span();
                if *lo <= y && y <= *hi {
                    Some((t, Point::new(e.fixed_coord().clone(), y)))
                } else {
                    None
                }
            }
            Orientation::Horizontal => {
                if dy.is_zero() {
                    continue;
                }
                let t = (e.fixed_coord() - &pos.y) / &dy;
                if t.sign() <= 0 {
                    continue;
                }
                let x = &pos.x + &dx * &t;
                let (lo, hi) = e.span();
                if *lo <= x && x <= *hi {
                    Some((t, Point::new(x, e.fixed_coord().clone())))
                } else {
                    None
                }
            }
        };
        if let Some((t, p)) = hit {
            match &best {
                Some((bt, bp, _)) if *bt <= t => {
                    debug_assert!(*bt < t || *bp == p, "tied collision must be one point");
                }
                _ => best = Some((t, p, i)),
            }
        }
    }
    let (_, point, edge) = best.expect("ray escaped a closed boundary");
    match boundary.corner_at(&point) {
        Some(index) => {
            let class = boundary.corners()[index].class;
            (point, CollisionTarget::Corner { index, class })
        }
        None => (point, CollisionTarget::Wall { edge }),
    }
}

/// The corner rule: a convex right angle retroreflects the trajectory,
/// a reflex angle terminates it (`None`).
pub fn vertex_rule(class: AngleClass, incoming: &Direction) -> Option<Direction> {
    match class {
        AngleClass::Convex => Some(incoming.reversed()),
        AngleClass::Reflex => None,
    }
}

/// Outcome of a single collision of the flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// The post-reflection phase point at the collision, and what was hit.
    Continue { state: PhasePoint, hit: HitKind },
    /// The trajectory ran into a reflex corner and stops there.
    TerminatedSingular { corner: Point },
}

/// Advances one collision: the next boundary hit of `state`, reflected by
/// the wall or corner rule. The position of `state` may be in the interior
/// or on the boundary with an inward direction; validity is the caller's
/// responsibility (the tracers check it once per orbit).
pub fn billiard_step(boundary: &Boundary, state: &PhasePoint) -> StepOutcome {
    let (point, target) = next_collision(boundary, &state.pos, &state.dir);
    match target {
        CollisionTarget::Corner { class, .. } => match vertex_rule(class, &state.dir) {
            Some(dir) => StepOutcome::Continue {
                state: PhasePoint::new(point, dir),
                hit: HitKind::ConvexCorner,
            },
            None => StepOutcome::TerminatedSingular { corner: point },
        },
        CollisionTarget::Wall { edge } => {
            let orientation = boundary.edges()[edge].orientation;
            StepOutcome::Continue {
                state: PhasePoint::new(point, state.dir.reflect(orientation)),
                hit: HitKind::Wall(orientation),
            }
        }
    }
}

fn validate_start(
    boundary: &Boundary,
    pos: &Point,
    dir: &Direction,
) -> Result<Option<usize>, FlowError> {
    match boundary.locate(pos) {
        Location::Exterior => Err(FlowError::InvalidStart(format!(
            "{pos} lies outside {}",
            boundary.name()
        ))),
        Location::Corner(_) => Err(FlowError::InvalidStart(format!(
            "{pos} is a vertex of {}",
            boundary.name()
        ))),
        Location::Interior => Ok(None),
        Location::Edge(e) => {
            let edge = &boundary.edges()[e];
            if dir.is_vertical() && edge.orientation == Orientation::Horizontal {
                return Err(FlowError::InvalidStart(
                    "vertical flow from a horizontal edge is not traced".to_string(),
                ));
            }
            let (dx, dy) = dir.components();
            let (nx, ny) = edge.inward;
            let dot = QuadScalar::from_int(nx as i64) * dx + QuadScalar::from_int(ny as i64) * dy;
            if dot.sign() <= 0 {
                return Err(FlowError::InvalidStart(format!(
                    "direction {dir} does not point into the table at {pos}"
                )));
            }
            Ok(Some(edge.side))
        }
    }
}

fn trace_impl(
    boundary: &Boundary,
    pos: Point,
    dir: Direction,
    cap: usize,
    stop_side: Option<usize>,
) -> Result<Orbit, FlowError> {
    let initial_side = validate_start(boundary, &pos, &dir)?;
    let mut orbit = Orbit {
        table: boundary.name().to_string(),
        level: boundary.level(),
        states: vec![PhasePoint::new(pos, dir)],
        hits: Vec::new(),
        termination: Termination::CapReached,
        escapes: Vec::new(),
        returns: Vec::new(),
        endpoint_hits: Vec::new(),
        initial_side,
    };

    for k in 1..=cap {
        let cur = orbit.states.last().expect("nonempty");
        let (next, hit) = match billiard_step(boundary, cur) {
            StepOutcome::TerminatedSingular { corner } => {
                orbit.termination = Termination::Singular {
                    collision: k,
                    corner,
                };
                return Ok(orbit);
            }
            StepOutcome::Continue { state, hit } => (state, hit),
        };
        let point = next.pos.clone();

        if let Some(ri) = boundary.removed_containing(&point) {
            orbit.escapes.push(EscapeMark {
                collision: k,
                removed_idx: ri,
            });
        }
        if boundary.is_removed_endpoint(&point) {
            orbit.endpoint_hits.push(k);
        }
        if let Some(side) = orbit.initial_side {
            if boundary.side_contains(side, &point) {
                orbit.returns.push(k);
            }
        }
        orbit.states.push(next);
        orbit.hits.push(hit);

        if let Some(side) = stop_side {
            if boundary.side_contains(side, &point) {
                orbit.termination = Termination::ReachedSide { collision: k };
                return Ok(orbit);
            }
        }
        if orbit.states[orbit.states.len() - 1] == orbit.states[0] {
            orbit.termination = Termination::Periodic { period: k };
            return Ok(orbit);
        }
    }
    Ok(orbit)
}

/// Traces the orbit of `(pos, dir)` for at most `cap` collisions, stopping
/// early on exact recurrence of the initial phase point or at a reflex
/// corner.
///
/// `pos` may lie on the boundary (the direction must then point strictly
/// inward, and vertical flows from horizontal walls are rejected) or in the
/// interior. Periodicity can only be detected for boundary starts, since an
/// interior phase point never recurs as a post-collision state.
pub fn trace_orbit(
    boundary: &Boundary,
    pos: Point,
    dir: Direction,
    cap: usize,
) -> Result<Orbit, FlowError> {
    trace_impl(boundary, pos, dir, cap, None)
}

/// Like [`trace_orbit`], but additionally stops at the first collision on
/// the given maximal side (termination [`Termination::ReachedSide`]).
pub fn trace_until_side(
    boundary: &Boundary,
    pos: Point,
    dir: Direction,
    cap: usize,
    side: usize,
) -> Result<Orbit, FlowError> {
    trace_impl(boundary, pos, dir, cap, Some(side))
}
