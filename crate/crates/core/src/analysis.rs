//! Level-spanning analysis: compatible sequences of orbits across
//! prefractal levels, escape/return bookkeeping, eventually-constant
//! detection, binary-digit distance identities, nontrivial paths with
//! their limit points on the elusive segment, Hausdorff distances, and
//! finite-level classification certificates.
//!
//! A *compatible sequence* fixes one initial condition and traces it on
//! `T_0, T_1, ..., T_N`. Because deeper tables only differ above the
//! previous level's removed segments, the orbits agree until they escape;
//! everything in this module lives off that structure: the escape points
//! climb level by level toward the elusive segment at height 3, return
//! footprints on the initial side converge (or fail to), and the union of
//! escape-truncated orbit prefixes forms a single polyline, the
//! *nontrivial path*, whose limit endpoint the address machinery can often
//! pin down exactly.

use std::collections::{BTreeSet, HashMap};

use num::BigInt;
use num::{One, Zero};
use thiserror::Error;

use crate::flow::{trace_orbit, trace_until_side, Direction, FlowError, Orbit, PhasePoint, Slope};
use crate::geometry::{t_prefractal, Boundary, Branch, ElusiveAddress, Point, RemovedSegment};
use crate::scalar::{is_dyadic, pow2, rat, QuadScalar, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("direction must not be vertical")]
    VerticalDirection,
    #[error("{0} is dyadic; binary-digit identities need a non-dyadic value")]
    DyadicValue(String),
    #[error("value {0} lies outside the open unit interval")]
    OutOfRange(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("undetermined: {0}")]
    Undetermined(String),
    #[error("not a nontrivial path: {0}")]
    NotNontrivialPath(String),
    #[error("initial conditions at levels {0} and {1} are not compatible")]
    Incompatible(u32, u32),
}

/// First collision index on a removed segment, if any.
pub fn first_escape(orbit: &Orbit) -> Option<usize> {
    orbit.first_escape().map(|m| m.collision)
}

/// Collision indices on the orbit's initial side, in order.
pub fn returns(orbit: &Orbit) -> &[usize] {
    &orbit.returns
}

/// Whether two initial conditions on levels `m < n` are compatible: the
/// directions are equal and the closed segment joining the basepoints
/// (along that shared direction) meets the level-`n` boundary only at the
/// level-`n` basepoint. Identical basepoints are compatible exactly when
/// the directions agree.
pub fn check_compatible(low: &PhasePoint, high: &PhasePoint, high_table: &Boundary) -> bool {
    if low.dir != high.dir {
        return false;
    }
    if low.pos == high.pos {
        return true;
    }
    let (dx, dy) = low.dir.components();
    let vx = &high.pos.x - &low.pos.x;
    let vy = &high.pos.y - &low.pos.y;
    if !(&vx * &dy - &vy * &dx).is_zero() {
        return false;
    }
    let hits = high_table.segment_boundary_hits(&low.pos, &high.pos);
    hits.len() == 1 && hits[0] == high.pos
}

/// One level of a compatible sequence.
#[derive(Debug, Clone)]
pub struct LevelRecord {
    pub level: u32,
    pub orbit: Orbit,
    /// First escape time: first collision on a removed segment.
    pub tau: Option<usize>,
    /// First return time: first collision back on the initial side.
    pub upsilon: Option<usize>,
}

/// One initial condition traced on `T_0..T_N`, with pairwise-verified
/// compatibility.
#[derive(Debug, Clone)]
pub struct CompatibleSequence {
    pub start: Point,
    pub launch: Direction,
    pub tables: Vec<Boundary>,
    pub levels: Vec<LevelRecord>,
}

impl CompatibleSequence {
    pub fn last_level(&self) -> u32 {
        self.levels.last().expect("sequence is never empty").level
    }

    pub fn orbit(&self, n: usize) -> &Orbit {
        &self.levels[n].orbit
    }

    /// The escape point `x_n^{tau_n}`, when level `n` escapes.
    pub fn escape_point(&self, n: usize) -> Option<&Point> {
        self.levels[n]
            .tau
            .map(|tau| &self.levels[n].orbit.states[tau].pos)
    }

    /// The removed segment hit at level `n`'s first escape.
    pub fn escape_segment(&self, n: usize) -> Option<&RemovedSegment> {
        let tau = self.levels[n].tau?;
        let mark = self.levels[n]
            .orbit
            .escapes
            .iter()
            .find(|m| m.collision == tau)?;
        Some(&self.tables[n].removed()[mark.removed_idx])
    }
}

/// Traces one initial condition on `T_0..T_n_max` and verifies pairwise
/// compatibility. Singular or cap-terminated members are recorded, not
/// fatal. The start must be a valid flow start on every level.
pub fn build_sequence(
    start: Point,
    launch: Direction,
    n_max: u32,
    cap: usize,
) -> Result<CompatibleSequence, AnalysisError> {
    if launch.is_vertical() {
        return Err(AnalysisError::VerticalDirection);
    }
    let mut tables = Vec::new();
    let mut levels = Vec::new();
    for n in 0..=n_max {
        let table = t_prefractal(n);
        let orbit = trace_orbit(&table, start.clone(), launch.clone(), cap)?;
        let tau = orbit.first_escape().map(|m| m.collision);
        let upsilon = orbit.first_return();
        levels.push(LevelRecord {
            level: n,
            orbit,
            tau,
            upsilon,
        });
        tables.push(table);
    }
    let ic = PhasePoint {
        pos: start.clone(),
        dir: launch.clone(),
    };
    for m in 0..levels.len() {
        for n in (m + 1)..levels.len() {
            if !check_compatible(&ic, &ic, &tables[n]) {
                return Err(AnalysisError::Incompatible(levels[m].level, levels[n].level));
            }
        }
    }
    Ok(CompatibleSequence {
        start,
        launch,
        tables,
        levels,
    })
}

/// [`build_sequence`] from a point `(x0, 0)` on the open base.
pub fn base_sequence(
    x0: QuadScalar,
    launch: Direction,
    n_max: u32,
    cap: usize,
) -> Result<CompatibleSequence, AnalysisError> {
    if x0.sign() <= 0 || x0 >= QuadScalar::one() {
        return Err(AnalysisError::OutOfRange(x0.to_string()));
    }
    build_sequence(Point::new(x0, QuadScalar::zero()), launch, n_max, cap)
}

/// Like [`base_sequence`], but each member orbit stops at its first
/// return to the base. Much cheaper when only the first escape and first
/// return matter; members that never return within `cap` are recorded
/// with a cap termination.
pub fn base_sequence_to_return(
    x0: QuadScalar,
    launch: Direction,
    n_max: u32,
    cap: usize,
) -> Result<CompatibleSequence, AnalysisError> {
    if x0.sign() <= 0 || x0 >= QuadScalar::one() {
        return Err(AnalysisError::OutOfRange(x0.to_string()));
    }
    if launch.is_vertical() {
        return Err(AnalysisError::VerticalDirection);
    }
    let start = Point::new(x0, QuadScalar::zero());
    let mut tables = Vec::new();
    let mut levels = Vec::new();
    for n in 0..=n_max {
        let table = t_prefractal(n);
        let orbit = trace_until_side(&table, start.clone(), launch.clone(), cap, table.base_side())?;
        let tau = orbit.first_escape().map(|m| m.collision);
        let upsilon = orbit.first_return();
        levels.push(LevelRecord {
            level: n,
            orbit,
            tau,
            upsilon,
        });
        tables.push(table);
    }
    let ic = PhasePoint {
        pos: start.clone(),
        dir: launch.clone(),
    };
    for m in 0..levels.len() {
        for n in (m + 1)..levels.len() {
            if !check_compatible(&ic, &ic, &tables[n]) {
                return Err(AnalysisError::Incompatible(levels[m].level, levels[n].level));
            }
        }
    }
    Ok(CompatibleSequence {
        start,
        launch,
        tables,
        levels,
    })
}

/// Least level `N` in range from which the collision point sets (as plane
/// point sets) stay equal through the end of the range; `None` if the
/// last two computed levels still differ. All member orbits must be
/// periodic, so the point sets are complete.
pub fn detect_eventually_constant(
    seq: &CompatibleSequence,
) -> Result<Option<u32>, AnalysisError> {
    if seq.levels.len() < 2 {
        return Err(AnalysisError::Undetermined(
            "need at least two levels to compare".into(),
        ));
    }
    for rec in &seq.levels {
        if !rec.orbit.is_periodic() {
            return Err(AnalysisError::Undetermined(format!(
                "orbit at level {} is not periodic",
                rec.level
            )));
        }
    }
    let sets: Vec<BTreeSet<Point>> = seq
        .levels
        .iter()
        .map(|r| r.orbit.states.iter().map(|s| s.pos.clone()).collect())
        .collect();
    for cand in 0..sets.len() - 1 {
        if sets[cand..].iter().all(|s| *s == sets[cand]) {
            return Ok(Some(seq.levels[cand].level));
        }
    }
    Ok(None)
}

/// The endpoint of a horizontal segment selected by the horizontal
/// component of travel: left endpoint when moving rightward, right when
/// moving leftward. Reference point for the binary-digit distance
/// identity.
pub fn relative_origin(
    travel: &Direction,
    left: &Point,
    right: &Point,
) -> Result<Point, AnalysisError> {
    if travel.is_vertical() {
        return Err(AnalysisError::VerticalDirection);
    }
    debug_assert!(left.y == right.y && left.x < right.x, "segment not horizontal");
    Ok(if travel.sx() > 0 {
        left.clone()
    } else {
        right.clone()
    })
}

/// The dyadic rational formed by the first `k` binary digits of
/// `x` in `(0,1)`: `floor(x * 2^k) / 2^k`. Rejects dyadic `x`, whose
/// expansion is ambiguous at the truncation boundary.
pub fn binary_truncate(x: &Rational, k: u32) -> Result<Rational, AnalysisError> {
    if x <= &rat(0, 1) || x >= &rat(1, 1) {
        return Err(AnalysisError::OutOfRange(x.to_string()));
    }
    if is_dyadic(x) {
        return Err(AnalysisError::DyadicValue(x.to_string()));
    }
    Ok((x * pow2(k as i32)).floor() * pow2(-(k as i32)))
}

/// The eventually periodic binary expansion of a rational in `(0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryExpansion {
    pub value: Rational,
    pub preperiod: Vec<bool>,
    pub period: Vec<bool>,
}

impl BinaryExpansion {
    /// Long division with remainder-cycle detection. Dyadic inputs get a
    /// terminating expansion with period `[0]`.
    pub fn of(x: &Rational) -> Result<Self, AnalysisError> {
        if x <= &rat(0, 1) || x >= &rat(1, 1) {
            return Err(AnalysisError::OutOfRange(x.to_string()));
        }
        let den = x.denom().clone();
        let mut rem = x.numer().clone();
        let mut digits: Vec<bool> = Vec::new();
        let mut seen: HashMap<BigInt, usize> = HashMap::new();
        loop {
            if let Some(&at) = seen.get(&rem) {
                let period = digits.split_off(at);
                return Ok(BinaryExpansion {
                    value: x.clone(),
                    preperiod: digits,
                    period,
                });
            }
            seen.insert(rem.clone(), digits.len());
            rem *= 2;
            let digit = rem >= den;
            if digit {
                rem -= &den;
            }
            digits.push(digit);
        }
    }

    /// The `i`-th binary digit (0-indexed).
    pub fn digit(&self, i: usize) -> bool {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The value of the first `k` digits, as a dyadic rational.
    pub fn truncated(&self, k: u32) -> Rational {
        let mut acc = rat(0, 1);
        for i in 0..k {
            if self.digit(i as usize) {
                acc += pow2(-(i as i32) - 1);
            }
        }
        acc
    }
}

/// Checks the escape-distance identity at level `n`: the two sides
/// returned by [`escape_distance_sides`] are equal.
pub fn verify_escape_distance(
    seq: &CompatibleSequence,
    n: usize,
) -> Result<bool, AnalysisError> {
    let (lhs, rhs) = escape_distance_sides(seq, n)?;
    Ok(lhs == rhs)
}

/// Both sides of the escape-distance identity at level `n` of a sequence
/// with slope `+/-1/p` (`p` odd) and non-dyadic rational basepoint: the
/// exact distance from the escape point to its relative origin, and the
/// binary truncation error `x0 - (x0)_{n+1}` (with `x0` replaced by
/// `1 - x0` for negative slope) that it must equal.
pub fn escape_distance_sides(
    seq: &CompatibleSequence,
    n: usize,
) -> Result<(QuadScalar, QuadScalar), AnalysisError> {
    let rec = seq
        .levels
        .get(n)
        .ok_or_else(|| AnalysisError::NotApplicable(format!("level {n} not computed")))?;
    let tau = rec.tau.ok_or_else(|| {
        AnalysisError::NotApplicable(format!("no escape at level {}", rec.level))
    })?;
    if !seq.start.y.is_zero() {
        return Err(AnalysisError::NotApplicable(
            "sequence does not start on the base".into(),
        ));
    }
    let x0 = seq
        .start
        .x
        .as_rational()
        .ok_or_else(|| AnalysisError::NotApplicable("irrational basepoint".into()))?
        .clone();
    let m = match seq.launch.slope() {
        Slope::Vertical => return Err(AnalysisError::VerticalDirection),
        Slope::Finite(m) => m
            .as_rational()
            .ok_or_else(|| AnalysisError::NotApplicable("irrational slope".into()))?
            .clone(),
    };
    if !m.numer().is_one() || (m.denom() % BigInt::from(2)).is_zero() {
        return Err(AnalysisError::NotApplicable(format!(
            "slope {m} is not of the form 1/p with odd p"
        )));
    }
    let seg = seq
        .escape_segment(n)
        .expect("escape segment exists when tau does");
    let escape = &rec.orbit.states[tau].pos;
    let origin = relative_origin(rec.orbit.incoming_dir(tau), &seg.left, &seg.right)?;
    let lhs = (&escape.x - &origin.x).abs();
    let k = rec.level + 1;
    let rhs = if seq.launch.sx() > 0 {
        &x0 - binary_truncate(&x0, k)?
    } else {
        let y = rat(1, 1) - &x0;
        &y - binary_truncate(&y, k)?
    };
    Ok((lhs, QuadScalar::from_rational(rhs)))
}

/// How the limit endpoint of a nontrivial path was determined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitResolution {
    /// A scale-reflect-append recurrence was found among the normalized
    /// escape states and verified against every computed level, so the
    /// limit point (and its letter address) is exact.
    Exact {
        address: ElusiveAddress,
        point: Point,
    },
    /// No recurrence in range: the limit is only bracketed by the span of
    /// the deepest copy entered.
    Bracketed { lo: QuadScalar, hi: QuadScalar },
}

/// The union of escape-truncated orbit prefixes of a fully escaping
/// sequence, together with its limit endpoint on the elusive segment.
#[derive(Debug, Clone)]
pub struct NontrivialPath {
    pub start: Point,
    pub launch: Direction,
    /// Escape points `x_n^{tau_n}`, one per level, heights strictly
    /// increasing.
    pub escape_points: Vec<Point>,
    /// Level-`n` polyline: collision points 0..=tau_n. Each is a prefix
    /// of the next as a plane path.
    pub level_polylines: Vec<Vec<Point>>,
    pub limit: LimitResolution,
}

impl NontrivialPath {
    /// The deepest truncated polyline, which contains all the others.
    pub fn full_polyline(&self) -> &[Point] {
        self.level_polylines.last().expect("at least one level")
    }
}

/// Normalized escape state: position within the removed segment rescaled
/// to `[0,1]`, plus the horizontal sign of arrival. Equal states (or
/// mirror-equal states) produce similar continuations, which is what makes
/// exact limit extraction possible.
#[derive(Debug, Clone, PartialEq, Eq)]
struct NormState {
    delta: QuadScalar,
    sx: i8,
}

impl NormState {
    fn mirrored(&self) -> NormState {
        NormState {
            delta: QuadScalar::one() - &self.delta,
            sx: -self.sx,
        }
    }
}

fn on_segment_strictly(p: &Point, u: &Point, v: &Point) -> bool {
    let wx = &v.x - &u.x;
    let wy = &v.y - &u.y;
    let px = &p.x - &u.x;
    let py = &p.y - &u.y;
    if !(&wx * &py - &wy * &px).is_zero() {
        return false;
    }
    let dot = &px * &wx + &py * &wy;
    let len2 = &wx * &wx + &wy * &wy;
    dot.is_positive() && dot < len2
}

/// Assembles the nontrivial path of a sequence whose every level escapes,
/// checking the prefix-extension and height invariants, and resolves the
/// limit endpoint on the elusive segment.
///
/// The limit is exact when some pair of normalized escape states repeats
/// (plainly, or up to mirror): the letters of the removed-segment words
/// then continue periodically (letter-swapped in the mirror case). A
/// candidate recurrence is only accepted after its predicted letter stream
/// matches every simulated level, so a false match cannot slip through.
pub fn build_nontrivial_path(seq: &CompatibleSequence) -> Result<NontrivialPath, AnalysisError> {
    let n_levels = seq.levels.len();
    let mut escape_points = Vec::with_capacity(n_levels);
    let mut polylines = Vec::with_capacity(n_levels);
    let mut words: Vec<Vec<Branch>> = Vec::with_capacity(n_levels);
    let mut norm: Vec<NormState> = Vec::with_capacity(n_levels + 1);
    norm.push(NormState {
        delta: seq.start.x.clone(),
        sx: seq.launch.sx(),
    });
    for (n, rec) in seq.levels.iter().enumerate() {
        let tau = rec.tau.ok_or_else(|| {
            AnalysisError::NotNontrivialPath(format!(
                "level {} never escapes (first escape time is infinite)",
                rec.level
            ))
        })?;
        let seg = seq.escape_segment(n).expect("tau implies a marked escape");
        let escape = rec.orbit.states[tau].pos.clone();
        debug_assert!(
            QuadScalar::from_rational(crate::geometry::sigma(rec.level)) == escape.y,
            "escape height must be sigma_n"
        );
        let poly: Vec<Point> = rec.orbit.states[..=tau]
            .iter()
            .map(|s| s.pos.clone())
            .collect();
        if n > 0 {
            let prev_tau = seq.levels[n - 1].tau.expect("checked above");
            let prev = &seq.levels[n - 1].orbit;
            let cur = &rec.orbit;
            for k in 0..prev_tau {
                if prev.states[k] != cur.states[k] {
                    return Err(AnalysisError::NotNontrivialPath(format!(
                        "levels {} and {} diverge before the earlier escape",
                        n - 1,
                        n
                    )));
                }
            }
            let crossing = &prev.states[prev_tau].pos;
            if !on_segment_strictly(
                crossing,
                &cur.states[prev_tau - 1].pos,
                &cur.states[prev_tau].pos,
            ) {
                return Err(AnalysisError::NotNontrivialPath(format!(
                    "level {} does not pass through level {}'s escape point",
                    n,
                    n - 1
                )));
            }
            debug_assert!(words[n - 1] == seg.word[..n], "words must prefix-extend");
        }
        norm.push(NormState {
            delta: (&escape.x - &seg.left.x).scale_pow2(rec.level as i32 + 1),
            sx: rec.orbit.incoming_dir(tau).sx(),
        });
        words.push(seg.word.clone());
        escape_points.push(escape);
        polylines.push(poly);
    }

    let letters = words.last().expect("at least one level").clone();
    let limit = resolve_limit(&norm, &letters, seq, &escape_points);
    Ok(NontrivialPath {
        start: seq.start.clone(),
        launch: seq.launch.clone(),
        escape_points,
        level_polylines: polylines,
        limit,
    })
}

/// Searches normalized states for a verified (plain or mirror) recurrence
/// and turns it into an exact address; brackets the limit otherwise.
fn resolve_limit(
    norm: &[NormState],
    letters: &[Branch],
    seq: &CompatibleSequence,
    escape_points: &[Point],
) -> LimitResolution {
    // norm[0] is the launch state; norm[b] for b >= 1 is the state after
    // the level-(b-1) escape. letters[k] is the k-th address letter.
    for b in 1..norm.len() {
        for a in 0..b {
            let (mirror, matched) = if norm[a] == norm[b] {
                (false, true)
            } else if norm[a] == norm[b].mirrored() {
                (true, true)
            } else {
                (false, false)
            };
            if !matched {
                continue;
            }
            let preperiod = letters[..a].to_vec();
            let mut period = letters[a..b].to_vec();
            if mirror {
                let swapped: Vec<Branch> = period.iter().map(|l| l.swapped()).collect();
                period.extend(swapped);
            }
            let address = ElusiveAddress::new(preperiod, period);
            let consistent = (0..letters.len()).all(|k| address.letter(k) == letters[k]);
            if !consistent {
                continue;
            }
            let point = address.to_point();
            // The limit must sit inside every copy the path enters: copy
            // over segment [l, r] of width s spans [l - s, r + s].
            for n in 0..seq.levels.len() {
                let seg = seq.escape_segment(n).expect("path levels all escape");
                let s = seg.length();
                assert!(
                    &seg.left.x - &s <= point.x && point.x <= &seg.right.x + &s,
                    "exact limit fell outside the level-{n} copy span"
                );
                assert!(
                    (&point.x - &escape_points[n].x).abs() <= &s + &s,
                    "exact limit drifted from the level-{n} escape point"
                );
            }
            return LimitResolution::Exact { address, point };
        }
    }
    let seg = seq
        .escape_segment(seq.levels.len() - 1)
        .expect("path levels all escape");
    let s = seg.length();
    LimitResolution::Bracketed {
        lo: &seg.left.x - &s,
        hi: &seg.right.x + &s,
    }
}

fn dist2(p: &Point, q: &Point) -> QuadScalar {
    let dx = &p.x - &q.x;
    let dy = &p.y - &q.y;
    &dx * &dx + &dy * &dy
}

/// Exact squared distance from a point to a closed segment.
fn point_segment_dist2(p: &Point, u: &Point, v: &Point) -> QuadScalar {
    let wx = &v.x - &u.x;
    let wy = &v.y - &u.y;
    let len2 = &wx * &wx + &wy * &wy;
    if len2.is_zero() {
        return dist2(p, u);
    }
    let t = (&(&p.x - &u.x) * &wx + &(&p.y - &u.y) * &wy)
        .checked_div(&len2)
        .expect("len2 nonzero");
    if !t.is_positive() {
        dist2(p, u)
    } else if t >= QuadScalar::one() {
        dist2(p, v)
    } else {
        let fx = &u.x + &(&wx * &t);
        let fy = &u.y + &(&wy * &t);
        dist2(p, &Point::new(fx, fy))
    }
}

fn point_polyline_dist2(p: &Point, poly: &[Point]) -> QuadScalar {
    assert!(!poly.is_empty(), "polyline must be nonempty");
    if poly.len() == 1 {
        return dist2(p, &poly[0]);
    }
    poly.windows(2)
        .map(|w| point_segment_dist2(p, &w[0], &w[1]))
        .min()
        .expect("nonempty")
}

/// Directed squared Hausdorff distance over the candidate set: vertices of
/// `a`, plus feet of perpendicular projections of `b`'s vertices onto
/// `a`'s segments.
fn directed_hausdorff2(a: &[Point], b: &[Point]) -> QuadScalar {
    let mut best = QuadScalar::zero();
    let mut consider = |p: &Point| {
        let d = point_polyline_dist2(p, b);
        if d > best {
            best = d;
        }
    };
    for p in a {
        consider(p);
    }
    for w in a.windows(2) {
        let (u, v) = (&w[0], &w[1]);
        let wx = &v.x - &u.x;
        let wy = &v.y - &u.y;
        let len2 = &wx * &wx + &wy * &wy;
        if len2.is_zero() {
            continue;
        }
        for q in b {
            let t = (&(&q.x - &u.x) * &wx + &(&q.y - &u.y) * &wy)
                .checked_div(&len2)
                .expect("len2 nonzero");
            if t.is_positive() && t < QuadScalar::one() {
                let foot = Point::new(&u.x + &(&wx * &t), &u.y + &(&wy * &t));
                consider(&foot);
            }
        }
    }
    best
}

/// Exact squared Hausdorff distance between two polylines, computed over
/// the vertex-and-projection candidate set (sufficient when the supremum
/// is attained at a vertex or a projection foot, as it is for the nested
/// path truncations compared here).
pub fn hausdorff_distance_squared_max(a: &[Point], b: &[Point]) -> QuadScalar {
    let ab = directed_hausdorff2(a, b);
    let ba = directed_hausdorff2(b, a);
    if ab >= ba {
        ab
    } else {
        ba
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Periodic,
    Recurrent,
    Singular,
    Undetermined,
}

/// A finite-level classification certificate: a verdict backed by exact
/// checks through `evidence_level`, never a proof about the limit.
#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence_level: u32,
    pub detail: String,
}

/// How many return footprints per level the classifier compares.
const FOOTPRINTS_COMPARED: usize = 4;

/// Classifies a sequence from its computed levels: singular when every
/// member orbit dies at a reflex corner or some footprint sequence splits
/// into two exact clusters; periodic when all members are periodic and
/// every compared return footprint is Cauchy with gap below `2^(1-n)`;
/// recurrent when the footprints are Cauchy but the members are not all
/// periodic; undetermined otherwise.
pub fn classify(seq: &CompatibleSequence) -> Classification {
    let evidence_level = seq.last_level();
    if seq.levels.iter().all(|r| r.orbit.is_singular()) {
        return Classification {
            verdict: Verdict::Singular,
            evidence_level,
            detail: "every member orbit terminates at a reflex corner".into(),
        };
    }
    let shared = seq
        .levels
        .iter()
        .map(|r| r.orbit.returns.len())
        .min()
        .unwrap_or(0)
        .min(FOOTPRINTS_COMPARED);
    if shared == 0 {
        return Classification {
            verdict: Verdict::Undetermined,
            evidence_level,
            detail: "no return footprint shared by all levels".into(),
        };
    }
    let footprint = |rec: &LevelRecord, j: usize| -> QuadScalar {
        rec.orbit.states[rec.orbit.returns[j]].pos.x.clone()
    };
    // Accumulation-cluster scan over the tail of each footprint sequence.
    let tail = seq.levels.len().div_ceil(2);
    let cluster_gap = QuadScalar::from_rational(pow2(-(evidence_level as i32)));
    for j in 0..shared {
        let mut vals: Vec<QuadScalar> = seq.levels[seq.levels.len() - tail..]
            .iter()
            .map(|r| footprint(r, j))
            .collect();
        vals.sort();
        let clusters = 1 + vals
            .windows(2)
            .filter(|w| &w[1] - &w[0] > cluster_gap)
            .count();
        if clusters >= 2 {
            return Classification {
                verdict: Verdict::Singular,
                evidence_level,
                detail: format!(
                    "return footprint {j} splits into {clusters} clusters wider than 2^-{evidence_level}"
                ),
            };
        }
    }
    let cauchy = (0..shared).all(|j| {
        seq.levels.windows(2).all(|w| {
            let gap = (footprint(&w[1], j) - footprint(&w[0], j)).abs();
            gap < QuadScalar::from_rational(pow2(1 - w[0].level as i32))
        })
    });
    if !cauchy {
        return Classification {
            verdict: Verdict::Undetermined,
            evidence_level,
            detail: "some return footprint sequence is not Cauchy at rate 2^(1-n)".into(),
        };
    }
    if seq.levels.iter().all(|r| r.orbit.is_periodic()) {
        Classification {
            verdict: Verdict::Periodic,
            evidence_level,
            detail: format!(
                "all member orbits periodic; {shared} return footprint(s) Cauchy with gap below 2^(1-n)"
            ),
        }
    } else {
        Classification {
            verdict: Verdict::Recurrent,
            evidence_level,
            detail: format!("{shared} return footprint(s) Cauchy, but not all members periodic"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_word, pt};
    use crate::scalar::qrat;

    fn up_right(n: i64, d: i64) -> Direction {
        Direction::up_right(qrat(n, d))
    }

    fn up_left(n: i64, d: i64) -> Direction {
        Direction::up_left(qrat(n, d))
    }

    #[test]
    fn binary_truncation_values() {
        assert_eq!(binary_truncate(&rat(1, 3), 1).unwrap(), rat(0, 1));
        assert_eq!(binary_truncate(&rat(1, 3), 2).unwrap(), rat(1, 4));
        assert_eq!(binary_truncate(&rat(2, 3), 1).unwrap(), rat(1, 2));
        assert_eq!(binary_truncate(&rat(1, 3), 4).unwrap(), rat(5, 16));
        assert_eq!(binary_truncate(&rat(5, 7), 4).unwrap(), rat(11, 16));
        assert!(matches!(
            binary_truncate(&rat(1, 2), 3),
            Err(AnalysisError::DyadicValue(_))
        ));
        assert!(matches!(
            binary_truncate(&rat(3, 2), 3),
            Err(AnalysisError::OutOfRange(_))
        ));
    }

    #[test]
    fn binary_expansions() {
        let third = BinaryExpansion::of(&rat(1, 3)).unwrap();
        assert!(third.preperiod.is_empty());
        assert_eq!(third.period, vec![false, true]);
        let five_28 = BinaryExpansion::of(&rat(5, 28)).unwrap();
        assert_eq!(five_28.preperiod, vec![false, false]);
        assert_eq!(five_28.period, vec![true, false, true]);
        let dyadic = BinaryExpansion::of(&rat(3, 8)).unwrap();
        assert_eq!(dyadic.preperiod, vec![false, true, true]);
        assert_eq!(dyadic.period, vec![false]);
        for k in 1..10 {
            assert_eq!(
                five_28.truncated(k),
                binary_truncate(&rat(5, 28), k).unwrap()
            );
        }
    }

    #[test]
    fn relative_origin_follows_travel() {
        let left = pt(1, 1, 3, 2);
        let right = pt(3, 2, 3, 2);
        assert_eq!(
            relative_origin(&up_right(1, 3), &left, &right).unwrap(),
            left
        );
        assert_eq!(
            relative_origin(&up_left(1, 3), &left, &right).unwrap(),
            right
        );
        let vertical = Direction::new(1, 1, Slope::Vertical).unwrap();
        assert!(relative_origin(&vertical, &left, &right).is_err());
    }

    #[test]
    fn compatibility_of_shared_initial_condition() {
        let t1 = t_prefractal(1);
        let ic = PhasePoint {
            pos: pt(2, 3, 0, 1),
            dir: up_right(1, 1),
        };
        assert!(check_compatible(&ic, &ic, &t1));
        let other = PhasePoint {
            pos: pt(2, 3, 0, 1),
            dir: up_left(1, 1),
        };
        assert!(!check_compatible(&ic, &other, &t1));
    }

    #[test]
    fn compatibility_blocked_by_intervening_wall() {
        // (1/3, 0) and (4/3, 1) lie on a common slope-1 ray, but the
        // segment joining them crosses the stem's right wall at (1, 2/3).
        let t1 = t_prefractal(1);
        let low = PhasePoint {
            pos: pt(1, 3, 0, 1),
            dir: up_right(1, 1),
        };
        let high = PhasePoint {
            pos: pt(4, 3, 1, 1),
            dir: up_right(1, 1),
        };
        assert!(!check_compatible(&low, &high, &t1));
        // Off-ray basepoints are incompatible regardless of walls.
        let off = PhasePoint {
            pos: pt(5, 3, 1, 1),
            dir: up_right(1, 1),
        };
        assert!(!check_compatible(&low, &off, &t1));
    }

    #[test]
    fn never_escaping_sequence_is_constant_from_zero() {
        let seq = base_sequence(qrat(1, 2), up_right(1, 4), 4, 400).unwrap();
        for rec in &seq.levels {
            assert!(rec.orbit.is_periodic());
            assert_eq!(rec.tau, None, "level {} escaped", rec.level);
        }
        assert_eq!(detect_eventually_constant(&seq).unwrap(), Some(0));
        let mirrored = base_sequence(qrat(1, 2), up_left(1, 4), 4, 400).unwrap();
        assert_eq!(detect_eventually_constant(&mirrored).unwrap(), Some(0));
        let class = classify(&seq);
        assert_eq!(class.verdict, Verdict::Periodic);
    }

    #[test]
    fn overhang_midpoint_sequence_is_constant_from_one() {
        let seq = build_sequence(pt(5, 4, 1, 1), up_right(1, 4), 3, 600).unwrap();
        assert!(seq.levels.iter().all(|r| r.orbit.is_periodic()));
        // Level 0: a four-collision cycle that grazes the left removed
        // segment at (-1/4, 3/2).
        let o0 = &seq.levels[0].orbit;
        assert_eq!(o0.collisions(), 4);
        assert_eq!(seq.levels[0].tau, Some(2));
        assert_eq!(o0.states[2].pos, pt(-1, 4, 3, 2));
        assert_eq!(detect_eventually_constant(&seq).unwrap(), Some(1));
    }

    #[test]
    fn escaping_sequence_is_not_eventually_constant() {
        let seq = base_sequence(qrat(2, 3), up_right(1, 1), 2, 4000).unwrap();
        assert!(seq.levels.iter().all(|r| r.orbit.is_periodic()));
        assert!(seq.levels.iter().all(|r| r.tau.is_some()));
        assert_eq!(detect_eventually_constant(&seq).unwrap(), None);
    }

    #[test]
    fn escape_distance_identity_both_signs() {
        let seq = base_sequence(qrat(1, 3), up_right(1, 3), 4, 2000).unwrap();
        for n in 0..seq.levels.len() {
            let (tau, upsilon) = (seq.levels[n].tau, seq.levels[n].upsilon);
            let tau = tau.expect("must escape");
            assert!(tau < upsilon.expect("must return"));
            assert!(verify_escape_distance(&seq, n).unwrap(), "level {n}");
        }
        let mirrored = base_sequence(qrat(1, 3), up_left(1, 3), 4, 2000).unwrap();
        for n in 0..mirrored.levels.len() {
            assert!(verify_escape_distance(&mirrored, n).unwrap(), "mirror {n}");
        }
        // Level-0 distances, worked by hand: escape at (-1/6, 3/2) is 1/3
        // from its relative origin (-1/2, 3/2); the mirrored launch
        // escapes at (7/6, 3/2), 1/6 from (3/2, 3/2) with 2/3 - 1/2 = 1/6.
        assert_eq!(seq.escape_point(0).unwrap(), &pt(-1, 6, 3, 2));
        assert_eq!(mirrored.escape_point(0).unwrap(), &pt(7, 6, 3, 2));
    }

    #[test]
    fn escape_distance_rejects_inapplicable_sequences() {
        let seq = base_sequence(qrat(1, 2), up_right(1, 4), 1, 400).unwrap();
        // Never escapes: not applicable.
        assert!(matches!(
            verify_escape_distance(&seq, 0),
            Err(AnalysisError::NotApplicable(_))
        ));
        let even = base_sequence(qrat(1, 3), up_right(1, 2), 1, 1000).unwrap();
        if even.levels[0].tau.is_some() {
            assert!(matches!(
                verify_escape_distance(&even, 0),
                Err(AnalysisError::NotApplicable(_))
            ));
        }
    }

    #[test]
    fn nontrivial_path_limits_are_exact_and_distinct() {
        // The cap only needs to clear every escape time, not the periods,
        // so cap-terminated members are fine here.
        let seq = base_sequence(qrat(1, 3), up_right(1, 3), 6, 300).unwrap();
        let path = build_nontrivial_path(&seq).unwrap();
        assert_eq!(path.escape_points[0], pt(-1, 6, 3, 2));
        let LimitResolution::Exact { address, point } = &path.limit else {
            panic!("expected an exact limit");
        };
        let word = |s: &str| parse_word(s).unwrap();
        assert_eq!(address, &ElusiveAddress::new(vec![], word("LLRR")));
        assert_eq!(point, &pt(-2, 5, 3, 1));

        let mirrored = base_sequence(qrat(1, 3), up_left(1, 3), 6, 300).unwrap();
        let mpath = build_nontrivial_path(&mirrored).unwrap();
        let LimitResolution::Exact {
            address: maddress,
            point: mpoint,
        } = &mpath.limit
        else {
            panic!("expected an exact mirrored limit");
        };
        assert_eq!(maddress, &ElusiveAddress::new(vec![], word("RLLR")));
        assert_eq!(mpoint, &pt(4, 5, 3, 1));
        assert_ne!(point, mpoint);

        // Escape heights climb strictly; the gap to the elusive segment
        // at height 3 is exactly 3 * 2^-(n+1).
        for (n, e) in path.escape_points.iter().enumerate() {
            let gap = QuadScalar::from_int(3) - &e.y;
            assert_eq!(
                gap,
                QuadScalar::from_rational(rat(3, 1) * pow2(-(n as i32) - 1))
            );
        }
    }

    #[test]
    fn non_escaping_sequence_is_not_a_path() {
        let seq = base_sequence(qrat(1, 2), up_right(1, 4), 2, 400).unwrap();
        assert!(matches!(
            build_nontrivial_path(&seq),
            Err(AnalysisError::NotNontrivialPath(_))
        ));
    }

    #[test]
    fn hausdorff_examples() {
        let a = [pt(0, 1, 0, 1), pt(1, 1, 0, 1)];
        assert!(hausdorff_distance_squared_max(&a, &a).is_zero());
        let b = [pt(0, 1, 1, 2), pt(1, 1, 1, 2)];
        assert_eq!(hausdorff_distance_squared_max(&a, &b), qrat(1, 4));
        // A point against a segment: farthest at the far endpoint.
        let p = [pt(0, 1, 0, 1)];
        assert_eq!(hausdorff_distance_squared_max(&p, &a), qrat(1, 1));
        // Projection feet matter: a spike reaching off a shared baseline.
        let spike = [pt(0, 1, 0, 1), pt(1, 2, 1, 2), pt(1, 1, 0, 1)];
        let base = [pt(0, 1, 0, 1), pt(1, 1, 0, 1)];
        assert_eq!(hausdorff_distance_squared_max(&spike, &base), qrat(1, 4));
    }

    #[test]
    fn classify_periodic_and_singular() {
        let periodic = base_sequence(qrat(2, 3), up_right(1, 1), 2, 4000).unwrap();
        let class = classify(&periodic);
        assert_eq!(class.verdict, Verdict::Periodic);
        assert_eq!(class.evidence_level, 2);

        // Slope 2 from (1/2, 0) runs straight into the reflex corner at
        // (1, 1) at every level.
        let singular = base_sequence(qrat(1, 2), up_right(2, 1), 2, 100).unwrap();
        for rec in &singular.levels {
            assert!(rec.orbit.is_singular());
        }
        assert_eq!(classify(&singular).verdict, Verdict::Singular);
    }

    #[test]
    fn sequence_records_escape_and_return_times() {
        let seq = base_sequence(qrat(1, 3), up_right(1, 3), 1, 5000).unwrap();
        assert_eq!(seq.levels[0].tau, Some(5));
        assert_eq!(seq.levels[0].upsilon, Some(13));
        assert_eq!(first_escape(seq.orbit(0)), Some(5));
        assert_eq!(returns(seq.orbit(0)).first().copied(), Some(13));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// Truncation agrees with the digit expansion and converges.
            #[test]
            fn truncation_matches_expansion(num in 1i64..40, den in 41i64..97, k in 1u32..12) {
                let x = rat(num, den);
                prop_assume!(!is_dyadic(&x));
                let t = binary_truncate(&x, k).unwrap();
                let e = BinaryExpansion::of(&x).unwrap();
                prop_assert_eq!(&t, &e.truncated(k));
                prop_assert!(t <= x);
                prop_assert!(&x - &t < pow2(-(k as i32)));
            }
        }
    }
}
