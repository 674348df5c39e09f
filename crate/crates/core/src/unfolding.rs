//! Orbit unfolding on square tilings, and closed-form exit oracles for the
//! unit square and the `4 x 1` rectangle.
//!
//! *Unfolding* replaces each reflection by a reflection of the table: the
//! orbit becomes a straight line in the plane. For tables whose walls lie
//! on a square grid of pitch `cell`, reflecting across the crossed wall
//! lines is an isometry of the grid, so collinearity of the unfolded
//! collision points is an exact correctness check on the flow kernel.
//!
//! The oracles predict, without tracing:
//!
//! * on the unit square, where an orbit from `(x0, 0)` with slope `+/-1/p`
//!   (`p` odd, `x0` non-dyadic) first reaches the top edge: at
//!   `(1 - x0, 1)`, collision `p + 1`, arriving up-left for `+` and
//!   up-right for `-`;
//! * on `[0,4] x [0,1]`, which of the top corner segments `[0,1]` / `[3,4]`
//!   an orbit from `(x0, 0)`, `x0` in `(1,2) u (2,3)`, slope `+/-1/p`,
//!   reaches first, and at which of the two mirror angles. The rectangle
//!   unfolds onto a strip of 8 unit cells, so the answer depends on
//!   `p mod 8`, the window, and the slope sign.

use serde::Serialize;
use thiserror::Error;

use crate::flow::{Direction, HitKind, Orbit};
use crate::geometry::{Orientation, Point};
use crate::scalar::{qrat, QuadScalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("collision wall at {0} is not on the declared grid of pitch {1}")]
    WallOffGrid(String, String),
    #[error("invalid oracle input: {0}")]
    BadOracleInput(String),
}

/// One-dimensional composition of reflections: `v -> off + sign * v`.
#[derive(Debug, Clone)]
struct Mirror1D {
    sign: i8,
    off: QuadScalar,
}

impl Mirror1D {
    fn identity() -> Self {
        Mirror1D {
            sign: 1,
            off: QuadScalar::zero(),
        }
    }

    fn apply(&self, v: &QuadScalar) -> QuadScalar {
        if self.sign > 0 {
            &self.off + v
        } else {
            &self.off - v
        }
    }

    /// Composes a reflection through the (already-transformed image of the)
    /// wall line at `at`: the new map sends `v` to `2 * apply(at) - apply(v)`.
    fn reflect_at(&mut self, at: &QuadScalar) {
        self.off = self.apply(at).scale_pow2(1) - &self.off;
        self.sign = -self.sign;
    }
}

/// Unfolds an orbit confined to a region whose walls lie on the square grid
/// of pitch `cell`: the returned points are the collision points mapped
/// into the plane so that the whole trajectory is one straight line.
///
/// The terminal reflex corner of a singular orbit is included (it ends the
/// line but reflects nothing). Fails if any reflecting wall is off-grid.
pub fn unfold(orbit: &Orbit, cell: &QuadScalar) -> Result<Vec<Point>, UnfoldError> {
    if cell.sign() <= 0 {
        return Err(UnfoldError::BadOracleInput(format!(
            "grid pitch must be positive, got {cell}"
        )));
    }
    let on_grid = |v: &QuadScalar| (v / cell).is_integer();
    let polyline = orbit.polyline();
    let mut tx = Mirror1D::identity();
    let mut ty = Mirror1D::identity();
    let mut out = Vec::with_capacity(polyline.len());
    for (i, p) in polyline.iter().enumerate() {
        out.push(Point::new(tx.apply(&p.x), ty.apply(&p.y)));
        if i == 0 || i > orbit.hits.len() {
            continue;
        }
        let hit = orbit.hits[i - 1];
        let (flip_x, flip_y) = match hit {
            HitKind::Wall(Orientation::Vertical) => (true, false),
            HitKind::Wall(Orientation::Horizontal) => (false, true),
            HitKind::ConvexCorner => (true, true),
        };
        if flip_x {
            if !on_grid(&p.x) {
                return Err(UnfoldError::WallOffGrid(p.x.to_string(), cell.to_string()));
            }
            tx.reflect_at(&p.x);
        }
        if flip_y {
            if !on_grid(&p.y) {
                return Err(UnfoldError::WallOffGrid(p.y.to_string(), cell.to_string()));
            }
            ty.reflect_at(&p.y);
        }
    }
    Ok(out)
}

/// Exact collinearity of all points with the line through the first two
/// distinct points. True for fewer than three points.
pub fn verify_collinear(points: &[Point]) -> bool {
    let Some(first) = points.first() else {
        return true;
    };
    let Some(second) = points.iter().find(|p| *p != first) else {
        return true; // all points coincide
    };
    let ux = &second.x - &first.x;
    let uy = &second.y - &first.y;
    points.iter().all(|p| {
        let vx = &p.x - &first.x;
        let vy = &p.y - &first.y;
        (&ux * &vy - &uy * &vx).is_zero()
    })
}

/// Checks that the unfolded orbit is a straight, forward-moving line:
/// collinear, and with strictly increasing parameter along the direction of
/// travel (so unfolded segment lengths add up to the endpoint distance).
pub fn unfold_is_straight(orbit: &Orbit, cell: &QuadScalar) -> Result<bool, UnfoldError> {
    let pts = unfold(orbit, cell)?;
    if !verify_collinear(&pts) {
        return Ok(false);
    }
    let (dx, dy) = orbit.initial().dir.components();
    let mut last: Option<QuadScalar> = None;
    for p in &pts {
        let t = (&p.x - &pts[0].x) * &dx + (&p.y - &pts[0].y) * &dy;
        if let Some(prev) = &last {
            if t <= *prev {
                return Ok(false);
            }
        }
        last = Some(t);
    }
    Ok(true)
}

fn validate_odd(p: u32) -> Result<(), UnfoldError> {
    if p == 0 || p % 2 == 0 {
        return Err(UnfoldError::BadOracleInput(format!(
            "slope denominator must be odd and positive, got {p}"
        )));
    }
    Ok(())
}

fn validate_sign(sign: i8) -> Result<(), UnfoldError> {
    if sign != 1 && sign != -1 {
        return Err(UnfoldError::BadOracleInput(format!(
            "slope sign must be +/-1, got {sign}"
        )));
    }
    Ok(())
}

/// Predicted first top-edge hit for a unit-square orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SquareExit {
    /// The exit point `(1 - x0, 1)`.
    pub exit: Point,
    /// Collision index of the exit: `p` side-wall bounces, then the top.
    pub step: usize,
    /// Direction of travel into the exit point.
    pub arrival: Direction,
}

/// Where an orbit from `(x0, 0)` with slope `sign / p` first reaches the
/// top of the unit square.
///
/// Rising one unit at slope `1/p` sweeps `p` horizontal units, so the orbit
/// reflects off the side walls exactly `p` times before the top; `p` odd
/// makes the horizontal fold land at `1 - x0`, mirrored from the start, and
/// flips the horizontal sign an odd number of times, so the arrival points
/// up-left for `sign = +1` and up-right for `sign = -1` regardless of where
/// `x0` sits. Requires non-dyadic `x0` (dyadic starts can reach corners).
pub fn square_exit_oracle(
    x0: &QuadScalar,
    p: u32,
    sign: i8,
) -> Result<SquareExit, UnfoldError> {
    validate_odd(p)?;
    validate_sign(sign)?;
    if x0.sign() <= 0 || *x0 >= QuadScalar::one() {
        return Err(UnfoldError::BadOracleInput(format!(
            "x0 must lie in (0,1), got {x0}"
        )));
    }
    if x0.is_dyadic() {
        return Err(UnfoldError::BadOracleInput(format!(
            "x0 must not be a dyadic rational, got {x0}"
        )));
    }
    let slope = qrat(1, p as i64);
    let arrival = if sign > 0 {
        Direction::up_left(slope)
    } else {
        Direction::up_right(slope)
    };
    Ok(SquareExit {
        exit: Point::new(QuadScalar::one() - x0, QuadScalar::one()),
        step: p as usize + 1,
        arrival,
    })
}

/// The two top corner segments of the `4 x 1` rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TopSegment {
    /// `[0,1] x {1}`.
    Left,
    /// `[3,4] x {1}`.
    Right,
}

/// Predicted first hit on a top corner segment of the `4 x 1` rectangle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RectExit {
    pub segment: TopSegment,
    /// Direction of travel into the exit point.
    pub arrival: Direction,
}

/// Which top corner segment of `[0,4] x [0,1]` an orbit from `(x0, 0)` with
/// slope `sign / p` reaches first, and at which mirror angle.
///
/// Unfolding the rectangle horizontally tiles a strip of period 8, so top
/// arrivals happen at `x0 + sign * p * (2k - 1)` folded mod 8; for odd `p`
/// the first fold into `[0,1] u [3,4]` happens at `k <= 2`, before the
/// orbit can return to the bottom opening `(1,3)`. Working out the fold for
/// each residue gives, with `w = +1` for `x0` in `(1,2)` and `-1` for
/// `(2,3)`:
///
/// * segment: right iff `sign = +1` and `p = 1, 3 (mod 8)`, or `sign = -1`
///   and `p = 5, 7 (mod 8)`; left otherwise;
/// * arrival `sx`: `sign * w` for a left exit, `-sign * w` for a right one
///   (the fold is orientation-reversing exactly on the right segment).
pub fn rect_exit_oracle(x0: &QuadScalar, p: u32, sign: i8) -> Result<RectExit, UnfoldError> {
    validate_odd(p)?;
    validate_sign(sign)?;
    let in_open = |lo: i64, hi: i64| {
        x0 > &QuadScalar::from_int(lo) && x0 < &QuadScalar::from_int(hi)
    };
    let w: i8 = if in_open(1, 2) {
        1
    } else if in_open(2, 3) {
        -1
    } else {
        return Err(UnfoldError::BadOracleInput(format!(
            "x0 must lie in (1,2) or (2,3), got {x0}"
        )));
    };
    let low_residue = matches!(p % 8, 1 | 3);
    let segment = if (sign > 0) == low_residue {
        TopSegment::Right
    } else {
        TopSegment::Left
    };
    let sx = match segment {
        TopSegment::Left => sign * w,
        TopSegment::Right => -sign * w,
    };
    let slope = qrat(1, p as i64);
    let arrival = if sx > 0 {
        Direction::up_right(slope)
    } else {
        Direction::up_left(slope)
    };
    Ok(RectExit { segment, arrival })
}

/// First collision of the orbit at the given height, with its arrival
/// direction.
pub fn first_hit_at_height(orbit: &Orbit, y: &QuadScalar) -> Option<(usize, Point, Direction)> {
    (1..orbit.states.len()).find_map(|k| {
        let p = &orbit.states[k].pos;
        (p.y == *y).then(|| (k, p.clone(), orbit.incoming_dir(k).clone()))
    })
}

/// First collision at height `y` whose x-coordinate falls in one of the
/// closed windows.
pub fn first_hit_in_windows(
    orbit: &Orbit,
    y: &QuadScalar,
    windows: &[(QuadScalar, QuadScalar)],
) -> Option<(usize, Point, Direction)> {
    (1..orbit.states.len()).find_map(|k| {
        let p = &orbit.states[k].pos;
        let inside = p.y == *y && windows.iter().any(|(lo, hi)| *lo <= p.x && p.x <= *hi);
        inside.then(|| (k, p.clone(), orbit.incoming_dir(k).clone()))
    })
}

/// The rectangle's top corner windows `[0,1]` and `[3,4]`.
pub fn rect_gap_windows() -> [(QuadScalar, QuadScalar); 2] {
    [
        (QuadScalar::from_int(0), QuadScalar::from_int(1)),
        (QuadScalar::from_int(3), QuadScalar::from_int(4)),
    ]
}

/// Classifies a rectangle top hit as left/right window.
pub fn classify_rect_exit(p: &Point) -> Option<TopSegment> {
    if p.y != QuadScalar::one() {
        return None;
    }
    if p.x >= QuadScalar::zero() && p.x <= QuadScalar::one() {
        Some(TopSegment::Left)
    } else if p.x >= QuadScalar::from_int(3) && p.x <= QuadScalar::from_int(4) {
        Some(TopSegment::Right)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{trace_orbit, Direction};
    use crate::geometry::{pt, rect_4x1, t_prefractal, unit_square};
    use crate::scalar::{qrat, rat};

    #[test]
    fn unfolds_square_diagonal() {
        let sq = unit_square();
        let orbit = trace_orbit(&sq, pt(1, 3, 0, 1), Direction::up_right(qrat(1, 1)), 10).unwrap();
        let pts = unfold(&orbit, &QuadScalar::one()).unwrap();
        assert_eq!(pts[1], pt(1, 1, 2, 3));
        assert_eq!(pts[2], pt(4, 3, 1, 1));
        assert_eq!(pts[3], pt(2, 1, 5, 3));
        assert_eq!(pts[4], pt(7, 3, 2, 1));
        // All on the line y = x - 1/3.
        assert!(verify_collinear(&pts));
        assert!(unfold_is_straight(&orbit, &QuadScalar::one()).unwrap());
    }

    #[test]
    fn unfolded_endpoint_of_dyadic_slope_climb() {
        // Slope 2^-2 from the base midpoint: the unfolded top hit is at
        // (2^2 + 1/2, 1), reached at collision 2^2 + 1.
        let sq = unit_square();
        let orbit = trace_orbit(&sq, pt(1, 2, 0, 1), Direction::up_right(qrat(1, 4)), 10).unwrap();
        let pts = unfold(&orbit, &QuadScalar::one()).unwrap();
        assert_eq!(pts[5], pt(9, 2, 1, 1));
        assert!(verify_collinear(&pts));
    }

    #[test]
    fn unfolds_prefractal_orbit_on_half_grid() {
        let t0 = t_prefractal(0);
        let orbit = trace_orbit(&t0, pt(1, 3, 0, 1), Direction::up_right(qrat(1, 1)), 100).unwrap();
        assert!(unfold_is_straight(&orbit, &qrat(1, 2)).unwrap());
        // The unit grid is too coarse: the top wall at 3/2 is off-grid.
        assert!(matches!(
            unfold(&orbit, &QuadScalar::one()),
            Err(UnfoldError::WallOffGrid(..))
        ));
    }

    #[test]
    fn unfolds_through_convex_corners() {
        let sq = unit_square();
        let orbit = trace_orbit(&sq, pt(1, 2, 0, 1), Direction::up_right(qrat(2, 1)), 10).unwrap();
        assert!(unfold_is_straight(&orbit, &QuadScalar::one()).unwrap());
    }

    #[test]
    fn collinearity_examples() {
        assert!(verify_collinear(&[pt(0, 1, 0, 1), pt(1, 1, 1, 1), pt(2, 1, 2, 1)]));
        assert!(!verify_collinear(&[pt(0, 1, 0, 1), pt(1, 1, 1, 1), pt(2, 1, 3, 1)]));
        assert!(verify_collinear(&[pt(5, 1, 5, 1)]));
    }

    #[test]
    fn square_oracle_matches_simulation() {
        let sq = unit_square();
        let top = QuadScalar::one();
        for p in [1u32, 3, 5] {
            for (xn, xd) in [(1i64, 3i64), (2, 5), (5, 9)] {
                for sign in [1i8, -1] {
                    let x0 = qrat(xn, xd);
                    let oracle = square_exit_oracle(&x0, p, sign).unwrap();
                    let dir = if sign > 0 {
                        Direction::up_right(qrat(1, p as i64))
                    } else {
                        Direction::up_left(qrat(1, p as i64))
                    };
                    let start = Point::new(x0.clone(), QuadScalar::zero());
                    let orbit = trace_orbit(&sq, start, dir, 4 * p as usize + 8).unwrap();
                    let (k, point, arrival) =
                        first_hit_at_height(&orbit, &top).expect("line must reach the top");
                    assert_eq!(k, oracle.step, "step for p={p}, x0={xn}/{xd}, sign={sign}");
                    assert_eq!(point, oracle.exit);
                    assert_eq!(arrival, oracle.arrival);
                }
            }
        }
    }

    #[test]
    fn square_oracle_rejects_bad_inputs() {
        assert!(square_exit_oracle(&qrat(1, 2), 3, 1).is_err()); // dyadic
        assert!(square_exit_oracle(&qrat(1, 3), 4, 1).is_err()); // even p
        assert!(square_exit_oracle(&qrat(1, 3), 3, 0).is_err()); // bad sign
        assert!(square_exit_oracle(&qrat(4, 3), 3, 1).is_err()); // out of range
    }

    #[test]
    fn rect_oracle_matches_simulation() {
        let rect = rect_4x1();
        let top = QuadScalar::one();
        let windows = rect_gap_windows();
        for p in [1u32, 3, 5, 7, 9, 11, 13, 15] {
            for (xn, xd) in [(3i64, 2i64), (7, 3)] {
                for sign in [1i8, -1] {
                    let x0 = qrat(xn, xd);
                    let oracle = rect_exit_oracle(&x0, p, sign).unwrap();
                    let dir = if sign > 0 {
                        Direction::up_right(qrat(1, p as i64))
                    } else {
                        Direction::up_left(qrat(1, p as i64))
                    };
                    let start = Point::new(x0.clone(), QuadScalar::zero());
                    let orbit = trace_orbit(&rect, start, dir, 16 * p as usize + 16).unwrap();
                    let (k, point, arrival) = first_hit_in_windows(&orbit, &top, &windows)
                        .expect("orbit must reach a top corner segment");
                    assert_eq!(
                        classify_rect_exit(&point),
                        Some(oracle.segment),
                        "segment for p={p}, x0={xn}/{xd}, sign={sign}"
                    );
                    assert_eq!(
                        arrival, oracle.arrival,
                        "arrival for p={p}, x0={xn}/{xd}, sign={sign}"
                    );
                    // The bottom opening (1,3) x {0} is never revisited
                    // before the exit.
                    for j in 1..k {
                        let q = &orbit.states[j].pos;
                        let on_bottom_opening = q.y.is_zero()
                            && q.x > QuadScalar::one()
                            && q.x < QuadScalar::from_int(3);
                        assert!(!on_bottom_opening, "early bottom-opening hit at {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn rect_oracle_rejects_bad_inputs() {
        assert!(rect_exit_oracle(&qrat(2, 1), 3, 1).is_err()); // window boundary
        assert!(rect_exit_oracle(&qrat(7, 2), 3, 1).is_err()); // outside windows
        assert!(rect_exit_oracle(&qrat(3, 2), 2, 1).is_err()); // even p
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            /// Unfolding any traced orbit yields a straight monotone line.
            #[test]
            fn unfolding_straightens_orbits(
                x_num in 1i64..12, x_den in 13i64..17,
                m_num in 1i64..6, m_den in 1i64..6,
                sx in prop::bool::ANY,
            ) {
                let t1 = t_prefractal(1);
                let x0 = Point::from_rationals(rat(x_num, x_den), rat(0, 1));
                let m = qrat(m_num, m_den);
                let dir = if sx { Direction::up_right(m) } else { Direction::up_left(m) };
                let orbit = trace_orbit(&t1, x0, dir, 40).unwrap();
                prop_assert!(unfold_is_straight(&orbit, &qrat(1, 4)).unwrap());
            }
        }
    }
}
