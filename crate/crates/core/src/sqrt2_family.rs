//! A one-parameter family of orbits with irrational slope `sqrt(2)/34`.
//!
//! The family has two halves. `descent(n)` launches an orbit from the top
//! of the level-`n` table down into the tree and records where it first
//! meets the base; the landing abscissas obey an exact closed-form
//! recurrence in `n`, checked coefficient-by-coefficient over `Q(sqrt 2)`
//! by [`verify_descent_recurrence`]. Their limit abscissa, launched back
//! upward, produces a compatible sequence in which every member orbit
//! terminates at a reflex corner yet escapes first, so the truncations
//! assemble into a path that leaves every approximation; [`singular_sequence`]
//! builds that sequence and checks its self-similarity exactly.

use crate::analysis::{
    build_nontrivial_path, build_sequence, AnalysisError, CompatibleSequence, NontrivialPath,
};
use crate::flow::{trace_until_side, Direction, FlowError, Orbit, Termination};
use crate::geometry::{point_on_segment, sigma, t_prefractal, Point};
use crate::scalar::{pow2, sqrt2_combo, QuadScalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Sqrt2Error {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("descent at level {level} ended in {found} before reaching the base")]
    DescentBlocked { level: u32, found: String },
    #[error("level {n} base hit {simulated} differs from the closed form {formula}")]
    RecurrenceMismatch {
        n: u32,
        simulated: String,
        formula: String,
    },
    #[error("level {level} orbit does not terminate at a reflex corner within cap {cap}")]
    NotSingular { level: u32, cap: usize },
    #[error("level {level} orbit never escapes")]
    NoEscape { level: u32 },
    #[error("{0}")]
    IdentityFailed(String),
}

/// Slope magnitude `sqrt(2)/34` shared by every orbit in the family.
/// Irrational, so no orbit direction ever recurs under the dihedral
/// slope action, and all collision coordinates stay in `Q(sqrt 2)`.
pub fn theta0_slope() -> QuadScalar {
    sqrt2_combo(0, 1, 1, 34)
}

/// Base abscissa of the level-0 descent: `51*sqrt(2)/2 - 36`.
pub fn first_base_hit() -> QuadScalar {
    sqrt2_combo(-36, 1, 51, 2)
}

/// Gap between consecutive descent landings at the first step:
/// `1649*sqrt(2)/4 - 583`. Landing `n` sits at
/// `first_base_hit() + 2 * descent_gap() * (1 - 2^{-n})`.
pub fn descent_gap() -> QuadScalar {
    sqrt2_combo(-583, 1, 1649, 4)
}

/// Limit of the descent landings, `850*sqrt(2) - 1202`, and the launch
/// abscissa of [`singular_sequence`]. Lies in the open unit interval.
pub fn singular_start_x() -> QuadScalar {
    first_base_hit() + descent_gap().scale_pow2(1)
}

/// Closed form for the level-`n` descent landing abscissa.
pub fn descent_formula(n: u32) -> QuadScalar {
    let weight = QuadScalar::from_rational(pow2(1) - pow2(1 - n as i32));
    first_base_hit() + descent_gap() * weight
}

/// One downward launch from the top of the level-`n` table.
#[derive(Debug, Clone)]
pub struct DescentRecord {
    pub n: u32,
    pub start: Point,
    pub direction: Direction,
    /// Collision count at which the orbit first meets the base.
    pub zeta: usize,
    /// Abscissa of that first base collision.
    pub base_hit: QuadScalar,
    pub orbit: Orbit,
}

/// Traces the level-`n` descent: from `(0, sigma(n))`, heading down-right
/// for even `n` and down-left for odd `n` with slope [`theta0_slope`],
/// until the first collision on the base. Errors if the orbit dies at a
/// corner or exhausts `cap` first.
pub fn descent(n: u32, cap: usize) -> Result<DescentRecord, Sqrt2Error> {
    let table = t_prefractal(n);
    let start = Point::new(QuadScalar::zero(), QuadScalar::from_rational(sigma(n)));
    let direction = if n % 2 == 0 {
        Direction::down_right(theta0_slope())
    } else {
        Direction::down_left(theta0_slope())
    };
    let orbit = trace_until_side(&table, start.clone(), direction.clone(), cap, table.base_side())?;
    let zeta = match orbit.termination {
        Termination::ReachedSide { collision } => collision,
        ref other => {
            return Err(Sqrt2Error::DescentBlocked {
                level: n,
                found: format!("{other:?}"),
            })
        }
    };
    let landing = &orbit.states[zeta].pos;
    debug_assert!(landing.y.is_zero());
    let base_hit = landing.x.clone();
    Ok(DescentRecord {
        n,
        start,
        direction,
        zeta,
        base_hit,
        orbit,
    })
}

/// One row of [`verify_descent_recurrence`]: the simulated landing always
/// equals `formula` when the function returns `Ok`.
#[derive(Debug, Clone)]
pub struct RecurrenceCheck {
    pub n: u32,
    pub zeta: usize,
    pub base_hit: QuadScalar,
    pub formula: QuadScalar,
}

/// Runs [`descent`] for `0..=n_max` and checks each landing abscissa
/// against [`descent_formula`] by exact comparison in `Q(sqrt 2)`.
pub fn verify_descent_recurrence(
    n_max: u32,
    cap: usize,
) -> Result<Vec<RecurrenceCheck>, Sqrt2Error> {
    let mut checks = Vec::new();
    for n in 0..=n_max {
        let rec = descent(n, cap)?;
        let formula = descent_formula(n);
        if rec.base_hit != formula {
            return Err(Sqrt2Error::RecurrenceMismatch {
                n,
                simulated: rec.base_hit.to_string(),
                formula: formula.to_string(),
            });
        }
        checks.push(RecurrenceCheck {
            n,
            zeta: rec.zeta,
            base_hit: rec.base_hit,
            formula,
        });
    }
    Ok(checks)
}

/// Whether `p` lies on the polygonal path of `orbit`, collisions included.
pub fn orbit_passes_through(orbit: &Orbit, p: &Point) -> bool {
    let pts = orbit.polyline();
    pts.windows(2).any(|w| point_on_segment(&w[0], &w[1], p))
}

/// The [`singular_sequence`] launch: `(singular_start_x(), 0)` on the
/// base, heading up-left with slope [`theta0_slope`].
pub fn singular_launch() -> (Point, Direction) {
    (
        Point::new(singular_start_x(), QuadScalar::zero()),
        Direction::up_left(theta0_slope()),
    )
}

/// A compatible sequence in which every member orbit is singular, together
/// with the nontrivial path its escape prefixes assemble into.
#[derive(Debug, Clone)]
pub struct SingularLevels {
    pub sequence: CompatibleSequence,
    pub path: NontrivialPath,
    /// Collision index of the terminal reflex corner, per level. Always
    /// strictly after that level's first escape.
    pub corner_at: Vec<usize>,
}

/// Builds the singular compatible sequence on levels `0..=n_max` and
/// checks, exactly:
///
/// * every member orbit terminates at a reflex corner, but only after
///   its first escape;
/// * the direction into the level-1 escape is the launch direction
///   reflected across the vertical axis, the angle of slope
///   [`theta0_slope`] itself;
/// * the level-1 escape abscissa is `-1/2` times the level-0 one;
/// * consecutive normalized escape states are mirror images, the
///   scale-reflect-append self-similarity that makes the path's limit
///   address periodic.
pub fn singular_sequence(n_max: u32, cap: usize) -> Result<SingularLevels, Sqrt2Error> {
    let (start, launch) = singular_launch();
    let seq = build_sequence(start, launch.clone(), n_max, cap)?;

    let mut corner_at = Vec::new();
    for rec in &seq.levels {
        let corner = match rec.orbit.termination {
            Termination::Singular { collision, .. } => collision,
            _ => {
                return Err(Sqrt2Error::NotSingular {
                    level: rec.level,
                    cap,
                })
            }
        };
        let tau = rec.tau.ok_or(Sqrt2Error::NoEscape { level: rec.level })?;
        if tau >= corner {
            return Err(Sqrt2Error::IdentityFailed(format!(
                "level {} first escape at {tau} does not precede its corner at {corner}",
                rec.level
            )));
        }
        corner_at.push(corner);
    }

    if n_max >= 1 {
        let tau1 = seq.levels[1].tau.expect("checked above");
        let inc = seq.orbit(1).incoming_dir(tau1);
        let reflected = Direction::up_right(theta0_slope());
        if *inc != reflected {
            return Err(Sqrt2Error::IdentityFailed(format!(
                "direction into the level-1 escape {inc:?} is not the reflected launch {reflected:?}"
            )));
        }
        let x0 = &seq.escape_point(0).expect("checked above").x;
        let x1 = &seq.escape_point(1).expect("checked above").x;
        if *x1 != -x0.scale_pow2(-1) {
            return Err(Sqrt2Error::IdentityFailed(format!(
                "level-1 escape abscissa {x1} is not -1/2 times the level-0 one {x0}"
            )));
        }
    }

    // Normalized escape states, one per level, each rescaled to the unit
    // interval of its removed segment. The launch state itself is not in
    // the chain: the mirror symmetry starts at the first escape.
    let mut norm: Vec<(QuadScalar, i8)> = Vec::new();
    for (idx, rec) in seq.levels.iter().enumerate() {
        let tau = rec.tau.expect("checked above");
        let seg = seq.escape_segment(idx).expect("escape hits a removed segment");
        let x = &seq.escape_point(idx).expect("checked above").x;
        let delta = (x.clone() - seg.left.x.clone()).scale_pow2(rec.level as i32 + 1);
        norm.push((delta, rec.orbit.incoming_dir(tau).sx()));
    }
    for (k, pair) in norm.windows(2).enumerate() {
        let (d0, s0) = &pair[0];
        let (d1, s1) = &pair[1];
        if *d1 != QuadScalar::one() - d0.clone() || *s1 != -s0 {
            return Err(Sqrt2Error::IdentityFailed(format!(
                "normalized escape states {k} and {} are not mirror images",
                k + 1
            )));
        }
    }

    let path = build_nontrivial_path(&seq)?;
    Ok(SingularLevels {
        sequence: seq,
        path,
        corner_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify, LimitResolution, Verdict};
    use crate::geometry::{parse_word, pt, ElusiveAddress};
    use crate::scalar::qrat;

    #[test]
    fn constants_are_consistent() {
        let y0 = singular_start_x();
        assert_eq!(y0, sqrt2_combo(-1202, 1, 850, 1));
        assert!(y0.is_positive() && y0 < QuadScalar::one());
        assert_eq!(descent_formula(0), first_base_hit());
        assert_eq!(descent_formula(1), first_base_hit() + descent_gap());
        assert!(first_base_hit().is_positive());
        assert!(descent_gap().is_positive());
    }

    #[test]
    fn level_zero_descent_lands_on_frozen_abscissa() {
        let rec = descent(0, 10_000).unwrap();
        assert_eq!(rec.base_hit, first_base_hit());
        assert!(rec.zeta > 0);
        assert!(rec.orbit.states[rec.zeta].pos.y.is_zero());
        // The descent stays inside the table's vertical span.
        let top = QuadScalar::from_rational(sigma(0));
        for s in &rec.orbit.states {
            assert!(!s.pos.y.is_negative() && s.pos.y <= top);
        }
    }

    #[test]
    fn level_one_descent_crosses_the_reflected_midpoint() {
        let rec = descent(1, 10_000).unwrap();
        assert_eq!(rec.base_hit, first_base_hit() + descent_gap());
        let mid = Point::new(
            -first_base_hit().scale_pow2(-1),
            QuadScalar::from_rational(sigma(0)),
        );
        assert!(orbit_passes_through(&rec.orbit, &mid));
    }

    #[test]
    fn descent_recurrence_holds_exactly() {
        let checks = verify_descent_recurrence(3, 20_000).unwrap();
        assert_eq!(checks.len(), 4);
        for c in &checks {
            assert_eq!(c.base_hit, c.formula);
        }
        // Landings increase toward the singular launch abscissa.
        for w in checks.windows(2) {
            assert!(w[0].base_hit < w[1].base_hit);
        }
        assert!(checks.last().unwrap().base_hit < singular_start_x());
    }

    #[test]
    fn singular_sequence_is_self_similar() {
        let levels = singular_sequence(3, 20_000).unwrap();
        let seq = &levels.sequence;
        for (idx, rec) in seq.levels.iter().enumerate() {
            assert!(rec.orbit.is_singular());
            assert!(rec.tau.unwrap() < levels.corner_at[idx]);
        }
        assert_eq!(seq.escape_segment(0).unwrap().word, parse_word("L").unwrap());
        assert_eq!(seq.escape_segment(1).unwrap().word, parse_word("LR").unwrap());
        assert_eq!(seq.escape_segment(2).unwrap().word, parse_word("LRL").unwrap());
        // Regression pins, cross-confirmed by the mirror identities inside
        // singular_sequence.
        let x0 = seq.escape_point(0).unwrap().x.clone();
        assert_eq!(x0, sqrt2_combo(-1142, 1, 1615, 2));
        assert_eq!(seq.escape_point(1).unwrap().x, -x0.scale_pow2(-1));
        assert_eq!(seq.levels[0].tau, Some(45));
        match &levels.path.limit {
            LimitResolution::Exact { address, point } => {
                assert_eq!(
                    *address,
                    ElusiveAddress::new(vec![], parse_word("LR").unwrap())
                );
                assert_eq!(*point, pt(0, 1, 3, 1));
            }
            other => panic!("expected an exact limit, got {other:?}"),
        }
        assert_eq!(classify(seq).verdict, Verdict::Singular);
    }

    #[test]
    fn passes_through_is_exact() {
        let rec = descent(0, 10_000).unwrap();
        // A point just off the path is rejected.
        let off = Point::new(qrat(1, 1_000_000), QuadScalar::from_rational(sigma(0)));
        assert!(!orbit_passes_through(&rec.orbit, &off));
        // Every collision point lies on the path.
        for s in &rec.orbit.states {
            assert!(orbit_passes_through(&rec.orbit, &s.pos));
        }
    }
}
