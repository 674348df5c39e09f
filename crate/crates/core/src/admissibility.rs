//! Number-theoretic admissibility of initial conditions: which basepoint
//! and slope pairs launch orbits that can never meet a corner.
//!
//! Every prefractal vertex is a dyadic point (both coordinates have
//! power-of-two denominators), so a line that avoids all dyadic points
//! avoids every corner at every level. Three views of that criterion live
//! here:
//!
//! * a structural sufficient condition on `(x0, m)`: basepoint `t/h^k`
//!   with `h` odd and slope `2^gamma / odd`;
//! * a bounded falsification search for the excluded slopes
//!   `m = q 2^(r-s) h^k / (p h^k - t 2^r)`, which are exactly the slopes
//!   whose line through `(x0, 0)` passes through `(p/2^r, q/2^s)`;
//! * a brute-force scan over the dyadic lattice inside the table's
//!   bounding box, used as an independent oracle against the other two.
//!
//! The grid verifier then closes the loop dynamically: structurally
//! admissible pairs must produce corner-free periodic orbits on every
//! computed level.

use num::{BigInt, One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::flow::{trace_orbit, Direction, Termination};
use crate::geometry::{t_prefractal, Point};
use crate::scalar::{pow2, rat, QuadScalar, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdmissibilityError {
    #[error("{0} does not have the form t/h^k with h odd >= 3, gcd(t, h) = 1")]
    NotOddPowerForm(String),
    #[error("level {level} orbit from ({x0}, slope {m}) hit a vertex at collision {collision}: {corner}")]
    VertexHit {
        level: u32,
        x0: String,
        m: String,
        collision: usize,
        corner: String,
    },
    #[error("level {level} orbit from ({x0}, slope {m}) did not close up within {cap} collisions")]
    NotPeriodic {
        level: u32,
        x0: String,
        m: String,
        cap: usize,
    },
    #[error("grid pair ({x0}, slope {m}) fails the structural admissibility condition")]
    NotStructurallyAdmissible { x0: String, m: String },
    #[error("line from ({x0}, slope {m}) passes through the dyadic point {point}")]
    DyadicPointFound { x0: String, m: String, point: String },
}

fn two() -> BigInt {
    BigInt::from(2)
}

/// Splits `n > 0` as `odd * 2^e`.
fn split_pow2(mut n: BigInt) -> (BigInt, u32) {
    debug_assert!(n.is_positive());
    let mut e = 0;
    while (&n % two()).is_zero() {
        n /= two();
        e += 1;
    }
    (n, e)
}

/// Writes `x` in `(0,1)` as `t / h^k` with `h` odd `>= 3`, `gcd(t, h) = 1`,
/// `k >= 1`. The decomposition used throughout: `h` is the full odd
/// denominator and `k = 1` (any `t/h^k` in lowest terms is also `t/H` with
/// `H = h^k` odd).
fn odd_denominator(x: &Rational) -> Option<BigInt> {
    if x <= &rat(0, 1) || x >= &rat(1, 1) {
        return None;
    }
    let den = x.denom().clone();
    let (odd, e) = split_pow2(den);
    if e != 0 || odd < BigInt::from(3) {
        return None;
    }
    Some(odd)
}

/// Structural sufficient condition for corner-free lines: `x0 = t/h^k`
/// (odd denominator `>= 3`, in lowest terms) and `m = 2^gamma / (2a+1)^b`
/// (numerator a power of two, denominator odd). Such a line contains no
/// dyadic point, hence no prefractal vertex.
pub fn prop32_check(x0: &Rational, m: &Rational) -> bool {
    if odd_denominator(x0).is_none() {
        return false;
    }
    if m <= &rat(0, 1) {
        return false;
    }
    let (num_odd, _) = split_pow2(m.numer().clone());
    let (_, den_pow) = split_pow2(m.denom().clone());
    num_odd.is_one() && den_pow == 0
}

/// A dyadic point `(p/2^r, q/2^s)` exactly on the line
/// `y = m (x - x0)`, found by inverting the slope formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DyadicWitness {
    pub p: i64,
    pub q: i64,
    pub r: u32,
    pub s: u32,
}

impl DyadicWitness {
    pub fn point(&self) -> Point {
        Point::from_rationals(
            rat(self.p, 1) * pow2(-(self.r as i32)),
            rat(self.q, 1) * pow2(-(self.s as i32)),
        )
    }
}

/// Searches `p, q` in `[-bound, bound]`, `r, s` in `[0, bound]` for a
/// dyadic point on the line through `(x0, 0)` with slope `m`, i.e. an
/// exact solution of `m = q 2^(r-s) h^k / (p h^k - t 2^r)`. `None`
/// certifies the exclusion condition within the bound; irrational slopes
/// satisfy it unconditionally, so the search only applies to rational
/// `m`. Fails if `x0` is not of the odd-power form.
pub fn prop31_violation_witness(
    x0: &Rational,
    m: &QuadScalar,
    bound: u32,
) -> Result<Option<DyadicWitness>, AdmissibilityError> {
    let h = odd_denominator(x0)
        .ok_or_else(|| AdmissibilityError::NotOddPowerForm(x0.to_string()))?;
    let t = x0.numer().clone();
    let Some(m) = m.as_rational() else {
        return Ok(None);
    };
    let b = bound as i64;
    for r in 0..=bound {
        let t2r = &t * two().pow(r);
        for p in -b..=b {
            let denom = BigInt::from(p) * &h - &t2r;
            if denom.is_zero() {
                continue;
            }
            for s in 0..=bound {
                for q in -b..=b {
                    let numer = BigInt::from(q) * &h * two().pow(r);
                    // m == numer / (denom * 2^s), compared cross-multiplied.
                    let cand = Rational::new(numer.clone(), &denom * two().pow(s));
                    if &cand == m {
                        return Ok(Some(DyadicWitness {
                            p,
                            q,
                            r,
                            s,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Brute-force oracle: the first dyadic point `(a/2^c, b/2^d)`,
/// `0 <= c <= c_max`, `0 <= d <= d_max`, inside the bounding box
/// `[-1, 2] x [0, 3]`, lying exactly on `y = m (x - x0)`. Independent of
/// the witness search. Works in machine integers when the inputs fit
/// (they always do for the parameter grids used here).
pub fn dyadic_hit_search(
    x0: &Rational,
    m: &Rational,
    c_max: u32,
    d_max: u32,
) -> Option<Point> {
    let small = |r: &Rational| -> Option<(i128, i128)> {
        Some((
            i128::try_from(r.numer()).ok()?,
            i128::try_from(r.denom()).ok()?,
        ))
    };
    if let (Some((tn, td)), Some((mn, md))) = (small(x0), small(m)) {
        // Comfortably inside i128 for the products below.
        let bound = 1i128 << 20;
        if tn.abs() <= bound
            && td <= bound
            && mn.abs() <= bound
            && md <= bound
            && c_max <= 20
            && d_max <= 20
        {
            return dyadic_hit_search_fast(tn, td, mn, md, c_max, d_max);
        }
    }
    for c in 0..=c_max {
        let xd = pow2(-(c as i32));
        // x in [-1, 2]: a in [-2^c, 2 * 2^c].
        for a in -(1i64 << c)..=2 * (1i64 << c) {
            let x = rat(a, 1) * &xd;
            let y = m * (&x - x0);
            if y < rat(0, 1) || y > rat(3, 1) {
                continue;
            }
            if (&y * pow2(d_max as i32)).is_integer() {
                return Some(Point::from_rationals(x, y));
            }
        }
    }
    None
}

/// Integer core of [`dyadic_hit_search`]: `y = mn (a td - tn 2^c) /
/// (md td 2^c)` is dyadic with denominator dividing `2^d_max` iff the
/// reduced denominator is a power of two no larger than `2^d_max`.
fn dyadic_hit_search_fast(
    tn: i128,
    td: i128,
    mn: i128,
    md: i128,
    c_max: u32,
    d_max: u32,
) -> Option<Point> {
    for c in 0..=c_max {
        let den = md * td * (1i128 << c);
        for a in -(1i128 << c)..=2 * (1i128 << c) {
            let num = mn * (a * td - tn * (1i128 << c));
            if num < 0 || num > 3 * den {
                continue;
            }
            let g = num::integer::gcd(num, den);
            let dr = den / g;
            if dr & (dr - 1) == 0 && dr <= 1i128 << d_max {
                let x = rat(a as i64, 1) * pow2(-(c as i32));
                let y = Rational::new(BigInt::from(num), BigInt::from(den));
                return Some(Point::from_rationals(x, y));
            }
        }
    }
    None
}

/// One admissible pair verified dynamically on a range of levels.
#[derive(Debug, Clone, Serialize)]
pub struct GridCase {
    pub x0: String,
    pub m: String,
    /// Period of the traced orbit at each level.
    pub periods: Vec<usize>,
    /// First-return footprint (x-coordinate) at each level, exact.
    pub first_footprints: Vec<Option<String>>,
}

/// Simulates the orbit of `(x0, 0)` with slope `m` on `T_0..T_max_level`
/// and demands corner-free periodic termination at every level. The pair
/// should already pass [`prop32_check`]; a vertex hit is a contradiction,
/// not a recoverable outcome.
pub fn thm33_verify(
    x0: &Rational,
    m: &Rational,
    max_level: u32,
    cap: usize,
) -> Result<GridCase, AdmissibilityError> {
    let mut periods = Vec::new();
    let mut footprints = Vec::new();
    for level in 0..=max_level {
        let table = t_prefractal(level);
        let start = Point::from_rationals(x0.clone(), rat(0, 1));
        let dir = Direction::up_right(QuadScalar::from_rational(m.clone()));
        let orbit = trace_orbit(&table, start, dir, cap).expect("valid interior base start");
        if orbit.hits_vertex() {
            let (collision, corner) = match &orbit.termination {
                Termination::Singular { collision, corner } => {
                    (*collision, corner.to_string())
                }
                _ => {
                    let k = orbit
                        .hits
                        .iter()
                        .position(|h| matches!(h, crate::flow::HitKind::ConvexCorner))
                        .expect("hits_vertex implies a corner hit")
                        + 1;
                    (k, orbit.states[k].pos.to_string())
                }
            };
            return Err(AdmissibilityError::VertexHit {
                level,
                x0: x0.to_string(),
                m: m.to_string(),
                collision,
                corner,
            });
        }
        let Termination::Periodic { period } = orbit.termination else {
            return Err(AdmissibilityError::NotPeriodic {
                level,
                x0: x0.to_string(),
                m: m.to_string(),
                cap,
            });
        };
        periods.push(period);
        footprints.push(
            orbit
                .first_return()
                .map(|k| orbit.states[k].pos.x.to_string()),
        );
    }
    Ok(GridCase {
        x0: crate::scalar::format_rational(x0),
        m: crate::scalar::format_rational(m),
        periods,
        first_footprints: footprints,
    })
}

/// The structural admissible grid: basepoints `t/h^k` for `h` in
/// `{3, 5, 7}`, `k <= k_max`, `t` coprime to `h` with `0 < t < h^k`, and
/// slopes `2^gamma / (2a+1)^b` for `gamma <= gamma_max`, `b <= beta_max`,
/// `a <= alpha_max`, deduplicated.
pub fn admissible_grid(
    k_max: u32,
    gamma_max: u32,
    beta_max: u32,
    alpha_max: u32,
) -> (Vec<Rational>, Vec<Rational>) {
    let mut xs: Vec<Rational> = Vec::new();
    for h in [3i64, 5, 7] {
        for k in 1..=k_max {
            let hk = h.pow(k);
            for t in 1..hk {
                if num::integer::gcd(t, h) == 1 {
                    let x = rat(t, hk);
                    if !xs.contains(&x) {
                        xs.push(x);
                    }
                }
            }
        }
    }
    let mut ms: Vec<Rational> = Vec::new();
    for gamma in 0..=gamma_max {
        for alpha in 0..=alpha_max {
            for beta in 0..=beta_max {
                let m = rat(1 << gamma, (2 * alpha as i64 + 1).pow(beta));
                if !ms.contains(&m) {
                    ms.push(m);
                }
            }
        }
    }
    (xs, ms)
}

/// Full admissibility report over a parameter grid, run in parallel:
/// every pair must pass the structural check, the bounded dyadic-point
/// scan must come up empty, and the dynamical verification must succeed.
pub fn grid_report(
    xs: &[Rational],
    ms: &[Rational],
    max_level: u32,
    cap: usize,
    scan_bound: u32,
) -> Result<Vec<GridCase>, AdmissibilityError> {
    let pairs: Vec<(&Rational, &Rational)> = xs
        .iter()
        .flat_map(|x| ms.iter().map(move |m| (x, m)))
        .collect();
    pairs
        .par_iter()
        .map(|(x0, m)| {
            if !prop32_check(x0, m) {
                return Err(AdmissibilityError::NotStructurallyAdmissible {
                    x0: x0.to_string(),
                    m: m.to_string(),
                });
            }
            if let Some(p) = dyadic_hit_search(x0, m, scan_bound, scan_bound) {
                return Err(AdmissibilityError::DyadicPointFound {
                    x0: x0.to_string(),
                    m: m.to_string(),
                    point: format!("({}, {})", p.x, p.y),
                });
            }
            thm33_verify(x0, m, max_level, cap)
        })
        .collect()
}
