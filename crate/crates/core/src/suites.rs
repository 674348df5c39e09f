//! Named verification suites behind the command-line `verify` operation.
//!
//! Each suite re-runs one cluster of claims end to end and reports one
//! labelled pass/fail line per check. Wherever a claim admits more than
//! one computation route (closed form, exact simulation, unfolding
//! arithmetic), the suite runs the routes independently and compares,
//! rather than trusting any single implementation. The `seed` extends
//! fixed case grids with reproducible random samples.

use crate::admissibility::{
    admissible_grid, dyadic_hit_search, grid_report, prop31_violation_witness, prop32_check,
};
use crate::analysis::{
    base_sequence, base_sequence_to_return, build_nontrivial_path, build_sequence, classify,
    detect_eventually_constant, hausdorff_distance_squared_max, verify_escape_distance,
    LimitResolution, Verdict,
};
use crate::flow::{trace_orbit, Direction};
use crate::geometry::{
    parse_word, point_on_segment, pt, rect_4x1, sigma, unit_square, ElusiveAddress, Point,
};
use crate::scalar::{pow2, qrat, rat, QuadScalar, Rational};
use crate::sqrt2_family::{
    descent, descent_gap, first_base_hit, orbit_passes_through, singular_sequence,
    singular_start_x, verify_descent_recurrence,
};
use crate::unfolding::{
    classify_rect_exit, first_hit_at_height, first_hit_in_windows, rect_exit_oracle,
    rect_gap_windows, square_exit_oracle, unfold, TopSegment,
};
use num::integer::gcd;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// One labelled check inside a suite run.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub pass: bool,
    /// Failure context; empty when the check passed.
    pub detail: String,
}

/// The outcome of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<CheckLine>,
}

impl SuiteReport {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, pass: bool, detail: impl Into<String>) {
        let detail = if pass { String::new() } else { detail.into() };
        self.checks.push(CheckLine {
            label: label.into(),
            pass,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// The named suites accepted by the `verify` operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteId {
    Prop31,
    Prop32,
    Thm33,
    Lemma35,
    Lemma36,
    Thm37,
    Lemma43,
    Lemma44,
    Prop46,
    Thm48,
    Thm49,
    Section5,
}

impl SuiteId {
    pub const ALL: [SuiteId; 12] = [
        SuiteId::Prop31,
        SuiteId::Prop32,
        SuiteId::Thm33,
        SuiteId::Lemma35,
        SuiteId::Lemma36,
        SuiteId::Thm37,
        SuiteId::Lemma43,
        SuiteId::Lemma44,
        SuiteId::Prop46,
        SuiteId::Thm48,
        SuiteId::Thm49,
        SuiteId::Section5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::Prop31 => "prop31",
            SuiteId::Prop32 => "prop32",
            SuiteId::Thm33 => "thm33",
            SuiteId::Lemma35 => "lemma35",
            SuiteId::Lemma36 => "lemma36",
            SuiteId::Thm37 => "thm37",
            SuiteId::Lemma43 => "lemma43",
            SuiteId::Lemma44 => "lemma44",
            SuiteId::Prop46 => "prop46",
            SuiteId::Thm48 => "thm48",
            SuiteId::Thm49 => "thm49",
            SuiteId::Section5 => "section5",
        }
    }

    pub fn parse(s: &str) -> Option<SuiteId> {
        SuiteId::ALL.iter().copied().find(|id| id.name() == s)
    }
}

/// Runs one suite with the given random seed.
pub fn run_suite(id: SuiteId, seed: u64) -> SuiteReport {
    match id {
        SuiteId::Prop31 => suite_prop31(seed),
        SuiteId::Prop32 => suite_prop32(seed),
        SuiteId::Thm33 => suite_thm33(),
        SuiteId::Lemma35 => suite_lemma35(),
        SuiteId::Lemma36 => suite_lemma36(),
        SuiteId::Thm37 => suite_thm37(),
        SuiteId::Lemma43 => suite_lemma43(seed),
        SuiteId::Lemma44 => suite_lemma44(seed),
        SuiteId::Prop46 => suite_prop46(),
        SuiteId::Thm48 => suite_thm48(),
        SuiteId::Thm49 => suite_thm49(),
        SuiteId::Section5 => suite_section5(),
    }
}

/// Runs every suite in order.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    SuiteId::ALL.iter().map(|id| run_suite(*id, seed)).collect()
}

fn updir(sign: i8, slope: QuadScalar) -> Direction {
    if sign > 0 {
        Direction::up_right(slope)
    } else {
        Direction::up_left(slope)
    }
}

/// Random reduced fraction `t/h` with odd `h` in `[3, 2*half_bound+1]`.
fn random_odd_fraction(rng: &mut ChaCha8Rng, half_bound: i64) -> (i64, i64) {
    loop {
        let h = 2 * rng.random_range(1..=half_bound) + 1;
        let t = rng.random_range(1..h);
        if gcd(t, h) == 1 {
            return (t, h);
        }
    }
}

// Slopes violating the odd-power structural condition: a witness line
// through a dyadic point must exist and the bounded scan must find one.
fn suite_prop31(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("prop31");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut constructed = 0usize;
    let mut witness_found = 0usize;
    let mut scan_found = 0usize;
    let mut witness_on_line = 0usize;
    let mut first_fail = String::new();
    while constructed < 20 {
        let (t, h) = random_odd_fraction(&mut rng, 4);
        let p = rng.random_range(1..=3i64);
        let q = rng.random_range(1..=3i64);
        let r = rng.random_range(0..=2u32);
        let s = rng.random_range(0..=2u32);
        let denom = p * h - t * (1i64 << r);
        if denom <= 0 {
            continue;
        }
        constructed += 1;
        let x0 = rat(t, h);
        let m = rat(q * h * (1i64 << r), denom * (1i64 << s));
        let m_quad = QuadScalar::from_rational(m.clone());
        match prop31_violation_witness(&x0, &m_quad, 12) {
            Ok(Some(w)) => {
                witness_found += 1;
                let pt = w.point();
                let lhs = pt.y.clone();
                let rhs = m_quad.clone() * (pt.x.clone() - QuadScalar::from_rational(x0.clone()));
                if lhs == rhs {
                    witness_on_line += 1;
                } else if first_fail.is_empty() {
                    first_fail = format!("witness for x0={x0}, m={m} is off the line");
                }
            }
            _ => {
                if first_fail.is_empty() {
                    first_fail = format!("no witness for x0={x0}, m={m}");
                }
            }
        }
        if dyadic_hit_search(&x0, &m, 12, 12).is_some() {
            scan_found += 1;
        } else if first_fail.is_empty() {
            first_fail = format!("scan missed the dyadic point for x0={x0}, m={m}");
        }
    }
    report.check(
        format!("witness search finds all {constructed} constructed violating slopes"),
        witness_found == constructed,
        &first_fail,
    );
    report.check(
        format!("every found witness lies on its line ({witness_on_line}/{witness_found})"),
        witness_on_line == witness_found,
        &first_fail,
    );
    report.check(
        format!("independent dyadic scan confirms all {constructed} violations"),
        scan_found == constructed,
        &first_fail,
    );

    let mut clean = 0usize;
    let mut admissible_total = 0usize;
    let mut fail = String::new();
    for _ in 0..10 {
        let (t, h) = random_odd_fraction(&mut rng, 5);
        let x0 = rat(t, h);
        let gamma = rng.random_range(0..=3u32);
        let d = 2 * rng.random_range(0..=3i64) + 1;
        let m = rat(1i64 << gamma, d);
        if !prop32_check(&x0, &m) {
            continue;
        }
        admissible_total += 1;
        let no_witness = matches!(
            prop31_violation_witness(&x0, &QuadScalar::from_rational(m.clone()), 12),
            Ok(None)
        );
        let no_hit = dyadic_hit_search(&x0, &m, 12, 12).is_none();
        if no_witness && no_hit {
            clean += 1;
        } else if fail.is_empty() {
            fail = format!("x0={x0}, m={m}: witness-free={no_witness}, hit-free={no_hit}");
        }
    }
    report.check(
        format!("admissible samples produce neither witness nor dyadic hit ({clean}/{admissible_total})"),
        clean == admissible_total && admissible_total > 0,
        &fail,
    );
    report
}

// The structural odd-power condition itself, on fixed and random cases.
fn suite_prop32(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("prop32");
    let fixed: [(Rational, Rational, bool); 10] = [
        (rat(1, 3), rat(4, 1), true),
        (rat(5, 9), rat(4, 7), true),
        (rat(3, 7), rat(2, 3), true),
        (rat(7, 9), rat(8, 9), true),
        (rat(1, 3), rat(1, 6), false),
        (rat(1, 2), rat(4, 1), false),
        (rat(1, 6), rat(2, 1), false),
        (rat(1, 3), rat(3, 5), false),
        (rat(1, 3), rat(0, 1), false),
        (rat(5, 9), rat(6, 7), false),
    ];
    let mut ok = 0;
    let mut fail = String::new();
    for (x0, m, expect) in &fixed {
        if prop32_check(x0, m) == *expect {
            ok += 1;
        } else if fail.is_empty() {
            fail = format!("x0={x0}, m={m}: expected {expect}");
        }
    }
    report.check(
        format!("fixed cases classify correctly ({ok}/{})", fixed.len()),
        ok == fixed.len(),
        &fail,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut good = 0usize;
    let mut bad_numer = 0usize;
    let mut bad_denom = 0usize;
    let rounds = 20;
    for _ in 0..rounds {
        let (t, h) = random_odd_fraction(&mut rng, 8);
        let x0 = rat(t, h);
        let gamma = rng.random_range(0..=4u32);
        let d = 2 * rng.random_range(0..=4i64) + 1;
        if prop32_check(&x0, &rat(1i64 << gamma, d)) {
            good += 1;
        }
        // Keep the spoiling factors from cancelling on reduction.
        let d_coprime = if d % 3 == 0 { d + 2 } else { d };
        if !prop32_check(&x0, &rat(3 * (1i64 << gamma), d_coprime)) {
            bad_numer += 1;
        }
        if !prop32_check(&x0, &rat(1, 2 * d)) {
            bad_denom += 1;
        }
    }
    report.check(
        format!("random admissible slopes accepted ({good}/{rounds})"),
        good == rounds,
        "",
    );
    report.check(
        format!("odd numerator factor rejected ({bad_numer}/{rounds})"),
        bad_numer == rounds,
        "",
    );
    report.check(
        format!("even denominator factor rejected ({bad_denom}/{rounds})"),
        bad_denom == rounds,
        "",
    );
    report
}

// The full structurally admissible grid: no vertex hits, periodic at every
// level, no dyadic point within the scan bound.
fn suite_thm33() -> SuiteReport {
    let mut report = SuiteReport::new("thm33");
    let (xs, ms) = admissible_grid(2, 3, 2, 3);
    report.check(
        format!("grid spans {} base points by {} slopes", xs.len(), ms.len()),
        xs.len() == 80 && ms.len() == 28,
        format!("got {} x {}", xs.len(), ms.len()),
    );
    match grid_report(&xs, &ms, 3, 100_000, 12) {
        Ok(cases) => {
            report.check(
                format!("all {} lines verified on levels 0..=3", cases.len()),
                cases.len() == xs.len() * ms.len(),
                format!("only {} cases returned", cases.len()),
            );
            let complete = cases
                .iter()
                .all(|c| c.periods.len() == 4 && c.periods.iter().all(|p| *p > 0));
            report.check(
                "every orbit closes up with a positive period at every level",
                complete,
                "a grid case is missing a period",
            );
        }
        Err(e) => {
            report.check("all grid lines verified on levels 0..=3", false, e.to_string());
        }
    }
    report
}

// Eventually constant collision sets for slope 2^{-n} from the base
// midpoint: constant from level 0 on.
fn suite_lemma35() -> SuiteReport {
    let mut report = SuiteReport::new("lemma35");
    for n in 2..=4u32 {
        for sign in [1i8, -1] {
            let slope = QuadScalar::from_rational(pow2(-(n as i32)));
            let seq = match base_sequence(qrat(1, 2), updir(sign, slope), 4, 3_000) {
                Ok(seq) => seq,
                Err(e) => {
                    report.check(
                        format!("slope 2^-{n}, sign {sign:+} sequence builds"),
                        false,
                        e.to_string(),
                    );
                    continue;
                }
            };
            let verdict = detect_eventually_constant(&seq);
            report.check(
                format!("slope 2^-{n}, sign {sign:+}: collision sets constant from level 0"),
                matches!(verdict, Ok(Some(0))),
                format!("got {verdict:?}"),
            );
        }
    }
    report
}

// The mechanism behind the constant sets: the slope 2^{-n} orbit from the
// base midpoint climbs to the top midpoint, shown both by direct tracing
// and by unfolding the square climb to a straight segment.
fn suite_lemma36() -> SuiteReport {
    let mut report = SuiteReport::new("lemma36");
    let table = crate::geometry::t_prefractal(0);
    let square = unit_square();
    for n in 2..=4u32 {
        let slope = QuadScalar::from_rational(pow2(-(n as i32)));
        for sign in [1i8, -1] {
            match trace_orbit(
                &table,
                pt(1, 2, 0, 1),
                updir(sign, slope.clone()),
                1_000,
            ) {
                Ok(orbit) => {
                    let top = QuadScalar::from_rational(sigma(0));
                    let hit = first_hit_at_height(&orbit, &top)
                        .map(|(_, p, _)| p == pt(1, 2, 3, 2))
                        .unwrap_or(false);
                    report.check(
                        format!("slope 2^-{n}, sign {sign:+}: first top hit is the top midpoint"),
                        hit,
                        "top reached elsewhere or not at all",
                    );
                }
                Err(e) => report.check(
                    format!("slope 2^-{n}, sign {sign:+} traces"),
                    false,
                    e.to_string(),
                ),
            }
        }
        // Unfolded square climb: straight to (2^n + 1/2, 1) in 2^n + 1
        // collisions, which folds back to the top midpoint.
        let steps = (1usize << n) + 1;
        match trace_orbit(&square, pt(1, 2, 0, 1), updir(1, slope), steps + 1) {
            Ok(orbit) => match unfold(&orbit, &QuadScalar::one()) {
                Ok(pts) => {
                    let expect = Point::new(
                        QuadScalar::from_int(1 << n) + qrat(1, 2),
                        QuadScalar::one(),
                    );
                    report.check(
                        format!("unfolded square climb at slope 2^-{n} ends at (2^{n} + 1/2, 1)"),
                        pts.len() > steps && pts[steps] == expect,
                        format!("unfolded endpoint {:?}", pts.get(steps)),
                    );
                }
                Err(e) => report.check(
                    format!("square climb at slope 2^-{n} unfolds"),
                    false,
                    e.to_string(),
                ),
            },
            Err(e) => report.check(
                format!("square climb at slope 2^-{n} traces"),
                false,
                e.to_string(),
            ),
        }
    }
    report
}

// Eventually constant from level 1, not 0: the overhang midpoint launch.
fn suite_thm37() -> SuiteReport {
    let mut report = SuiteReport::new("thm37");
    match build_sequence(pt(5, 4, 1, 1), Direction::up_right(qrat(1, 4)), 3, 1_000) {
        Ok(seq) => {
            let o0 = &seq.levels[0].orbit;
            report.check(
                "level-0 orbit is a four-collision cycle grazing (-1/4, 3/2)",
                o0.collisions() == 4
                    && seq.levels[0].tau == Some(2)
                    && o0.states[2].pos == pt(-1, 4, 3, 2),
                format!("period {}, tau {:?}", o0.collisions(), seq.levels[0].tau),
            );
            let verdict = detect_eventually_constant(&seq);
            report.check(
                "collision sets constant from level 1 exactly",
                matches!(verdict, Ok(Some(1))),
                format!("got {verdict:?}"),
            );
        }
        Err(e) => report.check("overhang midpoint sequence builds", false, e.to_string()),
    }
    report
}

fn square_case_matches(
    square: &crate::geometry::Boundary,
    x0: QuadScalar,
    p: u32,
    sign: i8,
) -> Result<(), String> {
    let oracle = square_exit_oracle(&x0, p, sign).map_err(|e| e.to_string())?;
    let orbit = trace_orbit(
        square,
        Point::new(x0, QuadScalar::zero()),
        updir(sign, qrat(1, p as i64)),
        4 * p as usize + 8,
    )
    .map_err(|e| e.to_string())?;
    let (k, point, arrival) =
        first_hit_at_height(&orbit, &QuadScalar::one()).ok_or("orbit never reaches the top")?;
    if k != oracle.step {
        return Err(format!("step {k} vs predicted {}", oracle.step));
    }
    if point != oracle.exit {
        return Err(format!("exit ({}, {}) vs predicted", point.x, point.y));
    }
    if arrival != oracle.arrival {
        return Err("arrival direction differs".into());
    }
    Ok(())
}

// Unit-square top exits: closed form against exact simulation, on the
// fixed grid and on random non-dyadic starts.
fn suite_lemma43(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("lemma43");
    let square = unit_square();
    let mut total = 0usize;
    let mut ok = 0usize;
    let mut fail = String::new();
    for p in (1..=31u32).step_by(2) {
        for (xn, xd) in [(1i64, 3i64), (2, 5), (5, 9), (3, 7), (5, 7)] {
            for sign in [1i8, -1] {
                total += 1;
                match square_case_matches(&square, qrat(xn, xd), p, sign) {
                    Ok(()) => ok += 1,
                    Err(e) => {
                        if fail.is_empty() {
                            fail = format!("p={p}, x0={xn}/{xd}, sign={sign:+}: {e}");
                        }
                    }
                }
            }
        }
    }
    report.check(
        format!("closed form matches simulation on the fixed grid ({ok}/{total})"),
        ok == total,
        &fail,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let rounds = 40;
    let mut rok = 0usize;
    let mut rfail = String::new();
    for _ in 0..rounds {
        let (t, h) = random_odd_fraction(&mut rng, 99);
        let p = 2 * rng.random_range(0..=15u32) + 1;
        let sign = if rng.random_range(0..2) == 0 { 1i8 } else { -1 };
        match square_case_matches(&square, qrat(t, h), p, sign) {
            Ok(()) => rok += 1,
            Err(e) => {
                if rfail.is_empty() {
                    rfail = format!("p={p}, x0={t}/{h}, sign={sign:+}: {e}");
                }
            }
        }
    }
    report.check(
        format!("closed form matches simulation on random starts ({rok}/{rounds})"),
        rok == rounds,
        &rfail,
    );
    report
}

/// Third route for the rectangle exit: fold the straight line mod 8 at
/// each integer height crossing. Returns segment, arrival `sx`, and the
/// crossing index, or an error naming what went wrong.
fn rect_exit_by_folding(x0: &Rational, p: i64, sign: i8) -> Result<(TopSegment, i8, usize), String> {
    let eight = rat(8, 1);
    let four = rat(4, 1);
    for k in 1..=(4 * p as usize + 4) {
        let xk = x0 + rat(sign as i64 * p * k as i64, 1);
        let t = &xk - (&xk / &eight).floor() * &eight;
        let (xf, deriv) = if t <= four {
            (t.clone(), 1i8)
        } else {
            (&eight - &t, -1i8)
        };
        if k % 2 == 1 {
            if xf > rat(0, 1) && xf < rat(1, 1) {
                return Ok((TopSegment::Left, sign * deriv, k));
            }
            if xf > rat(3, 1) && xf < rat(4, 1) {
                return Ok((TopSegment::Right, sign * deriv, k));
            }
            if xf == rat(0, 1) || xf == rat(1, 1) || xf == rat(3, 1) || xf == rat(4, 1) {
                return Err(format!("vertex fold at crossing {k}"));
            }
        } else if xf > rat(1, 1) && xf < rat(3, 1) {
            return Err(format!("bottom opening crossed at {k} before any exit"));
        }
    }
    Err("no exit within the fold bound".into())
}

fn rect_case_matches(
    rect: &crate::geometry::Boundary,
    xn: i64,
    xd: i64,
    p: u32,
    sign: i8,
) -> Result<(), String> {
    let x0 = qrat(xn, xd);
    let oracle = rect_exit_oracle(&x0, p, sign).map_err(|e| e.to_string())?;
    let (fold_seg, fold_sx, k) =
        rect_exit_by_folding(&rat(xn, xd), p as i64, sign)?;
    if fold_seg != oracle.segment || fold_sx != oracle.arrival.sx() {
        return Err(format!(
            "fold route gives {fold_seg:?}, sx {fold_sx:+}; closed form {:?}, sx {:+}",
            oracle.segment,
            oracle.arrival.sx()
        ));
    }
    if k.div_ceil(2) > 2 {
        return Err(format!("exit only at top arrival {}", k.div_ceil(2)));
    }
    let orbit = trace_orbit(
        rect,
        Point::new(x0, QuadScalar::zero()),
        updir(sign, qrat(1, p as i64)),
        16 * p as usize + 16,
    )
    .map_err(|e| e.to_string())?;
    let windows = rect_gap_windows();
    let (hit, point, arrival) = first_hit_in_windows(&orbit, &QuadScalar::one(), &windows)
        .ok_or("orbit never reaches a top corner segment")?;
    if classify_rect_exit(&point) != Some(oracle.segment) {
        return Err(format!("simulation exits at ({}, {})", point.x, point.y));
    }
    if arrival != oracle.arrival {
        return Err("simulated arrival direction differs".into());
    }
    for j in 1..hit {
        let q = &orbit.states[j].pos;
        if q.y.is_zero() && q.x > QuadScalar::one() && q.x < QuadScalar::from_int(3) {
            return Err(format!("bottom opening revisited at collision {j}"));
        }
    }
    Ok(())
}

// Rectangle top-corner exits: closed form, exact simulation, and the
// independent mod-8 folding route all agree, and the bottom opening is
// never revisited first.
fn suite_lemma44(seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("lemma44");
    let rect = rect_4x1();
    let mut total = 0usize;
    let mut ok = 0usize;
    let mut fail = String::new();
    for p in (1..=31u32).step_by(2) {
        for (xn, xd) in [(3i64, 2i64), (7, 3)] {
            for sign in [1i8, -1] {
                total += 1;
                match rect_case_matches(&rect, xn, xd, p, sign) {
                    Ok(()) => ok += 1,
                    Err(e) => {
                        if fail.is_empty() {
                            fail = format!("p={p}, x0={xn}/{xd}, sign={sign:+}: {e}");
                        }
                    }
                }
            }
        }
    }
    report.check(
        format!("three routes agree on the fixed grid ({ok}/{total})"),
        ok == total,
        &fail,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x94d0_49bb_1331_11eb);
    let rounds = 40;
    let mut rok = 0usize;
    let mut rfail = String::new();
    for _ in 0..rounds {
        let (t, h) = random_odd_fraction(&mut rng, 30);
        let window = rng.random_range(1..=2i64);
        // x0 = window + t/h lies strictly inside (window, window + 1).
        let (xn, xd) = (window * h + t, h);
        let p = 2 * rng.random_range(0..=15u32) + 1;
        let sign = if rng.random_range(0..2) == 0 { 1i8 } else { -1 };
        match rect_case_matches(&rect, xn, xd, p, sign) {
            Ok(()) => rok += 1,
            Err(e) => {
                if rfail.is_empty() {
                    rfail = format!("p={p}, x0={xn}/{xd}, sign={sign:+}: {e}");
                }
            }
        }
    }
    report.check(
        format!("three routes agree on random starts ({rok}/{rounds})"),
        rok == rounds,
        &rfail,
    );
    report
}

// The escape-to-boundary distance identity: the distance from the first
// escape to its relative origin equals the binary truncation error of the
// start, with the escape strictly before the first return.
fn suite_prop46() -> SuiteReport {
    let mut report = SuiteReport::new("prop46");
    let mut levels_checked = 0usize;
    let mut order_ok = 0usize;
    let mut identity_ok = 0usize;
    let mut fail = String::new();
    for (xn, xd) in [(1i64, 3i64), (2, 5), (5, 9)] {
        for p in [1i64, 3, 5] {
            for sign in [1i8, -1] {
                let seq = match base_sequence_to_return(
                    qrat(xn, xd),
                    updir(sign, qrat(1, p)),
                    6,
                    20_000,
                ) {
                    Ok(seq) => seq,
                    Err(e) => {
                        if fail.is_empty() {
                            fail = format!("x0={xn}/{xd}, p={p}, sign={sign:+}: {e}");
                        }
                        continue;
                    }
                };
                for n in 0..seq.levels.len() {
                    levels_checked += 1;
                    let rec = &seq.levels[n];
                    match (rec.tau, rec.upsilon) {
                        (Some(tau), Some(upsilon)) if tau < upsilon => order_ok += 1,
                        other => {
                            if fail.is_empty() {
                                fail = format!(
                                    "x0={xn}/{xd}, p={p}, sign={sign:+}, level {n}: (tau, upsilon) = {other:?}"
                                );
                            }
                            continue;
                        }
                    }
                    match verify_escape_distance(&seq, n) {
                        Ok(true) => identity_ok += 1,
                        other => {
                            if fail.is_empty() {
                                fail = format!(
                                    "x0={xn}/{xd}, p={p}, sign={sign:+}, level {n}: {other:?}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    report.check(
        format!("first escape precedes first return on all {levels_checked} level traces"),
        order_ok == levels_checked && levels_checked == 18 * 7,
        &fail,
    );
    report.check(
        format!("exact distance identity holds on all {levels_checked} level traces"),
        identity_ok == levels_checked,
        &fail,
    );
    report
}

fn expected_limit(sign: i8) -> (ElusiveAddress, Point) {
    if sign > 0 {
        (
            ElusiveAddress::new(vec![], parse_word("LLRR").unwrap()),
            pt(-2, 5, 3, 1),
        )
    } else {
        (
            ElusiveAddress::new(vec![], parse_word("RLLR").unwrap()),
            pt(4, 5, 3, 1),
        )
    }
}

// Nontrivial paths from (1/3, slope 1/3): exact periodic limit addresses,
// distinct for the two launch signs.
fn suite_thm48() -> SuiteReport {
    let mut report = SuiteReport::new("thm48");
    let mut limits = Vec::new();
    for sign in [1i8, -1] {
        let seq = match base_sequence(qrat(1, 3), updir(sign, qrat(1, 3)), 6, 300) {
            Ok(seq) => seq,
            Err(e) => {
                report.check(format!("sign {sign:+} sequence builds"), false, e.to_string());
                continue;
            }
        };
        let path = match build_nontrivial_path(&seq) {
            Ok(path) => path,
            Err(e) => {
                report.check(format!("sign {sign:+} path assembles"), false, e.to_string());
                continue;
            }
        };
        let heights_increase = path
            .escape_points
            .windows(2)
            .all(|w| w[0].y < w[1].y);
        report.check(
            format!("sign {sign:+}: escape heights strictly increase over 7 levels"),
            heights_increase && path.escape_points.len() == 7,
            format!("{} escape points", path.escape_points.len()),
        );
        // The level-n truncation ends on a wall that is open one level
        // deeper, so its last point sits mid-segment on the successor:
        // prefix as a plane path, not as a point list.
        let prefixes = path.level_polylines.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            let t = a.len() - 1;
            t >= 1
                && b.len() > t
                && a[..t] == b[..t]
                && point_on_segment(&b[t - 1], &b[t], &a[t])
        });
        report.check(
            format!("sign {sign:+}: each truncation is a prefix of the next as a path"),
            prefixes,
            "a truncation diverges from its successor",
        );
        let (want_addr, want_pt) = expected_limit(sign);
        match &path.limit {
            LimitResolution::Exact { address, point } => {
                report.check(
                    format!("sign {sign:+}: exact limit with periodic address"),
                    *address == want_addr && *point == want_pt,
                    format!("limit ({}, {})", point.x, point.y),
                );
                limits.push(point.clone());
            }
            other => report.check(
                format!("sign {sign:+}: exact limit with periodic address"),
                false,
                format!("{other:?}"),
            ),
        }
    }
    report.check(
        "the two launch signs reach distinct elusive points",
        limits.len() == 2 && limits[0] != limits[1],
        "limits coincide or are missing",
    );
    report
}

// First-return convergence and truncation distances for the same paths.
fn suite_thm49() -> SuiteReport {
    let mut report = SuiteReport::new("thm49");
    for sign in [1i8, -1] {
        match base_sequence_to_return(qrat(1, 3), updir(sign, qrat(1, 3)), 6, 20_000) {
            Ok(seq) => {
                let mut ok = 0usize;
                let mut fail = String::new();
                for rec in &seq.levels {
                    let bound = QuadScalar::from_rational(pow2(1 - rec.level as i32));
                    match rec.upsilon {
                        Some(upsilon) => {
                            let x = &rec.orbit.states[upsilon].pos.x;
                            if (x.clone() - qrat(1, 3)).abs() < bound {
                                ok += 1;
                            } else if fail.is_empty() {
                                fail = format!("level {}: return at {x}", rec.level);
                            }
                        }
                        None => {
                            if fail.is_empty() {
                                fail = format!("level {} never returns", rec.level);
                            }
                        }
                    }
                }
                report.check(
                    format!("sign {sign:+}: first returns land within 2^(1-n) of the start (7 levels)"),
                    ok == seq.levels.len(),
                    &fail,
                );
            }
            Err(e) => report.check(format!("sign {sign:+} returns traced"), false, e.to_string()),
        }

        match base_sequence(qrat(1, 3), updir(sign, qrat(1, 3)), 6, 300)
            .map_err(|e| e.to_string())
            .and_then(|seq| build_nontrivial_path(&seq).map_err(|e| e.to_string()))
        {
            Ok(path) => {
                let d2: Vec<QuadScalar> = path
                    .level_polylines
                    .windows(2)
                    .map(|w| hausdorff_distance_squared_max(&w[0], &w[1]))
                    .collect();
                let decreasing = d2.windows(2).all(|w| w[0] > w[1]);
                report.check(
                    format!(
                        "sign {sign:+}: successive truncation distances strictly decrease ({} gaps)",
                        d2.len()
                    ),
                    decreasing && d2.len() == 6,
                    format!(
                        "distances {:?}",
                        d2.iter()
                            .map(|d| d.to_string())
                            .collect::<Vec<_>>()
                    ),
                );
            }
            Err(e) => report.check(
                format!("sign {sign:+} truncation distances computed"),
                false,
                e,
            ),
        }
    }
    report
}

// The irrational-slope family: exact descent landings, their closed-form
// recurrence, and the all-singular launch from the limit abscissa.
fn suite_section5() -> SuiteReport {
    let mut report = SuiteReport::new("section5");
    match descent(0, 20_000) {
        Ok(rec) => report.check(
            "level-0 descent lands at 51*sqrt(2)/2 - 36",
            rec.base_hit == first_base_hit(),
            format!("landed at {}", rec.base_hit),
        ),
        Err(e) => report.check("level-0 descent completes", false, e.to_string()),
    }
    match descent(1, 20_000) {
        Ok(rec) => {
            report.check(
                "level-1 descent lands one gap further",
                rec.base_hit == first_base_hit() + descent_gap(),
                format!("landed at {}", rec.base_hit),
            );
            let mid = Point::new(
                -first_base_hit().scale_pow2(-1),
                QuadScalar::from_rational(sigma(0)),
            );
            report.check(
                "level-1 descent passes through the reflected level-0 landing",
                orbit_passes_through(&rec.orbit, &mid),
                format!("no crossing at ({}, {})", mid.x, mid.y),
            );
        }
        Err(e) => report.check("level-1 descent completes", false, e.to_string()),
    }
    match verify_descent_recurrence(5, 60_000) {
        Ok(checks) => report.check(
            "landings 0..=5 match the closed form exactly",
            checks.len() == 6,
            "incomplete recurrence table",
        ),
        Err(e) => report.check(
            "landings 0..=5 match the closed form exactly",
            false,
            e.to_string(),
        ),
    }
    match singular_sequence(4, 40_000) {
        Ok(levels) => {
            report.check(
                "levels 0..=4 from the limit abscissa are all singular after escaping",
                true,
                "",
            );
            let want = ElusiveAddress::new(vec![], parse_word("LR").unwrap());
            match &levels.path.limit {
                LimitResolution::Exact { address, point } => report.check(
                    "the singular path has exact limit (0, 3) with alternating address",
                    *address == want && *point == pt(0, 1, 3, 1),
                    format!("limit ({}, {})", point.x, point.y),
                ),
                other => report.check(
                    "the singular path has exact limit (0, 3) with alternating address",
                    false,
                    format!("{other:?}"),
                ),
            }
            let class = classify(&levels.sequence);
            report.check(
                "the sequence classifies as singular",
                class.verdict == Verdict::Singular,
                format!("{:?}", class.verdict),
            );
        }
        Err(e) => report.check(
            "levels 0..=4 from the limit abscissa are all singular after escaping",
            false,
            e.to_string(),
        ),
    }
    report.check(
        "the singular launch abscissa is the limit of the descent landings",
        singular_start_x() == first_base_hit() + descent_gap().scale_pow2(1),
        "constants drifted",
    );
    report
}
