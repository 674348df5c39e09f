//! Acceptance gate: one test per shipped guarantee, each printing a single
//! pass/fail line. Heavier suites are shared with the command-line `verify`
//! operation so the gate and the tool cannot drift apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfractal_core::analysis::{base_sequence, build_nontrivial_path};
use tfractal_core::flow::{trace_orbit, Direction, Orbit};
use tfractal_core::geometry::{
    point_to_address, pt, sigma, t_prefractal, AffineContraction, Branch, Point,
};
use tfractal_core::scalar::{pow2, qrat, rat, QuadScalar};
use tfractal_core::suites::{run_suite, SuiteId};
use tfractal_core::unfolding::unfold_is_straight;

const SEED: u64 = 20_260_816;

fn gate(name: &str, pass: bool, detail: &str) {
    println!("{name}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn suite_gate(name: &str, ids: &[SuiteId]) {
    let mut failures = Vec::new();
    for id in ids {
        let report = run_suite(*id, SEED);
        for check in report.checks.iter().filter(|c| !c.pass) {
            failures.push(format!("[{}] {}: {}", report.suite, check.label, check.detail));
        }
    }
    gate(name, failures.is_empty(), &failures.join("; "));
}

#[test]
fn criterion_01_geometry_exactness() {
    let t0 = t_prefractal(0);
    let cycle: Vec<Point> = vec![
        pt(0, 1, 0, 1),
        pt(1, 1, 0, 1),
        pt(1, 1, 1, 1),
        pt(3, 2, 1, 1),
        pt(3, 2, 3, 2),
        pt(-1, 2, 3, 2),
        pt(-1, 2, 1, 1),
        pt(0, 1, 1, 1),
    ];
    let got: Vec<Point> = t0.corners().iter().map(|c| c.point.clone()).collect();
    let mut pass = got.len() == cycle.len();
    if pass {
        let start = got.iter().position(|p| *p == cycle[0]).unwrap_or(got.len());
        pass = start < got.len()
            && (0..cycle.len()).all(|i| got[(start + i) % got.len()] == cycle[i]);
    }

    let removed = t0.removed();
    pass &= removed.len() == 2
        && removed[0].left == pt(-1, 2, 3, 2)
        && removed[0].right == pt(0, 1, 3, 2)
        && removed[1].left == pt(1, 1, 3, 2)
        && removed[1].right == pt(3, 2, 3, 2);

    for n in 0..=8u32 {
        let denom = 1i64 << (n + 1);
        pass &= sigma(n) == rat(3 * (denom - 1), denom);
        let table = t_prefractal(n);
        pass &= table
            .removed()
            .iter()
            .all(|r| r.left.y == QuadScalar::from_rational(sigma(n)));
        pass &= table.removed().len() == 1usize << (n + 1);
    }

    // The contraction pair maps the elusive segment onto itself: the two
    // images share the midpoint abscissa and cover [-1, 2] exactly.
    let left = AffineContraction::identity().then(Branch::L);
    let right = AffineContraction::identity().then(Branch::R);
    let e_lo = pt(-1, 1, 3, 1);
    let e_hi = pt(2, 1, 3, 1);
    pass &= left.apply(&e_lo) == pt(-1, 1, 3, 1)
        && left.apply(&e_hi) == pt(1, 2, 3, 1)
        && right.apply(&e_lo) == pt(1, 2, 3, 1)
        && right.apply(&e_hi) == pt(2, 1, 3, 1);

    gate(
        "criterion 01 (base table, removed segments, sigma, elusive invariance)",
        pass,
        "a geometry identity failed",
    );
}

#[test]
fn criterion_02_square_exit_oracle() {
    suite_gate(
        "criterion 02 (unit-square exit closed form vs simulation)",
        &[SuiteId::Lemma43],
    );
}

#[test]
fn criterion_03_rect_exit_table() {
    suite_gate(
        "criterion 03 (rectangle mod-8 exit table, three routes)",
        &[SuiteId::Lemma44],
    );
}

#[test]
fn criterion_04_admissible_grid() {
    suite_gate(
        "criterion 04 (admissible grid: periodic, vertex-free, dyadic-free)",
        &[SuiteId::Thm33],
    );
}

#[test]
fn criterion_05_violation_witnesses() {
    suite_gate(
        "criterion 05 (constructed violations all yield dyadic hits)",
        &[SuiteId::Prop31],
    );
}

#[test]
fn criterion_06_eventually_constant() {
    suite_gate(
        "criterion 06 (eventually constant collision sets and square climb)",
        &[SuiteId::Lemma35, SuiteId::Lemma36, SuiteId::Thm37],
    );
}

#[test]
fn criterion_07_escape_distance_identity() {
    suite_gate(
        "criterion 07 (escape distance equals binary truncation error)",
        &[SuiteId::Prop46],
    );
}

#[test]
fn criterion_08_nontrivial_path_certificate() {
    suite_gate(
        "criterion 08 (distinct periodic-address limits, returns, Hausdorff)",
        &[SuiteId::Thm48, SuiteId::Thm49],
    );
}

#[test]
fn criterion_09_sqrt2_family() {
    suite_gate(
        "criterion 09 (sqrt(2)/34 descents, recurrence, singular sequence)",
        &[SuiteId::Section5],
    );
}

fn random_base_orbit(rng: &mut ChaCha8Rng) -> (u32, Orbit, Direction) {
    let level = rng.random_range(0..=2u32);
    let table = t_prefractal(level);
    let h = 2 * rng.random_range(1..=24i64) + 1;
    let t = rng.random_range(1..h);
    let p = 2 * rng.random_range(0..=4i64) + 1;
    let slope = qrat(1, p);
    let dir = if rng.random_range(0..2) == 0 {
        Direction::up_right(slope)
    } else {
        Direction::up_left(slope)
    };
    let orbit = trace_orbit(
        &table,
        Point::new(qrat(t, h), QuadScalar::zero()),
        dir.clone(),
        40,
    )
    .expect("base starts are valid");
    (level, orbit, dir)
}

#[test]
fn criterion_10_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut pass = true;
    let mut detail = String::new();

    // Unfolding straightens 200 random orbits (exact cross products), and
    // every traced direction stays in the sign orbit of the launch slope.
    for i in 0..200 {
        let (level, orbit, dir) = random_base_orbit(&mut rng);
        let cell = QuadScalar::from_rational(pow2(-(level as i32 + 1)));
        match unfold_is_straight(&orbit, &cell) {
            Ok(true) => {}
            other => {
                pass = false;
                if detail.is_empty() {
                    detail = format!("unfolding sample {i} on level {level}: {other:?}");
                }
            }
        }
        let group_ok = orbit.states.iter().all(|s| s.dir.slope() == dir.slope());
        if !group_ok {
            pass = false;
            if detail.is_empty() {
                detail = format!("direction left the sign group in sample {i}");
            }
        }
    }

    // Reversing the direction at collision j retraces the first j
    // collisions exactly, arriving with the reversed launch direction.
    for i in 0..100 {
        let (level, orbit, dir) = random_base_orbit(&mut rng);
        let j = if orbit.is_periodic() {
            (orbit.collisions() - 1).clamp(1, 12)
        } else {
            orbit.collisions().min(12)
        };
        let table = t_prefractal(level);
        let back = trace_orbit(
            &table,
            orbit.states[j].pos.clone(),
            orbit.incoming_dir(j).reversed(),
            j,
        )
        .expect("reversal start is valid");
        let retraced = back.states.len() == j + 1
            && (0..=j).all(|k| back.states[k].pos == orbit.states[j - k].pos)
            && *back.incoming_dir(j) == dir.reversed();
        if !retraced {
            pass = false;
            if detail.is_empty() {
                detail = format!("reversal sample {i} did not retrace");
            }
        }
    }

    // Address round-trip on 100 rationals in [-1, 2], endpoints included.
    let three = QuadScalar::from_int(3);
    let mut xs = vec![rat(-1, 1), rat(2, 1), rat(1, 2)];
    while xs.len() < 100 {
        let q = rng.random_range(1..=64i64);
        let a = rng.random_range(-q..=2 * q);
        xs.push(rat(a, q));
    }
    for x in &xs {
        let point = Point::new(QuadScalar::from_rational(x.clone()), three.clone());
        let round = point_to_address(&point).map(|addr| addr.to_point());
        if !matches!(&round, Ok(p) if *p == point) {
            pass = false;
            if detail.is_empty() {
                detail = format!("address round-trip failed for {x}");
            }
        }
    }

    gate(
        "criterion 10 (collinearity, sign group, reversibility, addresses)",
        pass,
        &detail,
    );
}

#[test]
fn nontrivial_path_polylines_nest() {
    // Plane-path nesting of the certificate paths, rechecked here so the
    // gate does not depend only on suite internals.
    for dir in [Direction::up_right(qrat(1, 3)), Direction::up_left(qrat(1, 3))] {
        let seq = base_sequence(qrat(1, 3), dir, 5, 300).unwrap();
        let path = build_nontrivial_path(&seq).unwrap();
        assert_eq!(path.level_polylines.len(), 6);
        for w in path.level_polylines.windows(2) {
            assert!(w[0].len() < w[1].len());
        }
    }
}
