mod common;

use common::{check_soundness, random_expr, random_query, random_rational, rng};
use qmachine::ndrelation::{
    cluster, enumerate, from_function, identity_rel, make_finite_rel, member_semi, project, witness,
    x_or_successor_rel, Membership, RealEnumRel, WitnessOutcome,
};
use qmachine::{expr_to_machine, from_rational, identity, rat, Fuel, Positive, Rational, RealExpr};
use rand::Rng;

fn fuel() -> Fuel {
    Fuel::new(200).unwrap()
}

fn slices_are_sound(rel: &RealEnumRel, reference: impl Fn(u64, &Rational) -> Rational, indices: &[u64], seed: u64) {
    for &i in indices {
        let slice = project(rel, i).unwrap();
        let tally = check_soundness(&slice, |p| Some(reference(i, &p[0])), 1000, seed + i);
        assert!(tally.violations.is_empty(), "slice {i}: {:#?}", tally.violations);
    }
}

#[test]
fn catalog_relation_slices_are_sound() {
    slices_are_sound(&identity_rel(), |_, x| x.clone(), &[0, 1, 9], 10);
    slices_are_sound(
        &x_or_successor_rel(),
        |i, x| if i == 0 { x.clone() } else { x + &Rational::one() },
        &[0, 1, 2, 40],
        20,
    );
}

#[test]
fn window_at_half_has_two_clusters() {
    let acc = Positive::dyadic(10);
    let list = enumerate(&x_or_successor_rel(), &from_rational(rat(1, 2)), &acc, 10, fuel());
    assert_eq!(list.entries.len(), 11);
    let clusters = cluster(&list.entries, &acc.double());
    assert_eq!(clusters.len(), 2);
    for entry in &list.entries {
        assert!(entry.epsilon <= acc);
        let centre = if entry.index == 0 { rat(1, 2) } else { rat(3, 2) };
        assert!((&entry.r - &centre).abs() <= *acc.get());
    }
}

#[test]
fn projections_match_the_named_machines() {
    let succ = expr_to_machine(&RealExpr::add(RealExpr::var(0), RealExpr::constant(rat(1, 1))), 1).unwrap();
    let rel = x_or_successor_rel();
    let (p0, p3) = (project(&rel, 0).unwrap(), project(&rel, 3).unwrap());
    let lifted = from_function(&succ).unwrap();
    let mut rng = rng(4);
    for _ in 0..200 {
        let q = random_query(&mut rng, 1);
        assert_eq!(p0.apply(&q), identity().apply(&q));
        assert_eq!(p3.apply(&q), succ.apply(&q));
        let i = rng.random_range(0..1000);
        assert_eq!(project(&lifted, i).unwrap().apply(&q), succ.apply(&q));
    }
}

#[test]
fn lifted_random_functions_project_back() {
    let mut rng = rng(12);
    for _ in 0..10 {
        let e = random_expr(&mut rng, 3, 1, false);
        let m = expr_to_machine(&e, 1).unwrap();
        let rel = from_function(&m).unwrap();
        for _ in 0..5 {
            let slice = project(&rel, rng.random_range(0..10_000)).unwrap();
            for _ in 0..40 {
                let q = random_query(&mut rng, 1);
                assert_eq!(slice.apply(&q), m.apply(&q));
            }
        }
    }
}

#[test]
fn found_memberships_are_certified() {
    let mut rng = rng(31);
    let rels = [identity_rel(), x_or_successor_rel()];
    let mut found = 0;
    for _ in 0..200 {
        let rel = &rels[rng.random_range(0..2)];
        let x = random_rational(&mut rng, 2, 8);
        // y near one of the witnesses, or somewhere random
        let y = match rng.random_range(0..3) {
            0 => x.clone(),
            1 => &x + &Rational::one(),
            _ => random_rational(&mut rng, 3, 8),
        };
        let acc = Positive::dyadic(rng.random_range(2..12));
        let (xo, yo) = (from_rational(x.clone()), from_rational(y.clone()));
        if let Membership::Found(i) = member_semi(rel, &xo, &yo, &acc, 4, fuel()) {
            found += 1;
            let fine = acc.scale_down(16);
            let WitnessOutcome::Value { r, epsilon } = witness(rel, &xo, i, &fine, fuel()).unwrap() else {
                panic!("witness {i} converged before");
            };
            // |f(x, i) − y| ≤ |r − y| + ε
            assert!((&r - &y).abs() + epsilon.get() <= *acc.get(), "x={x} y={y} i={i}");
        }
    }
    assert!(found > 50);
}

#[test]
fn enumeration_windows_grow_by_prefix() {
    let rel = make_finite_rel(&[
        RealExpr::var(0),
        RealExpr::chi_pos(RealExpr::var(0)),
        RealExpr::neg(RealExpr::var(0)),
        RealExpr::mul(RealExpr::var(0), RealExpr::var(0)),
    ])
    .unwrap();
    for x in [rat(-1, 1), rat(2, 3)] {
        let xo = from_rational(x);
        let acc = Positive::dyadic(8);
        let mut previous = enumerate(&rel, &xo, &acc, 0, Fuel::new(60).unwrap());
        for k in 1..6 {
            let next = enumerate(&rel, &xo, &acc, k, Fuel::new(60).unwrap());
            assert!(next.entries.starts_with(&previous.entries));
            assert!(next.skipped.starts_with(&previous.skipped));
            previous = next;
        }
    }
}

#[test]
fn membership_examples() {
    let zero = from_rational(rat(0, 1));
    let acc = Positive::dyadic(10);
    let rel = x_or_successor_rel();
    assert_eq!(member_semi(&rel, &zero, &from_rational(rat(1, 1)), &acc, 10, fuel()), Membership::Found(1));
    assert_eq!(member_semi(&rel, &zero, &from_rational(rat(1, 2)), &acc, 10, fuel()), Membership::Exhausted);
    assert_eq!(member_semi(&identity_rel(), &zero, &zero, &acc, 10, fuel()), Membership::Found(0));
}
