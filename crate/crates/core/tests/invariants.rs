//! Cross-module invariants at moderate scale: expansion identities, bracket
//! containment, policy ordering, sup certification, and exact measurability
//! of the selected point on finite spaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use xipoint::field::ScalarField;
use xipoint::functions;
use xipoint::probability::{sigma_generated_by, FiniteProbabilitySpace, RandomVariable};
use xipoint::selector::{
    apply_over_sample, build_remainder_equation, count_sign_changes_above, solve_selector_multi,
    solve_selector_uni, SelectionPolicy,
};
use xipoint::taylor::{partial_sum_multi, partial_sum_uni};
use xipoint::value::Value;
use xipoint::{is_measurable_wrt, Domain};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Smooth univariate test functions with increment ranges that keep every
/// bracket inside the domain for anchors 0 and 0.5.
fn univariate_suite(rng: &mut ChaCha12Rng) -> Vec<(String, ScalarField, (f64, f64))> {
    let mut suite = Vec::new();
    for degree in [3usize, 6] {
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-2.0..2.0)).collect();
        suite.push((
            format!("poly-deg{degree}"),
            functions::poly(&coeffs),
            (-3.0, 3.0),
        ));
    }
    suite.push(("exp".into(), functions::exp_field(), (-3.0, 3.0)));
    suite.push(("sin".into(), functions::sin_field(), (-3.0, 3.0)));
    suite.push(("log-shifted".into(), functions::log_shifted(), (-0.8, 2.0)));
    suite
}

#[test]
fn univariate_identity_residual_and_containment() {
    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    let suite = univariate_suite(&mut rng);
    let policy = SelectionPolicy::sup();
    let per_combo = 500;
    for (name, f, (lo, hi)) in &suite {
        for n in 1..=3usize {
            for a in [0.0, 0.5] {
                for _ in 0..per_combo {
                    let x = rng.gen_range(*lo..*hi);
                    let res = solve_selector_uni(f, a, x, n, &policy)
                        .unwrap_or_else(|e| panic!("{name} n={n} a={a} x={x}: {e}"));
                    let xi = res.xi.as_scalar().unwrap();
                    assert!(res.bracket.contains(xi), "{name}: xi outside bracket");
                    assert!(
                        (0.0..=1.0).contains(&res.theta),
                        "{name}: theta out of range"
                    );
                    // Recompute the identity defect from scratch.
                    let lhs = f.eval_uni(a + x).unwrap();
                    let ps = partial_sum_uni(f, a, x, n).unwrap();
                    let closing = f.derivative_uni(n, a + xi).unwrap()
                        * x.powi(n as i32)
                        / factorial(n);
                    let defect = (lhs - ps - closing).abs();
                    assert!(
                        defect <= 1e-9 * (1.0 + lhs.abs()),
                        "{name} n={n} a={a} x={x}: defect {defect:e}"
                    );
                }
            }
        }
    }
}

fn multivariate_suite() -> Vec<(String, ScalarField)> {
    vec![
        ("exp-linear-p2".into(), functions::exp_linear(vec![1.0, 2.0])),
        ("sin-cos-p2".into(), functions::sin_x_cos_y()),
        ("sum-squares-p3".into(), functions::sum_of_squares(3)),
        ("sin-cos-exp-p3".into(), functions::sin_cos_exp()),
    ]
}

#[test]
fn multivariate_identity_residual_and_segment_parameter() {
    let mut rng = ChaCha12Rng::seed_from_u64(2002);
    let policy = SelectionPolicy::sup();
    for (name, f) in multivariate_suite() {
        let p = f.arity();
        for n in 1..=2usize {
            for _ in 0..200 {
                let a: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let res = solve_selector_multi(&f, &a, &x, n, &policy)
                    .unwrap_or_else(|e| panic!("{name} n={n}: {e}"));
                assert!((0.0..=1.0).contains(&res.theta), "{name}: theta out of [0,1]");
                // xi = theta * X elementwise
                for (xi_c, x_c) in res.xi.coords().iter().zip(&x) {
                    assert!((xi_c - res.theta * x_c).abs() <= 1e-12 * (1.0 + x_c.abs()));
                }
                let end: Vec<f64> = a.iter().zip(&x).map(|(ai, xi)| ai + xi).collect();
                let lhs = f.eval(&end).unwrap();
                let ps = partial_sum_multi(&f, &a, &x, n).unwrap();
                let eq = build_remainder_equation(&f, &a, &Value::Vector(x.clone()), n).unwrap();
                let closing = eq.g(res.theta).unwrap();
                let defect = (lhs - ps - closing).abs();
                assert!(
                    defect <= 1e-9 * (1.0 + lhs.abs()),
                    "{name} n={n}: defect {defect:e}"
                );
            }
        }
    }
}

#[test]
fn inf_selector_below_sup_selector() {
    let mut rng = ChaCha12Rng::seed_from_u64(3003);
    let suite = univariate_suite(&mut rng);
    for (name, f, (lo, hi)) in &suite {
        for _ in 0..50 {
            let a = rng.gen_range(-0.2..0.7);
            let x = rng.gen_range(*lo..*hi);
            let sup = solve_selector_uni(f, a, x, 1, &SelectionPolicy::sup()).unwrap();
            let inf = solve_selector_uni(f, a, x, 1, &SelectionPolicy::inf()).unwrap();
            let (s, i) = (
                sup.xi.as_scalar().unwrap(),
                inf.xi.as_scalar().unwrap(),
            );
            assert!(i <= s + 1e-12, "{name}: inf {i} above sup {s}");
        }
    }
}

#[test]
fn sup_certification_over_long_sin_brackets() {
    let mut rng = ChaCha12Rng::seed_from_u64(4004);
    let f = functions::sin_field();
    let policy = SelectionPolicy::sup();
    for _ in 0..100 {
        let x = rng.gen_range(5.0..40.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let res = solve_selector_uni(&f, 0.0, x, 1, &policy).unwrap();
        let eq = build_remainder_equation(&f, &[0.0], &Value::Scalar(x), 1).unwrap();
        let tol = policy.refine_tol * (1.0 + eq.pi.abs());
        let changes = count_sign_changes_above(
            &eq,
            res.xi.as_scalar().unwrap(),
            res.bracket.hi,
            10 * policy.scan_points,
            tol,
        )
        .unwrap();
        assert_eq!(changes, 0, "root above the sup selection for x = {x}");
    }
}

#[test]
fn selector_is_bitwise_deterministic() {
    let f = functions::sin_field();
    let policy = SelectionPolicy::sup();
    for x in [0.3, 2.0, 7.7, -11.0] {
        let a = solve_selector_uni(&f, 0.25, x, 2, &policy).unwrap();
        let b = solve_selector_uni(&f, 0.25, x, 2, &policy).unwrap();
        assert_eq!(
            a.xi.as_scalar().unwrap().to_bits(),
            b.xi.as_scalar().unwrap().to_bits()
        );
        assert_eq!(a.theta.to_bits(), b.theta.to_bits());
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    }
}

#[test]
fn parallel_solves_match_sequential() {
    let policy = SelectionPolicy::sup();
    let xs: Vec<f64> = (0..64).map(|i| -3.0 + 0.1 * i as f64).collect();
    let sequential: Vec<u64> = xs
        .iter()
        .map(|&x| {
            solve_selector_uni(&functions::exp_field(), 0.0, x, 1, &policy)
                .unwrap()
                .xi
                .as_scalar()
                .unwrap()
                .to_bits()
        })
        .collect();
    let mid = xs.len() / 2;
    let (first, second) = xs.split_at(mid);
    let solve_chunk = |chunk: &[f64]| -> Vec<u64> {
        let f = functions::exp_field();
        chunk
            .iter()
            .map(|&x| {
                solve_selector_uni(&f, 0.0, x, 1, &policy)
                    .unwrap()
                    .xi
                    .as_scalar()
                    .unwrap()
                    .to_bits()
            })
            .collect()
    };
    let (left, right) = std::thread::scope(|scope| {
        let l = scope.spawn(|| solve_chunk(first));
        let r = scope.spawn(|| solve_chunk(second));
        (l.join().unwrap(), r.join().unwrap())
    });
    let mut parallel = left;
    parallel.extend(right);
    assert_eq!(parallel, sequential);
}

/// Builds a random space with singleton atoms and a deliberately
/// non-injective increment variable.
fn random_space_with_duplicates(
    rng: &mut ChaCha12Rng,
    max_outcomes: usize,
) -> (xipoint::SpaceRef, RandomVariable) {
    let n = rng.gen_range(4..=max_outcomes);
    let space = FiniteProbabilitySpace::uniform(n).unwrap();
    // Fewer distinct values than outcomes forces duplicates.
    let distinct = rng.gen_range(2..=(n / 2).max(2));
    let pool: Vec<f64> = (0..distinct).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let values: Vec<f64> = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    let x = RandomVariable::scalar(&space, values).unwrap();
    (space, x)
}

#[test]
fn selected_point_is_measurable_on_finite_spaces() {
    let mut rng = ChaCha12Rng::seed_from_u64(5005);
    let policy = SelectionPolicy::sup();
    let f = functions::exp_field();
    for _ in 0..20 {
        let (_, x) = random_space_with_duplicates(&mut rng, 64);
        let n = rng.gen_range(1..=3);
        let sample = apply_over_sample(&f, &[0.0], &x, n, &policy).unwrap();
        let sigma_x = sigma_generated_by(&x);
        assert!(
            is_measurable_wrt(&sample.xi, &sigma_x),
            "selected point escaped sigma(X)"
        );
    }
}

#[test]
fn convex_domain_rejects_exiting_segments_in_the_selector() {
    // Unit disc domain: an increment pointing far outside must error.
    let f = ScalarField::analytic(
        2,
        3,
        Domain::convex(
            |x| x[0] * x[0] + x[1] * x[1] < 1.0,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        ),
        |x| x[0] + x[1],
        |_, alpha| if alpha.order() == 1 { 1.0 } else { 0.0 },
    );
    let err = solve_selector_multi(&f, &[0.0, 0.0], &[5.0, 0.0], 1, &SelectionPolicy::sup());
    assert!(err.is_err());
}
