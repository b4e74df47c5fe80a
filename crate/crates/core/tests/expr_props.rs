use bakry_emery::expr::{eval_jet, parse_expr, Expression};
use proptest::prelude::*;

fn coords() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

/// Smooth expressions in x, y built from total functions only.
fn smooth_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("({c:.3})")),
        Just("pi".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + cos({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3*sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.prop_map(|a| format!("-({a})^2")),
        ]
    })
}

fn parse(src: &str) -> Expression {
    parse_expr(src, &coords()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn fd_check(e: &Expression, p: [f64; 2]) -> Result<(), TestCaseError> {
    let j = e.jet(&p).unwrap();
    let f = |q: [f64; 2]| e.eval(&q).unwrap();
    let h1 = 1e-5;
    let h2 = 1e-4;
    for i in 0..2 {
        let mut up = p;
        let mut dn = p;
        up[i] += h1;
        dn[i] -= h1;
        let fd = (f(up) - f(dn)) / (2.0 * h1);
        prop_assert!(close(j.gradient[i], fd, 1e-6), "d{i}: {} vs {fd}", j.gradient[i]);
        for k in 0..2 {
            let shift = |a: f64, b: f64| {
                let mut q = p;
                q[i] += a;
                q[k] += b;
                f(q)
            };
            let fd2 = (shift(h2, h2) - shift(h2, -h2) - shift(-h2, h2) + shift(-h2, -h2)) / (4.0 * h2 * h2);
            prop_assert!(close(j.hessian(i, k), fd2, 1e-5), "d{i}d{k}: {} vs {fd2}", j.hessian(i, k));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jet_matches_finite_differences(src in smooth_source(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let e = parse(&src);
        let v = e.eval(&[x, y]).unwrap();
        prop_assume!(v.abs() < 1e6);
        fd_check(&e, [x, y])?;
    }

    #[test]
    fn linearity(a in smooth_source(), b in smooth_source(), c in -4.0f64..4.0, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let (ea, eb) = (parse(&a), parse(&b));
        let sum = parse(&format!("({c}) * ({a}) + ({b})"));
        let (ja, jb, js) = (ea.jet(&[x, y]).unwrap(), eb.jet(&[x, y]).unwrap(), sum.jet(&[x, y]).unwrap());
        prop_assert!(close(js.value, c * ja.value + jb.value, 1e-12));
        for i in 0..2 {
            prop_assert!(close(js.gradient[i], c * ja.gradient[i] + jb.gradient[i], 1e-12));
            for k in 0..2 {
                prop_assert!(close(js.hessian(i, k), c * ja.hessian(i, k) + jb.hessian(i, k), 1e-12));
            }
        }
    }

    #[test]
    fn product_rule(a in smooth_source(), b in smooth_source(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let (ja, jb) = (parse(&a).jet(&[x, y]).unwrap(), parse(&b).jet(&[x, y]).unwrap());
        let jp = parse(&format!("({a}) * ({b})")).jet(&[x, y]).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let expected = ja.hessian(i, k) * jb.value
                    + ja.value * jb.hessian(i, k)
                    + ja.gradient[i] * jb.gradient[k]
                    + jb.gradient[i] * ja.gradient[k];
                prop_assert!(close(jp.hessian(i, k), expected, 1e-12), "{} vs {expected}", jp.hessian(i, k));
            }
        }
    }

    #[test]
    fn display_round_trips(src in smooth_source(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let e = parse(&src);
        let again = parse(&e.to_string());
        let (v1, v2) = (e.eval(&[x, y]).unwrap(), again.eval(&[x, y]).unwrap());
        prop_assert!(close(v1, v2, 1e-13), "{src} -> {again}: {v1} vs {v2}");
        prop_assert_eq!(again.to_string(), e.to_string());
    }
}

#[test]
fn power_is_right_associative_and_binds_above_negation() {
    let e = parse("-2^3^2");
    assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), -(2f64.powf(9.0)));
    let j = eval_jet(&parse("x^2 * y^3"), &[2.0, -1.0]).unwrap();
    assert_eq!((j.value, j.gradient[0], j.gradient[1]), (-4.0, -4.0, 12.0));
    assert_eq!((j.hessian(0, 0), j.hessian(0, 1), j.hessian(1, 1)), (-2.0, 12.0, -24.0));
}
