use proptest::prelude::*;
use sgcalc_core::expr::Expression;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn parse_examples() {
    let f = Expression::parse("dot(x,t)", 2, 2).unwrap();
    let g = Expression::parse("x1*t1 + x2*t2", 2, 2).unwrap();
    for (x, t) in [([1.0, 2.0], [3.0, -1.0]), ([0.5, -4.0], [2.0, 2.0])] {
        assert_eq!(f.eval(&x, &t).unwrap(), g.eval(&x, &t).unwrap());
    }
    let kg = Expression::parse("dot(x,t) - jb(t)", 1, 1).unwrap();
    assert_eq!(kg.eval(&[2.0], &[3.0]).unwrap(), 6.0 - 10f64.sqrt());
    let err = Expression::parse("jb(q)", 1, 1).unwrap_err();
    assert!(err.to_string().contains('q'), "{err}");
    assert!(Expression::parse("x3", 2, 1).is_err());
    assert!(Expression::parse("dot(x)", 1, 1).is_err());
    assert!(Expression::parse("x1 +", 1, 1).is_err());
}

#[test]
fn jet_examples() {
    let f = Expression::parse("dot(x,t)", 2, 2).unwrap();
    let j = f.eval_jet(&[1.0, 0.0], &[0.0, 2.0], 1).unwrap();
    assert_eq!(j.value(), 0.0);
    assert_eq!(j.grad_x(), vec![0.0, 2.0]);
    assert_eq!(j.grad_t(), vec![1.0, 0.0]);

    let jb = Expression::parse("jb(x)", 2, 0).unwrap();
    let j = jb.eval_jet(&[3.0, 4.0], &[], 1).unwrap();
    let r = 26f64.sqrt();
    assert!((j.value() - r).abs() < 1e-15);
    assert!((j.grad_x()[0] - 3.0 / r).abs() < 1e-15);
    assert!((j.grad_x()[1] - 4.0 / r).abs() < 1e-15);

    let jt = Expression::parse("jb(t)", 0, 1).unwrap();
    let j = jt.eval_jet(&[], &[0.0], 2).unwrap();
    assert_eq!((j.value(), j.partial(&[], &[1]), j.partial(&[], &[2])), (1.0, Some(0.0), Some(1.0)));
}

#[test]
fn domain_errors_are_reported() {
    let f = Expression::parse("sqrt(x1)", 1, 0).unwrap();
    assert!(f.eval(&[-1.0], &[]).is_err());
    let g = Expression::parse("1/x1", 1, 0).unwrap();
    assert!(g.eval(&[0.0], &[]).is_err());
}

/// Random compound expressions over `x1..xd`, `t1..ts` whose derivatives
/// stay moderate on `[-5, 5]`.
fn expr_text(d: usize, s: usize) -> impl Strategy<Value = String> {
    let mut leaves: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain((1..=s).map(|j| format!("t{j}"))).collect();
    leaves.extend(["jb(x)".to_string(), "jb(t)".to_string()]);
    if d == s {
        leaves.push("dot(x,t)/jb(x)".to_string());
    }
    let leaf = prop_oneof![
        proptest::sample::select(leaves),
        (-2.0f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / jb({b})")),
            inner.clone().prop_map(|a| format!("sin(({a})/jb(x))")),
            inner.clone().prop_map(|a| format!("cos({a})/jb(t)")),
            inner.clone().prop_map(|a| format!("exp(-jb({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(jb({a}))")),
            inner.clone().prop_map(|a| format!("jb({a})^-1.5")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

fn case() -> impl Strategy<Value = (usize, usize, String, Vec<f64>)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(d, s)| {
        (
            Just(d),
            Just(s),
            expr_text(d, s),
            proptest::collection::vec(-5.0f64..5.0, d + s),
        )
    })
}

fn split(p: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    (p[..d].to_vec(), p[d..].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ad_matches_central_differences((d, s, text, p) in case()) {
        let f = Expression::parse(&text, d, s).unwrap();
        let n = d + s;
        let (x, t) = split(&p, d);
        let jet = f.eval_jet(&x, &t, 2).unwrap();
        let grad = jet.grad();
        let hess = jet.hessian();
        let h = 1e-5;
        for i in 0..n {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[i] += h;
            pm[i] -= h;
            let (xp, tp) = split(&pp, d);
            let (xm, tm) = split(&pm, d);
            let fd = (f.eval(&xp, &tp).unwrap() - f.eval(&xm, &tm).unwrap()) / (2.0 * h);
            prop_assert!(close(grad[i], fd, 1e-6), "{text}: d/d{i} AD {} FD {fd}", grad[i]);
            let gp = f.eval_jet(&xp, &tp, 1).unwrap().grad();
            let gm = f.eval_jet(&xm, &tm, 1).unwrap().grad();
            for j in 0..n {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                prop_assert!(close(hess[(i, j)], fd2, 1e-6), "{text}: H[{i},{j}] AD {} FD {fd2}", hess[(i, j)]);
            }
        }
    }

    #[test]
    fn lower_order_jets_are_bitwise_prefixes((d, s, text, p) in case()) {
        let f = Expression::parse(&text, d, s).unwrap();
        let (x, t) = split(&p, d);
        let top = f.eval_jet(&x, &t, 3).unwrap();
        for k in 0..3 {
            let low = f.eval_jet(&x, &t, k).unwrap();
            let cut = top.truncate(k);
            let bits = |v: &[f64]| v.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(cut.coefficients()), bits(low.coefficients()), "{} order {}", text, k);
        }
    }

    #[test]
    fn display_reparses_to_the_same_values((d, s, text, p) in case()) {
        let f = Expression::parse(&text, d, s).unwrap();
        let g = Expression::parse(&f.to_string(), d, s).unwrap();
        let (x, t) = split(&p, d);
        prop_assert_eq!(f.eval(&x, &t).unwrap().to_bits(), g.eval(&x, &t).unwrap().to_bits());
    }
}
