use std::f64::consts::PI;

use num_complex::Complex64;
use sgcalc_core::oscint::{
    oscint_eval, wavefront_probe, wavefront_scan, OscIntConfig, ProbeConfig, ProbeVerdict, TestFunction,
};
use sgcalc_core::Expression;

fn e(text: &str) -> Expression {
    Expression::parse(text, 1, 1).unwrap()
}

fn coarse() -> OscIntConfig {
    OscIntConfig {
        eps_ladder: vec![1e-1, 5e-2, 2.5e-2],
        ..OscIntConfig::default()
    }
}

#[test]
fn fourier_pairing_is_two_pi() {
    let r = oscint_eval(&e("x*t"), &e("1"), &TestFunction::standard(1, 1), &OscIntConfig::default()).unwrap();
    // Each rung has the closed form 2π/√(1 + 2ε + 4ε²).
    for (eps, v) in &r.ladder {
        let exact = 2.0 * PI / (1.0 + 2.0 * eps + 4.0 * eps * eps).sqrt();
        assert!((v - Complex64::new(exact, 0.0)).norm() < 1e-9, "eps {eps}: {v}");
    }
    assert!((r.value.re - 2.0 * PI).abs() < 1e-2 * 2.0 * PI);
    assert!(r.value.im.abs() < 1e-9);
    assert!(r.residual <= 1e-4 * r.value.norm());
}

/// Plain trapezoid without regularization for a Schwartz amplitude.
fn direct(f: impl Fn(f64, f64) -> Complex64, box_: f64, h: f64) -> Complex64 {
    let n = (box_ / h).ceil() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in -n..=n {
        for j in -n..=n {
            acc += f(i as f64 * h, j as f64 * h);
        }
    }
    acc * h * h
}

#[test]
fn schwartz_amplitude_matches_direct_quadrature() {
    let r = oscint_eval(
        &e("x*t"),
        &e("exp(-x^2 - t^2)"),
        &TestFunction::standard(1, 1),
        &OscIntConfig::default(),
    )
    .unwrap();
    let oracle = direct(
        |x, t| Complex64::from_polar((-x * x - t * t - x * x / 2.0).exp(), x * t),
        8.0,
        0.02,
    );
    assert!((oracle.re - 2.0 * PI / 7f64.sqrt()).abs() < 1e-10);
    assert!((r.value - oracle).norm() < 1e-6, "{} vs {}", r.value, oracle);
}

#[test]
fn pairing_is_linear_and_conjugation_symmetric() {
    let phi = e("x*t - jb(t)");
    let u = TestFunction::bump(&[0.3], 0.5, 1).unwrap();
    let a1 = e("exp(-t^2)");
    let a2 = e("x/jb(t)^2");
    let sum = e("exp(-t^2) + x/jb(t)^2");
    let v1 = oscint_eval(&phi, &a1, &u, &coarse()).unwrap().value;
    let v2 = oscint_eval(&phi, &a2, &u, &coarse()).unwrap().value;
    let vs = oscint_eval(&phi, &sum, &u, &coarse()).unwrap().value;
    assert!((vs - v1 - v2).norm() < 1e-8);

    let uk = u.clone().modulated(&[1.5]);
    let plain = oscint_eval(&phi, &a1, &uk, &coarse()).unwrap().value;
    let mirrored = oscint_eval(&e("-(x*t - jb(t))"), &a1, &uk.conj(), &coarse()).unwrap().value;
    assert!((mirrored - plain.conj()).norm() < 1e-12 * plain.norm().max(1.0));
}

#[test]
fn fourier_probes() {
    let cfg = ProbeConfig::default();
    let away = wavefront_probe(&e("x*t"), &e("1"), &[1.0], &[1.0], &cfg).unwrap();
    assert_eq!(away.verdict, ProbeVerdict::RegularDirection, "{away:?}");
    let origin = wavefront_probe(&e("x*t"), &e("1"), &[0.0], &[1.0], &cfg).unwrap();
    assert_eq!(origin.verdict, ProbeVerdict::PossibleWavefront);
    assert!(origin.slope.abs() < 0.5, "{origin:?}");
    assert!(origin.slope.is_finite() && away.slope.is_finite());
}

#[test]
fn klein_gordon_flags_sit_near_plus_minus_one() {
    // Unit spacing exceeds the probe resolution of the default bump.
    let locations: Vec<Vec<f64>> = (-3..=3).map(|k| vec![k as f64]).collect();
    let probes = wavefront_scan(
        &e("x*t - jb(t)"),
        &e("1"),
        &locations,
        &[vec![1.0], vec![-1.0]],
        &ProbeConfig::default(),
    )
    .unwrap();
    let flagged: Vec<(f64, f64)> = probes
        .iter()
        .filter(|p| p.verdict == ProbeVerdict::PossibleWavefront)
        .map(|p| (p.x0[0], p.xi_dir[0]))
        .collect();
    assert_eq!(flagged, vec![(-1.0, -1.0), (1.0, 1.0)]);
}
