use sgcalc_core::compact::{bdf, face_classify, iota, iota_inv, transport, Face, FacePoint};
use sgcalc_core::extrap::RadialLimit;
use sgcalc_core::sample::{random_unit, rng, scaled};
use sgcalc_core::symbols::OrderPair;
use sgcalc_core::Expression;

#[test]
fn iota_examples() {
    assert_eq!(iota(&[4.0, 0.0]), vec![0.75, 0.0]);
    assert_eq!(iota(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
    assert_eq!(iota(&[8.0]), vec![0.875]);
    let back = iota_inv(&[0.75, 0.0]).unwrap();
    assert!((back[0] - 4.0).abs() < 1e-14 && back[1] == 0.0);
    assert!((iota_inv(&[0.875]).unwrap()[0] - 8.0).abs() < 1e-13);
    assert_eq!(iota_inv(&[0.0]).unwrap(), vec![0.0]);
    assert!(iota_inv(&[1.0 - 1e-13]).is_err());
}

#[test]
fn face_examples_and_index_additivity() {
    let p = face_classify(&[0.2, 0.0], &[0.9], 1e-9).unwrap();
    assert_eq!((p.face, p.index()), (Face::Interior, 0));
    let p = face_classify(&[1.0, 0.0], &[0.5], 1e-9).unwrap();
    assert_eq!((p.face, p.index()), (Face::E, 1));
    let p = face_classify(&[0.0, 1.0], &[1.0], 1e-9).unwrap();
    assert_eq!((p.face, p.index()), (Face::PsiE, 2));
    let mut g = rng(5);
    for k in 0..200 {
        let ry = if k % 3 == 0 { 1.0 } else { 0.3 };
        let rg = if k % 2 == 0 { 1.0 } else { 0.6 };
        let y = scaled(&random_unit(&mut g, 2), ry);
        let gam = scaled(&random_unit(&mut g, 3), rg);
        let p = face_classify(&y, &gam, 1e-9).unwrap();
        assert_eq!(p.index(), (ry == 1.0) as usize + (rg == 1.0) as usize);
    }
}

#[test]
fn transport_examples() {
    let lim = RadialLimit::default();
    let jj = Expression::parse("jb(x)*jb(t)", 2, 2).unwrap();
    let c = transport(&jj, OrderPair::new(1.0, 1.0), &FacePoint::corner(&[1.0, 0.0], &[1.0, 0.0]), &lim).unwrap();
    assert!((c - 1.0).abs() < 1e-8, "{c}");

    let dot = Expression::parse("dot(x,t)", 2, 2).unwrap();
    let p = FacePoint::e_face(&[1.0, 0.0], &[2.0, 0.0]);
    let v = transport(&dot, OrderPair::new(1.0, 1.0), &p, &lim).unwrap();
    assert!((v - 2.0 * bdf(&p.gamma)).abs() < 1e-10, "{v}");

    let one = Expression::parse("1", 2, 1).unwrap();
    for p in [
        FacePoint::corner(&[0.0, 1.0], &[-1.0]),
        FacePoint::psi_face(&[3.0, -1.0], &[1.0]),
        FacePoint { face: Face::Interior, y: vec![0.1, 0.2], gamma: vec![0.4] },
    ] {
        assert_eq!(transport(&one, OrderPair::new(0.0, 0.0), &p, &lim).unwrap(), 1.0);
    }
}

#[test]
fn transport_is_multiplicative_on_the_boundary() {
    let lim = RadialLimit::default();
    let a = Expression::parse("dot(x,t) + 2*jb(x)*jb(t)", 2, 2).unwrap();
    let b = Expression::parse("jb(x) - x1", 2, 2).unwrap();
    let (p, q) = (OrderPair::new(1.0, 1.0), OrderPair::new(1.0, 0.0));
    let mut g = rng(9);
    for _ in 0..20 {
        let (u, v) = (random_unit(&mut g, 2), random_unit(&mut g, 2));
        let fin = scaled(&random_unit(&mut g, 2), 1.7);
        for pt in [FacePoint::e_face(&u, &fin), FacePoint::psi_face(&fin, &v), FacePoint::corner(&u, &v)] {
            let ab = transport(&a.mul(&b), p + q, &pt, &lim).unwrap();
            let prod = transport(&a, p, &pt, &lim).unwrap() * transport(&b, q, &pt, &lim).unwrap();
            assert!((ab - prod).abs() <= 1e-8 * prod.abs().max(1.0), "{pt:?}: {ab} vs {prod}");
        }
    }
}
