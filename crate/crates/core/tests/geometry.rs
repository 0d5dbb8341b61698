use sgcalc_core::classical::Triple;
use sgcalc_core::compact::Face;
use sgcalc_core::expr::Expression;
use sgcalc_core::lagrangian::{lagrangian_validate, LagrangianData};
use sgcalc_core::phase::{
    absorption_check, admissibility_check, big_phi, face_system, nondegeneracy_check, AdmissibilityConfig, PhaseFunction,
};
use sgcalc_core::stationary::{all_clouds, euler_check, face_cloud, neatness_report, SearchConfig};

fn e(text: &str, d: usize, s: usize) -> Expression {
    Expression::parse(text, d, s).unwrap()
}

fn phase(base: &str, tr: [&str; 3], d: usize, s: usize) -> PhaseFunction {
    PhaseFunction::new(
        e(base, d, s),
        Some(Triple { e: e(tr[0], d, s), psi: e(tr[1], d, s), psie: e(tr[2], d, s) }),
    )
    .unwrap()
}

fn fourier(d: usize) -> PhaseFunction {
    phase("dot(x,t)", ["dot(x,t)"; 3], d, d)
}

fn kg() -> PhaseFunction {
    phase("dot(x,t) - jb(t)", ["dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)"], 1, 1)
}

#[test]
fn big_phi_hand_values() {
    let f = e("dot(x,t)", 1, 1);
    assert!((big_phi(&f, &[1.0], &[2.0]).unwrap() - 13.0).abs() < 1e-13);
    assert_eq!(big_phi(&f, &[0.0], &[0.0]).unwrap(), 0.0);
    let k = e("dot(x,t) - jb(t)", 1, 1);
    assert!((big_phi(&k, &[1.0], &[0.0]).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn admissibility_verdicts() {
    let cfg = AdmissibilityConfig::default();
    for d in [1, 2] {
        let r = admissibility_check(&e("dot(x,t)", d, d), &cfg).unwrap();
        assert!(r.admissible, "{r:?}");
    }
    assert!(admissibility_check(&e("dot(x,t) - jb(t)", 1, 1), &cfg).unwrap().admissible);
    let bad = admissibility_check(&e("x1*t1", 2, 1), &cfg).unwrap();
    assert!(!bad.admissible);
    assert_eq!(bad.ratio_min, 0.0);
    assert_eq!(bad.witness.0, vec![0.0, 8.0]);
    assert_eq!(bad.witness.1, vec![0.0]);
}

#[test]
fn fourier_psi_face_is_zero_section() {
    let p = fourier(2);
    let cfg = SearchConfig::default();
    let c = face_cloud(&p, Face::Psi, &cfg).unwrap();
    assert_eq!(c.points.len(), 64);
    for sp in &c.points {
        assert!(sp.x.iter().all(|v| v.abs() <= 1e-10));
        assert!(sp.nondegenerate);
        assert_eq!(sp.rank, 2);
    }
    for lp in &c.lagrangian {
        let f = lp.frame.as_ref().unwrap();
        assert_eq!(f.len(), 1);
        assert!(f[0].0.iter().all(|v| v.abs() < 1e-14));
        for (a, b) in lp.xi.iter().zip(&lp.source.theta) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(face_cloud(&p, Face::E, &cfg).unwrap().points.is_empty());
    assert!(face_cloud(&p, Face::PsiE, &cfg).unwrap().points.is_empty());
}

#[test]
fn kg_psi_face_points() {
    let p = kg();
    let cfg = SearchConfig::default();
    let clouds = all_clouds(&p, &cfg).unwrap();
    assert!(clouds[0].points.is_empty());
    assert!(clouds[2].points.is_empty());
    let psi = &clouds[1];
    assert_eq!(psi.points.len(), 2);
    for lp in &psi.lagrangian {
        assert!((lp.x[0] - lp.source.theta[0]).abs() < 1e-12);
        assert_eq!(lp.xi[0], lp.source.theta[0]);
        assert_eq!(lp.frame.as_ref().unwrap().len(), 0);
    }
    let rep = nondegeneracy_check(&p, Face::Psi, &[1.0], &[1.0]).unwrap();
    assert_eq!(rep.rank, 1);
    let neat = neatness_report(&p, &clouds, &cfg).unwrap();
    assert!(neat.consistent);
    let data = LagrangianData::from_clouds(1, &clouds);
    assert!(lagrangian_validate(&data, 1e-8, Some(&neat)).unwrap().verdict);
    assert!(euler_check(&p, 50, 0).unwrap() < 1e-9);
}

#[test]
fn order_zero_remainder_is_absorbed() {
    let cfg = AdmissibilityConfig::default();
    let p = phase(
        "dot(x,t) - jb(t) + 0.5*x1/jb(x)",
        ["dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)"],
        1,
        1,
    );
    let r = absorption_check(&p, &cfg).unwrap();
    assert!(r.remainder_order_zero && r.principal_admissible && r.original_admissible && r.consistent, "{r:?}");
    let bad = phase("x1*t1", ["x1*t1"; 3], 2, 1);
    let r = absorption_check(&bad, &cfg).unwrap();
    assert!(r.consistent && !r.principal_admissible && !r.original_admissible, "{r:?}");
}

#[test]
fn stationary_points_are_polished_and_stay_on_their_face() {
    let cfg = SearchConfig::default();
    for p in [fourier(1), fourier(2), kg()] {
        for c in all_clouds(&p, &cfg).unwrap() {
            for (sp, lp) in c.points.iter().zip(&c.lagrangian) {
                // Independent re-evaluation of the face gradient.
                let comp = p.component(sp.face).unwrap();
                let g = comp.eval_jet(&sp.x, &sp.theta, 1).unwrap().grad_t();
                assert!(g.iter().all(|v| v.abs() <= 1e-9), "{sp:?}");
                assert_eq!(lp.face, sp.face);
                // The complementary gradient does not vanish on C.
                let sys = face_system(&p, sp.face, &sp.x, &sp.theta).unwrap();
                assert!(sys.grad_x.iter().map(|v| v * v).sum::<f64>() > 1e-12);
            }
        }
    }
}

#[test]
fn cone_representatives_give_the_same_cloud() {
    // Λ^ψ of the Fourier phase found from unit θ seeds; rescaling θ keeps
    // every point stationary.
    let p = fourier(2);
    let c = face_cloud(&p, Face::Psi, &SearchConfig::default()).unwrap();
    for sp in &c.points {
        for mu in [0.5, 3.0] {
            let t: Vec<f64> = sp.theta.iter().map(|v| v * mu).collect();
            let g = p.component(Face::Psi).unwrap().eval_jet(&sp.x, &t, 1).unwrap().grad_t();
            assert!(g.iter().all(|v| v.abs() <= 1e-9));
        }
    }
}
