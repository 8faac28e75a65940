use num_rational::Rational64 as Q;
use sphlab::regions::{
    annulus_excess, full_vertices, knapp_excess, knapp_form, phi_curve, region, Curve, RegionDocument, RegionKind,
};

fn q(a: i64, b: i64) -> Q {
    Q::new(a, b)
}

/// Intersection of `a1 x + b1 y = c1` and `a2 x + b2 y = c2` by Cramer's rule.
fn meet(l1: (i64, i64, i64), l2: (i64, i64, i64)) -> (Q, Q) {
    let det = l1.0 * l2.1 - l1.1 * l2.0;
    (q(l1.2 * l2.1 - l1.1 * l2.2, det), q(l1.0 * l2.2 - l1.2 * l2.0, det))
}

fn sorted(mut v: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    v.sort();
    v
}

#[test]
fn vertices_are_intersections_of_the_bounding_lines() {
    for n in [2i64, 3] {
        let nu = n as usize;
        let annulus_a = (1, n, n); // x + n y = n
        let annulus_b = (n, 1, n); // n x + y = n
        let knapp = (n + 1, n - 1, 2 * (n - 1));
        let vertical = (n, 0, n - 1); // x = (n-1)/n
        let diagonal = (1, -1, 0);
        let lac = region(nu, RegionKind::Lac).unwrap();
        assert_eq!(sorted(lac.vertices.clone()), sorted(vec![(q(0, 1), q(1, 1)), (q(1, 1), q(0, 1)), meet(annulus_a, annulus_b)]));
        let [p1, p2, p3, p4] = full_vertices(nu).unwrap();
        assert_eq!(p1, meet(annulus_a, (1, 0, 0)));
        assert_eq!(p4, meet(annulus_a, knapp));
        assert_eq!(p3, meet(knapp, diagonal));
        assert_eq!(p3, meet(vertical, diagonal));
        assert_eq!(p2, meet(vertical, (1, 1, 1)));
        let full = region(nu, RegionKind::Full).unwrap();
        // P₂ and P₃ coincide when n = 2
        assert_eq!(full.hull().len(), if n == 2 { 3 } else { 4 });
    }
}

#[test]
fn duals_reflect_vertically() {
    for n in [2, 3] {
        for kind in [RegionKind::Lac, RegionKind::Full] {
            let r = region(n, kind).unwrap();
            let d = region(n, kind.dual()).unwrap();
            assert_eq!(sorted(r.dual().vertices), sorted(d.vertices.clone()));
            assert_eq!(r.dual().dual(), r);
        }
    }
}

#[test]
fn membership() {
    let lac = region(2, RegionKind::Lac).unwrap();
    let full = region(2, RegionKind::Full).unwrap();
    for p in [(q(1, 2), q(7, 10)), (q(3, 5), q(3, 5)), (q(7, 10), q(11, 20))] {
        assert!(lac.contains(p, true), "{p:?}");
    }
    assert!(!lac.contains((q(4, 5), q(4, 5)), false));
    assert!(lac.contains((q(2, 3), q(2, 3)), false));
    assert!(!lac.contains((q(2, 3), q(2, 3)), true));
    for p in [(q(2, 5), q(7, 10)), (q(3, 10), q(4, 5)), (q(9, 20), q(3, 5))] {
        assert!(full.contains(p, true), "{p:?}");
        assert!(full.contains_f64((*p.0.numer() as f64 / *p.0.denom() as f64, *p.1.numer() as f64 / *p.1.denom() as f64), true));
    }
    // the full region sits inside the lacunary one
    for n in [2, 3] {
        let lac = region(n, RegionKind::Lac).unwrap();
        for v in region(n, RegionKind::Full).unwrap().vertices {
            assert!(lac.contains(v, false));
        }
    }
}

#[test]
fn curves_pass_through_vertices() {
    for n in [2usize, 3] {
        let m = n as i64;
        let [p1, _, p3, p4] = full_vertices(n).unwrap();
        assert_eq!(phi_curve(n, Curve::Full, p1.0).unwrap(), p1.1);
        assert_eq!(phi_curve(n, Curve::Full, p4.0).unwrap(), p4.1);
        assert_eq!(phi_curve(n, Curve::Full, p3.0).unwrap(), p3.1);
        assert_eq!(phi_curve(n, Curve::Psi, p1.0).unwrap(), p1.1);
        assert_eq!(phi_curve(n, Curve::Psi, p3.0).unwrap(), p3.1);
        let b = q(m, m + 1);
        assert_eq!(phi_curve(n, Curve::Lac, b).unwrap(), b);
        assert_eq!(phi_curve(n, Curve::Lac, q(1, 1)).unwrap(), q(0, 1));
        assert!(phi_curve(n, Curve::Psi, q(1, 1)).is_err());
        // P4 lies on the lacunary curve; ψ stays below the full curve
        assert_eq!(phi_curve(n, Curve::Lac, p4.0).unwrap(), p4.1);
        for k in 0..=20 {
            let x = q(k * (m - 1), 20 * m);
            assert!(phi_curve(n, Curve::Psi, x).unwrap() <= phi_curve(n, Curve::Full, x).unwrap());
            assert!(phi_curve(n, Curve::Full, x).unwrap() <= phi_curve(n, Curve::Lac, x).unwrap());
        }
    }
}

#[test]
fn excess_functions_vanish_on_edges() {
    for n in [2usize, 3] {
        let [_, _, p3, p4] = full_vertices(n).unwrap();
        assert_eq!(knapp_form(n, p3), q(0, 1));
        assert_eq!(knapp_form(n, p4), q(0, 1));
        let f = |v: Q| *v.numer() as f64 / *v.denom() as f64;
        assert!(knapp_excess(n, f(p4.0), f(p4.1)).abs() < 1e-12);
        assert!(annulus_excess(n, 0.0, 1.0).abs() < 1e-12);
        assert!(annulus_excess(n, 1.0, 0.0).abs() < 1e-12);
    }
    assert!((annulus_excess(2, 0.8, 0.8) - 0.4).abs() < 1e-12);
}

#[test]
fn document_round_trip() {
    for n in [2, 3] {
        for kind in RegionKind::ALL {
            let r = region(n, kind).unwrap();
            let doc = r.document();
            let text = serde_json::to_string(&doc).unwrap();
            let back: RegionDocument = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_region().unwrap(), r);
        }
    }
    assert!(region(4, RegionKind::Lac).is_err());
    assert!("nope".parse::<RegionKind>().is_err());
}
