use sphlab::extremals::{
    annulus_fields, annulus_pair, boundary_locator, continuity_sharpness_experiment, delta_sweep, knapp_fields,
    stein_function, stein_norm, Example, ExponentFit,
};
use sphlab::grid::GridSpec;
use sphlab::operators::{average_at, AverageOptions};
use sphlab::Error;

#[test]
fn fit_recovers_exact_power_laws() {
    let samples: Vec<(f64, f64)> = delta_sweep(2, 7, 1).iter().map(|&d| (d, 3.0 * d.powf(-1.5))).collect();
    let fit = ExponentFit::fit(&samples).unwrap();
    assert!((fit.slope + 1.5).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(fit.max_residual < 1e-12);
    assert_eq!(ExponentFit::fit(&samples[..3]).unwrap_err(), Error::TooFewSamples { needed: 4 });
    assert!(ExponentFit::fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
}

#[test]
fn sweeps() {
    assert_eq!(delta_sweep(3, 5, 1), vec![0.125, 0.0625, 0.03125]);
    let half = delta_sweep(7, 12, 2);
    assert_eq!(half.len(), 6);
    assert!((half[0] - 2f64.powf(-3.5)).abs() < 1e-15);
    assert_eq!(half[5], 1.0 / 64.0);
}

#[test]
fn example_preconditions() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    assert!(matches!(annulus_fields(spec, 0.1, 0.5), Err(Error::Resolution(_))));
    assert!(annulus_fields(spec, 0.25, 0.5).is_ok());
    assert!(matches!(knapp_fields(spec, 0.01, 4.0), Err(Error::Resolution(_))));
    let small = GridSpec::new(2, 256, 1.0).unwrap();
    assert!(matches!(knapp_fields(small, 1.0 / 16.0, 4.0), Err(Error::Domain(_))));
    let (f, g) = knapp_fields(GridSpec::new(2, 512, 2.0).unwrap(), 1.0 / 64.0, 4.0).unwrap();
    use sphlab::grid::Field;
    assert!(f.support().count() > 0 && g.support().count() > 0);
}

#[test]
fn annulus_pairing_scales_like_delta_squared() {
    // ⟨A₁ f_δ, g_δ⟩ = |B(cδ)| for the exact shell, i.e. π c² δ² in the plane
    let spec = GridSpec::new(2, 1024, 2.0).unwrap();
    for delta in [0.125, 0.0625] {
        let (f, g) = annulus_pair(spec, delta, 0.5).unwrap();
        let targets: Vec<_> = (0..spec.len()).filter(|&k| g.values()[k] != 0.0).map(|k| spec.unflat(k)).collect();
        let a = average_at(&f, 1.0, &targets, &AverageOptions::quadrature()).unwrap();
        let got = a.iter().sum::<f64>() * spec.cell_volume();
        let want = std::f64::consts::PI * 0.25 * delta * delta;
        assert!((got - want).abs() < 0.1 * want, "δ={delta}: {got} vs {want}");
    }
}

#[test]
fn boundary_locator_reports_every_point() {
    let spec = GridSpec::new(2, 512, 2.0).unwrap();
    let deltas = delta_sweep(2, 5, 1);
    let pts = boundary_locator(Example::Annulus, spec, &deltas, &[2.0, 1.25], &[1.0 / 0.7, 1.25], 0.5, &AverageOptions::quadrature())
        .unwrap();
    assert_eq!(pts.len(), 4);
    for p in &pts {
        assert_eq!(p.samples.len(), 4);
        assert!(p.eps.is_finite());
    }
    assert!((pts[0].x - 0.5).abs() < 1e-12 && (pts[0].y - 0.7).abs() < 1e-12);
    assert_eq!(pts[0].predicted, 0.0);
    assert!((pts[3].predicted - 0.4).abs() < 1e-12);
    assert!(pts[3].eps > pts[0].eps + 0.2, "{} vs {}", pts[3].eps, pts[0].eps);
    assert!(boundary_locator(Example::Annulus, spec, &deltas[..3], &[2.0], &[2.0], 0.5, &AverageOptions::quadrature()).is_err());
}

#[test]
fn continuity_experiment_preconditions() {
    let spec = GridSpec::new(2, 512, 4.0).unwrap();
    let opts = AverageOptions::quadrature();
    // the lacunary vertex (2/3, 2/3) is a boundary point, (1/2, 7/10) is interior
    let zero = continuity_sharpness_experiment(spec, (2.0 / 3.0, 2.0 / 3.0), &[0.0, 0.0], 1.0 / 16.0, &opts).unwrap();
    assert_eq!(zero.ratio, 0.0);
    assert!(zero.untranslated > 0.0);
    assert!(matches!(continuity_sharpness_experiment(spec, (0.5, 0.7), &[0.5, 0.0], 1.0 / 16.0, &opts), Err(Error::Domain(_))));
    assert!(matches!(continuity_sharpness_experiment(spec, (2.0 / 3.0, 2.0 / 3.0), &[0.25, 0.0], 1.0 / 16.0, &opts), Err(Error::Domain(_))));
    let moved = continuity_sharpness_experiment(spec, (2.0 / 3.0, 2.0 / 3.0), &[0.5, 0.0], 1.0 / 16.0, &opts).unwrap();
    assert!(moved.ratio > 0.0 && !moved.clipped, "{moved:?}");
}

#[test]
fn stein_function_is_radial_and_supported_in_the_half_ball() {
    let spec = GridSpec::new(2, 64, 1.0).unwrap();
    let h = stein_function(spec);
    assert!(h.values().iter().all(|v| *v >= 0.0));
    assert_eq!(h.get(&[32 + 5, 32, 0]), h.get(&[32, 32 + 5, 0]));
    assert_eq!(h.get(&[32 + 5, 32, 0]), h.get(&[31 - 5, 32, 0]));
    assert_eq!(h.get(&[32 + 20, 32, 0]), 0.0);
    // ‖h‖_1 = 2π ∫_0^{1/2} dr / |ln r| is finite
    let l1 = stein_norm(spec, 1.0).unwrap();
    let mut want = 0.0;
    let m = 200_000;
    for k in 0..m {
        let r = (k as f64 + 0.5) * 0.5 / m as f64;
        want += 0.5 / m as f64 / r.ln().abs();
    }
    want *= std::f64::consts::TAU;
    assert!((l1 - want).abs() < 0.02 * want, "{l1} vs {want}");
}
