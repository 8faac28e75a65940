//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL`
//! line with the measured numbers before asserting.


use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_rational::Rational64 as Q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphlab::corpus::{indicator_pairs, octave_balanced};
use sphlab::dyadic::{
    build_sparse_collection, carleson_embedding_check, certify_sparsity, cz_decompose, BuildParams, DensitySet,
    DyadicCube,
};
use sphlab::extremals::{
    annulus_fields, boundary_locator, delta_sweep, knapp_fields, stein_function, BoundaryPoint, Example, ExponentFit,
    ANNULUS_C, KNAPP_C,
};
use sphlab::forms::{maximal_pairing, DominationOperator};
use sphlab::fourier::{continuity_symbol_norm, radial_derivative_bound, sphere_symbol, symbol_decay_profile};
use sphlab::grid::{lp_norm, Field, GridFunction, GridSpec};
use sphlab::operators::{average_at, AverageOptions, RadiusNet};
use sphlab::regions::{full_vertices, knapp_form, phi_curve, region, Curve, RegionKind};
use sphlab::weights::{probe_table, refinement_chain, CorpusItem, ProbeConfig, ProbeOperator, Verdict, WeightSpec};

fn verdict(id: u32, ok: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id}: {detail}");
}

fn log_fit(samples: &[(f64, f64)]) -> ExponentFit {
    ExponentFit::fit(samples).expect("positive samples")
}

#[test]
fn criterion_01_annulus_rate() {
    let t0 = Instant::now();
    let spec = GridSpec::new(2, 1024, 2.0).unwrap();
    let opts = AverageOptions::quadrature();
    let mut samples = Vec::new();
    for delta in delta_sweep(3, 6, 1) {
        let (f, g) = annulus_fields(spec, delta, ANNULUS_C).unwrap();
        let mut targets = Vec::new();
        g.support().for_each(|i| {
            if g.at(&i) != 0.0 {
                targets.push(i)
            }
        });
        let a = average_at(&f, 1.0, &targets, &opts).unwrap();
        samples.push((delta, a.iter().sum::<f64>() * spec.cell_volume()));
    }
    let fit = log_fit(&samples);
    let elapsed = t0.elapsed();
    let ok = (fit.slope - 2.0).abs() <= 0.15 && fit.max_residual < 0.1 && elapsed < Duration::from_secs(120);
    verdict(1, ok, format!("slope {:.4} residual {:.4} time {:.1?}", fit.slope, fit.max_residual, elapsed));
}

/// `⟨M f, g⟩` for the Knapp pair, full operator over `[1, 2]`.
fn knapp_pairing(spec: GridSpec, delta: f64, opts: &AverageOptions) -> f64 {
    let (f, g) = knapp_fields(spec, delta, KNAPP_C).unwrap();
    let op = DominationOperator::Full { net: RadiusNet::for_grid(&spec, 1.0, 2.0).unwrap() };
    maximal_pairing(&f, &g, &op, opts).unwrap().value
}

#[test]
fn criterion_02_knapp_rate() {
    let t0 = Instant::now();
    let opts = AverageOptions::quadrature();
    let spec2 = GridSpec::new(2, 1024, 2.0).unwrap();
    let s2: Vec<_> = delta_sweep(4, 8, 1).into_iter().map(|d| (d, knapp_pairing(spec2, d, &opts))).collect();
    let fit2 = log_fit(&s2);
    // half-octave steps: at N = 128 only two whole octaves resolve both rectangles
    let spec3 = GridSpec::new(3, 128, 2.0).unwrap();
    let mut opts3 = AverageOptions::quadrature();
    opts3.node_gap = 1.0;
    let s3: Vec<_> = delta_sweep(7, 12, 2).into_iter().map(|d| (d, knapp_pairing(spec3, d, &opts3))).collect();
    let fit3 = log_fit(&s3);
    let elapsed = t0.elapsed();
    let ok = (fit2.slope - 1.0).abs() <= 0.2
        && (fit3.slope - 2.0).abs() <= 0.3
        && fit2.max_residual < 0.1
        && fit3.max_residual < 0.1
        && elapsed < Duration::from_secs(600);
    verdict(
        2,
        ok,
        format!(
            "n=2 slope {:.4} residual {:.4}; n=3 slope {:.4} residual {:.4}; time {:.1?}",
            fit2.slope, fit2.max_residual, fit3.slope, fit3.max_residual, elapsed
        ),
    );
}

/// Annulus sweeps shared by criteria 3 and 5: three interior points of the
/// lacunary region followed by `(0.8, 0.8)`.
fn annulus_sweeps() -> &'static [BoundaryPoint] {
    static CELL: OnceLock<Vec<BoundaryPoint>> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = GridSpec::new(2, 2048, 2.0).unwrap();
        let deltas = delta_sweep(3, 7, 1);
        let opts = AverageOptions::quadrature();
        [(0.5, 0.7), (0.6, 0.6), (0.7, 0.55), (0.8, 0.8)]
            .iter()
            .map(|&(x, y)| {
                boundary_locator(Example::Annulus, spec, &deltas, &[1.0 / x], &[1.0 / y], ANNULUS_C, &opts).unwrap().remove(0)
            })
            .collect()
    })
}

#[test]
fn criterion_03_sharpness_boundary() {
    let pts = annulus_sweeps();
    let outside = &pts[3];
    let interior = &pts[0];
    let ok = (outside.eps - 0.4).abs() <= 0.1 && interior.eps <= 0.05;
    verdict(
        3,
        ok,
        format!(
            "eps(0.8,0.8) {:.4} (predicted {}), eps({},{}) {:.4}",
            outside.eps, outside.predicted, interior.x, interior.y, interior.eps
        ),
    );
}

#[test]
fn criterion_04_sparse_construction() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut failures = Vec::new();
    let mut nodes = 0usize;
    let mut worst_cz = 0.0f64;
    let center = [32, 32, 0];
    let roots: Vec<DyadicCube> = (0..9).map(|s| DyadicCube::containing_cell(&spec, s, 1, &center).unwrap()).collect();
    // one window common to every root so the corpus is generated once
    let window = roots.iter().fold(spec.domain(), |w, q| w.intersect(&q.cells(&spec).unwrap()));
    for (k, (f, g)) in indicator_pairs(spec, &window, 50, 4).into_iter().enumerate() {
        let root = roots[k % 9];
        let r = rng.gen_range(1.0..2.5);
        let s = rng.gen_range(1.0..2.5);
        let sc = build_sparse_collection(&f, &g, &root, &BuildParams::new(2, r, s, spec.resolution_level())).unwrap();
        if !certify_sparsity(&sc, 0.25).unwrap().sparse {
            failures.push(format!("pair {k}: not 1/4-sparse"));
        }
        for c in &sc.cubes {
            nodes += 1;
            let DensitySet::Minus { removed } = &c.density else {
                failures.push(format!("pair {k}: unexpected density set"));
                continue;
            };
            let measure: f64 = removed.iter().map(|p| p.volume(2)).sum();
            if !(measure < 0.5 * c.cube.volume(2)) {
                failures.push(format!("pair {k}: children cover {measure} of {}", c.cube.volume(2)));
            }
        }
        let DensitySet::Minus { removed } = &sc.cubes[0].density else { unreachable!() };
        let cz = cz_decompose(&f, &root, removed).unwrap();
        // absolute error when f vanishes on the root
        let scale = lp_norm(&f, 2.0, None).unwrap().max(f64::MIN_POSITIVE);
        let err = lp_norm(&cz.reconstruct().sub(&f).unwrap(), 2.0, None).unwrap() / scale;
        worst_cz = worst_cz.max(err);
        if !(err < 1e-10) {
            failures.push(format!("pair {k}: CZ error {err:e}"));
        }
    }
    verdict(4, failures.is_empty(), format!("{nodes} nodes, worst CZ error {worst_cz:.2e}, failures {failures:?}"));
}

#[test]
fn criterion_05_domination_stability() {
    let spread = |p: &BoundaryPoint| {
        let v: Vec<f64> = p.samples.iter().map(|s| s.1).collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for p in &annulus_sweeps()[..3] {
        let r = spread(p);
        ok &= p.samples.len() == 5 && r < 10.0;
        lines.push(format!("annulus ({},{}) spread {r:.2}", p.x, p.y));
    }
    let spec = GridSpec::new(2, 1024, 2.0).unwrap();
    let deltas = delta_sweep(4, 8, 1);
    let opts = AverageOptions::quadrature();
    for (x, y) in [(0.4, 0.7), (0.3, 0.8), (0.45, 0.6)] {
        let p = boundary_locator(Example::Knapp, spec, &deltas, &[1.0 / x], &[1.0 / y], KNAPP_C, &opts).unwrap().remove(0);
        let r = spread(&p);
        ok &= p.samples.len() == 5 && r < 10.0;
        lines.push(format!("knapp ({x},{y}) spread {r:.2}"));
    }
    verdict(5, ok, lines.join("; "));
}

#[test]
fn criterion_06_fourier() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x_max = GridSpec::new(2, 1024, 2.0).unwrap().nyquist();
    let mut symbol_err = 0.0f64;
    for _ in 0..100 {
        let x = rng.gen_range(0.0..x_max);
        symbol_err = symbol_err.max((sphere_symbol(2, x).unwrap() - oracle::bessel_j0(x)).abs());
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        symbol_err = symbol_err.max((sphere_symbol(3, x).unwrap() - sinc).abs());
    }
    let spec3 = GridSpec::new(3, 64, 1.0).unwrap();
    let decay_err = symbol_decay_profile(&spec3, 100.0, 0.125)
        .unwrap()
        .iter()
        .map(|(r, v)| (v - r.sin().abs()).abs())
        .fold(0.0, f64::max);
    let spec2 = GridSpec::new(2, 1024, 1.0).unwrap();
    let points: Vec<(f64, f64)> = (2..=8)
        .map(|k| {
            let y = 2f64.powi(-k);
            (y.ln(), continuity_symbol_norm(&spec2, &[y, 0.0]).unwrap().ln())
        })
        .collect();
    let (slope, residual) = oracle::slope(&points);
    let a = symbol_err < 1e-8;
    let b = decay_err < 1e-10;
    let c = (slope - 1.0 / 3.0).abs() <= 0.05;
    verdict(
        6,
        a && b && c,
        format!(
            "symbol error {symbol_err:.2e} ({}), n=3 decay error {decay_err:.2e} ({}), continuity slope {slope:.4} residual {residual:.4} ({})",
            if a { "ok" } else { "bad" },
            if b { "ok" } else { "bad" },
            if c { "ok" } else { "bad" }
        ),
    );
}

#[test]
fn criterion_07_littlewood_paley() {
    let bounds = |d: usize, n: usize| -> Vec<f64> {
        let f = octave_balanced(GridSpec::new(d, n, 2.0).unwrap(), 1);
        (1..=5u32)
            .map(|j| {
                let step = 2f64.powi(-(j as i32) - 4);
                let t: Vec<f64> = (0..=(1.0 / step) as usize).map(|i| 1.0 + i as f64 * step).collect();
                radial_derivative_bound(&f, j, &t).unwrap()
            })
            .collect()
    };
    let b2 = bounds(2, 128);
    let points: Vec<(f64, f64)> = b2.iter().enumerate().map(|(k, v)| ((k + 1) as f64, v.log2())).collect();
    let (slope, _) = oracle::slope(&points);
    let b3 = bounds(3, 64);
    let spread = b3.iter().cloned().fold(0.0, f64::max) / b3.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = (slope - 0.5).abs() <= 0.15 && spread < 2.0;
    verdict(7, ok, format!("n=2 slope {slope:.4}, n=3 spread {spread:.3}"));
}

#[test]
fn criterion_08_carleson() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let center = [32, 32, 0];
    let one = GridFunction::constant(spec, 1.0);
    let mut worst = 0.0f64;
    let mut worst_one = 0.0f64;
    let mut trials = 0;
    for batch in 0..10u64 {
        let root = DyadicCube::containing_cell(&spec, rng.gen_range(0..9), 1, &center).unwrap();
        let window = root.cells(&spec).unwrap().intersect(&spec.domain());
        for (f, g) in indicator_pairs(spec, &window, 10, 100 + batch) {
            let (r, s) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0));
            let sc = build_sparse_collection(&f, &g, &root, &BuildParams::new(2, r, s, spec.resolution_level())).unwrap();
            // φ: random nonnegative values, sometimes cut down to a random ball
            let (cx, cy, rad) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.5));
            let localize = rng.gen_bool(0.5);
            let values = (0..spec.len())
                .map(|k| {
                    let x = spec.center_of(&spec.unflat(k));
                    let v: f64 = rng.gen_range(0.0..1.0f64).powi(3);
                    if localize && (x[0] - cx).hypot(x[1] - cy) > rad {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            let phi = GridFunction::from_values(spec, values).unwrap();
            worst = worst.max(carleson_embedding_check(&sc, &phi, 1.0, 2.0).unwrap());
            worst_one = worst_one.max(carleson_embedding_check(&sc, &one, 1.0, 2.0).unwrap());
            trials += 1;
        }
    }
    let ok = trials == 100 && worst <= 8.0 && worst_one <= 4.0;
    verdict(8, ok, format!("{trials} trials, worst ratio {worst:.4}, worst φ≡1 ratio {worst_one:.4}"));
}

#[test]
fn criterion_09_weights() {
    let base = GridSpec::new(2, 64, 2.0).unwrap();
    let cfg = ProbeConfig {
        grids: refinement_chain(base, 2).unwrap(),
        averages: AverageOptions::quadrature(),
        t_max: 1.0,
        factor: 2.0,
    };
    let corpus = vec![CorpusItem::point_mass(), CorpusItem::ball(0.25)];
    // (a, p, stable?) from the sign of the admissible range at n = 2
    let cases = [
        (ProbeOperator::Full, [(0.0, 4.0, true), (0.5, 5.0, true), (-0.5, 3.0, true), (3.0, 2.0, false), (5.0, 3.0, false), (3.0, 1.5, false)]),
        (ProbeOperator::Lacunary, [(0.0, 2.0, true), (0.5, 3.0, true), (-0.5, 2.0, true), (4.0, 2.0, false), (6.0, 3.0, false), (3.0, 1.5, false)]),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (op, list) in cases {
        let specs: Vec<(WeightSpec, f64)> = list.iter().map(|&(a, p, _)| (WeightSpec::Power { a }, p)).collect();
        let reports = probe_table(op, &specs, &corpus, &cfg).unwrap();
        for (rep, &(a, p, stable)) in reports.iter().zip(&list) {
            let want = if stable { Verdict::Stable } else { Verdict::Divergent };
            if rep.verdict != want {
                ok = false;
                lines.push(format!("{} a={a} p={p}: {} (want {})", op.name(), rep.verdict.name(), want.name()));
            }
        }
    }
    let stein = vec![CorpusItem::new("stein", |s| Ok(stein_function(s)))];
    let reports = probe_table(ProbeOperator::Full, &[(WeightSpec::Unit, 2.0), (WeightSpec::Unit, 4.0)], &stein, &cfg).unwrap();
    let (low, high) = (&reports[0], &reports[1]);
    ok &= low.verdict == Verdict::Divergent && high.verdict == Verdict::Stable;
    lines.push(format!(
        "stein p=2 {} {:?}, p=4 {} {:?}",
        low.verdict.name(),
        low.maxima,
        high.verdict.name(),
        high.maxima
    ));
    verdict(9, ok, lines.join("; "));
}

#[test]
fn criterion_10_regions() {
    let q = |a: i64, b: i64| Q::new(a, b);
    let sorted = |mut v: Vec<(Q, Q)>| {
        v.sort();
        v
    };
    let mut ok = true;
    for n in [2usize, 3] {
        let m = n as i64;
        let lac = vec![(q(0, 1), q(1, 1)), (q(1, 1), q(0, 1)), (q(m, m + 1), q(m, m + 1))];
        let p1 = (q(0, 1), q(1, 1));
        let p2 = (q(m - 1, m), q(1, m));
        let p3 = (q(m - 1, m), q(m - 1, m));
        let p4 = (q(m * m - m, m * m + 1), q(m * m - m + 2, m * m + 1));
        let full = vec![p1, p2, p3, p4];
        let dual = |v: &[(Q, Q)]| v.iter().map(|&(x, y)| (x, q(1, 1) - y)).collect::<Vec<_>>();
        ok &= sorted(region(n, RegionKind::Lac).unwrap().vertices) == sorted(lac.clone());
        ok &= sorted(region(n, RegionKind::Full).unwrap().vertices) == sorted(full.clone());
        ok &= sorted(region(n, RegionKind::LacDual).unwrap().vertices) == sorted(dual(&lac));
        ok &= sorted(region(n, RegionKind::FullDual).unwrap().vertices) == sorted(dual(&full));
        ok &= full_vertices(n).unwrap() == [p1, p2, p3, p4];
        // both lacunary branches meet at n/(n+1); P₃, P₄ lie on the Knapp line
        let b = q(m, m + 1);
        ok &= phi_curve(n, Curve::Lac, b).unwrap() == b;
        ok &= phi_curve(n, Curve::Lac, q(0, 1)).unwrap() == q(1, 1);
        ok &= phi_curve(n, Curve::Lac, q(1, 1)).unwrap() == q(0, 1);
        ok &= knapp_form(n, p3) == q(0, 1) && knapp_form(n, p4) == q(0, 1);
        // φ_full: P₁, P₄, P₃ and collinearity on each piece
        let area = |a: (Q, Q), b: (Q, Q), c: (Q, Q)| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        for p in [p1, p4, p3] {
            ok &= phi_curve(n, Curve::Full, p.0).unwrap() == p.1;
        }
        for k in 0..=10 {
            let x1 = p4.0 * q(k, 10);
            ok &= area(p1, p4, (x1, phi_curve(n, Curve::Full, x1).unwrap())) == q(0, 1);
            let x2 = p4.0 + (p3.0 - p4.0) * q(k, 10);
            ok &= area(p4, p3, (x2, phi_curve(n, Curve::Full, x2).unwrap())) == q(0, 1);
            let x3 = p3.0 * q(k, 10);
            ok &= area(p1, p3, (x3, phi_curve(n, Curve::Psi, x3).unwrap())) == q(0, 1);
        }
        // P₄ is a genuine breakpoint of φ_full
        ok &= area(p1, p4, p3) != q(0, 1);
        ok &= (p2 == p3) == (n == 2);
    }
    verdict(10, ok, "vertex and curve identities for n = 2, 3".into());
}
