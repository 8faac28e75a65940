use sphlab::corpus::{bump, gaussian, indicator_pairs, octave_balanced};
use sphlab::fourier::{frequency_norms, Spectrum};
use sphlab::grid::{GridSpec, IndexBox};

#[test]
fn seeded_pairs_are_reproducible_and_windowed() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let window = IndexBox { lo: [16, 16, 0], hi: [48, 48, 1] };
    let a = indicator_pairs(spec, &window, 12, 7);
    let b = indicator_pairs(spec, &window, 12, 7);
    let c = indicator_pairs(spec, &window, 12, 8);
    assert_eq!(a, b);
    assert_ne!(a, c);
    for (f, g) in &a {
        for h in [f, g] {
            assert!(h.values().iter().all(|&v| v == 0.0 || v == 1.0));
            if let Some(s) = h.support_hint() {
                assert!(window.contains_box(&s));
            }
        }
    }
    assert!(a.iter().filter(|(f, g)| f.support_count() > 0 && g.support_count() > 0).count() >= 10);
}

#[test]
fn octave_balanced_field_has_flat_octave_energy() {
    let spec = GridSpec::new(2, 128, 2.0).unwrap();
    let f = octave_balanced(spec, 3);
    assert!((f.sup_norm() - 1.0).abs() < 1e-12);
    let sp = Spectrum::of(&f);
    let norms = frequency_norms(&spec);
    let mut octave = [0.0f64; 8];
    for (c, &xi) in sp.values().iter().zip(&norms) {
        if xi >= 1.0 {
            let j = xi.log2().floor() as usize;
            if j < 6 {
                octave[j] += c.norm_sqr();
            }
        }
    }
    // the lowest octaves hold few lattice points, so compare the well-sampled ones
    let e: Vec<f64> = octave[2..6].to_vec();
    let (lo, hi) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 2.0, "{octave:?}");
}

#[test]
fn smooth_functions_peak_at_their_centers() {
    let spec = GridSpec::new(3, 16, 1.0).unwrap();
    let g = gaussian(spec, [0.0625, 0.0625, 0.0625], 0.3);
    assert!((g.sup_norm() - 1.0).abs() < 1e-12);
    let b = bump(spec, [0.0; 3], 0.5);
    assert!(b.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert_eq!(b.get(&[0, 0, 0]), 0.0);
}
