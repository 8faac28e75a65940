use sphlab::corpus::indicator_pairs;
use sphlab::dyadic::{build_sparse_collection, certify_sparsity, BuildParams, DensitySet, DyadicCube, SparseCollection, SparseCube};
use sphlab::extremals::annulus_pair;
use sphlab::forms::{
    domination_experiment, evaluate_form, form_lp_bound_check, maximal_pairing, one_form_reduction_check,
    DominationOperator, DominationOptions,
};
use sphlab::grid::{GridFunction, GridSpec, Idx};
use sphlab::operators::{lacunary_maximal_at, AverageOptions};
use sphlab::Error;

fn geometric_average(f: &GridFunction, q: &DyadicCube, p: f64) -> f64 {
    let spec = f.spec();
    let d = spec.dim();
    let mut sum = 0.0;
    spec.domain().for_each(|i| {
        let x = spec.center_of(&i);
        if (0..d).all(|a| x[a] >= q.lower(a) && x[a] < q.lower(a) + q.side()) {
            sum += f.get(&i).abs().powf(p);
        }
    });
    (sum * spec.cell_volume() / q.volume(d)).powf(1.0 / p)
}

#[test]
fn form_terms_match_direct_averages() {
    let spec = GridSpec::new(2, 32, 2.0).unwrap();
    let root = DyadicCube::containing_cell(&spec, 5, 1, &[16, 16, 0]).unwrap();
    let window = root.cells(&spec).unwrap().intersect(&spec.domain());
    for (f, g) in indicator_pairs(spec, &window, 6, 4) {
        let sc = build_sparse_collection(&f, &g, &root, &BuildParams::new(2, 1.5, 1.2, spec.resolution_level())).unwrap();
        let form = evaluate_form(&sc, &f, &g, 1.5, 1.2, false).unwrap();
        let mut total = 0.0;
        for (c, t) in &form.per_cube_terms {
            let want = c.volume(2) * geometric_average(&f, c, 1.5) * geometric_average(&g, c, 1.2);
            assert!((t - want).abs() <= 1e-12 * want.max(1e-300));
            total += want;
        }
        assert!((form.value - total).abs() <= 1e-12 * total.max(1e-300));
        assert_eq!(evaluate_form(&sc, &f, &g, 1.5, 1.2, true).unwrap_err(), Error::MissingMSets);
    }
}

#[test]
fn m_set_form_never_exceeds_the_plain_form() {
    let spec = GridSpec::new(2, 16, 1.0).unwrap();
    let q = DyadicCube::new(0, -1, [0, 0, 0]);
    let cells = q.cells(&spec).unwrap();
    let mut m = Vec::new();
    cells.for_each(|i| {
        if i[0] % 2 == 0 {
            m.push(spec.flat(&i).unwrap() as u32)
        }
    });
    let mut sc = SparseCollection::new(spec);
    sc.cubes.push(SparseCube { cube: q, density: DensitySet::Minus { removed: vec![] }, m_set: Some(m) });
    let one = GridFunction::constant(spec, 1.0);
    let plain = evaluate_form(&sc, &one, &one, 1.0, 2.0, false).unwrap().value;
    let with_m = evaluate_form(&sc, &one, &one, 1.0, 2.0, true).unwrap().value;
    assert!((plain - q.volume(2)).abs() < 1e-14);
    assert!((with_m - q.volume(2) * 0.5f64.sqrt()).abs() < 1e-14);
}

#[test]
fn domination_on_the_annulus() {
    let spec = GridSpec::new(2, 256, 2.0).unwrap();
    let (f, g) = annulus_pair(spec, 0.125, 0.5).unwrap();
    let op = DominationOperator::Lacunary { j_range: (-2, 0) };
    let opts = DominationOptions::default();
    let dom = domination_experiment(&f, &g, &op, 2.0, 1.0 / 0.7, &opts).unwrap();
    assert_eq!(dom.collections.len(), 9);
    assert!(dom.c_emp > 0.0 && dom.c_emp.is_finite());
    for sc in &dom.collections {
        assert!(sc.has_m_sets());
        assert!(certify_sparsity(sc, 0.25).unwrap().sparse);
    }
    // m-sets of one grid partition the support of g
    let g_cells = g.values().iter().filter(|v| **v != 0.0).count();
    for sc in &dom.collections {
        assert_eq!(sc.cubes.iter().map(|c| c.m_set.as_ref().unwrap().len()).sum::<usize>(), g_cells);
    }
    // pairing against an independent lacunary evaluation
    let targets: Vec<Idx> = (0..spec.len()).filter(|&k| g.values()[k] != 0.0).map(|k| spec.unflat(k)).collect();
    let m = lacunary_maximal_at(&f, (-2, 0), &targets, &AverageOptions::quadrature()).unwrap();
    let want: f64 = m.iter().sum::<f64>() * spec.cell_volume();
    assert!((dom.pairing - want).abs() < 0.05 * want, "{} vs {want}", dom.pairing);
    let again = maximal_pairing(&f, &g, &op, &AverageOptions::quadrature()).unwrap();
    assert_eq!(again.value, dom.pairing);
}

#[test]
fn domination_rejects_exponents_outside_the_region() {
    let spec = GridSpec::new(2, 128, 2.0).unwrap();
    let (f, g) = annulus_pair(spec, 0.125, 0.5).unwrap();
    let op = DominationOperator::Lacunary { j_range: (-2, 0) };
    let err = domination_experiment(&f, &g, &op, 1.25, 1.25, &DominationOptions::default()).unwrap_err();
    assert_eq!(err, Error::OutsideRegion);
    let open = DominationOptions { check_region: false, ..DominationOptions::default() };
    assert!(domination_experiment(&f, &g, &op, 1.25, 1.25, &open).is_ok());
    assert!(matches!(domination_experiment(&f, &g, &op, 0.5, 2.0, &open), Err(Error::InvalidExponent(_))));
}

#[test]
fn sparse_forms_are_bounded_on_lp() {
    let spec = GridSpec::new(2, 32, 2.0).unwrap();
    let root = DyadicCube::containing_cell(&spec, 0, 1, &[16, 16, 0]).unwrap();
    let window = root.cells(&spec).unwrap().intersect(&spec.domain());
    let corpus = indicator_pairs(spec, &window, 10, 9);
    let (f, g) = &corpus[0];
    let sc = build_sparse_collection(f, g, &root, &BuildParams::new(2, 1.0, 1.0, spec.resolution_level())).unwrap();
    let ratio = form_lp_bound_check(&sc, 1.0, 1.0, 2.0, &corpus).unwrap();
    // Σ|S| ≤ 2|Q0| and Hölder on each cube give a bound of 2 times the maximal-function norms
    assert!(ratio > 0.0 && ratio < 20.0, "{ratio}");
    assert!(form_lp_bound_check(&sc, 2.0, 1.0, 2.0, &corpus).is_err());
}

#[test]
fn reduction_produces_one_sparse_collection() {
    let spec = GridSpec::new(2, 128, 2.0).unwrap();
    let (f, g) = annulus_pair(spec, 0.125, 0.5).unwrap();
    let op = DominationOperator::Lacunary { j_range: (-2, 0) };
    let dom = domination_experiment(&f, &g, &op, 5.0 / 3.0, 5.0 / 3.0, &DominationOptions::default()).unwrap();
    let red = one_form_reduction_check(&dom.forms).unwrap();
    assert!(certify_sparsity(&red.collection, 0.25).unwrap().sparse);
    assert!(red.c_max <= red.c_sum);
    assert!(red.c_max.is_finite() && red.c_max > 0.0);
    assert_eq!(red.form.per_cube_terms.len(), red.collection.len());
}
