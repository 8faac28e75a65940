use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphlab::corpus::indicator_pairs;
use sphlab::dyadic::{
    build_sparse_collection, carleson_embedding_check, certify_sparsity, cz_decompose, grid_count, stopping_children,
    BuildParams, DensitySet, DyadicCube, SparseCollection, SparseCube,
};
use sphlab::grid::{lp_norm, Field, GridFunction, GridSpec, Idx};

/// Float geometry: is the center of `idx` inside `q`?
fn inside(spec: &GridSpec, q: &DyadicCube, idx: &Idx) -> bool {
    let x = spec.center_of(idx);
    (0..spec.dim()).all(|a| x[a] >= q.lower(a) && x[a] < q.lower(a) + q.side())
}

fn in_middle_third(spec: &GridSpec, q: &DyadicCube, idx: &Idx) -> bool {
    let x = spec.center_of(idx);
    let third = q.side() / 3.0;
    (0..spec.dim()).all(|a| x[a] >= q.lower(a) + third && x[a] < q.lower(a) + 2.0 * third)
}

#[test]
fn cells_agree_with_geometry() {
    for spec in [GridSpec::new(2, 32, 2.0).unwrap(), GridSpec::new(3, 8, 1.0).unwrap()] {
        let d = spec.dim();
        for shift in 0..grid_count(d) {
            for level in spec.resolution_level()..=1 {
                spec.domain().for_each(|idx| {
                    let q = DyadicCube::containing_cell(&spec, shift, level, &idx).unwrap();
                    assert!(inside(&spec, &q, &idx));
                    assert!(q.cells(&spec).unwrap().contains(&idx));
                    let x = spec.center_of(&idx);
                    assert_eq!(DyadicCube::containing_point(d, shift, level, &x[..d]), q);
                    assert_eq!(q.middle_third_cells(&spec).unwrap().contains(&idx), in_middle_third(&spec, &q, &idx));
                });
            }
        }
    }
}

#[test]
fn middle_thirds_partition_each_level() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    for level in (spec.resolution_level() + 2)..=2 {
        spec.domain().for_each(|idx| {
            let owners = (0..grid_count(2))
                .filter(|&s| {
                    let q = DyadicCube::containing_cell(&spec, s, level, &idx).unwrap();
                    in_middle_third(&spec, &q, &idx)
                })
                .count();
            assert_eq!(owners, 1, "cell {idx:?} at level {level}");
        });
    }
}

#[test]
fn grids_are_nested() {
    let d = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let q = DyadicCube::new(rng.gen_range(0..27), rng.gen_range(-4..4), [rng.gen_range(-9..9), rng.gen_range(-9..9), rng.gen_range(-9..9)]);
        let kids = q.children(d);
        assert_eq!(kids.len(), 8);
        for k in &kids {
            assert_eq!(k.parent(d), q);
            assert!(q.contains_cube(d, k));
            // geometric containment
            for a in 0..d {
                assert!(k.lower(a) >= q.lower(a) - 1e-12);
                assert!(k.lower(a) + k.side() <= q.lower(a) + q.side() + 1e-12);
            }
        }
        let vol: f64 = kids.iter().map(|k| k.volume(d)).sum();
        assert!((vol - q.volume(d)).abs() < 1e-12);
        assert_eq!(q.ancestor(d, q.level + 3), q.parent(d).parent(d).parent(d));
    }
}

/// Maximal cubes above threshold by exhaustive search with direct sums.
fn brute_stopping(f1: &GridFunction, f2: &GridFunction, q0: &DyadicCube, r: f64, s: f64, c: f64) -> Vec<DyadicCube> {
    let spec = *f1.spec();
    let d = spec.dim();
    let avg = |f: &GridFunction, q: &DyadicCube, p: f64| {
        let mut sum = 0.0;
        spec.domain().for_each(|i| {
            if inside(&spec, q, &i) {
                sum += f.get(&i).abs().powf(p);
            }
        });
        (sum * spec.cell_volume() / q.volume(d)).powf(1.0 / p)
    };
    let t1 = c * avg(f1, q0, r);
    let t2 = c * avg(f2, q0, s);
    let mut out = Vec::new();
    let mut frontier = q0.children(d);
    while let Some(p) = frontier.pop() {
        if avg(f1, &p, r) > t1 || avg(f2, &p, s) > t2 {
            out.push(p);
        } else if p.level > spec.resolution_level() {
            frontier.extend(p.children(d));
        }
    }
    out.sort();
    out
}

#[test]
fn stopping_children_match_exhaustive_search() {
    let spec = GridSpec::new(2, 32, 2.0).unwrap();
    let pairs = indicator_pairs(spec, &spec.domain(), 8, 11);
    for (k, (f, g)) in pairs.iter().enumerate() {
        let q0 = DyadicCube::containing_cell(&spec, (k % 9) as u16, 2, &[16, 16, 0]).unwrap();
        for c in [1.5, 4.0] {
            let got = stopping_children(f, g, &q0, 1.5, 2.0, c).unwrap();
            let restricted_f = f.restrict(&q0.cells(&spec).unwrap());
            let restricted_g = g.restrict(&q0.cells(&spec).unwrap());
            let want = brute_stopping(&restricted_f, &restricted_g, &q0, 1.5, 2.0, c);
            assert_eq!(got, want, "pair {k}, c = {c}");
        }
    }
}

/// Independent overlap/density check with a hash map of cells.
fn brute_certify(sc: &SparseCollection, eta: f64) -> bool {
    let spec = &sc.grid;
    let mut seen: HashMap<Idx, usize> = HashMap::new();
    for (i, c) in sc.cubes.iter().enumerate() {
        let mut count = 0u64;
        let mut ok = true;
        c.density
            .for_each_cell(&c.cube, spec, |idx| {
                ok &= c.cube.cells(spec).unwrap().contains(&idx);
                count += 1;
                if seen.insert(idx, i).is_some() {
                    ok = false;
                }
            })
            .unwrap();
        if !ok || count as f64 <= eta * c.cube.cells(spec).unwrap().count() as f64 {
            return false;
        }
    }
    true
}

#[test]
fn certificate_agrees_with_hash_oracle() {
    let spec = GridSpec::new(2, 32, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut verdicts = [0usize; 2];
    for _ in 0..300 {
        let mut sc = SparseCollection::new(spec);
        let shift = rng.gen_range(0..9);
        for _ in 0..rng.gen_range(1..6) {
            let level = rng.gen_range(-2..=0);
            let q = DyadicCube::containing_cell(&spec, shift, level, &[rng.gen_range(4..28), rng.gen_range(4..28), 0]).unwrap();
            let cells = q.cells(&spec).unwrap();
            let p = rng.gen_range(0.1..1.0);
            let density = DensitySet::mask_from(cells, |_| rng.gen_bool(p));
            sc.cubes.push(SparseCube { cube: q, density, m_set: None });
        }
        let cert = certify_sparsity(&sc, 0.25).unwrap();
        assert_eq!(cert.sparse, brute_certify(&sc, 0.25));
        assert_eq!(cert.sparse, cert.witness.is_none());
        verdicts[cert.sparse as usize] += 1;
    }
    assert!(verdicts[0] > 10 && verdicts[1] > 10, "{verdicts:?}");
}

#[test]
fn built_collections_are_sparse_and_embed() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let root = DyadicCube::containing_cell(&spec, 4, 1, &[32, 32, 0]).unwrap();
    let window = root.cells(&spec).unwrap().intersect(&spec.domain());
    for (f, g) in indicator_pairs(spec, &window, 12, 21) {
        let sc = build_sparse_collection(&f, &g, &root, &BuildParams::new(2, 1.0, 1.5, spec.resolution_level())).unwrap();
        assert!(certify_sparsity(&sc, 0.5).unwrap().sparse);
        let one = GridFunction::constant(spec, 1.0);
        let ratio = carleson_embedding_check(&sc, &one, 1.0, 2.0).unwrap();
        assert!(ratio <= 4.0, "{ratio}");
        // every cube other than the root sits in a strictly larger one
        let d = spec.dim();
        for c in &sc.cubes[1..] {
            assert!(sc.cubes.iter().any(|o| o.cube.level > c.cube.level && o.cube.contains_cube(d, &c.cube)));
        }
        let back = SparseCollection::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }
}

#[test]
fn owner_is_smallest_containing_cube() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let root = DyadicCube::containing_cell(&spec, 0, 1, &[32, 32, 0]).unwrap();
    let window = root.cells(&spec).unwrap().intersect(&spec.domain());
    let (f, g) = indicator_pairs(spec, &window, 3, 8).pop().unwrap();
    let sc = build_sparse_collection(&f, &g, &root, &BuildParams::new(2, 1.0, 1.0, spec.resolution_level())).unwrap();
    let index = sc.index();
    window.for_each(|idx| {
        let q = DyadicCube::containing_cell(&spec, 0, spec.resolution_level(), &idx).unwrap();
        let want = sc
            .cubes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.cube.contains_cube(2, &q))
            .min_by_key(|(_, c)| c.cube.level)
            .map(|(i, _)| i);
        assert_eq!(sc.owner_of(&index, &q, root.level), want);
    });
}

#[test]
fn cz_pieces_have_mean_zero_and_reconstruct() {
    let spec = GridSpec::new(2, 64, 2.0).unwrap();
    let root = DyadicCube::containing_cell(&spec, 2, 1, &[32, 32, 0]).unwrap();
    let window = root.cells(&spec).unwrap().intersect(&spec.domain());
    for (f, g) in indicator_pairs(spec, &window, 6, 2) {
        let bad = stopping_children(&f, &g, &root, 1.0, 1.0, 8.0).unwrap();
        let cz = cz_decompose(&f, &root, &bad).unwrap();
        let err = lp_norm(&cz.reconstruct().sub(&f).unwrap(), 2.0, None).unwrap();
        assert!(err <= 1e-12 * lp_norm(&f, 2.0, None).unwrap().max(1e-300));
        for p in &bad {
            let b = cz.bad_by_level.get(&p.level).unwrap();
            let mut sum = 0.0;
            p.cells(&spec).unwrap().intersect(&spec.domain()).for_each(|i| sum += b.get(&i));
            assert!(sum.abs() < 1e-9);
        }
        // the good part is bounded by 2^n times the stopping threshold times the root average
        assert!(cz.good_sup_ratio <= 8.0 * 4.0 + 1e-9, "{}", cz.good_sup_ratio);
        assert!(g.support().count() > 0);
    }
}

#[test]
fn json_rejects_other_versions() {
    let spec = GridSpec::new(2, 16, 1.0).unwrap();
    let mut sc = SparseCollection::new(spec);
    sc.cubes.push(SparseCube { cube: DyadicCube::new(0, 0, [0, 0, 0]), density: DensitySet::Minus { removed: vec![] }, m_set: None });
    let text = sc.to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
    assert!(SparseCollection::from_json(&text).is_err());
}
