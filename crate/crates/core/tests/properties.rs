use proptest::prelude::*;
use sphlab::dyadic::{grid_count, DyadicCube};
use sphlab::grid::GridSpec;

fn cube() -> impl Strategy<Value = (usize, DyadicCube)> {
    (2usize..=3, -4i32..4, prop::array::uniform3(-40i64..40)).prop_flat_map(|(dim, level, mut coords)| {
        if dim == 2 {
            coords[2] = 0;
        }
        (0..grid_count(dim)).prop_map(move |shift| (dim, DyadicCube::new(shift, level, coords)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn children_return_to_their_parent((dim, q) in cube()) {
        let kids = q.children(dim);
        prop_assert_eq!(kids.len(), 1 << dim);
        for c in &kids {
            prop_assert_eq!(c.parent(dim), q);
            prop_assert!(q.contains_cube(dim, c));
            prop_assert!((c.side() * 2.0 - q.side()).abs() < 1e-12);
        }
    }

    #[test]
    fn children_tile_the_parent_cells((dim, q) in cube()) {
        // 1/32 spacing keeps every level above resolution
        let spec = GridSpec::new(dim, 128, 2.0).unwrap();
        let parent = q.cells(&spec).unwrap();
        let mut total = 0;
        for c in q.children(dim) {
            let b = c.cells(&spec).unwrap();
            prop_assert_eq!(b.intersect(&parent), b);
            total += b.count();
        }
        prop_assert_eq!(total, parent.count());
    }

    #[test]
    fn containing_cell_holds_the_center(dim in 2usize..=3, level in -3i32..2, shift in 0u16..9, idx in prop::array::uniform3(0i64..32)) {
        let spec = GridSpec::new(dim, 32, 2.0).unwrap();
        let shift = shift % grid_count(dim);
        let mut idx = idx;
        if dim == 2 {
            idx[2] = 0;
        }
        let q = DyadicCube::containing_cell(&spec, shift, level, &idx).unwrap();
        let b = q.cells(&spec).unwrap();
        for a in 0..dim {
            prop_assert!(b.lo[a] <= idx[a] && idx[a] < b.hi[a]);
            let x = spec.center(idx[a]);
            prop_assert!(q.lower(a) <= x && x < q.lower(a) + q.side());
        }
    }
}
