use ccss_core::mask::{component_count, label_components};
use ccss_core::morphology::{
    closing, fill_holes, opening_with_reconstruction, preprocess, PreprocessParams,
    StructuringElement,
};
use ccss_core::{BinaryMask, Connectivity};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Shape {
    Rect(usize, usize, usize, usize),
    Ellipse(f64, f64, f64, f64),
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0usize..48, 0usize..40, 1usize..30, 1usize..20).prop_map(|(x, y, w, h)| Shape::Rect(x, y, w, h)),
        (0.0f64..48.0, 0.0f64..40.0, 1.0f64..15.0, 1.0f64..12.0)
            .prop_map(|(cx, cy, a, b)| Shape::Ellipse(cx, cy, a, b)),
    ]
}

fn mask() -> impl Strategy<Value = BinaryMask> {
    (prop::collection::vec(shape(), 1..5), prop::collection::vec((0usize..48, 0usize..40), 0..30))
        .prop_map(|(shapes, flips)| {
            let mut m = BinaryMask::from_fn(48, 40, |x, y| {
                shapes.iter().any(|s| match *s {
                    Shape::Rect(x0, y0, w, h) => x >= x0 && x < x0 + w && y >= y0 && y < y0 + h,
                    Shape::Ellipse(cx, cy, a, b) => {
                        let (dx, dy) = ((x as f64 - cx) / a, (y as f64 - cy) / b);
                        dx * dx + dy * dy <= 1.0
                    }
                })
            })
            .unwrap();
            for (x, y) in flips {
                let v = m.get(x, y);
                m.set(x, y, !v);
            }
            m
        })
        .prop_filter("needs an object pixel", |m| !m.is_empty())
}

/// Background 4-components that never touch the raster border.
fn enclosed_background(m: &BinaryMask) -> usize {
    let inverted = BinaryMask::from_fn(m.width(), m.height(), |x, y| !m.get(x, y)).unwrap();
    let comps = label_components(&inverted, Connectivity::Four);
    let mut touches = vec![false; comps.count() + 1];
    for y in 0..m.height() {
        for x in 0..m.width() {
            let on_border = x == 0 || y == 0 || x + 1 == m.width() || y + 1 == m.height();
            if on_border {
                touches[comps.labels[y * m.width() + x] as usize] = true;
            }
        }
    }
    (1..=comps.count()).filter(|&l| !touches[l]).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn opening_is_anti_extensive_and_keeps_component_count(m in mask(), r in 1usize..=3) {
        let se = StructuringElement::disc(r);
        let out = opening_with_reconstruction(&m, &se).unwrap();
        prop_assert!(out.is_subset_of(&m));
        prop_assert!(component_count(&out, Connectivity::Eight) <= component_count(&m, Connectivity::Eight));
    }

    #[test]
    fn closing_is_extensive(m in mask(), r in 1usize..=3) {
        let out = closing(&m, &StructuringElement::disc(r)).unwrap();
        prop_assert!(m.is_subset_of(&out));
    }

    #[test]
    fn fill_holes_leaves_no_enclosed_background(m in mask()) {
        let out = fill_holes(&m);
        prop_assert!(m.is_subset_of(&out));
        prop_assert_eq!(enclosed_background(&out), 0);
        prop_assert_eq!(fill_holes(&out), out);
    }

    #[test]
    fn preprocess_yields_one_solid_component_and_is_idempotent(m in mask()) {
        let params = PreprocessParams::default();
        if let Ok(once) = preprocess(&m, &params) {
            prop_assert_eq!(component_count(&once, Connectivity::Eight), 1);
            prop_assert_eq!(enclosed_background(&once), 0);
            let twice = preprocess(&once, &params).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
