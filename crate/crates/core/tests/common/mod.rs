#![allow(dead_code)]

use ccss_core::silhouette::Point;
use ccss_core::BinaryMask;

/// Even-odd rule rasterisation of a polygon, sampled at pixel centres.
pub fn rasterize(poly: &[Point], width: usize, height: usize) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > py) != (b.y > py) {
                let t = (py - a.y) / (b.y - a.y);
                if px < a.x + t * (b.x - a.x) {
                    inside = !inside;
                }
            }
        }
        inside
    })
    .unwrap()
}

/// A side-view hull: tapered bow, flat deck at `deck` and blocks standing on
/// it given as `(x0, x1, height)` in pixels.
pub fn hull(blocks: &[(f64, f64, f64)]) -> Vec<Point> {
    let deck = 60.0;
    let mut top = vec![Point::new(20.0, deck)];
    let mut sorted = blocks.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(x0, x1, h) in &sorted {
        top.push(Point::new(x0, deck));
        top.push(Point::new(x0, deck - h));
        top.push(Point::new(x1, deck - h));
        top.push(Point::new(x1, deck));
    }
    top.push(Point::new(200.0, deck));
    top.extend([
        Point::new(215.0, deck),
        Point::new(190.0, 85.0),
        Point::new(40.0, 85.0),
        Point::new(25.0, 75.0),
    ]);
    // Stern at the left end of the deck line.
    top.insert(0, Point::new(12.0, deck));
    top
}

pub fn hull_mask(blocks: &[(f64, f64, f64)]) -> BinaryMask {
    rasterize(&hull(blocks), 240, 100)
}

pub const FRIGATE: &[(f64, f64, f64)] = &[(60.0, 95.0, 14.0), (75.0, 82.0, 28.0), (120.0, 150.0, 10.0)];
pub const TANKER: &[(f64, f64, f64)] = &[(30.0, 55.0, 20.0), (150.0, 165.0, 8.0)];
