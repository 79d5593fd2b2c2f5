//! Outer boundary extraction by Moore-neighbour following with backtracking.

use alloc::vec::Vec;

use crate::mask::BinaryMask;
use crate::{Error, Result};

/// 8-neighbourhood in clockwise screen order (y grows downwards), starting
/// east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

const WEST: usize = 4;

fn dir_index(dx: i32, dy: i32) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("pixels are 8-neighbours")
}

/// Closed loop of boundary pixel coordinates `(x, y)`.
///
/// Consecutive points (including last to first) are 8-neighbours. The loop
/// runs along the top of the object from left to right first, which is a
/// positive shoelace area in raster coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedContour {
    points: Vec<(i32, i32)>,
}

impl ClosedContour {
    /// Wraps an existing loop, checking the adjacency invariants.
    pub fn new(points: Vec<(i32, i32)>) -> Result<Self> {
        if points.len() < 8 {
            return Err(Error::DegenerateObject {
                boundary_pixels: points.len(),
            });
        }
        let n = points.len();
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            let (dx, dy) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
            if dx > 1 || dy > 1 || (dx == 0 && dy == 0) {
                return Err(Error::InvalidParameter(
                    "consecutive contour points must be distinct 8-neighbours",
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(i32, i32)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shoelace area in raster coordinates.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let twice: i64 = (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.0 as i64 * b.1 as i64 - b.0 as i64 * a.1 as i64
            })
            .sum();
        twice as f64 / 2.0
    }

    /// Length of the polygon through the pixel centres.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                if a.0 != b.0 && a.1 != b.1 {
                    core::f64::consts::SQRT_2
                } else {
                    1.0
                }
            })
            .sum()
    }
}

/// Traces the outer boundary of the object containing the first object
/// pixel in raster order.
///
/// Starting from that pixel with its (background) west neighbour as the
/// backtrack point, the neighbourhood is scanned clockwise from the backtrack
/// until an object pixel is met; that pixel becomes current and the last
/// background pixel examined becomes the new backtrack. Tracing stops when
/// the start pixel is about to be left through the same move as at the
/// beginning (Jacob's stopping criterion).
pub fn extract_contour(mask: &BinaryMask) -> Result<ClosedContour> {
    let (sx, sy) = mask.ones().next().ok_or(Error::EmptyMask)?;
    let start = (sx as i32, sy as i32);
    let is_object = |p: (i32, i32)| mask.get_signed(p.0 as isize, p.1 as isize);

    let next = |cur: (i32, i32), back_dir: usize| -> Option<((i32, i32), usize)> {
        for k in 1..=8 {
            let d = (back_dir + k) % 8;
            let cand = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if is_object(cand) {
                let prev = (back_dir + k - 1) % 8;
                let back = (cur.0 + DIRS[prev].0, cur.1 + DIRS[prev].1);
                return Some((cand, dir_index(back.0 - cand.0, back.1 - cand.1)));
            }
        }
        None
    };

    let Some((first, mut back)) = next(start, WEST) else {
        return Err(Error::DegenerateObject { boundary_pixels: 1 });
    };
    let mut points = Vec::new();
    points.push(start);
    let mut cur = first;
    // Guard against pathological masks; a boundary can visit each pixel at
    // most four times.
    let limit = 4 * mask.width() * mask.height() + 8;
    loop {
        let (n, b) = next(cur, back).expect("current pixel has an object neighbour");
        if cur == start && n == first {
            break;
        }
        points.push(cur);
        cur = n;
        back = b;
        if points.len() > limit {
            break;
        }
    }
    ClosedContour::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn boundary_pixels(mask: &BinaryMask) -> BTreeSet<(i32, i32)> {
        mask.ones()
            .filter(|&(x, y)| {
                let (x, y) = (x as isize, y as isize);
                [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(dx, dy)| !mask.get_signed(x + dx, y + dy))
            })
            .map(|(x, y)| (x as i32, y as i32))
            .collect()
    }

    #[test]
    fn square_boundary_has_36_points() {
        let m = BinaryMask::from_fn(10, 10, |_, _| true).unwrap();
        let c = extract_contour(&m).unwrap();
        assert_eq!(c.len(), 36);
        assert_eq!(c.points()[0], (0, 0));
        assert_eq!(c.points()[1], (1, 0));
        assert!(c.signed_area() > 0.0);
        assert_eq!(c.signed_area(), 81.0);
    }

    #[test]
    fn single_pixel_is_degenerate() {
        let mut m = BinaryMask::new(5, 5).unwrap();
        m.set(2, 2, true);
        assert!(matches!(
            extract_contour(&m),
            Err(Error::DegenerateObject { .. })
        ));
        let tiny = BinaryMask::from_fn(5, 5, |x, y| (1..3).contains(&x) && (1..3).contains(&y))
            .unwrap();
        assert_eq!(
            extract_contour(&tiny),
            Err(Error::DegenerateObject { boundary_pixels: 4 })
        );
    }

    #[test]
    fn l_shape_matches_hand_traced_loop() {
        let m = BinaryMask::from_ascii(&[
            ".....", //
            ".##..", //
            ".##..", //
            ".####", //
            ".####",
        ])
        .unwrap();
        let c = extract_contour(&m).unwrap();
        let expected = vec![
            (1, 1),
            (2, 1),
            (2, 2),
            (3, 3),
            (4, 3),
            (4, 4),
            (3, 4),
            (2, 4),
            (1, 4),
            (1, 3),
            (1, 2),
        ];
        assert_eq!(c.points(), expected.as_slice());
        // The inner corner (2, 3) touches the background only diagonally and
        // is cut by the diagonal move.
        let set: BTreeSet<_> = c.points().iter().copied().collect();
        assert_eq!(set, boundary_pixels(&m));
    }

    #[test]
    fn every_point_touches_background() {
        let m = BinaryMask::from_fn(40, 30, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 15.0);
            dx * dx / 225.0 + dy * dy / 100.0 <= 1.0 || ((18..22).contains(&x) && y < 15)
        })
        .unwrap();
        let c = extract_contour(&m).unwrap();
        let oracle = boundary_pixels(&m);
        for p in c.points() {
            assert!(oracle.contains(p), "{p:?} is not a boundary pixel");
        }
        assert_eq!(c.points().iter().collect::<BTreeSet<_>>().len(), oracle.len());
    }

    #[test]
    fn new_validates_adjacency() {
        assert!(ClosedContour::new(vec![(0, 0); 8]).is_err());
        let square: Vec<_> = (0..3)
            .map(|x| (x, 0))
            .chain((0..3).map(|y| (3, y)))
            .chain((1..=3).rev().map(|x| (x, 3)))
            .chain((1..=3).rev().map(|y| (0, y)))
            .collect();
        assert!(ClosedContour::new(square).is_ok());
    }
}
