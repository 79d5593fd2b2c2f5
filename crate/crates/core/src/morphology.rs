//! Binary morphology used to clean silhouettes before contour extraction.
//!
//! [`preprocess`] chains three steps: an opening that removes thin
//! protrusions (antennas, noise bumps) without leaving detached fragments, a
//! closing that fills narrow streaks, and hole filling by 4-connected
//! background extraction. The largest remaining component is returned.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::mask::{label_components, largest_component, BinaryMask, Connectivity};
use crate::{Error, Result};

/// Flat binary kernel given as offsets from its origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
    radius: usize,
}

impl StructuringElement {
    /// Digital disc: all offsets with `dx² + dy² < (radius + 1/2)²`, i.e.
    /// `dx² + dy² <= radius² + radius`. Radius 1 is the 3x3 square and
    /// radius 2 the 5x5 square without its corners.
    pub fn disc(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r + r {
                    offsets.push((dx, dy));
                }
            }
        }
        Self { offsets, radius }
    }

    /// Arbitrary kernel. The origin `(0, 0)` must be part of the support and
    /// `radius` must bound every offset in the chessboard metric.
    pub fn from_offsets(offsets: Vec<(isize, isize)>, radius: usize) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidStructuringElement("kernel is empty"));
        }
        if !offsets.contains(&(0, 0)) {
            return Err(Error::InvalidStructuringElement(
                "origin is outside the kernel support",
            ));
        }
        let reach = offsets
            .iter()
            .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0);
        if reach > radius {
            return Err(Error::InvalidStructuringElement(
                "offset lies beyond the nominal radius",
            ));
        }
        Ok(Self { offsets, radius })
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn reach(&self) -> usize {
        self.offsets
            .iter()
            .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Mask copied into a buffer with a background border of `pad` pixels, so
/// kernel offsets can be applied as plain index deltas.
struct Padded {
    stride: usize,
    pad: usize,
    bits: Vec<bool>,
}

impl Padded {
    fn new(mask: &BinaryMask, pad: usize) -> Self {
        let stride = mask.width() + 2 * pad;
        let rows = mask.height() + 2 * pad;
        let mut bits = vec![false; stride * rows];
        for y in 0..mask.height() {
            let dst = (y + pad) * stride + pad;
            let src = y * mask.width();
            bits[dst..dst + mask.width()]
                .copy_from_slice(&mask.bits()[src..src + mask.width()]);
        }
        Self { stride, pad, bits }
    }

    fn deltas(&self, se: &StructuringElement) -> Vec<isize> {
        se.offsets()
            .iter()
            .map(|&(dx, dy)| dy * self.stride as isize + dx)
            .collect()
    }

    /// Indices of the pixels that are at least `margin` away from the
    /// buffer edge.
    fn interior(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        let rows = self.bits.len() / self.stride;
        (margin..rows - margin).flat_map(move |y| {
            (margin..self.stride - margin).map(move |x| y * self.stride + x)
        })
    }

    fn erode(&self, deltas: &[isize], margin: usize) -> Vec<bool> {
        let mut out = vec![false; self.bits.len()];
        for i in self.interior(margin) {
            out[i] = deltas
                .iter()
                .all(|&d| self.bits[(i as isize + d) as usize]);
        }
        out
    }

    fn dilate(&self, deltas: &[isize], margin: usize) -> Vec<bool> {
        let mut out = vec![false; self.bits.len()];
        for i in self.interior(margin) {
            if self.bits[i] {
                for &d in deltas {
                    out[(i as isize + d) as usize] = true;
                }
            }
        }
        out
    }

    fn crop(&self, like: &BinaryMask) -> BinaryMask {
        let mut bits = Vec::with_capacity(like.width() * like.height());
        for y in 0..like.height() {
            let start = (y + self.pad) * self.stride + self.pad;
            bits.extend_from_slice(&self.bits[start..start + like.width()]);
        }
        like.map_bits(bits)
    }
}

/// Erosion: a pixel survives when the kernel placed on it lies entirely
/// inside the object. Pixels outside the raster count as background.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let pad = se.reach();
    let mut p = Padded::new(mask, pad);
    let deltas = p.deltas(se);
    p.bits = p.erode(&deltas, pad);
    p.crop(mask)
}

/// Dilation, clipped to the raster.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let pad = se.reach();
    let mut p = Padded::new(mask, pad);
    let deltas = p.deltas(se);
    p.bits = p.dilate(&deltas, pad);
    p.crop(mask)
}

/// One geodesic dilation step with the 3x3 square, restricted to `limit`.
fn conditional_dilate(marker: &BinaryMask, limit: &BinaryMask) -> BinaryMask {
    let (w, h) = (marker.width() as isize, marker.height() as isize);
    let mut out = marker.clone();
    for y in 0..h {
        for x in 0..w {
            if marker.get(x as usize, y as usize) || !limit.get(x as usize, y as usize) {
                continue;
            }
            let grows = Connectivity::Eight
                .offsets()
                .iter()
                .any(|&(dx, dy)| marker.get_signed(x + dx, y + dy));
            if grows {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    out
}

/// Opening that removes protrusions thinner than the kernel without
/// creating isolated regions.
///
/// The mask is eroded by `se`, then regrown by `se.radius()` geodesic
/// dilations with the 8-connected unit square under the original mask.
/// Parts of the object that fit the kernel are restored exactly (including
/// corners the plain opening would round off), while protrusions longer
/// than the kernel radius do not grow back. Finally each connected
/// component of the input keeps only its largest regrown piece, so the
/// component count never increases.
pub fn opening_with_reconstruction(
    mask: &BinaryMask,
    se: &StructuringElement,
) -> Result<BinaryMask> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut rec = erode(mask, se);
    for _ in 0..se.radius() {
        let next = conditional_dilate(&rec, mask);
        if next == rec {
            break;
        }
        rec = next;
    }

    let parents = label_components(mask, Connectivity::Eight);
    let pieces = label_components(&rec, Connectivity::Eight);
    // best[parent] = (piece label, size)
    let mut best: Vec<Option<(u32, usize)>> = vec![None; parents.count() + 1];
    for (i, &piece) in pieces.labels.iter().enumerate() {
        if piece == 0 {
            continue;
        }
        let parent = parents.labels[i] as usize;
        let size = pieces.sizes[piece as usize - 1];
        match best[parent] {
            Some((p, s)) if p == piece || s >= size => {}
            _ => best[parent] = Some((piece, size)),
        }
    }
    let bits = pieces
        .labels
        .iter()
        .zip(&parents.labels)
        .map(|(&piece, &parent)| piece != 0 && best[parent as usize].map(|b| b.0) == Some(piece))
        .collect();
    Ok(mask.map_bits(bits))
}

/// Dilation followed by erosion. Computed on a padded buffer so that
/// objects touching the raster edge are not eaten by the erosion; the result
/// is always a superset of the input.
pub fn closing(mask: &BinaryMask, se: &StructuringElement) -> Result<BinaryMask> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let reach = se.reach();
    let mut p = Padded::new(mask, 2 * reach);
    let deltas = p.deltas(se);
    p.bits = p.dilate(&deltas, reach);
    p.bits = p.erode(&deltas, reach);
    Ok(p.crop(mask))
}

/// Sets every background pixel that is not 4-connected to the raster border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        let i = y * w + x;
        if !mask.bits()[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            seed(x - 1, y, &mut outside, &mut queue);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut outside, &mut queue);
        }
        if y > 0 {
            seed(x, y - 1, &mut outside, &mut queue);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut outside, &mut queue);
        }
    }
    mask.map_bits(outside.into_iter().map(|o| !o).collect())
}

/// Kernel radii for [`preprocess`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessParams {
    pub opening_radius: usize,
    pub closing_radius: usize,
}

impl PreprocessParams {
    pub fn with_radius(radius: usize) -> Self {
        Self {
            opening_radius: radius,
            closing_radius: radius,
        }
    }
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self::with_radius(2)
    }
}

/// Opening with reconstruction, closing, hole filling, then the largest
/// 8-connected component.
///
/// The closing can merge nearby parts into a shape the next opening would
/// cut again, so the chain is repeated until the mask stops changing. This
/// makes the result a fixed point: preprocessing it again returns it
/// unchanged.
pub fn preprocess(mask: &BinaryMask, params: &PreprocessParams) -> Result<BinaryMask> {
    let mut cur = preprocess_once(mask, params)?;
    for _ in 0..MAX_PREPROCESS_ROUNDS {
        let next = preprocess_once(&cur, params)?;
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

const MAX_PREPROCESS_ROUNDS: usize = 16;

fn preprocess_once(mask: &BinaryMask, params: &PreprocessParams) -> Result<BinaryMask> {
    let opened = opening_with_reconstruction(mask, &StructuringElement::disc(params.opening_radius))?;
    if opened.is_empty() {
        return Err(Error::EmptyMask);
    }
    let closed = closing(&opened, &StructuringElement::disc(params.closing_radius))?;
    Ok(largest_component(&fill_holes(&closed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::component_count;

    fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1).unwrap()
    }

    /// Direct pixel-level oracle: erosion by explicit kernel check, then
    /// `iterations` rounds of conditional 8-neighbour growth.
    fn oracle_open_rec(mask: &BinaryMask, r: isize, iterations: usize) -> BinaryMask {
        let (w, h) = (mask.width() as isize, mask.height() as isize);
        let mut cur = BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            let (x, y) = (x as isize, y as isize);
            (-r..=r).all(|dy| {
                (-r..=r).all(|dx| dx * dx + dy * dy > r * r + r || mask.get_signed(x + dx, y + dy))
            })
        })
        .unwrap();
        for _ in 0..iterations {
            let prev = cur.clone();
            for y in 0..h {
                for x in 0..w {
                    let near = (-1..=1).any(|dy| (-1..=1).any(|dx| prev.get_signed(x + dx, y + dy)));
                    if near && mask.get(x as usize, y as usize) {
                        cur.set(x as usize, y as usize, true);
                    }
                }
            }
        }
        cur
    }

    fn oracle_close(mask: &BinaryMask, r: isize) -> BinaryMask {
        // Evaluated on the unbounded plane, so the raster edge plays no part.
        let inside = |x: isize, y: isize| mask.get_signed(x, y);
        let dilated = |x: isize, y: isize| {
            (-r..=r).any(|dy| (-r..=r).any(|dx| dx * dx + dy * dy <= r * r + r && inside(x - dx, y - dy)))
        };
        BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            let (x, y) = (x as isize, y as isize);
            (-r..=r).all(|dy| {
                (-r..=r).all(|dx| dx * dx + dy * dy > r * r + r || dilated(x + dx, y + dy))
            })
        })
        .unwrap()
    }

    #[test]
    fn disc_has_expected_support() {
        assert_eq!(StructuringElement::disc(0).offsets(), &[(0, 0)]);
        assert_eq!(StructuringElement::disc(1).offsets().len(), 9);
        assert_eq!(StructuringElement::disc(2).offsets().len(), 21);
    }

    #[test]
    fn structuring_element_requires_origin() {
        assert!(StructuringElement::from_offsets(vec![], 1).is_err());
        assert!(StructuringElement::from_offsets(vec![(1, 0)], 1).is_err());
        assert!(StructuringElement::from_offsets(vec![(0, 0), (3, 0)], 1).is_err());
        assert!(StructuringElement::from_offsets(vec![(0, 0), (1, 0)], 1).is_ok());
    }

    #[test]
    fn opening_rejects_empty_mask() {
        let m = BinaryMask::new(10, 10).unwrap();
        assert_eq!(
            opening_with_reconstruction(&m, &StructuringElement::disc(2)),
            Err(Error::EmptyMask)
        );
        assert_eq!(closing(&m, &StructuringElement::disc(2)), Err(Error::EmptyMask));
    }

    #[test]
    fn opening_keeps_solid_square() {
        let sq = rect(30, 30, 5, 5, 25, 25);
        let out = opening_with_reconstruction(&sq, &StructuringElement::disc(2)).unwrap();
        assert_eq!(out, sq);
    }

    #[test]
    fn opening_removes_thin_spike() {
        let mut m = rect(30, 34, 5, 9, 25, 29);
        for y in 4..9 {
            m.set(15, y, true);
        }
        let out = opening_with_reconstruction(&m, &StructuringElement::disc(2)).unwrap();
        assert_eq!(out, oracle_open_rec(&m, 2, 2));
        assert_eq!(out, rect(30, 34, 5, 9, 25, 29));
    }

    #[test]
    fn opening_drops_detached_fragments() {
        // Two blocks joined by a long thin neck: erosion severs the neck and
        // the smaller block must not survive as an isolated region.
        let mut m = rect(60, 20, 2, 2, 22, 18);
        for x in 22..40 {
            m.set(x, 10, true);
        }
        for y in 6..14 {
            for x in 40..48 {
                m.set(x, y, true);
            }
        }
        let out = opening_with_reconstruction(&m, &StructuringElement::disc(2)).unwrap();
        assert_eq!(component_count(&out, Connectivity::Eight), 1);
        assert!(out.is_subset_of(&m));
        assert!(out.get(10, 10));
        assert!(!out.get(44, 10));
    }

    #[test]
    fn closing_fills_slit_and_keeps_gap() {
        let sq = rect(30, 30, 5, 5, 25, 25);
        assert_eq!(closing(&sq, &StructuringElement::disc(2)).unwrap(), sq);

        let mut slit = sq.clone();
        for y in 5..15 {
            slit.set(15, y, false);
        }
        let closed = closing(&slit, &StructuringElement::disc(2)).unwrap();
        assert_eq!(closed, oracle_close(&slit, 2));
        assert_eq!(closed, sq);

        let two = BinaryMask::from_fn(70, 20, |x, y| {
            (2..10).contains(&y) && ((5..25).contains(&x) || (45..65).contains(&x))
        })
        .unwrap();
        assert_eq!(closing(&two, &StructuringElement::disc(2)).unwrap(), two);
    }

    #[test]
    fn closing_is_extensive_at_raster_edge() {
        let m = rect(12, 12, 0, 0, 7, 12);
        let c = closing(&m, &StructuringElement::disc(2)).unwrap();
        assert!(m.is_subset_of(&c));
    }

    #[test]
    fn fill_holes_cases() {
        let sq = rect(20, 20, 3, 3, 17, 17);
        assert_eq!(fill_holes(&sq), sq);

        let ring = BinaryMask::from_fn(20, 20, |x, y| {
            sq.get(x, y) && !((6..14).contains(&x) && (6..14).contains(&y))
        })
        .unwrap();
        assert_eq!(fill_holes(&ring), sq);

        let c_shape = BinaryMask::from_fn(20, 20, |x, y| {
            sq.get(x, y) && !((6..17).contains(&x) && (6..14).contains(&y))
        })
        .unwrap();
        assert_eq!(fill_holes(&c_shape), c_shape);
    }

    #[test]
    fn fill_holes_uses_four_connected_background() {
        // The hole touches the outside only diagonally, so it is enclosed.
        let m = BinaryMask::from_ascii(&[
            ".....", //
            ".###.", //
            ".#.#.", //
            ".##..", //
            ".....",
        ])
        .unwrap();
        let f = fill_holes(&m);
        assert!(f.get(2, 2));
        assert!(!f.get(3, 3));
    }

    #[test]
    fn preprocess_cleans_spike_and_hole() {
        let mut m = rect(60, 50, 10, 15, 50, 40);
        for y in 5..15 {
            m.set(30, y, true);
        }
        for y in 25..29 {
            for x in 25..29 {
                m.set(x, y, false);
            }
        }
        let out = preprocess(&m, &PreprocessParams::default()).unwrap();
        assert_eq!(out, rect(60, 50, 10, 15, 50, 40));
    }

    #[test]
    fn preprocess_rejects_thin_object() {
        let m = BinaryMask::from_fn(40, 40, |x, y| y == 20 || x == 20).unwrap();
        assert_eq!(preprocess(&m, &PreprocessParams::default()), Err(Error::EmptyMask));
    }

    #[test]
    fn preprocess_keeps_convex_blob() {
        let blob = BinaryMask::from_fn(60, 60, |x, y| {
            let (dx, dy) = (x as f64 - 30.0, y as f64 - 30.0);
            dx * dx / 400.0 + dy * dy / 196.0 <= 1.0
        })
        .unwrap();
        let out = preprocess(&blob, &PreprocessParams::default()).unwrap();
        // Only the four lone pixels at the axis ends of the raster ellipse
        // are thin enough to be cut.
        assert!(out.is_subset_of(&blob));
        assert_eq!(blob.count() - out.count(), 4);
        for (x, y) in [(30, 16), (30, 44), (10, 30), (50, 30)] {
            assert!(blob.get(x, y) && !out.get(x, y));
        }
    }
}
