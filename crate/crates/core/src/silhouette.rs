//! Arc-length normalised silhouettes and the geometric primitives used by
//! the scale-space construction.
//!
//! Coordinates follow the raster convention (x to the right, y downwards).
//! In that frame a silhouette is stored with positive shoelace area, which
//! means that, starting at the stern, the deck is traversed towards the bow
//! before the hull bottom is traversed back. With this orientation convex
//! features have positive curvature.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::contour::ClosedContour;
use crate::fft::{Complex, FftPlan};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Shoelace area (raster frame) of a closed polygon.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Closed curve sampled at `N` points equally spaced in arc length.
///
/// Sample 0 is the stern. Coordinates are divided by the perimeter of the
/// sampled polygon, so the total length is 1 and the stern sits at the
/// origin. `deck_span` is the horizontal extent of the unsmoothed samples
/// and is carried unchanged through [`smooth`], which keeps deck projection
/// consistent across scales.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSilhouette {
    points: Vec<Point>,
    bow_index: usize,
    stern_index: usize,
    deck_span: (f64, f64),
    scale_px: f64,
}

impl NormalizedSilhouette {
    /// Rebuilds a silhouette from stored parts (e.g. after deserialisation).
    pub fn from_parts(
        points: Vec<Point>,
        bow_index: usize,
        stern_index: usize,
        deck_span: (f64, f64),
        scale_px: f64,
    ) -> Result<Self> {
        if points.len() < 32 {
            return Err(Error::InvalidParameter("silhouette needs at least 32 samples"));
        }
        if bow_index >= points.len() || stern_index >= points.len() {
            return Err(Error::InvalidParameter("bow/stern index out of range"));
        }
        if !(deck_span.1 > deck_span.0) {
            return Err(Error::DegenerateSilhouette);
        }
        Ok(Self {
            points,
            bow_index,
            stern_index,
            deck_span,
            scale_px,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bow_index(&self) -> usize {
        self.bow_index
    }

    pub fn stern_index(&self) -> usize {
        self.stern_index
    }

    pub fn deck_span(&self) -> (f64, f64) {
        self.deck_span
    }

    /// Source-pixel length of one normalised unit.
    pub fn scale_px(&self) -> f64 {
        self.scale_px
    }

    /// Sum of distances between consecutive samples, closing segment
    /// included.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .sum()
    }

    /// Horizontal mirror image (`x -> -x`) with the same conventions:
    /// orientation is restored by reversing the traversal, and the former bow
    /// becomes sample 0. Negation is exact, so mirroring twice returns the
    /// original bit for bit.
    pub fn mirrored(&self) -> NormalizedSilhouette {
        let n = self.points.len();
        let (lo, hi) = self.deck_span;
        let points: Vec<Point> = (0..n)
            .map(|k| {
                let p = self.points[(self.bow_index + n - k) % n];
                Point::new(-p.x, p.y)
            })
            .collect();
        let to_new = |i: usize| (self.bow_index + n - i) % n;
        NormalizedSilhouette {
            points,
            bow_index: to_new(self.stern_index),
            stern_index: 0,
            deck_span: (-hi, -lo),
            scale_px: self.scale_px,
        }
    }

    fn with_points(&self, points: Vec<Point>) -> NormalizedSilhouette {
        NormalizedSilhouette {
            points,
            ..self.clone()
        }
    }
}

/// Curvature sampled at every silhouette point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub kappa: Vec<f64>,
}

impl CurvatureProfile {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }
}

/// Resamples a pixel contour; see [`resample_polygon`].
pub fn resample(contour: &ClosedContour, n: usize) -> Result<NormalizedSilhouette> {
    let vertices: Vec<Point> = contour
        .points()
        .iter()
        .map(|&(x, y)| Point::new(x as f64, y as f64))
        .collect();
    resample_polygon(&vertices, n)
}

/// Samples a closed polygon at `n` points uniformly spaced in arc length.
///
/// The polygon is reversed when its shoelace area is negative. The first
/// sample is placed at the stern: the arc-length midpoint of the longest run
/// of vertices sharing the minimum x coordinate.
pub fn resample_polygon(vertices: &[Point], n: usize) -> Result<NormalizedSilhouette> {
    if n < 32 {
        return Err(Error::InvalidParameter("sample count must be at least 32"));
    }
    if vertices.len() < 3 {
        return Err(Error::DegenerateObject {
            boundary_pixels: vertices.len(),
        });
    }
    let mut poly: Vec<Point> = vertices.to_vec();
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    let m = poly.len();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let seg = (poly[(i + 1) % m] - poly[i]).norm();
        cum.push(cum[i] + seg);
    }
    let total = cum[m];
    if !(total > 0.0) {
        return Err(Error::DegenerateObject { boundary_pixels: m });
    }

    let x_min = poly.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x_max = poly.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    if !(x_max > x_min) {
        return Err(Error::DegenerateSilhouette);
    }
    let start = stern_arc_position(&poly, &cum, x_min);

    let step = total / n as f64;
    let mut samples = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let mut s = start + k as f64 * step;
        if s >= total {
            s -= total;
        }
        // Segment pointer only moves forward, apart from one wrap.
        if s < cum[seg] {
            seg = 0;
        }
        while seg + 1 < m && cum[seg + 1] <= s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let t = t.clamp(0.0, 1.0);
        samples.push(poly[seg].lerp(poly[(seg + 1) % m], t));
    }

    let chord_total: f64 = (0..n)
        .map(|i| (samples[(i + 1) % n] - samples[i]).norm())
        .sum();
    let origin = samples[0];
    let points: Vec<Point> = samples
        .iter()
        .map(|&p| (p - origin) * (1.0 / chord_total))
        .collect();

    let (stern_index, bow_index) = extreme_indices(&points);
    let deck_span = (points[stern_index].x, points[bow_index].x);
    if !(deck_span.1 > deck_span.0) {
        return Err(Error::DegenerateSilhouette);
    }
    Ok(NormalizedSilhouette {
        points,
        bow_index,
        stern_index,
        deck_span,
        scale_px: chord_total,
    })
}

fn stern_arc_position(poly: &[Point], cum: &[f64], x_min: f64) -> f64 {
    let m = poly.len();
    let at_min = |i: usize| poly[i % m].x == x_min;
    // Begin the scan just after a vertex that is not on the minimum, so runs
    // never straddle the scan start.
    let offset = (0..m).find(|&i| !at_min(i)).expect("polygon has positive width") + 1;
    let mut best: Option<(usize, usize)> = None; // (run start, run length)
    let mut i = 0;
    while i < m {
        let idx = (offset + i) % m;
        if at_min(idx) {
            let mut len = 1;
            while len < m && at_min(idx + len) {
                len += 1;
            }
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((idx, len));
            }
            i += len;
        } else {
            i += 1;
        }
    }
    let (first, len) = best.expect("some vertex attains the minimum");
    let last = (first + len - 1) % m;
    let total = cum[m];
    let a = cum[first];
    let mut b = cum[last];
    if b < a {
        b += total;
    }
    let mid = (a + b) / 2.0;
    if mid >= total {
        mid - total
    } else {
        mid
    }
}

/// (argmin x, argmax x), ties to the lowest index.
fn extreme_indices(points: &[Point]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, p) in points.iter().enumerate() {
        if p.x < points[lo].x {
            lo = i;
        }
        if p.x > points[hi].x {
            hi = i;
        }
    }
    (lo, hi)
}

/// Bow = sample with maximal x, stern = sample with minimal x; ties go to
/// the lowest sample index. Returns `(bow_index, stern_index)`.
pub fn detect_bow_stern(silhouette: &NormalizedSilhouette) -> Result<(usize, usize)> {
    let (stern, bow) = extreme_indices(&silhouette.points);
    if !(silhouette.points[bow].x > silhouette.points[stern].x) {
        return Err(Error::DegenerateSilhouette);
    }
    Ok((bow, stern))
}

/// Unit-mass Gaussian of standard deviation `sigma_samples`, wrapped onto a
/// circle of `n` samples.
///
/// The support runs to ten deviations, where the tail is below double
/// precision. A shorter cut leaves a step in the kernel that echoes every
/// polygon corner as a faint kink, enough to create curvature sign changes
/// at coarse scales that the finer scales do not have.
pub(crate) fn wrapped_gaussian(sigma_samples: f64, n: usize) -> Vec<f64> {
    let half = libm::ceil(10.0 * sigma_samples) as i64;
    let mut ker = vec![0.0; n];
    let mut mass = 0.0;
    for k in -half..=half {
        let w = libm::exp(-((k * k) as f64) / (2.0 * sigma_samples * sigma_samples));
        ker[k.rem_euclid(n as i64) as usize] += w;
        mass += w;
    }
    for w in ker.iter_mut() {
        *w /= mass;
    }
    ker
}

/// Circular convolution of the curve with a wrapped kernel, evaluated
/// directly in O(n * support).
pub(crate) fn convolve_direct(points: &[Point], kernel: &[f64]) -> Vec<Point> {
    let n = points.len();
    let taps: Vec<(usize, f64)> = kernel
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(k, &w)| (k, w))
        .collect();
    (0..n)
        .map(|i| {
            taps.iter().fold(Point::default(), |acc, &(k, w)| {
                acc + points[(i + n - k) % n] * w
            })
        })
        .collect()
}

/// Gaussian evolution of one silhouette across many scales. The spectrum of
/// the curve is computed once; each scale then costs one kernel transform
/// and one inverse transform when the sample count is a power of two.
pub struct Smoother<'a> {
    silhouette: &'a NormalizedSilhouette,
    plan: Option<FftPlan>,
    spectrum: Vec<Complex>,
}

impl<'a> Smoother<'a> {
    pub fn new(silhouette: &'a NormalizedSilhouette) -> Self {
        let n = silhouette.len();
        let plan = FftPlan::new(n);
        let mut spectrum = Vec::new();
        if let Some(plan) = &plan {
            spectrum = silhouette
                .points
                .iter()
                .map(|p| Complex::new(p.x, p.y))
                .collect();
            plan.run(&mut spectrum, false);
        }
        Self {
            silhouette,
            plan,
            spectrum,
        }
    }

    /// The silhouette convolved with a Gaussian of standard deviation
    /// `sigma` (normalised arc-length units).
    pub fn at(&self, sigma: f64) -> NormalizedSilhouette {
        assert!(sigma >= 0.0, "smoothing scale must be non-negative");
        let n = self.silhouette.len();
        if sigma == 0.0 {
            return self.silhouette.clone();
        }
        let kernel = wrapped_gaussian(sigma * n as f64, n);
        let points = match &self.plan {
            Some(plan) => {
                let mut k: Vec<Complex> = kernel.iter().map(|&w| Complex::new(w, 0.0)).collect();
                plan.run(&mut k, false);
                let mut z: Vec<Complex> =
                    self.spectrum.iter().zip(&k).map(|(&a, &b)| a * b).collect();
                plan.run(&mut z, true);
                z.into_iter().map(|c| Point::new(c.re, c.im)).collect()
            }
            None => convolve_direct(&self.silhouette.points, &kernel),
        };
        self.silhouette.with_points(points)
    }
}

/// Convolves x(u) and y(u) with a unit-mass Gaussian of standard deviation
/// `sigma` in normalised arc-length units. The result is not re-normalised
/// in arc length; `deck_span`, bow and stern indices are carried over.
///
/// # Panics
///
/// If `sigma` is negative or NaN.
pub fn smooth(silhouette: &NormalizedSilhouette, sigma: f64) -> NormalizedSilhouette {
    Smoother::new(silhouette).at(sigma)
}

/// Signed curvature `(x'y'' - y'x'') / (x'^2 + y'^2)^(3/2)` with circular
/// central differences over the sample parameter `u = i / N`.
pub fn curvature(silhouette: &NormalizedSilhouette) -> Result<CurvatureProfile> {
    let p = &silhouette.points;
    let n = p.len();
    if n < 32 {
        return Err(Error::InvalidParameter("curvature needs at least 32 samples"));
    }
    let h = 1.0 / n as f64;
    let mut kappa = Vec::with_capacity(n);
    for i in 0..n {
        let (prev, cur, next) = (p[(i + n - 1) % n], p[i], p[(i + 1) % n]);
        let d1 = (next - prev) * (0.5 / h);
        let d2 = (next - cur * 2.0 + prev) * (1.0 / (h * h));
        let speed2 = d1.dot(d1);
        if speed2 < 1e-12 {
            return Err(Error::SingularPoint { index: i });
        }
        kappa.push(d1.cross(d2) / (speed2 * libm::sqrt(speed2)));
    }
    Ok(CurvatureProfile { kappa })
}

/// Horizontal position of a sample mapped to `[0, 1]` against the deck span
/// of the unsmoothed silhouette.
pub fn deck_project(silhouette: &NormalizedSilhouette, sample_index: usize) -> Result<f64> {
    let (lo, hi) = silhouette.deck_span;
    if !(hi > lo) {
        return Err(Error::DegenerateSilhouette);
    }
    let x = silhouette
        .points
        .get(sample_index)
        .ok_or(Error::InvalidParameter("sample index out of range"))?
        .x;
    Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0))
}
