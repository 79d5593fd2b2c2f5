//! Concavity-convexity scale space (CCSS) and classic curvature scale space
//! (CSS) images.
//!
//! At every scale of a [`ScaleSchedule`] the silhouette is smoothed, its
//! curvature zero crossings are located, and each arc between neighbouring
//! crossings becomes one [`ScalePoint`]: the arc sample farthest from the
//! chord through the two crossings, valued by that distance and signed by
//! the arc's curvature. The point is located by deck projection rather than
//! by arc length.

use alloc::vec::Vec;

use crate::silhouette::{curvature, deck_project, CurvatureProfile, NormalizedSilhouette, Point, Smoother};
use crate::{Error, Result};

/// Curvature magnitudes at or below this value carry no sign.
pub const CURVATURE_EPSILON: f64 = 1e-9;

/// Strictly increasing Gaussian standard deviations, in normalised
/// arc-length units. Row `r` of a scale-space image was computed at
/// `sigmas()[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSchedule {
    sigmas: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty"));
        }
        if !(sigmas[0] > 0.0) {
            return Err(Error::InvalidSchedule("first scale must be positive"));
        }
        if sigmas.windows(2).any(|w| !(w[1] > w[0])) || sigmas.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidSchedule("scales must be finite and strictly increasing"));
        }
        Ok(Self { sigmas })
    }

    /// `rows` scales in steps of one sample spacing: `(k + 1) / samples`.
    pub fn uniform(samples: usize, rows: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive"));
        }
        Self::new((1..=rows).map(|k| k as f64 / samples as f64).collect())
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }
}

/// Number of uniform rows needed before the silhouette has no curvature
/// zero crossings, counting the first crossing-free row, capped at
/// `max_rows`.
pub fn rows_until_convex(silhouette: &NormalizedSilhouette, max_rows: usize) -> Result<usize> {
    let n = silhouette.len() as f64;
    let smoother = Smoother::new(silhouette);
    for k in 1..=max_rows {
        let evolved = smoother.at(k as f64 / n);
        if zero_crossings(&curvature(&evolved)?).is_empty() {
            return Ok(k);
        }
    }
    Ok(max_rows)
}

/// Zero-crossing count of every row of the schedule.
pub fn crossing_counts(
    silhouette: &NormalizedSilhouette,
    schedule: &ScaleSchedule,
) -> Result<Vec<usize>> {
    let smoother = Smoother::new(silhouette);
    schedule
        .sigmas()
        .iter()
        .map(|&s| Ok(zero_crossings(&curvature(&smoother.at(s))?).len()))
        .collect()
}

/// A curvature sign change between two significant samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCrossing {
    /// Last significant sample before the change.
    pub index: usize,
    /// First significant sample after the change.
    pub next: usize,
    /// Linearly interpolated zero, as a fractional sample index in `[0, N)`.
    pub position: f64,
}

/// Curvature sign changes, in sample order.
///
/// Samples with `|kappa| <= CURVATURE_EPSILON` are skipped, so a sign change
/// across a run of straight (zero-curvature) samples is still reported; it
/// is placed by linear interpolation across the gap. On a closed curve the
/// count is always even.
pub fn zero_crossings(profile: &CurvatureProfile) -> Vec<ZeroCrossing> {
    let k = &profile.kappa;
    let n = k.len();
    let significant: Vec<usize> = (0..n).filter(|&i| k[i].abs() > CURVATURE_EPSILON).collect();
    let m = significant.len();
    let mut out = Vec::new();
    if m < 2 {
        return out;
    }
    for j in 0..m {
        let (a, b) = (significant[j], significant[(j + 1) % m]);
        if (k[a] > 0.0) == (k[b] > 0.0) {
            continue;
        }
        let gap = (b + n - a) % n;
        let t = k[a] / (k[a] - k[b]);
        let mut position = a as f64 + t * gap as f64;
        if position >= n as f64 {
            position -= n as f64;
        }
        out.push(ZeroCrossing {
            index: a,
            next: b,
            position,
        });
    }
    out
}

fn point_at(points: &[Point], position: f64) -> Point {
    let n = points.len();
    let i = libm::floor(position) as usize % n;
    let t = position - libm::floor(position);
    points[i].lerp(points[(i + 1) % n], t)
}

/// Farthest arc sample from a lobe chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe {
    pub peak_index: usize,
    /// Distance of the peak from the chord, signed by the arc's curvature
    /// (positive for convexities).
    pub concavity: f64,
}

/// Concavity of the arc running from crossing `z0` to crossing `z1`.
///
/// The chord joins the interpolated crossing positions; the arc consists of
/// the samples from `z0.next` to `z1.index`. Distances are in normalised
/// arc-length units.
pub fn lobe_concavity(
    silhouette: &NormalizedSilhouette,
    profile: &CurvatureProfile,
    z0: &ZeroCrossing,
    z1: &ZeroCrossing,
) -> Result<Lobe> {
    let pts = silhouette.points();
    let n = pts.len();
    let p0 = point_at(pts, z0.position);
    let p1 = point_at(pts, z1.position);
    let chord = p1 - p0;
    let len = chord.norm();
    if !(len > 1e-15) {
        return Err(Error::DegenerateChord);
    }
    let sign = if profile.kappa[z0.next] > 0.0 { 1.0 } else { -1.0 };
    let count = (z1.index + n - z0.next) % n + 1;
    let mut peak = z0.next;
    let mut best = -1.0;
    for step in 0..count {
        let i = (z0.next + step) % n;
        let d = chord.cross(pts[i] - p0).abs() / len;
        if d > best {
            best = d;
            peak = i;
        }
    }
    Ok(Lobe {
        peak_index: peak,
        concavity: sign * best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtremumKind {
    /// Curvature maximum: a convexity.
    Maximum,
    /// Curvature minimum: a concavity.
    Minimum,
}

/// One lobe at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    /// Deck-projected position in `[0, 1]`.
    pub x_deck: f64,
    pub row: usize,
    /// Signed lobe concavity; positive for maxima.
    pub c: f64,
    pub kind: ExtremumKind,
}

/// The two point families of one scale-space row, each sorted by `x_deck`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CcssRow {
    pub maxima: Vec<ScalePoint>,
    pub minima: Vec<ScalePoint>,
}

impl CcssRow {
    pub fn family(&self, kind: ExtremumKind) -> &[ScalePoint] {
        match kind {
            ExtremumKind::Maximum => &self.maxima,
            ExtremumKind::Minimum => &self.minima,
        }
    }

    pub fn len(&self) -> usize {
        self.maxima.len() + self.minima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maxima.is_empty() && self.minima.is_empty()
    }

    /// Both families merged and sorted by position.
    pub fn points(&self) -> Vec<ScalePoint> {
        let mut all: Vec<ScalePoint> = self.maxima.iter().chain(&self.minima).copied().collect();
        all.sort_by(|a, b| a.x_deck.total_cmp(&b.x_deck));
        all
    }

    fn push(&mut self, p: ScalePoint) {
        match p.kind {
            ExtremumKind::Maximum => self.maxima.push(p),
            ExtremumKind::Minimum => self.minima.push(p),
        }
    }

    fn sort(&mut self) {
        self.maxima.sort_by(|a, b| a.x_deck.total_cmp(&b.x_deck));
        self.minima.sort_by(|a, b| a.x_deck.total_cmp(&b.x_deck));
    }

    fn retain(&mut self, mut keep: impl FnMut(&ScalePoint) -> bool) {
        self.maxima.retain(&mut keep);
        self.minima.retain(&mut keep);
    }
}

/// A CCSS image: one [`CcssRow`] per schedule scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CcssImage {
    schedule: ScaleSchedule,
    rows: Vec<CcssRow>,
}

impl CcssImage {
    /// Assembles an image from rows, checking row indices and restoring the
    /// per-family ordering.
    pub fn new(schedule: ScaleSchedule, mut rows: Vec<CcssRow>) -> Result<Self> {
        if rows.len() != schedule.len() {
            return Err(Error::InvalidSchedule("row count differs from schedule length"));
        }
        for (r, row) in rows.iter_mut().enumerate() {
            let valid = |p: &ScalePoint| {
                p.row == r
                    && p.x_deck.is_finite()
                    && p.c.is_finite()
                    && (p.kind == ExtremumKind::Maximum) == (p.c >= 0.0)
            };
            if !row.maxima.iter().all(|p| valid(p) && p.kind == ExtremumKind::Maximum)
                || !row.minima.iter().all(|p| valid(p) && p.kind == ExtremumKind::Minimum)
            {
                return Err(Error::InvalidParameter("scale point does not fit its row"));
            }
            row.sort();
        }
        Ok(Self { schedule, rows })
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    pub fn rows(&self) -> &[CcssRow] {
        &self.rows
    }

    pub fn point_count(&self) -> usize {
        self.rows.iter().map(CcssRow::len).sum()
    }

    /// All points, row by row.
    pub fn points(&self) -> impl Iterator<Item = &ScalePoint> {
        self.rows.iter().flat_map(|r| r.maxima.iter().chain(&r.minima))
    }

    /// Every position moved by `dx`. Positions are not clamped.
    pub fn translated(&self, dx: f64) -> CcssImage {
        let mut out = self.clone();
        for row in &mut out.rows {
            for p in row.maxima.iter_mut().chain(row.minima.iter_mut()) {
                p.x_deck += dx;
            }
        }
        out
    }

    /// Positions reflected as `x -> 1 - x`.
    pub fn mirrored(&self) -> CcssImage {
        let mut out = self.clone();
        for row in &mut out.rows {
            for p in row.maxima.iter_mut().chain(row.minima.iter_mut()) {
                p.x_deck = 1.0 - p.x_deck;
            }
            row.sort();
        }
        out
    }
}

/// Classic CSS image: curvature zero-crossing arc positions per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CssImage {
    schedule: ScaleSchedule,
    /// Per row, crossing positions in normalised arc length `[0, 1)`.
    rows: Vec<Vec<f64>>,
}

impl CssImage {
    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `(u, sigma)` trace points.
    pub fn lobes(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .zip(self.schedule.sigmas())
            .flat_map(|(row, &s)| row.iter().map(move |&u| (u, s)))
            .collect()
    }

    pub fn point_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Lobes of an already smoothed silhouette.
pub fn ccss_row(evolved: &NormalizedSilhouette, row: usize) -> Result<CcssRow> {
    let profile = curvature(evolved)?;
    let crossings = zero_crossings(&profile);
    let m = crossings.len();
    let mut out = CcssRow::default();
    for j in 0..m {
        let (z0, z1) = (&crossings[j], &crossings[(j + 1) % m]);
        let lobe = match lobe_concavity(evolved, &profile, z0, z1) {
            Ok(lobe) => lobe,
            // Coincident crossings: only reachable on a collapsed curve.
            Err(Error::DegenerateChord) => Lobe {
                peak_index: z0.next,
                concavity: 0.0,
            },
            Err(e) => return Err(e),
        };
        let kind = if profile.kappa[z0.next] > 0.0 {
            ExtremumKind::Maximum
        } else {
            ExtremumKind::Minimum
        };
        out.push(ScalePoint {
            x_deck: deck_project(evolved, lobe.peak_index)?,
            row,
            c: match kind {
                ExtremumKind::Maximum => lobe.concavity.abs(),
                ExtremumKind::Minimum => -lobe.concavity.abs(),
            },
            kind,
        });
    }
    out.sort();
    Ok(out)
}

/// Two-pass CCSS construction at every scale of the schedule.
pub fn build_ccss(silhouette: &NormalizedSilhouette, schedule: &ScaleSchedule) -> Result<CcssImage> {
    let smoother = Smoother::new(silhouette);
    let rows = schedule
        .sigmas()
        .iter()
        .enumerate()
        .map(|(r, &s)| ccss_row(&smoother.at(s), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(CcssImage {
        schedule: schedule.clone(),
        rows,
    })
}

/// Drops every point with `|c| < tau`. `tau = 0` leaves the image unchanged.
pub fn threshold_shallow(ccss: &CcssImage, tau: f64) -> CcssImage {
    let mut out = ccss.clone();
    for row in &mut out.rows {
        row.retain(|p| p.c.abs() >= tau);
    }
    out
}

/// Zero-crossing arc positions at every scale of the schedule.
pub fn build_css(silhouette: &NormalizedSilhouette, schedule: &ScaleSchedule) -> Result<CssImage> {
    let smoother = Smoother::new(silhouette);
    let n = silhouette.len() as f64;
    let rows = schedule
        .sigmas()
        .iter()
        .map(|&s| {
            let profile = curvature(&smoother.at(s))?;
            Ok(zero_crossings(&profile).iter().map(|z| z.position / n).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CssImage {
        schedule: schedule.clone(),
        rows,
    })
}
