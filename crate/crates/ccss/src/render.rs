//! PNG plots of scale-space images and silhouette evolution.
//!
//! Scale-space plots put deck position (or arc length for CSS) on the
//! horizontal axis and the schedule row on the vertical axis, finest scale
//! at the bottom.

use std::io::Cursor;

use ccss_core::silhouette::Smoother;
use ccss_core::{CcssImage, CssImage, NormalizedSilhouette, ScaleSchedule};
use image::{ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};

const PLOT_W: u32 = 640;
const PLOT_H: u32 = 400;
const MARGIN: u32 = 24;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const FRAME: Rgb<u8> = Rgb([96, 96, 96]);
const GRID: Rgb<u8> = Rgb([228, 228, 228]);
const MAX_COLOR: Rgb<u8> = Rgb([24, 64, 200]);
const MIN_COLOR: Rgb<u8> = Rgb([210, 40, 30]);
const TRACE: Rgb<u8> = Rgb([20, 20, 20]);

/// A rendered plot and the number of markers drawn on it.
#[derive(Debug, Clone)]
pub struct Plot {
    pub image: RgbImage,
    pub points: usize,
}

impl Plot {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(&self.image)
    }
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    image
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(image: &mut RgbImage, left: u32, top: u32, width: u32, height: u32) -> Self {
        let f = Frame {
            x0: f64::from(left),
            y0: f64::from(top),
            w: f64::from(width),
            h: f64::from(height),
        };
        for i in 1..4 {
            let gx = f.x0 + f.w * f64::from(i) / 4.0;
            line(image, (gx, f.y0), (gx, f.y0 + f.h), GRID);
        }
        let corners = [
            (f.x0, f.y0),
            (f.x0 + f.w, f.y0),
            (f.x0 + f.w, f.y0 + f.h),
            (f.x0, f.y0 + f.h),
        ];
        for i in 0..4 {
            line(image, corners[i], corners[(i + 1) % 4], FRAME);
        }
        f
    }

    /// `u` in `[0, 1]` left to right, `v` in `[0, 1]` bottom to top.
    fn map(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.x0 + u.clamp(0.0, 1.0) * self.w,
            self.y0 + (1.0 - v.clamp(0.0, 1.0)) * self.h,
        )
    }
}

fn put(image: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < image.width() && (y as u32) < image.height() {
        image.put_pixel(x as u32, y as u32, color);
    }
}

fn line(image: &mut RgbImage, a: (f64, f64), b: (f64, f64), color: Rgb<u8>) {
    let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a.0 + (b.0 - a.0) * t;
        let y = a.1 + (b.1 - a.1) * t;
        put(image, x.round() as i64, y.round() as i64, color);
    }
}

fn marker(image: &mut RgbImage, at: (f64, f64), color: Rgb<u8>) {
    let (cx, cy) = (at.0.round() as i64, at.1.round() as i64);
    for dy in -1..=1 {
        for dx in -1..=1 {
            put(image, cx + dx, cy + dy, color);
        }
    }
}

fn row_height(rows: usize, r: usize) -> f64 {
    if rows <= 1 {
        0.0
    } else {
        r as f64 / (rows - 1) as f64
    }
}

fn blank(width: u32, height: u32) -> RgbImage {
    RgbImage::from_pixel(width, height, WHITE)
}

/// Scatter plot of a CCSS image: maxima in blue, minima in red.
pub fn plot_ccss(ccss: &CcssImage) -> Plot {
    let mut image = blank(PLOT_W, PLOT_H);
    let frame = Frame::new(
        &mut image,
        MARGIN,
        MARGIN,
        PLOT_W - 2 * MARGIN,
        PLOT_H - 2 * MARGIN,
    );
    let rows = ccss.rows().len();
    let mut points = 0;
    for (r, row) in ccss.rows().iter().enumerate() {
        let v = row_height(rows, r);
        for p in &row.maxima {
            marker(&mut image, frame.map(p.x_deck, v), MAX_COLOR);
            points += 1;
        }
        for p in &row.minima {
            marker(&mut image, frame.map(p.x_deck, v), MIN_COLOR);
            points += 1;
        }
    }
    Plot { image, points }
}

/// Scatter plot of zero-crossing positions per scale.
pub fn plot_css(css: &CssImage) -> Plot {
    let mut image = blank(PLOT_W, PLOT_H);
    let frame = Frame::new(
        &mut image,
        MARGIN,
        MARGIN,
        PLOT_W - 2 * MARGIN,
        PLOT_H - 2 * MARGIN,
    );
    let rows = css.rows().len();
    let mut points = 0;
    for (r, row) in css.rows().iter().enumerate() {
        let v = row_height(rows, r);
        for &u in row {
            marker(&mut image, frame.map(u, v), TRACE);
            points += 1;
        }
    }
    Plot { image, points }
}

/// The silhouette at the first, middle and last scale of `schedule`, side
/// by side. `points` counts the panels.
pub fn plot_evolution(silhouette: &NormalizedSilhouette, schedule: &ScaleSchedule) -> Plot {
    let sigmas = schedule.sigmas();
    let stages = [
        0.0,
        sigmas.get(sigmas.len() / 2).copied().unwrap_or(0.0),
        sigmas.last().copied().unwrap_or(0.0),
    ];
    panels(silhouette, &stages)
}

/// Outline of a silhouette, used for model thumbnails.
pub fn plot_silhouette(silhouette: &NormalizedSilhouette) -> Plot {
    panels(silhouette, &[0.0])
}

/// One panel per smoothing scale, all on the same axes.
fn panels(silhouette: &NormalizedSilhouette, stages: &[f64]) -> Plot {
    const PANEL_W: u32 = 320;
    const PANEL_H: u32 = 200;
    let mut image = blank(stages.len() as u32 * PANEL_W, PANEL_H);
    let smoother = Smoother::new(silhouette);
    // One scale for all panels so shrinkage under smoothing stays visible.
    let pts = silhouette.points();
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        lo_x = lo_x.min(p.x);
        hi_x = hi_x.max(p.x);
        lo_y = lo_y.min(p.y);
        hi_y = hi_y.max(p.y);
    }
    let inner_w = f64::from(PANEL_W - 2 * MARGIN);
    let inner_h = f64::from(PANEL_H - 2 * MARGIN);
    let scale = (inner_w / (hi_x - lo_x).max(1e-12)).min(inner_h / (hi_y - lo_y).max(1e-12));
    for (i, &sigma) in stages.iter().enumerate() {
        let left = i as u32 * PANEL_W;
        Frame::new(&mut image, left + 4, 4, PANEL_W - 8, PANEL_H - 8);
        let evolved = smoother.at(sigma);
        let ox = f64::from(left + MARGIN) + (inner_w - (hi_x - lo_x) * scale) / 2.0;
        let oy = f64::from(MARGIN) + (inner_h - (hi_y - lo_y) * scale) / 2.0;
        // Image coordinates: y grows downwards, as in the source mask.
        let to_px = |x: f64, y: f64| (ox + (x - lo_x) * scale, oy + (y - lo_y) * scale);
        let e = evolved.points();
        for j in 0..e.len() {
            let a = e[j];
            let b = e[(j + 1) % e.len()];
            line(&mut image, to_px(a.x, a.y), to_px(b.x, b.y), TRACE);
        }
        let s = e[evolved.stern_index()];
        marker(&mut image, to_px(s.x, s.y), MIN_COLOR);
    }
    Plot {
        image,
        points: stages.len(),
    }
}
