//! Concavity-convexity scale space (CCSS) silhouette descriptors.
//!
//! The crate is `no_std` (with `alloc`) and contains the whole numeric
//! pipeline, from a binary object mask to a ranked list of models:
//!
//! 1. [`morphology`]: opening with reconstruction, closing and hole filling.
//! 2. [`contour`]: boundary following with backtracking.
//! 3. [`silhouette`]: arc-length resampling, bow/stern detection, Gaussian
//!    evolution, curvature and deck projection.
//! 4. [`scale_space`]: CCSS and classic CSS images.
//! 5. [`matching`]: shift correction and per-row optimal assignment cost.
//! 6. [`ranking`]: sorting match results into a ranked list.
//!
//! File formats, persistence and the command line live in the `ccss` crate.
#![no_std]
// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contour;
mod error;
mod fft;
pub mod mask;
pub mod matching;
pub mod morphology;
pub mod ranking;
pub mod scale_space;
pub mod silhouette;

pub use contour::{extract_contour, ClosedContour};
pub use error::{Error, Result};
pub use mask::{BinaryMask, Connectivity};
pub use matching::{
    match_cost, match_either, mirror_min, refined_shift, rmm_exhaustive_cost,
    rmm_matrix, rmm_optimal_cost, row_cost, shift_correction, CostMatrix, MatchCost, MatchParams,
    RowPoints, ShiftEstimate,
};
pub use morphology::{
    closing, fill_holes, opening_with_reconstruction, preprocess, PreprocessParams,
    StructuringElement,
};
pub use ranking::{MatchResult, RankedList};
pub use scale_space::{
    build_ccss, build_css, lobe_concavity, threshold_shallow, zero_crossings, CcssImage, CcssRow,
    CssImage, ExtremumKind, ScalePoint, ScaleSchedule, ZeroCrossing,
};
pub use silhouette::{
    curvature, deck_project, detect_bow_stern, resample, smooth, CurvatureProfile,
    NormalizedSilhouette, Point,
};
