//! Mask to silhouette to descriptor, with the parameters shared by model
//! ingestion and queries.

use ccss_core::scale_space::rows_until_convex;
use ccss_core::{
    build_ccss, extract_contour, preprocess, resample, threshold_shallow, BinaryMask, CcssImage,
    NormalizedSilhouette, PreprocessParams, ScaleSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of schedule rows.
pub const DEFAULT_MAX_ROWS: usize = 320;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescribeParams {
    /// Samples per silhouette.
    pub samples: usize,
    /// Radius of the opening and closing discs.
    pub se_radius: usize,
    /// Concavity threshold applied to stored descriptors.
    pub tau: f64,
}

impl Default for DescribeParams {
    fn default() -> Self {
        Self {
            samples: 512,
            se_radius: 2,
            tau: 0.005,
        }
    }
}

impl DescribeParams {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 32 {
            return Err(Error::InvalidArgument("samples must be at least 32".into()));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument("tau must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Preprocessing, contour tracing and resampling.
pub fn silhouette(mask: &BinaryMask, params: &DescribeParams) -> Result<NormalizedSilhouette> {
    let clean = preprocess(mask, &PreprocessParams::with_radius(params.se_radius))?;
    let contour = extract_contour(&clean)?;
    Ok(resample(&contour, params.samples)?)
}

/// Unfiltered CCSS image on `schedule`.
pub fn raw_descriptor(
    silhouette: &NormalizedSilhouette,
    schedule: &ScaleSchedule,
) -> Result<CcssImage> {
    Ok(build_ccss(silhouette, schedule)?)
}

pub fn descriptor(
    silhouette: &NormalizedSilhouette,
    schedule: &ScaleSchedule,
    tau: f64,
) -> Result<CcssImage> {
    Ok(threshold_shallow(&raw_descriptor(silhouette, schedule)?, tau))
}

/// Rows needed for this silhouette to become convex.
pub fn rows_needed(silhouette: &NormalizedSilhouette, max_rows: usize) -> Result<usize> {
    Ok(rows_until_convex(silhouette, max_rows)?)
}
