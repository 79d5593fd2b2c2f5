//! JSON documents: descriptors, silhouettes and ranked query results.

use ccss_core::{
    BinaryMask, CcssImage, CcssRow, ExtremumKind, NormalizedSilhouette, Point, RankedList,
    ScalePoint, ScaleSchedule,
};
use serde::{Deserialize, Serialize};

use crate::database::{Database, QueryParams};
use crate::error::{Error, Result};

/// Version written into every persisted document.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Max,
    Min,
}

impl From<ExtremumKind> for KindTag {
    fn from(k: ExtremumKind) -> Self {
        match k {
            ExtremumKind::Maximum => KindTag::Max,
            ExtremumKind::Minimum => KindTag::Min,
        }
    }
}

/// A CCSS image as `{format_version, schedule, rows}`, each row a list of
/// `[x_deck, c, "max" | "min"]` triples ordered by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcssDoc {
    pub format_version: u32,
    pub schedule: Vec<f64>,
    pub rows: Vec<Vec<(f64, f64, KindTag)>>,
}

impl From<&CcssImage> for CcssDoc {
    fn from(img: &CcssImage) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            schedule: img.schedule().sigmas().to_vec(),
            rows: img
                .rows()
                .iter()
                .map(|row| {
                    row.points()
                        .into_iter()
                        .map(|p| (p.x_deck, p.c, p.kind.into()))
                        .collect()
                })
                .collect(),
        }
    }
}

impl CcssDoc {
    pub fn to_image(&self) -> Result<CcssImage> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "descriptor format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let schedule = ScaleSchedule::new(self.schedule.clone())?;
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, triples)| {
                let mut row = CcssRow::default();
                for &(x_deck, c, tag) in triples {
                    let kind = match tag {
                        KindTag::Max => ExtremumKind::Maximum,
                        KindTag::Min => ExtremumKind::Minimum,
                    };
                    let p = ScalePoint {
                        x_deck,
                        row: r,
                        c,
                        kind,
                    };
                    match kind {
                        ExtremumKind::Maximum => row.maxima.push(p),
                        ExtremumKind::Minimum => row.minima.push(p),
                    }
                }
                row
            })
            .collect();
        Ok(CcssImage::new(schedule, rows)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteDoc {
    /// Normalized samples, stern first.
    pub points: Vec<[f64; 2]>,
    pub bow_index: usize,
    pub stern_index: usize,
    pub deck_span: [f64; 2],
    /// Source perimeter in pixels.
    pub scale_px: f64,
}

impl From<&NormalizedSilhouette> for SilhouetteDoc {
    fn from(s: &NormalizedSilhouette) -> Self {
        let (lo, hi) = s.deck_span();
        Self {
            points: s.points().iter().map(|p| [p.x, p.y]).collect(),
            bow_index: s.bow_index(),
            stern_index: s.stern_index(),
            deck_span: [lo, hi],
            scale_px: s.scale_px(),
        }
    }
}

impl SilhouetteDoc {
    pub fn to_silhouette(&self) -> Result<NormalizedSilhouette> {
        Ok(NormalizedSilhouette::from_parts(
            self.points.iter().map(|&[x, y]| Point::new(x, y)).collect(),
            self.bow_index,
            self.stern_index,
            (self.deck_span[0], self.deck_span[1]),
            self.scale_px,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub alpha: f64,
    pub sigma_gain: f64,
    pub tau: f64,
    pub se_radius: usize,
    pub samples: usize,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDoc {
    pub rank: usize,
    pub id: String,
    pub display_name: String,
    pub class_name: String,
    pub cost: f64,
    pub shift: f64,
    pub mirrored: bool,
}

/// The ranked answer to one query, shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub format_version: u32,
    /// Stable digest of the target mask and parameters.
    pub query_id: String,
    pub params: ParamsDoc,
    pub model_count: usize,
    pub results: Vec<CandidateDoc>,
}

impl RankedDoc {
    pub fn new(
        db: &Database,
        mask: &BinaryMask,
        params: &QueryParams,
        top_k: usize,
        list: &RankedList,
    ) -> Self {
        let params_doc = ParamsDoc {
            alpha: params.matching.alpha,
            sigma_gain: params.matching.sigma_gain,
            tau: params.tau,
            se_radius: params.se_radius.unwrap_or(db.params().se_radius),
            samples: db.params().samples,
            top_k,
        };
        let results = list
            .top(top_k)
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let meta = db.get(&r.model_id).map(|m| &m.meta);
                CandidateDoc {
                    rank: i + 1,
                    id: r.model_id.clone(),
                    display_name: meta.map(|m| m.display_name.clone()).unwrap_or_default(),
                    class_name: meta.map(|m| m.class_name.clone()).unwrap_or_default(),
                    cost: r.total_cost,
                    shift: r.shift_applied,
                    mirrored: r.mirrored,
                }
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            query_id: query_id(mask, &params_doc),
            params: params_doc,
            model_count: list.len(),
            results,
        }
    }

    /// Canonical serialization; byte-identical for identical inputs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes") + "\n"
    }
}

/// FNV-1a over the mask bits and the parameter values.
fn query_id(mask: &BinaryMask, params: &ParamsDoc) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(&(mask.width() as u64).to_le_bytes());
    feed(&(mask.height() as u64).to_le_bytes());
    for chunk in mask.bits().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << i));
        feed(&[byte]);
    }
    for v in [params.alpha, params.sigma_gain, params.tau] {
        feed(&v.to_bits().to_le_bytes());
    }
    for v in [params.se_radius, params.samples, params.top_k] {
        feed(&(v as u64).to_le_bytes());
    }
    format!("{h:016x}")
}
