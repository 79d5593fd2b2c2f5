//! Model database: ingestion, persistence and ranked queries.
//!
//! On disk a database is a directory holding `index.json` and one
//! `models/<id>.json` per record. Every document carries `format_version`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ccss_core::matching::match_either;
use ccss_core::{
    threshold_shallow, BinaryMask, CcssImage, MatchParams, MatchResult, NormalizedSilhouette,
    RankedList, ScaleSchedule,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::describe::{self, DescribeParams, DEFAULT_MAX_ROWS};
use crate::error::{Error, Result};
use crate::format::{CcssDoc, SilhouetteDoc, FORMAT_VERSION};
use crate::io::read_mask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub id: String,
    pub display_name: String,
    pub class_name: String,
    /// Mask path as given at ingestion.
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub meta: ModelMeta,
    pub silhouette: NormalizedSilhouette,
    pub descriptor: CcssImage,
    /// Descriptor of the horizontally flipped source mask.
    pub descriptor_mirrored: CcssImage,
}

/// Ids become file names, so they are restricted to a portable alphabet.
pub fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid model id {id:?}")))
    }
}

/// Query-time parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryParams {
    pub matching: MatchParams,
    /// Concavity threshold; must not be below the database's.
    pub tau: f64,
    /// Overrides the database's structuring-element radius for the target.
    pub se_radius: Option<usize>,
}

impl QueryParams {
    pub fn for_database(db: &Database) -> Self {
        Self {
            matching: MatchParams::default(),
            tau: db.params.tau,
            se_radius: None,
        }
    }
}

/// A described query target.
#[derive(Debug, Clone)]
pub struct Target {
    pub silhouette: NormalizedSilhouette,
    pub descriptor: CcssImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    params: DescribeParams,
    schedule: ScaleSchedule,
    records: Vec<ModelRecord>,
    index: HashMap<String, usize>,
}

impl Database {
    fn from_records(
        params: DescribeParams,
        schedule: ScaleSchedule,
        records: Vec<ModelRecord>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.meta.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.meta.id.clone()));
            }
        }
        Ok(Self {
            params,
            schedule,
            records,
            index,
        })
    }

    pub fn params(&self) -> &DescribeParams {
        &self.params
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ModelRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    /// Adds one model on the existing schedule.
    pub fn ingest(&mut self, meta: ModelMeta, mask: &BinaryMask) -> Result<&ModelRecord> {
        validate_id(&meta.id)?;
        if self.index.contains_key(&meta.id) {
            return Err(Error::DuplicateId(meta.id));
        }
        let pending = Pending::describe(meta, mask, &self.params)?;
        let needed = describe::rows_needed(&pending.silhouette, self.schedule.len() + 1)?;
        if needed > self.schedule.len() {
            warn!(
                "{}: still has curvature zero crossings at the last schedule row",
                pending.meta.id
            );
        }
        let record = pending.finish(&self.schedule, self.params.tau)?;
        self.index.insert(record.meta.id.clone(), self.records.len());
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Describes a target mask on the database schedule.
    pub fn describe_target(&self, mask: &BinaryMask, params: &QueryParams) -> Result<Target> {
        let dp = DescribeParams {
            se_radius: params.se_radius.unwrap_or(self.params.se_radius),
            tau: params.tau,
            ..self.params
        };
        let silhouette = describe::silhouette(mask, &dp)?;
        let descriptor = describe::descriptor(&silhouette, &self.schedule, params.tau)?;
        Ok(Target {
            silhouette,
            descriptor,
        })
    }

    /// Ranks every model against a mask.
    pub fn query(&self, mask: &BinaryMask, params: &QueryParams) -> Result<RankedList> {
        if self.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        self.check_query_params(params)?;
        let target = self.describe_target(mask, params)?;
        self.rank(&target.descriptor, params)
    }

    fn check_query_params(&self, params: &QueryParams) -> Result<()> {
        params.matching.validate()?;
        if !(params.tau >= self.params.tau) || !params.tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau {} is below the database threshold {}",
                params.tau, self.params.tau
            )));
        }
        Ok(())
    }

    /// Ranks every model against an already described target. Model
    /// descriptors are re-filtered when `params.tau` exceeds the database's.
    pub fn rank(&self, target: &CcssImage, params: &QueryParams) -> Result<RankedList> {
        if self.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        self.check_query_params(params)?;
        let refilter = params.tau > self.params.tau;
        let results = self
            .records
            .par_iter()
            .map(|r| {
                let (cost, mirrored) = if refilter {
                    match_either(
                        target,
                        &threshold_shallow(&r.descriptor, params.tau),
                        &threshold_shallow(&r.descriptor_mirrored, params.tau),
                        &params.matching,
                    )?
                } else {
                    match_either(target, &r.descriptor, &r.descriptor_mirrored, &params.matching)?
                };
                Ok(MatchResult {
                    model_id: r.meta.id.clone(),
                    total_cost: cost.total_cost,
                    shift_applied: cost.shift_applied,
                    mirrored,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::new(results))
    }

    /// Writes `index.json` and `models/<id>.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let models = dir.join("models");
        fs::create_dir_all(&models).map_err(Error::io(&models))?;
        let mut entries = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let file = format!("models/{}.json", r.meta.id);
            let doc = ModelDoc {
                format_version: FORMAT_VERSION,
                meta: r.meta.clone(),
                silhouette: SilhouetteDoc::from(&r.silhouette),
                descriptor: CcssDoc::from(&r.descriptor),
                descriptor_mirrored: CcssDoc::from(&r.descriptor_mirrored),
            };
            write_json(&dir.join(&file), &doc)?;
            entries.push(IndexEntry {
                meta: r.meta.clone(),
                file,
            });
        }
        let index = IndexDoc {
            format_version: FORMAT_VERSION,
            params: self.params,
            schedule: self.schedule.sigmas().to_vec(),
            models: entries,
        };
        write_json(&dir.join("index.json"), &index)
    }

    /// Loads a database saved by [`Database::save`]. Nothing is returned
    /// unless every document parses and agrees with the index.
    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join("index.json");
        let index: IndexDoc = read_versioned(&index_path)?;
        index.params.validate()?;
        let schedule = ScaleSchedule::new(index.schedule.clone())?;
        let records = index
            .models
            .par_iter()
            .map(|entry| {
                validate_id(&entry.meta.id)?;
                let path = dir.join(&entry.file);
                let doc: ModelDoc = read_versioned(&path)?;
                if doc.meta != entry.meta {
                    return Err(Error::Format(format!(
                        "{}: metadata differs from index.json",
                        path.display()
                    )));
                }
                let descriptor = doc.descriptor.to_image()?;
                let descriptor_mirrored = doc.descriptor_mirrored.to_image()?;
                if descriptor.schedule() != &schedule || descriptor_mirrored.schedule() != &schedule {
                    return Err(Error::Format(format!(
                        "{}: descriptor schedule differs from index.json",
                        path.display()
                    )));
                }
                Ok(ModelRecord {
                    meta: doc.meta,
                    silhouette: doc.silhouette.to_silhouette()?,
                    descriptor,
                    descriptor_mirrored,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_records(index.params, schedule, records)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    #[serde(flatten)]
    meta: ModelMeta,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexDoc {
    format_version: u32,
    params: DescribeParams,
    schedule: Vec<f64>,
    models: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    #[serde(flatten)]
    meta: ModelMeta,
    silhouette: SilhouetteDoc,
    descriptor: CcssDoc,
    descriptor_mirrored: CcssDoc,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

fn read_versioned<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let probe: VersionProbe = serde_json::from_str(&text).map_err(Error::json(path))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_str(&text).map_err(Error::json(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::json(path))?;
    fs::write(path, text + "\n").map_err(Error::io(path))
}

/// A described model waiting for the shared schedule.
struct Pending {
    meta: ModelMeta,
    silhouette: NormalizedSilhouette,
    mirrored: NormalizedSilhouette,
}

impl Pending {
    fn describe(meta: ModelMeta, mask: &BinaryMask, params: &DescribeParams) -> Result<Self> {
        let silhouette = describe::silhouette(mask, params)?;
        let mirrored = describe::silhouette(&mask.flip_horizontal(), params)?;
        Ok(Self {
            meta,
            silhouette,
            mirrored,
        })
    }

    fn finish(self, schedule: &ScaleSchedule, tau: f64) -> Result<ModelRecord> {
        Ok(ModelRecord {
            descriptor: describe::descriptor(&self.silhouette, schedule, tau)?,
            descriptor_mirrored: describe::descriptor(&self.mirrored, schedule, tau)?,
            meta: self.meta,
            silhouette: self.silhouette,
        })
    }
}

/// Outcome of adding one model to a [`DatabaseBuilder`].
#[derive(Debug)]
pub struct IngestFailure {
    pub id: String,
    pub error: Error,
}

/// Two-phase database construction: silhouettes are described as models are
/// added; the shared schedule is fixed on [`finish`](Self::finish), long
/// enough for every model (in both orientations) to become convex.
pub struct DatabaseBuilder {
    params: DescribeParams,
    max_rows: usize,
    pending: Vec<Pending>,
    failures: Vec<IngestFailure>,
}

impl DatabaseBuilder {
    pub fn new(params: DescribeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            max_rows: DEFAULT_MAX_ROWS,
            pending: Vec::new(),
            failures: Vec::new(),
        })
    }

    pub fn max_rows(mut self, rows: usize) -> Self {
        self.max_rows = rows.max(1);
        self
    }

    /// Adds a model from a mask; failures are recorded, logged and skipped.
    pub fn add_mask(&mut self, meta: ModelMeta, mask: &BinaryMask) -> bool {
        let id = meta.id.clone();
        let result = validate_id(&id)
            .and_then(|_| {
                if self.pending.iter().any(|p| p.meta.id == id) {
                    Err(Error::DuplicateId(id.clone()))
                } else {
                    Ok(())
                }
            })
            .and_then(|_| Pending::describe(meta, mask, &self.params));
        self.record(id, result)
    }

    pub fn add_file(&mut self, meta: ModelMeta, path: &Path) -> bool {
        match read_mask(path) {
            Ok(mask) => self.add_mask(meta, &mask),
            Err(e) => self.record(meta.id, Err(e)),
        }
    }

    /// Describes many masks in parallel, in input order.
    pub fn add_masks_parallel(&mut self, items: Vec<(ModelMeta, BinaryMask)>) {
        let params = self.params;
        let described: Vec<(String, Result<Pending>)> = items
            .into_par_iter()
            .map(|(meta, mask)| {
                let id = meta.id.clone();
                let r = validate_id(&id).and_then(|_| Pending::describe(meta, &mask, &params));
                (id, r)
            })
            .collect();
        for (id, r) in described {
            let r = r.and_then(|p| {
                if self.pending.iter().any(|q| q.meta.id == p.meta.id) {
                    Err(Error::DuplicateId(p.meta.id))
                } else {
                    Ok(p)
                }
            });
            self.record(id, r);
        }
    }

    fn record(&mut self, id: String, result: Result<Pending>) -> bool {
        match result {
            Ok(p) => {
                info!("ingested {id}");
                self.pending.push(p);
                true
            }
            Err(error) => {
                warn!("skipping {id}: {error}");
                self.failures.push(IngestFailure { id, error });
                false
            }
        }
    }

    pub fn failures(&self) -> &[IngestFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn finish(self) -> Result<(Database, Vec<IngestFailure>)> {
        let started = Instant::now();
        let max_rows = self.max_rows;
        let rows = self
            .pending
            .par_iter()
            .map(|p| {
                let a = describe::rows_needed(&p.silhouette, max_rows)?;
                let b = describe::rows_needed(&p.mirrored, max_rows)?;
                Ok(a.max(b))
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .max()
            .unwrap_or(1);
        let schedule = ScaleSchedule::uniform(self.params.samples, rows)?;
        let tau = self.params.tau;
        let records = self
            .pending
            .into_par_iter()
            .map(|p| p.finish(&schedule, tau))
            .collect::<Result<Vec<_>>>()?;
        info!(
            "described {} models on {} rows in {:.1?}",
            records.len(),
            rows,
            started.elapsed()
        );
        Ok((
            Database::from_records(self.params, schedule, records)?,
            self.failures,
        ))
    }
}

/// Entry of a model manifest (`manifest.json` next to the masks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub class_name: String,
    /// Mask path relative to the manifest.
    pub path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub models: Vec<ManifestEntry>,
}

impl ModelManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(Error::json(path))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Builds a database from `masks_dir/manifest.json`.
pub fn build_from_manifest(
    masks_dir: &Path,
    params: DescribeParams,
) -> Result<(Database, Vec<IngestFailure>)> {
    let manifest = ModelManifest::load(&masks_dir.join("manifest.json"))?;
    let mut builder = DatabaseBuilder::new(params)?;
    let mut loaded = Vec::new();
    for entry in &manifest.models {
        let path: PathBuf = masks_dir.join(&entry.path);
        let meta = ModelMeta {
            id: entry.id.clone(),
            display_name: if entry.display_name.is_empty() {
                entry.id.clone()
            } else {
                entry.display_name.clone()
            },
            class_name: entry.class_name.clone(),
            source_path: entry.path.clone(),
        };
        match read_mask(&path) {
            Ok(mask) => loaded.push((meta, mask)),
            Err(e) => {
                builder.record(meta.id, Err(e));
            }
        }
    }
    builder.add_masks_parallel(loaded);
    builder.finish()
}
