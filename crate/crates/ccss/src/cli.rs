//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::database::{build_from_manifest, Database, ManifestEntry, ModelManifest};
use crate::describe::{self, DescribeParams, DEFAULT_MAX_ROWS};
use crate::error::{Error, Result};
use crate::eval::{evaluate, QueryEntry, QueryManifest};
use crate::format::RankedDoc;
use crate::io::{read_mask, write_mask};
use crate::options::QueryOptions;
use crate::render;
use crate::service;
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "ccss", version, about = "Ship silhouette identification with CCSS descriptors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Tuning flags accepted by every command. Description flags (`--samples`,
/// `--se-radius`, `--tau`) set how masks are described; matching flags
/// (`--alpha`, `--sigma-gain`) and `--top-k` only affect queries.
#[derive(Debug, Clone, Default, Args)]
pub struct Tuning {
    /// Weight of the position difference against the concavity difference.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Penalty gain for unmatched points (default 70 * alpha).
    #[arg(long, global = true)]
    pub sigma_gain: Option<f64>,
    /// Concavity threshold below which descriptor points are dropped.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Radius of the morphological structuring element.
    #[arg(long, global = true)]
    pub se_radius: Option<usize>,
    /// Contour samples per silhouette.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Number of candidates reported.
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
}

impl Tuning {
    fn describe_params(&self) -> DescribeParams {
        let d = DescribeParams::default();
        DescribeParams {
            samples: self.samples.unwrap_or(d.samples),
            se_radius: self.se_radius.unwrap_or(d.se_radius),
            tau: self.tau.unwrap_or(d.tau),
        }
    }

    fn query_options(&self) -> QueryOptions {
        QueryOptions {
            alpha: self.alpha,
            sigma_gain: self.sigma_gain,
            tau: self.tau,
            se_radius: self.se_radius,
            samples: self.samples,
            top_k: self.top_k,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DbArg {
    /// Database directory.
    #[arg(long = "db", env = "CCSS_DB_DIR")]
    pub db: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderMode {
    Css,
    Ccss,
    Evolution,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a database from a directory of masks.
    Build {
        /// Directory with mask files and an optional manifest.json.
        masks: PathBuf,
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Rank the database models against a target mask.
    Query {
        mask: PathBuf,
        #[command(flatten)]
        db: DbArg,
        /// Print only the JSON document.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Plot a mask's scale-space image or its evolution as PNG.
    Render {
        mask: PathBuf,
        out: PathBuf,
        #[arg(long, value_enum, default_value = "ccss")]
        mode: RenderMode,
        /// Schedule rows (default: until the silhouette is convex).
        #[arg(long)]
        rows: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Run a query manifest and print the rank-frequency table.
    Eval {
        /// JSON manifest: {"queries": [{"path", "model_id"}]}.
        queries: PathBuf,
        #[command(flatten)]
        db: DbArg,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Serve the HTTP query API.
    Serve {
        #[command(flatten)]
        db: DbArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Decision log (default: decisions.jsonl in the database directory).
        #[arg(long)]
        decision_log: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write a procedurally generated hull corpus with perturbed queries.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write one perturbed query per model under queries/.
        #[arg(long)]
        queries: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Build { masks, db, tuning } => cmd_build(&masks, &db.db, &tuning, out),
        Command::Query {
            mask,
            db,
            json,
            tuning,
        } => cmd_query(&db.db, &mask, json, &tuning, out),
        Command::Render {
            mask,
            out: png,
            mode,
            rows,
            tuning,
        } => cmd_render(&mask, &png, mode, rows, &tuning, out),
        Command::Eval {
            queries,
            db,
            json,
            tuning,
        } => cmd_eval(&db.db, &queries, json, &tuning, out),
        Command::Serve {
            db,
            addr,
            decision_log,
            workers,
            tuning: _,
        } => {
            let log = decision_log.unwrap_or_else(|| db.db.join("decisions.jsonl"));
            service::serve(db.db, &addr, &log, workers)
        }
        Command::Synth {
            out: dir,
            count,
            seed,
            queries,
            tuning: _,
        } => cmd_synth(&dir, count, seed, queries, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(Error::io("<stdout>"))
}

/// A manifest listing every PNG/PGM file when none is present.
fn manifest_for(masks: &Path) -> Result<()> {
    let path = masks.join("manifest.json");
    if path.exists() {
        return Ok(());
    }
    let mut models = Vec::new();
    let entries = fs::read_dir(masks).map_err(Error::io(masks))?;
    for entry in entries {
        let p = entry.map_err(Error::io(masks))?.path();
        let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png" | "pgm")) {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let name = p.file_name().and_then(|s| s.to_str()).unwrap_or_default();
            models.push(ManifestEntry {
                id: stem.to_string(),
                display_name: stem.to_string(),
                class_name: String::new(),
                path: name.to_string(),
            });
        }
    }
    models.sort_by(|a, b| a.id.cmp(&b.id));
    ModelManifest { models }.save(&path)
}

pub fn cmd_build(masks: &Path, db_dir: &Path, tuning: &Tuning, out: &mut dyn Write) -> Result<()> {
    manifest_for(masks)?;
    let (db, failures) = build_from_manifest(masks, tuning.describe_params())?;
    for r in db.records() {
        write_out(out, &format!("ok      {}\n", r.meta.id))?;
    }
    for f in &failures {
        write_out(out, &format!("skipped {}: {}\n", f.id, f.error))?;
    }
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    db.save(db_dir)?;
    write_out(
        out,
        &format!(
            "{} models, {} scales, saved to {}\n",
            db.len(),
            db.schedule().len(),
            db_dir.display()
        ),
    )
}

/// The ranked document printed by `query --json`; the service returns the
/// same bytes for the same mask and parameters.
pub fn ranked_json(db: &Database, mask_path: &Path, options: &QueryOptions) -> Result<String> {
    let mask = read_mask(mask_path)?;
    let params = options.resolve(db)?;
    let list = db.query(&mask, &params)?;
    Ok(RankedDoc::new(db, &mask, &params, options.top_k(), &list).to_json())
}

pub fn cmd_query(
    db_dir: &Path,
    mask_path: &Path,
    json: bool,
    tuning: &Tuning,
    out: &mut dyn Write,
) -> Result<()> {
    let db = Database::load(db_dir)?;
    let text = ranked_json(&db, mask_path, &tuning.query_options())?;
    if json {
        return write_out(out, &text);
    }
    let doc: RankedDoc = serde_json::from_str(&text).expect("own document parses");
    let mut table = format!(
        "{:>4}  {:<20} {:<24} {:<12} {:>10}\n",
        "rank", "id", "name", "class", "cost"
    );
    for c in &doc.results {
        table += &format!(
            "{:>4}  {:<20} {:<24} {:<12} {:>10.6}{}\n",
            c.rank,
            c.id,
            c.display_name,
            c.class_name,
            c.cost,
            if c.mirrored { "  (mirrored)" } else { "" }
        );
    }
    write_out(out, &table)?;
    write_out(out, &text)
}

pub fn cmd_render(
    mask_path: &Path,
    png: &Path,
    mode: RenderMode,
    rows: Option<usize>,
    tuning: &Tuning,
    out: &mut dyn Write,
) -> Result<()> {
    let params = tuning.describe_params();
    params.validate()?;
    let mask = read_mask(mask_path)?;
    let sil = describe::silhouette(&mask, &params)?;
    let rows = match rows {
        Some(r) => r.max(1),
        None => describe::rows_needed(&sil, DEFAULT_MAX_ROWS)?,
    };
    let schedule = ccss_core::ScaleSchedule::uniform(params.samples, rows)?;
    let plot = match mode {
        RenderMode::Css => render::plot_css(&ccss_core::build_css(&sil, &schedule)?),
        RenderMode::Ccss => render::plot_ccss(&describe::descriptor(&sil, &schedule, params.tau)?),
        RenderMode::Evolution => render::plot_evolution(&sil, &schedule),
    };
    fs::write(png, plot.to_png()?).map_err(Error::io(png))?;
    write_out(
        out,
        &format!("{} points on {} rows -> {}\n", plot.points, rows, png.display()),
    )
}

pub fn cmd_eval(
    db_dir: &Path,
    queries: &Path,
    json: bool,
    tuning: &Tuning,
    out: &mut dyn Write,
) -> Result<()> {
    let manifest = QueryManifest::load(queries)?;
    let base = queries.parent().unwrap_or(Path::new("."));
    let db = Database::load(db_dir)?;
    let params = tuning.query_options().resolve(&db)?;
    let report = evaluate(&db, &manifest, base, &params)?;
    if json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        write_out(out, &(text + "\n"))
    } else {
        write_out(out, &report.to_string())
    }
}

pub fn cmd_synth(dir: &Path, count: u64, seed: u64, queries: bool, out: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let qdir = dir.join("queries");
    if queries {
        fs::create_dir_all(&qdir).map_err(Error::io(&qdir))?;
    }
    let mut models = Vec::new();
    let mut entries = Vec::new();
    for i in 0..count {
        let spec = synth::generate(seed, i);
        let id = format!("hull-{i:04}");
        let file = format!("{id}.png");
        write_mask(&spec.render(), &dir.join(&file))?;
        if queries {
            let q = synth::perturb(&spec, synth::query_seed(seed, i));
            write_mask(&q, &qdir.join(&file))?;
            entries.push(QueryEntry {
                path: format!("queries/{file}"),
                model_id: id.clone(),
            });
        }
        models.push(ManifestEntry {
            display_name: format!("{} {i}", spec.class_name),
            class_name: spec.class_name,
            id,
            path: file,
        });
    }
    ModelManifest { models }.save(&dir.join("manifest.json"))?;
    if queries {
        QueryManifest { queries: entries }.save(&dir.join("queries.json"))?;
    }
    info!("wrote {count} hulls to {}", dir.display());
    write_out(out, &format!("{count} hulls written to {}\n", dir.display()))
}

/// Starts the service on an ephemeral port with an already loaded database;
/// used by tests and embedding applications.
pub fn spawn_service(
    db: Option<Database>,
    log: &Path,
) -> Result<(Arc<service::Service>, service::ServerHandle, u16)> {
    let svc = Arc::new(service::Service::new(service::DecisionLog::open(log)?));
    if let Some(db) = db {
        svc.set_database(db);
    }
    let server = service::Server::bind("127.0.0.1:0", Arc::clone(&svc))?;
    let port = server
        .local_port()
        .ok_or_else(|| Error::InvalidArgument("no local port".into()))?;
    let handle = server.handle();
    std::thread::spawn(move || server.run(2));
    Ok((svc, handle, port))
}
