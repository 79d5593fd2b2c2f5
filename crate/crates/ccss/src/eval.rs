//! Rank-frequency evaluation of a query set against a database.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::database::{Database, QueryParams};
use crate::error::{Error, Result};
use crate::io::read_mask;

/// Rank positions tabulated individually; later ranks fall into "Other".
pub const TABLE_RANKS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    /// Mask path relative to the manifest.
    pub path: String,
    pub model_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryManifest {
    pub queries: Vec<QueryEntry>,
}

impl QueryManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(Error::json(path))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(Error::json(path))?;
        fs::write(path, text + "\n").map_err(Error::io(path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub path: String,
    pub model_id: String,
    pub rank: usize,
    pub cost: f64,
    pub seconds: f64,
}

/// One line of the frequency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    /// `"1"` to `"6"` or `"Other"`.
    pub position: String,
    pub frequency: usize,
    pub cumulative: usize,
    pub relative_cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub outcomes: Vec<QueryOutcome>,
    pub table: Vec<FrequencyRow>,
    pub mean_latency_seconds: f64,
    /// Ground-truth ids absent from the database; those queries are skipped.
    pub missing: Vec<String>,
    /// Queries whose mask could not be read or described.
    pub failed: Vec<String>,
}

impl EvalReport {
    pub fn from_outcomes(outcomes: Vec<QueryOutcome>, missing: Vec<String>, failed: Vec<String>) -> Self {
        let mut freq = [0usize; TABLE_RANKS + 1];
        for o in &outcomes {
            freq[(o.rank - 1).min(TABLE_RANKS)] += 1;
        }
        let total = outcomes.len();
        let mut cumulative = 0;
        let table = freq
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                cumulative += f;
                FrequencyRow {
                    position: if i < TABLE_RANKS {
                        (i + 1).to_string()
                    } else {
                        "Other".to_string()
                    },
                    frequency: f,
                    cumulative,
                    relative_cumulative: if total == 0 {
                        0.0
                    } else {
                        cumulative as f64 / total as f64
                    },
                }
            })
            .collect();
        let mean_latency_seconds = if total == 0 {
            0.0
        } else {
            outcomes.iter().map(|o| o.seconds).sum::<f64>() / total as f64
        };
        Self {
            outcomes,
            table,
            mean_latency_seconds,
            missing,
            failed,
        }
    }

    pub fn query_count(&self) -> usize {
        self.outcomes.len()
    }

    /// Fraction of queries whose model ranked within the first `k`.
    pub fn top_k_rate(&self, k: usize) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        let hits = self.outcomes.iter().filter(|o| o.rank <= k).count();
        hits as f64 / self.outcomes.len() as f64
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<9}{:>10}{:>12}{:>12}", "Position", "Frequency", "Cumulative", "Relative")?;
        for row in &self.table {
            writeln!(
                f,
                "{:<9}{:>10}{:>12}{:>11.0}%",
                row.position,
                row.frequency,
                row.cumulative,
                100.0 * row.relative_cumulative
            )?;
        }
        writeln!(f, "queries: {}", self.query_count())?;
        writeln!(f, "mean latency: {:.3} s", self.mean_latency_seconds)?;
        if !self.missing.is_empty() {
            writeln!(f, "unknown model ids: {}", self.missing.join(", "))?;
        }
        if !self.failed.is_empty() {
            writeln!(f, "failed queries: {}", self.failed.join(", "))?;
        }
        Ok(())
    }
}

/// Runs every query of a manifest; mask paths resolve against `base`.
pub fn evaluate(
    db: &Database,
    manifest: &QueryManifest,
    base: &Path,
    params: &QueryParams,
) -> Result<EvalReport> {
    let mut outcomes = Vec::new();
    let mut missing = Vec::new();
    let mut failed = Vec::new();
    for q in &manifest.queries {
        if db.get(&q.model_id).is_none() {
            warn!("{}: ground-truth model {:?} is not in the database", q.path, q.model_id);
            missing.push(q.model_id.clone());
            continue;
        }
        let started = Instant::now();
        let ranked = read_mask(&base.join(&q.path)).and_then(|mask| db.query(&mask, params));
        let seconds = started.elapsed().as_secs_f64();
        match ranked {
            Ok(list) => {
                let rank = list.rank_of(&q.model_id).expect("model is in the database");
                outcomes.push(QueryOutcome {
                    path: q.path.clone(),
                    model_id: q.model_id.clone(),
                    rank,
                    cost: list.entries()[rank - 1].total_cost,
                    seconds,
                });
            }
            // A bad query mask is an operational error, not a miss.
            Err(e @ (Error::InvalidArgument(_) | Error::EmptyDatabase)) => return Err(e),
            Err(e) => {
                warn!("{}: {e}", q.path);
                failed.push(q.path.clone());
            }
        }
    }
    Ok(EvalReport::from_outcomes(outcomes, missing, failed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(rank: usize) -> QueryOutcome {
        QueryOutcome {
            path: String::new(),
            model_id: String::new(),
            rank,
            cost: 0.0,
            seconds: 1.0,
        }
    }

    #[test]
    fn cumulative_table() {
        let ranks = [1, 1, 2, 6, 7, 30];
        let r = EvalReport::from_outcomes(ranks.iter().map(|&k| outcome(k)).collect(), vec![], vec![]);
        let freq: Vec<usize> = r.table.iter().map(|t| t.frequency).collect();
        assert_eq!(freq, [2, 1, 0, 0, 0, 1, 2]);
        let cum: Vec<usize> = r.table.iter().map(|t| t.cumulative).collect();
        assert_eq!(cum, [2, 3, 3, 3, 3, 4, 6]);
        assert!(cum.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*cum.last().unwrap(), ranks.len());
        assert_eq!(r.table[6].relative_cumulative, 1.0);
        assert_eq!(r.top_k_rate(6), 4.0 / 6.0);
        assert_eq!(r.mean_latency_seconds, 1.0);
    }

    #[test]
    fn empty_report() {
        let r = EvalReport::from_outcomes(vec![], vec![], vec![]);
        assert_eq!(r.query_count(), 0);
        assert!(r.table.iter().all(|t| t.cumulative == 0));
        assert_eq!(r.mean_latency_seconds, 0.0);
    }
}
