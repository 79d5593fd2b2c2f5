//! Query options shared by the command line and the service.

use ccss_core::MatchParams;
use serde::{Deserialize, Serialize};

use crate::database::{Database, QueryParams};
use crate::error::{Error, Result};

/// Candidates returned by default, enough to cover every hit position of
/// the rank-frequency table.
pub const DEFAULT_TOP_K: usize = 6;

/// Unset fields fall back to the matching defaults or to the database's
/// own description parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryOptions {
    pub alpha: Option<f64>,
    /// Defaults to `70 * alpha`.
    pub sigma_gain: Option<f64>,
    pub tau: Option<f64>,
    pub se_radius: Option<usize>,
    /// Must equal the database's sample count when given.
    pub samples: Option<usize>,
    pub top_k: Option<usize>,
}

impl QueryOptions {
    pub fn resolve(&self, db: &Database) -> Result<QueryParams> {
        if let Some(n) = self.samples {
            if n != db.params().samples {
                return Err(Error::InvalidArgument(format!(
                    "samples {n} differs from the database's {}",
                    db.params().samples
                )));
            }
        }
        let mut matching = match self.alpha {
            Some(a) => MatchParams::from_alpha(a),
            None => MatchParams::default(),
        };
        if let Some(g) = self.sigma_gain {
            matching.sigma_gain = g;
        }
        matching.validate()?;
        let tau = self.tau.unwrap_or(db.params().tau);
        Ok(QueryParams {
            matching,
            tau,
            se_radius: self.se_radius,
        })
    }

    pub fn top_k(&self) -> usize {
        self.top_k.unwrap_or(DEFAULT_TOP_K)
    }
}
