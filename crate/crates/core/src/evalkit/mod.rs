//! Hamming-ranking retrieval metrics, query-noise robustness and bit balance.

mod metrics;
mod rank;
mod robustness;

use thiserror::Error;

pub use metrics::{average_precision, mean_average_precision, pr_curve, relevance_lists, topn_precision, PR_LEVELS};
pub use rank::{hamming_rank, Ranking};
pub use robustness::{bit_balance, changed_bits, robustness_eval, RobustnessReport};

use crate::hashnet::BinaryCodes;
use crate::ingest::LabelVector;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("query codes have {query} bits, database codes {database}")]
    CodeLengthMismatch { query: usize, database: usize },
    #[error("database is empty")]
    EmptyDatabase,
    #[error("top-N value {n} outside 1..={db}")]
    GridOutOfRange { n: usize, db: usize },
    #[error("{what}: {expected} expected, {found} found")]
    CountMismatch { what: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Hash(#[from] crate::hashnet::HashError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// MAP cutoff; `None` ranks the whole database.
    pub r: Option<usize>,
    pub topn_grid: Vec<usize>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { r: None, topn_grid: vec![1, 5, 10, 20, 50, 100], seed: 0 }
    }
}

impl EvalConfig {
    pub fn cutoff(&self, db_len: usize) -> usize {
        self.r.unwrap_or(db_len).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub map: f64,
    pub per_query_ap: Vec<f64>,
    pub pr_points: Vec<(f64, f64)>,
    pub topn_points: Vec<(usize, f64)>,
}

impl EvalReport {
    pub fn pr_csv(&self) -> String {
        let mut s = String::from("recall,precision\n");
        for (r, p) in &self.pr_points {
            s.push_str(&format!("{r},{p}\n"));
        }
        s
    }

    pub fn topn_csv(&self) -> String {
        let mut s = String::from("n,precision\n");
        for (n, p) in &self.topn_points {
            s.push_str(&format!("{n},{p}\n"));
        }
        s
    }
}

/// Ranks the database for every query and computes all retrieval metrics.
/// Top-N grid values larger than the database are dropped.
pub fn evaluate(
    queries: &BinaryCodes,
    database: &BinaryCodes,
    query_labels: &LabelVector,
    db_labels: &LabelVector,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let ranking = hamming_rank(queries, database)?;
    let rel = relevance_lists(&ranking, query_labels, db_labels)?;
    let (map, per_query_ap) = mean_average_precision(&rel, cfg.cutoff(database.len()))?;
    let pr_points = pr_curve(&rel);
    let grid: Vec<usize> = cfg.topn_grid.iter().copied().filter(|&n| n <= database.len()).collect();
    let topn_points = topn_precision(&rel, &grid)?;
    Ok(EvalReport { map, per_query_ap, pr_points, topn_points })
}
