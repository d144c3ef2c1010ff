use super::{EvalError, Ranking};
use crate::ingest::{shares_label, LabelVector};

/// Number of evenly spaced recall levels on `[0, 1]` for the PR curve.
pub const PR_LEVELS: usize = 101;

/// Per query, relevance of each ranked database item (shared label).
pub fn relevance_lists(
    ranking: &Ranking,
    query_labels: &LabelVector,
    db_labels: &LabelVector,
) -> Result<Vec<Vec<bool>>, EvalError> {
    if query_labels.len() != ranking.queries() {
        return Err(EvalError::CountMismatch {
            what: "query labels",
            expected: ranking.queries(),
            found: query_labels.len(),
        });
    }
    let db_len = ranking.order.first().map_or(0, Vec::len);
    if db_labels.len() != db_len {
        return Err(EvalError::CountMismatch { what: "database labels", expected: db_len, found: db_labels.len() });
    }
    Ok(ranking
        .order
        .iter()
        .enumerate()
        .map(|(q, ord)| {
            let ql = query_labels.get(q);
            ord.iter().map(|&j| shares_label(ql, db_labels.get(j as usize))).collect()
        })
        .collect())
}

/// AP over the top `r` results, normalized by `min(r, total relevant)`.
/// A query with nothing relevant scores 0.
pub fn average_precision(relevant: &[bool], r: usize) -> f64 {
    let total = relevant.iter().filter(|&&x| x).count();
    let norm = total.min(r);
    if norm == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, _) in relevant.iter().take(r).enumerate().filter(|(_, &rel)| rel) {
        hits += 1;
        sum += hits as f64 / (k + 1) as f64;
    }
    sum / norm as f64
}

/// Mean of per-query AP@r; returns the mean and the per-query list.
pub fn mean_average_precision(relevance: &[Vec<bool>], r: usize) -> Result<(f64, Vec<f64>), EvalError> {
    if relevance.first().is_some_and(Vec::is_empty) {
        return Err(EvalError::EmptyDatabase);
    }
    let aps: Vec<f64> = relevance.iter().map(|rel| average_precision(rel, r)).collect();
    let map = if aps.is_empty() { 0.0 } else { aps.iter().sum::<f64>() / aps.len() as f64 };
    Ok((map, aps))
}

/// Interpolated precision (max precision at any cut with at least the given
/// recall) at [`PR_LEVELS`] recall levels, averaged over queries that have
/// at least one relevant item.
pub fn pr_curve(relevance: &[Vec<bool>]) -> Vec<(f64, f64)> {
    let levels: Vec<f64> = (0..PR_LEVELS).map(|l| l as f64 / (PR_LEVELS - 1) as f64).collect();
    let mut sums = vec![0.0; PR_LEVELS];
    let mut counted = 0usize;
    for rel in relevance {
        let total = rel.iter().filter(|&&x| x).count();
        if total == 0 {
            continue;
        }
        counted += 1;
        let mut hits = 0usize;
        let mut recall = Vec::with_capacity(rel.len());
        let mut precision = Vec::with_capacity(rel.len());
        for (k, &r) in rel.iter().enumerate() {
            hits += r as usize;
            recall.push(hits as f64 / total as f64);
            precision.push(hits as f64 / (k + 1) as f64);
        }
        // Suffix maxima: best precision at this cut or any deeper one.
        for k in (0..precision.len().saturating_sub(1)).rev() {
            precision[k] = precision[k].max(precision[k + 1]);
        }
        let mut cut = 0usize;
        for (li, &level) in levels.iter().enumerate() {
            while cut < recall.len() && recall[cut] < level {
                cut += 1;
            }
            if cut < recall.len() {
                sums[li] += precision[cut];
            }
        }
    }
    if counted == 0 {
        return Vec::new();
    }
    levels.into_iter().zip(sums).map(|(r, s)| (r, s / counted as f64)).collect()
}

/// Mean precision of the top `n` results for each `n` in `grid`.
pub fn topn_precision(relevance: &[Vec<bool>], grid: &[usize]) -> Result<Vec<(usize, f64)>, EvalError> {
    let db = relevance.first().map_or(0, Vec::len);
    grid.iter()
        .map(|&n| {
            if n == 0 || n > db {
                return Err(EvalError::GridOutOfRange { n, db });
            }
            let total: f64 =
                relevance.iter().map(|rel| rel[..n].iter().filter(|&&x| x).count() as f64 / n as f64).sum();
            Ok((n, total / relevance.len().max(1) as f64))
        })
        .collect()
}
