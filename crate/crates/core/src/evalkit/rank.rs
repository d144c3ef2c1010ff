use super::EvalError;
use crate::hashnet::BinaryCodes;

/// Database indices per query, by ascending Hamming distance, ties by
/// ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub order: Vec<Vec<u32>>,
    pub distances: Vec<Vec<u32>>,
}

impl Ranking {
    pub fn queries(&self) -> usize {
        self.order.len()
    }
}

pub fn hamming_rank(queries: &BinaryCodes, database: &BinaryCodes) -> Result<Ranking, EvalError> {
    if queries.code_len() != database.code_len() {
        return Err(EvalError::CodeLengthMismatch { query: queries.code_len(), database: database.code_len() });
    }
    if database.is_empty() {
        return Err(EvalError::EmptyDatabase);
    }
    let l = database.code_len();
    let (qp, dp) = (queries.pack(), database.pack());
    let mut order = Vec::with_capacity(queries.len());
    let mut distances = Vec::with_capacity(queries.len());
    // Counting sort on distance keeps equal distances in index order.
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); l + 1];
    for q in 0..queries.len() {
        buckets.iter_mut().for_each(Vec::clear);
        for j in 0..database.len() {
            buckets[qp.hamming(q, &dp, j) as usize].push(j as u32);
        }
        let mut ord = Vec::with_capacity(database.len());
        let mut dist = Vec::with_capacity(database.len());
        for (d, b) in buckets.iter().enumerate() {
            ord.extend_from_slice(b);
            dist.extend(std::iter::repeat_n(d as u32, b.len()));
        }
        order.push(ord);
        distances.push(dist);
    }
    Ok(Ranking { order, distances })
}
