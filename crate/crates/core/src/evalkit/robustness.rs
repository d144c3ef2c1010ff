use ndarray::{Array2, Axis};

use super::{evaluate, EvalConfig, EvalError};
use crate::hashnet::{to_f64, BinaryCodes, HashModel};
use crate::ingest::{perturb_features, AugmentConfig, LabelVector};

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    /// `histogram[k]` = number of queries whose code changed in exactly `k` bits.
    pub changed_bits_histogram: Vec<usize>,
    pub changed_bits: Vec<u32>,
    pub map_before: f64,
    pub map_after: f64,
    /// Per-bit probability of `+1` over the database codes.
    pub bit_balance: Vec<f64>,
}

impl RobustnessReport {
    pub fn median_changed_bits(&self) -> f64 {
        let mut v = self.changed_bits.clone();
        v.sort_unstable();
        match v.len() {
            0 => 0.0,
            n if n % 2 == 1 => v[n / 2] as f64,
            n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
        }
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("changed_bits,count\n");
        for (k, c) in self.changed_bits_histogram.iter().enumerate() {
            s.push_str(&format!("{k},{c}\n"));
        }
        s
    }

    pub fn balance_csv(&self) -> String {
        let mut s = String::from("bit,p_plus\n");
        for (k, p) in self.bit_balance.iter().enumerate() {
            s.push_str(&format!("{k},{p}\n"));
        }
        s
    }
}

/// Fraction of rows with `+1` in each bit.
pub fn bit_balance(codes: &BinaryCodes) -> Vec<f64> {
    let n = codes.len().max(1) as f64;
    codes.bits().axis_iter(Axis(1)).map(|col| col.iter().filter(|&&b| b > 0).count() as f64 / n).collect()
}

/// Bits that differ between row `i` of `a` and row `i` of `b`.
pub fn changed_bits(a: &BinaryCodes, b: &BinaryCodes) -> Result<Vec<u32>, EvalError> {
    if a.code_len() != b.code_len() {
        return Err(EvalError::CodeLengthMismatch { query: a.code_len(), database: b.code_len() });
    }
    if a.len() != b.len() {
        return Err(EvalError::CountMismatch { what: "perturbed codes", expected: a.len(), found: b.len() });
    }
    let (pa, pb) = (a.pack(), b.pack());
    Ok((0..a.len()).map(|i| pa.hamming(i, &pb, i)).collect())
}

/// Encodes the queries before and after perturbation with `noise` and
/// reports how many bits flip and how retrieval MAP moves.
pub fn robustness_eval(
    model: &HashModel,
    query_features: &Array2<f32>,
    query_labels: &LabelVector,
    db_codes: &BinaryCodes,
    db_labels: &LabelVector,
    noise: &AugmentConfig,
    cfg: &EvalConfig,
) -> Result<RobustnessReport, EvalError> {
    let noisy = perturb_features(query_features, noise)?;
    let before = model.encode(to_f64(query_features).view())?;
    let after = model.encode(to_f64(&noisy).view())?;
    let flips = changed_bits(&before, &after)?;
    let mut histogram = vec![0usize; model.code_len() + 1];
    for &f in &flips {
        histogram[f as usize] += 1;
    }
    let map_before = evaluate(&before, db_codes, query_labels, db_labels, cfg)?.map;
    let map_after = evaluate(&after, db_codes, query_labels, db_labels, cfg)?.map;
    Ok(RobustnessReport {
        changed_bits_histogram: histogram,
        changed_bits: flips,
        map_before,
        map_after,
        bit_balance: bit_balance(db_codes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashnet::init_model;
    use crate::ingest::make_synthetic;
    use ndarray::array;

    #[test]
    fn balance_counts() {
        let c = BinaryCodes::new(array![[1, -1], [1, 1], [-1, -1], [1, -1]]).unwrap();
        assert_eq!(bit_balance(&c), vec![0.75, 0.25]);
    }

    #[test]
    fn zero_noise_flips_nothing() {
        let (set, labels) = make_synthetic(2, 10, 8, 5.0, 1).unwrap();
        let model = init_model(8, &[6], 12, 2).unwrap();
        let db = model.encode(to_f64(&set.views[0]).view()).unwrap();
        let rep = robustness_eval(
            &model,
            &set.views[0],
            &labels,
            &db,
            &labels,
            &AugmentConfig::identity(),
            &EvalConfig::default(),
        )
        .unwrap();
        assert!(rep.changed_bits.iter().all(|&f| f == 0));
        assert_eq!(rep.changed_bits_histogram[0], 20);
        assert_eq!(rep.map_before, rep.map_after);
        assert_eq!(rep.median_changed_bits(), 0.0);
    }

    #[test]
    fn histogram_sums_to_queries() {
        let (set, labels) = make_synthetic(2, 10, 8, 5.0, 1).unwrap();
        let model = init_model(8, &[6], 12, 2).unwrap();
        let db = model.encode(to_f64(&set.views[0]).view()).unwrap();
        let rep = robustness_eval(
            &model,
            &set.views[0],
            &labels,
            &db,
            &labels,
            &AugmentConfig::new(1.0, 0.0, 3),
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.changed_bits_histogram.iter().sum::<usize>(), 20);
        assert_eq!(rep.changed_bits_histogram.len(), 13);
    }
}
