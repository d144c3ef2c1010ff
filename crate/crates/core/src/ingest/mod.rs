//! Feature views, labels and their on-disk formats.
//!
//! Training never sees labels: they live in a separate `CIML` file and a
//! separate type, and nothing in [`crate::trainer`] accepts a [`LabelVector`].

mod augment;
mod format;
mod synth;

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

pub use augment::{augment_features, perturb_features, AugmentConfig};
pub use format::{
    load_feature_views, load_features, load_labels, read_features, read_labels, write_features, write_labels,
    FEATURE_MAGIC, FORMAT_VERSION, LABEL_MAGIC,
};
pub use synth::{make_synthetic, split_per_class, Labelled};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("shape mismatch in view {view}: expected {expected}, found {found}")]
    ShapeMismatch { view: usize, expected: String, found: String },
    #[error("non-finite value in view {view} at row {row}")]
    NonFiniteValue { view: usize, row: usize },
    #[error("all-zero row in view {view} at row {row}")]
    ZeroRow { view: usize, row: usize },
    #[error("duplicate item id at row {0}")]
    DuplicateId(usize),
    #[error("label record {0} is empty")]
    EmptyLabelSet(usize),
    #[error("file holds {0} view(s), two are required")]
    MissingView(usize),
    #[error("row {0} stayed all-zero after 16 augmentation retries")]
    DegenerateAugmentation(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Contents of a feature file: one or two views plus item ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub views: Vec<Array2<f32>>,
    pub ids: Vec<u64>,
}

impl FeatureSet {
    pub fn single(view: Array2<f32>) -> Self {
        let ids = (0..view.nrows() as u64).collect();
        Self { views: vec![view], ids }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn d(&self) -> usize {
        self.views.first().map_or(0, |v| v.ncols())
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.views.is_empty() || self.views.len() > 2 {
            return Err(IngestError::MalformedHeader(format!("view count {} not in {{1,2}}", self.views.len())));
        }
        let (n, d) = self.views[0].dim();
        if n < 2 || d < 1 {
            return Err(IngestError::ShapeMismatch {
                view: 0,
                expected: "n >= 2, d >= 1".into(),
                found: format!("{n}x{d}"),
            });
        }
        for (v, m) in self.views.iter().enumerate() {
            if m.dim() != (n, d) {
                return Err(IngestError::ShapeMismatch {
                    view: v,
                    expected: format!("{n}x{d}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            validate_rows(m, v)?;
        }
        if self.ids.len() != n {
            return Err(IngestError::ShapeMismatch {
                view: 0,
                expected: format!("{n} ids"),
                found: format!("{} ids", self.ids.len()),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for (row, id) in self.ids.iter().enumerate() {
            if !seen.insert(*id) {
                return Err(IngestError::DuplicateId(row));
            }
        }
        Ok(())
    }

    /// Turns the set into a validated two-view pair, augmenting when only one
    /// view is present.
    pub fn into_pair(self, augment: &AugmentConfig) -> Result<FeatureViewPair, IngestError> {
        self.validate()?;
        let FeatureSet { mut views, ids } = self;
        let pair = if views.len() == 2 {
            let view2 = views.pop().unwrap();
            let view1 = views.pop().unwrap();
            FeatureViewPair { view1, view2, ids }
        } else {
            let mut pair = augment_features(&views[0], augment)?;
            pair.ids = ids;
            pair
        };
        Ok(pair)
    }
}

/// Two augmented views of the same `n` items.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureViewPair {
    pub view1: Array2<f32>,
    pub view2: Array2<f32>,
    pub ids: Vec<u64>,
}

impl FeatureViewPair {
    pub fn new(view1: Array2<f32>, view2: Array2<f32>, ids: Vec<u64>) -> Result<Self, IngestError> {
        let set = FeatureSet { views: vec![view1, view2], ids };
        set.validate()?;
        let FeatureSet { mut views, ids } = set;
        let view2 = views.pop().unwrap();
        let view1 = views.pop().unwrap();
        Ok(Self { view1, view2, ids })
    }

    pub fn n(&self) -> usize {
        self.view1.nrows()
    }

    pub fn d(&self) -> usize {
        self.view1.ncols()
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        FeatureSet { views: vec![self.view1.clone(), self.view2.clone()], ids: self.ids.clone() }.validate()
    }

    pub fn into_set(self) -> FeatureSet {
        FeatureSet { views: vec![self.view1, self.view2], ids: self.ids }
    }
}

/// Ground-truth label sets, one per item. Evaluation only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<Vec<u32>>,
}

impl LabelVector {
    /// Label sets are sorted and deduplicated on construction.
    pub fn new(labels: Vec<Vec<u32>>) -> Result<Self, IngestError> {
        let mut labels = labels;
        for (i, set) in labels.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(IngestError::EmptyLabelSet(i));
            }
            set.sort_unstable();
            set.dedup();
        }
        Ok(Self { labels })
    }

    pub fn single(labels: impl IntoIterator<Item = u32>) -> Self {
        Self { labels: labels.into_iter().map(|l| vec![l]).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.labels.iter().map(|s| s.as_slice())
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { labels: idx.iter().map(|&i| self.labels[i].clone()).collect() }
    }
}

/// Two items are relevant to each other when they share at least one label.
pub fn shares_label(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub(crate) fn row_is_zero(row: ArrayView1<f32>) -> bool {
    row.iter().all(|&x| x == 0.0)
}

pub(crate) fn validate_rows(m: &Array2<f32>, view: usize) -> Result<(), IngestError> {
    for (row, r) in m.outer_iter().enumerate() {
        if r.iter().any(|x| !x.is_finite()) {
            return Err(IngestError::NonFiniteValue { view, row });
        }
        if row_is_zero(r) {
            return Err(IngestError::ZeroRow { view, row });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn shares_label_on_sorted_sets() {
        assert!(shares_label(&[1, 4, 9], &[2, 4]));
        assert!(!shares_label(&[1, 3], &[2, 4]));
        assert!(!shares_label(&[], &[2]));
    }

    #[test]
    fn label_sets_are_normalized() {
        let lv = LabelVector::new(vec![vec![3, 1, 3], vec![0]]).unwrap();
        assert_eq!(lv.get(0), &[1, 3]);
        assert!(matches!(LabelVector::new(vec![vec![]]), Err(IngestError::EmptyLabelSet(0))));
    }

    #[test]
    fn validator_rejects_bad_rows() {
        let ok = array![[1.0f32, 0.0], [0.0, 1.0]];
        let zero = array![[1.0f32, 0.0], [0.0, 0.0]];
        let nan = array![[f32::NAN, 0.0], [0.0, 1.0]];
        assert!(FeatureViewPair::new(ok.clone(), ok.clone(), vec![0, 1]).is_ok());
        assert!(matches!(
            FeatureViewPair::new(ok.clone(), zero, vec![0, 1]),
            Err(IngestError::ZeroRow { view: 1, row: 1 })
        ));
        assert!(matches!(
            FeatureViewPair::new(nan, ok.clone(), vec![0, 1]),
            Err(IngestError::NonFiniteValue { view: 0, row: 0 })
        ));
        assert!(matches!(FeatureViewPair::new(ok.clone(), ok, vec![5, 5]), Err(IngestError::DuplicateId(1))));
    }

    #[test]
    fn single_row_is_rejected() {
        let one = array![[1.0f32, 2.0]];
        assert!(matches!(FeatureSet::single(one).validate(), Err(IngestError::ShapeMismatch { .. })));
    }
}
