//! `CIMF` feature files and `CIML` label files. All integers and floats are
//! little-endian.
//!
//! ```text
//! CIMF: "CIMF" | version u32 = 1 | n u64 | d u64 | views u32 in {1,2}
//!       | per view: n*d f32, row-major | n u64 ids
//! CIML: "CIML" | n u64 | per item: count u32, count * u32 label ids
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{FeatureSet, FeatureViewPair, IngestError, LabelVector};

pub const FEATURE_MAGIC: &[u8; 4] = b"CIMF";
pub const LABEL_MAGIC: &[u8; 4] = b"CIML";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_features<W: Write>(mut w: W, set: &FeatureSet) -> io::Result<()> {
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(set.n() as u64).to_le_bytes())?;
    w.write_all(&(set.d() as u64).to_le_bytes())?;
    w.write_all(&(set.views.len() as u32).to_le_bytes())?;
    for view in &set.views {
        let mut buf = Vec::with_capacity(view.len() * 4);
        for x in view.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    for id in &set.ids {
        w.write_all(&id.to_le_bytes())?;
    }
    Ok(())
}

/// Parses and validates a feature file held in memory.
pub fn read_features(bytes: &[u8]) -> Result<FeatureSet, IngestError> {
    let mut cur = Cursor::new(bytes);
    let magic = cur.take(4).ok_or_else(|| header("file shorter than magic"))?;
    if magic != FEATURE_MAGIC {
        return Err(header("bad magic, expected CIMF"));
    }
    let version = cur.u32().ok_or_else(|| header("missing version"))?;
    if version != FORMAT_VERSION {
        return Err(header(&format!("unsupported version {version}")));
    }
    let n = cur.u64().ok_or_else(|| header("missing n"))?;
    let d = cur.u64().ok_or_else(|| header("missing d"))?;
    let nviews = cur.u32().ok_or_else(|| header("missing view count"))?;
    if !(1..=2).contains(&nviews) {
        return Err(header(&format!("view count {nviews} not in {{1,2}}")));
    }
    let (n, d) = (usize_of(n)?, usize_of(d)?);
    let cells = n.checked_mul(d).ok_or_else(|| header("n*d overflows"))?;

    let expected = cells
        .checked_mul(4 * nviews as usize)
        .and_then(|b| b.checked_add(n.checked_mul(8)?))
        .ok_or_else(|| header("payload size overflows"))?;
    let found = cur.remaining();
    if found != expected {
        // Attribute a short payload to the first view that cannot be filled.
        let view = (found / (cells * 4).max(1)).min(nviews as usize - 1);
        return Err(IngestError::ShapeMismatch {
            view,
            expected: format!("{expected} payload bytes for {nviews} view(s) of {n}x{d}"),
            found: format!("{found} bytes"),
        });
    }

    let mut views = Vec::with_capacity(nviews as usize);
    for _ in 0..nviews {
        let raw = cur.take(cells * 4).expect("length checked");
        let data: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        views.push(Array2::from_shape_vec((n, d), data).expect("length checked"));
    }
    let ids = (0..n).map(|_| cur.u64().expect("length checked")).collect();
    let set = FeatureSet { views, ids };
    set.validate()?;
    Ok(set)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSet, IngestError> {
    read_features(&fs::read(path)?)
}

/// Loads a two-view feature file.
pub fn load_feature_views(path: impl AsRef<Path>) -> Result<FeatureViewPair, IngestError> {
    let set = load_features(path)?;
    if set.views.len() != 2 {
        return Err(IngestError::MissingView(set.views.len()));
    }
    let FeatureSet { mut views, ids } = set;
    let view2 = views.pop().unwrap();
    let view1 = views.pop().unwrap();
    Ok(FeatureViewPair { view1, view2, ids })
}

pub fn write_labels<W: Write>(mut w: W, labels: &LabelVector) -> io::Result<()> {
    w.write_all(LABEL_MAGIC)?;
    w.write_all(&(labels.len() as u64).to_le_bytes())?;
    for set in labels.iter() {
        w.write_all(&(set.len() as u32).to_le_bytes())?;
        for l in set {
            w.write_all(&l.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_labels(bytes: &[u8]) -> Result<LabelVector, IngestError> {
    let mut cur = Cursor::new(bytes);
    if cur.take(4) != Some(LABEL_MAGIC.as_slice()) {
        return Err(header("bad magic, expected CIML"));
    }
    let n = usize_of(cur.u64().ok_or_else(|| header("missing n"))?)?;
    let mut labels = Vec::with_capacity(n.min(1 << 20));
    for i in 0..n {
        let count = cur.u32().ok_or_else(|| truncated_label(i))? as usize;
        let set = (0..count).map(|_| cur.u32().ok_or_else(|| truncated_label(i))).collect::<Result<Vec<_>, _>>()?;
        labels.push(set);
    }
    if cur.remaining() != 0 {
        return Err(IngestError::ShapeMismatch {
            view: 0,
            expected: format!("{n} label records"),
            found: format!("{} trailing bytes", cur.remaining()),
        });
    }
    LabelVector::new(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector, IngestError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    read_labels(&bytes)
}

fn header(msg: &str) -> IngestError {
    IngestError::MalformedHeader(msg.to_string())
}

fn truncated_label(record: usize) -> IngestError {
    IngestError::ShapeMismatch { view: 0, expected: format!("label record {record}"), found: "end of file".into() }
}

fn usize_of(v: u64) -> Result<usize, IngestError> {
    usize::try_from(v).map_err(|_| header("dimension exceeds address space"))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, len: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(len)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_by_three() -> FeatureSet {
        FeatureSet {
            views: vec![array![[1.0f32, 2.0, 3.0], [-1.0, 0.5, 0.0]], array![[1.5f32, 2.0, 3.0], [-1.0, 0.25, 0.0]]],
            ids: vec![10, 11],
        }
    }

    fn encode(set: &FeatureSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_features(&mut buf, set).unwrap();
        buf
    }

    #[test]
    fn round_trip_small_file() {
        let set = two_by_three();
        let bytes = encode(&set);
        assert_eq!(&bytes[..4], b"CIMF");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 4 + 2 * 6 * 4 + 2 * 8);
        let back = read_features(&bytes).unwrap();
        assert_eq!(back, set);
        assert_eq!((back.n(), back.d()), (2, 3));
    }

    #[test]
    fn short_second_view_is_shape_mismatch() {
        let set = FeatureSet {
            views: vec![Array2::from_elem((3, 2), 1.0f32), Array2::from_elem((2, 2), 1.0f32)],
            ids: vec![0, 1, 2],
        };
        // The writer trusts its input, so the header says n=3 while view 2 has 2 rows.
        let bytes = encode(&set);
        match read_features(&bytes) {
            Err(IngestError::ShapeMismatch { view, .. }) => assert_eq!(view, 1),
            other => panic!("expected ShapeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn nan_row_is_reported() {
        let mut view = Array2::from_elem((8, 3), 1.0f32);
        view[[5, 1]] = f32::NAN;
        let bytes = encode(&FeatureSet::single(view));
        assert!(matches!(read_features(&bytes), Err(IngestError::NonFiniteValue { view: 0, row: 5 })));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode(&two_by_three());
        bytes[4] = 9;
        assert!(matches!(read_features(&bytes), Err(IngestError::MalformedHeader(_))));
        bytes[0] = b'X';
        assert!(matches!(read_features(&bytes), Err(IngestError::MalformedHeader(_))));
        assert!(matches!(read_features(b"CI"), Err(IngestError::MalformedHeader(_))));
    }

    #[test]
    fn single_view_is_not_a_pair() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.cimf");
        let set = FeatureSet::single(array![[1.0f32], [2.0]]);
        write_features(fs::File::create(&path).unwrap(), &set).unwrap();
        assert!(matches!(load_feature_views(&path), Err(IngestError::MissingView(1))));
        assert_eq!(load_features(&path).unwrap(), set);
    }

    #[test]
    fn labels_round_trip_and_truncation() {
        let labels = LabelVector::new(vec![vec![0], vec![1, 7], vec![3]]).unwrap();
        let mut bytes = Vec::new();
        write_labels(&mut bytes, &labels).unwrap();
        assert_eq!(&bytes[..4], b"CIML");
        assert_eq!(read_labels(&bytes).unwrap(), labels);
        bytes.truncate(bytes.len() - 2);
        assert!(matches!(read_labels(&bytes), Err(IngestError::ShapeMismatch { .. })));
    }
}
