//! `CIMS` sidecar holding one view's mined semantic information.
//!
//! ```text
//! "CIMS" | n u64 | t f64 | K u32 | m1 f64 | sigma1 f64 | m2 f64 | sigma2 f64
//!        | cluster ids: n u32
//!        | refined graph: n*n entries row-major, 2 bits each, 4 per byte,
//!          first entry in the low bits (00 = 0, 01 = +1, 10 = -1)
//!        | weights: upper triangle incl. diagonal, row-major, f32
//! ```
//! Little-endian throughout.

use std::io::{self, Write};

use ndarray::Array2;

use super::{ClusterAssignment, ConfidenceMatrix, GraphError, HalfGaussianFit, RefinedGraph, SemanticInfo};

pub const SEMANTIC_MAGIC: &[u8; 4] = b"CIMS";

pub fn write_semantic_info<W: Write>(mut w: W, info: &SemanticInfo) -> io::Result<()> {
    let n = info.n();
    let mut buf = Vec::with_capacity(64 + n * 4 + n * n / 4 + n * (n + 1) * 2);
    buf.extend_from_slice(SEMANTIC_MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&info.t.to_le_bytes());
    buf.extend_from_slice(&(info.clusters.k as u32).to_le_bytes());
    for v in [info.fit.m1, info.fit.sigma1, info.fit.m2, info.fit.sigma2] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &c in &info.clusters.labels {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    let mut packed = vec![0u8; (n * n).div_ceil(4)];
    for (idx, &s) in info.refined.s_hat.iter().enumerate() {
        let code: u8 = match s {
            1 => 0b01,
            -1 => 0b10,
            _ => 0b00,
        };
        packed[idx / 4] |= code << (2 * (idx % 4));
    }
    buf.extend_from_slice(&packed);
    for i in 0..n {
        for j in i..n {
            buf.extend_from_slice(&info.weights.w[[i, j]].to_le_bytes());
        }
    }
    w.write_all(&buf)
}

pub fn read_semantic_info(bytes: &[u8]) -> Result<SemanticInfo, GraphError> {
    let bad = |m: &str| GraphError::MalformedSidecar(m.to_string());
    let mut pos = 0usize;
    let mut take = |len: usize| -> Result<&[u8], GraphError> {
        let out = bytes.get(pos..pos + len).ok_or_else(|| bad("truncated"))?;
        pos += len;
        Ok(out)
    };
    if take(4)? != SEMANTIC_MAGIC {
        return Err(bad("bad magic, expected CIMS"));
    }
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let n = usize::try_from(n).map_err(|_| bad("n too large"))?;
    if n > (1 << 20) {
        return Err(bad("n too large"));
    }
    let t = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let k = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let mut f = [0f64; 4];
    for v in &mut f {
        *v = f64::from_le_bytes(take(8)?.try_into().unwrap());
    }
    let labels: Vec<u32> = take(4 * n)?.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    if labels.iter().any(|&c| c as usize >= k) {
        return Err(bad("cluster id out of range"));
    }
    let packed = take((n * n).div_ceil(4))?;
    let mut s_hat = Array2::<i8>::zeros((n, n));
    for (idx, s) in s_hat.iter_mut().enumerate() {
        *s = match (packed[idx / 4] >> (2 * (idx % 4))) & 0b11 {
            0b00 => 0,
            0b01 => 1,
            0b10 => -1,
            _ => return Err(bad("invalid 2-bit graph code")),
        };
    }
    let mut w = Array2::<f32>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = f32::from_le_bytes(take(4)?.try_into().unwrap());
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    let fit = HalfGaussianFit { m1: f[0], sigma1: f[1], m2: f[2], sigma2: f[3] };
    let info = SemanticInfo {
        refined: RefinedGraph { s_hat },
        weights: ConfidenceMatrix { w },
        fit,
        clusters: ClusterAssignment { labels, k },
        t,
    };
    info.validate()?;
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgraph::generate_semantic_info;

    #[test]
    fn round_trip_is_exact() {
        let x = Array2::from_shape_fn((13, 5), |(i, j)| (((i * 31 + j * 7) % 13) as f32 - 6.0) + 0.25);
        let info = generate_semantic_info(&x, 0.3, 3, 4).unwrap();
        let mut bytes = Vec::new();
        write_semantic_info(&mut bytes, &info).unwrap();
        assert_eq!(&bytes[..4], b"CIMS");
        assert_eq!(bytes.len(), 4 + 8 + 8 + 4 + 32 + 13 * 4 + (169usize).div_ceil(4) + 91 * 4);
        let back = read_semantic_info(&bytes).unwrap();
        assert_eq!(back, info);

        bytes.pop();
        assert!(read_semantic_info(&bytes).is_err());
    }
}
