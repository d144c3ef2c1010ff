//! Model checkpoint (`CIMM`, little-endian):
//! `"CIMM" | layers u32 | dims (layers + 1) x u64 |` then per layer the
//! `fan_in x fan_out` weights row-major followed by the `fan_out` biases,
//! all `f64`.

use std::io::{self, Write};

use ndarray::{Array1, Array2};

use super::{HashError, HashModel, Layer};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CIMM";

pub fn write_checkpoint<W: Write>(mut w: W, model: &HashModel) -> io::Result<()> {
    let mut buf = Vec::with_capacity(16 + model.param_count() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    for d in model.layer_dims() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for p in model.params_flat() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<HashModel, HashError> {
    let bad = |m: &str| HashError::MalformedCheckpoint(m.to_string());
    if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("bad magic, expected CIMM"));
    }
    let layers = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if layers == 0 || layers > 64 {
        return Err(bad("layer count out of range"));
    }
    let dims_end = 8 + (layers + 1) * 8;
    let dims: Vec<usize> = bytes
        .get(8..dims_end)
        .ok_or_else(|| bad("truncated dims"))?
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if dims.iter().any(|&d| d == 0 || d > (1 << 24)) {
        return Err(bad("layer width out of range"));
    }
    let count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let body = &bytes[dims_end..];
    if body.len() != count * 8 {
        return Err(bad("parameter block length does not match dims"));
    }
    let mut params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let layers = dims
        .windows(2)
        .map(|w| {
            let weights = Array2::from_shape_fn((w[0], w[1]), |_| params.next().unwrap());
            let bias = Array1::from_shape_fn(w[1], |_| params.next().unwrap());
            Layer { weights, bias }
        })
        .collect();
    let model = HashModel { layers };
    if !model.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashnet::init_model;

    #[test]
    fn bit_exact_round_trip() {
        let m = init_model(6, &[5, 4], 3, 21).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 8 + m.param_count() * 8);
        let back = read_checkpoint(&buf).unwrap();
        let bits = |m: &HashModel| m.params_flat().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(back.layer_dims(), vec![6, 5, 4, 3]);
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
    }
}
