//! Parameter checkpoints.
//!
//! Layout on disk: an 8-byte little-endian header length `n`, `n` bytes of
//! UTF-8 JSON (`{"spec": MlpSpec, "layout": [Segment], "len": count}`), then
//! `len` little-endian `f64` values.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mlp::MlpSpec;
use crate::error::{Error, Result};
use crate::tensor::{LayerMap, ParamVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    spec: MlpSpec,
    layout: LayerMap,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

pub fn write_checkpoint<W: Write>(mut out: W, spec: &MlpSpec, params: &ParamVector) -> Result<()> {
    if params.layout().as_ref() != &spec.layout() {
        return Err(Error::shape("checkpoint parameters do not match the MLP layout"));
    }
    let header = serde_json::to_vec(&Header {
        spec: spec.clone(),
        layout: params.layout().as_ref().clone(),
        len: params.len(),
    })?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    for v in params.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint> {
    let mut len_bytes = [0u8; 8];
    input.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 1 << 24 {
        return Err(Error::invalid(format!("implausible checkpoint header length {header_len}")));
    }
    let mut header = vec![0u8; header_len];
    input.read_exact(&mut header)?;
    let header: Header = serde_json::from_slice(&header)?;
    header.spec.validate()?;
    if header.layout != header.spec.layout() || header.len != header.layout.total_len() {
        return Err(Error::shape("checkpoint header layout disagrees with its MLP spec"));
    }
    let mut values = Vec::with_capacity(header.len);
    let mut buf = [0u8; 8];
    for _ in 0..header.len {
        input.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    let params = ParamVector::from_values(Arc::new(header.layout), values)?;
    Ok(Checkpoint {
        spec: header.spec,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init_params, Activation};

    #[test]
    fn round_trip_is_bitwise() {
        let spec = MlpSpec::new(vec![2, 5, 3], Activation::Tanh, 9).unwrap();
        let w = init_params(&spec).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &w).unwrap();
        let header_len = u64::from_le_bytes(buf[..8].try_into().unwrap()) as usize;
        assert_eq!(buf.len(), 8 + header_len + 8 * w.len());
        let ck = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(ck.spec, spec);
        assert_eq!(ck.params, w);
    }

    #[test]
    fn truncated_file_fails() {
        let spec = MlpSpec::new(vec![2, 2], Activation::Relu, 1).unwrap();
        let w = init_params(&spec).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &w).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }

    #[test]
    fn mismatched_params_rejected() {
        let spec = MlpSpec::new(vec![2, 2], Activation::Relu, 1).unwrap();
        let w = ParamVector::from_slice(&[0.0; 6]);
        assert!(write_checkpoint(Vec::new(), &spec, &w).is_err());
    }
}
