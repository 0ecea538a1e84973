//! IDX binary tensors (the MNIST container).
//!
//! Layout, all integers big-endian: two zero bytes, an element-type code, the
//! rank, `rank` 4-byte dimension sizes, then the row-major payload. The whole
//! buffer must be consumed exactly.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdxType {
    U8,
    I8,
    I16,
    I32,
    F32,
    F64,
}

impl IdxType {
    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0x08 => IdxType::U8,
            0x09 => IdxType::I8,
            0x0B => IdxType::I16,
            0x0C => IdxType::I32,
            0x0D => IdxType::F32,
            0x0E => IdxType::F64,
            other => return Err(Error::UnsupportedType(other)),
        })
    }

    pub fn code(self) -> u8 {
        match self {
            IdxType::U8 => 0x08,
            IdxType::I8 => 0x09,
            IdxType::I16 => 0x0B,
            IdxType::I32 => 0x0C,
            IdxType::F32 => 0x0D,
            IdxType::F64 => 0x0E,
        }
    }

    pub fn width(self) -> usize {
        match self {
            IdxType::U8 | IdxType::I8 => 1,
            IdxType::I16 => 2,
            IdxType::I32 | IdxType::F32 => 4,
            IdxType::F64 => 8,
        }
    }
}

/// Raw payload, kept in its stored type.
#[derive(Clone, Debug, PartialEq)]
pub enum IdxData {
    U8(Vec<u8>),
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl IdxData {
    pub fn len(&self) -> usize {
        match self {
            IdxData::U8(v) => v.len(),
            IdxData::I8(v) => v.len(),
            IdxData::I16(v) => v.len(),
            IdxData::I32(v) => v.len(),
            IdxData::F32(v) => v.len(),
            IdxData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            IdxData::U8(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::I8(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::I16(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::I32(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::F64(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdxTensor {
    pub element_type: IdxType,
    pub shape: Vec<usize>,
    pub data: IdxData,
}

impl IdxTensor {
    /// Number of items along the first axis.
    pub fn items(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Elements per item (product of the trailing axes).
    pub fn item_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// Payload scaled to `[0, 1]` when stored as unsigned bytes; otherwise as `f64`.
    pub fn normalized(&self) -> Vec<f64> {
        match &self.data {
            IdxData::U8(v) => v.iter().map(|&x| x as f64 / 255.0).collect(),
            other => other.to_f64(),
        }
    }
}

pub fn read_idx(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(Error::Length { expected: 4, found: bytes.len() });
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Format(format!("bad IDX magic: expected 00 00, found {:02X} {:02X}", bytes[0], bytes[1])));
    }
    let element_type = IdxType::from_code(bytes[2])?;
    let rank = bytes[3] as usize;
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Length { expected: header, found: bytes.len() });
    }
    let shape: Vec<usize> =
        bytes[4..header].chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize).collect();
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let expected = count
        .checked_mul(element_type.width())
        .and_then(|p| p.checked_add(header))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Length { expected, found: bytes.len() });
    }
    let payload = &bytes[header..];
    let data = match element_type {
        IdxType::U8 => IdxData::U8(payload.to_vec()),
        IdxType::I8 => IdxData::I8(payload.iter().map(|&b| b as i8).collect()),
        IdxType::I16 => IdxData::I16(payload.chunks_exact(2).map(|c| i16::from_be_bytes([c[0], c[1]])).collect()),
        IdxType::I32 => {
            IdxData::I32(payload.chunks_exact(4).map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect())
        }
        IdxType::F32 => {
            IdxData::F32(payload.chunks_exact(4).map(|c| f32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect())
        }
        IdxType::F64 => IdxData::F64(
            payload.chunks_exact(8).map(|c| f64::from_be_bytes(c.try_into().expect("8-byte chunk"))).collect(),
        ),
    };
    Ok(IdxTensor { element_type, shape, data })
}

pub fn write_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = vec![0, 0, tensor.element_type.code(), tensor.shape.len() as u8];
    for &d in &tensor.shape {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    match &tensor.data {
        IdxData::U8(v) => out.extend_from_slice(v),
        IdxData::I8(v) => out.extend(v.iter().map(|&x| x as u8)),
        IdxData::I16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
    }
    out
}

pub fn read_idx_file(path: &Path) -> Result<IdxTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_idx(&bytes)
}

/// Images of two digit classes, in file order, with pixels scaled to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct DigitPair {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub pixels: usize,
}

pub fn load_digit_pair(images: &Path, labels: &Path, first: u8, second: u8) -> Result<DigitPair> {
    let img = read_idx_file(images)?;
    let lab = read_idx_file(labels)?;
    if img.shape.len() < 2 {
        return Err(Error::Format("image tensor needs rank >= 2".into()));
    }
    let labels = match &lab.data {
        IdxData::U8(v) => v.clone(),
        _ => return Err(Error::Format("labels must be unsigned bytes".into())),
    };
    if labels.len() != img.items() {
        return Err(Error::data(format!("{} labels for {} images", labels.len(), img.items())));
    }
    let pixels = img.item_len();
    let values = img.normalized();
    let mut pair = DigitPair { first: Vec::new(), second: Vec::new(), pixels };
    for (i, &l) in labels.iter().enumerate() {
        let row = values[i * pixels..(i + 1) * pixels].to_vec();
        if l == first {
            pair.first.push(row);
        } else if l == second {
            pair.second.push(row);
        }
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vector() {
        let t = read_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 5, 6, 7]).unwrap();
        assert_eq!(t.shape, vec![3]);
        assert_eq!(t.data, IdxData::U8(vec![5, 6, 7]));
    }

    #[test]
    fn parses_rank3() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4];
        let t = read_idx(&bytes).unwrap();
        assert_eq!(t.shape, vec![1, 2, 2]);
        assert_eq!(t.item_len(), 4);
    }

    #[test]
    fn rejects_bad_magic_and_lengths() {
        assert!(matches!(read_idx(&[1, 0, 8, 1, 0, 0, 0, 1, 9]), Err(Error::Format(_))));
        assert!(matches!(read_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 5, 6]), Err(Error::Length { .. })));
        assert!(matches!(read_idx(&[0, 0, 8, 1, 0, 0, 0, 1, 5, 6]), Err(Error::Length { .. })));
        assert!(matches!(read_idx(&[0, 0, 0x42, 1, 0, 0, 0, 1, 5]), Err(Error::UnsupportedType(0x42))));
        assert!(matches!(read_idx(&[0, 0]), Err(Error::Length { .. })));
    }

    #[test]
    fn typed_payloads() {
        let t = IdxTensor { element_type: IdxType::F64, shape: vec![2], data: IdxData::F64(vec![1.5, -2.25]) };
        assert_eq!(read_idx(&write_idx(&t)).unwrap(), t);
        let t = IdxTensor { element_type: IdxType::I16, shape: vec![1, 2], data: IdxData::I16(vec![-300, 7]) };
        assert_eq!(read_idx(&write_idx(&t)).unwrap(), t);
    }
}
