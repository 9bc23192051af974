//! `.etns` tensor files: a small self-describing little-endian container.
//!
//! Layout: magic `ETNS`, version `u32` (= 1), dtype `u8` (1 = f32, 2 = f64,
//! 3 = u8), ndim `u8`, `ndim` dims as `u64`, then the row-major payload.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"ETNS";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TensorFileError {
    #[error("not a tensor file (bad magic)")]
    BadMagic,
    #[error("unsupported tensor file version {0}")]
    Version(u32),
    #[error("unknown dtype code {0}")]
    DType(u8),
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("payload is {actual} bytes, expected {expected}")]
    Payload { expected: u64, actual: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
    U8,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
            DType::U8 => 3,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::U8 => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self, TensorFileError> {
        match code {
            1 => Ok(DType::F32),
            2 => Ok(DType::F64),
            3 => Ok(DType::U8),
            other => Err(TensorFileError::DType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::U8(_) => DType::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to f64; u8 data is returned as raw 0..=255 values.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    dims: Vec<u64>,
    data: TensorData,
}

impl TensorFile {
    pub fn new(dims: Vec<u64>, data: TensorData) -> Result<Self, TensorFileError> {
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(TensorFileError::Shape(format!("{} dimensions", dims.len())));
        }
        if dims.contains(&0) {
            return Err(TensorFileError::Shape(format!("zero-sized dimension in {dims:?}")));
        }
        let count = element_count(&dims)?;
        if count != data.len() as u64 {
            return Err(TensorFileError::Shape(format!(
                "dims {dims:?} hold {count} elements, data has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_parts(self) -> (Vec<u64>, TensorData) {
        (self.dims, self.data)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), TensorFileError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.data.dtype().code(), self.dims.len() as u8])?;
        for d in &self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        let mut payload = Vec::with_capacity(self.data.len() * self.data.dtype().size());
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => payload.extend_from_slice(v),
        }
        w.write_all(&payload)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, TensorFileError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(TensorFileError::BadMagic);
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(truncated)?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(TensorFileError::Version(version));
        }
        let mut head = [0u8; 2];
        r.read_exact(&mut head).map_err(truncated)?;
        let dtype = DType::from_code(head[0])?;
        let mut dims = Vec::with_capacity(head[1] as usize);
        for _ in 0..head[1] {
            let mut d = [0u8; 8];
            r.read_exact(&mut d).map_err(truncated)?;
            dims.push(u64::from_le_bytes(d));
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(TensorFileError::Shape(format!("dims {dims:?}")));
        }
        let expected = element_count(&dims)?
            .checked_mul(dtype.size() as u64)
            .ok_or_else(|| TensorFileError::Shape("payload size overflows".into()))?;
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() as u64 != expected {
            return Err(TensorFileError::Payload {
                expected,
                actual: payload.len() as u64,
            });
        }
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::U8 => TensorData::U8(payload),
        };
        Ok(Self { dims, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, TensorFileError> {
        Self::read_from(io::BufReader::new(fs::File::open(path)?))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), TensorFileError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

fn element_count(dims: &[u64]) -> Result<u64, TensorFileError> {
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| TensorFileError::Shape(format!("element count of {dims:?} overflows")))
}

fn truncated(e: io::Error) -> TensorFileError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        TensorFileError::Shape("truncated header".into())
    } else {
        TensorFileError::Io(e)
    }
}
