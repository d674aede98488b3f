//! NPY v1.0 files: little-endian, C order.
//!
//! Writing produces the same bytes as `numpy.save`. Reading goes through
//! `npyz` and accepts anything it can decode into the requested type.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use npyz::num_complex::Complex32;
use npyz::{Deserialize, NpyFile, Order};
use tomochm_core::C64;

use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY\x01\x00";

/// Element types this crate stores.
pub trait Element: Copy {
    const DESCR: &'static str;
    fn put(&self, out: &mut Vec<u8>);
}

impl Element for f32 {
    const DESCR: &'static str = "<f4";
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Element for bool {
    const DESCR: &'static str = "|b1";
    fn put(&self, out: &mut Vec<u8>) {
        out.push(*self as u8);
    }
}

impl Element for Complex32 {
    const DESCR: &'static str = "<c8";
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
}

fn header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dims = match shape {
        [d] => format!("({d},)"),
        _ => format!("({})", shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")),
    };
    let mut dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {dims}, }}");
    // Magic + version + u16 length + dict + '\n' padded to 64 bytes.
    let unpadded = MAGIC.len() + 2 + dict.len() + 1;
    dict.extend(std::iter::repeat_n(' ', (64 - unpadded % 64) % 64));
    dict.push('\n');
    let mut out = Vec::with_capacity(MAGIC.len() + 2 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

/// Serializes `data` with the given shape.
pub fn to_bytes<T: Element>(shape: &[usize], data: &[T]) -> Vec<u8> {
    assert_eq!(shape.iter().product::<usize>(), data.len(), "npy shape does not match data length");
    let mut out = header(T::DESCR, shape);
    out.reserve(data.len() * 8);
    for v in data {
        v.put(&mut out);
    }
    out
}

pub fn write<T: Element>(path: &Path, shape: &[usize], data: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_bytes(shape, data)).map_err(|e| Error::io(path, e))
}

/// Writes complex samples as complex64.
pub fn write_c64(path: &Path, shape: &[usize], data: &[C64]) -> Result<()> {
    let narrowed: Vec<Complex32> = data.iter().map(|z| Complex32::new(z.re as f32, z.im as f32)).collect();
    write(path, shape, &narrowed)
}

/// Writes `f64` values as float32.
pub fn write_f64_as_f32(path: &Path, shape: &[usize], data: &[f64]) -> Result<()> {
    let narrowed: Vec<f32> = data.iter().map(|v| *v as f32).collect();
    write(path, shape, &narrowed)
}

/// A decoded array.
#[derive(Debug, Clone, PartialEq)]
pub struct Array<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T> Array<T> {
    /// Fails unless the array has `ndim` axes.
    pub fn expect_ndim(&self, path: &Path, ndim: usize) -> Result<()> {
        if self.shape.len() != ndim {
            return Err(Error::format(path, format!("expected {ndim} axes, found shape {:?}", self.shape)));
        }
        Ok(())
    }
}

pub fn from_bytes<T: Deserialize>(path: &Path, bytes: &[u8]) -> Result<Array<T>> {
    let file = NpyFile::new(Cursor::new(bytes)).map_err(|e| Error::format(path, e.to_string()))?;
    if file.order() != Order::C {
        return Err(Error::format(path, "fortran-ordered arrays are not supported"));
    }
    let shape = file.shape().iter().map(|d| *d as usize).collect();
    let data = file.into_vec::<T>().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(Array { shape, data })
}

pub fn read<T: Deserialize>(path: &Path) -> Result<Array<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(path, &bytes)
}

pub fn read_c64(path: &Path) -> Result<Array<C64>> {
    let a = read::<Complex32>(path)?;
    Ok(Array { shape: a.shape, data: a.data.iter().map(|z| C64::new(z.re as f64, z.im as f64)).collect() })
}

pub fn read_f32_as_f64(path: &Path) -> Result<Array<f64>> {
    let a = read::<f32>(path)?;
    Ok(Array { shape: a.shape, data: a.data.iter().map(|v| *v as f64).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_aligned() {
        for shape in [&[2usize, 3][..], &[7], &[1000, 1000, 84], &[]] {
            let h = header("<f4", shape);
            assert_eq!(h.len() % 64, 0);
            assert_eq!(*h.last().unwrap(), b'\n');
        }
    }

    #[test]
    fn shape_spelling() {
        let h = String::from_utf8_lossy(&header("|b1", &[5])).into_owned();
        assert!(h.contains("'shape': (5,), }"));
        let h = String::from_utf8_lossy(&header("|b1", &[])).into_owned();
        assert!(h.contains("'shape': (), }"));
    }

    #[test]
    fn round_trip() {
        let p = Path::new("mem");
        let data = [1.5f32, -2.0, f32::NAN, 0.0];
        let back = from_bytes::<f32>(p, &to_bytes(&[2, 2], &data)).unwrap();
        assert_eq!(back.shape, vec![2, 2]);
        assert_eq!(
            back.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let z = [Complex32::new(1.0, -1.0), Complex32::new(0.25, 3.0)];
        assert_eq!(from_bytes::<Complex32>(p, &to_bytes(&[2], &z)).unwrap().data, z);
        let b = [true, false, true];
        assert_eq!(from_bytes::<bool>(p, &to_bytes(&[1, 3], &b)).unwrap().data, b);
    }

    #[test]
    fn rejects_wrong_dtype() {
        let bytes = to_bytes(&[2], &[true, false]);
        assert!(from_bytes::<f32>(Path::new("x.npy"), &bytes).is_err());
    }
}
