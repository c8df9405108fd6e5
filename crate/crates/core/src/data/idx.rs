//! IDX binary format (the MNIST container).
//!
//! Layout: a 4-byte big-endian magic `0x00 0x00 <type> <ndims>`, then `ndims`
//! big-endian `u32` sizes, then the payload in row-major order. Label files are
//! `0x00000801` (unsigned bytes, one dimension); MNIST image files are
//! `0x00000803`. Images may also be stored as big-endian `f64` (type `0x0E`),
//! which is how unnormalised synthetic fixtures are written.

use std::fs;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder};
use ndarray::Array2;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;

const TYPE_U8: u8 = 0x08;
const TYPE_F64: u8 = 0x0E;

/// Payload element type of an IDX feature file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxElement {
    /// Unsigned bytes; features are scaled by 1/255 on read.
    U8,
    /// Big-endian IEEE doubles, read back unchanged.
    F64,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Idx {
                offset: self.pos,
                reason: format!(
                    "truncated {what}: need {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(BigEndian::read_u32(self.take(4, what)?))
    }
}

fn header<'a>(
    bytes: &'a [u8],
    accept: impl Fn(u32) -> bool,
    expected: &str,
) -> Result<(u8, Vec<usize>, Reader<'a>)> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.u32("magic number")?;
    if magic >> 16 != 0 || !accept(magic) {
        return Err(Error::Idx {
            offset: 0,
            reason: format!("expected {expected}, got magic 0x{magic:08X}"),
        });
    }
    let ty = ((magic >> 8) & 0xFF) as u8;
    let ndims = (magic & 0xFF) as usize;
    let dims = (0..ndims)
        .map(|i| r.u32(&format!("dimension {i}")).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok((ty, dims, r))
}

/// Decodes a label file (magic `0x00000801`).
pub fn decode_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let (_, dims, mut r) = header(
        bytes,
        |m| m == LABELS_MAGIC,
        &format!("label magic 0x{LABELS_MAGIC:08X}"),
    )?;
    Ok(r.take(dims[0], "label payload")?
        .iter()
        .map(|&b| b as usize)
        .collect())
}

/// Decodes an image/feature file into an `M x d` matrix, flattening all
/// trailing dimensions row-major.
pub fn decode_images<T: Scalar>(bytes: &[u8]) -> Result<Array2<T>> {
    let (ty, dims, mut r) = header(
        bytes,
        |m| {
            let ty = ((m >> 8) & 0xFF) as u8;
            matches!(ty, TYPE_U8 | TYPE_F64) && (m & 0xFF) >= 2
        },
        &format!("image magic 0x{IMAGES_MAGIC:08X} (or an f64 matrix)"),
    )?;
    let count = dims[0];
    let d: usize = dims[1..].iter().product();
    let n = count * d;
    let values: Vec<T> = match ty {
        TYPE_U8 => {
            r.take(n, "image payload")?
                .iter()
                .map(|&b| T::of(b as f64 / 255.0))
                .collect()
        }
        _ => r
            .take(n * 8, "f64 payload")?
            .chunks_exact(8)
            .map(|c| T::of(BigEndian::read_f64(c)))
            .collect(),
    };
    Ok(Array2::from_shape_vec((count, d), values).expect("length checked"))
}

/// Parses an images/labels pair. The class count is the largest label plus one.
pub fn load_idx<T: Scalar>(images: &[u8], labels: &[u8]) -> Result<LabeledDataset<T>> {
    let features = decode_images::<T>(images)?;
    let labels = decode_labels(labels)?;
    if features.nrows() != labels.len() {
        return Err(Error::Idx {
            offset: 4,
            reason: format!(
                "image count {} does not match label count {}",
                features.nrows(),
                labels.len()
            ),
        });
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    LabeledDataset::new(features, labels, classes)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_idx_files<T: Scalar>(images: &Path, labels: &Path) -> Result<LabeledDataset<T>> {
    load_idx(&read(images)?, &read(labels)?)
}

/// Loads the standard MNIST file quartet from `dir` as `(train, test)`.
pub fn load_mnist<T: Scalar>(dir: &Path) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let train = read_idx_files::<T>(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = read_idx_files::<T>(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    let classes = train.num_classes().max(test.num_classes());
    let rebuild = |ds: LabeledDataset<T>| {
        let (features, labels) = (ds.features().clone(), ds.labels().to_vec());
        LabeledDataset::new(features, labels, classes)
    };
    Ok((rebuild(train)?, rebuild(test)?))
}

/// Encodes labels as `0x00000801`.
pub fn encode_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &y in labels {
        let byte = u8::try_from(y)
            .map_err(|_| Error::Contract(format!("label {y} does not fit in a byte")))?;
        out.push(byte);
    }
    Ok(out)
}

/// Encodes an `M x d` feature matrix. `item_dims` gives the per-sample shape
/// (e.g. `[28, 28]`) and must multiply to `d`.
///
/// With [`IdxElement::U8`] every feature must lie in `[0, 1]`; it is stored as
/// `round(255 x)`.
pub fn encode_images<T: Scalar>(
    features: &Array2<T>,
    element: IdxElement,
    item_dims: &[usize],
) -> Result<Vec<u8>> {
    if item_dims.iter().product::<usize>() != features.ncols() || item_dims.is_empty() {
        return Err(Error::shape(
            "IDX item dimensions",
            features.ncols(),
            format!("{item_dims:?}"),
        ));
    }
    let ty = match element {
        IdxElement::U8 => TYPE_U8,
        IdxElement::F64 => TYPE_F64,
    };
    let magic = ((ty as u32) << 8) | (item_dims.len() as u32 + 1);
    let mut out = Vec::new();
    out.extend_from_slice(&magic.to_be_bytes());
    out.extend_from_slice(&(features.nrows() as u32).to_be_bytes());
    for &d in item_dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for &v in features.iter() {
        match element {
            IdxElement::U8 => {
                let x = v.as_f64();
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Contract(format!(
                        "feature {x} outside [0, 1] cannot be stored as a byte"
                    )));
                }
                out.push((x * 255.0).round() as u8);
            }
            IdxElement::F64 => out.extend_from_slice(&v.as_f64().to_be_bytes()),
        }
    }
    Ok(out)
}
