use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::is_probability_vector;
use crate::scalar::Scalar;

/// Per-sample output probabilities of a client's personalized model, recorded
/// at the end of its last participation. Rows follow the client's
/// `train_indices` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientHistory<T> {
    pub client_id: usize,
    pub recorded_round: usize,
    probs: Array2<T>,
}

const HEADER_LEN: usize = 32;

impl<T: Scalar> ClientHistory<T> {
    pub fn new(client_id: usize, recorded_round: usize, probs: Array2<T>) -> Result<Self> {
        for (i, row) in probs.rows().into_iter().enumerate() {
            if !is_probability_vector(&row.to_vec(), 1e-9) {
                return Err(Error::Contract(format!(
                    "history row {i} of client {client_id} is not a probability vector"
                )));
            }
        }
        Ok(ClientHistory {
            client_id,
            recorded_round,
            probs,
        })
    }

    /// `n_k x L`
    pub fn probs(&self) -> &Array2<T> {
        &self.probs
    }

    pub fn num_samples(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.ncols()
    }

    /// Numbers held in memory: exactly `n_k * L`.
    pub fn stored_values(&self) -> usize {
        self.probs.len()
    }

    /// Flat little-endian record: `client_id`, `round`, `n_k`, `L` as `u64`,
    /// then `n_k * L` probabilities as `f64`, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; HEADER_LEN + 8 * self.probs.len()];
        let header = [
            self.client_id as u64,
            self.recorded_round as u64,
            self.num_samples() as u64,
            self.num_classes() as u64,
        ];
        LittleEndian::write_u64_into(&header, &mut out[..HEADER_LEN]);
        let values: Vec<f64> = self.probs.iter().map(|p| p.as_f64()).collect();
        LittleEndian::write_f64_into(&values, &mut out[HEADER_LEN..]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Record {
                offset: bytes.len(),
                reason: format!("header needs {HEADER_LEN} bytes"),
            });
        }
        let mut header = [0u64; 4];
        LittleEndian::read_u64_into(&bytes[..HEADER_LEN], &mut header);
        let [client_id, round, rows, cols] = header.map(|v| v as usize);
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Record {
                offset: 16,
                reason: "record dimensions overflow".into(),
            })?;
        if bytes.len() != expected {
            return Err(Error::Record {
                offset: bytes.len().min(expected),
                reason: format!("expected {expected} bytes for {rows}x{cols}, got {}", bytes.len()),
            });
        }
        let mut values = vec![0f64; rows * cols];
        LittleEndian::read_f64_into(&bytes[HEADER_LEN..], &mut values);
        let probs = Array2::from_shape_vec((rows, cols), values.into_iter().map(T::of).collect())
            .expect("length checked");
        Self::new(client_id, round, probs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
