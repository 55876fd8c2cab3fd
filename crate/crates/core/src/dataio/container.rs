//! The `.epo` container.
//!
//! Little-endian throughout, no padding:
//!
//! ```text
//! "EPO1"            4 bytes magic
//! version           u32 (= 1)
//! n_trials          u32
//! n_channels        u32
//! n_samples         u32
//! fs_hz             f64
//! channel names     n_channels × (u16 byte length + UTF-8 bytes)
//! labels            n_trials × u8 (1..5)
//! samples           n_trials × n_channels × n_samples × f32
//! ```

use std::fs;
use std::path::Path;

use super::{ClassLabel, EpochedDataset};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EPO1";
pub const VERSION: u32 = 1;

pub fn read_dataset(path: impl AsRef<Path>) -> Result<EpochedDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

pub fn write_dataset(ds: &EpochedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn encode_dataset(ds: &EpochedDataset) -> Vec<u8> {
    let names: usize = ds.channel_names().iter().map(|n| 2 + n.len()).sum();
    let mut out = Vec::with_capacity(28 + names + ds.n_trials() + 4 * ds.data().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(ds.n_trials() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.n_channels() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&ds.fs_hz().to_le_bytes());
    for name in ds.channel_names() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out.extend(ds.labels().iter().map(|l| l.code()));
    for v in ds.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated payload: {what} needs {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<EpochedDataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}, expected \"EPO1\"")));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_trials = cur.u32("n_trials")? as usize;
    let n_channels = cur.u32("n_channels")? as usize;
    let n_samples = cur.u32("n_samples")? as usize;
    let fs_hz = f64::from_le_bytes(cur.take(8, "fs_hz")?.try_into().unwrap());

    let mut names = Vec::with_capacity(n_channels.min(4096));
    for c in 0..n_channels {
        let len = u16::from_le_bytes(cur.take(2, "channel name length")?.try_into().unwrap());
        let raw = cur.take(len as usize, "channel name")?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| Error::Format(format!("channel {c} name is not UTF-8")))?;
        names.push(name.to_string());
    }

    let labels = cur
        .take(n_trials, "labels")?
        .iter()
        .enumerate()
        .map(|(i, &code)| {
            ClassLabel::from_code(code)
                .ok_or_else(|| Error::Format(format!("trial {i} has label code {code}, expected 1..5")))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_values = n_trials
        .checked_mul(n_channels)
        .and_then(|v| v.checked_mul(n_samples))
        .ok_or_else(|| Error::Format("declared dimensions overflow".into()))?;
    let payload = cur.take(
        n_values
            .checked_mul(4)
            .ok_or_else(|| Error::Format("declared dimensions overflow".into()))?,
        "samples",
    )?;
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the sample payload",
            bytes.len() - cur.pos
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("non-finite sample at flat index {pos}")));
    }
    EpochedDataset::new(fs_hz, names, labels, n_samples, data)
        .map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(value: f32) -> EpochedDataset {
        EpochedDataset::new(256.0, vec!["Cz".into()], vec![ClassLabel::Hand], 1, vec![value]).unwrap()
    }

    #[test]
    fn one_value_layout() {
        let bytes = encode_dataset(&tiny(0.0));
        // header 28 + name (2 + 2) + 1 label + 4 data bytes
        assert_eq!(bytes.len(), 28 + 4 + 1 + 4);
        assert_eq!(&bytes[..4], &[0x45, 0x50, 0x4F, 0x31]);
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
        assert_eq!(bytes[bytes.len() - 5], 4);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let ds = EpochedDataset::new(256.0, vec!["Cz".into(), "Pz".into()], vec![], 10, vec![]).unwrap();
        let bytes = encode_dataset(&ds);
        assert_eq!(bytes.len(), 28 + 4 + 4);
        assert_eq!(decode_dataset(&bytes).unwrap(), ds);
    }

    #[test]
    fn truncated_payload() {
        let ds = EpochedDataset::new(
            100.0,
            vec!["a".into()],
            vec![ClassLabel::Word, ClassLabel::Sub],
            3,
            vec![1.0; 6],
        )
        .unwrap();
        let mut bytes = encode_dataset(&ds);
        // keep the header declaring 2 trials but drop the second trial's samples
        bytes.truncate(bytes.len() - 12);
        let err = decode_dataset(&bytes).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn rejects_bad_magic_version_and_values() {
        let mut bytes = encode_dataset(&tiny(1.0));
        bytes[0] = b'X';
        assert!(decode_dataset(&bytes).is_err());

        let mut bytes = encode_dataset(&tiny(1.0));
        bytes[4] = 2;
        assert!(decode_dataset(&bytes).unwrap_err().to_string().contains("version"));

        let mut bytes = encode_dataset(&tiny(1.0));
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(decode_dataset(&bytes).unwrap_err().to_string().contains("non-finite"));

        let mut bytes = encode_dataset(&tiny(1.0));
        bytes[n - 5] = 9;
        assert!(decode_dataset(&bytes).is_err());
    }

    #[test]
    fn missing_file() {
        let err = read_dataset("/nonexistent/definitely/missing.epo").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
