//! Binary soft-prediction tensor files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                 |
//! |--------|------|-----------------------|
//! | 0      | 4    | magic `SFTP`          |
//! | 4      | 2    | format version (1)    |
//! | 6      | 4    | height                |
//! | 10     | 4    | width                 |
//! | 14     | 2    | channels              |
//! | 16     | -    | `f32` payload         |
//!
//! The payload is planar: channel-major, then row-major pixels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::SoftPrediction;

pub const SOFT_MAGIC: [u8; 4] = *b"SFTP";
pub const SOFT_VERSION: u16 = 1;
pub const SOFT_HEADER_LEN: usize = 16;

pub fn encode_soft(soft: &SoftPrediction<f32>) -> Result<Vec<u8>> {
    let (w, h, c) = (soft.width(), soft.height(), soft.channels());
    let (Ok(h32), Ok(w32), Ok(c16)) = (u32::try_from(h), u32::try_from(w), u16::try_from(c)) else {
        return Err(Error::InvalidParameter("tensor too large for the file header".into()));
    };
    let mut out = Vec::with_capacity(SOFT_HEADER_LEN + w * h * c * 4);
    out.extend_from_slice(&SOFT_MAGIC);
    out.extend_from_slice(&SOFT_VERSION.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&c16.to_le_bytes());
    let data = soft.data();
    for ch in 0..c {
        for i in 0..w * h {
            out.extend_from_slice(&data[i * c + ch].to_le_bytes());
        }
    }
    Ok(out)
}

/// Decodes and validates a tensor; values are returned exactly as stored.
pub fn decode_soft(bytes: &[u8], path: &Path) -> Result<SoftPrediction<f32>> {
    if bytes.len() < SOFT_HEADER_LEN {
        return Err(Error::format(path, "truncated header"));
    }
    if bytes[0..4] != SOFT_MAGIC {
        return Err(Error::format(path, "bad magic, expected SFTP"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SOFT_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let h = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let c = u16::from_le_bytes([bytes[14], bytes[15]]) as usize;
    let expected = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(c))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    let payload = &bytes[SOFT_HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::format(
            path,
            format!("truncated payload: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes after payload", payload.len() - expected),
        ));
    }
    let n = w * h;
    let mut data = vec![0f32; n * c];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(path, format!("non-finite value at payload index {k}")));
        }
        let (ch, i) = (k / n, k % n);
        data[i * c + ch] = v;
    }
    SoftPrediction::new(w, h, c, data).map_err(|e| match e {
        e @ (Error::Normalization { .. } | Error::BadProbability { .. }) => Error::format(path, e.to_string()),
        other => other,
    })
}

pub fn read_soft_tensor(path: &Path) -> Result<SoftPrediction<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    decode_soft(&bytes, path)
}

pub fn write_soft_tensor(path: &Path, soft: &SoftPrediction<f32>) -> Result<()> {
    std::fs::write(path, encode_soft(soft)?).map_err(|e| Error::io(format!("write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn uniform_2x2x2_layout() {
        let s = SoftPrediction::<f32>::uniform(2, 2, 2);
        let bytes = encode_soft(&s).unwrap();
        assert_eq!(bytes.len(), 16 + 32);
        assert_eq!(&bytes[..4], b"SFTP");
        assert_eq!(&bytes[4..16], &[1, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0]);
        assert_eq!(decode_soft(&bytes, p()).unwrap(), s);
    }

    #[test]
    fn planar_channel_major() {
        let s = SoftPrediction::<f32>::new(2, 1, 2, vec![0.25, 0.75, 1.0, 0.0]).unwrap();
        let bytes = encode_soft(&s).unwrap();
        let vals: Vec<f32> = bytes[16..].chunks(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        assert_eq!(vals, vec![0.25, 1.0, 0.75, 0.0]);
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_soft(&SoftPrediction::<f32>::uniform(2, 2, 2)).unwrap();
        let err = decode_soft(&bytes[..bytes.len() - 1], p()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        assert!(decode_soft(&bytes[..10], p()).is_err());
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_soft(&SoftPrediction::<f32>::uniform(1, 1, 2)).unwrap();
        bytes[0] = b'X';
        assert!(decode_soft(&bytes, p()).unwrap_err().to_string().contains("magic"));
        let mut bytes = encode_soft(&SoftPrediction::<f32>::uniform(1, 1, 2)).unwrap();
        bytes[4] = 9;
        assert!(decode_soft(&bytes, p()).is_err());
    }

    #[test]
    fn non_finite_and_unnormalized_rejected() {
        let mut bytes = encode_soft(&SoftPrediction::<f32>::uniform(1, 1, 2)).unwrap();
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_soft(&bytes, p()).unwrap_err().to_string().contains("non-finite"));
        let mut bytes = encode_soft(&SoftPrediction::<f32>::uniform(1, 1, 2)).unwrap();
        bytes[16..20].copy_from_slice(&0.4f32.to_le_bytes());
        let err = decode_soft(&bytes, p()).unwrap_err();
        assert!(err.to_string().contains("sums to"), "{err}");
    }

    proptest! {
        #[test]
        fn byte_exact_round_trip(w in 1usize..6, h in 1usize..6, c in 2usize..5, seed in any::<u64>()) {
            let mut state = seed | 1;
            let s = SoftPrediction::<f32>::from_fn(w, h, c, |_, _, px| {
                for v in px.iter_mut() {
                    state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                    *v = (state % 1000) as f32 + 1.0;
                }
            }).unwrap();
            let bytes = encode_soft(&s).unwrap();
            let back = decode_soft(&bytes, p()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(encode_soft(&back).unwrap(), bytes);
        }
    }
}
