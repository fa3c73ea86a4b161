//! Binary network checkpoints. Layout (all little-endian):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `NCAW` |
//! | 4 | 4 | version (u32, currently 1) |
//! | 8 | 4 | hidden size (u32) |
//! | 12 | 4 | grid height (u32) |
//! | 16 | 4 | grid width (u32) |
//! | 20 | 8 | training step (u64) |
//! | 28 | 8 | rng seed (u64) |
//! | 36 | .. | parameters as f32 |
//!
//! Parameters follow in order: layer-1 weights (hidden x 144, row-major),
//! layer-1 bias, layer-2 weights (16 x hidden, row-major), layer-2 bias.

use std::path::Path;

use super::binary::{put_f32s, Reader};
use crate::error::{Error, Result};
use crate::network::UpdateNetwork;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NCAW";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckpointMeta {
    pub grid_height: u32,
    pub grid_width: u32,
    pub training_step: u64,
    pub seed: u64,
}

pub fn encode_checkpoint(net: &UpdateNetwork, meta: &CheckpointMeta) -> Vec<u8> {
    let mut out = Vec::with_capacity(36 + net.param_count() * 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.hidden_size() as u32).to_le_bytes());
    out.extend_from_slice(&meta.grid_height.to_le_bytes());
    out.extend_from_slice(&meta.grid_width.to_le_bytes());
    out.extend_from_slice(&meta.training_step.to_le_bytes());
    out.extend_from_slice(&meta.seed.to_le_bytes());
    for t in net.tensors() {
        put_f32s(&mut out, t);
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<(UpdateNetwork, CheckpointMeta)> {
    let mut r = Reader::new(bytes, path);
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(r.fail(format!(
            "unsupported checkpoint version {version}, this build reads {CHECKPOINT_VERSION}"
        )));
    }
    let hidden = r.u32()? as usize;
    if hidden == 0 {
        return Err(r.fail("hidden size is zero"));
    }
    let meta = CheckpointMeta {
        grid_height: r.u32()?,
        grid_width: r.u32()?,
        training_step: r.u64()?,
        seed: r.u64()?,
    };
    let mut net = UpdateNetwork::zeros(hidden)?;
    for t in net.tensors_mut() {
        let n = t.len();
        t.copy_from_slice(&r.f32s(n)?);
    }
    r.finish()?;
    Ok((net, meta))
}

pub fn save_checkpoint(net: &UpdateNetwork, meta: &CheckpointMeta, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &encode_checkpoint(net, meta))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(UpdateNetwork, CheckpointMeta)> {
    let path = path.as_ref();
    decode_checkpoint(&super::read_file(path)?, path)
}

/// Load and insist on a particular hidden size.
pub fn load_checkpoint_for(path: impl AsRef<Path>, hidden_size: usize) -> Result<(UpdateNetwork, CheckpointMeta)> {
    let path = path.as_ref();
    let (net, meta) = load_checkpoint(path)?;
    if net.hidden_size() != hidden_size {
        return Err(Error::Dimension(format!(
            "{} holds a network with hidden size {}, but the run is configured for {hidden_size}",
            path.display(),
            net.hidden_size()
        )));
    }
    Ok((net, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn sample() -> (UpdateNetwork, CheckpointMeta) {
        let mut net = UpdateNetwork::init(16, &mut RngStream::new(3)).unwrap();
        net.b2[5] = -0.25;
        net.w2[7] = f32::MIN_POSITIVE;
        let meta = CheckpointMeta {
            grid_height: 54,
            grid_width: 60,
            training_step: 1234,
            seed: 0xdead_beef,
        };
        (net, meta)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ncaw");
        let (net, meta) = sample();
        save_checkpoint(&net, &meta, &path).unwrap();
        let (back, back_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(back_meta, meta);
        let bits = |n: &UpdateNetwork| n.params().map(f32::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&net));
    }

    #[test]
    fn header_layout() {
        let (net, meta) = sample();
        let bytes = encode_checkpoint(&net, &meta);
        assert_eq!(&bytes[..4], b"NCAW");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1234);
        assert_eq!(bytes.len(), 36 + net.param_count() * 4);
        let first = f32::from_le_bytes(bytes[36..40].try_into().unwrap());
        assert_eq!(first, net.w1[0]);
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let p = Path::new("x.ncaw");
        let (net, meta) = sample();
        let mut bytes = encode_checkpoint(&net, &meta);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad, p), Err(Error::Format { .. })));
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(decode_checkpoint(truncated, p), Err(Error::Format { .. })));
        bytes[4] = 9;
        let err = decode_checkpoint(&bytes, p).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
        assert!(matches!(decode_checkpoint(b"NC", p), Err(Error::Format { .. })));
    }

    #[test]
    fn hidden_size_mismatch_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ncaw");
        let net = UpdateNetwork::zeros(128).unwrap();
        save_checkpoint(&net, &CheckpointMeta::default(), &path).unwrap();
        assert!(matches!(load_checkpoint_for(&path, 64), Err(Error::Dimension(_))));
        assert!(load_checkpoint_for(&path, 128).is_ok());
    }
}
