//! Portable checkpoint files.
//!
//! Layout: magic `LSRL1`, a u32-LE length-prefixed ASCII architecture
//! string, the schedule step counter as u64 LE, then every parameter as
//! IEEE-754 little-endian f64 in the documented layer order (conv1 w/b,
//! conv2 w/b, grid_dense w/b, aux_dense w/b, fusion w/b, out w/b).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::QError;
use crate::network::QNetwork;

const MAGIC: &[u8; 5] = b"LSRL1";

/// Architecture tag written to and validated against every checkpoint.
pub const ARCH_SPEC: &str =
    "grid45x3;conv1:1x16x3x3;conv2:16x32x3x3;grid_dense:4320x64;aux_dense:3x16;fusion:80x64;out:64x3";

/// A restored checkpoint: the network plus the schedule step counter.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub net: QNetwork,
    pub step: u64,
}

pub fn save_checkpoint(net: &QNetwork, step: u64, path: &Path) -> Result<(), QError> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(MAGIC)?;
    out.write_all(&(ARCH_SPEC.len() as u32).to_le_bytes())?;
    out.write_all(ARCH_SPEC.as_bytes())?;
    out.write_all(&step.to_le_bytes())?;
    for slice in net.param_slices() {
        for v in slice {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, QError> {
    let file = File::open(path)?;
    let mut input = BufReader::new(file);

    let mut magic = [0u8; 5];
    read_exact(&mut input, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(QError::CheckpointFormat(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }

    let mut len_bytes = [0u8; 4];
    read_exact(&mut input, &mut len_bytes, "header length")?;
    let arch_len = u32::from_le_bytes(len_bytes) as usize;
    if arch_len > 4096 {
        return Err(QError::CheckpointFormat(format!(
            "architecture string length {arch_len} is implausible"
        )));
    }
    let mut arch = vec![0u8; arch_len];
    read_exact(&mut input, &mut arch, "architecture string")?;
    let arch = String::from_utf8(arch)
        .map_err(|_| QError::CheckpointFormat("architecture string is not ASCII".into()))?;
    if arch != ARCH_SPEC {
        return Err(QError::CheckpointFormat(format!(
            "architecture mismatch: file holds {arch:?}"
        )));
    }

    let mut step_bytes = [0u8; 8];
    read_exact(&mut input, &mut step_bytes, "step counter")?;
    let step = u64::from_le_bytes(step_bytes);

    let mut net = QNetwork::zeroed();
    for slice in net.param_slices_mut() {
        let mut buf = [0u8; 8];
        for v in slice.iter_mut() {
            read_exact(&mut input, &mut buf, "parameters")?;
            *v = f64::from_le_bytes(buf);
        }
    }
    // Exactly at EOF, or the file does not match the architecture.
    let mut probe = [0u8; 1];
    match input.read(&mut probe)? {
        0 => Ok(Checkpoint { net, step }),
        _ => Err(QError::CheckpointFormat("trailing bytes after parameters".into())),
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), QError> {
    r.read_exact(buf)
        .map_err(|_| QError::CheckpointFormat(format!("truncated while reading {what}")))
}
