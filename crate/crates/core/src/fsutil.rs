//! Atomic file output and little-endian helpers shared by the binary formats.

use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Writes through a temporary file in the destination directory, then renames it into place.
pub fn atomic_write(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_exact<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub(crate) fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    read_exact::<4>(r).map(u32::from_le_bytes)
}

pub(crate) fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    read_exact::<8>(r).map(u64::from_le_bytes)
}

pub(crate) fn read_f32(r: &mut impl Read) -> io::Result<f32> {
    read_exact::<4>(r).map(f32::from_le_bytes)
}

pub(crate) fn read_u16(r: &mut impl Read) -> io::Result<u16> {
    read_exact::<2>(r).map(u16::from_le_bytes)
}
