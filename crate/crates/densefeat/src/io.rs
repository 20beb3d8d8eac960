//! Little-endian binary readers and writers for the raster and vector file
//! formats. All formats start with a four-byte magic and store payloads as
//! 32-bit little-endian values, row-major.

use std::path::Path;

use crate::error::{Error, Result};

/// Byte-slice cursor that reports the current offset in parse errors.
pub struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    pub fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Cursor { buf, pos: 0, path }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(
                self.path,
                self.offset(),
                format!("truncated file while reading {what}"),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            return Err(Error::format(
                self.path,
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        Ok(())
    }

    pub fn read_u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn read_u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    /// Reads `n` finite f32 values; a NaN or infinity is a format error at its offset.
    pub fn read_f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let at = self.offset();
            let b = self.take(4, what)?;
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !v.is_finite() {
                return Err(Error::format(
                    self.path,
                    at,
                    format!("non-finite value in {what}"),
                ));
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn expect_eof(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.path,
                self.offset(),
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn push_f32s(buf: &mut Vec<u8>, values: &[f32]) {
    buf.reserve(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Writes a `magic / w / h / row-major f32` raster file (the RMAP and EMAP layout).
pub fn write_raster(path: &Path, magic: &[u8; 4], w: u32, h: u32, values: &[f32]) -> Result<()> {
    assert_eq!(values.len(), w as usize * h as usize);
    let mut buf = Vec::with_capacity(12 + values.len() * 4);
    buf.extend_from_slice(magic);
    push_u32(&mut buf, w);
    push_u32(&mut buf, h);
    push_f32s(&mut buf, values);
    write_file(path, &buf)
}

/// Reads a raster file written by [`write_raster`], validating magic, size and finiteness.
pub fn read_raster(path: &Path, magic: &[u8; 4]) -> Result<(u32, u32, Vec<f32>)> {
    let buf = read_file(path)?;
    let mut cur = Cursor::new(&buf, path);
    cur.expect_magic(magic)?;
    let w = cur.read_u32("width")?;
    let h = cur.read_u32("height")?;
    let n = (w as u64).saturating_mul(h as u64);
    if w == 0 || h == 0 || n > 1 << 31 {
        return Err(Error::format(path, 4, format!("bad dimensions {w}x{h}")));
    }
    let values = cur.read_f32s(n as usize, "raster values")?;
    cur.expect_eof()?;
    Ok((w, h, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.rmap");
        let vals = vec![0.0f32, 1.5, -2.25, 3.0, 4.0, 5.0];
        write_raster(&p, b"RMAP", 3, 2, &vals).unwrap();
        let (w, h, got) = read_raster(&p, b"RMAP").unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(got, vals);
    }

    #[test]
    fn truncated_raster_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.rmap");
        let mut buf = Vec::new();
        buf.extend_from_slice(b"RMAP");
        push_u32(&mut buf, 2);
        push_u32(&mut buf, 2);
        push_f32s(&mut buf, &[1.0, 2.0]);
        write_file(&p, &buf).unwrap();
        match read_raster(&p, b"RMAP") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.rmap");
        write_raster(&p, b"XMAP", 1, 1, &[0.0]).unwrap();
        assert!(read_raster(&p, b"RMAP").is_err());
    }

    #[test]
    fn non_finite_value_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.rmap");
        let mut buf = Vec::new();
        buf.extend_from_slice(b"RMAP");
        push_u32(&mut buf, 1);
        push_u32(&mut buf, 1);
        push_f32s(&mut buf, &[f32::NAN]);
        write_file(&p, &buf).unwrap();
        match read_raster(&p, b"RMAP") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let p = PathBuf::from("/nonexistent/dir/x.rmap");
        assert!(matches!(read_raster(&p, b"RMAP"), Err(Error::Io { .. })));
    }
}
