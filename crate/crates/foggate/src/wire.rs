//! Byte-level helpers for the canonical encodings.
//!
//! All integers are big-endian; variable-length fields carry an explicit
//! length prefix. Readers are strict: short input or trailing bytes are
//! parse errors, which keeps every canonical encoding injective.

use crate::error::{Error, Result};

pub(crate) fn put_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_be_bytes());
}

/// Appends a 2-byte length prefix followed by the bytes.
pub(crate) fn put_bytes16(buf: &mut Vec<u8>, bytes: &[u8]) -> Result<()> {
    let len = u16::try_from(bytes.len())
        .map_err(|_| Error::InvalidArgument(format!("field of {} bytes exceeds u16 prefix", bytes.len())))?;
    put_u16(buf, len);
    buf.extend_from_slice(bytes);
    Ok(())
}

/// Appends a 4-byte length prefix followed by the bytes.
pub(crate) fn put_bytes32(buf: &mut Vec<u8>, bytes: &[u8]) -> Result<()> {
    let len = u32::try_from(bytes.len())
        .map_err(|_| Error::InvalidArgument(format!("field of {} bytes exceeds u32 prefix", bytes.len())))?;
    put_u32(buf, len);
    buf.extend_from_slice(bytes);
    Ok(())
}

/// Strict cursor over a byte slice.
pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Parse(what));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &'static str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn u64(&mut self, what: &'static str) -> Result<u64> {
        let b = self.take(8, what)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_be_bytes(a))
    }

    pub(crate) fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        let b = self.take(N, what)?;
        let mut a = [0u8; N];
        a.copy_from_slice(b);
        Ok(a)
    }

    /// Reads a 2-byte length prefix then that many bytes.
    pub(crate) fn bytes16(&mut self, what: &'static str) -> Result<&'a [u8]> {
        let len = self.u16(what)? as usize;
        self.take(len, what)
    }

    /// Reads a 4-byte length prefix then that many bytes.
    pub(crate) fn bytes32(&mut self, what: &'static str) -> Result<&'a [u8]> {
        let len = self.u32(what)? as usize;
        self.take(len, what)
    }

    /// Fails unless the input was consumed exactly.
    pub(crate) fn expect_end(&self, what: &'static str) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Parse(what));
        }
        Ok(())
    }
}
