//! Little-endian binary container helpers shared by model files and
//! dataset caches.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::cnum::C64;

pub(crate) struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn bytes(&mut self, b: &[u8]) -> io::Result<()> {
        self.inner.write_all(b)
    }

    pub fn u8(&mut self, v: u8) -> io::Result<()> {
        self.inner.write_u8(v)
    }

    pub fn u32(&mut self, v: u32) -> io::Result<()> {
        self.inner.write_u32::<LittleEndian>(v)
    }

    pub fn u64(&mut self, v: u64) -> io::Result<()> {
        self.inner.write_u64::<LittleEndian>(v)
    }

    pub fn usize(&mut self, v: usize) -> io::Result<()> {
        self.u64(v as u64)
    }

    pub fn f64(&mut self, v: f64) -> io::Result<()> {
        self.inner.write_f64::<LittleEndian>(v)
    }

    pub fn str(&mut self, s: &str) -> io::Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    pub fn f64s(&mut self, v: &[f64]) -> io::Result<()> {
        self.usize(v.len())?;
        v.iter().try_for_each(|x| self.f64(*x))
    }

    pub fn usizes(&mut self, v: &[usize]) -> io::Result<()> {
        self.usize(v.len())?;
        v.iter().try_for_each(|x| self.usize(*x))
    }

    pub fn complexes(&mut self, v: &[C64]) -> io::Result<()> {
        self.usize(v.len())?;
        v.iter().try_for_each(|z| {
            self.f64(z.re)?;
            self.f64(z.im)
        })
    }
}

/// Reader that tracks its byte offset for error reporting.
pub(crate) struct Reader<R: Read> {
    inner: R,
    offset: u64,
    /// Upper bound on any length prefix, to reject corrupted headers before allocating.
    max_len: usize,
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R, max_len: usize) -> Self {
        Self { inner, offset: 0, max_len }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn bytes(&mut self, n: usize) -> io::Result<Vec<u8>> {
        let mut buf = vec![0; n];
        self.inner.read_exact(&mut buf)?;
        self.offset += n as u64;
        Ok(buf)
    }

    pub fn u8(&mut self) -> io::Result<u8> {
        let v = self.inner.read_u8()?;
        self.offset += 1;
        Ok(v)
    }

    pub fn u32(&mut self) -> io::Result<u32> {
        let v = self.inner.read_u32::<LittleEndian>()?;
        self.offset += 4;
        Ok(v)
    }

    pub fn u64(&mut self) -> io::Result<u64> {
        let v = self.inner.read_u64::<LittleEndian>()?;
        self.offset += 8;
        Ok(v)
    }

    pub fn usize(&mut self) -> io::Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| invalid("length does not fit in memory"))
    }

    fn len(&mut self) -> io::Result<usize> {
        let n = self.usize()?;
        if n > self.max_len {
            return Err(invalid("length prefix exceeds the container limit"));
        }
        Ok(n)
    }

    pub fn f64(&mut self) -> io::Result<f64> {
        let v = self.inner.read_f64::<LittleEndian>()?;
        self.offset += 8;
        Ok(v)
    }

    pub fn str(&mut self) -> io::Result<String> {
        let n = self.u32()? as usize;
        if n > 4096 {
            return Err(invalid("string too long"));
        }
        String::from_utf8(self.bytes(n)?).map_err(|_| invalid("string is not UTF-8"))
    }

    /// Read `n` items without trusting `n` for the allocation size.
    fn items<T>(&mut self, mut item: impl FnMut(&mut Self) -> io::Result<T>) -> io::Result<Vec<T>> {
        let n = self.len()?;
        let mut out = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            out.push(item(self)?);
        }
        Ok(out)
    }

    pub fn f64s(&mut self) -> io::Result<Vec<f64>> {
        self.items(Self::f64)
    }

    pub fn usizes(&mut self) -> io::Result<Vec<usize>> {
        self.items(Self::usize)
    }

    pub fn complexes(&mut self) -> io::Result<Vec<C64>> {
        self.items(|r| Ok(C64::new(r.f64()?, r.f64()?)))
    }

    /// Succeeds only when the underlying stream is exhausted.
    pub fn expect_end(&mut self) -> io::Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(invalid("trailing bytes after payload")),
        }
    }
}

pub(crate) fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}
