//! Length-prefixed element encoding.
//!
//! Every field is written as a big-endian `u16` length followed by the
//! element's canonical bytes. Messages and identities, which may be long,
//! use a `u32` length instead.

use super::{AlgebraError, Backend, Group, GroupContext, Scalar};

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
    fields: usize,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u16::try_from(bytes.len()).expect("element encodings fit in u16");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self.fields += 1;
        self
    }

    pub fn elem<G: Group>(&mut self, g: &G) -> &mut Self {
        self.field(&g.to_bytes())
    }

    pub fn scalar<S: Scalar>(&mut self, s: &S) -> &mut Self {
        self.field(&s.to_be_bytes())
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        let len = u32::try_from(data.len()).expect("byte strings fit in u32");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(data);
        self.fields += 1;
        self
    }

    /// Number of length-prefixed fields written so far.
    pub fn field_count(&self) -> usize {
        self.fields
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

pub struct Reader<'a, B: Backend> {
    ctx: &'a GroupContext<B>,
    rest: &'a [u8],
}

impl<'a, B: Backend> Reader<'a, B> {
    pub fn new(ctx: &'a GroupContext<B>, bytes: &'a [u8]) -> Self {
        Self { ctx, rest: bytes }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], AlgebraError> {
        if self.rest.len() < n {
            return Err(AlgebraError::decode(what, "truncated input"));
        }
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        Ok(head)
    }

    pub fn byte(&mut self, what: &'static str) -> Result<u8, AlgebraError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn field(&mut self, what: &'static str) -> Result<&'a [u8], AlgebraError> {
        let len = self.take(2, what)?;
        let len = u16::from_be_bytes([len[0], len[1]]) as usize;
        self.take(len, what)
    }

    pub fn bytes(&mut self, what: &'static str) -> Result<Vec<u8>, AlgebraError> {
        let len = self.take(4, what)?;
        let len = u32::from_be_bytes([len[0], len[1], len[2], len[3]]) as usize;
        Ok(self.take(len, what)?.to_vec())
    }

    pub fn scalar(&mut self) -> Result<B::Scalar, AlgebraError> {
        let f = self.field("scalar")?;
        self.ctx.decode_scalar(f)
    }

    pub fn g1(&mut self) -> Result<B::G1, AlgebraError> {
        let f = self.field("G1 element")?;
        self.ctx.decode_g1(f)
    }

    pub fn g2(&mut self) -> Result<B::G2, AlgebraError> {
        let f = self.field("G2 element")?;
        self.ctx.decode_g2(f)
    }

    pub fn gt(&mut self) -> Result<B::Gt, AlgebraError> {
        let f = self.field("Gt element")?;
        self.ctx.decode_gt(f)
    }

    pub fn finish(self) -> Result<(), AlgebraError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(AlgebraError::decode("record", format!("{} trailing bytes", self.rest.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_transparent_context, DEFAULT_MODULUS};

    #[test]
    fn mixed_record_roundtrip() {
        let ctx = make_transparent_context(1, DEFAULT_MODULUS).unwrap();
        let g = ctx.g1().pow(&ctx.scalar(77));
        let mut w = Writer::new();
        w.elem(&g).scalar(&ctx.scalar(5)).bytes(b"hello").elem(&ctx.g2());
        assert_eq!(w.field_count(), 4);
        let bytes = w.finish();
        // u16 prefix + 4-byte residue for p = 2^31 - 1
        assert_eq!(&bytes[..2], &[0, 4]);
        let mut r = Reader::new(&ctx, &bytes);
        assert_eq!(r.g1().unwrap(), g);
        assert_eq!(r.scalar().unwrap(), ctx.scalar(5));
        assert_eq!(r.bytes("msg").unwrap(), b"hello");
        assert_eq!(r.g2().unwrap(), ctx.g2());
        r.finish().unwrap();
    }

    #[test]
    fn truncation_is_an_error() {
        let ctx = make_transparent_context(1, DEFAULT_MODULUS).unwrap();
        let mut w = Writer::new();
        w.elem(&ctx.g1());
        let bytes = w.finish();
        let mut r = Reader::new(&ctx, &bytes[..bytes.len() - 1]);
        assert!(r.g1().is_err());
    }
}
