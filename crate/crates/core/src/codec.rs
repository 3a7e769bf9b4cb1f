//! Unsigned LEB128 varints and delta-coded sorted integer lists.

/// Appends `value` as an unsigned LEB128 varint.
pub fn write_varint(buf: &mut Vec<u8>, mut value: u64) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    Truncated,
    Overflow,
}

/// Sequential reader over an encoded byte slice.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn varint(&mut self) -> Result<u64, DecodeError> {
        let mut value = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = *self.buf.get(self.pos).ok_or(DecodeError::Truncated)?;
            self.pos += 1;
            let payload = u64::from(byte & 0x7f);
            if shift == 63 && payload > 1 {
                return Err(DecodeError::Overflow);
            }
            value |= payload << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
            shift += 7;
            if shift > 63 {
                return Err(DecodeError::Overflow);
            }
        }
    }

    pub fn varint_u32(&mut self) -> Result<u32, DecodeError> {
        u32::try_from(self.varint()?).map_err(|_| DecodeError::Overflow)
    }

    /// Skips `n` varints without decoding them.
    pub fn skip_varints(&mut self, n: usize) -> Result<(), DecodeError> {
        for _ in 0..n {
            loop {
                let byte = *self.buf.get(self.pos).ok_or(DecodeError::Truncated)?;
                self.pos += 1;
                if byte & 0x80 == 0 {
                    break;
                }
            }
        }
        Ok(())
    }

    pub fn u64_le(&mut self) -> Result<u64, DecodeError> {
        let bytes = self.bytes(8)?;
        Ok(u64::from_le_bytes(bytes.try_into().unwrap()))
    }

    pub fn u32_le(&mut self) -> Result<u32, DecodeError> {
        let bytes = self.bytes(4)?;
        Ok(u32::from_le_bytes(bytes.try_into().unwrap()))
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::Truncated)?;
        let out = self.buf.get(self.pos..end).ok_or(DecodeError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    /// A varint length prefix followed by that many bytes.
    pub fn len_prefixed(&mut self) -> Result<&'a [u8], DecodeError> {
        let n = usize::try_from(self.varint()?).map_err(|_| DecodeError::Overflow)?;
        self.bytes(n)
    }
}

pub fn write_len_prefixed(buf: &mut Vec<u8>, bytes: &[u8]) {
    write_varint(buf, bytes.len() as u64);
    buf.extend_from_slice(bytes);
}

/// Encodes a strictly increasing list as first value followed by gaps.
pub fn encode_deltas(buf: &mut Vec<u8>, values: &[u32]) {
    let mut prev = 0u32;
    for (i, &v) in values.iter().enumerate() {
        debug_assert!(i == 0 || v > prev, "delta input must be strictly increasing");
        write_varint(buf, u64::from(v - prev));
        prev = v;
    }
}

/// Decodes `count` values written by [`encode_deltas`].
pub fn decode_deltas(r: &mut Reader<'_>, count: usize) -> Result<Vec<u32>, DecodeError> {
    let mut out = Vec::with_capacity(count);
    let mut prev = 0u32;
    for _ in 0..count {
        let gap = r.varint_u32()?;
        prev = prev.checked_add(gap).ok_or(DecodeError::Overflow)?;
        out.push(prev);
    }
    Ok(out)
}
