//! Bit sequences with a read cursor, and the payload framing built on them.
//!
//! A payload is laid out as
//!
//! ```text
//! register ‖ message length (u32, big-endian, in bits) ‖ message ‖ zero padding
//! ```
//!
//! The register length is not framed: the decoder recomputes it from the
//! restored image (see [`crate::overflow::count_register_bits`]).

use std::fmt;

use crate::error::{Error, Result};

/// Width of the message-length field.
pub const LENGTH_FIELD_BITS: usize = 32;

/// An ordered sequence of bits plus the index of the next unread bit.
///
/// Equality compares the bits only, not the cursor.
#[derive(Clone, Default)]
pub struct BitStream {
    bits: Vec<bool>,
    cursor: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
            cursor: 0,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
            cursor: 0,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self {
            bits: bits.into_iter().collect(),
            cursor: 0,
        }
    }

    /// Unpacks bytes MSB-first; the stream holds `8 * bytes.len()` bits.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut s = Self::with_capacity(bytes.len() * 8);
        for &b in bytes {
            for shift in (0..8).rev() {
                s.bits.push((b >> shift) & 1 == 1);
            }
        }
        s
    }

    /// Packs all bits MSB-first. A trailing partial byte is zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &bit)| acc | ((bit as u8) << (7 - i)))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Bits left between the cursor and the end.
    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from_slice(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }

    /// Appends `value` as `width` bits, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        for shift in (0..width).rev() {
            self.bits.push((value >> shift) & 1 == 1);
        }
    }

    /// Returns the bit at `cursor + offset` without moving the cursor.
    pub fn peek(&self, offset: usize) -> Option<bool> {
        self.bits.get(self.cursor + offset).copied()
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let bit = self.peek(0).ok_or(Error::EndOfStream {
            requested: 1,
            cursor: self.cursor,
            len: self.bits.len(),
        })?;
        self.cursor += 1;
        Ok(bit)
    }

    /// Reads `n` bits; on failure the cursor does not move.
    pub fn read_bits(&mut self, n: usize) -> Result<BitStream> {
        self.check_readable(n)?;
        let out = Self::from_bits(self.bits[self.cursor..self.cursor + n].iter().copied());
        self.cursor += n;
        Ok(out)
    }

    /// Reads `width` (≤ 64) bits as an unsigned big-endian integer.
    pub fn read_uint(&mut self, width: usize) -> Result<u64> {
        debug_assert!(width <= 64);
        self.check_readable(width)?;
        let value = self.bits[self.cursor..self.cursor + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        self.cursor += width;
        Ok(value)
    }

    /// Advances the cursor by `n` without producing the bits.
    pub fn skip(&mut self, n: usize) -> Result<()> {
        self.check_readable(n)?;
        self.cursor += n;
        Ok(())
    }

    fn check_readable(&self, n: usize) -> Result<()> {
        if n > self.remaining() {
            return Err(Error::EndOfStream {
                requested: n,
                cursor: self.cursor,
                len: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: String = self
            .bits
            .iter()
            .take(64)
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        let ellipsis = if self.bits.len() > 64 { "…" } else { "" };
        write!(
            f,
            "BitStream[{}; cursor={}]({shown}{ellipsis})",
            self.bits.len(),
            self.cursor
        )
    }
}

impl PartialEq for BitStream {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

impl Eq for BitStream {}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bits(iter)
    }
}

impl Extend<bool> for BitStream {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        self.bits.extend(iter);
    }
}

/// `a ‖ b`. The result's cursor is at 0; the inputs are untouched.
pub fn concat(a: &BitStream, b: &BitStream) -> BitStream {
    let mut out = BitStream::with_capacity(a.len() + b.len());
    out.extend_from_slice(a.bits());
    out.extend_from_slice(b.bits());
    out
}

/// Frames the overflow register and the message into one payload padded with
/// zeros to exactly `capacity` bits.
pub fn build_payload(register: &BitStream, message: &BitStream, capacity: usize) -> Result<BitStream> {
    let required = framed_len(register.len(), message.len());
    if required > capacity {
        return Err(Error::CapacityExceeded {
            required,
            available: capacity,
            shortfall: required - capacity,
        });
    }
    let message_len = u32::try_from(message.len()).map_err(|_| Error::CapacityExceeded {
        required,
        available: u32::MAX as usize,
        shortfall: required - u32::MAX as usize,
    })?;
    let mut p = BitStream::with_capacity(capacity);
    p.extend_from_slice(register.bits());
    p.push_uint(message_len as u64, LENGTH_FIELD_BITS);
    p.extend_from_slice(message.bits());
    p.bits.resize(capacity, false);
    Ok(p)
}

/// Bits occupied by a frame before padding.
pub fn framed_len(register_len: usize, message_len: usize) -> usize {
    register_len + LENGTH_FIELD_BITS + message_len
}

/// Splits a payload back into `(register, message)`, discarding padding.
pub fn parse_payload(payload: &BitStream, register_len: usize) -> Result<(BitStream, BitStream)> {
    let mut p = payload.clone();
    p.rewind();
    if p.remaining() < register_len + LENGTH_FIELD_BITS {
        return Err(Error::MalformedPayload(format!(
            "{} payload bits cannot hold a {register_len}-bit register and the length field",
            p.len()
        )));
    }
    let register = p.read_bits(register_len)?;
    let message_len = p.read_uint(LENGTH_FIELD_BITS)? as usize;
    if message_len > p.remaining() {
        return Err(Error::MalformedPayload(format!(
            "length field claims {message_len} message bits but only {} remain",
            p.remaining()
        )));
    }
    let message = p.read_bits(message_len)?;
    Ok((register, message))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitStream {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&bits("10"), &bits("1")), bits("101"));
        assert_eq!(concat(&BitStream::new(), &bits("01")), bits("01"));
        let ones = BitStream::from_bits([true; 8]);
        let c = concat(&ones, &BitStream::zeros(8));
        assert_eq!(c.len(), 16);
        assert!(c.bits()[..8].iter().all(|&b| b));
        assert!(c.bits()[8..].iter().all(|&b| !b));
    }

    #[test]
    fn concat_leaves_inputs_alone() {
        let mut a = bits("1101");
        a.read_bit().unwrap();
        let b = bits("0");
        let c = concat(&a, &b);
        assert_eq!(a.cursor(), 1);
        assert_eq!(c.cursor(), 0);
        assert_eq!(c, bits("11010"));
    }

    #[test]
    fn reading_moves_cursor_and_stops_at_end() {
        let mut s = bits("1011");
        assert!(s.read_bit().unwrap());
        assert_eq!(s.read_uint(2).unwrap(), 0b01);
        assert_eq!(s.cursor(), 3);
        assert!(matches!(s.read_bits(2), Err(Error::EndOfStream { requested: 2, cursor: 3, len: 4 })));
        assert_eq!(s.cursor(), 3);
        assert!(s.read_bit().unwrap());
        assert!(s.read_bit().is_err());
    }

    #[test]
    fn bytes_are_msb_first() {
        let s = BitStream::from_bytes(&[0b1000_0001, 0x40]);
        assert_eq!(s, bits("1000000101000000"));
        assert_eq!(s.to_bytes(), vec![0x81, 0x40]);
        assert_eq!(bits("1").to_bytes(), vec![0x80]);
    }

    #[test]
    fn build_payload_frames_length() {
        let p = build_payload(&BitStream::new(), &bits("101"), 64).unwrap();
        assert_eq!(p.len(), 64);
        let mut expected = BitStream::new();
        expected.push_uint(3, 32);
        expected.extend_from_slice(&[true, false, true]);
        expected.extend(std::iter::repeat_n(false, 29));
        assert_eq!(p, expected);
    }

    #[test]
    fn build_payload_empty_message() {
        let p = build_payload(&bits("1"), &BitStream::new(), 33).unwrap();
        let mut expected = bits("1");
        expected.extend(std::iter::repeat_n(false, 32));
        assert_eq!(p, expected);
    }

    #[test]
    fn build_payload_reports_shortfall() {
        let m = BitStream::zeros(120);
        match build_payload(&bits("01"), &m, 100) {
            Err(Error::CapacityExceeded { shortfall, required, available }) => {
                assert_eq!(shortfall, 54);
                assert_eq!(required, 154);
                assert_eq!(available, 100);
            }
            other => panic!("expected CapacityExceeded, got {other:?}"),
        }
    }

    #[test]
    fn parse_payload_edge_cases() {
        let (v, m) = parse_payload(&BitStream::zeros(40), 0).unwrap();
        assert!(v.is_empty() && m.is_empty());

        assert!(matches!(parse_payload(&BitStream::zeros(33), 2), Err(Error::MalformedPayload(_))));

        let mut lying = BitStream::new();
        lying.push_uint(10, 32);
        lying.extend_from_slice(&[true; 9]);
        assert!(matches!(parse_payload(&lying, 0), Err(Error::MalformedPayload(_))));
    }

    fn arb_bits(max: usize) -> impl Strategy<Value = BitStream> {
        prop::collection::vec(any::<bool>(), 0..max).prop_map(BitStream::from_bits)
    }

    proptest! {
        #[test]
        fn payload_round_trip(v in arb_bits(64), m in arb_bits(300), slack in 0usize..100) {
            let cap = v.len() + 32 + m.len() + slack;
            let p = build_payload(&v, &m, cap).unwrap();
            prop_assert_eq!(p.len(), cap);
            let (v2, m2) = parse_payload(&p, v.len()).unwrap();
            prop_assert_eq!(v2, v);
            prop_assert_eq!(m2, m);
        }

        #[test]
        fn concat_associative_with_identity(a in arb_bits(40), b in arb_bits(40), c in arb_bits(40)) {
            prop_assert_eq!(concat(&concat(&a, &b), &c), concat(&a, &concat(&b, &c)));
            prop_assert_eq!(concat(&a, &BitStream::new()), a.clone());
            prop_assert_eq!(concat(&BitStream::new(), &a), a);
        }

        #[test]
        fn byte_round_trip(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let s = BitStream::from_bytes(&bytes);
            prop_assert_eq!(s.len(), bytes.len() * 8);
            prop_assert_eq!(s.to_bytes(), bytes);
        }
    }
}
