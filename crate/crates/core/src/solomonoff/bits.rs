//! Packed bit strings: program tapes and output tapes.
//!
//! Bits are stored most-significant-first inside each byte, so the natural
//! byte ordering of the packed form agrees with bitwise lexicographic
//! ordering on whole bytes. Ordering places a proper prefix before every
//! one of its extensions, which is the order the estimator indexes rely on
//! to make "all outputs starting with x" a contiguous run.

use std::cmp::Ordering;
use std::fmt;

/// An immutable-length-friendly bit string with MSB-first packing.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    bytes: Vec<u8>,
}

impl Bits {
    #[must_use]
    pub fn new() -> Self {
        Bits::default()
    }

    /// Parses a string of ASCII '0'/'1' digits.
    #[must_use]
    pub fn from_str01(s: &str) -> Self {
        let mut bits = Bits::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => panic!("bit strings hold only 0 and 1, got {c:?}"),
            }
        }
        bits
    }

    /// Reconstructs from packed bytes; bits beyond `len` must be zero and
    /// are verified so that equal bit strings stay byte-identical.
    pub fn from_packed(len: usize, bytes: Vec<u8>) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        if len % 8 != 0 {
            if let Some(&last) = bytes.last() {
                if last & (0xFF >> (len % 8)) != 0 {
                    return None;
                }
            }
        }
        Some(Bits { len, bytes })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.len
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[must_use]
    pub fn packed(&self) -> &[u8] {
        &self.bytes
    }

    #[must_use]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of {}", self.len);
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 1 << (7 - self.len % 8);
        }
        self.len += 1;
    }

    /// Drops the final bit; zeroes its storage so packed bytes stay
    /// canonical.
    pub fn pop(&mut self) {
        assert!(self.len > 0, "pop on empty bit string");
        self.len -= 1;
        let last = self.bytes.len() - 1;
        self.bytes[last] &= !(1 << (7 - self.len % 8));
        if self.len % 8 == 0 {
            self.bytes.pop();
        }
    }

    #[must_use]
    pub fn appended(&self, bit: bool) -> Self {
        let mut next = self.clone();
        next.push(bit);
        next
    }

    /// True when self is a (not necessarily proper) prefix of other.
    #[must_use]
    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        if self.len > other.len {
            return false;
        }
        let whole = self.len / 8;
        if self.bytes[..whole] != other.bytes[..whole] {
            return false;
        }
        let rem = self.len % 8;
        if rem == 0 {
            return true;
        }
        let mask = 0xFFu8 << (8 - rem);
        (self.bytes[whole] ^ other.bytes[whole]) & mask == 0
    }

    /// The next bit string in prefix order that is not an extension of
    /// self: the shortest string obtained by flipping the last 0 kept. None
    /// when self is all ones (every later string extends it).
    #[must_use]
    pub fn prefix_successor(&self) -> Option<Bits> {
        let mut next = self.clone();
        while !next.is_empty() {
            let last = next.len() - 1;
            let bit = next.get(last);
            next.pop();
            if !bit {
                next.push(true);
                return Some(next);
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

impl Ord for Bits {
    /// Lexicographic with prefixes first: compare the shared prefix
    /// bitwise, then the shorter string sorts before its extensions.
    fn cmp(&self, other: &Self) -> Ordering {
        let shared_bytes = self.len.min(other.len) / 8;
        match self.bytes[..shared_bytes].cmp(&other.bytes[..shared_bytes]) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in shared_bytes * 8..self.len.min(other.len) {
            match (self.get(i), other.get(i)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            write!(f, "{}", u8::from(bit))?;
        }
        Ok(())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
