//! Finite alphabets and finite symbol sequences.
//!
//! Symbols are indices 0..d into an [`Alphabet`] of size d >= 2. A [`Seq`] is
//! an immutable-by-convention vector of symbols; the operations that walk
//! prediction trees push and pop on a scratch `Seq` and clone when a value
//! must be retained.

use std::fmt;

use crate::error::{Error, Result};

/// Symbol index. Alphabets in this crate never exceed 256 symbols.
pub type Symbol = u8;

/// Finite observation alphabet of size d >= 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    /// A d-symbol alphabet. Panics below two symbols: unary observation
    /// spaces carry no information and nothing here is defined over them.
    #[must_use]
    pub fn new(size: usize) -> Self {
        assert!(
            (2..=256).contains(&size),
            "alphabet size {size} outside 2..=256"
        );
        Alphabet { size }
    }

    #[must_use]
    pub const fn binary() -> Self {
        Alphabet { size: 2 }
    }

    #[must_use]
    pub fn size(&self) -> usize {
        self.size
    }

    /// Iterate over all symbols 0..d.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.size as u16).map(|s| s as Symbol)
    }

    pub fn check_symbol(&self, a: Symbol) -> Result<()> {
        if (a as usize) < self.size {
            Ok(())
        } else {
            Err(Error::Domain {
                what: format!("symbol {a} outside alphabet of size {}", self.size),
            })
        }
    }
}

/// A finite sequence of symbols.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Seq(Vec<Symbol>);

impl Seq {
    #[must_use]
    pub fn empty() -> Self {
        Seq(Vec::new())
    }

    #[must_use]
    pub fn from_symbols(symbols: Vec<Symbol>) -> Self {
        Seq(symbols)
    }

    /// The sequence a^n.
    #[must_use]
    pub fn repeat(symbol: Symbol, n: usize) -> Self {
        Seq(vec![symbol; n])
    }

    /// Parses a digit string such as "0110"; each character is one symbol.
    /// Only alphabets up to size 10 can be written this way.
    pub fn parse(digits: &str) -> Result<Self> {
        digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as Symbol)
                    .ok_or_else(|| Error::Domain {
                        what: format!("non-digit character {c:?} in sequence literal"),
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(Seq)
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[must_use]
    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    #[must_use]
    pub fn get(&self, i: usize) -> Option<Symbol> {
        self.0.get(i).copied()
    }

    /// First `n` symbols as a new sequence. `n` beyond the length is the
    /// whole sequence.
    #[must_use]
    pub fn prefix(&self, n: usize) -> Seq {
        Seq(self.0[..n.min(self.0.len())].to_vec())
    }

    /// This sequence extended by one symbol, as a new value.
    #[must_use]
    pub fn appended(&self, a: Symbol) -> Seq {
        let mut v = self.0.clone();
        v.push(a);
        Seq(v)
    }

    pub fn push(&mut self, a: Symbol) {
        self.0.push(a);
    }

    pub fn pop(&mut self) -> Option<Symbol> {
        self.0.pop()
    }

    /// Count of each symbol under the given alphabet.
    pub fn counts(&self, alphabet: Alphabet) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; alphabet.size()];
        for &a in &self.0 {
            alphabet.check_symbol(a)?;
            counts[a as usize] += 1;
        }
        Ok(counts)
    }

    pub fn check_alphabet(&self, alphabet: Alphabet) -> Result<()> {
        self.0.iter().try_for_each(|&a| alphabet.check_symbol(a))
    }
}

/// Sequences print as digit strings: `Seq::parse("0110")` displays as "0110".
/// Symbols ten and above (rare; only large alphabets) print in brackets.
impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.0 {
            if a < 10 {
                write!(f, "{a}")?;
            } else {
                write!(f, "[{a}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seq({self})")
    }
}
