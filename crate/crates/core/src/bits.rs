//! Fixed-length bit strings, Toeplitz hashing over GF(2), and the
//! index-to-block decomposition used by the somewhere-random generator.
//!
//! Bit `0` of a [`BitString`] is the leftmost, most significant bit of its
//! written binary expression. Words are packed MSB-first, so an `n`-bit
//! string with `n <= 64` is stored as `value << (64 - n)` in its first word.
//! Unused trailing bits of the last word are always zero.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{domain, Result};

/// Upper bound on bit-string length.
pub const MAX_BITS: usize = 1 << 24;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_BITS, "bit string of {len} bits exceeds MAX_BITS");
        BitString {
            len,
            words: SmallVec::from_elem(0, words_for(len)),
        }
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    /// The `len`-bit binary expression of `value`. Panics if `value` does not fit.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        assert!(len == 64 || value >> len == 0, "{value} does not fit in {len} bits");
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = value << (64 - len);
        }
        s
    }

    /// Integer value of the binary expression. Panics above 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 on a {}-bit string", self.len);
        if self.len == 0 {
            0
        } else {
            self.words[0] >> (64 - self.len)
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_binary(text: &str) -> Result<Self> {
        let mut s = Self::zeros(text.len());
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => {}
                '1' => s.set(i, true),
                _ => return domain(format!("invalid binary digit {c:?}")),
            }
        }
        Ok(s)
    }

    /// Hexadecimal literal of the binary expression: the integer value,
    /// left-padded to `ceil(len / 4)` digits. The empty string is `"-"`.
    pub fn to_hex(&self) -> String {
        if self.len == 0 {
            return "-".to_string();
        }
        let digits = self.len.div_ceil(4);
        let lead = digits * 4 - self.len;
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u8;
            for b in 0..4 {
                let pos = (d * 4 + b) as isize - lead as isize;
                nibble <<= 1;
                if pos >= 0 && self.get(pos as usize) {
                    nibble |= 1;
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    /// Inverse of [`BitString::to_hex`]; rejects values that do not fit `len` bits.
    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let text = text.trim();
        let text = text
            .strip_prefix("0x")
            .or_else(|| text.strip_prefix("0X"))
            .unwrap_or(text);
        if len == 0 {
            return if text == "-" || text.is_empty() {
                Ok(Self::empty())
            } else {
                domain(format!("hex literal {text:?} for a 0-bit string"))
            };
        }
        if len > MAX_BITS {
            return domain(format!("{len} bits exceeds the maximum length"));
        }
        let digits = len.div_ceil(4);
        if text.len() > digits {
            // Allow extra leading zeros only.
            let extra = text.len() - digits;
            if !text[..extra].chars().all(|c| c == '0') {
                return domain(format!("hex literal {text:?} does not fit {len} bits"));
            }
            return Self::from_hex(&text[extra..], len);
        }
        let padded = format!("{}{}", "0".repeat(digits - text.len()), text);
        let lead = digits * 4 - len;
        let mut s = Self::zeros(len);
        for (d, c) in padded.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| crate::Error::Domain(format!("invalid hex digit {c:?}")))?;
            for b in 0..4 {
                let bit = (nibble >> (3 - b)) & 1 == 1;
                let pos = (d * 4 + b) as isize - lead as isize;
                if pos < 0 {
                    if bit {
                        return domain(format!("hex literal {text:?} does not fit {len} bits"));
                    }
                } else {
                    s.set(pos as usize, bit);
                }
            }
        }
        Ok(s)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (63 - i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// The 64 bits starting at `offset`, MSB-first; bits past the end read as zero.
    #[inline]
    fn word_at(&self, offset: usize) -> u64 {
        let w = offset / 64;
        let sh = offset % 64;
        let hi = self.words.get(w).copied().unwrap_or(0);
        if sh == 0 {
            hi
        } else {
            let lo = self.words.get(w + 1).copied().unwrap_or(0);
            (hi << sh) | (lo >> (64 - sh))
        }
    }

    /// `self[start..start + len]`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len {
            return domain(format!("slice {start}..{} of a {}-bit string", start + len, self.len));
        }
        let mut out = Self::zeros(len);
        for w in 0..out.words.len() {
            out.words[w] = self.word_at(start + 64 * w);
        }
        out.clear_tail();
        Ok(out)
    }

    /// First `len` bits.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        self.slice(0, len)
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut out = Self::zeros(self.len + other.len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        let sh = self.len % 64;
        let base = self.len / 64;
        for (i, &w) in other.words.iter().enumerate() {
            if sh == 0 {
                out.words[base + i] = w;
            } else {
                out.words[base + i] |= w >> sh;
                if base + i + 1 < out.words.len() {
                    out.words[base + i + 1] |= w << (64 - sh);
                }
            }
        }
        out
    }

    pub fn concat_all<'a>(parts: impl IntoIterator<Item = &'a BitString>) -> Self {
        parts.into_iter().fold(Self::empty(), |acc, p| acc.concat(p))
    }

    /// Zero-extends on the right to `len` bits.
    pub fn pad_right(&self, len: usize) -> Result<Self> {
        if len < self.len {
            return domain(format!("cannot pad {} bits down to {len}", self.len));
        }
        let mut out = Self::zeros(len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        Ok(out)
    }

    pub fn xor(&self, other: &BitString) -> Result<Self> {
        if self.len != other.len {
            return domain(format!("xor of {} and {} bits", self.len, other.len));
        }
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(other.words.iter()) {
            *a ^= b;
        }
        Ok(out)
    }

    /// Parity of `self[start..start + other.len()] AND other`.
    #[inline]
    pub fn window_dot(&self, start: usize, other: &BitString) -> bool {
        debug_assert!(start + other.len <= self.len);
        let mut acc = 0u64;
        for (w, &ow) in other.words.iter().enumerate() {
            acc ^= self.word_at(start + 64 * w) & ow;
        }
        acc.count_ones() & 1 == 1
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= !0u64 << (64 - rem);
        }
    }

    /// All strings of length `len` in lexicographic order (`len <= 32`).
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len <= 32, "refusing to enumerate 2^{len} strings");
        (0..1u64 << len).map(move |v| BitString::from_u64(v, len))
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.len, self)
    }
}

/// Diagonal description of an `m x n` Toeplitz matrix over GF(2).
///
/// Convention: row `r` of the matrix is the `n`-bit window of `diag`
/// starting at offset `m - 1 - r`, i.e. `T[r][c] = diag[c - r + m - 1]`.
/// The last row reads `diag[0..n]` and the first row `diag[m-1..m-1+n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzSeed {
    n: usize,
    m: usize,
    diag: BitString,
}

impl ToeplitzSeed {
    pub fn new(n: usize, m: usize, diag: BitString) -> Result<Self> {
        if n == 0 || m == 0 {
            return domain("Toeplitz dimensions must be positive");
        }
        if diag.len() != n + m - 1 {
            return domain(format!(
                "Toeplitz diagonal has {} bits, expected n + m - 1 = {}",
                diag.len(),
                n + m - 1
            ));
        }
        Ok(ToeplitzSeed { n, m, diag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn diag(&self) -> &BitString {
        &self.diag
    }
}

/// GF(2) product of the Toeplitz matrix described by `seed` with `x`.
pub fn toeplitz_apply(seed: &ToeplitzSeed, x: &BitString) -> Result<BitString> {
    if x.len() != seed.n {
        return domain(format!("Toeplitz input has {} bits, expected {}", x.len(), seed.n));
    }
    Ok(toeplitz_apply_raw(&seed.diag, seed.m, x))
}

/// Unchecked core of [`toeplitz_apply`]; `diag.len() == x.len() + m - 1`.
#[inline]
pub(crate) fn toeplitz_apply_raw(diag: &BitString, m: usize, x: &BitString) -> BitString {
    let mut out = BitString::zeros(m);
    for r in 0..m {
        if diag.window_dot(m - 1 - r, x) {
            out.set(r, true);
        }
    }
    out
}

/// Block decomposition of a 1-based row index.
///
/// The `d`-bit binary expression of `i - 1` is cut left to right into
/// `b = ceil(d / l)` blocks of `l` bits, the last one zero-padded on the
/// right. Block `j` read as an integer is `inds[j] - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndex {
    pub i: u64,
    pub d: u32,
    pub l: u32,
    pub b: u32,
    pub inds: Vec<u64>,
}

pub fn decompose_index(i: u64, d: u32, l: u32) -> Result<BlockIndex> {
    if l == 0 || l > 63 {
        return domain(format!("block width {l} must be in 1..=63"));
    }
    if d > 63 {
        return domain(format!("{d} index bits is too many"));
    }
    if i == 0 || i > 1u64 << d {
        return domain(format!("index {i} outside [1, 2^{d}]"));
    }
    let b = d.div_ceil(l);
    let padded_len = b * l;
    let value = (i - 1) << (padded_len - d);
    let mask = (1u64 << l) - 1;
    let inds = (0..b)
        .map(|j| ((value >> (padded_len - (j + 1) * l)) & mask) + 1)
        .collect();
    Ok(BlockIndex { i, d, l, b, inds })
}

/// Integer whose binary expression is blocks `1..=j` concatenated.
pub fn prefix_value(bi: &BlockIndex, j: u32) -> Result<u64> {
    if j == 0 || j > bi.b {
        return domain(format!("prefix length {j} outside [1, {}]", bi.b));
    }
    Ok(bi.inds[..j as usize]
        .iter()
        .fold(0u64, |acc, &ind| (acc << bi.l) | (ind - 1)))
}

impl BlockIndex {
    /// The value `i - 1` recovered from the blocks, with the padding dropped.
    pub fn reconstruct(&self) -> u64 {
        if self.b == 0 {
            return 0;
        }
        let full = prefix_value(self, self.b).expect("b >= 1");
        full >> (self.b * self.l - self.d)
    }
}
