use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{domain, Error, Result};
use crate::rng::ExperimentRng;

use super::{check_inputs, full_table, StrongSeededExtractor};

const MAX_INDEX_BITS: usize = 26;

/// An extractor given by its full function table of `2^n * 2^d` outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupExtractor {
    n: usize,
    d: usize,
    m: usize,
    table: Vec<u64>,
    claimed_k: f64,
    measured_eps: Option<f64>,
}

impl LookupExtractor {
    /// `table[(x << d) | seed]` is the output for `(x, seed)`.
    pub fn new(n: usize, d: usize, m: usize, table: Vec<u64>) -> Result<Self> {
        if n + d > MAX_INDEX_BITS {
            return domain(format!("lookup table with 2^{} entries is too large", n + d));
        }
        if m == 0 || m > 64 {
            return domain(format!("lookup output length {m} must be in 1..=64"));
        }
        if table.len() != 1 << (n + d) {
            return domain(format!("table has {} entries, expected 2^{}", table.len(), n + d));
        }
        if m < 64 {
            if let Some(v) = table.iter().find(|&&v| v >> m != 0) {
                return domain(format!("table entry {v:#x} exceeds {m} bits"));
            }
        }
        Ok(LookupExtractor {
            n,
            d,
            m,
            table,
            claimed_k: n as f64,
            measured_eps: None,
        })
    }

    pub fn random(n: usize, d: usize, m: usize, rng: &mut ExperimentRng) -> Result<Self> {
        if n + d > MAX_INDEX_BITS || m == 0 || m > 64 {
            return domain(format!("no random table of shape ({n}, {d}, {m})"));
        }
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let table = (0..1usize << (n + d)).map(|_| rng.random::<u64>() & mask).collect();
        LookupExtractor::new(n, d, m, table)
    }

    /// Tabulates any extractor of small enough shape.
    pub fn from_extractor(ext: &dyn StrongSeededExtractor) -> Result<Self> {
        let table = full_table(ext, 1 << MAX_INDEX_BITS)?;
        Ok(LookupExtractor::new(ext.n(), ext.d(), ext.m(), table)?.with_claims(ext.claimed_k(), None))
    }

    pub fn with_claims(mut self, k: f64, measured_eps: Option<f64>) -> Self {
        self.claimed_k = k;
        self.measured_eps = measured_eps;
        self
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn measured_eps(&self) -> Option<f64> {
        self.measured_eps
    }

    #[inline]
    pub fn get(&self, x: u64, seed: u64) -> u64 {
        self.table[((x << self.d) | seed) as usize]
    }

    /// Header of `key = value` lines, then `[table]` with one line per
    /// source value: the `2^d` outputs in seed order as hex literals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n = {}", self.n).unwrap();
        writeln!(out, "d = {}", self.d).unwrap();
        writeln!(out, "m = {}", self.m).unwrap();
        writeln!(out, "k = {}", self.claimed_k).unwrap();
        match self.measured_eps {
            Some(e) => writeln!(out, "measured_eps = {e}").unwrap(),
            None => writeln!(out, "measured_eps = none").unwrap(),
        }
        out.push_str("[table]\n");
        for x in 0..1u64 << self.n {
            let line: Vec<String> = (0..1u64 << self.d)
                .map(|s| BitString::from_u64(self.get(x, s), self.m).to_hex())
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut header: Vec<(usize, String, String)> = Vec::new();
        for (no, line) in lines.by_ref() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[table]" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(no, format!("expected key = value, got {line:?}")))?;
            header.push((no, k.trim().to_string(), v.trim().to_string()));
        }
        let field = |key: &str| -> Result<(usize, &str)> {
            header
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(no, _, v)| (*no, v.as_str()))
                .ok_or_else(|| parse_err(0, format!("missing header field {key}")))
        };
        let int = |key: &str| -> Result<usize> {
            let (no, v) = field(key)?;
            v.parse()
                .map_err(|_| parse_err(no, format!("{key} = {v:?} is not an integer")))
        };
        let (n, d, m) = (int("n")?, int("d")?, int("m")?);
        let (k_no, k_text) = field("k")?;
        let k: f64 = k_text
            .parse()
            .map_err(|_| parse_err(k_no, format!("k = {k_text:?} is not a number")))?;
        let (e_no, e_text) = field("measured_eps")?;
        let eps = match e_text {
            "none" => None,
            t => Some(
                t.parse::<f64>()
                    .map_err(|_| parse_err(e_no, format!("measured_eps = {t:?} is not a number")))?,
            ),
        };
        if n + d > MAX_INDEX_BITS {
            return Err(parse_err(0, format!("table with 2^{} entries is too large", n + d)));
        }
        let mut table = Vec::with_capacity(1 << (n + d));
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let before = table.len();
            for tok in line.split_whitespace() {
                let v = BitString::from_hex(tok, m).map_err(|e| parse_err(no, e.to_string()))?;
                table.push(v.to_u64());
            }
            if table.len() - before != 1 << d {
                return Err(parse_err(no, format!("expected {} outputs per line", 1u64 << d)));
            }
        }
        LookupExtractor::new(n, d, m, table)
            .map(|e| e.with_claims(k, eps))
            .map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl StrongSeededExtractor for LookupExtractor {
    fn n(&self) -> usize {
        self.n
    }

    fn d(&self) -> usize {
        self.d
    }

    fn m(&self) -> usize {
        self.m
    }

    fn claimed_k(&self) -> f64 {
        self.claimed_k
    }

    fn claimed_eps(&self) -> f64 {
        self.measured_eps.unwrap_or(1.0)
    }

    fn describe(&self) -> String {
        format!("lookup({}x{}->{})", self.n, self.d, self.m)
    }

    fn eval(&self, x: &BitString, seed: &BitString) -> Result<BitString> {
        check_inputs(self, x, seed)?;
        Ok(BitString::from_u64(self.get(x.to_u64(), seed.to_u64()), self.m))
    }

    fn eval_u64(&self, x: u64, seed: u64) -> Result<u64> {
        if x >> self.n != 0 || seed >> self.d != 0 {
            return domain(format!("{}: input out of range", self.describe()));
        }
        Ok(self.get(x, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractors::toeplitz_extractor;
    use crate::rng::rng_from_seed;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut rng = rng_from_seed(8);
        for (n, d, m) in [(4, 2, 1), (3, 3, 7), (5, 1, 13)] {
            let e = LookupExtractor::random(n, d, m, &mut rng)
                .unwrap()
                .with_claims(2.5, Some(0.1875));
            let text = e.to_text();
            let back = LookupExtractor::from_text(&text).unwrap();
            assert_eq!(back, e);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn tabulation_agrees() {
        let t = toeplitz_extractor(3, 2).unwrap();
        let l = LookupExtractor::from_extractor(&t).unwrap();
        for x in BitString::all(3) {
            for s in BitString::all(4) {
                assert_eq!(l.eval(&x, &s).unwrap(), t.eval(&x, &s).unwrap());
            }
        }
    }

    #[test]
    fn parse_errors_name_lines() {
        let bad = "n = 1\nd = 1\nm = 1\nk = 1\nmeasured_eps = none\n[table]\n0 1\n1\n";
        match LookupExtractor::from_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LookupExtractor::new(1, 1, 1, vec![0, 1, 2, 0]).is_err());
    }
}
