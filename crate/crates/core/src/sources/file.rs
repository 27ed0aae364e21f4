//! Plain-text source descriptions.
//!
//! ```text
//! # a 3-bit flat source
//! n = 3
//! kind = flat
//! [support]
//! 1 2 5 7
//! ```
//!
//! `kind = table` replaces `[support]` with a `[table]` section of
//! `hex = weight` lines (weights as `a/b` or decimals). `kind = block` adds
//! `block_lens` and `claimed_k` header fields and accepts either section;
//! its literals are the concatenated blocks.

use std::fmt::Write as _;
use std::path::Path;

use super::{BlockSource, DiscreteSource, FlatSource};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scalar::Probability;

#[derive(Clone, Debug)]
pub enum SourceFile<P> {
    Flat(FlatSource),
    Table(DiscreteSource<P>),
    Block(BlockSource<P>),
}

enum Body<P> {
    Support(Vec<BitString>),
    Table(Vec<(BitString, P)>),
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl<P: Probability> SourceFile<P> {
    pub fn n(&self) -> usize {
        match self {
            SourceFile::Flat(f) => f.n(),
            SourceFile::Table(t) => t.n(),
            SourceFile::Block(b) => b.joint().n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SourceFile::Flat(_) => "flat",
            SourceFile::Table(_) => "table",
            SourceFile::Block(_) => "block",
        }
    }

    /// The described distribution; for block sources, the joint over all blocks.
    pub fn joint(&self) -> DiscreteSource<P> {
        match self {
            SourceFile::Flat(f) => f.to_source(),
            SourceFile::Table(t) => t.clone(),
            SourceFile::Block(b) => b.joint().clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "n = {}", self.n()).unwrap();
        writeln!(out, "kind = {}", self.kind()).unwrap();
        let table = match self {
            SourceFile::Flat(f) => {
                out.push_str("[support]\n");
                for s in f.support() {
                    writeln!(out, "{}", s.to_hex()).unwrap();
                }
                return Ok(out);
            }
            SourceFile::Table(t) => t.table()?,
            SourceFile::Block(b) => {
                let join = |v: Vec<String>| v.join(" ");
                writeln!(
                    out,
                    "block_lens = {}",
                    join(b.block_lens().iter().map(|l| l.to_string()).collect())
                )
                .unwrap();
                writeln!(
                    out,
                    "claimed_k = {}",
                    join(b.claimed_k().iter().map(|k| k.to_string()).collect())
                )
                .unwrap();
                b.joint().table()?
            }
        };
        out.push_str("[table]\n");
        for (s, w) in table {
            writeln!(out, "{} = {w}", s.to_hex()).unwrap();
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: Vec<(usize, String, String)> = Vec::new();
        let mut section: Option<(usize, String)> = None;
        let mut body_lines: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if section.is_some() {
                    return Err(perr(no, "only one data section is allowed"));
                }
                section = Some((no, name.trim().to_string()));
                continue;
            }
            if section.is_some() {
                body_lines.push((no, line));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| perr(no, format!("expected key = value, got {line:?}")))?;
            let key = k.trim().to_string();
            if header.iter().any(|(_, hk, _)| *hk == key) {
                return Err(perr(no, format!("duplicate field {key}")));
            }
            header.push((no, key, v.trim().to_string()));
        }
        let end = text.lines().count().max(1);
        let field = |key: &str| -> Option<(usize, &str)> {
            header
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(no, _, v)| (*no, v.as_str()))
        };
        let required = |key: &str| field(key).ok_or_else(|| perr(end, format!("missing header field {key}")));
        for (no, key, _) in &header {
            if !["n", "kind", "block_lens", "claimed_k"].contains(&key.as_str()) {
                return Err(perr(*no, format!("unknown field {key}")));
            }
        }

        let (n_no, n_text) = required("n")?;
        let n: usize = n_text
            .parse()
            .map_err(|_| perr(n_no, format!("n = {n_text:?} is not an integer")))?;
        let (kind_no, kind) = required("kind")?;
        let (sec_no, sec) = section.ok_or_else(|| perr(end, "missing [support] or [table] section"))?;

        let hex = |no: usize, tok: &str| BitString::from_hex(tok, n).map_err(|e| perr(no, e.to_string()));
        let body = match sec.as_str() {
            "support" => {
                let mut support = Vec::new();
                for &(no, line) in &body_lines {
                    for tok in line.split_whitespace() {
                        support.push(hex(no, tok)?);
                    }
                }
                Body::Support(support)
            }
            "table" => {
                let mut rows = Vec::new();
                for &(no, line) in &body_lines {
                    let (s, w) = line
                        .split_once('=')
                        .ok_or_else(|| perr(no, format!("expected hex = weight, got {line:?}")))?;
                    let w = P::parse_prob(w).ok_or_else(|| perr(no, format!("bad weight {:?}", w.trim())))?;
                    rows.push((hex(no, s)?, w));
                }
                Body::Table(rows)
            }
            other => return Err(perr(sec_no, format!("unknown section [{other}]"))),
        };
        let to_source = |body: Body<P>| -> Result<DiscreteSource<P>> {
            match body {
                Body::Support(s) => Ok(FlatSource::new(n, s)
                    .map_err(|e| perr(sec_no, e.to_string()))?
                    .to_source()),
                Body::Table(t) => DiscreteSource::from_weights(n, t).map_err(|e| perr(sec_no, e.to_string())),
            }
        };

        match kind {
            "flat" => match body {
                Body::Support(s) => Ok(SourceFile::Flat(
                    FlatSource::new(n, s).map_err(|e| perr(sec_no, e.to_string()))?,
                )),
                Body::Table(_) => Err(perr(sec_no, "a flat source takes a [support] section")),
            },
            "table" => match body {
                Body::Table(_) => Ok(SourceFile::Table(to_source(body)?)),
                Body::Support(_) => Err(perr(sec_no, "a table source takes a [table] section")),
            },
            "block" => {
                let (l_no, l_text) = required("block_lens")?;
                let lens = l_text
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| perr(l_no, format!("block_lens = {l_text:?} is not a list of integers")))?;
                let (k_no, k_text) = required("claimed_k")?;
                let claims = k_text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| perr(k_no, format!("claimed_k = {k_text:?} is not a list of numbers")))?;
                let joint = to_source(body)?;
                Ok(SourceFile::Block(
                    BlockSource::new(lens, joint, claims).map_err(|e| perr(l_no, e.to_string()))?,
                ))
            }
            other => Err(perr(kind_no, format!("unknown kind {other:?} (flat, table or block)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational64;

    #[test]
    fn flat_round_trip() {
        let text = "# comment\nn = 3\nkind = flat\n[support]\n1 2\n5 7\n";
        let f = SourceFile::<f64>::from_text(text).unwrap();
        assert_eq!(f.kind(), "flat");
        assert_eq!(super::super::min_entropy(&f.joint()).unwrap(), 2.0);
        let again = f.to_text().unwrap();
        assert_eq!(SourceFile::<f64>::from_text(&again).unwrap().to_text().unwrap(), again);
    }

    #[test]
    fn table_round_trip_is_exact() {
        let text = "n = 5\nkind = table\n[table]\n1f = 1/2\n03 = 1/4\n0a = 1/4\n";
        let f = SourceFile::<Rational64>::from_text(text).unwrap();
        let again = f.to_text().unwrap();
        let back = SourceFile::<Rational64>::from_text(&again).unwrap();
        assert_eq!(back.joint().table().unwrap(), f.joint().table().unwrap());
        assert_eq!(
            back.joint().prob(&BitString::from_u64(0x1f, 5)).unwrap(),
            Rational64::new(1, 2)
        );
    }

    #[test]
    fn block_sources_carry_lengths_and_claims() {
        let text = "n = 4\nkind = block\nblock_lens = 2 2\nclaimed_k = 1 1\n[support]\n0 5 a f\n";
        let f = SourceFile::<f64>::from_text(text).unwrap();
        let SourceFile::Block(b) = &f else {
            panic!("expected block")
        };
        assert_eq!(b.block_lens(), &[2, 2]);
        assert_eq!(b.claimed_k(), &[1.0, 1.0]);
        let back = SourceFile::<f64>::from_text(&f.to_text().unwrap()).unwrap();
        assert_eq!(back.joint().table().unwrap(), f.joint().table().unwrap());
    }

    #[test]
    fn errors_name_the_line() {
        let line_of = |text: &str| match SourceFile::<f64>::from_text(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(line_of("n = 3\nkind = flat\n[support]\n1 2\n9\n"), 5);
        assert_eq!(line_of("n = x\nkind = flat\n[support]\n1\n"), 1);
        assert_eq!(line_of("n = 2\nkind = wavy\n[support]\n1\n"), 2);
        assert_eq!(line_of("n = 2\nkind = table\n[table]\n1 = 1/2\n2 = half\n"), 5);
        assert_eq!(line_of("n = 2\nkind = table\n[table]\n1 = 1/2\n2 = 1/4\n"), 3);
    }
}
