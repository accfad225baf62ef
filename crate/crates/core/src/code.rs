//! Columns, parity-check matrices, partitions, code records and density.
//!
//! A column of height `r` is stored as an `r`-bit integer whose most
//! significant bit is the top row, so hex tokens read exactly as printed.
//! Column indices are 0-based in memory and 1-based in every file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::ConstructionSpec;

/// Tallest column handled anywhere.
pub const MAX_ROWS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("row count {0} is outside 1..=64")]
    Rows(u32),
    #[error("a matrix needs at least one column")]
    Empty,
    #[error("column {index} value {value:#x} does not fit in {r} rows")]
    ColumnTooTall { index: usize, value: u64, r: u32 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("bad hex token {0:?}")]
    Token(String),
    #[error("expected {expected} columns, found {found}")]
    Count { expected: usize, found: usize },
    #[error("partition: {0}")]
    Partition(String),
    #[error("claims: {0}")]
    Claims(String),
}

#[inline]
pub fn row_mask(r: u32) -> u64 {
    if r >= 64 {
        u64::MAX
    } else {
        (1u64 << r) - 1
    }
}

/// A single column over GF(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitColumn {
    r: u32,
    bits: u64,
}

impl BitColumn {
    pub fn new(r: u32, bits: u64) -> Result<Self, CodeError> {
        if r == 0 || r > MAX_ROWS {
            return Err(CodeError::Rows(r));
        }
        if bits & !row_mask(r) != 0 {
            return Err(CodeError::ColumnTooTall { index: 0, value: bits, r });
        }
        Ok(Self { r, bits })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// The column as an integer, top row most significant.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Entry in row `i`, counting from the top starting at 0.
    pub fn row(&self, i: u32) -> bool {
        assert!(i < self.r);
        (self.bits >> (self.r - 1 - i)) & 1 == 1
    }

    pub fn to_hex(&self) -> String {
        format!("{:X}", self.bits)
    }

    /// Rows as a 0/1 string, top first.
    pub fn to_binary(&self) -> String {
        (0..self.r).map(|i| if self.row(i) { '1' } else { '0' }).collect()
    }
}

/// An `r x n` binary matrix stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    r: u32,
    columns: Vec<u64>,
}

impl ParityCheckMatrix {
    pub fn new(r: u32, columns: Vec<u64>) -> Result<Self, CodeError> {
        if r == 0 || r > MAX_ROWS {
            return Err(CodeError::Rows(r));
        }
        if columns.is_empty() {
            return Err(CodeError::Empty);
        }
        let mask = row_mask(r);
        if let Some((index, &value)) = columns.iter().enumerate().find(|(_, &c)| c & !mask != 0) {
            return Err(CodeError::ColumnTooTall { index, value, r });
        }
        Ok(Self { r, columns })
    }

    /// `[I_r | extra]`, the unit columns first with `e_1` on top.
    pub fn identity_prefixed(r: u32, extra: &[u64]) -> Result<Self, CodeError> {
        if r == 0 || r > MAX_ROWS {
            return Err(CodeError::Rows(r));
        }
        let mut cols: Vec<u64> = (0..r).map(|i| 1u64 << (r - 1 - i)).collect();
        cols.extend_from_slice(extra);
        Self::new(r, cols)
    }

    pub fn with_identity_prefix(&self) -> Self {
        Self::identity_prefixed(self.r, &self.columns).expect("heights already checked")
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[u64] {
        &self.columns
    }

    /// Raw value of the 0-based column `i`.
    pub fn col(&self, i: usize) -> u64 {
        self.columns[i]
    }

    pub fn column(&self, i: usize) -> BitColumn {
        BitColumn { r: self.r, bits: self.columns[i] }
    }

    /// Parses `"r n"` followed by `n` hex tokens (whitespace or commas).
    pub fn parse_hex(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| CodeError::Header("missing".into()))?;
        let mut parts = header.split_whitespace();
        let r: u32 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CodeError::Header(header.to_string()))?;
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CodeError::Header(header.to_string()))?;
        if parts.next().is_some() {
            return Err(CodeError::Header(header.to_string()));
        }
        if r == 0 || r > MAX_ROWS {
            return Err(CodeError::Rows(r));
        }
        let rest: Vec<&str> = lines.collect();
        let cols = parse_tokens(&rest.join("\n"), r)?;
        if cols.len() != n {
            return Err(CodeError::Count { expected: n, found: cols.len() });
        }
        Self::new(r, cols)
    }

    /// Canonical text: header line, then 16 tokens per line.
    pub fn emit_hex(&self) -> String {
        let mut out = format!("{} {}\n", self.r, self.n());
        for chunk in self.columns.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|c| format!("{c:X}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Comma-separated token list in the printed style, e.g. `1B6,193,...`.
    pub fn token_list(&self, skip: usize) -> String {
        self.columns[skip..].iter().map(|c| format!("{c:X}")).collect::<Vec<_>>().join(",")
    }
}

/// Parses hex tokens separated by whitespace, commas or brackets.
pub fn parse_tokens(text: &str, r: u32) -> Result<Vec<u64>, CodeError> {
    let mask = row_mask(r);
    let mut out = Vec::new();
    for tok in text.split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']') {
        if tok.is_empty() {
            continue;
        }
        let v = u64::from_str_radix(tok, 16).map_err(|_| CodeError::Token(tok.to_string()))?;
        if v & !mask != 0 {
            return Err(CodeError::ColumnTooTall { index: out.len(), value: v, r });
        }
        out.push(v);
    }
    Ok(out)
}

/// Ordered disjoint subsets of column indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    subsets: Vec<Vec<usize>>,
    n: usize,
    radius: u32,
    ell: u32,
}

impl Partition {
    pub fn new(subsets: Vec<Vec<usize>>, n: usize, radius: u32, ell: u32) -> Result<Self, CodeError> {
        let bad = |s: String| Err(CodeError::Partition(s));
        if ell > radius {
            return bad(format!("ell {ell} exceeds R {radius}"));
        }
        let mut seen = vec![false; n];
        for (k, s) in subsets.iter().enumerate() {
            if s.is_empty() {
                return bad(format!("subset {} is empty", k + 1));
            }
            for &i in s {
                if i >= n {
                    return bad(format!("column {} out of range 1..={n}", i + 1));
                }
                if seen[i] {
                    return bad(format!("column {} appears twice", i + 1));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&b| !b) {
            return bad(format!("column {} is in no subset", i + 1));
        }
        let p = subsets.len();
        if p < radius as usize || p > n {
            return bad(format!("{p} subsets outside R..=n ({radius}..={n})"));
        }
        Ok(Self { subsets, n, radius, ell })
    }

    pub fn from_one_based(subsets: &[&[usize]], n: usize, radius: u32, ell: u32) -> Result<Self, CodeError> {
        let mut zero = Vec::with_capacity(subsets.len());
        for s in subsets {
            let mut v = Vec::with_capacity(s.len());
            for &i in *s {
                if i == 0 {
                    return Err(CodeError::Partition("indices are 1-based".into()));
                }
                v.push(i - 1);
            }
            zero.push(v);
        }
        Self::new(zero, n, radius, ell)
    }

    pub fn trivial(n: usize, radius: u32, ell: u32) -> Result<Self, CodeError> {
        Self::new((0..n).map(|i| vec![i]).collect(), n, radius, ell)
    }

    /// Groups columns by label; subsets appear in increasing label order.
    pub fn from_labels(labels: &[u64], radius: u32, ell: u32) -> Result<Self, CodeError> {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        Self::new(groups.into_values().collect(), labels.len(), radius, ell)
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn with_claims(mut self, radius: u32, ell: u32) -> Result<Self, CodeError> {
        self.radius = radius;
        self.ell = ell;
        Self::new(self.subsets, self.n, radius, ell)
    }

    /// Subset number of every column.
    pub fn labels(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.n];
        for (k, s) in self.subsets.iter().enumerate() {
            for &i in s {
                out[i] = k as u32;
            }
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.subsets.len() == self.n
    }

    /// Header line plus one line of 1-based indices per subset.
    pub fn emit(&self) -> String {
        let mut out = format!("partition R={} ell={} n={} p={}\n", self.radius, self.ell, self.n, self.len());
        for s in &self.subsets {
            let line: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| CodeError::Partition("missing header".into()))?;
        let mut fields: BTreeMap<&str, usize> = BTreeMap::new();
        let mut words = header.split_whitespace();
        if words.next() != Some("partition") {
            return Err(CodeError::Partition(format!("bad header {header:?}")));
        }
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| CodeError::Partition(format!("bad field {w:?}")))?;
            let v: usize = v.parse().map_err(|_| CodeError::Partition(format!("bad value {w:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| CodeError::Partition(format!("header lacks {k}")));
        let (radius, ell, n) = (get("R")? as u32, get("ell")? as u32, get("n")?);
        let mut subsets = Vec::new();
        for line in lines {
            let mut s = Vec::new();
            for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
                if tok.is_empty() {
                    continue;
                }
                let i: usize = tok.parse().map_err(|_| CodeError::Partition(format!("bad index {tok:?}")))?;
                if i == 0 {
                    return Err(CodeError::Partition("indices are 1-based".into()));
                }
                s.push(i - 1);
            }
            subsets.push(s);
        }
        if let Ok(p) = get("p") {
            if p != subsets.len() {
                return Err(CodeError::Partition(format!("header says p={p}, found {}", subsets.len())));
            }
        }
        Self::new(subsets, n, radius, ell)
    }
}

/// Number of binary vectors of length `n` within distance `rho` of zero.
pub fn ball_volume(rho: u32, n: u64) -> BigUint {
    let mut total = BigUint::one();
    let mut term = BigUint::one();
    let nn = BigUint::from(n);
    for i in 1..=rho as u64 {
        if i > n {
            break;
        }
        term = term * (&nn - BigUint::from(i - 1)) / BigUint::from(i);
        total += &term;
    }
    total
}

/// Exact covering density `V(R, n) / 2^r`, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Density {
    numer: BigUint,
    denom: BigUint,
}

pub fn density(n: u64, r: u32, radius: u32) -> Density {
    let mut numer = ball_volume(radius, n);
    let mut shift = r;
    while shift > 0 && !numer.bit(0) {
        numer >>= 1;
        shift -= 1;
    }
    Density { numer, denom: BigUint::one() << shift }
}

impl Density {
    pub fn numerator(&self) -> &BigUint {
        &self.numer
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denom
    }

    pub fn is_integer(&self) -> bool {
        self.denom.is_one()
    }

    pub fn at_least_one(&self) -> bool {
        self.numer >= self.denom
    }

    /// Decimal rounded half-up; integers print without a fraction.
    pub fn to_decimal(&self, places: u32) -> String {
        if self.is_integer() {
            return self.numer.to_string();
        }
        let scale = BigUint::from(10u32).pow(places);
        let two = BigUint::from(2u32);
        let scaled = (&self.numer * &scale * &two + &self.denom) / (&self.denom * &two);
        let int = &scaled / &scale;
        let frac = &scaled % &scale;
        let frac = if frac.is_zero() { "0".to_string() } else { frac.to_string() };
        format!("{int}.{frac:0>width$}", width = places as usize)
    }

    pub fn to_f64(&self) -> f64 {
        let s = self.to_decimal(12);
        s.parse().unwrap_or(f64::NAN)
    }
}

/// Claimed parameters of a code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub radius: u32,
    pub min_distance: Option<u32>,
    pub ell: u32,
}

impl Claims {
    pub fn check(&self) -> Result<(), CodeError> {
        if self.ell > self.radius {
            return Err(CodeError::Claims(format!("ell {} exceeds R {}", self.ell, self.radius)));
        }
        if let Some(d) = self.min_distance {
            if self.ell >= 1 && d > self.radius {
                return Err(CodeError::Claims(format!("ell >= 1 needs d <= R, have d={d} R={}", self.radius)));
            }
        }
        Ok(())
    }
}

/// How a claim was established.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    Unverified,
    Exhaustive,
    DecoderSampled { trials: u64 },
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Seed { name: String, citation: String },
    Imported { source: String },
    Constructed(ConstructionSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedPartition {
    pub name: String,
    pub partition: Partition,
}

/// A code with its claims, partitions and history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeRecord {
    pub name: String,
    pub r: u32,
    pub n: u64,
    /// Absent for constructions too long to hold column-wise.
    pub matrix: Option<ParityCheckMatrix>,
    pub claims: Claims,
    pub partitions: Vec<NamedPartition>,
    pub provenance: Provenance,
    pub status: BTreeMap<String, Status>,
}

/// Partition summary stored in the metadata document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub name: String,
    pub radius: u32,
    pub ell: u32,
    pub subsets: u64,
}

/// The key-value document written next to a matrix file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub name: String,
    pub r: u32,
    pub n: u64,
    pub claims: Claims,
    pub partitions: Vec<PartitionSummary>,
    pub provenance: Provenance,
    pub status: BTreeMap<String, Status>,
}

impl CodeRecord {
    pub fn from_matrix(
        name: &str,
        matrix: ParityCheckMatrix,
        claims: Claims,
        provenance: Provenance,
    ) -> Result<Self, CodeError> {
        claims.check()?;
        Ok(Self {
            name: name.to_string(),
            r: matrix.r(),
            n: matrix.n() as u64,
            matrix: Some(matrix),
            claims,
            partitions: Vec::new(),
            provenance,
            status: BTreeMap::new(),
        })
    }

    pub fn add_partition(&mut self, name: &str, partition: Partition) -> Result<(), CodeError> {
        if partition.n() as u64 != self.n {
            return Err(CodeError::Partition(format!(
                "partition covers {} columns, code has {}",
                partition.n(),
                self.n
            )));
        }
        if partition.radius() != self.claims.radius {
            return Err(CodeError::Partition("partition radius differs from the claimed R".into()));
        }
        self.partitions.retain(|p| p.name != name);
        self.partitions.push(NamedPartition { name: name.to_string(), partition });
        Ok(())
    }

    pub fn partition(&self, name: &str) -> Option<&Partition> {
        self.partitions.iter().find(|p| p.name == name).map(|p| &p.partition)
    }

    pub fn density(&self) -> Density {
        density(self.n, self.r, self.claims.radius)
    }

    pub fn meta(&self) -> RecordMeta {
        RecordMeta {
            name: self.name.clone(),
            r: self.r,
            n: self.n,
            claims: self.claims.clone(),
            partitions: self
                .partitions
                .iter()
                .map(|p| PartitionSummary {
                    name: p.name.clone(),
                    radius: p.partition.radius(),
                    ell: p.partition.ell(),
                    subsets: p.partition.len() as u64,
                })
                .collect(),
            provenance: self.provenance.clone(),
            status: self.status.clone(),
        }
    }

    pub fn from_meta(
        meta: RecordMeta,
        matrix: Option<ParityCheckMatrix>,
        partitions: Vec<NamedPartition>,
    ) -> Result<Self, CodeError> {
        meta.claims.check()?;
        if let Some(m) = &matrix {
            if m.r() != meta.r || m.n() as u64 != meta.n {
                return Err(CodeError::Header(format!(
                    "matrix is {}x{}, metadata says {}x{}",
                    m.r(),
                    m.n(),
                    meta.r,
                    meta.n
                )));
            }
        }
        let mut rec = Self {
            name: meta.name,
            r: meta.r,
            n: meta.n,
            matrix,
            claims: meta.claims,
            partitions: Vec::new(),
            provenance: meta.provenance,
            status: meta.status,
        };
        for p in partitions {
            rec.add_partition(&p.name, p.partition)?;
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_token_layout() {
        let m = ParityCheckMatrix::new(10, vec![0x1B6]).unwrap();
        assert_eq!(m.column(0).to_binary(), "0110110110");
        let m = ParityCheckMatrix::new(11, vec![0x6]).unwrap();
        let c = m.column(0);
        let ones: Vec<u32> = (0..11).filter(|&i| c.row(i)).map(|i| i + 1).collect();
        assert_eq!(ones, vec![9, 10]);
    }

    #[test]
    fn identity_prefix() {
        let m = ParityCheckMatrix::identity_prefixed(2, &[]).unwrap();
        assert_eq!(m.columns(), &[0b10, 0b01]);
        let m = ParityCheckMatrix::identity_prefixed(11, &[1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        assert_eq!(m.n(), 19);
        assert_eq!(m.col(0), 1 << 10);
    }

    #[test]
    fn hex_errors() {
        assert!(matches!(ParityCheckMatrix::parse_hex("3 1\nF\n"), Err(CodeError::ColumnTooTall { .. })));
        assert!(matches!(ParityCheckMatrix::parse_hex("3 2\n7\n"), Err(CodeError::Count { .. })));
        assert!(ParityCheckMatrix::parse_hex("3 1\n7\n").is_ok());
    }

    #[test]
    fn volumes_and_densities() {
        assert_eq!(ball_volume(2, 51), BigUint::from(1327u32));
        assert_eq!(ball_volume(0, 100), BigUint::from(1u32));
        assert_eq!(ball_volume(3, 303), BigUint::from(4636608u32));
        assert_eq!(density(51, 10, 2).to_decimal(5), "1.29590");
        assert_eq!(density(831, 18, 2).to_decimal(5), "1.31873");
        assert_eq!(density(7, 3, 1).to_decimal(5), "1");
        assert_eq!(density(818, 26, 3).to_decimal(5), "1.35935");
        assert_eq!(density(4, 3, 2).to_decimal(5), "1.37500");
    }

    #[test]
    fn partition_text_round_trip() {
        let p = Partition::from_one_based(&[&[1, 3], &[2]], 3, 2, 0).unwrap();
        let t = p.emit();
        assert_eq!(Partition::parse(&t).unwrap(), p);
        assert!(Partition::from_one_based(&[&[1, 2], &[2, 3]], 3, 2, 0).is_err());
        assert!(Partition::from_one_based(&[&[1, 2]], 3, 1, 0).is_err());
        assert!(Partition::from_one_based(&[&[1, 2, 3]], 3, 2, 0).is_err());
    }

    #[test]
    fn claims_consistency() {
        assert!(Claims { radius: 2, min_distance: Some(3), ell: 0 }.check().is_ok());
        assert!(Claims { radius: 2, min_distance: Some(3), ell: 1 }.check().is_err());
        assert!(Claims { radius: 2, min_distance: None, ell: 3 }.check().is_err());
    }
}
