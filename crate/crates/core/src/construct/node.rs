//! The decoder interface shared by stored codes and constructions.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::code::{Claims, CodeRecord, ParityCheckMatrix, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("syndrome {syndrome:#x} has no representation in {code}")]
    Unreachable { code: String, syndrome: u64 },
    #[error("{code}: no decoder case for {detail}")]
    NoCase { code: String, detail: String },
    #[error("{code}: singular system while solving {detail}")]
    Singular { code: String, detail: String },
    #[error("partition index {0} out of range")]
    Partition(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Nesting depth; 0 is the code being asked.
    pub level: u32,
    pub case: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.case)
    }
}

/// Column indices whose sum is the requested syndrome, with the decoder
/// cases taken on the way.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decoded {
    pub columns: Vec<u64>,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInfo {
    pub name: String,
    pub ell: u32,
    pub count: u64,
}

/// A code that can produce columns and represent syndromes on demand.
pub trait CodeNode: Send + Sync {
    fn name(&self) -> &str;
    fn r(&self) -> u32;
    fn n(&self) -> u64;
    fn radius(&self) -> u32;
    fn claims(&self) -> Claims;
    fn column(&self, idx: u64) -> u64;
    fn partitions(&self) -> Vec<PartitionInfo>;
    /// Subset of column `idx` under partition `part`, numbered from 0.
    fn label(&self, part: usize, idx: u64) -> u64;
    /// Columns summing to `s`, at most `R` of them. With a partition the
    /// columns lie in distinct subsets and number at least its `ℓ`.
    fn represent(&self, s: u64, part: Option<usize>) -> Result<Decoded, DecodeError>;

    fn partition_index(&self, name: &str) -> Option<usize> {
        self.partitions().iter().position(|p| p.name == name)
    }

    /// The explicit matrix, if the code is short enough to list.
    fn matrix(&self) -> Option<ParityCheckMatrix> {
        if self.n() > 1 << 24 {
            return None;
        }
        ParityCheckMatrix::new(self.r(), (0..self.n()).map(|i| self.column(i)).collect()).ok()
    }

    /// An explicit partition, if the code is short enough to list.
    fn partition(&self, part: usize) -> Option<Partition> {
        if self.n() > 1 << 24 {
            return None;
        }
        let info = self.partitions().get(part)?.clone();
        let labels: Vec<u64> = (0..self.n()).map(|i| self.label(part, i)).collect();
        Partition::from_labels(&labels, self.radius(), info.ell).ok()
    }
}

/// Largest `r` for which a full representation table is built.
pub const TABLE_MAX_R: u32 = 22;
const EMPTY: u64 = u64::MAX;

/// A stored code decoded through lazily built lookup tables.
pub struct TableCode {
    name: String,
    h: ParityCheckMatrix,
    claims: Claims,
    parts: Vec<(String, Partition)>,
    labels: Vec<Vec<u32>>,
    // one per partition, plus a final unconstrained table
    tables: Vec<OnceLock<Vec<u64>>>,
}

impl TableCode {
    pub fn new(
        name: &str,
        h: ParityCheckMatrix,
        claims: Claims,
        mut parts: Vec<(String, Partition)>,
    ) -> Result<Self, String> {
        if h.r() > TABLE_MAX_R || h.n() >= 0xFFFF || claims.radius > 4 {
            return Err(format!("{name}: table decoding needs r <= {TABLE_MAX_R}, n < 65535 and R <= 4"));
        }
        if !parts.iter().any(|(n, _)| n == "trivial") {
            let p = Partition::trivial(h.n(), claims.radius, claims.ell).map_err(|e| e.to_string())?;
            parts.insert(0, ("trivial".into(), p));
        }
        for (pname, p) in &parts {
            if p.n() != h.n() || p.radius() != claims.radius {
                return Err(format!("{name}: partition {pname} does not fit the matrix"));
            }
        }
        let labels = parts.iter().map(|(_, p)| p.labels()).collect();
        let tables = (0..=parts.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { name: name.into(), h, claims, parts, labels, tables })
    }

    pub fn from_record(rec: &CodeRecord) -> Result<Self, String> {
        let h = rec.matrix.clone().ok_or_else(|| format!("{} has no stored matrix", rec.name))?;
        let parts = rec.partitions.iter().map(|p| (p.name.clone(), p.partition.clone())).collect();
        Self::new(&rec.name, h, rec.claims.clone(), parts)
    }

    pub fn parity_check(&self) -> &ParityCheckMatrix {
        &self.h
    }

    fn table(&self, slot: usize) -> &[u64] {
        self.tables[slot].get_or_init(|| {
            let (labels, ell) = match self.labels.get(slot) {
                Some(l) => (Some(l.as_slice()), self.parts[slot].1.ell()),
                None => (None, 0),
            };
            build_table(&self.h, labels, ell, self.claims.radius)
        })
    }
}

fn build_table(h: &ParityCheckMatrix, labels: Option<&[u32]>, ell: u32, radius: u32) -> Vec<u64> {
    let mut table = vec![EMPTY; 1usize << h.r()];
    if ell == 0 {
        table[0] = 0;
    }
    let cols = h.columns();
    let mut stack: Vec<usize> = Vec::with_capacity(4);
    for j in ell.max(1)..=radius {
        fill(cols, labels, 0, j as usize, 0, &mut stack, &mut table);
    }
    table
}

fn fill(cols: &[u64], labels: Option<&[u32]>, start: usize, k: usize, acc: u64, stack: &mut Vec<usize>, table: &mut [u64]) {
    if k == 0 {
        let slot = &mut table[acc as usize];
        if *slot == EMPTY {
            *slot = stack.iter().enumerate().fold(0u64, |a, (t, &i)| a | ((i as u64 + 1) << (16 * t)));
        }
        return;
    }
    for i in start..=cols.len().saturating_sub(k) {
        if let Some(l) = labels {
            if stack.iter().any(|&o| l[o] == l[i]) {
                continue;
            }
        }
        stack.push(i);
        fill(cols, labels, i + 1, k - 1, acc ^ cols[i], stack, table);
        stack.pop();
    }
}

impl CodeNode for TableCode {
    fn name(&self) -> &str {
        &self.name
    }

    fn r(&self) -> u32 {
        self.h.r()
    }

    fn n(&self) -> u64 {
        self.h.n() as u64
    }

    fn radius(&self) -> u32 {
        self.claims.radius
    }

    fn claims(&self) -> Claims {
        self.claims.clone()
    }

    fn column(&self, idx: u64) -> u64 {
        self.h.col(idx as usize)
    }

    fn partitions(&self) -> Vec<PartitionInfo> {
        self.parts
            .iter()
            .map(|(name, p)| PartitionInfo { name: name.clone(), ell: p.ell(), count: p.len() as u64 })
            .collect()
    }

    fn label(&self, part: usize, idx: u64) -> u64 {
        self.labels[part][idx as usize] as u64
    }

    fn represent(&self, s: u64, part: Option<usize>) -> Result<Decoded, DecodeError> {
        let slot = match part {
            Some(p) if p < self.parts.len() => p,
            Some(p) => return Err(DecodeError::Partition(p)),
            None => self.parts.len(),
        };
        let entry = self.table(slot)[s as usize];
        if entry == EMPTY {
            return Err(DecodeError::Unreachable { code: self.name.clone(), syndrome: s });
        }
        let columns: Vec<u64> =
            (0..4).map(|t| (entry >> (16 * t)) & 0xFFFF).take_while(|&v| v != 0).map(|v| v - 1).collect();
        let case = format!("table{}", columns.len());
        Ok(Decoded { columns, trace: vec![TraceStep { level: 0, case }] })
    }

    fn matrix(&self) -> Option<ParityCheckMatrix> {
        Some(self.h.clone())
    }

    fn partition(&self, part: usize) -> Option<Partition> {
        self.parts.get(part).map(|(_, p)| p.clone())
    }
}
