//! The QM family of constructions `H_C = [D | A_1 ... A_{n0}]`.
//!
//! Column `j` of the start matrix `H_0` becomes a block of `2^m` columns
//! `(h_j; ξ, βξ, β²ξ, ...)`, `β` being the indicator of `h_j`'s subset and `ξ`
//! running over GF(2^m); the `STAR` indicator puts `ξ` in the last row block
//! only. A variant fixes the number of row blocks `R`, the indicator domain
//! and the fixed block `D` that is prepended.

mod node;
mod qm;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use node::{CodeNode, DecodeError, Decoded, PartitionInfo, TableCode, TraceStep, TABLE_MAX_R};
pub use qm::QmCode;

use crate::code::{CodeError, CodeRecord, NamedPartition, Provenance, Status};
use crate::gf2m::FieldError;
use crate::tables::{self, Bound};
use crate::verify::{self, Budget, VerifyError};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    QM1_2,
    QM2_2,
    QM3_2,
    QM4_2,
    QM5_2,
    QM6_2,
    QM1_3,
    QM2_3,
    QM3_3,
    QM4_3,
    QM5_3,
    QM1_4,
    QM2_4,
    QM3_4,
    QM4_4,
}

pub const ALL_VARIANTS: [Variant; 15] = [
    Variant::QM1_2,
    Variant::QM2_2,
    Variant::QM3_2,
    Variant::QM4_2,
    Variant::QM5_2,
    Variant::QM6_2,
    Variant::QM1_3,
    Variant::QM2_3,
    Variant::QM3_3,
    Variant::QM4_3,
    Variant::QM5_3,
    Variant::QM1_4,
    Variant::QM2_4,
    Variant::QM3_4,
    Variant::QM4_4,
];

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Variant {
    type Err = ConstructError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        ALL_VARIANTS
            .iter()
            .copied()
            .find(|v| v.to_string() == norm)
            .ok_or_else(|| ConstructError::UnknownVariant(s.to_string()))
    }
}

/// Layout of the fixed block `D` (lower `R·m` rows; `W` lists the nonzero
/// `m`-bit values in ascending order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DMatrixKind {
    /// `W` in the last row block.
    D1,
    /// `W` in block `R-2`, then `W` in block `R-1`.
    D2,
    /// `W` in block 1 (three blocks).
    D3,
    /// `W` in block 0, then the inner matrix across blocks 1 and 2.
    D4,
    /// The inner matrix across blocks 1 and 2, then `W` in block 3.
    D5,
    /// Two blocks: `W∖w` on top, the column `(w,w)`, `W∖w` below; `w` all-ones.
    D6,
}

/// Which indicator values a variant may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Field,
    FieldStar,
    NonzeroField,
    /// `F ∖ {1}` together with `STAR`.
    StarNoOne,
}

impl Variant {
    pub fn radius(self) -> u32 {
        use Variant::*;
        match self {
            QM1_2 | QM2_2 | QM3_2 | QM4_2 | QM5_2 | QM6_2 => 2,
            QM1_3 | QM2_3 | QM3_3 | QM4_3 | QM5_3 => 3,
            QM1_4 | QM2_4 | QM3_4 | QM4_4 => 4,
        }
    }

    /// Smallest `ℓ` the start partition must carry.
    pub fn start_ell(self) -> u32 {
        use Variant::*;
        match self {
            QM2_3 | QM4_4 => 1,
            QM3_3 | QM1_4 => 2,
            QM3_4 => 3,
            _ => 0,
        }
    }

    pub fn d_kind(self) -> DMatrixKind {
        use Variant::*;
        match self {
            QM2_2 | QM4_2 | QM5_2 | QM6_2 | QM3_4 | QM2_4 => DMatrixKind::D1,
            QM1_2 | QM2_3 | QM1_4 => DMatrixKind::D2,
            QM3_3 | QM4_3 => DMatrixKind::D3,
            QM1_3 | QM5_3 => DMatrixKind::D4,
            QM4_4 => DMatrixKind::D5,
            QM3_2 => DMatrixKind::D6,
        }
    }

    pub fn needs_inner(self) -> bool {
        matches!(self.d_kind(), DMatrixKind::D4 | DMatrixKind::D5)
    }

    pub fn domain(self) -> Domain {
        use Variant::*;
        match self {
            QM2_2 | QM4_2 | QM6_2 | QM2_3 | QM1_4 | QM3_4 | QM2_4 => Domain::Field,
            QM1_2 | QM5_2 | QM3_3 | QM4_3 => Domain::FieldStar,
            QM1_3 | QM5_3 | QM4_4 => Domain::NonzeroField,
            QM3_2 => Domain::StarNoOne,
        }
    }

    /// Every value of the domain must occur on some start column.
    pub fn surjective(self) -> bool {
        use Variant::*;
        matches!(self, QM2_2 | QM4_2 | QM6_2 | QM5_2 | QM4_3)
    }
}

/// Indicator values in canonical order: field elements ascending, then `STAR`
/// (encoded as `2^m`).
pub fn domain_values(domain: Domain, m: u32) -> Vec<u32> {
    let q = 1u32 << m;
    match domain {
        Domain::Field => (0..q).collect(),
        Domain::FieldStar => (0..=q).collect(),
        Domain::NonzeroField => (1..q).collect(),
        Domain::StarNoOne => (0..=q).filter(|&v| v != 1).collect(),
    }
}

/// A serializable recipe for one construction step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub variant: Variant,
    pub start: String,
    pub start_partition: String,
    pub m: u32,
    /// Reduction polynomial of GF(2^m); the default one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_partition: Option<String>,
    /// One value per start subset (`"*"` for STAR); canonical when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicators: Option<Vec<String>>,
    /// Subset carrying STAR where the variant designates one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_subset: Option<usize>,
}

impl ConstructionSpec {
    pub fn new(variant: Variant, start: &str, start_partition: &str, m: u32) -> Self {
        Self {
            variant,
            start: start.into(),
            start_partition: start_partition.into(),
            m,
            poly: None,
            inner: None,
            inner_partition: None,
            indicators: None,
            star_subset: None,
        }
    }

    pub fn with_inner(mut self, inner: &str, partition: &str) -> Self {
        self.inner = Some(inner.into());
        self.inner_partition = Some(partition.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("unknown variant {0}")]
    UnknownVariant(String),
    #[error("{0} is not supported by this implementation")]
    Unsupported(Variant),
    #[error("{variant} is not admissible here: {}", .violations.join("; "))]
    Inadmissible { variant: Variant, violations: Vec<String> },
    #[error("start partition {name} fails verification at syndrome {witness:#x}")]
    StartPartition { name: String, witness: u64 },
    #[error("{0}")]
    Field(#[from] FieldError),
    #[error("{0}")]
    Code(#[from] CodeError),
    #[error("{0}")]
    Verify(#[from] VerifyError),
}

/// Work limit under which the start partition is re-verified before use.
pub const START_CHECK_WORK: u128 = 20_000_000;

/// Lists every violated admissibility condition.
pub fn admissibility_check(spec: &ConstructionSpec, start: &dyn CodeNode, inner: Option<&dyn CodeNode>) -> Vec<String> {
    let v = spec.variant;
    let mut bad = Vec::new();
    let q = 1u64.checked_shl(spec.m).unwrap_or(0);
    if v == Variant::QM2_4 {
        bad.push("QM2_4 is not supported".into());
        return bad;
    }
    if spec.m == 0 || spec.m > crate::gf2m::MAX_M {
        bad.push(format!("m={} outside 1..={}", spec.m, crate::gf2m::MAX_M));
        return bad;
    }
    let big_r = v.radius();
    if start.radius() != big_r {
        bad.push(format!("start has R={}, {v} needs R={big_r}", start.radius()));
    }
    let r = start.r() + big_r * spec.m;
    if r > crate::code::MAX_ROWS {
        bad.push(format!("result would have r={r} > {}", crate::code::MAX_ROWS));
    }
    let Some(pidx) = start.partition_index(&spec.start_partition) else {
        bad.push(format!("start has no partition named {}", spec.start_partition));
        return bad;
    };
    let info = &start.partitions()[pidx];
    let p = info.count;
    if info.ell < v.start_ell() {
        bad.push(format!("start partition has ell={}, {v} needs ell >= {}", info.ell, v.start_ell()));
    }
    let cap = domain_values(v.domain(), spec.m).len() as u64;
    if p > cap {
        bad.push(format!("p={p} subsets exceed the {cap} available indicator values"));
    }
    if v.surjective() && start.n() < cap {
        bad.push(format!("n0={} is below the {cap} indicator values that must all occur", start.n()));
    }
    match v {
        Variant::QM3_2 => {
            if spec.m < 2 {
                bad.push("QM3_2 needs m >= 2".into());
            }
            if start.claims().min_distance.is_none_or(|d| d < 3) {
                bad.push("QM3_2 needs a start code of minimum distance 3".into());
            }
        }
        Variant::QM6_2 => {
            let r0 = start.r();
            match tables::eval_bound(Bound::Phi, r0) {
                Ok(phi) if phi == start.n() => {}
                _ => bad.push(format!("n0={} is not Φ({r0})", start.n())),
            }
            // least λ with p <= 2^λ + 2
            let lambda0 = (0..64).find(|&l| p <= (1u64 << l) + 2).unwrap_or(64);
            let t0 = r0 / 2;
            if !(spec.m <= t0 && spec.m > lambda0) {
                bad.push(format!("need t0={t0} >= m={} >= λ0+1={}", spec.m, lambda0 + 1));
            }
        }
        Variant::QM5_3 | Variant::QM4_3 | Variant::QM2_3 | Variant::QM3_3 if spec.m < 2 => {
            bad.push(format!("{v} needs m >= 2"));
        }
        Variant::QM4_4 if spec.m % 2 == 0 => bad.push("QM4_4 needs m odd".into()),
        Variant::QM1_4 if spec.m < 2 => bad.push("QM1_4 needs m >= 2".into()),
        _ => {}
    }
    if v == Variant::QM5_2 {
        let s = spec.star_subset.unwrap_or(0);
        if s as u64 >= p {
            bad.push(format!("designated subset {s} does not exist"));
        }
    }
    if v.needs_inner() {
        match inner {
            None => bad.push(format!("{v} needs an inner code")),
            Some(c) => {
                if c.r() != 2 * spec.m || c.radius() != 2 {
                    bad.push(format!("inner code is [{}, {}]{}, need r=2m={} and R=2", c.n(), c.n() - c.r() as u64, c.radius(), 2 * spec.m));
                }
                let name = spec.inner_partition.as_deref().unwrap_or("trivial");
                if c.partition_index(name).is_none() {
                    bad.push(format!("inner code has no partition named {name}"));
                }
            }
        }
    }
    if q == 0 {
        bad.push("field too large".into());
    }
    bad
}

/// Builds the construction after checking admissibility and, when cheap,
/// re-verifying the start partition exhaustively.
pub fn construct(
    name: &str,
    spec: &ConstructionSpec,
    start: Arc<dyn CodeNode>,
    inner: Option<Arc<dyn CodeNode>>,
) -> Result<QmCode, ConstructError> {
    if spec.variant == Variant::QM2_4 {
        return Err(ConstructError::Unsupported(spec.variant));
    }
    let bad = admissibility_check(spec, start.as_ref(), inner.as_deref());
    if !bad.is_empty() {
        return Err(ConstructError::Inadmissible { variant: spec.variant, violations: bad });
    }
    let pidx = start.partition_index(&spec.start_partition).expect("checked");
    let info = &start.partitions()[pidx];
    let work: u128 = (info.ell.max(1)..=start.radius()).map(|j| verify::binom(start.n(), j as u64)).sum();
    if work <= START_CHECK_WORK {
        if let (Some(h), Some(p)) = (start.matrix(), start.partition(pidx)) {
            let rep = verify::verify_partition(&h, &p, &Budget::default(), true)?;
            if let Some(w) = rep.witness {
                return Err(ConstructError::StartPartition { name: spec.start_partition.clone(), witness: w });
            }
        }
    }
    QmCode::build(name, spec, start, inner)
}

/// A record for a constructed code; matrix and partitions are listed when
/// the code has at most `max_listed` columns.
pub fn to_record(code: &QmCode, max_listed: u64) -> Result<CodeRecord, CodeError> {
    let listed = code.n() <= max_listed;
    let mut status = std::collections::BTreeMap::new();
    status.insert("radius".to_string(), Status::Structural);
    let partitions = if listed {
        (0..code.partitions().len())
            .filter_map(|k| {
                let name = code.partitions()[k].name.clone();
                code.partition(k).map(|partition| NamedPartition { name, partition })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(CodeRecord {
        name: code.name().to_string(),
        r: code.r(),
        n: code.n(),
        matrix: if listed { code.matrix() } else { None },
        claims: code.claims(),
        partitions,
        provenance: Provenance::Constructed(code.spec().clone()),
        status,
    })
}
