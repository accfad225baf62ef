//! Column generation, decoders and partitions of a QM construction.
//!
//! Decoding a syndrome `(π; u_0, ..., u_{R-1})` first asks the start code for
//! `v` heads representing `π` in distinct start subsets, so the heads carry
//! distinct indicators. The heads' `ξ` values are solved from a Vandermonde
//! system on a subset of the row blocks, and what is left of `u` is covered by
//! columns of `D`. Which rows are solved depends on `v` and on `D`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use super::node::{CodeNode, DecodeError, Decoded, PartitionInfo, TraceStep};
use super::{domain_values, ConstructError, ConstructionSpec, DMatrixKind, Variant};
use crate::code::{row_mask, Claims};
use crate::gf2m::FieldContext;

/// Partition of the start columns used when a head set is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DLabels {
    /// Top `W` block takes the first subset's label, bottom one STAR's.
    FirstAndStar,
    /// One new label for all of `D`'s `W` columns.
    OneW,
    /// One new label per `W` block (blocks `R-2` and `R-1`).
    TwoW,
    /// `W` gets a new label, inner columns follow the inner partition.
    WInner,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PolicyKind {
    /// Every column is its own subset; short answers are padded up to `ell`.
    Trivial,
    /// Subset from the indicator value and whether `ξ = 0`.
    ValueSplit { star_unsplit: bool },
    /// Start subsets carried over, `D` labelled as described.
    StartLabels(DLabels),
    /// As `StartLabels(WInner)`, zero represented by a dependent triple.
    ZeroTriple([u64; 3]),
    /// As `StartLabels(WInner)` with `W` split into `{1}`, `{2}` and the rest.
    SplitW,
    /// Start subsets split three ways by `ξ`, one label per `W` block.
    Split3,
}

#[derive(Debug, Clone)]
struct Policy {
    name: String,
    ell: u32,
    kind: PolicyKind,
    count: u64,
    /// Raw label to dense subset number, for value-based labels.
    dense: Vec<u32>,
}

/// A QM construction over a start code and (for `D4`/`D5`) an inner code.
pub struct QmCode {
    name: String,
    spec: ConstructionSpec,
    variant: Variant,
    d: DMatrixKind,
    big_r: usize,
    m: u32,
    q: u64,
    r: u32,
    n: u64,
    d_len: u64,
    n_in: u64,
    field: Arc<FieldContext>,
    start: Arc<dyn CodeNode>,
    start_part: usize,
    p0: u64,
    inner: Option<Arc<dyn CodeNode>>,
    inner_part: usize,
    p_in: u64,
    /// Indicator per start column; `q` stands for STAR.
    ind: Vec<u32>,
    start_labels: Vec<u32>,
    /// First start column carrying each indicator value.
    value_rep: Vec<Option<u64>>,
    star_alt: Option<[u64; 2]>,
    policies: Vec<Policy>,
    inner_pad: OnceLock<Vec<Option<Vec<u64>>>>,
    claims: Claims,
}

fn err_case(code: &str, detail: String) -> DecodeError {
    DecodeError::NoCase { code: code.into(), detail }
}

impl QmCode {
    pub(super) fn build(
        name: &str,
        spec: &ConstructionSpec,
        start: Arc<dyn CodeNode>,
        inner: Option<Arc<dyn CodeNode>>,
    ) -> Result<Self, ConstructError> {
        let variant = spec.variant;
        let m = spec.m;
        let field = Arc::new(match spec.poly {
            Some(p) => FieldContext::new(m, p)?,
            None => FieldContext::with_default_poly(m)?,
        });
        let q = 1u64 << m;
        let big_r = variant.radius() as usize;
        let d = variant.d_kind();
        let start_part = start.partition_index(&spec.start_partition).expect("admissible");
        let start_info = start.partitions()[start_part].clone();
        let p0 = start_info.count;
        let n0 = start.n();
        let (inner_part, n_in, p_in) = match &inner {
            Some(c) => {
                let pname = spec.inner_partition.as_deref().unwrap_or("trivial");
                let k = c.partition_index(pname).expect("admissible");
                (k, c.n(), c.partitions()[k].count)
            }
            None => (0, 0, 0),
        };
        let inner = if variant.needs_inner() { inner } else { None };
        let d_len = match d {
            DMatrixKind::D1 | DMatrixKind::D3 => q - 1,
            DMatrixKind::D2 => 2 * (q - 1),
            DMatrixKind::D4 | DMatrixKind::D5 => q - 1 + n_in,
            DMatrixKind::D6 => 2 * q - 3,
        };
        let start_labels: Vec<u32> = (0..n0).map(|j| start.label(start_part, j) as u32).collect();
        let (subset_values, ind) = assign_indicators(spec, m, &start_labels, p0 as usize)?;
        let mut value_rep = vec![None; q as usize + 1];
        for (j, &v) in ind.iter().enumerate() {
            value_rep[v as usize].get_or_insert(j as u64);
        }
        let mut code = Self {
            name: name.into(),
            spec: spec.clone(),
            variant,
            d,
            big_r,
            m,
            q,
            r: start.r() + big_r as u32 * m,
            n: d_len + (n0 << m),
            d_len,
            n_in,
            field,
            start,
            start_part,
            p0,
            inner,
            inner_part,
            p_in,
            ind,
            start_labels,
            value_rep,
            star_alt: None,
            policies: Vec::new(),
            inner_pad: OnceLock::new(),
            claims: Claims { radius: big_r as u32, min_distance: None, ell: 0 },
        };
        if variant == Variant::QM5_2 {
            let s = spec.star_subset.unwrap_or(0);
            code.star_alt = Some(code.find_star_alt(s)?);
        }
        let _ = subset_values;
        code.policies = code.make_policies(start_info.ell);
        let start_d = code.start.claims().min_distance;
        let inner_d_ok = code.inner.as_ref().is_none_or(|c| c.claims().min_distance.is_some_and(|d| d >= 3));
        let d = (m >= 2 && start_d.is_some_and(|d| d >= 3) && inner_d_ok).then_some(3);
        let ell = code.policies.iter().map(|p| p.ell).max().unwrap_or(0);
        code.claims = Claims { radius: big_r as u32, min_distance: d, ell };
        Ok(code)
    }

    pub fn spec(&self) -> &ConstructionSpec {
        &self.spec
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of columns in the fixed block `D`.
    pub fn d_len(&self) -> u64 {
        self.d_len
    }

    /// Indicator of start column `j`: `Some(β)` or `None` for STAR.
    pub fn indicator(&self, j: u64) -> Option<u32> {
        let v = self.ind[j as usize];
        (v as u64 != self.q).then_some(v)
    }

    /// Start columns used in place of the STAR column when it is a lone head.
    pub fn star_alternative(&self) -> Option<[u64; 2]> {
        self.star_alt
    }

    fn find_star_alt(&self, subset: usize) -> Result<[u64; 2], ConstructError> {
        let inadmissible = |msg: String| ConstructError::Inadmissible { variant: self.variant, violations: vec![msg] };
        let members: Vec<u64> =
            (0..self.ind.len() as u64).filter(|&j| self.start_labels[j as usize] as usize == subset).collect();
        if members.len() != 1 {
            return Err(inadmissible(format!("designated subset {subset} is not a single column")));
        }
        let star = members[0];
        let target = self.start.column(star);
        let n0 = self.ind.len() as u64;
        let mut by_value: HashMap<u64, u64> = HashMap::with_capacity(n0 as usize);
        for j in 0..n0 {
            by_value.entry(self.start.column(j)).or_insert(j);
        }
        for a in 0..n0 {
            if a == star {
                continue;
            }
            if let Some(&b) = by_value.get(&(target ^ self.start.column(a))) {
                let la = self.start_labels[a as usize];
                let lb = self.start_labels[b as usize];
                if b > a && b != star && la != lb && la as usize != subset && lb as usize != subset {
                    return Ok([a, b]);
                }
            }
        }
        Err(inadmissible(format!("column {} of the designated subset is no sum of two other subsets", star + 1)))
    }

    fn make_policies(&self, start_ell: u32) -> Vec<Policy> {
        use Variant::*;
        let mut out = Vec::new();
        let derived = |ell: u32| if ell == 0 { "derived".to_string() } else { format!("derived-l{ell}") };
        let start_kind = |labels: DLabels, ell: u32| Policy {
            name: derived(ell),
            ell,
            kind: PolicyKind::StartLabels(labels),
            count: 0,
            dense: Vec::new(),
        };
        match self.variant {
            QM2_2 | QM4_2 | QM6_2 => out.push(self.value_split("derived", 0, false)),
            QM5_2 => out.push(self.value_split("derived", 0, true)),
            QM4_3 => out.push(self.value_split(&derived(start_ell), start_ell, false)),
            QM1_2 => out.push(start_kind(DLabels::FirstAndStar, 0)),
            QM2_3 | QM1_4 => out.push(start_kind(DLabels::TwoW, start_ell)),
            QM3_3 | QM3_4 => out.push(start_kind(DLabels::OneW, start_ell)),
            QM1_3 | QM5_3 => {
                let ell = start_ell.min(1);
                out.push(start_kind(DLabels::WInner, ell));
                if ell == 0 {
                    if let Some(t) = self.find_zero_triple() {
                        out.push(Policy {
                            name: "derived-l1".into(),
                            ell: 1,
                            kind: PolicyKind::ZeroTriple(t),
                            count: 0,
                            dense: Vec::new(),
                        });
                    }
                }
                if self.m >= 2 {
                    out.push(Policy { name: "split-l1".into(), ell: 1, kind: PolicyKind::SplitW, count: 0, dense: Vec::new() });
                }
            }
            QM3_2 | QM4_4 | QM2_4 => {}
        }
        if self.variant == QM1_4 && start_ell >= 2 && self.m >= 3 {
            out.push(Policy { name: "split-l3".into(), ell: 3, kind: PolicyKind::Split3, count: 0, dense: Vec::new() });
        }
        out.push(Policy { name: "trivial".into(), ell: 0, kind: PolicyKind::Trivial, count: self.n, dense: Vec::new() });
        let pads = match self.variant {
            QM2_3 | QM3_3 | QM4_3 => self.m >= 2,
            QM1_3 | QM5_3 => self.m >= 2 && self.inner_pad().iter().all(Option::is_some),
            _ => false,
        };
        if pads {
            out.push(Policy { name: "trivial-l2".into(), ell: 2, kind: PolicyKind::Trivial, count: self.n, dense: Vec::new() });
        }
        for p in &mut out {
            if p.count == 0 {
                p.count = self.policy_count(&p.kind);
            }
        }
        out
    }

    fn value_split(&self, name: &str, ell: u32, star_unsplit: bool) -> Policy {
        let q = self.q as usize;
        let space = 2 * (q + 1) + 1;
        let mut used = vec![false; space];
        for &v in &self.ind {
            let v = v as usize;
            used[2 * v] = true;
            if !(star_unsplit && v == q) {
                used[2 * v + 1] = true;
            }
        }
        used[space - 1] = true;
        let mut dense = vec![u32::MAX; space];
        let mut next = 0u32;
        for (raw, &u) in used.iter().enumerate() {
            if u {
                dense[raw] = next;
                next += 1;
            }
        }
        Policy { name: name.into(), ell, kind: PolicyKind::ValueSplit { star_unsplit }, count: next as u64, dense }
    }

    fn policy_count(&self, kind: &PolicyKind) -> u64 {
        match kind {
            PolicyKind::Trivial => self.n,
            PolicyKind::ValueSplit { .. } => unreachable!("counted on creation"),
            PolicyKind::StartLabels(DLabels::FirstAndStar) => self.p0,
            PolicyKind::StartLabels(DLabels::OneW) => self.p0 + 1,
            PolicyKind::StartLabels(DLabels::TwoW) => self.p0 + 2,
            PolicyKind::StartLabels(DLabels::WInner) | PolicyKind::ZeroTriple(_) => self.p0 + 1 + self.p_in,
            PolicyKind::SplitW => self.p0 + 3 + self.p_in,
            PolicyKind::Split3 => 3 * self.p0 + 2,
        }
    }

    /// Three columns in distinct `derived` subsets summing to zero: start
    /// columns with `ξ = 0`, or inner columns.
    fn find_zero_triple(&self) -> Option<[u64; 3]> {
        let n0 = self.ind.len() as u64;
        if n0 <= 4096 {
            let cols: Vec<u64> = (0..n0).map(|j| self.start.column(j)).collect();
            let labels: Vec<u64> = self.start_labels.iter().map(|&l| l as u64).collect();
            if let Some([a, b, c]) = dependent_triple(&cols, &labels) {
                return Some([self.a_idx(a, 0), self.a_idx(b, 0), self.a_idx(c, 0)]);
            }
        }
        let inner = self.inner.as_ref()?;
        if inner.n() > 4096 {
            return None;
        }
        let cols: Vec<u64> = (0..inner.n()).map(|k| inner.column(k)).collect();
        let labels: Vec<u64> = (0..inner.n()).map(|k| inner.label(self.inner_part, k)).collect();
        dependent_triple(&cols, &labels).map(|t| t.map(|k| self.inner_idx(k)))
    }

    /// For every inner column, two or three other inner columns with the
    /// same sum.
    fn inner_pad(&self) -> &[Option<Vec<u64>>] {
        self.inner_pad.get_or_init(|| {
            let Some(inner) = self.inner.as_ref() else { return Vec::new() };
            if inner.n() > 4096 {
                return vec![None];
            }
            let cols: Vec<u64> = (0..inner.n()).map(|k| inner.column(k)).collect();
            let mut at: HashMap<u64, u64> = HashMap::new();
            for (k, &c) in cols.iter().enumerate() {
                at.entry(c).or_insert(k as u64);
            }
            (0..cols.len() as u64)
                .map(|k| {
                    let target = cols[k as usize];
                    for a in 0..cols.len() as u64 {
                        if a == k {
                            continue;
                        }
                        if let Some(&b) = at.get(&(target ^ cols[a as usize])) {
                            if b > a && b != k {
                                return Some(vec![a, b]);
                            }
                        }
                    }
                    for a in 0..cols.len() as u64 {
                        for b in a + 1..cols.len() as u64 {
                            if a == k || b == k {
                                continue;
                            }
                            let rest = target ^ cols[a as usize] ^ cols[b as usize];
                            if let Some(&c) = at.get(&rest) {
                                if c > b && c != k {
                                    return Some(vec![a, b, c]);
                                }
                            }
                        }
                    }
                    None
                })
                .collect()
        })
    }

    #[inline]
    fn a_idx(&self, j: u64, xi: u32) -> u64 {
        self.d_len + (j << self.m) + xi as u64
    }

    #[inline]
    fn inner_idx(&self, k: u64) -> u64 {
        match self.d {
            DMatrixKind::D4 => self.q - 1 + k,
            _ => k,
        }
    }

    /// Index of the `W` column with value `v` in row block `block`.
    #[inline]
    fn w_idx(&self, block: usize, v: u32) -> u64 {
        let v = v as u64;
        match self.d {
            DMatrixKind::D2 if block + 1 == self.big_r => self.q - 1 + v - 1,
            DMatrixKind::D5 => self.n_in + v - 1,
            _ => v - 1,
        }
    }

    /// The row block holding a full copy of `W`.
    fn main_w_block(&self) -> usize {
        match self.d {
            DMatrixKind::D1 | DMatrixKind::D6 => self.big_r - 1,
            DMatrixKind::D2 => self.big_r - 2,
            DMatrixKind::D3 => 1,
            DMatrixKind::D4 => 0,
            DMatrixKind::D5 => 3,
        }
    }

    #[inline]
    fn coef(&self, beta: u32, row: usize) -> u32 {
        if beta as u64 == self.q {
            u32::from(row + 1 == self.big_r)
        } else {
            self.field.pow(beta, row as u32)
        }
    }

    fn a_lower(&self, beta: u32, xi: u32) -> u64 {
        let m = self.m;
        let rr = self.big_r;
        if beta as u64 == self.q {
            return xi as u64;
        }
        let mut out = 0u64;
        let mut c = xi;
        for k in 0..rr {
            out |= (c as u64) << ((rr - 1 - k) as u32 * m);
            c = self.field.mul(c, beta);
        }
        out
    }

    fn d_column(&self, idx: u64) -> u64 {
        let q1 = self.q - 1;
        let m = self.m;
        match self.d {
            DMatrixKind::D1 => idx + 1,
            DMatrixKind::D2 => {
                if idx < q1 {
                    (idx + 1) << m
                } else {
                    idx - q1 + 1
                }
            }
            DMatrixKind::D3 => (idx + 1) << m,
            DMatrixKind::D4 => {
                if idx < q1 {
                    (idx + 1) << (2 * m)
                } else {
                    self.inner.as_ref().unwrap().column(idx - q1)
                }
            }
            DMatrixKind::D5 => {
                if idx < self.n_in {
                    self.inner.as_ref().unwrap().column(idx) << m
                } else {
                    idx - self.n_in + 1
                }
            }
            DMatrixKind::D6 => {
                let w = q1;
                if idx + 2 < self.q {
                    (idx + 1) << m
                } else if idx + 2 == self.q {
                    (w << m) | w
                } else {
                    idx - q1 + 1
                }
            }
        }
    }

    fn solve(&self, heads: &[(u64, u32)], rows: &[usize], u: &[u32; 4]) -> Result<Vec<u32>, DecodeError> {
        let v = heads.len();
        debug_assert_eq!(v, rows.len());
        let f = &*self.field;
        let mut a = [[0u32; 5]; 4];
        for (i, &row) in rows.iter().enumerate() {
            for (t, h) in heads.iter().enumerate() {
                a[i][t] = self.coef(h.1, row);
            }
            a[i][v] = u[row];
        }
        for c in 0..v {
            let Some(p) = (c..v).find(|&i| a[i][c] != 0) else {
                return Err(DecodeError::Singular { code: self.name.clone(), detail: format!("{v} heads, rows {rows:?}") });
            };
            a.swap(c, p);
            let inv = f.inv(a[c][c]).unwrap();
            for k in c..=v {
                a[c][k] = f.mul(a[c][k], inv);
            }
            for i in 0..v {
                if i != c && a[i][c] != 0 {
                    let fct = a[i][c];
                    for k in c..=v {
                        a[i][k] ^= f.mul(fct, a[c][k]);
                    }
                }
            }
        }
        Ok((0..v).map(|i| a[i][v]).collect())
    }

    fn residual(&self, heads: &[(u64, u32)], xs: &[u32], u: &[u32; 4]) -> [u32; 4] {
        let mut w = *u;
        for (h, &x) in heads.iter().zip(xs) {
            for (k, wk) in w.iter_mut().enumerate().take(self.big_r) {
                *wk ^= self.field.mul(x, self.coef(h.1, k));
            }
        }
        w
    }

    fn heads_out(&self, heads: &[(u64, u32)], xs: &[u32]) -> Vec<u64> {
        heads.iter().zip(xs).map(|(h, &x)| self.a_idx(h.0, x)).collect()
    }

    fn rep(&self, v: u32) -> Result<u64, DecodeError> {
        self.value_rep[v as usize].ok_or_else(|| err_case(&self.name, format!("no start column carries indicator {v}")))
    }

    fn inner_cols(&self, value: u64, trace: &mut Vec<TraceStep>) -> Result<Vec<u64>, DecodeError> {
        let inner = self.inner.as_ref().expect("inner code present");
        let dec = inner.represent(value, Some(self.inner_part))?;
        trace.extend(dec.trace.into_iter().map(|t| TraceStep { level: t.level + 1, case: format!("inner {}", t.case) }));
        Ok(dec.columns.into_iter().map(|k| self.inner_idx(k)).collect())
    }

    /// Answer under the start partition, before any padding.
    fn base(&self, s: u64, trace: &mut Vec<TraceStep>) -> Result<Vec<u64>, DecodeError> {
        let rr = self.big_r;
        let m = self.m;
        let pi = s >> (rr as u32 * m);
        let mut u = [0u32; 4];
        for (k, uk) in u.iter_mut().enumerate().take(rr) {
            *uk = ((s >> ((rr - 1 - k) as u32 * m)) & (self.q - 1)) as u32;
        }
        let start = self.start.represent(pi, Some(self.start_part))?;
        let mut sub: Vec<TraceStep> =
            start.trace.into_iter().map(|t| TraceStep { level: t.level + 1, case: t.case }).collect();
        let mut heads: Vec<(u64, u32)> = start.columns.iter().map(|&j| (j, self.ind[j as usize])).collect();
        if let (Some([a, b]), [(_, beta)]) = (self.star_alt, heads.as_slice()) {
            if *beta as u64 == self.q {
                heads = vec![(a, self.ind[a as usize]), (b, self.ind[b as usize])];
                sub.push(TraceStep { level: 1, case: "star head rewritten".into() });
            }
        }
        let mut own = Vec::new();
        let (cols, case) = match self.d {
            DMatrixKind::D1 => self.dec_d1(&heads, &u)?,
            DMatrixKind::D2 => self.dec_d2(&heads, &u)?,
            DMatrixKind::D3 => self.dec_d3(&heads, &u)?,
            DMatrixKind::D4 => self.dec_d4(&heads, &u, &mut own)?,
            DMatrixKind::D5 => self.dec_d5(&heads, &u, &mut own)?,
            DMatrixKind::D6 => self.dec_d6(&heads, &u)?,
        };
        trace.push(TraceStep { level: 0, case: format!("v={} {}", heads.len(), case) });
        trace.extend(sub);
        trace.extend(own);
        Ok(cols)
    }

    fn no_case(&self, heads: &[(u64, u32)]) -> DecodeError {
        err_case(&self.name, format!("{} heads with R={}", heads.len(), self.big_r))
    }

    fn dec_d1(&self, heads: &[(u64, u32)], u: &[u32; 4]) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let rr = self.big_r;
        let v = heads.len();
        if v == rr {
            let rows: Vec<usize> = (0..rr).collect();
            let xs = self.solve(heads, &rows, u)?;
            return Ok((self.heads_out(heads, &xs), "solve"));
        }
        if v + 1 == rr {
            let rows: Vec<usize> = (0..rr - 1).collect();
            let xs = self.solve(heads, &rows, u)?;
            let res = self.residual(heads, &xs, u);
            let mut out = self.heads_out(heads, &xs);
            if res[rr - 1] != 0 {
                out.push(self.w_idx(rr - 1, res[rr - 1]));
            }
            return Ok((out, "solve+W"));
        }
        if v == 0 && rr == 2 {
            if u[0] != 0 {
                let b = self.field.div(u[1], u[0]).unwrap();
                let k = self.rep(b)?;
                return Ok((vec![self.a_idx(k, 0), self.a_idx(k, u[0])], "cone pair"));
            }
            let out = if u[1] != 0 { vec![self.w_idx(1, u[1])] } else { Vec::new() };
            return Ok((out, "W"));
        }
        Err(self.no_case(heads))
    }

    fn dec_d2(&self, heads: &[(u64, u32)], u: &[u32; 4]) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let rr = self.big_r;
        let v = heads.len();
        if v == rr {
            let rows: Vec<usize> = (0..rr).collect();
            let xs = self.solve(heads, &rows, u)?;
            return Ok((self.heads_out(heads, &xs), "solve"));
        }
        if v + 2 < rr || v > rr {
            return Err(self.no_case(heads));
        }
        let has_star = heads.iter().any(|h| h.1 as u64 == self.q);
        let rows: Vec<usize> =
            if has_star { (0..v - 1).chain(std::iter::once(rr - 1)).collect() } else { (0..v).collect() };
        let xs = self.solve(heads, &rows, u)?;
        let res = self.residual(heads, &xs, u);
        if res[..rr - 2].iter().any(|&x| x != 0) {
            return Err(self.no_case(heads));
        }
        let mut out = self.heads_out(heads, &xs);
        for b in [rr - 2, rr - 1] {
            if res[b] != 0 {
                out.push(self.w_idx(b, res[b]));
            }
        }
        Ok((out, if has_star { "solve with star+W" } else { "solve+W" }))
    }

    /// `y (1, β', β'²)` (or `(0,0,y)` for STAR) as two columns of one start
    /// column's block.
    fn cone_pair(&self, w: [u32; 3]) -> Result<Vec<u64>, DecodeError> {
        if w == [0, 0, 0] {
            return Ok(Vec::new());
        }
        let (beta, y) = if w[0] != 0 {
            (self.field.div(w[1], w[0]).unwrap(), w[0])
        } else {
            (self.q as u32, w[2])
        };
        let k = self.rep(beta)?;
        Ok(vec![self.a_idx(k, 0), self.a_idx(k, y)])
    }

    fn dec_d3(&self, heads: &[(u64, u32)], u: &[u32; 4]) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let f = &*self.field;
        let q = self.q as u32;
        match heads.len() {
            3 => {
                let xs = self.solve(heads, &[0, 1, 2], u)?;
                Ok((self.heads_out(heads, &xs), "solve"))
            }
            2 => {
                let xs = self.solve(heads, &[0, 2], u)?;
                let res = self.residual(heads, &xs, u);
                let mut out = self.heads_out(heads, &xs);
                if res[1] != 0 {
                    out.push(self.w_idx(1, res[1]));
                }
                Ok((out, "solve rows 0,2+W"))
            }
            1 => {
                let (j, beta) = heads[0];
                if beta == q {
                    if u[0] != 0 {
                        let x = f.div(f.mul(u[1], u[1]), u[0]).unwrap() ^ u[2];
                        let b = f.div(u[1], u[0]).unwrap();
                        let k = self.rep(b)?;
                        return Ok((vec![self.a_idx(j, x), self.a_idx(k, 0), self.a_idx(k, u[0])], "star head+cone"));
                    }
                    let mut out = vec![self.a_idx(j, u[2])];
                    if u[1] != 0 {
                        out.push(self.w_idx(1, u[1]));
                    }
                    return Ok((out, "star head+W"));
                }
                let b2 = f.mul(beta, beta);
                let c = f.mul(u[0], b2) ^ u[2];
                if c == 0 {
                    let mut out = vec![self.a_idx(j, u[0])];
                    let e = u[1] ^ f.mul(u[0], beta);
                    if e != 0 {
                        out.push(self.w_idx(1, e));
                    }
                    return Ok((out, "head+W"));
                }
                let x = f.div(f.mul(u[1], u[1]) ^ f.mul(u[0], u[2]), c).unwrap();
                let w = [u[0] ^ x, u[1] ^ f.mul(x, beta), u[2] ^ f.mul(x, b2)];
                if w == [0, 0, 0] {
                    return Ok((vec![self.a_idx(j, x)], "head"));
                }
                let (b, y) = if w[0] != 0 { (f.div(w[1], w[0]).unwrap(), w[0]) } else { (q, w[2]) };
                if b == beta {
                    return Ok((vec![self.a_idx(j, x ^ y)], "head"));
                }
                let mut out = vec![self.a_idx(j, x)];
                out.extend(self.cone_pair(w)?);
                Ok((out, "head+cone"))
            }
            0 => {
                let s = f.sqrt(f.mul(u[0], u[2]));
                let e = u[1] ^ s;
                let mut out = Vec::new();
                if e != 0 {
                    out.push(self.w_idx(1, e));
                }
                out.extend(self.cone_pair([u[0], s, u[2]])?);
                Ok((out, "W+cone"))
            }
            _ => Err(self.no_case(heads)),
        }
    }

    fn dec_d4(&self, heads: &[(u64, u32)], u: &[u32; 4], trace: &mut Vec<TraceStep>) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let m = self.m;
        let f = &*self.field;
        match heads.len() {
            3 => {
                let xs = self.solve(heads, &[0, 1, 2], u)?;
                Ok((self.heads_out(heads, &xs), "solve"))
            }
            2 => {
                let xs = self.solve(heads, &[1, 2], u)?;
                let res = self.residual(heads, &xs, u);
                let mut out = self.heads_out(heads, &xs);
                if res[0] != 0 {
                    out.push(self.w_idx(0, res[0]));
                }
                Ok((out, "solve rows 1,2+W"))
            }
            1 => {
                let (j, beta) = heads[0];
                let x = u[0];
                let r1 = u[1] ^ f.mul(x, beta);
                let r2 = u[2] ^ f.mul(x, f.mul(beta, beta));
                let mut out = vec![self.a_idx(j, x)];
                out.extend(self.inner_cols(((r1 as u64) << m) | r2 as u64, trace)?);
                Ok((out, "head+inner"))
            }
            0 => {
                let mut out = Vec::new();
                if u[0] != 0 {
                    out.push(self.w_idx(0, u[0]));
                }
                out.extend(self.inner_cols(((u[1] as u64) << m) | u[2] as u64, trace)?);
                Ok((out, "W+inner"))
            }
            _ => Err(self.no_case(heads)),
        }
    }

    fn dec_d5(&self, heads: &[(u64, u32)], u: &[u32; 4], trace: &mut Vec<TraceStep>) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let m = self.m;
        match heads.len() {
            4 => {
                let xs = self.solve(heads, &[0, 1, 2, 3], u)?;
                Ok((self.heads_out(heads, &xs), "solve"))
            }
            3 => {
                let xs = self.solve(heads, &[0, 1, 2], u)?;
                let res = self.residual(heads, &xs, u);
                let mut out = self.heads_out(heads, &xs);
                if res[3] != 0 {
                    out.push(self.w_idx(3, res[3]));
                }
                Ok((out, "solve+W"))
            }
            v @ (1 | 2) => {
                let rows: &[usize] = if v == 2 { &[0, 3] } else { &[0] };
                let xs = self.solve(heads, rows, u)?;
                let res = self.residual(heads, &xs, u);
                let mut out = self.heads_out(heads, &xs);
                out.extend(self.inner_cols(((res[1] as u64) << m) | res[2] as u64, trace)?);
                if res[3] != 0 {
                    out.push(self.w_idx(3, res[3]));
                }
                Ok((out, if v == 2 { "solve rows 0,3+inner" } else { "head+inner+W" }))
            }
            _ => Err(self.no_case(heads)),
        }
    }

    fn dec_d6(&self, heads: &[(u64, u32)], u: &[u32; 4]) -> Result<(Vec<u64>, &'static str), DecodeError> {
        let f = &*self.field;
        let q = self.q as u32;
        let w = q - 1;
        let ww = q as u64 - 2;
        let top = |a: u32| (a - 1) as u64;
        let bottom = |b: u32| self.q - 1 + (b - 1) as u64;
        match heads.len() {
            2 => {
                let xs = self.solve(heads, &[0, 1], u)?;
                Ok((self.heads_out(heads, &xs), "solve"))
            }
            1 => {
                let (j, beta) = heads[0];
                if beta == q {
                    if u[0] != w {
                        let mut out = vec![self.a_idx(j, u[1])];
                        if u[0] != 0 {
                            out.push(top(u[0]));
                        }
                        return Ok((out, "star head+W"));
                    }
                    return Ok((vec![self.a_idx(j, u[1] ^ w), ww], "star head+(w,w)"));
                }
                let e = f.mul(beta, u[0]) ^ u[1];
                if e != w {
                    let mut out = vec![self.a_idx(j, u[0])];
                    if e != 0 {
                        out.push(bottom(e));
                    }
                    return Ok((out, "head+W"));
                }
                if beta != 0 {
                    let x = f.div(u[1], beta).unwrap();
                    let mut out = vec![self.a_idx(j, x)];
                    if x ^ u[0] != 0 {
                        out.push(top(x ^ u[0]));
                    }
                    return Ok((out, "head+top W"));
                }
                Ok((vec![self.a_idx(j, u[0] ^ w), ww], "head+(w,w)"))
            }
            0 => {
                let (a, b) = (u[0], u[1]);
                let out = match (a, b) {
                    (0, 0) => vec![],
                    (a, 0) if a != w => vec![top(a)],
                    (_, 0) => vec![top(1), top(w ^ 1)],
                    (0, b) if b != w => vec![bottom(b)],
                    (0, _) => vec![bottom(1), bottom(w ^ 1)],
                    (a, b) if a == w && b == w => vec![ww],
                    (a, b) if a == w => vec![ww, bottom(w ^ b)],
                    (a, b) if b == w => vec![ww, top(a ^ w)],
                    (a, b) => vec![top(a), bottom(b)],
                };
                Ok((out, "D only"))
            }
            _ => Err(self.no_case(heads)),
        }
    }

    /// Block `j` and `ξ` of an A column, or `None` for a `D` column.
    fn a_parts(&self, idx: u64) -> Option<(u64, u32)> {
        (idx >= self.d_len).then(|| {
            let k = idx - self.d_len;
            (k >> self.m, (k & (self.q - 1)) as u32)
        })
    }

    /// `(block, value)` of a `W` column, or `None` for inner and `(w,w)`.
    fn w_parts(&self, idx: u64) -> Option<(usize, u32)> {
        let q1 = self.q - 1;
        match self.d {
            DMatrixKind::D1 => Some((self.big_r - 1, idx as u32 + 1)),
            DMatrixKind::D2 => Some(if idx < q1 { (self.big_r - 2, idx as u32 + 1) } else { (self.big_r - 1, (idx - q1) as u32 + 1) }),
            DMatrixKind::D3 => Some((1, idx as u32 + 1)),
            DMatrixKind::D4 => (idx < q1).then(|| (0, idx as u32 + 1)),
            DMatrixKind::D5 => (idx >= self.n_in).then(|| (3, (idx - self.n_in) as u32 + 1)),
            DMatrixKind::D6 => None,
        }
    }

    /// Rewrites a single column as two or three distinct columns.
    fn spread(&self, idx: u64) -> Result<Vec<u64>, DecodeError> {
        if let Some((j, x)) = self.a_parts(idx) {
            let q = self.q as u32;
            for a in 0..q {
                for b in a + 1..q {
                    let c = x ^ a ^ b;
                    if c > b {
                        return Ok(vec![self.a_idx(j, a), self.a_idx(j, b), self.a_idx(j, c)]);
                    }
                }
            }
        } else if let Some((block, e)) = self.w_parts(idx) {
            let a = if e != 1 { 1 } else { 2 };
            return Ok(vec![self.w_idx(block, a), self.w_idx(block, a ^ e)]);
        } else if self.inner.is_some() {
            let k = match self.d {
                DMatrixKind::D4 => idx - (self.q - 1),
                _ => idx,
            };
            if let Some(Some(v)) = self.inner_pad().get(k as usize) {
                return Ok(v.iter().map(|&c| self.inner_idx(c)).collect());
            }
        }
        Err(err_case(&self.name, format!("cannot spread column {idx}")))
    }

    fn zero_w_triple(&self) -> Vec<u64> {
        let b = self.main_w_block();
        vec![self.w_idx(b, 1), self.w_idx(b, 2), self.w_idx(b, 3)]
    }

    /// Three same-block columns for `A(j, x)` whose `ξ` values fall in the
    /// classes `{0, h}`, `1..h-1` and `h+1..` (`h = 2^{m-1}`).
    fn split3(&self, idx: u64) -> Result<Vec<u64>, DecodeError> {
        let (j, x) = self.a_parts(idx).ok_or_else(|| err_case(&self.name, "spread of a D column".into()))?;
        let h = (self.q / 2) as u32;
        let a = if x & h == 0 { h } else { 0 };
        let low = x & (h - 1);
        let b = (1..h).find(|&b| b != low).ok_or_else(|| err_case(&self.name, "m too small to split".into()))?;
        let c = x ^ a ^ b;
        Ok(vec![self.a_idx(j, a), self.a_idx(j, b), self.a_idx(j, c)])
    }

    fn xi_class(&self, xi: u32) -> u64 {
        let h = (self.q / 2) as u32;
        if xi == 0 || xi == h {
            0
        } else if xi < h {
            1
        } else {
            2
        }
    }
}

/// Lexicographically first `a < b < c` with distinct labels and
/// `cols[a] ^ cols[b] ^ cols[c] == 0`.
fn dependent_triple(cols: &[u64], labels: &[u64]) -> Option<[u64; 3]> {
    let mut at: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, &c) in cols.iter().enumerate() {
        at.entry(c).or_default().push(i);
    }
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            if labels[a] == labels[b] {
                continue;
            }
            if let Some(cs) = at.get(&(cols[a] ^ cols[b])) {
                if let Some(&c) = cs.iter().find(|&&c| c > b && labels[c] != labels[a] && labels[c] != labels[b]) {
                    return Some([a as u64, b as u64, c as u64]);
                }
            }
        }
    }
    None
}

/// Per-subset and per-column indicator values.
fn assign_indicators(
    spec: &ConstructionSpec,
    m: u32,
    labels: &[u32],
    p: usize,
) -> Result<(Vec<u32>, Vec<u32>), ConstructError> {
    let v = spec.variant;
    let q = 1u32 << m;
    let bad = |msg: String| ConstructError::Inadmissible { variant: v, violations: vec![msg] };
    let domain = domain_values(v.domain(), m);
    let subset_values: Vec<u32> = if let Some(list) = &spec.indicators {
        if list.len() != p {
            return Err(bad(format!("{} indicator values for {p} subsets", list.len())));
        }
        let mut out = Vec::with_capacity(p);
        for s in list {
            let val = if s.trim() == "*" {
                q
            } else {
                let t = s.trim();
                let parsed = match t.strip_prefix("0x") {
                    Some(h) => u32::from_str_radix(h, 16),
                    None => t.parse(),
                };
                parsed.map_err(|_| bad(format!("bad indicator {s:?}")))?
            };
            if !domain.contains(&val) {
                return Err(bad(format!("indicator {s} is outside the domain of {v}")));
            }
            if out.contains(&val) {
                return Err(bad(format!("indicator {s} used by two subsets")));
            }
            out.push(val);
        }
        out
    } else {
        match v {
            Variant::QM1_2 => {
                let mut out: Vec<u32> = (0..p as u32 - 1).collect();
                out.push(q);
                out
            }
            Variant::QM5_2 => {
                let s = spec.star_subset.unwrap_or(0);
                let mut field = 0u32..;
                (0..p).map(|k| if k == s { q } else { field.next().unwrap() }).collect()
            }
            _ => domain[..p].to_vec(),
        }
    };
    let mut ind: Vec<u32> = labels.iter().map(|&l| subset_values[l as usize]).collect();
    if v.surjective() {
        let mut left = domain.iter().copied().filter(|x| !subset_values.contains(x));
        let mut seen = vec![false; p];
        let mut pending = left.next();
        for (j, &l) in labels.iter().enumerate() {
            if pending.is_none() {
                break;
            }
            if seen[l as usize] {
                ind[j] = pending.unwrap();
                pending = left.next();
            }
            seen[l as usize] = true;
        }
        if pending.is_some() {
            return Err(bad("too few start columns to carry every indicator value".into()));
        }
    }
    Ok((subset_values, ind))
}

impl CodeNode for QmCode {
    fn name(&self) -> &str {
        &self.name
    }

    fn r(&self) -> u32 {
        self.r
    }

    fn n(&self) -> u64 {
        self.n
    }

    fn radius(&self) -> u32 {
        self.big_r as u32
    }

    fn claims(&self) -> Claims {
        self.claims.clone()
    }

    fn column(&self, idx: u64) -> u64 {
        match self.a_parts(idx) {
            None => self.d_column(idx),
            Some((j, xi)) => {
                let shift = self.big_r as u32 * self.m;
                (self.start.column(j) << shift) | self.a_lower(self.ind[j as usize], xi)
            }
        }
    }

    fn partitions(&self) -> Vec<PartitionInfo> {
        self.policies.iter().map(|p| PartitionInfo { name: p.name.clone(), ell: p.ell, count: p.count }).collect()
    }

    fn label(&self, part: usize, idx: u64) -> u64 {
        let pol = &self.policies[part];
        let a = self.a_parts(idx);
        let p0 = self.p0;
        match &pol.kind {
            PolicyKind::Trivial => idx,
            PolicyKind::ValueSplit { star_unsplit } => {
                let raw = match a {
                    None => pol.dense.len() - 1,
                    Some((j, xi)) => {
                        let v = self.ind[j as usize] as usize;
                        if *star_unsplit && v as u64 == self.q {
                            2 * v
                        } else {
                            2 * v + usize::from(xi != 0)
                        }
                    }
                };
                pol.dense[raw] as u64
            }
            PolicyKind::Split3 => match a {
                Some((j, xi)) => 3 * self.start_labels[j as usize] as u64 + self.xi_class(xi),
                None => 3 * p0 + u64::from(idx >= self.q - 1),
            },
            kind => {
                if let Some((j, _)) = a {
                    return self.start_labels[j as usize] as u64;
                }
                match kind {
                    PolicyKind::StartLabels(DLabels::FirstAndStar) => {
                        let first = self.start_labels[self.value_rep[0].unwrap() as usize] as u64;
                        let star = self.start_labels[self.value_rep[self.q as usize].unwrap() as usize] as u64;
                        if idx < self.q - 1 {
                            first
                        } else {
                            star
                        }
                    }
                    PolicyKind::StartLabels(DLabels::OneW) => p0,
                    PolicyKind::StartLabels(DLabels::TwoW) => p0 + u64::from(idx >= self.q - 1),
                    PolicyKind::StartLabels(DLabels::WInner) | PolicyKind::ZeroTriple(_) => {
                        if idx < self.q - 1 {
                            p0
                        } else {
                            p0 + 1 + self.inner.as_ref().unwrap().label(self.inner_part, idx - (self.q - 1))
                        }
                    }
                    PolicyKind::SplitW => {
                        if idx < self.q - 1 {
                            p0 + (idx.min(2))
                        } else {
                            p0 + 3 + self.inner.as_ref().unwrap().label(self.inner_part, idx - (self.q - 1))
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn represent(&self, s: u64, part: Option<usize>) -> Result<Decoded, DecodeError> {
        debug_assert_eq!(s & !row_mask(self.r), 0);
        let pol = match part {
            Some(p) => Some(self.policies.get(p).ok_or(DecodeError::Partition(p))?),
            None => None,
        };
        let mut trace = Vec::new();
        if s == 0 {
            if let Some(pol) = pol {
                let special = match &pol.kind {
                    PolicyKind::ZeroTriple(t) => Some((t.to_vec(), "zero as dependent triple")),
                    PolicyKind::SplitW => Some((self.zero_w_triple(), "zero as W triple")),
                    PolicyKind::Trivial if pol.ell >= 2 => Some((self.zero_w_triple(), "zero as W triple")),
                    _ => None,
                };
                if let Some((columns, case)) = special {
                    trace.push(TraceStep { level: 0, case: case.into() });
                    return Ok(Decoded { columns, trace });
                }
            }
        }
        let mut columns = self.base(s, &mut trace)?;
        if let Some(pol) = pol {
            if (columns.len() as u32) < pol.ell {
                match (&pol.kind, columns.len()) {
                    (PolicyKind::Trivial, 1) => {
                        columns = self.spread(columns[0])?;
                        trace.push(TraceStep { level: 0, case: "single column spread".into() });
                    }
                    (PolicyKind::Trivial, 0) => {
                        columns = self.zero_w_triple();
                        trace.push(TraceStep { level: 0, case: "zero as W triple".into() });
                    }
                    (PolicyKind::Split3, 2) => {
                        let first = self.split3(columns[0])?;
                        columns = first.into_iter().chain(std::iter::once(columns[1])).collect();
                        trace.push(TraceStep { level: 0, case: "head split in three".into() });
                    }
                    _ => {}
                }
            }
        }
        Ok(Decoded { columns, trace })
    }
}
