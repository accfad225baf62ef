//! Exhaustive and sampled verification of covering claims.
//!
//! Coverage is tracked in a `2^r`-bit bitmap filled one layer at a time, layer
//! `i` being the syndromes whose shortest representation uses `i` columns.
//! A layer is produced either by enumerating all `i`-subsets of columns or by
//! translating the previous layer's frontier by every column; a cost model
//! picks the cheaper one. Every engine runs serially or on the rayon pool and
//! the two produce identical reports.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{row_mask, Partition, ParityCheckMatrix};
use crate::construct::{CodeNode, Decoded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Ceiling on enumerated combinations (or equivalent word operations).
    pub max_work: u64,
    /// Ceiling on bitmap memory, in bytes, across all bitmaps of one run.
    pub max_bitmap_bytes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_work: 5_000_000_000, max_bitmap_bytes: 512 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("estimated work {work} exceeds the budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("a {r}-row bitmap needs {bytes} bytes, over the {limit}-byte limit")]
    BitmapTooLarge { r: u32, bytes: u64, limit: u64 },
    #[error("partition covers {partition} columns but the matrix has {matrix}")]
    Shape { partition: usize, matrix: usize },
}

/// Binomial coefficient, saturating far above any budget.
pub fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 * 16 {
            return acc;
        }
    }
    acc
}

struct Bitmap {
    words: Vec<AtomicU64>,
}

impl Bitmap {
    fn new(r: u32) -> Self {
        let len = if r >= 6 { 1usize << (r - 6) } else { 1 };
        Self { words: (0..len).map(|_| AtomicU64::new(0)).collect() }
    }

    /// Sets bit `s`; true if it was clear.
    #[inline]
    fn set(&self, s: u64) -> bool {
        let w = &self.words[(s >> 6) as usize];
        let bit = 1u64 << (s & 63);
        if w.load(Ordering::Relaxed) & bit != 0 {
            return false;
        }
        w.fetch_or(bit, Ordering::Relaxed) & bit == 0
    }

    fn snapshot(&self) -> Vec<u64> {
        self.words.iter().map(|w| w.load(Ordering::Relaxed)).collect()
    }

    fn count(&self, r: u32) -> u64 {
        let mask = if r >= 6 { u64::MAX } else { row_mask(1 << r) };
        self.words.iter().map(|w| (w.load(Ordering::Relaxed) & mask).count_ones() as u64).sum()
    }

    fn first_clear(&self, r: u32) -> Option<u64> {
        let total = 1u64 << r;
        for (i, w) in self.words.iter().enumerate() {
            let v = w.load(Ordering::Relaxed);
            if v != u64::MAX {
                let s = ((i as u64) << 6) + (!v).trailing_zeros() as u64;
                return (s < total).then_some(s);
            }
        }
        None
    }
}

fn bitmap_bytes(r: u32) -> u64 {
    if r >= 6 {
        1u64 << (r - 3)
    } else {
        8
    }
}

fn check_bitmap(r: u32, copies: u64, budget: &Budget) -> Result<(), VerifyError> {
    let bytes = bitmap_bytes(r).saturating_mul(copies);
    if r > 32 || bytes > budget.max_bitmap_bytes {
        return Err(VerifyError::BitmapTooLarge { r, bytes, limit: budget.max_bitmap_bytes });
    }
    Ok(())
}

/// Walks every `k`-subset of `cols` (with pairwise distinct labels when given)
/// starting at `start`, calling `visit` with each sum. Returns visits made.
fn walk<F: FnMut(u64)>(cols: &[u64], labels: Option<&[u32]>, start: usize, k: usize, acc: u64, used: &mut Vec<u32>, visit: &mut F) {
    if k == 0 {
        visit(acc);
        return;
    }
    let n = cols.len();
    for i in start..=n - k {
        if let Some(l) = labels {
            if used.contains(&l[i]) {
                continue;
            }
            used.push(l[i]);
            walk(cols, labels, i + 1, k - 1, acc ^ cols[i], used, visit);
            used.pop();
        } else {
            walk(cols, labels, i + 1, k - 1, acc ^ cols[i], used, visit);
        }
    }
}

/// Marks every `k`-subset sum; returns the number of newly set bits.
fn fill_layer(bitmap: &Bitmap, cols: &[u64], labels: Option<&[u32]>, k: usize, parallel: bool) -> u64 {
    let n = cols.len();
    if k == 0 || k > n {
        return 0;
    }
    let task = |i: usize| -> u64 {
        let mut fresh = 0u64;
        let mut used = Vec::with_capacity(k);
        if let Some(l) = labels {
            used.push(l[i]);
        }
        walk(cols, labels, i + 1, k - 1, cols[i], &mut used, &mut |s| {
            if bitmap.set(s) {
                fresh += 1;
            }
        });
        fresh
    };
    if parallel {
        (0..=n - k).into_par_iter().map(task).sum()
    } else {
        (0..=n - k).map(task).sum()
    }
}

const HALF_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Moves bit `b` of `x` to bit `b ^ c`.
#[inline]
fn xor_permute(mut x: u64, c: u64) -> u64 {
    for (k, &m) in HALF_MASKS.iter().enumerate() {
        if (c >> k) & 1 == 1 {
            let s = 1u32 << k;
            x = ((x >> s) & m) | ((x & m) << s);
        }
    }
    x
}

/// Union over all columns of the frontier translated by that column.
fn translate(frontier: &[u64], cols: &[u64], parallel: bool) -> Vec<u64> {
    let mut out = vec![0u64; frontier.len()];
    let chunk = 1usize << 12;
    let job = |(ci, part): (usize, &mut [u64])| {
        let base = ci * chunk;
        for &h in cols {
            let hi = (h >> 6) as usize;
            let lo = h & 63;
            for (off, t) in part.iter_mut().enumerate() {
                let f = frontier[(base + off) ^ hi];
                if f != 0 {
                    *t |= xor_permute(f, lo);
                }
            }
        }
    };
    if parallel {
        out.par_chunks_mut(chunk).enumerate().for_each(job);
    } else {
        out.chunks_mut(chunk).enumerate().for_each(job);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerMethod {
    Enumerate,
    Translate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ReportMode {
    Exhaustive,
    Sampled { trials: u64, seed: u64 },
}

/// Outcome of a covering-radius computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub mode: ReportMode,
    pub r: u32,
    pub n: u64,
    /// Exact covering radius when it is at most the requested bound.
    pub radius: Option<u32>,
    /// Lowest syndrome left uncovered when the bound is too small.
    pub witness: Option<u64>,
    /// Syndromes first reached by sums of exactly `i` columns.
    pub layers: Vec<u64>,
    pub methods: Vec<LayerMethod>,
    pub runtime: Duration,
}

impl PartialEq for CoverageReport {
    fn eq(&self, o: &Self) -> bool {
        self.mode == o.mode
            && self.r == o.r
            && self.n == o.n
            && self.radius == o.radius
            && self.witness == o.witness
            && self.layers == o.layers
            && self.methods == o.methods
    }
}

/// Chooses per-layer methods and returns them with the estimated work.
pub fn plan_layers(r: u32, n: u64, r_max: u32, budget: &Budget) -> (Vec<LayerMethod>, u128) {
    let words = (bitmap_bytes(r) / 8) as u128;
    let translate_ok = check_bitmap(r, 3, budget).is_ok();
    let mut methods = Vec::new();
    let mut work = 0u128;
    for i in 1..=r_max as u64 {
        let enumerate = binom(n, i);
        let shift = n as u128 * words;
        if i >= 2 && translate_ok && shift < enumerate {
            methods.push(LayerMethod::Translate);
            work += shift;
        } else {
            methods.push(LayerMethod::Enumerate);
            work += enumerate;
        }
    }
    (methods, work)
}

/// Exact covering radius, provided it does not exceed `r_max`.
pub fn covering_radius_exhaustive(
    h: &ParityCheckMatrix,
    r_max: u32,
    budget: &Budget,
    parallel: bool,
) -> Result<CoverageReport, VerifyError> {
    let t0 = Instant::now();
    let r = h.r();
    check_bitmap(r, 1, budget)?;
    let (plan, work) = plan_layers(r, h.n() as u64, r_max, budget);
    if work > budget.max_work as u128 {
        return Err(VerifyError::BudgetExceeded { work, budget: budget.max_work });
    }
    let total = 1u64 << r;
    let cover = Bitmap::new(r);
    cover.set(0);
    let mut layers = vec![1u64];
    let mut methods = Vec::new();
    let mut covered = 1u64;
    let mut before: Option<Vec<u64>> = None;
    for (li, &method) in plan.iter().enumerate() {
        if covered == total {
            break;
        }
        let k = li + 1;
        let next_translates = plan.get(li + 1) == Some(&LayerMethod::Translate);
        let fresh = match method {
            LayerMethod::Enumerate => {
                if next_translates {
                    before = Some(cover.snapshot());
                }
                fill_layer(&cover, h.columns(), None, k, parallel)
            }
            LayerMethod::Translate => {
                let prev = before.take().expect("snapshot precedes a translated layer");
                let now = cover.snapshot();
                let frontier: Vec<u64> = now.iter().zip(&prev).map(|(a, b)| a & !b).collect();
                drop(prev);
                if next_translates {
                    before = Some(now.clone());
                }
                let reach = translate(&frontier, h.columns(), parallel);
                let mut fresh = 0u64;
                for (i, w) in reach.iter().enumerate() {
                    let new = w & !now[i];
                    if new != 0 {
                        cover.words[i].fetch_or(new, Ordering::Relaxed);
                        fresh += new.count_ones() as u64;
                    }
                }
                fresh
            }
        };
        methods.push(method);
        layers.push(fresh);
        covered += fresh;
    }
    debug_assert_eq!(covered, cover.count(r));
    let (radius, witness) = if covered == total {
        let top = layers.iter().rposition(|&c| c > 0).unwrap_or(0) as u32;
        layers.truncate(top as usize + 1);
        methods.truncate(top as usize);
        (Some(top), None)
    } else {
        (None, cover.first_clear(r))
    };
    Ok(CoverageReport {
        mode: ReportMode::Exhaustive,
        r,
        n: h.n() as u64,
        radius,
        witness,
        layers,
        methods,
        runtime: t0.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Exact minimum distance when it is at most the limit.
    pub d: Option<u32>,
    pub limit: u32,
    /// Lexicographically first dependent set of size `d`, 0-based.
    pub witness: Vec<usize>,
}

/// Smallest number of linearly dependent columns, searched up to `limit`.
pub fn min_distance_upto(h: &ParityCheckMatrix, limit: u32, budget: &Budget) -> Result<DistanceReport, VerifyError> {
    let cols = h.columns();
    let n = cols.len();
    let work = binom(n as u64, limit.saturating_sub(1) as u64);
    if work > budget.max_work as u128 {
        return Err(VerifyError::BudgetExceeded { work, budget: budget.max_work });
    }
    let found = |d: u32, witness: Vec<usize>| Ok(DistanceReport { d: Some(d), limit, witness });
    if limit >= 1 {
        if let Some(i) = cols.iter().position(|&c| c == 0) {
            return found(1, vec![i]);
        }
    }
    let mut index: HashMap<u64, usize> = HashMap::with_capacity(n);
    let mut dup: Option<(usize, usize)> = None;
    for (i, &c) in cols.iter().enumerate() {
        if let Some(&j) = index.get(&c) {
            let cand = (j, i);
            if dup.is_none_or(|d| cand < d) {
                dup = Some(cand);
            }
        } else {
            index.insert(c, i);
        }
    }
    if limit >= 2 {
        if let Some((a, b)) = dup {
            return found(2, vec![a, b]);
        }
    }
    for k in 3..=limit as usize {
        if k > n {
            break;
        }
        let hit = (0..n).into_par_iter().find_map_first(|i| {
            let mut stack = vec![i];
            first_completion(cols, &index, i + 1, k - 2, cols[i], &mut stack)
        });
        if let Some(w) = hit {
            return found(k as u32, w);
        }
    }
    Ok(DistanceReport { d: None, limit, witness: Vec::new() })
}

fn first_completion(
    cols: &[u64],
    index: &HashMap<u64, usize>,
    start: usize,
    more: usize,
    acc: u64,
    stack: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    if more == 0 {
        let last = *stack.last().unwrap();
        return index.get(&acc).filter(|&&j| j > last).map(|&j| {
            let mut w = stack.clone();
            w.push(j);
            w
        });
    }
    for i in start..cols.len() {
        stack.push(i);
        let r = first_completion(cols, index, i + 1, more - 1, acc ^ cols[i], stack);
        stack.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

/// 1 when some nonzero `(R,ℓ)` value is possible (`d ≤ R`), else 0.
pub fn ell_max_quick(h: &ParityCheckMatrix, radius: u32, budget: &Budget) -> Result<u32, VerifyError> {
    let rep = min_distance_upto(h, radius, budget)?;
    Ok(u32::from(rep.d.is_some()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub valid: bool,
    pub subsets: usize,
    pub radius: u32,
    pub ell: u32,
    /// Lowest syndrome lacking a representation from distinct subsets.
    pub witness: Option<u64>,
}

/// Checks that every syndrome, zero included, is a sum of between `ℓ` and
/// `R` columns taken from pairwise distinct subsets.
pub fn verify_partition(
    h: &ParityCheckMatrix,
    p: &Partition,
    budget: &Budget,
    parallel: bool,
) -> Result<PartitionReport, VerifyError> {
    if p.n() != h.n() {
        return Err(VerifyError::Shape { partition: p.n(), matrix: h.n() });
    }
    let r = h.r();
    check_bitmap(r, 1, budget)?;
    let lo = p.ell().max(1) as u64;
    let work: u128 = (lo..=p.radius() as u64).map(|j| binom(h.n() as u64, j)).sum();
    if work > budget.max_work as u128 {
        return Err(VerifyError::BudgetExceeded { work, budget: budget.max_work });
    }
    let labels = p.labels();
    let cover = Bitmap::new(r);
    if p.ell() == 0 {
        cover.set(0);
    }
    for j in lo..=p.radius() as u64 {
        fill_layer(&cover, h.columns(), Some(&labels), j as usize, parallel);
    }
    let witness = cover.first_clear(r);
    Ok(PartitionReport { valid: witness.is_none(), subsets: p.len(), radius: p.radius(), ell: p.ell(), witness })
}

/// Every syndrome, zero included, as a sum of exactly three distinct columns.
pub fn sum3_cover_check(h: &ParityCheckMatrix, parallel: bool) -> Result<(), u64> {
    let r = h.r();
    assert!(r <= 26, "sum3 check is limited to r <= 26");
    let cover = Bitmap::new(r);
    fill_layer(&cover, h.columns(), None, 3, parallel);
    match cover.first_clear(r) {
        None => Ok(()),
        Some(w) => Err(w),
    }
}

/// One decoder output that failed a check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFailure {
    pub syndrome: u64,
    pub columns: Vec<u64>,
    pub trace: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleReport {
    pub trials: u64,
    pub seed: u64,
    pub partition: Option<String>,
    pub failures: u64,
    /// First few failures, in trial order.
    pub examples: Vec<SampleFailure>,
    /// Trials per top-level decoder case.
    pub cases: BTreeMap<String, u64>,
    pub runtime: Duration,
}

impl SampleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Checks one decoder answer against the syndrome and the partition rules.
pub fn check_decoded(node: &dyn CodeNode, part: Option<usize>, s: u64, dec: &Decoded) -> Result<(), String> {
    let cols = &dec.columns;
    if cols.len() as u32 > node.radius() {
        return Err(format!("{} columns exceed R={}", cols.len(), node.radius()));
    }
    let mut sorted = cols.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err("repeated column".into());
    }
    if sorted.last().is_some_and(|&c| c >= node.n()) {
        return Err("column index out of range".into());
    }
    let sum = cols.iter().fold(0u64, |a, &c| a ^ node.column(c));
    if sum != s {
        return Err(format!("columns sum to {sum:#x}"));
    }
    if let Some(p) = part {
        let info = &node.partitions()[p];
        if (cols.len() as u32) < info.ell {
            return Err(format!("{} columns, partition needs at least {}", cols.len(), info.ell));
        }
        let mut labels: Vec<u64> = cols.iter().map(|&c| node.label(p, c)).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err("two columns share a subset".into());
        }
    }
    Ok(())
}

const CHUNK: u64 = 4096;
const KEPT_FAILURES: usize = 8;

/// Replays the construction's decoder on uniformly random syndromes.
///
/// Trial chunk `c` draws from ChaCha8 seeded with `seed` on stream `c`, so the
/// report does not depend on scheduling.
pub fn decoder_sample_verify(node: &dyn CodeNode, part: Option<usize>, trials: u64, seed: u64, parallel: bool) -> SampleReport {
    let t0 = Instant::now();
    let mask = row_mask(node.r());
    let chunks = trials.div_ceil(CHUNK);
    let run = |c: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let count = CHUNK.min(trials - c * CHUNK);
        let mut cases: BTreeMap<String, u64> = BTreeMap::new();
        let mut fails = 0u64;
        let mut kept = Vec::new();
        for _ in 0..count {
            let s = rng.random::<u64>() & mask;
            let outcome = node.represent(s, part);
            let (verdict, trace, columns) = match outcome {
                Ok(dec) => {
                    let key = dec.trace.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" > ");
                    *cases.entry(key).or_default() += 1;
                    (check_decoded(node, part, s, &dec), dec.trace, dec.columns)
                }
                Err(e) => (Err(e.to_string()), Vec::new(), Vec::new()),
            };
            if let Err(reason) = verdict {
                fails += 1;
                if kept.len() < KEPT_FAILURES {
                    kept.push(SampleFailure {
                        syndrome: s,
                        columns,
                        trace: trace.iter().map(|t| t.to_string()).collect(),
                        reason,
                    });
                }
            }
        }
        (cases, fails, kept)
    };
    let parts: Vec<_> = if parallel {
        (0..chunks).into_par_iter().map(run).collect()
    } else {
        (0..chunks).map(run).collect()
    };
    let mut cases = BTreeMap::new();
    let mut failures = 0;
    let mut examples = Vec::new();
    for (c, f, k) in parts {
        for (key, v) in c {
            *cases.entry(key).or_default() += v;
        }
        failures += f;
        for e in k {
            if examples.len() < KEPT_FAILURES {
                examples.push(e);
            }
        }
    }
    SampleReport {
        trials,
        seed,
        partition: part.map(|p| node.partitions()[p].name.clone()),
        failures,
        examples,
        cases,
        runtime: t0.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    #[test]
    fn xor_permute_moves_bits() {
        for c in 0..64u64 {
            for b in [0u64, 5, 17, 63] {
                assert_eq!(xor_permute(1 << b, c), 1 << (b ^ c));
            }
        }
    }

    #[test]
    fn hamming_radius_one() {
        let h = seeds::hamming_matrix(3);
        let rep = covering_radius_exhaustive(&h, 3, &Budget::default(), false).unwrap();
        assert_eq!(rep.radius, Some(1));
        assert_eq!(rep.layers, vec![1, 7]);
    }

    #[test]
    fn radius_bound_too_small_gives_witness() {
        let h = ParityCheckMatrix::identity_prefixed(4, &[]).unwrap();
        let rep = covering_radius_exhaustive(&h, 2, &Budget::default(), false).unwrap();
        assert_eq!(rep.radius, None);
        assert_eq!(rep.witness, Some(0b0111));
    }

    #[test]
    fn translate_agrees_with_enumerate() {
        let h = seeds::kr_code().matrix.unwrap();
        let budget = Budget::default();
        let rep = covering_radius_exhaustive(&h, 3, &budget, false).unwrap();
        let mut forced = budget;
        forced.max_bitmap_bytes = 8;
        let plain = covering_radius_exhaustive(&h, 3, &forced, false);
        // a tiny bitmap allowance refuses outright, so compare layer counts
        // from a pure enumeration run instead
        assert!(plain.is_err());
        let cover = Bitmap::new(10);
        cover.set(0);
        let l1 = fill_layer(&cover, h.columns(), None, 1, false);
        let l2 = fill_layer(&cover, h.columns(), None, 2, false);
        assert_eq!(rep.layers, vec![1, l1, l2]);
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(303, 3), 4_590_551);
        assert_eq!(binom(5, 7), 0);
        assert_eq!(binom(51, 2), 1275);
    }

    #[test]
    fn sum3_small_cases() {
        let one = ParityCheckMatrix::new(1, vec![1]).unwrap();
        assert!(sum3_cover_check(&one, false).is_err());
        let i3 = ParityCheckMatrix::identity_prefixed(3, &[]).unwrap();
        assert_eq!(sum3_cover_check(&i3, false), Err(0));
    }
}
