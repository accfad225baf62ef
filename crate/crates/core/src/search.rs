//! Search for `(R, ℓ)`-partitions with few subsets.
//!
//! Both strategies keep, for every syndrome, the number of its
//! representations by `max(ℓ,1)..=R` columns from pairwise distinct subsets.
//! Greedy merging starts from the trivial partition and only accepts merges
//! that leave every count positive. Annealing fixes the subset count and
//! minimizes the number of syndromes with count zero.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{ParityCheckMatrix, Partition};
use crate::verify::{self, Budget, PartitionReport, VerifyError};

/// Largest `r` searched; the count table has `2^r` entries.
pub const SEARCH_MAX_R: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    GreedyMerge,
    Annealing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub radius: u32,
    pub ell: u32,
    pub max_subsets: usize,
    /// Wall-clock cap; hitting it is the only nondeterministic outcome.
    pub budget: Duration,
    pub seed: u64,
    pub strategy: Strategy,
    /// Greedy passes with fresh tie-breaking orders.
    pub restarts: u32,
    /// Annealing moves per attempt.
    pub anneal_steps: u64,
}

impl SearchConfig {
    pub fn new(radius: u32, ell: u32, max_subsets: usize) -> Self {
        Self {
            radius,
            ell,
            max_subsets,
            budget: Duration::from_secs(60),
            seed: 1,
            strategy: Strategy::GreedyMerge,
            restarts: 32,
            anneal_steps: 200_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("max_subsets {max} is below R = {radius}")]
    Config { max: usize, radius: u32 },
    #[error("r = {0} is above the search limit {SEARCH_MAX_R}")]
    TooLarge(u32),
    #[error("the trivial partition is not an (R,ℓ)-partition; syndrome {0:#x} is uncovered")]
    TrivialInvalid(u64),
    #[error("no partition with at most {max} subsets found; best has {}", best.as_ref().map_or(0, |p| p.len()))]
    NotFound { max: usize, best: Option<Partition> },
    #[error("{0}")]
    Verify(#[from] VerifyError),
    #[error("internal: emitted partition failed verification at {0:?}")]
    Unverified(Option<u64>),
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub partition: Partition,
    pub report: PartitionReport,
    pub strategy: Strategy,
    pub attempts: u32,
    pub elapsed: Duration,
}

/// Syndrome counts over all valid representations under `labels`.
struct Counter<'a> {
    cols: &'a [u64],
    radius: usize,
    lo: usize,
    counts: Vec<u32>,
}

impl<'a> Counter<'a> {
    fn new(cols: &'a [u64], r: u32, radius: u32, ell: u32, labels: &[usize]) -> Self {
        let lo = ell.max(1) as usize;
        let mut counts = vec![0u32; 1 << r];
        if ell == 0 {
            counts[0] = 1;
        }
        let mut c = Self { cols, radius: radius as usize, lo, counts };
        let mut stack = Vec::new();
        c.walk_all(labels, 0, 0, &mut stack);
        c
    }

    fn walk_all(&mut self, labels: &[usize], start: usize, acc: u64, stack: &mut Vec<usize>) {
        if stack.len() >= self.lo {
            self.counts[acc as usize] += 1;
        }
        if stack.len() == self.radius {
            return;
        }
        for i in start..self.cols.len() {
            if stack.iter().any(|&o| labels[o] == labels[i]) {
                continue;
            }
            stack.push(i);
            self.walk_all(labels, i + 1, acc ^ self.cols[i], stack);
            stack.pop();
        }
    }

    fn uncovered(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    fn first_uncovered(&self) -> Option<u64> {
        self.counts.iter().position(|&c| c == 0).map(|s| s as u64)
    }
}

/// Syndromes of representations using one column of `a`, one of `b` and
/// otherwise columns of distinct other subsets.
fn lost_sums(cols: &[u64], labels: &[usize], a: &[usize], b: &[usize], lo: usize, radius: usize) -> Vec<u64> {
    let la = labels[a[0]];
    let lb = labels[b[0]];
    let others: Vec<usize> = (0..cols.len()).filter(|&i| labels[i] != la && labels[i] != lb).collect();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for &x in a {
        for &y in b {
            extend(cols, labels, &others, 0, cols[x] ^ cols[y], 2, lo, radius, &mut stack, &mut out);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    cols: &[u64],
    labels: &[usize],
    pool: &[usize],
    start: usize,
    acc: u64,
    size: usize,
    lo: usize,
    radius: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<u64>,
) {
    if size >= lo {
        out.push(acc);
    }
    if size == radius {
        return;
    }
    for k in start..pool.len() {
        let i = pool[k];
        if stack.iter().any(|&o| labels[o] == labels[i]) {
            continue;
        }
        stack.push(i);
        extend(cols, labels, pool, k + 1, acc ^ cols[i], size + 1, lo, radius, stack, out);
        stack.pop();
    }
}

/// Outcome of merging two subsets: `None` if some syndrome loses its last
/// representation, else the number of syndromes left with one.
fn merge_score(counts: &[u32], lost: &[u64]) -> Option<usize> {
    let mut sorted = lost.to_vec();
    sorted.sort_unstable();
    let mut fragile = 0;
    for run in sorted.chunk_by(|x, y| x == y) {
        let left = counts[run[0] as usize] as usize;
        match left.checked_sub(run.len()) {
            None | Some(0) => return None,
            Some(1) => fragile += 1,
            _ => {}
        }
    }
    Some(fragile)
}

fn greedy_pass(h: &ParityCheckMatrix, cfg: &SearchConfig, rng: &mut ChaCha8Rng, deadline: Instant) -> Vec<Vec<usize>> {
    let n = h.n();
    let cols = h.columns();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut counter = Counter::new(cols, h.r(), cfg.radius, cfg.ell, &labels);
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let lo = counter.lo;
    let radius = counter.radius;
    while subsets.len() > cfg.radius as usize && Instant::now() < deadline {
        let mut pairs: Vec<(usize, usize)> =
            (0..subsets.len()).flat_map(|x| (x + 1..subsets.len()).map(move |y| (x, y))).collect();
        pairs.shuffle(rng);
        let counts = &counter.counts;
        let labels_ref = &labels;
        let subsets_ref = &subsets;
        let best = pairs
            .par_iter()
            .enumerate()
            .filter_map(|(k, &(x, y))| {
                let lost = lost_sums(cols, labels_ref, &subsets_ref[x], &subsets_ref[y], lo, radius);
                merge_score(counts, &lost).map(|s| (s, k))
            })
            .min();
        let Some((_, k)) = best else { break };
        let (x, y) = pairs[k];
        let lost = lost_sums(cols, &labels, &subsets[x], &subsets[y], lo, radius);
        for s in lost {
            counter.counts[s as usize] -= 1;
        }
        let moved = subsets.remove(y);
        let target = labels[subsets[x][0]];
        for &i in &moved {
            labels[i] = target;
        }
        subsets[x].extend(moved);
        subsets[x].sort_unstable();
    }
    subsets
}

/// Representations containing column `i` under `labels`, as syndromes.
fn sums_with(cols: &[u64], labels: &[usize], i: usize, lo: usize, radius: usize, out: &mut Vec<u64>) {
    out.clear();
    let pool: Vec<usize> = (0..cols.len()).filter(|&j| j != i && labels[j] != labels[i]).collect();
    let mut stack = vec![i];
    extend(cols, labels, &pool, 0, cols[i], 1, lo, radius, &mut stack, out);
}

fn anneal(h: &ParityCheckMatrix, cfg: &SearchConfig, k: usize, rng: &mut ChaCha8Rng, deadline: Instant) -> Option<Vec<Vec<usize>>> {
    let n = h.n();
    let cols = h.columns();
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let mut counter = Counter::new(cols, h.r(), cfg.radius, cfg.ell, &labels);
    let (lo, radius) = (counter.lo, counter.radius);
    let mut cost = counter.uncovered() as i64;
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut before = Vec::new();
    let mut after = Vec::new();
    let t0 = 2.0f64;
    for step in 0..cfg.anneal_steps {
        if cost == 0 {
            break;
        }
        if step % 1024 == 0 && Instant::now() >= deadline {
            return None;
        }
        let i = rng.random_range(0..n);
        let old = labels[i];
        if sizes[old] == 1 {
            continue;
        }
        let new = rng.random_range(0..k);
        if new == old {
            continue;
        }
        sums_with(cols, &labels, i, lo, radius, &mut before);
        labels[i] = new;
        sums_with(cols, &labels, i, lo, radius, &mut after);
        let mut delta = 0i64;
        for &s in &before {
            let c = &mut counter.counts[s as usize];
            *c -= 1;
            if *c == 0 {
                delta += 1;
            }
        }
        for &s in &after {
            let c = &mut counter.counts[s as usize];
            if *c == 0 {
                delta -= 1;
            }
            *c += 1;
        }
        let temp = t0 * (1.0 - step as f64 / cfg.anneal_steps as f64) + 1e-3;
        if delta <= 0 || rng.random::<f64>() < (-(delta as f64) / temp).exp() {
            cost += delta;
            sizes[old] -= 1;
            sizes[new] += 1;
        } else {
            for &s in &after {
                counter.counts[s as usize] -= 1;
            }
            for &s in &before {
                counter.counts[s as usize] += 1;
            }
            labels[i] = old;
        }
    }
    if cost != 0 {
        return None;
    }
    let mut subsets = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        subsets[l].push(i);
    }
    subsets.retain(|s| !s.is_empty());
    Some(subsets)
}

fn certify(h: &ParityCheckMatrix, subsets: Vec<Vec<usize>>, cfg: &SearchConfig) -> Result<(Partition, PartitionReport), SearchError> {
    let mut subsets = subsets;
    subsets.sort_by_key(|s| s[0]);
    let p = Partition::new(subsets, h.n(), cfg.radius, cfg.ell).map_err(|_| SearchError::Unverified(None))?;
    let report = verify::verify_partition(h, &p, &Budget::default(), true)?;
    if !report.valid {
        return Err(SearchError::Unverified(report.witness));
    }
    Ok((p, report))
}

/// Finds a verified `(R, ℓ)`-partition of `h` with at most `max_subsets`
/// subsets. Subsets are listed by smallest member.
pub fn search_partition(h: &ParityCheckMatrix, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    let started = Instant::now();
    let deadline = started + cfg.budget;
    if cfg.max_subsets < cfg.radius as usize {
        return Err(SearchError::Config { max: cfg.max_subsets, radius: cfg.radius });
    }
    if h.r() > SEARCH_MAX_R {
        return Err(SearchError::TooLarge(h.r()));
    }
    let trivial: Vec<usize> = (0..h.n()).collect();
    let base = Counter::new(h.columns(), h.r(), cfg.radius, cfg.ell, &trivial);
    if let Some(s) = base.first_uncovered() {
        return Err(SearchError::TrivialInvalid(s));
    }
    drop(base);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<Vec<Vec<usize>>> = None;
    let mut attempts = 0;
    let mut strategy = cfg.strategy;
    if cfg.strategy == Strategy::GreedyMerge {
        for _ in 0..cfg.restarts.max(1) {
            if Instant::now() >= deadline {
                break;
            }
            attempts += 1;
            let found = greedy_pass(h, cfg, &mut rng, deadline);
            if best.as_ref().is_none_or(|b| found.len() < b.len()) {
                best = Some(found);
            }
            if best.as_ref().is_some_and(|b| b.len() <= cfg.max_subsets) {
                break;
            }
        }
    }
    if best.as_ref().is_none_or(|b| b.len() > cfg.max_subsets) {
        // annealing at the target size, also as the fallback for greedy
        let k = cfg.max_subsets.min(h.n());
        while Instant::now() < deadline && attempts < cfg.restarts.max(1) * 2 {
            attempts += 1;
            if let Some(found) = anneal(h, cfg, k, &mut rng, deadline) {
                best = Some(found);
                strategy = Strategy::Annealing;
                break;
            }
        }
    }
    match best {
        Some(b) if b.len() <= cfg.max_subsets => {
            let (partition, report) = certify(h, b, cfg)?;
            Ok(SearchOutcome { partition, report, strategy, attempts, elapsed: started.elapsed() })
        }
        other => {
            let best = match other {
                Some(b) => certify(h, b, cfg).ok().map(|(p, _)| p),
                None => None,
            };
            Err(SearchError::NotFound { max: cfg.max_subsets, best })
        }
    }
}

/// Splits every pinned column (0-based) off into a singleton. Singletons come
/// first in pin order, then the remaining subsets in their original order.
pub fn refine_partition(p: &Partition, pins: &[usize]) -> Partition {
    let mut pinned = vec![false; p.n()];
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for &i in pins {
        if i < p.n() && !pinned[i] {
            pinned[i] = true;
            subsets.push(vec![i]);
        }
    }
    for s in p.subsets() {
        let rest: Vec<usize> = s.iter().copied().filter(|&i| !pinned[i]).collect();
        if !rest.is_empty() {
            subsets.push(rest);
        }
    }
    Partition::new(subsets, p.n(), p.radius(), p.ell()).expect("refinement keeps a partition")
}

/// Pins every column of the listed subsets (0-based subset numbers).
pub fn refine_subsets(p: &Partition, subsets: &[usize]) -> Partition {
    let pins: Vec<usize> = subsets.iter().filter_map(|&k| p.subsets().get(k)).flatten().copied().collect();
    refine_partition(p, &pins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    #[test]
    fn hamming_merges_to_one_block_per_radius() {
        let h = seeds::hamming_matrix(3);
        let cfg = SearchConfig::new(1, 0, 7);
        let out = search_partition(&h, &cfg).unwrap();
        assert!(out.report.valid);
    }

    #[test]
    fn refine_empty_and_trivial() {
        let (pkr, _) = seeds::kr_partitions();
        assert_eq!(refine_partition(&pkr, &[]), pkr);
        let t = Partition::trivial(51, 2, 0).unwrap();
        assert_eq!(refine_partition(&t, &[0, 1]).len(), 51);
    }

    #[test]
    fn deterministic_under_seed() {
        let h = seeds::kr_code().matrix.unwrap();
        let mut cfg = SearchConfig::new(2, 0, 20);
        cfg.restarts = 2;
        let a = search_partition(&h, &cfg).unwrap().partition;
        let b = search_partition(&h, &cfg).unwrap().partition;
        assert_eq!(a, b);
    }
}
