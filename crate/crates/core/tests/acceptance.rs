//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Set `QMCOVER_HEAVY=1` to add the exhaustive `R = 4` check of the
//! `[690, 659]` code (a 256 MiB bitmap, tens of minutes on one core).

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use qmcover::code::{density, ParityCheckMatrix, Partition};
use qmcover::construct::{CodeNode, ConstructionSpec, QmCode, Variant};
use qmcover::gf2m::{self, FieldContext};
use qmcover::search::{self, SearchConfig};
use qmcover::seeds;
use qmcover::tables::{self, Bound, Chain, StepRole};
use qmcover::verify::{self, Budget};

/// Syndromes replayed through the decoder for codes beyond the exhaustive
/// frontier.
const SAMPLE_TRIALS: u64 = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failures that are all recorded discrepancies in the printed tables.
    documented_only: bool,
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn radius_of(h: &ParityCheckMatrix, r_max: u32) -> Result<Option<u32>, String> {
    verify::covering_radius_exhaustive(h, r_max, &Budget::default(), true)
        .map(|rep| rep.radius)
        .map_err(|e| e.to_string())
}

fn partition_valid(h: &ParityCheckMatrix, p: &Partition) -> Result<bool, String> {
    verify::verify_partition(h, p, &Budget::default(), true).map(|r| r.valid).map_err(|e| e.to_string())
}

fn all_partitions_valid(code: &dyn CodeNode) -> Result<(), String> {
    let h = code.matrix().ok_or("matrix too long to list")?;
    for (k, info) in code.partitions().iter().enumerate() {
        let p = code.partition(k).ok_or("partition too long to list")?;
        ensure(p.len() as u64 == info.count, || format!("{} {} count", code.name(), info.name))?;
        ensure(partition_valid(&h, &p)?, || format!("{} partition {} invalid", code.name(), info.name))?;
    }
    Ok(())
}

fn count_of(code: &dyn CodeNode, name: &str) -> Option<u64> {
    code.partitions().iter().find(|p| p.name == name).map(|p| p.count)
}

fn build(chain: &mut Chain, name: &str, spec: ConstructionSpec) -> Result<Arc<QmCode>, String> {
    chain.build(name, &spec).map_err(|e| format!("{name}: {e}"))
}

fn criterion1() -> Check {
    let t = Instant::now();
    let kr = seeds::kr_code();
    let h = kr.matrix.clone().unwrap();
    ensure(radius_of(&h, 2)? == Some(2), || "kr radius is not 2".into())?;
    let d = verify::min_distance_upto(&h, 3, &Budget::default()).map_err(|e| e.to_string())?;
    ensure(d.d == Some(3), || format!("kr d = {:?}", d.d))?;
    let triple = [5usize, 27, 29];
    ensure(triple.iter().fold(0, |a, &i| a ^ h.col(i - 1)) == 0, || "{5,27,29} is not dependent".into())?;
    let (pkr, pkr_star) = seeds::kr_partitions();
    ensure(pkr.len() == 11 && partition_valid(&h, &pkr)?, || "P_KR".into())?;
    ensure(pkr_star.len() == 16 && partition_valid(&h, &pkr_star)?, || "P_KR*".into())?;

    let ok = seeds::ok_code();
    let h = ok.matrix.clone().unwrap();
    ensure(radius_of(&h, 3)? == Some(3), || "ok radius is not 3".into())?;
    let pok = seeds::ok_partition();
    ensure(pok.len() == 11 && pok.ell() == 1 && partition_valid(&h, &pok)?, || "P_OK".into())?;

    let ok2 = seeds::ok2_code();
    let h = ok2.matrix.clone().unwrap();
    ensure(radius_of(&h, 4)? == Some(4), || "ok2 radius is not 4".into())?;
    let z = seeds::OK2_ZERO_TRIPLE.iter().fold(0, |a, &i| a ^ h.col(i - 1));
    ensure(z == 0, || "ok2 triple {9,10,14} does not sum to zero".into())?;

    let golay = seeds::golay_code();
    let h = golay.matrix.clone().unwrap();
    ensure(radius_of(&h, 3)? == Some(3), || "golay radius is not 3".into())?;
    let d = verify::min_distance_upto(&h, 7, &Budget::default()).map_err(|e| e.to_string())?;
    ensure(d.d == Some(7), || format!("golay d = {:?}", d.d))?;
    let el = t.elapsed();
    ensure(el.as_secs_f64() < 5.0, || format!("seed suite took {el:?}"))?;
    Ok(format!("kr R=2 d=3, P_KR 11, P_KR* 16, ok R=3 P_OK 11, ok2 R=4, golay R=3 d=7 in {el:.2?}"))
}

fn criterion2() -> Check {
    let h = seeds::kr_code().matrix.unwrap();
    let t = Instant::now();
    verify::sum3_cover_check(&h, true).map_err(|s| format!("syndrome {s:#x} is not a sum of three columns"))?;
    let el = t.elapsed();
    ensure(el.as_secs_f64() < 1.0, || format!("took {el:?}"))?;
    Ok(format!("all 1024 syndromes are sums of three distinct columns in {el:.2?}"))
}

fn criterion3(chain: &mut Chain) -> Check {
    let t = Instant::now();
    let r18 = build(chain, "r18", ConstructionSpec::new(Variant::QM4_2, "kr", "pkr-star", 4))?;
    ensure((r18.r(), r18.n()) == (18, 831), || "r18 shape".into())?;
    ensure(radius_of(&r18.matrix().unwrap(), 2)? == Some(2), || "r18 radius".into())?;
    ensure(count_of(r18.as_ref(), "derived") == Some(33), || "r18 derived count".into())?;
    all_partitions_valid(r18.as_ref())?;

    let r20 = build(chain, "r20", ConstructionSpec::new(Variant::QM6_2, "kr", "pkr", 5))?;
    ensure((r20.r(), r20.n()) == (20, 1663), || "r20 shape".into())?;
    ensure(radius_of(&r20.matrix().unwrap(), 2)? == Some(2), || "r20 radius".into())?;

    for (m, n) in [(6, 3389), (7, 6781), (8, 13565)] {
        let name = format!("r{}", 10 + 2 * m);
        let c = build(chain, &name, ConstructionSpec::new(Variant::QM3_2, "kr", "pkr", m))?;
        ensure(c.n() == n, || format!("{name} has n={}", c.n()))?;
        ensure(radius_of(&c.matrix().unwrap(), 2)? == Some(2), || format!("{name} radius"))?;
    }

    let r28 = build(chain, "r28", ConstructionSpec::new(Variant::QM5_2, "r18", "derived", 5))?;
    ensure((r28.r(), r28.n()) == (28, 26623), || "r28 shape".into())?;
    ensure(radius_of(&r28.matrix().unwrap(), 2)? == Some(2), || "r28 radius".into())?;
    ensure(count_of(r28.as_ref(), "derived") == Some(66), || "r28 derived count".into())?;
    all_partitions_valid(r28.as_ref())?;
    Ok(format!("n=831/1663/3389/6781/13565/26623 all R=2 exhaustively, partitions 33 and 66 valid, {:.1?}", t.elapsed()))
}

fn criterion4(chain: &mut Chain) -> Check {
    let t = Instant::now();
    let r21 = build(chain, "r21R3", ConstructionSpec::new(Variant::QM4_3, "ok", "pok", 4))?;
    ensure((r21.r(), r21.n()) == (21, 303), || "r21 shape".into())?;
    ensure(radius_of(&r21.matrix().unwrap(), 3)? == Some(3), || "r21 radius".into())?;
    let spec = ConstructionSpec::new(Variant::QM5_3, "golay", "trivial", 5).with_inner("kr", "pkr");
    let r26 = build(chain, "r26R3", spec)?;
    ensure((r26.r(), r26.n()) == (26, 818), || "r26 shape".into())?;
    ensure(radius_of(&r26.matrix().unwrap(), 3)? == Some(3), || "r26 radius".into())?;
    ensure(count_of(r26.as_ref(), "derived") == Some(35), || "r26 (3,0) count".into())?;
    ensure(count_of(r26.as_ref(), "derived-l1") == Some(35), || "r26 (3,1) count".into())?;
    all_partitions_valid(r26.as_ref())?;
    Ok(format!("n=303 r=21 and n=818 r=26 R=3 exhaustively, 35-subset (3,0)/(3,1) partitions valid, {:.1?}", t.elapsed()))
}

fn criterion5(chain: &mut Chain) -> Check {
    let t = Instant::now();
    let spec = ConstructionSpec::new(Variant::QM4_4, "ok2", "trivial", 5).with_inner("kr", "pkr");
    let c = build(chain, "r31R4", spec)?;
    ensure((c.r(), c.n()) == (31, 690), || "r31 shape".into())?;
    let rep = verify::decoder_sample_verify(c.as_ref(), None, SAMPLE_TRIALS, 2024, true);
    ensure(rep.passed(), || format!("{} decoder failures, e.g. {:?}", rep.failures, rep.examples.first()))?;
    let mut detail = format!("n=690 r=31, {} sampled syndromes decoded with 0 failures", rep.trials);
    if std::env::var("QMCOVER_HEAVY").is_ok_and(|v| v == "1") {
        let budget = Budget { max_work: u64::MAX, max_bitmap_bytes: 1 << 30 };
        let cov = verify::covering_radius_exhaustive(&c.matrix().unwrap(), 4, &budget, true).map_err(|e| e.to_string())?;
        ensure(cov.radius == Some(4), || format!("exhaustive radius {:?}", cov.radius))?;
        detail += ", exhaustive R=4 confirmed";
    }
    Ok(format!("{detail}, {:.1?}", t.elapsed()))
}

fn criterion6() -> Outcome {
    let mut problems: Vec<String> = Vec::new();
    let mut documented: Vec<String> = Vec::new();
    let mut cells = 0usize;
    // cells printed truncated where every other cell is rounded
    let known = [(2u32, 26u32), (3, 21)];
    for radius in [2u32, 3] {
        let published = tables::published_table(radius).unwrap();
        let rendered = match tables::render_table(radius, 2, 64) {
            Ok(r) => r,
            Err(e) => return Outcome { pass: false, detail: e.to_string(), documented_only: false },
        };
        for (pr, row) in published.iter().zip(&rendered) {
            cells += 2;
            if pr.r != row.r || pr.n != row.n {
                problems.push(format!("R={radius} r={} n {} vs {}", pr.r, row.n, pr.n));
            }
            let want = tables::normalize_density(pr.density);
            let integral = !want.contains('.') && row.density.trim_end_matches('0').trim_end_matches('.') == want;
            if row.density != want && !integral {
                let msg = format!("R={radius} r={} density {} vs printed {}", pr.r, row.density, pr.density);
                if known.contains(&(radius, pr.r)) {
                    documented.push(msg);
                } else {
                    problems.push(msg);
                }
            }
            if pr.new {
                cells += 1;
                if row.delta != tables::parse_cell(pr.delta) {
                    problems.push(format!("R={radius} r={} delta {:?} vs {}", pr.r, row.delta, pr.delta));
                }
            }
        }
    }
    for (r, d) in [((10u32, 2u32), "1.29590"), ((18, 2), "1.31873"), ((28, 2), "1.32026"), ((21, 3), "2.21090"), ((26, 3), "1.35935"), ((64, 2), "1.32031"), ((62, 3), "1.36433")] {
        let n = tables::render_table(r.1, r.0, r.0).ok().and_then(|v| v.first().map(|x| x.n)).unwrap_or(0);
        let got = density(n, r.0, r.1).to_decimal(5);
        if got != d && !known.contains(&(r.1, r.0)) {
            problems.push(format!("highlighted density r={} R={}: {got} vs {d}", r.0, r.1));
        }
    }
    // closed forms against direct evaluation
    for r in 2..=64u32 {
        let e = |c: i128, num: i128, sub: i128| -> u64 {
            let v = if num >= 0 { c << num } else { c >> (-num) };
            (v - sub) as u64
        };
        let checks: [(Bound, bool, i128, i128, i128); 6] = [
            (Bound::Phi, r % 2 == 0 && (r >= 28 || matches!(r, 10 | 18 | 20)), 26, r as i128 / 2 - 4, 1),
            (Bound::PhiHat, matches!(r, 22 | 24 | 26), 53, r as i128 / 2 - 5, 3),
            (Bound::Upsilon, r == 26 || (r % 3 == 2 && r >= 44), 819, (r as i128 - 26) / 3, 1),
            (Bound::UpsilonHat, matches!(r, 38 | 41), 820, (r as i128 - 26) / 3, 2),
            (Bound::Fam4New, r % 4 == 0 && (r == 40 || r >= 68), 2943, r as i128 / 4 - 10, 1),
            (Bound::Fam4Sporadic, r % 4 == 0 && r >= 48, 2944, r as i128 / 4 - 10, 3),
        ];
        for (b, defined, c, exp, sub) in checks {
            match (defined, tables::eval_bound(b, r)) {
                (true, Ok(v)) if v == e(c, exp, sub) => {}
                (false, Err(_)) => {}
                (_, got) => problems.push(format!("{b:?}({r}) = {got:?}")),
            }
        }
    }
    let pass = problems.is_empty() && documented.is_empty();
    let detail = if pass {
        format!("{cells} n/density/delta cells and all closed forms match")
    } else {
        let mut all = problems.clone();
        all.extend(documented.iter().map(|d| format!("{d} (printed value is truncated, not rounded)")));
        format!("{} of {cells} cells differ: {}", all.len(), all.join("; "))
    };
    Outcome { pass, detail, documented_only: problems.is_empty() }
}

fn criterion7(chain: &mut Chain) -> Check {
    let t = Instant::now();
    let mut exhaustive = 0;
    let mut sampled = 0;
    for radius in [2u32, 3, 4] {
        for step in tables::generate_family(radius, 64) {
            if step.needs_import {
                continue;
            }
            let code = match chain.get(&step.name) {
                Some(_) if step.role == StepRole::Dependency => continue,
                _ => build(chain, &step.name, step.spec.clone())?,
            };
            ensure(code.n() == step.expected_n, || format!("{} n={} expected {}", step.name, code.n(), step.expected_n))?;
            if step.role != StepRole::Dependency {
                let bound = tables::new_length(step.r, step.radius);
                ensure(Some(code.n()) == bound, || format!("{} n={} vs bound {bound:?}", step.name, code.n()))?;
            }
            for (name, count) in &step.partitions {
                ensure(count_of(code.as_ref(), name) == Some(*count), || format!("{} {name} count", step.name))?;
            }
            if radius == 2 && step.r >= 42 {
                let want = (1u64 << (step.r / 4 - 2)) + 1;
                ensure(count_of(code.as_ref(), "derived") == Some(want), || format!("{} p(H) is not 2^λ+1", step.name))?;
            }
            if radius <= 3 {
                let published = tables::published_table(radius).unwrap().iter().find(|p| p.r == step.r);
                if let Some(pr) = published.filter(|p| p.new) {
                    let rendered = tables::chain_partition_sizes(step.r, radius);
                    for k in 0..3 {
                        if let Some(v) = tables::parse_cell(pr.p[k]) {
                            ensure(rendered[k] == Some(v), || format!("{} p({k}) {:?} vs printed {v}", step.name, rendered[k]))?;
                        }
                    }
                }
            }
            let frontier = match radius {
                2 => 28,
                3 => 26,
                _ => 0,
            };
            if step.r <= frontier {
                ensure(radius_of(&code.matrix().unwrap(), radius)? == Some(radius), || format!("{} radius", step.name))?;
                all_partitions_valid(code.as_ref())?;
                exhaustive += 1;
            } else {
                let rep = verify::decoder_sample_verify(code.as_ref(), None, SAMPLE_TRIALS, step.r as u64, true);
                ensure(rep.passed(), || format!("{}: {:?}", step.name, rep.examples.first()))?;
                for k in 0..code.partitions().len() {
                    let rep = verify::decoder_sample_verify(code.as_ref(), Some(k), SAMPLE_TRIALS / 10, step.r as u64, true);
                    ensure(rep.passed(), || format!("{} partition {k}: {:?}", step.name, rep.examples.first()))?;
                }
                sampled += 1;
            }
        }
    }
    Ok(format!("{exhaustive} chain codes exhaustive, {sampled} sampled ({SAMPLE_TRIALS} trials each), all n and p(H) match, {:.1?}", t.elapsed()))
}

fn criterion8() -> Check {
    let h = seeds::kr_code().matrix.unwrap();
    let mut cfg = SearchConfig::new(2, 0, 16);
    cfg.budget = std::time::Duration::from_secs(60);
    let out = search::search_partition(&h, &cfg).map_err(|e| e.to_string())?;
    ensure(out.partition.len() <= 16 && partition_valid(&h, &out.partition)?, || "search result".into())?;
    let (pkr, pkr_star) = seeds::kr_partitions();
    let pins: Vec<usize> = seeds::KR_STAR_PINS.iter().map(|i| i - 1).collect();
    ensure(search::refine_partition(&pkr, &pins) == pkr_star, || "refinement differs from P_KR*".into())?;
    Ok(format!("greedy merge found a certified {}-subset partition in {:.2?}; P_KR refines to P_KR*", out.partition.len(), out.elapsed))
}

fn criterion9() -> Check {
    for m in 1..=8 {
        let f = FieldContext::with_default_poly(m).map_err(|e| e.to_string())?;
        let q = f.size();
        for a in 0..q {
            ensure(f.mul(a, 1) == a, || format!("m={m} identity"))?;
            if a != 0 {
                ensure(f.inv(a).is_some_and(|i| f.mul(a, i) == 1), || format!("m={m} inverse of {a}"))?;
            }
            for b in 0..q {
                let ab = f.mul(a, b);
                ensure(ab == f.mul(b, a), || format!("m={m} commutativity"))?;
                for c in 0..q {
                    ensure(f.mul(ab, c) == f.mul(a, f.mul(b, c)), || format!("m={m} associativity"))?;
                    ensure(f.mul(a, b ^ c) == ab ^ f.mul(a, c), || format!("m={m} distributivity"))?;
                }
            }
        }
    }
    let mut chain = Chain::with_seeds();
    let polys: Vec<u32> = (16..32).filter(|&p| gf2m::is_irreducible(p, 4)).collect();
    for &poly in &polys {
        for (v, start, part) in [(Variant::QM4_2, "kr", "pkr-star"), (Variant::QM4_3, "ok", "pok")] {
            let mut spec = ConstructionSpec::new(v, start, part, 4);
            spec.poly = Some(poly);
            let c = build(&mut chain, &format!("{v}-{poly:x}"), spec)?;
            let want = v.radius();
            ensure(radius_of(&c.matrix().unwrap(), want)? == Some(want), || format!("{v} poly {poly:#x}"))?;
        }
    }
    let r18 = build(&mut chain, "r18", ConstructionSpec::new(Variant::QM4_2, "kr", "pkr-star", 4))?;
    let mut matrices: Vec<ParityCheckMatrix> =
        seeds::SEED_NAMES.iter().map(|n| seeds::seed_by_name(n).unwrap().matrix.unwrap()).collect();
    matrices.push(r18.matrix().unwrap());
    for h in &matrices {
        let back = ParityCheckMatrix::parse_hex(&h.emit_hex()).map_err(|e| e.to_string())?;
        ensure(&back == h, || "hex round trip".into())?;
    }
    for h in &matrices[..4] {
        let b = Budget::default();
        let par = verify::covering_radius_exhaustive(h, 4, &b, true).map_err(|e| e.to_string())?;
        let ser = verify::covering_radius_exhaustive(h, 4, &b, false).map_err(|e| e.to_string())?;
        ensure(par == ser, || "parallel and serial coverage reports differ".into())?;
    }
    let a = verify::decoder_sample_verify(r18.as_ref(), Some(0), 50_000, 5, true);
    let b = verify::decoder_sample_verify(r18.as_ref(), Some(0), 50_000, 5, false);
    ensure(a.failures == b.failures && a.cases == b.cases, || "parallel and serial sampling differ".into())?;
    let mut refined = 0;
    for name in seeds::SEED_NAMES {
        let rec = seeds::seed_by_name(name).unwrap();
        let h = rec.matrix.clone().unwrap();
        for np in &rec.partitions {
            for pins in [vec![0usize], vec![0, 2, 4], (0..rec.n as usize).step_by(3).collect()] {
                let p = search::refine_partition(&np.partition, &pins);
                ensure(partition_valid(&h, &p)?, || format!("{name} {} refined at {pins:?}", np.name))?;
                refined += 1;
            }
        }
    }
    Ok(format!(
        "field axioms m<=8, {} polynomials at m=4 agree, hex round trips, parallel == serial, {refined} refinements valid",
        polys.len()
    ))
}

fn main() -> ExitCode {
    let mut chain = Chain::with_seeds();
    let mut lines = Vec::new();
    let mut gate = true;
    let wrap = |c: Check| match c {
        Ok(detail) => Outcome { pass: true, detail, documented_only: false },
        Err(detail) => Outcome { pass: false, detail, documented_only: false },
    };
    let mut record = |k: u32, out: Outcome| {
        let mark = if out.pass { "PASS" } else { "FAIL" };
        let line = format!("criterion {k}: {mark}: {}", out.detail);
        println!("{line}");
        if !out.pass && !out.documented_only {
            gate = false;
        }
        lines.push(line);
    };
    record(1, wrap(criterion1()));
    record(2, wrap(criterion2()));
    record(3, wrap(criterion3(&mut chain)));
    record(4, wrap(criterion4(&mut chain)));
    record(5, wrap(criterion5(&mut chain)));
    record(6, criterion6());
    record(7, wrap(criterion7(&mut chain)));
    record(8, wrap(criterion8()));
    record(9, wrap(criterion9()));
    if gate {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
