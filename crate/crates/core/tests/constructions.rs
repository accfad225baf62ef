//! Constructions checked against the exhaustive verifier and the decoder.

use std::sync::Arc;

use qmcover::construct::{construct, CodeNode, ConstructionSpec, QmCode, Variant};
use qmcover::tables::Chain;
use qmcover::verify::{self, Budget};

fn exhaustive_radius(code: &dyn CodeNode) -> Option<u32> {
    let h = code.matrix().expect("listable");
    verify::covering_radius_exhaustive(&h, code.radius(), &Budget::default(), true).unwrap().radius
}

fn all_partitions_valid(code: &dyn CodeNode) {
    let h = code.matrix().unwrap();
    for (k, info) in code.partitions().iter().enumerate() {
        let p = code.partition(k).unwrap();
        assert_eq!(p.len() as u64, info.count, "{} {}", code.name(), info.name);
        let rep = verify::verify_partition(&h, &p, &Budget::default(), true).unwrap();
        assert!(rep.valid, "{} partition {} fails at {:?}", code.name(), info.name, rep.witness);
    }
}

fn decoder_clean(code: &dyn CodeNode, trials: u64) {
    for k in std::iter::once(None).chain((0..code.partitions().len()).map(Some)) {
        let rep = verify::decoder_sample_verify(code, k, trials, 7, true);
        assert!(rep.passed(), "{} part {:?}: {:?}", code.name(), k, rep.examples);
    }
}

fn build(chain: &mut Chain, name: &str, spec: ConstructionSpec) -> Arc<QmCode> {
    chain.build(name, &spec).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn qm4_2_from_kr_at_m4() {
    let mut chain = Chain::with_seeds();
    let c = build(&mut chain, "r18", ConstructionSpec::new(Variant::QM4_2, "kr", "pkr-star", 4));
    assert_eq!((c.r(), c.n()), (18, 831));
    assert_eq!(exhaustive_radius(c.as_ref()), Some(2));
    all_partitions_valid(c.as_ref());
    decoder_clean(c.as_ref(), 50_000);
}

#[test]
fn qm6_2_from_kr_at_m5() {
    let mut chain = Chain::with_seeds();
    let c = build(&mut chain, "r20", ConstructionSpec::new(Variant::QM6_2, "kr", "pkr", 5));
    assert_eq!((c.r(), c.n()), (20, 1663));
    assert_eq!(exhaustive_radius(c.as_ref()), Some(2));
    all_partitions_valid(c.as_ref());
    decoder_clean(c.as_ref(), 50_000);
}

#[test]
fn qm3_2_from_kr_at_m6() {
    let mut chain = Chain::with_seeds();
    let c = build(&mut chain, "r22", ConstructionSpec::new(Variant::QM3_2, "kr", "pkr", 6));
    assert_eq!((c.r(), c.n()), (22, 3389));
    assert_eq!(exhaustive_radius(c.as_ref()), Some(2));
    decoder_clean(c.as_ref(), 50_000);
}

#[test]
fn qm4_3_from_ok_at_m4() {
    let mut chain = Chain::with_seeds();
    let c = build(&mut chain, "r21R3", ConstructionSpec::new(Variant::QM4_3, "ok", "pok", 4));
    assert_eq!((c.r(), c.n()), (21, 303));
    assert_eq!(exhaustive_radius(c.as_ref()), Some(3));
    all_partitions_valid(c.as_ref());
    decoder_clean(c.as_ref(), 50_000);
}

#[test]
fn qm2_2_and_qm1_2_small() {
    let mut chain = Chain::with_seeds();
    for (v, m, part) in [(Variant::QM2_2, 4, "pkr"), (Variant::QM1_2, 4, "pkr"), (Variant::QM1_2, 3, "pkr")] {
        let name = format!("{v}-{m}");
        let spec = ConstructionSpec::new(v, "kr", part, m);
        match chain.build(&name, &spec) {
            Ok(c) => {
                assert_eq!(exhaustive_radius(c.as_ref()), Some(2), "{name}");
                all_partitions_valid(c.as_ref());
                decoder_clean(c.as_ref(), 20_000);
            }
            Err(e) => println!("{name}: {e}"),
        }
    }
}

#[test]
fn start_partition_is_rechecked() {
    let chain = Chain::with_seeds();
    let kr = chain.get("kr").unwrap();
    let spec = ConstructionSpec::new(Variant::QM2_4, "kr", "pkr", 4);
    assert!(construct("x", &spec, kr, None).is_err());
}

#[test]
fn qm5_3_from_golay_at_m5() {
    let mut chain = Chain::with_seeds();
    let spec = ConstructionSpec::new(Variant::QM5_3, "golay", "trivial", 5).with_inner("kr", "pkr");
    let c = build(&mut chain, "r26R3", spec);
    assert_eq!((c.r(), c.n()), (26, 818));
    let t = std::time::Instant::now();
    assert_eq!(exhaustive_radius(c.as_ref()), Some(3));
    println!("r26 radius {:?}", t.elapsed());
    all_partitions_valid(c.as_ref());
    println!("r26 partitions {:?} {:?}", t.elapsed(), c.partitions());
    decoder_clean(c.as_ref(), 50_000);
}

#[test]
fn qm5_2_from_r18_at_m5() {
    let mut chain = Chain::with_seeds();
    build(&mut chain, "r18", ConstructionSpec::new(Variant::QM4_2, "kr", "pkr-star", 4));
    let c = build(&mut chain, "r28", ConstructionSpec::new(Variant::QM5_2, "r18", "derived", 5));
    assert_eq!((c.r(), c.n()), (28, 26623));
    decoder_clean(c.as_ref(), 50_000);
    let t = std::time::Instant::now();
    assert_eq!(exhaustive_radius(c.as_ref()), Some(2));
    println!("r28 radius {:?}", t.elapsed());
    all_partitions_valid(c.as_ref());
    println!("r28 partitions {:?} {:?}", t.elapsed(), c.partitions());
}

#[test]
fn qm4_4_from_ok2_sampled() {
    let mut chain = Chain::with_seeds();
    let spec = ConstructionSpec::new(Variant::QM4_4, "ok2", "trivial", 5).with_inner("kr", "pkr");
    let c = build(&mut chain, "r31R4", spec);
    assert_eq!((c.r(), c.n()), (31, 690));
    println!("{:?}", c.partitions());
    decoder_clean(c.as_ref(), 100_000);
}
