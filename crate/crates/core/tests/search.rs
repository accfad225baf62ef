//! Partition search and refinement on the seed codes.

use std::time::Duration;

use qmcover::code::Partition;
use qmcover::search::{refine_partition, refine_subsets, search_partition, SearchConfig, SearchError, Strategy};
use qmcover::seeds;
use qmcover::verify::{verify_partition, Budget};

#[test]
fn greedy_on_kr_reaches_sixteen() {
    let h = seeds::kr_code().matrix.unwrap();
    let mut cfg = SearchConfig::new(2, 0, 16);
    cfg.budget = Duration::from_secs(60);
    let out = search_partition(&h, &cfg).unwrap();
    println!("kr: {} subsets, {:?}, {} attempts, {:?}", out.partition.len(), out.strategy, out.attempts, out.elapsed);
    assert!(out.partition.len() <= 16);
    assert!(verify_partition(&h, &out.partition, &Budget::default(), true).unwrap().valid);
}

#[test]
fn greedy_on_ok_with_ell_one() {
    let h = seeds::ok_code().matrix.unwrap();
    let mut cfg = SearchConfig::new(3, 1, 18);
    cfg.budget = Duration::from_secs(60);
    let out = search_partition(&h, &cfg).unwrap();
    println!("ok: {} subsets, {:?}", out.partition.len(), out.elapsed);
    assert!(out.report.valid);
}

#[test]
fn annealing_on_kr() {
    let h = seeds::kr_code().matrix.unwrap();
    let mut cfg = SearchConfig::new(2, 0, 16);
    cfg.strategy = Strategy::Annealing;
    cfg.restarts = 4;
    let out = search_partition(&h, &cfg).unwrap();
    println!("anneal kr: {} subsets, {:?}", out.partition.len(), out.elapsed);
    assert!(out.report.valid);
}

#[test]
fn max_subsets_n_gives_trivial() {
    let h = seeds::hamming_matrix(3);
    let mut cfg = SearchConfig::new(1, 0, 7);
    cfg.restarts = 1;
    let out = search_partition(&h, &cfg).unwrap();
    assert!(out.partition.len() <= 7);
    let t = Partition::trivial(7, 1, 0).unwrap();
    assert!(verify_partition(&h, &t, &Budget::default(), false).unwrap().valid);
}

#[test]
fn below_radius_is_rejected() {
    let h = seeds::kr_code().matrix.unwrap();
    let cfg = SearchConfig::new(2, 0, 1);
    assert!(matches!(search_partition(&h, &cfg), Err(SearchError::Config { .. })));
}

#[test]
fn refining_pkr_gives_pkr_star() {
    let (pkr, pkr_star) = seeds::kr_partitions();
    let pins: Vec<usize> = seeds::KR_STAR_PINS.iter().map(|i| i - 1).collect();
    assert_eq!(refine_partition(&pkr, &pins), pkr_star);
    let split = refine_subsets(&pkr, &[0, 1, 2]);
    assert_eq!(split.len(), 11 - 3 + 12);
}
