//! Randomized properties of the field, the text formats, the verifier and
//! partition refinement.

use proptest::prelude::*;
use qmcover::code::{ParityCheckMatrix, Partition};
use qmcover::gf2m::{default_poly, FieldContext};
use qmcover::search::{refine_partition, refine_subsets};
use qmcover::seeds;
use qmcover::verify::{covering_radius_exhaustive, verify_partition, Budget};

fn field_and_elems() -> impl Strategy<Value = (u32, u32, u32, u32)> {
    (1u32..=10).prop_flat_map(|m| {
        let q = 1u32 << m;
        (Just(m), 0..q, 0..q, 0..q)
    })
}

fn matrix() -> impl Strategy<Value = ParityCheckMatrix> {
    (3u32..=10).prop_flat_map(|r| {
        prop::collection::vec(1u64..(1u64 << r), 0..24)
            .prop_map(move |extra| ParityCheckMatrix::identity_prefixed(r, &extra).unwrap())
    })
}

proptest! {
    #[test]
    fn field_axioms((m, a, b, c) in field_and_elems()) {
        let f = FieldContext::new(m, default_poly(m).unwrap()).unwrap();
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
        prop_assert_eq!(f.mul(a, 1), a);
        match f.inv(a) {
            Some(x) => prop_assert_eq!(f.mul(a, x), 1),
            None => prop_assert_eq!(a, 0),
        }
        prop_assert_eq!(f.mul(f.sqrt(a), f.sqrt(a)), a);
    }

    #[test]
    fn hex_round_trip(h in matrix()) {
        prop_assert_eq!(ParityCheckMatrix::parse_hex(&h.emit_hex()).unwrap(), h);
    }

    #[test]
    fn partition_text_round_trip(labels in prop::collection::vec(0u64..6, 3..40), ell in 0u32..=2) {
        let p = Partition::from_labels(&labels, 2, ell);
        prop_assume!(p.is_ok());
        let p = p.unwrap();
        prop_assert_eq!(Partition::parse(&p.emit()).unwrap(), p);
    }

    #[test]
    fn parallel_matches_serial(h in matrix()) {
        let budget = Budget::default();
        let serial = covering_radius_exhaustive(&h, h.r(), &budget, false).unwrap();
        let parallel = covering_radius_exhaustive(&h, h.r(), &budget, true).unwrap();
        prop_assert_eq!(serial.radius, parallel.radius);
        prop_assert_eq!(serial.layers, parallel.layers);
    }

    #[test]
    fn refinements_stay_valid(pins in prop::collection::vec(0usize..51, 0..20)) {
        let h = seeds::kr_code().matrix.unwrap();
        let (pkr, pkr_star) = seeds::kr_partitions();
        let budget = Budget::default();
        for base in [&pkr, &pkr_star] {
            let fine = refine_partition(base, &pins);
            prop_assert_eq!(fine.n(), 51);
            prop_assert!(fine.len() >= base.len());
            prop_assert!(verify_partition(&h, &fine, &budget, false).unwrap().valid);
        }
        let picks: Vec<usize> = pins.iter().map(|i| i % pkr.len()).collect();
        prop_assert!(verify_partition(&h, &refine_subsets(&pkr, &picks), &budget, false).unwrap().valid);
    }
}
