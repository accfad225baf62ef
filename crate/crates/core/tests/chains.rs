//! The construction chains behind the improved table rows.

use qmcover::construct::CodeNode;
use qmcover::tables::{self, Chain, StepRole};
use qmcover::verify;

fn check_chain(radius: u32, trials: u64) {
    let mut chain = Chain::with_seeds();
    for step in tables::generate_family(radius, 64) {
        if step.needs_import {
            assert!(chain.build(&step.name, &step.spec).is_err());
            continue;
        }
        let t = std::time::Instant::now();
        let code = chain.build(&step.name, &step.spec).unwrap_or_else(|e| panic!("{}: {e}", step.name));
        assert_eq!(code.r(), step.r, "{}", step.name);
        assert_eq!(code.n(), step.expected_n, "{}", step.name);
        if step.role != StepRole::Dependency {
            assert_eq!(Some(code.n()), tables::new_length(step.r, step.radius));
        }
        let infos = code.partitions();
        for (name, count) in &step.partitions {
            let info = infos.iter().find(|i| &i.name == name).unwrap_or_else(|| panic!("{} lacks {name}", step.name));
            assert_eq!(info.count, *count, "{} {name}", step.name);
        }
        for k in std::iter::once(None).chain((0..infos.len()).map(Some)) {
            let rep = verify::decoder_sample_verify(code.as_ref(), k, trials, 11, true);
            assert!(rep.passed(), "{} {:?}: {:?}", step.name, k, rep.examples);
        }
        println!("{} n={} {:?} {:?}", step.name, code.n(), infos.iter().map(|i| (&i.name, i.count)).collect::<Vec<_>>(), t.elapsed());
    }
}

#[test]
fn radius_two_chain_up_to_64() {
    check_chain(2, 20_000);
}

#[test]
fn radius_three_chain_up_to_64() {
    check_chain(3, 20_000);
}

#[test]
fn radius_four_steps() {
    check_chain(4, 20_000);
}
