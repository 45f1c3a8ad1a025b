use std::collections::BTreeSet;

#[path = "support/mutations.rs"]
mod mutations;

use mutations::MUTATIONS;
use ontotrader_core::model::samples::{soleres_configuration, soleres_repository, soleres_system};
use ontotrader_core::model::*;
use proptest::prelude::*;

#[test]
fn soleres_validates_clean() {
    assert!(validate_system(&soleres_system()).is_clean());
    assert!(validate_repository(&soleres_repository()).is_clean());
    let r = validate_configuration(
        &soleres_configuration(),
        &soleres_system(),
        &soleres_repository(),
    );
    assert!(r.deployable, "{:?}", r.report);
}

#[test]
fn each_seeded_mutation_yields_its_rule() {
    for (what, mutate, expected) in MUTATIONS {
        let mut s = soleres_system();
        mutate(&mut s);
        let got = validate_system(&s).rules();
        assert_eq!(
            got,
            expected.iter().copied().collect::<BTreeSet<_>>(),
            "{what}"
        );
    }
}

#[test]
fn dropping_traders_dangles_only_their_users() {
    let mut s = soleres_system();
    s.nodes.iter_mut().for_each(|n| n.trading_modules.clear());
    let r = validate_system(&s);
    let dangling: BTreeSet<&str> = r
        .violations()
        .iter()
        .filter(|v| v.rule == Rule::DanglingRef)
        .map(|v| v.path.as_str())
        .collect();
    let users: BTreeSet<&str> = BTreeSet::from([
        "Node_1.ProcessingModule_1_1",
        "Node_1.QueryModule_1_1",
        "Node_2.QueryModule_2_1",
        "Node_3.QueryModule_3_1",
    ]);
    assert_eq!(dangling, users);
}

#[test]
fn configuration_mutations() {
    let (sys, repo) = (soleres_system(), soleres_repository());
    let rules = |cfg: &ConfigurationModel| validate_configuration(cfg, &sys, &repo).report.rules();

    let mut cfg = soleres_configuration();
    cfg.statements.remove(0);
    assert_eq!(rules(&cfg), BTreeSet::from(["unmapped-module"]));

    let mut cfg = soleres_configuration();
    let dup = cfg.statements[0].clone();
    cfg.statements.push(dup);
    assert_eq!(rules(&cfg), BTreeSet::from(["duplicate-mapping"]));

    let mut cfg = soleres_configuration();
    cfg.statements[0].impl_module = ModuleRef::new("Java_JADE.NoSuchImpl");
    assert_eq!(rules(&cfg), BTreeSet::from(["unresolved-ref"]));
}

proptest! {
    /// Any combination of seeded mutations is caught, and validation is a
    /// pure function of the model.
    #[test]
    fn combined_mutations_are_reported(
        // Dropping a whole kind would leave the edits of that kind nothing to edit.
        picks in prop::collection::btree_set(prop::sample::select(vec![0, 3, 4, 5, 6, 7, 8, 9, 10, 11]), 1..4),
    ) {
        let mut s = soleres_system();
        let mut expected = BTreeSet::new();
        for &i in &picks {
            (MUTATIONS[i].1)(&mut s);
            expected.extend(MUTATIONS[i].2.iter().copied());
        }
        let first = validate_system(&s);
        prop_assert!(!first.is_clean());
        prop_assert!(expected.iter().all(|r| first.rules().contains(r)), "{:?} vs {:?}", first.rules(), expected);
        prop_assert_eq!(first, validate_system(&s));
    }
}
