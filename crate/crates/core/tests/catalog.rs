//! Exhaustive checks over every subset of the seed catalog.

use std::collections::BTreeSet;

use affloop_core::catalog::*;

fn subsets(cat: &Catalog) -> Vec<BTreeSet<String>> {
    let ids: Vec<&String> = cat.patterns.keys().collect();
    (0u32..1 << ids.len())
        .map(|mask| ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| (*id).clone()).collect())
        .collect()
}

fn conflicts(cat: &Catalog, a: &str, b: &str) -> bool {
    cat.patterns[a].targets(RelationKind::Conflicts).any(|t| t == b)
        || cat.patterns[b].targets(RelationKind::Conflicts).any(|t| t == a)
}

#[test]
fn seed_catalog_has_512_subsets() {
    let cat = seed_catalog();
    assert_eq!(cat.patterns.len(), 9);
    assert!(validate_catalog(&cat).is_empty());
    assert_eq!(subsets(&cat).len(), 512);
}

#[test]
fn recommendations_never_conflict() {
    let cat = seed_catalog();
    for s in subsets(&cat) {
        let (active, _) = effective_set(&cat, &s).unwrap();
        for goal in [ArousalEffect::Raise, ArousalEffect::Lower, ArousalEffect::Neutral] {
            let rec = recommend(&cat, &s, goal, cat.patterns.len()).unwrap();
            for r in &rec {
                assert!(!active.contains(r), "{r} already active for {s:?}");
                assert!(active.iter().all(|a| !conflicts(&cat, a, r)), "{r} conflicts with {active:?}");
            }
            assert_eq!(rec, recommend(&cat, &s, goal, cat.patterns.len()).unwrap());
            let top3 = recommend(&cat, &s, goal, 3).unwrap();
            assert_eq!(top3[..], rec[..rec.len().min(3)]);
        }
    }
}

#[test]
fn effective_set_is_monotone_and_idempotent() {
    let cat = seed_catalog();
    let all = subsets(&cat);
    let closed: Vec<BTreeSet<String>> = all.iter().map(|s| effective_set(&cat, s).unwrap().0).collect();
    for (s, active) in all.iter().zip(&closed) {
        assert!(s.is_subset(active));
        assert_eq!(&effective_set(&cat, active).unwrap().0, active);
        let (_, pairs) = effective_set(&cat, s).unwrap();
        for (a, b) in &pairs {
            assert!(a < b && active.contains(a) && active.contains(b) && conflicts(&cat, a, b));
        }
    }
    for (i, s) in all.iter().enumerate() {
        for (j, t) in all.iter().enumerate() {
            if s.is_subset(t) {
                assert!(closed[i].is_subset(&closed[j]), "{s:?} ⊆ {t:?}");
            }
        }
    }
}

#[test]
fn everything_selected_leaves_nothing_to_recommend() {
    let cat = seed_catalog();
    let all: BTreeSet<String> = cat.patterns.keys().cloned().collect();
    assert!(recommend(&cat, &all, ArousalEffect::Raise, 5).unwrap().is_empty());
}

#[test]
fn seed_file_loads_like_the_builtin() {
    assert_eq!(load_catalog(SEED_CATALOG.as_bytes()).unwrap(), seed_catalog());
}
