use std::collections::HashMap;

use gw_core::engine::{
    dimension_admissible, divisor_lift, kontsevich_nd, string_reduce, CorrelatorKey, Engine,
    PrimaryBackend, Route,
};
use gw_core::{rat, ratio, Error, NovikovDegree, Rational, SeriesMonomial, TruncationPolicy, VarId};
use num_traits::Zero;

fn key(s: &str) -> CorrelatorKey {
    s.parse().unwrap()
}

#[test]
fn selection_rule_examples() {
    let p2 = gw_core::target::preset("P2").unwrap();
    assert!(dimension_admissible(&p2, &key("deg=1;ins=(0,3)(0,3)")));
    assert!(!dimension_admissible(&p2, &key("deg=1;ins=(0,3)")));
    let pt = gw_core::target::preset("point").unwrap();
    assert!(dimension_admissible(&pt, &key("deg=;ins=(0,1)(0,1)(0,1)")));
}

#[test]
fn basic_values() {
    let pt = Engine::for_preset("point").unwrap();
    assert_eq!(pt.invariant(&key("deg=;ins=(0,1)(0,1)(0,1)")).unwrap(), rat(1));
    assert_eq!(pt.invariant(&key("deg=;ins=(2,1)(0,1)(0,1)(0,1)(0,1)")).unwrap(), rat(1));
    assert_eq!(pt.invariant(&key("deg=;ins=(1,1)(1,1)(0,1)(0,1)(0,1)")).unwrap(), rat(2));

    let p2 = Engine::for_preset("P2").unwrap();
    assert_eq!(p2.invariant(&key("deg=3;ins=(0,3)(0,3)(0,3)(0,3)(0,3)(0,3)(0,3)(0,3)")).unwrap(), rat(12));
    assert_eq!(p2.invariant(&key("deg=1;ins=(0,3)(0,3)")).unwrap(), rat(1));
    assert_eq!(p2.invariant(&key("deg=1;ins=(0,2)(0,3)(0,3)")).unwrap(), rat(1));

    let p1 = Engine::for_preset("P1").unwrap();
    assert_eq!(p1.invariant(&key("deg=1;ins=(0,2)(0,2)(0,2)")).unwrap(), rat(1));
    assert_eq!(p1.invariant(&key("deg=1;ins=")).unwrap(), rat(1));
    assert_eq!(p1.invariant(&key("deg=1;ins=(1,1)")).unwrap(), rat(-2));
}

#[test]
fn reductions_and_errors() {
    let p2 = gw_core::target::preset("P2").unwrap();
    let lc = string_reduce(&p2, &key("deg=0;ins=(0,1)(0,2)(0,2)")).unwrap();
    assert_eq!(lc.constant, rat(1));
    assert!(matches!(string_reduce(&p2, &key("deg=0;ins=(0,2)(0,2)(0,2)")), Err(Error::NotApplicable(_))));
    let pt = gw_core::target::preset("point").unwrap();
    assert!(matches!(divisor_lift(&pt, &key("deg=;ins=(0,1)")), Err(Error::NotApplicable(_))));
    let mut p2r = p2.clone();
    p2r.divisors[0].pairing = vec![0];
    assert!(matches!(divisor_lift(&p2r, &key("deg=1;ins=(0,3)(0,3)")), Err(Error::TargetUnsupported(_))));
}

#[test]
fn routes_agree_on_p2() {
    let e = Engine::for_preset("P2").unwrap();
    let k = key("deg=1;ins=(0,3)(0,3)(1,1)");
    let canonical = e.invariant(&k).unwrap();
    let mut seen = 0;
    for r in e.applicable_routes(&k) {
        if let Some(v) = e.invariant_by_route(&k, r).unwrap() {
            assert_eq!(v, canonical, "{r:?}");
            seen += 1;
        }
    }
    assert!(seen >= 3);
    assert_eq!(e.invariant_by_route(&k, Route::Dilaton).unwrap(), Some(rat(0)));
    assert_eq!(canonical, rat(0));
}

#[test]
fn lift_orders_agree_for_a_single_descendant() {
    let e = Engine::for_preset("P2").unwrap();
    let k = key("deg=1;ins=(2,1)");
    let v = e.invariant(&k).unwrap();
    assert_eq!(e.invariant_by_route(&k, Route::Lift).unwrap(), Some(v));
}

#[test]
fn free_energy_coefficients() {
    let e = Engine::for_preset("P2").unwrap();
    let pol = TruncationPolicy::uniform(8, 0, 3, 1);
    let f = e.free_energy(&pol).unwrap();
    let pt = VarId::new(0, 3);
    let m = |n, d| SeriesMonomial::new([(pt, n)], NovikovDegree(vec![d]));
    assert_eq!(f.coefficient(&m(2, 1)), ratio(1, 2));
    assert_eq!(f.coefficient(&m(8, 3)), rat(12) / rat(40320));
    for (mono, _) in f.iter() {
        if mono.degree().is_zero() {
            assert_eq!(mono.total(), 3);
        }
    }
}

#[test]
fn table_backend_matches_built_in() {
    let ts = gw_core::target::preset("P1").unwrap();
    let table = PrimaryBackend::table([(key("deg=1;ins=(0,2)(0,2)(0,2)"), rat(1))]).unwrap();
    let a = Engine::new(ts.clone(), table).unwrap();
    let b = Engine::for_preset("P1").unwrap();
    let pol = TruncationPolicy::uniform(4, 2, 2, 1);
    assert_eq!(*a.free_energy(&pol).unwrap(), *b.free_energy(&pol).unwrap());
    assert!(PrimaryBackend::table([(key("deg=1;ins=(1,2)"), rat(1))]).is_err());
    let empty = Engine::new(ts, PrimaryBackend::table([]).unwrap()).unwrap();
    assert!(matches!(empty.invariant(&key("deg=1;ins=(0,2)(0,2)(0,2)")), Err(Error::TargetUnsupported(_))));
}

#[test]
fn cache_mismatch_rejected() {
    let ts = gw_core::target::preset("P2").unwrap();
    let cache = std::sync::Arc::new(gw_core::engine::InvariantCache::new("nope"));
    assert!(matches!(
        Engine::with_cache(ts, PrimaryBackend::ProjPlane, cache),
        Err(Error::CacheMismatch(_))
    ));
}

#[test]
fn nd_values() {
    let expect: HashMap<u32, i64> = [(1, 1), (2, 1), (3, 12), (4, 620), (5, 87304), (6, 26312976)].into();
    for (d, n) in expect {
        assert_eq!(kontsevich_nd(d), rat(n));
    }
    assert!(!kontsevich_nd(2).is_zero());
    let _: Rational = kontsevich_nd(1);
}

#[test]
fn cache_contents_do_not_depend_on_evaluation_order() {
    let pol = TruncationPolicy::uniform(4, 2, 2, 1);
    let serial = Engine::for_preset("P2").unwrap();
    let s = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    s.install(|| serial.free_energy(&pol).unwrap());
    let parallel = Engine::for_preset("P2").unwrap();
    let p = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    p.install(|| parallel.free_energy(&pol).unwrap());
    assert_eq!(serial.cache().to_text(), parallel.cache().to_text());

    // Reloading a saved cache and recomputing leaves it byte-identical.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p2.cache");
    serial.cache().save(&path).unwrap();
    let fp = serial.target().fingerprint();
    let loaded = std::sync::Arc::new(gw_core::engine::InvariantCache::load_or_new(&path, &fp).unwrap());
    let warm = Engine::with_cache(serial.target().clone(), PrimaryBackend::ProjPlane, loaded).unwrap();
    assert_eq!(*warm.free_energy(&pol).unwrap(), *serial.free_energy(&pol).unwrap());
    assert_eq!(warm.cache().to_text(), std::fs::read_to_string(&path).unwrap());
}
