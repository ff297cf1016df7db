use std::collections::BTreeSet;

use aml::engine::{run_stable, FreshAllocator, NullOracle, RecyclingAllocator, DEFAULT_FUEL};
use aml::harness::{gen_case, gen_program, lift_equal, GenConfig};
use aml::propagate::propagate_stable;
use aml::store::{lift, lift_value, locations_in, reach, Location, Store};
use aml::syntax::{
    alpha_eq_value, parse_stable, parse_value, ChangeableExpr, Expr, Name, PrimOp, StableExpr, Term, Value,
};
use aml::trace::{strace_from_json, strace_to_json};
use proptest::prelude::*;

fn first_order(locs: u64) -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Unit),
        (-50i64..50).prop_map(Value::num),
        prop::sample::select(vec!["a", "b", "x"]).prop_map(Value::var),
    ];
    let leaf = if locs > 0 {
        prop_oneof![3 => leaf, 1 => (0..locs).prop_map(|n| Value::Loc(Location(n)))].boxed()
    } else {
        leaf.boxed()
    };
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Value::pair(a, b)),
            inner.clone().prop_map(Value::inl),
            inner.clone().prop_map(Value::inr),
            inner.prop_map(|b| Value::FunS(Name::new("f"), Name::new("a"), Box::new(StableExpr::Val(b)))),
        ]
    })
}

fn closed(v: &Value) -> Value {
    ["a", "b", "x"].iter().fold(v.clone(), |v, x| v.subst(&Name::new(x), &Value::Unit))
}

/// An acyclic store: cell `i` refers only to cells below `i`.
fn store_strategy() -> impl Strategy<Value = Store> {
    (1u64..6).prop_flat_map(|n| {
        (0..n)
            .map(|i| first_order(i).prop_map(move |v| (Location(i), closed(&v))))
            .collect::<Vec<_>>()
            .prop_map(|cells| cells.into_iter().collect::<Store>())
    })
}

fn program(seed: u64) -> StableExpr {
    gen_program(&GenConfig { seed, ..GenConfig::default() }).root
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let e = program(seed);
        prop_assert_eq!(parse_stable(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn value_round_trip(v in first_order(4)) {
        prop_assert_eq!(parse_value(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn subst_introduces_no_free_vars(v in first_order(0), w in first_order(0)) {
        let x = Name::new("x");
        let out = v.subst(&x, &w);
        let mut allowed: BTreeSet<Name> = v.free_vars();
        allowed.remove(&x);
        allowed.extend(w.free_vars());
        prop_assert!(out.free_vars().is_subset(&allowed));
        if w.is_closed() {
            prop_assert!(!out.free_vars().contains(&x));
        }
    }

    #[test]
    fn closed_substitutions_commute(v in first_order(0), w1 in first_order(0), w2 in first_order(0)) {
        let (x, y) = (Name::new("x"), Name::new("a"));
        let (w1, w2) = (closed(&w1), closed(&w2));
        let e = StableExpr::Val(v);
        prop_assert_eq!(e.subst(&x, &w1).subst(&y, &w2), e.subst(&y, &w2).subst(&x, &w1));
    }

    #[test]
    fn lookup_after_update(s in store_strategy(), n in 0u64..8, v in first_order(0)) {
        let l = Location(n);
        let v = closed(&v);
        let s2 = s.update(l, v.clone());
        prop_assert_eq!(s2.lookup(l).unwrap(), &v);
        for (k, w) in s.iter().filter(|(k, _)| *k != l) {
            prop_assert_eq!(s2.lookup(k).unwrap(), w);
        }
    }

    #[test]
    fn lift_is_deterministic_and_location_free(s in store_strategy(), v in first_order(6)) {
        let e = Expr::Value(closed(&v));
        match (lift(&e, &s), lift(&e, &s)) {
            (Ok((a, ra)), Ok((b, rb))) => {
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(&ra, &rb);
                prop_assert!(locations_in(&a).is_empty());
                prop_assert!(ra.is_subset(&s.dom()));
                prop_assert_eq!(reach(&e, &s).unwrap(), ra);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "lift is not deterministic"),
        }
    }

    #[test]
    fn prim_commutes_with_lift(s in store_strategy(), a in -20i64..20, b in -20i64..20) {
        // a primitive's result is location-free, so applying it before or
        // after lifting agrees
        let args = [Value::num(a), Value::num(b)];
        for op in PrimOp::ALL.into_iter().filter(|op| op.arity() == 2) {
            let direct = op.apply(&args).unwrap();
            let lifted_args: Vec<Value> = args.iter().map(|v| lift_value(v, &s).unwrap()).collect();
            prop_assert_eq!(lift_value(&direct, &s).unwrap(), op.apply(&lifted_args).unwrap());
        }
    }

    #[test]
    fn lift_commutes_with_closed_subst(s in store_strategy(), v in first_order(0), w in first_order(6)) {
        let x = Name::new("x");
        let w = closed(&w);
        if let Ok(lw) = lift_value(&w, &s) {
            let lhs = lift_value(&v.subst(&x, &w), &s);
            let rhs = lift_value(&v, &s).map(|lv| lv.subst(&x, &lw));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn lift_equal_is_reflexive_and_location_blind(v in first_order(0)) {
        let v = closed(&v);
        let s0 = Store::new().update(Location(0), v.clone());
        let s7 = Store::new().update(Location(7), v.clone());
        prop_assert_eq!(lift_equal(&Value::Loc(Location(0)), &s0, &Value::Loc(Location(7)), &s7), Ok(true));
        prop_assert!(alpha_eq_value(&v, &v));
    }

    #[test]
    fn null_fresh_runs_are_deterministic(seed in any::<u64>()) {
        let p = program(seed);
        let a = run_stable(&Store::new(), &p, &mut NullOracle, &mut FreshAllocator::new(), DEFAULT_FUEL);
        let b = run_stable(&Store::new(), &p, &mut NullOracle, &mut FreshAllocator::new(), DEFAULT_FUEL);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn recycling_runs_replay_from_their_seed(seed in any::<u64>(), alloc_seed in any::<u64>()) {
        let p = program(seed);
        let store: Store = (0..3).map(|i| (Location(i), Value::num(i as i64))).collect();
        let a = run_stable(&store, &p, &mut NullOracle, &mut RecyclingAllocator::new(alloc_seed), DEFAULT_FUEL);
        let b = run_stable(&store, &p, &mut NullOracle, &mut RecyclingAllocator::new(alloc_seed), DEFAULT_FUEL);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn propagation_without_changes_is_identity(seed in any::<u64>()) {
        let case = gen_case(&GenConfig { seed, input_cells: 2, ..GenConfig::default() });
        let p = &case.program.root;
        if let Ok(r) = run_stable(&case.inputs, p, &mut NullOracle, &mut FreshAllocator::new(), DEFAULT_FUEL) {
            let t = r.stable_trace().unwrap();
            let protected = reach(&Expr::from(p.clone()), &r.final_store).unwrap();
            let again = propagate_stable(&r.final_store, t, &protected, &mut NullOracle, &mut FreshAllocator::new(), DEFAULT_FUEL).unwrap();
            prop_assert_eq!(&again.trace, t);
            prop_assert_eq!(&again.final_store, &r.final_store);
            prop_assert!(again.stats.reads_reexecuted.is_empty());
        }
    }

    #[test]
    fn trace_json_round_trip(seed in any::<u64>()) {
        let case = gen_case(&GenConfig { seed, input_cells: 1, ..GenConfig::default() });
        if let Ok(r) = run_stable(&case.inputs, &case.program.root, &mut NullOracle, &mut FreshAllocator::new(), DEFAULT_FUEL) {
            let t = r.stable_trace().unwrap();
            prop_assert_eq!(&strace_from_json(&strace_to_json(t)).unwrap(), t);
        }
    }

    #[test]
    fn generated_programs_are_closed(seed in any::<u64>()) {
        let p = program(seed);
        prop_assert!(p.is_closed());
        prop_assert!(locations_in(&Expr::from(p)).is_empty());
    }
}

#[test]
fn changeable_round_trip_sample() {
    let c = ChangeableExpr::Read(
        Value::Loc(Location(2)),
        Name::new("x"),
        Box::new(ChangeableExpr::Write(Value::pair(Value::var("x"), Value::num(-1)))),
    );
    assert_eq!(aml::syntax::parse_changeable(&c.to_string()).unwrap(), c);
}
