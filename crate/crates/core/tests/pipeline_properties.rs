#![allow(clippy::needless_range_loop)]

use lsms::generator::{build_instance, plant_instance, GeneratorConfig, Horizon, Level};
use lsms::harness::{figure_series, run_configs};
use lsms::lp::solve;
use lsms::model::{check_feasibility_with, LinkKind, FEAS_TOL};
use lsms::oracle::{grid_search_solve, toy_instance};
use lsms::subproblems::{build_sp1, build_sp2, extract_solution, solve_sp1, FixedBlock};
use lsms::{
    check_feasibility, evaluate_objective, two_phase, FlowMode, HeuristicConfig, Instance,
    Termination,
};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = Level> {
    prop_oneof![Just(Level::Low), Just(Level::Med), Just(Level::High)]
}

/// Small plant instances whose demand fits every capacity level at the
/// slowest machine settings.
fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, level(), level()).prop_flat_map(|(nt, cap, inv)| {
        prop::collection::vec(prop::collection::vec(0u8..=3, nt), 4).prop_map(move |d| {
            let demand = d
                .into_iter()
                .map(|row| row.into_iter().map(f64::from).collect())
                .collect();
            let (s_max, u_max) = inv.inventory_caps();
            plant_instance(nt, cap.capacity(), s_max, u_max, demand)
        })
    })
}

fn flow_mode() -> impl Strategy<Value = FlowMode> {
    prop_oneof![Just(FlowMode::Aggregate), Just(FlowMode::PerPeriod)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sp1_round_trip_is_feasible_and_consistent(inst in small_instance(), mode in flow_mode()) {
        let v = inst.v_min_matrix();
        let (lp, map) = build_sp1(&inst, &v, mode).unwrap();
        let out = solve(&lp).unwrap();
        prop_assert!(out.is_optimal(), "{out:?}");
        let sol = extract_solution(&inst, &out, &map, FixedBlock::ProcTime(&v)).unwrap();
        prop_assert_eq!(&sol.proc_time, &v);
        let z = out.objective().unwrap();
        prop_assert!((sol.objective - z).abs() <= 1e-7 * z.abs().max(1.0));
        let report = check_feasibility_with(&inst, &sol, FEAS_TOL, mode);
        prop_assert!(report.is_feasible(), "{report}");
    }

    #[test]
    fn sp2_stocks_follow_the_balance_recursions(inst in small_instance()) {
        let v = inst.v_min_matrix();
        let y = solve_sp1(&inst, &v, FlowMode::Aggregate).unwrap().unwrap().production;
        let (lp, map) = build_sp2(&inst, &y, FlowMode::Aggregate).unwrap();
        let out = solve(&lp).unwrap();
        let sol = extract_solution(&inst, &out, &map, FixedBlock::Production(&y)).unwrap();
        prop_assert_eq!(&sol.production, &y);
        prop_assert!(check_feasibility(&inst, &sol, FEAS_TOL).is_feasible());
        for i in 0..inst.num_products {
            let last = inst.last_machine(i);
            let wip = inst.links(i).into_iter().find(|l| l.kind == LinkKind::Wip);
            let (mut s, mut u) = (0.0, 0.0);
            for t in 0..inst.num_periods {
                s += y[i][last][t] - inst.demand[i][t];
                if let Some(l) = &wip {
                    u += y[i][l.from][t] - y[i][l.to][t];
                }
                prop_assert!((sol.end_inventory[i][t] - s).abs() <= 1e-7);
                prop_assert!((sol.wip_inventory[i][t] - u).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn heuristic_descends_and_stays_feasible(inst in small_instance(), mode in flow_mode()) {
        let config = HeuristicConfig { flow_mode: mode, ..HeuristicConfig::default() };
        let (sol, trace) = two_phase(&inst, &config).unwrap();
        prop_assert!(trace.cycle_count() <= config.max_iter);
        let report = check_feasibility_with(&inst, &sol, FEAS_TOL, mode);
        prop_assert!(report.is_feasible(), "{report}");
        for w in trace.objective_sequence().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-7 * w[0].abs().max(1.0), "{:?}", trace);
        }
        let (again, trace2) = two_phase(&inst, &config).unwrap();
        prop_assert_eq!(&sol, &again);
        prop_assert_eq!(trace.objective_sequence(), trace2.objective_sequence());
    }

    #[test]
    fn production_telescopes_to_demand_plus_final_stock(inst in small_instance()) {
        let (sol, _) = two_phase(&inst, &HeuristicConfig::default()).unwrap();
        let last_t = inst.num_periods - 1;
        for i in 0..inst.num_products {
            let made: f64 = sol.production[i][inst.last_machine(i)].iter().sum();
            let want = inst.total_demand(i) + sol.end_inventory[i][last_t];
            prop_assert!((made - want).abs() <= 1e-6);
        }
    }

    #[test]
    fn inventory_term_is_linear(inst in small_instance()) {
        let (sol, _) = two_phase(&inst, &HeuristicConfig::default()).unwrap();
        let scaled = |k: f64| {
            let mut s = sol.clone();
            s.end_inventory.iter_mut().flatten().for_each(|x| *x *= k);
            s.wip_inventory.iter_mut().flatten().for_each(|x| *x *= k);
            evaluate_objective(&inst, &s).unwrap()
        };
        let base = scaled(0.0);
        let term = scaled(1.0) - base;
        prop_assert!((scaled(2.0) - base - 2.0 * term).abs() <= 1e-9 * term.abs().max(1.0));
    }

    #[test]
    fn single_cycle_budget_is_respected(inst in small_instance()) {
        let config = HeuristicConfig { max_iter: 1, ..HeuristicConfig::default() };
        let (sol, trace) = two_phase(&inst, &config).unwrap();
        prop_assert_eq!(trace.cycle_count(), 1);
        prop_assert!(matches!(trace.termination, Termination::IterationLimit | Termination::Converged));
        prop_assert!(check_feasibility(&inst, &sol, FEAS_TOL).is_feasible());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn refining_a_nested_grid_never_hurts(seed in 0u64..10_000, nt in 1usize..=2) {
        let inst = toy_instance(seed, nt);
        let coarse = grid_search_solve(&inst, 3).unwrap();
        let fine = grid_search_solve(&inst, 5).unwrap();
        prop_assert!(fine.objective <= coarse.objective + 1e-9);
        prop_assert!(check_feasibility(&inst, &fine.solution, FEAS_TOL).is_feasible());
        prop_assert!(check_feasibility(&inst, &coarse.solution, FEAS_TOL).is_feasible());
    }

    #[test]
    fn generator_is_a_function_of_its_config(seed in any::<u64>(), h in 0usize..3) {
        let horizon = Horizon::ALL[h];
        let a = build_instance(&GeneratorConfig::new(horizon, Level::Low, Level::Med, seed)).unwrap();
        let b = build_instance(&GeneratorConfig::new(horizon, Level::Low, Level::Med, seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let c = build_instance(&GeneratorConfig::new(horizon, Level::High, Level::Low, seed)).unwrap();
        prop_assert_eq!(&a.demand, &c.demand);
        let (lo, hi) = horizon.demand_bounds();
        let total: f64 = a.demand.iter().flatten().sum();
        prop_assert!(total >= lo as f64 && total <= hi as f64);
    }
}

#[test]
fn generated_instances_are_feasible_at_slowest_settings() {
    for h in Horizon::ALL {
        for cap in Level::ALL {
            for seed in 0..5 {
                let inst = build_instance(&GeneratorConfig::new(h, cap, Level::Low, seed)).unwrap();
                let sol = solve_sp1(&inst, &inst.v_min_matrix(), FlowMode::Aggregate).unwrap();
                assert!(sol.is_some(), "T={h} cap={cap} seed={seed}");
            }
        }
    }
}

#[test]
fn stored_run_objectives_recompute_exactly() {
    let configs: Vec<_> = (0..4)
        .map(|s| GeneratorConfig::new(Horizon::T10, Level::Med, Level::Low, s))
        .collect();
    for run in run_configs(&configs, &HeuristicConfig::default(), 2).unwrap() {
        let rep = run.outcome.unwrap();
        let z = evaluate_objective(&run.instance, &rep.solution).unwrap();
        assert_eq!(z, rep.solution.objective);
    }
}

#[test]
fn figure_series_matches_the_solution() {
    let inst = build_instance(&GeneratorConfig::new(
        Horizon::T20,
        Level::High,
        Level::High,
        3,
    ))
    .unwrap();
    let (sol, _) = two_phase(&inst, &HeuristicConfig::default()).unwrap();
    let series = figure_series(&inst, &sol).unwrap();
    assert_eq!(series.len(), inst.num_periods);
    let demand: f64 = series.iter().map(|p| p.demand).sum();
    let total: f64 = (0..inst.num_products).map(|i| inst.total_demand(i)).sum();
    assert_eq!(demand, total);
    for p in &series {
        assert_eq!(p.v1, sol.proc_time[0][p.t - 1]);
    }
}
