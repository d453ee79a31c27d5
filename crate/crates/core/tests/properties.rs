mod common;

use std::collections::BTreeMap;

use common::{random_dag, random_model, random_triple};
use dtcausal::ci::CiStatement;
use dtcausal::dynamic::{g_consequence, g_consequence_recursive, strategy_oracle, Stage, Strategy};
use dtcausal::graph::{d_separated, markov_equivalent, moralize, skeleton, VarSet};
use dtcausal::identify::{evaluate, identify, Env, ProbTerm, Query, DEFAULT_DEPTH};
use dtcausal::io::{parse_graph, parse_model, read_dataset, write_dataset, write_graph, write_model, GraphFile};
use dtcausal::regimes::{InfluenceDiagram, RegimeAssignment};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(256)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn separation_is_symmetric(seed: u64, n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.4, &mut rng);
        let (a, b, c) = random_triple(&g, &mut rng);
        prop_assert_eq!(d_separated(&g, &a, &b, &c).unwrap(), d_separated(&g, &b, &a, &c).unwrap());
    }

    #[test]
    fn separation_decomposes(seed: u64, n in 3usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.4, &mut rng);
        let (a, b, c) = random_triple(&g, &mut rng);
        if d_separated(&g, &a, &b, &c).unwrap() {
            for x in &b {
                let single: VarSet = [x.clone()].into();
                prop_assert!(d_separated(&g, &a, &single, &c).unwrap());
            }
        }
    }

    #[test]
    fn parents_screen_off_nondescendants(seed: u64, n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.4, &mut rng);
        for v in g.nodes() {
            let pa = g.parents(v.as_str()).unwrap();
            let de = g.descendants(v.as_str()).unwrap();
            let rest: VarSet = g.node_set().into_iter().filter(|x| !de.contains(x) && !pa.contains(x)).collect();
            if !rest.is_empty() {
                prop_assert!(d_separated(&g, &[v.clone()].into(), &rest, &pa).unwrap());
            }
        }
    }

    #[test]
    fn moral_graph_contains_skeleton(seed: u64, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.5, &mut rng);
        let (m, s) = (moralize(&g), skeleton(&g));
        for (a, b) in s.edges() {
            prop_assert!(m.has_edge(a.as_str(), b.as_str()));
        }
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(seed: u64, n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.5, &mut rng);
        let h = random_dag(n, 0.5, &mut rng);
        prop_assert!(markov_equivalent(&g, &g).unwrap());
        prop_assert_eq!(markov_equivalent(&g, &h).unwrap(), markov_equivalent(&h, &g).unwrap());
    }

    #[test]
    fn graph_text_round_trips(seed: u64, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.4, &mut rng);
        let targets: VarSet = g.nodes().iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        let file = GraphFile { name: Some("g".into()), diagram: InfluenceDiagram::from_dag(g).augmented(&targets).unwrap() };
        let text = write_graph(&file);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(back.diagram.dag().edges(), file.diagram.dag().edges());
        prop_assert_eq!(write_graph(&back), text);
    }

    #[test]
    fn model_text_round_trips(seed: u64, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.5, &mut rng);
        let m = random_model(&g, &BTreeMap::new(), 3, &mut rng);
        let text = write_model(&m).unwrap();
        let back = parse_model(&text).unwrap();
        // Rows are renormalised on parse, so only the last bit may move.
        prop_assert_eq!(back.dag().edges(), m.dag().edges());
        let (p, q) = (m.exact_joint(&RegimeAssignment::idle()).unwrap(), back.exact_joint(&RegimeAssignment::idle()).unwrap());
        for (x, y) in p.cells().iter().zip(q.cells()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_csv_round_trips(seed: u64, rows in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(3, 0.5, &mut rng);
        let m = random_model(&g, &BTreeMap::new(), 3, &mut rng);
        let target = g.nodes()[0].clone();
        let d = m.simulate(&RegimeAssignment::idle().set(target, "1"), rows, seed).unwrap();
        let text = write_dataset(&d).unwrap();
        prop_assert_eq!(write_dataset(&read_dataset(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn simulation_is_seed_stable(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(4, 0.5, &mut rng);
        let m = random_model(&g, &BTreeMap::new(), 3, &mut rng);
        let a = write_dataset(&m.simulate(&RegimeAssignment::idle(), 25, seed).unwrap()).unwrap();
        let b = write_dataset(&m.simulate(&RegimeAssignment::idle(), 25, seed).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ci_statement_text_round_trips(seed: u64, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.4, &mut rng);
        let (a, b, c) = random_triple(&g, &mut rng);
        let s = CiStatement::new(a, b, c);
        prop_assert_eq!(CiStatement::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn identified_effects_match_surgery(seed: u64, n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(n, 0.5, &mut rng);
        let m = random_model(&g, &BTreeMap::new(), 2, &mut rng);
        let order = g.topological_order();
        let (t, y) = (order[0].clone(), order[n - 1].clone());
        let t = if rng.random_bool(0.5) { order[rng.random_range(0..n - 1)].clone() } else { t };
        let id = InfluenceDiagram::from_dag(g).augmented(&[t.clone()].into()).unwrap();
        let query = ProbTerm::new([y.clone()].into(), VarSet::new(), [t.clone()].into()).unwrap();
        let found = identify(&id, &query, DEFAULT_DEPTH).unwrap();
        prop_assert!(found.estimand.is_observational());
        for ts in ["0", "1"] {
            let truth = m.exact_joint(&RegimeAssignment::idle().set(t.clone(), ts)).unwrap();
            for ys in ["0", "1"] {
                let env: Env = [(t.clone(), ts.to_string()), (y.clone(), ys.to_string())].into();
                let got = evaluate(&found.estimand, &m, &env).unwrap();
                let p = truth.partial(&[(y.as_str(), ys)]).unwrap();
                prop_assert!((got - truth.prob(&p)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn query_text_round_trips(t in "[A-H]", y in "[I-P]", ts in 0u8..3, ys in 0u8..3) {
        let text = format!("P({y}={ys} | do({t}={ts}))");
        let q = Query::parse(&text).unwrap();
        prop_assert_eq!(Query::parse(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn g_formula_forms_agree(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = ["L1", "T1", "L2", "T2", "Y"];
        let edges: Vec<(&str, &str)> = (0..5).flat_map(|j| (0..j).map(move |i| (names[i], names[j]))).collect();
        let g = dtcausal::graph::Dag::from_names(&names, &edges).unwrap();
        let m = random_model(&g, &BTreeMap::new(), 2, &mut rng);
        let v = |s: &str| dtcausal::graph::VariableId::new(s).unwrap();
        let stages = [Stage::new(vec![v("L1")], v("T1")), Stage::new(vec![v("L2")], v("T2"))];
        let (a, b) = (if rng.random_bool(0.5) { "1" } else { "0" }, if rng.random_bool(0.5) { "1" } else { "0" });
        let s = Strategy::fixed(&[(v("T1"), a), (v("T2"), b)]);
        let direct = g_consequence(&m, &stages, &s, &v("Y")).unwrap().value;
        let recursive = g_consequence_recursive(&m, &stages, &s, &v("Y")).unwrap();
        let oracle = strategy_oracle(&m, &s, &v("Y")).unwrap();
        prop_assert!((direct - recursive).abs() < 1e-12);
        prop_assert!((direct - oracle).abs() < 1e-12);
    }
}
