mod common;

use cftl_core::cftl::{normalize, parse_formula, Psi};
use cftl_core::instrument::emit_plan;
use cftl_core::lang::{parse_program, Value};
use cftl_core::monitor::Verdict;
use cftl_core::rational;
use cftl_core::runtime::{evaluate_observations, run_async, run_sync, Payload};
use cftl_core::scfg::{build_scfg, reachability_map, Element, Scfg};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn psi(seed: u64) -> Psi<usize> {
    common::random_psi(&mut ChaCha8Rng::seed_from_u64(seed), 4, 4)
}

fn is_nnf(p: &Psi<usize>) -> bool {
    match p {
        Psi::Not(x) => matches!(**x, Psi::Atom(_)),
        Psi::And(xs) | Psi::Or(xs) => xs.iter().all(is_nnf),
        _ => true,
    }
}

fn valuations(k: usize) -> Vec<Vec<Option<bool>>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| [Some(true), Some(false), None].map(|x| [v.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

fn elements(g: &Scfg) -> Vec<Element> {
    (0..g.vertices.len()).map(Element::Vertex).chain((0..g.edges.len()).map(Element::Edge)).collect()
}

/// Transitive closure by summing boolean matrix powers A + A² + … + Aⁿ.
fn closure_by_powers(g: &Scfg) -> Vec<Vec<bool>> {
    let els = elements(g);
    let n = els.len();
    let idx = |e: Element| els.iter().position(|x| *x == e).unwrap();
    let mut a = vec![vec![false; n]; n];
    for e in &g.edges {
        a[idx(Element::Vertex(e.src))][idx(Element::Edge(e.index))] = true;
        a[idx(Element::Edge(e.index))][idx(Element::Vertex(e.dst))] = true;
    }
    let mul = |x: &Vec<Vec<bool>>, y: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).any(|k| x[i][k] && y[k][j])).collect()).collect()
    };
    let mut power = a.clone();
    let mut sum = a.clone();
    for _ in 1..n {
        power = mul(&power, &a);
        for i in 0..n {
            for j in 0..n {
                sum[i][j] |= power[i][j];
            }
        }
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>()) {
        let n = normalize(&psi(seed));
        prop_assert_eq!(normalize(&n), n.clone());
        prop_assert!(is_nnf(&n));
    }

    #[test]
    fn normalize_preserves_three_valued_truth(seed in any::<u64>()) {
        let p = psi(seed);
        let n = normalize(&p);
        for v in valuations(4) {
            prop_assert_eq!(p.eval3(&mut |a: &usize| v[*a]), n.eval3(&mut |a: &usize| v[*a]));
        }
    }

    #[test]
    fn reachability_matches_matrix_powers(seed in any::<u64>()) {
        let text = common::random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = build_scfg(&parse_program(&text).unwrap());
        let r = reachability_map(&g);
        let m = closure_by_powers(&g);
        let els = elements(&g);
        for (i, x) in els.iter().enumerate() {
            for (j, y) in els.iter().enumerate() {
                prop_assert_eq!(r.before(*x, *y), m[i][j], "{} before {}\n{}", x, y, text);
            }
        }
    }

    #[test]
    fn programs_round_trip(seed in any::<u64>()) {
        let text = common::random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = parse_program(&text).unwrap();
        let again = parse_program(&p.to_text()).unwrap();
        prop_assert_eq!(again.to_text(), p.to_text());
        prop_assert_eq!(again.statement_count(), p.statement_count());
    }

    #[test]
    fn formulas_round_trip(seed in any::<u64>()) {
        let text = common::random_formula(&mut ChaCha8Rng::seed_from_u64(seed));
        let f = parse_formula(&text).unwrap();
        let g = parse_formula(&f.to_text()).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(g.to_text(), f.to_text());
    }

    #[test]
    fn rationals_round_trip(n in -100_000i64..100_000, d in 1i64..2_000) {
        let r = rational::ratio(n, d);
        prop_assert_eq!(rational::parse(&rational::format(&r)), Some(r.clone()));
        prop_assert_eq!(rational::parse(&rational::to_exact(&r)), Some(r));
    }

    #[test]
    fn values_round_trip(n in -1000i64..1000, s in "[a-z ]{0,8}", flag in any::<bool>()) {
        let v = Value::List(vec![Value::Num(rational::ratio(n, 7)), Value::Str(s), Value::Bool(flag), Value::Token(3), Value::None]);
        prop_assert_eq!(Value::from_json(&v.to_json()), Some(v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn engine_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_program(&mut rng);
        let p = parse_program(&text).unwrap();
        let f = parse_formula(&common::random_formula(&mut rng)).unwrap();
        let g = build_scfg(&p);
        let plan = emit_plan(&f, &g, &p);
        let sync = run_sync(&p, &g, &f, &plan).unwrap();
        let asynchronous = run_async(&p, &g, &f, &plan).unwrap();
        prop_assert_eq!(&sync.report, &asynchronous.report);

        let payloads: Vec<Payload> = sync.events.iter().map(|e| e.payload.clone()).collect();
        prop_assert_eq!(evaluate_observations(&payloads, &f, true), sync.report.global, "replay\n{}\n{}", text, f.to_text());

        let earliest = (1..=payloads.len()).find(|&k| evaluate_observations(&payloads[..k], &f, false) == Verdict::False);
        prop_assert_eq!(sync.report.first_violation_seq, earliest.map(|k| sync.events[k - 1].seq), "{}\n{}", text, f.to_text());
        prop_assert_eq!(sync.report.global == Verdict::False, sync.report.per_binding.iter().any(|b| b.verdict == Verdict::False));
    }
}
