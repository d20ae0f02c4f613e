//! One test per acceptance criterion; each prints a single `PASS`/`FAIL` line
//! straight to stdout so the verdicts show even when output is captured.
//! Tests share a lock so timed sections never overlap.

mod common;

use std::io::Write;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{scenario_oracle, Layer, Rows, World};
use spatiolog::bench::{self, Bench, BenchResult, DatasetSpec, Mode, Scenario, SweepOptions, DEFAULT_RUNS};
use spatiolog::engine_entity::{self, Value};
use spatiolog::engine_relation::{self, result_rows};
use spatiolog::geometry::{box_distance, distance, Point, Shape};
use spatiolog::qlang::{parse, validate, Paradigm};
use spatiolog::relalg;
use spatiolog::spatial_index::{Counters, SpatialIndex};
use spatiolog::store::{Catalog, Entity, EntityKey, EntityRelation, RelationRef, RelationshipRelation};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and fails the test when `ok` is false.
fn report(criterion: &str, ok: bool, detail: impl AsRef<str>) {
    let line = format!("{} {criterion}: {}\n", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "{}", line.trim_end());
}

fn layer(cat: &str, items: &[(u64, Shape, Option<u16>)]) -> EntityRelation {
    let ents = items.iter().map(|(id, s, c)| Entity::new(EntityKey::new(cat, *id), s.clone(), *c).unwrap()).collect();
    EntityRelation::from_entities(cat, ents).unwrap()
}

fn pt(x: f64, y: f64) -> Shape {
    Shape::point(x, y).unwrap()
}

fn street(x: f64) -> Shape {
    Shape::polyline(vec![Point::new(x, -20.0), Point::new(x, 20.0)]).unwrap()
}

#[test]
fn walkthrough_fidelity() {
    let _g = serial();
    let start = Instant::now();
    let catalog = Catalog::new();
    // a1 at the origin; t1 and t2 both within 100 m of it; s1 5 m from t1 only; s2 5 m from t2 only.
    catalog.register_entities(layer("accidents", &[(1, pt(0.0, 0.0), None)])).unwrap();
    catalog.register_entities(layer("traffic", &[(1, pt(50.0, 0.0), None), (2, pt(-50.0, 0.0), None)])).unwrap();
    catalog.register_entities(layer("streets", &[(1, street(55.0), None), (2, street(-55.0), None)])).unwrap();

    let e = engine_entity::run_query(bench::WALKTHROUGH_ENTITY, &catalog).unwrap();
    let entity_rows: Vec<Vec<u64>> = e.rows.iter().map(|r| r.iter().map(|v| v.as_id().unwrap()).collect()).collect();
    let expected = vec![vec![1, 1, 1], vec![1, 2, 2]];

    let r = engine_relation::run_query(bench::WALKTHROUGH_RELATION, &catalog).unwrap();
    let RelationRef::Relationship(rel) = &r.result else { panic!("relationship result expected") };
    let cols: Vec<usize> = ["A", "T", "S"].iter().map(|c| rel.column(c).unwrap()).collect();
    let relation_rows: Vec<Vec<u64>> = rel.rows().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
    let elapsed = start.elapsed().as_secs_f64();

    let ok = e.answer_vars == ["A", "T", "S"] && entity_rows == expected && relation_rows == expected && elapsed < 1.0;
    report(
        "walkthrough fidelity",
        ok,
        format!("entity {entity_rows:?}, relation {relation_rows:?}, {elapsed:.4}s (< 1s)"),
    );
}

#[test]
fn oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut checked = 0;
    let mut failures = Vec::new();
    for seed in [11u64, 22, 33] {
        let bench = Bench::generate(&DatasetSpec { seed, ..DatasetSpec::default() }).unwrap();
        let c = bench.catalog();
        for n in [64usize, 128, 256, 512] {
            bench.install_sample(n, seed * 1000 + n as u64).unwrap();
            let world = World {
                accidents: Layer::of(&c.entity_relation("accidents").unwrap()),
                traffic: Layer::of(&c.entity_relation("traffic").unwrap()),
                roads: Layer::of(&c.entity_relation("roads").unwrap()),
                pois: Layer::of(&c.entity_relation("pois").unwrap()),
            };
            for s in Scenario::ALL {
                let oracle: Rows = scenario_oracle(s.number(), &world);
                for mode in Mode::ALL {
                    let r = bench.run_scenario(s, mode, 1).unwrap();
                    checked += 1;
                    if r.rows != oracle || r.result_rows != oracle.len() {
                        failures.push(format!(
                            "seed {seed} n {n} S{} {mode}: {} rows vs oracle {}",
                            s.number(),
                            r.result_rows,
                            oracle.len()
                        ));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "oracle equivalence",
        failures.is_empty() && elapsed < 300.0,
        format!("{checked} scenario/size/seed/mode cases, {} mismatches {:?}, {elapsed:.1}s (< 300s)", failures.len(), failures),
    );
}

fn find(results: &[BenchResult], s: Scenario, mode: Mode, n: usize) -> &BenchResult {
    results.iter().find(|r| r.scenario == s && r.mode == mode && r.n == n).unwrap()
}

const SIZES: [usize; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

/// The full default sweep, run once and shared by the scaling and cost criteria.
fn sweep() -> &'static (Vec<BenchResult>, f64) {
    static SWEEP: std::sync::OnceLock<(Vec<BenchResult>, f64)> = std::sync::OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let bench = Bench::generate(&DatasetSpec::default()).unwrap();
        let opts =
            SweepOptions { scenarios: Scenario::ALL.to_vec(), sizes: SIZES.to_vec(), runs: DEFAULT_RUNS, seed: 1, verify: true };
        let results = bench.sweep(&opts, |_| {}).unwrap();
        (results, start.elapsed().as_secs_f64())
    })
}

#[test]
fn scaling_ordering() {
    let _g = serial();
    let (results, elapsed) = sweep();
    let n = 8192;
    let t = |s, m| find(results, s, m, n).median;
    let (rel, iter, ent) =
        (t(Scenario::S1, Mode::Relation), t(Scenario::S1, Mode::RelationIterator), t(Scenario::S1, Mode::Entity));
    let gap = t(Scenario::S3, Mode::Entity) / t(Scenario::S3, Mode::Relation);
    let ok = rel < iter && iter < ent && gap >= 5.0 && *elapsed < 1800.0;
    report(
        "scaling ordering",
        ok,
        format!(
            "S1 N={n} medians of {DEFAULT_RUNS}: relation {rel:.6}s < iterator {iter:.6}s < entity {ent:.6}s; \
             S3 entity/relation {gap:.1}x (>= 5x); sweep {elapsed:.1}s (< 1800s)"
        ),
    );
}

#[test]
fn cost_signature() {
    let _g = serial();
    let (results, _) = sweep();
    let mut problems = Vec::new();
    for s in Scenario::ALL {
        let mut last = 0;
        for n in SIZES {
            let e = find(results, s, Mode::Entity, n).counters.index_probes;
            for m in [Mode::Relation, Mode::RelationIterator] {
                let r = find(results, s, m, n);
                if e < r.counters.index_probes {
                    problems.push(format!("S{} n {n}: entity {e} < {m} {}", s.number(), r.counters.index_probes));
                }
                for g in &r.goal_stats {
                    let spatial = g.predicate == "near_relational" || g.predicate == "closeby_relational";
                    let want = if spatial { g.left_cardinality as u64 } else { 0 };
                    if g.counters.index_probes != want {
                        problems.push(format!(
                            "S{} n {n} goal {} {}: {} probes, left input {}",
                            s.number(),
                            g.goal,
                            g.predicate,
                            g.counters.index_probes,
                            g.left_cardinality
                        ));
                    }
                }
            }
            // Linear growth for scenarios 2-4: at least one probe per accident, never shrinking with N.
            if s != Scenario::S1 && (e < n as u64 || e < last) {
                problems.push(format!("S{} n {n}: entity probes {e} not >= N and >= previous {last}", s.number()));
            }
            last = e;
        }
    }
    let s2 = |n| find(results, Scenario::S2, Mode::Entity, n).counters.index_probes;
    report(
        "cost signature",
        problems.is_empty(),
        format!(
            "entity >= relation probes on all 32 scenario/size pairs, per-goal probes = left cardinality, \
             S2 entity probes {} at N=64 to {} at N=8192; problems {:?}",
            s2(64),
            s2(8192),
            problems
        ),
    );
}

#[test]
fn parser_conformance() {
    let _g = serial();
    let mut problems = Vec::new();
    for s in Scenario::ALL {
        for paradigm in [Paradigm::Entity, Paradigm::Relation] {
            let text = s.query(paradigm);
            let label = format!("S{} {paradigm}", s.number());
            let program = match parse(text) {
                Ok(p) => p,
                Err(e) => {
                    problems.push(format!("{label}: {e}"));
                    continue;
                }
            };
            if let Err(e) = validate(&program, None, paradigm) {
                problems.push(format!("{label}: {e}"));
            }
            let printed = program.to_string();
            match parse(&printed) {
                Ok(again) if again == program && again.to_string() == printed => {}
                Ok(_) => problems.push(format!("{label}: print/parse changed the program")),
                Err(e) => problems.push(format!("{label}: reprint fails to parse: {e}")),
            }
        }
    }
    report("parser conformance", problems.is_empty(), format!("8 scenario queries parse, validate, round-trip; problems {problems:?}"));
}

#[test]
fn property_geometry_metric() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    let mut worst_oracle_gap: f64 = 0.0;
    for i in 0..10_000 {
        let a = common::rand_shape(&mut rng, 500.0, 120.0);
        let b = common::rand_shape(&mut rng, 500.0, 120.0);
        let d = distance(&a, &b);
        let gap = (d - common::dist(&common::to_g(&a), &common::to_g(&b))).abs();
        worst_oracle_gap = worst_oracle_gap.max(gap);
        let ok = d == distance(&b, &a)
            && distance(&a, &a) == 0.0
            && box_distance(&a.bounding_box(), &b.bounding_box()) <= d
            && gap <= 1e-9 * (1.0 + d);
        if !ok {
            bad.push(i);
        }
    }
    report(
        "property suites / geometry",
        bad.is_empty(),
        format!(
            "symmetry, identity, box lower bound and independent-oracle agreement on 10000 pairs; \
             max oracle gap {worst_oracle_gap:.2e}; failing pairs {bad:?}"
        ),
    );
}

#[test]
fn property_index_exactness() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    let mut hits = 0;
    for ds in 0..10 {
        let n = rng.gen_range(50..800);
        let items: Vec<_> = (0..n).map(|i| (i as u64 * 3 + 1, common::rand_shape(&mut rng, 2000.0, 60.0), None)).collect();
        let cat = "c";
        let rel = Arc::new(layer(cat, &items));
        let index = SpatialIndex::build(rel.clone());
        assert!(index.check_invariants(), "dataset {ds}");
        for _ in 0..100 {
            let probe = common::rand_shape(&mut rng, 2000.0, 60.0);
            let d = rng.gen_range(0.0..300.0);
            let mut c = Counters::default();
            let got = index.query_ids(&probe, d, &mut c).unwrap();
            let mut want: Vec<u64> =
                rel.members().iter().filter(|e| distance(&probe, &e.shape) <= d).map(|e| e.key.id).collect();
            want.sort_unstable();
            hits += want.len();
            if got != want {
                bad += 1;
            }
        }
    }
    report("property suites / index", bad == 0, format!("100 probes x 10 datasets vs linear scan, {hits} hits, {bad} mismatches"));
}

fn rand_rel(rng: &mut ChaCha8Rng, name: &str, schema: &[&str]) -> RelationshipRelation {
    let rows = (0..rng.gen_range(0..30)).map(|_| schema.iter().map(|_| rng.gen_range(0..8)).collect()).collect();
    RelationshipRelation::new(name, schema.iter().map(|s| s.to_string()).collect(), rows).unwrap()
}

fn rows(r: &RelationshipRelation) -> Vec<Vec<u64>> {
    r.rows().map(<[u64]>::to_vec).collect()
}

#[test]
fn property_relalg() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = Vec::new();
    for i in 0..500 {
        let r1 = rand_rel(&mut rng, "r1", &["a", "k"]);
        let r2 = rand_rel(&mut rng, "r2", &["k", "b"]);
        let r3 = rand_rel(&mut rng, "r3", &["a", "k"]);

        // Join: nested loop, r1-major.
        let mut want = Vec::new();
        for x in r1.rows() {
            for y in r2.rows() {
                if x[1] == y[0] {
                    want.push(vec![x[0], x[1], y[1]]);
                }
            }
        }
        let j = relalg::join(&r1, &r2, "k", None, "j").unwrap();
        let cols = ["b".to_string(), "rel2.k".to_string(), "a".to_string()];
        let jc = relalg::join(&r1, &r2, "k", Some(&cols), "jc").unwrap();
        let want_c: Vec<Vec<u64>> = want.iter().map(|r| vec![r[2], r[1], r[0]]).collect();
        let join_ok = rows(&j) == want && j.schema() == ["a", "k", "b"] && rows(&jc) == want_c;
        let ambiguous = relalg::join(&r1, &r2, "k", Some(&["k".to_string()]), "x").is_err();

        // Projection keeps duplicates and order.
        let p = relalg::project(&r1, &["k".to_string()], "p").unwrap();
        let project_ok = rows(&p) == r1.rows().map(|r| vec![r[1]]).collect::<Vec<_>>();

        // Minus: every r1 row absent from r3, duplicates kept.
        let m = relalg::minus(&r1, &r3, "m").unwrap();
        let r3rows = rows(&r3);
        let minus_ok = rows(&m) == rows(&r1).into_iter().filter(|r| !r3rows.contains(r)).collect::<Vec<_>>();

        // Semi-join filter against a hash-set oracle.
        let ents: Vec<_> = (0..10).map(|id| (id, pt(id as f64, 0.0), None)).collect();
        let e = layer("e", &ents);
        let f = relalg::filter_entities(&e, &r1, "a", "f").unwrap();
        let keep: std::collections::HashSet<u64> = r1.rows().map(|r| r[0]).collect();
        let filter_ok = f.ids().eq((0..10).filter(|id| keep.contains(id)));

        if !(join_ok && ambiguous && project_ok && minus_ok && filter_ok) {
            bad.push(i);
        }
    }
    report("property suites / relalg", bad.is_empty(), format!("join, project, minus, filter on 500 instances; failing {bad:?}"));
}

#[test]
fn property_boundary_inclusive() {
    let _g = serial();
    let catalog = Catalog::new();
    // 60-80-100 triangle: the distance is exactly 100.0 in floating point.
    catalog.register_entities(layer("a", &[(1, pt(0.0, 0.0), None), (2, pt(1000.0, 0.0), None)])).unwrap();
    catalog
        .register_entities(layer("b", &[(1, pt(60.0, 80.0), None), (2, pt(1000.0, 100.0 + 1e-9), None), (3, pt(10.0, 0.0), None)]))
        .unwrap();
    assert_eq!(distance(&pt(0.0, 0.0), &pt(60.0, 80.0)), 100.0);
    let e = engine_entity::run_query(r#":- near(("a", A), ("b", B))."#, &catalog).unwrap();
    let entity: Vec<Vec<Value>> = e.rows;
    let r = engine_relation::run_query(r#":- near_relational("a", "b", R)."#, &catalog).unwrap();
    let relation = result_rows(&r.result);
    let c = engine_entity::run_query(r#":- closeby(("a", A), ("b", B))."#, &catalog).unwrap();
    let ok = entity == vec![vec![Value::Id(1), Value::Id(1)], vec![Value::Id(1), Value::Id(3)]]
        && relation == vec![vec![1, 1], vec![1, 3]]
        && c.rows == vec![vec![Value::Id(1), Value::Id(3)]];
    report(
        "property suites / boundary",
        ok,
        format!("distance 100.0 is near and 100.000000001 is not in both paradigms; distance 10.0 is closeby; entity {entity:?}"),
    );
}
