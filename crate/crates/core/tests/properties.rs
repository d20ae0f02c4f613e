mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatiolog::bench::{self, DatasetSpec};
use spatiolog::geometry::{box_distance, distance, Point, Shape};
use spatiolog::qlang::{parse, Call, Clause, Goal, Program, Query, Rule, Term};
use spatiolog::relalg;
use spatiolog::spatial_index::{Counters, SpatialIndex};
use spatiolog::store::{parse_wkt, Catalog, Entity, EntityKey, EntityRelation, RelationshipRelation};

fn var() -> impl Strategy<Value = String> {
    "[A-Z][A-Za-z0-9_]{0,5}"
}

fn atom() -> impl Strategy<Value = String> {
    "[a-z][A-Za-z0-9_]{0,5}"
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        var().prop_map(Term::Var),
        atom().prop_map(Term::Atom),
        any::<String>().prop_map(Term::Str),
        any::<u64>().prop_map(Term::Int),
        prop::collection::vec(any::<String>(), 0..3).prop_map(Term::List),
    ];
    leaf.prop_recursive(3, 12, 4, |inner| prop::collection::vec(inner, 2..4).prop_map(Term::Tuple))
}

fn goal() -> impl Strategy<Value = Goal> {
    let call = (atom(), prop::collection::vec(term(), 0..4)).prop_map(|(name, args)| Goal::Call(Call { name, args }));
    call.prop_recursive(2, 8, 3, |inner| prop::collection::vec(inner, 1..3).prop_map(Goal::Not))
}

fn body() -> impl Strategy<Value = Vec<Goal>> {
    prop::collection::vec(goal(), 1..4)
}

fn program() -> impl Strategy<Value = Program> {
    let clause = prop_oneof![
        (atom(), prop::collection::vec(var(), 0..3), body())
            .prop_map(|(name, params, body)| Clause::Rule(Rule { name, params, body })),
        body().prop_map(|body| Clause::Query(Query { body })),
    ];
    prop::collection::vec(clause, 0..4).prop_map(|clauses| Program { clauses })
}

fn coord() -> impl Strategy<Value = f64> {
    -1000.0..1000.0f64
}

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (coord(), coord()).prop_map(|(x, y)| Shape::point(x, y).unwrap()),
        prop::collection::vec((coord(), coord()), 2..6)
            .prop_map(|v| Shape::polyline(v.into_iter().map(|(x, y)| Point::new(x, y)).collect()).unwrap()),
        (any::<u64>(), coord(), coord(), 1.0..300.0f64).prop_map(|(seed, x, y, r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                if let Ok(s) = Shape::polygon(common::rand_ring(&mut rng, Point::new(x, y), r)) {
                    return s;
                }
            }
        }),
    ]
}

fn relation(cat: &str, shapes: &[Shape]) -> EntityRelation {
    let ents = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| Entity::new(EntityKey::new(cat, i as u64 * 2), s.clone(), None).unwrap())
        .collect();
    EntityRelation::from_entities(cat, ents).unwrap()
}

fn rel(name: &str, schema: &[&str], rows: Vec<Vec<u64>>) -> RelationshipRelation {
    RelationshipRelation::new(name, schema.iter().map(|s| s.to_string()).collect(), rows).unwrap()
}

fn pairs() -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::vec(0..6u64, 2), 0..25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(p in program()) {
        let text = p.to_string();
        let again = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(again.to_string(), text);
    }

    #[test]
    fn distance_is_a_symmetric_premetric(a in shape(), b in shape()) {
        let d = distance(&a, &b);
        prop_assert!(d >= 0.0 && d.is_finite());
        prop_assert_eq!(d, distance(&b, &a));
        prop_assert_eq!(distance(&a, &a), 0.0);
        prop_assert!(box_distance(&a.bounding_box(), &b.bounding_box()) <= d);
        let oracle = common::dist(&common::to_g(&a), &common::to_g(&b));
        prop_assert!((d - oracle).abs() <= 1e-9 * (1.0 + d), "library {} oracle {}", d, oracle);
    }

    #[test]
    fn vertex_pairs_bound_distance_from_above(a in shape(), b in shape()) {
        let d = distance(&a, &b);
        for p in a.vertices() {
            for q in b.vertices() {
                prop_assert!(d <= p.distance(q));
            }
        }
    }

    #[test]
    fn bounding_boxes_are_ordered_and_cover_vertices(s in shape()) {
        let b = s.bounding_box();
        prop_assert!(b.min_x <= b.max_x && b.min_y <= b.max_y);
        for p in s.vertices() {
            prop_assert!(b.min_x <= p.x && p.x <= b.max_x && b.min_y <= p.y && p.y <= b.max_y);
        }
    }

    #[test]
    fn wkt_round_trips(s in shape()) {
        prop_assert_eq!(parse_wkt(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn index_equals_linear_scan(shapes in prop::collection::vec(shape(), 0..120), probe in shape(), d in 0.0..400.0f64) {
        let r = Arc::new(relation("c", &shapes));
        let idx = SpatialIndex::build(r.clone());
        prop_assert!(idx.check_invariants());
        let mut c = Counters::default();
        let got = idx.query_ids(&probe, d, &mut c).unwrap();
        let want: Vec<u64> = r.members().iter().filter(|e| distance(&probe, &e.shape) <= d).map(|e| e.key.id).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(c.index_probes, 1);
        prop_assert!(c.distance_evals <= shapes.len() as u64);
    }

    #[test]
    fn join_cardinality_and_keys(r1 in pairs(), r2 in pairs()) {
        let (a, b) = (rel("a", &["x", "k"], r1.clone()), rel("b", &["k", "y"], r2.clone()));
        let j = relalg::join(&a, &b, "k", None, "j").unwrap();
        let expected: usize = r1.iter().map(|x| r2.iter().filter(|y| y[0] == x[1]).count()).sum();
        prop_assert_eq!(j.len(), expected);
        prop_assert_eq!(j.arity(), 3);
        for row in j.rows() {
            prop_assert!(r1.contains(&vec![row[0], row[1]]) && r2.contains(&vec![row[1], row[2]]));
        }
    }

    #[test]
    fn minus_is_the_bag_difference(r1 in pairs(), r2 in pairs()) {
        let m = relalg::minus(&rel("a", &["p", "q"], r1.clone()), &rel("b", &["p", "q"], r2.clone()), "m").unwrap();
        let want: Vec<Vec<u64>> = r1.into_iter().filter(|r| !r2.contains(r)).collect();
        prop_assert_eq!(m.to_rows(), want);
    }

    #[test]
    fn project_keeps_every_row(r1 in pairs()) {
        let a = rel("a", &["p", "q"], r1.clone());
        let p = relalg::project(&a, &["q".to_string(), "p".to_string()], "p").unwrap();
        prop_assert_eq!(p.to_rows(), r1.iter().map(|r| vec![r[1], r[0]]).collect::<Vec<_>>());
        let d = relalg::distinct(&a, "d");
        prop_assert!(d.len() <= a.len());
        let set: std::collections::BTreeSet<Vec<u64>> = r1.into_iter().collect();
        prop_assert_eq!(d.len(), set.len());
    }

    #[test]
    fn generated_names_never_collide(user in prop::collection::vec("_tmp[0-9]{1,2}|[a-z]{1,4}", 0..6)) {
        let catalog = Catalog::new();
        for (i, name) in user.iter().enumerate() {
            let r = catalog.register_relationship(Some(name), vec!["a".into()], vec![vec![i as u64]]);
            prop_assert_eq!(r.is_err(), name.starts_with("_tmp") || user[..i].contains(name));
        }
        for _ in 0..20 {
            let name = catalog.fresh_name();
            prop_assert!(!catalog.contains(&name), "{} collides", name);
            let r = catalog.register_generated_relationship(rel("x", &["a"], vec![]));
            prop_assert!(r.name().starts_with("_tmp"));
        }
    }
}

#[test]
fn generator_is_deterministic_and_counts_are_exact() {
    let spec = DatasetSpec { accidents: 500, pois: 300, ..DatasetSpec::default() };
    let (a, b) = (bench::generate(&spec).unwrap(), bench::generate(&spec).unwrap());
    for (x, y) in a.layers().iter().zip(b.layers()) {
        assert_eq!(x.members(), y.members());
    }
    assert_eq!(a.accidents.len(), 500);
    let other = bench::generate(&DatasetSpec { seed: spec.seed + 1, ..spec.clone() }).unwrap();
    assert_ne!(other.accidents.members(), a.accidents.members());

    let catalog = Catalog::new();
    let spec = DatasetSpec { crossings: 300, accidents: 0, ..DatasetSpec::default() };
    let ds = bench::generate(&spec).unwrap();
    assert!(ds.accidents.is_empty());
    ds.register(&catalog).unwrap();
    let crossing = catalog.type_spec("crossing_features").unwrap();
    let traffic = catalog.entity_relation("traffic").unwrap();
    assert_eq!(catalog.filter_by_type(&crossing, &traffic).len(), 300);
    let school = catalog.type_spec("school_features").unwrap();
    assert_eq!(catalog.filter_by_type(&school, &catalog.entity_relation("pois").unwrap()).len(), spec.schools);
}

#[test]
fn spec_text_round_trips() {
    let spec = DatasetSpec { seed: 9, accidents: 77, block: 150.5, ..DatasetSpec::default() };
    assert_eq!(spec.to_string().parse::<DatasetSpec>().unwrap(), spec);
    assert!("seed = 1\nbogus = 2\n".parse::<DatasetSpec>().is_err());
}

#[test]
fn samples_are_subsets_in_id_order() {
    let ds = bench::generate(&DatasetSpec { accidents: 1000, ..DatasetSpec::default() }).unwrap();
    let s = bench::sample_accidents(&ds.accidents, 100, 5).unwrap();
    assert_eq!(s.len(), 100);
    let ids: Vec<u64> = s.ids().collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    assert!(ids.iter().all(|id| ds.accidents.get(*id).is_some()));
    assert_eq!(bench::sample_accidents(&ds.accidents, 100, 5).unwrap().members(), s.members());
    assert!(bench::sample_accidents(&ds.accidents, 1001, 5).is_err());
}

#[test]
fn sample_edge_sizes() {
    let ds = bench::generate(&DatasetSpec { accidents: 300, ..DatasetSpec::default() }).unwrap();
    assert_eq!(bench::sample_accidents(&ds.accidents, 300, 1).unwrap().members(), ds.accidents.members());
    assert!(bench::sample_accidents(&ds.accidents, 0, 1).unwrap().is_empty());
    let (a, b) = (bench::sample_accidents(&ds.accidents, 100, 1).unwrap(), bench::sample_accidents(&ds.accidents, 100, 2).unwrap());
    assert_eq!((a.len(), b.len()), (100, 100));
    assert_ne!(a.members(), b.members());
}

#[test]
fn without_signals_every_crossing_pair_survives() {
    let spec = DatasetSpec { traffic_signals: 0, accidents: 64, ..DatasetSpec::default() };
    let b = bench::Bench::generate(&spec).unwrap();
    b.install_sample(64, 3).unwrap();
    let s1 = b.run_scenario(bench::Scenario::S1, bench::Mode::Relation, 1).unwrap();
    let s4 = b.run_scenario(bench::Scenario::S4, bench::Mode::Relation, 1).unwrap();
    assert_eq!(s1.rows, s4.rows);
    assert!(!s4.rows.is_empty());
}
