//! Synthetic data, accident sampling and the four-scenario scaling harness.

mod dataset;
pub mod oracle;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub use dataset::{
    codes, generate, install_sample, sample_accidents, Dataset, DatasetSpec, ACCIDENTS, POIS, ROADS, TRAFFIC,
};
pub use oracle::RowSet;

use crate::engine_entity::{EntityPlan, Value};
use crate::engine_relation::{self, result_rows, GoalStats};
use crate::qlang::{parse, validate, CheckedQuery, Paradigm};
use crate::spatial_index::Counters;
use crate::store::{Catalog, CatalogError, EntityRelation};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dataset spec line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("sample of {requested} requested but only {available} accidents exist")]
    SampleTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Query(#[from] crate::Error),
    #[error("{0}")]
    Verification(Mismatch),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A result set disagreeing with its reference.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub scenario: Scenario,
    pub n: usize,
    pub mode: Mode,
    pub reference: &'static str,
    pub missing: Vec<Vec<u64>>,
    pub unexpected: Vec<Vec<u64>>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOW: usize = 5;
        write!(
            f,
            "scenario {} n={} mode {}: {} rows missing and {} unexpected versus {}",
            self.scenario,
            self.n,
            self.mode,
            self.missing.len(),
            self.unexpected.len(),
            self.reference
        )?;
        for r in self.missing.iter().take(SHOW) {
            write!(f, "\n  - {r:?}")?;
        }
        for r in self.unexpected.iter().take(SHOW) {
            write!(f, "\n  + {r:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// Accidents near pedestrian crossings.
    S1,
    /// Accidents and traffic features on the same road.
    S2,
    /// Accidents near POIs that are near schools.
    S3,
    /// Accidents near crossings with no traffic signal nearby.
    S4,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(k: u8) -> Option<Scenario> {
        Scenario::ALL.get(usize::from(k).checked_sub(1)?).copied()
    }

    pub fn entity_query(self) -> &'static str {
        match self {
            Scenario::S1 => include_str!("../../scenarios/s1_entity.glq"),
            Scenario::S2 => include_str!("../../scenarios/s2_entity.glq"),
            Scenario::S3 => include_str!("../../scenarios/s3_entity.glq"),
            Scenario::S4 => include_str!("../../scenarios/s4_entity.glq"),
        }
    }

    pub fn relation_query(self) -> &'static str {
        match self {
            Scenario::S1 => include_str!("../../scenarios/s1_relation.glq"),
            Scenario::S2 => include_str!("../../scenarios/s2_relation.glq"),
            Scenario::S3 => include_str!("../../scenarios/s3_relation.glq"),
            Scenario::S4 => include_str!("../../scenarios/s4_relation.glq"),
        }
    }

    pub fn query(self, paradigm: Paradigm) -> &'static str {
        match paradigm {
            Paradigm::Entity => self.entity_query(),
            Paradigm::Relation => self.relation_query(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

pub const WALKTHROUGH_ENTITY: &str = include_str!("../../scenarios/walkthrough_entity.glq");
pub const WALKTHROUGH_RELATION: &str = include_str!("../../scenarios/walkthrough_relation.glq");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Entity,
    Relation,
    /// Relation evaluation followed by per-row consumption of the result.
    RelationIterator,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Entity, Mode::Relation, Mode::RelationIterator];

    pub fn paradigm(self) -> Paradigm {
        match self {
            Mode::Entity => Paradigm::Entity,
            Mode::Relation | Mode::RelationIterator => Paradigm::Relation,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Entity => "entity",
            Mode::Relation => "relation",
            Mode::RelationIterator => "relation_iterator",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "entity" => Ok(Mode::Entity),
            "relation" => Ok(Mode::Relation),
            "relation-iter" | "relation_iterator" => Ok(Mode::RelationIterator),
            other => Err(format!("unknown mode `{other}`; expected entity, relation or relation-iter")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub scenario: Scenario,
    pub mode: Mode,
    pub n: usize,
    /// Wall time of each run, in seconds.
    pub runs: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub result_rows: usize,
    pub counters: Counters,
    /// Per-goal work of the relation modes; empty in entity mode.
    pub goal_stats: Vec<GoalStats>,
    pub rows: RowSet,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

struct Evaluation {
    rows: Vec<Vec<u64>>,
    counters: Counters,
    goal_stats: Vec<GoalStats>,
}

fn id_rows(rows: Vec<Vec<Value>>) -> Vec<Vec<u64>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(|v| v.as_id().expect("scenario answers are ids")).collect())
        .collect()
}

/// Scenario queries parsed and checked once, for all modes.
struct Prepared {
    entity: CheckedQuery,
    relation: CheckedQuery,
}

impl Prepared {
    fn new(s: Scenario, catalog: &Catalog) -> Result<Prepared, crate::Error> {
        let entity = validate(&parse(s.entity_query())?, Some(catalog), Paradigm::Entity)?;
        let relation = validate(&parse(s.relation_query())?, Some(catalog), Paradigm::Relation)?;
        Ok(Prepared { entity, relation })
    }
}

/// A catalog holding the four layers plus the full accident pool that
/// samples are drawn from.
pub struct Bench {
    catalog: Catalog,
    pool: Arc<EntityRelation>,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub scenarios: Vec<Scenario>,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    /// Cross-check modes against each other, and against the oracle for n <= `VERIFY_LIMIT`.
    pub verify: bool,
}

pub const VERIFY_LIMIT: usize = 512;
pub const DEFAULT_RUNS: usize = 10;

/// Per-size sample seed, so each size draws its own sample whatever order sizes run in.
pub fn sample_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl Bench {
    pub fn generate(spec: &DatasetSpec) -> Result<Bench, BenchError> {
        let catalog = Catalog::new();
        generate(spec)?.register(&catalog)?;
        Bench::from_catalog(catalog)
    }

    /// Uses a catalog already holding the four layers; its accidents are the pool.
    pub fn from_catalog(catalog: Catalog) -> Result<Bench, BenchError> {
        let pool = catalog.entity_relation(ACCIDENTS)?;
        for layer in [TRAFFIC, ROADS, POIS] {
            catalog.spatial_index(layer)?;
        }
        Ok(Bench { catalog, pool })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn pool(&self) -> &Arc<EntityRelation> {
        &self.pool
    }

    /// Installs a sample of `n` pool accidents as the `accidents` relation.
    pub fn install_sample(&self, n: usize, seed: u64) -> Result<Arc<EntityRelation>, BenchError> {
        let s = install_sample(&self.catalog, &self.pool, n, seed)?;
        self.catalog.spatial_index(ACCIDENTS)?;
        Ok(s)
    }

    /// Oracle answer on the installed sample.
    pub fn oracle(&self, scenario: Scenario) -> Result<RowSet, BenchError> {
        let c = &self.catalog;
        let (crossing, signal, school) =
            (c.type_spec("crossing_features")?, c.type_spec("traffic_signal_features")?, c.type_spec("school_features")?);
        let types = oracle::OracleTypes { crossing: &crossing, signal: &signal, school: &school };
        Ok(oracle::answer(
            scenario,
            &*c.entity_relation(ACCIDENTS)?,
            &*c.entity_relation(TRAFFIC)?,
            &*c.entity_relation(ROADS)?,
            &*c.entity_relation(POIS)?,
            &types,
        ))
    }

    /// Runs one scenario `runs` times on the installed sample. Generated
    /// relations are dropped before every run and after the last.
    pub fn run_scenario(&self, scenario: Scenario, mode: Mode, runs: usize) -> Result<BenchResult, BenchError> {
        let q = Prepared::new(scenario, &self.catalog)?;
        let n = self.catalog.entity_relation(ACCIDENTS)?.len();
        let mut times = Vec::with_capacity(runs);
        let mut last = None;
        for _ in 0..runs.max(1) {
            self.catalog.drop_generated();
            let (elapsed, eval) = self.timed(&q, mode)?;
            times.push(elapsed);
            last = Some(eval);
        }
        self.catalog.drop_generated();
        times.truncate(runs);
        let eval = last.expect("at least one run");
        let result_rows = eval.rows.len();
        Ok(BenchResult {
            scenario,
            mode,
            n,
            mean: mean(&times),
            median: median(&times),
            runs: times,
            result_rows,
            counters: eval.counters,
            goal_stats: eval.goal_stats,
            rows: eval.rows.into_iter().collect(),
        })
    }

    /// Times full evaluation, including consumption of every solution or row.
    fn timed(&self, q: &Prepared, mode: Mode) -> Result<(f64, Evaluation), BenchError> {
        let start = Instant::now();
        let eval = match mode {
            Mode::Entity => {
                let plan = EntityPlan::compile(&q.entity, &self.catalog)?;
                let mut sols = plan.solutions();
                let rows: Vec<Vec<Value>> = sols.by_ref().collect();
                let elapsed = start.elapsed().as_secs_f64();
                return Ok((elapsed, Evaluation { rows: id_rows(rows), counters: sols.counters(), goal_stats: Vec::new() }));
            }
            Mode::Relation => engine_relation::run(&q.relation, &self.catalog)?,
            Mode::RelationIterator => engine_relation::run_with_iteration(&q.relation, &self.catalog)?.0,
        };
        let elapsed = start.elapsed().as_secs_f64();
        Ok((elapsed, Evaluation { rows: result_rows(&eval.result), counters: eval.counters, goal_stats: eval.goals }))
    }

    /// Cross-checks the three modes of one scenario/size, and the oracle when `n` is small.
    pub fn verify(&self, results: &[BenchResult]) -> Result<(), BenchError> {
        let Some(first) = results.first() else { return Ok(()) };
        let reference: (RowSet, &'static str) = if first.n <= VERIFY_LIMIT {
            (self.oracle(first.scenario)?, "the brute-force oracle")
        } else {
            (first.rows.clone(), "entity mode")
        };
        for r in results {
            check_rows(r, &reference.0, reference.1)?;
        }
        Ok(())
    }

    /// Every scenario × size × mode, in that nesting order.
    pub fn sweep(&self, opts: &SweepOptions, mut progress: impl FnMut(&BenchResult)) -> Result<Vec<BenchResult>, BenchError> {
        let mut out = Vec::new();
        for &scenario in &opts.scenarios {
            for &n in &opts.sizes {
                self.install_sample(n, sample_seed(opts.seed, n))?;
                let mut group = Vec::new();
                for mode in Mode::ALL {
                    let r = self.run_scenario(scenario, mode, opts.runs)?;
                    progress(&r);
                    group.push(r);
                }
                if opts.verify {
                    self.verify(&group)?;
                }
                out.extend(group);
            }
        }
        Ok(out)
    }
}

fn check_rows(r: &BenchResult, reference: &RowSet, name: &'static str) -> Result<(), BenchError> {
    if r.rows == *reference && r.result_rows == reference.len() {
        return Ok(());
    }
    Err(BenchError::Verification(Mismatch {
        scenario: r.scenario,
        n: r.n,
        mode: r.mode,
        reference: name,
        missing: reference.difference(&r.rows).cloned().collect(),
        unexpected: r.rows.difference(reference).cloned().collect(),
    }))
}

/// The scaling CSV: one row per result, `runs` timing columns.
pub fn write_csv<W: Write>(results: &[BenchResult], runs: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scenario".to_string(), "mode".into(), "n".into()];
    header.extend((1..=runs).map(|i| format!("run_{i}")));
    header.extend(["mean", "median", "result_rows", "index_probes", "distance_evals"].map(String::from));
    w.write_record(&header)?;
    for r in results {
        let mut rec = vec![r.scenario.to_string(), r.mode.to_string(), r.n.to_string()];
        rec.extend(r.runs.iter().map(|t| format!("{t:.9}")));
        rec.extend([
            format!("{:.9}", r.mean),
            format!("{:.9}", r.median),
            r.result_rows.to_string(),
            r.counters.index_probes.to_string(),
            r.counters.distance_evals.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
