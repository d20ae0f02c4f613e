//! The `spatiolog` command line: load, query, bench and generate.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, Bench, BenchError, DatasetSpec, Mode, Scenario, SweepOptions};
use crate::engine_entity::{EntityPlan, Value};
use crate::engine_relation::{self, resolved_rows};
use crate::qlang::{entity_term, parse, validate, CheckedQuery, Goal, Term};
use crate::store::{
    entities_to_geojson, load_entities_csv, load_entities_geojson, Catalog, Entity, EntityKey, LoadOptions,
    RelationRef,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spatiolog", version, about = "Spatio-logical queries over categorised spatial layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load CSV or GeoJSON layers and write a session manifest.
    Load(LoadArgs),
    /// Run a query file against a session.
    Query(QueryArgs),
    /// Run the scenario scaling sweep and print the timing CSV.
    Bench(BenchArgs),
    /// Write a synthetic dataset as loader-format CSV files.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct LoadArgs {
    /// Layer files; `.geojson`/`.json` are read as GeoJSON, anything else as CSV.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Category per path, in order; defaults to each file's stem.
    #[arg(long = "category", value_delimiter = ',')]
    categories: Vec<String>,
    /// Type spec file loaded on top of the shipped defaults.
    #[arg(long)]
    typespec: Option<PathBuf>,
    /// Coordinates are longitude/latitude and are projected to metres.
    #[arg(long)]
    lonlat: bool,
    #[arg(long, default_value = "spatiolog.session")]
    session: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    file: PathBuf,
    #[arg(long, default_value = "spatiolog.session")]
    session: PathBuf,
    /// entity, relation or relation-iter.
    #[arg(long, default_value = "entity")]
    mode: Mode,
    /// Writes `<prefix>.csv` and `<prefix>.geojson` instead of CSV on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result column whose entities go into the GeoJSON; defaults to the first.
    #[arg(long)]
    select: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Scenario number 1-4, or `all`.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512, 1024, 2048, 4096, 8192])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_RUNS)]
    runs: usize,
    /// Accident sampling seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Check modes against each other, and against the oracle for sizes up to 512.
    #[arg(long)]
    verify: bool,
    /// Dataset spec to generate from; the shipped defaults otherwise.
    #[arg(long, conflicts_with = "session")]
    dataset: Option<PathBuf>,
    /// Bench over previously loaded layers instead of a generated dataset.
    #[arg(long)]
    session: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Dataset spec file; the shipped defaults otherwise.
    spec: Option<PathBuf>,
    /// Overrides the dataset spec's generator seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn data(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_DATA, message: message.to_string() }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        data(e)
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Verification(_) => Failure { code: EXIT_VERIFY, message: e.to_string() },
            other => data(other),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Load(a) => cmd_load(a),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// One manifest line per layer: `layer <category> <csv|geojson> <lonlat 0|1> <count> <path>`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    category: String,
    geojson: bool,
    lonlat: bool,
    count: usize,
    path: PathBuf,
}

#[derive(Debug, Default, PartialEq)]
struct Session {
    typespecs: Vec<PathBuf>,
    layers: Vec<Layer>,
}

impl Session {
    fn write(&self, path: &Path) -> io::Result<()> {
        let mut out = String::from("# spatiolog session\n");
        for t in &self.typespecs {
            out.push_str(&format!("typespec {}\n", t.display()));
        }
        for l in &self.layers {
            out.push_str(&format!(
                "layer {} {} {} {} {}\n",
                l.category,
                if l.geojson { "geojson" } else { "csv" },
                u8::from(l.lonlat),
                l.count,
                l.path.display()
            ));
        }
        fs::write(path, out)
    }

    fn read(path: &Path) -> Result<Session, Failure> {
        let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let mut s = Session::default();
        for (i, line) in text.lines().enumerate() {
            let bad = || data(format!("{}:{}: malformed session line", path.display(), i + 1));
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(p) = line.strip_prefix("typespec ") {
                s.typespecs.push(PathBuf::from(p));
                continue;
            }
            let rest = line.strip_prefix("layer ").ok_or_else(bad)?;
            let mut parts = rest.splitn(5, ' ');
            let (Some(category), Some(format), Some(lonlat), Some(count), Some(p)) =
                (parts.next(), parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad());
            };
            s.layers.push(Layer {
                category: category.to_string(),
                geojson: match format {
                    "csv" => false,
                    "geojson" => true,
                    _ => return Err(bad()),
                },
                lonlat: lonlat == "1",
                count: count.parse().map_err(|_| bad())?,
                path: PathBuf::from(p),
            });
        }
        Ok(s)
    }

    fn catalog(&self) -> Result<Catalog, Failure> {
        let catalog = Catalog::new();
        for t in &self.typespecs {
            load_typespec_file(&catalog, t)?;
        }
        for l in &self.layers {
            let rel = load_layer(&catalog, &l.path, &l.category, l.geojson, l.lonlat)?;
            if rel != l.count {
                return Err(data(format!(
                    "{}: layer `{}` now has {} entities, session recorded {}",
                    l.path.display(),
                    l.category,
                    rel,
                    l.count
                )));
            }
        }
        Ok(catalog)
    }
}

fn load_typespec_file(catalog: &Catalog, path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    catalog.load_type_specs(&text).map_err(|e| data(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn is_geojson(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("geojson" | "json"))
}

fn load_layer(catalog: &Catalog, path: &Path, category: &str, geojson: bool, lonlat: bool) -> Result<usize, Failure> {
    let options = LoadOptions { lonlat };
    let rel = if geojson {
        load_entities_geojson(catalog, path, category, options)
    } else {
        load_entities_csv(catalog, path, category, options)
    }
    .map_err(data)?;
    catalog.spatial_index(rel.name()).map_err(data)?;
    Ok(rel.len())
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

fn cmd_load(a: LoadArgs) -> Result<(), Failure> {
    if !a.categories.is_empty() && a.categories.len() != a.paths.len() {
        return Err(usage(format!("{} categories given for {} paths", a.categories.len(), a.paths.len())));
    }
    let catalog = Catalog::new();
    let mut session = Session::default();
    if let Some(t) = &a.typespec {
        load_typespec_file(&catalog, t)?;
        session.typespecs.push(absolute(t));
    }
    for (i, path) in a.paths.iter().enumerate() {
        let category = match a.categories.get(i) {
            Some(c) => c.clone(),
            None => path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| usage(format!("cannot derive a category from {}", path.display())))?
                .to_string(),
        };
        let geojson = is_geojson(path);
        let count = load_layer(&catalog, path, &category, geojson, a.lonlat)?;
        session.layers.push(Layer { category, geojson, lonlat: a.lonlat, count, path: absolute(path) });
    }
    session.write(&a.session).map_err(|e| data(format!("{}: {e}", a.session.display())))?;
    for l in &session.layers {
        println!("{}\t{}", l.category, l.count);
    }
    Ok(())
}

/// Category of every entity variable, from the tuple terms it appears in.
fn variable_categories(goals: &[Goal], out: &mut Vec<(String, String)>) {
    for g in goals {
        match g {
            Goal::Not(inner) => variable_categories(inner, out),
            Goal::Call(c) => {
                for t in &c.args {
                    if let Some((cat, Term::Var(v))) = entity_term(t) {
                        if !out.iter().any(|(w, _)| w == v) {
                            out.push((v.clone(), cat.to_string()));
                        }
                    }
                }
            }
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Entities per column when the column holds entity keys.
    entities: Vec<Option<Vec<Arc<Entity>>>>,
}

fn entity_table(q: &CheckedQuery, catalog: &Catalog) -> Result<Table, Failure> {
    let plan = EntityPlan::compile(q, catalog)?;
    let rows: Vec<Vec<Value>> = plan.solutions().collect();
    let mut cats = Vec::new();
    variable_categories(&q.goals, &mut cats);
    let header = plan.answer_vars().to_vec();
    let entities = header
        .iter()
        .enumerate()
        .map(|(i, var)| {
            let cat = cats.iter().find(|(v, _)| v == var).map(|(_, c)| c.as_str())?;
            let cat: Arc<str> = cat.into();
            Some(
                rows.iter()
                    .filter_map(|r| r[i].as_id())
                    .filter_map(|id| catalog.get_entity(&EntityKey::new(cat.clone(), id)).ok())
                    .collect(),
            )
        })
        .collect();
    let rows = rows.iter().map(|r| r.iter().map(Value::to_string).collect()).collect();
    Ok(Table { header, rows, entities })
}

fn relation_table(q: &CheckedQuery, catalog: &Catalog, iterate: bool) -> Result<Table, Failure> {
    let out = engine_relation::run(q, catalog)?;
    let (header, rows) = match &out.result {
        RelationRef::Entity(e) => (vec!["id".to_string()], e.ids().map(|id| vec![id.to_string()]).collect()),
        RelationRef::Relationship(r) => {
            (r.schema().to_vec(), r.rows().map(|row| row.iter().map(u64::to_string).collect()).collect())
        }
    };
    let entities = match &out.result {
        RelationRef::Entity(e) => vec![Some(e.members().to_vec())],
        RelationRef::Relationship(r) => {
            // Resolved row by row, as the iterator mode consumes them.
            let resolved: Vec<Vec<Arc<Entity>>> = if iterate {
                resolved_rows(catalog, &out.result).collect::<crate::Result<_>>()?
            } else {
                Vec::new()
            };
            let mut offset = 0;
            r.lineage()
                .iter()
                .enumerate()
                .map(|(c, cat)| {
                    let cat = cat.as_ref()?;
                    let col = if iterate {
                        resolved.iter().map(|row| row[offset].clone()).collect()
                    } else {
                        r.rows().filter_map(|row| catalog.get_entity(&EntityKey::new(cat.clone(), row[c])).ok()).collect()
                    };
                    offset += 1;
                    Some(col)
                })
                .collect()
        }
    };
    Ok(Table { header, rows, entities })
}

fn write_table<W: Write>(t: &Table, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.file).map_err(|e| data(format!("{}: {e}", a.file.display())))?;
    let program = parse(&text).map_err(|e| data(format!("{}: {e}", a.file.display())))?;
    let catalog = Session::read(&a.session)?.catalog()?;
    let checked = validate(&program, Some(&catalog), a.mode.paradigm())
        .map_err(|e| data(format!("{}: {e} (mode {})", a.file.display(), a.mode)))?;
    for w in &checked.warnings {
        eprintln!("warning: {w}");
    }
    let table = match a.mode {
        Mode::Entity => entity_table(&checked, &catalog)?,
        Mode::Relation => relation_table(&checked, &catalog, false)?,
        Mode::RelationIterator => relation_table(&checked, &catalog, true)?,
    };
    let Some(prefix) = a.out else {
        return write_table(&table, io::stdout().lock()).map_err(data);
    };
    let column = match &a.select {
        Some(c) => table.header.iter().position(|h| h == c).ok_or_else(|| {
            usage(format!("no result column `{c}`; columns are {}", table.header.join(", ")))
        })?,
        None => 0,
    };
    let csv_path = prefix.with_extension("csv");
    let file = fs::File::create(&csv_path).map_err(|e| data(format!("{}: {e}", csv_path.display())))?;
    write_table(&table, file).map_err(data)?;
    let Some(Some(ents)) = table.entities.get(column) else {
        return Err(usage(format!("result column `{}` does not hold entity keys", table.header[column])));
    };
    let mut seen = std::collections::HashSet::new();
    let unique = ents.iter().filter(|e| seen.insert(e.key.clone())).map(|e| &**e);
    let geo_path = prefix.with_extension("geojson");
    let json = serde_json::to_string_pretty(&entities_to_geojson(unique)).expect("json values serialize");
    fs::write(&geo_path, json + "\n").map_err(|e| data(format!("{}: {e}", geo_path.display())))?;
    Ok(())
}

fn parse_scenarios(s: &str) -> Result<Vec<Scenario>, Failure> {
    if s == "all" {
        return Ok(Scenario::ALL.to_vec());
    }
    s.split(',')
        .map(|k| {
            k.trim()
                .parse::<u8>()
                .ok()
                .and_then(Scenario::from_number)
                .ok_or_else(|| usage(format!("unknown scenario `{k}`; expected 1-4 or all")))
        })
        .collect()
}

fn read_spec(path: &Path) -> Result<DatasetSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e| data(format!("{}: {e}", path.display())))
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let scenarios = parse_scenarios(&a.scenario)?;
    if a.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if a.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--sizes must be strictly ascending"));
    }
    let bench = match (&a.session, &a.dataset) {
        (Some(s), _) => Bench::from_catalog(Session::read(s)?.catalog()?)?,
        (None, Some(d)) => Bench::generate(&read_spec(d)?)?,
        (None, None) => Bench::generate(&DatasetSpec::default())?,
    };
    let opts = SweepOptions { scenarios, sizes: a.sizes, runs: a.runs, seed: a.seed, verify: a.verify };
    let results = bench.sweep(&opts, |r| {
        eprintln!(
            "scenario {} {:>17} n={:>5} median {:.6}s rows {} probes {}",
            r.scenario, r.mode, r.n, r.median, r.result_rows, r.counters.index_probes
        );
    })?;
    match &a.output {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            bench::write_csv(&results, a.runs, f).map_err(data)
        }
        None => bench::write_csv(&results, a.runs, io::stdout().lock()).map_err(data),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let mut spec = match &a.spec {
        Some(p) => read_spec(p)?,
        None => DatasetSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let ds = bench::generate(&spec)?;
    fs::create_dir_all(&a.out).map_err(|e| data(format!("{}: {e}", a.out.display())))?;
    for layer in ds.layers() {
        let path = a.out.join(format!("{}.csv", layer.name()));
        let f = fs::File::create(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        layer.write_csv(io::BufWriter::new(f)).map_err(data)?;
        println!("{}\t{}", path.display(), layer.len());
    }
    let spec_path = a.out.join("dataset.spec");
    fs::write(&spec_path, spec.to_string()).map_err(|e| data(format!("{}: {e}", spec_path.display())))?;
    Ok(())
}
