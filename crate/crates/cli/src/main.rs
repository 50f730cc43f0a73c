use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use regintel_core::corpus::{generate_synthetic, reconcile, CorpusStore, FilingType, ReconciledView, SchemaRegistry};
use regintel_core::eval::{
    record_perfect_fixtures, run_agentic, run_retrieval_ablation, run_routing, EmbedderChoice, EvalReport,
    ProviderChoice, RoutingInputs, RoutingSection, RunConfig, RunMetadata,
};
use regintel_core::gateway::{write_fixtures, ChatProvider, DeterministicProvider, RemoteProvider, ScriptedProvider};
use regintel_core::index::{persona_index, table_index, Embedder, HashFeatureEmbedder, IndexScope, RemoteEmbedder, ScopedIndexes};
use regintel_core::questbench::{self, datapoint_stats, generate_benchmark, QuestionInstance, Variant};
use regintel_core::routing::Strategy;

#[derive(Parser)]
#[command(name = "regintel", version, about = "Retrieval, routing and agentic evaluation over synthetic fund filings")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic corpora.
    Corpus {
        #[command(subcommand)]
        action: CorpusCmd,
    },
    /// Record indexes.
    Index {
        #[command(subcommand)]
        action: IndexCmd,
    },
    /// Question benchmarks.
    Bench {
        #[command(subcommand)]
        action: BenchCmd,
    },
    /// Routing evaluation.
    Route {
        #[command(subcommand)]
        action: RouteCmd,
    },
    /// Full pipeline evaluation.
    Agentic {
        #[command(subcommand)]
        action: AgenticCmd,
    },
    /// Assembles a JSON and markdown report, either by merging section files
    /// or by running every evaluation.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    Gen(CorpusGen),
}

#[derive(Subcommand)]
enum IndexCmd {
    Build(IndexBuild),
}

#[derive(Subcommand)]
enum BenchCmd {
    Gen(BenchGen),
}

#[derive(Subcommand)]
enum RouteCmd {
    Run(RouteRun),
}

#[derive(Subcommand)]
enum AgenticCmd {
    Run(AgenticRun),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Det,
    Scripted,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Embed,
    Gen,
    Swarm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Embed => Strategy::EmbeddingRag,
            StrategyArg::Gen => Strategy::Generative,
            StrategyArg::Swarm => Strategy::Swarm,
        }
    }
}

/// Flags shared by every stage that reads a corpus.
#[derive(Args, Clone)]
struct Common {
    /// Corpus seed (used when no corpus file is given).
    #[arg(long)]
    seed: Option<u64>,
    /// Corpus JSONL; generated from the seed when absent.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum)]
    provider: Option<ProviderArg>,
    /// Fixture JSONL for the scripted provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Worker threads (0 = automatic).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CorpusGen {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    filers: Option<usize>,
    #[arg(long)]
    records_per_table: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexBuild {
    #[command(flatten)]
    common: Common,
    /// `all`, `global`, `agent`, `table`, or one scope such as `table:nport_holdings`.
    #[arg(long, default_value = "all")]
    scope: String,
    /// Output directory for index snapshots.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchGen {
    #[command(flatten)]
    common: Common,
    /// Benchmark sampling seed.
    #[arg(long)]
    bench_seed: Option<u64>,
    #[arg(long)]
    per_template: Option<usize>,
    /// Paraphrases per templated question.
    #[arg(long)]
    variations: Option<usize>,
    /// Also write fixtures that replay perfect answers for this benchmark.
    #[arg(long)]
    perfect_fixtures: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RouteRun {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bench: PathBuf,
    /// Strategies to run; all when omitted.
    #[arg(long, value_enum)]
    strategy: Vec<StrategyArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AgenticRun {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bench: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Section reports to merge; when empty every evaluation is run.
    #[arg(long = "from")]
    from: Vec<PathBuf>,
    #[arg(long)]
    bench: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Vec<StrategyArg>,
    /// Output directory for report.json and report.md.
    #[arg(long)]
    out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn apply(config: &mut RunConfig, c: &Common) {
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(d) = c.dim {
        config.dim = d;
    }
    if let Some(p) = c.provider {
        config.provider = match p {
            ProviderArg::Det => ProviderChoice::Det,
            ProviderArg::Scripted => ProviderChoice::Scripted,
            ProviderArg::Remote => ProviderChoice::Remote,
        };
    }
    if let Some(f) = &c.fixtures {
        config.fixtures = Some(f.display().to_string());
    }
    if let Some(t) = c.threads {
        config.threads = t;
    }
}

struct Loaded {
    raw_records: usize,
    view: ReconciledView,
}

fn load_corpus(config: &RunConfig, path: Option<&Path>) -> Result<Loaded> {
    let registry = Arc::new(SchemaRegistry::builtin());
    let store = match path {
        Some(p) => {
            let outcome = CorpusStore::ingest_jsonl(p, registry)?;
            for r in &outcome.rejections {
                log::warn!("{}:{}: {}", p.display(), r.line, r.reason);
            }
            outcome.store
        }
        None => generate_synthetic(&config.generator, config.seed, registry),
    };
    let view = reconcile(&store)?;
    Ok(Loaded { raw_records: store.len(), view })
}

fn make_provider(config: &RunConfig) -> Result<Box<dyn ChatProvider>> {
    Ok(match config.provider {
        ProviderChoice::Det => Box::new(DeterministicProvider::new()),
        ProviderChoice::Scripted => {
            let Some(path) = &config.fixtures else { bail!("--provider scripted needs --fixtures") };
            Box::new(ScriptedProvider::from_jsonl(path)?)
        }
        ProviderChoice::Remote => Box::new(RemoteProvider::from_env(config.remote.clone())?),
    })
}

fn make_embedder(config: &RunConfig) -> Result<Box<dyn Embedder>> {
    Ok(match config.embedder {
        EmbedderChoice::Hash => Box::new(HashFeatureEmbedder::new(config.dim)?),
        EmbedderChoice::Remote => Box::new(RemoteEmbedder::from_env(config.remote_embedding.clone(), config.dim)?),
    })
}

fn read_bench(path: &Path) -> Result<Vec<QuestionInstance>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(questbench::read_jsonl(BufReader::new(file))?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn metadata(loaded: &Loaded, bench: &[QuestionInstance], provider: &str, embedder: &str) -> RunMetadata {
    let templated = bench.iter().filter(|i| i.variant == Variant::Templated).count();
    RunMetadata {
        crate_version: env!("CARGO_PKG_VERSION").into(),
        registry_version: loaded.view.registry().version().into(),
        provider: provider.into(),
        embedder: embedder.into(),
        raw_records: loaded.raw_records,
        reconciled_records: loaded.view.len(),
        instances: bench.len(),
        templated,
        variegated: bench.len() - templated,
    }
}

fn routing_section(
    config: &RunConfig,
    view: &ReconciledView,
    bench: &[QuestionInstance],
    provider: &dyn ChatProvider,
    embedder: &dyn Embedder,
) -> Result<RoutingSection> {
    let registry = view.registry();
    let personas = persona_index::<f32>(registry, embedder)?;
    let tables: BTreeMap<FilingType, _> = FilingType::ALL
        .iter()
        .map(|&ft| Ok((ft, table_index::<f32>(registry, ft, embedder)?)))
        .collect::<Result<_>>()?;
    let inputs = RoutingInputs { registry, provider, embedder, personas: &personas, tables: &tables, swarm: config.swarm };
    let pool = config.pool()?;
    let mut rows = Vec::new();
    for &s in &config.strategies {
        rows.extend(run_routing(s, bench, &inputs, config.credit, &pool)?);
    }
    Ok(RoutingSection { credit: config.credit, rows })
}

fn write_report(report: &EvalReport, out: &Path) -> Result<()> {
    if out.extension().is_some_and(|e| e == "json") {
        create(out)?.write_all(report.to_json().as_bytes())?;
    } else {
        fs::create_dir_all(out)?;
        create(&out.join("report.json"))?.write_all(report.to_json().as_bytes())?;
        create(&out.join("report.md"))?.write_all(report.to_markdown().as_bytes())?;
    }
    Ok(())
}

fn corpus_gen(mut config: RunConfig, a: CorpusGen) -> Result<()> {
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(f) = a.filers {
        config.generator.filers = f;
    }
    if let Some(r) = a.records_per_table {
        config.generator.records_per_table = r;
    }
    let store = generate_synthetic(&config.generator, config.seed, Arc::new(SchemaRegistry::builtin()));
    store.write_jsonl(create(&a.out)?)?;
    println!("wrote {} records ({} amendments) to {}", store.len(), store.amendment_count(), a.out.display());
    Ok(())
}

fn index_build(config: RunConfig, a: IndexBuild) -> Result<()> {
    let loaded = load_corpus(&config, a.common.corpus.as_deref())?;
    let embedder = make_embedder(&config)?;
    let indexes = ScopedIndexes::<f32>::build(&loaded.view, embedder.as_ref())?;
    let mut selected: Vec<(String, &regintel_core::FlatIndexF32)> = Vec::new();
    let all = a.scope == "all";
    if all || a.scope == "global" {
        selected.push(("global".into(), &indexes.global));
    }
    if all || a.scope == "agent" {
        selected.extend(indexes.agents.iter().map(|(ft, i)| (format!("agent-{}", ft.name()), i)));
    }
    if all || a.scope == "table" {
        selected.extend(indexes.tables.iter().map(|(t, i)| (format!("table-{t}"), i)));
    }
    if selected.is_empty() {
        let scope: IndexScope = a.scope.parse()?;
        scope.validate(loaded.view.registry())?;
        let index = indexes.get(&scope).context("no index for scope")?;
        selected.push((scope.to_string().replace(':', "-"), index));
    }
    fs::create_dir_all(&a.out)?;
    for (name, index) in &selected {
        index.write_snapshot(create(&a.out.join(format!("{name}.idx")))?)?;
    }
    println!("wrote {} index snapshots ({} vectors in the global index) to {}", selected.len(), indexes.global.len(), a.out.display());
    Ok(())
}

fn bench_gen(mut config: RunConfig, a: BenchGen) -> Result<()> {
    if let Some(s) = a.bench_seed {
        config.bench.seed = s;
    }
    if let Some(n) = a.per_template {
        config.bench.per_template = n;
    }
    if let Some(n) = a.variations {
        config.bench.variations = n;
    }
    let loaded = load_corpus(&config, a.common.corpus.as_deref())?;
    let provider = make_provider(&config)?;
    let bench = generate_benchmark(&loaded.view, &config.bench, provider.as_ref())?;
    questbench::write_jsonl(&bench, create(&a.out)?)?;
    println!("wrote {} questions to {}", bench.len(), a.out.display());
    println!("template  instances  median  total");
    for s in datapoint_stats(&bench) {
        println!("{:<8}  {:>9}  {:>6}  {:>5}", s.template_id, s.instances, s.median, s.total);
    }
    if let Some(path) = &a.perfect_fixtures {
        let embedder = make_embedder(&config)?;
        let tables = ScopedIndexes::<f32>::build_tables(&loaded.view, embedder.as_ref())?;
        let fixtures = record_perfect_fixtures(
            &bench,
            &loaded.view,
            &tables,
            embedder.as_ref(),
            config.swarm,
            &config.pipeline,
            &config.pool()?,
        )?;
        write_fixtures(&fixtures, create(path)?)?;
        println!("wrote {} perfect fixtures to {}", fixtures.len(), path.display());
    }
    Ok(())
}

fn route_run(mut config: RunConfig, a: RouteRun) -> Result<()> {
    if !a.strategy.is_empty() {
        config.strategies = a.strategy.iter().map(|&s| s.into()).collect();
    }
    let loaded = load_corpus(&config, a.common.corpus.as_deref())?;
    let bench = read_bench(&a.bench)?;
    let provider = make_provider(&config)?;
    let embedder = make_embedder(&config)?;
    let routing = routing_section(&config, &loaded.view, &bench, provider.as_ref(), embedder.as_ref())?;
    let report = EvalReport {
        metadata: metadata(&loaded, &bench, provider.id(), &embedder.fingerprint()),
        config,
        retrieval: None,
        routing: Some(routing),
        agentic: None,
    };
    write_report(&report, &a.out)?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn agentic_run(config: RunConfig, a: AgenticRun) -> Result<()> {
    let loaded = load_corpus(&config, a.common.corpus.as_deref())?;
    let bench = read_bench(&a.bench)?;
    let provider = make_provider(&config)?;
    let embedder = make_embedder(&config)?;
    let tables = ScopedIndexes::<f32>::build_tables(&loaded.view, embedder.as_ref())?;
    let agentic = run_agentic(
        &bench,
        &loaded.view,
        provider.as_ref(),
        &tables,
        embedder.as_ref(),
        &config.pipeline,
        &config.tolerances,
        &config.pool()?,
    );
    let report = EvalReport {
        metadata: metadata(&loaded, &bench, provider.id(), &embedder.fingerprint()),
        config,
        retrieval: None,
        routing: None,
        agentic: Some(agentic),
    };
    write_report(&report, &a.out)?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn merge(paths: &[PathBuf]) -> Result<EvalReport> {
    let mut merged: Option<EvalReport> = None;
    for p in paths {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        match &mut merged {
            None => merged = Some(r),
            Some(m) => {
                m.retrieval = r.retrieval.or(m.retrieval.take());
                m.agentic = r.agentic.or(m.agentic.take());
                match (&mut m.routing, r.routing) {
                    (Some(a), Some(b)) => a.rows.extend(b.rows),
                    (slot @ None, b) => *slot = b,
                    _ => {}
                }
            }
        }
    }
    merged.context("no section files given")
}

fn report(mut config: RunConfig, a: ReportArgs) -> Result<()> {
    let report = if !a.from.is_empty() {
        merge(&a.from)?
    } else {
        if !a.strategy.is_empty() {
            config.strategies = a.strategy.iter().map(|&s| s.into()).collect();
        }
        let loaded = load_corpus(&config, a.common.corpus.as_deref())?;
        let provider = make_provider(&config)?;
        let embedder = make_embedder(&config)?;
        let bench = match &a.bench {
            Some(p) => read_bench(p)?,
            None => generate_benchmark(&loaded.view, &config.bench, provider.as_ref())?,
        };
        let pool = config.pool()?;
        let indexes = ScopedIndexes::<f32>::build(&loaded.view, embedder.as_ref())?;
        let retrieval = run_retrieval_ablation(&bench, &loaded.view, &indexes, embedder.as_ref(), &pool)?;
        let routing = routing_section(&config, &loaded.view, &bench, provider.as_ref(), embedder.as_ref())?;
        let agentic = run_agentic(
            &bench,
            &loaded.view,
            provider.as_ref(),
            &indexes.tables,
            embedder.as_ref(),
            &config.pipeline,
            &config.tolerances,
            &pool,
        );
        EvalReport {
            metadata: metadata(&loaded, &bench, provider.id(), &embedder.fingerprint()),
            config,
            retrieval: Some(retrieval),
            routing: Some(routing),
            agentic: Some(agentic),
        }
    };
    write_report(&report, &a.out)?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = load_config(cli.config.as_deref()).and_then(|mut config| match cli.command {
        Command::Corpus { action: CorpusCmd::Gen(a) } => corpus_gen(config, a),
        Command::Index { action: IndexCmd::Build(a) } => {
            apply(&mut config, &a.common);
            index_build(config, a)
        }
        Command::Bench { action: BenchCmd::Gen(a) } => {
            apply(&mut config, &a.common);
            bench_gen(config, a)
        }
        Command::Route { action: RouteCmd::Run(a) } => {
            apply(&mut config, &a.common);
            route_run(config, a)
        }
        Command::Agentic { action: AgenticCmd::Run(a) } => {
            apply(&mut config, &a.common);
            agentic_run(config, a)
        }
        Command::Report(a) => {
            apply(&mut config, &a.common);
            report(config, a)
        }
    });
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
