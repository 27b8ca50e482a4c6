//! Command-line front end. Every subcommand reads flags first, then an
//! optional `key = value` config file, then built-in defaults; the effective
//! settings plus input digests go to a manifest beside each file output.
//! Machine-readable reports print to stdout as single-line JSON; progress
//! goes to stderr. Exit codes: 0 success, 1 usage error, 2 data error.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lexbridge::align::{
    build_enhanced_space, fit_cca, fit_least_squares, load_model, select_bridges, AlignModel,
    CcaModel, ConflictPolicy, Regularization, SeedLexicon,
};
use lexbridge::config::{resolve, resolve_opt, resolve_required, ConfigFile};
use lexbridge::downstream::{
    drop_vocab_fraction, evaluate_classifier, load_labeled_corpus, split_corpus,
    train_linear_classifier, ClassifierOptions,
};
use lexbridge::embed::EmbeddingSpace;
use lexbridge::error::LexError;
use lexbridge::eval::{
    downsample_corpus, evaluate_similarity, load_similarity_dataset, maxsim_similarity_fn,
    space_similarity, RarityConfig,
};
use lexbridge::graph::{EdgeKind, KnowledgeGraph};
use lexbridge::manifest::RunManifest;
use lexbridge::senses::{compose_word_space, SenseMap};
use lexbridge::sgns::{read_corpus, token_counts, train_sgns, SgnsConfig};
use lexbridge::walker::{generate_walks, write_walks, WalkConfig};

#[derive(Parser)]
#[command(name = "lexbridge", version, about = "Align corpus and knowledge-base embedding spaces to induce vectors for unseen words")]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// RNG seed for every random operation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 1 is the deterministic mode.
    #[arg(long, global = true, env = "LEXBRIDGE_THREADS")]
    threads: Option<usize>,

    /// Write the run manifest to this path (default: <output>.manifest.json).
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Print statistics of a knowledge graph edge list.
    GraphStats(GraphStatsArgs),
    /// Generate second-order biased random walks over a knowledge graph.
    Walk(WalkArgs),
    /// Train skip-gram embeddings on a sentence corpus.
    TrainSgns(TrainArgs),
    /// Build the word-level KB space by averaging synset vectors.
    ComposeWords(ComposeArgs),
    /// Pick monosemous words shared by both spaces as alignment bridges.
    SelectBridges(BridgesArgs),
    /// Fit the CCA alignment between the corpus and KB word spaces.
    FitCca(FitCcaArgs),
    /// Fit the least-squares baseline mapping KB vectors into corpus space.
    FitLs(FitLsArgs),
    /// Project a space through a fitted alignment model.
    Project(ProjectArgs),
    /// Build the enhanced union space from both projections.
    Enhance(EnhanceArgs),
    /// Score a space (cosine) or KB space (MaxSim) on a similarity dataset.
    EvalSim(EvalSimArgs),
    /// Simulate rarity: cap target-word occurrences in a corpus.
    Downsample(DownsampleArgs),
    /// Train and evaluate a linear classifier over mean embeddings.
    Classify(ClassifyArgs),
    /// Run walk, training, bridges, CCA, enhancement and evaluation in order.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GraphStatsArgs {
    /// Relation edge list, `node_a node_b` per line.
    #[arg(long, value_name = "FILE")]
    edges: Option<PathBuf>,
    /// Gloss co-occurrence edge list merged on top.
    #[arg(long, value_name = "FILE")]
    gloss: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long, value_name = "FILE")]
    edges: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    gloss: Option<PathBuf>,
    /// Output walk corpus, one walk per line.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    walk_length: Option<usize>,
    #[arg(long, value_name = "N")]
    walks_per_node: Option<usize>,
    /// Return parameter.
    #[arg(long, value_name = "F")]
    p: Option<f64>,
    /// In-out parameter.
    #[arg(long, value_name = "F")]
    q: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Sentence corpus, whitespace-tokenized lines.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Output embedding space in word2vec text format.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    dim: Option<usize>,
    #[arg(long, value_name = "N")]
    window: Option<usize>,
    #[arg(long, value_name = "N")]
    negatives: Option<usize>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "F")]
    lr: Option<f64>,
    #[arg(long, value_name = "N")]
    min_count: Option<u64>,
    #[arg(long, value_name = "F")]
    subsample: Option<f64>,
}

#[derive(Args)]
struct ComposeArgs {
    /// Synset-level KB space.
    #[arg(long, value_name = "FILE")]
    kb_space: Option<PathBuf>,
    /// Sense map, `word<TAB>synset1,synset2,...`.
    #[arg(long, value_name = "FILE")]
    senses: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BridgesArgs {
    #[arg(long, value_name = "FILE")]
    corpus_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    kb_word_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    senses: Option<PathBuf>,
    /// Keep at most this many bridges.
    #[arg(long, value_name = "N")]
    bridges: Option<usize>,
    /// Rank candidates by their frequency in this corpus.
    #[arg(long, value_name = "FILE")]
    rank_corpus: Option<PathBuf>,
    /// Output bridge list, one word per line.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitCcaArgs {
    #[arg(long, value_name = "FILE")]
    corpus_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    kb_word_space: Option<PathBuf>,
    /// Bridge word list, one per line.
    #[arg(long, value_name = "FILE")]
    bridges_file: Option<PathBuf>,
    /// Covariance ridge epsilon; omitted = trace-scaled automatic value.
    #[arg(long, value_name = "F")]
    reg: Option<f64>,
    /// Keep only the top-K components by correlation.
    #[arg(long, value_name = "K")]
    truncate: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitLsArgs {
    #[arg(long, value_name = "FILE")]
    corpus_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    kb_word_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    bridges_file: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    ridge: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    /// CCA1 or LS1 model file.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Which side of a CCA model to apply: corpus or kb.
    #[arg(long, value_name = "SIDE")]
    side: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long, value_name = "FILE")]
    corpus_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    kb_word_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Policy for words in both vocabularies: corpus, kb or average.
    #[arg(long, value_name = "POLICY")]
    conflict: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalSimArgs {
    /// Word space scored with cosine similarity.
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    /// Synset space scored with MaxSim; requires --senses.
    #[arg(long, value_name = "FILE")]
    kb_space: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    senses: Option<PathBuf>,
    /// Similarity dataset, `word1<TAB>word2<TAB>score`.
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Lowercase dataset words (default true).
    #[arg(long, value_name = "BOOL")]
    lowercase: Option<bool>,
}

#[derive(Args)]
struct DownsampleArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Target word list, one per line.
    #[arg(long, value_name = "FILE")]
    targets: Option<PathBuf>,
    /// Maximum surviving occurrences per target word.
    #[arg(long, value_name = "T")]
    rarity_t: Option<u64>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Labeled corpus, `label<TAB>token token ...`.
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    /// Fraction of the dataset's in-space vocabulary to drop before training.
    #[arg(long, value_name = "X")]
    drop_x: Option<f64>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "F")]
    lr: Option<f64>,
    #[arg(long, value_name = "F")]
    l2: Option<f64>,
    #[arg(long, value_name = "F")]
    test_fraction: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Directory receiving every pipeline artifact.
    #[arg(long, value_name = "DIR")]
    outdir: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    edges: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    gloss: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    senses: Option<PathBuf>,
    /// Text corpus; a corpus space is trained from it unless --corpus-space
    /// is given.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    corpus_space: Option<PathBuf>,
    /// Optional similarity dataset evaluated on the enhanced space.
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    walk_length: Option<usize>,
    #[arg(long, value_name = "N")]
    walks_per_node: Option<usize>,
    #[arg(long, value_name = "F")]
    p: Option<f64>,
    #[arg(long, value_name = "F")]
    q: Option<f64>,
    #[arg(long, value_name = "N")]
    dim: Option<usize>,
    #[arg(long, value_name = "N")]
    window: Option<usize>,
    #[arg(long, value_name = "N")]
    negatives: Option<usize>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "F")]
    lr: Option<f64>,
    #[arg(long, value_name = "N")]
    min_count: Option<u64>,
    #[arg(long, value_name = "N")]
    bridges: Option<usize>,
    #[arg(long, value_name = "F")]
    reg: Option<f64>,
    #[arg(long, value_name = "POLICY")]
    conflict: Option<String>,
}

enum CliError {
    Usage(String),
    Data(LexError),
}

impl From<LexError> for CliError {
    fn from(e: LexError) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Settings shared by every subcommand after resolution.
struct Ctx {
    cfg: ConfigFile,
    seed: u64,
    threads: usize,
    manifest_override: Option<PathBuf>,
}

impl Ctx {
    /// Resolution errors are usage errors: the value never reached execution.
    fn res<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        resolve(flag, &self.cfg, key, default).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn res_opt<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        resolve_opt(flag, &self.cfg, key).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn res_req<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        resolve_required(flag, &self.cfg, key).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn manifest_path(&self, out: &Path) -> PathBuf {
        self.manifest_override
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", out.display())))
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => ConfigFile::default(),
    };
    let seed = resolve(cli.seed, &cfg, "seed", 42).map_err(|e| CliError::Usage(e.to_string()))?;
    let threads =
        resolve(cli.threads, &cfg, "threads", 1).map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Ctx {
        cfg,
        seed,
        threads,
        manifest_override: cli.manifest,
    };
    match cli.command {
        Command::GraphStats(a) => cmd_graph_stats(a, &ctx),
        Command::Walk(a) => cmd_walk(a, &ctx),
        Command::TrainSgns(a) => cmd_train(a, &ctx),
        Command::ComposeWords(a) => cmd_compose(a, &ctx),
        Command::SelectBridges(a) => cmd_bridges(a, &ctx),
        Command::FitCca(a) => cmd_fit_cca(a, &ctx),
        Command::FitLs(a) => cmd_fit_ls(a, &ctx),
        Command::Project(a) => cmd_project(a, &ctx),
        Command::Enhance(a) => cmd_enhance(a, &ctx),
        Command::EvalSim(a) => cmd_eval_sim(a, &ctx),
        Command::Downsample(a) => cmd_downsample(a, &ctx),
        Command::Classify(a) => cmd_classify(a, &ctx),
        Command::Pipeline(a) => cmd_pipeline(a, &ctx),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult {
    let line = serde_json::to_string(value)
        .map_err(|e| CliError::Data(LexError::InvalidInput(format!("report: {e}"))))?;
    println!("{line}");
    Ok(())
}

fn load_graph(edges: &Path, gloss: Option<&Path>) -> Result<KnowledgeGraph, LexError> {
    let (mut graph, report) = KnowledgeGraph::load_edge_list(edges, EdgeKind::Relation)?;
    eprintln!(
        "loaded {}: {} nodes, {} edges ({} duplicates, {} self-loops skipped)",
        edges.display(),
        graph.node_count(),
        report.edges_added,
        report.duplicates_skipped,
        report.self_loops_skipped
    );
    if let Some(gloss) = gloss {
        let merge = graph.merge_gloss_edges(gloss)?;
        eprintln!(
            "merged {}: +{} gloss edges, +{} nodes",
            gloss.display(),
            merge.edges_added,
            merge.nodes_added
        );
    }
    Ok(graph)
}

fn load_space(path: &Path) -> Result<EmbeddingSpace, LexError> {
    let (space, report) = EmbeddingSpace::load_text(path)?;
    if report.duplicates_skipped > 0 {
        eprintln!(
            "{}: skipped {} duplicate rows",
            path.display(),
            report.duplicates_skipped
        );
    }
    Ok(space)
}

fn read_word_list(path: &Path) -> Result<Vec<String>, LexError> {
    let text = std::fs::read_to_string(path).map_err(|e| LexError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn cmd_graph_stats(a: GraphStatsArgs, ctx: &Ctx) -> CliResult {
    let edges: PathBuf = ctx.res_req(a.edges, "edges")?;
    let gloss: Option<PathBuf> = ctx.res_opt(a.gloss, "gloss")?;
    let graph = load_graph(&edges, gloss.as_deref())?;
    print_json(&graph.stats())?;
    if let Some(path) = &ctx.manifest_override {
        let mut m = RunManifest::new("graph-stats");
        m.setting("edges", edges.display());
        m.input(&edges)?;
        if let Some(g) = &gloss {
            m.setting("gloss", g.display());
            m.input(g)?;
        }
        m.write(path)?;
    }
    Ok(())
}

fn cmd_walk(a: WalkArgs, ctx: &Ctx) -> CliResult {
    let edges: PathBuf = ctx.res_req(a.edges, "edges")?;
    let gloss: Option<PathBuf> = ctx.res_opt(a.gloss, "gloss")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let wcfg = WalkConfig {
        walk_length: ctx.res(a.walk_length, "walk_length", 100)?,
        walks_per_node: ctx.res(a.walks_per_node, "walks_per_node", 10)?,
        return_param: ctx.res(a.p, "p", 1.0)?,
        inout_param: ctx.res(a.q, "q", 1.0)?,
        seed: ctx.seed,
        threads: ctx.threads,
    };
    let graph = load_graph(&edges, gloss.as_deref())?;
    let walks = generate_walks(&graph, &wcfg)?;
    let file = std::fs::File::create(&out).map_err(|e| LexError::io(&out, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_walks(&graph, &walks, &mut w).map_err(|e| LexError::io(&out, e))?;
    eprintln!("wrote {} walks to {}", walks.len(), out.display());

    let mut m = RunManifest::new("walk");
    m.setting("seed", wcfg.seed)
        .setting("threads", wcfg.threads)
        .setting("walk_length", wcfg.walk_length)
        .setting("walks_per_node", wcfg.walks_per_node)
        .setting("p", wcfg.return_param)
        .setting("q", wcfg.inout_param)
        .setting("edges", edges.display());
    m.input(&edges)?;
    if let Some(g) = &gloss {
        m.setting("gloss", g.display());
        m.input(g)?;
    }
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({ "walks": walks.len(), "out": out.display().to_string() }))
}

fn sgns_config(ctx: &Ctx, a: &TrainArgs) -> CliResult<SgnsConfig> {
    Ok(SgnsConfig {
        dim: ctx.res(a.dim, "dim", 100)?,
        window: ctx.res(a.window, "window", 10)?,
        negatives: ctx.res(a.negatives, "negatives", 5)?,
        epochs: ctx.res(a.epochs, "epochs", 5)?,
        learning_rate: ctx.res(a.lr, "lr", 0.025)?,
        min_count: ctx.res(a.min_count, "min_count", 1)?,
        subsample: ctx.res(a.subsample, "subsample", 0.0)?,
        seed: ctx.seed,
        threads: ctx.threads,
    })
}

fn cmd_train(a: TrainArgs, ctx: &Ctx) -> CliResult {
    let corpus: PathBuf = ctx.res_req(a.corpus.clone(), "corpus")?;
    let out: PathBuf = ctx.res_req(a.out.clone(), "out")?;
    let scfg = sgns_config(ctx, &a)?;
    let sentences = read_corpus(&corpus)?;
    let (space, report) = train_sgns(&sentences, &scfg)?;
    space.save_text(&out)?;
    eprintln!(
        "trained {} vectors (dim {}) over {} pairs",
        space.len(),
        space.dim(),
        report.pairs_trained
    );

    let mut m = RunManifest::new("train-sgns");
    m.setting("seed", scfg.seed)
        .setting("threads", scfg.threads)
        .setting("dim", scfg.dim)
        .setting("window", scfg.window)
        .setting("negatives", scfg.negatives)
        .setting("epochs", scfg.epochs)
        .setting("lr", scfg.learning_rate)
        .setting("min_count", scfg.min_count)
        .setting("subsample", scfg.subsample)
        .setting("corpus", corpus.display());
    m.input(&corpus)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&report)
}

fn cmd_compose(a: ComposeArgs, ctx: &Ctx) -> CliResult {
    let kb_space: PathBuf = ctx.res_req(a.kb_space, "kb_space")?;
    let senses: PathBuf = ctx.res_req(a.senses, "senses")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let space = load_space(&kb_space)?;
    let map = SenseMap::load(&senses)?;
    let (words, report) = compose_word_space(&space, &map)?;
    words.save_text(&out)?;
    eprintln!(
        "composed {} word vectors ({} words had no embedded synset)",
        report.words_composed, report.words_skipped
    );

    let mut m = RunManifest::new("compose-words");
    m.setting("kb_space", kb_space.display())
        .setting("senses", senses.display());
    m.input(&kb_space)?;
    m.input(&senses)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&report)
}

fn cmd_bridges(a: BridgesArgs, ctx: &Ctx) -> CliResult {
    let corpus_space: PathBuf = ctx.res_req(a.corpus_space, "corpus_space")?;
    let kb_word_space: PathBuf = ctx.res_req(a.kb_word_space, "kb_word_space")?;
    let senses: PathBuf = ctx.res_req(a.senses, "senses")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let max_bridges = ctx.res(a.bridges, "bridges", 5000)?;
    let rank_corpus: Option<PathBuf> = ctx.res_opt(a.rank_corpus, "rank_corpus")?;

    let corpus = load_space(&corpus_space)?;
    let kb = load_space(&kb_word_space)?;
    let map = SenseMap::load(&senses)?;
    let counts = match &rank_corpus {
        Some(path) => Some(token_counts(&read_corpus(path)?)),
        None => None,
    };
    let seed_lex = select_bridges(&corpus, &kb, &map, max_bridges, counts.as_ref())?;
    std::fs::write(&out, seed_lex.words.join("\n") + "\n").map_err(|e| LexError::io(&out, e))?;
    eprintln!("selected {} bridges", seed_lex.len());

    let mut m = RunManifest::new("select-bridges");
    m.setting("bridges", max_bridges)
        .setting("corpus_space", corpus_space.display())
        .setting("kb_word_space", kb_word_space.display())
        .setting("senses", senses.display());
    m.input(&corpus_space)?;
    m.input(&kb_word_space)?;
    m.input(&senses)?;
    if let Some(rc) = &rank_corpus {
        m.setting("rank_corpus", rc.display());
        m.input(rc)?;
    }
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({ "bridges": seed_lex.len() }))
}

fn fit_cca_from_files(
    corpus_space: &Path,
    kb_word_space: &Path,
    bridges_file: &Path,
    reg: Option<f64>,
    truncate: Option<usize>,
) -> Result<(CcaModel, usize), LexError> {
    let corpus = load_space(corpus_space)?;
    let kb = load_space(kb_word_space)?;
    let words = read_word_list(bridges_file)?;
    let seed_lex = SeedLexicon::from_spaces(&corpus, &kb, &words)?;
    let m = seed_lex.len();
    let k = corpus.dim().min(kb.dim());
    if m <= k {
        eprintln!("warning: {m} bridges for {k} components; expect a degenerate fit");
    }
    let regularization = match reg {
        Some(e) => Regularization::Absolute(e),
        None => Regularization::Auto,
    };
    let mut model = fit_cca(&seed_lex, regularization)?;
    if let Some(keep) = truncate {
        model = model.truncated(keep);
    }
    Ok((model, m))
}

fn cmd_fit_cca(a: FitCcaArgs, ctx: &Ctx) -> CliResult {
    let corpus_space: PathBuf = ctx.res_req(a.corpus_space, "corpus_space")?;
    let kb_word_space: PathBuf = ctx.res_req(a.kb_word_space, "kb_word_space")?;
    let bridges_file: PathBuf = ctx.res_req(a.bridges_file, "bridges_file")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let reg = ctx.res_opt(a.reg, "reg")?;
    let truncate = ctx.res_opt(a.truncate, "truncate")?;

    let (model, m_bridges) =
        fit_cca_from_files(&corpus_space, &kb_word_space, &bridges_file, reg, truncate)?;
    model.save(&out)?;
    eprintln!(
        "fit CCA on {} bridges; first correlation {:.4}",
        m_bridges,
        model.correlations.first().copied().unwrap_or(0.0)
    );

    let mut m = RunManifest::new("fit-cca");
    m.setting(
        "reg",
        reg.map(|e| e.to_string()).unwrap_or_else(|| "auto".into()),
    )
    .setting("corpus_space", corpus_space.display())
    .setting("kb_word_space", kb_word_space.display())
    .setting("bridges_file", bridges_file.display());
    if let Some(t) = truncate {
        m.setting("truncate", t);
    }
    m.input(&corpus_space)?;
    m.input(&kb_word_space)?;
    m.input(&bridges_file)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({
        "bridges": m_bridges,
        "k": model.k(),
        "correlations": model.correlations,
    }))
}

fn cmd_fit_ls(a: FitLsArgs, ctx: &Ctx) -> CliResult {
    let corpus_space: PathBuf = ctx.res_req(a.corpus_space, "corpus_space")?;
    let kb_word_space: PathBuf = ctx.res_req(a.kb_word_space, "kb_word_space")?;
    let bridges_file: PathBuf = ctx.res_req(a.bridges_file, "bridges_file")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let ridge = ctx.res(a.ridge, "ridge", 0.0)?;

    let corpus = load_space(&corpus_space)?;
    let kb = load_space(&kb_word_space)?;
    let words = read_word_list(&bridges_file)?;
    let seed_lex = SeedLexicon::from_spaces(&corpus, &kb, &words)?;
    let model = fit_least_squares(&seed_lex, ridge)?;
    model.save(&out)?;
    eprintln!("fit least squares on {} bridges (ridge {ridge})", seed_lex.len());

    let mut m = RunManifest::new("fit-ls");
    m.setting("ridge", ridge)
        .setting("corpus_space", corpus_space.display())
        .setting("kb_word_space", kb_word_space.display())
        .setting("bridges_file", bridges_file.display());
    m.input(&corpus_space)?;
    m.input(&kb_word_space)?;
    m.input(&bridges_file)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({ "bridges": seed_lex.len(), "ridge": ridge }))
}

fn cmd_project(a: ProjectArgs, ctx: &Ctx) -> CliResult {
    let space_path: PathBuf = ctx.res_req(a.space, "space")?;
    let model_path: PathBuf = ctx.res_req(a.model, "model")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let side: String = ctx.res(a.side, "side", "kb".to_owned())?;

    let space = load_space(&space_path)?;
    let projected = match load_model(&model_path)? {
        AlignModel::Cca(model) => match side.as_str() {
            "corpus" => model.project_corpus(&space)?,
            "kb" => model.project_kb(&space)?,
            other => return usage(format!("--side must be corpus or kb, got `{other}`")),
        },
        AlignModel::Ls(model) => {
            if side != "kb" {
                return usage("an LS1 model only maps the kb side");
            }
            model.map_kb(&space)?
        }
    };
    projected.save_text(&out)?;
    eprintln!("projected {} vectors to dim {}", projected.len(), projected.dim());

    let mut m = RunManifest::new("project");
    m.setting("side", &side)
        .setting("space", space_path.display())
        .setting("model", model_path.display());
    m.input(&space_path)?;
    m.input(&model_path)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({ "vectors": projected.len(), "dim": projected.dim() }))
}

fn cmd_enhance(a: EnhanceArgs, ctx: &Ctx) -> CliResult {
    let corpus_space: PathBuf = ctx.res_req(a.corpus_space, "corpus_space")?;
    let kb_word_space: PathBuf = ctx.res_req(a.kb_word_space, "kb_word_space")?;
    let model_path: PathBuf = ctx.res_req(a.model, "model")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let conflict: String = ctx.res(a.conflict, "conflict", "corpus".to_owned())?;
    let policy: ConflictPolicy = conflict
        .parse()
        .map_err(|e: LexError| CliError::Usage(e.to_string()))?;

    let corpus = load_space(&corpus_space)?;
    let kb = load_space(&kb_word_space)?;
    let model = match load_model(&model_path)? {
        AlignModel::Cca(m) => m,
        AlignModel::Ls(_) => {
            return usage("enhance needs a CCA1 model; LS1 models only map the kb side")
        }
    };
    let enhanced = build_enhanced_space(&corpus, &kb, &model, policy)?;
    enhanced.save_text(&out)?;
    eprintln!(
        "enhanced space: {} words, dim {} (policy {policy})",
        enhanced.len(),
        enhanced.dim()
    );

    let mut m = RunManifest::new("enhance");
    m.setting("conflict", &conflict)
        .setting("corpus_space", corpus_space.display())
        .setting("kb_word_space", kb_word_space.display())
        .setting("model", model_path.display());
    m.input(&corpus_space)?;
    m.input(&kb_word_space)?;
    m.input(&model_path)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&serde_json::json!({ "vocab": enhanced.len(), "dim": enhanced.dim() }))
}

fn cmd_eval_sim(a: EvalSimArgs, ctx: &Ctx) -> CliResult {
    let dataset_path: PathBuf = ctx.res_req(a.dataset, "dataset")?;
    let lowercase = ctx.res(a.lowercase, "lowercase", true)?;
    let space_path: Option<PathBuf> = ctx.res_opt(a.space, "space")?;
    let kb_path: Option<PathBuf> = ctx.res_opt(a.kb_space, "kb_space")?;
    let senses_path: Option<PathBuf> = ctx.res_opt(a.senses, "senses")?;

    let dataset = load_similarity_dataset(&dataset_path, lowercase)?;
    let result = match (&space_path, &kb_path, &senses_path) {
        (Some(space_path), None, None) => {
            let space = load_space(space_path)?;
            evaluate_similarity(space_similarity(&space), &dataset)?
        }
        (None, Some(kb), Some(senses)) => {
            let space = load_space(kb)?;
            let map = SenseMap::load(senses)?;
            evaluate_similarity(maxsim_similarity_fn(&space, &map), &dataset)?
        }
        _ => {
            return usage("eval-sim needs either --space, or --kb-space with --senses");
        }
    };
    if let Some(path) = &ctx.manifest_override {
        let mut m = RunManifest::new("eval-sim");
        m.setting("lowercase", lowercase)
            .setting("dataset", dataset_path.display());
        m.input(&dataset_path)?;
        if let Some(p) = &space_path {
            m.setting("space", p.display());
            m.input(p)?;
        }
        if let (Some(k), Some(s)) = (&kb_path, &senses_path) {
            m.setting("kb_space", k.display()).setting("senses", s.display());
            m.input(k)?;
            m.input(s)?;
        }
        m.write(path)?;
    }
    print_json(&result)
}

fn cmd_downsample(a: DownsampleArgs, ctx: &Ctx) -> CliResult {
    let corpus: PathBuf = ctx.res_req(a.corpus, "corpus")?;
    let out: PathBuf = ctx.res_req(a.out, "out")?;
    let targets_path: PathBuf = ctx.res_req(a.targets, "targets")?;
    let threshold = ctx.res(a.rarity_t, "rarity_t", 0)?;

    let targets: BTreeSet<String> = read_word_list(&targets_path)?.into_iter().collect();
    let rcfg = RarityConfig {
        threshold,
        targets,
        seed: ctx.seed,
    };
    let report = downsample_corpus(&corpus, &rcfg, &out)?;
    eprintln!(
        "downsampled {} target words over {} tokens",
        report.per_word.len(),
        report.tokens_read
    );

    let mut m = RunManifest::new("downsample");
    m.setting("seed", ctx.seed)
        .setting("rarity_t", threshold)
        .setting("corpus", corpus.display())
        .setting("targets", targets_path.display());
    m.input(&corpus)?;
    m.input(&targets_path)?;
    m.output(&out);
    m.write(ctx.manifest_path(&out))?;
    print_json(&report)
}

fn cmd_classify(a: ClassifyArgs, ctx: &Ctx) -> CliResult {
    let data: PathBuf = ctx.res_req(a.data, "data")?;
    let space_path: PathBuf = ctx.res_req(a.space, "space")?;
    let drop_x = ctx.res(a.drop_x, "drop_x", 0.0)?;
    let test_fraction = ctx.res(a.test_fraction, "test_fraction", 0.2)?;
    let opts = ClassifierOptions {
        epochs: ctx.res(a.epochs, "epochs", 200)?,
        learning_rate: ctx.res(a.lr, "lr", 0.5)?,
        l2: ctx.res(a.l2, "l2", 1e-4)?,
        seed: ctx.seed,
    };

    let corpus = load_labeled_corpus(&data)?;
    let space = load_space(&space_path)?;
    let (space, removed) = drop_vocab_fraction(&space, &corpus.vocabulary(), drop_x, ctx.seed)?;
    let (train, test) = split_corpus(&corpus, test_fraction, ctx.seed)?;
    let (model, _losses) = train_linear_classifier(&train, &space, &opts)?;
    let train_accuracy = evaluate_classifier(&model, &train, &space)?;
    let test_accuracy = evaluate_classifier(&model, &test, &space)?;
    eprintln!(
        "classify: {} train / {} test docs, {} words dropped",
        train.len(),
        test.len(),
        removed.len()
    );

    if let Some(path) = &ctx.manifest_override {
        let mut m = RunManifest::new("classify");
        m.setting("seed", ctx.seed)
            .setting("drop_x", drop_x)
            .setting("test_fraction", test_fraction)
            .setting("epochs", opts.epochs)
            .setting("lr", opts.learning_rate)
            .setting("l2", opts.l2)
            .setting("data", data.display())
            .setting("space", space_path.display());
        m.input(&data)?;
        m.input(&space_path)?;
        m.write(path)?;
    }
    print_json(&serde_json::json!({
        "train_accuracy": train_accuracy,
        "test_accuracy": test_accuracy,
        "dropped_words": removed.len(),
        "num_classes": corpus.num_classes,
        "train_size": train.len(),
        "test_size": test.len(),
    }))
}

fn cmd_pipeline(a: PipelineArgs, ctx: &Ctx) -> CliResult {
    let outdir: PathBuf = ctx.res_req(a.outdir, "outdir")?;
    let edges: PathBuf = ctx.res_req(a.edges, "edges")?;
    let gloss: Option<PathBuf> = ctx.res_opt(a.gloss, "gloss")?;
    let senses_path: PathBuf = ctx.res_req(a.senses, "senses")?;
    let corpus_text: Option<PathBuf> = ctx.res_opt(a.corpus, "corpus")?;
    let corpus_space_path: Option<PathBuf> = ctx.res_opt(a.corpus_space, "corpus_space")?;
    let dataset: Option<PathBuf> = ctx.res_opt(a.dataset, "dataset")?;
    if corpus_text.is_none() && corpus_space_path.is_none() {
        return usage("pipeline needs --corpus (text) or --corpus-space (vectors)");
    }

    let wcfg = WalkConfig {
        walk_length: ctx.res(a.walk_length, "walk_length", 100)?,
        walks_per_node: ctx.res(a.walks_per_node, "walks_per_node", 10)?,
        return_param: ctx.res(a.p, "p", 1.0)?,
        inout_param: ctx.res(a.q, "q", 1.0)?,
        seed: ctx.seed,
        threads: ctx.threads,
    };
    let dim = ctx.res(a.dim, "dim", 100)?;
    let scfg = SgnsConfig {
        dim,
        window: ctx.res(a.window, "window", 10)?,
        negatives: ctx.res(a.negatives, "negatives", 5)?,
        epochs: ctx.res(a.epochs, "epochs", 5)?,
        learning_rate: ctx.res(a.lr, "lr", 0.025)?,
        min_count: ctx.res(a.min_count, "min_count", 1)?,
        subsample: 0.0,
        seed: ctx.seed,
        threads: ctx.threads,
    };
    let corpus_dim = ctx.res(None, "corpus_dim", dim)?;
    let max_bridges = ctx.res(a.bridges, "bridges", 5000)?;
    let reg: Option<f64> = ctx.res_opt(a.reg, "reg")?;
    let conflict: String = ctx.res(a.conflict, "conflict", "corpus".to_owned())?;
    let policy: ConflictPolicy = conflict
        .parse()
        .map_err(|e: LexError| CliError::Usage(e.to_string()))?;
    let lowercase = ctx.res(None, "lowercase", true)?;

    std::fs::create_dir_all(&outdir).map_err(|e| LexError::io(&outdir, e))?;
    let walks_path = outdir.join("walks.txt");
    let kb_synsets_path = outdir.join("kb_synsets.vec");
    let kb_words_path = outdir.join("kb_words.vec");
    let bridges_path = outdir.join("bridges.txt");
    let model_path = outdir.join("model.cca");
    let enhanced_path = outdir.join("enhanced.vec");

    // Walk.
    let graph = load_graph(&edges, gloss.as_deref())?;
    let walks = generate_walks(&graph, &wcfg)?;
    let file = std::fs::File::create(&walks_path).map_err(|e| LexError::io(&walks_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_walks(&graph, &walks, &mut w).map_err(|e| LexError::io(&walks_path, e))?;
    eprintln!("pipeline: {} walks", walks.len());

    // Each stage reloads its own artifact so a pipeline run is byte-for-byte
    // the composition of the individual subcommands.

    // Train the synset space on the walk corpus.
    let walk_sentences = read_corpus(&walks_path)?;
    let (kb_synsets, _) = train_sgns(&walk_sentences, &scfg)?;
    kb_synsets.save_text(&kb_synsets_path)?;
    let kb_synsets = load_space(&kb_synsets_path)?;

    // Compose the word-level KB space.
    let sense_map = SenseMap::load(&senses_path)?;
    let (kb_words, compose_report) = compose_word_space(&kb_synsets, &sense_map)?;
    kb_words.save_text(&kb_words_path)?;
    let kb_words = load_space(&kb_words_path)?;
    eprintln!(
        "pipeline: composed {} KB words ({} skipped)",
        compose_report.words_composed, compose_report.words_skipped
    );

    // Corpus space: train it or load it.
    let (corpus_space, corpus_space_file) = match (&corpus_space_path, &corpus_text) {
        (Some(path), _) => (load_space(path)?, path.clone()),
        (None, Some(text_path)) => {
            let corpus_sentences = read_corpus(text_path)?;
            let ccfg = SgnsConfig {
                dim: corpus_dim,
                ..scfg.clone()
            };
            let (space, _) = train_sgns(&corpus_sentences, &ccfg)?;
            let path = outdir.join("corpus.vec");
            space.save_text(&path)?;
            (load_space(&path)?, path)
        }
        (None, None) => unreachable!("checked above"),
    };

    // Bridges, ranked by corpus text frequency when the text is available.
    let counts = match &corpus_text {
        Some(path) => Some(token_counts(&read_corpus(path)?)),
        None => None,
    };
    let seed_lex = select_bridges(&corpus_space, &kb_words, &sense_map, max_bridges, counts.as_ref())?;
    std::fs::write(&bridges_path, seed_lex.words.join("\n") + "\n")
        .map_err(|e| LexError::io(&bridges_path, e))?;
    eprintln!("pipeline: {} bridges", seed_lex.len());

    // CCA.
    let regularization = match reg {
        Some(e) => Regularization::Absolute(e),
        None => Regularization::Auto,
    };
    let model = fit_cca(&seed_lex, regularization)?;
    model.save(&model_path)?;
    let model = match load_model(&model_path)? {
        AlignModel::Cca(m) => m,
        AlignModel::Ls(_) => unreachable!("pipeline writes CCA models"),
    };

    // Enhanced space.
    let enhanced = build_enhanced_space(&corpus_space, &kb_words, &model, policy)?;
    enhanced.save_text(&enhanced_path)?;
    let enhanced = load_space(&enhanced_path)?;
    eprintln!(
        "pipeline: enhanced space has {} words, dim {}",
        enhanced.len(),
        enhanced.dim()
    );

    // Evaluation.
    let mut eval_json = None;
    if let Some(dataset_path) = &dataset {
        let ds = load_similarity_dataset(dataset_path, lowercase)?;
        let result = evaluate_similarity(space_similarity(&enhanced), &ds)?;
        let line = serde_json::to_string(&result)
            .map_err(|e| LexError::InvalidInput(format!("report: {e}")))?;
        let eval_path = outdir.join("eval.json");
        std::fs::write(&eval_path, line.clone() + "\n").map_err(|e| LexError::io(&eval_path, e))?;
        eval_json = Some(result);
    }

    let mut m = RunManifest::new("pipeline");
    m.setting("seed", ctx.seed)
        .setting("threads", ctx.threads)
        .setting("walk_length", wcfg.walk_length)
        .setting("walks_per_node", wcfg.walks_per_node)
        .setting("p", wcfg.return_param)
        .setting("q", wcfg.inout_param)
        .setting("dim", dim)
        .setting("corpus_dim", corpus_dim)
        .setting("window", scfg.window)
        .setting("negatives", scfg.negatives)
        .setting("epochs", scfg.epochs)
        .setting("lr", scfg.learning_rate)
        .setting("min_count", scfg.min_count)
        .setting("bridges", max_bridges)
        .setting(
            "reg",
            reg.map(|e| e.to_string()).unwrap_or_else(|| "auto".into()),
        )
        .setting("conflict", &conflict)
        .setting("edges", edges.display())
        .setting("senses", senses_path.display());
    m.input(&edges)?;
    if let Some(g) = &gloss {
        m.setting("gloss", g.display());
        m.input(g)?;
    }
    m.input(&senses_path)?;
    if let Some(c) = &corpus_text {
        m.setting("corpus", c.display());
        m.input(c)?;
    }
    if let Some(ds) = &dataset {
        m.setting("dataset", ds.display());
        m.input(ds)?;
    }
    m.setting("corpus_space", corpus_space_file.display());
    if corpus_space_path.is_some() {
        m.input(&corpus_space_file)?;
    }
    for out in [&walks_path, &kb_synsets_path, &kb_words_path, &bridges_path, &model_path, &enhanced_path] {
        m.output(out);
    }
    if corpus_space_path.is_none() {
        m.output(&corpus_space_file);
    }
    if dataset.is_some() {
        m.output(outdir.join("eval.json"));
    }
    m.write(
        ctx.manifest_override
            .clone()
            .unwrap_or_else(|| outdir.join("manifest.json")),
    )?;

    print_json(&serde_json::json!({
        "walks": walks.len(),
        "kb_words": kb_words.len(),
        "bridges": seed_lex.len(),
        "k": model.k(),
        "enhanced_vocab": enhanced.len(),
        "eval": eval_json,
    }))
}
