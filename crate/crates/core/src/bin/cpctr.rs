use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cpctr::baselines::{fit_ctr_mode, fit_pmf, fit_rsvd, pool_document, SparseMatrix};
use cpctr::corpus::{
    build_vocabulary, group_reviews, read_reviews_jsonl, read_salaries_csv, read_stopwords, review_token_lists, tokenize,
    write_reviews_jsonl, write_salaries_csv, Grouped, PairDocument, VocabOptions,
};
use cpctr::eval::{kfold_split, run_experiment, BaselineParams, ExperimentConfig, Method};
use cpctr::inference::{fit, Corpus};
use cpctr::model_io::{ModelFile, Payload};
use cpctr::predict::{job_topic_reports, predict_pair, pros_cons_report, render_pros_cons, render_topic_reports, Aggregation, ProsCons};
use cpctr::synth::{generate, to_records, GroundTruth, SynthConfig};
use cpctr::{par, Error, Hyperparams, PairKey, Result};

/// Company profiling with collaborative topic regression.
#[derive(Parser, Debug)]
#[command(name = "cpctr", version)]
struct Cli {
    /// Worker threads (0 uses every core; 1 gives exactly reproducible sequential runs)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// key=value file supplying defaults for any long flag; flags on the command line win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model on reviews and salaries
    Train(TrainArgs),
    /// Predict salaries for query pairs with a trained model
    Predict(PredictArgs),
    /// Cross-validate salary prediction for several methods
    Evaluate(EvaluateArgs),
    /// Report per-job topics and per-pair pros/cons from a trained model
    Topics(TopicsArgs),
    /// Generate a synthetic corpus with known ground truth
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct HyperArgs {
    /// Number of topics per polarity
    #[arg(long = "topics", default_value_t = 5)]
    k_topics: usize,
    /// Prior weight on job salary factors
    #[arg(long, default_value_t = 0.1)]
    lambda_u: f64,
    /// Prior weight on job rating factors
    #[arg(long, default_value_t = 0.01)]
    lambda_b: f64,
    /// Weight tying pair factors to their topic proportions
    #[arg(long, default_value_t = 1000.0)]
    lambda_v: f64,
    /// Precision of the rating term
    #[arg(long, default_value_t = 1.0)]
    lambda_r: f64,
    /// Precision of the salary term
    #[arg(long, default_value_t = 1.0)]
    lambda_s: f64,
    /// Dirichlet concentration for the initial topic proportions
    #[arg(long, default_value_t = 0.01)]
    alpha_smooth: f64,
    /// Pseudo-count added to every topic-word cell
    #[arg(long, default_value_t = 0.01)]
    topic_smooth: f64,
    /// Maximum training sweeps
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Minimum sweeps before the convergence test [default: 10, capped at --max-iter]
    #[arg(long)]
    min_iter: Option<usize>,
    /// Relative objective change that counts as converged
    #[arg(long, default_value_t = 1e-4)]
    rel_tol: f64,
    /// Projected-gradient steps per proportion update
    #[arg(long, default_value_t = 5)]
    theta_steps: usize,
    /// Random seed for initialization, splits and generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HyperArgs {
    fn to_hyper(&self) -> Result<Hyperparams> {
        let h = Hyperparams {
            k_topics: self.k_topics,
            lambda_u: self.lambda_u,
            lambda_b: self.lambda_b,
            lambda_v: self.lambda_v,
            lambda_r: self.lambda_r,
            lambda_s: self.lambda_s,
            alpha_smooth: self.alpha_smooth,
            topic_smooth: self.topic_smooth,
            max_iter: self.max_iter,
            min_iter: self.min_iter.unwrap_or_else(|| Hyperparams::default().min_iter.min(self.max_iter)),
            rel_tol: self.rel_tol,
            theta_steps: self.theta_steps,
            seed: self.seed,
        };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Reviews, one JSON object per line: job, company, rating, pros, cons
    #[arg(long)]
    reviews: PathBuf,
    /// Salary records as CSV with header job,company,salary
    #[arg(long)]
    salaries: PathBuf,
    /// Stopword list, one word per line
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Vocabulary size cap
    #[arg(long, default_value_t = 10_000)]
    max_terms: usize,
    /// Drop terms found in fewer reviews than this
    #[arg(long, default_value_t = 1)]
    min_doc_count: usize,
    /// Drop terms found in more than this fraction of reviews
    #[arg(long, default_value_t = 0.9)]
    max_doc_fraction: f64,
}

#[derive(Args, Debug, Clone)]
struct BaselineArgs {
    /// Regularization weight of the factorization baselines
    #[arg(long, default_value_t = 0.1)]
    baseline_lambda: f64,
    /// SGD learning rate of the regularized SVD baseline
    #[arg(long, default_value_t = 0.005)]
    learning_rate: f64,
    /// SGD epochs of the regularized SVD baseline
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Alternating solves of the matrix factorization baseline
    #[arg(long, default_value_t = 50)]
    pmf_iters: usize,
}

impl BaselineArgs {
    fn params(&self) -> BaselineParams {
        BaselineParams {
            lambda: self.baseline_lambda,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            pmf_iters: self.pmf_iters,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    baseline: BaselineArgs,
    /// Model to train: cpctr, ctr, pmf or rsvd
    #[arg(long, default_value = "cpctr")]
    method: Method,
    /// Output model file
    #[arg(long)]
    model: PathBuf,
    /// Output objective trace (CSV: sweep,objective)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Query reviews in the review JSONL format; lines of one pair are pooled
    #[arg(long)]
    queries: PathBuf,
    /// Output CSV: job,company,normalized,raw,note
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    baseline: BaselineArgs,
    /// Comma-separated methods: cpctr, ctr, pmf, rsvd, mean
    #[arg(long, value_delimiter = ',', default_value = "cpctr,ctr,pmf,rsvd")]
    methods: Vec<Method>,
    /// Number of folds
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Jobs with fewer observed salaries stay in training
    #[arg(long, default_value_t = 5)]
    min_companies: usize,
    /// Normalize salaries over all pairs rather than per training fold
    #[arg(long)]
    global_normalize: bool,
    /// Report errors in salary units rather than on the normalized scale
    #[arg(long)]
    raw_units: bool,
    /// Output report CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output report as a text table
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct TopicsArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Words per topic
    #[arg(long, default_value_t = 5)]
    top_n: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Restrict topic reports to these jobs (repeatable)
    #[arg(long = "job")]
    jobs: Vec<String>,
    /// Pros/cons report for a pair, written job=NAME,company=NAME (repeatable)
    #[arg(long = "pair")]
    pairs: Vec<String>,
    /// Rank pros/cons from the dominant topic instead of the mixture
    #[arg(long)]
    dominant: bool,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    hyper: HyperArgs,
    /// Number of jobs
    #[arg(long, default_value_t = 10)]
    jobs: usize,
    /// Number of companies
    #[arg(long, default_value_t = 15)]
    companies: usize,
    /// Vocabulary size
    #[arg(long, default_value_t = 200)]
    terms: usize,
    /// Positive tokens per pair
    #[arg(long, default_value_t = 50)]
    pos_len: usize,
    /// Negative tokens per pair
    #[arg(long, default_value_t = 50)]
    neg_len: usize,
    /// Probability that a pair's salary is observed
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    /// Dirichlet concentration of topic-word rows
    #[arg(long, default_value_t = 0.1)]
    topic_concentration: f64,
    /// Output directory for reviews.jsonl, salaries.csv and truth.json
    #[arg(long)]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// config file

const BOOL_FLAGS: [&str; 3] = ["global-normalize", "raw-units", "dominant"];

/// Appends `--key value` for every config entry whose flag is not already
/// given on the command line.
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.clone(),
                line: n + 1,
                message: "expected key = value".into(),
            });
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        let flag = format!("--{key}");
        let given = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given || key == "config" {
            continue;
        }
        if BOOL_FLAGS.contains(&key.as_str()) {
            if value.eq_ignore_ascii_case("true") {
                extra.push(flag);
            }
        } else {
            extra.push(flag);
            extra.push(value.to_string());
        }
    }
    argv.extend(extra);
    Ok(argv)
}

// ---------------------------------------------------------------------------
// commands

struct Dataset {
    grouped: Grouped,
    vocab: cpctr::Vocabulary,
    corpus: Corpus,
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    let reviews = read_reviews_jsonl(&args.reviews)?;
    let salaries = read_salaries_csv(&args.salaries)?;
    let stop = match &args.stopwords {
        Some(p) => read_stopwords(p)?,
        None => HashSet::new(),
    };
    let opts = VocabOptions {
        max_terms: args.max_terms,
        min_doc_count: args.min_doc_count,
        max_doc_fraction: args.max_doc_fraction,
    };
    let vocab = build_vocabulary(&review_token_lists(&reviews), &opts, &stop)?;
    let grouped = group_reviews(&reviews, &salaries, &vocab);
    let corpus = Corpus::new(grouped.documents.clone(), grouped.jobs.len(), vocab.len())?;
    log::info!(
        "{} reviews, {} salary records, {} pairs, {} terms, salary sparsity {:.4}",
        reviews.len(),
        salaries.len(),
        corpus.documents.len(),
        vocab.len(),
        grouped.salary_sparsity()
    );
    Ok(Dataset { grouped, vocab, corpus })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_train(args: &TrainArgs) -> Result<u8> {
    let hyper = args.hyper.to_hyper()?;
    let data = load_dataset(&args.data)?;
    let obs = data.grouped.observations()?;
    let (jobs, companies) = (data.grouped.jobs.clone(), data.grouped.companies.clone());
    let (file, trace) = match args.method {
        Method::Cpctr | Method::Ctr => {
            let result = if args.method == Method::Cpctr {
                fit(&data.corpus, &obs, &hyper)?
            } else {
                fit_ctr_mode(&data.corpus, &obs, &hyper)?
            };
            log::info!("{} sweeps, converged: {}", result.trace.len(), result.converged);
            let file = ModelFile::topic_model(args.method, result.state, hyper, data.vocab, jobs, companies, obs.rating_bounds, obs.salary_bounds);
            (file, result.trace)
        }
        Method::Pmf | Method::Rsvd => {
            let m = SparseMatrix::salaries(&obs, jobs.len(), companies.len())?;
            let b = args.baseline.params();
            let (model, trace) = if args.method == Method::Pmf {
                fit_pmf(&m, hyper.k_topics, b.lambda, b.lambda, b.pmf_iters, hyper.seed)?
            } else {
                let model = fit_rsvd(&m, hyper.k_topics, b.lambda, b.learning_rate, b.epochs, hyper.seed)?;
                let obj = model.objective(&m);
                (model, vec![obj])
            };
            let pairs = obs.salaries.keys().copied().collect();
            let file = ModelFile::factor_model(args.method, model, pairs, hyper, data.vocab, jobs, companies, obs.rating_bounds, obs.salary_bounds);
            (file, trace)
        }
        Method::Mean => return Err(Error::InvalidArgument("the mean predictor has no model to train".into())),
    };
    file.save(&args.model)?;
    if let Some(path) = &args.trace {
        let mut text = String::from("sweep,objective\n");
        for (i, v) in trace.iter().enumerate() {
            text.push_str(&format!("{},{v}\n", i + 1));
        }
        write_file(path, &text)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct PredictionRow {
    job: String,
    company: String,
    normalized: Option<f64>,
    raw: Option<f64>,
    note: String,
}

#[derive(Default)]
struct Query {
    pos: BTreeMap<usize, u32>,
    neg: BTreeMap<usize, u32>,
    ratings: Vec<f64>,
}

fn cmd_predict(args: &PredictArgs) -> Result<u8> {
    let model = ModelFile::load(&args.model)?;
    let reviews = read_reviews_jsonl(&args.queries)?;
    let mut order: Vec<(String, String)> = Vec::new();
    let mut queries: HashMap<(String, String), Query> = HashMap::new();
    for r in &reviews {
        let name = (r.job.clone(), r.company.clone());
        let q = queries.entry(name.clone()).or_insert_with(|| {
            order.push(name);
            Query::default()
        });
        for (text, side) in [(&r.pros, &mut q.pos), (&r.cons, &mut q.neg)] {
            for t in tokenize(text) {
                if let Some(id) = model.vocabulary.id(&t) {
                    *side.entry(id).or_insert(0) += 1;
                }
            }
        }
        q.ratings.extend(r.rating);
    }

    let mut unseen: HashMap<&str, usize> = HashMap::new();
    let mut failures = 0;
    let mut rows = Vec::with_capacity(order.len());
    for (job_name, company_name) in &order {
        let q = &queries[&(job_name.clone(), company_name.clone())];
        let row = |normalized: Option<f64>, note: String| PredictionRow {
            job: job_name.clone(),
            company: company_name.clone(),
            normalized,
            raw: normalized.map(|x| model.salary_bounds.denormalize(x)),
            note,
        };
        let Some(job) = model.jobs.id(job_name) else {
            failures += 1;
            rows.push(row(None, "error: unknown job".into()));
            continue;
        };
        let known_company = model.companies.id(company_name);
        let next = model.companies.len() + unseen.len();
        let company = known_company.unwrap_or_else(|| *unseen.entry(company_name.as_str()).or_insert(next));
        let key = PairKey::new(job, company);
        let doc = PairDocument::from_counts(key, &q.pos, &q.neg);
        let rating = (!q.ratings.is_empty()).then(|| model.rating_bounds.normalize(q.ratings.iter().sum::<f64>() / q.ratings.len() as f64));
        let trained = model.dimensions.pairs.binary_search(&key).is_ok();
        let outcome = match &model.payload {
            Payload::Topic { state } => {
                let (doc, rating) = match model.method {
                    Method::Ctr => (pool_document(&doc), None),
                    _ => (doc, rating),
                };
                predict_pair(key, &doc, rating, state, &model.hyper)
            }
            Payload::Factor { model: f } => match known_company {
                Some(c) => Ok(f.predict(job, c)),
                None => Err(Error::InvalidArgument("unknown company for a factorization model".into())),
            },
        };
        match outcome {
            Ok(x) => rows.push(row(Some(x), if trained { "trained".into() } else { "fold-in".into() })),
            Err(e) => {
                failures += 1;
                rows.push(row(None, format!("error: {e}")));
            }
        }
    }

    let mut w = csv::Writer::from_path(&args.out).map_err(|e| Error::io(&args.out, std::io::Error::other(e)))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    if failures > 0 {
        eprintln!("{failures} of {} queries failed; see the note column of {}", rows.len(), args.out.display());
        return Ok(1);
    }
    Ok(0)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<u8> {
    let hyper = args.hyper.to_hyper()?;
    let data = load_dataset(&args.data)?;
    let plan = kfold_split(&data.grouped.raw.salaries, args.folds, args.min_companies, hyper.seed)?;
    let mut cfg = ExperimentConfig::new(args.methods.clone(), hyper);
    cfg.baseline = args.baseline.params();
    cfg.global_normalize = args.global_normalize;
    cfg.raw_units = args.raw_units;
    let report = run_experiment(&data.corpus, &data.grouped.raw, &plan, &cfg)?;
    let table = report.to_table();
    if let Some(path) = &args.out {
        write_file(path, &report.to_csv())?;
    }
    if let Some(path) = &args.table {
        write_file(path, &table)?;
    }
    print!("{table}");
    Ok(0)
}

fn parse_pair(spec: &str) -> Option<(String, String)> {
    let mut job = None;
    let mut company = None;
    for part in spec.split(',') {
        match part.split_once('=')? {
            ("job", v) => job = Some(v.trim().to_string()),
            ("company", v) => company = Some(v.trim().to_string()),
            _ => return None,
        }
    }
    Some((job?, company?))
}

fn cmd_topics(args: &TopicsArgs) -> Result<u8> {
    let model = ModelFile::load(&args.model)?;
    let state = model
        .state()
        .ok_or_else(|| Error::InvalidArgument(format!("{} holds a factorization model without topics", args.model.display())))?;
    let mut problems = Vec::new();
    let jobs: Vec<usize> = if args.jobs.is_empty() {
        (0..model.jobs.len()).collect()
    } else {
        args.jobs
            .iter()
            .filter_map(|name| {
                let id = model.jobs.id(name);
                if id.is_none() {
                    problems.push(format!("unknown job {name:?}"));
                }
                id
            })
            .collect()
    };
    let topics: Vec<_> = jobs
        .iter()
        .flat_map(|&j| job_topic_reports(state, j, model.jobs.name(j), args.top_n, &model.vocabulary))
        .collect();
    let how = if args.dominant { Aggregation::Dominant } else { Aggregation::Mixture };
    let mut pros_cons = Vec::new();
    for spec in &args.pairs {
        let Some((job, company)) = parse_pair(spec) else {
            return Err(Error::InvalidArgument(format!("--pair expects job=NAME,company=NAME, got {spec:?}")));
        };
        let key = match (model.jobs.id(&job), model.companies.id(&company)) {
            (Some(j), Some(c)) => PairKey::new(j, c),
            _ => {
                problems.push(format!("unknown pair job={job},company={company}"));
                continue;
            }
        };
        match pros_cons_report(key, state, args.top_n, &model.vocabulary, how) {
            Ok((pros, cons)) => pros_cons.push(ProsCons { job, company, pros, cons }),
            Err(_) => problems.push(format!("pair job={job},company={company} was not in training")),
        }
    }

    let text = match args.format {
        Format::Text => {
            let mut s = render_topic_reports(&topics);
            if !pros_cons.is_empty() {
                s.push('\n');
                s.push_str(&render_pros_cons(&pros_cons));
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "topics": topics, "pros_cons": pros_cons }))?;
            s.push('\n');
            s
        }
    };
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    for p in &problems {
        eprintln!("error: {p}");
    }
    Ok(if problems.is_empty() { 0 } else { 1 })
}

#[derive(Serialize)]
struct TruthFile<'a> {
    seed: u64,
    config: &'a SynthConfig,
    hyper: &'a Hyperparams,
    jobs: &'a [String],
    companies: &'a [String],
    truth: &'a GroundTruth,
}

fn cmd_synth(args: &SynthArgs) -> Result<u8> {
    let hyper = args.hyper.to_hyper()?;
    let cfg = SynthConfig {
        n_jobs: args.jobs,
        n_companies: args.companies,
        k: hyper.k_topics,
        n_terms: args.terms,
        pos_len: args.pos_len,
        neg_len: args.neg_len,
        density: args.density,
        topic_concentration: args.topic_concentration,
    };
    let data = generate(&cfg, &hyper, hyper.seed)?;
    let (reviews, salaries) = to_records(&data);
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    write_reviews_jsonl(&args.out_dir.join("reviews.jsonl"), &reviews)?;
    write_salaries_csv(&args.out_dir.join("salaries.csv"), &salaries)?;
    let truth = TruthFile {
        seed: hyper.seed,
        config: &cfg,
        hyper: &hyper,
        jobs: data.jobs.names(),
        companies: data.companies.names(),
        truth: &data.truth,
    };
    let mut text = serde_json::to_string(&truth)?;
    text.push('\n');
    write_file(&args.out_dir.join("truth.json"), &text)?;
    Ok(0)
}

/// Input, format and validation problems exit with 2; failures of a method
/// or of individual queries exit with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::InvalidHyper(_)
        | Error::InvalidArgument(_)
        | Error::ModelFormat(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::EmptyVocabulary
        | Error::EmptyInput(_)
        | Error::DegenerateRange(_)
        | Error::NoEligibleJobs(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Topics(a) => cmd_topics(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CPCTR_LOG", "warn")).init();
    let argv = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = Cli::parse_from(argv);
    let threads = cli.threads;
    match par::with_threads(threads, move || run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_defaults_match_library_defaults() {
        let cli = Cli::parse_from(["cpctr", "synth", "--out-dir", "x"]);
        let Command::Synth(a) = cli.command else { unreachable!() };
        assert_eq!(a.hyper.to_hyper().unwrap(), Hyperparams::default());
        let d = SynthConfig::default();
        assert_eq!((a.jobs, a.companies, a.terms, a.pos_len, a.neg_len), (d.n_jobs, d.n_companies, d.n_terms, d.pos_len, d.neg_len));
        assert_eq!((a.density, a.topic_concentration), (d.density, d.topic_concentration));

        let cli = Cli::parse_from(["cpctr", "evaluate", "--reviews", "r", "--salaries", "s"]);
        let Command::Evaluate(e) = cli.command else { unreachable!() };
        assert_eq!(e.baseline.params(), BaselineParams::default());
        assert_eq!(e.methods, Method::DEFAULT.to_vec());
        let v = VocabOptions::default();
        assert_eq!((e.data.max_terms, e.data.min_doc_count, e.data.max_doc_fraction), (v.max_terms, v.min_doc_count, v.max_doc_fraction));
    }

    #[test]
    fn pair_spec_parsing() {
        assert_eq!(parse_pair("job=a b,company=c"), Some(("a b".into(), "c".into())));
        assert_eq!(parse_pair("job=a"), None);
        assert_eq!(parse_pair("role=a,company=c"), None);
    }
}
