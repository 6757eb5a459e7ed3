//! The `toxtrig` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::combine::{combine, CombinePolicy};
use crate::corpus::{corpus_stats, load_corpus, split_corpus, write_corpus, Corpus};
use crate::dictionary::{build_dictionary, Dictionary};
use crate::eval::evaluate;
use crate::llm::{
    sample_examples, CompletionClient, ExtractConfig, HttpClient, PromptTemplate, RecordingClient, ReplayClient,
};
use crate::pipeline::{
    load_predictions, run_dictionary, run_llm, unix_now, write_predictions, Backend, InputDigest, RunManifest, Strategy,
};
use crate::text::NormalizationPolicy;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "toxtrig",
    version,
    about = "Toxic-habit trigger extraction for Spanish clinical case reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print document, sentence and mention counts.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Split an annotated corpus into train and dev parts.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        holdout: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_dev: PathBuf,
    },
    /// Build the surface-form dictionary from a training corpus.
    BuildDict {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        min_label_ratio: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Extract trigger mentions and write one .ann per document.
    Extract(ExtractArgs),
    /// Merge two prediction directories.
    Combine {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Directory with the documents' .txt files.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "union-shorter")]
        combine_policy: CombinePolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a prediction directory against gold annotations.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Machine-readable report, one `metric<TAB>type<TAB>value` per line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PolicyArgs {
    /// Match surfaces case-sensitively.
    #[arg(long)]
    case_sensitive: bool,
    /// Allow matches that start or end inside a word.
    #[arg(long)]
    no_word_boundary: bool,
}

impl PolicyArgs {
    fn policy(&self) -> NormalizationPolicy {
        NormalizationPolicy {
            case_fold: !self.case_sensitive,
            require_word_boundary: !self.no_word_boundary,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Number of demonstrations (few-shot only); overrides the config.
    #[arg(long)]
    k: Option<usize>,
    /// Demonstration sampling seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Annotated training corpus to sample demonstrations from.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Dictionary file for `--strategy dict`.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Serve model answers from a replay file.
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Call the endpoint and record answers to this replay file.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Ask the model for per-phrase assertion labels.
    #[arg(long)]
    assertions: bool,
    #[command(flatten)]
    policy: PolicyArgs,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn has_ann_files(dir: &Path) -> Result<bool> {
    let mut entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    Ok(entries.any(|e| e.is_ok_and(|e| e.path().extension().is_some_and(|x| x == "ann"))))
}

fn digest(path: &Path, corpus: &Corpus) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        documents: corpus.len(),
        sha256: corpus.digest(),
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Stats { input } => {
            let corpus = load_corpus(&input, has_ann_files(&input)?)?;
            print!("{}", corpus_stats(&corpus));
        }
        Command::Split {
            input,
            holdout,
            seed,
            out_train,
            out_dev,
        } => {
            let corpus = load_corpus(&input, has_ann_files(&input)?)?;
            let (train, dev) = split_corpus(&corpus, holdout, seed)?;
            write_corpus(&out_train, &train)?;
            write_corpus(&out_dev, &dev)?;
            println!("train: {} documents, dev: {} documents", train.len(), dev.len());
        }
        Command::BuildDict {
            train,
            min_label_ratio,
            out,
            policy,
        } => {
            let corpus = load_corpus(&train, true)?;
            let dict = build_dictionary(&corpus, policy.policy(), min_label_ratio)?;
            fs::write(&out, dict.to_text()).map_err(|e| Error::io(&out, e))?;
            println!("{} entries written to {}", dict.len(), out.display());
        }
        Command::Extract(args) => return extract(args),
        Command::Combine {
            a,
            b,
            input,
            combine_policy,
            out,
        } => {
            let corpus = load_corpus(&input, false)?;
            let preds_a = load_predictions(&a, &corpus)?;
            let preds_b = load_predictions(&b, &corpus)?;
            let mut merged = std::collections::BTreeMap::new();
            for doc in corpus.documents() {
                let get = |p: &std::collections::BTreeMap<String, Vec<_>>| p.get(doc.id()).cloned().unwrap_or_default();
                merged.insert(
                    doc.id().to_owned(),
                    combine(&get(&preds_a), &get(&preds_b), combine_policy)?,
                );
            }
            write_predictions(&out, &corpus, &merged)?;
        }
        Command::Evaluate { gold, pred, out } => {
            let corpus = load_corpus(&gold, true)?;
            let preds = load_predictions(&pred, &corpus)?;
            let report = evaluate(&corpus, &preds)?;
            print!("{report}");
            if let Some(out) = out {
                fs::write(&out, report.to_tsv()).map_err(|e| Error::io(&out, e))?;
            }
        }
    }
    Ok(0)
}

fn extract(args: ExtractArgs) -> Result<i32> {
    let started = unix_now();
    let mut cfg = match &args.config {
        Some(path) => ExtractConfig::load(path)?,
        None => ExtractConfig::default(),
    };
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.assertions {
        cfg.assertion_variant = true;
    }
    match args.strategy {
        Strategy::ZeroShot => cfg.k = 0,
        Strategy::FewShot if cfg.k == 0 => {
            return Err(Error::InvalidArgument("few-shot extraction needs k > 0".into()))
        }
        _ => {}
    }
    let policy = args.policy.policy();
    let corpus = load_corpus(&args.input, false)?;
    let template = PromptTemplate {
        assertion_variant: cfg.assertion_variant,
        ..PromptTemplate::default()
    };

    let mut train_digest = None;
    let mut dict_digest = None;
    let mut examples = Vec::new();
    let mut backend = Backend::None;

    let run = if args.strategy == Strategy::Dict {
        let path = args
            .dict
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--strategy dict needs --dict FILE".into()))?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dict = Dictionary::from_text(&text)?;
        dict_digest = Some(InputDigest {
            path: path.display().to_string(),
            documents: dict.len(),
            sha256: hex::encode(<sha2::Sha256 as sha2::Digest>::digest(text.as_bytes())),
        });
        run_dictionary(&corpus, &dict)
    } else {
        if cfg.k > 0 {
            let train_path = args
                .train
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("few-shot extraction needs --train DIR".into()))?;
            let train = load_corpus(train_path, true)?;
            examples = sample_examples(&train, cfg.k, cfg.seed, cfg.example_char_budget)?;
            train_digest = Some(digest(train_path, &train));
        }
        let http = || {
            HttpClient::from_env(cfg.url(), cfg.timeout())
                .with_retries(cfg.max_retries, std::time::Duration::from_millis(1000))
        };
        if let Some(path) = &args.replay {
            backend = Backend::Replay {
                path: path.display().to_string(),
            };
            let client = ReplayClient::open(path)?;
            run_llm(&corpus, &cfg, &template, &examples, &client, policy)?
        } else if let Some(path) = &args.record {
            backend = Backend::Record {
                url: cfg.url(),
                path: path.display().to_string(),
            };
            let client = RecordingClient::new(http());
            let run = run_llm(
                &corpus,
                &cfg,
                &template,
                &examples,
                &client as &dyn CompletionClient,
                policy,
            );
            client.save(path)?;
            run?
        } else {
            backend = Backend::Http { url: cfg.url() };
            run_llm(&corpus, &cfg, &template, &examples, &http(), policy)?
        }
    };

    write_predictions(&args.out, &corpus, &run.predictions)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        strategy: args.strategy,
        seed: cfg.seed,
        template: (args.strategy != Strategy::Dict).then_some(template),
        config: cfg,
        alignment_policy: policy,
        backend,
        input: digest(&args.input, &corpus),
        train: train_digest,
        dictionary: dict_digest,
        examples: examples.iter().map(|e| e.doc_id.clone()).collect(),
        summary: RunManifest::summarize(&run),
        documents: run.diagnostics.clone(),
        started_at_unix: started,
        finished_at_unix: unix_now(),
    };
    let manifest_path = args.out.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.to_json()).map_err(|e| Error::io(&manifest_path, e))?;

    let s = &manifest.summary;
    println!(
        "{} documents, {} mentions, {} hallucinated phrases, {} overlaps resolved",
        s.documents, s.mentions, s.hallucinated_phrases, s.overlaps_resolved
    );
    if !s.failed_documents.is_empty() {
        eprintln!(
            "{} section(s) failed in: {}",
            s.failed_sections,
            s.failed_documents.join(", ")
        );
        return Ok(1);
    }
    Ok(0)
}
