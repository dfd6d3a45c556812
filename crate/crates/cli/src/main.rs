//! `antonomast` command-line interface.
//!
//! Commands: `fetch-candidates`, `generate`, `compare`, `baseline`, and
//! `cache ls|clear`. Data goes to stdout (or `--out`), diagnostics to
//! stderr. Exit codes: 0 success, 2 endpoint failure, 3 cache miss in
//! offline mode, 4 no viable candidate, 64 usage error, 1 anything else.

mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use antonomast::llm::{self, LlmTransport};
use antonomast::pipeline::report::{self, ComparisonRow};
use antonomast::pipeline::{self, CandidateSource, GenerateRequest, Method, RankingParams};
use antonomast::wikidata::{PageSettings, WikidataError};
use antonomast::{CandidateKind, PipelineError, TranslationalMode};

use config::{OutputFormat, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ENDPOINT: u8 = 2;
pub const EXIT_CACHE_MISS: u8 = 3;
pub const EXIT_NO_VIABLE_CANDIDATE: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "antonomast", version, about = "Generate Vossian antonomasias (\"A is the B of C\") from Wikidata and embeddings")]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub(crate) struct GlobalArgs {
    /// SPARQL endpoint URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,

    /// Directory for cached SPARQL responses.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Never touch the network; a cache miss is an error.
    #[arg(long, global = true)]
    offline: bool,

    /// Path to an embeddings file (whitespace-delimited text format).
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,

    /// Embedding backend: "kg" (keys are Q-ids) or "word".
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Output format for results.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// JSON config file; precedence is flags > env > config > defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub(crate) enum FormatArg {
    Text,
    Json,
    Tsv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Fictional,
    Human,
}

impl From<KindArg> for CandidateKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Fictional => CandidateKind::Fictional,
            KindArg::Human => CandidateKind::Human,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Projection,
    Translational,
}

impl From<MethodArg> for Method {
    fn from(method: MethodArg) -> Self {
        match method {
            MethodArg::Projection => Method::Projection,
            MethodArg::Translational => Method::Translational,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Residual,
    Plain,
}

impl From<ModeArg> for TranslationalMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Residual => TranslationalMode::Residual,
            ModeArg::Plain => TranslationalMode::Plain,
        }
    }
}

#[derive(Args, Clone, Debug)]
struct CandidatePoolArgs {
    /// Read candidates from a JSON-lines file instead of querying.
    #[arg(long)]
    candidates_file: Option<PathBuf>,

    /// Which extraction query feeds the candidate pool.
    #[arg(long, value_enum, default_value = "human")]
    kind: KindArg,

    /// Sitelinks threshold (default: 30 for fictional, 70 for human).
    #[arg(long)]
    min_sitelinks: Option<u64>,

    /// Stop paging after this many raw result rows.
    #[arg(long, default_value_t = 50_000)]
    max_rows: u64,
}

impl CandidatePoolArgs {
    fn source(&self) -> CandidateSource {
        match &self.candidates_file {
            Some(path) => CandidateSource::JsonLines(path.clone()),
            None => CandidateSource::Fetch {
                kind: self.kind.into(),
                min_sitelinks: self.effective_min_sitelinks(),
                pages: PageSettings {
                    max_rows: self.max_rows,
                    ..PageSettings::default()
                },
            },
        }
    }

    fn effective_min_sitelinks(&self) -> u64 {
        self.min_sitelinks.unwrap_or(match self.kind {
            KindArg::Fictional => 30,
            KindArg::Human => 70,
        })
    }
}

#[derive(Subcommand, Clone, Debug)]
enum Command {
    /// Run a candidate-extraction query and write the records as JSON lines.
    FetchCandidates {
        #[arg(long, value_enum)]
        kind: KindArg,

        /// Sitelinks threshold (default: 30 for fictional, 70 for human).
        #[arg(long)]
        min_sitelinks: Option<u64>,

        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,

        /// Stop paging after this many raw result rows.
        #[arg(long, default_value_t = 50_000)]
        max_rows: u64,
    },

    /// Generate antonomasias for one target.
    Generate {
        /// Target entity: a label ("Alan Turing") or a Q-id.
        #[arg(long)]
        target: String,

        #[arg(long, value_enum)]
        method: MethodArg,

        /// How many results to keep.
        #[arg(long, default_value_t = 10)]
        k: usize,

        /// Disable the L1 extremality re-rank of the top k.
        #[arg(long)]
        no_rerank: bool,

        /// Translational scoring variant.
        #[arg(long, value_enum, default_value = "residual")]
        translational_mode: ModeArg,

        /// Exclude candidates that hold the modifier occupation in any of
        /// their rows, not just the offending rows.
        #[arg(long)]
        strict_domain: bool,

        #[command(flatten)]
        pool: CandidatePoolArgs,
    },

    /// Generate with several methods for several targets and emit the
    /// rating sheet (TSV).
    Compare {
        /// File with one target (label or Q-id) per line.
        #[arg(long)]
        targets_file: PathBuf,

        /// Methods to compare.
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["projection", "translational"])]
        methods: Vec<MethodArg>,

        /// How many results to generate per cell (the top one is shown).
        #[arg(long, default_value_t = 1)]
        k: usize,

        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        pool: CandidatePoolArgs,
    },

    /// Render the baseline chat prompt for a target and run it through a
    /// recorded or live transport.
    Baseline {
        /// Target entity: a label or a Q-id.
        #[arg(long)]
        target: String,

        /// Directory of recorded completions (default: `<cache-dir>/llm`).
        #[arg(long)]
        fixtures: Option<PathBuf>,

        /// Send a live request instead of replaying a fixture.
        #[arg(long)]
        live: bool,

        /// Chat-completion endpoint for --live.
        #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
        llm_endpoint: String,

        /// Model name for --live.
        #[arg(long, default_value = "gpt-3.5-turbo")]
        model: String,

        /// Log live request/response bodies under the cache directory and
        /// store the completion as a replayable fixture.
        #[arg(long)]
        record: bool,

        /// Print the rendered prompt and exit without completing.
        #[arg(long)]
        prompt_only: bool,
    },

    /// Inspect or clear the response cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Clone, Debug)]
enum CacheAction {
    /// List cached queries (digest and query snippet).
    Ls,
    /// Delete all cached responses and the manifest.
    Clear,
}

pub(crate) struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub(crate) fn other(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<WikidataError> for Failure {
    fn from(error: WikidataError) -> Self {
        let code = match &error {
            WikidataError::Endpoint { .. } | WikidataError::Network { .. } => EXIT_ENDPOINT,
            WikidataError::CacheMiss { .. } => EXIT_CACHE_MISS,
            _ => 1,
        };
        Failure {
            code,
            message: error.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(error: PipelineError) -> Self {
        match error {
            PipelineError::NoViableCandidate { .. } => Failure {
                code: EXIT_NO_VIABLE_CANDIDATE,
                message: error.to_string(),
            },
            PipelineError::Wikidata(inner) => inner.into(),
            other => Failure {
                code: 1,
                message: other.to_string(),
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let config = match RunConfig::resolve(&cli.globals) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("antonomast: {message}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    match run(cli.command, &config) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(failure) => {
            eprintln!("antonomast: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command, config: &RunConfig) -> Result<(), Failure> {
    match command {
        Command::FetchCandidates {
            kind,
            min_sitelinks,
            out,
            max_rows,
        } => cmd_fetch_candidates(config, kind, min_sitelinks, out, max_rows),
        Command::Generate {
            target,
            method,
            k,
            no_rerank,
            translational_mode,
            strict_domain,
            pool,
        } => {
            if k == 0 {
                return Err(Failure::usage("--k must be at least 1"));
            }
            let params = RankingParams {
                method: method.into(),
                k,
                extremal_rerank: !no_rerank,
                translational_mode: translational_mode.into(),
            };
            cmd_generate(config, target, params, strict_domain, &pool)
        }
        Command::Compare {
            targets_file,
            methods,
            k,
            out,
            pool,
        } => cmd_compare(config, targets_file, &methods, k.max(1), out, &pool),
        Command::Baseline {
            target,
            fixtures,
            live,
            llm_endpoint,
            model,
            record,
            prompt_only,
        } => cmd_baseline(
            config,
            target,
            fixtures,
            live,
            llm_endpoint,
            model,
            record,
            prompt_only,
        ),
        Command::Cache { action } => cmd_cache(config, action),
    }
}

fn write_output(out: Option<&PathBuf>, data: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, data)
            .map_err(|e| Failure::other(format!("failed to write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .map_err(|e| Failure::other(format!("failed to write stdout: {e}")))
        }
    }
}

fn cmd_fetch_candidates(
    config: &RunConfig,
    kind: KindArg,
    min_sitelinks: Option<u64>,
    out: Option<PathBuf>,
    max_rows: u64,
) -> Result<(), Failure> {
    let min_sitelinks = min_sitelinks.unwrap_or(match kind {
        KindArg::Fictional => 30,
        KindArg::Human => 70,
    });
    let client = config.sparql_client()?;
    let batch = client.fetch_candidates(
        kind.into(),
        min_sitelinks,
        &PageSettings {
            max_rows,
            ..PageSettings::default()
        },
    )?;

    let mut data = String::new();
    for record in &batch.records {
        data.push_str(&serde_json::to_string(record).expect("records serialize"));
        data.push('\n');
    }
    write_output(out.as_ref(), &data)?;

    let s = batch.stats;
    eprintln!(
        "rows={} kept={} dropped_label={} dropped_sitelinks={} dropped_malformed={} deduplicated={}",
        s.rows, s.kept, s.dropped_missing_label, s.dropped_sitelinks, s.dropped_malformed, s.deduplicated
    );
    Ok(())
}

fn cmd_generate(
    config: &RunConfig,
    target: String,
    params: RankingParams,
    strict_domain: bool,
    pool: &CandidatePoolArgs,
) -> Result<(), Failure> {
    let client = config.sparql_client()?;
    let index = config.embedding_index()?;
    let request = GenerateRequest {
        target,
        params,
        strict_domain,
        source: pool.source(),
    };
    let report = pipeline::generate(&request, &client, &index)?;

    let data = match config.format {
        OutputFormat::Text => report::results_to_text(&report.results),
        OutputFormat::Tsv => report::results_to_tsv(&report.results),
        OutputFormat::Json => {
            let mut json = report::report_to_json(&report);
            json.push('\n');
            json
        }
    };
    write_output(None, &data)?;
    eprintln!(
        "scored {} of {} candidates ({})",
        report.provenance.candidates_scored,
        report.provenance.candidates_total,
        report.provenance.skip_counts
    );
    Ok(())
}

fn cmd_compare(
    config: &RunConfig,
    targets_file: PathBuf,
    methods: &[MethodArg],
    k: usize,
    out: Option<PathBuf>,
    pool: &CandidatePoolArgs,
) -> Result<(), Failure> {
    if methods.is_empty() {
        return Err(Failure::usage("--methods must name at least one method"));
    }
    let targets_text = fs::read_to_string(&targets_file).map_err(|e| {
        Failure::other(format!("failed to read {}: {e}", targets_file.display()))
    })?;
    let targets: Vec<&str> = targets_text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .collect();
    if targets.is_empty() {
        return Err(Failure::usage(format!(
            "{} lists no targets",
            targets_file.display()
        )));
    }

    let client = config.sparql_client()?;
    let index = config.embedding_index()?;
    let methods: Vec<Method> = methods.iter().map(|m| (*m).into()).collect();

    let mut rows = Vec::new();
    let mut any_ok = false;
    for target in &targets {
        let mut cells = Vec::new();
        for method in &methods {
            let request = GenerateRequest {
                target: (*target).to_owned(),
                params: RankingParams {
                    method: *method,
                    k,
                    ..RankingParams::default()
                },
                strict_domain: false,
                source: pool.source(),
            };
            match pipeline::generate(&request, &client, &index) {
                Ok(report) => {
                    any_ok = true;
                    cells.push(Ok(report.results[0].sentence.clone()));
                }
                Err(e) => {
                    eprintln!("{target} / {method}: {e}");
                    cells.push(Err(e.code().to_owned()));
                }
            }
        }
        rows.push(ComparisonRow {
            target: (*target).to_owned(),
            cells,
        });
    }

    let tsv = report::comparison_tsv(&methods, &rows);
    write_output(out.as_ref(), &tsv)?;
    if any_ok {
        Ok(())
    } else {
        Err(Failure::other("every comparison cell failed"))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_baseline(
    config: &RunConfig,
    target: String,
    fixtures: Option<PathBuf>,
    live: bool,
    llm_endpoint: String,
    model: String,
    record: bool,
    prompt_only: bool,
) -> Result<(), Failure> {
    let client = config.sparql_client()?;
    let profile = client.fetch_target_profile(&target)?;
    let prompt = llm::build_va_prompt(&profile);

    if prompt_only {
        write_output(None, &format!("{}\n", prompt.text))?;
        return Ok(());
    }

    let fixtures_dir = fixtures.unwrap_or_else(|| config.cache_dir.join("llm"));
    let transport = if live {
        if config.offline {
            return Err(Failure::usage("--live conflicts with offline mode"));
        }
        LlmTransport::Live(llm::LiveConfig::new(llm_endpoint, model))
    } else {
        LlmTransport::recorded(&fixtures_dir)
    };
    let record_dir = record.then(|| config.cache_dir.join("llm-log"));

    let completion = llm::complete(&prompt, &transport, record_dir.as_deref())
        .map_err(|e| Failure::other(e.to_string()))?;
    if record && live {
        llm::store_fixture(&fixtures_dir, &prompt.text, &completion)
            .map_err(|e| Failure::other(e.to_string()))?;
    }

    let parsed = llm::parse_va_lines(&completion, &profile.label);
    let data = match config.format {
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "prompt": prompt.text,
                "target": profile,
                "completion": completion,
                "entries": parsed.entries,
                "skipped_lines": parsed.skipped_lines,
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("json serializes")
            )
        }
        OutputFormat::Text | OutputFormat::Tsv => {
            let mut text = String::new();
            for entry in &parsed.entries {
                text.push_str(&format!(
                    "{}\t{}\t{}\n",
                    entry.source_label,
                    entry.modifier_label,
                    entry.justification.as_deref().unwrap_or("")
                ));
            }
            text
        }
    };
    write_output(None, &data)?;
    eprintln!(
        "parsed {} line(s), skipped {}",
        parsed.entries.len(),
        parsed.skipped_lines
    );
    Ok(())
}

fn cmd_cache(config: &RunConfig, action: CacheAction) -> Result<(), Failure> {
    let cache = config.query_cache();
    match action {
        CacheAction::Ls => {
            let mut data = String::new();
            for (digest, snippet) in cache.manifest_entries()? {
                data.push_str(&format!("{digest}\t{snippet}\n"));
            }
            write_output(None, &data)
        }
        CacheAction::Clear => {
            let removed = cache.clear()?;
            eprintln!("removed {removed} cached response(s)");
            Ok(())
        }
    }
}
