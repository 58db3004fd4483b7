use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use bddgen::lint::LintConfig;
use bddgen::pipeline::{cmd_evaluate, cmd_generate, cmd_lint, cmd_run, GenerateOptions, PipelineError, REPORT_DIR};
use bddgen::prompt::{default_template, PromptTechnique};
use bddgen::provider::{
    GenerationParams, HttpProvider, Provider, ProviderConfig, ProviderError, RecordingProvider, ReplayFixture,
    ReplayProvider,
};
use bddgen::story::StorySchema;

/// Value of `--provider` that selects the offline replay provider.
const REPLAY_PROVIDER: &str = "replay";

#[derive(Debug, Parser)]
#[command(name = "bddgen", version, about = "Generate and validate Gherkin feature files from user stories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one feature file per user story.
    Generate(GenerateArgs),
    /// Lint every .feature file under a directory.
    Lint(LintArgs),
    /// Aggregate findings reports into accuracy and error tables.
    Evaluate(EvaluateArgs),
    /// Generate, lint and evaluate in one go.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// User-story CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// Provider config file (TOML or JSON), or `replay`.
    #[arg(long)]
    provider: Option<String>,
    /// zero or few.
    #[arg(long, default_value = "zero")]
    technique: PromptTechnique,
    /// Generation parameters file (TOML or JSON).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Model id; overrides the provider config and params file.
    #[arg(long)]
    model: Option<String>,
    /// Output root.
    #[arg(long)]
    out: PathBuf,
    /// Replay fixture to answer from, or to write with --record.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Call the live provider and record responses into the --replay fixture.
    #[arg(long, requires = "replay")]
    record: bool,
    /// Maximum concurrent provider calls.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// File with a replacement request text.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    id_column: String,
    #[arg(long, default_value = "description")]
    description_column: String,
}

#[derive(Debug, Args)]
struct LintArgs {
    /// Directory containing .feature files.
    dir: PathBuf,
    /// Lint config file (TOML or JSON).
    #[arg(long)]
    lint_config: Option<PathBuf>,
    /// Findings report path; defaults to <dir>/findings.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Findings reports, manifests, or directories holding them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    generate: GenerateArgs,
    /// Lint config file (TOML or JSON).
    #[arg(long)]
    lint_config: Option<PathBuf>,
}

fn config_err(e: impl ToString) -> PipelineError {
    PipelineError::Config(e.to_string())
}

fn build_provider(args: &GenerateArgs) -> Result<(Box<dyn Provider>, Option<ProviderConfig>), PipelineError> {
    let config = match args.provider.as_deref() {
        None | Some(REPLAY_PROVIDER) => None,
        Some(path) => Some(ProviderConfig::load(Path::new(path))?),
    };
    let provider: Box<dyn Provider> = match (&config, &args.replay, args.record) {
        (Some(config), Some(fixture), true) => {
            Box::new(RecordingProvider::new(HttpProvider::new(config.clone()), fixture)?)
        }
        (None, _, true) => return Err(config_err("--record needs a provider config file")),
        (config, Some(fixture), false) => {
            let name = config.as_ref().map_or(REPLAY_PROVIDER, |c| c.name.as_str());
            Box::new(ReplayProvider::new(name, ReplayFixture::load(fixture)?))
        }
        (Some(config), None, _) => Box::new(HttpProvider::new(config.clone())),
        (None, None, _) => return Err(config_err("either --provider <config> or --replay <fixture> is required")),
    };
    Ok((provider, config))
}

fn generate_options(args: &GenerateArgs, config: Option<&ProviderConfig>) -> Result<GenerateOptions, PipelineError> {
    let mut params = match (&args.params, config) {
        (Some(path), _) => GenerationParams::load(path)?,
        (None, Some(c)) => c.generation_params(),
        (None, None) => GenerationParams::default(),
    };
    if params.model_id.is_empty() {
        if let Some(model) = config.and_then(|c| c.model_id.clone()) {
            params.model_id = model;
        }
    }
    if let Some(model) = &args.model {
        params.model_id = model.clone();
    }
    if params.model_id.is_empty() {
        return Err(ProviderError::InvalidParams("no model id; pass --model or set model_id".into()).into());
    }
    let mut template = default_template(args.technique);
    if let Some(path) = &args.template {
        template = template.with_request_file(path)?;
    }
    if args.jobs == 0 {
        return Err(config_err("--jobs must be at least 1"));
    }
    Ok(GenerateOptions {
        dataset: args.dataset.clone(),
        schema: StorySchema {
            id_column: args.id_column.clone(),
            description_column: args.description_column.clone(),
            ..StorySchema::default()
        },
        template,
        params,
        out_dir: args.out.clone(),
        jobs: args.jobs,
    })
}

fn lint_config(path: Option<&Path>) -> Result<LintConfig, PipelineError> {
    match path {
        Some(p) => Ok(LintConfig::load(p)?),
        None => Ok(LintConfig::default()),
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Generate(args) => {
            let (provider, config) = build_provider(&args)?;
            let opts = generate_options(&args, config.as_ref())?;
            let outcome = cmd_generate(&opts, provider.as_ref())?;
            info!(
                "generated {} of {} stories into {}",
                outcome.manifest.generated.len(),
                outcome.manifest.story_count,
                outcome.run_dir.display()
            );
            println!("{}", outcome.manifest_path.display());
        }
        Command::Lint(args) => {
            let config = lint_config(args.lint_config.as_deref())?;
            let (report, path) = cmd_lint(&args.dir, &config, args.out.as_deref())?;
            info!("{} findings in {} files", report.findings.len(), report.files.len());
            println!("{}", path.display());
        }
        Command::Evaluate(args) => {
            let bundle = cmd_evaluate(&args.inputs, &args.out)?;
            println!("{}", bundle.summary_json.display());
        }
        Command::Run(args) => {
            let config = lint_config(args.lint_config.as_deref())?;
            let (provider, provider_config) = build_provider(&args.generate)?;
            let opts = generate_options(&args.generate, provider_config.as_ref())?;
            let outcome = cmd_run(&opts, provider.as_ref(), &config)?;
            info!("report written to {}", args.generate.out.join(REPORT_DIR).display());
            println!("{}", outcome.report.summary_json.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
