use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use log::{info, warn};
use sha2::{Digest, Sha256};

use super::{path_segment, write_json, GeneratedFile, PipelineError, RunManifest, MANIFEST_FILE, RUN_ID_PREFIX, TOOL_VERSION};
use crate::eval::GenerationFailure;
use crate::prompt::{build_prompt, PromptTemplate};
use crate::provider::{strip_fences, GenerationParams, Provider, ProviderError, ProviderResponse};
use crate::story::{parse_stories, StorySchema, UserStory};

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub dataset: PathBuf,
    pub schema: StorySchema,
    pub template: PromptTemplate,
    pub params: GenerationParams,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// `<out>/<model>/<technique>`
    pub run_dir: PathBuf,
}

fn run_id(dataset: &[u8], provider: &str, opts: &GenerateOptions) -> String {
    let mut hasher = Sha256::new();
    for part in [
        hex::encode(Sha256::digest(dataset)),
        provider.to_string(),
        opts.template.digest(),
        serde_json::to_string(&opts.params).expect("params serialize"),
        TOOL_VERSION.to_string(),
    ] {
        hasher.update(part.as_bytes());
        hasher.update([0]);
    }
    hex::encode(hasher.finalize())[..16].to_string()
}

/// Runs `generate` for every story with at most `jobs` calls in flight.
/// Results come back in story order.
fn generate_all(
    provider: &dyn Provider,
    stories: &[UserStory],
    template: &PromptTemplate,
    params: &GenerationParams,
    jobs: usize,
) -> Vec<Result<ProviderResponse, ProviderError>> {
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, stories.len().max(1));
    let mut results: Vec<Option<Result<ProviderResponse, ProviderError>>> = (0..stories.len()).map(|_| None).collect();

    let finished: Vec<Vec<(usize, Result<ProviderResponse, ProviderError>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(story) = stories.get(i) else { break };
                        let result = build_prompt(story, template)
                            .map_err(|e| ProviderError::Config(e.to_string()))
                            .and_then(|payload| provider.generate(&payload, params));
                        done.push((i, result));
                    }
                    done
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generation worker panicked")).collect()
    });
    for (i, result) in finished.into_iter().flatten() {
        results[i] = Some(result);
    }
    results.into_iter().map(|r| r.expect("every story processed")).collect()
}

/// Generates one feature file per story under `<out>/<model>/<technique>/`
/// and writes the run manifest next to them. Individual failures are
/// recorded in the manifest; only a run where every story fails is an error.
pub fn cmd_generate(opts: &GenerateOptions, provider: &dyn Provider) -> Result<GenerateOutcome, PipelineError> {
    opts.params.validate()?;
    opts.template.validate()?;
    let bytes = std::fs::read(&opts.dataset).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            PipelineError::Story(crate::story::StoryError::FileNotFound(opts.dataset.display().to_string()))
        }
        _ => PipelineError::io(&opts.dataset, e),
    })?;
    let stories = parse_stories(&bytes, &opts.schema)?;

    let mut names = std::collections::HashMap::new();
    for story in &stories {
        if let Some(other) = names.insert(path_segment(&story.id), story.id.clone()) {
            return Err(PipelineError::IdCollision(other, story.id.clone()));
        }
    }

    let technique = opts.template.technique;
    let model_dir = path_segment(&opts.params.model_id);
    let rel_dir = format!("{model_dir}/{technique}");
    let run_dir = opts.out_dir.join(&model_dir).join(technique.as_str());
    std::fs::create_dir_all(&run_dir).map_err(|e| PipelineError::io(&run_dir, e))?;

    let run_id = run_id(&bytes, provider.name(), opts);
    info!(
        "run {run_id}: {} stories, provider {}, model {}, {technique}",
        stories.len(),
        provider.name(),
        opts.params.model_id
    );

    let results = generate_all(provider, &stories, &opts.template, &opts.params, opts.jobs);
    let mut generated = Vec::new();
    let mut failures = Vec::new();
    for (story, result) in stories.iter().zip(results) {
        match result {
            Ok(response) => {
                let file_name = format!("{}.{}", path_segment(&story.id), super::FEATURE_EXT);
                let path = run_dir.join(&file_name);
                std::fs::write(&path, feature_file_text(&run_id, &response.text))
                    .map_err(|e| PipelineError::io(&path, e))?;
                generated.push(GeneratedFile {
                    story_id: story.id.clone(),
                    path: format!("{rel_dir}/{file_name}"),
                    request_digest: response.request_digest,
                });
            }
            Err(err) => {
                warn!("story {}: {err}", story.id);
                // Drop output left by an earlier run so it is not linted as this run's.
                let stale = run_dir.join(format!("{}.{}", path_segment(&story.id), super::FEATURE_EXT));
                if stale.exists() {
                    std::fs::remove_file(&stale).map_err(|e| PipelineError::io(&stale, e))?;
                }
                failures.push(GenerationFailure {
                    story_id: story.id.clone(),
                    model_id: model_dir.clone(),
                    technique,
                    error: err.to_string(),
                });
            }
        }
    }

    let manifest = RunManifest {
        run_id,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        dataset_path: opts.dataset.display().to_string(),
        technique,
        provider_name: provider.name().to_string(),
        params: opts.params.clone(),
        prompt_digest: opts.template.digest(),
        tool_version: TOOL_VERSION.to_string(),
        fences_stripped: true,
        story_count: stories.len(),
        generated,
        failures,
    };
    let manifest_path = run_dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;

    if manifest.generated.is_empty() {
        return Err(PipelineError::AllFailed(manifest.failures.len()));
    }
    Ok(GenerateOutcome {
        manifest,
        manifest_path,
        run_dir,
    })
}

/// Persisted form of a response: run-id comment, fence-stripped body, final newline.
pub(crate) fn feature_file_text(run_id: &str, response: &str) -> String {
    let body = strip_fences(response);
    let mut text = format!("{RUN_ID_PREFIX}{run_id}\n{body}");
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text
}

pub(crate) fn read_run_id(text: &str) -> Option<String> {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix(RUN_ID_PREFIX))
        .map(|id| id.trim().to_string())
}
