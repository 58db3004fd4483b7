mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bddgen::lint::LintRuleId;
use bddgen::pipeline::{LintReport, LintedFile, RunManifest};
use bddgen::prompt::{build_prompt, default_template, PromptTechnique};
use bddgen::provider::{request_digest, GenerationParams, ReplayFixture};
use bddgen::story::{parse_stories, StorySchema};

use common::*;

const STORIES: &str = "id,description\nUS1,\"As a user, I need to log in.\"\nUS2,\"As a user, I need to log out.\"\nUS3,\"As an admin, I need to ban users.\"\n";
const MODEL: &str = "mock-model";

fn bddgen(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bddgen"));
    cmd.args(args).env("RUST_LOG", "error");
    for (flag, path) in paths {
        if !flag.is_empty() {
            cmd.arg(flag);
        }
        cmd.arg(path);
    }
    cmd.output().unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        std::fs::write(ws.dataset(), STORIES).unwrap();
        ws
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn dataset(&self) -> PathBuf {
        self.path("stories.csv")
    }

    fn fixture(&self) -> PathBuf {
        self.path("fixture.json")
    }

    /// Records a response for every story except those in `skip`.
    fn write_fixture(&self, technique: PromptTechnique, skip: &[&str], text: &str) {
        let stories = parse_stories(STORIES.as_bytes(), &StorySchema::default()).unwrap();
        let params = GenerationParams::for_model(MODEL);
        let mut fixture = ReplayFixture::load_or_default(&self.fixture()).unwrap();
        for story in stories.iter().filter(|s| !skip.contains(&s.id.as_str())) {
            let payload = build_prompt(story, &default_template(technique)).unwrap();
            fixture.insert(request_digest(&payload, &params), text);
        }
        fixture.save(&self.fixture()).unwrap();
    }

    fn generate(&self, technique: &str, out: &str) -> Output {
        bddgen(
            &["generate", "--provider", "replay", "--model", MODEL, "--technique", technique],
            &[("--dataset", &self.dataset()), ("--replay", &self.fixture()), ("--out", &self.path(out))],
        )
    }

    fn run(&self, technique: &str, out: &str) -> Output {
        bddgen(
            &["run", "--provider", "replay", "--model", MODEL, "--technique", technique],
            &[("--dataset", &self.dataset()), ("--replay", &self.fixture()), ("--out", &self.path(out))],
        )
    }
}

fn feature_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "feature"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&bddgen(&["--help"], &[])), 0);
    assert_eq!(code(&bddgen(&["--version"], &[])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&bddgen(&[], &[])), 1);
    assert_eq!(code(&bddgen(&["generate", "--bogus"], &[])), 1);
    let ws = Workspace::new();
    let out = bddgen(
        &["generate", "--provider", "replay", "--model", MODEL, "--technique", "many"],
        &[("--dataset", &ws.dataset()), ("--replay", &ws.fixture()), ("--out", &ws.path("out"))],
    );
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn generate_writes_one_file_per_story() {
    let ws = Workspace::new();
    ws.write_fixture(PromptTechnique::ZeroShot, &[], "```gherkin\nFeature: F\n  @t\n  Scenario: S\n    Given x\n```");
    let out = ws.generate("zero", "out");
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let run_dir = ws.path("out/mock-model/zero-shot");
    let files = feature_files(&run_dir);
    assert_eq!(files.keys().collect::<Vec<_>>(), ["US1.feature", "US2.feature", "US3.feature"]);
    let manifest: RunManifest = read_json(&run_dir.join("manifest.json"));
    assert_eq!(manifest.generated.len(), 3);
    assert!(manifest.failures.is_empty());
    for text in files.values() {
        let text = String::from_utf8(text.clone()).unwrap();
        assert_eq!(text, format!("# run-id: {}\nFeature: F\n  @t\n  Scenario: S\n    Given x\n", manifest.run_id));
    }
}

#[test]
fn partial_failure_is_recorded_and_exits_zero() {
    let ws = Workspace::new();
    ws.write_fixture(PromptTechnique::ZeroShot, &["US2"], "Feature: F\n");
    let out = ws.generate("zero", "out");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let run_dir = ws.path("out/mock-model/zero-shot");
    assert_eq!(feature_files(&run_dir).len(), 2);
    let manifest: RunManifest = read_json(&run_dir.join("manifest.json"));
    assert_eq!(manifest.failures.len(), 1);
    assert_eq!(manifest.failures[0].story_id, "US2");
}

#[test]
fn all_failures_exit_two() {
    let ws = Workspace::new();
    ReplayFixture::default().save(&ws.fixture()).unwrap();
    let out = ws.generate("few", "out");
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn config_problems_exit_one() {
    let ws = Workspace::new();
    ReplayFixture::default().save(&ws.fixture()).unwrap();
    let missing = bddgen(
        &["generate", "--provider", "replay", "--model", MODEL],
        &[("--dataset", &ws.path("nope.csv")), ("--replay", &ws.fixture()), ("--out", &ws.path("out"))],
    );
    assert_eq!(code(&missing), 1, "{}", stderr(&missing));

    let no_model = bddgen(
        &["generate", "--provider", "replay"],
        &[("--dataset", &ws.dataset()), ("--replay", &ws.fixture()), ("--out", &ws.path("out"))],
    );
    assert_eq!(code(&no_model), 1, "{}", stderr(&no_model));

    let no_provider = bddgen(
        &["generate", "--model", MODEL],
        &[("--dataset", &ws.dataset()), ("--out", &ws.path("out"))],
    );
    assert_eq!(code(&no_provider), 1, "{}", stderr(&no_provider));

    let record_without_config = bddgen(
        &["generate", "--provider", "replay", "--model", MODEL, "--record"],
        &[("--dataset", &ws.dataset()), ("--replay", &ws.fixture()), ("--out", &ws.path("out"))],
    );
    assert_eq!(code(&record_without_config), 1, "{}", stderr(&record_without_config));
}

#[test]
fn rerun_is_byte_identical() {
    let ws = Workspace::new();
    ws.write_fixture(PromptTechnique::FewShot, &[], "Feature: F\n  Scenario: S\n    Given x\n");
    assert_eq!(code(&ws.generate("few", "a")), 0);
    assert_eq!(code(&ws.generate("few", "b")), 0);
    assert_eq!(
        feature_files(&ws.path("a/mock-model/few-shot")),
        feature_files(&ws.path("b/mock-model/few-shot"))
    );
}

#[test]
fn lint_reports_findings_without_failing() {
    let ws = Workspace::new();
    let clean = ws.path("clean");
    std::fs::create_dir_all(&clean).unwrap();
    std::fs::write(clean.join("calculator.feature"), CALCULATOR_FEATURE).unwrap();
    let out = bddgen(&["lint"], &[("", &clean)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: LintReport = read_json(&clean.join("findings.json"));
    assert_eq!(report.files.len(), 1);
    assert!(report.findings.is_empty());

    let dirty = ws.path("dirty");
    std::fs::create_dir_all(&dirty).unwrap();
    let (name, text, rule) = rule_fixtures()[0];
    std::fs::write(dirty.join(name), text).unwrap();
    let report_path = ws.path("dirty-findings.json");
    let out = bddgen(&["lint"], &[("", &dirty), ("--out", &report_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let value: serde_json::Value = read_json(&report_path);
    let findings = value["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["rule"], rule.as_str());
    assert_eq!(findings[0]["path"], name);
    assert_eq!(findings[0]["line"], 7);
}

#[test]
fn lint_errors_exit_one() {
    let ws = Workspace::new();
    let empty = ws.path("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&bddgen(&["lint"], &[("", &empty)])), 1);

    std::fs::write(empty.join("a.feature"), "Feature: A\n").unwrap();
    let config = ws.path("lint.toml");
    std::fs::write(&config, "restricted_patterns = [\"(\"]\n").unwrap();
    assert_eq!(code(&bddgen(&["lint"], &[("", &empty), ("--lint-config", &config)])), 1);
    std::fs::write(&config, "unknown_key = 1\n").unwrap();
    assert_eq!(code(&bddgen(&["lint"], &[("", &empty), ("--lint-config", &config)])), 1);
}

#[test]
fn lint_config_disables_rules() {
    let ws = Workspace::new();
    let dir = ws.path("features");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("untagged.feature"), rule_fixtures()[2].1).unwrap();
    let config = ws.path("lint.toml");
    std::fs::write(&config, "enabled = [\"gherkin-keywords-not-in-logical-order\"]\n").unwrap();
    assert_eq!(code(&bddgen(&["lint"], &[("", &dir), ("--lint-config", &config)])), 0);
    let report: LintReport = read_json(&dir.join("findings.json"));
    assert!(report.findings.is_empty());
}

#[test]
fn evaluate_without_reports_exits_one() {
    let ws = Workspace::new();
    let empty = ws.path("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&bddgen(&["evaluate"], &[("", &empty), ("--out", &ws.path("report"))])), 1);
}

#[test]
fn run_both_techniques_gives_shares_summing_to_one() {
    let ws = Workspace::new();
    ws.write_fixture(PromptTechnique::ZeroShot, &[], "Feature: F\n  Scenario: S\n    Given x\n");
    ws.write_fixture(PromptTechnique::FewShot, &["US3"], "Feature: F\n  @t\n  Scenario: S\n    -----\n    Given x\n");
    assert_eq!(code(&ws.run("zero", "out")), 0);
    let out = ws.run("few", "out");
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let summary: serde_json::Value = read_json(&ws.path("out/report/summary.json"));
    let shares = summary["technique_share"].as_object().unwrap();
    let sum: f64 = shares.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert_eq!(shares["zero-shot"].as_f64().unwrap(), 0.6);

    let accuracy = std::fs::read_to_string(ws.path("out/report/accuracy.csv")).unwrap();
    assert_eq!(
        accuracy,
        "model,technique,clean,total,accuracy,failures\nmock-model,zero-shot,0,3,0,0\nmock-model,few-shot,0,2,0,1\n"
    );
}

#[test]
fn clean_run_scores_one() {
    let ws = Workspace::new();
    ws.write_fixture(PromptTechnique::FewShot, &[], CALCULATOR_FEATURE);
    assert_eq!(code(&ws.run("few", "out")), 0);
    let accuracy = std::fs::read_to_string(ws.path("out/report/accuracy.csv")).unwrap();
    assert!(accuracy.contains("mock-model,few-shot,3,3,1,0\n"), "{accuracy}");
}

#[test]
fn evaluate_reproduces_reference_row_sums() {
    let ws = Workspace::new();
    let mut report = LintReport {
        run_ids: vec!["synthetic".into()],
        files: Vec::new(),
        findings: Vec::new(),
    };
    for verdict in reference_verdicts(5) {
        report.files.push(LintedFile {
            path: verdict.path.clone(),
            story_id: verdict.story_id.clone(),
            model: Some(verdict.model_id.clone()),
            technique: Some(verdict.technique),
            run_id: Some("synthetic".into()),
            findings: verdict.findings.len(),
        });
        report.findings.extend(verdict.findings.into_iter().map(|mut f| {
            f.source_path = verdict.path.clone();
            f
        }));
    }
    let input = ws.path("findings.json");
    std::fs::write(&input, serde_json::to_string(&report).unwrap()).unwrap();
    let out = bddgen(&["evaluate"], &[("", &input), ("--out", &ws.path("report"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let mut reader = csv::Reader::from_path(ws.path("report/error_matrix.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let total_col = headers.iter().position(|h| h == "total").unwrap();
    let mut sums: BTreeMap<(String, String), u64> = BTreeMap::new();
    for row in reader.records() {
        let row = row.unwrap();
        sums.insert((row[0].to_string(), row[1].to_string()), row[total_col].parse().unwrap());
    }
    for (technique, want) in [("zero-shot", ZERO_SHOT_ROW_SUMS), ("few-shot", FEW_SHOT_ROW_SUMS)] {
        for (rule, n) in LintRuleId::TAXONOMY.iter().zip(want) {
            assert_eq!(sums[&(technique.to_string(), rule.as_str().to_string())], n, "{technique} {rule}");
        }
        assert_eq!(sums[&(technique.to_string(), LintRuleId::NoFeature.as_str().to_string())], 0);
    }
    let summary: serde_json::Value = read_json(&ws.path("report/summary.json"));
    assert_eq!(summary["technique_totals"]["zero-shot"], 667);
    assert_eq!(summary["technique_totals"]["few-shot"], 80);
}
