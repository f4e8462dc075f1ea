//! Batch pipeline: run configuration, corpus assembly, and the operations
//! behind the `repv` command-line tool.
//!
//! Every command is a pure function from inputs to an output string (plus
//! explicitly named artifact files), so the binary stays a thin argument
//! parser and the whole surface is exercisable from tests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::automata::{universal_ts, AutomataError, PropSet, TransitionSystem};
use crate::calibration::{
    calibrate, guarantee, verify, CalibrationError, CalibrationTable, ComplianceVerdict,
};
use crate::fixtures::{domain, synth_corpus, training_rules, Domain};
use crate::l2a::{l2a, explain_mapping, L2aError, PropositionMapping};
use crate::ltl::{model_check, parse_ltl, LtlError, LtlFormula};
use crate::metrics::{report, MetricsError, SampleRecord};
use crate::oracle::{
    Embedder, Interpreter, MockEmbedder, MockInterpreter, OracleError, RemoteClient, RemoteConfig,
};
use crate::plan_lang::{parse_plan, pretty_print, validate_plan, Diagnostic, PlanError};
use crate::projector::{
    classify, collect_training_set, load_checkpoint, project, save_checkpoint, train, Hyperparams,
    LatentRecord, ProjectorError, ProjectorParams,
};
use crate::refine::{
    build_dpo, build_sft, export_dpo_jsonl, export_sft_jsonl, RefineError, TaskCandidates,
    VerifiedPlan,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("plan failed validation:\n{}", .0.iter().map(|d| format!("  {}", d.message)).collect::<Vec<_>>().join("\n"))]
    InvalidPlan(Vec<Diagnostic>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Compile(#[from] L2aError),
    #[error(transparent)]
    Logic(#[from] LtlError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_corpus_size")]
    pub corpus_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_hidden1")]
    pub hidden1: usize,
    #[serde(default = "default_hidden2")]
    pub hidden2: usize,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
}

fn default_corpus_size() -> usize {
    400
}
fn default_epochs() -> usize {
    10
}
fn default_batch_size() -> usize {
    20
}
// Plain-SGD step size tuned so the stock run fully separates the mock
// corpus; at 1e-3 the classifier stalls at the all-safe base rate.
fn default_learning_rate() -> f64 {
    0.5
}
fn default_hidden1() -> usize {
    128
}
fn default_hidden2() -> usize {
    32
}
fn default_latent_dim() -> usize {
    10
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            corpus_size: default_corpus_size(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            hidden1: default_hidden1(),
            hidden2: default_hidden2(),
            latent_dim: default_latent_dim(),
        }
    }
}

/// Run configuration, normally loaded from a TOML file. Unknown keys are
/// rejected so a typo cannot silently fall back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default = "default_domain")]
    pub domain: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: Backend,
    /// Error rate of the offline interpreter's flip channel.
    #[serde(default = "default_error_rate")]
    pub error_rate: f64,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    /// Confidence threshold for fine-tuning exports.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub train: TrainConfig,
    /// Required when `backend = "remote"`.
    #[serde(default)]
    pub remote: Option<RemoteConfig>,
}

fn default_domain() -> String {
    "driving".into()
}
fn default_error_rate() -> f64 {
    crate::oracle::DEFAULT_ERROR_RATE
}
fn default_embedding_dim() -> usize {
    crate::oracle::DEFAULT_EMBEDDING_DIM
}
fn default_tau() -> f64 {
    crate::refine::DEFAULT_TAU
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            domain: default_domain(),
            seed: 0,
            backend: Backend::Mock,
            error_rate: default_error_rate(),
            embedding_dim: default_embedding_dim(),
            tau: default_tau(),
            train: TrainConfig::default(),
            remote: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.version != CONFIG_VERSION {
            return Err(PipelineError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(PipelineError::Config(format!(
                "error_rate {} outside [0, 1]",
                self.error_rate
            )));
        }
        if !(self.tau > 0.5 && self.tau <= 1.0) {
            return Err(PipelineError::Config(format!(
                "tau {} outside (0.5, 1]",
                self.tau
            )));
        }
        if self.backend == Backend::Remote && self.remote.is_none() {
            return Err(PipelineError::Config(
                "backend = \"remote\" requires a [remote] section".into(),
            ));
        }
        Ok(())
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            input_dim: self.embedding_dim(),
            hidden1: self.train.hidden1,
            hidden2: self.train.hidden2,
            latent_dim: self.train.latent_dim,
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            seed: self.seed,
        }
    }

    fn embedding_dim(&self) -> usize {
        match (&self.backend, &self.remote) {
            (Backend::Remote, Some(r)) => r.embedding_dim,
            _ => self.embedding_dim,
        }
    }

    pub fn interpreter(&self) -> Result<Box<dyn Interpreter>, PipelineError> {
        match self.backend {
            Backend::Mock => Ok(Box::new(MockInterpreter::new(self.seed, self.error_rate))),
            Backend::Remote => Ok(Box::new(self.remote_client()?)),
        }
    }

    pub fn embedder(&self) -> Result<Box<dyn Embedder>, PipelineError> {
        match self.backend {
            Backend::Mock => Ok(Box::new(MockEmbedder::new(self.seed, self.embedding_dim))),
            Backend::Remote => Ok(Box::new(self.remote_client()?)),
        }
    }

    fn remote_client(&self) -> Result<RemoteClient, PipelineError> {
        let remote = self
            .remote
            .clone()
            .ok_or_else(|| PipelineError::Config("missing [remote] section".into()))?;
        Ok(RemoteClient::new(remote)?)
    }

    pub fn domain(&self) -> Result<Domain, PipelineError> {
        domain(&self.domain).ok_or_else(|| PipelineError::UnknownDomain(self.domain.clone()))
    }
}

// ---------------------------------------------------------------------------
// Corpus assembly, training, calibration
// ---------------------------------------------------------------------------

/// Environment model plus the automaton alphabet widened to cover the
/// formula, so any quoted atom the rule mentions is at least representable.
fn env_for(
    map: &PropositionMapping,
    phi: Option<&LtlFormula>,
) -> Result<(PropSet, TransitionSystem), PipelineError> {
    let mut names = map.all_props();
    if let Some(phi) = phi {
        names.extend(phi.atoms());
    }
    let ap = PropSet::new(names)?;
    let ts = universal_ts(&ap, &map.sensor_props())?;
    Ok((ap, ts))
}

/// Synthesize the training corpus and collect one latent record per plan.
/// The corpus is always the driving domain: that is where the paraphrased
/// rule set and the plan generator live.
pub fn assemble_records(
    cfg: &RunConfig,
) -> Result<(Vec<LatentRecord>, Vec<String>), PipelineError> {
    let dom = domain("driving").expect("built-in domain");
    let rules = training_rules();
    let plans = synth_corpus(cfg.seed, cfg.train.corpus_size);
    let ts = crate::fixtures::universal_env(&dom.mapping)?;
    let interpreter = cfg.interpreter()?;
    let embedder = cfg.embedder()?;
    Ok(collect_training_set(
        &plans,
        &rules,
        &ts,
        &dom.mapping,
        interpreter.as_ref(),
        embedder.as_ref(),
    ))
}

#[derive(Debug, Serialize)]
pub struct TrainOutcome {
    #[serde(skip)]
    pub params: ProjectorParams,
    pub n_records: usize,
    pub skipped: Vec<String>,
    /// Fraction of training records whose reliability classification is
    /// reproduced after training.
    pub fit_accuracy: f64,
}

pub fn train_from_config(cfg: &RunConfig) -> Result<TrainOutcome, PipelineError> {
    let (records, skipped) = assemble_records(cfg)?;
    let params = train(&records, cfg.hyperparams())?;
    let correct = records
        .iter()
        .filter(|r| {
            project(&params, &r.embedding)
                .map(|z| classify(&params, &z) == r.y_safe)
                .unwrap_or(false)
        })
        .count();
    Ok(TrainOutcome {
        fit_accuracy: correct as f64 / records.len().max(1) as f64,
        n_records: records.len(),
        skipped,
        params,
    })
}

/// Per-record verdict stream: project, classify, attach the calibrated
/// guarantee, and decide compliance.
pub fn sample_stream(
    records: &[LatentRecord],
    params: &ProjectorParams,
    table: &CalibrationTable,
) -> Result<Vec<SampleRecord>, PipelineError> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let z = project(params, &r.embedding)?;
        let y_hat_safe = classify(params, &z);
        let g = guarantee(table, &z);
        out.push(SampleRecord {
            plan_id: r.plan_id.clone(),
            rule_id: r.rule_id.clone(),
            y: r.y,
            y_hat_safe,
            y_star: r.y_star,
            p_hat: g.p_hat,
            complies: crate::calibration::compliance(r.y, y_hat_safe),
        });
    }
    Ok(out)
}

pub fn calibrate_from_config(
    cfg: &RunConfig,
    params: &ProjectorParams,
) -> Result<(CalibrationTable, Vec<SampleRecord>), PipelineError> {
    let (records, _skipped) = assemble_records(cfg)?;
    let table = calibrate(&records, params)?;
    let stream = sample_stream(&records, params, &table)?;
    Ok((table, stream))
}

/// Verify one plan against one rule; when a formula is supplied the plan is
/// also model-checked and the ground-truth verdict returned alongside.
pub fn verify_plan(
    cfg: &RunConfig,
    params: &ProjectorParams,
    table: &CalibrationTable,
    plan: &str,
    rule_text: &str,
    phi: Option<&LtlFormula>,
) -> Result<(ComplianceVerdict, Option<u8>), PipelineError> {
    let interpreter = cfg.interpreter()?;
    let embedder = cfg.embedder()?;
    let verdict = verify(
        plan,
        rule_text,
        params,
        table,
        interpreter.as_ref(),
        embedder.as_ref(),
    )?;
    let y_star = match phi {
        None => None,
        Some(phi) => {
            let dom = cfg.domain()?;
            let ast = parse_plan(plan)?;
            let (ap, ts) = env_for(&dom.mapping, Some(phi))?;
            let fsa = l2a(&ast, &dom.mapping)?.extend_ap(&ap)?;
            Some(model_check(&fsa, &ts, phi)?.holds as u8)
        }
    };
    Ok((verdict, y_star))
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

/// Generate verified candidate pairs for preference learning. Plans come
/// from the synthetic generator under a corpus seed distinct from the
/// training seed; two generator blocks supply one candidate each per rule,
/// so every task has exactly two candidates for the same rule.
pub fn candidate_tasks(
    cfg: &RunConfig,
    params: &ProjectorParams,
    table: &CalibrationTable,
) -> Result<Vec<TaskCandidates>, PipelineError> {
    let rules = training_rules();
    let block = rules.len();
    let pairs = (cfg.train.corpus_size / (2 * block)).max(1);
    let plans = synth_corpus(cfg.seed.wrapping_add(1), pairs * 2 * block);
    let interpreter = cfg.interpreter()?;
    let embedder = cfg.embedder()?;
    let mut tasks = Vec::new();
    for b in 0..pairs {
        for (r, rule) in rules.iter().enumerate() {
            let task = format!("Write a control plan for driving task {:03}.", b * block + r);
            let mut candidates = Vec::with_capacity(2);
            for half in 0..2 {
                let plan = &plans[(2 * b + half) * block + r];
                let verdict = verify(
                    &plan.text,
                    &rule.text,
                    params,
                    table,
                    interpreter.as_ref(),
                    embedder.as_ref(),
                )?;
                candidates.push(VerifiedPlan {
                    task: task.clone(),
                    rule: rule.text.clone(),
                    plan: plan.text.clone(),
                    complies: verdict.complies,
                    p_hat: verdict.guarantee.p_hat,
                });
            }
            tasks.push(TaskCandidates { task, candidates });
        }
    }
    Ok(tasks)
}

// ---------------------------------------------------------------------------
// CLI commands
// ---------------------------------------------------------------------------

/// Parse and validate a plan; output is the canonical pretty-printed form.
pub fn cmd_parse(plan: &str, dom: &Domain) -> Result<String, PipelineError> {
    let ast = parse_plan(plan)?;
    let diags = validate_plan(&ast, &dom.api);
    if !diags.is_empty() {
        return Err(PipelineError::InvalidPlan(diags));
    }
    Ok(pretty_print(&ast))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsaFormat {
    Dot,
    Json,
}

/// Compile a plan to its automaton, rendered as Graphviz or JSON, prefixed
/// by the call-site-to-proposition explanation as comments.
pub fn cmd_l2a(plan: &str, dom: &Domain, format: FsaFormat) -> Result<String, PipelineError> {
    let ast = parse_plan(plan)?;
    let fsa = l2a(&ast, &dom.mapping)?;
    match format {
        FsaFormat::Dot => {
            let mut out = String::new();
            for (site, props) in explain_mapping(&ast, &dom.mapping) {
                let props: Vec<&str> = props.iter().map(String::as_str).collect();
                out.push_str(&format!("// {site} -> {{{}}}\n", props.join(", ")));
            }
            out.push_str(&fsa.to_dot());
            Ok(out)
        }
        FsaFormat::Json => Ok(format!("{}\n", serde_json::to_string_pretty(&fsa)?)),
    }
}

/// Model-check a plan against a formula; output is the verdict as JSON,
/// including a lasso counterexample when the property fails.
pub fn cmd_check(plan: &str, dom: &Domain, phi_source: &str) -> Result<String, PipelineError> {
    let ast = parse_plan(plan)?;
    let phi = parse_ltl(phi_source)?;
    let (ap, ts) = env_for(&dom.mapping, Some(&phi))?;
    let fsa = l2a(&ast, &dom.mapping)?.extend_ap(&ap)?;
    let verdict = model_check(&fsa, &ts, &phi)?;
    Ok(format!("{}\n", serde_json::to_string_pretty(&verdict)?))
}

pub fn cmd_train(cfg: &RunConfig, model_out: &Path) -> Result<String, PipelineError> {
    let outcome = train_from_config(cfg)?;
    save_checkpoint(&outcome.params, model_out)?;
    let summary = json!({
        "model": model_out.display().to_string(),
        "records": outcome.n_records,
        "skipped": outcome.skipped,
        "fit_accuracy": outcome.fit_accuracy,
        "parameters": outcome.params.param_count(),
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&summary)?))
}

pub fn cmd_calibrate(
    cfg: &RunConfig,
    model: &Path,
    table_out: &Path,
    verdicts_out: Option<&Path>,
) -> Result<String, PipelineError> {
    let params = load_checkpoint(model)?;
    let (table, stream) = calibrate_from_config(cfg, &params)?;
    fs::write(table_out, serde_json::to_string_pretty(&table)?)?;
    if let Some(path) = verdicts_out {
        fs::write(path, to_jsonl(&stream)?)?;
    }
    let summary = json!({
        "table": table_out.display().to_string(),
        "samples": table.n,
        "verdicts": verdicts_out.map(|p| p.display().to_string()),
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&summary)?))
}

pub fn cmd_verify(
    cfg: &RunConfig,
    model: &Path,
    table: &Path,
    plan: &str,
    rule_text: &str,
    phi_source: Option<&str>,
) -> Result<String, PipelineError> {
    let params = load_checkpoint(model)?;
    let table: CalibrationTable = serde_json::from_str(&fs::read_to_string(table)?)?;
    let phi = phi_source.map(parse_ltl).transpose()?;
    let (verdict, y_star) = verify_plan(cfg, &params, &table, plan, rule_text, phi.as_ref())?;
    let mut value = serde_json::to_value(&verdict)?;
    if let Some(y_star) = y_star {
        value["y_star"] = json!(y_star);
    }
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

pub fn cmd_refine(
    cfg: &RunConfig,
    model: &Path,
    table: &Path,
    sft_out: &Path,
    dpo_out: &Path,
) -> Result<String, PipelineError> {
    let params = load_checkpoint(model)?;
    let table: CalibrationTable = serde_json::from_str(&fs::read_to_string(table)?)?;
    let tasks = candidate_tasks(cfg, &params, &table)?;
    let all: Vec<VerifiedPlan> = tasks.iter().flat_map(|t| t.candidates.clone()).collect();
    let sft = build_sft(&all, cfg.tau);
    let (dpo, diagnostics) = build_dpo(&tasks)?;
    fs::write(sft_out, export_sft_jsonl(&sft))?;
    fs::write(dpo_out, export_dpo_jsonl(&dpo))?;
    let summary = json!({
        "tau": cfg.tau,
        "candidates": all.len(),
        "sft_records": sft.len(),
        "dpo_records": dpo.len(),
        "dropped": diagnostics,
        "sft": sft_out.display().to_string(),
        "dpo": dpo_out.display().to_string(),
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&summary)?))
}

pub fn cmd_report(verdicts: &str) -> Result<String, PipelineError> {
    let records = from_jsonl(verdicts)?;
    let rep = report(&records)?;
    Ok(format!("{}\n", serde_json::to_string_pretty(&rep)?))
}

pub fn to_jsonl(records: &[SampleRecord]) -> Result<String, PipelineError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(text: &str) -> Result<Vec<SampleRecord>, PipelineError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(PipelineError::Json))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> RunConfig {
        RunConfig {
            train: TrainConfig {
                corpus_size: 60,
                epochs: 25,
                learning_rate: 0.5,
                hidden1: 32,
                hidden2: 16,
                latent_dim: 8,
                ..TrainConfig::default()
            },
            embedding_dim: 64,
            seed: 11,
            ..RunConfig::default()
        }
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig = toml::from_str("version = 1").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<RunConfig>("version = 1\nspeling = 3").is_err());
        let wrong_version: RunConfig = toml::from_str("version = 99").unwrap();
        assert!(wrong_version.validate().is_err());
        let bad_tau: RunConfig = toml::from_str("version = 1\ntau = 0.5").unwrap();
        assert!(bad_tau.validate().is_err());
        let remote: RunConfig = toml::from_str("version = 1\nbackend = \"remote\"").unwrap();
        assert!(remote.validate().is_err());
    }

    #[test]
    fn parse_command_pretty_prints_and_validates() {
        let dom = domain("driving").unwrap();
        let out = cmd_parse("if pedestrian_observed():\n    stop()", &dom).unwrap();
        assert_eq!(out, "if pedestrian_observed():\n    stop()\n");
        let err = cmd_parse("unknown_call()", &dom).unwrap_err();
        assert!(matches!(err, PipelineError::InvalidPlan(_)));
    }

    #[test]
    fn l2a_command_emits_dot_and_json() {
        let dom = domain("driving").unwrap();
        let plan = "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
        let dot = cmd_l2a(plan, &dom, FsaFormat::Dot).unwrap();
        assert!(dot.contains("digraph fsa"));
        assert!(dot.contains("stop() -> {stop}"));
        let txt = cmd_l2a(plan, &dom, FsaFormat::Json).unwrap();
        let fsa: crate::automata::Fsa = serde_json::from_str(&txt).unwrap();
        assert_eq!(fsa.state_names.len(), 3);
    }

    #[test]
    fn check_command_reports_verdict_and_counterexample() {
        let dom = domain("driving").unwrap();
        let plan = "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
        let phi = "G (pedestrian -> X !\"publish velocity\")";
        let ok: serde_json::Value =
            serde_json::from_str(&cmd_check(plan, &dom, phi).unwrap()).unwrap();
        assert_eq!(ok["holds"], json!(true));
        let bad = "while True:\n    velocity_publisher(10, 0)";
        let no: serde_json::Value =
            serde_json::from_str(&cmd_check(bad, &dom, phi).unwrap()).unwrap();
        assert_eq!(no["holds"], json!(false));
        assert!(no["counterexample"]["cycle_states"].is_array());
    }

    #[test]
    fn train_calibrate_verify_refine_report_chain_runs() {
        let cfg = small_cfg();
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("model.bin");
        let table = dir.path().join("table.json");
        let verdicts = dir.path().join("verdicts.jsonl");

        let out = cmd_train(&cfg, &model).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["records"], json!(60));

        cmd_calibrate(&cfg, &model, &table, Some(&verdicts)).unwrap();
        assert!(table.exists() && verdicts.exists());

        let plan = "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
        let out = cmd_verify(
            &cfg,
            &model,
            &table,
            plan,
            "Let pedestrians pass first.",
            Some("G (pedestrian -> X !\"publish velocity\")"),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["y_star"], json!(1));
        assert!(v["guarantee"]["p_hat"].as_f64().unwrap() >= 0.0);

        let sft = dir.path().join("sft.jsonl");
        let dpo = dir.path().join("dpo.jsonl");
        let out = cmd_refine(&cfg, &model, &table, &sft, &dpo).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["sft_records"].as_u64().unwrap() <= v["candidates"].as_u64().unwrap());
        assert!(sft.exists() && dpo.exists());

        let rep = cmd_report(&fs::read_to_string(&verdicts).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep).unwrap();
        assert_eq!(v["overall"]["n"], json!(60));
    }

    #[test]
    fn pipeline_outputs_are_deterministic() {
        let cfg = small_cfg();
        let mut outs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let model = dir.path().join("model.bin");
            let table = dir.path().join("table.json");
            let verdicts = dir.path().join("verdicts.jsonl");
            cmd_train(&cfg, &model).unwrap();
            cmd_calibrate(&cfg, &model, &table, Some(&verdicts)).unwrap();
            outs.push((
                fs::read(&model).unwrap(),
                fs::read_to_string(&table).unwrap(),
                fs::read_to_string(&verdicts).unwrap(),
            ));
        }
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = vec![SampleRecord {
            plan_id: "p".into(),
            rule_id: "r".into(),
            y: 1,
            y_hat_safe: 1,
            y_star: 1,
            p_hat: 0.75,
            complies: true,
        }];
        let text = to_jsonl(&records).unwrap();
        assert_eq!(from_jsonl(&text).unwrap(), records);
    }
}
