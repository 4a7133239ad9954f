mod corpus;
mod experiment;
mod judge;
mod review;
mod transcreate;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use transcreate_core::corpus::{load_tagset, load_taxonomy, TagSet, TopicTaxonomy};
use transcreate_core::gateway::{Gateway, MockBackend};
use transcreate_core::io::{to_jsonl, to_pretty_json, write_atomic};
use transcreate_core::pipeline::PipelineConfig;
use transcreate_core::prompts::PromptSet;

use crate::args::{Cli, Command, GatewayArgs, GlobalArgs};
use crate::config::RunConfig;
use crate::exit::{CmdResult, Failure, OrExit, GATEWAY, USAGE, VALIDATION};

/// Settings and shared data for one invocation.
pub struct Env {
    pub config: RunConfig,
    pub taxonomy: TopicTaxonomy,
    pub tagset: TagSet,
    pub prompts: PromptSet,
}

impl Env {
    fn load(global: &GlobalArgs) -> CmdResult<Env> {
        let mut config = RunConfig::load(global.config.as_deref()).or_exit(USAGE)?;
        if let Some(p) = &global.taxonomy {
            config.taxonomy_path = Some(p.clone());
        }
        if let Some(p) = &global.tagset {
            config.tagset_path = Some(p.clone());
        }
        if let Some(p) = &global.prompts_dir {
            config.prompts_dir = Some(p.clone());
        }
        let taxonomy = load_taxonomy(config.taxonomy_path.as_deref())?;
        let tagset = load_tagset(config.tagset_path.as_deref())?;
        let prompts = PromptSet::load(config.prompts_dir.as_deref()).or_exit(USAGE)?;
        Ok(Env {
            config,
            taxonomy,
            tagset,
            prompts,
        })
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            retry_budget: self.config.retry_budget,
            length_envelope: self.config.length_envelope,
            ..PipelineConfig::default()
        }
    }

    /// Scripted gateway when a mock script is given, live otherwise.
    pub fn gateway(&self, args: &GatewayArgs) -> CmdResult<Gateway> {
        let script = args.mock.as_deref().or(self.config.mock_script_path.as_deref());
        let gateway = match script {
            Some(path) => {
                if !path.exists() {
                    return Err(Failure::usage(format!("mock script not found: {}", path.display())));
                }
                let backend = MockBackend::from_file(path).or_exit(USAGE)?;
                Gateway::mock(backend, self.config.provider.max_retries)
            }
            None => Gateway::live(&self.config.provider).or_exit(GATEWAY)?,
        };
        match &args.request_log {
            Some(p) => gateway.with_request_log(p).or_exit(USAGE),
            None => Ok(gateway),
        }
    }
}

pub fn run(cli: Cli) -> CmdResult {
    let mut env = Env::load(&cli.global)?;
    match &cli.command {
        Command::Transcreate(a) => {
            if let Some(b) = a.gateway.retry_budget {
                env.config.retry_budget = b;
            }
            if let Some(e) = a.length_envelope {
                env.config.length_envelope = e;
            }
            if let Some(s) = a.seed {
                env.config.rng_seed = s;
            }
        }
        Command::Judge(a) => {
            if let Some(b) = a.gateway.retry_budget {
                env.config.retry_budget = b;
            }
        }
        Command::Stats(a) => {
            if let Some(alpha) = a.alpha {
                env.config.alpha = alpha;
            }
        }
        Command::Split(a) => {
            if let Some(s) = a.seed {
                env.config.rng_seed = s;
            }
        }
        _ => {}
    }
    env.config.validate().or_exit(USAGE)?;

    match cli.command {
        Command::Ingest(a) => corpus::ingest(&env, a),
        Command::Analyze(a) => corpus::analyze(a),
        Command::Transcreate(a) => transcreate::run(&env, a),
        Command::Judge(a) => judge::run(&env, a),
        Command::Review(a) => review::run(a),
        Command::QaReport(a) => review::qa(a),
        Command::Split(a) => experiment::split(&env, a),
        Command::Score(a) => experiment::score(a),
        Command::Stats(a) => experiment::stats(&env, a),
    }
}

/// Write `text` atomically to `out`, or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CmdResult {
    emit(out, &to_pretty_json(value).or_exit(USAGE)?)
}

pub fn emit_jsonl<T: Serialize>(out: Option<&Path>, values: &[T]) -> CmdResult {
    emit(out, &to_jsonl(values).or_exit(USAGE)?)
}

fn read_text(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CmdResult<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure::invalid(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn validation_error(msg: impl std::fmt::Display) -> Failure {
    Failure::new(VALIDATION, anyhow::anyhow!("{msg}"))
}
