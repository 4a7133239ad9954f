//! The six prompt templates used by the pipeline and the judge.

use std::path::Path;

use thiserror::Error;

use crate::gateway::template::{PromptTemplate, TemplateError};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("cannot read prompt file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("template {name} must use placeholders {expected:?}, found {found:?}")]
    Placeholders {
        name: String,
        expected: Vec<&'static str>,
        found: Vec<String>,
    },
}

struct Spec {
    file: &'static str,
    bundled: &'static str,
    placeholders: &'static [&'static str],
}

const SPECS: [Spec; 6] = [
    Spec {
        file: "step1_topic.toml",
        bundled: include_str!("../prompts/step1_topic.toml"),
        placeholders: &["passage", "taxonomy"],
    },
    Spec {
        file: "step2_bloom.toml",
        bundled: include_str!("../prompts/step2_bloom.toml"),
        placeholders: &["options", "passage", "question"],
    },
    Spec {
        file: "step3_tagging.toml",
        bundled: include_str!("../prompts/step3_tagging.toml"),
        placeholders: &["passage", "questions", "tagset"],
    },
    Spec {
        file: "step4_passage.toml",
        bundled: include_str!("../prompts/step4_passage.toml"),
        placeholders: &[
            "max_words",
            "min_words",
            "source_topic",
            "tagged_passage",
            "target_topic",
            "word_count",
        ],
    },
    Spec {
        file: "step5_questions.toml",
        bundled: include_str!("../prompts/step5_questions.toml"),
        placeholders: &["passage", "question_count", "questions_json", "target_topic"],
    },
    Spec {
        file: "judge_bloom.toml",
        bundled: include_str!("../prompts/judge_bloom.toml"),
        placeholders: &["options", "passage", "question"],
    },
];

#[derive(Debug, Clone)]
pub struct PromptSet {
    pub topic: PromptTemplate,
    pub bloom: PromptTemplate,
    pub tagging: PromptTemplate,
    pub passage: PromptTemplate,
    pub questions: PromptTemplate,
    pub judge: PromptTemplate,
}

fn load_one(spec: &Spec, dir: Option<&Path>) -> Result<PromptTemplate, PromptError> {
    let name = spec.file.trim_end_matches(".toml");
    let text = match dir.map(|d| d.join(spec.file)) {
        Some(path) if path.exists() => {
            std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?
        }
        _ => spec.bundled.to_string(),
    };
    let t = PromptTemplate::from_toml(name, &text)?;
    let found: Vec<String> = t.placeholders().into_iter().map(String::from).collect();
    if found != spec.placeholders {
        return Err(PromptError::Placeholders {
            name: name.into(),
            expected: spec.placeholders.to_vec(),
            found,
        });
    }
    Ok(t)
}

impl PromptSet {
    pub fn bundled() -> Self {
        Self::load(None).expect("bundled prompts are valid")
    }

    /// Templates from `dir`, falling back to the bundled file for each one
    /// that is absent.
    pub fn load(dir: Option<&Path>) -> Result<Self, PromptError> {
        let [a, b, c, d, e, f] = &SPECS;
        Ok(PromptSet {
            topic: load_one(a, dir)?,
            bloom: load_one(b, dir)?,
            tagging: load_one(c, dir)?,
            passage: load_one(d, dir)?,
            questions: load_one(e, dir)?,
            judge: load_one(f, dir)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_load() {
        let p = PromptSet::bundled();
        assert!(p.topic.system.contains("English teacher"));
    }

    #[test]
    fn override_with_wrong_placeholders_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("step1_topic.toml"),
            "system = \"s\"\nuser = \"{passage}\"\n",
        )
        .unwrap();
        assert!(matches!(
            PromptSet::load(Some(dir.path())),
            Err(PromptError::Placeholders { .. })
        ));
    }

    #[test]
    fn partial_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("judge_bloom.toml"),
            "system = \"custom\"\nuser = \"{passage} {question} {options}\"\n",
        )
        .unwrap();
        let p = PromptSet::load(Some(dir.path())).unwrap();
        assert_eq!(p.judge.system, "custom");
        assert_eq!(p.topic, PromptSet::bundled().topic);
    }
}
