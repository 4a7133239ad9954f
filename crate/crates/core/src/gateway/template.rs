//! `{placeholder}` prompt templates.
//!
//! `{name}` (ASCII identifier) is a placeholder, `{{` and `}}` are literal
//! braces, and any other brace is copied through unchanged. Rendering is a
//! single pass: bound values are never rescanned.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("binding {0:?} matches no placeholder in the template")]
    UnknownPlaceholder(String),
    #[error("malformed template {name}: {reason}")]
    Malformed { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(src: &str) -> Vec<Piece<'_>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' | b'}' if bytes.get(i + 1) == Some(&bytes[i]) => {
                out.push(Piece::Text(&src[lit_start..=i]));
                i += 2;
                lit_start = i;
            }
            b'{' => {
                let rest = &src[i + 1..];
                let len = rest
                    .bytes()
                    .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                    .count();
                let ident_ok = len > 0 && !rest.as_bytes()[0].is_ascii_digit();
                if ident_ok && rest.as_bytes().get(len) == Some(&b'}') {
                    out.push(Piece::Text(&src[lit_start..i]));
                    out.push(Piece::Slot(&rest[..len]));
                    i += len + 2;
                    lit_start = i;
                } else {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&src[lit_start..]));
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, system: impl Into<String>, user: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            system: system.into(),
            user: user.into(),
        }
    }

    /// Parse a TOML template with `system` and `user` string keys.
    pub fn from_toml(name: &str, text: &str) -> Result<Self, TemplateError> {
        #[derive(Deserialize)]
        struct File {
            system: String,
            user: String,
        }
        let f: File = toml::from_str(text).map_err(|e| TemplateError::Malformed {
            name: name.to_string(),
            reason: e.to_string(),
        })?;
        Ok(PromptTemplate::new(name, f.system, f.user))
    }

    /// Placeholder names used by either part, sorted.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        pieces(&self.system)
            .into_iter()
            .chain(pieces(&self.user))
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s),
                Piece::Text(_) => None,
            })
            .collect()
    }

    pub fn render<K, V>(&self, bindings: &BTreeMap<K, V>) -> Result<RenderedPrompt, TemplateError>
    where
        K: AsRef<str> + Ord,
        V: AsRef<str>,
    {
        let lookup: BTreeMap<&str, &str> = bindings
            .iter()
            .map(|(k, v)| (k.as_ref(), v.as_ref()))
            .collect();
        let used = self.placeholders();
        if let Some(missing) = used.iter().find(|p| !lookup.contains_key(*p)) {
            return Err(TemplateError::MissingBinding(missing.to_string()));
        }
        if let Some(extra) = lookup.keys().find(|k| !used.contains(*k)) {
            return Err(TemplateError::UnknownPlaceholder(extra.to_string()));
        }
        let fill = |src: &str| -> String {
            pieces(src)
                .into_iter()
                .map(|p| match p {
                    Piece::Text(t) => t,
                    Piece::Slot(s) => lookup[s],
                })
                .collect()
        };
        Ok(RenderedPrompt {
            system: fill(&self.system),
            user: fill(&self.user),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn substitutes() {
        let t = PromptTemplate::new("t", "", "Topic: {topic}");
        assert_eq!(t.render(&b(&[("topic", "2.b")])).unwrap().user, "Topic: 2.b");
    }

    #[test]
    fn missing_binding() {
        let t = PromptTemplate::new("t", "", "Topic: {topic}");
        assert_eq!(
            t.render(&b(&[])),
            Err(TemplateError::MissingBinding("topic".into()))
        );
    }

    #[test]
    fn unknown_placeholder() {
        let t = PromptTemplate::new("t", "", "Topic: {topic}");
        assert_eq!(
            t.render(&b(&[("topic", "2.b"), ("x", "1")])),
            Err(TemplateError::UnknownPlaceholder("x".into()))
        );
    }

    #[test]
    fn escapes_and_stray_braces() {
        let t = PromptTemplate::new("t", "{{\"a\": {n}}}", "{ not a slot } {1x}");
        let r = t.render(&b(&[("n", "5")])).unwrap();
        assert_eq!(r.system, "{\"a\": 5}");
        assert_eq!(r.user, "{ not a slot } {1x}");
    }

    #[test]
    fn values_are_not_rescanned() {
        let t = PromptTemplate::new("t", "", "{a}");
        assert_eq!(t.render(&b(&[("a", "{a}")])).unwrap().user, "{a}");
    }

    #[test]
    fn toml_template() {
        let t = PromptTemplate::from_toml("x", "system = \"S\"\nuser = \"U {v}\"\n").unwrap();
        assert_eq!(t.placeholders().into_iter().collect::<Vec<_>>(), ["v"]);
    }
}
