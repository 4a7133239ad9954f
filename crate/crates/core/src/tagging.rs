//! Inline linguistic-feature markers.
//!
//! A marker is written `[[T:<tag_id>]]` and sits directly after the
//! sentence-final punctuation of a sentence that supports answering a
//! question. [`TaggedPassage`] stores the untouched passage plus marker
//! positions, so rendering and then stripping always gives back the
//! original bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TagSet;

pub const MARKER_OPEN: &str = "[[T:";
pub const MARKER_CLOSE: &str = "]]";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TagError {
    #[error("stripping the markers does not reproduce the original passage")]
    RoundTripViolation,
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("tag {tag_id:?} at offset {position} does not follow sentence-final punctuation")]
    MisplacedTag { tag_id: String, position: usize },
    #[error("marker positions must be non-decreasing and within the passage")]
    BadPosition,
    #[error("passage already contains marker syntax")]
    MarkerInOriginal,
}

/// One marker: `tag_id` inserted before character `position` of the
/// original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagInsertion {
    pub tag_id: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedPassage {
    pub original: String,
    pub insertions: Vec<TagInsertion>,
}

/// Length in bytes of the marker starting at `s[0..]`, if there is one.
fn marker_len(s: &str) -> Option<usize> {
    let body = s.strip_prefix(MARKER_OPEN)?;
    let end = body.find(MARKER_CLOSE)?;
    let id = &body[..end];
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return None;
    }
    Some(MARKER_OPEN.len() + end + MARKER_CLOSE.len())
}

/// Split `text` into the marker-free text and the markers found, with
/// positions counted in characters of the marker-free text.
pub fn extract_markers(text: &str) -> (String, Vec<TagInsertion>) {
    let mut plain = String::with_capacity(text.len());
    let mut chars = 0;
    let mut found = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(len) = marker_len(rest) {
            found.push(TagInsertion {
                tag_id: rest[MARKER_OPEN.len()..len - MARKER_CLOSE.len()].to_string(),
                position: chars,
            });
            i += len;
            continue;
        }
        let c = rest.chars().next().unwrap();
        plain.push(c);
        chars += 1;
        i += c.len_utf8();
    }
    (plain, found)
}

/// Remove every marker. Repeats until nothing changes, so the result never
/// contains a marker and applying it twice is the same as once.
pub fn strip_tags(rendered: &str) -> String {
    let mut current = rendered.to_string();
    loop {
        let (plain, found) = extract_markers(&current);
        if found.is_empty() {
            return plain;
        }
        current = plain;
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

/// True when the characters before `position` end in sentence-final
/// punctuation, optionally followed by closing quotes or brackets.
fn after_sentence_end(chars: &[char], position: usize) -> bool {
    let mut k = position;
    while k > 0 && is_closer(chars[k - 1]) {
        k -= 1;
    }
    k > 0 && is_terminal(chars[k - 1])
}

pub fn tag_multiset(insertions: &[TagInsertion]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for ins in insertions {
        *m.entry(ins.tag_id.clone()).or_insert(0) += 1;
    }
    m
}

impl TaggedPassage {
    /// Validate marker positions and ids against `original`.
    pub fn new(
        original: String,
        insertions: Vec<TagInsertion>,
        tagset: &TagSet,
    ) -> Result<Self, TagError> {
        if strip_tags(&original) != original {
            return Err(TagError::MarkerInOriginal);
        }
        let chars: Vec<char> = original.chars().collect();
        let mut last = 0;
        for ins in &insertions {
            if !tagset.contains(&ins.tag_id) {
                return Err(TagError::UnknownTag(ins.tag_id.clone()));
            }
            if ins.position < last || ins.position > chars.len() {
                return Err(TagError::BadPosition);
            }
            if !after_sentence_end(&chars, ins.position) {
                return Err(TagError::MisplacedTag {
                    tag_id: ins.tag_id.clone(),
                    position: ins.position,
                });
            }
            last = ins.position;
        }
        Ok(TaggedPassage {
            original,
            insertions,
        })
    }

    /// Parse a model reply that should be `original` with markers added.
    pub fn from_reply(original: &str, reply: &str, tagset: &TagSet) -> Result<Self, TagError> {
        let (plain, insertions) = extract_markers(reply);
        if plain != original {
            return Err(TagError::RoundTripViolation);
        }
        if let Some(bad) = insertions.iter().find(|i| !tagset.contains(&i.tag_id)) {
            return Err(TagError::UnknownTag(bad.tag_id.clone()));
        }
        Self::new(original.to_string(), insertions, tagset)
    }

    /// The passage with markers inserted.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.original.len() + 16 * self.insertions.len());
        let mut next = self.insertions.iter().peekable();
        for (idx, c) in self.original.chars().enumerate() {
            while let Some(ins) = next.next_if(|i| i.position == idx) {
                push_marker(&mut out, &ins.tag_id);
            }
            out.push(c);
        }
        for ins in next {
            push_marker(&mut out, &ins.tag_id);
        }
        out
    }

    pub fn multiset(&self) -> BTreeMap<String, usize> {
        tag_multiset(&self.insertions)
    }
}

fn push_marker(out: &mut String, id: &str) {
    out.push_str(MARKER_OPEN);
    out.push_str(id);
    out.push_str(MARKER_CLOSE);
}

/// Marker ids in a rendered text, as a multiset.
pub fn markers_in(text: &str) -> BTreeMap<String, usize> {
    tag_multiset(&extract_markers(text).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tag;
    use proptest::prelude::*;

    fn tags(ids: &[&str]) -> TagSet {
        TagSet::new(
            ids.iter()
                .map(|i| Tag {
                    id: i.to_string(),
                    description: String::new(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn strip_examples() {
        assert_eq!(strip_tags("A.[[T:x]] B."), "A. B.");
        assert_eq!(strip_tags("No tags here."), "No tags here.");
        assert_eq!(strip_tags("[[T:a]][[T:b]]Hi."), "Hi.");
        assert_eq!(strip_tags("[[T:x y]] stays"), "[[T:x y]] stays");
        assert_eq!(strip_tags("[[T[[T:x]]:y]]z"), "z");
    }

    #[test]
    fn parse_reply_after_second_sentence() {
        let ts = tags(&["passive-voice"]);
        let original = "It rained. The game was cancelled. We went home.";
        let reply = "It rained. The game was cancelled.[[T:passive-voice]] We went home.";
        let tp = TaggedPassage::from_reply(original, reply, &ts).unwrap();
        assert_eq!(tp.insertions.len(), 1);
        assert_eq!(tp.insertions[0].position, 34);
        assert_eq!(tp.render(), reply);
    }

    #[test]
    fn paraphrase_rejected() {
        let ts = tags(&["passive-voice"]);
        let original = "It rained. The game was cancelled.";
        let reply = "It rained. They cancelled the game.[[T:passive-voice]]";
        assert_eq!(
            TaggedPassage::from_reply(original, reply, &ts),
            Err(TagError::RoundTripViolation)
        );
    }

    #[test]
    fn unknown_tag_rejected() {
        let ts = tags(&["passive-voice"]);
        assert_eq!(
            TaggedPassage::from_reply("Hi.", "Hi.[[T:bogus]]", &ts),
            Err(TagError::UnknownTag("bogus".into()))
        );
    }

    #[test]
    fn mid_sentence_marker_rejected() {
        let ts = tags(&["x"]);
        assert!(matches!(
            TaggedPassage::from_reply("Hi there.", "Hi[[T:x]] there.", &ts),
            Err(TagError::MisplacedTag { .. })
        ));
        // closing quote after the period is fine
        TaggedPassage::from_reply("He said \"no.\" Ok.", "He said \"no.\"[[T:x]] Ok.", &ts).unwrap();
    }

    #[test]
    fn unicode_positions_are_characters() {
        let ts = tags(&["x"]);
        let original = "Café é bon. Oui.";
        let reply = "Café é bon.[[T:x]] Oui.";
        let tp = TaggedPassage::from_reply(original, reply, &ts).unwrap();
        assert_eq!(tp.insertions[0].position, 11);
        assert_eq!(tp.render(), reply);
    }

    #[test]
    fn original_with_marker_rejected() {
        let ts = tags(&["x"]);
        assert_eq!(
            TaggedPassage::new("A.[[T:x]]".into(), vec![], &ts),
            Err(TagError::MarkerInOriginal)
        );
    }

    proptest! {
        #[test]
        fn strip_is_idempotent(s in "[a-z\\[\\]T:. ]{0,40}") {
            let once = strip_tags(&s);
            prop_assert_eq!(strip_tags(&once), once);
        }
    }
}
