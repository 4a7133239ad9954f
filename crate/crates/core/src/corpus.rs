//! Reading items, the topic taxonomy, the linguistic tag set and student
//! interest profiles.
//!
//! Everything here is validated on load and immutable afterwards, so a
//! loaded [`TopicTaxonomy`] or [`TagSet`] can be shared freely between
//! pipeline workers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io;

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");
const DEFAULT_TAGSET: &str = include_str!("../data/tagset.json");

/// Category and subcategory counts of the bundled taxonomy.
pub const DEFAULT_CATEGORY_COUNT: usize = 9;
pub const DEFAULT_SUBCATEGORY_COUNT: usize = 33;
/// Number of tags in the bundled tag set.
pub const DEFAULT_TAG_COUNT: usize = 41;
/// Every question carries exactly this many options.
pub const OPTION_COUNT: usize = 4;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    FileMissing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("malformed taxonomy: {0}")]
    MalformedTaxonomy(String),
    #[error("taxonomy has {found_categories} categories and {found_subcategories} subcategories (expected 9 and 33)")]
    CountMismatch {
        found_categories: usize,
        found_subcategories: usize,
    },
    #[error("malformed tag set: {0}")]
    MalformedTagSet(String),
    #[error("malformed interest profile: {0}")]
    MalformedProfile(String),
    #[error("unknown topic code {0:?}")]
    UnknownTopic(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

fn read_file(path: &Path) -> Result<String> {
    io::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CorpusError::FileMissing(path.to_path_buf())
        } else {
            CorpusError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Curriculum topic identifier such as `2.b`: a category digit, a dot and a
/// lowercase subcategory letter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TopicCode(String);

impl TopicCode {
    pub fn new(code: &str) -> Result<Self, InvalidTopicCode> {
        let b = code.as_bytes();
        if b.len() == 3 && (b'1'..=b'9').contains(&b[0]) && b[1] == b'.' && b[2].is_ascii_lowercase()
        {
            Ok(TopicCode(code.to_string()))
        } else {
            Err(InvalidTopicCode(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Category number, 1 through 9.
    pub fn category(&self) -> u8 {
        self.0.as_bytes()[0] - b'0'
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid topic code {0:?} (expected <digit>.<lowercase letter>)")]
pub struct InvalidTopicCode(pub String);

impl TryFrom<String> for TopicCode {
    type Error = InvalidTopicCode;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        TopicCode::new(&s)
    }
}

impl From<TopicCode> for String {
    fn from(c: TopicCode) -> String {
        c.0
    }
}

impl FromStr for TopicCode {
    type Err = InvalidTopicCode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopicCode::new(s)
    }
}

impl fmt::Display for TopicCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Cognitive level of a question in Bloom's taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BloomLevel {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl BloomLevel {
    pub const ALL: [BloomLevel; 6] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BloomLevel::Remember => "Remember",
            BloomLevel::Understand => "Understand",
            BloomLevel::Apply => "Apply",
            BloomLevel::Analyze => "Analyze",
            BloomLevel::Evaluate => "Evaluate",
            BloomLevel::Create => "Create",
        }
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("not a Bloom level: {0:?}")]
pub struct InvalidBloomLevel(pub String);

impl FromStr for BloomLevel {
    type Err = InvalidBloomLevel;

    /// Case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        BloomLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| InvalidBloomLevel(s.to_string()))
    }
}

/// One multiple-choice question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub stem: String,
    pub options: Vec<String>,
    pub answer_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloom: Option<BloomLevel>,
}

impl Question {
    /// Checks the option count, option distinctness and answer range.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.stem.trim().is_empty() {
            return Err("empty question stem".into());
        }
        if self.options.len() != OPTION_COUNT {
            return Err(format!("expected {OPTION_COUNT} options"));
        }
        let mut seen = HashSet::new();
        for opt in &self.options {
            let t = opt.trim();
            if t.is_empty() {
                return Err("empty option".into());
            }
            if !seen.insert(t) {
                return Err(format!("duplicate option {t:?}"));
            }
        }
        if self.answer_index >= OPTION_COUNT {
            return Err("answer out of range".into());
        }
        Ok(())
    }
}

/// A passage with its questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingItem {
    pub id: String,
    pub passage: String,
    pub questions: Vec<Question>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_topic: Option<TopicCode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl ReadingItem {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.passage.trim().is_empty() {
            return Err("empty passage".into());
        }
        if self.questions.is_empty() {
            return Err("no questions".into());
        }
        for (i, q) in self.questions.iter().enumerate() {
            q.validate().map_err(|e| format!("question {}: {e}", i + 1))?;
        }
        Ok(())
    }
}

/// Parse a JSONL document of reading items. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_items(text: &str) -> Result<Vec<ReadingItem>> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item: ReadingItem =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedLine {
                line_no,
                reason: e.to_string(),
            })?;
        item.validate()
            .map_err(|reason| CorpusError::MalformedLine { line_no, reason })?;
        if !ids.insert(item.id.clone()) {
            return Err(CorpusError::DuplicateId(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

/// Load a JSONL items file, preserving file order.
pub fn load_items(path: &Path) -> Result<Vec<ReadingItem>> {
    parse_items(&read_file(path)?)
}

/// Write items as JSONL, atomically.
pub fn save_items(path: &Path, items: &[ReadingItem]) -> Result<()> {
    let body = io::to_jsonl(items).expect("reading items always serialize");
    io::write_atomic(path, body.as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Fails with `UnknownTopic` if an item names a source topic missing from
/// the taxonomy.
pub fn check_item_topics(items: &[ReadingItem], taxonomy: &TopicTaxonomy) -> Result<()> {
    for item in items {
        if let Some(code) = &item.source_topic {
            taxonomy.require(code)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subcategory {
    pub code: TopicCode,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub number: u8,
    pub label: String,
    pub subcategories: Vec<Subcategory>,
}

#[derive(Deserialize)]
struct TaxonomyFile {
    categories: Vec<Category>,
}

/// Two-level topic taxonomy with constant-time code lookup.
#[derive(Debug, Clone)]
pub struct TopicTaxonomy {
    categories: Vec<Category>,
    // code -> (category index, subcategory index)
    index: HashMap<TopicCode, (usize, usize)>,
    codes: Vec<TopicCode>,
}

impl TopicTaxonomy {
    fn from_categories(categories: Vec<Category>) -> Result<Self> {
        let mut index = HashMap::new();
        let mut codes = Vec::new();
        let mut numbers = HashSet::new();
        for (ci, cat) in categories.iter().enumerate() {
            if !(1..=9).contains(&cat.number) {
                return Err(CorpusError::MalformedTaxonomy(format!(
                    "category number {} outside 1-9",
                    cat.number
                )));
            }
            if !numbers.insert(cat.number) {
                return Err(CorpusError::MalformedTaxonomy(format!(
                    "duplicate category {}",
                    cat.number
                )));
            }
            for (si, sub) in cat.subcategories.iter().enumerate() {
                if sub.code.category() != cat.number {
                    return Err(CorpusError::MalformedTaxonomy(format!(
                        "code {} filed under category {}",
                        sub.code, cat.number
                    )));
                }
                if index.insert(sub.code.clone(), (ci, si)).is_some() {
                    return Err(CorpusError::MalformedTaxonomy(format!(
                        "duplicate code {}",
                        sub.code
                    )));
                }
                codes.push(sub.code.clone());
            }
        }
        if codes.is_empty() {
            return Err(CorpusError::MalformedTaxonomy("no subcategories".into()));
        }
        Ok(TopicTaxonomy {
            categories,
            index,
            codes,
        })
    }

    pub fn parse(json: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(json)
            .map_err(|e| CorpusError::MalformedTaxonomy(e.to_string()))?;
        Self::from_categories(file.categories)
    }

    /// The bundled default: 9 categories, 33 subcategories.
    pub fn bundled() -> Self {
        let t = Self::parse(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid");
        assert!(
            t.category_count() == DEFAULT_CATEGORY_COUNT && t.len() == DEFAULT_SUBCATEGORY_COUNT,
            "bundled taxonomy has wrong shape"
        );
        t
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// Number of subcategories.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// All subcategory codes in file order.
    pub fn codes(&self) -> &[TopicCode] {
        &self.codes
    }

    pub fn contains(&self, code: &TopicCode) -> bool {
        self.index.contains_key(code)
    }

    pub fn get(&self, code: &TopicCode) -> Option<&Subcategory> {
        self.index
            .get(code)
            .map(|&(c, s)| &self.categories[c].subcategories[s])
    }

    pub fn lookup(&self, code: &str) -> Option<&Subcategory> {
        TopicCode::new(code).ok().and_then(|c| self.get(&c))
    }

    pub fn require(&self, code: &TopicCode) -> Result<&Subcategory> {
        self.get(code)
            .ok_or_else(|| CorpusError::UnknownTopic(code.to_string()))
    }

    /// Multi-line `code: description` listing used in prompts.
    pub fn render_listing(&self) -> String {
        let mut out = String::new();
        for cat in &self.categories {
            out.push_str(&format!("{}. {}\n", cat.number, cat.label));
            for sub in &cat.subcategories {
                out.push_str(&format!("  {}: {}\n", sub.code, sub.description));
            }
        }
        out
    }
}

/// Load a taxonomy file, or the bundled default when `path` is `None`.
///
/// A user-supplied file whose shape differs from 9/33 loads with a warning.
pub fn load_taxonomy(path: Option<&Path>) -> Result<TopicTaxonomy> {
    let Some(path) = path else {
        let t = TopicTaxonomy::parse(DEFAULT_TAXONOMY)?;
        if t.category_count() != DEFAULT_CATEGORY_COUNT || t.len() != DEFAULT_SUBCATEGORY_COUNT {
            return Err(CorpusError::CountMismatch {
                found_categories: t.category_count(),
                found_subcategories: t.len(),
            });
        }
        return Ok(t);
    };
    let t = TopicTaxonomy::parse(&read_file(path)?)?;
    if t.category_count() != DEFAULT_CATEGORY_COUNT || t.len() != DEFAULT_SUBCATEGORY_COUNT {
        log::warn!(
            "{}",
            CorpusError::CountMismatch {
                found_categories: t.category_count(),
                found_subcategories: t.len(),
            }
        );
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub id: String,
    pub description: String,
}

#[derive(Deserialize)]
struct TagSetFile {
    tags: Vec<Tag>,
}

/// Linguistic feature tags usable in `[[T:<id>]]` markers.
#[derive(Debug, Clone)]
pub struct TagSet {
    tags: Vec<Tag>,
    ids: HashSet<String>,
}

impl TagSet {
    pub fn new(tags: Vec<Tag>) -> Result<Self> {
        let mut ids = HashSet::new();
        for t in &tags {
            if t.id.is_empty() {
                return Err(CorpusError::MalformedTagSet("empty tag id".into()));
            }
            if t.id.chars().any(char::is_whitespace) {
                return Err(CorpusError::MalformedTagSet(format!(
                    "tag id {:?} contains whitespace",
                    t.id
                )));
            }
            if t.id.contains("]]") || t.id.contains("[[") {
                return Err(CorpusError::MalformedTagSet(format!(
                    "tag id {:?} contains a marker delimiter",
                    t.id
                )));
            }
            if !ids.insert(t.id.clone()) {
                return Err(CorpusError::MalformedTagSet(format!(
                    "duplicate tag id {:?}",
                    t.id
                )));
            }
        }
        Ok(TagSet { tags, ids })
    }

    pub fn parse(json: &str) -> Result<Self> {
        let file: TagSetFile =
            serde_json::from_str(json).map_err(|e| CorpusError::MalformedTagSet(e.to_string()))?;
        Self::new(file.tags)
    }

    pub fn bundled() -> Self {
        let t = Self::parse(DEFAULT_TAGSET).expect("bundled tag set is valid");
        assert_eq!(t.len(), DEFAULT_TAG_COUNT);
        t
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn render_listing(&self) -> String {
        self.tags
            .iter()
            .map(|t| format!("{}: {}\n", t.id, t.description))
            .collect()
    }
}

/// Load a tag set file, or the bundled default when `path` is `None`.
pub fn load_tagset(path: Option<&Path>) -> Result<TagSet> {
    let Some(path) = path else {
        return Ok(TagSet::bundled());
    };
    let t = TagSet::parse(&read_file(path)?)?;
    if t.len() != DEFAULT_TAG_COUNT {
        log::warn!(
            "tag set {} has {} tags (default has {DEFAULT_TAG_COUNT})",
            path.display(),
            t.len()
        );
    }
    Ok(t)
}

/// A student's topic preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestProfile {
    pub student_id: String,
    pub likert: BTreeMap<TopicCode, u8>,
    pub top_interests: Vec<TopicCode>,
    #[serde(default)]
    pub least_interests: BTreeSet<TopicCode>,
}

impl InterestProfile {
    pub fn validate(&self, taxonomy: &TopicTaxonomy) -> Result<()> {
        let bad = |msg: String| CorpusError::MalformedProfile(format!("{}: {msg}", self.student_id));
        for code in self
            .likert
            .keys()
            .chain(&self.top_interests)
            .chain(&self.least_interests)
        {
            taxonomy.require(code)?;
        }
        for code in taxonomy.codes() {
            match self.likert.get(code) {
                None => return Err(bad(format!("no rating for {code}"))),
                Some(v) if !(1..=7).contains(v) => {
                    return Err(bad(format!("rating {v} for {code} outside 1-7")))
                }
                Some(_) => {}
            }
        }
        let distinct: HashSet<_> = self.top_interests.iter().collect();
        if self.top_interests.len() != 4 || distinct.len() != 4 {
            return Err(bad("top_interests must hold 4 distinct codes".into()));
        }
        Ok(())
    }
}

/// Parse a JSON array of interest profiles and validate each against the
/// taxonomy.
pub fn parse_profiles(json: &str, taxonomy: &TopicTaxonomy) -> Result<Vec<InterestProfile>> {
    let profiles: Vec<InterestProfile> =
        serde_json::from_str(json).map_err(|e| CorpusError::MalformedProfile(e.to_string()))?;
    let mut ids = HashSet::new();
    for p in &profiles {
        p.validate(taxonomy)?;
        if !ids.insert(p.student_id.as_str()) {
            return Err(CorpusError::MalformedProfile(format!(
                "duplicate student {:?}",
                p.student_id
            )));
        }
    }
    Ok(profiles)
}

pub fn load_profiles(path: &Path, taxonomy: &TopicTaxonomy) -> Result<Vec<InterestProfile>> {
    parse_profiles(&read_file(path)?, taxonomy)
}
