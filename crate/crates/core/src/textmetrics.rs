//! Word, sentence and syllable counting plus the two passage-level measures
//! reported for every test form: type-token ratio and Flesch Reading Ease.
//!
//! FRES = 206.835 − 1.015 · (words / sentences) − 84.6 · (syllables / words)
//!
//! The score is not clamped, so very dense text can go negative.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FRES_BASE: f64 = 206.835;
pub const FRES_SENTENCE_WEIGHT: f64 = 1.015;
pub const FRES_SYLLABLE_WEIGHT: f64 = 84.6;

/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "vs.", "etc.", "e.g.", "i.e.",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("passage has no words or no sentences")]
    EmptyPassage,
    #[error("no passages to summarize")]
    EmptyCorpus,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lower-cased runs of letters, digits and apostrophes.
///
/// Apostrophes at either end of a run are quote marks rather than part of the
/// word and are trimmed; a run made only of apostrophes is dropped.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .map(|run| run.trim_matches(is_apostrophe))
        .filter(|run| !run.is_empty())
        .map(|run| run.to_lowercase())
        .collect()
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn ends_with_abbreviation(text: &str, dot_end: usize) -> bool {
    // the whitespace-delimited token ending at the period
    let start = text[..dot_end]
        .rfind(char::is_whitespace)
        .map(|i| i + text[i..].chars().next().unwrap().len_utf8())
        .unwrap_or(0);
    let token = text[start..dot_end]
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&token.as_str())
}

/// Split text into sentence slices that, concatenated, reproduce the input.
///
/// A sentence ends after a run of `.`, `!` or `?` (plus any closing quotes or
/// brackets) that is followed by whitespace or the end of the text. The
/// whitespace after a boundary belongs to the sentence it closes. Text with
/// no non-whitespace characters yields no sentences.
pub fn split_sentences(text: &str) -> Vec<&str> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        let lone_period = j == i + 1 && c == '.';
        let dot_end = pos + 1;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let at_gap = j == chars.len() || chars[j].1.is_whitespace();
        if at_gap && !(lone_period && ends_with_abbreviation(text, dot_end)) {
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            spans.push(&text[start..end]);
            start = end;
        }
        i = j.max(i + 1);
    }
    if start < text.len() {
        let rest = &text[start..];
        match spans.last_mut() {
            Some(last) if rest.trim().is_empty() => {
                let s = text.len() - last.len() - rest.len();
                *last = &text[s..];
            }
            _ => spans.push(rest),
        }
    }
    spans
}

/// Heuristic syllable count for one token.
///
/// Counts groups of consecutive vowels (`a e i o u y`), then drops a silent
/// final `e`: one that follows a consonant, except in a consonant + `le`
/// ending. Any token containing a letter has at least one syllable; tokens
/// without letters have none.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 0;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

const SYLLABLE_REFERENCE: &str = include_str!("../data/syllables.tsv");

/// The bundled hand-labeled `(word, syllables)` list the heuristic is
/// checked against.
pub fn syllable_reference() -> Vec<(&'static str, usize)> {
    SYLLABLE_REFERENCE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, n) = l.split_once('\t').expect("word<TAB>count");
            (w, n.trim().parse().expect("syllable count"))
        })
        .collect()
}

/// Readability measurements for one passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageReport {
    pub word_count: usize,
    pub sentence_count: usize,
    pub syllable_count: usize,
    pub ttr: f64,
    pub fres: f64,
}

/// Flesch Reading Ease from raw counts.
pub fn flesch_reading_ease(words: usize, sentences: usize, syllables: usize) -> f64 {
    let w = words as f64;
    FRES_BASE - FRES_SENTENCE_WEIGHT * (w / sentences as f64) - FRES_SYLLABLE_WEIGHT * (syllables as f64 / w)
}

/// Distinct tokens over total tokens; `None` for an empty token list.
pub fn type_token_ratio<S: AsRef<str>>(tokens: &[S]) -> Option<f64> {
    if tokens.is_empty() {
        return None;
    }
    let distinct: HashSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Some(distinct.len() as f64 / tokens.len() as f64)
}

pub fn passage_report(text: &str) -> Result<PassageReport, MetricsError> {
    let tokens = tokenize_words(text);
    let sentence_count = split_sentences(text).len();
    if tokens.is_empty() || sentence_count == 0 {
        return Err(MetricsError::EmptyPassage);
    }
    let syllable_count = tokens.iter().map(|t| count_syllables(t)).sum();
    let ttr = type_token_ratio(&tokens).expect("non-empty");
    Ok(PassageReport {
        word_count: tokens.len(),
        sentence_count,
        syllable_count,
        ttr,
        fres: flesch_reading_ease(tokens.len(), sentence_count, syllable_count),
    })
}

/// Word count used by length checks and review accounting.
pub fn word_count(text: &str) -> usize {
    tokenize_words(text).len()
}

/// Mean and sample standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MetricSummary {
    /// Sample (n − 1) standard deviation; 0 for a single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Some(MetricSummary { mean, std, n })
    }

    /// `mean ± std`, mean with trailing zeros trimmed, std to two decimals,
    /// e.g. `394 ± 78.35`.
    pub fn render(&self) -> String {
        format!("{} ± {:.2}", trim_decimal(self.mean), self.std)
    }
}

fn trim_decimal(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub word_count: MetricSummary,
    pub ttr: MetricSummary,
    pub fres: MetricSummary,
}

pub fn corpus_summary(reports: &[PassageReport]) -> Result<CorpusSummary, MetricsError> {
    let collect = |f: fn(&PassageReport) -> f64| -> Result<MetricSummary, MetricsError> {
        let v: Vec<f64> = reports.iter().map(f).collect();
        MetricSummary::of(&v).ok_or(MetricsError::EmptyCorpus)
    };
    Ok(CorpusSummary {
        word_count: collect(|r| r.word_count as f64)?,
        ttr: collect(|r| r.ttr)?,
        fres: collect(|r| r.fres)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize_words("The cat, the dog."), ["the", "cat", "the", "dog"]);
        assert_eq!(tokenize_words("Don't stop"), ["don't", "stop"]);
        assert!(tokenize_words("").is_empty());
        assert_eq!(tokenize_words("'quoted' words"), ["quoted", "words"]);
        assert_eq!(tokenize_words("In 1997, it rained."), ["in", "1997", "it", "rained"]);
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(split_sentences("Hi. Bye."), ["Hi. ", "Bye."]);
        assert_eq!(split_sentences("Dr. Kim left."), ["Dr. Kim left."]);
        assert!(split_sentences("").is_empty());
        assert_eq!(split_sentences("a a b b").len(), 1);
        assert_eq!(
            split_sentences("He said \"Stop!\" Then he left?! Yes."),
            ["He said \"Stop!\" ", "Then he left?! ", "Yes."]
        );
        assert_eq!(split_sentences("Use tools, e.g. hammers. Fine."), ["Use tools, e.g. hammers. ", "Fine."]);
        assert_eq!(split_sentences("Pi is 3.14 today. Ok"), ["Pi is 3.14 today. ", "Ok"]);
        assert_eq!(split_sentences("  Lead. Trail.  "), ["  Lead. ", "Trail.  "]);
    }

    #[test]
    fn syllable_examples() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("beautiful"), 3);
        assert_eq!(count_syllables(""), 0);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("agree"), 2);
        assert_eq!(count_syllables("1997"), 0);
    }

    #[test]
    fn report_the_cat_sat() {
        let r = passage_report("The cat sat.").unwrap();
        assert_eq!((r.word_count, r.sentence_count, r.syllable_count), (3, 1, 3));
        assert_eq!(r.ttr, 1.0);
        assert!((r.fres - 119.19).abs() < 1e-9, "{}", r.fres);
    }

    #[test]
    fn report_ttr_half() {
        assert_eq!(passage_report("a a b b").unwrap().ttr, 0.5);
    }

    #[test]
    fn report_empty() {
        assert_eq!(passage_report(""), Err(MetricsError::EmptyPassage));
        assert_eq!(passage_report("... !!"), Err(MetricsError::EmptyPassage));
    }

    fn report_with_words(w: usize) -> PassageReport {
        PassageReport {
            word_count: w,
            sentence_count: 1,
            syllable_count: w,
            ttr: 1.0,
            fres: 0.0,
        }
    }

    #[test]
    fn summary_examples() {
        let one = corpus_summary(&[report_with_words(10)]).unwrap();
        assert_eq!(one.word_count.std, 0.0);
        assert_eq!(one.ttr.std, 0.0);
        let two = corpus_summary(&[report_with_words(300), report_with_words(500)]).unwrap();
        assert_eq!(two.word_count.mean, 400.0);
        assert!((two.word_count.std - 141.421356).abs() < 1e-5);
        assert_eq!(corpus_summary(&[]), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn summary_rendering() {
        let s = MetricSummary { mean: 394.0, std: 78.3512, n: 4 };
        assert_eq!(s.render(), "394 ± 78.35");
        let s = MetricSummary { mean: 372.45, std: 66.55, n: 4 };
        assert_eq!(s.render(), "372.45 ± 66.55");
    }

    proptest! {
        #[test]
        fn sentences_partition_text(text in "[A-Za-z .!?\"']{0,80}") {
            let spans = split_sentences(&text);
            if text.trim().is_empty() {
                prop_assert!(spans.is_empty());
            } else {
                prop_assert_eq!(spans.concat(), text);
            }
        }

        #[test]
        fn counts_agree_with_tokens(text in "[A-Za-z ,.']{1,120}") {
            if let Ok(r) = passage_report(&text) {
                let toks = tokenize_words(&text);
                prop_assert_eq!(r.word_count, toks.len());
                prop_assert_eq!(r.syllable_count, toks.iter().map(|t| count_syllables(t)).sum::<usize>());
                prop_assert!(r.ttr > 0.0 && r.ttr <= 1.0);
            }
        }

        #[test]
        fn fres_unchanged_by_repetition(words in proptest::collection::vec("[a-z]{1,9}", 1..20)) {
            prop_assume!(!ABBREVIATIONS.contains(&format!("{}.", words[words.len() - 1]).as_str()));
            let sentence = format!("{}.", words.join(" "));
            let once = passage_report(&sentence).unwrap();
            let twice = passage_report(&format!("{sentence} {sentence}")).unwrap();
            prop_assert!((once.fres - twice.fres).abs() < 1e-9);
        }
    }
}
