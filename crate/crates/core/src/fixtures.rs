//! Synthetic reading items and matching mock scripts.
//!
//! Used by the test suites, the guide and the `demo/` data. The generated
//! replies satisfy every step contract: marker round trip, marker multiset,
//! the length envelope (word counts are kept identical) and the question
//! structure.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::assign::TopicAssignment;
use crate::stats::{Group, ImmsResponse, StudentRecord, Subscale};
use crate::corpus::{BloomLevel, InterestProfile, Question, ReadingItem, TagSet, TopicCode, TopicTaxonomy};
use crate::tagging::{TagInsertion, TaggedPassage, MARKER_OPEN};
use crate::textmetrics::split_sentences;

const SOURCES: [(&str, &str, &str); 4] = [
    (
        "2.b",
        "Every Saturday morning the Park family cleans the house together.",
        "Mother washes the windows while Father takes care of the garden. \
         The children were taught to fold their own clothes when they were young. \
         After lunch everyone sits down and plans the next family holiday. \
         Last year they visited their grandparents, who live by the sea. \
         Because the work is shared, nobody feels that the chores are unfair.",
    ),
    (
        "5.a",
        "Grandparents and teenagers often see the same event in different ways.",
        "Older people may remember a time when letters took weeks to arrive. \
         Young people, who grew up with phones, expect an answer within minutes. \
         Such differences can lead to small arguments at the dinner table. \
         However, many families have found that talking openly helps. \
         When each generation explains its habits, respect grows on both sides.",
    ),
    (
        "4.c",
        "The whole town came to the school hall for the graduation ceremony.",
        "Parents arrived early so that they could find good seats. \
         The head teacher gave a short speech that made several people laugh. \
         Each student walked across the stage when their name was called. \
         Afterwards there was a party with music and food from local shops. \
         It was an evening that the graduates would remember for many years.",
    ),
    (
        "6.b",
        "Human rights belong to every person, no matter where they were born.",
        "Many countries have signed agreements that protect these rights. \
         Students can practise global citizenship by learning about other cultures. \
         Simple habits, such as greeting visitors politely, show respect. \
         Some schools hold peace festivals where pupils share ideas. \
         If young people understand equality, the world may become fairer.",
    ),
];

const BLOOM_CYCLE: [BloomLevel; 5] = [
    BloomLevel::Remember,
    BloomLevel::Understand,
    BloomLevel::Analyze,
    BloomLevel::Understand,
    BloomLevel::Evaluate,
];

const MARKED_TAGS: [&str; 2] = ["passive-voice", "relative-clause"];

/// Up to four source items (ids `r1`…`r4`), each with five questions.
pub fn sample_items(n: usize) -> Vec<ReadingItem> {
    SOURCES
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, (topic, first, rest))| {
            let passage = format!("{first} {rest}");
            let questions = (0..5)
                .map(|k| Question {
                    stem: format!("Question {} about passage {}?", k + 1, i + 1),
                    options: (0..4).map(|o| format!("option {}{}", k + 1, (b'a' + o) as char)).collect(),
                    answer_index: (i + k) % 4,
                    bloom: None,
                })
                .collect();
            ReadingItem {
                id: format!("r{}", i + 1),
                passage,
                questions,
                source_topic: Some(topic.parse().expect("valid code")),
                metadata: BTreeMap::from([("source".to_string(), "synthetic".to_string())]),
            }
        })
        .collect()
}

/// The Bloom levels the mock classifier will return for `item`.
pub fn bloom_labels(item: &ReadingItem) -> Vec<BloomLevel> {
    (0..item.questions.len())
        .map(|k| BLOOM_CYCLE[k % BLOOM_CYCLE.len()])
        .collect()
}

/// Profiles `s1`…`sn` rating every code in `taxonomy`. Student i's four
/// top interests are codes i, i+7, i+14 and i+21 (mod the code count).
pub fn sample_profiles(n: usize, taxonomy: &TopicTaxonomy) -> Vec<InterestProfile> {
    let codes = taxonomy.codes();
    (0..n)
        .map(|i| {
            let top: Vec<TopicCode> = (0..4).map(|k| codes[(i + 7 * k) % codes.len()].clone()).collect();
            let likert = codes
                .iter()
                .enumerate()
                .map(|(j, c)| (c.clone(), if top.contains(c) { 7 } else { ((i + j) % 6 + 1) as u8 }))
                .collect();
            InterestProfile {
                student_id: format!("s{}", i + 1),
                likert,
                top_interests: top,
                least_interests: Default::default(),
            }
        })
        .collect()
}

/// Markers after the second and fourth sentences.
pub fn tagged_source(item: &ReadingItem, tagset: &TagSet) -> TaggedPassage {
    let mut insertions = Vec::new();
    let mut chars = 0;
    for (s, sentence) in split_sentences(&item.passage).iter().enumerate() {
        let trimmed = sentence.trim_end();
        if s == 1 || s == 3 {
            insertions.push(TagInsertion {
                tag_id: MARKED_TAGS[insertions.len() % 2].to_string(),
                position: chars + trimmed.chars().count(),
            });
        }
        chars += sentence.chars().count();
    }
    TaggedPassage::new(item.passage.clone(), insertions, tagset).expect("fixture markers are valid")
}

fn vocabulary(target: &TopicCode, taxonomy: &TopicTaxonomy) -> Vec<String> {
    let desc = taxonomy.get(target).map_or("new topic", |s| s.description.as_str());
    let mut words: Vec<String> = desc
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| w.len() >= 3)
        .map(str::to_lowercase)
        .collect();
    words.extend(["people", "often", "enjoy", "new", "ideas"].map(String::from));
    words
}

/// A step-4 reply: every word of the tagged source replaced by topic
/// vocabulary, punctuation and markers kept in place.
pub fn transcreated_reply(tagged: &TaggedPassage, target: &TopicCode, taxonomy: &TopicTaxonomy) -> String {
    let vocab = vocabulary(target, taxonomy);
    let rendered = tagged.render();
    let mut out = String::with_capacity(rendered.len());
    let mut next_word = 0;
    let mut rest = rendered.as_str();
    while let Some(c) = rest.chars().next() {
        if rest.starts_with(MARKER_OPEN) {
            let end = rest.find("]]").expect("closed marker") + 2;
            out.push_str(&rest[..end]);
            rest = &rest[end..];
        } else if c.is_alphanumeric() || c == '\'' {
            let len = rest
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '\''))
                .unwrap_or(rest.len());
            let word = &vocab[next_word % vocab.len()];
            next_word += 1;
            if c.is_uppercase() {
                let mut cs = word.chars();
                out.extend(cs.next().map(|f| f.to_ascii_uppercase()));
                out.push_str(cs.as_str());
            } else {
                out.push_str(word);
            }
            rest = &rest[len..];
        } else {
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// A step-5 reply keeping structure and answers of the source questions.
pub fn questions_reply(item: &ReadingItem, target: &TopicCode) -> String {
    let qs: Vec<Value> = item
        .questions
        .iter()
        .map(|q| {
            json!({
                "stem": format!("[{target}] {}", q.stem),
                "options": q.options.iter().map(|o| format!("{o} ({target})")).collect::<Vec<_>>(),
                "answer": ((b'A' + q.answer_index as u8) as char).to_string(),
            })
        })
        .collect();
    json!({ "questions": qs }).to_string()
}

/// Steps 1–3 replies for `item`, keyed for the mock backend.
pub fn analysis_script(item: &ReadingItem, tagset: &TagSet) -> BTreeMap<String, Value> {
    let topic = item
        .source_topic
        .as_ref()
        .map_or("1.a".to_string(), ToString::to_string);
    BTreeMap::from([
        (format!("topic/{}", item.id), json!([topic])),
        (
            format!("bloom/{}", item.id),
            json!(bloom_labels(item).iter().map(|b| b.name()).collect::<Vec<_>>()),
        ),
        (
            format!("tagging/{}", item.id),
            json!([tagged_source(item, tagset).render()]),
        ),
    ])
}

/// Steps 4–5 replies for one target.
pub fn target_script(
    item: &ReadingItem,
    target: &TopicCode,
    student_id: Option<&str>,
    taxonomy: &TopicTaxonomy,
    tagset: &TagSet,
) -> BTreeMap<String, Value> {
    let key = match student_id {
        Some(s) => format!("{}/{s}", item.id),
        None => item.id.clone(),
    };
    let tagged = tagged_source(item, tagset);
    BTreeMap::from([
        (
            format!("passage/{key}"),
            json!([transcreated_reply(&tagged, target, taxonomy)]),
        ),
        (format!("questions/{key}"), json!([questions_reply(item, target)])),
    ])
}

/// A complete mock script for transcreating `items` per the assignments.
pub fn mock_script(
    items: &[ReadingItem],
    assignments: &[TopicAssignment],
    taxonomy: &TopicTaxonomy,
    tagset: &TagSet,
) -> Value {
    let mut script = BTreeMap::new();
    for item in items {
        script.extend(analysis_script(item, tagset));
    }
    for a in assignments {
        for p in &a.passages {
            let item = items
                .iter()
                .find(|i| i.id == p.source_item_id)
                .expect("assignment refers to a known item");
            script.extend(target_script(item, &p.target_topic, Some(&a.student_id), taxonomy, tagset));
        }
    }
    json!(script)
}

/// The sample items with the fixed Bloom labels filled in, for use as an
/// answer key.
pub fn answer_key(n: usize) -> Vec<ReadingItem> {
    let mut items = sample_items(n);
    for item in &mut items {
        let labels = bloom_labels(item);
        for (q, b) in item.questions.iter_mut().zip(labels) {
            q.bloom = Some(b);
        }
    }
    items
}

/// An answer sheet for `key` with the first `wrong` questions answered
/// incorrectly.
pub fn answer_sheet(key: &[ReadingItem], wrong: usize) -> Vec<usize> {
    key.iter()
        .flat_map(|i| &i.questions)
        .enumerate()
        .map(|(k, q)| if k < wrong { (q.answer_index + 1) % 4 } else { q.answer_index })
        .collect()
}

fn imms(values: [u8; 4]) -> Vec<ImmsResponse> {
    let subscales = [Subscale::Attention, Subscale::Relevance, Subscale::Confidence, Subscale::Satisfaction];
    subscales
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(i, (subscale, response))| ImmsResponse {
            item_id: format!("m{}", i + 1),
            subscale,
            response,
        })
        .collect()
}

/// Twenty students on `key` for tests `test1` and `test2`.
///
/// Group B (`b01`…`b10`) answers two more questions correctly on the second
/// test, a constant 10-point gain. Group A (`a01`…`a10`) drops 5 points
/// seven times and gains 10 points three times, which is no consistent
/// change. TOEFL scores are spread over both groups.
pub fn experiment_records(key: &[ReadingItem]) -> Vec<StudentRecord> {
    let mut out = Vec::with_capacity(20);
    for i in 0..10 {
        let (a1, a2) = (4 + i % 3, 4 + (i + 1) % 3);
        let (b1, b2) = (6 + i % 3, 4 + i % 3);
        for (group, prefix, w1, w2, toefl) in [
            (Group::A, "a", a1, a2, 80.0 + ((i * 7) % 20) as f64),
            (Group::B, "b", b1, b2, 81.0 + ((i * 11) % 20) as f64),
        ] {
            let level = 4 + (i % 3) as u8;
            out.push(StudentRecord {
                student_id: format!("{prefix}{:02}", i + 1),
                toefl,
                group,
                test_answers: BTreeMap::from([
                    ("test1".into(), answer_sheet(key, w1)),
                    ("test2".into(), answer_sheet(key, w2)),
                ]),
                turnaround_minutes: BTreeMap::from([
                    ("test1".into(), 30.0 + i as f64),
                    ("test2".into(), 28.0 + i as f64),
                ]),
                imms: BTreeMap::from([
                    ("test1".into(), imms([level, level + 1, level, level])),
                    ("test2".into(), imms([level, level, level + 1, level])),
                ]),
            });
        }
    }
    out
}
