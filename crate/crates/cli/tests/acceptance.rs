//! Acceptance checks, one per criterion. Runs without the libtest harness
//! so every PASS/FAIL line is printed; exits non-zero if any check fails.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{code, p, stderr, stdout, target_script, Sandbox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use transcreate_core::assign::{assign_topics, AssignmentMode};
use transcreate_core::corpus::{BloomLevel, TagSet, TopicTaxonomy};
use transcreate_core::fixtures;
use transcreate_core::gateway::{Gateway, MockBackend};
use transcreate_core::pipeline::{Pipeline, PipelineConfig, RecordStatus, TranscreationRecord};
use transcreate_core::prompts::PromptSet;
use transcreate_core::stats::{
    balanced_split, experiment_report, mann_whitney_u, wilcoxon_signed_rank, Method, ReportOptions, Sides,
    StatsError, StudentRecord,
};
use transcreate_core::tagging::{extract_markers, strip_tags, TagInsertion, TaggedPassage};
use transcreate_core::textmetrics::{
    count_syllables, flesch_reading_ease, passage_report, syllable_reference, tokenize_words, type_token_ratio,
};
use transcreate_core::validation::{
    agreement_from_confusion, qa_report, render_rate, review_apply, Kappa, ReviewDecision, ReviewQueue, Verdict,
};

type Check = Result<String, String>;
type Matrix = [[u64; 6]; 6];

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// 1. FRES golden values

fn fres_golden() -> Check {
    let r = passage_report("The cat sat.").map_err(|e| e.to_string())?;
    ensure!((r.word_count, r.sentence_count, r.syllable_count) == (3, 1, 3), "counts {r:?}");
    ensure!(close(r.fres, 119.19, 1e-6), "FRES {} != 119.19", r.fres);

    // one-syllable words only, so syllables/words = 1
    let cases = [
        ("The dog ran. A cat sat on the mat.", 9, 2),
        ("I can see a big red bus.", 7, 1),
        ("Go now! We eat lunch at noon. Is it hot?", 10, 3),
        ("Dogs bark. Cats sleep. Birds sing. Fish swim.", 8, 4),
    ];
    for (text, w, s) in cases {
        let r = passage_report(text).map_err(|e| e.to_string())?;
        ensure!(r.word_count == w && r.sentence_count == s, "{text:?}: counts {r:?}");
        ensure!(r.syllable_count == w, "{text:?}: expected one syllable per word, got {}", r.syllable_count);
        let expected = 206.835 - 1.015 * (w as f64 / s as f64) - 84.6;
        ensure!(close(r.fres, expected, 1e-9), "{text:?}: FRES {} != {expected}", r.fres);
    }
    ensure!(close(flesch_reading_ease(100, 5, 150), 206.835 - 1.015 * 20.0 - 84.6 * 1.5, 1e-9), "raw formula");
    Ok("119.19 and 4 degenerate cases".into())
}

// 2. TTR exactness

fn ttr_exact() -> Check {
    let cases: [(&str, usize, usize); 20] = [
        ("cat", 1, 1),
        ("the cat", 2, 2),
        ("the the", 1, 2),
        ("The the THE tHe", 1, 4),
        ("a b c d e f g h i j", 10, 10),
        ("a a b b c c", 3, 6),
        ("Dog. dog! DOG?", 1, 3),
        ("one two three two one", 3, 5),
        ("It's its it's", 2, 3),
        ("Mother's mother mothers", 3, 3),
        ("'quoted' quoted", 1, 2),
        ("x-ray x ray", 2, 4),
        ("1997 1997 1998", 2, 3),
        ("Café CAFÉ cafe", 2, 3),
        ("the cat sat on the mat with the hat", 7, 9),
        ("  spaced    out   spaced  ", 2, 3),
        ("Repeat repeat repeat repeat repeat", 1, 5),
        ("A, b; a: B. c", 3, 5),
        ("über Über uber", 2, 3),
        ("Ring the bell, then ring it again and ring it once more.", 9, 12),
    ];
    for (text, distinct, total) in cases {
        let tokens = tokenize_words(text);
        ensure!(tokens.len() == total, "{text:?}: {} tokens, expected {total}", tokens.len());
        let ttr = type_token_ratio(&tokens).ok_or("empty token list")?;
        let expected = distinct as f64 / total as f64;
        ensure!(ttr == expected, "{text:?}: TTR {ttr} != {distinct}/{total}");
    }

    let vocab = ["alpha", "Beta", "GAMMA", "delta", "epsilon", "Zeta", "eta", "theta", "iota", "kappa"];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let words: Vec<String> = (0..n)
            .map(|_| {
                let w = vocab[rng.random_range(0..vocab.len())];
                if rng.random_bool(0.3) { w.to_uppercase() } else { w.to_string() }
            })
            .collect();
        let text = words.join(" ");
        let tokens = tokenize_words(&text);
        let ttr = type_token_ratio(&tokens).ok_or("empty")?;
        let distinct: HashSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
        ensure!(ttr > 0.0 && ttr <= 1.0, "{text:?}: TTR {ttr} outside (0,1]");
        ensure!(ttr == distinct.len() as f64 / n as f64, "{text:?}: TTR {ttr}");
    }
    Ok("20 constructed strings, 1000 fuzzed".into())
}

// 3. syllable heuristic

fn syllables() -> Check {
    let reference = syllable_reference();
    ensure!(reference.len() == 50, "reference list has {} words", reference.len());
    let misses: Vec<String> = reference
        .iter()
        .filter(|(w, n)| count_syllables(w) != *n)
        .map(|(w, n)| format!("{w} ({} vs {n})", count_syllables(w)))
        .collect();
    let agree = 50 - misses.len();
    ensure!(agree >= 45, "{agree}/50 agree; misses: {}", misses.join(", "));
    Ok(format!("{agree}/50 agree"))
}

// 4. tag round trip and rejection of paraphrased replies

const WORDS: &[&str] = &[
    "the", "students", "read", "a", "story", "about", "café", "naïve", "über", "mother's", "it's", "1997",
    "garden", "quickly", "Seoul", "rain", "festival", "x-ray", "語", "peace",
];

struct Sentence {
    words: Vec<String>,
    end: &'static str,
    closer: &'static str,
    gap: &'static str,
}

fn random_passage(rng: &mut ChaCha8Rng) -> Vec<Sentence> {
    let n = rng.random_range(1..8);
    (0..n)
        .map(|_| {
            let len = rng.random_range(2..10);
            let mut words: Vec<String> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string()).collect();
            let first = words[0].clone();
            let mut cs = first.chars();
            words[0] = cs.next().map(|c| c.to_uppercase().chain(cs).collect()).unwrap_or_default();
            Sentence {
                words,
                end: [".", "!", "?", "...", "?!"][rng.random_range(0..5)],
                closer: ["", "", "", "\"", ")", "\u{201D}"][rng.random_range(0..6)],
                gap: [" ", " ", "  ", "\n", "\n\n"][rng.random_range(0..5)],
            }
        })
        .collect()
}

/// Text of `sentences` and the character offsets just after each
/// sentence's closing punctuation.
fn render_plain(sentences: &[Sentence]) -> (String, Vec<usize>) {
    let mut text = String::new();
    let mut ends = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        text.push_str(&s.words.join(" "));
        text.push_str(s.end);
        text.push_str(s.closer);
        ends.push(text.chars().count());
        if i + 1 < sentences.len() {
            text.push_str(s.gap);
        }
    }
    (text, ends)
}

fn with_markers(text: &str, insertions: &[TagInsertion]) -> String {
    let mut out = String::new();
    let chars: Vec<char> = text.chars().collect();
    let mut k = 0;
    for idx in 0..=chars.len() {
        while k < insertions.len() && insertions[k].position == idx {
            out.push_str(&format!("[[T:{}]]", insertions[k].tag_id));
            k += 1;
        }
        if idx < chars.len() {
            out.push(chars[idx]);
        }
    }
    out
}

fn random_insertions(rng: &mut ChaCha8Rng, ends: &[usize], tags: &TagSet) -> Vec<TagInsertion> {
    let count = rng.random_range(0..=ends.len() + 2);
    let mut ins: Vec<TagInsertion> = (0..count)
        .map(|_| TagInsertion {
            tag_id: tags.tags()[rng.random_range(0..tags.len())].id.clone(),
            position: ends[rng.random_range(0..ends.len())],
        })
        .collect();
    ins.sort_by_key(|i| i.position);
    ins
}

fn paraphrase(rng: &mut ChaCha8Rng, sentences: &mut [Sentence], kind: usize) {
    // kind 7 edits the gap after a sentence, which the last one lacks
    let kind = if kind == 7 && sentences.len() == 1 { 2 } else { kind };
    let last = if kind == 7 { sentences.len() - 1 } else { sentences.len() };
    let s = rng.random_range(0..last);
    let sent = &mut sentences[s];
    let w = rng.random_range(0..sent.words.len());
    match kind {
        0 => {
            let replacement = if sent.words[w] == "pupils" { "learners" } else { "pupils" };
            sent.words[w] = replacement.to_string();
        }
        1 => {
            sent.words.remove(w);
            if sent.words.is_empty() {
                sent.words.push("Nothing".into());
            }
        }
        2 => sent.words.insert(w, "really".into()),
        3 => {
            let flipped: String = sent.words[w]
                .chars()
                .map(|c| if c.is_uppercase() { c.to_lowercase().next().unwrap() } else { c.to_uppercase().next().unwrap() })
                .collect();
            if flipped == sent.words[w] {
                sent.words[w].push('s');
            } else {
                sent.words[w] = flipped;
            }
        }
        4 => sent.end = if sent.end == "." { ";" } else { "." },
        5 => sent.words[w].push(','),
        6 => {
            if sent.words.len() > 1 && sent.words[0] != sent.words[1] {
                sent.words.swap(0, 1);
            } else {
                sent.words.push("too".into());
            }
        }
        _ => sent.gap = if sent.gap == " " { "   " } else { " " },
    }
}

fn tag_round_trip() -> Check {
    let tags = TagSet::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let sentences = random_passage(&mut rng);
        let (text, ends) = render_plain(&sentences);
        let ins = random_insertions(&mut rng, &ends, &tags);
        let tagged = TaggedPassage::new(text.clone(), ins.clone(), &tags).map_err(|e| format!("case {case}: {e}"))?;
        let rendered = tagged.render();
        ensure!(rendered == with_markers(&text, &ins), "case {case}: render differs from oracle");
        ensure!(strip_tags(&rendered).as_bytes() == text.as_bytes(), "case {case}: strip is not byte-exact");
        ensure!(extract_markers(&rendered) == (text.clone(), ins.clone()), "case {case}: extract differs");
        let parsed = TaggedPassage::from_reply(&text, &rendered, &tags).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(parsed == tagged, "case {case}: reparse differs");
    }

    let tax = TopicTaxonomy::bundled();
    let prompts = PromptSet::bundled();
    let base = fixtures::sample_items(1).remove(0);
    let mut rejected = 0;
    let total = 240;
    for case in 0..total {
        let mut sentences = random_passage(&mut rng);
        let (text, ends) = render_plain(&sentences);
        let mut ins = random_insertions(&mut rng, &ends, &tags);
        if ins.is_empty() {
            ins.push(TagInsertion {
                tag_id: tags.tags()[0].id.clone(),
                position: *ends.last().unwrap(),
            });
        }
        let kind = case % 9;
        let reply = if kind == 8 {
            // marker moved into the middle of a sentence
            let mut moved = ins.clone();
            moved[0].position = sentences[0].words[0].chars().count();
            moved.sort_by_key(|i| i.position);
            with_markers(&text, &moved)
        } else {
            paraphrase(&mut rng, &mut sentences, kind);
            let (mutated, mends) = render_plain(&sentences);
            ensure!(mutated != text, "case {case}: mutation kind {kind} left the text unchanged");
            let mins: Vec<TagInsertion> = ins
                .iter()
                .map(|i| TagInsertion {
                    tag_id: i.tag_id.clone(),
                    position: mends[ends.iter().position(|&e| e == i.position).unwrap()],
                })
                .collect();
            with_markers(&mutated, &mins)
        };

        let mut item = base.clone();
        item.passage = text.clone();
        let mut script = fixtures::analysis_script(&item, &tags);
        script.insert("tagging/r1".into(), json!(vec![reply; 4]));
        let gateway = Gateway::mock(MockBackend::from_json(&json!(script).to_string()).unwrap(), 0);
        let pipeline = Pipeline::new(&gateway, &prompts, &tax, &tags, PipelineConfig::default());
        let record = pipeline.transcreate_item(&item, &"9.c".parse().unwrap(), None);
        if let RecordStatus::Failed { step: 3, .. } = record.status {
            rejected += 1;
        }

        if case == 0 {
            // control: the faithful reply passes step 3
            let mut script = fixtures::analysis_script(&item, &tags);
            script.insert("tagging/r1".into(), json!([with_markers(&text, &ins)]));
            let gateway = Gateway::mock(MockBackend::from_json(&json!(script).to_string()).unwrap(), 0);
            let pipeline = Pipeline::new(&gateway, &prompts, &tax, &tags, PipelineConfig::default());
            let record = pipeline.transcreate_item(&item, &"9.c".parse().unwrap(), None);
            ensure!(record.tagged_source.is_some(), "faithful reply rejected: {:?}", record.status);
        }
    }
    ensure!(rejected == total, "{rejected}/{total} paraphrased replies rejected");
    Ok(format!("1000 round trips, {rejected}/{total} paraphrased replies rejected"))
}

// 5 and 6. rank tests against enumeration

/// Doubled average ranks, 1-based, by plain sorting.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = (i + 1 + j + 1) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// p-values (one-sided, two-sided) from a full null distribution.
fn tail_p(observed: u64, null: &[u64]) -> (f64, f64) {
    let total = null.len() as f64;
    let ge = null.iter().filter(|&&v| v >= observed).count() as f64 / total;
    let le = null.iter().filter(|&&v| v <= observed).count() as f64 / total;
    let one = ge.min(le);
    (one, (2.0 * one).min(1.0))
}

fn wilcoxon_oracle(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return None;
    }
    let ranks = doubled_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: u64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let null: Vec<u64> = (0u32..1 << d.len())
        .map(|mask| (0..d.len()).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    Some(tail_p(observed, &null))
}

fn wilcoxon_exact() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut all_zero = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..7) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..7) as f64).collect();
        match wilcoxon_oracle(&x, &y) {
            None => {
                all_zero += 1;
                let r = wilcoxon_signed_rank(&x, &y, Sides::Two);
                ensure!(r == Err(StatsError::AllZeroDifferences), "case {case}: expected AllZeroDifferences, got {r:?}");
            }
            Some((one, two)) => {
                for (sides, expected) in [(Sides::One, one), (Sides::Two, two)] {
                    let r = wilcoxon_signed_rank(&x, &y, sides).map_err(|e| format!("case {case}: {e}"))?;
                    ensure!(r.method == Method::Exact, "case {case}: not exact");
                    ensure!(
                        close(r.p_value, expected, 1e-12),
                        "case {case} {sides:?}: p {} vs oracle {expected} for x={x:?} y={y:?}",
                        r.p_value
                    );
                }
            }
        }
    }
    let known = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0], Sides::One).map_err(|e| e.to_string())?;
    ensure!(close(known.p_value, 0.125, 1e-12), "diffs [1,2,3]: p {}", known.p_value);
    Ok(format!("200 cases ({all_zero} all-zero), known case p = 0.125"))
}

fn mann_whitney_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_ranks(&pooled);
    let n = a.len();
    let observed: u64 = ranks[..n].iter().sum();
    let null: Vec<u64> = (0u32..1 << pooled.len())
        .filter(|m| m.count_ones() as usize == n)
        .map(|mask| (0..pooled.len()).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    tail_p(observed, &null)
}

fn mann_whitney_exact() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        let (one, two) = mann_whitney_oracle(&a, &b);
        for (sides, expected) in [(Sides::One, one), (Sides::Two, two)] {
            let r = mann_whitney_u(&a, &b, sides).map_err(|e| format!("case {case}: {e}"))?;
            ensure!(r.method == Method::Exact, "case {case}: not exact");
            ensure!(
                close(r.p_value, expected, 1e-12),
                "case {case} {sides:?}: p {} vs oracle {expected} for a={a:?} b={b:?}",
                r.p_value
            );
        }
    }
    let known = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], Sides::One).map_err(|e| e.to_string())?;
    ensure!(known.statistic == 0.0, "U = {}", known.statistic);
    ensure!(close(known.p_value, 1.0 / 6.0, 1e-12), "U=0, n=m=2: p {}", known.p_value);
    Ok("200 cases, known case p = 1/6".into())
}

// 7. Cohen's kappa

fn matrix(cells: &[(usize, usize, u64)]) -> Matrix {
    let mut m = [[0u64; 6]; 6];
    for &(i, j, c) in cells {
        m[i][j] = c;
    }
    m
}

fn kappa_hand() -> Check {
    let mut independent = [[0u64; 6]; 6];
    let (rows, cols) = ([1u64, 2, 3, 0, 1, 3], [2u64, 1, 1, 3, 0, 3]);
    for i in 0..6 {
        for j in 0..6 {
            independent[i][j] = rows[i] * cols[j];
        }
    }
    let cases: Vec<(&str, Matrix, Option<f64>)> = vec![
        ("diagonal", matrix(&[(0, 0, 3), (1, 1, 5), (2, 2, 2), (3, 3, 4), (4, 4, 1), (5, 5, 6)]), Some(1.0)),
        ("independent", independent, Some(0.0)),
        ("degenerate", matrix(&[(1, 1, 36)]), None),
        ("two levels", matrix(&[(0, 0, 20), (0, 1, 5), (1, 0, 10), (1, 1, 15)]), Some(0.4)),
        ("3/23", matrix(&[(0, 0, 45), (0, 1, 15), (1, 0, 25), (1, 1, 15)]), Some(3.0 / 23.0)),
        ("full disagreement", matrix(&[(0, 1, 5), (1, 0, 5)]), Some(-1.0)),
        ("constant judge", matrix(&[(0, 1, 4), (1, 1, 6), (2, 1, 3), (4, 1, 7)]), Some(0.0)),
        // n=100, trace 80, rows=cols=(50,30,20): pe = 0.38, (0.8 - 0.38)/0.62
        ("three levels", matrix(&[(0, 0, 40), (0, 1, 5), (0, 2, 5), (1, 0, 5), (1, 1, 25), (2, 0, 5), (2, 2, 15)]), Some(21.0 / 31.0)),
        // n=10, trace 2, rows (10,0..), cols (2,8): pe = 0.2, (0.2-0.2)/0.8
        ("one source level", matrix(&[(2, 2, 2), (2, 5, 8)]), Some(0.0)),
        // n=6, one per row, columns shifted by one except one hit: po=1/6, pe=1/6
        ("cyclic", matrix(&[(0, 0, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 1, 1)]), Some(0.0)),
    ];
    for (name, m, expected) in &cases {
        let r = agreement_from_confusion(*m).map_err(|e| format!("{name}: {e}"))?;
        match (expected, r.kappa) {
            (None, Kappa::NotDefined) => {}
            (Some(e), Kappa::Value(v)) => ensure!(close(v, *e, 1e-12), "{name}: kappa {v} != {e}"),
            (e, k) => return Err(format!("{name}: kappa {k:?}, expected {e:?}")),
        }
        let n: u64 = m.iter().flatten().sum();
        let trace: u64 = (0..6).map(|i| m[i][i]).sum();
        ensure!(close(r.accuracy, trace as f64 / n as f64, 1e-12), "{name}: accuracy {}", r.accuracy);
    }
    let json = serde_json::to_value(agreement_from_confusion(cases[2].1).unwrap()).unwrap();
    ensure!(json["kappa"] == "NotDefined", "degenerate kappa serialises as {}", json["kappa"]);
    Ok(format!("{} matrices", cases.len()))
}

// 8. balanced split against brute force

fn split_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = 10usize;
    for case in 0..25 {
        let scores: Vec<i64> = (0..20).map(|_| rng.random_range(60..=120)).collect();
        let total: i64 = scores.iter().sum();
        let total_sq: i64 = scores.iter().map(|s| s * s).sum();
        let std = |sum: i64, sq: i64| (((k as i64 * sq - sum * sum) as f64) / (k * (k - 1)) as f64).sqrt();
        let mut best_gap = i64::MAX;
        let mut best_std = f64::INFINITY;
        let mut subsets = 0;
        for mask in 0u32..1 << 20 {
            if mask.count_ones() != 10 {
                continue;
            }
            subsets += 1;
            let (mut sa, mut qa) = (0, 0);
            for (i, s) in scores.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    sa += s;
                    qa += s * s;
                }
            }
            let gap = (2 * sa - total).abs();
            let sd = (std(sa, qa) - std(total - sa, total_sq - qa)).abs();
            if gap < best_gap || (gap == best_gap && sd < best_std) {
                best_gap = gap;
                best_std = sd;
            }
        }
        ensure!(subsets == 184_756, "enumerated {subsets} partitions");

        let students: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, s)| (format!("s{i:02}"), *s as f64)).collect();
        let r = balanced_split(&students, k).map_err(|e| format!("case {case}: {e}"))?;
        let sum_of = |ids: &std::collections::BTreeSet<String>| -> i64 {
            ids.iter().map(|id| scores[id[1..].parse::<usize>().unwrap()]).sum()
        };
        ensure!(r.group_a.len() == k && r.group_b.len() == k, "case {case}: group sizes");
        let gap = (sum_of(&r.group_a) - sum_of(&r.group_b)).abs();
        ensure!(gap == best_gap, "case {case}: split gap {gap} vs optimum {best_gap} (sum units)");
        ensure!(close(r.mean_gap, best_gap as f64 / k as f64, 1e-9), "case {case}: reported gap {}", r.mean_gap);
        ensure!(
            close((r.std_a - r.std_b).abs(), best_std, 1e-9),
            "case {case}: std difference {} vs optimum {best_std}",
            (r.std_a - r.std_b).abs()
        );
    }
    Ok("25 instances of C(20,10) = 184756".into())
}

// 9. end-to-end mock run

fn records(text: &str) -> Vec<TranscreationRecord> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn end_to_end() -> Check {
    let sb = Sandbox::new();
    let items = fixtures::sample_items(4);
    let input = sb.items("items.jsonl", &items);
    let script = sb.write_json("script.json", &target_script(&items, "6.a"));
    let out = sb.run(["transcreate", "--in", p(&input), "--target", "6.a", "--mock", p(&script), "--out", "records.jsonl"]);
    ensure!(code(&out) == 0, "transcreate exited {}: {}", code(&out), stderr(&out));
    let recs = records(&sb.read("records.jsonl"));
    ensure!(recs.len() == 4, "{} records", recs.len());
    let mut key = Vec::new();
    for (rec, item) in recs.iter().zip(&items) {
        ensure!(rec.is_complete(), "{}: {:?}", rec.record_id, rec.status);
        ensure!(rec.transcreated_questions.len() == item.questions.len(), "{}: question count", rec.record_id);
        let expected: Vec<BloomLevel> = fixtures::bloom_labels(item);
        ensure!(rec.question_blooms == expected, "{}: source labels {:?}", rec.record_id, rec.question_blooms);
        let carried: Vec<Option<BloomLevel>> = rec.transcreated_questions.iter().map(|q| q.bloom).collect();
        ensure!(carried == expected.iter().copied().map(Some).collect::<Vec<_>>(), "{}: labels not carried", rec.record_id);
        key.push(rec.to_item().ok_or("no item from complete record")?);
    }
    ensure!(key.iter().map(|i| i.questions.len()).sum::<usize>() == 20, "20 questions expected");

    let key_path = sb.items("key.jsonl", &key);
    let student = StudentRecord {
        student_id: "s1".into(),
        toefl: 90.0,
        group: Default::default(),
        test_answers: BTreeMap::from([("post".into(), fixtures::answer_sheet(&key, 0))]),
        turnaround_minutes: BTreeMap::new(),
        imms: BTreeMap::new(),
    };
    let students = sb.write_json("students.json", &[student]);
    let k = format!("post={}", p(&key_path));
    let out = sb.run(["score", "--students", p(&students), "--key", &k]);
    ensure!(code(&out) == 0, "score exited {}: {}", code(&out), stderr(&out));
    let scores: Value = serde_json::from_str(&stdout(&out)).map_err(|e| e.to_string())?;
    ensure!(scores[0]["tests"]["post"]["score"] == 100, "perfect sheet scored {}", scores[0]["tests"]["post"]["score"]);
    Ok("4 complete records, perfect sheet = 100 points".into())
}

// 10. QA rate rendering

fn qa_rounding() -> Check {
    ensure!(render_rate(1.0 / 36.0) == "2.8%", "1/36 renders {}", render_rate(1.0 / 36.0));
    ensure!(render_rate(1.0 / 80.0) == "1.3%", "1/80 renders {}", render_rate(1.0 / 80.0));
    ensure!(render_rate(0.0) == "0.0%", "0 renders {}", render_rate(0.0));

    let mut items = fixtures::sample_items(4);
    for item in &mut items {
        let extra: Vec<_> = item.questions[..4].to_vec();
        item.questions.extend(extra);
    }
    ensure!(items.iter().map(|i| i.questions.len()).sum::<usize>() == 36, "fixture should hold 36 questions");
    let ids: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
    let mut queue = ReviewQueue::new(items);
    for (i, id) in ids.iter().enumerate() {
        let flags = if i == 2 { vec![6] } else { vec![] };
        let d = ReviewDecision::new(id, Verdict::Accept, "t", "2024-01-01T00:00:00Z").with_unanswerable(flags);
        review_apply(&mut queue, d).map_err(|e| e.to_string())?;
    }
    let report = qa_report(&queue).map_err(|e| e.to_string())?;
    ensure!(report.flagged_unanswerable == 1 && report.total_questions == 36, "{report:?}");
    ensure!(report.rendered_rate == "2.8%", "report renders {}", report.rendered_rate);
    Ok("1 of 36 renders 2.8%".into())
}

// 11. determinism

fn determinism() -> Check {
    let sb = Sandbox::new();
    let tax = TopicTaxonomy::bundled();
    let tags = TagSet::bundled();
    let items = fixtures::sample_items(4);
    let input = sb.items("items.jsonl", &items);
    let profiles = fixtures::sample_profiles(3, &tax);
    let assignments = assign_topics(&profiles, &items, AssignmentMode::Random, 11, &tax).map_err(|e| e.to_string())?;
    let profiles_path = sb.write_json("profiles.json", &profiles);
    let script = sb.write_json("script.json", &fixtures::mock_script(&items, &assignments, &tax, &tags));
    for out in ["run1.jsonl", "run2.jsonl"] {
        let o = sb.run([
            "transcreate", "--in", p(&input), "--profiles", p(&profiles_path), "--mode", "random", "--seed", "11",
            "--mock", p(&script), "--out", out, "--jobs", "4",
        ]);
        ensure!(code(&o) == 0, "{out}: exit {}: {}", code(&o), stderr(&o));
    }
    let (a, b) = (std::fs::read(sb.path("run1.jsonl")).unwrap(), std::fs::read(sb.path("run2.jsonl")).unwrap());
    ensure!(!a.is_empty(), "empty output");
    ensure!(a == b, "outputs differ");
    Ok(format!("{} bytes identical over 2 runs", a.len()))
}

// 12. synthetic experiment

fn synthetic_experiment() -> Check {
    let key = fixtures::answer_key(4);
    let keys = BTreeMap::from([("test1".to_string(), key.clone()), ("test2".to_string(), key.clone())]);
    let records = fixtures::experiment_records(&key);
    let report = experiment_report(&records, &keys, &ReportOptions::default()).map_err(|e| e.to_string())?;
    ensure!(report.alpha == 0.01, "alpha {}", report.alpha);
    let (a, b) = (&report.groups[0], &report.groups[1]);
    ensure!(a.n == 10 && b.n == 10, "group sizes {} and {}", a.n, b.n);
    for g in [a, b] {
        let t = g.score_change.test.as_ref().ok_or("no test result")?;
        ensure!(t.method == Method::Exact, "{:?}: method {:?}", g.group, t.method);
    }
    ensure!(b.score_change.significant, "group B p = {}", b.score_change.p_value);
    ensure!(close(b.score_change.p_value, 2.0 / 1024.0, 1e-12), "group B p = {}", b.score_change.p_value);
    ensure!(!a.score_change.significant, "group A p = {}", a.score_change.p_value);
    Ok(format!("A p = {:.4}, B p = {:.4}", a.score_change.p_value, b.score_change.p_value))
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Check);
    let criteria: [Criterion; 12] = [
        ("FRES golden values", Duration::from_secs(1), fres_golden),
        ("TTR exactness", Duration::from_secs(1), ttr_exact),
        ("syllable heuristic", Duration::from_secs(1), syllables),
        ("tag round trip", Duration::from_secs(5), tag_round_trip),
        ("Wilcoxon signed-rank", Duration::from_secs(10), wilcoxon_exact),
        ("Mann-Whitney U", Duration::from_secs(30), mann_whitney_exact),
        ("Cohen's kappa", Duration::from_secs(1), kappa_hand),
        ("balanced split", Duration::from_secs(60), split_brute_force),
        ("end-to-end mock run", Duration::from_secs(5), end_to_end),
        ("QA rate rendering", Duration::from_secs(1), qa_rounding),
        ("determinism", Duration::from_secs(5), determinism),
        ("synthetic experiment", Duration::from_secs(5), synthetic_experiment),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
