use std::io::{self, BufRead, Write};
use std::path::Path;

use transcreate_core::pipeline::TranscreationRecord;
use transcreate_core::validation::{
    qa_report, review_apply, review_open, QueueEntry, QueueLock, ReviewDecision, ReviewError, ReviewQueue, Verdict,
};

use super::{emit_json, emit_jsonl, read_jsonl};
use crate::args::{ApplyArgs, QaReportArgs, ReviewAction, ReviewArgs, VerdictKind};
use crate::exit::{CmdResult, Failure, OrExit, USAGE, VALIDATION};

fn review_failure(e: ReviewError) -> Failure {
    let code = match e {
        ReviewError::QueueExists(_) | ReviewError::Locked(_) | ReviewError::Io { .. } => USAGE,
        _ => VALIDATION,
    };
    Failure::new(code, e)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn run(args: ReviewArgs) -> CmdResult {
    match args.action {
        ReviewAction::Open { input, queue, force } => {
            let records: Vec<TranscreationRecord> = read_jsonl(&input)?;
            for r in records.iter().filter(|r| !r.is_complete()) {
                eprintln!("{}: record is not complete", r.record_id);
            }
            let q = review_open(&records, &queue, force).map_err(review_failure)?;
            log::info!("queue {} opened with {} entries", queue.display(), q.entries.len());
            Ok(())
        }
        ReviewAction::Apply(a) => apply(a),
        ReviewAction::Session { queue, reviewer } => {
            let stdin = io::stdin();
            session(&queue, &reviewer, stdin.lock(), io::stdout().lock(), now)
        }
        ReviewAction::Export { queue, out } => {
            let q = ReviewQueue::load(&queue).map_err(review_failure)?;
            emit_jsonl(Some(&out), &q.reviewed_items())
        }
    }
}

/// 1-based question numbers to 0-based indices.
fn question_indices(numbers: &[usize]) -> CmdResult<Vec<usize>> {
    numbers
        .iter()
        .map(|&n| n.checked_sub(1).ok_or_else(|| Failure::usage("question numbers start at 1")))
        .collect()
}

fn apply(a: ApplyArgs) -> CmdResult {
    let verdict = match a.verdict {
        VerdictKind::Accept => Verdict::Accept,
        VerdictKind::Reject => Verdict::Reject {
            reason: a.reason.clone().unwrap_or_default(),
        },
        VerdictKind::Edit => {
            let new_passage = match (&a.passage, &a.passage_file) {
                (Some(p), _) => p.clone(),
                (None, Some(path)) => std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?
                    .trim_end()
                    .to_string(),
                (None, None) => return Err(Failure::usage("--verdict edit needs --passage or --passage-file")),
            };
            Verdict::Edit { new_passage }
        }
    };
    let _lock = QueueLock::acquire(&a.queue).map_err(review_failure)?;
    let mut queue = ReviewQueue::load(&a.queue).map_err(review_failure)?;
    let decision = ReviewDecision::new(&a.item, verdict, &a.reviewer, a.timestamp.clone().unwrap_or_else(now))
        .with_unanswerable(question_indices(&a.unanswerable)?);
    review_apply(&mut queue, decision).map_err(review_failure)?;
    queue.save(&a.queue).map_err(review_failure)
}

pub fn qa(args: QaReportArgs) -> CmdResult {
    let queue = ReviewQueue::load(&args.queue).map_err(review_failure)?;
    let report = qa_report(&queue).map_err(review_failure)?;
    emit_json(args.out.as_deref(), &report)
}

fn show(out: &mut impl Write, entry: &QueueEntry, position: usize, pending: usize) -> io::Result<()> {
    writeln!(out, "== {} ({position} of {pending} pending) ==", entry.item.id)?;
    writeln!(out, "{}\n", entry.item.passage)?;
    for (i, q) in entry.item.questions.iter().enumerate() {
        writeln!(out, "{}. {}", i + 1, q.stem)?;
        for (k, o) in q.options.iter().enumerate() {
            let mark = if k == q.answer_index { '*' } else { ' ' };
            writeln!(out, "  {mark}{}. {o}", (b'A' + k as u8) as char)?;
        }
    }
    Ok(())
}

fn ask(input: &mut impl BufRead, out: &mut impl Write, prompt: &str) -> io::Result<Option<String>> {
    write!(out, "{prompt}")?;
    out.flush()?;
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim_end_matches(['\n', '\r']).to_string()))
}

fn ask_unanswerable(input: &mut impl BufRead, out: &mut impl Write, count: usize) -> io::Result<Option<Vec<usize>>> {
    loop {
        let Some(line) = ask(input, out, "Unanswerable question numbers (comma-separated, blank for none): ")? else {
            return Ok(None);
        };
        let parsed: Result<Vec<usize>, _> = line
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<usize>)
            .collect();
        match parsed {
            Ok(ns) if ns.iter().all(|&n| (1..=count).contains(&n)) => {
                return Ok(Some(ns.into_iter().map(|n| n - 1).collect()))
            }
            _ => writeln!(out, "Enter numbers between 1 and {count}.")?,
        }
    }
}

/// Interactive review of every pending entry. The queue is saved after
/// each decision, so quitting keeps what was decided.
pub fn session(
    queue_path: &Path,
    reviewer: &str,
    mut input: impl BufRead,
    mut out: impl Write,
    clock: impl Fn() -> String,
) -> CmdResult {
    let _lock = QueueLock::acquire(queue_path).map_err(review_failure)?;
    let mut queue = ReviewQueue::load(queue_path).map_err(review_failure)?;
    let pending: Vec<String> = queue.pending().map(|e| e.item.id.clone()).collect();
    let io_err = |e: io::Error| Failure::new(USAGE, e);
    let mut decided = 0;
    'entries: for (n, id) in pending.iter().enumerate() {
        let entry = queue.entries.iter().find(|e| &e.item.id == id).expect("pending entry").clone();
        show(&mut out, &entry, n + 1, pending.len()).map_err(io_err)?;
        let verdict = loop {
            let Some(choice) = ask(&mut input, &mut out, "[a]ccept, [e]dit, [r]eject, [s]kip, [q]uit? ").map_err(io_err)?
            else {
                break 'entries;
            };
            match choice.trim() {
                "a" => break Verdict::Accept,
                "e" => {
                    writeln!(out, "New passage; finish with a line containing only '.':").map_err(io_err)?;
                    let mut lines = Vec::new();
                    loop {
                        let Some(l) = ask(&mut input, &mut out, "").map_err(io_err)? else {
                            break 'entries;
                        };
                        if l == "." {
                            break;
                        }
                        lines.push(l);
                    }
                    let new_passage = lines.join("\n").trim().to_string();
                    if new_passage.is_empty() {
                        writeln!(out, "Empty passage ignored.").map_err(io_err)?;
                        continue;
                    }
                    break Verdict::Edit { new_passage };
                }
                "r" => {
                    let Some(reason) = ask(&mut input, &mut out, "Reason: ").map_err(io_err)? else {
                        break 'entries;
                    };
                    if reason.trim().is_empty() {
                        writeln!(out, "A reason is required.").map_err(io_err)?;
                        continue;
                    }
                    break Verdict::Reject { reason };
                }
                "s" => continue 'entries,
                "q" => break 'entries,
                _ => writeln!(out, "Please answer a, e, r, s or q.").map_err(io_err)?,
            }
        };
        let Some(flags) = ask_unanswerable(&mut input, &mut out, entry.item.questions.len()).map_err(io_err)? else {
            break;
        };
        let decision = ReviewDecision::new(id, verdict, reviewer, clock()).with_unanswerable(flags);
        review_apply(&mut queue, decision).map_err(review_failure)?;
        queue.save(queue_path).map_err(review_failure)?;
        decided += 1;
    }
    let left = queue.pending().count();
    writeln!(out, "{decided} decided, {left} pending.").or_exit(USAGE)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use transcreate_core::fixtures::sample_items;

    #[test]
    fn scripted_session() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        ReviewQueue::new(sample_items(3)).save(&path).unwrap();
        let script = "a\n2\nx\ne\nIn 1997, everything changed.\nIt rained.\n.\n\nr\noff topic\n1,3\n";
        let mut out = Vec::new();
        session(&path, "rev", script.as_bytes(), &mut out, || "T".into()).unwrap();
        let q = ReviewQueue::load(&path).unwrap();
        assert_eq!(q.pending().count(), 0);
        assert_eq!(q.log.len(), 3);
        assert_eq!(q.log[0].unanswerable, [1]);
        assert!(matches!(q.log[1].verdict, Verdict::Edit { .. }));
        assert_eq!(q.log[2].unanswerable, [0, 2]);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("Please answer"));
        assert!(text.contains("3 decided, 0 pending."));
        assert!(!path.with_extension("json.lock").exists());
    }

    #[test]
    fn quit_keeps_progress() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        ReviewQueue::new(sample_items(2)).save(&path).unwrap();
        session(&path, "rev", "a\n\nq\n".as_bytes(), Vec::new(), || "T".into()).unwrap();
        assert_eq!(ReviewQueue::load(&path).unwrap().pending().count(), 1);
    }
}
