//! Writes the offline demo inputs into a directory (default `demo`):
//! items, interest profiles, a mock script covering interest-mode
//! transcreation and judging, answer keys and student records.
//!
//! ```text
//! cargo run -p transcreate --example demo_data -- demo
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Value};
use transcreate::assign::{assign_topics, AssignmentMode};
use transcreate::corpus::{save_items, TagSet, TopicTaxonomy};
use transcreate::fixtures;
use transcreate::io::{to_pretty_json, write_atomic};

fn write_json(path: PathBuf, value: &impl serde::Serialize) -> std::io::Result<()> {
    write_atomic(&path, to_pretty_json(value)?.as_bytes())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir)?;
    let tax = TopicTaxonomy::bundled();
    let tags = TagSet::bundled();

    let items = fixtures::sample_items(4);
    let profiles = fixtures::sample_profiles(3, &tax);
    let assignments = assign_topics(&profiles, &items, AssignmentMode::Interest, 0, &tax)?;
    let mut script: BTreeMap<String, Value> = serde_json::from_value(fixtures::mock_script(&items, &assignments, &tax, &tags))?;
    for a in &assignments {
        for (item, _) in items.iter().zip(&a.passages) {
            let labels: Vec<&str> = fixtures::bloom_labels(item).iter().map(|b| b.name()).collect();
            script.insert(format!("judge/{}@{}", item.id, a.student_id), json!(labels));
        }
    }

    save_items(&dir.join("items.jsonl"), &items)?;
    write_json(dir.join("profiles.json"), &profiles)?;
    write_json(dir.join("script.json"), &script)?;
    let key = fixtures::answer_key(4);
    save_items(&dir.join("key.jsonl"), &key)?;
    write_json(dir.join("students.json"), &fixtures::experiment_records(&key))?;
    println!("demo inputs written to {}", dir.display());
    Ok(())
}
