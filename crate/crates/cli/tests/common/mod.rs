#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use transcreate_core::assign::{assign_topics, AssignmentMode};
use transcreate_core::corpus::{save_items, ReadingItem, TagSet, TopicCode, TopicTaxonomy};
use transcreate_core::fixtures;

/// A scratch directory plus helpers for running the binary inside it.
pub struct Sandbox {
    pub dir: TempDir,
}

impl Sandbox {
    pub fn new() -> Self {
        Sandbox {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).expect("write fixture");
        p
    }

    pub fn write_json(&self, name: &str, value: &impl serde::Serialize) -> PathBuf {
        self.write(name, &serde_json::to_string_pretty(value).unwrap())
    }

    pub fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
    }

    pub fn items(&self, name: &str, items: &[ReadingItem]) -> PathBuf {
        let p = self.path(name);
        save_items(&p, items).unwrap();
        p
    }

    pub fn run<I, S>(&self, args: I) -> Output
    where
        I: IntoIterator<Item = S>,
        S: AsRef<std::ffi::OsStr>,
    {
        Command::new(env!("CARGO_BIN_EXE_transcreate"))
            .current_dir(self.dir.path())
            .env_remove("TRANSCREATE_API_KEY")
            .env_remove("RUST_LOG")
            .args(args)
            .output()
            .expect("spawn transcreate")
    }
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Mock script for `transcreate --target <target>` over `items`.
pub fn target_script(items: &[ReadingItem], target: &str) -> BTreeMap<String, Value> {
    let tax = TopicTaxonomy::bundled();
    let tags = TagSet::bundled();
    let t: TopicCode = target.parse().unwrap();
    let mut script = BTreeMap::new();
    for item in items {
        script.extend(fixtures::analysis_script(item, &tags));
        script.extend(fixtures::target_script(item, &t, None, &tax, &tags));
    }
    script
}

/// Profiles file plus a matching mock script for interest-mode runs.
pub fn interest_inputs(sb: &Sandbox, items: &[ReadingItem], students: usize) -> (PathBuf, PathBuf) {
    let tax = TopicTaxonomy::bundled();
    let tags = TagSet::bundled();
    let profiles = fixtures::sample_profiles(students, &tax);
    let assignments = assign_topics(&profiles, items, AssignmentMode::Interest, 0, &tax).unwrap();
    let script = fixtures::mock_script(items, &assignments, &tax, &tags);
    (sb.write_json("profiles.json", &profiles), sb.write_json("script.json", &script))
}
