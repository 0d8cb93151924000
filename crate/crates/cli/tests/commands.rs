use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use cast_cli::planted::planted_corpus;
use cast_core::relation::{rules_for, RelationInventory};
use cast_core::Mode;

fn cast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cast")).args(args).output().expect("binary runs")
}

fn records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_single_story() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.jsonl");
    let o = cast(&["generate", "--mock", "--prompt", "[Char_1] went hiking.", "--length", "5", "--mode", "single", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &records(&out)[0];
    assert_eq!(r["sentences"].as_array().unwrap().len(), 5);
    assert_eq!(r["mode"], "single");
    assert_eq!(r["seed"], 0);
    assert_eq!(r["configHash"].as_str().unwrap().len(), 16);
    assert_eq!(r["telemetry"]["perSentence"].as_array().unwrap().len(), 4);
}

#[test]
fn decoding_switch_changes_config_hash() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let base = ["generate", "--mock", "--prompt", "[Char_1] went hiking.", "--length", "3"];
    assert!(cast(&[&base[..], &["--out", s(&a)]].concat()).status.success());
    assert!(cast(&[&base[..], &["--out", s(&b), "--no-decoding-control"]].concat()).status.success());
    assert_ne!(records(&a)[0]["configHash"], records(&b)[0]["configHash"]);
}

#[test]
fn seeded_runs_are_identical() {
    let dir = TempDir::new().unwrap();
    let prompts = write(&dir, "prompts.txt", "[Char_1] gave [Char_2] a burger.\n[Char_1] went to the beach.\nTom met Anna at the park.\n");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = cast(&["generate", "--mock", "--seed", "11", "--prompt-file", s(&prompts), "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    assert_eq!(run("1.jsonl"), run("2.jsonl"));
}

#[test]
fn raw_names_are_tagged_and_restored() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.jsonl");
    assert!(cast(&["generate", "--mock", "--prompt", "Tom gave Anna a burger.", "--length", "3", "--out", s(&out)]).status.success());
    let r = &records(&out)[0];
    assert_eq!(r["mode"], "multi");
    assert_eq!(r["nameMap"]["[Char_1]"], "Tom");
    assert_eq!(r["nameMap"]["[Char_2]"], "Anna");
    assert!(!r["rendered"].as_str().unwrap().contains("[Char_"));
}

#[test]
fn failed_prompts_give_partial_exit() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.jsonl");
    let o = cast(&["generate", "--mock", "--prompt", "[Char_1] went hiking.", "--prompt", "It rained.", "--length", "2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let rs = records(&out);
    assert_eq!(rs.len(), 2);
    assert!(rs[0].get("error").is_none());
    assert!(rs[1]["error"].as_str().unwrap().contains("no character tag"));
}

#[test]
fn invalid_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"mu": 1.0}"#);
    let o = cast(&["generate", "--mock", "--config", s(&cfg), "--prompt", "[Char_1] ran."]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu must be in [0,1)"));
    let o = cast(&["generate", "--prompt", "[Char_1] ran."]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mining_ranks_planted_rules_first() {
    let dir = TempDir::new().unwrap();
    let inv = RelationInventory::builtin();
    let p = planted_corpus(20, 5, inv.relations());
    let corpus = write(&dir, "corpus.tsv", &p.corpus_text());
    let fixture = write(&dir, "fixture.json", &p.fixture_json());
    let out = dir.path().join("mined.jsonl");
    let o = cast(&["mine-pairs", "--mock", "--fixtures", s(&fixture), "--corpus", s(&corpus), "--sample", "500", "--beam", "10", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds corpus"));
    let rs = records(&out);
    for r in &rs[..8] {
        assert_eq!(r["matchRate"], 1.0);
        assert!(p.is_planted(&r["contextRelation"].as_str().unwrap().into(), &r["continuationRelation"].as_str().unwrap().into()));
    }
    assert!(rs[8]["matchRate"].as_f64().unwrap() < 0.5);
    assert_eq!(rs[0]["rank"], 1);
}

#[test]
fn bad_corpus_names_the_line() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.tsv");
    assert_eq!(cast(&["mine-pairs", "--mock", "--corpus", s(&missing)]).status.code(), Some(2));
    let corpus = write(&dir, "c.tsv", "[Char_1] ran.\t[Char_1] fell.\n[Char_1] sat.\t\t[Char_1] rose.\n");
    let o = cast(&["build-finetune-data", "--mock", "--corpus", s(&corpus)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn finetune_data_reproduces_worked_example() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "c.tsv", "[Char_1] was upset with [Char_2].\tBecause of this, [Char_2] apologized.\n");
    let out = dir.path().join("pairs.jsonl");
    assert!(cast(&["build-finetune-data", "--mock", "--corpus", s(&corpus), "--out", s(&out)]).status.success());
    let rs = records(&out);
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0]["input"], "* [Char_2] * [Char_1] was upset with [Char_2].");
    assert_eq!(rs[0]["target"], "Because of this, [Char_2] apologized.");
    assert_eq!(rs[0]["line"], 1);
}

#[test]
fn preprocess_feeds_finetune_data() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "raw.tsv", "Tom was upset with Anna.\tBecause of this, Anna apologized.\n");
    let tagged = dir.path().join("tagged.jsonl");
    assert!(cast(&["preprocess", "--corpus", s(&corpus), "--out", s(&tagged)]).status.success());
    let r = &records(&tagged)[0];
    assert_eq!(r["sentences"][0], "[Char_1] was upset with [Char_2].");
    assert_eq!(r["nameMap"]["[Char_2]"], "Anna");
    let out = dir.path().join("pairs.jsonl");
    assert!(cast(&["build-finetune-data", "--mock", "--corpus", s(&tagged), "--out", s(&out)]).status.success());
    assert_eq!(records(&out)[0]["input"], "* [Char_2] * [Char_1] was upset with [Char_2].");
}

#[test]
fn label_rl_marks_three_matches_coherent() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = ("[Char_1] gave [Char_2] a burger.", "[Char_1] ate the burger.", "[Char_1] slept.");
    let mut fx = serde_json::Map::new();
    let (mut fa, mut fb) = (serde_json::Map::new(), serde_json::Map::new());
    for rule in rules_for(Mode::Single).iter().take(3) {
        fa.insert(rule.context_relation.name().into(), serde_json::json!(["to eat"]));
        fb.insert(rule.continuation_relation.name().into(), serde_json::json!(["to eat"]));
    }
    fx.insert(a.into(), fa.into());
    fx.insert(b.into(), fb.into());
    fx.insert(c.into(), serde_json::json!({}));
    let fixture = write(&dir, "fx.json", &Value::Object(fx).to_string());
    let pairs = write(&dir, "pairs.tsv", &format!("{a}\t{b}\n{a}\t{c}\n"));
    let out = dir.path().join("labels.jsonl");
    let o = cast(&["label-rl", "--mock", "--fixtures", s(&fixture), "--pairs", s(&pairs), "--loss", "2.0", "--iteration", "10", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rs = records(&out);
    assert_eq!((rs[0]["label"].as_u64(), rs[0]["matchCount"].as_u64()), (Some(1), Some(3)));
    assert_eq!(rs[0]["penalty"], 0.0);
    assert_eq!((rs[1]["label"].as_u64(), rs[1]["matchCount"].as_u64()), (Some(0), Some(0)));
    assert_eq!(rs[1]["penalty"], 1.0);
    assert_eq!(rs[1]["rlLoss"], 3.0);
}

#[test]
fn diagnose_reads_generate_output() {
    let dir = TempDir::new().unwrap();
    let prompts = write(&dir, "p.txt", "[Char_1] gave [Char_2] a burger.\n[Char_1] went to the beach.\n");
    let (on, off) = (dir.path().join("on.jsonl"), dir.path().join("off.jsonl"));
    assert!(cast(&["generate", "--mock", "--prompt-file", s(&prompts), "--length", "4", "--out", s(&on)]).status.success());
    assert!(cast(&["generate", "--mock", "--prompt-file", s(&prompts), "--length", "4", "--no-decoding-control", "--out", s(&off)]).status.success());
    let rows = dir.path().join("rows.jsonl");
    let o = cast(&["diagnose", "--input", &format!("with={}", s(&on)), "--input", &format!("without={}", s(&off)), "--out", s(&rows)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("Setting"));
    assert!(table.contains("Self-BLEU-2") && table.contains("with") && table.contains("without"));
    let rs = records(&rows);
    assert_eq!(rs.len(), 2);
    assert_eq!(rs[0]["stories"], 2);
    assert!(rs[0]["selfBleu2"].as_f64().is_some());
}

#[test]
fn diagnose_rejects_malformed_line() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.jsonl", "\n{not json}\n");
    let o = cast(&["diagnose", "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
