mod common;

use std::fs;
use std::path::{Path, PathBuf};

use cothinker::cli::run_cli;
use cothinker::transcript_io::read_transcript;
use cothinker_core::transcript::EventType;
use tempfile::TempDir;

struct Ws {
    dir: TempDir,
}

impl Ws {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("task.txt"), format!("{}\n", common::TASK)).unwrap();
        Ws { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut argv = vec!["cothinker".to_string()];
        argv.extend(args.iter().map(|a| a.replace("{dir}", self.dir.path().to_str().unwrap())));
        let code = run_cli(argv, &mut out);
        (code, String::from_utf8(out).unwrap())
    }
}

fn completions(path: &Path) -> usize {
    read_transcript(path).unwrap().completion_count()
}

#[test]
fn mock_run_is_repeatable_and_has_28_completions() {
    let ws = Ws::new();
    let (c1, out1) = ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--seed", "7", "--out", "{dir}/a.jsonl"]);
    let (c2, out2) = ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--seed", "7", "--out", "{dir}/b.jsonl"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(out1, out2);
    assert!(!out1.trim().is_empty());
    assert_eq!(fs::read(ws.path("a.jsonl")).unwrap(), fs::read(ws.path("b.jsonl")).unwrap());
    assert_eq!(completions(&ws.path("a.jsonl")), 28);
}

#[test]
fn reference_count_above_limit_is_config_error() {
    let ws = Ws::new();
    let (code, _) = ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--set", "N=9", "--set", "M=6", "--out", "{dir}/x.jsonl"]);
    assert_eq!(code, 3);
}

#[test]
fn config_file_and_overrides_layer() {
    let ws = Ws::new();
    fs::write(ws.path("cfg.json"), r#"{"agent_count": 4, "reference_count": 2, "round_count": 2}"#).unwrap();
    let (code, _) = ws.run(&[
        "run", "--task", "{dir}/task.txt", "--mock", "--config", "{dir}/cfg.json", "--set", "T=3", "--out", "{dir}/c.jsonl",
    ]);
    assert_eq!(code, 0);
    let t = read_transcript(ws.path("c.jsonl")).unwrap();
    let cfg = &t.run_start().unwrap().config;
    assert_eq!((cfg.agent_count, cfg.reference_count, cfg.round_count), (4, 2, 3));
    assert_eq!(t.completion_count(), 4 + 4 + 1 + 2 * 5 + 1);
}

#[test]
fn unknown_config_key_is_rejected() {
    let ws = Ws::new();
    fs::write(ws.path("cfg.json"), r#"{"agent_cuont": 4}"#).unwrap();
    let (code, _) = ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--config", "{dir}/cfg.json", "--out", "{dir}/c.jsonl"]);
    assert_eq!(code, 3);
}

#[test]
fn missing_task_file_is_file_error() {
    let ws = Ws::new();
    let (code, _) = ws.run(&["run", "--task", "{dir}/nope.txt", "--mock", "--out", "{dir}/c.jsonl"]);
    assert_eq!(code, 4);
}

#[test]
fn in_group_synthesis_flag() {
    let ws = Ws::new();
    let (code, _) = ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--synth-mode", "ingroup", "--out", "{dir}/g.jsonl"]);
    assert_eq!(code, 0);
    let t = read_transcript(ws.path("g.jsonl")).unwrap();
    assert!(t.events(EventType::Synthesize).next().unwrap().agent_id.is_some());
}

#[test]
fn netstats_reports_in_degree_three() {
    let ws = Ws::new();
    ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--out", "{dir}/a.jsonl"]);
    let (code, out) = ws.run(&["netstats", "{dir}/a.jsonl"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("in-degree histogram: 3:6\n").count(), 2, "{out}");
    let (code, json) = ws.run(&["netstats", "--json", "{dir}/a.jsonl"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rounds"].as_array().unwrap().len(), 2);
}

#[test]
fn netstats_zero_beta_has_no_rewiring() {
    let ws = Ws::new();
    ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--set", "beta=0", "--out", "{dir}/a.jsonl"]);
    let (code, out) = ws.run(&["netstats", "{dir}/a.jsonl"]);
    assert_eq!(code, 0);
    assert!(out.contains("overall rewired fraction: 0.0000"), "{out}");
}

#[test]
fn replay_clean_tampered_missing_malformed() {
    let ws = Ws::new();
    ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--out", "{dir}/a.jsonl"]);
    let (code, out) = ws.run(&["replay", "{dir}/a.jsonl"]);
    assert_eq!(code, 0);
    assert!(out.contains("0 divergences"));

    let text = fs::read_to_string(ws.path("a.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let idx = lines.iter().position(|l| l.contains("\"event\":\"Refine\"")).unwrap();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[idx]).unwrap();
    rec["completion_text"] = "tampered".into();
    lines[idx] = rec.to_string();
    fs::write(ws.path("t.jsonl"), lines.join("\n")).unwrap();
    assert_eq!(ws.run(&["replay", "{dir}/t.jsonl"]).0, 6);

    assert_eq!(ws.run(&["replay", "{dir}/missing.jsonl"]).0, 4);

    fs::write(ws.path("bad.jsonl"), "{not json}\n").unwrap();
    assert_eq!(ws.run(&["replay", "{dir}/bad.jsonl"]).0, 7);
    assert_eq!(ws.run(&["netstats", "{dir}/bad.jsonl"]).0, 7);
}

#[test]
fn baseline_completion_counts() {
    let ws = Ws::new();
    for (strategy, want) in [("io", 1), ("cot", 1), ("self-refine", 5), ("mad", 18), ("dmad", 18)] {
        let out = format!("{{dir}}/{strategy}.jsonl");
        let (code, _) = ws.run(&["baseline", "--strategy", strategy, "--task", "{dir}/task.txt", "--mock", "--out", &out]);
        assert_eq!(code, 0, "{strategy}");
        assert_eq!(completions(&ws.path(&format!("{strategy}.jsonl"))), want, "{strategy}");
        assert_eq!(ws.run(&["replay", &out]).0, 0, "{strategy}");
    }
}

#[test]
fn unknown_strategy_and_bad_flags_are_usage_errors() {
    let ws = Ws::new();
    assert_eq!(ws.run(&["baseline", "--strategy", "tot", "--task", "{dir}/task.txt", "--mock"]).0, 2);
    assert_eq!(ws.run(&["run", "--mock"]).0, 2);
    assert_eq!(ws.run(&["run", "--task", "{dir}/task.txt", "--mock", "--set", "novalue", "--out", "{dir}/z.jsonl"]).0, 2);
}

#[test]
fn empty_task_file_is_rejected() {
    let ws = Ws::new();
    fs::write(ws.path("blank.txt"), "  \n").unwrap();
    assert_eq!(ws.run(&["run", "--task", "{dir}/blank.txt", "--mock", "--out", "{dir}/z.jsonl"]).0, 2);
}

#[test]
fn backend_failure_leaves_partial_transcript() {
    let server = common::FakeServer::start(Box::new(|c, _| {
        if c.tag.as_deref() == Some("Refine") {
            (500, "down".into())
        } else {
            (200, common::mock_reply(c))
        }
    }));
    let ws = Ws::new();
    let cfg = format!(
        r#"{{"chat_backend": {{"kind": "openai", "api_base": "{0}", "model": "m"}},
            "embedding_backend": {{"kind": "openai", "api_base": "{0}"}},
            "max_retries": 1, "retry_base_delay_ms": 1}}"#,
        server.base
    );
    fs::write(ws.path("cfg.json"), cfg).unwrap();
    let (code, _) = ws.run(&["run", "--task", "{dir}/task.txt", "--config", "{dir}/cfg.json", "--out", "{dir}/p.jsonl"]);
    assert_eq!(code, 5);
    let text = fs::read_to_string(ws.path("p.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["event"], "Abort");
    assert!(text.contains("\"event\":\"RefSelect\""));
}
