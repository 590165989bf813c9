use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PROFILE: &str = r#"
name = "tiny"
seed = 3
label = "patents"

[synth]
n = 3000
seed = 5

[gbdt]
iterations = 60
depth = 4

[features]
k_concepts = 16
k_abstract = 16

[embedder]
dimension = 32
"#;

fn write_profile(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("profile.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str], profile: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transimpact"))
        .args(args)
        .arg("--profile")
        .arg(profile)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn train_without_featurize_is_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let out = dir.path().join("run");
    ok(&cli(&["synth"], &profile, &out));
    ok(&cli(&["ingest"], &profile, &out));
    let o = cli(&["train"], &profile, &out);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing artifact from stage `featurize`"), "{err}");
    assert!(!out.join("train").exists());
}

#[test]
fn ingest_without_synth_is_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let o = cli(&["ingest"], &profile, &dir.path().join("run"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage `synth`"));
}

#[test]
fn stages_run_standalone_and_report_overlays_three_tiers() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let out = dir.path().join("run");
    for stage in ["synth", "ingest", "featurize", "train", "eval"] {
        ok(&cli(&[stage], &profile, &out));
    }
    let temporal = ok(&cli(&["temporal"], &profile, &out));
    assert!(temporal.contains("on m3"), "{temporal}");
    assert!(temporal.contains("1990-1999") && temporal.contains("2010-2017"));
    let tables = ok(&cli(&["report"], &profile, &out));
    for tier in ["| m1 |", "| m2 |", "| m3 |", "Temporal audit"] {
        assert!(tables.contains(tier), "{tables}");
    }
    let roc = std::fs::read_to_string(out.join("report/roc_overlay.svg")).unwrap();
    assert_eq!(roc.matches(r#"<polyline class="curve""#).count(), 3);
    let pr = std::fs::read_to_string(out.join("report/pr_overlay.svg")).unwrap();
    assert_eq!(pr.matches(r#"<polyline class="curve""#).count(), 3);

    // Δ-label CSV: at most ten points per year, one row per point.
    let csv = std::fs::read_to_string(out.join("temporal/delta_labels.csv")).unwrap();
    let mut per_year = BTreeMap::new();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    for row in &rows {
        let year: i32 = row.split(',').nth(1).unwrap().parse().unwrap();
        *per_year.entry(year).or_insert(0) += 1;
    }
    assert!(per_year.values().all(|&c| c <= 10));
    let svg = std::fs::read_to_string(out.join("temporal/delta.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="point""#).count(), rows.len());
}

#[test]
fn single_tier_flag_limits_work() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let out = dir.path().join("run");
    let tables = ok(&cli(&["run", "--tier", "m1"], &profile, &out));
    assert!(tables.contains("| m1 |") && !tables.contains("| m3 |"));
    assert!(!out.join("featurize/m3").exists());
    // No M3 tier, so nothing is embedded.
    assert!(!out.join("featurize/embeddings.jsonl").exists());
}

#[test]
fn rerun_is_byte_identical_and_every_file_is_traceable() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&cli(&["run"], &profile, &a));
    ok(&cli(&["run"], &profile, &b));
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        assert!(v == &fb[k], "{} differs", k.display());
    }

    let hash = {
        let s = std::fs::read_to_string(a.join("ingest/stage.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["provenance"]["profile_hash"].as_str().unwrap().to_string()
    };
    for (k, v) in &fa {
        let name = k.to_string_lossy();
        if name.ends_with(".jsonl") {
            if name.ends_with("embeddings.jsonl") {
                continue; // cache, not an artifact
            }
            // Record files cannot carry a header; their stage.json lists a digest.
            let stage = k.components().next().unwrap().as_os_str().to_string_lossy().to_string();
            let seal = std::fs::read_to_string(a.join(&stage).join("stage.json")).unwrap();
            let rel = k.strip_prefix(&stage).unwrap().to_string_lossy().to_string();
            assert!(seal.contains(&format!("\"{rel}\"")), "{name} not sealed");
            continue;
        }
        let text = String::from_utf8_lossy(v);
        assert!(text.contains(&hash), "{name} lacks the profile hash");
        assert!(text.contains("seed") && text.contains("stage_version"), "{name} lacks provenance");
    }
}

#[test]
fn seed_flag_changes_hash_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), PROFILE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&cli(&["synth"], &profile, &a));
    ok(&cli(&["ingest"], &profile, &a));
    ok(&cli(&["synth", "--seed", "4"], &profile, &b));
    ok(&cli(&["ingest", "--seed", "4"], &profile, &b));
    let read = |d: &Path| std::fs::read_to_string(d.join("ingest/split_manifest.json")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert!(read(&b).contains("\"seed\": 4"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let bad = write_profile(dir.path(), "name = \"x\"\nlabel = \"patents\"\nunknown_key = 1\n");
    assert_eq!(cli(&["run"], &bad, &out).status.code(), Some(2));
    let no_corpus = write_profile(dir.path(), "name = \"x\"\nlabel = \"patents\"\n");
    assert_eq!(cli(&["ingest"], &no_corpus, &out).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_transimpact")).args(["run", "--tier", "m9"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_corpus_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "name = \"x\"\nlabel = \"trials\"\n[corpus]\npath = \"absent.jsonl\"\n");
    let o = cli(&["ingest"], &profile, &dir.path().join("run"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.jsonl"));
}

#[test]
fn strict_flag_rejects_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "{\"id\": \"p1\", \"year\": 2001, \"open_access\": \"closed\"}\nnot json\n").unwrap();
    let profile = write_profile(dir.path(), "name = \"x\"\nlabel = \"patents\"\n[corpus]\npath = \"c.jsonl\"\n");
    let out = dir.path().join("run");
    let o = cli(&["ingest", "--strict"], &profile, &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
