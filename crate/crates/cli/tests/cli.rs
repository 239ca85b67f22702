use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../core/tests/fixtures/two_speaker_annotations.json"
);
const SCALES: [f64; 6] = [0.6, 0.8, 1.0, 1.25, 1.5, 1.75];

fn lipscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_tsv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

fn fixture_doc() -> Value {
    serde_json::from_str(&fs::read_to_string(FIXTURE).unwrap()).unwrap()
}

/// Writes one frame image per index of every fixture segment, cycling
/// through a few distinct patterns so neighbouring crops differ.
fn write_frames(root: &Path, doc: &Value) {
    let patterns: Vec<PathBuf> = (0..4u32)
        .map(|k| {
            let path = root.join(format!("pattern{k}.png"));
            fs::create_dir_all(root).unwrap();
            image::RgbImage::from_fn(1600, 640, |x, y| {
                image::Rgb([((x + k) % 256) as u8, ((y * 3 + k) % 256) as u8, ((x ^ y) % 256) as u8])
            })
            .save(&path)
            .unwrap();
            path
        })
        .collect();
    for seg in doc["segments"].as_array().unwrap() {
        let id = seg["segment_id"].as_str().unwrap();
        let total = seg["total_frames"].as_u64().unwrap() as usize;
        let dir = root.join(id);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..total {
            fs::copy(&patterns[i % patterns.len()], dir.join(format!("{i:06}.png"))).unwrap();
        }
    }
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn plan_two_segments_one_discarded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc = fixture_doc();
    doc["segments"]
        .as_array_mut()
        .unwrap()
        .retain(|s| s["segment_id"] != "S443_001");
    let ann = tmp.path().join("ann.json");
    fs::write(&ann, doc.to_string()).unwrap();
    let out = tmp.path().join("out");

    let run = lipscale(&["plan", "--annotations", p(&ann), "--out", p(&out)]);
    assert_eq!(status(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let plans: Vec<_> = fs::read_dir(out.join("plans")).unwrap().collect();
    assert_eq!(plans.len(), 6);
    let rows = read_tsv(&out.join("manifest.tsv"));
    assert_eq!(rows.len(), 7);
    let discards: Vec<_> = rows.iter().filter(|r| r[2] == "discarded").collect();
    assert_eq!(discards.len(), 1);
    assert_eq!(discards[0][0], "S443_002");
    assert_eq!(discards[0][3], "lip_rate_low");
    // Rows are sorted by segment, then by numeric scale.
    let scales: Vec<&str> = rows[..6].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(scales, ["0.6", "0.8", "1.0", "1.25", "1.5", "1.75"]);
}

#[test]
fn plan_empty_annotations_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let ann = tmp.path().join("empty.json");
    fs::write(&ann, "").unwrap();
    let out = tmp.path().join("out");
    let run = lipscale(&["plan", "--annotations", p(&ann), "--out", p(&out)]);
    assert_eq!(status(&run), 2);
    assert!(read_tsv(&out.join("manifest.tsv")).is_empty());
}

#[test]
fn plan_unreadable_input_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let run = lipscale(&["plan", "--annotations", p(&missing), "--out", p(tmp.path())]);
    assert_eq!(status(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("nope.json"));
}

#[test]
fn plan_single_scale_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, "scales = [1.0]\n").unwrap();
    let out = tmp.path().join("out");
    let run = lipscale(&[
        "plan",
        "--config",
        p(&config),
        "--annotations",
        FIXTURE,
        "--out",
        p(&out),
    ]);
    assert_eq!(status(&run), 0);
    let mut names: Vec<String> = fs::read_dir(out.join("plans"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["S217_001@1.0.json", "S443_001@1.0.json"]);
}

#[test]
fn plan_uses_config_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({"paths": {"input": FIXTURE, "output": out}}).to_string(),
    )
    .unwrap();
    assert_eq!(status(&lipscale(&["plan", "--config", p(&config)])), 0);
    assert_eq!(read_tsv(&out.join("manifest.tsv")).len(), 13);
}

#[test]
fn bad_config_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, "scales = []\n").unwrap();
    let run = lipscale(&[
        "plan",
        "--config",
        p(&config),
        "--annotations",
        FIXTURE,
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(status(&run), 1);
    assert_eq!(status(&lipscale(&["plan", "--bogus"])), 1);
    assert_eq!(status(&lipscale(&["--help"])), 0);
}

fn plan_and_frames(tmp: &Path) -> (PathBuf, PathBuf) {
    let plan_out = tmp.join("plan");
    assert_eq!(
        status(&lipscale(&["plan", "--annotations", FIXTURE, "--out", p(&plan_out)])),
        0
    );
    let frames = tmp.join("frames");
    write_frames(&frames, &fixture_doc());
    (plan_out, frames)
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn crop_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (plan_out, frames) = plan_and_frames(tmp.path());

    let a = tmp.path().join("crops_a");
    let b = tmp.path().join("crops_b");
    for (dir, jobs) in [(&a, "1"), (&b, "4")] {
        let run = lipscale(&[
            "crop",
            "--plans",
            p(&plan_out),
            "--frames",
            p(&frames),
            "--out",
            p(dir),
            "--jobs",
            jobs,
        ]);
        assert_eq!(status(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    // Deterministic regardless of worker count.
    let files_a = dir_bytes(&a);
    assert_eq!(files_a, dir_bytes(&b));
    assert_eq!(files_a.len(), 6 * (50 + 40) + 1);

    let rows = read_tsv(&a.join("crop_manifest.tsv"));
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[3] == "ok"));

    // Gap-filled frames are still cropped.
    let plan: Value =
        serde_json::from_str(&fs::read_to_string(plan_out.join("plans/S217_001@1.0.json")).unwrap()).unwrap();
    let filled: Vec<usize> = plan["filled"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.as_bool().unwrap())
        .map(|(i, _)| i)
        .collect();
    assert!(!filled.is_empty(), "fixture should contain a lip detection gap");
    for i in filled {
        let img = image::open(a.join(format!("S217_001@1.0/{i:06}.png"))).unwrap();
        assert_eq!((img.width(), img.height()), (112, 112));
    }
}

#[test]
fn crop_missing_frame_marks_segment_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let (plan_out, frames) = plan_and_frames(tmp.path());
    fs::remove_file(frames.join("S443_001/000007.png")).unwrap();
    let out = tmp.path().join("crops");
    let run = lipscale(&[
        "crop",
        "--plans",
        p(&plan_out.join("plans")),
        "--frames",
        p(&frames),
        "--out",
        p(&out),
    ]);
    assert_eq!(status(&run), 2);
    let rows = read_tsv(&out.join("crop_manifest.tsv"));
    for r in &rows {
        let expect = if r[0].starts_with("S443_001") { "failed" } else { "ok" };
        assert_eq!(r[3], expect, "{r:?}");
        if expect == "failed" {
            assert!(r[6].contains("missing frame 7"), "{r:?}");
            assert!(!out.join(&r[0]).exists());
        }
    }
}

#[test]
fn crop_source_sides_follow_scale_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let (plan_out, frames) = plan_and_frames(tmp.path());
    let out = tmp.path().join("crops");
    assert_eq!(
        status(&lipscale(&[
            "crop",
            "--plans",
            p(&plan_out),
            "--frames",
            p(&frames),
            "--out",
            p(&out)
        ])),
        0
    );

    let rows = read_tsv(&plan_out.join("manifest.tsv"));
    for seg in ["S217_001", "S443_001"] {
        let sides: Vec<f64> = rows
            .iter()
            .filter(|r| r[0] == seg)
            .map(|r| r[7].parse().unwrap())
            .collect();
        assert_eq!(sides.len(), 6);
        let plan: Value =
            serde_json::from_str(&fs::read_to_string(plan_out.join(format!("plans/{seg}@1.0.json"))).unwrap()).unwrap();
        let base = plan["side"].as_f64().unwrap();
        for (side, s) in sides.iter().zip(SCALES) {
            assert!((side - base * s).abs() <= 1.0, "{seg}: {side} vs {}", base * s);
            assert!(out.join(format!("{seg}@{}", lipscale_core::format_factor(s))).is_dir());
        }
    }
}

#[test]
fn crop_raw_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let plan_out = tmp.path().join("plan");
    assert_eq!(
        status(&lipscale(&["plan", "--annotations", FIXTURE, "--out", p(&plan_out)])),
        0
    );
    let frames = tmp.path().join("frames");
    for (seg, total) in [("S217_001", 50), ("S443_001", 40)] {
        fs::create_dir_all(frames.join(seg)).unwrap();
        for i in 0..total {
            fs::write(
                frames.join(format!("{seg}/{i:06}.rgb")),
                vec![(i * 5) as u8; 1600 * 640 * 3],
            )
            .unwrap();
        }
    }
    let out = tmp.path().join("crops");
    let run = lipscale(&[
        "crop",
        "--plans",
        p(&plan_out),
        "--frames",
        p(&frames),
        "--out",
        p(&out),
        "--raw-size",
        "1600x640",
    ]);
    assert_eq!(status(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(
        fs::read(out.join("S217_001@1.0/000003.rgb")).unwrap().len(),
        112 * 112 * 3
    );

    let missing_dims = lipscale(&[
        "crop",
        "--plans",
        p(&plan_out),
        "--frames",
        p(&frames),
        "--out",
        p(&out),
    ]);
    assert_eq!(status(&missing_dims), 3);
}

fn write_clip(root: &Path, name: &str, n: u32) {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    for i in 0..n {
        image::RgbImage::from_fn(16, 12, |x, y| {
            image::Rgb([(x * 15) as u8, (y * 20) as u8, (i * 9) as u8])
        })
        .save(dir.join(format!("{i:06}.png")))
        .unwrap();
    }
}

#[test]
fn perturb_writes_resampled_copies() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = tmp.path().join("clips");
    write_clip(&clips, "S217_001@1.0", 100);
    let out = tmp.path().join("out");
    assert_eq!(
        status(&lipscale(&["perturb", "--clips", p(&clips), "--out", p(&out)])),
        0
    );
    let rows = read_tsv(&out.join("perturb_manifest.tsv"));
    let counts: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[4].as_str())).collect();
    assert_eq!(
        counts,
        [
            ("S217_001@1.0@0.9", "111"),
            ("S217_001@1.0@1.0", "100"),
            ("S217_001@1.0@1.1", "91")
        ]
    );
    // Rate 1.0 is a byte-identical copy.
    for i in [0, 57, 99] {
        let name = format!("{i:06}.png");
        assert_eq!(
            fs::read(clips.join("S217_001@1.0").join(&name)).unwrap(),
            fs::read(out.join("S217_001@1.0@1.0").join(&name)).unwrap()
        );
    }
    // Output frame 10 at rate 1.1 is source frame floor(10 * 1.1) = 11.
    assert_eq!(
        fs::read(clips.join("S217_001@1.0/000011.png")).unwrap(),
        fs::read(out.join("S217_001@1.0@1.1/000010.png")).unwrap()
    );
}

#[test]
fn augment_is_seeded_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = tmp.path().join("clips");
    write_clip(&clips, "a", 3);
    write_clip(&clips, "b", 3);
    let run = |out: &Path, seed: &str| {
        let r = lipscale(&["augment", "--clips", p(&clips), "--out", p(out), "--seed", seed]);
        assert_eq!(status(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        fs::read_to_string(out.join("transforms.tsv")).unwrap()
    };
    let t1 = run(&tmp.path().join("o1"), "7");
    let t2 = run(&tmp.path().join("o2"), "7");
    let t3 = run(&tmp.path().join("o3"), "8");
    assert_eq!(t1, t2);
    assert_ne!(t1, t3);
    assert_eq!(dir_bytes(&tmp.path().join("o1")), dir_bytes(&tmp.path().join("o2")));
    assert_eq!(t1.lines().count(), 3);
}

#[test]
fn score_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let r = tmp.path().join("ref.txt");
    let h = tmp.path().join("hyp.txt");
    let out = tmp.path().join("cer.tsv");
    fs::write(&r, "u1\tabcd\nu2\thello\nu3\ta b\n").unwrap();

    fs::write(&h, "u1\tabcd\nu2\thello\nu3\tab\n").unwrap();
    assert_eq!(
        status(&lipscale(&["score", "--ref", p(&r), "--hyp", p(&h), "--out", p(&out)])),
        0
    );
    let rows = read_tsv(&out);
    assert_eq!(
        rows.last().unwrap(),
        &["TOTAL", "11", "11", "0", "0", "0", "0", "0.000000"]
    );

    // One substitution, one deletion, one insertion over 11 reference characters.
    fs::write(&h, "u1\tabxd\nu2\thelo\nu3\tabc\n").unwrap();
    assert_eq!(
        status(&lipscale(&["score", "--ref", p(&r), "--hyp", p(&h), "--out", p(&out)])),
        0
    );
    let rows = read_tsv(&out);
    assert_eq!(rows[0], ["u1", "4", "4", "1", "0", "0", "1", "0.250000"]);
    assert_eq!(rows[1], ["u2", "5", "4", "0", "1", "0", "1", "0.200000"]);
    assert_eq!(rows[2], ["u3", "2", "3", "0", "0", "1", "1", "0.500000"]);
    assert_eq!(rows[3], ["TOTAL", "11", "11", "1", "1", "1", "3", "0.272727"]);

    fs::write(&h, "u1\tabcd\nu3\tab\n").unwrap();
    let run = lipscale(&["score", "--ref", p(&r), "--hyp", p(&h)]);
    assert_eq!(status(&run), 2);
    assert!(String::from_utf8_lossy(&run.stderr).contains("`u2`"));
}

#[test]
fn rover_identical_systems() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "u1\tabc\nu2\thello\nu3\t\n";
    let mut args = vec!["rover".to_string()];
    for s in ["A", "B", "C"] {
        let f = tmp.path().join(format!("{s}.txt"));
        fs::write(&f, text).unwrap();
        args.extend(["--hyp".into(), format!("{s}={}", f.display())]);
    }
    let out = tmp.path().join("fused.txt");
    args.extend(["--out".into(), out.display().to_string()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(status(&lipscale(&args)), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
}

fn rover_triple(tmp: &Path) -> [String; 3] {
    let files = [
        ("A", "u1\tabc\nu2\tab\nu3\tabcd\nu4\ta\n"),
        ("B", "u1\tabd\nu2\tacb\nu3\tabd\nu4\tb\n"),
        ("C", "u1\txbc\nu2\tab\nu3\tacd\nu4\tb\n"),
    ];
    files.map(|(s, text)| {
        let f = tmp.join(format!("{s}.txt"));
        fs::write(&f, text).unwrap();
        format!("{s}={}", f.display())
    })
}

#[test]
fn rover_fixture_triple() {
    let tmp = tempfile::tempdir().unwrap();
    let [a, b, c] = rover_triple(tmp.path());
    let out = tmp.path().join("fused.txt");
    let wtn = tmp.path().join("wtn");
    let run = lipscale(&[
        "rover",
        "--hyp",
        &a,
        "--hyp",
        &b,
        "--hyp",
        &c,
        "--out",
        p(&out),
        "--dump-wtn",
        p(&wtn),
    ]);
    assert_eq!(status(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    // u1: per-slot majorities a, b, c.
    // u2: B's extra `c` becomes its own slot, outvoted by two NULLs.
    // u3: B skips `c`, C skips `b`; each is outvoted 2 to 1.
    // u4: single slot, `b` holds two votes against `a`.
    assert_eq!(fs::read_to_string(&out).unwrap(), "u1\tabc\nu2\tab\nu3\tabcd\nu4\tb\n");
    let net: Value = serde_json::from_str(&fs::read_to_string(wtn.join("u2.json")).unwrap()).unwrap();
    assert_eq!(net["slots"].as_array().unwrap().len(), 3);
}

#[test]
fn rover_tie_follows_merge_order() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.txt");
    let b = tmp.path().join("b.txt");
    fs::write(&a, "u\tx\n").unwrap();
    fs::write(&b, "u\ty\n").unwrap();
    let (sa, sb) = (format!("A={}", a.display()), format!("B={}", b.display()));
    let out = tmp.path().join("fused.txt");
    assert_eq!(
        status(&lipscale(&["rover", "--hyp", &sa, "--hyp", &sb, "--out", p(&out)])),
        0
    );
    assert_eq!(fs::read_to_string(&out).unwrap(), "u\tx\n");

    let table = tmp.path().join("cer.tsv");
    fs::write(&table, "A\t0.40\nB\t0.25\n").unwrap();
    let run = lipscale(&[
        "rover",
        "--hyp",
        &sa,
        "--hyp",
        &sb,
        "--cer-table",
        p(&table),
        "--out",
        p(&out),
    ]);
    assert_eq!(status(&run), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), "u\ty\n");
}

#[test]
fn rover_confidences() {
    let tmp = tempfile::tempdir().unwrap();
    let files = [("A", "u\tx\n", "u\t0.9\n"), ("B", "u\ty\n", "u\t0.2\n")];
    let mut args: Vec<String> = vec!["rover".into(), "--alpha".into(), "0.5".into()];
    for (s, text, conf) in files {
        let t = tmp.path().join(format!("{s}.txt"));
        let c = tmp.path().join(format!("{s}.conf"));
        fs::write(&t, text).unwrap();
        fs::write(&c, conf).unwrap();
        args.extend(["--hyp".into(), format!("{s}={}", t.display())]);
        args.extend(["--conf".into(), format!("{s}={}", c.display())]);
    }
    let out = tmp.path().join("fused.txt");
    args.extend([
        "--order".into(),
        "B,A".into(),
        "--out".into(),
        out.display().to_string(),
    ]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let run = lipscale(&args);
    assert_eq!(status(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    // Equal counts; confidence decides despite B merging first.
    assert_eq!(fs::read_to_string(&out).unwrap(), "u\tx\n");
}

#[test]
fn rover_mismatched_utterances() {
    let tmp = tempfile::tempdir().unwrap();
    let [a, b, _] = rover_triple(tmp.path());
    let short = tmp.path().join("short.txt");
    fs::write(&short, "u1\tabc\nu3\tabcd\nu9\tzz\n").unwrap();
    let s = format!("S={}", short.display());
    let out = tmp.path().join("fused.txt");

    let run = lipscale(&["rover", "--hyp", &a, "--hyp", &b, "--hyp", &s, "--out", p(&out)]);
    assert_eq!(status(&run), 3);
    let err = String::from_utf8_lossy(&run.stderr);
    for id in ["u2", "u4", "u9"] {
        assert!(err.contains(id), "{err}");
    }
    assert!(!out.exists());

    let run = lipscale(&[
        "rover",
        "--hyp",
        &a,
        "--hyp",
        &b,
        "--hyp",
        &s,
        "--intersect",
        "--out",
        p(&out),
    ]);
    assert_eq!(status(&run), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), "u1\tabc\nu3\tabcd\n");
}
