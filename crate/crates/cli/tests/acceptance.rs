//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textmut::augment::{augment_dataset, RrConfig};
use textmut::dataset::{parse_coco, split, SplitRatios};
use textmut::lexicon::WordClasses;
use textmut::metrics::{auc, auc_exact, mutation_average, Metric, ScoreRecord, TaskId, TaskResult};
use textmut::mutation::{
    mutate_char, mutate_word, CharMutationSpec, OperatorSet, PresetId, WordMutationSpec,
};
use textmut::{detokenize, tokenize, Dataset, Label, Lexicon, Sample};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_unicode(rng: &mut ChaCha8Rng) -> String {
    const SPACES: &[char] = &[' ', ' ', ' ', '\t', '\n', '\r', '\u{a0}', '\u{3000}'];
    const JOINERS: &[char] = &['\'', '\u{2019}', '-'];
    const PUNCT: &[char] = &[
        '.', ',', '!', '?', ';', ':', '(', ')', '"', '\u{201c}', '\u{2014}', '\u{2026}', '/',
    ];
    const RANGES: &[(u32, u32)] = &[
        (0x41, 0x5A),
        (0x61, 0x7A),
        (0x30, 0x39),
        (0xC0, 0x24F),
        (0x370, 0x3FF),
        (0x400, 0x4FF),
        (0x300, 0x36F),
        (0x600, 0x6FF),
        (0x4E00, 0x9FFF),
        (0x1F300, 0x1FAFF),
    ];
    let len = rng.random_range(0..80);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 | 1 => *SPACES.choose(rng).unwrap(),
            2 => *JOINERS.choose(rng).unwrap(),
            3 => *PUNCT.choose(rng).unwrap(),
            4 => rng.random::<char>(),
            _ => {
                let (lo, hi) = *RANGES.choose(rng).unwrap();
                char::from_u32(rng.random_range(lo..=hi)).unwrap()
            }
        })
        .collect()
}

fn fixture_captions() -> Vec<String> {
    ["coco_human.json", "coco_machine.json"]
        .iter()
        .flat_map(|f| {
            let doc: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(fixtures().join(f)).unwrap()).unwrap();
            doc["annotations"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| a["caption"].as_str().unwrap().to_owned())
                .collect::<Vec<_>>()
        })
        .collect()
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut inputs: Vec<String> = (0..10_000).map(|_| random_unicode(&mut rng)).collect();
    let corpus = fixture_captions();
    let n_corpus = corpus.len();
    inputs.extend(corpus);
    let failures: Vec<&String> = inputs
        .iter()
        .filter(|s| detokenize(&tokenize(s)) != **s)
        .collect();
    let elapsed = start.elapsed();
    check(failures.is_empty(), || {
        format!("{} failures, first {:?}", failures.len(), failures[0])
    })?;
    check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "10000 random + {n_corpus} corpus texts, 0 failures, {elapsed:.2?}"
    ))
}

fn operators() -> Outcome {
    let apple = Lexicon::from_words("fruit", ["apple"]).unwrap();
    let glyph = CharMutationSpec::new('a', Some('\u{3b1}'), apple).unwrap();
    let got = mutate_char("apple", &glyph);
    check(got == "\u{3b1}pple", || {
        format!("char operator gave {got:?}")
    })?;

    let c = tokenize("this is an apple");
    let swap = WordMutationSpec::replacements([("apple", "orange")]).unwrap();
    let got = detokenize(&mutate_word(&c, &swap));
    check(got == "this is an orange", || {
        format!("word map gave {got:?}")
    })?;

    let got = detokenize(&mutate_word(
        &c,
        &WordMutationSpec::removal(Lexicon::articles()),
    ));
    check(got == "this is apple", || {
        format!("article removal gave {got:?}")
    })?;

    let classes = WordClasses::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let vocab: Vec<String> = (0..5000)
        .map(|_| {
            let n = rng.random_range(1..9);
            (0..n)
                .map(|_| rng.random_range(b'a'..=b'z') as char)
                .collect::<String>()
        })
        .filter(|w| {
            !(classes.articles.contains(w)
                || classes.adjectives.contains(w)
                || classes.adverbs.contains(w))
        })
        .collect();
    let seps = [" ", " ", ", ", ". ", "  ", "; ", " (", ") ", "\n"];
    for k in 0..1000 {
        let n = rng.random_range(0..25);
        let mut text: String = (0..n)
            .map(|_| {
                format!(
                    "{}{}",
                    vocab.choose(&mut rng).unwrap(),
                    seps.choose(&mut rng).unwrap()
                )
            })
            .collect();
        if k % 3 == 0 {
            text = text.to_uppercase();
        }
        for id in PresetId::ALL {
            let out = OperatorSet::preset(id, &classes).apply_text(&text);
            check(out == text, || {
                format!("{id} changed disjoint corpus {text:?} into {out:?}")
            })?;
        }
    }
    Ok("3 worked examples exact; identity on 1000 disjoint corpora x 9 presets".to_owned())
}

fn rr_corpus() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let words = [
        "a",
        "man",
        "riding",
        "the",
        "wave",
        "on",
        "top",
        "of",
        "surfboard",
        "big",
        "dog's",
        "well-known",
    ];
    let seps = [" ", " ", " ", ", ", ". ", "! "];
    (0..10_000)
        .map(|i| {
            let n = rng.random_range(0..40);
            let text: String = (0..n)
                .map(|_| {
                    format!(
                        "{}{}",
                        words.choose(&mut rng).unwrap(),
                        seps.choose(&mut rng).unwrap()
                    )
                })
                .collect();
            Sample::new(
                format!("s{i}"),
                format!("g{}", i / 5),
                text.trim_end(),
                Label::Machine,
            )
        })
        .collect()
}

fn to_bytes(ds: &Dataset, records: &[textmut::RrRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    ds.to_writer(&mut buf).unwrap();
    for r in records {
        serde_json::to_writer(&mut buf, r).unwrap();
        buf.push(b'\n');
    }
    buf
}

fn rr_bounds() -> Outcome {
    let ds = rr_corpus();
    let cfg = RrConfig::new(20_240_101);
    let (out, records) = augment_dataset(&ds, &cfg);
    let mut violations = 0;
    for (sample, rec) in ds.iter().zip(&records) {
        let len = tokenize(&sample.text).words.len();
        let bound = len / 3;
        let indices_ok = rec.removed_indices.len() == rec.n
            && rec.removed_indices.windows(2).all(|w| w[0] < w[1])
            && rec.removed_indices.iter().all(|&i| i < len);
        if rec.n > bound || !indices_ok || (rec.r == 0 && rec.n != 0) {
            violations += 1;
        }
    }
    check(violations == 0, || format!("{violations} bound violations"))?;

    let n = records.len() as f64;
    let skipped = records.iter().filter(|r| r.r == 0).count() as f64;
    let sigma = (n * 0.5 * 0.5).sqrt();
    check((skipped - n / 2.0).abs() <= 3.0 * sigma, || {
        format!("coin skipped {skipped} of {n}, outside 3 sigma ({sigma:.1})")
    })?;

    let (again, records_again) = augment_dataset(&ds, &cfg);
    check(
        to_bytes(&out, &records) == to_bytes(&again, &records_again),
        || "same-seed rerun differs".to_owned(),
    )?;
    Ok(format!(
        "10000 samples, 0 violations, skipped fraction {:.4} (3 sigma = {:.4}), rerun identical",
        skipped / n,
        3.0 * sigma / n
    ))
}

fn pairwise_oracle(records: &[ScoreRecord]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for p in records.iter().filter(|r| r.label == Label::Machine) {
        for q in records.iter().filter(|r| r.label == Label::Human) {
            pairs += 1.0;
            if p.score > q.score {
                wins += 1.0;
            } else if p.score == q.score {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = rng.random_range(2..=200);
        let quantized = k % 2 == 0;
        let mut records: Vec<ScoreRecord> = (0..n)
            .map(|i| {
                let score = if quantized {
                    rng.random_range(0..=10) as f64 / 10.0
                } else {
                    rng.random::<f64>()
                };
                let label = if rng.random_bool(0.5) {
                    Label::Machine
                } else {
                    Label::Human
                };
                ScoreRecord::new(format!("r{i}"), score, label)
            })
            .collect();
        records[0].label = Label::Machine;
        records[1].label = Label::Human;

        let got = auc(&records).map_err(|e| e.to_string())?;
        let want = pairwise_oracle(&records);
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 1e-12, || {
            format!("set {k}: {got} vs oracle {want}")
        })?;

        let swapped: Vec<ScoreRecord> = records
            .iter()
            .map(|r| ScoreRecord {
                label: match r.label {
                    Label::Human => Label::Machine,
                    Label::Machine => Label::Human,
                },
                ..r.clone()
            })
            .collect();
        let a = auc_exact(&records).unwrap();
        let b = auc_exact(&swapped).unwrap();
        check(
            b == a.complement() && a.twice_u + b.twice_u == a.twice_pairs,
            || format!("set {k}: swap gives {b:?}, expected complement of {a:?}"),
        )?;
    }
    Ok(format!(
        "1000 sets, max |diff| {worst:.1e}, label swap exact"
    ))
}

fn split_check() -> Outcome {
    let mut images = Vec::new();
    let mut anns = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for g in 0..10_000u64 {
        images.push(serde_json::json!({ "id": g }));
        for _ in 0..rng.random_range(1..=3) {
            let id = anns.len() as u64 + 1;
            anns.push(serde_json::json!({ "id": id, "image_id": g, "caption": format!("caption {id} of image {g}") }));
        }
    }
    let doc = serde_json::json!({ "images": images, "annotations": anns }).to_string();
    let ds = parse_coco(&doc, Label::Human).map_err(|e| e.to_string())?;
    let parts = split(&ds, SplitRatios::DEFAULT, 2024);

    let groups = |d: &Dataset| d.iter().map(|s| s.group_id.clone()).collect::<HashSet<_>>();
    let (tr, va, te) = (
        groups(&parts.train),
        groups(&parts.val),
        groups(&parts.test),
    );
    let counts = [tr.len(), va.len(), te.len()];
    check(counts == [7000, 1500, 1500], || {
        format!("group counts {counts:?}")
    })?;
    let leaked =
        tr.intersection(&va).count() + tr.intersection(&te).count() + va.intersection(&te).count();
    check(leaked == 0, || {
        format!("{leaked} groups leak across splits")
    })?;
    let total = parts.train.len() + parts.val.len() + parts.test.len();
    check(total == ds.len(), || {
        format!("{total} samples after split, {} before", ds.len())
    })?;
    Ok(format!("{} samples; groups {counts:?}; 0 leaked", ds.len()))
}

fn textmut(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_textmut"))
        .args(args)
        .current_dir(dir)
        .env_remove("TEXTMUT_SCORER")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!(
            "`textmut {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

/// Runs the whole pipeline in `dir` and returns every produced file's bytes.
fn pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let human = fixtures().join("coco_human.json");
    let machine = fixtures().join("coco_machine.json");
    textmut(
        dir,
        &[
            "import-coco",
            "--human",
            human.to_str().unwrap(),
            "--machine",
            machine.to_str().unwrap(),
            "-o",
            "all.jsonl",
        ],
    )?;
    textmut(
        dir,
        &["split", "all.jsonl", "--seed", "13", "--out-dir", "splits"],
    )?;
    textmut(
        dir,
        &[
            "score",
            "splits/test.jsonl",
            "--scorer",
            "mock",
            "-o",
            "scores/base.jsonl",
        ],
    )?;
    let mut eval = vec![
        "evaluate".to_owned(),
        "--human".to_owned(),
        "scores/base.jsonl".to_owned(),
        "--machine".to_owned(),
        "base=scores/base.jsonl".to_owned(),
    ];
    for id in PresetId::ALL {
        let mutated = format!("mutated/{id}.jsonl");
        let scores = format!("scores/{id}.jsonl");
        textmut(
            dir,
            &[
                "mutate",
                "splits/test.jsonl",
                "--op",
                id.as_str(),
                "-o",
                &mutated,
            ],
        )?;
        textmut(dir, &["score", &mutated, "--scorer", "mock", "-o", &scores])?;
        eval.extend(["--machine".to_owned(), format!("{id}={scores}")]);
    }
    eval.extend(["-o".to_owned(), "report.json".to_owned()]);
    textmut(dir, &eval.iter().map(String::as_str).collect::<Vec<_>>())?;

    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if !path.to_string_lossy().ends_with(".manifest.json") {
                // Manifests record the working directory, which differs per run.
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(files)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = pipeline(a.path())?;
    let elapsed = start.elapsed();

    let report: serde_json::Value =
        serde_json::from_slice(&files["report.json"]).map_err(|e| format!("report.json: {e}"))?;
    let tasks = report.as_object().ok_or("report is not an object")?;
    let expected: Vec<&str> = TaskId::ALL.iter().map(|t| t.as_str()).collect();
    let got: Vec<&str> = tasks.keys().map(String::as_str).collect();
    check(
        got.len() == 7 && expected.iter().all(|t| got.contains(t)),
        || format!("tasks {got:?}"),
    )?;
    for (task, row) in tasks {
        for m in ["auc", "acc", "f1"] {
            let v = row[m]
                .as_f64()
                .ok_or_else(|| format!("{task}.{m} missing"))?;
            check((0.0..=1.0).contains(&v), || format!("{task}.{m} = {v}"))?;
        }
    }
    check(elapsed < Duration::from_secs(30), || {
        format!("pipeline took {elapsed:?}")
    })?;

    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let again = pipeline(b.path())?;
    let differing: Vec<&String> = files
        .keys()
        .filter(|k| again.get(*k) != files.get(*k))
        .collect();
    check(differing.is_empty() && again.len() == files.len(), || {
        format!("rerun differs in {differing:?}")
    })?;
    Ok(format!(
        "7-task report, metrics in [0,1], {elapsed:.2?}, {} files identical on rerun",
        files.len()
    ))
}

fn aggregation() -> Outcome {
    const STATED: f64 = 0.1583;
    // Published per-task AUCs of the base detector, in task order.
    let row = [0.6381, 0.2488, 0.3695, 0.2591, 0.0676, 0.0676, 0.0714];
    let results: Vec<TaskResult> = TaskId::ALL
        .iter()
        .zip(row)
        .map(|(&task_id, v)| TaskResult {
            task_id,
            auc: v,
            acc: 0.5,
            f1: 0.5,
            n_pos: 1,
            n_neg: 1,
        })
        .collect();
    let mean = mutation_average(&results, Metric::Auc).ok_or("no mutation tasks")?;
    check((mean - STATED).abs() <= 5e-4, || {
        format!(
            "mutation-average AUC {mean:.5} differs from stated {STATED} by {:.5}",
            (mean - STATED).abs()
        )
    })?;
    Ok(format!("mutation-average AUC {mean:.5}"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("round-trip", round_trip),
        ("operator correctness", operators),
        ("random-removing bounds", rr_bounds),
        ("AUC oracle equivalence", auc_oracle),
        ("group split", split_check),
        ("end-to-end with mock scorer", end_to_end),
        ("aggregation sanity", aggregation),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    println!(
        "\nacceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
