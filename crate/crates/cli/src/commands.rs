use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use textmut::augment::{augment_samples, RrConfig};
use textmut::dataset::{import_coco, label_counts, split, SampleReader};
use textmut::metrics::{run_tasks, EvalReport, Metric, ScoreRecord, TaskId};
use textmut::mutation::{mutate_dataset, OperatorSet};
use textmut::scorer::{mock_score, serve_lines, ScoreRequest, ScorerSpec, SCORER_ENV};
use textmut::{load_lexicon, read_jsonl, write_jsonl, Dataset, Label, Sample, WordClasses};

use crate::error::{Context, Failure, Result};
use crate::manifest::{sidecar, FileDigest, RunManifest};
use crate::{
    AugmentArgs, Command, EvaluateArgs, ImportCocoArgs, LexiconArgs, MutateArgs, ReplayArgs,
    ScoreArgs, SplitArgs,
};

/// Samples held in memory at once by the streaming commands.
const CHUNK: usize = 8192;

const MANIFEST_SUFFIX: &str = ".manifest.json";

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::ImportCoco(a) => import(a, argv),
        Command::Split(a) => split_cmd(a, argv),
        Command::Mutate(a) => mutate(a, argv),
        Command::Augment(a) => augment(a, argv),
        Command::Score(a) => score(a, argv),
        Command::Evaluate(a) => evaluate(a, argv),
        Command::ServeMock => {
            let stdin = io::stdin();
            let stdout = io::stdout();
            serve_lines(stdin.lock(), stdout.lock(), mock_score)
                .map(drop)
                .map_err(|e| Failure::new(crate::error::Exit::Data, e))
        }
        Command::Replay(a) => replay(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir.display().to_string())?;
    }
    Ok(BufWriter::new(
        File::create(path).at(path.display().to_string())?,
    ))
}

/// Reads samples in chunks and hands each chunk, with the ordinal of its first
/// sample, to `f`.
fn for_each_chunk(path: &Path, mut f: impl FnMut(Vec<Sample>, u64) -> Result<()>) -> Result<u64> {
    let mut reader = SampleReader::open(path)?;
    let mut offset = 0u64;
    loop {
        let chunk: Vec<Sample> = reader
            .by_ref()
            .take(CHUNK)
            .map(|r| r.map(|(_, s)| s))
            .collect::<std::result::Result<_, _>>()
            .at(path.display().to_string())?;
        if chunk.is_empty() {
            return Ok(offset);
        }
        let n = chunk.len() as u64;
        f(chunk, offset)?;
        offset += n;
    }
}

fn write_samples<W: Write>(w: &mut W, samples: &[Sample]) -> io::Result<()> {
    for s in samples {
        w.write_all(s.to_json_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn summarize(what: &str, ds: &Dataset) {
    let counts = label_counts(ds);
    let per: Vec<String> = counts.iter().map(|(l, n)| format!("{n} {l}")).collect();
    eprintln!(
        "{what}: {} samples in {} groups ({})",
        ds.len(),
        ds.groups().len(),
        per.join(", ")
    );
}

fn import(a: ImportCocoArgs, argv: &[String]) -> Result<()> {
    let mut m = RunManifest::new("import-coco", argv);
    let mut samples = Vec::new();
    for (path, label) in [(&a.human, Label::Human), (&a.machine, Label::Machine)] {
        if let Some(path) = path {
            samples.extend(import_coco(path, label)?);
            m.input(path)?;
        }
    }
    let ds = Dataset::new(samples);
    // Re-reading through the checked loader catches colliding ids.
    let mut buf = Vec::new();
    ds.to_writer(&mut buf)?;
    Dataset::from_reader(&buf[..])?;

    write_jsonl(&ds, &a.output)?;
    summarize("imported", &ds);
    m.output(&a.output)?;
    m.write(&sidecar(&a.output, MANIFEST_SUFFIX))
}

fn split_cmd(a: SplitArgs, argv: &[String]) -> Result<()> {
    let ds = read_jsonl(&a.input)?;
    let parts = split(&ds, a.ratios, a.seed);
    fs::create_dir_all(&a.out_dir).at(a.out_dir.display().to_string())?;

    let mut m = RunManifest::new("split", argv);
    m.param("seed", a.seed)
        .param("ratios", [a.ratios.train, a.ratios.val, a.ratios.test]);
    m.input(&a.input)?;
    for (name, part) in [
        ("train", &parts.train),
        ("val", &parts.val),
        ("test", &parts.test),
    ] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        write_jsonl(part, &path)?;
        summarize(name, part);
        m.output(&path)?;
    }
    m.write(&a.out_dir.join(format!("split{MANIFEST_SUFFIX}")))
}

fn word_classes(args: &LexiconArgs, m: &mut RunManifest) -> Result<WordClasses> {
    let mut classes = WordClasses::default();
    let mut sources = BTreeMap::new();
    for (name, path, slot) in [
        ("articles", &args.articles, &mut classes.articles),
        ("adjectives", &args.adjectives, &mut classes.adjectives),
        ("adverbs", &args.adverbs, &mut classes.adverbs),
    ] {
        let source = match path {
            Some(p) => {
                *slot = load_lexicon(p)?;
                m.input(p)?;
                p.display().to_string()
            }
            None => "builtin".to_owned(),
        };
        sources.insert(name, format!("{source} ({} words)", slot.len()));
    }
    m.param("lexicons", sources);
    Ok(classes)
}

fn mutate(a: MutateArgs, argv: &[String]) -> Result<()> {
    let mut m = RunManifest::new("mutate", argv);
    let classes = word_classes(&a.lexicons, &mut m)?;
    let ops = a
        .ops
        .iter()
        .map(|op| Ok(OperatorSet::parse(op, &classes)?.with_policy(a.policy)))
        .collect::<Result<Vec<_>>>()?;
    m.param("ops", ops.iter().map(|o| o.id.as_str()).collect::<Vec<_>>())
        .param("filter", format!("{:?}", a.filter).to_lowercase())
        .param("policy", format!("{:?}", a.policy).to_lowercase());
    m.input(&a.input)?;

    let mut out = create(&a.output)?;
    let mut changed = 0usize;
    let total = for_each_chunk(&a.input, |chunk, _| {
        let before = Dataset::new(chunk);
        let mut ds = before.clone();
        for op in &ops {
            ds = mutate_dataset(&ds, op, a.filter);
        }
        changed += ds
            .iter()
            .zip(before.iter())
            .filter(|(x, y)| x.text != y.text)
            .count();
        write_samples(&mut out, &ds.samples).at(a.output.display().to_string())
    })?;
    out.flush().at(a.output.display().to_string())?;
    eprintln!("mutated {changed} of {total} samples");
    m.output(&a.output)?;
    m.write(&sidecar(&a.output, MANIFEST_SUFFIX))
}

fn augment(a: AugmentArgs, argv: &[String]) -> Result<()> {
    let cfg = RrConfig::new(a.seed)
        .with_cap(a.cap)?
        .with_probability(a.prob)?;
    let mut m = RunManifest::new("augment", argv);
    m.param("seed", a.seed)
        .param("cap", a.cap.to_string())
        .param("prob", a.prob.to_string());
    m.input(&a.input)?;

    let rr_path = sidecar(&a.output, ".rr.jsonl");
    let mut out = create(&a.output)?;
    let mut rr = create(&rr_path)?;
    let (mut applied, mut removed) = (0usize, 0usize);
    let total = for_each_chunk(&a.input, |chunk, offset| {
        for (sample, record) in augment_samples(&chunk, &cfg, offset) {
            applied += record.r as usize;
            removed += record.n;
            out.write_all(sample.to_json_line().as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .at(a.output.display().to_string())?;
            serde_json::to_writer(&mut rr, &record)?;
            rr.write_all(b"\n").at(rr_path.display().to_string())?;
        }
        Ok(())
    })?;
    out.flush().at(a.output.display().to_string())?;
    rr.flush().at(rr_path.display().to_string())?;
    eprintln!("augmented {total} samples: coin hit {applied}, {removed} words removed");
    m.output(&a.output)?.output(&rr_path)?;
    m.write(&sidecar(&a.output, MANIFEST_SUFFIX))
}

fn score(a: ScoreArgs, argv: &[String]) -> Result<()> {
    let spec = ScorerSpec::parse(&a.scorer)?;
    let scorer = spec.build(Duration::from_secs(a.timeout));
    let mut m = RunManifest::new("score", argv);
    if let Ok(v) = std::env::var(SCORER_ENV) {
        m.env.insert(SCORER_ENV.to_owned(), v);
    }
    m.param("scorer", scorer.describe())
        .param("batch_size", a.batch_size)
        .param("timeout_secs", a.timeout);
    m.input(&a.input)?;

    let mut out = create(&a.output)?;
    let mut reader = SampleReader::open(&a.input)?;
    let mut n = 0usize;
    loop {
        let batch: Vec<Sample> = reader
            .by_ref()
            .take(a.batch_size as usize)
            .map(|r| r.map(|(_, s)| s))
            .collect::<std::result::Result<_, _>>()
            .at(a.input.display().to_string())?;
        if batch.is_empty() {
            break;
        }
        let requests: Vec<ScoreRequest> = batch
            .iter()
            .map(|s| ScoreRequest::new(&s.id, &s.text))
            .collect();
        let responses = scorer
            .score_batch(&requests)
            .at(format!("scoring batch starting at sample {}", n + 1))?;
        for (s, r) in batch.iter().zip(responses) {
            serde_json::to_writer(&mut out, &ScoreRecord::new(r.id, r.score, s.label))?;
            out.write_all(b"\n").at(a.output.display().to_string())?;
        }
        n += batch.len();
    }
    out.flush().at(a.output.display().to_string())?;
    eprintln!("scored {n} samples with {}", scorer.describe());
    m.output(&a.output)?;
    m.write(&sidecar(&a.output, MANIFEST_SUFFIX))
}

fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let file = File::open(path).at(path.display().to_string())?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.at(path.display().to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord =
            serde_json::from_str(&line).at(format!("{}:{}", path.display(), k + 1))?;
        out.push(rec);
    }
    Ok(out)
}

fn parse_machine_arg(s: &str) -> Result<(TaskId, PathBuf)> {
    let (task, path) = s
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("--machine {s:?}: expected TASK=PATH")))?;
    let task = task
        .parse::<TaskId>()
        .map_err(|e| Failure::config(format!("--machine {s:?}: {e}")))?;
    Ok((task, PathBuf::from(path)))
}

fn evaluate(a: EvaluateArgs, argv: &[String]) -> Result<()> {
    let machine = a
        .machine
        .iter()
        .map(|s| parse_machine_arg(s))
        .collect::<Result<Vec<_>>>()?;
    let mut m = RunManifest::new("evaluate", argv);
    let human: Vec<ScoreRecord> = read_scores(&a.human)?
        .into_iter()
        .filter(|r| r.label == Label::Human)
        .collect();
    m.input(&a.human)?;

    let mut sets: BTreeMap<TaskId, Vec<ScoreRecord>> = BTreeMap::new();
    let mut sources: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (task, path) in machine {
        let records = read_scores(&path)?;
        sets.entry(task)
            .or_default()
            .extend(records.into_iter().filter(|r| r.label == Label::Machine));
        sources
            .entry(task.to_string())
            .or_default()
            .push(path.display().to_string());
        m.input(&path)?;
    }
    m.param("threshold", a.threshold).param("tasks", &sources);

    if human.is_empty() {
        return Err(Failure::data(format!(
            "{}: no human-labeled scores",
            a.human.display()
        )));
    }
    let report = EvalReport::new(run_tasks(&human, &sets, a.threshold)?);
    if a.table {
        print!("{}", report.to_table());
        let means: Vec<String> = Metric::ALL
            .iter()
            .filter_map(|&metric| {
                Some(format!(
                    "{} {:.4}",
                    metric.name(),
                    report.mutation_average(metric)?
                ))
            })
            .collect();
        if !means.is_empty() {
            println!("mutation average: {}", means.join(", "));
        }
    }
    match &a.output {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(report.to_json().as_bytes())
                .and_then(|_| w.flush())
                .at(path.display().to_string())?;
            m.output(path)?;
            m.write(&sidecar(path, MANIFEST_SUFFIX))
        }
        None if !a.table => {
            print!("{}", report.to_json());
            Ok(())
        }
        None => Ok(()),
    }
}

fn replay(a: ReplayArgs) -> Result<()> {
    let m = RunManifest::read(&a.manifest)?;
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_owned()
        } else {
            m.cwd.join(p)
        }
    };

    for recorded in &m.inputs {
        let now = FileDigest::of(&resolve(&recorded.path))?;
        if now.sha256 != recorded.sha256 {
            return Err(Failure::data(format!(
                "input {} changed since the recorded run",
                recorded.path.display()
            )));
        }
    }

    let exe = std::env::current_exe().at("locating the textmut executable")?;
    let status = std::process::Command::new(exe)
        .args(&m.argv)
        .current_dir(&m.cwd)
        .envs(&m.env)
        .status()
        .at(format!("re-running {}", m.command))?;
    if !status.success() {
        return Err(Failure::data(format!(
            "replayed {} failed with {status}",
            m.command
        )));
    }

    let mut mismatches = 0;
    for recorded in &m.outputs {
        let now = FileDigest::of(&resolve(&recorded.path))?;
        let same = now.sha256 == recorded.sha256;
        mismatches += !same as usize;
        println!(
            "{} {}",
            if same { "identical" } else { "DIFFERS  " },
            recorded.path.display()
        );
    }
    if mismatches > 0 {
        return Err(Failure::data(format!(
            "{mismatches} output(s) differ from the recorded run"
        )));
    }
    Ok(())
}
