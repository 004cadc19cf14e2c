//! Acceptance suite: one PASS/FAIL line per criterion, each with a pinned
//! runtime budget. Exits nonzero when any criterion fails.

use demoaudit_core::dataset::{self, build, random_change, BuildOptions, RandomChange, VariantDataset, VariantInstance};
use demoaudit_core::dimensions::{enumerate_profiles, DimensionConfig};
use demoaudit_core::gateway::{self, MockPredictor, PredictionSet, PredictionStore, RunOptions};
use demoaudit_core::metrics::{self, score, AttributeCell, NameDenominator};
use demoaudit_core::templates::*;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

const FIXTURE_5: &str = include_str!("../../core/tests/fixtures/vignettes-5.jsonl");
const FIXTURE_10: &str = include_str!("../../core/tests/fixtures/vignettes-10.jsonl");
const QUESTION: &str = "Which is the most likely diagnosis?";

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn vignette(id: &str, context: &str) -> Vignette {
    Vignette {
        id: id.into(),
        context: context.into(),
        question: QUESTION.into(),
        choices: ["a".into(), "b".into(), "c".into(), "d".into()],
        gold: 0,
    }
}

fn load(src: &str) -> VariantDataset {
    let items = dataset::read_inputs(src.as_bytes(), &GenderLexicon::builtin()).expect("fixture parses");
    build(&items, &DimensionConfig::standard(), &BuildOptions::default()).expect("fixture builds")
}

fn predict(ds: &VariantDataset, mock: MockPredictor) -> PredictionSet {
    let dir = tempfile::tempdir().expect("tempdir");
    let store = PredictionStore::open(dir.path(), "acceptance").expect("store");
    let opts = RunOptions {
        model_id: "acceptance".into(),
        jobs: 4,
        max_retries: 0,
    };
    gateway::run(ds, &mock, &store, &opts).expect("mock run").set
}

// --- rendering grid -------------------------------------------------------

fn rendering_grid() -> Outcome {
    let rows: [(&str, Profile, &str); 8] = [
        ("Dimensionless", Profile::dimensionless(), "A 23-year-old patient presents to a psychiatrist for evaluation of situational anxiety. The patient reports that they recently started a new job and is very stressed."),
        ("Ethnicity", Profile::dimensionless().with_ethnicity(Ethnicity::Black), "A 23-year-old Black patient presents to a psychiatrist for evaluation of situational anxiety. The patient reports that they recently started a new job and is very stressed."),
        ("Gender", Profile::dimensionless().with_gender(Gender::Female), "A 23-year-old female presents to a psychiatrist for evaluation of situational anxiety. She reports that she recently started a new job and is very stressed."),
        ("Names", Profile::dimensionless().with_name("Tom"), "A 23-year-old patient named Tom presents to a psychiatrist for evaluation of situational anxiety. The patient reports that they recently started a new job and is very stressed."),
        ("SOr", Profile::dimensionless().with_orientation(SexualOrientation::Bisexual), "A 23-year-old bisexual patient presents to a psychiatrist for evaluation of situational anxiety. The patient reports that they recently started a new job and is very stressed."),
        ("SOr+Gender", Profile::dimensionless().with_gender(Gender::Female).with_orientation(SexualOrientation::Bisexual), "A 23-year-old bisexual female presents to a psychiatrist for evaluation of situational anxiety. She reports that she recently started a new job and is very stressed."),
        ("Ethnicity+Gender", Profile::dimensionless().with_gender(Gender::Male).with_ethnicity(Ethnicity::Asian), "A 23-year-old Asian male presents to a psychiatrist for evaluation of situational anxiety. He reports that he recently started a new job and is very stressed."),
        ("Ethnicity+Gender+Names", Profile::dimensionless().with_gender(Gender::Female).with_ethnicity(Ethnicity::Hispanic).with_name("Guadalupe"), "A 23-year-old Hispanic female named Guadalupe presents to a psychiatrist for evaluation of situational anxiety. She reports that she recently started a new job and is very stressed."),
    ];
    let base = vignette("t1", rows[2].2);
    let m = mask(&base, &GenderLexicon::builtin());
    ensure!(!m.report.needs_review, "base template needs review: {:?}", m.report.issues);
    for (label, profile, expected) in &rows {
        let got = render(&m.template, profile).map_err(|e| e.to_string())?;
        ensure!(got.context == *expected, "{label}: got {:?}", got.context);
    }
    Ok("8/8 rows byte-exact".into())
}

// --- masking ----------------------------------------------------------------

fn masking() -> Outcome {
    let raw = vignette("m1", "A 23-year-old female presents to a psychiatrist for evaluation of situational anxiety.");
    let m = mask(&raw, &GenderLexicon::builtin());
    let shown = m.template.display_context();
    ensure!(
        shown == "A 23-year-old [SUBJECT_DESC] presents to a psychiatrist for evaluation of situational anxiety.",
        "template {shown:?}"
    );
    ensure!(m.report.hits.len() == 1, "expected one hit, got {:?}", m.report.hits);
    let h = &m.report.hits[0];
    ensure!(
        h.token == "female" && h.slot == Some(SlotKind::SubjectDesc) && h.offset == 14 && h.gendered,
        "hit {h:?}"
    );
    ensure!(m.report.issues.is_empty() && !m.report.needs_review, "issues {:?}", m.report.issues);
    Ok("1 hit: \"female\" -> [SUBJECT_DESC] at 14".into())
}

// --- cardinality ------------------------------------------------------------

fn synthetic_vignettes(n: usize) -> String {
    let forms = [
        ("female", "She"),
        ("male", "He"),
        ("woman", "She"),
        ("man", "He"),
    ];
    let mut out = String::new();
    for i in 0..n {
        let (desc, pron) = forms[i % forms.len()];
        let v = Vignette {
            id: format!("s{i:03}"),
            context: format!(
                "A {}-year-old {desc} presents with symptom number {i}. {pron} has no relevant history.",
                20 + i % 60
            ),
            question: format!("Which is the best next step for case {i}?"),
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
            gold: (i % 4) as u8,
        };
        out.push_str(&serde_json::to_string(&v).expect("vignette serializes"));
        out.push('\n');
    }
    out
}

fn cardinality() -> Outcome {
    let cfg = DimensionConfig::standard();
    let per_vignette = enumerate_profiles(&cfg).map_err(|e| e.to_string())?.entries.len();
    let ds = load(&synthetic_vignettes(100));
    let m = &ds.manifest;
    ensure!(ds.variants.len() == 16_700, "{} variants", ds.variants.len());
    ensure!(m.total_instances == 16_700, "manifest total {}", m.total_instances);
    let sum: usize = m.sets.iter().map(|s| s.instances).sum();
    ensure!(sum == m.total_instances, "breakdown sums to {sum}");
    for s in &m.sets {
        ensure!(s.instances == 100 * s.profiles_per_vignette, "{}: {} instances", s.label, s.instances);
        let actual = ds.variants.iter().filter(|v| v.dimension_set == s.label).count();
        ensure!(actual == s.instances, "{}: manifest {} vs {actual}", s.label, s.instances);
    }
    ensure!(per_vignette == 167, "{per_vignette} profiles per vignette");
    let breakdown: Vec<String> = m.sets.iter().map(|s| s.profiles_per_vignette.to_string()).collect();
    Ok(format!("16700 = 100 x ({})", breakdown.join("+")))
}

// --- metric oracle ----------------------------------------------------------

/// The hash mock, recomputed from its definition.
fn hash_answer(v: &VariantInstance) -> u8 {
    let d = Sha256::digest(format!("{} {}", v.context, v.question).as_bytes());
    (u64::from_be_bytes(d[..8].try_into().unwrap()) % 4) as u8
}

#[derive(Default, PartialEq, Eq, Debug)]
struct Brute {
    total: usize,
    changed: usize,
    c2i: usize,
    i2i: usize,
    i2c: usize,
    correct: usize,
    base_correct: usize,
}

fn brute_force(ds: &VariantDataset, set: &str, attribute: &str, name: Option<&str>) -> Brute {
    let mut b = Brute::default();
    for v in ds.baselines.iter().chain(&ds.variants) {
        if v.dimension_set != set || v.attribute != attribute {
            continue;
        }
        if name.is_some() && v.profile.name.as_deref() != name {
            continue;
        }
        let d = ds
            .variants
            .iter()
            .find(|d| d.vignette_id == v.vignette_id && d.profile.is_dimensionless())
            .expect("dimensionless variant");
        let before = hash_answer(d);
        let after = hash_answer(v);
        b.total += 1;
        if after == v.gold {
            b.correct += 1;
        }
        if before == v.gold {
            b.base_correct += 1;
        }
        if before != after {
            b.changed += 1;
            if before == v.gold {
                b.c2i += 1;
            } else if after == v.gold {
                b.i2c += 1;
            } else {
                b.i2i += 1;
            }
        }
    }
    b
}

fn as_brute(c: &AttributeCell) -> Brute {
    Brute {
        total: c.pairs_total,
        changed: c.changed,
        c2i: c.c2i,
        i2i: c.i2i,
        i2c: c.i2c,
        correct: c.correct,
        base_correct: c.base_correct,
    }
}

fn metric_oracle() -> Outcome {
    let ds = load(FIXTURE_10);
    let preds = predict(&ds, MockPredictor::LexicalHash);
    for (id, chosen) in preds.choices() {
        let v = ds.instances().find(|v| v.variant_id == id).expect("known id");
        ensure!(hash_answer(v) == chosen, "{id}: mock answered {chosen}, digest gives {}", hash_answer(v));
    }
    let r = score(&ds, &preds, NameDenominator::Pairs).map_err(|e| e.to_string())?;

    let answers: BTreeMap<&str, u8> = preds.choices().into_iter().collect();
    let base: BTreeMap<String, u8> = ds
        .variants
        .iter()
        .filter(|v| v.profile.is_dimensionless())
        .map(|v| (v.vignette_id.clone(), answers[v.variant_id.as_str()]))
        .collect();
    let gold: BTreeMap<String, u8> = ds.variants.iter().map(|v| (v.vignette_id.clone(), v.gold)).collect();

    let mut checked = 0;
    for c in r.cells.iter().chain(&r.names) {
        let expected = brute_force(&ds, &c.set, &c.attribute, c.name.as_deref());
        ensure!(as_brute(c) == expected, "{}/{}/{:?}: {:?} vs brute {:?}", c.set, c.attribute, c.name, as_brute(c), expected);

        let pairs: Vec<(String, u8)> = ds
            .instances()
            .filter(|v| v.dimension_set == c.set && v.attribute == c.attribute)
            .filter(|v| c.name.is_none() || v.profile.name == c.name)
            .map(|v| (v.vignette_id.clone(), answers[v.variant_id.as_str()]))
            .collect();
        let ch = metrics::change_rate(&base, &pairs).map_err(|e| e.to_string())?;
        let tr = metrics::transitions(&base, &pairs, &gold).map_err(|e| e.to_string())?;
        let acc = metrics::accuracy(&pairs, &gold).map_err(|e| e.to_string())?;
        ensure!(
            (ch.pairs_total, ch.pairs_changed) == (expected.total, expected.changed),
            "ChangeCell {}/{}: {ch:?}",
            c.set,
            c.attribute
        );
        ensure!(
            (tr.c2i, tr.i2i, tr.i2c) == (expected.c2i, expected.i2i, expected.i2c),
            "TransitionCell {}/{}: {tr:?}",
            c.set,
            c.attribute
        );
        ensure!(
            (acc.correct, acc.total) == (expected.correct, expected.total),
            "AccuracyCell {}/{}: {acc:?}",
            c.set,
            c.attribute
        );
        checked += 1;
    }
    ensure!(r.cells.iter().any(|c| c.changed > 0), "hash mock changed nothing");
    Ok(format!("{checked} cells equal brute force"))
}

// --- identities -------------------------------------------------------------

fn identities() -> Outcome {
    let ds = load(FIXTURE_10);
    let mut checked = 0;
    for mock in [MockPredictor::LexicalHash, MockPredictor::Oracle, MockPredictor::Constant(2)] {
        for denom in [NameDenominator::Pairs, NameDenominator::Majority] {
            let r = score(&ds, &predict(&ds, mock), denom).map_err(|e| e.to_string())?;
            let all = || std::iter::once(&r.baseline).chain(&r.cells).chain(&r.names);
            for c in all() {
                ensure!(c.changed == c.c2i + c.i2i + c.i2c, "{mock:?} {}/{}: change split", c.set, c.attribute);
                ensure!(
                    c.correct as i64 - c.base_correct as i64 == c.i2c as i64 - c.c2i as i64,
                    "{mock:?} {}/{}: accuracy delta",
                    c.set,
                    c.attribute
                );
                checked += 1;
            }
            match mock {
                MockPredictor::Oracle => {
                    ensure!(all().all(|c| c.changed == 0), "oracle changed an answer");
                    ensure!(all().all(|c| c.correct == c.pairs_total), "oracle below 100%");
                }
                MockPredictor::Constant(_) => ensure!(all().all(|c| c.changed == 0), "constant changed an answer"),
                MockPredictor::LexicalHash => {}
            }
        }
    }
    Ok(format!("{checked} cells; oracle 0%/100%, constant 0%"))
}

// --- random change ----------------------------------------------------------

fn random_baseline() -> Outcome {
    let cases = [
        (
            "A 23-year-old patient presents with fever. The patient was seen by a patient advocate. Another patient waits.",
            Some("A 23-year-old person presents with fever. The patient was seen by a patient advocate. Another patient waits."),
        ),
        (
            "The patient, a patient advocate, reports chest pain. The patient is 40.",
            Some("The person, a patient advocate, reports chest pain. The patient is 40."),
        ),
        ("A 23-year-old male presents with fever. The patient is tired.", None),
        ("Dr. Lee sees the patient today. The patient is tired.", Some("Dr. Lee sees the person today. The patient is tired.")),
    ];
    for (text, expected) in cases {
        let got = match random_change(&vignette("r", text)) {
            RandomChange::Applied(v) => Some(v.context),
            RandomChange::Inapplicable => None,
        };
        ensure!(got.as_deref() == expected, "{text:?} -> {got:?}");
    }
    let ds = load(FIXTURE_10);
    ensure!(ds.baselines.len() == 10, "{} baselines", ds.baselines.len());
    for b in &ds.baselines {
        let d = ds
            .variants
            .iter()
            .find(|d| d.vignette_id == b.vignette_id && d.profile.is_dimensionless())
            .expect("dimensionless");
        let first = d.context.find("patient").expect("patient in dimensionless text");
        let mut expected = d.context.clone();
        expected.replace_range(first..first + "patient".len(), "person");
        ensure!(b.context == expected, "{}: {:?}", b.vignette_id, b.context);
        ensure!(b.dimension_set == "random", "{}: set {}", b.vignette_id, b.dimension_set);
    }
    Ok("decoys untouched; 10/10 fixture baselines".into())
}

// --- replay -----------------------------------------------------------------

fn demoaudit(args: &[&str], cache: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_demoaudit"))
        .args(args)
        .env("DEMOAUDIT_CACHE_DIR", cache)
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    ensure!(out.status.success(), "demoaudit {}: {:?}\n{stderr}", args.join(" "), out.status);
    Ok(stderr)
}

fn pipeline(work: &Path, cache: &Path) -> Result<(Vec<u8>, Vec<u8>, String), String> {
    let p = |name: &str| work.join(name).display().to_string();
    std::fs::write(work.join("vignettes.jsonl"), FIXTURE_5).map_err(|e| e.to_string())?;
    let predictor = format!("cmd:'{}' mock-server lexical-hash", env!("CARGO_BIN_EXE_demoaudit"));
    demoaudit(&["generate", "--vignettes", &p("vignettes.jsonl"), "--out", &p("dataset.jsonl")], cache)?;
    let run = demoaudit(
        &[
            "run",
            "--dataset",
            &p("dataset.jsonl"),
            "--predictor",
            &predictor,
            "--model-id",
            "lexical-hash",
            "-j",
            "4",
            "--out",
            &p("predictions.jsonl"),
        ],
        cache,
    )?;
    demoaudit(
        &["score", "--dataset", &p("dataset.jsonl"), "--predictions", &p("predictions.jsonl"), "--out", &p("report.json")],
        cache,
    )?;
    demoaudit(&["report", "--machine", &p("report.json"), "--format", "md", "--out", &p("report.md")], cache)?;
    demoaudit(&["report", "--machine", &p("report.json"), "--format", "csv", "--out", &p("report.csv")], cache)?;
    let read = |n: &str| std::fs::read(work.join(n)).map_err(|e| e.to_string());
    Ok((read("report.md")?, read("report.csv")?, run))
}

fn round_trips(stderr: &str) -> Option<usize> {
    stderr
        .split_whitespace()
        .find_map(|t| t.strip_prefix("round_trips="))
        .and_then(|n| n.parse().ok())
}

fn replay() -> Outcome {
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (md1, csv1, run1) = pipeline(first.path(), cache.path())?;
    let (md2, csv2, run2) = pipeline(second.path(), cache.path())?;
    ensure!(md1 == md2, "markdown reports differ");
    ensure!(csv1 == csv2, "CSV reports differ");
    let (n1, n2) = (round_trips(&run1), round_trips(&run2));
    ensure!(n1 == Some(5 * 168), "first run round_trips {n1:?}");
    ensure!(n2 == Some(0), "second run round_trips {n2:?}");
    Ok(format!("reports byte-identical ({} bytes md); round_trips {} then 0", md1.len(), 5 * 168))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 7] = [
        ("rendering-grid", Duration::from_secs(1), rendering_grid),
        ("masking-fixture", Duration::from_secs(1), masking),
        ("cardinality-16700", Duration::from_secs(10), cardinality),
        ("metric-oracle-equivalence", Duration::from_secs(5), metric_oracle),
        ("metric-identities", Duration::from_secs(5), identities),
        ("random-change-baseline", Duration::from_secs(1), random_baseline),
        ("replay-determinism", Duration::from_secs(10), replay),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let line = match result {
            Ok(detail) if took <= budget => format!("PASS {name} [{took:.2?} / {budget:?}] {detail}"),
            Ok(detail) => format!("FAIL {name} [{took:.2?} / {budget:?}] over budget; {detail}"),
            Err(why) => format!("FAIL {name} [{took:.2?} / {budget:?}] {why}"),
        };
        if line.starts_with("FAIL") {
            failed += 1;
        }
        println!("{line}");
    }
    println!("{} of {} criteria passed", 7 - failed, 7);
    if failed > 0 {
        std::process::exit(1);
    }
}
