//! generate → run → score → report over the vignette fixtures.

use demoaudit_core::dataset::{self, build, BuildOptions, VariantDataset};
use demoaudit_core::dimensions::DimensionConfig;
use demoaudit_core::gateway::{self, MockPredictor, PredictionSet, PredictionStore, RunOptions};
use demoaudit_core::metrics::{score, MachineReport, NameDenominator};
use demoaudit_core::report;
use demoaudit_core::templates::GenderLexicon;

const TEN: &str = include_str!("fixtures/vignettes-10.jsonl");

fn dataset(src: &str) -> VariantDataset {
    let items = dataset::read_inputs(src.as_bytes(), &GenderLexicon::builtin()).unwrap();
    build(&items, &DimensionConfig::standard(), &BuildOptions::default()).unwrap()
}

fn predict(ds: &VariantDataset, mock: MockPredictor) -> PredictionSet {
    let dir = tempfile::tempdir().unwrap();
    let model_id = format!("{mock:?}");
    let store = PredictionStore::open(dir.path(), &model_id).unwrap();
    let opts = RunOptions {
        model_id,
        jobs: 4,
        max_retries: 0,
    };
    gateway::run(ds, &mock, &store, &opts).unwrap().set
}

fn all_cells(r: &MachineReport) -> impl Iterator<Item = &demoaudit_core::metrics::AttributeCell> {
    std::iter::once(&r.baseline).chain(&r.cells).chain(&r.names)
}

#[test]
fn oracle_never_changes_and_is_always_right() {
    let ds = dataset(TEN);
    let r = score(&ds, &predict(&ds, MockPredictor::Oracle), NameDenominator::Pairs).unwrap();
    for c in all_cells(&r) {
        assert_eq!(c.changed, 0, "{}/{}", c.set, c.attribute);
        assert_eq!(c.correct, c.pairs_total);
        assert!(c.complete);
    }
    let md = report::to_markdown(&r);
    assert!(md.contains("| Model | Oracle |"));
    let acc_row = md
        .split("## Accuracy (%)")
        .nth(1)
        .unwrap()
        .lines()
        .find(|l| l.starts_with("| Oracle"))
        .unwrap();
    assert!(acc_row.split('|').skip(2).filter(|s| !s.trim().is_empty()).all(|s| s.trim() == "100.0"), "{acc_row}");
}

#[test]
fn constant_never_changes() {
    let ds = dataset(TEN);
    let r = score(&ds, &predict(&ds, MockPredictor::Constant(0)), NameDenominator::Pairs).unwrap();
    // gold 0 on v01, v04, v06, v10
    assert_eq!((r.baseline.correct, r.baseline.pairs_total), (4, 10));
    for c in all_cells(&r) {
        assert_eq!(c.changed, 0);
        assert_eq!(c.correct * 10, c.pairs_total * 4, "{}/{}", c.set, c.attribute);
    }
}

#[test]
fn identities_hold_for_the_hash_predictor() {
    let ds = dataset(TEN);
    let r = score(&ds, &predict(&ds, MockPredictor::LexicalHash), NameDenominator::Pairs).unwrap();
    r.check_identities().unwrap();
    assert!(r.cells.iter().any(|c| c.changed > 0));
    let m = score(&ds, &predict(&ds, MockPredictor::LexicalHash), NameDenominator::Majority).unwrap();
    m.check_identities().unwrap();
    for c in &m.names {
        assert_eq!(c.pairs_total, 10);
    }
}

#[test]
fn missing_predictions_mark_cells_incomplete() {
    let ds = dataset(TEN);
    let mut preds = predict(&ds, MockPredictor::LexicalHash);
    let dropped = ds
        .variants
        .iter()
        .find(|v| v.dimension_set == "gender" && v.attribute == "F")
        .unwrap()
        .variant_id
        .clone();
    preds.predictions.retain(|p| p.variant_id != dropped);
    let r = score(&ds, &preds, NameDenominator::Pairs).unwrap();
    let f = r.cells.iter().find(|c| c.set == "gender" && c.attribute == "F").unwrap();
    assert!(!f.complete);
    assert_eq!((f.missing, f.pairs_total), (1, 9));
    let m = r.cells.iter().find(|c| c.set == "gender" && c.attribute == "M").unwrap();
    assert!(m.complete);
    assert!(report::to_markdown(&r).contains("\\* incomplete"));
    let csv = report::to_csv(&[&r]);
    assert!(csv.lines().any(|l| l.contains(",gender,F,,9,") && l.contains(",1,false,")), "{csv}");
}

#[test]
fn report_columns_follow_the_audit_table_order() {
    let ds = dataset(TEN);
    let r = score(&ds, &predict(&ds, MockPredictor::LexicalHash), NameDenominator::Pairs).unwrap();
    let md = report::to_markdown(&r);
    let section: Vec<&str> = md
        .split("## Changed answers (%)")
        .nth(1)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with('|'))
        .collect();
    let group_row = section[2];
    let groups: Vec<&str> = group_row
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    assert_eq!(
        groups,
        ["*Random*", "*Gender*", "*Ethnicity*", "*SOr*", "*Gender+Ethnicity*", "*Gender+SOr*"]
    );
    let header = section[0];
    assert!(header.starts_with("| Model | Random | M | F | W | A-A | B | H | As | Hetero | Bi | Homo | M+W |"), "{header}");
}

#[test]
fn files_round_trip_and_rebuilds_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(TEN);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    dataset::write_dataset(&ds, &a).unwrap();
    dataset::write_dataset(&dataset(TEN), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let back = dataset::read_dataset(&a).unwrap();
    assert_eq!(back.manifest, ds.manifest);
    assert_eq!(back.variants, ds.variants);

    let preds = predict(&ds, MockPredictor::LexicalHash);
    let p = dir.path().join("p.jsonl");
    gateway::write_predictions(&preds, &p).unwrap();
    let r1 = score(&back, &gateway::read_predictions(&p).unwrap(), NameDenominator::Pairs).unwrap();
    let r2 = score(&ds, &preds, NameDenominator::Pairs).unwrap();
    assert_eq!(r1, r2);
    let json = serde_json::to_string(&r1).unwrap();
    let r3: MachineReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report::to_markdown(&r3), report::to_markdown(&r1));

    let rows = report::parse_csv(&report::to_csv(&[&r1])).unwrap();
    assert_eq!(rows.len(), 1 + r1.cells.len() + r1.names.len());
    for (row, cell) in rows.iter().zip(all_cells(&r1)) {
        assert_eq!(&row.to_cell(), cell);
    }
}

#[test]
fn self_diff_is_all_zero() {
    let ds = dataset(TEN);
    let r = score(&ds, &predict(&ds, MockPredictor::LexicalHash), NameDenominator::Pairs).unwrap();
    let d = demoaudit_core::metrics::diff_models(&r, &r).unwrap();
    let md = report::diff_markdown(&d);
    for line in md.lines().filter(|l| l.contains("Δ (B-A)")) {
        for v in line.split('|').skip(2).map(str::trim).filter(|s| !s.is_empty()) {
            assert!(v == "0.0" || v == "Δ (B-A)", "{line}");
        }
    }
    assert!(!md.contains("**"));
}
