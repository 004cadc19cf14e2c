use super::Pct;
use crate::metrics::{AttributeCell, MachineReport};
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "model_id,set,attribute,name,pairs_total,changed,c2i,i2i,i2c,correct,base_correct,missing,complete,change_rate,c2i_rate,i2i_rate,i2c_rate,accuracy";

/// One long-format CSV row: raw counts plus rounded rates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub model_id: String,
    pub set: String,
    pub attribute: String,
    pub name: String,
    pub pairs_total: usize,
    pub changed: usize,
    pub c2i: usize,
    pub i2i: usize,
    pub i2c: usize,
    pub correct: usize,
    pub base_correct: usize,
    pub missing: usize,
    pub complete: bool,
    pub change_rate: String,
    pub c2i_rate: String,
    pub i2i_rate: String,
    pub i2c_rate: String,
    pub accuracy: String,
}

impl CsvRow {
    fn from_cell(model_id: &str, c: &AttributeCell) -> Self {
        let p = |n| Pct::new(n, c.pairs_total).fmt1();
        Self {
            model_id: model_id.to_string(),
            set: c.set.clone(),
            attribute: c.attribute.clone(),
            name: c.name.clone().unwrap_or_default(),
            pairs_total: c.pairs_total,
            changed: c.changed,
            c2i: c.c2i,
            i2i: c.i2i,
            i2c: c.i2c,
            correct: c.correct,
            base_correct: c.base_correct,
            missing: c.missing,
            complete: c.complete,
            change_rate: p(c.changed),
            c2i_rate: p(c.c2i),
            i2i_rate: p(c.i2i),
            i2c_rate: p(c.i2c),
            accuracy: p(c.correct),
        }
    }

    /// Counts back as a cell.
    pub fn to_cell(&self) -> AttributeCell {
        AttributeCell {
            set: self.set.clone(),
            attribute: self.attribute.clone(),
            name: (!self.name.is_empty()).then(|| self.name.clone()),
            pairs_total: self.pairs_total,
            changed: self.changed,
            c2i: self.c2i,
            i2i: self.i2i,
            i2c: self.i2c,
            correct: self.correct,
            base_correct: self.base_correct,
            missing: self.missing,
            complete: self.complete,
        }
    }
}

/// Rows for the baseline, every attribute cell, then every per-name cell.
/// An empty report yields the header alone.
pub fn to_csv(reports: &[&MachineReport]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        if r.cells.is_empty() && r.names.is_empty() && r.baseline.pairs_total == 0 && r.baseline.missing == 0 {
            continue;
        }
        let id = &r.metadata.model_id;
        for c in std::iter::once(&r.baseline).chain(&r.cells).chain(&r.names) {
            w.serialize(CsvRow::from_cell(id, c)).expect("csv row serializes");
        }
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"));
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}
