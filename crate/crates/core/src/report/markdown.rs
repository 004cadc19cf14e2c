use super::Pct;
use crate::metrics::{AttributeCell, MachineReport, ModelDiff};
use std::cmp::Ordering;
use std::fmt::Write;

struct Col<'a> {
    group: String,
    label: String,
    /// One cell per model.
    cells: Vec<&'a AttributeCell>,
}

type Metric = fn(&AttributeCell) -> Pct;

fn change(c: &AttributeCell) -> Pct {
    Pct::new(c.changed, c.pairs_total)
}
fn c2i(c: &AttributeCell) -> Pct {
    Pct::new(c.c2i, c.pairs_total)
}
fn i2i(c: &AttributeCell) -> Pct {
    Pct::new(c.i2i, c.pairs_total)
}
fn i2c(c: &AttributeCell) -> Pct {
    Pct::new(c.i2c, c.pairs_total)
}
fn acc(c: &AttributeCell) -> Pct {
    Pct::new(c.correct, c.pairs_total)
}

fn columns<'a>(reports: &[&'a MachineReport], names: bool, with_baseline: bool) -> Vec<Col<'a>> {
    let first = reports[0];
    let mut cols = Vec::new();
    if with_baseline {
        cols.push(Col {
            group: "D".into(),
            label: "D".into(),
            cells: reports.iter().map(|r| &r.baseline).collect(),
        });
    }
    for set in first.sets.iter().filter(|s| s.names == names) {
        for (i, cell) in first.cells.iter().enumerate().filter(|(_, c)| c.set == set.label) {
            cols.push(Col {
                group: set.title.clone(),
                label: cell.attribute.clone(),
                cells: reports.iter().map(|r| &r.cells[i]).collect(),
            });
        }
    }
    cols
}

fn row(cells: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from("|");
    for c in cells {
        s.push(' ');
        s.push_str(&c);
        s.push_str(" |");
    }
    s.push('\n');
    s
}

fn value(cells: &[&AttributeCell], idx: usize, metric: Metric) -> String {
    let mine = metric(cells[idx]);
    let mut text = mine.fmt1();
    if !cells[idx].complete {
        text.push('*');
    }
    let strictly_largest = cells.len() > 1
        && mine.is_defined()
        && cells
            .iter()
            .enumerate()
            .all(|(j, other)| j == idx || mine.cmp_exact(&metric(other)) == Ordering::Greater);
    if strictly_largest {
        format!("**{text}**")
    } else {
        text
    }
}

/// One table. `lead` holds the leading column headers; `label` gives the
/// leading cells for each model row.
fn table(out: &mut String, reports: &[&MachineReport], cols: &[Col], lead: &[&str], label: &dyn Fn(usize) -> Vec<String>, metric: Metric) {
    let header = lead
        .iter()
        .map(|s| s.to_string())
        .chain(cols.iter().map(|c| c.label.clone()));
    out.push_str(&row(header));
    let align = lead
        .iter()
        .map(|_| "---".to_string())
        .chain(cols.iter().map(|_| "---:".to_string()));
    out.push_str(&row(align));
    if cols.is_empty() {
        return;
    }
    let mut last = None;
    let groups = cols.iter().map(|c| {
        let show = last.as_deref() != Some(c.group.as_str());
        last = Some(c.group.clone());
        if show {
            format!("*{}*", c.group)
        } else {
            String::new()
        }
    });
    out.push_str(&row(lead.iter().map(|_| String::new()).chain(groups.collect::<Vec<_>>())));
    for m in 0..reports.len() {
        out.push_str(&row(label(m).into_iter().chain(cols.iter().map(|c| value(&c.cells, m, metric)))));
    }
    if reports.len() == 2 {
        let mut lead_cells = label(1);
        for c in lead_cells.iter_mut() {
            c.clear();
        }
        if let Some(last) = lead_cells.last_mut() {
            *last = "Δ (B-A)".to_string();
        }
        let deltas = cols.iter().map(|c| metric(c.cells[0]).delta_to(&metric(c.cells[1])));
        out.push_str(&row(lead_cells.into_iter().chain(deltas)));
    }
}

fn metadata(out: &mut String, reports: &[&MachineReport]) {
    let r = reports[0];
    let m = &r.metadata;
    out.push_str("| Field | Value |\n|---|---|\n");
    let models: Vec<String> = reports.iter().map(|r| r.metadata.model_id.clone()).collect();
    let preds: Vec<String> = reports
        .iter()
        .map(|r| format!("{} ({} failed)", r.metadata.predictions, r.metadata.failures))
        .collect();
    let fields = [
        ("Tool version", m.tool_version.clone()),
        ("Lexicon", m.lexicon_versions.join(", ")),
        ("Config", format!("{} ({})", m.config_version, m.config_digest)),
        ("Dataset manifest", m.manifest_digest.clone()),
        (if reports.len() == 1 { "Model" } else { "Models (A, B)" }, models.join(", ")),
        ("Vignettes", m.vignettes.to_string()),
        ("Instances", m.instances.to_string()),
        ("Predictions", preds.join(", ")),
        ("Name denominator", format!("{:?}", m.name_denominator).to_lowercase()),
    ];
    for (k, v) in fields {
        let _ = writeln!(out, "| {k} | {v} |");
    }
}

fn render(reports: &[&MachineReport], title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}\n");
    metadata(&mut out, reports);

    let model = |m: usize| vec![reports[m].metadata.model_id.clone()];
    let main = columns(reports, false, false);
    let with_d = columns(reports, false, true);
    let names = columns(reports, true, false);

    out.push_str("\n## Changed answers (%)\n\n");
    table(&mut out, reports, &main, &["Model"], &model, change);

    out.push_str("\n## Answer transitions (%)\n\n");
    let transitions: [(&str, Metric); 3] = [("C→I", c2i), ("I→I", i2i), ("I→C", i2c)];
    for (name, metric) in transitions {
        let label = |m: usize| vec![if m == 0 { name.to_string() } else { String::new() }, reports[m].metadata.model_id.clone()];
        table(&mut out, reports, &main, &["Transition", "Model"], &label, metric);
        out.push('\n');
    }

    out.push_str("## Accuracy (%)\n\n");
    table(&mut out, reports, &with_d, &["Model"], &model, acc);

    out.push_str("\n## Names: changed answers (%)\n\n");
    table(&mut out, reports, &names, &["Model"], &model, change);

    out.push_str("\n## Names: accuracy (%)\n\n");
    table(&mut out, reports, &names, &["Model"], &model, acc);

    out.push_str("\n## Per-name results\n\n");
    out.push_str(&row(["Set", "Attribute", "Name", "Model", "Pairs", "Changed (%)", "Accuracy (%)"].map(String::from)));
    out.push_str(&row(["---", "---", "---", "---", "---:", "---:", "---:"].map(String::from)));
    for i in 0..reports[0].names.len() {
        for r in reports {
            let c = &r.names[i];
            let star = if c.complete { "" } else { "*" };
            out.push_str(&row([
                c.set.clone(),
                c.attribute.clone(),
                c.name.clone().unwrap_or_default(),
                r.metadata.model_id.clone(),
                c.pairs_total.to_string(),
                format!("{}{star}", change(c).fmt1()),
                format!("{}{star}", acc(c).fmt1()),
            ]));
        }
    }

    let incomplete = reports
        .iter()
        .any(|r| !r.baseline.complete || r.cells.iter().chain(&r.names).any(|c| !c.complete));
    if incomplete {
        out.push_str("\n\\* incomplete: some predictions for this cell are missing.\n");
    }
    out
}

pub fn to_markdown(r: &MachineReport) -> String {
    render(&[r], &format!("Demographic audit: {}", r.metadata.model_id))
}

/// Side-by-side tables; in each column the strictly larger value is bold.
pub fn diff_markdown(d: &ModelDiff) -> String {
    render(
        &[&d.a, &d.b],
        &format!("Model comparison: {} (A) vs {} (B)", d.a.metadata.model_id, d.b.metadata.model_id),
    )
}
