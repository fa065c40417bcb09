//! Evaluation report assembly and rendering.
//!
//! The text table lays columns out as: label, per-class IoUs, AP_d, AP_i,
//! PQ_th, mIoU, PQ_st, PQ. Scores are percentages with one decimal.

use serde::Serialize;

use crate::schema::LabelSchema;

use super::{ApReport, PqReport, SemReport};

/// Everything one `eval` run produced. Sections are optional because not
/// every input sequence carries the planes needed for every metric.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pq: Option<PqReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantic: Option<SemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_box: Option<ApReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_mask: Option<ApReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Flatten into one table row. `per_class` selects which classes appear
    /// in the per-class IoU columns, by name.
    pub fn to_row(&self, label: &str, per_class: &[String], schema: &LabelSchema) -> ReportRow {
        let ious = per_class
            .iter()
            .map(|name| {
                let class = schema.find_by_name(name)?;
                self.semantic.as_ref()?.per_class_iou.get(&class.id).copied()
            })
            .collect();
        ReportRow {
            label: label.to_string(),
            per_class_iou: ious,
            ap_box: self.ap_box.as_ref().map(|r| r.mean),
            ap_mask: self.ap_mask.as_ref().map(|r| r.mean),
            pq_things: self.pq.as_ref().map(|r| r.pq_things),
            miou: self.semantic.as_ref().map(|r| r.miou),
            pq_stuff: self.pq.as_ref().map(|r| r.pq_stuff),
            pq: self.pq.as_ref().map(|r| r.pq),
        }
    }
}

/// One rendered table row; all scores are raw [0, 1] values.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub label: String,
    /// Aligned with the class-name column list passed to [`render_table`].
    pub per_class_iou: Vec<Option<f64>>,
    pub ap_box: Option<f64>,
    pub ap_mask: Option<f64>,
    pub pq_things: Option<f64>,
    pub miou: Option<f64>,
    pub pq_stuff: Option<f64>,
    pub pq: Option<f64>,
}

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "-".to_string(),
    }
}

/// Render rows as an aligned plain-text table.
pub fn render_table(class_names: &[String], rows: &[ReportRow]) -> String {
    let mut header: Vec<String> = vec!["resolution".to_string()];
    header.extend(class_names.iter().cloned());
    for h in ["AP_d", "AP_i", "PQ_th", "mIoU", "PQ_st", "PQ"] {
        header.push(h.to_string());
    }

    let mut table: Vec<Vec<String>> = vec![header];
    for row in rows {
        let mut cells = vec![row.label.clone()];
        for i in 0..class_names.len() {
            cells.push(cell(row.per_class_iou.get(i).copied().flatten()));
        }
        cells.push(cell(row.ap_box));
        cells.push(cell(row.ap_mask));
        cells.push(cell(row.pq_things));
        cells.push(cell(row.miou));
        cells.push(cell(row.pq_stuff));
        cells.push(cell(row.pq));
        table.push(cells);
    }

    let columns = table[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            out.push_str(&format!("{:>width$}", cell, width = widths[c]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_aggregates_with_one_decimal() {
        let row = ReportRow {
            label: "480x640".to_string(),
            per_class_iou: vec![Some(0.435), None],
            ap_box: Some(0.077),
            ap_mask: Some(0.065),
            pq_things: Some(0.170),
            miou: Some(0.413),
            pq_stuff: Some(0.303),
            pq: Some(0.227),
        };
        let text = render_table(&["pole".to_string(), "car".to_string()], &[row]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("43.5"));
        assert!(lines[1].contains("22.7"));
        assert!(lines[1].contains('-'));
    }

    #[test]
    fn column_order_is_fixed() {
        let text = render_table(&["pole".to_string()], &[]);
        let header = text.lines().next().unwrap();
        let pos = |needle: &str| header.find(needle).unwrap_or_else(|| panic!("{needle} missing"));
        assert!(pos("pole") < pos("AP_d"));
        assert!(pos("AP_d") < pos("AP_i"));
        assert!(pos("AP_i") < pos("PQ_th"));
        assert!(pos("PQ_th") < pos("mIoU"));
        assert!(pos("mIoU") < pos("PQ_st"));
        assert!(header.trim_end().ends_with("PQ"));
    }
}
