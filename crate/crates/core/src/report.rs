//! Plot-ready CSV and JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diversity::DiversityRecord;
use crate::error::{Error, Result};
use crate::segmentation::CharacteristicWord;
use crate::trends::{Heatmap, SurfaceStatRow};
use crate::usage_shift::ShiftTable;

pub const DIVERSITY_CSV: &str = "diversity.csv";
pub const CHARACTERISTIC_WORDS_CSV: &str = "characteristic_words.csv";
pub const TREND_HEATMAP_CSV: &str = "trend_heatmap.csv";
pub const TREND_HEATMAP_JSON: &str = "trend_heatmap.json";
pub const SURFACE_STATS_CSV: &str = "surface_stats.csv";
pub const DURATION_CORRELATION_JSON: &str = "duration_correlation.json";
pub const SHIFT_TABLE_CSV: &str = "shift_table.csv";
pub const SHIFT_HIST_CSV: &str = "shift_hist.csv";
pub const SHIFT_SUMMARY_JSON: &str = "shift_summary.json";
pub const EFFECTIVENESS_JSON: &str = "effectiveness.json";
pub const PROBE_REPORT_JSON: &str = "probe_report.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CORPUS_JSONL: &str = "corpus.jsonl";
pub const GROUND_TRUTH_JSON: &str = "ground_truth.json";

/// Writes files into one directory and remembers their names.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// File names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Validation(format!("csv buffer: {e}")))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per record. The component column is included when `with_component`.
pub fn diversity_csv(records: &[DiversityRecord], with_component: bool) -> Result<Vec<u8>> {
    let mut header = vec!["individual_id", "stage_index"];
    if with_component {
        header.push("component");
    }
    header.extend(["measure", "value_bits", "n_test_convs", "n_samples_used"]);
    csv_bytes(
        &header,
        records.iter().map(|r| {
            let mut row = vec![r.individual_id.clone(), r.stage_index.to_string()];
            if with_component {
                row.push(opt(r.component));
            }
            row.extend([
                r.measure.to_string(),
                r.value.to_string(),
                r.n_test_convs.to_string(),
                r.n_samples_used.to_string(),
            ]);
            row
        }),
    )
}

pub fn characteristic_words_csv(words: &[CharacteristicWord]) -> Result<Vec<u8>> {
    csv_bytes(
        &["word", "component", "log_ratio"],
        words
            .iter()
            .map(|w| vec![w.word.clone(), w.component.to_string(), w.log_ratio.to_string()]),
    )
}

/// Rows are `component/measure` labels, columns are stage indices.
pub fn heatmap_csv(heatmap: &Heatmap) -> Result<Vec<u8>> {
    csv_bytes(
        &["row", "column", "frac_increase", "n", "p_value", "significant"],
        heatmap.cells.iter().map(|c| {
            vec![
                c.row_label(),
                c.stage_index.to_string(),
                opt(c.cell.as_ref().map(|t| t.frac_increase)),
                opt(c.cell.as_ref().map(|t| t.n)),
                opt(c.cell.as_ref().map(|t| t.p_value)),
                c.significant().to_string(),
            ]
        }),
    )
}

pub fn surface_stats_csv(rows: &[SurfaceStatRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &[
            "stage_index",
            "n_individuals",
            "words_per_message",
            "words_per_message_lo",
            "words_per_message_hi",
            "messages_per_conversation",
            "messages_per_conversation_lo",
            "messages_per_conversation_hi",
        ],
        rows.iter().map(|r| {
            vec![
                r.stage_index.to_string(),
                r.n_individuals.to_string(),
                r.words_per_message.to_string(),
                r.words_per_message_ci.lo.to_string(),
                r.words_per_message_ci.hi.to_string(),
                r.messages_per_conversation.to_string(),
                r.messages_per_conversation_ci.lo.to_string(),
                r.messages_per_conversation_ci.hi.to_string(),
            ]
        }),
    )
}

pub fn shift_table_csv(table: &ShiftTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["word", "p0", "pbar", "shift"],
        table
            .entries
            .iter()
            .map(|e| vec![e.word.clone(), e.p0.to_string(), e.pbar.to_string(), e.shift.to_string()]),
    )
}

pub fn shift_hist_csv(table: &ShiftTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["bin_left", "count"],
        table
            .histogram
            .iter()
            .map(|b| vec![b.bin_left.to_string(), b.count.to_string()]),
    )
}
