//! Evaluation reports and their text/CSV renderings.
//!
//! Both renderings leave out wall time unless explicitly asked for, so that
//! identical runs produce identical bytes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub name: String,
    pub noisy_psnr: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub label: String,
    pub noise: String,
    pub image_count: usize,
    /// Mean of per-image PSNRs of the corrupted inputs.
    pub mean_noisy_psnr: f64,
    /// Mean of per-image PSNRs of the denoised outputs.
    pub mean_psnr: f64,
    pub per_image: Vec<ImageScore>,
    pub wall_time_s: f64,
    pub skipped: Vec<String>,
}

impl EvalRow {
    /// Builds a row whose means are the arithmetic means of the per-image PSNRs.
    pub fn from_scores(label: String, noise: String, per_image: Vec<ImageScore>, wall_time_s: f64) -> Self {
        Self {
            label,
            noise,
            image_count: per_image.len(),
            mean_noisy_psnr: mean(per_image.iter().map(|s| s.noisy_psnr)),
            mean_psnr: mean(per_image.iter().map(|s| s.psnr)),
            per_image,
            wall_time_s,
            skipped: Vec::new(),
        }
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    values.sum::<f64>() / n as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Argument(format!("unknown report format {other:?}"))),
        }
    }
}

const HEADER: [&str; 5] = ["label", "noise", "images", "noisy_psnr", "psnr"];
const TIMING: &str = "wall_time_s";

pub fn fmt_psnr(v: f64, decimals: usize) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.decimals$}")
    }
}

fn parse_psnr(s: &str) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse()
        .map_err(|_| Error::Data(format!("bad PSNR value {s:?}")))
}

pub fn report_render(report: &EvalReport, format: ReportFormat) -> Vec<u8> {
    render(report, format, false)
}

/// Like [`report_render`] with a trailing `wall_time_s` column.
pub fn report_render_timed(report: &EvalReport, format: ReportFormat) -> Vec<u8> {
    render(report, format, true)
}

fn render(report: &EvalReport, format: ReportFormat, timing: bool) -> Vec<u8> {
    let decimals = match format {
        ReportFormat::Text => 2,
        ReportFormat::Csv => 4,
    };
    let mut header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
    if timing {
        header.push(TIMING.into());
    }
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.label.clone(),
                r.noise.clone(),
                r.image_count.to_string(),
                fmt_psnr(r.mean_noisy_psnr, decimals),
                fmt_psnr(r.mean_psnr, decimals),
            ];
            if timing {
                cells.push(format!("{:.3}", r.wall_time_s));
            }
            cells
        })
        .collect();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("writing to memory");
            for r in &rows {
                w.write_record(r).expect("writing to memory");
            }
            w.into_inner().expect("flushing to memory")
        }
        ReportFormat::Text => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in &rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let mut out = String::new();
            for line in std::iter::once(&header).chain(&rows) {
                let cells: Vec<String> = line
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, &w))| {
                        // Text columns left-aligned, numbers right-aligned.
                        if i < 2 {
                            format!("{c:<w$}")
                        } else {
                            format!("{c:>w$}")
                        }
                    })
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

/// Parses a CSV report produced by [`report_render`]. Per-image scores are
/// not part of the CSV and come back empty.
pub fn report_parse_csv(data: &[u8]) -> Result<EvalReport> {
    let mut rdr = csv::Reader::from_reader(data);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("csv header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let timed = names.len() == HEADER.len() + 1 && names.last() == Some(&TIMING);
    if names[..HEADER.len().min(names.len())] != HEADER[..] || !(names.len() == HEADER.len() || timed) {
        return Err(Error::Data(format!("unexpected csv header {names:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("csv record: {e}")))?;
        rows.push(EvalRow {
            label: rec[0].to_string(),
            noise: rec[1].to_string(),
            image_count: rec[2]
                .parse()
                .map_err(|_| Error::Data(format!("bad image count {:?}", &rec[2])))?,
            mean_noisy_psnr: parse_psnr(&rec[3])?,
            mean_psnr: parse_psnr(&rec[4])?,
            per_image: Vec::new(),
            wall_time_s: if timed {
                rec[5].parse().map_err(|_| Error::Data("bad wall time".into()))?
            } else {
                0.0
            },
            skipped: Vec::new(),
        });
    }
    Ok(EvalReport { rows })
}
