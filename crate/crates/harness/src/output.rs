//! Long-form CSV rows shared by every sweep.

use std::io::Write;
use std::path::{Path, PathBuf};

use flash_dtl::channel::{CellType, NoiseFamily, OperatingPoint};

/// Overrides the directory that relative output paths are resolved in.
pub const OUTPUT_DIR_ENV: &str = "FLASH_DTL_OUTPUT_DIR";

pub const HEADER: [&str; 9] = [
    "cell",
    "family",
    "n_pe",
    "t_hours",
    "detector",
    "metric",
    "value",
    "seed",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cell: CellType,
    pub family: NoiseFamily,
    pub n_pe: f64,
    pub t_hours: f64,
    pub detector: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub config_hash: String,
}

/// Fills in the columns common to one sweep point.
#[derive(Debug, Clone)]
pub struct RowContext {
    pub cell: CellType,
    pub point: OperatingPoint,
    pub seed: u64,
    pub config_hash: String,
}

impl RowContext {
    pub fn row(&self, detector: &str, metric: impl Into<String>, value: f64) -> Row {
        Row {
            cell: self.cell,
            family: self.point.noise_family,
            n_pe: self.point.n_pe,
            t_hours: self.point.retention_hours,
            detector: detector.to_string(),
            metric: metric.into(),
            value,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        }
    }
}

pub fn write_rows<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.cell.to_string(),
            r.family.to_string(),
            r.n_pe.to_string(),
            r.t_hours.to_string(),
            r.detector.clone(),
            r.metric.clone(),
            format!("{:e}", r.value),
            r.seed.to_string(),
            r.config_hash.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a table written by [`write_rows`].
pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<Row>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(HEADER) {
        return Err(format!("unexpected header {headers:?}"));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| e.to_string())?;
            let bad = |col: &str| format!("row {}: bad {col}", i + 1);
            Ok(Row {
                cell: rec[0].parse().map_err(|_| bad("cell"))?,
                family: rec[1].parse().map_err(|_| bad("family"))?,
                n_pe: rec[2].parse().map_err(|_| bad("n_pe"))?,
                t_hours: rec[3].parse().map_err(|_| bad("t_hours"))?,
                detector: rec[4].to_string(),
                metric: rec[5].to_string(),
                value: rec[6].parse().map_err(|_| bad("value"))?,
                seed: rec[7].parse().map_err(|_| bad("seed"))?,
                config_hash: rec[8].to_string(),
            })
        })
        .collect()
}

/// Relative paths go under `$FLASH_DTL_OUTPUT_DIR` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn save_rows(rows: &[Row], path: &Path) -> std::io::Result<PathBuf> {
    let path = resolve_output(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_rows(rows, file).map_err(std::io::Error::other)?;
    Ok(path)
}
