//! Text checkpoints.
//!
//! ```text
//! gru-detector-checkpoint
//! version 1
//! hidden 20
//! tensor gru1.w_ih 60 1
//! <one line per row, space separated>
//! ...
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every bit.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::NetworkParams;

const MAGIC: &str = "gru-detector-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a detector checkpoint (bad header)")]
    BadHeader,
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

const NAMES: [&str; 10] = [
    "gru1.w_ih",
    "gru1.w_hh",
    "gru1.b_ih",
    "gru1.b_hh",
    "gru2.w_ih",
    "gru2.w_hh",
    "gru2.b_ih",
    "gru2.b_hh",
    "out.w",
    "out.b",
];

fn shapes(hidden: usize) -> [(usize, usize); 10] {
    let l = hidden;
    [
        (3 * l, 1),
        (3 * l, l),
        (3 * l, 1),
        (3 * l, 1),
        (3 * l, l),
        (3 * l, l),
        (3 * l, 1),
        (3 * l, 1),
        (1, l),
        (1, 1),
    ]
}

pub fn write_checkpoint<W: Write>(params: &NetworkParams, mut out: W) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "version {CHECKPOINT_VERSION}")?;
    writeln!(out, "hidden {}", params.hidden())?;
    let shapes = shapes(params.hidden());
    for ((name, (rows, cols)), (_, data)) in NAMES.iter().zip(shapes).zip(params.tensors()) {
        writeln!(out, "tensor {name} {rows} {cols}")?;
        for row in data.chunks(cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    writeln!(out, "end")?;
    out.flush()
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<NetworkParams, CheckpointError> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), CheckpointError> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?.trim().to_string())),
            None => Err(CheckpointError::Malformed {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let malformed = |line: usize, message: String| CheckpointError::Malformed { line, message };

    let (_, magic) = next("header")?;
    if magic != MAGIC {
        return Err(CheckpointError::BadHeader);
    }
    let (n, version) = next("version")?;
    let found = version
        .strip_prefix("version ")
        .ok_or_else(|| malformed(n, "expected `version <n>`".into()))?;
    if found.trim() != CHECKPOINT_VERSION.to_string() {
        return Err(CheckpointError::Version {
            found: found.trim().to_string(),
            expected: CHECKPOINT_VERSION,
        });
    }
    let (n, hidden) = next("hidden width")?;
    let hidden: usize = hidden
        .strip_prefix("hidden ")
        .and_then(|h| h.trim().parse().ok())
        .filter(|&h| h > 0)
        .ok_or_else(|| malformed(n, "expected `hidden <width>`".into()))?;

    let mut params = NetworkParams::zeros(hidden);
    let shapes = shapes(hidden);
    for ((name, (rows, cols)), (_, data)) in NAMES.iter().zip(shapes).zip(params.tensors_mut()) {
        let (n, header) = next("tensor header")?;
        let expected = format!("tensor {name} {rows} {cols}");
        if header.split_whitespace().collect::<Vec<_>>() != expected.split_whitespace().collect::<Vec<_>>() {
            return Err(malformed(n, format!("expected `{expected}`, found `{header}`")));
        }
        for r in 0..rows {
            let (n, line) = next("tensor row")?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| malformed(n, format!("bad value in {name}: {e}")))?;
            if values.len() != cols {
                return Err(malformed(n, format!("{name} row has {} values, expected {cols}", values.len())));
            }
            data[r * cols..(r + 1) * cols].copy_from_slice(&values);
        }
    }
    let (n, end) = next("end marker")?;
    if end != "end" {
        return Err(malformed(n, "expected `end`".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &NetworkParams, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetworkParams, CheckpointError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::init_xavier;

    fn to_text(p: &NetworkParams) -> String {
        let mut buf = Vec::new();
        write_checkpoint(p, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = init_xavier(17);
        p.out_b = 0.1 + 0.2;
        p.gru2.b_hh[3] = -1.0e-300;
        p.gru1.w_ih[0] = f64::MIN_POSITIVE / 3.0;
        let back = read_checkpoint(to_text(&p).as_bytes()).unwrap();
        for ((_, a), (_, b)) in p.tensors().iter().zip(back.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let p = init_xavier(3);
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let text = to_text(&init_xavier(1)).replacen(MAGIC, "gru-detector-chekpoint", 1);
        assert!(matches!(read_checkpoint(text.as_bytes()), Err(CheckpointError::BadHeader)));
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let text = to_text(&init_xavier(1)).replacen("version 1", "version 7", 1);
        let err = read_checkpoint(text.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('7') && msg.contains('1'), "{msg}");
        assert!(matches!(err, CheckpointError::Version { .. }));
    }

    #[test]
    fn truncated_or_misshapen_files_are_rejected() {
        let text = to_text(&init_xavier(1));
        let cut: String = text.lines().take(30).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint(cut.as_bytes()).is_err());
        let wrong = text.replacen("tensor gru1.w_hh 60 20", "tensor gru1.w_hh 60 19", 1);
        assert!(read_checkpoint(wrong.as_bytes()).is_err());
    }
}
