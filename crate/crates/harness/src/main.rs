use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flash_dtl::channel::{make_dataset, state_moments, CellType, ChannelParams, GrayMap, NoiseFamily, OperatingPoint};
use flash_dtl::detect::{rnna_thresholds, DpConfig};
use flash_dtl::ecc::{hard_llr, nms_decode, read_alist, ParityCheckMatrix};
use flash_dtl::neuralnet::{
    init_xavier, load_checkpoint, save_checkpoint, train, FreezeMask, NetworkParams, TrainConfig, HIDDEN,
};
use flash_dtl::oracle::{bit_error_rate, mmi_thresholds, mutual_information, optimal_thresholds, DecisionMap, ThresholdSet};
use flash_dtl::transfer::{finetune, uda_dtl, KmeansConfig};
use flash_harness::config::{DESK_SOURCE_TRAIN, FULL_SCALE_SOURCE_TRAIN};
use flash_harness::{
    resolve_output, run_coded_sweep, run_rber_sweep, run_training_size_study, save_rows, ExperimentConfig, Row,
};

#[derive(Parser)]
#[command(name = "flash-dtl", version, about = "NAND flash detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncoded RBER of every detector over the target points.
    SweepRber(SweepArgs),
    /// Coded BER through the LDPC code over the target points.
    SweepCoded(SweepArgs),
    /// RBER against training-set size with repeated trials.
    TrainSizeStudy(SweepArgs),
    /// Train a detector from scratch on labeled data at one point.
    Train(TrainArgs),
    /// Fine-tune a checkpoint on labeled target data, first GRU layer frozen.
    Finetune(FinetuneArgs),
    /// Unsupervised adaptation of a source checkpoint to unlabeled target reads.
    Uda(UdaArgs),
    /// Read thresholds at one point: analytic optimum, or RNNA from a checkpoint.
    Thresholds(ThresholdArgs),
    /// Mutual-information-maximizing thresholds at one point.
    Mmi(MmiArgs),
    /// Decode LLRs (or hard bits) with normalized min-sum.
    Decode(DecodeArgs),
}

/// Every flag overrides the matching key of the config file.
#[derive(Args)]
struct SweepArgs {
    /// Key-value experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cell: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated detector names.
    #[arg(long)]
    detectors: Option<String>,
    /// Comma-separated P/E cycle counts.
    #[arg(long)]
    n_pe: Option<String>,
    /// Comma-separated retention times in hours.
    #[arg(long)]
    t_hours: Option<String>,
    #[arg(long)]
    source_n_pe: Option<f64>,
    #[arg(long)]
    source_t_hours: Option<f64>,
    #[arg(long)]
    source_train: Option<usize>,
    #[arg(long)]
    target_train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    dp_intervals: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// alist parity-check matrix (default: the shipped 4544-bit code).
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated training-set sizes for the study.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// `direct` or `dtl`.
    #[arg(long)]
    mode: Option<String>,
    /// CSV path; relative paths go under $FLASH_DTL_OUTPUT_DIR if set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Use 1e6 source training samples instead of the desk-scale 2e5.
    #[arg(long)]
    paper_scale: bool,
}

impl SweepArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if self.paper_scale {
            cfg.source_train = FULL_SCALE_SOURCE_TRAIN;
        }
        let s = |x: &Option<usize>| x.map(|v| v.to_string());
        let overrides: [(&str, Option<String>); 21] = [
            ("cell", self.cell.clone()),
            ("family", self.family.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("detectors", self.detectors.clone()),
            ("target.n_pe", self.n_pe.clone()),
            ("target.t_hours", self.t_hours.clone()),
            ("source.n_pe", self.source_n_pe.map(|v| v.to_string())),
            ("source.t_hours", self.source_t_hours.map(|v| v.to_string())),
            ("samples.source_train", s(&self.source_train)),
            ("samples.target_train", s(&self.target_train)),
            ("samples.test", s(&self.test)),
            ("dp.intervals", s(&self.dp_intervals)),
            ("train.epochs", s(&self.epochs)),
            ("code", self.code.as_ref().map(|p| p.display().to_string())),
            ("coded.frames", s(&self.frames)),
            ("coded.alpha", self.alpha.map(|v| v.to_string())),
            ("coded.iterations", s(&self.iterations)),
            ("study.sizes", self.sizes.clone()),
            ("study.trials", s(&self.trials)),
            ("study.mode", self.mode.clone()),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A single operating point of one cell type.
#[derive(Args)]
struct PointArgs {
    #[arg(long, default_value = "mlc")]
    cell: CellType,
    /// Key-value file overriding channel parameters.
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    family: NoiseFamily,
    #[arg(long, default_value_t = 0.0)]
    n_pe: f64,
    #[arg(long, default_value_t = 0.0)]
    t_hours: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl PointArgs {
    fn channel(&self) -> Result<ChannelParams> {
        let base = match &self.channel {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ChannelParams::from_kv_str(&text)?
            }
            None => match ChannelParams::for_cell(self.cell) {
                Some(p) => p,
                None => bail!("cell `{}` has no built-in levels; pass --channel", self.cell),
            },
        };
        if base.bits_per_cell != self.cell.bits() {
            bail!("channel file describes {} bits per cell, --cell is {}", base.bits_per_cell, self.cell);
        }
        Ok(base)
    }

    fn point(&self) -> OperatingPoint {
        OperatingPoint::new(self.n_pe, self.t_hours, self.family)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Labeled samples (default 2e5, or 1e6 with --paper-scale).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FinetuneArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Checkpoint to start from.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UdaArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Source-domain checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Labeled source samples drawn at (0, 0) for means and fine-tuning.
    #[arg(long, default_value_t = DESK_SOURCE_TRAIN)]
    source_samples: usize,
    /// Unlabeled target reads to cluster.
    #[arg(long, default_value_t = 10_000)]
    target_samples: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Derive RNNA thresholds from this checkpoint instead of the analytic optimum.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Unlabeled reads for RNNA thresholds.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    dp_intervals: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MmiArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// alist parity-check matrix (default: the shipped 4544-bit code).
    #[arg(long)]
    code: Option<PathBuf>,
    /// Whitespace-separated LLRs, positive meaning bit 0.
    #[arg(long)]
    input: PathBuf,
    /// Input holds 0/1 hard decisions instead of LLRs.
    #[arg(long)]
    hard: bool,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    /// Decoded bits, one codeword per line (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn train_cfg(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

fn save_model(params: &NetworkParams, out: &Path) -> Result<()> {
    let path = resolve_output(out);
    save_checkpoint(params, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let p = resolve_output(p);
            std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// One CSV row per threshold set, with the exact RBER it achieves.
fn threshold_table(
    args: &PointArgs,
    channel: &ChannelParams,
    sets: &[(&str, ThresholdSet)],
) -> Result<String> {
    let moments = state_moments(channel, &args.point());
    let gray = GrayMap::for_bits(channel.bits_per_cell);
    let k = channel.num_states() - 1;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["cell", "family", "n_pe", "t_hours", "method", "mutual_information", "rber_exact"]
        .map(String::from)
        .to_vec();
    header.extend((1..=k).map(|i| format!("threshold_{i}")));
    w.write_record(&header)?;
    for (name, th) in sets {
        let mut rec = vec![
            args.cell.to_string(),
            args.family.to_string(),
            args.n_pe.to_string(),
            args.t_hours.to_string(),
            name.to_string(),
            format!("{:e}", mutual_information(&moments, th)?),
            format!("{:e}", bit_error_rate(&moments, &DecisionMap::from_thresholds(th), &gray)),
        ];
        rec.extend(th.as_slice().iter().map(|t| t.to_string()));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn summarize(rows: &[Row]) {
    for r in rows.iter().filter(|r| matches!(r.metric.as_str(), "rber" | "coded_ber" | "rber_exact_median")) {
        println!(
            "{:>8} {:>8} {:<24} {:<18} {:.4e}",
            r.n_pe, r.t_hours, r.detector, r.metric, r.value
        );
    }
}

fn run_sweep(args: &SweepArgs, f: fn(&ExperimentConfig) -> Result<Vec<Row>, flash_harness::HarnessError>) -> Result<()> {
    let cfg = args.config()?;
    let rows = f(&cfg)?;
    summarize(&rows);
    let path = save_rows(&rows, &cfg.output)?;
    println!("wrote {} rows to {} (config hash {})", rows.len(), path.display(), cfg.hash());
    Ok(())
}

fn read_numbers(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().with_context(|| format!("line {}: bad number `{t}`", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        out.push(values);
    }
    Ok(out)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SweepRber(a) => run_sweep(&a, run_rber_sweep)?,
        Command::SweepCoded(a) => run_sweep(&a, run_coded_sweep)?,
        Command::TrainSizeStudy(a) => run_sweep(&a, run_training_size_study)?,
        Command::Train(a) => {
            let channel = a.point.channel()?;
            let n = a
                .samples
                .unwrap_or(if a.paper_scale { FULL_SCALE_SOURCE_TRAIN } else { DESK_SOURCE_TRAIN });
            let data = make_dataset(&channel, n, &a.point.point(), a.point.seed, true)?;
            let init = init_xavier(a.point.seed);
            let out = train(&data, &train_cfg(a.epochs, a.point.seed), init, FreezeMask::NONE)?;
            println!(
                "trained {} parameters on {n} samples, final loss {:.5}",
                out.params.num_params(),
                out.loss_curve.last().copied().unwrap_or(f64::NAN)
            );
            save_model(&out.params, &a.out)?;
        }
        Command::Finetune(a) => {
            let channel = a.point.channel()?;
            let pre = load_checkpoint(&a.model)?;
            let data = make_dataset(&channel, a.samples, &a.point.point(), a.point.seed, true)?;
            let out = finetune(&pre, &data, &train_cfg(a.epochs, a.point.seed))?;
            println!(
                "fine-tuned {} of {} parameters on {} samples, final loss {:.5}",
                out.params.num_trainable(FreezeMask::GRU1),
                out.params.num_params(),
                a.samples,
                out.loss_curve.last().copied().unwrap_or(f64::NAN)
            );
            save_model(&out.params, &a.out)?;
        }
        Command::Uda(a) => {
            let channel = a.point.channel()?;
            let pre = load_checkpoint(&a.model)?;
            let source = make_dataset(&channel, a.source_samples, &OperatingPoint::fresh(), a.point.seed, true)?;
            let target = make_dataset(&channel, a.target_samples, &a.point.point(), a.point.seed + 1, false)?;
            let means = flash_dtl::transfer::source_means(&source)?;
            let out = uda_dtl(
                &pre,
                &source,
                target.voltages(),
                &means,
                &KmeansConfig::default(),
                &train_cfg(a.epochs, a.point.seed),
                Some(a.target_samples),
            )?;
            println!("k-means: {} iterations", out.clusters.iterations);
            println!("source means:     {:?}", out.means.source);
            println!("target centroids: {:?}", out.means.target);
            save_model(&out.params, &a.out)?;
        }
        Command::Thresholds(a) => {
            let channel = a.point.channel()?;
            let (name, th) = match &a.model {
                None => ("optimal", optimal_thresholds(&state_moments(&channel, &a.point.point()))?),
                Some(model) => {
                    let params = load_checkpoint(model)?;
                    if params.hidden() != HIDDEN {
                        eprintln!("note: checkpoint has {} hidden units", params.hidden());
                    }
                    let reads = make_dataset(&channel, a.samples, &a.point.point(), a.point.seed, false)?;
                    let dp = DpConfig {
                        intervals: a.dp_intervals,
                        range: None,
                    };
                    ("rnna", rnna_thresholds(&params, reads.voltages(), channel.bits_per_cell, &dp)?.thresholds)
                }
            };
            let table = threshold_table(&a.point, &channel, &[(name, th)])?;
            write_output(a.output.as_deref(), &table)?;
        }
        Command::Mmi(a) => {
            let channel = a.point.channel()?;
            let m = state_moments(&channel, &a.point.point());
            let sets = [("optimal", optimal_thresholds(&m)?), ("mmi", mmi_thresholds(&m)?)];
            let table = threshold_table(&a.point, &channel, &sets)?;
            write_output(a.output.as_deref(), &table)?;
        }
        Command::Decode(a) => {
            let h = match &a.code {
                Some(p) => read_alist(p)?,
                None => ParityCheckMatrix::default_code(),
            };
            let mut text = String::new();
            let (mut ok, mut total) = (0, 0);
            for (i, mut word) in read_numbers(&a.input)?.into_iter().enumerate() {
                if word.len() != h.n() {
                    bail!("word {}: {} values for a {}-bit code", i + 1, word.len(), h.n());
                }
                if a.hard {
                    if word.iter().any(|&b| b != 0.0 && b != 1.0) {
                        bail!("word {}: hard input must be 0 or 1", i + 1);
                    }
                    let bits: Vec<u8> = word.iter().map(|&b| b as u8).collect();
                    word = hard_llr(&bits);
                }
                let out = nms_decode(&h, &word, a.alpha, a.iterations);
                ok += out.converged as usize;
                total += 1;
                text.extend(out.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }));
                text.push('\n');
            }
            eprintln!("{ok}/{total} words decoded to valid codewords");
            match &a.output {
                Some(p) => write_output(Some(p), &text)?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}
