//! Experiment configuration: a key-value document plus CLI overrides.
//!
//! ```text
//! cell = mlc
//! family = gaussian
//! seed = 1
//! detectors = source-only, model-dtl, uda-dtl, uda-threshold
//! output = rber.csv
//! [target]
//! n_pe = 1000, 5000, 10000
//! t_hours = 12000
//! [samples]
//! source_train = 200000
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use flash_dtl::channel::{CellType, ChannelParams, NoiseFamily, OperatingPoint};
use flash_dtl::detect::DpConfig;
use flash_dtl::kv::{KvDocument, KvError};
use flash_dtl::neuralnet::TrainConfig;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// RNNA thresholds of the source-trained network.
    SourceOnly,
    /// RNNA thresholds of a network trained from scratch on labeled target data.
    TargetTrained,
    ModelDtl,
    UdaDtl,
    UdaThreshold,
    /// Analytic MMI thresholds (needs full channel knowledge).
    Mmi,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::SourceOnly,
        DetectorKind::TargetTrained,
        DetectorKind::ModelDtl,
        DetectorKind::UdaDtl,
        DetectorKind::UdaThreshold,
        DetectorKind::Mmi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::SourceOnly => "source-only",
            DetectorKind::TargetTrained => "target-trained",
            DetectorKind::ModelDtl => "model-dtl",
            DetectorKind::UdaDtl => "uda-dtl",
            DetectorKind::UdaThreshold => "uda-threshold",
            DetectorKind::Mmi => "mmi",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|d| d.name()).collect();
            format!("unknown detector `{s}` (known: {})", names.join(", "))
        })
    }
}

/// What the training-size study trains at each size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    /// Fresh network trained on target data only.
    Direct,
    /// Source network fine-tuned on target data.
    Dtl,
}

impl fmt::Display for StudyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyMode::Direct => "direct",
            StudyMode::Dtl => "dtl",
        })
    }
}

impl FromStr for StudyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(StudyMode::Direct),
            "dtl" => Ok(StudyMode::Dtl),
            other => Err(format!("unknown study mode `{other}` (expected direct or dtl)")),
        }
    }
}

pub const DESK_SOURCE_TRAIN: usize = 200_000;
pub const FULL_SCALE_SOURCE_TRAIN: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cell: CellType,
    pub channel: ChannelParams,
    /// Noise family at the target points.
    pub family: NoiseFamily,
    pub source: OperatingPoint,
    pub target_n_pe: Vec<f64>,
    pub target_t_hours: Vec<f64>,
    pub source_train: usize,
    pub target_train: usize,
    pub test: usize,
    pub detectors: Vec<DetectorKind>,
    pub dp: DpConfig,
    pub train: TrainConfig,
    /// alist file; the shipped code when absent.
    pub code: Option<PathBuf>,
    pub frames: usize,
    pub nms_alpha: f64,
    pub nms_iterations: usize,
    pub study_sizes: Vec<usize>,
    pub study_trials: usize,
    pub study_mode: StudyMode,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cell: CellType::Mlc,
            channel: ChannelParams::mlc(),
            family: NoiseFamily::Gaussian,
            source: OperatingPoint::fresh(),
            target_n_pe: vec![1e3, 4e3, 7e3, 1e4],
            target_t_hours: vec![1.2e4],
            source_train: DESK_SOURCE_TRAIN,
            target_train: 10_000,
            test: 1_000_000,
            detectors: vec![
                DetectorKind::SourceOnly,
                DetectorKind::ModelDtl,
                DetectorKind::UdaDtl,
                DetectorKind::UdaThreshold,
            ],
            dp: DpConfig::default(),
            train: TrainConfig::default(),
            code: None,
            frames: 100,
            nms_alpha: 0.75,
            nms_iterations: 20,
            study_sizes: vec![1_000, 10_000, 100_000],
            study_trials: 10,
            study_mode: StudyMode::Dtl,
            seed: 1,
            output: PathBuf::from("results.csv"),
        }
    }
}

const ROOT_KEYS: [&str; 6] = ["cell", "family", "seed", "detectors", "output", "code"];
const SECTION_KEYS: [&str; 17] = [
    "source.n_pe",
    "source.t_hours",
    "source.family",
    "target.n_pe",
    "target.t_hours",
    "samples.source_train",
    "samples.target_train",
    "samples.test",
    "dp.intervals",
    "train.epochs",
    "train.batch_size",
    "train.learning_rate",
    "coded.frames",
    "coded.alpha",
    "coded.iterations",
    "study.sizes",
    "study.trials",
];

fn allowed_keys() -> Vec<&'static str> {
    let channel = [
        "channel.bits_per_cell",
        "channel.nominal_voltages",
        "channel.delta_vpp",
        "channel.sigma_erase",
        "channel.sigma_program",
        "channel.x0",
        "channel.a_t",
        "channel.b_t",
        "channel.alpha_i",
        "channel.alpha_o",
        "channel.wear_coeff",
        "channel.wear_exp",
        "channel.gamma_shape",
    ];
    ROOT_KEYS
        .iter()
        .chain(&SECTION_KEYS)
        .chain(&channel)
        .chain(&["study.mode"])
        .copied()
        .collect()
}

fn parse_value<T: FromStr>(name: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse::<T>()
        .map_err(|e| field(name, format!("cannot parse `{raw}`: {e}")))
}

/// Accepts `1e4`-style integers.
fn parse_count(name: &str, raw: &str) -> Result<usize, ConfigError> {
    let x: f64 = parse_value(name, raw)?;
    if x.fract() != 0.0 || x < 0.0 || x > u32::MAX as f64 * 1e3 {
        return Err(field(name, format!("`{raw}` is not a non-negative integer")));
    }
    Ok(x as usize)
}

fn parse_list<T>(name: &str, raw: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(name, s))
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_kv(&KvDocument::parse(&text)?)
    }

    pub fn from_kv(doc: &KvDocument) -> Result<Self, ConfigError> {
        doc.check_known(&allowed_keys())?;
        let mut cfg = Self::default();
        for key in doc.keys().map(str::to_string).collect::<Vec<_>>() {
            if key.starts_with("channel.") {
                continue;
            }
            cfg.set(&key, doc.raw(&key).expect("key listed"))?;
        }
        // Channel overrides sit on top of the cell's defaults.
        let mut channel_doc = KvDocument::default();
        channel_doc.set("channel.bits_per_cell", cfg.cell.bits());
        for key in doc.keys().filter(|k| k.starts_with("channel.")) {
            channel_doc.set(key, doc.raw(key).expect("key listed"));
        }
        cfg.channel = ChannelParams::from_kv(&channel_doc).map_err(|e| field("channel", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `key = value` setting, addressed by its dotted path.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        match key {
            "cell" => {
                self.cell = parse_value(key, raw)?;
                self.channel = ChannelParams::for_cell(self.cell).unwrap_or_else(|| {
                    let mut p = ChannelParams::mlc();
                    p.bits_per_cell = self.cell.bits();
                    p.nominal_voltages.clear();
                    p
                });
            }
            "family" => self.family = parse_value(key, raw)?,
            "seed" => self.seed = parse_value(key, raw)?,
            "detectors" => self.detectors = parse_list(key, raw, parse_value)?,
            "output" => self.output = PathBuf::from(raw.trim()),
            "code" => self.code = Some(PathBuf::from(raw.trim())),
            "source.n_pe" => self.source.n_pe = parse_value(key, raw)?,
            "source.t_hours" => self.source.retention_hours = parse_value(key, raw)?,
            "source.family" => self.source.noise_family = parse_value(key, raw)?,
            "target.n_pe" => self.target_n_pe = parse_list(key, raw, parse_value)?,
            "target.t_hours" => self.target_t_hours = parse_list(key, raw, parse_value)?,
            "samples.source_train" => self.source_train = parse_count(key, raw)?,
            "samples.target_train" => self.target_train = parse_count(key, raw)?,
            "samples.test" => self.test = parse_count(key, raw)?,
            "dp.intervals" => self.dp.intervals = parse_count(key, raw)?,
            "train.epochs" => self.train.epochs = parse_count(key, raw)?,
            "train.batch_size" => self.train.batch_size = parse_count(key, raw)?,
            "train.learning_rate" => self.train.learning_rate = parse_value(key, raw)?,
            "coded.frames" => self.frames = parse_count(key, raw)?,
            "coded.alpha" => self.nms_alpha = parse_value(key, raw)?,
            "coded.iterations" => self.nms_iterations = parse_count(key, raw)?,
            "study.sizes" => self.study_sizes = parse_list(key, raw, parse_count)?,
            "study.trials" => self.study_trials = parse_count(key, raw)?,
            "study.mode" => self.study_mode = parse_value(key, raw)?,
            other => return Err(field(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, n) in [
            ("samples.source_train", self.source_train),
            ("samples.target_train", self.target_train),
            ("samples.test", self.test),
            ("coded.frames", self.frames),
            ("study.trials", self.study_trials),
        ] {
            if n == 0 {
                return Err(field(name, "must be positive"));
            }
        }
        if self.study_sizes.contains(&0) {
            return Err(field("study.sizes", "sizes must be positive"));
        }
        if self.target_n_pe.is_empty() || self.target_t_hours.is_empty() {
            return Err(field("target", "need at least one n_pe and one t_hours value"));
        }
        if self
            .target_n_pe
            .iter()
            .chain(&self.target_t_hours)
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(field("target", "operating points must be finite and non-negative"));
        }
        self.source.validate().map_err(|e| field("source", e.to_string()))?;
        self.channel.validate().map_err(|e| field("channel", e.to_string()))?;
        if self.channel.bits_per_cell != self.cell.bits() {
            return Err(field("channel.bits_per_cell", format!("does not match cell `{}`", self.cell)));
        }
        self.train.validate().map_err(|e| field("train", e.to_string()))?;
        if self.dp.intervals < 2 {
            return Err(field("dp.intervals", "need at least 2 intervals"));
        }
        if !(self.nms_alpha > 0.0 && self.nms_alpha <= 1.0) {
            return Err(field("coded.alpha", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Canonical document; parsing it back gives the same configuration.
    pub fn to_kv(&self) -> KvDocument {
        let mut doc = self.channel.to_kv();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        doc.set("cell", self.cell);
        doc.set("family", self.family);
        doc.set("seed", self.seed);
        doc.set(
            "detectors",
            self.detectors.iter().map(|d| d.name()).collect::<Vec<_>>().join(", "),
        );
        doc.set("output", self.output.display());
        if let Some(code) = &self.code {
            doc.set("code", code.display());
        }
        doc.set("source.n_pe", self.source.n_pe);
        doc.set("source.t_hours", self.source.retention_hours);
        doc.set("source.family", self.source.noise_family);
        doc.set("target.n_pe", join(&self.target_n_pe));
        doc.set("target.t_hours", join(&self.target_t_hours));
        doc.set("samples.source_train", self.source_train);
        doc.set("samples.target_train", self.target_train);
        doc.set("samples.test", self.test);
        doc.set("dp.intervals", self.dp.intervals);
        doc.set("train.epochs", self.train.epochs);
        doc.set("train.batch_size", self.train.batch_size);
        doc.set("train.learning_rate", self.train.learning_rate);
        doc.set("coded.frames", self.frames);
        doc.set("coded.alpha", self.nms_alpha);
        doc.set("coded.iterations", self.nms_iterations);
        doc.set(
            "study.sizes",
            self.study_sizes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
        );
        doc.set("study.trials", self.study_trials);
        doc.set("study.mode", self.study_mode);
        doc
    }

    /// First 16 hex digits of the SHA-256 of the canonical document. The
    /// output path is excluded so moving results does not change the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let digest = Sha256::digest(c.to_kv().to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Target operating points, retention time varying fastest.
    pub fn target_points(&self) -> Vec<OperatingPoint> {
        self.target_n_pe
            .iter()
            .flat_map(|&n| {
                self.target_t_hours
                    .iter()
                    .map(move |&t| OperatingPoint::new(n, t, self.family))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_document_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.cell = CellType::Tlc;
        cfg.channel = ChannelParams::tlc();
        cfg.family = NoiseFamily::Gamma;
        cfg.detectors = vec![DetectorKind::Mmi, DetectorKind::UdaDtl];
        cfg.target_n_pe = vec![100.0, 2500.5];
        cfg.code = Some(PathBuf::from("h.alist"));
        let back = ExperimentConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let doc = KvDocument::parse("[samples]\ntest = 0\n").unwrap();
        let err = ExperimentConfig::from_kv(&doc).unwrap_err().to_string();
        assert!(err.starts_with("samples.test"), "{err}");

        let doc = KvDocument::parse("detectors = model-dtl, magic\n").unwrap();
        let err = ExperimentConfig::from_kv(&doc).unwrap_err().to_string();
        assert!(err.contains("detectors") && err.contains("magic"), "{err}");

        let doc = KvDocument::parse("[target]\ncolour = red\n").unwrap();
        assert!(ExperimentConfig::from_kv(&doc).unwrap_err().to_string().contains("target.colour"));
    }

    #[test]
    fn hash_tracks_settings_but_not_output() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere.csv");
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn qlc_needs_levels_from_the_file() {
        let doc = KvDocument::parse("cell = qlc\n").unwrap();
        assert!(ExperimentConfig::from_kv(&doc).is_err());
        let levels: Vec<String> = (0..16).map(|i| format!("{}", 1.0 + 0.25 * i as f64)).collect();
        let text = format!("cell = qlc\n[channel]\nnominal_voltages = {}\n", levels.join(", "));
        let cfg = ExperimentConfig::from_kv(&KvDocument::parse(&text).unwrap()).unwrap();
        assert_eq!(cfg.channel.num_states(), 16);
    }
}
