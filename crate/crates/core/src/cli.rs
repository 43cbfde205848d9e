//! `msr` command line: training-pair generation, benchmark creation,
//! evaluation, dataset statistics and splitting.
//!
//! Exit codes: 0 success, 1 validation error, 2 processing error,
//! 3 missing external dependency.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::{read_wav, resample, write_wav, AudioBuffer, AudioError, BitDepth};
use crate::codec::{encoder_version, resolve_encoder, CodecError};
use crate::dataset::{
    cooccurrence, make_split, parse_manifest, stem_statistics, DatasetError, SongManifest, Split, Target, Taxonomy,
    TaxonomyMode,
};
use crate::degrade::{build_training_example, hex, ChainConfig, DegradeError, ExampleSource};
use crate::metrics::{evaluate_pairs, mean_ci95, EvalReport, MelSpecConfig, MetricsError};

pub const TOOL: &str = "msr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_VARIANTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Processing,
    MissingDependency,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Processing => 2,
            ErrorKind::MissingDependency => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.into() }
    }

    fn processing(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Processing, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Output(_) => CliError::processing(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        match e {
            AudioError::MissingFile(_) | AudioError::MalformedHeader { .. } | AudioError::UnsupportedEncoding { .. } => {
                CliError::validation(e.to_string())
            }
            _ => CliError::processing(e.to_string()),
        }
    }
}

impl From<DegradeError> for CliError {
    fn from(e: DegradeError) -> Self {
        match e {
            DegradeError::Config(_) | DegradeError::CodecDisabled | DegradeError::NoTargets => {
                CliError::validation(e.to_string())
            }
            DegradeError::Codec(CodecError::EncoderMissing { .. }) => {
                CliError { kind: ErrorKind::MissingDependency, message: e.to_string() }
            }
            DegradeError::Audio(a) => a.into(),
            _ => CliError::processing(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Output(_) => CliError::processing(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::processing(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "msr", version, about = "Music source restoration data and evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate degraded mixture / clean target training pairs.
    Degrade(DegradeArgs),
    /// Build the offline benchmark from the test split.
    Benchgen(BenchArgs),
    /// Score estimates against references.
    Eval(EvalArgs),
    /// Stem counts, active playing time and co-occurrence.
    Stats(StatsArgs),
    /// Train/test split for one label.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// Dataset manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory the manifest's audio paths are relative to.
    #[arg(long, default_value = ".")]
    pub audio_root: PathBuf,
    /// 17 second-level groups (room microphones folded into Misc).
    #[arg(long)]
    pub strict_17: bool,
}

impl ManifestArgs {
    fn taxonomy(&self) -> Taxonomy {
        Taxonomy::new(if self.strict_17 { TaxonomyMode::Strict17 } else { TaxonomyMode::ListFaithful })
    }
}

#[derive(Debug, Args)]
pub struct GenerationArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Target label: a second-level code or a first-level group.
    #[arg(long)]
    pub label: String,
    /// Base seed; example `i` uses `seed + i`.
    #[arg(long)]
    pub seed: u64,
    /// Chain config JSON; absent fields take the published defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Reject configs outside the published parameter ranges.
    #[arg(long)]
    pub paper_strict: bool,
    /// Skip codec steps (each skip is logged in the record).
    #[arg(long)]
    pub no_codec: bool,
    /// Excerpt length in seconds; whole stems when absent.
    #[arg(long)]
    pub segment_seconds: Option<f64>,
    /// Draw background stems from a second, independently chosen song.
    #[arg(long)]
    pub cross_song: bool,
    /// Output directory; must be absent or empty.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[command(flatten)]
    pub common: GenerationArgs,
    /// Number of examples.
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: GenerationArgs,
    /// Number of sampled variants.
    #[arg(long, default_value_t = DEFAULT_VARIANTS)]
    pub variants: usize,
    /// Instead of sampling, process every test song this many times.
    #[arg(long, conflicts_with = "variants")]
    pub passes: Option<usize>,
    /// Existing split JSON; computed from the label and seed when absent.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of estimate WAVs, paired with references by file name.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Directory of reference WAVs.
    #[arg(long)]
    pub references: PathBuf,
    /// Output directory; must be absent or empty.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Output directory; must be absent or empty.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Target label: a second-level code or a first-level group.
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub seed: u64,
    /// Output directory; must be absent or empty.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ErrorKind::Validation.exit_code() } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("msr: error: {e}");
            e.kind.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Degrade(a) => cmd_degrade(a),
        Command::Benchgen(a) => cmd_benchgen(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a),
    }
}

/// Header carried by every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_version: Option<String>,
}

impl Metadata {
    fn new(command: &str) -> Self {
        Metadata {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed: None,
            config_digest: None,
            encoder_version: None,
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        let mut entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
        if entries.next().is_some() {
            return Err(CliError::validation(format!("output directory {} is not empty", dir.display())));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if n == 0 {
        return Err(CliError::validation("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError::processing(e.to_string()))
}

fn load_config(args: &GenerationArgs) -> Result<ChainConfig, CliError> {
    let mut config = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
            ChainConfig::from_json(&text)?
        }
        None => ChainConfig::default(),
    };
    if args.no_codec {
        config.codec_enabled = false;
    }
    config.validate(args.paper_strict)?;
    if let Some(s) = args.segment_seconds {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::validation(format!("--segment-seconds {s} must be positive")));
        }
    }
    Ok(config)
}

/// Encoder version when the codec may be used; a missing encoder is exit 3.
fn check_encoder(config: &ChainConfig) -> Result<Option<String>, CliError> {
    if !config.codec_enabled || config.probabilities.codec == 0.0 {
        return Ok(None);
    }
    if resolve_encoder().is_none() {
        return Err(CliError {
            kind: ErrorKind::MissingDependency,
            message: format!(
                "MP3 encoder {:?} not found (set MSR_LAME_PATH or pass --no-codec)",
                crate::codec::encoder_path()
            ),
        });
    }
    encoder_version().map(Some).map_err(|e| CliError { kind: ErrorKind::MissingDependency, message: e.to_string() })
}

/// Inputs shared by every example of a generation run.
struct Generator<'a> {
    songs: &'a [SongManifest],
    target: Target,
    audio_root: &'a Path,
    config: ChainConfig,
    strict: bool,
    segment_seconds: Option<f64>,
    cross_song: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub id: String,
    pub seed: u64,
    pub song_id: String,
    /// SHA-256 of `record.json`.
    pub record_sha256: String,
}

impl Generator<'_> {
    fn load(&self, paths: &[String], rate: Option<u32>) -> Result<Vec<AudioBuffer>, CliError> {
        paths
            .iter()
            .map(|p| {
                let b = read_wav(self.audio_root.join(p))?;
                Ok(match rate {
                    Some(r) if r != b.sample_rate() => resample(&b, r)?,
                    _ => b,
                })
            })
            .collect()
    }

    /// Builds and writes one example from `song` into `dir`.
    fn generate(&self, song: &SongManifest, seed: u64, id: &str, dir: &Path) -> Result<ExampleEntry, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let target_paths: Vec<String> =
            song.stems.iter().filter(|s| self.target.matches(&s.label)).map(|s| s.path.clone()).collect();
        let (bg_song, background_paths): (Option<&SongManifest>, Vec<String>) = if self.cross_song {
            let other = &self.songs[rng.random_range(0..self.songs.len())];
            (Some(other), other.stems.iter().filter(|s| !self.target.matches(&s.label)).map(|s| s.path.clone()).collect())
        } else {
            (None, song.stems.iter().filter(|s| !self.target.matches(&s.label)).map(|s| s.path.clone()).collect())
        };
        let targets = self.load(&target_paths, None)?;
        let rate = targets[0].sample_rate();
        let backgrounds = self.load(&background_paths, Some(rate))?;
        let full = targets.iter().chain(&backgrounds).map(|b| b.len()).min().unwrap_or(0);
        let (offset, len) = match self.segment_seconds {
            Some(s) => {
                let seg = ((s * rate as f64).round() as usize).min(full);
                (if full > seg { rng.random_range(0..=full - seg) } else { 0 }, seg)
            }
            None => (0, full),
        };
        let cut = |bs: Vec<AudioBuffer>| -> Result<Vec<AudioBuffer>, CliError> {
            bs.iter().map(|b| b.slice(offset, len).map_err(CliError::from)).collect()
        };
        let (targets, backgrounds) = (cut(targets)?, cut(backgrounds)?);

        let mut example = build_training_example(&targets, &backgrounds, seed, &self.config, self.strict)?;
        example.record.source = Some(ExampleSource {
            song_id: song.id.clone(),
            background_song_id: bg_song.map(|s| s.id.clone()),
            target_paths,
            background_paths,
            offset,
        });
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_wav(&example.mixture, dir.join("mixture.wav"), BitDepth::Float32)?;
        write_wav(&example.target, dir.join("target.wav"), BitDepth::Float32)?;
        let record = example.record.to_json();
        let record_path = dir.join("record.json");
        std::fs::write(&record_path, &record).map_err(|e| io_err(&record_path, e))?;
        Ok(ExampleEntry {
            id: id.to_string(),
            seed,
            song_id: song.id.clone(),
            record_sha256: hex(&Sha256::digest(record.as_bytes())),
        })
    }
}

fn candidates<'a>(songs: &'a [SongManifest], target: &Target) -> Result<Vec<&'a SongManifest>, CliError> {
    let c: Vec<_> = songs.iter().filter(|s| s.contains(target)).collect();
    if c.is_empty() {
        return Err(DatasetError::LabelAbsent(target.name.clone()).into());
    }
    Ok(c)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub metadata: Metadata,
    pub label: String,
    pub taxonomy: TaxonomyMode,
    pub paper_strict: bool,
    pub codec_enabled: bool,
    pub config: ChainConfig,
    pub count: usize,
    pub examples: Vec<ExampleEntry>,
}

pub fn cmd_degrade(args: &DegradeArgs) -> Result<(), CliError> {
    let a = &args.common;
    let config = load_config(a)?;
    let taxonomy = a.manifest.taxonomy();
    let songs = parse_manifest(&a.manifest.manifest, &taxonomy)?;
    let target = taxonomy.target(&a.label)?;
    let pool = thread_pool(a.workers)?;
    let encoder = check_encoder(&config)?;
    let pool_songs = if args.n > 0 { candidates(&songs, &target)? } else { Vec::new() };
    prepare_out_dir(&a.out)?;

    let generator = Generator {
        songs: &songs,
        target: target.clone(),
        audio_root: &a.manifest.audio_root,
        config: config.clone(),
        strict: a.paper_strict,
        segment_seconds: a.segment_seconds,
        cross_song: a.cross_song,
    };
    let examples: Vec<ExampleEntry> = pool.install(|| {
        (0..args.n)
            .into_par_iter()
            .map(|i| {
                let seed = a.seed.wrapping_add(i as u64);
                let mut pick = ChaCha8Rng::seed_from_u64(seed);
                pick.set_stream(2);
                let song = pool_songs[pick.random_range(0..pool_songs.len())];
                let id = format!("{i:06}");
                generator.generate(song, seed, &id, &a.out.join(&id))
            })
            .collect::<Result<_, _>>()
    })?;

    let mut metadata = Metadata::new("degrade");
    metadata.seed = Some(a.seed);
    metadata.config_digest = Some(config.digest());
    metadata.encoder_version = encoder;
    let info = RunInfo {
        metadata,
        label: target.name,
        taxonomy: taxonomy.mode(),
        paper_strict: a.paper_strict,
        codec_enabled: config.codec_enabled,
        count: examples.len(),
        config,
        examples,
    };
    write_json(&a.out.join("run.json"), &info)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchIndex {
    pub metadata: Metadata,
    pub label: String,
    pub taxonomy: TaxonomyMode,
    /// `"sampled"` or `"passes"`.
    pub mode: String,
    pub passes: Option<usize>,
    pub test_songs: Vec<String>,
    pub config: ChainConfig,
    pub variant_count: usize,
    pub variants: Vec<ExampleEntry>,
}

pub fn cmd_benchgen(args: &BenchArgs) -> Result<(), CliError> {
    let a = &args.common;
    let config = load_config(a)?;
    let taxonomy = a.manifest.taxonomy();
    let songs = parse_manifest(&a.manifest.manifest, &taxonomy)?;
    let target = taxonomy.target(&a.label)?;
    let pool = thread_pool(a.workers)?;
    let encoder = check_encoder(&config)?;
    let split: Split = match &args.split {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SplitFile>(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?
                .split
        }
        None => make_split(&songs, &target, a.seed)?,
    };
    let test: Vec<&SongManifest> = songs.iter().filter(|s| split.test.contains(&s.id) && s.contains(&target)).collect();
    if test.is_empty() {
        return Err(CliError::validation(format!("no test song contains {}", target.name)));
    }
    prepare_out_dir(&a.out)?;

    // (song, seed) for every variant
    let plan: Vec<(&SongManifest, u64)> = match args.passes {
        Some(k) => (0..k * test.len()).map(|i| (test[i % test.len()], a.seed.wrapping_add(i as u64))).collect(),
        None => (0..args.variants)
            .map(|i| {
                let seed = a.seed.wrapping_add(i as u64);
                let mut pick = ChaCha8Rng::seed_from_u64(seed);
                pick.set_stream(2);
                (test[pick.random_range(0..test.len())], seed)
            })
            .collect(),
    };
    let generator = Generator {
        songs: &songs,
        target: target.clone(),
        audio_root: &a.manifest.audio_root,
        config: config.clone(),
        strict: a.paper_strict,
        segment_seconds: a.segment_seconds,
        cross_song: a.cross_song,
    };
    let variants_dir = a.out.join("variants");
    let variants: Vec<ExampleEntry> = pool.install(|| {
        plan.par_iter()
            .enumerate()
            .map(|(i, (song, seed))| {
                let id = format!("{i:06}");
                generator.generate(song, *seed, &id, &variants_dir.join(&id))
            })
            .collect::<Result<_, _>>()
    })?;

    let mut metadata = Metadata::new("benchgen");
    metadata.seed = Some(a.seed);
    metadata.config_digest = Some(config.digest());
    metadata.encoder_version = encoder;
    let index = BenchIndex {
        metadata,
        label: target.name,
        taxonomy: taxonomy.mode(),
        mode: if args.passes.is_some() { "passes".into() } else { "sampled".into() },
        passes: args.passes,
        test_songs: test.iter().map(|s| s.id.clone()).collect(),
        config,
        variant_count: variants.len(),
        variants,
    };
    write_json(&a.out.join("index.json"), &index)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairSummary {
    pub name: String,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub ci95: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalOutput {
    pub metadata: Metadata,
    pub pairs: Vec<String>,
    pub unmatched: Vec<String>,
    /// Pairs shorter than one segment.
    pub too_short: Vec<String>,
    pub si_sdr: EvalReport,
    pub ssim_mel: EvalReport,
    pub per_pair: Vec<PairSummary>,
}

fn wav_names(dir: &Path) -> Result<Vec<String>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::validation(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.to_ascii_lowercase().ends_with(".wav"))
        .collect();
    names.sort();
    Ok(names)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let estimates = wav_names(&args.estimates)?;
    let references = wav_names(&args.references)?;
    let matched: Vec<String> = estimates.iter().filter(|n| references.contains(n)).cloned().collect();
    let mut unmatched: Vec<String> = estimates.iter().filter(|n| !references.contains(n)).map(|n| format!("estimates/{n}")).collect();
    unmatched.extend(references.iter().filter(|n| !estimates.contains(n)).map(|n| format!("references/{n}")));
    for u in &unmatched {
        eprintln!("msr: unmatched file {u}");
    }
    if matched.is_empty() {
        return Err(CliError::validation("no pairs"));
    }
    let loaded: Vec<(String, AudioBuffer, AudioBuffer)> = matched
        .par_iter()
        .map(|n| {
            let e = read_wav(args.estimates.join(n)).map_err(|e| CliError::processing(format!("estimate {n}: {e}")))?;
            let r = read_wav(args.references.join(n)).map_err(|e| CliError::processing(format!("reference {n}: {e}")))?;
            if e.sample_rate() != r.sample_rate() || e.len() != r.len() {
                return Err(CliError::validation(format!("{n}: estimate and reference differ in rate or length")));
            }
            Ok((n.clone(), e, r))
        })
        .collect::<Result<_, _>>()?;
    let config = MelSpecConfig::default();
    let (usable, too_short): (Vec<_>, Vec<_>) = loaded
        .into_iter()
        .partition(|(_, e, _)| e.len() as f64 >= crate::metrics::SEGMENT_SECONDS * e.sample_rate() as f64);
    let too_short: Vec<String> = too_short.into_iter().map(|(n, _, _)| n).collect();
    let names: Vec<String> = usable.iter().map(|(n, _, _)| n.clone()).collect();
    let pairs: Vec<(AudioBuffer, AudioBuffer)> = usable.into_iter().map(|(_, e, r)| (e, r)).collect();
    let summary = evaluate_pairs(&pairs, &config)?;

    let mut per_pair = Vec::new();
    for report in [&summary.si_sdr, &summary.ssim_mel] {
        let mut by_pair: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (s, v) in report.segments.iter().zip(&report.values) {
            by_pair.entry(s.pair).or_default().push(*v);
        }
        for (p, values) in by_pair {
            let (mean, ci95) = mean_ci95(&values);
            per_pair.push(PairSummary { name: names[p].clone(), metric: report.metric.clone(), n: values.len(), mean, ci95 });
        }
    }
    prepare_out_dir(&args.out)?;
    let segments_path = args.out.join("segments.csv");
    let mut w = csv::Writer::from_path(&segments_path).map_err(|e| io_err(&segments_path, e))?;
    w.write_record(["metric", "pair", "segment", "value"]).map_err(|e| io_err(&segments_path, e))?;
    for report in [&summary.si_sdr, &summary.ssim_mel] {
        for (s, v) in report.segments.iter().zip(&report.values) {
            w.write_record([report.metric.clone(), names[s.pair].clone(), s.segment.to_string(), format!("{v:.17e}")])
                .map_err(|e| io_err(&segments_path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(&segments_path, e))?;
    let pairs_path = args.out.join("pairs.csv");
    let mut w = csv::Writer::from_path(&pairs_path).map_err(|e| io_err(&pairs_path, e))?;
    w.write_record(["pair", "metric", "n", "mean", "ci95"]).map_err(|e| io_err(&pairs_path, e))?;
    for p in &per_pair {
        w.write_record([p.name.clone(), p.metric.clone(), p.n.to_string(), format!("{:.17e}", p.mean), format!("{:.17e}", p.ci95)])
            .map_err(|e| io_err(&pairs_path, e))?;
    }
    w.flush().map_err(|e| io_err(&pairs_path, e))?;

    let output = EvalOutput {
        metadata: Metadata::new("eval"),
        pairs: names,
        unmatched,
        too_short,
        si_sdr: summary.si_sdr,
        ssim_mel: summary.ssim_mel,
        per_pair,
    };
    write_json(&args.out.join("report.json"), &output)
}

#[derive(Debug, Serialize)]
struct StatsOutput<'a> {
    metadata: Metadata,
    taxonomy: TaxonomyMode,
    statistics: &'a crate::dataset::StemStatistics,
    cooccurrence: crate::dataset::CooccurrenceMatrix,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let taxonomy = args.manifest.taxonomy();
    let songs = parse_manifest(&args.manifest.manifest, &taxonomy)?;
    prepare_out_dir(&args.out)?;
    let stats = stem_statistics(&songs, &args.manifest.audio_root, &taxonomy);
    for m in &stats.missing_files {
        eprintln!("msr: missing audio {m}");
    }
    for (p, reason) in &stats.unreadable_files {
        eprintln!("msr: unreadable audio {p}: {reason}");
    }
    let csv_path = args.out.join("stats.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    stats.write_csv(file)?;
    let output = StatsOutput {
        metadata: Metadata::new("stats"),
        taxonomy: taxonomy.mode(),
        statistics: &stats,
        cooccurrence: cooccurrence(&songs),
    };
    write_json(&args.out.join("stats.json"), &output)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub metadata: Metadata,
    pub taxonomy: TaxonomyMode,
    pub split: Split,
}

pub fn cmd_split(args: &SplitArgs) -> Result<(), CliError> {
    let taxonomy = args.manifest.taxonomy();
    let songs = parse_manifest(&args.manifest.manifest, &taxonomy)?;
    let target = taxonomy.target(&args.label)?;
    let split = make_split(&songs, &target, args.seed)?;
    prepare_out_dir(&args.out)?;
    for (name, ids) in [("train.txt", &split.train), ("test.txt", &split.test)] {
        let path = args.out.join(name);
        let text: String = ids.iter().map(|id| format!("{id}\n")).collect();
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    let mut metadata = Metadata::new("split");
    metadata.seed = Some(args.seed);
    write_json(&args.out.join("split.json"), &SplitFile { metadata, taxonomy: taxonomy.mode(), split })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(run(["msr", "split"]), 1);
        assert_eq!(run(["msr", "--version"]), 0);
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.json");
        let code = run(["msr", "split", "--manifest", missing.to_str().unwrap(), "--label", "EG", "--seed", "1", "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(code, 1);
    }

    #[test]
    fn degrade_error_mapping() {
        let e: CliError = DegradeError::Codec(CodecError::EncoderMissing { path: "lame".into(), diagnostics: String::new() }).into();
        assert_eq!(e.kind.exit_code(), 3);
        let e: CliError = DegradeError::Config("x".into()).into();
        assert_eq!(e.kind.exit_code(), 1);
    }

    #[test]
    fn out_dir_must_be_empty() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x"), "").unwrap();
        assert!(prepare_out_dir(dir.path()).is_err());
        prepare_out_dir(&dir.path().join("new")).unwrap();
    }
}
