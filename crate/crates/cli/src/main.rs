use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use spikec::codec::{self, compression_ratio, CodecConfig, EncodedStream};
use spikec::metrics::{mean_stream_distance, psnr, ssim, IntensityImage, Reconstructor};
use spikec::partitioner::fit_gamma_moments;
use spikec::predictor::Mode;
use spikec::simulator::{
    scene_moving_bar, scene_rotating_disc, simulate, DiscPattern, ResetMode, Scene, SimConfig,
    SimMode, StaticScene,
};
use spikec::SpikeStream;

#[derive(Parser)]
#[command(name = "spikec", version, about = "Spike camera stream simulator and codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic scene and write a raw .spkr stream.
    Simulate(SimulateArgs),
    /// Compress a .spkr stream into .spkc.
    Encode(EncodeArgs),
    /// Decompress a .spkc stream into .spkr.
    Decode(DecodeArgs),
    /// Compare a decoded stream against the original.
    Eval(EvalArgs),
    /// Print ISI statistics of a .spkr stream.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneKind {
    /// Smooth texture with integer ISIs between --min-isi and --max-isi.
    Static,
    /// Every pixel at --intensity.
    Uniform,
    Disc,
    Bar,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Det,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResetKind {
    Carry,
    Drain,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "static")]
    scene: SceneKind,
    #[arg(long = "w", default_value_t = 64)]
    width: u16,
    #[arg(long = "h", default_value_t = 64)]
    height: u16,
    #[arg(long, default_value_t = 40_000)]
    ticks: u64,
    #[arg(long, default_value_t = 255.0)]
    phi: f64,
    #[arg(long, value_enum, default_value = "det")]
    mode: SimKind,
    /// Photon arrivals per spike in Poisson mode.
    #[arg(long, default_value_t = 4)]
    photons: u32,
    #[arg(long, value_enum, default_value = "carry")]
    reset: ResetKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40_000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 25.5)]
    intensity: f64,
    #[arg(long, default_value_t = 8)]
    min_isi: u32,
    #[arg(long, default_value_t = 40)]
    max_isi: u32,
    /// Disc speed in revolutions per minute.
    #[arg(long, default_value_t = 600.0)]
    rpm: f64,
    /// Bar speed in pixels per tick.
    #[arg(long, default_value_t = 0.002)]
    speed: f64,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long, default_value_t = 255.0)]
    phi: f64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(1..=32))]
    qp: u8,
    #[arg(long, default_value_t = 3)]
    sr: u8,
    #[arg(long, default_value_t = 32)]
    tr: u16,
    #[arg(long, default_value_t = 32)]
    seg_len: u16,
    #[arg(long, default_value_t = 0.5)]
    merge_tol: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda0: f64,
    #[arg(long)]
    lossless: bool,
}

impl CodecArgs {
    fn config(&self) -> CodecConfig {
        CodecConfig {
            phi: self.phi,
            qp: self.qp,
            sr: self.sr,
            tr: self.tr,
            seg_len: self.seg_len,
            merge_tol: self.merge_tol,
            lambda0: self.lambda0,
            lossless: self.lossless,
        }
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Append the report as one JSON line to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    codec: CodecArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct EvalArgs {
    raw: PathBuf,
    decoded: PathBuf,
    #[arg(long, default_value_t = 255.0)]
    phi: f64,
    /// Number of evenly spaced images to reconstruct from each stream.
    #[arg(long, default_value_t = 100)]
    images: usize,
    /// Write the reconstructed image pairs as PGM files here.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

/// Ordered `key=value` report, also serialisable as one JSON object.
#[derive(Default)]
struct Report(Vec<(String, Value)>);

impl Report {
    fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    fn float(&mut self, key: &str, value: f64) -> &mut Self {
        // JSON has no infinity; keep the text form in both outputs.
        let v = if value.is_finite() {
            Value::from(value)
        } else {
            Value::from(value.to_string())
        };
        self.put(key, v)
    }

    fn emit(&self, args: &ReportArgs) -> spikec::Result<()> {
        for (k, v) in &self.0 {
            match v {
                Value::String(s) => println!("{k}={s}"),
                other => println!("{k}={other}"),
            }
        }
        if let Some(path) = &args.report {
            let obj: Map<String, Value> = self.0.iter().cloned().collect();
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", Value::Object(obj))?;
        }
        Ok(())
    }
}

fn build_scene(a: &SimulateArgs) -> spikec::Result<Box<dyn Scene>> {
    let (w, h) = (a.width, a.height);
    Ok(match a.scene {
        SceneKind::Static => Box::new(StaticScene::texture(w, h, a.phi, a.min_isi, a.max_isi)?),
        SceneKind::Uniform => Box::new(StaticScene::uniform(w, h, a.intensity)?),
        SceneKind::Disc => {
            let pattern = DiscPattern {
                bright: a.phi / 10.0,
                dark: a.phi / 40.0,
                background: a.phi / 25.0,
                ..DiscPattern::default()
            };
            Box::new(scene_rotating_disc(w, h, a.rpm, a.sample_rate, pattern)?)
        }
        SceneKind::Bar => Box::new(scene_moving_bar(w, h, a.speed, a.phi)?),
    })
}

fn cmd_simulate(a: SimulateArgs) -> spikec::Result<()> {
    let start = Instant::now();
    let scene = build_scene(&a)?;
    let cfg = SimConfig {
        threshold: a.phi,
        mode: match a.mode {
            SimKind::Det => SimMode::Deterministic,
            SimKind::Poisson => SimMode::Poisson {
                photons_per_spike: a.photons,
            },
        },
        reset: match a.reset {
            ResetKind::Carry => ResetMode::Carry,
            ResetKind::Drain => ResetMode::Drain,
        },
        seed: a.seed,
        sample_rate: a.sample_rate,
    };
    let s = simulate(scene.as_ref(), &cfg, a.ticks)?;
    s.save(&a.out)?;
    let mut r = Report::default();
    r.put("width", s.width())
        .put("height", s.height())
        .put("ticks", s.num_ticks())
        .put("spikes", s.spike_count())
        .put("payload_bytes", s.payload().len())
        .put("file_bytes", s.raw_file_len())
        .put("reset", match a.reset {
            ResetKind::Carry => "carry",
            ResetKind::Drain => "drain",
        })
        .float("wall_seconds", start.elapsed().as_secs_f64());
    r.emit(&a.report)
}

fn cmd_encode(a: EncodeArgs) -> spikec::Result<()> {
    let s = SpikeStream::load(&a.input)?;
    let start = Instant::now();
    let out = codec::encode_with_shadow(&s, &a.codec.config())?;
    let elapsed = start.elapsed();
    out.stream.save(&a.out)?;
    let distortion = mean_stream_distance(&s.to_isis()?, &out.reconstruction)?;
    let st = &out.stats;
    let mut r = Report::default();
    r.put("raw_bytes", s.raw_file_len())
        .put("compressed_bytes", out.stream.len())
        .float("compression_ratio", compression_ratio(&s, &out.stream))
        .float("distortion", distortion)
        .put("segments", st.segments())
        .put("segments_mvm", st.mode_counts[Mode::Mvm.index()])
        .put("segments_fm", st.mode_counts[Mode::Fm.index()])
        .put("segments_inter", st.mode_counts[Mode::Inter.index()])
        .put("nonzero_levels", st.nonzero_levels)
        .put("qp", a.codec.qp)
        .put("lossless", a.codec.lossless)
        .float("wall_seconds", elapsed.as_secs_f64());
    r.emit(&a.report)
}

fn cmd_decode(a: DecodeArgs) -> spikec::Result<()> {
    let enc = EncodedStream::load(&a.input)?;
    let start = Instant::now();
    let s = codec::decode(&enc)?;
    let elapsed = start.elapsed();
    s.save(&a.out)?;
    let mut r = Report::default();
    r.put("width", s.width())
        .put("height", s.height())
        .put("ticks", s.num_ticks())
        .put("spikes", s.spike_count())
        .put("compressed_bytes", enc.len())
        .put("raw_bytes", s.raw_file_len())
        .float("wall_seconds", elapsed.as_secs_f64());
    r.emit(&a.report)
}

/// Worker count for image metrics, from `SPIKEC_THREADS` or the machine.
fn threads() -> usize {
    std::env::var("SPIKEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct PairScore {
    psnr: f64,
    ssim: f64,
}

fn score_pairs(
    a: &Reconstructor,
    b: &Reconstructor,
    ticks: &[u64],
    phi: f64,
    dump: Option<&Path>,
) -> spikec::Result<Vec<PairScore>> {
    let score = |i: usize, t: u64| -> spikec::Result<PairScore> {
        let ia = a.image_at(t, phi)?;
        let ib = b.image_at(t, phi)?;
        if let Some(dir) = dump {
            write_pgm(&dir.join(format!("raw_{i:04}.pgm")), &ia, phi)?;
            write_pgm(&dir.join(format!("dec_{i:04}.pgm")), &ib, phi)?;
        }
        Ok(PairScore {
            psnr: psnr(&ia, &ib, phi)?,
            ssim: ssim(&ia, &ib, phi)?,
        })
    };
    let chunk = ticks.len().div_ceil(threads()).max(1);
    let indexed: Vec<(usize, u64)> = ticks.iter().copied().enumerate().collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = indexed
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&(i, t)| score(i, t)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("metric worker panicked"))
            .collect()
    })
}

fn write_pgm(path: &Path, img: &IntensityImage, phi: f64) -> spikec::Result<()> {
    fs::write(path, img.to_pgm(phi))?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> spikec::Result<()> {
    let raw = SpikeStream::load(&a.raw)?;
    let dec = SpikeStream::load(&a.decoded)?;
    if (raw.width(), raw.height(), raw.num_ticks()) != (dec.width(), dec.height(), dec.num_ticks()) {
        return Err(spikec::Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            raw.width(),
            raw.height(),
            raw.num_ticks(),
            dec.width(),
            dec.height(),
            dec.num_ticks()
        )));
    }
    let start = Instant::now();
    if let Some(dir) = &a.dump {
        fs::create_dir_all(dir)?;
    }
    let distance = mean_stream_distance(&raw.to_isis()?, &dec.to_isis()?)?;
    let ra = Reconstructor::from_stream(&raw);
    let rb = Reconstructor::from_stream(&dec);
    let ticks = ra.sample_ticks(a.images);
    let scores = score_pairs(&ra, &rb, &ticks, a.phi, a.dump.as_deref())?;

    let n = scores.len().max(1) as f64;
    let mean = |f: fn(&PairScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let min = |f: fn(&PairScore) -> f64| scores.iter().map(f).fold(f64::INFINITY, f64::min);
    let mut r = Report::default();
    r.put("raw_bytes", raw.raw_file_len())
        .put("decoded_bytes", dec.raw_file_len())
        .float("distance", distance)
        .put("images", scores.len())
        .float("psnr_mean", mean(|s| s.psnr))
        .float("psnr_min", min(|s| s.psnr))
        .float("ssim_mean", if scores.is_empty() { 1.0 } else { mean(|s| s.ssim) })
        .float("ssim_min", if scores.is_empty() { 1.0 } else { min(|s| s.ssim) })
        .float("wall_seconds", start.elapsed().as_secs_f64());
    r.emit(&a.report)
}

fn cmd_stats(a: StatsArgs) -> spikec::Result<()> {
    let s = SpikeStream::load(&a.input)?;
    let isis = s.to_isis()?;
    let all: Vec<u32> = isis.iter().flat_map(|q| q.intervals.iter().copied()).collect();
    let counts: Vec<usize> = isis.iter().map(|q| q.intervals.len()).collect();

    let mut r = Report::default();
    r.put("width", s.width())
        .put("height", s.height())
        .put("ticks", s.num_ticks())
        .put("spikes", s.spike_count())
        .put("isis", all.len())
        .put("silent_pixels", isis.iter().filter(|q| q.is_silent()).count());
    if all.is_empty() {
        r.put("isi_mean", Value::Null).put("gamma_alpha", Value::Null).put("gamma_beta", Value::Null);
    } else {
        r.float("isi_mean", all.iter().map(|&t| t as f64).sum::<f64>() / all.len() as f64)
            .put("isi_min", *all.iter().min().unwrap())
            .put("isi_max", *all.iter().max().unwrap());
        match fit_gamma_moments(&all) {
            Ok(g) => r.float("gamma_alpha", g.alpha).float("gamma_beta", g.beta),
            Err(_) => r.put("gamma_alpha", Value::Null).put("gamma_beta", Value::Null),
        };
    }
    r.put("count_min", counts.iter().copied().min().unwrap_or(0))
        .put("count_max", counts.iter().copied().max().unwrap_or(0))
        .float(
            "count_mean",
            counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
        );
    // Power-of-two histogram bins: [1,2), [2,4), [4,8), ...
    let mut hist = [0usize; 33];
    for &t in &all {
        hist[31 - t.leading_zeros() as usize] += 1;
    }
    let top = hist.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
    for (i, &c) in hist[..top].iter().enumerate() {
        r.put(&format!("hist_{}_{}", 1u64 << i, 1u64 << (i + 1)), c);
    }
    r.emit(&a.report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spikec: {e}");
            ExitCode::FAILURE
        }
    }
}
