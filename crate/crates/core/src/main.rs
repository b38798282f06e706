use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use binsynth::acoustics::StereoRir;
use binsynth::audio::{AudioBuffer, WavFormat, DEFAULT_SAMPLE_RATE};
use binsynth::azimuth::{AzimuthStateMatrix, BinTrajectory, DEFAULT_SIGMA, D_TIME};
use binsynth::caption::{generate_caption, parse_caption};
use binsynth::llm::{induce_via_llm, LlmClientConfig, LlmInput, PromptTemplate};
use binsynth::metrics::SeriesOptions;
use binsynth::pipeline::{
    complete_record, condition_source, evaluate, format_table, synthesize, validate_dataset,
    write_demo, EvalOptions, Manifest, Subset, SynthOptions,
};
use binsynth::render::{render_scene, RenderOptions};
use binsynth::rng::{streams, SeededRng};
use binsynth::scene::{sample_scene, AttributeRecord, Movement, SceneSpec, DEFAULT_DURATION};

const API_KEY_ENV: &str = "BINSYNTH_LLM_API_KEY";

#[derive(Parser)]
#[command(
    name = "binsynth",
    version,
    about = "Spatial audio scene synthesis, validation and evaluation"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render every manifest entry into a dataset directory.
    Synthesize(SynthArgs),
    /// Check a synthesized dataset and list violations.
    Validate(ValidateArgs),
    /// Compare generated clips against reference clips.
    Evaluate(EvalArgs),
    /// Captions to attribute records (JSONL), or records to captions.
    ParseCaptions(ParseArgs),
    /// Render a single scene, optionally exporting its RIRs.
    RenderScene(RenderArgs),
    /// Write synthetic source clips and a small manifest.
    MakeDemo(DemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pcm16,
    Float32,
}

impl From<Format> for WavFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pcm16 => WavFormat::Pcm16,
            Format::Float32 => WavFormat::Float32,
        }
    }
}

#[derive(Args)]
struct LlmArgs {
    /// Chat-completion endpoint; when set, captions go through the LLM first.
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    llm_model: String,
    #[arg(long, default_value = "caption_inference.v1")]
    llm_template: String,
    #[arg(long, default_value_t = 30.0)]
    llm_timeout: f64,
}

impl LlmArgs {
    fn config(&self) -> anyhow::Result<Option<LlmClientConfig>> {
        let Some(endpoint) = &self.llm_endpoint else {
            return Ok(None);
        };
        let mut c = LlmClientConfig::new(
            endpoint,
            &self.llm_model,
            PromptTemplate::from_id(&self.llm_template)?,
        );
        c.timeout_secs = self.llm_timeout;
        c.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        c.validate()?;
        Ok(Some(c))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    duration: f64,
    /// Only these subsets (repeatable).
    #[arg(long, value_parser = parse_subset)]
    subset: Vec<Subset>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "pcm16")]
    format: Format,
    /// Sample indoor rooms for M-set entries (default: outdoors).
    #[arg(long)]
    m_indoor: bool,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[command(flatten)]
    llm: LlmArgs,
}

fn parse_subset(s: &str) -> Result<Subset, String> {
    s.parse().map_err(|e: binsynth::Error| e.to_string())
}

#[derive(Args)]
struct ValidateArgs {
    dataset: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Generated clips: dataset directory, index.json, or directory of <id>.wav.
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// MetricReport JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    subset: Vec<String>,
    /// JSONL of {"id", "embedding"} for the generated set (needs --ref-embeddings).
    #[arg(long, requires = "ref_embeddings")]
    gen_embeddings: Option<PathBuf>,
    #[arg(long, requires = "gen_embeddings")]
    ref_embeddings: Option<PathBuf>,
    /// JSONL of {"id", "tdoa_ms"} from an external estimator (needs --ref-crw).
    #[arg(long, requires = "ref_crw")]
    gen_crw: Option<PathBuf>,
    #[arg(long, requires = "gen_crw")]
    ref_crw: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Analysis window in seconds.
    #[arg(long, default_value_t = SeriesOptions::default().window)]
    window: f64,
    /// Windows quieter than this (dBFS) are ignored.
    #[arg(long, default_value_t = SeriesOptions::default().gate_dbfs)]
    gate_dbfs: f64,
}

#[derive(Args)]
struct ParseArgs {
    /// Input file, one caption per line (or JSONL records with --generate); stdin if omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Read {"attributes", "events"?} lines and write captions.
    #[arg(long)]
    generate: bool,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene JSON as written by --scene-out or found in clip metadata.
    #[arg(long, conflicts_with_all = ["caption", "attributes"])]
    scene: Option<PathBuf>,
    /// Sample a scene from a spatial caption.
    #[arg(long, conflicts_with = "attributes")]
    caption: Option<String>,
    /// Sample a scene from an attribute record JSON file.
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// One mono (or downmixed) WAV per source.
    #[arg(long, num_args = 1.., required = true)]
    clips: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    duration: f64,
    #[arg(long, value_enum, default_value = "pcm16")]
    format: Format,
    /// Write the sampled scene JSON here.
    #[arg(long)]
    scene_out: Option<PathBuf>,
    /// Write each source's stereo RIR (float32 WAV) into this directory.
    #[arg(long)]
    export_rir: Option<PathBuf>,
    /// Write coarse and fine azimuth matrices to <stem>.coarse / <stem>.fine.
    #[arg(long)]
    matrices: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    per_subset: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Bad arguments or unreadable inputs: exit status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&message(&self.0))
    }
}

/// The error chain joined by ": ", skipping causes already quoted by the
/// message above them.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out += ": ";
            }
            out += &text;
        }
    }
    out
}

impl std::error::Error for Usage {}

fn usage<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> anyhow::Result<T> {
    r.map_err(|e| Usage(e.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::ParseCaptions(a) => cmd_parse(a),
        Command::RenderScene(a) => cmd_render(a),
        Command::MakeDemo(a) => cmd_demo(a),
    };
    match result {
        Ok(all_ok) => ExitCode::from(if all_ok { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {}", message(&e));
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn cmd_synthesize(a: SynthArgs) -> anyhow::Result<bool> {
    let manifest = usage(Manifest::read(&a.manifest))?;
    if a.sample_rate == 0 || !(a.duration > 0.0 && a.duration.is_finite()) {
        return usage(Err(anyhow::anyhow!(
            "sample rate and duration must be positive"
        )));
    }
    let opts = SynthOptions {
        global_seed: a.seed,
        sample_rate: a.sample_rate,
        duration: a.duration,
        format: a.format.into(),
        subsets: (!a.subset.is_empty()).then_some(a.subset),
        workers: a.workers,
        m_indoor: a.m_indoor,
        sigma: a.sigma,
        llm: usage(a.llm.config())?,
        render: RenderOptions::default(),
    };
    let index = synthesize(&manifest, &a.out, &opts)?;
    println!(
        "{} clips written to {}, {} failed",
        index.clips.len(),
        a.out.display(),
        index.failures.len()
    );
    for f in &index.failures {
        println!("  {}: {}", f.id, f.error);
    }
    Ok(index.failures.is_empty())
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<bool> {
    let report = usage(validate_dataset(&a.dataset))?;
    for v in &report.violations {
        println!("{}\t{}\t{}", v.id, v.check, v.detail);
    }
    println!(
        "{} clips checked, {} violations",
        report.clips,
        report.violations.len()
    );
    if let Some(path) = a.json {
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report.is_clean())
}

fn cmd_evaluate(a: EvalArgs) -> anyhow::Result<bool> {
    let opts = EvalOptions {
        series: SeriesOptions {
            window: a.window,
            gate_dbfs: a.gate_dbfs,
            ..SeriesOptions::default()
        },
        subsets: (!a.subset.is_empty()).then_some(a.subset),
        embeddings: a.gen_embeddings.zip(a.ref_embeddings),
        crw: a.gen_crw.zip(a.ref_crw),
        workers: a.workers,
    };
    let report = usage(evaluate(&a.generated, &a.reference, &opts))?;
    print!("{}", format_table(&report));
    if let Some(path) = a.out {
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    // Pairs skipped for lack of loud windows are not failures; unpaired or
    // unreadable clips are.
    let evaluated: std::collections::HashSet<&str> =
        report.rows.iter().map(|r| r.id.as_str()).collect();
    Ok(report
        .skipped
        .iter()
        .all(|id| evaluated.contains(id.as_str())))
}

fn open_input(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(io::BufReader::new(
            usage(fs::File::open(p)).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(io::stdin().lock()),
    })
}

fn open_output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Deserialize)]
struct GenerateLine {
    attributes: AttributeRecord,
    #[serde(default)]
    events: Option<Vec<String>>,
}

#[derive(Serialize)]
struct ParsedLine {
    caption: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    attributes: Option<AttributeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_parse(a: ParseArgs) -> anyhow::Result<bool> {
    let llm = usage(a.llm.config())?;
    let input = open_input(&a.input)?;
    let mut out = open_output(&a.output)?;
    let mut all_ok = true;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if a.generate {
            match serde_json::from_str::<GenerateLine>(line) {
                Ok(g) => {
                    let events = g.events.unwrap_or_else(|| {
                        g.attributes
                            .sources
                            .iter()
                            .map(|s| s.event.clone())
                            .collect()
                    });
                    writeln!(out, "{}", generate_caption(&g.attributes, &events))?;
                }
                Err(e) => {
                    eprintln!("line {}: {e}", i + 1);
                    all_ok = false;
                }
            }
            continue;
        }
        let result = match &llm {
            Some(config) => {
                induce_via_llm(&LlmInput::Caption(line.to_string()), config).map(|r| r.record)
            }
            None => parse_caption(line),
        };
        let parsed = match result {
            Ok(r) => ParsedLine {
                caption: line.to_string(),
                attributes: Some(r),
                error: None,
            },
            Err(e) => {
                all_ok = false;
                ParsedLine {
                    caption: line.to_string(),
                    attributes: None,
                    error: Some(e.to_string()),
                }
            }
        };
        writeln!(out, "{}", serde_json::to_string(&parsed)?)?;
    }
    out.flush()?;
    Ok(all_ok)
}

fn scene_for(a: &RenderArgs) -> anyhow::Result<SceneSpec> {
    if let Some(path) = &a.scene {
        let text = usage(fs::read_to_string(path))
            .with_context(|| format!("reading {}", path.display()))?;
        return usage(SceneSpec::from_json(&text));
    }
    let record = match (&a.caption, &a.attributes) {
        (Some(text), _) => usage(parse_caption(text))?,
        (None, Some(path)) => {
            let text = usage(fs::read_to_string(path))
                .with_context(|| format!("reading {}", path.display()))?;
            usage(serde_json::from_str::<AttributeRecord>(&text))?
        }
        (None, None) => {
            return usage(Err(anyhow::anyhow!(
                "one of --scene, --caption or --attributes is required"
            )))
        }
    };
    let record = complete_record(
        record,
        &mut SeededRng::with_stream(a.seed, streams::ATTRIBUTES),
    );
    Ok(sample_scene(&record, a.seed, a.duration, a.sample_rate)?)
}

fn cmd_render(a: RenderArgs) -> anyhow::Result<bool> {
    let scene = scene_for(&a)?;
    if a.clips.len() != scene.sources.len() {
        bail!(Usage(anyhow::anyhow!(
            "scene has {} sources but {} clips were given",
            scene.sources.len(),
            a.clips.len()
        )));
    }
    let mut clips = Vec::new();
    for (i, path) in a.clips.iter().enumerate() {
        let mut rng = SeededRng::with_stream(a.seed, streams::CONDITION_BASE + i as u64);
        let (clip, _) = usage(condition_source(
            path,
            scene.sample_rate,
            scene.duration,
            &mut rng,
        ))?;
        clips.push(clip);
    }
    let options = RenderOptions::default();
    let rendered = render_scene(&scene, &clips, &options)?;
    rendered.mix.write_wav(&a.out, a.format.into())?;
    if let Some(path) = &a.scene_out {
        fs::write(path, scene.to_json()? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(dir) = &a.export_rir {
        export_rirs(&scene, &options, dir)?;
    }
    if let Some(stem) = &a.matrices {
        let trajs = scene
            .sources
            .iter()
            .map(|s| BinTrajectory::from_source(s, scene.duration, D_TIME))
            .collect::<binsynth::Result<Vec<_>>>()?;
        AzimuthStateMatrix::coarse(&trajs, D_TIME, DEFAULT_SIGMA)?
            .write(with_ext(stem, "coarse"))?;
        AzimuthStateMatrix::fine(&trajs, D_TIME)?.write(with_ext(stem, "fine"))?;
    }
    println!(
        "{}",
        json!({"out": a.out, "sources": scene.sources.len(), "mix_gain": rendered.mix_gain})
    );
    Ok(true)
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// `source_<i>.wav` at the start position, plus `source_<i>_end.wav` for
/// sources that move. Sample 0 is the emission time.
fn export_rirs(scene: &SceneSpec, options: &RenderOptions, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut rir_opts = options.rir;
    rir_opts.sample_rate = scene.sample_rate;
    for (i, s) in scene.sources.iter().enumerate() {
        let mut points = vec![(format!("source_{i}.wav"), s.start_pos)];
        if s.movement != Movement::Still {
            points.push((format!("source_{i}_end.wav"), s.end_pos));
        }
        for (name, pos) in points {
            let rir = StereoRir::for_scene(&scene.room, &scene.mic_array, pos, &rir_opts)?;
            let (l, r) = (rir.left.aligned().to_vec(), rir.right.aligned().to_vec());
            let n = l.len().max(r.len());
            let mut audio = AudioBuffer::stereo(pad(l, n), pad(r, n), scene.sample_rate)?;
            audio.fit_length(n);
            audio.write_wav(dir.join(&name), WavFormat::Float32)?;
        }
    }
    Ok(())
}

fn pad(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    v.resize(n, 0.0);
    v
}

fn cmd_demo(a: DemoArgs) -> anyhow::Result<bool> {
    let m = write_demo(&a.out, a.per_subset, a.seed)?;
    println!(
        "{} entries written to {}",
        m.entries.len(),
        a.out.join("manifest.jsonl").display()
    );
    Ok(true)
}
