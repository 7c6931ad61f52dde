use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vidvote::eval::{render_report, roc_point};
use vidvote::media_io::{decode_video, load_artifact, load_manifest, store_artifact, DatasetManifest};
use vidvote::pipeline::crossval::align_features;
use vidvote::pipeline::extract::{extract_many, load_entry};
use vidvote::pipeline::synth::{write_corpus, SynthParams};
use vidvote::pipeline::train::{build_vocabulary, train_channel_model, ChannelVocabulary, TrainedChannel};
use vidvote::pipeline::{cross_validate, PipelineConfig, Scope, TrainedPipeline, VideoFeatures};
use vidvote::{Error, Result};

#[derive(Parser)]
#[command(name = "vidvote", version, about = "Classify videos by voting linear classifiers over visual features")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-video features into <out>/features
    Extract(ManifestArg),
    /// Learn the codebooks of the BoVF channels from extracted features
    Codebook(ManifestArg),
    /// Train one balanced linear model per channel
    Train(ManifestArg),
    /// Classify videos and print one JSON record per video
    Classify {
        /// Video files (.y4m) or frame directories
        videos: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run the cross-validation protocol and write the report bundle
    Crossval(ManifestArg),
    /// Generate the synthetic labelled corpus
    Synth {
        #[arg(long, default_value_t = 100)]
        positives: usize,
        #[arg(long, default_value_t = 100)]
        negatives: usize,
        /// Maximum shots per clip
        #[arg(long, default_value_t = 2)]
        max_shots: usize,
    },
}

#[derive(Args)]
struct ManifestArg {
    /// Dataset manifest (CSV); defaults to `paths.manifest` of the config
    #[arg(long)]
    manifest: Option<PathBuf>,
}

struct Context {
    cfg: PipelineConfig,
    config_dir: PathBuf,
    out: PathBuf,
}

impl Context {
    fn load(common: &Common) -> Result<Context> {
        let path = common.config.as_ref().ok_or_else(|| Error::Config {
            path: "--config".into(),
            message: "this subcommand needs a configuration file".into(),
        })?;
        let mut cfg = PipelineConfig::load(path)?;
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if common.jobs.is_some() {
            cfg.jobs = common.jobs;
        }
        cfg.validate()?;
        let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = common
            .out
            .clone()
            .or_else(|| cfg.paths.out.as_ref().map(|o| config_dir.join(o)))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Context { cfg, config_dir, out })
    }

    fn manifest(&self, arg: Option<&PathBuf>) -> Result<DatasetManifest> {
        let path = match (arg, &self.cfg.paths.manifest) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => self.config_dir.join(p),
            (None, None) => {
                return Err(Error::Config {
                    path: "paths.manifest".into(),
                    message: "no manifest given (use --manifest or set paths.manifest)".into(),
                })
            }
        };
        load_manifest(&path)
    }

    fn features_path(&self, video_id: &str) -> PathBuf {
        self.out.join("features").join(format!("{video_id}.features"))
    }

    fn codebook_path(&self, channel: &str, ext: &str) -> PathBuf {
        self.out.join("codebooks").join(format!("{channel}.{ext}"))
    }

    fn model_path(&self, channel: &str) -> PathBuf {
        self.out.join("models").join(format!("{channel}.model"))
    }

    /// Loads a stored artifact, naming the producing subcommand when absent.
    fn require<A: vidvote::media_io::Artifact>(&self, path: &Path, producer: &'static str) -> Result<A> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: format!("{} `{}`", A::NAME, path.display()),
                producer,
            });
        }
        load_artifact(path)
    }

    fn stored_features(&self, manifest: &DatasetManifest) -> Result<Vec<VideoFeatures>> {
        manifest
            .entries()
            .iter()
            .map(|e| self.require(&self.features_path(&e.video_id), "extract"))
            .collect()
    }

    fn vocabulary(&self, channel: &str, pca: bool) -> Result<ChannelVocabulary> {
        let pca = if pca {
            Some(self.require(&self.codebook_path(channel, "pca"), "codebook")?)
        } else {
            None
        };
        Ok(ChannelVocabulary {
            channel_id: channel.to_string(),
            pca,
            codebook: self.require(&self.codebook_path(channel, "codebook"), "codebook")?,
        })
    }

    fn vocabularies(&self) -> Result<Vec<Option<ChannelVocabulary>>> {
        self.cfg
            .channels
            .iter()
            .map(|c| {
                c.kind
                    .is_bovf()
                    .then(|| self.vocabulary(&c.id, c.kind == vidvote::pipeline::FeatureKind::PcasiftBovf))
                    .transpose()
            })
            .collect()
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth {
        positives,
        negatives,
        max_shots,
    } = cli.command
    {
        let params = SynthParams {
            positives,
            negatives,
            max_shots,
            seed: cli.common.seed.unwrap_or(SynthParams::default().seed),
            ..SynthParams::default()
        };
        let out = cli.common.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
        let pool = vidvote::pipeline::extract::worker_pool(cli.common.jobs)?;
        let manifest = pool.install(|| write_corpus(&params, &out))?;
        println!("wrote {} clips to {}", manifest.len(), out.display());
        return Ok(());
    }
    let ctx = Context::load(&cli.common)?;
    let cfg = &ctx.cfg;
    match cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Extract(arg) => {
            let manifest = ctx.manifest(arg.manifest.as_ref())?;
            let feats = extract_many(manifest.entries(), cfg, load_entry)?;
            for f in &feats {
                store_artifact(f, &ctx.features_path(&f.video_id))?;
            }
            println!("extracted {} videos into {}", feats.len(), ctx.out.join("features").display());
        }
        Command::Codebook(arg) => {
            let manifest = ctx.manifest(arg.manifest.as_ref())?;
            let feats = ctx.stored_features(&manifest)?;
            let refs: Vec<&VideoFeatures> = feats.iter().collect();
            for spec in cfg.channels.iter().filter(|c| c.kind.is_bovf()) {
                let voc = build_vocabulary(cfg, spec, &refs, Scope::Full)?;
                if let Some(p) = &voc.pca {
                    store_artifact(p, &ctx.codebook_path(&spec.id, "pca"))?;
                }
                store_artifact(&voc.codebook, &ctx.codebook_path(&spec.id, "codebook"))?;
                println!("channel {}: {} words", spec.id, voc.codebook.k());
            }
        }
        Command::Train(arg) => {
            let manifest = ctx.manifest(arg.manifest.as_ref())?;
            let vocabularies = ctx.vocabularies()?;
            let feats = ctx.stored_features(&manifest)?;
            let data = align_features(&manifest, &feats)?;
            for (spec, voc) in cfg.channels.iter().zip(&vocabularies) {
                let model = train_channel_model(cfg, spec, voc.as_ref(), &data, Scope::Full)?;
                store_artifact(&model, &ctx.model_path(&spec.id))?;
                println!(
                    "channel {}: trained on {} positive and {} negative elements",
                    spec.id, model.positives, model.negatives
                );
            }
        }
        Command::Classify { videos, manifest } => {
            let vocabularies = ctx.vocabularies()?;
            let mut channels = Vec::new();
            for (spec, vocabulary) in cfg.channels.iter().zip(vocabularies) {
                channels.push(TrainedChannel {
                    spec: spec.clone(),
                    vocabulary,
                    model: ctx.require(&ctx.model_path(&spec.id), "train")?,
                });
            }
            let pipeline = TrainedPipeline {
                channels,
                fusion: cfg.training.fusion.clone(),
            };
            let feats = match manifest {
                Some(m) => extract_many(load_manifest(&m)?.entries(), cfg, load_entry)?,
                None if videos.is_empty() => {
                    return Err(Error::Config {
                        path: "classify".into(),
                        message: "give video paths or --manifest".into(),
                    })
                }
                None => extract_many(&videos, cfg, |p| decode_video(p))?,
            };
            for f in &feats {
                let d = pipeline.classify(f, None)?;
                println!("{}", serde_json::to_string(&d).map_err(|e| Error::Invariant(e.to_string()))?);
            }
        }
        Command::Crossval(arg) => {
            let manifest = ctx.manifest(arg.manifest.as_ref())?;
            let feats = extract_many(manifest.entries(), cfg, load_entry)?;
            let cv = cross_validate(cfg, &manifest, &feats)?;
            let dir = ctx.out.join("report");
            render_report(&cv.report)?.write_to(&dir)?;
            store_artifact(&cv.report, &dir.join("report.eval"))?;
            write_json(&dir.join("folds.json"), &cv.plan)?;
            for r in &cv.report.results {
                let points: Vec<String> = r
                    .folds
                    .iter()
                    .map(|c| match roc_point(c) {
                        Ok((t, f)) => format!("({t:.3}, {f:.3})"),
                        Err(_) => "undefined".into(),
                    })
                    .collect();
                println!("{}: {}", r.configuration_id, points.join(" "));
            }
            println!("report written to {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the configuration exit status
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
