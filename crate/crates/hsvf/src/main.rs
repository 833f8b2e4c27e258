use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hsvf::data_model::{load_manifest, load_pair, Condition, Image, ScenePair};
use hsvf::error::{Error, Result};
use hsvf::harness::{self, evaluate, plots, Config, Stage};
use hsvf::metrics::{load_model, FogModel, MetricReport, NssModel};
use hsvf::scene_synthesis::{synthesize_corpus, CorpusOptions};

#[derive(Parser)]
#[command(name = "hsvf", about = "Hierarchical semantic-visual fusion for VIS/NIR haze removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a MiniVNHD corpus (clear/hazy pairs + manifest).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        /// Scattering-coefficient range for the visible branch.
        #[arg(long, default_value_t = 0.4)]
        beta_min: f64,
        #[arg(long, default_value_t = 1.2)]
        beta_max: f64,
    },
    /// Fit the fog-density and natural-statistics models on the clear split.
    FitMetrics {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one training stage.
    Train {
        #[arg(long)]
        stage: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the checkpoint of a stage on the validation split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "finetune")]
        stage: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run inference on one visible/NIR pair.
    Infer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "finetune")]
        stage: String,
        #[arg(long)]
        vis: PathBuf,
        #[arg(long)]
        nir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write O_SR / O_VF / predicted mask next to the output.
        #[arg(long, default_value_t = false)]
        intermediates: bool,
    },
    /// Train + evaluate one ablation arm end to end.
    Ablate {
        #[arg(long)]
        arm: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render plots from a metric report.
    Report {
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long)]
        plots: PathBuf,
    },
}

fn clear_images(cfg: &Config) -> Result<Vec<Image>> {
    let entries = load_manifest(&cfg.manifest_path())?;
    let mut clear = Vec::new();
    for e in &entries {
        if e.condition == Condition::Clear {
            clear.push(load_pair(e, &cfg.data_dir)?.visible);
        }
    }
    Ok(clear)
}

fn load_metric_models(cfg: &Config) -> Result<(FogModel, NssModel)> {
    let fog_path = cfg.out_dir.join("fog_model.json");
    let nss_path = cfg.out_dir.join("nss_model.json");
    if !fog_path.exists() || !nss_path.exists() {
        return Err(Error::config(
            "metric models not fitted; run `hsvf fit-metrics` first",
        ));
    }
    Ok((load_model(&fog_path)?, load_model(&nss_path)?))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { out, count, seed, size, beta_min, beta_max } => {
            let opts = CorpusOptions {
                count,
                seed,
                size,
                beta_range: (beta_min, beta_max),
                ..Default::default()
            };
            let entries = synthesize_corpus(&opts, &out)?;
            println!("wrote {} manifest entries to {}", entries.len(), out.display());
        }
        Command::FitMetrics { config } => {
            let cfg = Config::load(&config)?;
            let clear = clear_images(&cfg)?;
            evaluate::fit_metric_models(&clear, &cfg.out_dir)?;
            println!("fitted fog/nss models on {} clear images", clear.len());
        }
        Command::Train { stage, config } => {
            let cfg = Config::load(&config)?;
            let stage = Stage::parse(&stage)?;
            let outcome = harness::run_stage(&cfg, stage)?;
            println!(
                "stage {} done: {} steps, final loss {:.6}, checkpoint {}",
                stage.name(),
                outcome.steps,
                outcome.final_total,
                outcome.checkpoint.display()
            );
        }
        Command::Eval { config, stage, out } => {
            let cfg = Config::load(&config)?;
            let stage = Stage::parse(&stage)?;
            let model = harness::load_stage_model(&cfg, stage)?;
            let data = harness::load_dataset(&cfg)?;
            let (fog, nss) = load_metric_models(&cfg)?;
            let report = evaluate::evaluate_model(&model, &data.val, &fog, &nss)?;
            report.save(&out)?;
            for (metric, agg) in &report.aggregate {
                println!("{metric}: mean {:.4} std {:.4} (n={})", agg.mean, agg.std, agg.count);
            }
            println!("report written to {}", out.display());
        }
        Command::Infer { config, stage, vis, nir, out, intermediates } => {
            let cfg = Config::load(&config)?;
            let stage = Stage::parse(&stage)?;
            let model = harness::load_stage_model(&cfg, stage)?;
            let visible = hsvf::data_model::load_image_png(&vis, 3)?;
            let nir_img = hsvf::data_model::load_image_png(&nir, 1)?;
            let pair = ScenePair {
                id: "infer".to_string(),
                visible,
                nir: nir_img,
                mask: None,
                depth: None,
                condition: Condition::Haze,
                haze_params: None,
            };
            let result = model.infer(&pair)?;
            hsvf::data_model::save_image_png(&result.o_final, &out)?;
            if intermediates {
                let stem = out.with_extension("");
                let p = |suffix: &str| {
                    PathBuf::from(format!("{}_{suffix}.png", stem.display()))
                };
                hsvf::data_model::save_image_png(&result.o_sr, &p("sr"))?;
                hsvf::data_model::save_image_png(&result.o_vf, &p("vf"))?;
            }
            println!("wrote {}", out.display());
        }
        Command::Ablate { arm, config, out } => {
            let cfg = Config::load(&config)?;
            match arm.as_str() {
                "attention" | "alignment" | "discriminator" | "weights" => {}
                other => {
                    return Err(Error::config(format!(
                        "unknown ablation arm '{other}' (expected attention|alignment|discriminator|weights)"
                    )))
                }
            }
            // The config file carries the concrete flag settings; `--arm`
            // selects which stages need re-running.
            let stages: &[Stage] = match arm.as_str() {
                "alignment" => &[Stage::Align],
                "attention" => &[Stage::Align, Stage::Recon, Stage::Fusion, Stage::Finetune],
                _ => &[Stage::Align, Stage::Recon, Stage::Fusion, Stage::Finetune],
            };
            cfg.validate()?;
            for &stage in stages {
                harness::run_stage(&cfg, stage)?;
            }
            let last = *stages.last().unwrap();
            let model = harness::load_stage_model(&cfg, last)?;
            let data = harness::load_dataset(&cfg)?;
            if arm == "alignment" {
                let miou = harness::validation_miou(&model, &data.val, &cfg.ablation)?;
                std::fs::write(&out, format!("{{\"miou\": {miou}}}\n"))
                    .map_err(|e| Error::io(&out, e))?;
                println!("alignment arm mIoU {miou:.4} -> {}", out.display());
            } else {
                let (fog, nss) = load_metric_models(&cfg)?;
                let report = evaluate::evaluate_model(&model, &data.val, &fog, &nss)?;
                report.save(&out)?;
                println!("ablation report written to {}", out.display());
            }
        }
        Command::Report { input, plots: plot_dir } => {
            let report = MetricReport::load(&input)?;
            plots::report_plots(&report, &plot_dir)?;
            println!("plots written to {}", plot_dir.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
