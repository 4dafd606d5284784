//! The train subcommand: PPO on the train split with periodic seen-val
//! evaluation, JSONL logging, and resumable checkpoints.

use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use crate::autodiff::{AdamState, ParameterSet};
use crate::cli::config::{config_hash, FileConfig};
use crate::episodes::metrics::{evaluate, AgentRef};
use crate::episodes::types::{Dataset, Split};
use crate::error::{Error, Result};
use crate::policy::model::{load_model, save_model, Model, ModelKind};
use crate::rl::ppo::{PpoConfig, Trainer, UpdateStats};

pub const TRAINLOG_FORMAT: &str = "objnav.trainlog";
pub const TRAINLOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest to train on.
    #[arg(long)]
    pub dataset: PathBuf,
    /// smtsc, smt_wo_sc, lstm or reactive; defaults to the config file's
    /// policy.model.
    #[arg(long)]
    pub model: Option<String>,
    /// Output directory for checkpoints and the training log.
    #[arg(long)]
    pub out: PathBuf,
    /// Total update target, previous runs included when resuming.
    #[arg(long, default_value_t = 100)]
    pub updates: usize,
    /// Greedy seen-val evaluation cadence in updates; 0 disables.
    #[arg(long, default_value_t = 25)]
    pub eval_every: usize,
    /// Episodes per periodic evaluation.
    #[arg(long, default_value_t = 50)]
    pub eval_limit: usize,
    /// Checkpoint cadence in updates; a final checkpoint is always written.
    #[arg(long, default_value_t = 50)]
    pub checkpoint_every: usize,
    /// Checkpoint base path to continue from.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub ppo: PpoOverrides,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct PpoOverrides {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub minibatch: Option<usize>,
    /// Minimum environment steps collected per update.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lam: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    #[arg(long)]
    pub memory_window: Option<usize>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
}

impl PpoOverrides {
    pub fn apply(&self, p: &mut PpoConfig) {
        if let Some(v) = self.lr {
            p.lr = v;
        }
        if let Some(v) = self.clip {
            p.clip = v;
        }
        if let Some(v) = self.epochs {
            p.epochs = v;
        }
        if let Some(v) = self.minibatch {
            p.minibatch = v;
        }
        if let Some(v) = self.horizon {
            p.horizon = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.lam {
            p.lam = v;
        }
        if let Some(v) = self.entropy_coef {
            p.entropy_coef = v;
        }
        if let Some(v) = self.value_coef {
            p.value_coef = v;
        }
        if let Some(v) = self.memory_window {
            p.memory_window = v;
        }
        if let Some(v) = self.max_grad_norm {
            p.max_grad_norm = Some(v);
        }
    }
}

#[derive(Serialize)]
struct LogHeader<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    format: &'static str,
    version: u32,
    seed: u64,
    config_hash: &'a str,
    model: &'a str,
    dataset_seed: u64,
    dataset_config_hash: &'a str,
    updates_target: usize,
    resumed_at: Option<usize>,
}

#[derive(Serialize)]
struct LogUpdate<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    wall_time_s: f64,
    #[serde(flatten)]
    stats: &'a UpdateStats,
}

#[derive(Serialize)]
struct LogEval<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    update: usize,
    split: &'a str,
    agent: &'a str,
    n: usize,
    success_rate: f64,
    mean_spl: f64,
    mean_dts: f64,
    mean_steps: f64,
}

fn append_record<T: Serialize>(w: &mut BufWriter<std::fs::File>, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn extra_field_usize(manifest: &crate::policy::model::ModelManifest, key: &str) -> usize {
    manifest.extra.get(key).and_then(|v| v.as_u64()).unwrap_or(0) as usize
}

pub fn cmd_train(cfg: &FileConfig, seed: u64, args: &TrainArgs) -> Result<()> {
    let ds = Dataset::load(&args.dataset)?;
    let mut ppo = cfg.ppo;
    args.ppo.apply(&mut ppo);

    let (model, ps, adam, resumed_at) = match &args.resume {
        Some(base) => {
            let (model, ps, adam, manifest) = load_model(base)?;
            if let Some(name) = &args.model {
                if ModelKind::from_name(name) != Some(model.kind()) {
                    return Err(Error::Contract(format!(
                        "checkpoint holds a {} model but --model {name} was requested",
                        model.kind().name()
                    )));
                }
            }
            let done = extra_field_usize(&manifest, "updates");
            let cursor = extra_field_usize(&manifest, "cursor");
            let adam = adam.unwrap_or_else(|| AdamState::new(&ps));
            (model, ps, adam, Some((done, cursor)))
        }
        None => {
            let name = args.model.as_deref().unwrap_or(&cfg.policy.model);
            let kind = ModelKind::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown model kind {name:?}")))?;
            let mut ps = ParameterSet::new();
            let model = Model::new(&mut ps, kind, ds.env.seg_k, seed)?;
            let adam = AdamState::new(&ps);
            (model, ps, adam, None)
        }
    };
    if model.seg_k() != ds.env.seg_k {
        return Err(Error::Contract(format!(
            "model expects {0}x{0} seg patches but the dataset uses {1}x{1}",
            model.seg_k(),
            ds.env.seg_k
        )));
    }
    let kind_name = model.kind().name();
    let hash = config_hash(&(&ds.env, &ppo, kind_name));

    let mut trainer = Trainer::new(model, ps, adam, &ds, Split::Train, ppo, seed)?;
    if let Some((done, cursor)) = resumed_at {
        trainer.set_progress(done, cursor);
    }

    std::fs::create_dir_all(&args.out)?;
    let log_path = args.out.join("train.jsonl");
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)?;
    let mut log = BufWriter::new(file);
    append_record(
        &mut log,
        &LogHeader {
            kind: "header",
            format: TRAINLOG_FORMAT,
            version: TRAINLOG_FORMAT_VERSION,
            seed,
            config_hash: &hash,
            model: kind_name,
            dataset_seed: ds.seed,
            dataset_config_hash: &ds.config_hash,
            updates_target: args.updates,
            resumed_at: resumed_at.map(|(done, _)| done),
        },
    )?;

    let mut eval_every = args.eval_every;
    if eval_every > 0 && ds.split(Split::ValSeen).next().is_none() {
        eprintln!("warning: dataset has no val_seen episodes; periodic evaluation disabled");
        eval_every = 0;
    }

    let save = |trainer: &Trainer, updates: usize, cursor: usize| -> Result<()> {
        let mut extra = serde_json::Map::new();
        extra.insert("updates".into(), json!(updates));
        extra.insert("cursor".into(), json!(cursor));
        extra.insert("seed".into(), json!(seed));
        extra.insert("config_hash".into(), json!(hash));
        extra.insert("dataset_seed".into(), json!(ds.seed));
        save_model(&args.out.join("latest"), &trainer.model, &trainer.ps, Some(&trainer.adam), extra)
    };

    let started = Instant::now();
    while trainer.update_index() < args.updates {
        let t0 = Instant::now();
        let stats = trainer.train_update()?;
        append_record(&mut log, &LogUpdate { kind: "update", wall_time_s: t0.elapsed().as_secs_f64(), stats: &stats })?;
        println!(
            "update {:>4}  steps {:>6}  ep {:>4}  success {:.2}  return {:>7.2}  pi {:+.4}  v {:.4}  H {:.3}  clip {:.2}",
            stats.update,
            stats.env_steps,
            stats.episodes,
            stats.success_rate,
            stats.mean_return,
            stats.policy_loss,
            stats.value_loss,
            stats.entropy,
            stats.clip_fraction
        );

        let done_updates = trainer.update_index();
        if eval_every > 0 && done_updates % eval_every == 0 {
            let agent = AgentRef::Model { model: &trainer.model, ps: &trainer.ps, greedy: true };
            let report = evaluate(&ds, Split::ValSeen, &agent, seed, Some(args.eval_limit))?;
            append_record(
                &mut log,
                &LogEval {
                    kind: "eval",
                    update: done_updates,
                    split: &report.split,
                    agent: &report.agent,
                    n: report.n,
                    success_rate: report.success_rate,
                    mean_spl: report.mean_spl,
                    mean_dts: report.mean_dts,
                    mean_steps: report.mean_steps,
                },
            )?;
            println!(
                "  eval {:>4}  {}  success {:.2}  spl {:.3}  dts {:.3}",
                done_updates, report.split, report.success_rate, report.mean_spl, report.mean_dts
            );
        }
        if args.checkpoint_every > 0 && done_updates % args.checkpoint_every == 0 {
            let (updates, cursor) = trainer.progress();
            save(&trainer, updates, cursor)?;
        }
    }

    let (updates, cursor) = trainer.progress();
    save(&trainer, updates, cursor)?;
    append_record(
        &mut log,
        &json!({"type": "done", "updates": updates, "wall_time_s": started.elapsed().as_secs_f64()}),
    )?;
    println!("trained to update {updates}; checkpoint at {}", args.out.join("latest").display());
    Ok(())
}
