//! The world-gen, dataset, stats, eval, and replay subcommands, plus the
//! JSONL trajectory-log format they share.

use std::io::{BufRead, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::cli::config::{config_hash, FileConfig};
use crate::cli::render::{render_svg, RenderInput};
use crate::env::house::{generate_house, House, HouseParams, ObjectClass};
use crate::env::sim::{Action, EnvConfig, Simulator};
use crate::episodes::metrics::{run_split, summarize, AgentRef, EvalEpisode, Trace};
use crate::episodes::sampler::generate_dataset;
use crate::episodes::stats::{dataset_stats, render_table};
use crate::episodes::types::{Dataset, DatasetProfile, Episode, Split};
use crate::error::{Error, Result};
use crate::policy::baselines::BaselineKind;
use crate::policy::model::load_model;
use crate::rng;

pub const TRAJECTORY_FORMAT: &str = "objnav.trajectory";
pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------- world-gen

#[derive(Debug, Args)]
pub struct WorldGenArgs {
    /// Houses to generate; the first `profile.seen_houses` of the same
    /// seed become the seen set when a dataset is generated later.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Output directory for house files and the index.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub house: HouseOverrides,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct HouseOverrides {
    #[arg(long)]
    pub grid_width: Option<usize>,
    #[arg(long)]
    pub grid_height: Option<usize>,
    #[arg(long)]
    pub min_rooms: Option<usize>,
    #[arg(long)]
    pub max_rooms: Option<usize>,
    #[arg(long)]
    pub min_objects: Option<usize>,
    #[arg(long)]
    pub max_objects: Option<usize>,
}

impl HouseOverrides {
    pub fn apply(&self, p: &mut HouseParams) {
        if let Some(v) = self.grid_width {
            p.grid_width = v;
        }
        if let Some(v) = self.grid_height {
            p.grid_height = v;
        }
        if let Some(v) = self.min_rooms {
            p.min_rooms = v;
        }
        if let Some(v) = self.max_rooms {
            p.max_rooms = v;
        }
        if let Some(v) = self.min_objects {
            p.min_objects_per_class = v;
        }
        if let Some(v) = self.max_objects {
            p.max_objects_per_class = v;
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HouseIndex {
    format: String,
    version: u32,
    seed: u64,
    config_hash: String,
    params: HouseParams,
    houses: Vec<HouseIndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HouseIndexEntry {
    file: String,
    id: String,
    seed: u64,
}

pub fn cmd_world_gen(cfg: &FileConfig, seed: u64, args: &WorldGenArgs) -> Result<()> {
    let mut params = cfg.house;
    args.house.apply(&mut params);
    std::fs::create_dir_all(&args.out)?;

    let hash = config_hash(&params);
    let mut entries = Vec::with_capacity(args.count);
    for i in 0..args.count {
        // same derivation the dataset generator uses, so a dataset drawn
        // from this seed plays in exactly these houses
        let house_seed = rng::derive_seed(seed, "dataset-house", i as u64);
        let house = generate_house(house_seed, &params)?;
        let file = format!("house-{i:02}.json");
        house.save(&args.out.join(&file))?;
        entries.push(HouseIndexEntry { file, id: house.id().to_string(), seed: house_seed });
    }
    let index = HouseIndex {
        format: "objnav.houses".to_string(),
        version: 1,
        seed,
        config_hash: hash,
        params,
        houses: entries,
    };
    std::fs::write(args.out.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    println!("wrote {} houses to {}", args.count, args.out.display());
    Ok(())
}

// ------------------------------------------------------------------ dataset

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Output manifest path, conventionally `<name>.episodes.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub house: HouseOverrides,
    #[command(flatten)]
    pub profile: ProfileOverrides,
    /// Override the per-episode step cap.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ProfileOverrides {
    #[arg(long)]
    pub seen_houses: Option<usize>,
    #[arg(long)]
    pub unseen_houses: Option<usize>,
    #[arg(long)]
    pub train_per_pair: Option<usize>,
    #[arg(long)]
    pub val_seen_per_pair: Option<usize>,
    #[arg(long)]
    pub test_seen_per_pair: Option<usize>,
    #[arg(long)]
    pub val_unseen_per_pair: Option<usize>,
    #[arg(long)]
    pub test_unseen_per_pair: Option<usize>,
}

impl ProfileOverrides {
    pub fn apply(&self, p: &mut DatasetProfile) {
        if let Some(v) = self.seen_houses {
            p.seen_houses = v;
        }
        if let Some(v) = self.unseen_houses {
            p.unseen_houses = v;
        }
        if let Some(v) = self.train_per_pair {
            p.train_per_pair = v;
        }
        if let Some(v) = self.val_seen_per_pair {
            p.val_seen_per_pair = v;
        }
        if let Some(v) = self.test_seen_per_pair {
            p.test_seen_per_pair = v;
        }
        if let Some(v) = self.val_unseen_per_pair {
            p.val_unseen_per_pair = v;
        }
        if let Some(v) = self.test_unseen_per_pair {
            p.test_unseen_per_pair = v;
        }
    }
}

#[derive(Debug, Serialize)]
struct StatsArtifact<'a> {
    format: &'static str,
    version: u32,
    seed: u64,
    config_hash: &'a str,
    splits: &'a [crate::episodes::stats::SplitStats],
}

/// `foo.episodes.json` maps to `foo`; anything else drops its extension.
fn artifact_base(path: &Path) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match name.strip_suffix(".episodes.json") {
        Some(stem) => path.with_file_name(stem),
        None => path.with_extension(""),
    }
}

fn write_stats_files(ds: &Dataset, base: &Path) -> Result<String> {
    let stats = dataset_stats(ds)?;
    let table = render_table(&stats);
    std::fs::write(base.with_extension("stats.txt"), &table)?;
    let artifact = StatsArtifact {
        format: "objnav.stats",
        version: 1,
        seed: ds.seed,
        config_hash: &ds.config_hash,
        splits: &stats,
    };
    std::fs::write(base.with_extension("stats.json"), serde_json::to_string_pretty(&artifact)?)?;
    Ok(table)
}

pub fn cmd_dataset(cfg: &FileConfig, seed: u64, args: &DatasetArgs) -> Result<()> {
    let mut env = cfg.env;
    if let Some(v) = args.max_steps {
        env.max_steps = v;
    }
    let mut params = cfg.house;
    args.house.apply(&mut params);
    let mut profile = cfg.profile;
    args.profile.apply(&mut profile);

    let hash = config_hash(&(&env, &params, &profile));
    let ds = generate_dataset(seed, &env, &params, &profile, &hash)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    ds.save(&args.out)?;
    let table = write_stats_files(&ds, &artifact_base(&args.out))?;
    print!("{table}");
    println!("wrote {} episodes across {} houses to {}", ds.episodes.len(), ds.houses.len(), args.out.display());
    Ok(())
}

// -------------------------------------------------------------------- stats

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset manifest to summarize.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Also write `<out>.stats.txt` and `<out>.stats.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let ds = Dataset::load(&args.dataset)?;
    match &args.out {
        Some(base) => print!("{}", write_stats_files(&ds, base)?),
        None => print!("{}", render_table(&dataset_stats(&ds)?)),
    }
    Ok(())
}

// --------------------------------------------------------------- trajectory

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub episode: String,
    pub house: String,
    pub agent: String,
    pub goal: String,
    pub start: (f64, f64, usize),
    /// The episode's optimal plan, kept so a replay can draw it.
    pub plan: String,
    pub env: EnvConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajStep {
    pub t: usize,
    pub action: String,
    pub x: f64,
    pub y: f64,
    pub heading: usize,
    pub reward: f64,
    pub collided: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajTerminal {
    pub success: bool,
    pub spl: f64,
    pub dts: f64,
    pub steps: usize,
    pub path_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TrajRecord {
    Header(TrajHeader),
    Step(TrajStep),
    Terminal(TrajTerminal),
}

pub fn write_trajectory(path: &Path, header: &TrajHeader, record: &EvalEpisode, trace: &Trace) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let mut emit = |r: &TrajRecord| -> Result<()> {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
        Ok(())
    };
    emit(&TrajRecord::Header(header.clone()))?;
    for t in 0..trace.actions.len() {
        let (x, y, heading) = trace.poses[t + 1];
        emit(&TrajRecord::Step(TrajStep {
            t,
            action: trace.actions[t].clone(),
            x,
            y,
            heading,
            reward: trace.rewards[t],
            collided: trace.collisions[t],
        }))?;
    }
    emit(&TrajRecord::Terminal(TrajTerminal {
        success: record.success,
        spl: record.spl,
        dts: record.dts,
        steps: record.steps,
        path_length: record.path_length,
    }))?;
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<(TrajHeader, Vec<TrajStep>, TrajTerminal)> {
    let file = std::fs::File::open(path)?;
    let mut header = None;
    let mut steps = Vec::new();
    let mut terminal = None;
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrajRecord>(&line)? {
            TrajRecord::Header(h) => header = Some(h),
            TrajRecord::Step(s) => steps.push(s),
            TrajRecord::Terminal(t) => terminal = Some(t),
        }
    }
    let header = header.ok_or_else(|| Error::Data(format!("{}: missing header record", path.display())))?;
    if header.format != TRAJECTORY_FORMAT {
        return Err(Error::Data(format!("not a trajectory log: format {:?}", header.format)));
    }
    if header.version != TRAJECTORY_FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported trajectory version {}", header.version)));
    }
    let terminal = terminal.ok_or_else(|| Error::Data(format!("{}: missing terminal record", path.display())))?;
    Ok((header, steps, terminal))
}

// --------------------------------------------------------------------- eval

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset manifest to evaluate on.
    #[arg(long)]
    pub dataset: PathBuf,
    /// train, val_seen, test_seen, val_unseen or test_unseen.
    #[arg(long, default_value = "test_seen")]
    pub split: String,
    /// Checkpoint base path (as written by train), greedy by default.
    #[arg(long, group = "agent_choice")]
    pub checkpoint: Option<PathBuf>,
    /// Sample from the policy head instead of taking the argmax.
    #[arg(long, requires = "checkpoint")]
    pub sample: bool,
    /// random, forward_only or oracle.
    #[arg(long, group = "agent_choice")]
    pub agent: Option<String>,
    /// Output directory for the report and trajectory logs.
    #[arg(long)]
    pub out: PathBuf,
    /// Evaluate only the first N episodes of the split.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Skip writing per-episode trajectory logs.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Serialize)]
struct EvalArtifact<'a> {
    format: &'static str,
    version: u32,
    seed: u64,
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a crate::episodes::metrics::EvalReport,
}

fn render_report(report: &crate::episodes::metrics::EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("agent {}  split {}  episodes {}\n", report.agent, report.split, report.n));
    out.push_str(&format!("{:>10} {:>10} {:>10} {:>10}\n", "Success", "SPL", "DTS", "Steps"));
    out.push_str(&format!(
        "{:>10.3} {:>10.3} {:>10.3} {:>10.1}\n",
        report.success_rate, report.mean_spl, report.mean_dts, report.mean_steps
    ));
    out
}

pub fn cmd_eval(seed: u64, args: &EvalArgs) -> Result<()> {
    let ds = Dataset::load(&args.dataset)?;
    let split = Split::from_name(&args.split)
        .ok_or_else(|| Error::Config(format!("unknown split {:?}", args.split)))?;

    // Owning storage for the model branch; AgentRef borrows from it.
    let loaded;
    let agent = match (&args.checkpoint, &args.agent) {
        (Some(base), None) => {
            loaded = load_model(base)?;
            if loaded.0.seg_k() != ds.env.seg_k {
                return Err(Error::Contract(format!(
                    "checkpoint expects {0}x{0} seg patches but the dataset uses {1}x{1}",
                    loaded.0.seg_k(),
                    ds.env.seg_k
                )));
            }
            AgentRef::Model { model: &loaded.0, ps: &loaded.1, greedy: !args.sample }
        }
        (None, Some(name)) => match name.as_str() {
            "oracle" => AgentRef::Oracle,
            other => AgentRef::Baseline(
                BaselineKind::from_name(other)
                    .ok_or_else(|| Error::Config(format!("unknown agent {other:?}")))?,
            ),
        },
        _ => return Err(Error::Config("pass exactly one of --checkpoint or --agent".into())),
    };

    let pairs = run_split(&ds, split, &agent, seed, args.limit)?;
    std::fs::create_dir_all(&args.out)?;

    if !args.no_traces {
        let traj_dir = args.out.join("trajectories");
        std::fs::create_dir_all(&traj_dir)?;
        let by_id: std::collections::HashMap<&str, &Episode> =
            ds.episodes.iter().map(|e| (e.id.as_str(), e)).collect();
        for (record, trace) in &pairs {
            let ep = by_id[record.id.as_str()];
            let header = TrajHeader {
                format: TRAJECTORY_FORMAT.to_string(),
                version: TRAJECTORY_FORMAT_VERSION,
                seed,
                config_hash: ds.config_hash.clone(),
                episode: ep.id.clone(),
                house: ep.house.clone(),
                agent: agent.label(),
                goal: ep.goal.name().to_string(),
                start: (ep.start_x, ep.start_y, ep.start_heading),
                plan: ep.plan.clone(),
                env: ds.env,
            };
            let file = format!("{}.jsonl", ep.id.replace([':', '/'], "_"));
            write_trajectory(&traj_dir.join(file), &header, record, trace)?;
        }
    }

    let report = summarize(split, &agent.label(), pairs.into_iter().map(|(r, _)| r).collect());
    let artifact = EvalArtifact {
        format: "objnav.eval",
        version: 1,
        seed,
        config_hash: &ds.config_hash,
        report: &report,
    };
    std::fs::write(args.out.join("report.json"), serde_json::to_string_pretty(&artifact)?)?;
    let text = render_report(&report);
    std::fs::write(args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

// ------------------------------------------------------------------- replay

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trajectory log written by eval.
    #[arg(long)]
    pub log: PathBuf,
    /// House file written by world-gen.
    #[arg(long, group = "world")]
    pub house: Option<PathBuf>,
    /// Dataset manifest containing the log's house.
    #[arg(long, group = "world")]
    pub dataset: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Re-run `actions` through a fresh simulator, returning every pose. The
/// returned list starts at the start pose and has one entry per action.
fn replay_poses(
    house: &House,
    env: &EnvConfig,
    start: (f64, f64, usize),
    goal: ObjectClass,
    actions: impl Iterator<Item = Action>,
) -> Result<Vec<(f64, f64, usize)>> {
    let mut sim = Simulator::new(house, *env, start, goal)?;
    let mut poses = vec![start];
    for a in actions {
        sim.step(a)?;
        let ag = sim.agent();
        poses.push((ag.x, ag.y, ag.heading));
    }
    Ok(poses)
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let (header, steps, terminal) = read_trajectory(&args.log)?;

    let owned_ds;
    let owned_house;
    let house: &House = match (&args.house, &args.dataset) {
        (Some(path), None) => {
            owned_house = House::load(path)?;
            &owned_house
        }
        (None, Some(path)) => {
            owned_ds = Dataset::load(path)?;
            owned_ds.house(&header.house)?
        }
        _ => return Err(Error::Config("pass exactly one of --house or --dataset".into())),
    };
    if house.id() != header.house {
        return Err(Error::Contract(format!(
            "trajectory was logged in house {:?} but {:?} was supplied",
            header.house,
            house.id()
        )));
    }
    let goal = ObjectClass::from_name(&header.goal)
        .ok_or_else(|| Error::Data(format!("unknown goal class {:?}", header.goal)))?;

    let actions = steps
        .iter()
        .map(|s| Action::from_name(&s.action).ok_or_else(|| Error::Data(format!("unknown action {:?}", s.action))))
        .collect::<Result<Vec<_>>>()?;
    let agent_poses = replay_poses(house, &header.env, header.start, goal, actions.into_iter())?;
    for (pose, logged) in agent_poses.iter().skip(1).zip(&steps) {
        let same = pose.0.to_bits() == logged.x.to_bits()
            && pose.1.to_bits() == logged.y.to_bits()
            && pose.2 == logged.heading;
        if !same {
            return Err(Error::Contract(format!(
                "log does not replay in this house: step {} reaches ({}, {}, {}) but the log says ({}, {}, {})",
                logged.t, pose.0, pose.1, pose.2, logged.x, logged.y, logged.heading
            )));
        }
    }

    let plan = crate::episodes::planner::Plan::decode(&header.plan)?;
    let oracle_poses = replay_poses(house, &header.env, header.start, goal, plan.actions.iter().copied())?;

    let agent_xy: Vec<(f64, f64)> = agent_poses.iter().map(|p| (p.0, p.1)).collect();
    let oracle_xy: Vec<(f64, f64)> = oracle_poses.iter().map(|p| (p.0, p.1)).collect();
    let caption = format!(
        "{} [{}] goal={} success={} spl={:.3} dts={:.3}",
        header.episode, header.agent, header.goal, terminal.success, terminal.spl, terminal.dts
    );
    let svg = render_svg(&RenderInput {
        house,
        goal,
        success_distance: header.env.success_distance,
        agent_path: &agent_xy,
        oracle_path: &oracle_xy,
        caption: &caption,
    });
    std::fs::write(&args.out, svg)?;
    println!("rendered {} steps to {}", steps.len(), args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_base_strips_the_conventional_suffix() {
        assert_eq!(artifact_base(Path::new("/tmp/bench.episodes.json")), Path::new("/tmp/bench"));
        assert_eq!(artifact_base(Path::new("bench.json")), Path::new("bench"));
    }

    #[test]
    fn trajectory_logs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let header = TrajHeader {
            format: TRAJECTORY_FORMAT.to_string(),
            version: TRAJECTORY_FORMAT_VERSION,
            seed: 3,
            config_hash: "abc".into(),
            episode: "h:train:chair:000".into(),
            house: "h".into(),
            agent: "oracle".into(),
            goal: "chair".into(),
            start: (0.625, 0.875, 2),
            plan: "FS".into(),
            env: EnvConfig::default(),
        };
        let record = EvalEpisode {
            id: header.episode.clone(),
            goal: "chair".into(),
            success: true,
            steps: 2,
            path_length: 0.25,
            shortest_path: 0.25,
            spl: 1.0,
            dts: 0.0,
        };
        let trace = Trace {
            poses: vec![(0.625, 0.875, 2), (0.625, 1.125, 2), (0.625, 1.125, 2)],
            actions: vec!["go_forward".into(), "stop".into()],
            rewards: vec![0.24, 2.49],
            collisions: vec![false, false],
        };
        write_trajectory(&path, &header, &record, &trace).unwrap();
        let (h2, steps, term) = read_trajectory(&path).unwrap();
        assert_eq!(h2.episode, header.episode);
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].action, "go_forward");
        assert_eq!(steps[0].x.to_bits(), 0.625f64.to_bits());
        assert_eq!(steps[1].t, 1);
        assert!(term.success);
        assert_eq!(term.steps, 2);
    }

    #[test]
    fn truncated_trajectory_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{\"type\":\"terminal\",\"success\":false,\"spl\":0.0,\"dts\":1.0,\"steps\":0,\"path_length\":0.0}\n").unwrap();
        match read_trajectory(&path) {
            Err(Error::Data(msg)) => assert!(msg.contains("missing header")),
            other => panic!("expected data error, got {other:?}"),
        }
    }
}
