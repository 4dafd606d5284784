//! Episode datasets: optimal planning, sampling, metrics and summaries.

pub mod metrics;
pub mod planner;
pub mod sampler;
pub mod stats;
pub mod types;

pub use metrics::{dts, episode_rng, evaluate, run_episode, run_split, spl, summarize, AgentRef, EvalEpisode, EvalReport, Trace};
pub use planner::{plan, Plan};
pub use sampler::{generate_dataset, sample_episode};
pub use stats::{dataset_stats, render_table, split_stats, SplitStats};
pub use types::{Dataset, DatasetProfile, Episode, Split};
