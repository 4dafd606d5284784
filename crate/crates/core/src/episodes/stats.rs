//! Per-class dataset summary: mean Euclidean and geodesic start-to-goal
//! distances and mean optimal-plan steps, per split.

use serde::{Deserialize, Serialize};

use crate::env::house::ObjectClass;
use crate::episodes::types::{Dataset, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub n: usize,
    pub euclidean: f64,
    pub geodesic: f64,
    pub steps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: String,
    pub n: usize,
    pub classes: Vec<ClassRow>,
    pub total: ClassRow,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn split_stats(ds: &Dataset, split: Split) -> Result<SplitStats> {
    let episodes: Vec<_> = ds.split(split).collect();
    if episodes.is_empty() {
        return Err(Error::Data(format!("split {} has no episodes", split.name())));
    }
    let row = |label: &str, eps: &[&crate::episodes::types::Episode]| ClassRow {
        class: label.to_string(),
        n: eps.len(),
        euclidean: mean(&eps.iter().map(|e| e.euclidean).collect::<Vec<_>>()),
        geodesic: mean(&eps.iter().map(|e| e.geodesic).collect::<Vec<_>>()),
        steps: mean(&eps.iter().map(|e| e.shortest_path_steps as f64).collect::<Vec<_>>()),
    };
    let mut classes = Vec::new();
    for class in ObjectClass::ALL {
        let eps: Vec<_> = episodes.iter().copied().filter(|e| e.goal == class).collect();
        if !eps.is_empty() {
            classes.push(row(class.name(), &eps));
        }
    }
    Ok(SplitStats {
        split: split.name().to_string(),
        n: episodes.len(),
        classes,
        total: row("total", &episodes),
    })
}

pub fn dataset_stats(ds: &Dataset) -> Result<Vec<SplitStats>> {
    let mut out = Vec::new();
    for split in Split::ALL {
        if ds.split(split).next().is_some() {
            out.push(split_stats(ds, split)?);
        }
    }
    Ok(out)
}

/// Fixed-width text rendering, one block per split with the class rows and
/// a total-average line.
pub fn render_table(stats: &[SplitStats]) -> String {
    let mut out = String::new();
    for (i, s) in stats.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{} ({} episodes)\n", s.split, s.n));
        out.push_str(&format!("  {:<14} {:>6} {:>9} {:>9} {:>7}\n", "class", "n", "euc (m)", "geo (m)", "steps"));
        for r in s.classes.iter().chain(std::iter::once(&s.total)) {
            out.push_str(&format!(
                "  {:<14} {:>6} {:>9.3} {:>9.3} {:>7.2}\n",
                r.class, r.n, r.euclidean, r.geodesic, r.steps
            ));
        }
    }
    out
}
