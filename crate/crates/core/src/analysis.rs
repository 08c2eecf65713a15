//! Parameter-importance statistics and difficulty breakdowns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalRecord, Tally};
use crate::task::{ParamValue, Subtask};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

/// Midranks (1-based) of `values`, ties sharing their average rank, and the
/// tie term sum(t^3 - t).
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Tie-corrected Kruskal-Wallis H test. When every sample is equal the
/// statistic is defined as 0 with p = 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("group {i} is empty")));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let n = all.len() as f64;
    if all.len() < 3 {
        return Err(Error::invalid("need at least 3 samples in total"));
    }
    let df = groups.len() - 1;
    let (ranks, ties) = midranks(&all);
    let divisor = 1.0 - ties / (n * n * n - n);
    if divisor <= 1e-12 {
        return Ok(KruskalWallis { h: 0.0, df, p: 1.0 });
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / divisor;
    let h = h.max(0.0);
    Ok(KruskalWallis {
        h,
        df,
        p: chi_square_sf(h, df as f64)?,
    })
}

/// Chi-square upper tail Q(df/2, x/2).
pub fn chi_square_sf(x: f64, df: f64) -> Result<f64> {
    if !(df >= 1.0) {
        return Err(Error::invalid(format!("df must be >= 1, got {df}")));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::gamma_ur(df / 2.0, x / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGroup {
    pub level: String,
    pub size: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub subtask: Subtask,
    pub parameter: String,
    pub groups: Vec<LevelGroup>,
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub alpha: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub reports: Vec<ParamReport>,
    /// Parameters that could not be tested, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn level_order(a: &ParamValue, b: &ParamValue) -> std::cmp::Ordering {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

/// One Kruskal-Wallis test per control parameter of `subtask`, using 0/1
/// correctness grouped by the parameter's level as samples.
pub fn parameter_importance(
    records: &[EvalRecord],
    subtask: Subtask,
    alpha: f64,
) -> Result<ImportanceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let recs: Vec<&EvalRecord> = records.iter().filter(|r| r.subtask == subtask).collect();
    let mut out = ImportanceReport::default();
    for &name in subtask.param_names() {
        let mut levels: Vec<(ParamValue, Vec<f64>)> = Vec::new();
        for r in &recs {
            let Some(v) = r.params.get(name) else { continue };
            let sample = if r.correct { 1.0 } else { 0.0 };
            match levels.iter_mut().find(|(l, _)| l == v) {
                Some((_, s)) => s.push(sample),
                None => levels.push((v.clone(), vec![sample])),
            }
        }
        levels.sort_by(|a, b| level_order(&a.0, &b.0));
        if levels.len() < 2 {
            out.skipped.push((
                name.to_string(),
                format!("only {} level(s) present", levels.len()),
            ));
            continue;
        }
        let samples: Vec<Vec<f64>> = levels.iter().map(|(_, s)| s.clone()).collect();
        let kw = match kruskal_wallis(&samples) {
            Ok(kw) => kw,
            Err(e) => {
                out.skipped.push((name.to_string(), e.to_string()));
                continue;
            }
        };
        out.reports.push(ParamReport {
            subtask,
            parameter: name.to_string(),
            groups: levels
                .iter()
                .map(|(l, s)| LevelGroup {
                    level: l.to_string(),
                    size: s.len(),
                    accuracy: s.iter().sum::<f64>() / s.len() as f64,
                })
                .collect(),
            h: kw.h,
            df: kw.df,
            p: kw.p,
            alpha,
            significant: kw.p < alpha,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    #[serde(alias = "easy")]
    Easy,
    #[serde(alias = "Medium", alias = "moderate", alias = "medium")]
    Moderate,
    #[serde(alias = "hard")]
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Moderate => "Moderate",
            Difficulty::Hard => "Hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "moderate" | "medium" => Ok(Difficulty::Moderate),
            "hard" => Ok(Difficulty::Hard),
            _ => Err(Error::invalid(format!("unknown difficulty {s:?}"))),
        }
    }
}

/// Accuracy per rated difficulty; unrated items are ignored and levels
/// without items are absent.
pub fn difficulty_breakdown(
    records: &[EvalRecord],
    ratings: &HashMap<String, Difficulty>,
) -> BTreeMap<Difficulty, Tally> {
    let mut out: BTreeMap<Difficulty, Tally> = BTreeMap::new();
    for r in records {
        if let Some(&d) = ratings.get(&r.instance_id) {
            out.entry(d).or_default().add(r.correct);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_h() {
        let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((kw.h - 27.0 / 7.0).abs() < 1e-12);
        assert_eq!(kw.df, 1);
    }

    #[test]
    fn constant_samples() {
        let kw = kruskal_wallis(&[vec![2.0; 3], vec![2.0; 4]]).unwrap();
        assert_eq!((kw.h, kw.p), (0.0, 1.0));
    }

    #[test]
    fn bad_groups() {
        assert!(kruskal_wallis(&[vec![1.0, 2.0, 3.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0, 2.0], vec![]]).is_err());
    }

    #[test]
    fn chi_square_closed_forms() {
        assert!((chi_square_sf(2.0, 2.0).unwrap() - (-1f64).exp()).abs() < 1e-10);
        assert_eq!(chi_square_sf(0.0, 5.0).unwrap(), 1.0);
        assert!(chi_square_sf(1.0, 0.0).is_err());
    }

    #[test]
    fn medium_alias() {
        assert_eq!("Medium".parse::<Difficulty>().unwrap(), Difficulty::Moderate);
        let d: Difficulty = serde_json::from_str("\"Medium\"").unwrap();
        assert_eq!(d, Difficulty::Moderate);
    }
}
