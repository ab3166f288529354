//! Contest-style scoring.
//!
//! For an instance `I`, a team's value `V` is its best objective value over
//! its valid schedules for `I`, and `L` is the best `V` over all teams. The
//! team scores `L / V` on `I` (1 when `V == L`, 0 without a valid schedule);
//! totals sum the scores over all instances.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::generate::{extract_features, InstanceFeatures};
use crate::model::{Instance, Objective, Schedule};
use crate::validate::{lower_bounds, validate_schedule};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvaluateError {
    #[error("team `{team}` submitted a schedule for unknown instance `{instance}`")]
    UnknownInstance { team: String, instance: String },
    #[error("duplicate instance name `{0}`")]
    DuplicateInstance(String),
}

/// One (team, instance) cell of a [`ScoreReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub team: String,
    pub instance: String,
    /// Best valid objective value of this team, if any.
    pub v: Option<u64>,
    /// Best valid objective value over all teams, if any.
    pub l: Option<u64>,
    pub score: f64,
    pub submitted: usize,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamTotal {
    pub team: String,
    pub total: f64,
    /// Instances with at least one valid schedule from this team.
    pub solved: usize,
    /// 1-based rank; teams with exactly equal totals share a rank.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub objective: Objective,
    /// Instance names in input order.
    pub instances: Vec<String>,
    /// Team names in lexicographic order.
    pub teams: Vec<String>,
    /// Team-major, instances in input order.
    pub entries: Vec<ScoreEntry>,
    /// Sorted by descending total, then team name.
    pub totals: Vec<TeamTotal>,
    /// Groups of two or more teams with exactly equal totals.
    pub ties: Vec<Vec<String>>,
}

/// `L / V`, with `0 / 0 = 1` and 0 when `V` is absent.
pub fn score_value(v: Option<u64>, l: Option<u64>) -> f64 {
    match (v, l) {
        (Some(v), Some(l)) if v == l => 1.0,
        (Some(v), Some(l)) => l as f64 / v as f64,
        _ => 0.0,
    }
}

/// Validates every schedule (in parallel) and scores each team on every
/// instance. Invalid schedules are counted but otherwise ignored.
pub fn score_suites(
    instances: &[Instance],
    suites: &BTreeMap<String, Vec<Schedule>>,
    objective: Objective,
) -> Result<ScoreReport, EvaluateError> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(instances.len());
    for (i, inst) in instances.iter().enumerate() {
        if index.insert(inst.name(), i).is_some() {
            return Err(EvaluateError::DuplicateInstance(inst.name().to_string()));
        }
    }
    let mut jobs = Vec::new();
    for (t, (team, schedules)) in suites.iter().enumerate() {
        for s in schedules {
            let Some(&i) = index.get(s.instance_name.as_str()) else {
                return Err(EvaluateError::UnknownInstance {
                    team: team.clone(),
                    instance: s.instance_name.clone(),
                });
            };
            jobs.push((t, i, s));
        }
    }
    let values: Vec<Option<u64>> = jobs
        .par_iter()
        .map(|&(_, i, s)| match validate_schedule(&instances[i], s) {
            Ok(r) if r.feasible => Some(objective.value(r.objectives())),
            Ok(_) => None,
            Err(e) => {
                log::debug!("schedule for `{}` rejected: {e}", s.instance_name);
                None
            }
        })
        .collect();

    let teams: Vec<String> = suites.keys().cloned().collect();
    let m = instances.len();
    let mut best = vec![vec![None::<u64>; m]; teams.len()];
    let mut submitted = vec![vec![0usize; m]; teams.len()];
    let mut invalid = vec![vec![0usize; m]; teams.len()];
    for (&(t, i, _), value) in jobs.iter().zip(&values) {
        submitted[t][i] += 1;
        match value {
            Some(v) => best[t][i] = Some(best[t][i].map_or(*v, |b: u64| b.min(*v))),
            None => invalid[t][i] += 1,
        }
    }
    let overall: Vec<Option<u64>> = (0..m).map(|i| best.iter().filter_map(|b| b[i]).min()).collect();

    let mut entries = Vec::with_capacity(teams.len() * m);
    let mut totals = Vec::with_capacity(teams.len());
    for (t, team) in teams.iter().enumerate() {
        let mut total = 0.0;
        for (i, inst) in instances.iter().enumerate() {
            let score = score_value(best[t][i], overall[i]);
            total += score;
            entries.push(ScoreEntry {
                team: team.clone(),
                instance: inst.name().to_string(),
                v: best[t][i],
                l: overall[i],
                score,
                submitted: submitted[t][i],
                invalid: invalid[t][i],
            });
        }
        totals.push(TeamTotal {
            team: team.clone(),
            total,
            solved: best[t].iter().flatten().count(),
            rank: 0,
        });
    }
    totals.sort_by(|a, b| b.total.total_cmp(&a.total).then_with(|| a.team.cmp(&b.team)));
    let mut ties = Vec::new();
    let mut k = 0;
    while k < totals.len() {
        let mut j = k;
        while j < totals.len() && totals[j].total == totals[k].total {
            totals[j].rank = k + 1;
            j += 1;
        }
        if j - k > 1 {
            ties.push(totals[k..j].iter().map(|t| t.team.clone()).collect());
        }
        k = j;
    }
    Ok(ScoreReport {
        objective,
        instances: instances.iter().map(|i| i.name().to_string()).collect(),
        teams,
        entries,
        totals,
        ties,
    })
}

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ScoreReport {
    pub fn entry(&self, team: &str, instance: &str) -> Option<&ScoreEntry> {
        self.entries.iter().find(|e| e.team == team && e.instance == instance)
    }

    pub fn score(&self, team: &str, instance: &str) -> Option<f64> {
        self.entry(team, instance).map(|e| e.score)
    }

    pub fn total(&self, team: &str) -> Option<f64> {
        self.totals.iter().find(|t| t.team == team).map(|t| t.total)
    }

    /// Columns: `team,instance,objective,V,L,score,submitted,invalid`.
    /// Absent values are empty fields.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("team,instance,objective,V,L,score,submitted,invalid\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.team,
                e.instance,
                self.objective,
                opt(e.v),
                opt(e.l),
                e.score,
                e.submitted,
                e.invalid
            );
        }
        out
    }

    /// Columns: `rank,team,objective,total,solved,instances`.
    pub fn totals_csv(&self) -> String {
        let mut out = String::from("rank,team,objective,total,solved,instances\n");
        for t in &self.totals {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.rank,
                t.team,
                self.objective,
                t.total,
                t.solved,
                self.instances.len()
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "objective {}: {} teams, {} instances\n",
            self.objective,
            self.teams.len(),
            self.instances.len()
        );
        for t in &self.totals {
            let _ = writeln!(
                out,
                "{:>3}. {:<24} {:>10.4} ({} solved)",
                t.rank, t.team, t.total, t.solved
            );
        }
        for group in &self.ties {
            let _ = writeln!(out, "tie: {}", group.join(", "));
        }
        out
    }
}

/// Per-instance difficulty summary.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub instance: String,
    /// Mean score over all teams of the report.
    pub average_score: f64,
    pub solved_by: usize,
    pub best: Option<u64>,
    /// `None` when some robot cannot reach its target at all.
    pub lb_makespan: Option<u64>,
    pub lb_total: Option<u64>,
    pub features: InstanceFeatures,
}

/// Joins `report` with lower bounds and features. Instances missing from
/// `features` use [`extract_features`] without provenance.
pub fn instance_report(
    instances: &[Instance],
    report: &ScoreReport,
    features: &HashMap<String, InstanceFeatures>,
) -> Vec<InstanceRow> {
    instances
        .par_iter()
        .map(|inst| {
            let name = inst.name();
            let cells: Vec<&ScoreEntry> = report.entries.iter().filter(|e| e.instance == name).collect();
            let average_score = if cells.is_empty() {
                0.0
            } else {
                cells.iter().map(|e| e.score).sum::<f64>() / cells.len() as f64
            };
            let lb = lower_bounds(inst).ok();
            InstanceRow {
                instance: name.to_string(),
                average_score,
                solved_by: cells.iter().filter(|e| e.v.is_some()).count(),
                best: cells.first().and_then(|e| e.l),
                lb_makespan: lb.as_ref().map(|b| b.makespan),
                lb_total: lb.as_ref().map(|b| b.total),
                features: features
                    .get(name)
                    .copied()
                    .unwrap_or_else(|| extract_features(inst, None)),
            }
        })
        .collect()
}

/// Columns: `instance,average_score,solved_by,best,lb_makespan,lb_total,`
/// followed by the feature names.
pub fn instance_report_csv(rows: &[InstanceRow]) -> String {
    let mut out = format!(
        "instance,average_score,solved_by,best,lb_makespan,lb_total,{}\n",
        crate::generate::FEATURE_NAMES.join(",")
    );
    for r in rows {
        let f = &r.features;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.instance,
            r.average_score,
            r.solved_by,
            opt(r.best),
            opt(r.lb_makespan),
            opt(r.lb_total),
            f.n_robots,
            f.density,
            f.n_clusters,
            f.n_clustered_robots,
            f.volume,
            f.free_area
        );
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant or the lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < order.len() {
        let mut j = k;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[k]] {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &i in &order[k..=j] {
            out[i] = avg;
        }
        k = j + 1;
    }
    out
}
