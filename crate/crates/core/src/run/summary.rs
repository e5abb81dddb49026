use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::{Provenance, RunError};
use crate::dataset::{read_stats_csv, StatsRow};
use crate::eval::{read_reports_csv, EvalReport, Metric, MetricSummary};

/// One experiment directory found under the report roots.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub provenance: Provenance,
    pub reports: Vec<EvalReport>,
    /// The `[network]` and `[train]` sections of the run's config snapshot.
    pub config_excerpt: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RunError::io(path, e))
}

fn config_excerpt(path: &Path) -> String {
    let Ok(text) = fs::read_to_string(path) else {
        return String::new();
    };
    let mut keep = false;
    let mut out = String::new();
    for line in text.lines() {
        if line.starts_with('[') {
            keep = matches!(line.trim(), "[network]" | "[train]");
        }
        if keep && !line.trim().is_empty() {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Collects experiment runs (directories holding `provenance.json` and
/// `reports.csv`) and dataset summaries (`stats.csv`) below `roots`.
pub fn summarize_runs(roots: &[PathBuf]) -> Result<(Vec<RunSummary>, Vec<StatsRow>), RunError> {
    let mut runs = Vec::new();
    let mut stats = Vec::new();
    for root in roots {
        let mut entries: Vec<PathBuf> = WalkDir::new(root)
            .sort_by_file_name()
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .map(|e| e.into_path())
            .collect();
        entries.sort();
        for path in entries {
            match path.file_name().and_then(|n| n.to_str()) {
                Some("provenance.json") => {
                    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
                    let reports_path = dir.join("reports.csv");
                    if !reports_path.is_file() {
                        continue;
                    }
                    runs.push(RunSummary {
                        provenance: read_json(&path)?,
                        reports: read_reports_csv(&reports_path)?,
                        config_excerpt: config_excerpt(&dir.join("config.ini")),
                        dir,
                    });
                }
                Some("stats.csv") => stats.extend(read_stats_csv(&path)?),
                _ => {}
            }
        }
    }
    if runs.is_empty() {
        let shown = roots.first().cloned().unwrap_or_default();
        return Err(RunError::NoReportsFound(shown));
    }
    runs.sort_by_key(|r| r.provenance.experiment);
    Ok((runs, stats))
}

fn cell(m: &MetricSummary) -> String {
    format!("{:.3} [{:.3}, {:.3}]", m.mean, m.ci_low, m.ci_high)
}

fn metric_table(s: &mut String, reports: &[EvalReport]) {
    let _ = write!(s, "| Subset | Partition | Segments |");
    for m in Metric::ALL {
        let _ = write!(s, " {} |", m.heading());
    }
    let _ = writeln!(s, "\n|---|---|---:|---|---|---|---|");
    for r in reports {
        let _ = write!(s, "| {} | {} | {} |", r.subset, r.partition, r.n_segments);
        for m in Metric::ALL {
            let _ = write!(s, " {} |", cell(r.metric(m)));
        }
        s.push('\n');
    }
}

fn experiment_title(id: u8) -> &'static str {
    match id {
        1 => "Experiment 1: training and evaluation on the source subset",
        2 => "Experiment 2: source model on the other subsets, no retraining",
        3 => "Experiment 3: transfer (fully connected part retrained)",
        _ => "Other runs",
    }
}

/// Markdown with a dataset table, one metric table per experiment, a
/// before/after transfer comparison when experiments 2 and 3 are both
/// present, and the configuration of every run.
pub fn render_markdown(runs: &[RunSummary], stats: &[StatsRow]) -> String {
    let mut s = String::from("# Beat detection results\n\n");
    s.push_str("Cells are bootstrap mean [90% CI] unless the run configuration says otherwise.\n\n");
    if !stats.is_empty() {
        s.push_str("## Datasets\n\n| Subset | Partition | Subjects | Segments | %BEAT |\n|---|---|---:|---:|---:|\n");
        for r in stats {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.2} |",
                r.subset, r.partition, r.n_subjects, r.n_segments, r.percent_beat
            );
        }
        s.push('\n');
    }
    for run in runs {
        let _ = writeln!(s, "## {}\n", experiment_title(run.provenance.experiment));
        let _ = writeln!(s, "Run directory: `{}`\n", run.dir.display());
        metric_table(&mut s, &run.reports);
        s.push('\n');
    }
    let find = |id: u8| runs.iter().find(|r| r.provenance.experiment == id);
    if let (Some(before), Some(after)) = (find(2), find(3)) {
        s.push_str("## Transfer comparison (MCC)\n\n| Subset | Without transfer, Test | Transfer, Train | Transfer, Test |\n|---|---|---|---|\n");
        for b in &before.reports {
            let pick = |p: &str| {
                after
                    .reports
                    .iter()
                    .find(|r| r.subset == b.subset && r.partition.eq_ignore_ascii_case(p))
                    .map_or("n/a".to_string(), |r| cell(&r.mcc))
            };
            let _ = writeln!(s, "| {} | {} | {} | {} |", b.subset, cell(&b.mcc), pick("train"), pick("test"));
        }
        s.push('\n');
    }
    s.push_str("## Configuration\n\n");
    for run in runs {
        let p = &run.provenance;
        let _ = writeln!(
            s,
            "Experiment {}: train seed {}, split seed {}, bootstrap seed {}.\n",
            p.experiment, p.train_seed, p.split_seed, p.bootstrap_seed
        );
        let net = serde_json::to_string(&p.network).unwrap_or_default();
        let _ = writeln!(s, "```json\n{net}\n```\n");
        if !run.config_excerpt.is_empty() {
            let _ = writeln!(s, "```ini\n{}```\n", run.config_excerpt);
        }
        for c in &p.caches {
            let _ = writeln!(s, "- cache `{}` {}", c.file, c.hash);
        }
        if let Some(c) = &p.base_checkpoint {
            let _ = writeln!(s, "- base checkpoint `{}` {}", c.file, c.hash);
        }
        for c in &p.checkpoints {
            let _ = writeln!(s, "- checkpoint `{}` {}", c.file, c.hash);
        }
        if !p.skipped_targets.is_empty() {
            let _ = writeln!(s, "- skipped (data not present): {}", p.skipped_targets.join(", "));
        }
        s.push('\n');
    }
    s
}

/// Writes `summary.md` and `summary.csv` into `out` and returns their paths.
pub fn write_summary(roots: &[PathBuf], out: &Path) -> Result<(PathBuf, PathBuf), RunError> {
    let (runs, stats) = summarize_runs(roots)?;
    fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;
    let md = out.join("summary.md");
    fs::write(&md, render_markdown(&runs, &stats)).map_err(|e| RunError::io(&md, e))?;
    let csv_path = out.join("summary.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| RunError::io(&csv_path, e))?;
    let mut header = vec!["experiment".to_string(), "subset".into(), "partition".into(), "n_segments".into()];
    for m in Metric::ALL {
        for f in ["", "_mean", "_ci_low", "_ci_high"] {
            header.push(format!("{}{f}", m.as_str()));
        }
    }
    w.write_record(&header).map_err(|e| RunError::io(&csv_path, e))?;
    for run in &runs {
        for r in &run.reports {
            let mut row = vec![
                run.provenance.experiment.to_string(),
                r.subset.clone(),
                r.partition.clone(),
                r.n_segments.to_string(),
            ];
            for m in Metric::ALL {
                let v = r.metric(m);
                row.extend([v.value, v.mean, v.ci_low, v.ci_high].map(|x| x.to_string()));
            }
            w.write_record(&row).map_err(|e| RunError::io(&csv_path, e))?;
        }
    }
    w.flush().map_err(|e| RunError::io(&csv_path, e))?;
    Ok((md, csv_path))
}
