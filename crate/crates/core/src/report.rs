//! CSV artifacts of runs and sweeps.
//!
//! Every writer is deterministic: rows follow the bundle order and floats use
//! Rust's shortest round-trip formatting, so identical runs produce identical
//! bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::chanmgmt::{render_set, ChannelLists};
use crate::config::ScenarioConfig;
use crate::fusion::Rule;
use crate::metrics::PerfVector;
use crate::sim::{Metric, PerfMatrix, ResultBundle};
use crate::sweep::SweepResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a table to `path`, header first.
fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), ReportError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn bit(b: bool) -> String {
    u8::from(b).to_string()
}

/// File-name form of a rule: lower case, dashes kept.
pub fn rule_slug(rule: Rule) -> String {
    rule.name().to_ascii_lowercase()
}

pub fn perf_metric(p: &PerfVector, m: Metric) -> Option<f64> {
    match m {
        Metric::Nwcf => Some(p.corr),
        Metric::PSd => Some(p.p_sd),
        Metric::PMd => Some(p.p_md),
        Metric::PFa => Some(p.p_fa),
        Metric::Chi2 => p.chi2,
    }
}

/// One metric of a per-(cell, channel) matrix with `WRANj` rows, `CHk`
/// columns and `NA` for untracked pairs.
pub fn matrix_csv(matrix: &PerfMatrix, metric: Metric) -> String {
    let mut out = String::new();
    let channels = matrix.first().map_or(0, Vec::len);
    out.push_str(&(1..=channels).fold(String::new(), |s, k| format!("{s},CH{k}")));
    out.push('\n');
    for (j, row) in matrix.iter().enumerate() {
        out.push_str(&format!("WRAN{}", j + 1));
        for entry in row {
            out.push(',');
            out.push_str(&opt(entry.as_ref().and_then(|p| perf_metric(p, metric))));
        }
        out.push('\n');
    }
    out
}

/// List snapshot, one row per cell, empty lists rendered `{}`.
pub fn lists_csv(lists: &[ChannelLists]) -> String {
    let mut out = String::from("cell,OCL,DCL,BCL,PCL,CCL\n");
    for (j, l) in lists.iter().enumerate() {
        let cols = [&l.ocl, &l.dcl, &l.bcl, &l.pcl, &l.ccl].map(|s| format!("\"{}\"", render_set(s)));
        out.push_str(&format!("WRAN{},{}\n", j + 1, cols.join(",")));
    }
    out
}

/// Resolved configuration preceded by the artifact version; loadable as a
/// config file.
pub fn metadata(cfg: &ScenarioConfig) -> Result<String, ReportError> {
    Ok(format!("# mclds {VERSION}\n{}", cfg.to_toml_string()?))
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Writes every artifact of one run into `dir` and returns the files written.
pub fn write_run(bundle: &ResultBundle, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<(), ReportError>| -> Result<(), ReportError> {
        let path = dir.join(name);
        f(&path)?;
        written.push(path);
        Ok(())
    };

    emit("metadata.toml", &|p| write_text(p, &metadata(cfg)?))?;
    if cfg.output.trace {
        emit("trace.csv", &|p| {
            write_table(
                p,
                &["frame", "t", "cell", "channel", "kind", "rule", "D", "Z", "R", "statistic"],
                bundle.decisions.iter().map(|d| {
                    [
                        d.frame.to_string(),
                        d.time.to_string(),
                        (d.cell.0 + 1).to_string(),
                        d.channel.0.to_string(),
                        d.kind.to_string(),
                        d.rule.to_string(),
                        bit(d.decision),
                        bit(d.z),
                        bit(d.r),
                        d.statistic.to_string(),
                    ]
                }),
            )
        })?;
    }
    if cfg.output.z_trace {
        let frame_len = cfg.clock.frame_len;
        emit("z_trace.csv", &|p| {
            write_table(
                p,
                &["t", "cell", "channel", "z"],
                bundle.z_trace.iter().map(|&(f, c, k, z)| {
                    [(f as f64 * frame_len).to_string(), (c.0 + 1).to_string(), k.0.to_string(), bit(z)]
                }),
            )
        })?;
    }
    for (rule, matrix) in &bundle.matrices {
        for m in Metric::ALL {
            let name = format!("matrix_{}_{}.csv", m, rule_slug(*rule));
            emit(&name, &|p| write_text(p, &matrix_csv(matrix, m)))?;
        }
    }
    emit("lists.csv", &|p| write_text(p, &lists_csv(&bundle.lists)))?;
    emit("transitions.csv", &|p| {
        write_table(
            p,
            &["t", "cell", "channel", "from", "to", "reason"],
            bundle.transitions.iter().map(|r| {
                let t = &r.transition;
                [
                    t.time.to_string(),
                    (r.cell.0 + 1).to_string(),
                    t.channel.0.to_string(),
                    t.from.map_or_else(|| "-".to_string(), |l| l.name().to_string()),
                    t.to.name().to_string(),
                    t.reason.to_string(),
                ]
            }),
        )
    })?;
    emit("switches.csv", &|p| {
        write_table(
            p,
            &["t", "cell", "from", "to", "deadline"],
            bundle.switches.iter().map(|s| {
                [
                    s.time.to_string(),
                    (s.cell.0 + 1).to_string(),
                    s.from.0.to_string(),
                    s.to.0.to_string(),
                    s.deadline.to_string(),
                ]
            }),
        )
    })?;
    emit("summary.csv", &|p| {
        write_table(
            p,
            &["rule", "nwcf", "p_sd", "p_md", "p_fa", "chi2", "superframes"],
            bundle.summary.iter().map(|s| {
                let mut row = vec![s.rule.to_string()];
                row.extend(Metric::ALL.iter().map(|&m| opt(s.perf.metric(m))));
                row.push(s.points.to_string());
                row
            }),
        )
    })?;
    emit("timeseries.csv", &|p| {
        write_table(
            p,
            &["superframe", "rule", "nwcf", "p_sd", "p_md", "p_fa", "chi2", "pairs"],
            bundle.timeseries.iter().map(|tp| {
                let mut row = vec![tp.superframe.to_string(), tp.rule.to_string()];
                row.extend(Metric::ALL.iter().map(|&m| opt(tp.perf.metric(m))));
                row.push(tp.perf.pairs.to_string());
                row
            }),
        )
    })?;
    if !bundle.snapshots.is_empty() {
        emit("snapshots.csv", &|p| {
            let mut rows = Vec::new();
            for s in &bundle.snapshots {
                for (j, row) in s.matrix.iter().enumerate() {
                    for (k, entry) in row.iter().enumerate() {
                        if let Some(v) = entry {
                            let mut r = vec![
                                s.superframe.to_string(),
                                s.rule.to_string(),
                                (j + 1).to_string(),
                                (k + 1).to_string(),
                            ];
                            r.extend(Metric::ALL.iter().map(|&m| opt(perf_metric(v, m))));
                            r.push(v.samples.to_string());
                            rows.push(r);
                        }
                    }
                }
            }
            write_table(
                p,
                &["superframe", "rule", "cell", "channel", "nwcf", "p_sd", "p_md", "p_fa", "chi2", "samples"],
                rows,
            )
        })?;
    }
    let a = bundle.audit;
    emit("audit.csv", &|p| {
        let fields = [
            ("intra_qps", a.intra_qps),
            ("inter_qps", a.inter_qps),
            ("obs_sensings", a.obs_sensings),
            ("escalations", a.escalations),
            ("silence_violations", a.silence_violations),
            ("list_violations", a.list_violations),
            ("switches_late", a.switches_late),
            ("outages", a.outages),
            ("classifier_fits", a.classifier_fits),
            ("lost_reports", a.lost_reports),
        ];
        write_table(p, &["counter", "value"], fields.iter().map(|(k, v)| [k.to_string(), v.to_string()]))
    })?;
    Ok(written)
}

/// One `<metric>_<rule>.csv` per pair with columns value, mean, std, n, plus
/// the sweep metadata. Returns the files written.
pub fn write_sweep(result: &SweepResult, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let meta = dir.join("metadata.toml");
    write_text(&meta, &metadata(cfg)?)?;
    written.push(meta);
    for &rule in &result.rules {
        for m in Metric::ALL {
            let path = dir.join(format!("{}_{}.csv", m, rule_slug(rule)));
            let rows = result.points.iter().map(|pt| {
                let s = pt.stats(rule, m);
                [pt.value.to_string(), opt(s.mean), opt(s.std), s.n.to_string()]
            });
            write_table(&path, &[result.variable.to_string().as_str(), "mean", "std", "n"], rows)?;
            written.push(path);
        }
    }
    let failures = dir.join("failures.csv");
    write_table(
        &failures,
        &["value", "replicate", "error"],
        result
            .failures
            .iter()
            .map(|f| [f.value.to_string(), f.replicate.to_string(), f.message.clone()]),
    )?;
    written.push(failures);
    Ok(written)
}
