//! Report emission: one CSV row per check plus a JSON summary, and the
//! exit-code contract (zero only when nothing was violated and skips stay
//! within budget).

use crate::suites::SuiteOutcome;
use anyhow::{Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "instance,check,lhs,rhs,slack,ratio,skipped,note";

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_text(outcome: &SuiteOutcome) -> String {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &outcome.rows {
        let ratio = r.ratio.map_or(String::new(), |x| format!("{x:.12}"));
        text.push_str(&format!(
            "{},{},{:.12},{:.12},{:.12e},{},{},{}\n",
            csv_field(&r.instance),
            csv_field(&r.check),
            r.lhs,
            r.rhs,
            r.slack,
            ratio,
            r.skipped,
            csv_field(&r.note),
        ));
    }
    text
}

/// Writes `<suite>.csv` and `<suite>.json` under `out_dir`.
pub fn emit(outcome: &SuiteOutcome, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{}.csv", outcome.suite));
    let json_path = out_dir.join(format!("{}.json", outcome.suite));
    std::fs::write(&csv_path, csv_text(outcome))?;
    let mut f = std::fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, outcome)?;
    f.write_all(b"\n")?;
    Ok((csv_path, json_path))
}

/// Zero exactly when no check was violated and the size-guard skips stay
/// within the configured budget.
pub fn exit_code(outcome: &SuiteOutcome) -> i32 {
    if !outcome.violations.is_empty() {
        return 1;
    }
    if outcome.skips > outcome.config.skip_budget {
        return 2;
    }
    0
}

pub fn summary_line(outcome: &SuiteOutcome) -> String {
    let slack = outcome
        .min_slack
        .map_or("n/a".to_string(), |s| format!("{s:.3e}"));
    let env = outcome
        .ratio_envelope
        .map_or(String::new(), |(lo, hi)| format!(", ratio in [{lo:.4}, {hi:.4}]"));
    format!(
        "{}: {} checks, {} violations, {} skips, min slack {}{}{} ({:.1}s)",
        outcome.suite,
        outcome.n_rows,
        outcome.violations.len(),
        outcome.skips,
        slack,
        env,
        outcome
            .warning
            .as_deref()
            .map(|w| format!(" [warning: {w}]"))
            .unwrap_or_default(),
        outcome.elapsed_secs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::suites::CheckRow;

    fn empty_outcome() -> SuiteOutcome {
        SuiteOutcome {
            suite: "p2".into(),
            config: ExperimentConfig::new("p2", 1).resolve().unwrap(),
            corpus_hash: "deadbeef".into(),
            n_rows: 0,
            min_slack: None,
            violations: vec![],
            ratio_envelope: None,
            skips: 0,
            warning: Some("empty corpus: nothing was checked".into()),
            elapsed_secs: 0.0,
            rows: vec![],
        }
    }

    #[test]
    fn empty_corpus_emits_header_and_warning() {
        let out = empty_outcome();
        let text = csv_text(&out);
        assert_eq!(text.trim(), CSV_HEADER);
        assert!(out.warning.is_some());
        assert_eq!(exit_code(&out), 0);
    }

    #[test]
    fn violations_flip_the_exit_code() {
        let mut out = empty_outcome();
        out.rows.push(CheckRow {
            instance: "x".into(),
            check: "c".into(),
            lhs: 0.0,
            rhs: 1.0,
            slack: -1.0,
            ratio: None,
            skipped: false,
            note: String::new(),
        });
        out.violations.push("x/c".into());
        assert_eq!(exit_code(&out), 1);
    }

    #[test]
    fn skips_over_budget_flip_the_exit_code() {
        let mut out = empty_outcome();
        out.skips = 1;
        assert_eq!(exit_code(&out), 2);
    }
}
