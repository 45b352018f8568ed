//! Files under `--out` and terminal decoration.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::record::{PropertyRecord, RunRecord, SummaryRow};
use crate::spec::RunSpec;

/// Set to any value to turn off both color and progress lines.
pub const PLAIN_ENV: &str = "CASIMIR_PLAIN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Style {
    pub color: bool,
    pub progress: bool,
}

impl Style {
    pub fn detect() -> Self {
        let plain = std::env::var_os(PLAIN_ENV).is_some();
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Style {
            color: !plain && !no_color && std::io::stdout().is_terminal(),
            progress: !plain && std::io::stderr().is_terminal(),
        }
    }

    pub fn verdict(self, passed: bool) -> String {
        let (word, code) = if passed { ("PASS", "32") } else { ("FAIL", "31") };
        if self.color {
            format!("\x1b[{code}m{word}\x1b[0m")
        } else {
            word.to_string()
        }
    }
}

pub struct Output {
    dir: PathBuf,
    csv: bool,
    records: bool,
}

impl Output {
    pub fn new(spec: &RunSpec) -> anyhow::Result<Self> {
        let out = Output {
            dir: spec.out.clone(),
            csv: spec.format.csv(),
            records: spec.format.records(),
        };
        std::fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
        if out.records {
            let dir = out.records_dir();
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records_dir(&self) -> PathBuf {
        self.dir.join("records")
    }

    pub fn summary(&self, rows: &[SummaryRow]) -> anyhow::Result<()> {
        if !self.csv {
            return Ok(());
        }
        write_csv(&self.dir.join("summary.csv"), rows)
    }

    pub fn validation(&self, props: &[PropertyRecord]) -> anyhow::Result<()> {
        if !self.csv {
            return Ok(());
        }
        write_csv(&self.dir.join("validation.csv"), props)
    }

    pub fn record(&self, label: &str, rec: &RunRecord) -> anyhow::Result<()> {
        if !self.records {
            return Ok(());
        }
        let path = self.records_dir().join(format!("{label}.toml"));
        std::fs::write(&path, rec.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
