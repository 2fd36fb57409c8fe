//! Output files of one run. Every file starts with the full configuration
//! as `#` comment lines, so any single file is enough to reproduce it.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub struct Output {
    dir: PathBuf,
    stem: String,
    command: &'static str,
    config_text: String,
}

impl Output {
    pub fn new(dir: &Path, stem: &str, command: &'static str, config_text: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { context: format!("creating {}", dir.display()), source })?;
        Ok(Self { dir: dir.to_path_buf(), stem: stem.to_string(), command, config_text })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.stem))
    }

    fn write(&self, path: &Path, contents: &str) -> Result<(), CliError> {
        fs::write(path, contents).map_err(|source| CliError::Io { context: format!("writing {}", path.display()), source })?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn echo(&self) -> String {
        let mut s = format!("# qcwalk {}\n", self.command);
        for line in self.config_text.lines() {
            s.push_str(if line.is_empty() { "#" } else { "# " });
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    /// `<stem><suffix>.csv` with the configuration echo, a header row and
    /// one line per row.
    pub fn csv(&self, suffix: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf, CliError> {
        let mut s = self.echo();
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        let path = self.path(&format!("{suffix}.csv"));
        self.write(&path, &s)?;
        Ok(path)
    }

    /// Key-value report with the configuration echo.
    pub fn report(&self, lines: &[(String, String)]) -> Result<PathBuf, CliError> {
        let mut s = self.echo();
        for (k, v) in lines {
            s.push_str(&format!("{k} = {v}\n"));
        }
        let path = self.path(".report.txt");
        self.write(&path, &s)?;
        Ok(path)
    }

    /// Configuration file that re-runs this experiment when passed back
    /// with `--config`.
    pub fn manifest(&self) -> Result<PathBuf, CliError> {
        let s = format!(
            "# qcwalk {} run manifest\n# re-run with: qcwalk {} --config <this file>\n\
             # no random numbers are used; outputs depend only on these values and the build,\n\
             # not on the worker count\n\n{}",
            self.command, self.command, self.config_text
        );
        let path = self.path(".manifest.toml");
        self.write(&path, &s)?;
        Ok(path)
    }

    /// Gnuplot script plotting `series` (`(file suffix, using-spec, title)`).
    pub fn gnuplot(&self, xlabel: &str, ylabel: &str, series: &[(&str, &str, &str)], extra: &str) -> Result<PathBuf, CliError> {
        let mut s = format!(
            "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n\
             set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n{extra}"
        );
        let parts: Vec<String> = series
            .iter()
            .map(|(suffix, using, title)| format!("'{}{suffix}.csv' using {using} title '{title}'", self.stem))
            .collect();
        s.push_str(&format!("plot {}\npause mouse close\n", parts.join(", \\\n     ")));
        let path = self.path(".gp");
        self.write(&path, &s)?;
        Ok(path)
    }
}
