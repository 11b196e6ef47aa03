//! Provenance-stamped CSV/JSON assembly and file emission.

use crate::error::{CliError, CliResult};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Everything the output header needs to reproduce a run.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: &'static str,
    pub preset: String,
    pub overrides: Vec<String>,
    pub seed: u64,
}

impl Provenance {
    pub fn overrides_text(&self) -> String {
        if self.overrides.is_empty() {
            "none".to_string()
        } else {
            self.overrides.join(";")
        }
    }

    /// `#`-comment block placed before the CSV column line.
    pub fn csv_header(&self) -> String {
        format!(
            "# rydoa {}\n# command: {}\n# preset: {}\n# overrides: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.preset,
            self.overrides_text(),
            self.seed,
        )
    }

    pub fn json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "preset": self.preset,
            "overrides": self.overrides,
            "seed": self.seed,
        })
    }
}

/// Fixed-format float for byte-stable CSV bodies; infinities print as `inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

/// Assemble a CSV document: provenance comments, one column-name line,
/// then rows.
pub fn csv_document(prov: &Provenance, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = prov.csv_header();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Write to `--out` or stdout.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::compute(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Sidecar path `<stem>.<tag>.<ext>` next to the primary output.
pub fn sidecar(out: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

/// Minimal matplotlib stub that renders the emitted CSV; kept data-driven
/// so the CLI itself never needs a plotting dependency.
pub fn write_plot_stub(out: &Path, logy: bool) -> CliResult<()> {
    let csv_name = out
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "data.csv".into());
    let yscale = if logy { "ax.set_yscale('log')\n" } else { "" };
    let script = format!(
        "#!/usr/bin/env python3\n\
         \"\"\"Render {csv_name}; regenerate the CSV with the rydoa command in its header.\"\"\"\n\
         import csv\n\
         import math\n\
         import matplotlib.pyplot as plt\n\n\
         rows = []\n\
         with open('{csv_name}') as fh:\n\
         \x20   for line in fh:\n\
         \x20       if not line.startswith('#'):\n\
         \x20           rows.append(line.rstrip('\\n').split(','))\n\
         header, data = rows[0], rows[1:]\n\
         def col(i):\n\
         \x20   return [float(r[i]) if r[i] not in ('inf', '-inf', 'nan') else math.inf for r in data]\n\n\
         fig, ax = plt.subplots()\n\
         x = col(0)\n\
         for i, name in enumerate(header[1:], start=1):\n\
         \x20   try:\n\
         \x20       ax.plot(x, col(i), label=name)\n\
         \x20   except ValueError:\n\
         \x20       continue\n\
         ax.set_xlabel(header[0])\n\
         {yscale}ax.legend()\n\
         fig.savefig('{csv_name}.png', dpi=160)\n"
    );
    let path = sidecar(out, "plot", "py");
    std::fs::write(&path, script)
        .map_err(|e| CliError::compute(format!("writing {}: {e}", path.display())))
}
