//! Generated matplotlib scripts for the output files.

use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::SimError;

pub fn script_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    data.with_file_name(format!("{stem}_plot.py"))
}

const LOADER: &str = r#"import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def load(path):
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        return doc
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def num(field):
    return float(field) if field not in ("", None) else float("nan")
"#;

fn data_name(data: &Path) -> String {
    data.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn emit(data: &Path, body: String) -> Result<(), SimError> {
    let script = format!("{LOADER}\n\nHERE = Path(__file__).resolve().parent\nDEFAULT = HERE / {:?}\n{body}", data_name(data));
    crate::write_file(&script_path(data), script.as_bytes())
}

pub fn write_sweep_script(data: &Path, format: Format) -> Result<(), SimError> {
    let rows = match format {
        Format::Csv => "rows = load(path)",
        Format::Json => "rows = load(path)[\"records\"]",
    };
    emit(
        data,
        format!(
            r#"
path = sys.argv[1] if len(sys.argv) > 1 else DEFAULT
{rows}
fig, (ax_n, ax_q) = plt.subplots(1, 2, figsize=(10, 4))
for label, style in (("no_gap", "-"), ("full_gap", "--")):
    sel = [r for r in rows if r["gap_config_label"] == label]
    x = [num(r["cos4phi"]) for r in sel]
    ax_n.plot(x, [num(r["mean_n"]) for r in sel], style, label=label)
    ax_q.plot(x, [num(r["q_mandel"]) for r in sel], style, label=label)
ax_n.set_xlabel(r"$\cos^4\varphi$")
ax_n.set_ylabel(r"$\langle n \rangle$")
ax_n.set_title("(a)")
ax_q.set_xlabel(r"$\cos^4\varphi$")
ax_q.set_ylabel("Q")
ax_q.axhline(0.0, color="grey", lw=0.5)
ax_q.set_title("(b)")
ax_n.legend()
fig.tight_layout()
fig.savefig(Path(path).with_suffix(".png"), dpi=150)
plt.show()
"#
        ),
    )
}

pub fn write_spectrum_script(data: &Path, format: Format) -> Result<(), SimError> {
    let series = match format {
        Format::Csv => "rows = load(p)\n        omega = [num(r[\"omega\"]) for r in rows]\n        s = [num(r[\"s\"]) for r in rows]",
        Format::Json => "doc = load(p)\n        omega, s = doc[\"omega\"], doc[\"s\"]",
    };
    emit(
        data,
        format!(
            r#"
# Usage: python this.py [panel_a_file [panel_b_file]]
paths = sys.argv[1:] or [DEFAULT]
fig, axes = plt.subplots(1, len(paths), figsize=(5 * len(paths), 4), squeeze=False)
for ax, p, tag in zip(axes[0], paths, "ab"):
        {series}
        ax.plot(omega, s)
        ax.set_xlabel(r"$\omega - \omega_L + 2\Omega$  [$\gamma$]")
        ax.set_ylabel("S (normalized)")
        ax.set_title(f"({{tag}})")
fig.tight_layout()
fig.savefig(Path(paths[0]).with_suffix(".png"), dpi=150)
plt.show()
"#
        ),
    )
}

pub fn write_dist_script(data: &Path, format: Format) -> Result<(), SimError> {
    let series = match format {
        Format::Csv => "rows = load(path)\nn = [int(r[\"n\"]) for r in rows]\npn = [num(r[\"p_numeric\"]) for r in rows]\npa = [num(r[\"p_analytic\"]) for r in rows]",
        Format::Json => "doc = load(path)\npn = doc[\"p_numeric\"]\npa = doc[\"p_analytic\"] or [float(\"nan\")] * len(pn)\nn = list(range(len(pn)))",
    };
    emit(
        data,
        format!(
            r#"
path = sys.argv[1] if len(sys.argv) > 1 else DEFAULT
{series}
fig, ax = plt.subplots(figsize=(6, 4))
ax.bar(n, pn, width=1.0, alpha=0.5, label="numeric")
ax.plot(n, pa, "k-", label="closed form")
ax.set_xlabel("n")
ax.set_ylabel(r"$P_n$")
ax.legend()
fig.tight_layout()
fig.savefig(Path(path).with_suffix(".png"), dpi=150)
plt.show()
"#
        ),
    )
}
