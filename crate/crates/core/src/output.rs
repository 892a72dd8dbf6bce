//! CSV number formatting and companion plot scripts.
//!
//! Scripts are standalone matplotlib programs that read the CSV sitting next
//! to them, so nothing here depends on a plotting library.

use std::path::Path;

use crate::error::Result;

/// Scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

const PRELUDE: &str = "\
#!/usr/bin/env python3
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline=\"\") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}

";

/// Decay constants against mode index on a log axis.
pub fn spectrum_plot_script(csv_name: &str) -> String {
    format!(
        "{PRELUDE}\
d = load(\"{csv_name}\")
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.semilogy(d[\"mode_index\"], d[\"decay_const\"], \".\")
ax1.set_xlabel(\"mode l\")
ax1.set_ylabel(\"-Re(2 lambda) / Gamma\")
ax2.plot(d[\"im_2lambda_over_gamma\"], d[\"decay_const\"], \".\")
ax2.set_yscale(\"log\")
ax2.set_xlabel(\"Im(2 lambda) / Gamma\")
ax2.set_ylabel(\"-Re(2 lambda) / Gamma\")
fig.tight_layout()
fig.savefig(os.path.join(HERE, \"{stem}.png\"), dpi=150)
",
        stem = stem(csv_name)
    )
}

/// Log-scale population with the independent-emitter curve exp(−M Γ t).
pub fn evolution_plot_script(csv_name: &str, weights_csv: Option<&str>, n_excitations: usize) -> String {
    let column = if weights_csv.is_some() { "population" } else { "norm_sq" };
    let mut s = format!(
        "{PRELUDE}\
import math

M = {n_excitations}
d = load(\"{csv_name}\")
t = d[\"t_gamma\"]
ncols = {ncols}
fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4), squeeze=False)
ax = axes[0][0]
ax.semilogy(t, d[\"{column}\"], label=\"P(t)\")
ax.semilogy(t, [math.exp(-M * x) for x in t], \"--\", label=\"exp(-M Gamma t)\")
ax.set_ylim(bottom=max(1e-12, min(v for v in d[\"{column}\"] if v > 0)))
ax.set_xlabel(\"Gamma t\")
ax.set_ylabel(\"population\")
ax.legend()
",
        ncols = if weights_csv.is_some() { 2 } else { 1 },
    );
    if let Some(w) = weights_csv {
        s.push_str(&format!(
            "w = load(\"{w}\")
ax = axes[0][1]
ax.bar(w[\"mode_index\"], w[\"wt\"])
ax.set_xlabel(\"mode l\")
ax.set_ylabel(\"wt(l)\")
"
        ));
    }
    s.push_str(&format!(
        "fig.tight_layout()
fig.savefig(os.path.join(HERE, \"{}.png\"), dpi=150)
",
        stem(csv_name)
    ));
    s
}

/// Min and max decay constants per sweep value; categorical x axis.
pub fn sweep_plot_script(csv_name: &str) -> String {
    format!(
        "#!/usr/bin/env python3
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(HERE, \"{csv_name}\"), newline=\"\") as fh:
    rows = list(csv.DictReader(fh))
labels = [r[\"value\"] for r in rows]
x = range(len(rows))
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(x, [float(r[\"min_decay_gamma\"]) for r in rows], \"o-\", label=\"min decay\")
ax.semilogy(x, [float(r[\"max_decay_gamma\"]) for r in rows], \"s-\", label=\"max decay\")
ax.set_xticks(list(x))
ax.set_xticklabels(labels, rotation=45)
ax.set_ylabel(\"-Re(2 lambda) / Gamma\")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, \"{}.png\"), dpi=150)
",
        stem(csv_name)
    )
}

fn stem(csv_name: &str) -> &str {
    csv_name.strip_suffix(".csv").unwrap_or(csv_name)
}
