"""Delimited export and figure rendering for finished runs.

CSV files open with the resolved config echoed as comment lines, so a
result file is self-describing; floats are written with 17 significant
digits, enough to round-trip doubles exactly.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .config import echo_lines
from .errors import ConfigError

plt.rcParams["svg.hashsalt"] = "dfcl"

_BASE_COLUMNS = (
    "k", "r", "y_m", "y", "u", "e", "q",
)
_TAIL_COLUMNS = (
    "theta_err_norm", "rank_omega", "lambda_min_omega", "lambda_max_omega",
    "clamp_active",
)
_DIAG_COLUMNS = (
    "w", "m", "eta", "w_omega_norm", "v_theta", "v_e", "v_combined",
    "lemma2_residual", "lemma3_residual", "theorem2_contraction",
    "u_trace", "u_specrad", "beta1", "beta2", "beta5", "beta6",
)


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _diag_values(rec, trace):
    d = rec.diagnostics
    k = rec.k
    if d.u_eigs is None:
        u_trace = u_specrad = float("nan")
    else:
        u_trace = float(np.sum(d.u_eigs))
        u_specrad = float(np.max(np.abs(d.u_eigs)))
    c = d.constants
    return (
        trace.w[k], trace.m[k], trace.eta[k], d.w_omega_norm, d.v_theta, d.v_e,
        d.v_combined, d.lemma2_residual, d.lemma3_residual,
        d.theorem2_contraction, u_trace, u_specrad,
        c.beta1, c.beta2, c.beta5, c.beta6,
    )


def export_csv(result, path):
    """Write one run to CSV: config comments, header, one row per step.

    Diagnostic columns are appended when the run carried diagnostics.
    """
    records = result.records
    if not records:
        raise ConfigError("refusing to export a run with no records")
    n = records[0].theta_hat.shape[0]
    with_diag = records[0].diagnostics is not None
    header = list(_BASE_COLUMNS)
    header += [f"theta_hat_{i}" for i in range(n)]
    header += list(_TAIL_COLUMNS)
    if with_diag:
        header += list(_DIAG_COLUMNS)
    lines = [f"# {line}" for line in echo_lines(result.config)]
    if result.diverged_at is not None:
        lines.append(f"# diverged_at = {result.diverged_at}")
    lines.append(",".join(header))
    for rec in records:
        vals = [rec.k, rec.r, rec.y_m, rec.y, rec.u, rec.e, rec.q]
        vals += list(rec.theta_hat)
        vals += [rec.theta_err_norm, rec.rank_omega, rec.lambda_min_omega,
                 rec.lambda_max_omega, rec.clamp_active]
        if with_diag:
            vals += list(_diag_values(rec, result.trace))
        lines.append(",".join(_fmt(v) for v in vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Load a result CSV back into (header, columns-as-arrays) skipping comments."""
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ConfigError(f"{path} holds no data")
    data = np.asarray(rows)
    return header, {name: data[:, i] for i, name in enumerate(header)}


def _switch_line(ax, cfg, horizon):
    d = cfg.disturbance
    if d.kind == "piecewise_output_dependent" and 0 < d.switch_step < horizon:
        ax.axvline(d.switch_step, color="0.6", linestyle=":", linewidth=1.0)


def export_plot(result, path):
    """Render output vs reference model and the tracking error."""
    if not result.records:
        raise ConfigError("refusing to plot a run with no records")
    ks = np.array([rec.k for rec in result.records])
    y = np.array([rec.y for rec in result.records])
    y_m = np.array([rec.y_m for rec in result.records])
    e = np.array([rec.e for rec in result.records])
    fig, (ax_y, ax_e) = plt.subplots(2, 1, figsize=(8.0, 5.0), sharex=True)
    ax_y.plot(ks, y_m, color="0.3", linestyle="--", linewidth=1.0, label="reference model")
    ax_y.plot(ks, y, color="C0", linewidth=1.0, label="plant output")
    ax_y.set_ylabel("output")
    ax_y.legend(loc="upper right", fontsize=8)
    _switch_line(ax_y, result.config, len(ks))
    ax_e.plot(ks, e, color="C3", linewidth=1.0)
    ax_e.set_ylabel("tracking error")
    ax_e.set_xlabel("step k")
    _switch_line(ax_e, result.config, len(ks))
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def export_comparison_plot(results, labels, path):
    """Stacked per-method panels of plant output against the reference model."""
    rows = len(results)
    fig, axes = plt.subplots(rows, 1, figsize=(8.0, 2.2 * rows), sharex=True)
    if rows == 1:
        axes = [axes]
    for ax, result, label in zip(axes, results, labels):
        ks = np.array([rec.k for rec in result.records])
        y = np.array([rec.y for rec in result.records])
        y_m = np.array([rec.y_m for rec in result.records])
        ax.plot(ks, y_m, color="0.3", linestyle="--", linewidth=1.0, label="reference model")
        ax.plot(ks, y, color="C0", linewidth=1.0, label=label)
        ax.set_ylabel("output")
        ax.legend(loc="upper right", fontsize=8)
        _switch_line(ax, result.config, result.config.simulation.horizon)
        if result.diverged_at is not None:
            ax.axvline(result.diverged_at, color="C3", linewidth=1.0)
    axes[-1].set_xlabel("step k")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def export_comparison(summary, results, outdir):
    """Write per-method CSVs, a metrics table, and the comparison figure.

    Returns the list of paths written.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = []
    labels = [row.label for row in summary.rows]
    for row, result in zip(summary.rows, results):
        csv_path = os.path.join(outdir, f"{row.label}.csv")
        export_csv(result, csv_path)
        paths.append(csv_path)

    header = ["label", "kind"]
    header += [f"rmse_{lo}_{hi}" for lo, hi in summary.windows]
    header += ["max_abs_e", "final_theta_err", "k_e", "clamp_count", "diverged_at"]
    lines = [",".join(header)]
    for row in summary.ranked():
        vals = [row.label, row.kind]
        vals += [_fmt(v) for v in row.rmse]
        vals += [_fmt(row.max_abs_e), _fmt(row.final_theta_err)]
        vals += ["" if row.k_e is None else str(row.k_e), str(row.clamp_count)]
        vals += ["" if row.diverged_at is None else str(row.diverged_at)]
        lines.append(",".join(vals))
    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    paths.append(summary_path)

    fig_path = os.path.join(outdir, "comparison.svg")
    export_comparison_plot(results, labels, fig_path)
    paths.append(fig_path)
    return paths
