"""CSV and run-metadata writers.

All numeric columns use 17 significant digits so doubles round-trip, rows
end with LF regardless of platform, and every file carries a header row.
Writes go through temporary files; on any failure the partially written
set is removed so a crashed run never leaves a plausible-looking output
directory behind.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from . import __version__
from .ensemble import EnsembleResult

SIGMA_Z_FILE = "sigma_z.csv"
QNORMS_FILE = "qnorms.csv"
NQ_HIST_FILE = "nq_hist.csv"
RUN_META_FILE = "run_meta.txt"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _sigma_z_rows(result: EnsembleResult):
    yield "t,mean_sigma_z,stderr"
    for t, m, s in zip(result.times, result.mean_sigma_z, result.stderr_sigma_z):
        yield f"{_fmt(t)},{_fmt(m)},{_fmt(s)}"


def _qnorms_rows(result: EnsembleResult):
    yield "t,n,mean_trace_norm"
    norms = result.mean_q_trace_norms
    for n in range(norms.shape[0]):
        for j, t in enumerate(result.times):
            yield f"{_fmt(t)},{n},{_fmt(norms[n, j])}"


def _nq_hist_rows(result: EnsembleResult):
    yield "n_q,count,probability_density"
    counts = result.nq_histogram
    total = counts.sum()
    for n_q, count in enumerate(counts):
        density = count / total if total > 0 else 0.0
        yield f"{n_q},{int(count)},{_fmt(density)}"


def _run_meta_rows(result, config_text, error_estimates, tail_fit):
    yield "# run metadata"
    yield f"code_version = {__version__}"
    if config_text is not None:
        yield "# configuration"
        for line in config_text.rstrip("\n").splitlines():
            yield line
    yield "# results"
    meta = result.metadata
    for key in (
        "n_traj",
        "master_seed",
        "threads",
        "equation",
        "accepted_count",
        "rejected_count",
        "saturated_count",
    ):
        if key in meta:
            yield f"{key} = {meta[key]}"
    yield f"rejection_rate = {_fmt(result.rejection_rate)}"
    if "mean_final_nq" in meta:
        yield f"mean_final_nq = {_fmt(meta['mean_final_nq'])}"
    errors = dict(error_estimates) if error_estimates else {}
    # the statistical component is free; the paired-run components are not
    errors.setdefault("E_Nz", float(np.mean(result.stderr_sigma_z)))
    for key in ("E_Nz", "E_dt", "E_N"):
        if key in errors:
            yield f"{key.lower()} = {_fmt(errors[key])}"
    if tail_fit is not None and tail_fit.get("fitted"):
        yield f"nq_tail_rate = {_fmt(tail_fit['rate'])}"
        yield f"nq_tail_r2 = {_fmt(tail_fit['r_squared'])}"
        yield f"nq_tail_mode = {tail_fit['mode']}"
    if "wall_time_s" in meta:
        yield f"wall_time_s = {_fmt(meta['wall_time_s'])}"


def write_outputs(
    result: EnsembleResult,
    out_dir: str,
    config_text: Optional[str] = None,
    error_estimates: Optional[dict] = None,
) -> list:
    """Write sigma_z.csv, qnorms.csv, nq_hist.csv, and run_meta.txt.

    Args:
        result: Finished ensemble reduction.
        out_dir: Destination directory, created if missing.
        config_text: Rendered configuration to embed in run_meta.txt.
        error_estimates: Optional dict with E_Nz / E_dt / E_N entries.
            E_Nz falls back to the run's own time-averaged standard
            error, so run_meta always reports the statistical component.

    Returns:
        List of the file paths written, in write order.

    Raises:
        OSError: On I/O failure, after removing any partial files.
    """
    tail_fit = None
    if result.metadata.get("accepted_count", 0) >= 100:
        from .ensemble import nq_distribution

        fit = nq_distribution(result)
        if fit.get("fitted"):
            tail_fit = fit

    os.makedirs(out_dir, exist_ok=True)
    plan = [
        (SIGMA_Z_FILE, _sigma_z_rows(result)),
        (QNORMS_FILE, _qnorms_rows(result)),
        (NQ_HIST_FILE, _nq_hist_rows(result)),
        (RUN_META_FILE, _run_meta_rows(result, config_text, error_estimates, tail_fit)),
    ]
    written = []
    try:
        for name, rows in plan:
            final_path = os.path.join(out_dir, name)
            tmp_path = final_path + ".tmp"
            with open(tmp_path, "w", newline="\n") as fh:
                for row in rows:
                    fh.write(row)
                    fh.write("\n")
            os.replace(tmp_path, final_path)
            written.append(final_path)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise
    return written


def read_csv_columns(path: str) -> dict:
    """Read one of our CSVs back as a dict of float column arrays."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, j] for j, name in enumerate(header)}
