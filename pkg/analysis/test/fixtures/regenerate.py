"""Rebuild the test fixtures from the simulator.

Run from the repository root with the nmqsd package installed:

    python3 analysis/test/fixtures/regenerate.py

Seven directories are tiny real runs (12 trajectories, 2 time units);
tail_rich is a synthetic result whose order histogram carries a long
clean exponential tail plus a rising flank, so the tail-fit tests have
a case where the fit quality is unambiguous.
"""

import os
import sys

import numpy as np

from nmqsd.config import RunConfig, render_config, to_ensemble_config
from nmqsd.ensemble import EnsembleResult, run_ensemble
from nmqsd.outputs import write_outputs

HERE = os.path.dirname(os.path.abspath(__file__))

BASE = dict(gamma_Gamma=0.2, n_max=20, dt=0.02, t_final=2.0, n_traj=12, master_seed=77, threads=1)

RUNS = {
    "g02_full": dict(gamma=0.2),
    "g04_full": dict(gamma=0.4),
    "g08_full": dict(gamma=0.8),
    "g02_trunc5": dict(gamma=0.2, hierarchy_mode="truncated", n_max=5),
    "g02_bar0": dict(gamma=0.2, hierarchy_mode="bar_O_zero"),
    "g02_rwa": dict(gamma=0.2, coupling_mode="sigma_minus"),
    "short_grid": dict(gamma=0.2, t_final=1.0),
}


def synthetic_tail_result(cfg: RunConfig) -> EnsembleResult:
    counts = np.zeros(cfg.n_max + 1, dtype=np.int64)
    counts[3] = 40
    counts[4] = 800
    n = np.arange(5, 22)
    counts[n] = np.round(3000.0 * np.exp(-0.45 * (n - 5))).astype(np.int64)
    total = int(counts.sum())
    times = np.array([0.0, 0.02, 0.04])
    qnorms = np.array([[0.0, 0.002, 0.0041], [0.0, 0.0002, 0.00042]])
    return EnsembleResult(
        times=times,
        mean_sigma_z=np.array([1.0, 0.98, 0.955]),
        stderr_sigma_z=np.array([0.0, 0.004, 0.006]),
        rho_t=np.zeros((3, 2, 2), dtype=complex),
        mean_q_trace_norms=qnorms,
        nq_histogram=counts,
        rejection_rate=0.05,
        accepted_count=total,
        metadata=dict(
            n_traj=total,
            master_seed=cfg.master_seed,
            threads=1,
            equation="nonlinear",
            accepted_count=total,
            rejected_count=0,
            saturated_count=0,
            mean_final_nq=float(np.arange(len(counts)) @ counts / total),
            wall_time_s=1,
        ),
    )


def main() -> int:
    for name, overrides in RUNS.items():
        kw = dict(BASE)
        kw.update(overrides)
        cfg = RunConfig(label=name, **kw)
        print(f"{name} ...", flush=True)
        result = run_ensemble(to_ensemble_config(cfg))
        write_outputs(result, os.path.join(HERE, name), config_text=render_config(cfg))

    counts_cfg = RunConfig(gamma=0.2, n_max=100, master_seed=9, label="tail_rich")
    result = synthetic_tail_result(counts_cfg)
    cfg = RunConfig(
        gamma=0.2, n_max=100, master_seed=9, n_traj=result.accepted_count, label="tail_rich"
    )
    write_outputs(result, os.path.join(HERE, "tail_rich"), config_text=render_config(cfg))
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
