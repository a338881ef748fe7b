"""Monte Carlo ensembles: parallel trajectories, averages, error estimates.

Trajectory i draws its noise from the seed sequence (master_seed, i), so
any execution schedule produces the same per-trajectory results, and the
reduction accumulates them strictly in index order, so ensemble outputs
are bit-identical for any worker count.  Rejected trajectories keep their
seed slot (no redraw) and are excluded from every average but counted in
the rejection rate.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .hierarchy import HierarchyParams
from .noise import NoiseParams, refine_path, sample_path
from .trajectory import ModelSpec, run_trajectory

#: Extra seed word for the midpoint draws of dt-refined noise paths.
REFINE_SEED_WORD = 0x5EED


class AllRejectedError(RuntimeError):
    """Every trajectory in the ensemble was rejected."""


@dataclass(frozen=True)
class EnsembleConfig:
    """Full parameter set of one ensemble run."""

    model: ModelSpec
    gamma: float
    gamma_Gamma: float
    hier: HierarchyParams
    dt: float = 0.02
    t_final: float = 12.0
    n_traj: int = 8000
    master_seed: int = 0
    threads: int = 0
    output_stride: int = 1
    n_report: int = 12
    equation: str = "nonlinear"
    nq_hist_include_saturated: bool = False

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if self.threads < 0:
            raise ValueError(f"threads must be >= 0, got {self.threads}")


@dataclass
class EnsembleResult:
    """Averages over accepted trajectories plus rejection bookkeeping.

    stderr_sigma_z is the per-time standard error of mean_sigma_z (the
    statistical component of the error budget).  nq_histogram counts final
    hierarchy orders of accepted trajectories; by default trajectories
    saturated at the cap are excluded from it (but never from the
    averages), matching the reported distribution domain N_Q < cap.
    """

    times: np.ndarray
    mean_sigma_z: np.ndarray
    stderr_sigma_z: np.ndarray
    rho_t: np.ndarray
    mean_q_trace_norms: np.ndarray
    nq_histogram: np.ndarray
    rejection_rate: float
    accepted_count: int
    metadata: dict


# Worker context shared with forked processes; set before the pool starts.
_CTX = None


def _trajectory_payload(cfg: EnsembleConfig, idx: int, refine: int):
    n_steps = int(round(cfg.t_final / cfg.dt))
    noise = NoiseParams(
        gamma=cfg.gamma,
        gamma_Gamma=cfg.gamma_Gamma,
        dt=cfg.dt,
        n_steps=n_steps,
        seed=np.random.SeedSequence([cfg.master_seed, idx]),
    )
    dt, stride, path = cfg.dt, cfg.output_stride, None
    if refine:
        path = sample_path(noise)
        for _ in range(refine):
            noise, path = refine_path(
                path, noise, np.random.SeedSequence([cfg.master_seed, idx, REFINE_SEED_WORD])
            )
            dt, stride = noise.dt, stride * 2
    res = run_trajectory(
        cfg.model,
        noise,
        cfg.hier,
        dt,
        cfg.t_final,
        path=path,
        output_stride=stride,
        n_report=cfg.n_report,
        equation=cfg.equation,
    )
    return res.rejected, res.final_n_q, res.sigma_z, res.psi_series, res.q_trace_norms


def _run_index(idx: int):
    cfg, refine = _CTX
    return _trajectory_payload(cfg, idx, refine)


def run_ensemble(config: EnsembleConfig, refine_dt: int = 0) -> EnsembleResult:
    """Execute the ensemble and reduce it deterministically.

    Args:
        refine_dt: internal knob for the error estimator; each level halves
            dt by exact conditional refinement of the same noise paths while
            keeping the output grid fixed.

    Raises:
        AllRejectedError: when no trajectory survives.
    """
    global _CTX
    t0 = time.perf_counter()
    n_steps = int(round(config.t_final / config.dt))
    if abs(n_steps * config.dt - config.t_final) > 1e-9 * max(1.0, config.t_final):
        raise ValueError(f"t_final={config.t_final} is not a multiple of dt={config.dt}")

    # Build the shared term tables before forking so workers inherit them.
    from .hierarchy import get_tables

    if config.hier.mode != "bar_O_zero":
        get_tables(config.hier.n_max)

    n_threads = config.threads if config.threads > 0 else (os.cpu_count() or 1)
    n_threads = min(n_threads, config.n_traj)
    _CTX = (config, refine_dt)
    if n_threads == 1:
        results = map(_run_index, range(config.n_traj))
        acc = _reduce(config, results)
    else:
        import multiprocessing as mp

        chunk = max(1, config.n_traj // (n_threads * 8))
        with mp.Pool(processes=n_threads) as pool:
            results = pool.imap(_run_index, range(config.n_traj), chunksize=chunk)
            acc = _reduce(config, results)
    _CTX = None

    (times, n_acc, rejected_idx, sum_outer, sum_sz, sum_sz2, sum_w, sum_w2, sum_xw,
     sum_qn, nq_counts, saturated) = acc
    if n_acc == 0:
        raise AllRejectedError(
            f"all {config.n_traj} trajectories were rejected at the hierarchy cap "
            f"n_max={config.hier.n_max}; raise n_max or use mode='truncated'"
        )

    if config.equation == "linear":
        # Bargmann-convention averages: weight by the squared state norm.
        trace = np.einsum("tii->t", sum_outer).real
        rho = sum_outer / trace[:, None, None]
        mean_sz = (rho[:, 0, 0] - rho[:, 1, 1]).real
        w_bar = sum_w / n_acc
        if n_acc > 1:
            # delta-method error of the ratio estimator sum(x)/sum(w)
            var_resid = (
                sum_sz2 - 2 * mean_sz * sum_xw + mean_sz**2 * sum_w2
            ) / (n_acc - 1)
            stderr = np.sqrt(np.clip(var_resid, 0.0, None) / n_acc) / np.abs(w_bar)
        else:
            stderr = np.zeros_like(mean_sz)
    else:
        rho = sum_outer / n_acc
        mean_sz = (rho[:, 0, 0] - rho[:, 1, 1]).real
        if n_acc > 1:
            var = (sum_sz2 - n_acc * (sum_sz / n_acc) ** 2) / (n_acc - 1)
            stderr = np.sqrt(np.clip(var, 0.0, None) / n_acc)
        else:
            stderr = np.zeros_like(mean_sz)

    hist = nq_counts.copy()
    if not config.nq_hist_include_saturated and config.hier.n_max < len(hist):
        hist[config.hier.n_max] = 0

    meta = {
        "code_version": __version__,
        "n_traj": config.n_traj,
        "master_seed": config.master_seed,
        "threads": config.threads,
        "equation": config.equation,
        "accepted_count": int(n_acc),
        "rejected_count": int(config.n_traj - n_acc),
        "rejected_indices": rejected_idx,
        "saturated_count": int(saturated),
        "mean_final_nq": float(
            (nq_counts * np.arange(len(nq_counts))).sum() / n_acc
        ),
        "wall_time_s": time.perf_counter() - t0,
    }
    return EnsembleResult(
        times=times,
        mean_sigma_z=mean_sz,
        stderr_sigma_z=stderr,
        rho_t=rho,
        mean_q_trace_norms=sum_qn / n_acc,
        nq_histogram=hist,
        rejection_rate=(config.n_traj - n_acc) / config.n_traj,
        accepted_count=int(n_acc),
        metadata=meta,
    )


def _reduce(config: EnsembleConfig, results):
    """Accumulate trajectory payloads in index order."""
    times = None
    sum_outer = sum_sz = sum_sz2 = sum_w = sum_w2 = sum_xw = sum_qn = None
    nq_counts = np.zeros(config.hier.n_max + 1, dtype=np.int64)
    n_acc = 0
    saturated = 0
    rejected_idx = []
    linear = config.equation == "linear"
    for idx, payload in enumerate(results):
        rejected, final_n_q, sz, psi, qn = payload
        if times is None:
            n_out, dim = psi.shape
            times = np.arange(n_out) * (config.dt * config.output_stride)
            sum_outer = np.zeros((n_out, dim, dim), dtype=complex)
            sum_sz = np.zeros(n_out)
            sum_sz2 = np.zeros(n_out)
            sum_w = np.zeros(n_out)
            sum_w2 = np.zeros(n_out)
            sum_xw = np.zeros(n_out)
            sum_qn = np.zeros(qn.shape)
        if rejected:
            rejected_idx.append(idx)
            continue
        outer = psi[:, :, None] * psi[:, None, :].conj()
        sum_outer += outer
        if linear:
            w = np.einsum("tj,tj->t", psi, psi.conj()).real
            x = (np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2)
            sum_w += w
            sum_w2 += w * w
            sum_sz += x
            sum_sz2 += x * x
            sum_xw += x * w
        else:
            sum_sz += sz
            sum_sz2 += sz * sz
        sum_qn += qn
        if final_n_q == config.hier.n_max and config.hier.mode != "bar_O_zero":
            saturated += 1
        nq_counts[min(final_n_q, len(nq_counts) - 1)] += 1
        n_acc += 1
    return (times, n_acc, rejected_idx, sum_outer, sum_sz, sum_sz2, sum_w,
            sum_w2, sum_xw, sum_qn, nq_counts, saturated)


def estimate_errors(config: EnsembleConfig, n_max_prime: int = None) -> dict:
    """Three-component error budget of a run configuration.

    E_Nz: time-averaged standard error of the ensemble mean.  E_dt: mean
    absolute shift of the ensemble mean when dt is halved on identical
    (exactly refined) noise.  E_N: same, when the hierarchy cap is lowered
    to n_max_prime (default about 70% of the cap, the published pairing)
    with identical noise.  Each component compares full ensemble means, so
    statistical noise largely cancels through the matched seeds.
    """
    base = run_ensemble(config)
    e_nz = float(np.mean(base.stderr_sigma_z))

    fine = run_ensemble(config, refine_dt=1)
    e_dt = float(np.mean(np.abs(base.mean_sigma_z - fine.mean_sigma_z)))

    if n_max_prime is None:
        n_max_prime = int(round(0.7 * config.hier.n_max))
        if n_max_prime >= config.hier.n_max:
            n_max_prime = max(0, config.hier.n_max - 1)
    lowered_cfg = replace(config, hier=replace(config.hier, n_max=n_max_prime))
    lowered = run_ensemble(lowered_cfg)
    e_n = float(np.mean(np.abs(base.mean_sigma_z - lowered.mean_sigma_z)))
    return {"E_Nz": e_nz, "E_dt": e_dt, "E_N": e_n}


def nq_distribution(result: EnsembleResult) -> dict:
    """Histogram of final hierarchy orders with an exponential tail fit.

    Least-squares on log-counts from the mode upward.  Requires at least
    100 accepted trajectories; a single-occupied-bin histogram skips the
    fit and flags it.
    """
    if result.accepted_count < 100:
        raise ValueError(
            f"tail fit needs >= 100 accepted trajectories, got {result.accepted_count}"
        )
    counts = np.asarray(result.nq_histogram, dtype=float)
    total = counts.sum()
    density = counts / total if total > 0 else counts
    occupied = np.nonzero(counts)[0]
    out = {
        "bins": np.arange(len(counts)),
        "counts": counts.astype(np.int64),
        "density": density,
        "fitted": False,
        "rate": float("nan"),
        "r_squared": float("nan"),
        "mode": int(occupied[np.argmax(counts[occupied])]) if len(occupied) else 0,
    }
    if len(occupied) <= 1:
        return out
    mode = out["mode"]
    sel = occupied[occupied >= mode]
    if len(sel) < 2:
        return out
    x = sel.astype(float)
    ylog = np.log(counts[sel])
    slope, intercept = np.polyfit(x, ylog, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((ylog - fit) ** 2))
    ss_tot = float(np.sum((ylog - ylog.mean()) ** 2))
    out.update(
        fitted=True,
        rate=float(-slope),
        intercept=float(intercept),
        r_squared=1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    )
    return out
