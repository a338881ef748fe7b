"""Reduced-scale acceptance checks of the simulator's headline behavior.

The statistical checks read the long cached ensembles registered in
acceptance_runs.py; populate the cache ahead of time with

    python3 tests/acceptance_runs.py

(roughly 1.5 hours of single-core compute; a missing entry is simulated
on first use).  Everything else runs inline, in seconds to a minute.

Two checks fail at this scale and are left failing on purpose rather
than loosened: with gamma = 0.2 the long-time plateau of <sigma_z> sits
near 0.42 (the exact damped-mode reduction gives 0.423, outside the 0.3
bound checked below), and the final-order histogram alternates between
odd and even orders, which degrades the exponential tail fit's r^2 far
below 0.9.  See the README's acceptance notes for the analysis.
"""

import os
import re
import shutil
import subprocess
import time
from dataclasses import replace

import numpy as np
import pytest

from acceptance_runs import ensure_run, window_average
from nmqsd.config import RunConfig, render_config, to_ensemble_config
from nmqsd.ensemble import run_ensemble
from nmqsd.hierarchy import HierarchyParams, HierarchyState, get_tables, hierarchy_rhs, init_state
from nmqsd.noise import NoiseParams
from nmqsd.operators import SIGMA_MINUS, SIGMA_X, SIGMA_Z
from nmqsd.outputs import NQ_HIST_FILE, QNORMS_FILE, SIGMA_Z_FILE, write_outputs
from nmqsd.reference import (
    LOW_ORDER_PAIRS,
    damped_mode_sigma_z,
    low_order_rhs,
    noise_autocovariance_check,
    rwa_oracle,
)
from nmqsd.trajectory import ModelSpec, run_trajectory

_RUNS = {}


def cached(name):
    if name not in _RUNS:
        _RUNS[name] = ensure_run(name)
    return _RUNS[name]


def statistical_error(run) -> float:
    """Time-averaged standard error of the ensemble mean (E_Nz)."""
    return float(np.mean(run["stderr"]))


def binned_means(run, t_lo, t_hi, width):
    """Bin the mean curve over [t_lo, t_hi]; returns bin means and SEs."""
    t, m, se = run["t"], run["mean"], run["stderr"]
    sel = (t >= t_lo - 1e-12) & (t <= t_hi + 1e-12)
    t, m, se = t[sel], m[sel], se[sel]
    n_bins = int(round((t_hi - t_lo) / width))
    edges = np.linspace(t_lo, t_hi, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, n_bins - 1)
    means = np.array([m[idx == b].mean() for b in range(n_bins)])
    ses = np.array([se[idx == b].mean() for b in range(n_bins)])
    return means, ses


def monotone_run_totals(values):
    """Total change of each maximal monotone run of a 1-d sequence."""
    totals = []
    direction = 0.0
    start = prev = values[0]
    for v in values[1:]:
        d = np.sign(v - prev)
        if d != 0.0 and d != direction:
            if direction != 0.0:
                totals.append(prev - start)
                start = prev
            direction = d
        prev = v
    totals.append(prev - start)
    return totals


# ---------------------------------------------------------------------------
# exact oracles, inline


def test_low_order_kernel_matches_hand_coded_equations():
    """Generic RHS vs the order <= 3 equations on 100 random inputs."""
    rng = np.random.default_rng(424242)
    worst = 0.0
    for _ in range(100):
        n_max = int(rng.integers(10, 14))
        n_q = int(rng.integers(8, n_max + 1))
        tables = get_tables(n_max)
        state = HierarchyState(
            q=np.zeros((len(tables.pairs), 2, 2), dtype=complex), n_q=n_q, n_max=n_max
        )
        pa = state.n_active
        state.q[:pa] = rng.standard_normal((pa, 2, 2)) + 1j * rng.standard_normal((pa, 2, 2))
        H = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        H = H + H.conj().T
        L = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        z = complex(rng.standard_normal(), rng.standard_normal())
        a0 = float(rng.uniform(0.05, 1.0))
        gamma = float(rng.uniform(0.1, 1.0))
        dq = hierarchy_rhs(state, z, H, L, a0, gamma)
        for n, m in LOW_ORDER_PAIRS:
            expected = low_order_rhs(state.op, n, m, z, H, L, a0, gamma)
            got = dq[tables.index[n, m]]
            scale = max(1.0, float(np.abs(expected).max()))
            worst = max(worst, float(np.abs(got - expected).max()) / scale)
    assert worst <= 1e-12


def test_decoupled_bath_leaves_excited_population():
    """gamma_Gamma = 0: <sigma_z (t)> stays at one for the whole window."""
    res = run_trajectory(
        ModelSpec(omega=1.0),
        NoiseParams(gamma=0.5, gamma_Gamma=0.0, dt=0.02, n_steps=600, seed=3),
        HierarchyParams(n_max=10),
        dt=0.02,
        t_final=12.0,
    )
    assert float(np.abs(res.sigma_z - 1.0).max()) < 1e-9


def test_lowering_coupling_root_operator_matches_riccati():
    """L = sigma_-: the noise-free root operator vs the scalar ODE.

    Richardson extrapolation of Euler runs at dt and dt/2 removes the
    first-order step error; the remainder must sit below 1e-4.
    """
    omega, gamma, a0 = 1.0, 0.2, 0.1
    H = 0.5 * omega * SIGMA_Z
    z = 0.31 - 0.12j  # arbitrary; the root operator is noise-independent

    def propagate(dt, t_final=12.0):
        n_steps = round(t_final / dt)
        state = init_state(HierarchyParams(n_max=6))
        out = np.empty((n_steps + 1, 2, 2), dtype=complex)
        out[0] = state.q[0]
        for k in range(n_steps):
            dq = hierarchy_rhs(state, z, H, SIGMA_MINUS, a0, gamma)
            state.q[: state.n_active] += dt * dq
            out[k + 1] = state.q[0]
        return out

    coarse = propagate(0.01)
    fine = propagate(0.005)
    extrap = 2.0 * fine[::2] - coarse
    times = 0.01 * np.arange(coarse.shape[0])
    f_exact, _ = rwa_oracle(omega, gamma, a0, times)
    worst = float(np.abs(extrap - f_exact[:, None, None] * SIGMA_MINUS).max())
    assert worst < 1e-4


def test_lowering_coupling_higher_orders_stay_null():
    """L = sigma_-: every auxiliary operator above n = 0 remains null."""
    res = run_trajectory(
        ModelSpec(omega=1.0, L=SIGMA_MINUS.copy()),
        NoiseParams(gamma=0.2, gamma_Gamma=0.2, dt=0.02, n_steps=600, seed=8),
        HierarchyParams(n_max=8),
        dt=0.02,
        t_final=12.0,
        n_report=8,
    )
    assert float(np.nanmax(res.q_trace_norms[1:])) < 1e-8


def test_lowering_coupling_ensemble_matches_oracle():
    """L = sigma_- ensemble mean vs the exact solution, 3 E_Nz."""
    run = cached("R2K")
    _, exact = rwa_oracle(1.0, 0.2, 0.1, run["t"])
    worst = float(np.abs(run["mean"] - exact).max())
    assert worst <= 3.0 * statistical_error(run)


def test_noise_autocovariance_and_relation():
    """10^5 paths: sampled covariances vs the exponential kernel.

    The autocovariance must match (Gamma gamma / 2) exp(-gamma |tau|)
    within 3 standard errors out to lag tau = 1, and the relation
    M[z z] must be zero within 3 standard errors.
    """
    params = NoiseParams(gamma=0.2, gamma_Gamma=0.2, dt=0.02, n_steps=100)
    stats = noise_autocovariance_check(params, n_paths=100_000, max_lag=50, seed=2025)
    auto_dev = np.abs(stats["auto_mean"] - stats["target"]) / stats["auto_se"]
    rel_dev = np.abs(stats["rel_mean"]) / stats["rel_se"]
    assert float(auto_dev.max()) < 3.0
    assert float(rel_dev.max()) < 3.0


def test_short_memory_mean_matches_exact_reduced_dynamics():
    """gamma = 0.8 ensemble vs the exact damped-mode reduction.

    The embedding of the exponential-memory bath into one lossy mode is
    an independent exact solution; with zero rejections the ensemble is
    unconditional, so agreement is limited only by statistics and the
    first-order step error (covered by the 0.01 allowance).
    """
    run = cached("C")
    exact = damped_mode_sigma_z(1.0, 0.8, 0.1, run["t"], coupling="sigma_x", n_fock=20)
    excess = np.abs(run["mean"] - exact) - 3.0 * run["stderr"] - 0.01
    assert float(excess.max()) <= 0.0


# ---------------------------------------------------------------------------
# ensemble statistics from the cached long runs


def test_strong_memory_mean_is_nonmonotonic():
    """gamma = 0.2: the mean rebounds at least twice before t = 6."""
    run = cached("A")
    means, _ = binned_means(run, 0.0, 6.0, width=0.4)
    totals = monotone_run_totals(means)
    significant = [x for x in totals if abs(x) > 3.0 * statistical_error(run)]
    changes = sum(
        1 for a, b in zip(significant, significant[1:]) if np.sign(a) != np.sign(b)
    )
    assert changes >= 2, f"monotone run totals {np.round(totals, 3)}"


def test_short_memory_mean_decays_monotonically_early():
    """gamma = 0.8: no significant upward step before t = 3."""
    run = cached("C")
    means, ses = binned_means(run, 0.0, 3.0, width=0.3)
    steps = np.diff(means)
    slack = 3.0 * np.hypot(ses[1:], ses[:-1])
    assert bool(np.all(steps <= slack)), f"bin steps {np.round(steps, 4)}"


@pytest.mark.parametrize("name", ["A", "B", "C"], ids=["gamma0.2", "gamma0.4", "gamma0.8"])
def test_long_time_mean_approaches_zero(name):
    """|<sigma_z>| at t = 12 below 0.3, with 3 E_Nz statistical slack.

    Fails honestly for gamma = 0.2 at this scale: the exact damped-mode
    value is 0.423, so no correct simulation can land under the bound.
    """
    run = cached(name)
    final = float(run["mean"][-1])
    bound = 0.3 + 3.0 * float(run["stderr"][-1])
    assert abs(final) < bound, f"|<sigma_z>(12)| = {abs(final):.4f}, bound {bound:.4f}"


def test_variant_ordering_at_matched_seeds():
    """Less memory bookkeeping means faster decay, pair by pair.

    All five variants share the same noise realizations.  The lowering
    coupling decays far below the full model; the time-averaged means of
    the truncation ladder must be ordered within 2 E_Nz per pair.
    """
    names = ("FR", "FB", "F0", "F10", "F40")
    avg = {n: window_average(cached(n), 2.0, 8.0) for n in names}
    enz = {n: statistical_error(cached(n)) for n in names}
    assert avg["FR"] < avg["F40"], f"{avg}"
    ladder = ("FB", "F0", "F10", "F40")
    for lo, hi in zip(ladder, ladder[1:]):
        slack = 2.0 * max(enz[lo], enz[hi])
        assert avg[lo] <= avg[hi] + slack, f"{lo}={avg[lo]:.4f} vs {hi}={avg[hi]:.4f}"


def test_hierarchy_depth_convergence_at_matched_noise():
    """Cap 10 vs cap 40 on identical noise: means differ by < 0.02."""
    lo, hi = cached("F10"), cached("F40")
    assert np.array_equal(lo["t"], hi["t"])
    assert float(np.mean(np.abs(lo["mean"] - hi["mean"]))) < 0.02


def test_rejection_rate_falls_with_higher_cap():
    """Raising the cap 40 -> 70 lowers the rejection rate significantly."""
    a, d = cached("A")["meta"], cached("D")["meta"]
    n = a["n_traj"]
    p_a, p_d = a["rejection_rate"], d["rejection_rate"]
    se = np.sqrt(p_a * (1 - p_a) / n + p_d * (1 - p_d) / n)
    assert p_a - p_d > 1.96 * se, f"R(40) = {p_a:.4f}, R(70) = {p_d:.4f}"


def test_short_memory_rejections_are_rare():
    assert cached("C")["meta"]["rejection_rate"] < 0.01


def test_mean_hierarchy_depth_grows_with_memory():
    depth = {name: cached(name)["meta"]["mean_final_nq"] for name in "ABC"}
    assert depth["A"] > depth["B"] > depth["C"], f"{depth}"


def test_strong_memory_tail_fit_quality():
    """Exponential tail fit of the gamma = 0.2 order histogram.

    Fails honestly at this scale: final orders alternate between odd and
    even (feed terms pair the shells), and the zig-zag of the per-order
    counts keeps r^2 near 0.32 even though the envelope is exponential.
    """
    meta = cached("A")["meta"]
    assert meta["nq_tail_r2"] > 0.9, f"r^2 = {meta['nq_tail_r2']:.4f}"


# ---------------------------------------------------------------------------
# cost scaling and reproducibility


def _rhs_seconds(n_max: int, repeats: int) -> float:
    tables = get_tables(n_max)
    rng = np.random.default_rng(12)
    state = HierarchyState(
        q=rng.standard_normal((len(tables.pairs), 2, 2))
        + 1j * rng.standard_normal((len(tables.pairs), 2, 2)),
        n_q=n_max,
        n_max=n_max,
    )
    H = 0.5 * SIGMA_Z
    args = (state, 0.2 - 0.1j, H, SIGMA_X, 0.1, 0.2)
    hierarchy_rhs(*args)  # warm the table cache before timing
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        hierarchy_rhs(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def test_per_step_cost_scales_quartically():
    """Doubling the cap multiplies the RHS cost by about 16 (+- 50%)."""
    t28 = _rhs_seconds(28, repeats=15)
    t56 = _rhs_seconds(56, repeats=7)
    ratio = t56 / t28
    assert 8.0 <= ratio <= 24.0, f"t(28) = {t28:.2e} s, t(56) = {t56:.2e} s"


def test_thread_count_does_not_change_outputs(tmp_path):
    """threads = 1 and threads = 4 write byte-identical CSVs."""
    base = RunConfig(
        gamma=0.3,
        gamma_Gamma=0.2,
        n_max=12,
        dt=0.02,
        t_final=1.0,
        n_traj=8,
        master_seed=11,
        label="thread determinism",
    )
    blobs = {}
    for threads in (1, 4):
        cfg = replace(base, threads=threads)
        result = run_ensemble(to_ensemble_config(cfg))
        out = tmp_path / f"threads{threads}"
        write_outputs(result, str(out), config_text=render_config(cfg))
        blobs[threads] = {
            name: (out / name).read_bytes()
            for name in (SIGMA_Z_FILE, QNORMS_FILE, NQ_HIST_FILE)
        }
    assert blobs[1] == blobs[4]


# ---------------------------------------------------------------------------
# figure rendering (separate analysis package)

_ANALYSIS_CLI = os.path.join(os.path.dirname(__file__), "..", "analysis", "dist", "cli.js")
_NODE = shutil.which("node")


@pytest.mark.skipif(
    _NODE is None or not os.path.exists(_ANALYSIS_CLI),
    reason="analysis CLI not built; run npm install && npm run build in analysis/",
)
def test_figures_render_from_cached_runs(tmp_path):
    """All four figures render; the local tail refit agrees within 5%."""
    cases = {
        "1": ["A", "B", "C"],
        "2": ["F40", "F10", "F0", "FB", "FR"],
        "3a": ["A"],
        "3b": ["A"],
    }
    for figure, names in cases.items():
        inputs = ",".join(cached(n)["dir"] for n in names)
        out = tmp_path / f"fig{figure}.svg"
        proc = subprocess.run(
            [_NODE, _ANALYSIS_CLI, "--figure", figure, "--inputs", inputs, "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 0
        if figure == "3b":
            match = re.search(r"relative difference ([0-9.]+)%", proc.stdout)
            assert match, proc.stdout
            assert float(match.group(1)) < 5.0
