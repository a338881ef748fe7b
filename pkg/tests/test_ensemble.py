"""Ensemble reduction: determinism, averages, error budget, tail fit."""

import numpy as np
import pytest

import nmqsd.ensemble as ens
from nmqsd.ensemble import (
    AllRejectedError,
    EnsembleConfig,
    EnsembleResult,
    estimate_errors,
    nq_distribution,
    run_ensemble,
)
from nmqsd.hierarchy import HierarchyParams
from nmqsd.operators import SIGMA_Z
from nmqsd.trajectory import ModelSpec


def small_config(**kw):
    defaults = dict(
        model=ModelSpec(),
        gamma=0.3,
        gamma_Gamma=0.2,
        hier=HierarchyParams(n_max=25),
        dt=0.02,
        t_final=1.5,
        n_traj=8,
        master_seed=7,
        threads=1,
    )
    defaults.update(kw)
    return EnsembleConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(n_traj=0)
    with pytest.raises(ValueError):
        small_config(threads=-1)
    with pytest.raises(ValueError):
        small_config(master_seed=-3)


def test_worker_count_does_not_change_results():
    a = run_ensemble(small_config(threads=1))
    b = run_ensemble(small_config(threads=4))
    assert np.array_equal(a.mean_sigma_z, b.mean_sigma_z)
    assert np.array_equal(a.stderr_sigma_z, b.stderr_sigma_z)
    assert np.array_equal(a.rho_t, b.rho_t)
    assert np.array_equal(a.mean_q_trace_norms, b.mean_q_trace_norms)
    assert np.array_equal(a.nq_histogram, b.nq_histogram)
    assert a.accepted_count == b.accepted_count


def test_reduction_matches_manual_average():
    cfg = small_config(n_traj=6)
    result = run_ensemble(cfg)
    rows = []
    for idx in range(cfg.n_traj):
        rejected, final_nq, sz, psi, qn = ens._trajectory_payload(cfg, idx, 0)
        assert not rejected
        rows.append(sz)
    rows = np.asarray(rows)
    assert np.abs(result.mean_sigma_z - rows.mean(axis=0)).max() < 1e-13
    manual_se = rows.std(axis=0, ddof=1) / np.sqrt(len(rows))
    assert np.abs(result.stderr_sigma_z - manual_se).max() < 1e-12


def test_density_matrix_invariants():
    res = run_ensemble(small_config(n_traj=10, t_final=2.0))
    rho = res.rho_t
    assert np.abs(rho - rho.conj().transpose(0, 2, 1)).max() < 1e-12
    assert np.abs(np.einsum("tii->t", rho).real - 1.0).max() < 1e-9
    eigs = np.linalg.eigvalsh(rho)
    assert eigs.min() > -1e-10
    tr_sz = np.einsum("tij,ji->t", rho, SIGMA_Z).real
    assert np.abs(res.mean_sigma_z - tr_sz).max() < 1e-12


def test_identical_trajectories_give_zero_stderr(monkeypatch):
    orig = ens._trajectory_payload
    monkeypatch.setattr(
        ens, "_trajectory_payload", lambda cfg, idx, refine: orig(cfg, 0, refine)
    )
    res = run_ensemble(small_config(n_traj=5))
    assert np.abs(res.stderr_sigma_z).max() < 1e-7


def test_times_and_stride():
    res = run_ensemble(small_config(t_final=2.0, output_stride=5, n_traj=2))
    assert len(res.times) == 21
    assert res.times[1] == pytest.approx(0.1)
    assert res.times[-1] == pytest.approx(2.0)


def test_linear_and_nonlinear_means_agree():
    # the norm-weighted linear average estimates the same reduced dynamics
    # as the norm-conserving equation; at moderate coupling and matched
    # seeds a small ensemble already pins them within a few joint errors
    kw = dict(gamma=0.5, gamma_Gamma=0.05, n_traj=80, t_final=3.0, master_seed=11)
    nl = run_ensemble(small_config(**kw))
    li = run_ensemble(small_config(equation="linear", **kw))
    joint = np.hypot(nl.stderr_sigma_z, li.stderr_sigma_z) + 1e-4
    assert np.abs(nl.mean_sigma_z - li.mean_sigma_z).max() < 4.0 * joint.max()


def test_memoryless_mode_histogram_collapses():
    res = run_ensemble(
        small_config(hier=HierarchyParams(n_max=25, mode="bar_O_zero"), n_traj=4)
    )
    assert res.nq_histogram[0] == 4
    assert res.nq_histogram[1:].sum() == 0
    assert res.metadata["saturated_count"] == 0


def test_all_rejected_raises():
    # a zero cap in the adaptive mode rejects on the first step at this
    # coupling, so the whole ensemble dies and says so
    cfg = small_config(hier=HierarchyParams(n_max=0, mode="full"), n_traj=4, t_final=1.0)
    with pytest.raises(AllRejectedError, match="rejected"):
        run_ensemble(cfg)


def test_rejection_bookkeeping():
    # cap 12 rejects some but not all trajectories at strong coupling
    cfg = small_config(
        hier=HierarchyParams(n_max=12, mode="full"), gamma=0.2, n_traj=12, t_final=6.0
    )
    res = run_ensemble(cfg)
    meta = res.metadata
    assert 0 < meta["rejected_count"] < 12
    assert meta["accepted_count"] + meta["rejected_count"] == 12
    assert res.rejection_rate == pytest.approx(meta["rejected_count"] / 12)
    assert len(meta["rejected_indices"]) == meta["rejected_count"]
    assert not np.any(np.isnan(res.mean_sigma_z))


def test_metadata_fields():
    res = run_ensemble(small_config(n_traj=3))
    meta = res.metadata
    for key in (
        "code_version", "n_traj", "master_seed", "threads", "equation",
        "accepted_count", "rejected_count", "saturated_count",
        "mean_final_nq", "wall_time_s",
    ):
        assert key in meta, key
    assert meta["wall_time_s"] > 0.0
    hist = res.nq_histogram
    assert hist.sum() == meta["accepted_count"]  # nothing saturated here
    assert meta["mean_final_nq"] == pytest.approx(
        (hist * np.arange(len(hist))).sum() / meta["accepted_count"]
    )


def test_error_budget_components():
    cfg = small_config(
        gamma=0.4, hier=HierarchyParams(n_max=30), n_traj=24, t_final=2.0
    )
    errs = estimate_errors(cfg)
    assert set(errs) == {"E_Nz", "E_dt", "E_N"}
    assert errs["E_Nz"] > 0.0
    # generous cap: lowering it to 21 must not move the mean noticeably
    assert errs["E_N"] < 1e-6
    # the step bias on matched noise is far below the statistical error
    assert 0.0 < errs["E_dt"] < errs["E_Nz"]


def test_statistical_error_shrinks_with_ensemble_size():
    # the exact stderr formula is pinned above; here only the 1/sqrt(N)
    # trend is checked, with slack for the sampling noise of the sd itself
    base = run_ensemble(small_config(n_traj=20, t_final=1.0))
    big = run_ensemble(small_config(n_traj=180, t_final=1.0))
    e_small = base.stderr_sigma_z[1:].mean()
    e_big = big.stderr_sigma_z[1:].mean()
    assert e_big < 0.6 * e_small
    assert e_small / e_big < 6.0


def fake_result(counts, accepted=None):
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum()) if accepted is None else accepted
    t = np.zeros(2)
    return EnsembleResult(
        times=t, mean_sigma_z=t, stderr_sigma_z=t, rho_t=np.zeros((2, 2, 2)),
        mean_q_trace_norms=np.zeros((1, 2)), nq_histogram=counts,
        rejection_rate=0.0, accepted_count=n, metadata={},
    )


def test_nq_distribution_needs_statistics():
    with pytest.raises(ValueError, match="100"):
        nq_distribution(fake_result([50, 49], accepted=99))


def test_nq_distribution_recovers_exponential_tail():
    rate = 0.5
    bins = np.arange(40)
    counts = np.zeros(40, dtype=np.int64)
    counts[3:20] = np.round(4000 * np.exp(-rate * (bins[3:20] - 3))).astype(np.int64)
    counts[2] = 100  # sub-mode bin, excluded from the fit window
    dist = nq_distribution(fake_result(counts))
    assert dist["fitted"]
    assert dist["mode"] == 3
    assert dist["rate"] == pytest.approx(rate, abs=0.02)
    assert dist["r_squared"] > 0.99
    assert dist["density"].sum() == pytest.approx(1.0)
    assert np.array_equal(dist["bins"], bins)


def test_nq_distribution_single_bin():
    counts = np.zeros(10, dtype=np.int64)
    counts[4] = 500
    dist = nq_distribution(fake_result(counts))
    assert not dist["fitted"]
    assert dist["mode"] == 4
    assert np.isnan(dist["rate"])
