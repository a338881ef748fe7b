"""Single-trajectory integration of the stochastic state equation.

One trajectory couples three unknowns on a fixed Euler grid: the system
state, the scalar noise shift y_t, and the hierarchy of auxiliary
operators.  The default (nonlinear, norm-conserving) equation drives the
state with the shifted noise z~* = z* + y; the linear validation mode uses
the raw z* everywhere and keeps y at zero.

Each step is tentative: after updating, the top active hierarchy shell is
scanned, and a growth decision restores the pre-step snapshot, raises the
order and redoes the step, while a divergence decision at the cap marks
the trajectory rejected and stops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hierarchy as hier_mod
from .hierarchy import HierarchyParams, HierarchyState
from .noise import NoiseParams, NoisePath, alpha0, sample_path
from .operators import EXCITED, SIGMA_X, SIGMA_Z, trace_norms


@dataclass(frozen=True)
class ModelSpec:
    """System Hamiltonian, coupling operator, and initial state.

    Defaults give the two-level model: H_sys = (omega/2) sigma_z, coupling
    through sigma_x, starting in the excited state.
    """

    omega: float = 1.0
    H_sys: np.ndarray = None
    L: np.ndarray = None
    psi0: np.ndarray = None

    def __post_init__(self):
        if self.H_sys is None:
            object.__setattr__(self, "H_sys", 0.5 * self.omega * SIGMA_Z)
        if self.L is None:
            object.__setattr__(self, "L", SIGMA_X)
        if self.psi0 is None:
            object.__setattr__(self, "psi0", EXCITED.copy())
        H = np.asarray(self.H_sys, dtype=complex)
        if not np.allclose(H, H.conj().T, rtol=0.0, atol=1e-12):
            raise ValueError("H_sys must be Hermitian within 1e-12")
        norm = np.linalg.norm(self.psi0)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"psi0 must be normalized, got norm {norm}")


@dataclass
class TrajectoryResult:
    """Observables of one trajectory on the output grid.

    q_trace_norms[n, j] is trace_norm(Q_0^(n)) at output time j for n up to
    n_report.  psi_series holds the state at output times (unnormalized in
    linear mode, where averaging must weight by the squared norm).  A
    rejected trajectory carries data up to the rejection step and NaN
    beyond; consumers must exclude it from averages entirely.
    """

    times: np.ndarray
    sigma_z: np.ndarray
    n_q_series: np.ndarray
    rejected: bool
    q_trace_norms: np.ndarray
    final_n_q: int
    psi_series: np.ndarray = None


def nonlinear_rhs(psi: np.ndarray, bar_O: np.ndarray, z_tilde_star_t: complex, model: ModelSpec) -> np.ndarray:
    """Norm-conserving state derivative.

    -i H psi + (L - <L>) z~* psi - [(L^dag - <L^dag>) O^bar - <(L^dag -
    <L^dag>) O^bar>] psi, expectations taken in psi (assumed normalized).
    """
    L = model.L
    lpsi = L @ psi
    exp_l = np.vdot(psi, lpsi)
    opsi = bar_O @ psi
    centered = L.conj().T @ opsi - np.conj(exp_l) * opsi
    exp_centered = np.vdot(psi, centered)
    return (
        -1j * (model.H_sys @ psi)
        + z_tilde_star_t * (lpsi - exp_l * psi)
        - (centered - exp_centered * psi)
    )


def linear_rhs(psi: np.ndarray, bar_O: np.ndarray, z_star_t: complex, model: ModelSpec) -> np.ndarray:
    """Linear state derivative -i H psi + L z* psi - L^dag O^bar psi."""
    return (
        -1j * (model.H_sys @ psi)
        + z_star_t * (model.L @ psi)
        - model.L.conj().T @ (bar_O @ psi)
    )


def run_trajectory(
    model: ModelSpec,
    noise: NoiseParams,
    hier: HierarchyParams,
    dt: float,
    t_final: float,
    path: NoisePath = None,
    output_stride: int = 1,
    n_report: int = 12,
    equation: str = "nonlinear",
) -> TrajectoryResult:
    """Integrate one trajectory with explicit Euler steps.

    Args:
        path: optional pre-sampled noise path (used for identical-noise
            comparisons); sampled from noise.seed when omitted.  Its grid
            must match dt and t_final.
        output_stride: record observables every this many steps.
        equation: "nonlinear" (default) or "linear" (validation mode; uses
            the unshifted noise and skips renormalization and the shift).

    The noise is evaluated at the left endpoint of each step.  After an
    accepted nonlinear step the state is renormalized.  Growth decisions
    redo the step from the pre-step snapshot; a rejection stops the run.
    """
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError(f"need dt > 0 and t_final > 0, got dt={dt}, t_final={t_final}")
    if equation not in ("nonlinear", "linear"):
        raise ValueError(f"equation must be 'nonlinear' or 'linear', got {equation!r}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not a multiple of dt={dt}")
    if noise.dt != dt or noise.n_steps != n_steps:
        noise = NoiseParams(
            gamma=noise.gamma,
            gamma_Gamma=noise.gamma_Gamma,
            dt=dt,
            n_steps=n_steps,
            seed=noise.seed,
        )
    if path is None:
        path = sample_path(noise)
    elif len(path.z_star) != n_steps + 1:
        raise ValueError(
            f"noise path has {len(path.z_star)} points, grid needs {n_steps + 1}"
        )

    nonlinear = equation == "nonlinear"
    a0 = alpha0(noise)
    gamma = noise.gamma
    use_hierarchy = hier.mode != "bar_O_zero" and noise.gamma_Gamma > 0.0
    state = hier_mod.init_state(hier, dim=len(model.psi0)) if use_hierarchy else None
    zero_op = np.zeros_like(model.L)

    out_idx = range(0, n_steps + 1, output_stride)
    n_out = len(out_idx)
    times = np.asarray([k * dt for k in out_idx])
    sigma_z = np.full(n_out, np.nan)
    n_q_series = np.zeros(n_out, dtype=int)
    n_top = min(n_report, hier.n_max)
    q_norms = np.full((n_top + 1, n_out), np.nan)
    psi_series = np.full((n_out, len(model.psi0)), np.nan, dtype=complex)

    psi = np.asarray(model.psi0, dtype=complex).copy()
    y = 0.0 + 0.0j
    rejected = False
    z_star = path.z_star
    path.y[0] = 0.0
    path.z_tilde_star[0] = z_star[0] + path.y[0]
    out_pos = 0

    def record(k_step):
        nonlocal out_pos
        sigma_z[out_pos] = (abs(psi[0]) ** 2 - abs(psi[1]) ** 2) / np.vdot(psi, psi).real
        psi_series[out_pos] = psi
        if use_hierarchy:
            n_q_series[out_pos] = state.n_q
            tb = hier_mod.get_tables(state.n_max)
            q_norms[:, out_pos] = trace_norms(state.q[tb.shell_start[: n_top + 1]])
        else:
            q_norms[:, out_pos] = 0.0
        out_pos += 1

    record(0)
    for k in range(n_steps):
        z_eff = z_star[k] + y if nonlinear else z_star[k]
        exp_l = np.vdot(psi, model.L @ psi)
        if nonlinear:
            nrm2 = np.vdot(psi, psi).real
            exp_l = exp_l / nrm2
        if use_hierarchy:
            snap_n_q = state.n_q
            snap_q = state.q[: state.n_active].copy()
            while True:
                bar_O = hier_mod.assemble_bar_O(state)
                dq = hier_mod.hierarchy_rhs(
                    state, z_eff, model.H_sys, model.L, a0, gamma
                )
                if nonlinear:
                    dpsi = nonlinear_rhs(psi, bar_O, z_eff, model)
                else:
                    dpsi = linear_rhs(psi, bar_O, z_eff, model)
                pa = state.n_active
                new_q = state.q[:pa]
                new_q += dt * dq
                decision = hier_mod.adapt_order(state, hier)
                if decision == "grow":
                    new_q[: len(snap_q)] = snap_q
                    new_q[len(snap_q):] = 0.0
                    state.n_q += 1
                    continue
                if decision == "reject":
                    rejected = True
                break
        else:
            bar_O = zero_op
            if nonlinear:
                dpsi = nonlinear_rhs(psi, bar_O, z_eff, model)
            else:
                dpsi = linear_rhs(psi, bar_O, z_eff, model)
        if rejected:
            break
        psi = psi + dt * dpsi
        if nonlinear:
            psi /= np.linalg.norm(psi)
            y = y + dt * (-gamma * y + np.conj(a0) * np.conj(exp_l))
        path.y[k + 1] = y
        path.z_tilde_star[k + 1] = z_star[k + 1] + y
        if not (np.all(np.isfinite(psi.view(float))) and np.isfinite(y)):
            rejected = True
            break
        if (k + 1) % output_stride == 0:
            record(k + 1)

    if use_hierarchy:
        state.rejected = rejected
    final_n_q = state.n_q if use_hierarchy else 0
    return TrajectoryResult(
        times=times,
        sigma_z=sigma_z,
        n_q_series=n_q_series,
        rejected=rejected,
        q_trace_norms=q_norms,
        final_n_q=final_n_q,
        psi_series=psi_series,
    )
