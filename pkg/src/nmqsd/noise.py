"""Colored driving noise for the stochastic state equation.

The environment correlation function is a single decaying exponential,

    alpha(tau) = (gamma_Gamma / 2) * exp(-gamma * |tau|),

which makes the complex driving process an Ornstein-Uhlenbeck process.  It
is sampled exactly on the integration grid with the AR(1) update, so the
discrete path has the continuous-time covariance at every lag regardless of
the step size.  Paths start from the stationary distribution.

The conjugate process z*_t is what enters the equations of motion; its two
real quadratures are independent OU processes with stationary variance
alpha(0)/2, giving M[z_t z*_s] = alpha(t - s) and M[z_t z_s] = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of the driving process and its grid.

    Attributes:
        gamma: memory decay rate of the correlation function.  Must be
            positive unless gamma_Gamma is zero (no environment).
        gamma_Gamma: product of coupling strength and decay rate; alpha(0)
            equals gamma_Gamma / 2.
        dt: integration step.
        n_steps: number of steps; paths carry n_steps + 1 grid points.
        seed: anything accepted by numpy's default_rng (int, sequence of
            ints, or a SeedSequence).  Same seed, same path, bit for bit.
    """

    gamma: float
    gamma_Gamma: float
    dt: float
    n_steps: int
    seed: object = 0

    def __post_init__(self):
        if self.gamma_Gamma < 0.0:
            raise ValueError(f"gamma_Gamma must be >= 0, got {self.gamma_Gamma}")
        if self.gamma_Gamma > 0.0 and self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0 for a coupled bath, got {self.gamma}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")


@dataclass
class NoisePath:
    """One realization of the driving noise plus its per-trajectory shift.

    ``z_star`` is fixed at sampling time.  ``y`` and ``z_tilde_star`` are
    filled in by the integrator, which feeds the running expectation of the
    raising operator back into the shift; until then y is zero and
    z_tilde_star equals z_star.  The invariants y[0] == 0 and
    z_tilde_star == z_star + y hold exactly (the latter by construction,
    element by element).
    """

    z_star: np.ndarray
    y: np.ndarray = field(default=None)
    z_tilde_star: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.y is None:
            self.y = np.zeros_like(self.z_star)
        if self.z_tilde_star is None:
            self.z_tilde_star = self.z_star + self.y


def alpha0(params: NoiseParams) -> float:
    """Correlation function at zero lag, alpha(0) = gamma_Gamma / 2."""
    return 0.5 * params.gamma_Gamma


def correlation(params: NoiseParams, tau) -> np.ndarray:
    """Environment correlation alpha(tau); accepts scalars or arrays."""
    tau = np.asarray(tau, dtype=float)
    out = alpha0(params) * np.exp(-params.gamma * np.abs(tau))
    return out if out.ndim else float(out)


def sample_path(params: NoiseParams) -> NoisePath:
    """Draw one noise path on the grid, exactly distributed at any dt.

    Each quadrature follows x[k+1] = rho x[k] + sqrt(v (1 - rho^2)) xi with
    rho = exp(-gamma dt) and stationary variance v = alpha(0)/2; x[0] is
    drawn from the stationary distribution.
    """
    n_pts = params.n_steps + 1
    if params.gamma_Gamma == 0.0:
        return NoisePath(z_star=np.zeros(n_pts, dtype=complex))
    rng = np.random.default_rng(params.seed)
    v = 0.5 * alpha0(params)
    rho = np.exp(-params.gamma * params.dt)
    xi = rng.standard_normal((2, n_pts))
    scale = np.full(n_pts, np.sqrt(v * (1.0 - rho * rho)))
    scale[0] = np.sqrt(v)
    # x[k] = rho x[k-1] + w[k] is an IIR filter with denominator (1, -rho).
    x = lfilter([1.0], [1.0, -rho], xi * scale, axis=-1)
    z_star = x[0] - 1.0j * x[1]
    return NoisePath(z_star=z_star)


def refine_path(path: NoisePath, params: NoiseParams, seed: object) -> tuple[NoiseParams, NoisePath]:
    """Halve the step of an existing path, keeping every coarse point.

    Midpoints are drawn from the exact conditional (bridge) law of the OU
    process given the two neighboring coarse points: with r = exp(-gamma
    dt/2) and stationary variance v per quadrature, the midpoint is normal
    with mean r (x_a + x_b) / (1 + r^2) and variance v (1 - r^2) / (1 + r^2).
    The draw uses its own seed so the coarse path is untouched.
    """
    fine = NoiseParams(
        gamma=params.gamma,
        gamma_Gamma=params.gamma_Gamma,
        dt=0.5 * params.dt,
        n_steps=2 * params.n_steps,
        seed=seed,
    )
    z = path.z_star
    out = np.empty(fine.n_steps + 1, dtype=complex)
    out[::2] = z
    if params.gamma_Gamma == 0.0:
        out[1::2] = 0.0
        return fine, NoisePath(z_star=out)
    rng = np.random.default_rng(seed)
    v = 0.5 * alpha0(params)
    r = np.exp(-params.gamma * fine.dt)
    w = r / (1.0 + r * r)
    sd = np.sqrt(v * (1.0 - r * r) / (1.0 + r * r))
    xi = rng.standard_normal((2, params.n_steps))
    mean = w * (z[:-1] + z[1:])
    out[1::2] = mean + sd * (xi[0] - 1.0j * xi[1])
    return fine, NoisePath(z_star=out)


def advance_shift(y: complex, l_dag_expect: complex, params: NoiseParams) -> complex:
    """One Euler step of the noise-shift equation.

    dy/dt = -gamma y + conj(alpha(0)) <L^dag>, y(0) = 0.  alpha(0) is real
    for this kernel, so the conjugation is a no-op kept for generality.
    """
    return y + params.dt * (-params.gamma * y + np.conj(alpha0(params)) * l_dag_expect)
