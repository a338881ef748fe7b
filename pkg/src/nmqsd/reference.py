"""Independent reference results used to validate the generic kernels.

Everything in this module is written out by hand, term by term, without
calling the generic hierarchy RHS: the low-order evolution equations with
their explicit numeric coefficients, the scalar Riccati reduction of the
lowering-operator (RWA) model, and Monte Carlo checks of the noise
statistics.  Tests and the CLI ``validate`` verb compare the production
kernels against these.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from . import noise as noise_mod
from .noise import NoiseParams, sample_path


def _com(a, b):
    return a @ b - b @ a


#: (n, m) pairs covered by explicit hand-coded equations below.
LOW_ORDER_PAIRS = [
    (0, 0),
    (1, 0),
    (1, 1),
    (2, 0),
    (2, 1),
    (2, 2),
    (3, 0),
    (3, 1),
    (3, 2),
    (3, 3),
]


def low_order_rhs(q, n, m, z, H, L, alpha0, gamma):
    """Hand-coded dQ_m^(n)/dt for the pairs in LOW_ORDER_PAIRS.

    Args:
        q: callable (n, m) -> operator; must return zero matrices outside
            the triangle of stored operators.
        z: conjugate (shifted) noise value at the current time.

    Each branch spells out every commutator with its explicit numeric
    weight; nothing is derived from the generic double-sum formula.  The
    m=0 equations follow the same explicit pattern: all split weights are
    one and the noise feed-down carries weight (n-m)/max(1,n) = 1.
    """
    Ld = L.conj().T

    def LQ(nn, mm):
        return Ld @ q(nn, mm)

    if (n, m) == (0, 0):
        return (
            alpha0 * L
            - gamma * q(0, 0)
            - 1j * _com(H, q(0, 0))
            - _com(LQ(0, 0), q(0, 0))
            - 1 * LQ(1, 1)
        )
    if (n, m) == (1, 0):
        return (
            z * _com(L, q(0, 0))
            - gamma * q(1, 0)
            - 1j * _com(H, q(1, 0))
            - _com(LQ(0, 0), q(1, 0))
            - _com(LQ(1, 0), q(0, 0))
            - 2 * LQ(2, 1)
        )
    if (n, m) == (1, 1):
        return (
            alpha0 * _com(L, q(0, 0))
            - 2 * gamma * q(1, 1)
            - 1j * _com(H, q(1, 1))
            - _com(LQ(0, 0), q(1, 1))
            - _com(LQ(1, 1), q(0, 0))
            - 2 * LQ(2, 2)
        )
    if (n, m) == (2, 0):
        return (
            z * _com(L, q(1, 0))
            - gamma * q(2, 0)
            - 1j * _com(H, q(2, 0))
            - _com(LQ(0, 0), q(2, 0))
            - _com(LQ(1, 0), q(1, 0))
            - _com(LQ(2, 0), q(0, 0))
            - 3 * LQ(3, 1)
        )
    if (n, m) == (2, 1):
        return (
            (alpha0 / 2) * _com(L, q(1, 0))
            + (z / 2) * _com(L, q(1, 1))
            - 2 * gamma * q(2, 1)
            - 1j * _com(H, q(2, 1))
            - _com(LQ(0, 0), q(2, 1))
            - 0.5 * _com(LQ(1, 1), q(1, 0))
            - 0.5 * _com(LQ(1, 0), q(1, 1))
            - _com(LQ(2, 1), q(0, 0))
            - 3 * LQ(3, 2)
        )
    if (n, m) == (2, 2):
        return (
            alpha0 * _com(L, q(1, 1))
            - 3 * gamma * q(2, 2)
            - 1j * _com(H, q(2, 2))
            - _com(LQ(0, 0), q(2, 2))
            - _com(LQ(1, 1), q(1, 1))
            - _com(LQ(2, 2), q(0, 0))
            - 3 * LQ(3, 3)
        )
    if (n, m) == (3, 0):
        return (
            z * _com(L, q(2, 0))
            - gamma * q(3, 0)
            - 1j * _com(H, q(3, 0))
            - _com(LQ(0, 0), q(3, 0))
            - _com(LQ(1, 0), q(2, 0))
            - _com(LQ(2, 0), q(1, 0))
            - _com(LQ(3, 0), q(0, 0))
            - 4 * LQ(4, 1)
        )
    if (n, m) == (3, 1):
        # The noise feed-down weight is 2/3 with the shifted conjugate
        # noise, consistent with every other order.
        return (
            (alpha0 / 3) * _com(L, q(2, 0))
            + (2 * z / 3) * _com(L, q(2, 1))
            - 2 * gamma * q(3, 1)
            - 1j * _com(H, q(3, 1))
            - _com(LQ(0, 0), q(3, 1))
            - (1 / 3) * _com(LQ(1, 1), q(2, 0))
            - (2 / 3) * _com(LQ(1, 0), q(2, 1))
            - (2 / 3) * _com(LQ(2, 1), q(1, 0))
            - (1 / 3) * _com(LQ(2, 0), q(1, 1))
            - _com(LQ(3, 1), q(0, 0))
            - 4 * LQ(4, 2)
        )
    if (n, m) == (3, 2):
        return (
            (2 * alpha0 / 3) * _com(L, q(2, 1))
            + (z / 3) * _com(L, q(2, 2))
            - 3 * gamma * q(3, 2)
            - 1j * _com(H, q(3, 2))
            - _com(LQ(0, 0), q(3, 2))
            - (2 / 3) * _com(LQ(1, 1), q(2, 1))
            - (1 / 3) * _com(LQ(1, 0), q(2, 2))
            - (1 / 3) * _com(LQ(2, 2), q(1, 0))
            - (2 / 3) * _com(LQ(2, 1), q(1, 1))
            - _com(LQ(3, 2), q(0, 0))
            - 4 * LQ(4, 3)
        )
    if (n, m) == (3, 3):
        return (
            alpha0 * _com(L, q(2, 2))
            - 4 * gamma * q(3, 3)
            - 1j * _com(H, q(3, 3))
            - _com(LQ(0, 0), q(3, 3))
            - _com(LQ(1, 1), q(2, 2))
            - _com(LQ(2, 2), q(1, 1))
            - _com(LQ(3, 3), q(0, 0))
            - 4 * LQ(4, 4)
        )
    raise ValueError(f"no hand-coded equation for (n, m) = ({n}, {m})")


def binomial_weight_loggamma(n: int, m: int, k: int, l: int) -> float:
    """Log-gamma evaluation of C(k,l) C(n-k,n-m-l) / C(n,m)."""

    def lc(a, b):
        return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)

    return float(np.exp(lc(k, l) + lc(n - k, n - m - l) - lc(n, m)))


def rwa_oracle(omega: float, gamma: float, alpha0: float, t_grid: np.ndarray):
    """Exact solution of the lowering-operator model on a time grid.

    With L the lowering operator, the ansatz Q_0^(0) = F(t) L closes the
    hierarchy: every feed term into n >= 1 contains [L, F L] = 0.  The
    scalar amplitude obeys the Riccati equation

        dF/dt = alpha0 + (i omega - gamma) F + F^2,    F(0) = 0,

    and the excited-state amplitude of the linear equation is
    deterministic, c_e' = (-i omega/2 - F) c_e, giving the exact ensemble
    mean sigma_z(t) = 2 exp(-2 int_0^t Re F) - 1.

    Returns:
        (F values on t_grid, exact mean sigma_z on t_grid).
    """

    def rhs(_t, s):
        f = s[0] + 1j * s[1]
        df = alpha0 + (1j * omega - gamma) * f + f * f
        return [df.real, df.imag, f.real]

    sol = solve_ivp(
        rhs,
        (float(t_grid[0]), float(t_grid[-1])),
        [0.0, 0.0, 0.0],
        t_eval=np.asarray(t_grid, dtype=float),
        rtol=1e-11,
        atol=1e-13,
        dense_output=False,
        method="RK45",
    )
    if not sol.success:
        raise RuntimeError(f"Riccati oracle integration failed: {sol.message}")
    f = sol.y[0] + 1j * sol.y[1]
    sigma_z = 2.0 * np.exp(-2.0 * sol.y[2]) - 1.0
    return f, sigma_z


def noise_autocovariance_check(params: NoiseParams, n_paths: int, max_lag: int, seed: int = 0):
    """Monte Carlo estimate of M[z_t z*_{t+k dt}] and M[z_t z_{t+k dt}].

    Per-path time averages are independent across paths, so the standard
    error of the across-path mean is an honest error bar.  Returns a dict
    with lag arrays, the estimated autocovariance with its standard
    errors, the target correlation values, and the (expected-zero)
    relation estimate with its standard errors.
    """
    lags = np.arange(max_lag + 1)
    n_pts = params.n_steps + 1
    paths = np.empty((n_paths, n_pts), dtype=complex)
    for i in range(n_paths):
        p = NoiseParams(
            gamma=params.gamma,
            gamma_Gamma=params.gamma_Gamma,
            dt=params.dt,
            n_steps=params.n_steps,
            seed=np.random.SeedSequence([seed, i]),
        )
        paths[i] = sample_path(p).z_star
    z = paths.conj()
    auto = np.empty((n_paths, max_lag + 1), dtype=complex)
    rel = np.empty((n_paths, max_lag + 1), dtype=complex)
    for k in lags:
        hi = n_pts - k
        auto[:, k] = np.mean(z[:, :hi] * paths[:, k:], axis=1)
        rel[:, k] = np.mean(z[:, :hi] * z[:, k:], axis=1)
    target = noise_mod.correlation(params, lags * params.dt)
    return {
        "lags": lags,
        "auto_mean": auto.mean(axis=0),
        "auto_se": auto.std(axis=0, ddof=1) / np.sqrt(n_paths),
        "target": target,
        "rel_mean": rel.mean(axis=0),
        "rel_se": rel.std(axis=0, ddof=1) / np.sqrt(n_paths),
    }


def damped_mode_sigma_z(
    omega: float,
    gamma: float,
    alpha0: float,
    t_grid: np.ndarray,
    coupling: str = "sigma_x",
    n_fock: int = 25,
) -> np.ndarray:
    """Exact reduced dynamics via a lossy-mode embedding.

    A bath whose coupling-operator correlation decays as a single real
    exponential, alpha0 * exp(-gamma |t-s|), is statistically identical
    (Gaussian, vacuum initial state, linear coupling) to one damped
    harmonic mode at zero frequency: coupling g = sqrt(alpha0) and
    amplitude decay gamma, i.e. Lindblad rate kappa = 2 gamma.  Tracing
    the mode out of the qubit+mode master equation therefore gives the
    exact reduced state for any coupling operator, with no stochastic or
    hierarchy machinery involved.  Error sources are only the Fock-space
    cutoff (checked by doubling) and the ODE tolerances.

    Args:
        omega: qubit level splitting (H = omega/2 sigma_z).
        gamma: bath memory decay rate.
        alpha0: correlation at zero lag.
        t_grid: times at which to report the qubit mean of sigma_z.
        coupling: "sigma_x" or "sigma_minus".
        n_fock: mode truncation dimension.

    Returns:
        Exact mean sigma_z on t_grid, starting from the excited qubit.
    """
    if coupling == "sigma_x":
        L = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    elif coupling == "sigma_minus":
        L = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    else:
        raise ValueError(f"coupling must be 'sigma_x' or 'sigma_minus', got {coupling!r}")
    g = np.sqrt(alpha0)
    kappa = 2.0 * gamma
    sz = np.diag([1.0, -1.0]).astype(complex)
    eye_mode = np.eye(n_fock)
    lower = np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(complex)
    H = 0.5 * omega * np.kron(sz, eye_mode)
    H += g * (np.kron(L, lower.conj().T) + np.kron(L.conj().T, lower))
    A = np.kron(np.eye(2), lower)
    Ad = A.conj().T
    num = Ad @ A
    dim = 2 * n_fock
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0  # excited qubit, empty mode
    sz_full = np.kron(sz, eye_mode)

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (H @ rho - rho @ H)
        drho += kappa * (A @ rho @ Ad - 0.5 * (num @ rho + rho @ num))
        return drho.ravel()

    sol = solve_ivp(
        rhs,
        (float(t_grid[0]), float(t_grid[-1])),
        rho0.ravel(),
        t_eval=np.asarray(t_grid, dtype=float),
        rtol=1e-9,
        atol=1e-11,
    )
    if not sol.success:
        raise RuntimeError(f"damped-mode oracle integration failed: {sol.message}")
    out = np.empty(sol.y.shape[1])
    for k in range(sol.y.shape[1]):
        rho = sol.y[:, k].reshape(dim, dim)
        out[k] = np.trace(sz_full @ rho).real
    return out
