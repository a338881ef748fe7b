"""Dense operator algebra for small quantum systems.

All operators are complex128 numpy arrays.  Two-level conventions: basis
order (excited, ground), so ``SIGMA_Z = diag(1, -1)`` and ``SIGMA_MINUS``
maps the excited state to the ground state.
"""

from __future__ import annotations

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

for _op in (SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_MINUS, SIGMA_PLUS):
    _op.flags.writeable = False
del _op

EXCITED = np.array([1.0, 0.0], dtype=complex)
GROUND = np.array([0.0, 1.0], dtype=complex)
EXCITED.flags.writeable = False
GROUND.flags.writeable = False


def identity(dim: int = 2) -> np.ndarray:
    """Identity operator of the given dimension."""
    if dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {dim}")
    return np.eye(dim, dtype=complex)


def _check_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Commutator ``[a, b] = a @ b - b @ a``.

    Args:
        a, b: square matrices of equal dimension.

    Raises:
        ValueError: if the shapes are not square or do not match.
    """
    a = _check_square(a, "a")
    b = _check_square(b, "b")
    if a.shape != b.shape:
        raise ValueError(
            f"commutator requires equal dimensions, got {a.shape} and {b.shape}"
        )
    return a @ b - b @ a


def adjoint(a: np.ndarray) -> np.ndarray:
    """Hermitian adjoint (conjugate transpose)."""
    a = _check_square(a, "a")
    return a.conj().T


def expectation(op: np.ndarray, psi: np.ndarray) -> complex:
    """Expectation value ``<psi| op |psi>`` for a normalized state vector.

    The caller is responsible for normalization; no renormalization is
    applied here because this sits on the integrator's hot path.
    """
    op = _check_square(op, "op")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (op.shape[0],):
        raise ValueError(
            f"state shape {psi.shape} does not match operator dimension {op.shape[0]}"
        )
    return complex(np.vdot(psi, op @ psi))


def trace_norm(a: np.ndarray) -> float:
    """Trace norm ``Tr sqrt(a^dag a)`` (sum of singular values).

    Uses the closed-form eigenvalues of the 2x2 Gram matrix when possible,
    otherwise a Hermitian eigendecomposition.
    """
    a = _check_square(a, "a")
    if a.shape == (2, 2):
        return float(trace_norms(a[None])[0])
    gram = a.conj().T @ a
    evals = np.linalg.eigvalsh(gram)
    return float(np.sqrt(np.clip(evals, 0.0, None)).sum())


def trace_norms(stack: np.ndarray) -> np.ndarray:
    """Trace norms of a stack of matrices, shape (..., d, d) -> (...).

    Vectorized; the 2x2 case avoids per-matrix eigensolves entirely.
    """
    stack = np.asarray(stack, dtype=complex)
    if stack.ndim < 2 or stack.shape[-1] != stack.shape[-2]:
        raise ValueError(f"expected a stack of square matrices, got shape {stack.shape}")
    if stack.shape[-1] == 2:
        # Gram matrix G = a^dag a: eigenvalues (h +- d) with
        # h = (G00 + G11)/2, d = sqrt(((G00 - G11)/2)^2 + |G01|^2).
        a00 = stack[..., 0, 0]
        a01 = stack[..., 0, 1]
        a10 = stack[..., 1, 0]
        a11 = stack[..., 1, 1]
        g00 = (a00.conj() * a00 + a10.conj() * a10).real
        g11 = (a01.conj() * a01 + a11.conj() * a11).real
        g01 = a00.conj() * a01 + a10.conj() * a11
        h = 0.5 * (g00 + g11)
        d = np.sqrt((0.5 * (g00 - g11)) ** 2 + np.abs(g01) ** 2)
        lo = np.clip(h - d, 0.0, None)
        hi = np.clip(h + d, 0.0, None)
        return np.sqrt(hi) + np.sqrt(lo)
    gram = np.swapaxes(stack, -1, -2).conj() @ stack
    evals = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(evals, 0.0, None)).sum(axis=-1)
