"""Special functions and small symmetric-matrix routines.

Self-contained gamma/digamma/trigamma evaluations plus the 7x7 symmetric
solve/eigenvalue kernels used by the likelihood optimizer.  Everything here
is plain double precision; accuracy targets are 1e-12 relative for the gamma
function on |x| <= 30 and 1e-10 for the psi functions.
"""

from __future__ import annotations

import math

import numpy as np


class PoleError(ValueError):
    """Argument sits on a pole of the requested function."""


class SingularMatrixError(ValueError):
    """Pivot collapsed during factorization."""


class ConvergenceError(RuntimeError):
    """Iterative kernel failed to reach its tolerance."""


# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def _sinpi(x: float) -> float:
    # Range-reduced sin(pi x); keeps relative accuracy near integer x.
    m = round(x)
    return (-1.0 if m % 2 else 1.0) * math.sin(math.pi * (x - m))


def _check_pole(x: float) -> None:
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma-family pole at x={x}")


def gamma_fn(x: float) -> float:
    """Gamma function via the Lanczos sum, reflection below 0.5."""
    x = float(x)
    _check_pole(x)
    if x < 0.5:
        return math.pi / (_sinpi(x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_P[0]
    for i in range(1, 9):
        acc += _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_TWO_PI * t ** (z + 0.5) * math.exp(-t) * acc


# Asymptotic tail coefficients: -B_{2n}/(2n) for digamma, B_{2n} for trigamma.
_DIGAMMA_TAIL = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
)

_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


def digamma_fn(x: float) -> float:
    """Digamma via reflection, upward recurrence past 6, asymptotic series."""
    x = float(x)
    _check_pole(x)
    if x < 0.5:
        # cot(pi x) is pi-periodic: reduce both factors by the same r.
        r = x - round(x)
        cot = math.cos(math.pi * r) / math.sin(math.pi * r)
        return digamma_fn(1.0 - x) - math.pi * cot
    acc = 0.0
    while x < 7.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    p = inv2
    for c in _DIGAMMA_TAIL:
        tail += c * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x + tail


def trigamma_fn(x: float) -> float:
    """Trigamma, same reduction scheme as :func:`digamma_fn`."""
    x = float(x)
    _check_pole(x)
    if x < 0.5:
        s = _sinpi(x)
        return math.pi * math.pi / (s * s) - trigamma_fn(1.0 - x)
    acc = 0.0
    while x < 7.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = inv + 0.5 * inv2
    p = inv * inv2
    for c in _TRIGAMMA_TAIL:
        tail += c * p
        p *= inv2
    return acc + tail


class SymMatrix7:
    """Dense 7x7 symmetric matrix; entries are symmetrized on construction."""

    __slots__ = ("entries",)

    def __init__(self, entries) -> None:
        a = np.array(entries, dtype=float)
        if a.shape != (7, 7):
            raise ValueError(f"expected shape (7, 7), got {a.shape}")
        self.entries = 0.5 * (a + a.T)

    def __repr__(self) -> str:
        return f"SymMatrix7({self.entries!r})"


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, SymMatrix7):
        return a.entries
    m = np.asarray(a, dtype=float)
    if m.shape != (7, 7):
        raise ValueError(f"expected shape (7, 7), got {m.shape}")
    return 0.5 * (m + m.T)


def _ldl_factor(a: np.ndarray):
    # Outer-product elimination with symmetric (diagonal) pivoting; the
    # trailing block stays symmetric because pivots are taken on the diagonal.
    n = a.shape[0]
    m = a.copy()
    perm = np.arange(n)
    thresh = 1e-14 * np.abs(a).max()
    for k in range(n):
        j = k + int(np.argmax(np.abs(np.diag(m)[k:])))
        if j != k:
            m[[k, j], :] = m[[j, k], :]
            m[:, [k, j]] = m[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        piv = m[k, k]
        if abs(piv) < thresh:
            raise SingularMatrixError(f"pivot {piv:.3e} below 1e-14 * max|A|")
        mult = m[k + 1 :, k] / piv
        m[k + 1 :, k + 1 :] -= np.outer(mult, m[k, k + 1 :])
        m[k + 1 :, k] = mult
    return m, perm


def _ldl_apply(m: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    y = b[perm].astype(float)
    for k in range(n):
        y[k + 1 :] -= m[k + 1 :, k] * y[k]
    y /= np.diag(m)
    for k in range(n - 1, -1, -1):
        y[k] -= m[k + 1 :, k] @ y[k + 1 :]
    out = np.empty(n)
    out[perm] = y
    return out


def solve_sym(a, b) -> np.ndarray:
    """Solve A x = b for symmetric 7x7 A.

    LDL^T with symmetric pivoting followed by one iterative-refinement pass;
    raises :class:`SingularMatrixError` when a pivot falls below
    1e-14 * max|A|.
    """
    mat = _as_matrix(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape != (7,):
        raise ValueError(f"expected rhs shape (7,), got {rhs.shape}")
    fac, perm = _ldl_factor(mat)
    x = _ldl_apply(fac, perm, rhs)
    resid = rhs - mat @ x
    x = x + _ldl_apply(fac, perm, resid)
    return x


def eigen_sym(a, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of symmetric 7x7 A by cyclic Jacobi, descending order.

    Sweeps until every off-diagonal entry is below 1e-12 * ||A||_F; raises
    :class:`ConvergenceError` if that takes more than ``max_sweeps`` sweeps.
    """
    m = _as_matrix(a).copy()
    n = m.shape[0]
    norm = float(np.linalg.norm(m))
    if norm == 0.0:
        return np.zeros(n)
    tol = 1e-12 * norm
    for _ in range(max_sweeps):
        off = np.abs(m - np.diag(np.diag(m))).max()
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-30 * norm:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = m[p, :].copy()
                rq = m[q, :].copy()
                m[p, :] = c * rp - s * rq
                m[q, :] = s * rp + c * rq
                cp = m[:, p].copy()
                cq = m[:, q].copy()
                m[:, p] = c * cp - s * cq
                m[:, q] = s * cp + c * cq
    else:
        raise ConvergenceError(f"jacobi sweeps exhausted ({max_sweeps})")
    return np.sort(np.diag(m))[::-1]
