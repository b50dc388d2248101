"""Seven-parameter tempered stable model for percent log returns.

The process is specified by its Levy triplet: tempering rates ``lambda_plus``
and ``lambda_minus``, tail indices ``beta_plus`` and ``beta_minus``, jump
intensities ``alpha_plus`` and ``alpha_minus``, plus a drift ``mu``.  The
characteristic exponent

    Psi(xi) = i mu xi
            + alpha_plus  Gamma(-beta_plus)  [(lambda_plus  - i xi)^beta_plus  - lambda_plus^beta_plus]
            + alpha_minus Gamma(-beta_minus) [(lambda_minus + i xi)^beta_minus - lambda_minus^beta_minus]

uses the principal branch of the complex power; the characteristic function
follows as F(xi) = exp(Psi(-xi)).  All quantities are in percent units.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .special_linalg import digamma_fn, gamma_fn, trigamma_fn

BOUND_EPS = 1e-8

PARAM_NAMES = (
    "mu",
    "beta_plus",
    "beta_minus",
    "alpha_plus",
    "alpha_minus",
    "lambda_plus",
    "lambda_minus",
)


class DomainError(ValueError):
    """Parameter or argument outside the model's domain."""


class BranchCutError(ValueError):
    """Complex power argument left the principal-branch half plane."""


class ActivityClass(enum.Enum):
    FINITE_ACTIVITY = "FiniteActivity"
    INFINITE_ACTIVITY = "InfiniteActivity"


@dataclass(frozen=True)
class GtsParams:
    """Model parameter vector; field order is the canonical vector order."""

    mu: float
    beta_plus: float
    beta_minus: float
    alpha_plus: float
    alpha_minus: float
    lambda_plus: float
    lambda_minus: float

    def validate(self) -> None:
        """Raise :class:`DomainError` naming the first offending field."""
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v}")
        for name in ("beta_plus", "beta_minus"):
            v = getattr(self, name)
            if not (BOUND_EPS < v < 1.0 - BOUND_EPS):
                raise DomainError(f"{name} must lie strictly in (0, 1), got {v}")
        for name in ("alpha_plus", "alpha_minus", "lambda_plus", "lambda_minus"):
            v = getattr(self, name)
            if not v > BOUND_EPS:
                raise DomainError(f"{name} must be strictly positive, got {v}")

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_vector(cls, v) -> "GtsParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (7,):
            raise ValueError(f"expected 7 components, got shape {v.shape}")
        return cls(*(float(x) for x in v))

    def to_json(self) -> dict:
        d = {n: getattr(self, n) for n in PARAM_NAMES}
        d["units"] = "percent"
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "GtsParams":
        units = obj.get("units", "percent")
        if units != "percent":
            raise DomainError(f"unsupported units {units!r}, expected 'percent'")
        try:
            return cls(*(float(obj[n]) for n in PARAM_NAMES))
        except KeyError as exc:
            raise DomainError(f"missing parameter key {exc.args[0]!r}") from None


def save_params(params: GtsParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(path) -> GtsParams:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise DomainError("parameter file must hold a JSON object")
    return GtsParams.from_json(obj)


def levy_density(params: GtsParams, x):
    """Levy measure density; tempered power laws on each half line.

    ``x`` may be a scalar or array; raises :class:`DomainError` at x = 0
    where the density is not defined.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xv = np.atleast_1d(xa)
    if np.any(xv == 0.0):
        raise DomainError("levy density undefined at x = 0")
    out = np.empty_like(xv)
    pos = xv > 0.0
    neg = ~pos
    out[pos] = params.alpha_plus * np.exp(-params.lambda_plus * xv[pos]) * xv[pos] ** (
        -1.0 - params.beta_plus
    )
    ax = -xv[neg]
    out[neg] = params.alpha_minus * np.exp(-params.lambda_minus * ax) * ax ** (
        -1.0 - params.beta_minus
    )
    return float(out[0]) if scalar else out


def activity_class(params: GtsParams) -> ActivityClass:
    """Jump-activity classification; accepts beta < 0 for this purpose only."""
    if params.beta_plus >= 0.0 or params.beta_minus >= 0.0:
        return ActivityClass.INFINITE_ACTIVITY
    return ActivityClass.FINITE_ACTIVITY


def _side_parts(params: GtsParams, xi, with_psi: bool = False):
    # Per-side scratch values shared by the exponent and its derivatives.
    sides = {}
    for key, b, a, lam, sgn in (
        ("p", params.beta_plus, params.alpha_plus, params.lambda_plus, -1.0),
        ("m", params.beta_minus, params.alpha_minus, params.lambda_minus, +1.0),
    ):
        w = lam + sgn * 1j * np.asarray(xi)
        if np.any(np.real(w) <= 0.0):
            raise BranchCutError(
                f"power argument off the principal branch (side {key}, lambda {lam})"
            )
        g = gamma_fn(-b)
        logw = np.log(w)
        parts = {
            "b": b,
            "a": a,
            "lam": lam,
            "g": g,
            "w": w,
            "logw": logw,
            "P": np.exp(b * logw),
            "Pl": lam**b,
            "llam": math.log(lam),
        }
        if with_psi:
            parts["psi0"] = digamma_fn(-b)
            parts["psi1"] = trigamma_fn(-b)
        sides[key] = parts
    return sides

def char_exponent(params: GtsParams, xi):
    """Characteristic exponent Psi(xi); complex xi allowed on the strip
    where both power arguments keep a positive real part."""
    s = _side_parts(params, xi)
    p, m = s["p"], s["m"]
    val = (
        1j * params.mu * np.asarray(xi)
        + p["a"] * p["g"] * (p["P"] - p["Pl"])
        + m["a"] * m["g"] * (m["P"] - m["Pl"])
    )
    return val if np.ndim(xi) else complex(val)


def char_fn(params: GtsParams, xi):
    """Characteristic function F(xi) = exp(Psi(-xi))."""
    val = np.exp(char_exponent(params, -np.asarray(xi)))
    return val if np.ndim(xi) else complex(val)


def _psi_grad(params: GtsParams, xi) -> np.ndarray:
    """Gradient of Psi w.r.t. the parameter vector, shape (7,) + xi.shape."""
    s = _side_parts(params, xi, with_psi=True)
    xi = np.asarray(xi)
    out = np.zeros((7,) + xi.shape, dtype=complex)
    out[0] = 1j * xi
    for idx_b, idx_a, idx_l, key in ((1, 3, 5, "p"), (2, 4, 6, "m")):
        d = s[key]
        b, a, g = d["b"], d["a"], d["g"]
        diff = d["P"] - d["Pl"]
        wbm1 = np.exp((b - 1.0) * d["logw"])
        lbm1 = d["lam"] ** (b - 1.0)
        out[idx_a] = g * diff
        out[idx_l] = a * g * b * (wbm1 - lbm1)
        out[idx_b] = a * g * (
            -d["psi0"] * diff + d["P"] * d["logw"] - d["Pl"] * d["llam"]
        )
    return out


def _psi_hess(params: GtsParams, xi) -> np.ndarray:
    """Hessian of Psi w.r.t. the parameter vector, shape (7, 7) + xi.shape.

    The mu row is identically zero and the two jump sides never mix, so only
    the per-side (alpha, lambda, beta) blocks are populated.
    """
    s = _side_parts(params, xi, with_psi=True)
    xi = np.asarray(xi)
    out = np.zeros((7, 7) + xi.shape, dtype=complex)
    for idx_b, idx_a, idx_l, key in ((1, 3, 5, "p"), (2, 4, 6, "m")):
        d = s[key]
        b, a, g, psi0, psi1 = d["b"], d["a"], d["g"], d["psi0"], d["psi1"]
        logw, llam = d["logw"], d["llam"]
        diff = d["P"] - d["Pl"]
        wbm1 = np.exp((b - 1.0) * logw)
        wbm2 = np.exp((b - 2.0) * logw)
        lbm1 = d["lam"] ** (b - 1.0)
        lbm2 = d["lam"] ** (b - 2.0)
        dlog = d["P"] * logw - d["Pl"] * llam
        d_al = g * b * (wbm1 - lbm1)
        d_ab = g * (-psi0 * diff + dlog)
        d_ll = a * g * b * (b - 1.0) * (wbm2 - lbm2)
        d_lb = a * g * (
            (1.0 - b * psi0) * (wbm1 - lbm1) + b * (wbm1 * logw - lbm1 * llam)
        )
        d_bb = a * g * (
            (psi0 * psi0 + psi1) * diff
            - 2.0 * psi0 * dlog
            + d["P"] * logw * logw
            - d["Pl"] * llam * llam
        )
        out[idx_a, idx_l] = out[idx_l, idx_a] = d_al
        out[idx_a, idx_b] = out[idx_b, idx_a] = d_ab
        out[idx_l, idx_l] = d_ll
        out[idx_l, idx_b] = out[idx_b, idx_l] = d_lb
        out[idx_b, idx_b] = d_bb
    return out


def char_fn_grad(params: GtsParams, xi) -> np.ndarray:
    """Parameter gradient of the characteristic function, shape (7,) + xi.shape."""
    xi = np.asarray(xi)
    f = np.exp(char_exponent(params, -xi))
    return f * _psi_grad(params, -xi)


def char_fn_hess(params: GtsParams, xi) -> np.ndarray:
    """Parameter Hessian of the characteristic function, shape (7, 7) + xi.shape.

    Product structure: d2F = F (dPsi_k dPsi_j + d2Psi_kj), evaluated at -xi.
    """
    xi = np.asarray(xi)
    f = np.exp(char_exponent(params, -xi))
    gp = _psi_grad(params, -xi)
    hp = _psi_hess(params, -xi)
    return f * (gp[:, None] * gp[None, :] + hp)


@dataclass(frozen=True)
class CumulantSet:
    values: tuple

    def kappa(self, k: int) -> float:
        if not 1 <= k <= len(self.values):
            raise ValueError(f"cumulant order {k} outside 1..{len(self.values)}")
        return self.values[k - 1]


@dataclass(frozen=True)
class MomentStats:
    mean: float
    std_dev: float
    cv: float
    skewness: float
    kurtosis: float


def cumulants(params: GtsParams, k_max: int = 4) -> CumulantSet:
    """First ``k_max`` cumulants in closed form (k_max <= 8)."""
    if not 1 <= k_max <= 8:
        raise ValueError(f"k_max must lie in 1..8, got {k_max}")
    bp, bm = params.beta_plus, params.beta_minus
    ap, am = params.alpha_plus, params.alpha_minus
    lp, lm = params.lambda_plus, params.lambda_minus
    vals = [
        params.mu
        + ap * gamma_fn(1.0 - bp) * lp ** (bp - 1.0)
        - am * gamma_fn(1.0 - bm) * lm ** (bm - 1.0)
    ]
    for k in range(2, k_max + 1):
        vals.append(
            ap * gamma_fn(k - bp) * lp ** (bp - k)
            + (-1.0) ** k * am * gamma_fn(k - bm) * lm ** (bm - k)
        )
    return CumulantSet(tuple(vals))


def moment_stats(params: GtsParams) -> MomentStats:
    """Mean, standard deviation, CV, skewness, kurtosis from the cumulants.

    Kurtosis is the full fourth standardized moment (3 for a Gaussian); CV is
    std/mean and is undefined when the mean vanishes.
    """
    k = cumulants(params, 4)
    k1, k2, k3, k4 = (k.kappa(i) for i in range(1, 5))
    if k1 == 0.0:
        raise DomainError("cv undefined: mean is zero")
    std = math.sqrt(k2)
    return MomentStats(
        mean=k1,
        std_dev=std,
        cv=std / k1,
        skewness=k3 / k2**1.5,
        kurtosis=3.0 + k4 / (k2 * k2),
    )
