"""Scalar spectral filters and their distance to the ideal low-pass filter.

Polynomial filters (GCN and truncated Taylor heat kernels) are handled as
coefficient vectors in increasing-degree order, so the squared-error
integrals against the ideal low pass are evaluated with exact
antiderivatives rather than quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as P

from .errors import DimensionMismatch, InvalidParams, TooLarge, UnsupportedKind
from .graph import Laplacian

FILTER_KINDS = ("heat", "taylor-heat", "gcn", "ideal-lowpass")
EIG_ORACLE_LIMIT = 512


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    s: float = 1.0
    order: int = 3
    lambda_k: float = 1.0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise UnsupportedKind(f"unknown filter kind {self.kind!r}")
        if self.kind in ("heat", "taylor-heat") and not self.s > 0:
            raise InvalidParams(f"s must be positive, got {self.s}")
        if self.kind == "taylor-heat" and not 0 <= self.order <= 3:
            raise InvalidParams(f"taylor order must be in 0..3, got {self.order}")

    @classmethod
    def heat(cls, s=1.0):
        return cls("heat", s=s)

    @classmethod
    def taylor(cls, s=1.0, order=3):
        return cls("taylor-heat", s=s, order=order)

    @classmethod
    def gcn(cls):
        return cls("gcn")

    @classmethod
    def ideal(cls, lambda_k):
        return cls("ideal-lowpass", lambda_k=lambda_k)


def taylor_coefficients(s: float, order: int) -> np.ndarray:
    """Coefficients of ``sum_n (-s)^n / n! * lambda^n`` for ``n <= order``."""
    return np.array([(-s) ** n / math.factorial(n) for n in range(order + 1)])


def polynomial_coefficients(f: FilterSpec) -> np.ndarray:
    if f.kind == "gcn":
        return np.array([1.0, -1.0])
    if f.kind == "taylor-heat":
        return taylor_coefficients(f.s, f.order)
    raise UnsupportedKind(f"{f.kind} is not a polynomial filter")


def eval_filter(f: FilterSpec, lam):
    lam = np.asarray(lam, dtype=float)
    if f.kind == "heat":
        out = np.exp(-f.s * lam)
    elif f.kind == "ideal-lowpass":
        out = (lam <= f.lambda_k).astype(float)
    else:
        out = P.polyval(lam, polynomial_coefficients(f))
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eigendecompose(lap: Laplacian, limit: int = EIG_ORACLE_LIMIT) -> Spectrum:
    """Full symmetric eigendecomposition; an oracle for small graphs only."""
    mat = lap.matrix
    n = mat.shape[0]
    if n > limit:
        raise TooLarge(f"N={n} exceeds the eigensolver oracle limit {limit}")
    if sp.issparse(mat):
        mat = mat.toarray()
    w, u = np.linalg.eigh(np.asarray(mat, dtype=float))
    return Spectrum(w, u)


def apply_filter_exact(f: FilterSpec, spec: Spectrum, x: np.ndarray) -> np.ndarray:
    """``U g(Lambda) U^T x`` for a vector or a matrix of column signals."""
    x = np.asarray(x, dtype=float)
    u = spec.eigenvectors
    if x.shape[0] != u.shape[0]:
        raise DimensionMismatch(f"signal has {x.shape[0]} rows, spectrum has {u.shape[0]}")
    g = np.atleast_1d(eval_filter(f, spec.eigenvalues))
    coeff = u.T @ x
    coeff = g * coeff if x.ndim == 1 else g[:, None] * coeff
    return u @ coeff


def _definite(antideriv, a, b):
    return P.polyval(b, antideriv) - P.polyval(a, antideriv)


def filter_distance(f: FilterSpec, lambda_k) -> float | np.ndarray:
    """Squared L2 distance on ``[0, 2]`` between ``f`` and the ideal low pass cut at ``lambda_k``."""
    if f.kind not in ("gcn", "taylor-heat"):
        raise UnsupportedKind(f"filter distance is defined for gcn and taylor-heat, not {f.kind}")
    lk = np.asarray(lambda_k, dtype=float)
    if np.any((lk < 0) | (lk > 2)):
        raise InvalidParams("lambda_k must lie in [0, 2]")
    c = polynomial_coefficients(f)
    pass_err = P.polysub([1.0], c)
    pass_int = P.polyint(P.polymul(pass_err, pass_err))
    stop_int = P.polyint(P.polymul(c, c))
    out = _definite(pass_int, 0.0, lk) + _definite(stop_int, lk, 2.0)
    return out.item() if out.ndim == 0 else out


def gcn_distance_closed_form(lambda_k):
    lk = np.asarray(lambda_k, dtype=float)
    return lk**2 - lk + 2.0 / 3.0


def dominance_margin(s: float, lambda_grid, order: int = 3) -> float:
    """``max_k [D(taylor(s)) - D(gcn)]`` over the grid; ``<= 0`` means Taylor dominates."""
    grid = np.asarray(lambda_grid, dtype=float)
    diff = filter_distance(FilterSpec.taylor(s, order), grid) - filter_distance(FilterSpec.gcn(), grid)
    return float(np.max(diff))


def dominance_s_range(lambda_grid=None, tol: float = 1e-6, order: int = 3,
                      s_max: float = 4.0, n_scan: int = 400) -> Optional[tuple[float, float]]:
    """Largest interval of ``s`` on which the Taylor heat filter is no farther
    from the ideal low pass than GCN at every grid cutoff.

    A coarse scan locates the feasible run containing the best ``s``; both
    ends are then refined by bisection to ``tol``. Returns ``None`` when no
    scanned ``s`` is feasible.
    """
    grid = np.linspace(0.0, 2.0, 201) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    ss = np.linspace(s_max / n_scan, s_max, n_scan)
    margins = np.array([dominance_margin(s, grid, order) for s in ss])
    feasible = margins <= 0
    if not feasible.any():
        return None
    best = int(np.argmin(margins))
    lo_i = best
    while lo_i > 0 and feasible[lo_i - 1]:
        lo_i -= 1
    hi_i = best
    while hi_i < n_scan - 1 and feasible[hi_i + 1]:
        hi_i += 1

    def bisect(inside, outside):
        while abs(outside - inside) > tol:
            mid = 0.5 * (inside + outside)
            if dominance_margin(mid, grid, order) <= 0:
                inside = mid
            else:
                outside = mid
        return inside

    lo = bisect(ss[lo_i], ss[lo_i - 1] if lo_i > 0 else 0.0)
    hi = bisect(ss[hi_i], ss[hi_i + 1]) if hi_i < n_scan - 1 else ss[hi_i]
    return lo, hi


def spectral_coefficients_curve(depth: int, order: int, s: float = 1.0, n_points: int = 201) -> np.ndarray:
    """Rows ``(lambda, g(lambda) ** depth)`` on ``[0, 2]``; ``depth`` stacked linear layers."""
    if depth < 1:
        raise InvalidParams("depth must be >= 1")
    if order not in (1, 3):
        raise InvalidParams(f"order must be 1 or 3, got {order}")
    lam = np.linspace(0.0, 2.0, n_points)
    coef = eval_filter(FilterSpec.taylor(s, order), lam) ** depth
    return np.column_stack([lam, coef])


def filter_response_table(s: float = 1.0, n_points: int = 201) -> tuple[list[str], np.ndarray]:
    """Columns for the filter-response CSV of ``analyze-filters``."""
    lam = np.linspace(0.0, 2.0, n_points)
    cols = {
        "lambda": lam,
        "gcn": eval_filter(FilterSpec.gcn(), lam),
        "taylor1": eval_filter(FilterSpec.taylor(s, 1), lam),
        "taylor3_depth1": eval_filter(FilterSpec.taylor(s, 3), lam),
        "taylor3_depth2": eval_filter(FilterSpec.taylor(s, 3), lam) ** 2,
        "heat": eval_filter(FilterSpec.heat(s), lam),
    }
    return list(cols), np.column_stack(list(cols.values()))


def distance_table(s: float = 1.0, n_points: int = 201) -> tuple[list[str], np.ndarray]:
    lk = np.linspace(0.0, 2.0, n_points)
    return ["lambdaK", "dist_gcn", "dist_taylor_s"], np.column_stack([
        lk,
        filter_distance(FilterSpec.gcn(), lk),
        filter_distance(FilterSpec.taylor(s, 3), lk),
    ])
