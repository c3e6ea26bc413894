"""Special functions and quadrature primitives for the analytical layer.

Everything in this module is pure and reentrant: no global state, no caches.
The workhorse routines (`lambert_w0`, `gamma_upper_regularized`) accept NumPy
arrays as well as scalars because the analytical coverage integrals evaluate
them on batches of quadrature nodes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureSpec",
    "lambert_w0",
    "gamma_upper_regularized",
    "integrate_radial",
    "integrate_periodic",
    "integrate_polar",
]

_BRANCH_POINT = -math.exp(-1.0)  # left edge of the W0 domain


class QuadratureError(RuntimeError):
    """Adaptive rule failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Error targets for the adaptive integrators.

    ``max_subdivisions`` bounds the number of interval splits, not function
    evaluations; each split costs two 15-point panels.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    max_subdivisions: int = 400

    def __post_init__(self) -> None:
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be > 0")
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be > 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------

def lambert_w0(x):
    """Principal branch of the Lambert W function: w with w*e^w = x, w >= -1.

    Defined for x >= -1/e.  Scalars in, scalar out; arrays in, array out.
    Raises ValueError below the branch point.
    """
    arr = np.asarray(x, dtype=float)
    bad = (arr < _BRANCH_POINT - 1e-14 * np.maximum(1.0, np.abs(arr))) | np.isnan(arr)
    if np.any(bad):
        raise ValueError("lambert_w0 requires x >= -1/e")
    out = _w0_halley(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def _w0_halley(x: np.ndarray) -> np.ndarray:
    x = np.minimum(np.maximum(x.ravel(), _BRANCH_POINT), np.inf)

    # Very large arguments: Newton on g(w) = w + ln w - ln x, which never
    # exponentiates and therefore cannot overflow.
    big = x > 1e250
    w = np.empty_like(x)
    if np.any(big):
        xl = np.log(x[big])
        wb = xl - np.log(xl)
        for _ in range(8):
            g = wb + np.log(wb) - xl
            wb -= g * wb / (wb + 1.0)
        w[big] = wb

    rest = ~big
    xr = x[rest]
    # Series around the branch point below -0.25, log-based start elsewhere.
    p = np.sqrt(np.maximum(2.0 * (math.e * xr + 1.0), 0.0))
    w_series = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    wr = np.where(xr < -0.25, w_series, np.log1p(xr))
    for _ in range(32):
        ew = np.exp(wr)
        f = wr * ew - xr
        wp1 = wr + 1.0
        denom = ew * wp1 - (wr + 2.0) * f / (2.0 * np.where(wp1 == 0.0, 1.0, wp1))
        step = np.where(f == 0.0, 0.0, f / np.where(denom == 0.0, 1.0, denom))
        wr = wr - step
        if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(wr))):
            break
    w[rest] = np.maximum(wr, -1.0)
    return w


# ---------------------------------------------------------------------------
# Regularized upper incomplete gamma  Q(mu, x) = Gamma(mu, x) / Gamma(mu)
# ---------------------------------------------------------------------------

def gamma_upper_regularized(mu, x):
    """Q(mu, x) = Gamma(mu, x)/Gamma(mu) for mu > 0, x >= 0.

    Power series of the lower function for x < mu + 1, modified-Lentz
    continued fraction otherwise (the standard split).  Monotone
    non-increasing in x, Q(mu, 0) = 1.  Array-valued x is supported.
    """
    mu = float(mu)
    if not mu > 0.0 or math.isnan(mu):
        raise ValueError("mu must be > 0")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise ValueError("x must be >= 0")
    out = _gammaincc(mu, np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def _gammaincc(mu: float, x: np.ndarray) -> np.ndarray:
    x = x.ravel()
    out = np.empty_like(x)
    small = x < mu + 1.0
    if np.any(small):
        out[small] = 1.0 - _gamma_p_series(mu, x[small])
    if np.any(~small):
        out[~small] = _gamma_q_contfrac(mu, x[~small])
    return np.clip(out, 0.0, 1.0)


def _gamma_log_prefactor(mu: float, x: np.ndarray) -> np.ndarray:
    # log of x^mu e^-x / Gamma(mu); -inf where it underflows or x is 0/inf
    with np.errstate(divide="ignore", invalid="ignore"):
        e = mu * np.log(x) - x - math.lgamma(mu)
    return np.where((x == 0.0) | ~np.isfinite(x), -np.inf, e)


def _gamma_p_series(mu: float, x: np.ndarray) -> np.ndarray:
    term = np.full_like(x, 1.0 / mu)
    total = term.copy()
    ap = mu
    for _ in range(500):
        ap += 1.0
        term = term * x / ap
        total += term
        if np.all(np.abs(term) <= np.abs(total) * 1e-16):
            break
    return np.exp(_gamma_log_prefactor(mu, x)) * total


def _gamma_q_contfrac(mu: float, x: np.ndarray) -> np.ndarray:
    tiny = 1e-300
    b = x + 1.0 - mu
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / np.where(np.abs(b) < tiny, tiny, b)
    h = d.copy()
    for i in range(1, 500):
        an = -i * (i - mu)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 3e-16):
            break
    return np.exp(_gamma_log_prefactor(mu, x)) * h


def _poisson_tail(k: int, z: np.ndarray) -> np.ndarray:
    """Q(k, z) for integer k >= 1 via the finite sum e^-z sum_{j<k} z^j/j!.

    Internal fast path; the public gamma_upper_regularized never takes it so
    the two stay independent cross-checks of each other.
    """
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        ez = np.exp(-np.where(np.isfinite(z), z, np.inf))
        term = np.ones_like(z)
        total = np.ones_like(z)
        for j in range(1, k):
            term = term * z / j
            total = total + term
        out = ez * np.where(np.isfinite(total), total, 0.0)
    return np.where(np.isfinite(z), np.clip(out, 0.0, 1.0), 0.0)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature on an interval
# ---------------------------------------------------------------------------

# 15-point Kronrod extension of 7-point Gauss (positive half, centre last).
_GK_X_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_GK_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_GK_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_GK_NODES = np.concatenate([-_GK_X_HALF[:7], _GK_X_HALF[::-1]])          # 15 ascending
_GK_WEIGHTS = np.concatenate([_GK_WK_HALF[:7], _GK_WK_HALF[::-1]])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])                           # embedded G7
_GAUSS_WEIGHTS = np.concatenate([_GK_WG_HALF[:3], _GK_WG_HALF[::-1]])


def _panel_nodes(a: float, b: float) -> np.ndarray:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * _GK_NODES


def _panel_sums(a: float, b: float, values: np.ndarray) -> tuple[float, float]:
    half = 0.5 * (b - a)
    k15 = half * float(np.dot(_GK_WEIGHTS, values))
    g7 = half * float(np.dot(_GAUSS_WEIGHTS, values[_GAUSS_IDX]))
    return k15, abs(k15 - g7)


def integrate_radial(
    f: Callable,
    lo: float,
    hi: float,
    spec: QuadratureSpec | None = None,
    *,
    vectorized: bool = False,
) -> float:
    """Adaptive Gauss-Kronrod estimate of the 1-D integral of f on [lo, hi].

    Splits the worst panel first until the summed error estimate meets
    ``max(abs_tol, rel_tol * |I|)``.  Pass ``vectorized=True`` when f maps a
    node array to a value array; otherwise f is called once per node.
    Raises QuadratureError after ``max_subdivisions`` splits.
    """
    spec = spec or QuadratureSpec()
    lo = float(lo)
    hi = float(hi)
    if not lo <= hi:
        raise ValueError("integration bounds must satisfy lo <= hi")
    if lo == hi:
        return 0.0

    if vectorized:
        evalf = lambda xs: np.asarray(f(xs), dtype=float)
    else:
        evalf = lambda xs: np.array([float(f(x)) for x in xs])

    def panel(a: float, b: float) -> tuple[float, float]:
        vals = evalf(_panel_nodes(a, b))
        if vals.shape != (15,) or not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned a non-finite or misshapen value")
        return _panel_sums(a, b, vals)

    val, err = panel(lo, hi)
    heap = [(-err, lo, hi, val, err)]
    total = val
    total_err = err
    splits = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if splits >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {spec.max_subdivisions} subdivisions "
                f"(estimate {total:.6e}, error {total_err:.2e})"
            )
        _, a, b, v, e = heapq.heappop(heap)
        if e == 0.0:
            # heap is ordered by error, so nothing left can be improved;
            # the residual total_err is floating-point drift
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            # interval exhausted at machine precision; keep its estimate
            heapq.heappush(heap, (0.0, a, b, v, 0.0))
            total_err -= e
            continue
        v1, e1 = panel(a, m)
        v2, e2 = panel(m, b)
        total += v1 + v2 - v
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, a, m, v1, e1))
        heapq.heappush(heap, (-e2, m, b, v2, e2))
        splits += 1
    return float(total)


# ---------------------------------------------------------------------------
# Periodic rule over the angle and the combined polar integral
# ---------------------------------------------------------------------------

def integrate_periodic(
    f: Callable,
    rs,
    *,
    vectorized: bool = False,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-14,
    start: int = 64,
    max_nodes: int = 1 << 15,
) -> np.ndarray:
    """Integral of f(r, theta) over theta in [0, 2pi) for each r in rs.

    Equally spaced nodes, doubled with reuse, accepted after two consecutive
    agreements (one agreement can be a fluke when the integrand is a narrow
    bump sitting between nodes).  For smooth 2pi-periodic integrands the
    doubling converges geometrically; rows that still disagree at the node
    cap (near-kinks, e.g. a sharply thinned field seen from almost exactly
    the source distance) are finished off by the adaptive panel rule, which
    bisects into the feature.  With ``vectorized=True`` f must broadcast
    over an (r, theta) mesh.
    """
    rs = np.atleast_1d(np.asarray(rs, dtype=float))

    def stage(thetas: np.ndarray) -> np.ndarray:
        if vectorized:
            vals = np.asarray(f(rs[:, None], thetas[None, :]), dtype=float)
            return vals.mean(axis=1)
        return np.array([
            sum(float(f(r, t)) for t in thetas) / len(thetas) for r in rs
        ])

    n = start
    mean = stage(2.0 * np.pi * np.arange(n) / n)
    agreed = np.zeros(len(rs), dtype=bool)
    streak = np.zeros(len(rs), dtype=int)
    while n < max_nodes:
        extra = stage(2.0 * np.pi * (np.arange(n) + 0.5) / n)
        nxt = 0.5 * (mean + extra)
        close = (
            2.0 * np.pi * np.abs(nxt - mean)
            <= np.maximum(abs_tol, rel_tol * 2.0 * np.pi * np.abs(nxt))
        )
        streak = np.where(close, streak + 1, 0)
        agreed = streak >= 2
        mean = nxt
        n *= 2
        if np.all(agreed):
            return 2.0 * np.pi * mean

    out = 2.0 * np.pi * mean
    spec = QuadratureSpec(
        abs_tol=max(abs_tol, 1e-14),
        rel_tol=max(rel_tol, 1e-12),
        max_subdivisions=2000,
    )
    for i in np.flatnonzero(~agreed):
        r_i = float(rs[i])
        if vectorized:
            g = lambda ths: np.asarray(
                f(np.array([[r_i]]), np.asarray(ths)[None, :]), dtype=float
            ).ravel()
            out[i] = integrate_radial(g, 0.0, 2.0 * np.pi, spec, vectorized=True)
        else:
            out[i] = integrate_radial(
                lambda th: f(r_i, th), 0.0, 2.0 * np.pi, spec
            )
    return out


def integrate_polar(
    f: Callable,
    r_lo: float,
    r_hi: float,
    spec: QuadratureSpec | None = None,
    *,
    vectorized: bool = False,
) -> float:
    """Integral of f(rho, theta) * rho over the annulus r_lo <= rho <= r_hi.

    The angle integral uses the periodic rule; the radial one the adaptive
    Gauss-Kronrod rule from ``integrate_radial``.
    """
    if r_lo < 0.0 or r_lo > r_hi:
        raise ValueError("require 0 <= r_lo <= r_hi")
    spec = spec or QuadratureSpec()

    def ring(rs: np.ndarray) -> np.ndarray:
        return np.asarray(rs, dtype=float) * integrate_periodic(
            f, rs, vectorized=vectorized
        )

    return integrate_radial(ring, r_lo, r_hi, spec, vectorized=True)
