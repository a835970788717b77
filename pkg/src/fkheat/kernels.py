"""Scalar kernels and spatial covariance families.

Everything in this module is a pure function of its inputs: the fractional
covariance in time, the mixed second-difference kernel of the smoothed
noise and its decay bound, spatial covariance evaluation with declared
regularity/growth constants, rectangle increments, discrete Hölder norms,
and the audit that checks declared constants against sampled points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, TableLookupError


@dataclass(frozen=True)
class HurstParams:
    """Rough-regime Hurst parameter with its derived constant.

    ``alpha_h = 2H(2H-1)`` is negative throughout the admissible range
    ``0 < H < 1/2``.
    """

    H: float

    def __post_init__(self):
        if not 0.0 < self.H < 0.5:
            raise DomainError(f"Hurst parameter must lie in (0, 1/2), got {self.H}")

    @property
    def alpha_h(self) -> float:
        return 2.0 * self.H * (2.0 * self.H - 1.0)

    @property
    def abs_alpha_h(self) -> float:
        return -self.alpha_h


def hurst_value(H) -> float:
    """Accept either a bare float in (0,1) or a HurstParams instance."""
    h = H.H if isinstance(H, HurstParams) else float(H)
    if not 0.0 < h < 1.0:
        raise DomainError(f"Hurst exponent must lie in (0, 1), got {h}")
    return h


def rh_cov(t, s, H):
    """Fractional Brownian covariance (|t|^2H + |s|^2H - |t-s|^2H) / 2.

    Valid for all real ``t`` and ``s`` (the process is extended to the whole
    line); symmetric, with ``rh_cov(t, t) = |t|^{2H}``.  Broadcasts over
    array arguments.
    """
    h2 = 2.0 * hurst_value(H)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def rh_cov_matrix(times_a, times_b, H) -> np.ndarray:
    """Covariance matrix [rh_cov(a_i, b_j)]."""
    a = np.asarray(times_a, dtype=float)
    b = np.asarray(times_b, dtype=float)
    return rh_cov(a[:, None], b[None, :], H)


def _v_kernel_series(r: np.ndarray, eps: float, delta: float, h: float) -> np.ndarray:
    """v_kernel away from the kinks, free of the 1/(4 eps delta) cancellation.

    For |r| > eps + delta the difference quotient equals the average of the
    second derivative ``alpha_h |x|^{2H-2}`` over the rectangle
    ``[r-eps, r+eps] x [-delta, delta]``; that average is expanded in even
    moments of the rectangle, which converges for |r| >= 2 (eps + delta).
    """
    p = 2.0 * h - 2.0
    alpha_h = 2.0 * h * (2.0 * h - 1.0)
    # Even raw moments of U + V, U ~ Unif(-eps, eps), V ~ Unif(-delta, delta).
    kmax = 80
    mom = np.zeros(kmax + 1)
    from math import comb

    for k in range(0, kmax + 1, 2):
        m = 0.0
        for j in range(0, k + 1, 2):
            m += comb(k, j) * eps**j / (j + 1) * delta ** (k - j) / (k - j + 1)
        mom[k] = m
    acc = np.ones_like(r)
    ck = 1.0
    rk = np.ones_like(r)
    inv_r = 1.0 / r
    for k in range(1, kmax + 1):
        ck *= (p - k + 1) / k
        rk = rk * inv_r
        if k % 2 == 0:
            term = ck * mom[k] * rk
            acc += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                break
    return alpha_h * r**p * acc


def v_kernel(r, eps: float, delta: float, H):
    """Mixed second difference quotient of the fractional covariance.

    ``(4 eps delta)^{-1} (|r+e+d|^2H + |r-e-d|^2H - |r-e+d|^2H - |r+e-d|^2H)``;
    even in ``r`` and converging to ``alpha_h * |r|^{2H-2}`` as the two
    smoothing widths shrink.  Away from the kinks (``|r| >= 2(eps+delta)``)
    the evaluation uses an exact series for the rectangle average of the
    second derivative, which avoids the catastrophic cancellation of the raw
    difference quotient at small widths; accuracy degrades only for extremely
    disparate widths with ``|r|`` inside the kink region.
    """
    if eps <= 0.0 or delta <= 0.0:
        raise DomainError("smoothing widths eps and delta must be positive")
    h = hurst_value(H)
    h2 = 2.0 * h
    r_in = np.asarray(r, dtype=float)
    r = np.abs(np.atleast_1d(r_in).astype(float))
    out = np.empty_like(r)
    far = r >= 2.0 * (eps + delta)
    if np.any(far):
        out[far] = _v_kernel_series(r[far], eps, delta, h)
    if np.any(~far):
        rn = r[~far]
        num = (
            np.abs(rn + eps + delta) ** h2
            + np.abs(rn - eps - delta) ** h2
            - np.abs(rn - eps + delta) ** h2
            - np.abs(rn + eps - delta) ** h2
        )
        out[~far] = num / (4.0 * eps * delta)
    return out.reshape(np.shape(r_in)) if np.ndim(r_in) else float(out[0])


def v_kernel_bound(r, H):
    """Decay envelope 2^{3-2H} H (1-2H) r^{2H-2} for the smoothed kernel.

    Dominates ``|v_kernel(r, eps, delta, H)|`` whenever ``r >= 4 eps >= 4 delta``.
    Requires ``r > 0``.
    """
    h = hurst_value(H)
    if h >= 0.5:
        raise DomainError("bound is specific to the rough regime H < 1/2")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("v_kernel_bound requires r > 0")
    out = 2.0 ** (3.0 - 2.0 * h) * h * (1.0 - 2.0 * h) * r ** (2.0 * h - 2.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Spatial covariance families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceQ:
    """Spatial covariance with declared regularity and growth constants.

    The declared constants carry the meaning:

    * increment regularity: Q(x,x) + Q(y,y) - 2 Q(x,y) <= C0 |x-y|^{2 alpha};
    * lower growth: Q(x,y) >= C2 M^{2 beta} whenever all coordinates of x
      and y are >= M;
    * upper growth: |Q(x,y)| <= C1 (1+M)^{2 alpha} for |x|, |y| <= M.

    They are declarations, not fits; ``check_h1_h2`` audits them.
    """

    kind: str
    c: float = 1.0
    theta: float = 0.5
    sites: np.ndarray | None = None
    table: np.ndarray | None = None
    C0: float = 1.0
    alpha: float = 1.0
    C1: float = 1.0
    C2: float = 0.0
    beta: float = 0.0

    @staticmethod
    def constant(c: float, **declared) -> "CovarianceQ":
        """Constant covariance Q(x, y) = c."""
        if c < 0.0:
            raise DomainError("constant covariance level must be nonnegative")
        defaults = dict(C0=0.0, alpha=1.0, C1=c, C2=c, beta=0.0)
        defaults.update(declared)
        return CovarianceQ(kind="constant", c=float(c), **defaults)

    @staticmethod
    def fbm_spatial(theta: float, **declared) -> "CovarianceQ":
        """One-dimensional fractional covariance (|x|^2T + |y|^2T - |x-y|^2T)/2."""
        if not 0.0 < theta < 1.0:
            raise DomainError(f"spatial Hurst index must lie in (0,1), got {theta}")
        # Q(x,y) >= |min(x,y)|^{2T}/2 on x,y >= M > 0 by subadditivity of
        # t -> t^{2T}, and 1/2 is approached as y -> infinity, so C2 = 1/2 is
        # the safe uniform declaration (C2 = 1 fails for T < 1/2).
        defaults = dict(C0=1.0, alpha=theta, C1=1.0, C2=0.5, beta=theta)
        defaults.update(declared)
        return CovarianceQ(kind="fbm_spatial", theta=float(theta), **defaults)

    @staticmethod
    def tabulated(sites, table, **declared) -> "CovarianceQ":
        """Covariance given by a symmetric matrix on a finite site set."""
        sites = np.asarray(sites, dtype=float)
        table = np.asarray(table, dtype=float)
        if table.shape != (len(sites), len(sites)):
            raise DomainError("table shape must match the site count")
        if not np.allclose(table, table.T, atol=1e-12 * max(1.0, np.abs(table).max())):
            raise DomainError("tabulated covariance must be symmetric")
        defaults = dict(C0=1.0, alpha=0.5, C1=float(np.abs(table).max(initial=0.0)),
                        C2=0.0, beta=0.0)
        defaults.update(declared)
        return CovarianceQ(kind="tabulated", sites=sites, table=table, **defaults)

    # -- evaluation ---------------------------------------------------------

    def matrix(self, xs, ys) -> np.ndarray:
        """Q evaluated on the cross product of two point arrays."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.kind == "constant":
            return np.full((xs.shape[0], ys.shape[0]), self.c)
        if self.kind == "fbm_spatial":
            self._require_1d(xs, ys)
            p = 2.0 * self.theta
            return 0.5 * (
                np.abs(xs)[:, None] ** p
                + np.abs(ys)[None, :] ** p
                - np.abs(xs[:, None] - ys[None, :]) ** p
            )
        ix = self._site_indices(xs)
        iy = self._site_indices(ys)
        return self.table[np.ix_(ix, iy)]

    def pairwise(self, xs, ys) -> np.ndarray:
        """Q evaluated elementwise on paired point arrays."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.kind == "constant":
            return np.full(np.broadcast(xs, ys).shape, self.c)
        if self.kind == "fbm_spatial":
            self._require_1d(xs, ys)
            p = 2.0 * self.theta
            return 0.5 * (np.abs(xs) ** p + np.abs(ys) ** p - np.abs(xs - ys) ** p)
        ix = self._site_indices(np.atleast_1d(xs))
        iy = self._site_indices(np.atleast_1d(ys))
        return self.table[ix, iy]

    def _require_1d(self, *arrays):
        for a in arrays:
            if a.ndim > 1 and a.shape[-1] != 1:
                raise DomainError(
                    "fbm_spatial covariance is defined for one spatial dimension only"
                )

    def _site_indices(self, pts: np.ndarray) -> np.ndarray:
        flat = np.atleast_1d(np.asarray(pts, dtype=float))
        scale = max(1.0, float(np.abs(self.sites).max(initial=0.0)))
        d = np.abs(flat[:, None] - self.sites[None, :])
        idx = np.argmin(d, axis=1)
        miss = d[np.arange(len(flat)), idx] > 1e-9 * scale
        if np.any(miss):
            raise TableLookupError(
                f"point(s) {flat[miss][:3]} not in the tabulated site set"
            )
        return idx


def q_eval(Q: CovarianceQ, x, y) -> float:
    """Evaluate Q at a single pair of points."""
    return float(np.asarray(Q.pairwise(x, y)).item())


def q_hat(Q: CovarianceQ, phi_u, phi_v, psi_u, psi_v) -> float:
    """Rectangle increment (Q(pu,su) + Q(pv,sv) - Q(pu,sv) - Q(pv,su)) / 2.

    Measures the correlation of spatial increments; flips sign when exactly
    one of the two point pairs is swapped.
    """
    return 0.5 * (
        q_eval(Q, phi_u, psi_u)
        + q_eval(Q, phi_v, psi_v)
        - q_eval(Q, phi_u, psi_v)
        - q_eval(Q, phi_v, psi_u)
    )


def q_hat_matrix(Q: CovarianceQ, phi_pts, psi_pts) -> np.ndarray:
    """Rectangle increments on a grid: entry (i,j) pairs time-cell i with j.

    ``phi_pts`` and ``psi_pts`` are the two paths evaluated at the same
    time points, so entry (i, j) is the rectangle increment between times
    ``i`` and ``j``.
    """
    A = Q.matrix(phi_pts, psi_pts)
    d = np.diag(A)
    return 0.5 * (d[:, None] + d[None, :] - A - A.T)


# ---------------------------------------------------------------------------
# Discrete path functionals
# ---------------------------------------------------------------------------


def _times_values(path):
    if hasattr(path, "times") and hasattr(path, "values"):
        return np.asarray(path.times, float), np.asarray(path.values, float)
    times, values = path
    return np.asarray(times, float), np.asarray(values, float)


def holder_norm(path, kappa: float) -> float:
    """Grid supremum of |phi(t_j) - phi(t_i)| / (t_j - t_i)^kappa over i < j.

    A lower estimate of the true Hölder seminorm of the underlying function;
    used for diagnostics and for evaluating closed-form bounds, never for
    correctness gating.
    """
    if not 0.0 < kappa <= 1.0:
        raise DomainError("kappa must lie in (0, 1]")
    times, values = _times_values(path)
    n = len(times)
    if n < 2:
        raise DomainError("holder_norm requires at least two grid points")
    if values.ndim == 1:
        values = values[:, None]
    best = 0.0
    block = 512
    for lo in range(0, n - 1, block):
        hi = min(lo + block, n - 1)
        dts = times[None, lo + 1:] - times[lo:hi, None]
        dvs = np.linalg.norm(values[None, lo + 1:, :] - values[lo:hi, None, :], axis=-1)
        mask = dts > 0.0
        if np.any(mask):
            ratios = np.where(mask, dvs / np.where(mask, dts, 1.0) ** kappa, 0.0)
            best = max(best, float(ratios.max()))
    return best


def sup_norm(path) -> float:
    """Supremum of |phi| over the grid (Euclidean norm for vector paths)."""
    _, values = _times_values(path)
    if values.ndim == 1:
        return float(np.abs(values).max())
    return float(np.linalg.norm(values, axis=-1).max())


# ---------------------------------------------------------------------------
# Declared-constant audit
# ---------------------------------------------------------------------------


@dataclass
class H1H2Report:
    """Result of auditing declared covariance constants on sampled points."""

    fitted_C0: float
    fitted_C0_increment: float
    fitted_C0_rectangle: float
    fitted_C2: float
    fitted_alpha: float
    c2_by_M: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_h1_h2(
    Q: CovarianceQ,
    sample_pairs,
    M_values: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
    tol: float = 1e-9,
) -> H1H2Report:
    """Audit the declared (C0, alpha) and (C2, beta) constants on samples.

    The increment condition is checked both in its variance form
    ``Q(x,x)+Q(y,y)-2Q(x,y) <= C0 |x-y|^{2a}`` and in its rectangle form
    ``|Q(x,u)+Q(y,w)-Q(x,w)-Q(y,u)| <= C0 |x-y|^a |u-w|^a``; the growth
    condition is probed on grids of points with all coordinates >= M.
    Violations are collected in the report, never raised.
    """
    xs, ys = sample_pairs
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0:
        raise DomainError("check_h1_h2 requires a nonempty sample set")

    dist = np.abs(xs - ys) if xs.ndim == 1 else np.linalg.norm(xs - ys, axis=-1)
    keep = dist > 0.0
    lhs = Q.pairwise(xs, xs) + Q.pairwise(ys, ys) - 2.0 * Q.pairwise(xs, ys)
    ratios = lhs[keep] / dist[keep] ** (2.0 * Q.alpha)
    fitted_c0_inc = float(ratios.max(initial=0.0))

    violations = []
    bad = lhs[keep] > Q.C0 * dist[keep] ** (2.0 * Q.alpha) + tol
    for i in np.nonzero(bad)[0][:10]:
        violations.append(
            {"kind": "increment", "x": xs[keep][i], "y": ys[keep][i],
             "lhs": float(lhs[keep][i]),
             "rhs": float(Q.C0 * dist[keep][i] ** (2.0 * Q.alpha))}
        )

    # Rectangle form: quadruples from pairs (i, j), including i = j, where
    # the two forms are forced to meet.
    m = len(xs)
    j = np.concatenate([np.arange(m), (np.arange(m) + 1) % m, (np.arange(m) + m // 2) % m])
    i = np.concatenate([np.arange(m)] * 3)
    rect = np.abs(
        Q.pairwise(xs[i], xs[j]) + Q.pairwise(ys[i], ys[j])
        - Q.pairwise(xs[i], ys[j]) - Q.pairwise(ys[i], xs[j])
    )
    keep_r = (dist[i] > 0.0) & (dist[j] > 0.0)
    rect_ratio = rect[keep_r] / (dist[i][keep_r] ** Q.alpha * dist[j][keep_r] ** Q.alpha)
    fitted_c0_rect = float(rect_ratio.max(initial=0.0))
    bad_r = rect_ratio > Q.C0 + tol
    for idx in np.nonzero(bad_r)[0][:10]:
        violations.append({"kind": "rectangle", "ratio": float(rect_ratio[idx])})

    # Fitted increment exponent: slope of log lhs against log distance.
    pos = keep & (lhs > 0.0)
    if pos.sum() >= 2 and np.ptp(np.log(dist[pos])) > 0.0:
        slope = np.polyfit(np.log(dist[pos]), np.log(lhs[pos]), 1)[0]
        fitted_alpha = 0.5 * float(slope)
    else:
        fitted_alpha = float("nan")

    # Growth condition: brute-force minimum of Q on [M, 4M]^2 probes.
    c2_by_m = {}
    for M in M_values:
        g = np.linspace(M, 4.0 * M, 17)
        qmin = float(Q.matrix(g, g).min())
        c2_by_m[float(M)] = qmin / M ** (2.0 * Q.beta)
        if qmin < Q.C2 * M ** (2.0 * Q.beta) - tol:
            violations.append(
                {"kind": "growth", "M": float(M), "min_Q": qmin,
                 "rhs": float(Q.C2 * M ** (2.0 * Q.beta))}
            )
    fitted_c2 = min(c2_by_m.values()) if c2_by_m else float("nan")

    return H1H2Report(
        fitted_C0=max(fitted_c0_inc, fitted_c0_rect),
        fitted_C0_increment=fitted_c0_inc,
        fitted_C0_rectangle=fitted_c0_rect,
        fitted_C2=fitted_c2,
        fitted_alpha=fitted_alpha,
        c2_by_M=c2_by_m,
        violations=violations,
    )
