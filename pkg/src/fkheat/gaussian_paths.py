"""Exact-in-distribution sampling of the Gaussian objects.

Brownian paths, fractional Brownian paths (circulant embedding with a dense
Cholesky fallback), spatial Gaussian fields with a prescribed covariance,
and the space-time field whose covariance factorizes into a time part and a
space part (sampled through the Kronecker structure of its Cholesky factor).

All samplers draw from counter-based streams (see ``streams``), so ensembles
are reproducible and independent of how replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import streams
from .errors import (
    CoverageError,
    CovarianceError,
    DomainError,
    GenerationError,
    ResourceError,
)
from .kernels import CovarianceQ, holder_norm, hurst_value, rh_cov_matrix


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_n = t_end."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_end <= 0.0:
            raise DomainError("t_end must be positive")
        if self.n_steps < 1:
            raise DomainError("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass
class SamplePath:
    """Discretized path on a (possibly extended) uniform grid.

    ``times`` may start below zero when the path was generated with padding;
    Brownian and fractional paths are anchored so that the value at time 0
    equals the requested start point.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = "user"
    hurst: float | None = None
    method: str | None = None

    @property
    def d(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t) -> np.ndarray:
        """Piecewise-linear evaluation at arbitrary times inside the grid."""
        t = np.asarray(t, dtype=float)
        span = self.times[-1] - self.times[0]
        if np.any(t < self.times[0] - 1e-12 * span) or np.any(
            t > self.times[-1] + 1e-12 * span
        ):
            raise CoverageError(
                f"path covers [{self.times[0]}, {self.times[-1]}], "
                f"requested [{t.min()}, {t.max()}]"
            )
        if self.values.ndim == 1:
            return np.interp(t, self.times, self.values)
        cols = [np.interp(t, self.times, self.values[:, j]) for j in range(self.d)]
        return np.stack(cols, axis=-1)

    def holder_norm(self, kappa: float) -> float:
        return holder_norm(self, kappa)


def _as_rng(seed, stream: int = streams.GENERIC) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return streams.substream(int(seed), stream, 0)


# ---------------------------------------------------------------------------
# Brownian motion
# ---------------------------------------------------------------------------


def sample_bm(grid: TimeGrid, d: int = 1, x=0.0, seed=0) -> SamplePath:
    """Brownian path started at ``x`` with independent N(0, dt) increments."""
    if d < 1:
        raise DomainError("dimension must be at least 1")
    rng = _as_rng(seed, streams.BM)
    inc = rng.standard_normal((grid.n_steps, d)) * np.sqrt(grid.dt)
    vals = np.vstack([np.zeros((1, d)), np.cumsum(inc, axis=0)])
    vals = vals + np.broadcast_to(np.asarray(x, dtype=float), (d,))
    if d == 1:
        vals = vals[:, 0]
    return SamplePath(times=grid.points, values=vals, kind="bm")


def bm_ensemble(
    grid: TimeGrid, d: int, x, n_rep: int, seed: int, stream: int = streams.BM
) -> np.ndarray:
    """Batched Brownian paths, shape (n_rep, n+1) or (n_rep, n+1, d).

    Drawn chunk by chunk from fixed-size chunk streams.
    """
    n = grid.n_steps
    shape = (n_rep, n + 1, d)
    out = np.empty(shape)
    sq = np.sqrt(grid.dt)
    for c, lo, hi in streams.iter_chunks(n_rep):
        rng = streams.chunk_rng(seed, stream, c)
        inc = rng.standard_normal((hi - lo, n, d)) * sq
        out[lo:hi, 0, :] = 0.0
        np.cumsum(inc, axis=1, out=out[lo:hi, 1:, :])
    out += np.broadcast_to(np.asarray(x, dtype=float), (d,))
    return out[:, :, 0] if d == 1 else out


# ---------------------------------------------------------------------------
# Fractional Brownian motion
# ---------------------------------------------------------------------------

_dh_eigs_cache: dict = {}


def _fgn_autocov(H: float, m: int) -> np.ndarray:
    k = np.arange(m + 1, dtype=float)
    return 0.5 * (
        np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H)
    )


def _dh_eigenvalues(H: float, m: int) -> np.ndarray | None:
    """Eigenvalues of the circulant embedding, or None if not nonnegative."""
    key = (m, H)
    if key not in _dh_eigs_cache:
        g = _fgn_autocov(H, m)
        row = np.concatenate([g, g[-2:0:-1]])  # length 2m
        eigs = np.fft.fft(row).real
        if eigs.min() < -1e-9 * max(eigs.max(), 1.0):
            _dh_eigs_cache[key] = None
        else:
            _dh_eigs_cache[key] = np.maximum(eigs, 0.0)
    return _dh_eigs_cache[key]


def _fgn_circulant_batch(rng, H: float, m: int, batch: int) -> np.ndarray | None:
    """Batch of unit-step fractional Gaussian noise rows via the embedding."""
    eigs = _dh_eigenvalues(H, m)
    if eigs is None:
        return None
    two_m = 2 * m
    xi = rng.standard_normal((batch, two_m))
    w = np.zeros((batch, two_m), dtype=complex)
    w[:, 0] = np.sqrt(eigs[0] / two_m) * xi[:, 0]
    w[:, m] = np.sqrt(eigs[m] / two_m) * xi[:, m]
    if m > 1:
        k = np.arange(1, m)
        amp = np.sqrt(eigs[k] / (2.0 * two_m))
        w[:, k] = amp * (xi[:, k] + 1j * xi[:, two_m - k])
        w[:, two_m - k] = np.conj(w[:, k])
    z = np.fft.fft(w, axis=-1)
    return z[:, :m].real


_chol_inc_cache: dict = {}


def _fgn_cholesky_batch(rng, H: float, m: int, batch: int) -> np.ndarray:
    """Dense Cholesky fallback on the unit-step increment covariance."""
    key = (m, H)
    if key not in _chol_inc_cache:
        g = _fgn_autocov(H, m)
        idx = np.abs(np.arange(m)[:, None] - np.arange(m)[None, :])
        _chol_inc_cache[key] = chol_with_jitter(g[idx])
    L = _chol_inc_cache[key]
    return rng.standard_normal((batch, m)) @ L.T


def sample_fbm(grid: TimeGrid, H, seed=0, pad_steps: int = 0) -> SamplePath:
    """Scalar fractional Brownian path with the exact joint distribution.

    Accepts any Hurst exponent in (0, 1).  With ``pad_steps = p`` the grid is
    extended to ``[-p dt, t_end + p dt]``; the path is anchored to vanish at
    time 0.  Circulant embedding is used when its eigenvalues are
    nonnegative (always the case for H <= 1/2), otherwise a dense Cholesky of
    the increment covariance; the method used is recorded on the path.
    """
    vals, times, method = _fbm_batch(grid, H, seed, pad_steps, batch_mode=False)
    return SamplePath(
        times=times, values=vals[0], kind="fbm", hurst=hurst_value(H), method=method
    )


def fbm_ensemble(
    grid: TimeGrid,
    H,
    n_rep: int,
    seed: int,
    pad_steps: int = 0,
    stream: int = streams.FBM,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched fractional paths: returns (times, values of shape (n_rep, n+1))."""
    h = hurst_value(H)
    m = grid.n_steps + 2 * pad_steps
    dt = grid.dt
    times = (np.arange(m + 1) - pad_steps) * dt
    out = np.empty((n_rep, m + 1))
    scale = dt**h
    for c, lo, hi in streams.iter_chunks(n_rep):
        rng = streams.chunk_rng(seed, stream, c)
        fgn = _fgn_circulant_batch(rng, h, m, hi - lo)
        if fgn is None:
            fgn = _fgn_cholesky_batch(rng, h, m, hi - lo)
        out[lo:hi, 0] = 0.0
        np.cumsum(fgn * scale, axis=1, out=out[lo:hi, 1:])
    out -= out[:, pad_steps : pad_steps + 1]
    return times, out


def _fbm_batch(grid, H, seed, pad_steps, batch_mode):
    h = hurst_value(H)
    m = grid.n_steps + 2 * pad_steps
    dt = grid.dt
    times = (np.arange(m + 1) - pad_steps) * dt
    rng = _as_rng(seed, streams.FBM)
    fgn = _fgn_circulant_batch(rng, h, m, 1)
    method = "circulant"
    if fgn is None:
        try:
            fgn = _fgn_cholesky_batch(rng, h, m, 1)
        except CovarianceError as exc:
            raise GenerationError(
                f"both circulant embedding and Cholesky failed for H={h}, m={m}"
            ) from exc
        method = "cholesky"
    vals = np.concatenate([np.zeros((1, 1)), np.cumsum(fgn * dt**h, axis=1)], axis=1)
    vals = vals - vals[:, pad_steps : pad_steps + 1]
    return vals, times, method


# ---------------------------------------------------------------------------
# Gaussian fields
# ---------------------------------------------------------------------------


def chol_with_jitter(C: np.ndarray, ladder=(0.0, 1e-12, 1e-10, 1e-8)) -> np.ndarray:
    """Cholesky factor with an escalating diagonal jitter ladder.

    Jitter is ``lam * trace/n`` added to the diagonal; failure beyond the
    ladder raises ``CovarianceError`` naming the offending eigenvalue.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    scale = np.trace(C) / n
    if scale <= 0.0:
        if np.allclose(C, 0.0):
            return np.zeros_like(C)
        scale = np.abs(C).max()
    for lam in ladder:
        try:
            return np.linalg.cholesky(C + lam * scale * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    w = np.linalg.eigvalsh(C)
    raise CovarianceError(
        f"covariance is not positive semidefinite beyond jitter: "
        f"min eigenvalue {w.min():.6g} (trace {np.trace(C):.6g})"
    )


class GaussianFieldSampler:
    """Joint Gaussian sampler on a finite site set with cached Cholesky."""

    def __init__(self, sites, cov: np.ndarray):
        self.sites = np.asarray(sites, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self.L = chol_with_jitter(self.cov)

    def sample_values(self, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
        z = rng.standard_normal((batch, self.L.shape[0]))
        return z @ self.L.T

    def sample(self, seed, stream: int = streams.FIELD_Y) -> "GaussianFieldSample":
        rng = _as_rng(seed, stream)
        vals = self.sample_values(rng, 1)[0]
        return GaussianFieldSample(sites=self.sites, values=vals, sampler=self)

    def ensemble(
        self, n_rep: int, seed: int, stream: int = streams.FIELD_Y
    ) -> np.ndarray:
        out = np.empty((n_rep, self.L.shape[0]))
        for c, lo, hi in streams.iter_chunks(n_rep):
            rng = streams.chunk_rng(seed, stream, c)
            out[lo:hi] = self.sample_values(rng, hi - lo)
        return out


@dataclass
class GaussianFieldSample:
    """One joint sample of a Gaussian field on a finite site set."""

    sites: np.ndarray
    values: np.ndarray
    sampler: GaussianFieldSampler

    def value_at(self, x) -> float:
        idx = snap_to_sites(np.atleast_1d(np.asarray(x, float)), self.sites)
        return float(self.values[idx[0]])


def snap_to_sites(points: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """Indices of the nearest site for each point (one spatial dimension
    uses binary search, higher dimensions a dense distance scan)."""
    points = np.asarray(points, dtype=float)
    sites = np.asarray(sites, dtype=float)
    if sites.ndim == 1:
        order = np.argsort(sites)
        s = sites[order]
        j = np.clip(np.searchsorted(s, points), 1, len(s) - 1)
        left = s[j - 1]
        right = s[j]
        pick = np.where(points - left <= right - points, j - 1, j)
        return order[pick]
    d = np.linalg.norm(points[:, None, :] - sites[None, :, :], axis=-1)
    return np.argmin(d, axis=1)


def sample_field_y(Q: CovarianceQ, sites, seed=0) -> GaussianFieldSample:
    """Joint Gaussian sample with Gram matrix [Q(x_i, x_j)] via Cholesky.

    The factorization is cached on the returned sample's ``sampler`` and can
    be reused across replications on the same site set.
    """
    sites = np.asarray(sites, dtype=float)
    sampler = GaussianFieldSampler(sites, Q.matrix(sites, sites))
    return sampler.sample(seed)


# ---------------------------------------------------------------------------
# Space-time field with product covariance
# ---------------------------------------------------------------------------


class SpaceTimeFieldSampler:
    """Sampler for the field with covariance rh_cov(t,s) * Q(x,y).

    The dense covariance on a times-by-sites grid is the Kronecker product
    of the two factors, so one sample is ``L_t @ G @ L_x.T`` with iid normal
    G and the factor Cholesky factors L_t, L_x.
    """

    def __init__(self, times, sites, H, Q: CovarianceQ, cap: int = 4096):
        self.times = np.asarray(times, dtype=float)
        self.sites = np.asarray(sites, dtype=float)
        n_t, n_x = len(self.times), len(self.sites)
        if n_t * n_x > cap:
            raise ResourceError(
                f"dense space-time grid {n_t} x {n_x} exceeds the cap {cap}; "
                "raise the cap explicitly if this size is intended"
            )
        self.H = hurst_value(H)
        self.Q = Q
        self.L_t = chol_with_jitter(rh_cov_matrix(self.times, self.times, self.H))
        self.L_x = chol_with_jitter(Q.matrix(self.sites, self.sites))

    @property
    def dt(self) -> float:
        steps = np.diff(self.times)
        return float(steps[0])

    def sample_values(self, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
        g = rng.standard_normal((batch, len(self.times), len(self.sites)))
        return self.L_t @ g @ self.L_x.T

    def sample(self, seed, stream: int = streams.FIELD_W) -> "SpaceTimeFieldSample":
        rng = _as_rng(seed, stream)
        vals = self.sample_values(rng, 1)[0]
        return SpaceTimeFieldSample(
            times=self.times, sites=self.sites, values=vals, sampler=self
        )

    def iter_ensemble(
        self, n_rep: int, seed: int, stream: int = streams.FIELD_W
    ) -> Iterator[tuple[int, int, np.ndarray]]:
        """Yield (lo, hi, values[(hi-lo), n_t, n_x]) in fixed chunks."""
        for c, lo, hi in streams.iter_chunks(n_rep, chunk_size=512):
            rng = streams.chunk_rng(seed, stream, c)
            yield lo, hi, self.sample_values(rng, hi - lo)


@dataclass
class SpaceTimeFieldSample:
    """One sample of the space-time field on its times-by-sites grid."""

    times: np.ndarray
    sites: np.ndarray
    values: np.ndarray
    sampler: SpaceTimeFieldSampler

    @property
    def dt(self) -> float:
        return self.sampler.dt


def sample_w_on_grid(
    grid: TimeGrid,
    sites,
    H,
    Q: CovarianceQ,
    seed=0,
    pad_steps: int = 0,
    cap: int = 4096,
) -> SpaceTimeFieldSample:
    """Joint sample of the product-covariance field on grid times x sites.

    With ``pad_steps = p`` the time axis is extended to ``[-p dt, t_end + p dt]``
    (the field extends to negative times).
    """
    dt = grid.dt
    times = (np.arange(grid.n_steps + 2 * pad_steps + 1) - pad_steps) * dt
    sampler = SpaceTimeFieldSampler(times, np.asarray(sites, float), H, Q, cap=cap)
    return sampler.sample(seed)
