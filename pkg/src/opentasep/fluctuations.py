"""Scaling-window fluctuation experiment near the triple point.

The stationary height process at boundary parameters a = exp(-u/sqrt(N)),
b = exp(-v/sqrt(N)) is sampled through the pair ensemble and scaled as
W1(x) = (2 s1(floor(xN)) - floor(xN)) / sqrt(N).  The candidate limit is
B + X with independent components: B a Brownian motion of variance 1/2 and X
a variance-1/2 Brownian path reweighted by

    exp((u + v) min_{[0,1]} omega  -  v omega(1)) / kappa(u, v).

X is simulated by importance reweighting of discretized Brownian paths (the
continuum minimum replaced by the grid minimum; refinement stability is part
of the acceptance checks), with self-normalized systematic resampling to
produce unweighted paths for the B + X sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, params_from_scaling
from .rng import stream
from .two_line_sampler import build_partition_table, sample_functionals

DEFAULT_MESH = (0.25, 0.5, 0.75, 1.0)
_BLOCK = 4096
ESS_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class ScalingConfig:
    """One scaling-window experiment: boundary parameters (u, v), system size
    n, and the mesh of evaluation points (sorted, within [0,1], ending at 1)."""

    u: float
    v: float
    n: int
    mesh: tuple[float, ...] = DEFAULT_MESH

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError("n must be >= 1")
        mesh = tuple(float(x) for x in self.mesh)
        if not mesh or list(mesh) != sorted(mesh):
            raise DomainError("mesh must be nonempty and sorted")
        if mesh[0] < 0.0 or mesh[-1] != 1.0:
            raise DomainError("mesh must lie in [0, 1] and include 1")
        object.__setattr__(self, "mesh", mesh)

    def positions(self) -> list[int]:
        return [math.floor(x * self.n) for x in self.mesh]


@dataclass(frozen=True)
class ScaledSample:
    """Scaled processes at the mesh points, one row per sample."""

    mesh: tuple[float, ...]
    w1: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray


def sample_scaled_processes(cfg: ScalingConfig, count: int, seed: int,
                            threads: int = 1) -> ScaledSample:
    p = params_from_scaling(cfg.u, cfg.v, cfg.n)
    table = build_partition_table(cfg.n, p.a, p.b)
    positions = cfg.positions()
    live = [k for k in positions if k >= 1]  # position 0 is identically zero
    s1_live, d_live = sample_functionals(table, count, seed, live, threads=threads)
    s1 = np.zeros((count, len(positions)), dtype=np.int64)
    d = np.zeros_like(s1)
    col = 0
    for i, k in enumerate(positions):
        if k >= 1:
            s1[:, i] = s1_live[:, col]
            d[:, i] = d_live[:, col]
            col += 1
    root = math.sqrt(cfg.n)
    ks = np.array(positions, dtype=float)
    w1 = (2.0 * s1 - ks) / root
    w_minus = d / root
    w_plus = w1 - w_minus
    return ScaledSample(mesh=cfg.mesh, w1=w1, w_plus=w_plus, w_minus=w_minus)


def sample_scaled_height(cfg: ScalingConfig, count: int, seed: int,
                         threads: int = 1) -> np.ndarray:
    """Matrix of W1 values, one row per sample, one column per mesh point."""
    return sample_scaled_processes(cfg, count, seed, threads=threads).w1


@dataclass(frozen=True)
class LimitEnsemble:
    """Weighted discretized-Brownian paths approximating the tilted component.

    omega_mesh holds the reference paths at the mesh points; weights are the
    raw (unnormalized) tilts, so kappa_hat is their plain mean.  ess is the
    effective sample size (sum w)^2 / sum w^2; degenerate flags ess below 1%
    of the sample count.
    """

    u: float
    v: float
    n_steps: int
    mesh: tuple[float, ...]
    omega_mesh: np.ndarray
    weights: np.ndarray
    kappa_hat: float
    ess: float
    degenerate: bool

    @property
    def count(self) -> int:
        return self.weights.size

    def resample_x(self, count: int, seed: int) -> np.ndarray:
        """Unweighted tilted paths at the mesh points, via systematic
        resampling of the self-normalized weights."""
        rng = stream(seed, 0)
        w = self.weights / self.weights.sum()
        cum = np.cumsum(w)
        cum[-1] = 1.0
        marks = (np.arange(count) + rng.uniform()) / count
        idx = np.searchsorted(cum, marks, side="right")
        return self.omega_mesh[idx]

    def sample_b_plus_x(self, count: int, seed: int) -> np.ndarray:
        """Samples of B + X at the mesh points (B an independent Brownian
        motion of variance 1/2)."""
        x = self.resample_x(count, seed)
        rng = stream(seed, 1)
        gaps = np.diff(np.concatenate([[0.0], np.asarray(self.mesh)]))
        incr = rng.normal(0.0, 1.0, size=(count, gaps.size)) * np.sqrt(gaps / 2.0)
        return x + np.cumsum(incr, axis=1)


def simulate_limit_process(u: float, v: float, n_steps: int, count: int,
                           seed: int,
                           mesh: tuple[float, ...] = DEFAULT_MESH) -> LimitEnsemble:
    """Importance-sample the tilted Brownian component on an n_steps grid.

    Reference paths are variance-1/2 Brownian (Gaussian increments of
    variance 1/(2 n_steps)); the raw weight of a path is
    exp((u+v) * grid-min - v * endpoint).
    """
    if n_steps < 100:
        raise DomainError("n_steps must be >= 100")
    if count < 1:
        raise DomainError("count must be >= 1")
    mesh = tuple(float(x) for x in mesh)
    cols = [int(round(x * n_steps)) for x in mesh]
    if any(not 0 <= c <= n_steps for c in cols):
        raise DomainError("mesh must lie in [0, 1]")
    sigma = math.sqrt(1.0 / (2.0 * n_steps))
    omega_mesh = np.empty((count, len(mesh)))
    weights = np.empty(count)
    done = 0
    block_idx = 0
    while done < count:
        size = min(_BLOCK, count - done)
        rng = stream(seed, block_idx)
        paths = np.cumsum(rng.normal(0.0, sigma, size=(size, n_steps)), axis=1)
        grid_min = np.minimum(paths.min(axis=1), 0.0)  # grid includes omega(0) = 0
        endpoint = paths[:, -1]
        weights[done : done + size] = np.exp((u + v) * grid_min - v * endpoint)
        for i, c in enumerate(cols):
            omega_mesh[done : done + size, i] = 0.0 if c == 0 else paths[:, c - 1]
        done += size
        block_idx += 1
    kappa_hat = float(weights.mean())
    ess = float(weights.sum() ** 2 / np.square(weights).sum())
    return LimitEnsemble(
        u=u, v=v, n_steps=n_steps, mesh=mesh, omega_mesh=omega_mesh,
        weights=weights, kappa_hat=kappa_hat, ess=ess,
        degenerate=ess < ESS_WARN_FRACTION * count,
    )


@dataclass(frozen=True)
class DistanceReport:
    ks: float
    w1: float


def compare_distributions(sample_a, sample_b, weights_b=None) -> DistanceReport:
    """Kolmogorov-Smirnov and Wasserstein-1 distances between the empirical
    law of sample_a and the (optionally weighted) empirical law of sample_b."""
    xa = np.sort(np.asarray(sample_a, dtype=float).ravel())
    xb = np.asarray(sample_b, dtype=float).ravel()
    if xa.size == 0 or xb.size == 0:
        raise DomainError("samples must be nonempty")
    if weights_b is None:
        wb = np.full(xb.size, 1.0 / xb.size)
    else:
        wb = np.asarray(weights_b, dtype=float).ravel()
        if wb.size != xb.size or (wb < 0).any() or wb.sum() <= 0:
            raise DomainError("weights_b must be nonnegative, matching sample_b")
        wb = wb / wb.sum()
    order = np.argsort(xb, kind="stable")
    xb = xb[order]
    wb = wb[order]
    grid = np.concatenate([xa, xb])
    grid.sort(kind="stable")
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.cumsum(wb)[np.searchsorted(xb, grid, side="right") - 1]
    fb = np.where(np.searchsorted(xb, grid, side="right") == 0, 0.0, fb)
    gap = np.abs(fa - fb)
    ks = float(gap.max())
    w1 = float(np.sum(gap[:-1] * np.diff(grid)))
    return DistanceReport(ks=ks, w1=w1)
