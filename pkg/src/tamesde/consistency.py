"""Monte Carlo residuals for (mu, sigma)-consistency of an increment function."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import Model
from .errors import ArgumentError
from .schemes import OneStepMap, em_increment


def compact_slab_grid(model: Model, v: float, points_per_dim: int = 9) -> np.ndarray:
    """Lattice points of ``D_v = {x in D : |x| < v, dist(x, D^c) > 1/v}``.

    The lattice uses the interior points of an evenly spaced grid on
    ``[-v, v]`` in every coordinate.  Returns shape ``(K, d)``, possibly empty.
    """
    if not v >= 1:
        raise ArgumentError(f"v must be at least 1, got {v}")
    axis = np.linspace(-v, v, points_per_dim + 2)[1:-1]
    d = model.dim_state
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = (np.linalg.norm(pts, axis=-1) < v) & model.member(pts) & (model.distance(pts) > 1.0 / v)
    return pts[keep]


@dataclass
class ConsistencyReport:
    t: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    stderr1: np.ndarray
    stderr2: np.ndarray
    M: int
    v: float
    points: np.ndarray

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "R1", "R2", "stderr1", "stderr2"])
            for row in zip(self.t, self.R1, self.R2, self.stderr1, self.stderr2):
                w.writerow([format(float(x), ".17g") for x in row])


def consistency_residuals(increment_fn: Union[OneStepMap, Callable], model: Model, v: float,
                          t_grid: Sequence[float], M: int, seed: int = 0,
                          points_per_dim: int = 9, control_variate: bool = False) -> ConsistencyReport:
    """Estimate the diffusion residual ``R1(t)`` and drift residual ``R2(t)``.

    ``increment_fn(x, t, dW)`` is batched like a step function.  With
    ``control_variate=True`` the drift residual is computed from
    ``phi - phi_EM`` on the same increments, which has the same expectation
    because the Euler increment is exactly unbiased.
    """
    if isinstance(increment_fn, OneStepMap):
        increment_fn = increment_fn.increment
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr.ndim != 1 or t_arr.size == 0 or np.any(t_arr <= 0) or np.any(np.diff(t_arr) >= 0):
        raise ArgumentError("t_grid must be strictly decreasing and positive")
    if M < 100:
        raise ArgumentError(f"need at least 100 samples, got {M}")
    pts = compact_slab_grid(model, v, points_per_dim)
    n_t = t_arr.size
    R1, R2, s1, s2 = (np.zeros(n_t) for _ in range(4))
    if len(pts) == 0:
        warnings.warn(f"D_v is empty for v={v}; no residuals computed")
        empty = np.array([])
        return ConsistencyReport(t_arr, empty, empty, empty, empty, M, v, pts)
    x = pts[:, None, :]
    mu = model.drift_bar(pts)
    sig = model.diffusion_bar(pts)[:, None]
    for i, t in enumerate(t_arr):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))
        dW = (rng.standard_normal((M, model.dim_noise)) * math.sqrt(t))[None]
        with np.errstate(all="ignore"):
            phi = np.asarray(increment_fn(x, t, dW), dtype=float)
        noise = np.matmul(sig, dW[..., None])[..., 0]
        dev = np.linalg.norm(noise - phi, axis=-1)  # (K, M)
        r1 = dev.mean(axis=1) / math.sqrt(t)
        k1 = int(np.argmax(r1))
        R1[i], s1[i] = r1[k1], dev[k1].std(ddof=1) / math.sqrt(M * t)
        target = phi - em_increment(model, x, t, dW) if control_variate else phi
        base = np.zeros_like(mu) if control_variate else mu
        r2 = np.linalg.norm(base - target.mean(axis=1) / t, axis=-1)
        k2 = int(np.argmax(r2))
        R2[i] = r2[k2]
        s2[i] = np.linalg.norm(target[k2].std(axis=0, ddof=1)) / (math.sqrt(M) * t)
    return ConsistencyReport(t_arr, R1, R2, s1, s2, int(M), float(v), pts)
