"""Seeded Brownian increments with exact coupling across dyadic grids.

Increments are always drawn on the finest grid and summed down.  Summation
is a dyadic tree (neighbouring pairs, repeated), so coarsening by 4 equals
coarsening by 2 twice, bit for bit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ArgumentError


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def derive_stream(seed: int, sample_id: int) -> np.random.Generator:
    """Independent counter-based stream keyed by ``(seed, sample_id)``."""
    if seed < 0 or sample_id < 0:
        raise ArgumentError("seed and sample_id must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(sample_id),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class IncrementPlan:
    seed: int
    sample_id: int
    T: float
    N_fine: int
    m: int
    increments: np.ndarray  # (N_fine, m), variance T / N_fine each


def _check_grid(T: float, N_fine: int, m: int) -> None:
    if not T > 0:
        raise ArgumentError(f"horizon T must be positive, got {T}")
    if not is_power_of_two(N_fine):
        raise ArgumentError(f"N_fine must be a power of two, got {N_fine}")
    if m < 1:
        raise ArgumentError(f"noise dimension must be positive, got {m}")


def _draw(seed: int, sample_id: int, T: float, N_fine: int, m: int) -> np.ndarray:
    rng = derive_stream(seed, sample_id)
    # draw order: row-major over steps, then noise coordinates
    return rng.standard_normal((N_fine, m)) * np.sqrt(T / N_fine)


def sample_increments(seed: int, sample_id: int, T: float, N_fine: int, m: int) -> IncrementPlan:
    _check_grid(T, N_fine, m)
    inc = _draw(seed, sample_id, T, N_fine, m)
    inc.setflags(write=False)
    return IncrementPlan(int(seed), int(sample_id), float(T), int(N_fine), int(m), inc)


def sample_increment_batch(seed: int, sample_ids: Iterable[int], T: float, N_fine: int, m: int) -> np.ndarray:
    """Stacked fine increments ``(len(sample_ids), N_fine, m)``."""
    _check_grid(T, N_fine, m)
    ids = list(sample_ids)
    out = np.empty((len(ids), N_fine, m))
    for row, sid in enumerate(ids):
        out[row] = _draw(seed, sid, T, N_fine, m)
    return out


def coarsen(plan, factor: int) -> np.ndarray:
    """Sum blocks of ``factor`` consecutive increments.

    Accepts an :class:`IncrementPlan` or a raw array whose second-to-last
    axis indexes steps.
    """
    inc = plan.increments if isinstance(plan, IncrementPlan) else np.asarray(plan, dtype=float)
    n = inc.shape[-2]
    if not is_power_of_two(factor):
        raise ArgumentError(f"coarsening factor must be a power of two, got {factor}")
    if n % factor:
        raise ArgumentError(f"factor {factor} does not divide the {n} fine steps")
    out = np.array(inc, dtype=float, copy=True)
    while factor > 1:
        out = out[..., 0::2, :] + out[..., 1::2, :]
        factor //= 2
    return out


def dyadic_total(increments) -> np.ndarray:
    """Sum of all increments in the same tree order ``coarsen`` uses."""
    inc = np.asarray(increments, dtype=float)
    return coarsen(inc, inc.shape[-2])[..., 0, :]


def dump_plan_csv(plan: IncrementPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "coordinate", "value"])
        for n in range(plan.N_fine):
            for j in range(plan.m):
                w.writerow([n, j, format(float(plan.increments[n, j]), ".17g")])
