"""Rare-event bookkeeping, Lyapunov moment bounds and admissible exponents.

The truncation family is fixed to ``zeta(t) = t**(-alpha)``, so the good
event up to step ``n`` is ``Omega_n = {V(Y_k) <= (N/T)**alpha for all k < n}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import LyapunovSpec
from .errors import ArgumentError, ParameterError, PreconditionError
from .schemes import DiscretePath, OneStepMap


def _stack_paths(paths) -> DiscretePath:
    if isinstance(paths, DiscretePath):
        return paths
    paths = list(paths)
    if not paths:
        raise ArgumentError("empty ensemble")
    T, N = paths[0].T, paths[0].N
    for p in paths:
        if p.T != T or p.N != N:
            raise ArgumentError("paths live on different grids")
    states = np.stack([p.states.reshape(-1, N + 1, p.states.shape[-1]) for p in paths]).reshape(-1, N + 1, paths[0].states.shape[-1])
    return DiscretePath(T, states)


@dataclass
class RareEventLedger:
    alpha: float
    T: float
    N: int
    indicators: np.ndarray  # (M, N+1) bool, column n is 1_{Omega_n}
    v_values: np.ndarray    # (M, N+1)

    @property
    def M(self) -> int:
        return self.indicators.shape[0]

    @property
    def threshold(self) -> float:
        return (self.N / self.T) ** self.alpha

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * (self.T / self.N)

    def _masked(self, ind):
        return np.where(ind, self.v_values, 0.0)

    @property
    def ev_final(self) -> np.ndarray:
        """Per-node estimate of ``E[1_{Omega_N} V(Y_n)]``."""
        return self._masked(self.indicators[:, -1:]).mean(axis=0)

    @property
    def ev_final_stderr(self) -> np.ndarray:
        return self._masked(self.indicators[:, -1:]).std(axis=0, ddof=1) / math.sqrt(self.M) if self.M > 1 else np.zeros(self.N + 1)

    @property
    def ev_running(self) -> np.ndarray:
        """Per-node estimate of ``E[1_{Omega_n} V(Y_n)]``."""
        return self._masked(self.indicators).mean(axis=0)

    @property
    def p_exit_running(self) -> np.ndarray:
        return 1.0 - self.indicators.mean(axis=0)

    @property
    def p_exit(self) -> float:
        return float(self.p_exit_running[-1])

    @property
    def p_exit_stderr(self) -> float:
        p = self.p_exit
        return math.sqrt(p * (1.0 - p) / self.M)

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.indicators.astype(np.int8), axis=1) <= 0))


def rare_event_indicators(v_values, threshold: float) -> np.ndarray:
    """``1_{Omega_n}`` for ``n = 0..N`` from V along each path, shape ``(M, N+1)``."""
    v = np.asarray(v_values, dtype=float)
    inside = v <= threshold  # nan and inf count as exits
    ind = np.ones(v.shape, dtype=bool)
    ind[:, 1:] = np.logical_and.accumulate(inside[:, :-1], axis=1)
    return ind


def track_rare_events(lyap: LyapunovSpec, paths, alpha: float, T: Optional[float] = None,
                      N: Optional[int] = None) -> RareEventLedger:
    if not alpha > 0:
        raise ArgumentError(f"alpha must be positive, got {alpha}")
    path = _stack_paths(paths)
    if (T is not None and T != path.T) or (N is not None and N != path.N):
        raise ArgumentError(f"paths are on grid (T={path.T}, N={path.N}), expected (T={T}, N={N})")
    states = path.states.reshape(-1, path.N + 1, path.states.shape[-1])
    with np.errstate(all="ignore"):
        v = np.asarray(lyap(states), dtype=float)
    v = np.where(np.isnan(v), np.inf, v)
    ind = rare_event_indicators(v, (path.N / path.T) ** alpha)
    return RareEventLedger(float(alpha), path.T, path.N, ind, v)


@dataclass
class BoundBundle:
    ev_bound: float
    rare_bound: float
    bootstrap_bound: float
    sup_bound: Optional[float] = None
    inputs: dict = field(default_factory=dict)


def lyapunov_bounds(rho: float, T: float, N: int, alpha: float, EV0: float,
                    pbar: float = 1.0, V_pnorm: float = 1.0) -> BoundBundle:
    growth = math.exp(rho * T)
    ev = growth * EV0
    rare = (T / N) ** alpha * N * growth * EV0
    e = 1.0 - 1.0 / pbar
    boot = growth * (1.0 + EV0) * (1.0 + T ** (alpha * e) * N ** ((1.0 - alpha) * e) * V_pnorm)
    inputs = dict(rho=rho, T=T, N=N, alpha=alpha, EV0=EV0, pbar=pbar, V_pnorm=V_pnorm)
    return BoundBundle(ev, rare, boot, None, inputs)


def supremum_bound(rho: float, chi_p: float, nu: Sequence[float], V0_pnorm: float, t0: float) -> float:
    """Bound on the running supremum; ``chi_p`` has no default on purpose."""
    s = float(np.sum(np.square(np.asarray(nu, dtype=float))))
    return math.sqrt(2.0) * V0_pnorm * math.exp(chi_p * s - rho * t0)


def write_ledger_csv(ledger: RareEventLedger, path, rho: float, EV0: float) -> None:
    rare = lyapunov_bounds(rho, ledger.T, ledger.N, ledger.alpha, EV0).rare_bound
    ev, pex, times = ledger.ev_final, ledger.p_exit_running, ledger.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "t_n", "E_1OmegaV", "P_exit", "ev_bound", "rare_bound"])
        for n in range(ledger.N + 1):
            w.writerow([n] + [format(float(v), ".17g") for v in
                              (times[n], ev[n], pex[n], math.exp(rho * times[n]) * EV0, rare)])


# admissible exponents

def _check_p(p):
    if not p >= 3:
        raise PreconditionError(f"smoothness exponent p must be at least 3, got {p}")


def alpha_euler(p: float, gamma0: float, gamma1: float) -> float:
    _check_p(p)
    if not gamma0 + gamma1 > 0:
        raise PreconditionError("Euler-Maruyama exponent needs gamma0 + gamma1 > 0")
    return p / (gamma1 + 2.0 * max(gamma0, gamma1))


def alpha_increment_tamed(p: float, gamma0: float, gamma1: float) -> float:
    _check_p(p)
    return p / (gamma1 + 2.0 * max(gamma0, gamma1, 0.5))


def q_max_increment_tamed(p: float, q_lyap: float, gamma0: float, gamma1: float) -> float:
    """Strict upper bound on admissible moment orders for the increment-tamed scheme."""
    _check_p(p)
    if not q_lyap >= 1:
        raise PreconditionError(f"Lyapunov power must be at least 1, got {q_lyap}")
    return p * q_lyap / (2.0 * gamma1 + 4.0 * max(gamma0, gamma1, 0.5)) - 0.5


def vola_exponents(a: float, b: float, alpha: float = 1.0, beta: float = 1.0):
    """``(p0, q0)`` for the volatility family ``dX = (..-alpha x^a) dt + beta x^b dW``."""
    bad = []
    if not a >= 1:
        bad.append(f"a >= 1 (a = {a})")
    if not b >= 0.5:
        bad.append(f"b >= 1/2 (b = {b})")
    if not a + 1 >= 2 * b:
        bad.append(f"a+1 >= 2b ({a + 1} < {2 * b})")
    if bad:
        raise ParameterError("; ".join(bad))
    if 0.5 <= b <= 1 or 2 * b < a + 1:
        p0 = math.inf
    else:
        p0 = (2.0 * alpha + beta ** 2) / beta ** 2
    if p0 == math.inf:
        q0 = math.inf
    elif p0 < 3:
        q0 = 0.0
    else:
        q0 = p0 / (4.0 * (b - 2.0 + max(a, 1.5))) - 0.5
    return p0, q0


# semi V-stability audit

@dataclass
class AuditRow:
    t: float
    x: np.ndarray
    ratio: float
    stderr: float

    @property
    def flagged(self) -> bool:
        return self.ratio - 1.0 > 3.0 * self.stderr


@dataclass
class AuditReport:
    alpha: float
    rho: float
    M: int
    rows: list
    skipped: list  # (t, x) pairs outside the slab

    @property
    def flagged(self) -> list:
        return [r for r in self.rows if r.flagged]

    @property
    def passed(self) -> bool:
        return not self.flagged


def audit_semi_v_stability(scheme: OneStepMap, lyap: LyapunovSpec, alpha: float, rho: float,
                           t_values: Sequence[float],
                           x_sampler: Union[Callable, np.ndarray], M: int, seed: int = 0) -> AuditReport:
    """Monte Carlo check of ``E[V(Phi(x, t, W_t))] <= exp(rho t) V(x)`` on the slab.

    ``x_sampler`` is either a fixed array of states or ``f(t, rng) -> (K, d)``.
    Increments are shared across states for a given ``t``.
    """
    if M < 2:
        raise ArgumentError("audit needs at least two samples")
    m = scheme.model.dim_noise
    rows, skipped = [], []
    for i, t in enumerate(t_values):
        if not t > 0:
            raise ArgumentError(f"audit times must be positive, got {t}")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))
        pts = x_sampler(t, rng) if callable(x_sampler) else x_sampler
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        dW = rng.standard_normal((M, m)) * math.sqrt(t)
        vx = np.asarray(lyap(pts), dtype=float)
        for x, v0 in zip(pts, vx):
            if not v0 <= t ** (-alpha):
                skipped.append((float(t), x))
                continue
            with np.errstate(all="ignore"):
                vals = np.asarray(lyap(scheme.step(np.broadcast_to(x, (M, x.size)), t, dW)), dtype=float)
            scale = math.exp(rho * t) * v0
            rows.append(AuditRow(float(t), x, float(vals.mean() / scale),
                                 float(vals.std(ddof=1) / math.sqrt(M) / scale)))
    return AuditReport(float(alpha), float(rho), int(M), rows, skipped)
