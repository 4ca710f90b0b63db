"""One-step maps ``Phi(x, h, dW)`` and the grid integrator.

All step functions are batched over leading axes: ``x`` has shape
``(..., d)`` and ``dW`` has shape ``(..., m)``.  Explicit schemes never
raise on finite input; overflow propagates as IEEE inf/nan.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Model
from .errors import ArgumentError, CapabilityError, PreconditionError, StepError

EXPLICIT_KINDS = ("euler_maruyama", "increment_tamed", "drift_tamed", "drift_truncated",
                  "full_tamed", "milstein", "balanced_implicit")
IMPLICIT_KINDS = ("fully_implicit", "partially_implicit", "linear_implicit")
KINDS = EXPLICIT_KINDS + IMPLICIT_KINDS


def _apply(sigma, dW):
    return np.matmul(sigma, np.asarray(dW, dtype=float)[..., None])[..., 0]


def _norm(v):
    return np.linalg.norm(v, axis=-1, keepdims=True)


def em_increment(model: Model, x, h, dW):
    """``mu(x) h + sigma(x) dW`` evaluated with the extended coefficients."""
    x = np.asarray(x, dtype=float)
    return model.drift_bar(x) * h + _apply(model.diffusion_bar(x), dW)


def step_euler_maruyama(model: Model, x, h, dW):
    x = np.asarray(x, dtype=float)
    return x + em_increment(model, x, h, dW)


def tamed_increment(model: Model, x, h, dW):
    g = em_increment(model, x, h, dW)
    return g / np.maximum(1.0, h * _norm(g))


def step_increment_tamed(model: Model, x, h, dW):
    x = np.asarray(x, dtype=float)
    return x + tamed_increment(model, x, h, dW)


def step_drift_tamed(model: Model, x, h, dW):
    x = np.asarray(x, dtype=float)
    mu = model.drift_bar(x)
    drift = mu * h / (1.0 + h * _norm(mu))
    return x + (drift + _apply(model.diffusion_bar(x), dW))


def step_drift_truncated(model: Model, x, h, dW):
    x = np.asarray(x, dtype=float)
    mu = model.drift_bar(x)
    drift = mu * h / np.maximum(1.0, h * _norm(mu))
    return x + (drift + _apply(model.diffusion_bar(x), dW))


def step_full_tamed(model: Model, x, h, dW, r: float, N: Optional[int] = None, T: Optional[float] = None):
    """EM successor if its norm is at most ``(N/T)**r``, otherwise zero."""
    if not r > 1:
        raise ArgumentError(f"full taming exponent r must exceed 1, got {r}")
    barrier = (N / T) ** r if N is not None and T is not None else h ** (-r)
    cand = step_euler_maruyama(model, x, h, dW)
    keep = _norm(cand) <= barrier
    return np.where(keep, cand, 0.0)


def _milstein_terms(model: Model, x, allow_fd=True):
    sigma = model.diffusion_bar(x)
    jac = model.sigma_jacobian(x, allow_fd=allow_fd)
    # L[a, i, j] = sum_k d sigma_{a i} / d x_k * sigma_{k j}
    return sigma, np.einsum("...aik,...kj->...aij", jac, sigma)


def step_milstein(model: Model, x, h, dW, allow_fd: bool = True):
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    sigma, L = _milstein_terms(model, x, allow_fd)
    g = model.drift_bar(x) * h + _apply(sigma, dW)
    quad = 0.5 * np.einsum("...aij,...i,...j->...a", L, dW, dW)
    ito = 0.5 * h * np.einsum("...aii->...a", L)
    return x + (g + (quad - ito))


@dataclass
class CommutativityReport:
    points: np.ndarray
    commutator: np.ndarray  # per-point max over (i, j)
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.commutator <= self.tol))


def check_commutativity(model: Model, points, tol: float = 1e-10, allow_fd: bool = True) -> CommutativityReport:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _, L = _milstein_terms(model, pts, allow_fd)
    comm = np.linalg.norm(L - np.swapaxes(L, -1, -2), axis=-3)
    return CommutativityReport(pts, comm.reshape(len(pts), -1).max(axis=-1), tol)


def step_balanced_implicit(model: Model, x, h, dW, c_funcs: Sequence[Callable]):
    """Balanced implicit step with balancing matrices ``c_0, ..., c_m``."""
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    d, m = model.dim_state, model.dim_noise
    if len(c_funcs) != m + 1:
        raise ArgumentError(f"need {m + 1} balancing functions, got {len(c_funcs)}")
    omega = np.eye(d) + np.asarray(c_funcs[0](x), dtype=float) * h
    for j in range(m):
        omega = omega + np.asarray(c_funcs[j + 1](x), dtype=float) * np.abs(dW[..., j])[..., None, None]
    g = em_increment(model, x, h, dW)
    try:
        cond = np.linalg.cond(omega)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.all(cond < 1.0 / np.finfo(float).eps):
        raise StepError(f"balancing matrix singular (condition estimate {np.max(cond):.3g})")
    return x + np.linalg.solve(omega, g[..., None])[..., 0]


@dataclass(frozen=True)
class SolverConfig:
    residual_tol: float = 1e-12
    max_iters: int = 100
    method: str = "newton_then_fixed_point"
    jacobian: str = "analytic"
    fd_step: float = 1e-7
    max_halvings: int = 30

    def __post_init__(self):
        if not self.residual_tol > 0 or self.max_iters < 1:
            raise ArgumentError("residual_tol must be positive and max_iters at least 1")
        if self.jacobian not in ("analytic", "finite_difference"):
            raise ArgumentError(f"unknown jacobian mode {self.jacobian!r}")


def forward_jacobian(f, y, rel_step=1e-7):
    """Forward-difference Jacobian of ``f`` at a flat batch ``y`` of shape ``(B, d)``."""
    f0 = f(y)
    d = y.shape[-1]
    h = rel_step * (1.0 + np.linalg.norm(y, axis=-1))
    cols = []
    for k in range(d):
        yk = y.copy()
        yk[:, k] += h
        cols.append((f(yk) - f0) / h[:, None])
    return np.stack(cols, axis=-1)


def _rounding_floor(*terms):
    return 16.0 * np.finfo(float).eps * sum(np.linalg.norm(t, axis=-1) for t in terms)


def _solve_root(residual, jacobian, y0, cfg: SolverConfig, scale_terms):
    """Damped Newton on a flat batch, then fixed-point iteration for stragglers.

    ``residual(y, idx)`` and ``jacobian(y, idx)`` evaluate on the rows ``idx``
    of the batch.  A row counts as solved when its residual is at most
    ``residual_tol * (1 + |y|)`` or at the rounding floor of its terms.
    """
    y = y0.copy()
    B = len(y)
    all_idx = np.arange(B)

    def tolerance(yv, idx):
        floor = _rounding_floor(yv, *(t(yv, idx) for t in scale_terms))
        return np.maximum(cfg.residual_tol * (1.0 + np.linalg.norm(yv, axis=-1)), floor)

    F = residual(y, all_idx)
    res = np.linalg.norm(F, axis=-1)
    done = res <= tolerance(y, all_idx)
    stalled = np.zeros(B, dtype=bool)
    for _ in range(cfg.max_iters):
        act = np.flatnonzero(~done & ~stalled)
        if act.size == 0:
            break
        ya, Fa, ra = y[act], F[act], res[act]
        J = jacobian(ya, act)
        try:
            delta = np.linalg.solve(J, Fa[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.matmul(np.linalg.pinv(J), Fa[..., None])[..., 0]
        lam = np.ones(len(act))
        accepted = np.zeros(len(act), dtype=bool)
        y_new, F_new, r_new = ya.copy(), Fa.copy(), ra.copy()
        for _ in range(cfg.max_halvings + 1):
            todo = np.flatnonzero(~accepted)
            if todo.size == 0:
                break
            trial = ya[todo] - lam[todo, None] * delta[todo]
            with np.errstate(all="ignore"):
                Ft = residual(trial, act[todo])
            rt = np.linalg.norm(Ft, axis=-1)
            ok = np.isfinite(rt) & (rt < ra[todo])
            hit = todo[ok]
            y_new[hit], F_new[hit], r_new[hit] = trial[ok], Ft[ok], rt[ok]
            accepted[hit] = True
            lam[todo[~ok]] *= 0.5
        stalled[act[~accepted]] = True
        y[act], F[act], res[act] = y_new, F_new, r_new
        done[act] = res[act] <= tolerance(y[act], act)

    # fixed-point fallback y <- y - F(y) for rows Newton could not finish
    left = np.flatnonzero(~done)
    for _ in range(cfg.max_iters if left.size else 0):
        with np.errstate(all="ignore"):
            trial = y[left] - F[left]
            Ft = residual(trial, left)
        rt = np.linalg.norm(Ft, axis=-1)
        better = np.isfinite(rt) & (rt < res[left])
        upd = left[better]
        y[upd], F[upd], res[upd] = trial[better], Ft[better], rt[better]
        done[left] = res[left] <= tolerance(y[left], left)
        left = np.flatnonzero(~done)
        if left.size == 0 or not better.any():
            break
    if left.size:
        raise StepError(f"implicit solve did not converge for {left.size} sample(s); "
                        f"max residual {np.max(res[left]):.3g}",
                        residual=float(np.max(res[left])), samples=left.tolist())
    return y, res


def _initial_guess(x, em):
    cap = np.maximum(np.linalg.norm(x, axis=-1), 1.0) * 10.0
    nrm = np.linalg.norm(em, axis=-1)
    ok = np.isfinite(nrm)
    scale = np.where(ok & (nrm > cap), cap / np.where(nrm > 0, nrm, 1.0), 1.0)
    return np.where(ok[:, None], em * scale[:, None], x)


def _implicit_step(model: Model, x, h, dW, cfg: SolverConfig, drift_of, drift_jac):
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    shape = np.broadcast_shapes(x.shape, dW.shape[:-1] + (model.dim_state,))
    d = model.dim_state
    xf = np.broadcast_to(x, shape).reshape(-1, d)
    noise = _apply(model.diffusion_bar(xf), np.broadcast_to(dW, shape[:-1] + (model.dim_noise,)).reshape(-1, model.dim_noise))
    const = xf + noise

    def residual(y, idx):
        return y - const[idx] - h * drift_of(xf[idx], y)

    def jacobian(y, idx):
        return np.eye(d) - h * drift_jac(xf[idx], y)

    scale_terms = (lambda y, idx: const[idx], lambda y, idx: h * drift_of(xf[idx], y))
    with np.errstate(all="ignore"):
        em = const + h * model.drift_bar(xf)
    y, _ = _solve_root(residual, jacobian, _initial_guess(xf, em), cfg, scale_terms)
    return y.reshape(shape)


def step_fully_implicit(model: Model, x, h, dW, cfg: SolverConfig = SolverConfig()):
    """Solve ``y = x + mu(y) h + sigma(x) dW`` for ``y``."""
    c = model.one_sided_lipschitz
    if c is not None and h * c >= 1.0:
        raise PreconditionError(f"step {h} violates h*c < 1 for one-sided Lipschitz constant {c}")

    def drift_of(x, y):
        return model.drift_bar(y)

    if cfg.jacobian == "analytic" and model.drift_jacobian is not None:
        def drift_jac(x, y):
            return model.mu_jacobian(y)
    else:
        def drift_jac(x, y):
            return forward_jacobian(model.drift_bar, y, cfg.fd_step)

    return _implicit_step(model, x, h, dW, cfg, drift_of, drift_jac)


def step_partially_implicit(model: Model, x, h, dW, cfg: SolverConfig = SolverConfig()):
    """Solve ``y = x + phi(x, y) h + sigma(x) dW`` with the model's drift split."""
    if model.drift_split is None:
        raise CapabilityError(f"{model.name}: partially implicit stepping needs a drift split")
    c = model.split_growth
    if c is not None and h * c > 0.25:
        raise PreconditionError(f"step {h} violates h*c <= 1/4 for split growth constant {c}")
    phi = model.drift_split

    def drift_of(x, y):
        return np.asarray(phi(x, y), dtype=float)

    def drift_jac(x, y):
        return forward_jacobian(lambda yy: drift_of(x, yy), y, cfg.fd_step)

    return _implicit_step(model, x, h, dW, cfg, drift_of, drift_jac)


def step_linear_implicit_1d(a, b, sigma, x, h, dW):
    """``(x + b(x) h + sigma(x) dW) / (1 - a(x) h)`` for scalar SDEs."""
    x = np.asarray(x, dtype=float)
    denom = 1.0 - np.asarray(a(x), dtype=float) * h
    if not np.all(denom > 0):
        raise PreconditionError("linear implicit step needs 1 - a(x) h > 0")
    return (x + np.asarray(b(x), dtype=float) * h + np.asarray(sigma(x), dtype=float) * dW) / denom


@dataclass(frozen=True)
class OneStepMap:
    """A scheme bound to a model: ``step(x, h, dW)``."""

    kind: str
    model: Model
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown scheme {self.kind!r}")

    @property
    def explicit(self) -> bool:
        return self.kind in EXPLICIT_KINDS and self.kind != "balanced_implicit"

    @property
    def requires(self) -> frozenset:
        return frozenset({
            "milstein": {"diffusion_jacobian"},
            "partially_implicit": {"drift_split"},
            "balanced_implicit": {"balancing_matrices"},
            "linear_implicit": {"linear_split"},
        }.get(self.kind, set()))

    def with_model(self, model: Model) -> "OneStepMap":
        return OneStepMap(self.kind, model, self.options)

    def step(self, x, h, dW):
        m, o = self.model, self.options
        k = self.kind
        if k == "euler_maruyama":
            return step_euler_maruyama(m, x, h, dW)
        if k == "increment_tamed":
            return step_increment_tamed(m, x, h, dW)
        if k == "drift_tamed":
            return step_drift_tamed(m, x, h, dW)
        if k == "drift_truncated":
            return step_drift_truncated(m, x, h, dW)
        if k == "full_tamed":
            return step_full_tamed(m, x, h, dW, o.get("r", 2.0), o.get("N"), o.get("T"))
        if k == "milstein":
            return step_milstein(m, x, h, dW, o.get("allow_fd", True))
        if k == "balanced_implicit":
            return step_balanced_implicit(m, x, h, dW, o["c_funcs"])
        if k == "fully_implicit":
            return step_fully_implicit(m, x, h, dW, o.get("solver", SolverConfig()))
        if k == "partially_implicit":
            return step_partially_implicit(m, x, h, dW, o.get("solver", SolverConfig()))
        # linear_implicit: state is (..., 1)
        x = np.asarray(x, dtype=float)
        sig = lambda z: m.diffusion_bar(z[..., None])[..., 0, 0]
        y = step_linear_implicit_1d(o["a"], o["b"], sig, x[..., 0], h, np.asarray(dW)[..., 0])
        return y[..., None]

    def increment(self, x, h, dW):
        x = np.asarray(x, dtype=float)
        # direct forms avoid the cancellation in step(x) - x
        if self.kind == "euler_maruyama":
            return em_increment(self.model, x, h, dW)
        if self.kind == "increment_tamed":
            return tamed_increment(self.model, x, h, dW)
        return self.step(x, h, dW) - x


def make_scheme(kind: str, model: Model, **options) -> OneStepMap:
    if kind == "milstein" and model.diffusion_jacobian is None and not options.get("allow_fd", True):
        raise CapabilityError("Milstein needs diffusion Jacobians or finite differences")
    if kind == "partially_implicit" and model.drift_split is None:
        raise CapabilityError(f"{model.name}: partially implicit stepping needs a drift split")
    if kind == "linear_implicit" and model.dim_state != 1:
        raise CapabilityError("linear implicit scheme is one-dimensional")
    return OneStepMap(kind, model, dict(options))


@dataclass
class DiscretePath:
    T: float
    states: np.ndarray  # (..., N+1, d)

    @property
    def N(self) -> int:
        return self.states.shape[-2] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * (self.T / self.N)

    @property
    def finite(self) -> np.ndarray:
        return np.all(np.isfinite(self.states), axis=-1)

    @property
    def overflowed(self) -> np.ndarray:
        return ~np.all(self.finite, axis=-1)

    def interpolant(self, t):
        """Piecewise-linear interpolant, exact at grid nodes."""
        times = self.times
        t = np.atleast_1d(np.asarray(t, dtype=float))
        slack = 1e-12 * self.T
        if np.any((t < -slack) | (t > self.T + slack)):
            raise ArgumentError("interpolation time outside [0, T]")
        t = np.clip(t, 0.0, self.T)
        k = np.clip(np.searchsorted(times, t, side="right") - 1, 0, self.N - 1)
        left = self.states[..., k, :]
        right = self.states[..., k + 1, :]
        w = ((t - times[k]) / (times[k + 1] - times[k]))[:, None]
        with np.errstate(all="ignore"):
            mid = left + w * (right - left)
        out = np.where(w == 0.0, left, mid)
        return np.where((t == times[k + 1])[:, None], right, out)

    def to_csv(self, path, sample: Optional[int] = None) -> None:
        states = self.states if sample is None else self.states[sample]
        if states.ndim != 2:
            raise ArgumentError("select a single sample path to dump")
        flags = np.all(np.isfinite(states), axis=-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(states.shape[-1])] + ["flag"])
            for t, row, ok in zip(self.times, states, flags):
                w.writerow([format(t, ".17g")] + [format(float(v), ".17g") for v in row]
                           + ["finite" if ok else "overflowed"])


def integrate(scheme: OneStepMap, x0, N: int, T: float, increments, model: Optional[Model] = None) -> DiscretePath:
    """Run ``scheme`` on the uniform grid ``t_n = n T / N``.

    ``increments`` has shape ``(..., N, m)``; leading axes are samples.
    Overflow is recorded in the path, not raised.
    """
    if model is not None:
        scheme = scheme.with_model(model)
    inc = np.asarray(increments, dtype=float)
    if inc.shape[-2] != N:
        raise ArgumentError(f"expected {N} increment rows, got {inc.shape[-2]}")
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ArgumentError("initial state must be finite")
    d = scheme.model.dim_state
    batch = np.broadcast_shapes(inc.shape[:-2], x0.shape[:-1])
    states = np.empty(batch + (N + 1, d))
    states[..., 0, :] = x0
    h = T / N
    with np.errstate(all="ignore"):
        for n in range(N):
            try:
                states[..., n + 1, :] = scheme.step(states[..., n, :], h, inc[..., n, :])
            except StepError as exc:
                raise exc.at_node(n) from exc
    return DiscretePath(float(T), states)
