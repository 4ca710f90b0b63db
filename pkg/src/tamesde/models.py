"""Example SDE zoo with Lyapunov certificates and reference solutions.

Every entry carries a :class:`LyapunovSpec` whose ``rho`` satisfies
``G V <= rho V`` on the whole state space (extended coefficients outside
``D``).  The growth exponents use ``p = 3`` with ``V`` quadratic:
drift growth ``|x|^k`` gives ``gamma0 = 3k/2 - 1`` and diffusion growth
``|x|^j`` gives ``gamma1 = max(0, 3j - 2)``.  The mollified quadratics
have third derivatives growing linearly, so they use ``p = 6`` and the
exponents scale to ``3k - 1`` and ``6j - 2``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (LyapunovSpec, Model, extend_coefficients, orthant_distance, orthant_member,
                   quadratic_lyapunov)
from .errors import ArgumentError, CapabilityError, ParameterError
from .noise import IncrementPlan


# smooth partition of unity

def _e(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def bump_phi(x):
    """Smooth step: 0 on ``(-inf, 0]``, 1 on ``[1, inf)``."""
    a, b = _e(x), _e(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def bump_phi_prime(x):
    x = np.asarray(x, dtype=float)
    a, b = _e(x), _e(1.0 - x)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    return np.where(inside, a * b * (1.0 / xs ** 2 + 1.0 / (1.0 - xs) ** 2) / (a + b) ** 2, 0.0)


def mollifier_psi(x, y):
    """``phi(x) phi(-y) + phi(-x) phi(y)``; vanishes when ``x y >= 0``."""
    return bump_phi(x) * bump_phi(-np.asarray(y)) + bump_phi(-np.asarray(x)) * bump_phi(y)


def _psi_dx(x, y):
    return bump_phi_prime(x) * bump_phi(-y) - bump_phi_prime(-x) * bump_phi(y)


def mollified_quadratic(v, const: float, free=(), name="mollified quadratic", **constants) -> LyapunovSpec:
    """``const + <v, x_S>^2 - sum_{i != j in S} v_i v_j x_i x_j psi(x_i, x_j) + sum_{k free} x_k^2``.

    ``S`` is the set of coordinates not listed in ``free``.  Gradient is
    exact; the Hessian falls back to differences of the gradient.
    """
    v = np.asarray(v, dtype=float)
    free = tuple(free)
    d = len(v) + len(free)
    S = [k for k in range(d) if k not in free]

    def value(x):
        xs = x[..., S]
        out = const + np.sum(v * xs, axis=-1) ** 2
        for a, i in enumerate(S):
            for b, j in enumerate(S):
                if a != b:
                    out = out - v[a] * v[b] * x[..., i] * x[..., j] * mollifier_psi(x[..., i], x[..., j])
        for k in free:
            out = out + x[..., k] ** 2
        return out

    def gradient(x):
        xs = x[..., S]
        lin = np.sum(v * xs, axis=-1)
        g = np.zeros(x.shape)
        for a, i in enumerate(S):
            gi = 2.0 * v[a] * lin
            for b, j in enumerate(S):
                if a != b:
                    xi, xj = x[..., i], x[..., j]
                    gi = gi - 2.0 * v[a] * v[b] * (xj * mollifier_psi(xi, xj) + xi * xj * _psi_dx(xi, xj))
            g[..., i] = gi
        for k in free:
            g[..., k] = 2.0 * x[..., k]
        return g

    return LyapunovSpec(value, gradient, name=name, **constants)


def quartic_duffing_lyapunov(**constants) -> LyapunovSpec:
    """``V = 1 + x1^4 + 2 x2^2``."""

    def value(x):
        return 1.0 + x[..., 0] ** 4 + 2.0 * x[..., 1] ** 2

    def gradient(x):
        return np.stack([4.0 * x[..., 0] ** 3, 4.0 * x[..., 1]], axis=-1)

    def hessian(x):
        h = np.zeros(x.shape[:-1] + (2, 2))
        h[..., 0, 0] = 12.0 * x[..., 0] ** 2
        h[..., 1, 1] = 4.0
        return h

    def third(x):
        t = np.zeros(x.shape[:-1] + (2, 2, 2))
        t[..., 0, 0, 0] = 24.0 * x[..., 0]
        return t

    return LyapunovSpec(value, gradient, hessian, third, name="1+x1^4+2x2^2", **constants)


# registry

@dataclass(frozen=True)
class ZooEntry:
    name: str
    params: dict
    model: Model
    lyapunov: LyapunovSpec
    exact: Optional[Callable] = None  # (x0, increments (..., N, m), T) -> states (..., N+1, d)
    extras: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def has_exact(self) -> bool:
        return self.exact is not None


@dataclass(frozen=True)
class _Spec:
    defaults: dict
    build: Callable
    check: Callable
    summary: str


_REGISTRY: dict = {}


def _register(name, defaults, summary, build, check):
    _REGISTRY[name] = _Spec(dict(defaults), build, check, summary)


def list_models() -> list:
    return sorted(_REGISTRY)


def param_schema(name: str) -> dict:
    return dict(_spec(name).defaults)


def model_summary(name: str) -> str:
    return _spec(name).summary


def _spec(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ArgumentError(f"unknown model {name!r}; known: {', '.join(list_models())}") from None


def _merged(name, params):
    spec = _spec(name)
    params = dict(params or {})
    unknown = sorted(set(params) - set(spec.defaults))
    if unknown:
        raise ParameterError(f"{name}: unknown parameter(s) {', '.join(unknown)}")
    for k, v in params.items():
        ref = spec.defaults[k]
        if isinstance(ref, str):
            ok = isinstance(v, str)
        elif isinstance(ref, list):
            ok = _numeric_array(v, np.ndim(ref))
        else:
            ok = isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) and math.isfinite(v)
        if not ok:
            raise ParameterError(f"{name}: parameter {k} has the wrong type or value ({v!r})")
    out = dict(spec.defaults)
    out.update(params)
    return out


def _numeric_array(v, ndim):
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        return False
    flat = np.ravel(np.asarray(v, dtype=object))
    return (arr.ndim == ndim and arr.size > 0 and bool(np.all(np.isfinite(arr)))
            and not any(isinstance(z, (bool, str)) for z in flat))


def validate_params(name: str, params: Optional[dict] = None) -> list:
    """List of violated constraints (empty when the parameters are admissible)."""
    p = _merged(name, params)
    return list(_spec(name).check(p))


def make_model(name: str, params: Optional[dict] = None) -> ZooEntry:
    p = _merged(name, params)
    bad = list(_spec(name).check(p))
    if bad:
        raise ParameterError(f"{name}: " + "; ".join(bad))
    return _spec(name).build(p)


def exact_solution(entry: ZooEntry, x0, increments, T: Optional[float] = None):
    """Reference path on the grid of ``increments``.

    ``increments`` is an :class:`IncrementPlan` or an array ``(..., N, m)``
    together with ``T``.  Returns a :class:`DiscretePath`.
    """
    from .schemes import DiscretePath

    if not entry.has_exact:
        raise CapabilityError(f"{entry.name} has no exact solution")
    if isinstance(increments, IncrementPlan):
        T = increments.T
        increments = increments.increments
    if T is None:
        raise ArgumentError("T is required with raw increments")
    inc = np.asarray(increments, dtype=float)
    return DiscretePath(float(T), entry.exact(np.asarray(x0, dtype=float), inc, float(T)))


def _positive(p, *keys):
    return [f"{k} > 0 ({k} = {p[k]})" for k in keys if not p[k] > 0]


def _brownian_nodes(inc):
    W = np.zeros(inc.shape[:-2] + (inc.shape[-2] + 1, inc.shape[-1]))
    W[..., 1:, :] = np.cumsum(inc, axis=-2)
    return W


def _gbm_exact(a, b):
    def exact(x0, inc, T):
        N = inc.shape[-2]
        t = (np.arange(N + 1) * (T / N))[:, None]
        W = _brownian_nodes(inc)
        return x0 * np.exp((a - 0.5 * b * b) * t + b * W)
    return exact


def _diag_jacobian(coef):
    def jac(x):
        d = x.shape[-1]
        J = np.zeros(x.shape[:-1] + (d, d, d))
        for i in range(d):
            J[..., i, i, i] = coef[i]
        return J
    return jac



def _quad(d, rho, gamma0, gamma1, p=3.0):
    return quadratic_lyapunov(d, p=p, c=2.0 * math.sqrt(d), gamma0=gamma0, gamma1=gamma1, rho=rho)


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


# --- linear (geometric Brownian motion) ---

def _build_linear(p):
    a, b = float(p["a"]), float(p["b"])
    model = Model.scalar(lambda x: a * x, lambda x: b * x, name="linear",
                         diffusion_jacobian=lambda x: np.full(x.shape[:-1] + (1, 1, 1), b),
                         drift_jacobian=lambda x: np.full(x.shape[:-1] + (1, 1), a),
                         one_sided_lipschitz=a)
    rho = max(2.0 * a + b * b, 0.0)
    return ZooEntry("linear", p, model, _quad(1, rho, 0.5, 1.0), _gbm_exact(a, b),
                    notes="G V = (2a + b^2) x^2")


_register("linear", {"a": 1.0, "b": 0.5}, "dX = aX dt + bX dW on R (exact solution)",
          _build_linear, lambda p: [])


# --- van der Pol ---

def _build_vdp(p):
    al, ga, de, be = (float(p[k]) for k in ("alpha", "gamma", "delta", "beta"))

    def mu(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(x2, al * (ga - x1 ** 2) * x2 - de * x1)

    def sig(x):
        s = np.zeros(x.shape[:-1] + (2, 1))
        s[..., 1, 0] = be
        return s

    def split(x, y):
        # y2-row implicit in y, with the x1^2 factor frozen at x
        return _stack(y[..., 1], al * (ga - x[..., 0] ** 2) * y[..., 1] - de * y[..., 0])

    model = Model(2, 1, mu, sig, diffusion_jacobian=lambda x: np.zeros(x.shape[:-1] + (2, 1, 2)),
                  drift_split=split, split_growth=abs(1.0 - de) / 2.0 + al * ga, name="van_der_pol")
    rho = max(abs(1.0 - de) + 2.0 * al * ga, be * be)
    return ZooEntry("van_der_pol", p, model, _quad(2, rho, 3.5, 0.0),
                    notes="G V = 2(1-delta)x1x2 + 2 alpha gamma x2^2 - 2 alpha x1^2 x2^2 + beta^2",
                    extras={"one_sided_growth": max(abs(1.0 - de) / 2.0 + al * ga, 0.0)})


def _check_vdp(p):
    return _positive(p, "alpha", "gamma", "delta")


_register("van_der_pol", {"alpha": 1.0, "gamma": 1.0, "delta": 1.0, "beta": 0.5},
          "stochastic van der Pol oscillator, additive noise", _build_vdp, _check_vdp)


# --- Duffing-van der Pol ---

def _build_duffing(p):
    a1, a2, a3, b1, b2, b3 = (float(p[k]) for k in ("alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"))

    def mu(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(x2, a1 * x1 - a2 * x2 - a3 * x2 * x1 ** 2 - x1 ** 3)

    def sig(x):
        s = np.zeros(x.shape[:-1] + (2, 3))
        s[..., 1, 0] = b1 * x[..., 0]
        s[..., 1, 1] = b2 * x[..., 1]
        s[..., 1, 2] = b3
        return s

    def sig_jac(x):
        J = np.zeros(x.shape[:-1] + (2, 3, 2))
        J[..., 1, 0, 0] = b1
        J[..., 1, 1, 1] = b2
        return J

    model = Model(2, 3, mu, sig, diffusion_jacobian=sig_jac, name="duffing_van_der_pol")
    rho = 2.0 * abs(a1) + b1 ** 2 + b2 ** 2 + 2.0 * max(-a2, 0.0) + 2.0 * b3 ** 2
    lyap = quartic_duffing_lyapunov(p=4.0, c=24.0, gamma0=3.0, gamma1=2.0, rho=rho)
    return ZooEntry("duffing_van_der_pol", p, model, lyap,
                    notes="G V = 4a1 x1x2 - 4a2 x2^2 - 4a3 x1^2x2^2 + 2b1^2x1^2 + 2b2^2x2^2 + 2b3^2; "
                          "4|a1||x1x2| <= |a1|(2x2^2 + x1^4 + 1), 2b1^2 x1^2 <= b1^2(1 + x1^4)")


def _check_duffing(p):
    return [] if p["alpha3"] >= 0 else [f"alpha3 >= 0 (alpha3 = {p['alpha3']})"]


_register("duffing_van_der_pol", {"alpha1": 1.0, "alpha2": 1.0, "alpha3": 1.0,
                                  "beta1": 0.5, "beta2": 0.5, "beta3": 0.5},
          "stochastic Duffing-van der Pol oscillator, three noise sources", _build_duffing, _check_duffing)


# --- Lorenz ---

def _build_lorenz(p):
    a1, a2, a3 = (float(p[k]) for k in ("alpha1", "alpha2", "alpha3"))
    beta = np.array([p["beta1"], p["beta2"], p["beta3"]], dtype=float)

    def mu(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return _stack(a1 * (x2 - x1), a2 * x1 - x2 - x1 * x3, x1 * x2 - a3 * x3)

    def sig(x):
        return x[..., :, None] * np.diag(beta)

    model = Model(3, 3, mu, sig, diffusion_jacobian=_diag_jacobian(beta), name="lorenz")
    s = abs(a1 + a2)
    rho = max(0.0, -2 * a1 + s + beta[0] ** 2, -2 + s + beta[1] ** 2, -2 * a3 + beta[2] ** 2)
    return ZooEntry("lorenz", p, model, _quad(3, rho, 2.0, 1.0),
                    notes="G V = -2a1x1^2 + 2(a1+a2)x1x2 - 2x2^2 - 2a3x3^2 + sum beta_i^2 x_i^2")


_register("lorenz", {"alpha1": 10.0, "alpha2": 28.0, "alpha3": 8.0 / 3.0,
                     "beta1": 0.5, "beta2": 0.5, "beta3": 0.5},
          "stochastic Lorenz system, diagonal multiplicative noise", _build_lorenz,
          lambda p: _positive(p, "alpha1", "alpha2", "alpha3"))


# --- Brusselator ---

def _build_brusselator(p):
    al, de, k1, k2 = (float(p[k]) for k in ("alpha", "delta", "kappa1", "kappa2"))

    def mu(x):
        x1, x2 = x[..., 0], x[..., 1]
        return _stack(de - (al + 1.0) * x1 + x2 * x1 ** 2, al * x1 - x2 * x1 ** 2)

    def sig(x):
        s = np.zeros(x.shape[:-1] + (2, 2))
        s[..., 0, 0] = k1 * x[..., 0]
        s[..., 1, 1] = k2 * x[..., 1] / (1.0 + np.abs(x[..., 1]))
        return s

    model = extend_coefficients(Model(2, 2, mu, sig, orthant_member, orthant_distance, name="brusselator"))
    rho = de + k1 ** 2 + 0.4 * k2 ** 2
    lyap = mollified_quadratic([1.0, 1.0], 2.5, p=6.0, c=250.0, gamma0=8.0, gamma1=4.0, rho=rho)
    return ZooEntry("brusselator", p, model, lyap,
                    extras={"g1": lambda z: k1 * z, "g2": lambda z: k2 * z / (1.0 + np.abs(z))},
                    notes="inside D: G V = 2(x1+x2)(delta - x1) + (k1 x1)^2 + g2(x2)^2 with g2^2 <= k2^2")


_register("brusselator", {"alpha": 1.0, "delta": 1.0, "kappa1": 0.5, "kappa2": 0.5},
          "stochastic Brusselator on (0,inf)^2 with g1(x)=k1 x, g2(x)=k2 x/(1+|x|)",
          _build_brusselator, lambda p: _positive(p, "alpha", "delta"))


# --- SIR ---

def _build_sir(p):
    al, be, ga, de = (float(p[k]) for k in ("alpha", "beta", "gamma", "delta"))

    def mu(x):
        s, i, r = x[..., 0], x[..., 1], x[..., 2]
        return _stack(-al * s * i - de * s + de, al * s * i - (ga + de) * i, ga * i - de * r)

    def sig(x):
        z = be * x[..., 0] * x[..., 1]
        return _stack(-z, z, np.zeros_like(z))[..., None]

    model = extend_coefficients(Model(3, 1, mu, sig, orthant_member, orthant_distance, name="sir"))
    rho = de + ga
    lyap = mollified_quadratic([1.0, 1.0], 2.5, free=(2,), p=6.0, c=250.0, gamma0=5.0, gamma1=10.0, rho=rho)
    return ZooEntry("sir", p, model, lyap,
                    notes="inside D: G V = 2(s+i)(delta - delta(s+i) - gamma i) + 2r(gamma i - delta r); noise is killed")


_register("sir", {"alpha": 1.0, "beta": 1.0, "gamma": 1.0, "delta": 1.0},
          "stochastic SIR epidemic on (0,inf)^3", _build_sir,
          lambda p: _positive(p, "alpha", "beta", "gamma", "delta"))


# --- psychology ---

def _build_psychology(p):
    al, de, be = float(p["alpha"]), float(p["delta"]), float(p["beta"])
    mode = p["ito_correction"]
    b2 = 0.5 * be * be

    def strat(x):
        x1, x2 = x[..., 0], x[..., 1]
        k = de + 4.0 * al * x1
        return _stack(x2 ** 2 * k, -x1 * x2 * k)

    def mu(x):
        s = strat(x)
        if mode == "printed":
            return s + _stack(-b2 * x[..., 0], b2 * x[..., 1])
        return s - b2 * x

    def sig(x):
        return _stack(-be * x[..., 1], be * x[..., 0])[..., None]

    def sig_jac(x):
        J = np.zeros(x.shape[:-1] + (2, 1, 2))
        J[..., 0, 0, 1] = -be
        J[..., 1, 0, 0] = be
        return J

    model = Model(2, 1, mu, sig, diffusion_jacobian=sig_jac, name="psychology")
    rho = 2.0 * be * be if mode == "printed" else 0.0
    return ZooEntry("psychology", p, model, _quad(2, rho, 3.5, 1.0),
                    extras={"stratonovich_drift": strat},
                    notes="printed drift: G V = 2 beta^2 x2^2; exact conversion: G V = 0")


def _check_psychology(p):
    out = _positive(p, "alpha", "delta")
    if p["ito_correction"] not in ("printed", "exact"):
        out.append(f"ito_correction in {{printed, exact}} (got {p['ito_correction']!r})")
    return out


_register("psychology", {"alpha": 1.0, "delta": 1.0, "beta": 0.5, "ito_correction": "printed"},
          "rotational model from experimental psychology, Ito form", _build_psychology, _check_psychology)


# --- Ginzburg-Landau ---

def _gl_exact(al, de, be):
    def exact(x0, inc, T):
        N = inc.shape[-2]
        t = (np.arange(N + 1) * (T / N))[:, None]
        expo = (al - 0.5 * be * be) * t + be * _brownian_nodes(inc)
        g = np.exp(2.0 * expo)
        integral = np.zeros_like(g)
        integral[..., 1:, :] = np.cumsum(0.5 * (g[..., 1:, :] + g[..., :-1, :]) * (T / N), axis=-2)
        return x0 * np.exp(expo) / np.sqrt(1.0 + 2.0 * de * x0 ** 2 * integral)
    return exact


def _build_gl(p):
    al, de, be = float(p["alpha"]), float(p["delta"]), float(p["beta"])
    model = Model.scalar(lambda x: al * x - de * x ** 3, lambda x: be * x, name="ginzburg_landau",
                         diffusion_jacobian=lambda x: np.full(x.shape[:-1] + (1, 1, 1), be),
                         drift_jacobian=lambda x: (al - 3.0 * de * x ** 2)[..., None],
                         one_sided_lipschitz=al)
    return ZooEntry("ginzburg_landau", p, model, _quad(1, 2.0 * al + be * be, 3.5, 1.0),
                    _gl_exact(al, de, be), notes="G V = (2 alpha + beta^2) x^2 - 2 delta x^4")


_register("ginzburg_landau", {"alpha": 1.0, "delta": 1.0, "beta": 0.5},
          "scalar Ginzburg-Landau equation with multiplicative noise (exact solution)",
          _build_gl, lambda p: _positive(p, "alpha", "beta")
          + ([] if p["delta"] >= 0 else [f"delta >= 0 (delta = {p['delta']})"]))


# --- Lotka-Volterra family ---

def _lv_entry(name, p, A, B, c, v):
    A, B, c, v = (np.asarray(z, dtype=float) for z in (A, B, c, v))
    d = len(A)

    def mu(x):
        return x * (A + np.einsum("ij,...j->...i", B, x))

    def sig(x):
        return x[..., :, None] * np.diag(c)

    model = extend_coefficients(Model(d, d, mu, sig, orthant_member, orthant_distance,
                                      diffusion_jacobian=_diag_jacobian(c), name=name))
    const = d ** 4 * float(np.sum(v * v)) ** 2 / float(np.min(v)) ** 2
    rho = 2.0 * max(float(np.max(A)), 0.0) + float(np.max(c * c))
    lyap = mollified_quadratic(v, 1.0 + const, p=6.0, c=250.0, gamma0=5.0, gamma1=4.0, rho=rho)
    exact = None
    if d == 1 and B[0, 0] == 0.0:
        exact = _gbm_exact(float(A[0]), float(c[0]))
    return ZooEntry(name, p, model, lyap, exact,
                    extras={"A": A, "B": B, "c": c, "v": v},
                    notes="inside D: G V <= 2 max(A)^+ <v,x>^2 + max(c^2) <v,x>^2 since <x, diag(v)Bx> <= 0")


def _lv_check(A, B, c, v):
    A, B, c, v = (np.asarray(z, dtype=float) for z in (A, B, c, v))
    d = len(A)
    out = []
    if B.shape != (d, d) or c.shape != (d,) or v.shape != (d,):
        return [f"shapes: A ({d}), B ({d}x{d}), c ({d}), v ({d})"]
    if not np.all(v > 0):
        out.append(f"v > 0 componentwise (v = {v.tolist()})")
    M = np.diag(v) @ B
    top = float(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))))
    if top > 1e-12:
        out.append(f"<x, diag(v) B x> <= 0 for all x (largest eigenvalue {top:.6g})")
    return out


def _build_lv(p):
    return _lv_entry("lotka_volterra", p, p["A"], p["B"], p["c"], p["v"])


_register("lotka_volterra", {"A": [1.0, -1.0], "B": [[0.0, -1.0], [1.0, 0.0]], "c": [0.5, 0.5], "v": [1.0, 1.0]},
          "d-dimensional stochastic Lotka-Volterra system on (0,inf)^d", _build_lv,
          lambda p: _lv_check(p["A"], p["B"], p["c"], p["v"]))


def _verhulst_abcv(p):
    return [p["eta"] + 0.5 * p["c"] ** 2], [[-p["lam"]]], [p["c"]], [1.0]


_register("verhulst", {"eta": 1.0, "lam": 1.0, "c": 0.5},
          "stochastic Verhulst equation (Lotka-Volterra with d = 1)",
          lambda p: _lv_entry("verhulst", p, *_verhulst_abcv(p)),
          lambda p: _positive(p, "eta", "lam") + _lv_check(*_verhulst_abcv(p)))


def _pp_abcv(p):
    al, be, ga, de = (float(p[k]) for k in ("alpha", "beta", "gamma", "delta"))
    return [al, -de], [[0.0, -be], [ga, 0.0]], list(p["c"]), [ga, be]


_register("predator_prey", {"alpha": 1.0, "beta": 1.0, "gamma": 1.0, "delta": 1.0, "c": [0.5, 0.5]},
          "stochastic predator-prey model with v = (gamma, beta)",
          lambda p: _lv_entry("predator_prey", p, *_pp_abcv(p)),
          lambda p: _positive(p, "alpha", "beta", "gamma", "delta") + _lv_check(*_pp_abcv(p)))


# --- volatility family ---

def vola_rho(a, b, alpha, beta, gamma, delta) -> float:
    """Generator rate for ``V = 1 + x^2`` on the volatility family."""
    e = a + 1.0 - 2.0 * b
    if e > 0:
        xs = (b * beta ** 2 / (alpha * (2.0 * b + e))) ** (1.0 / e)
        S = xs ** (2.0 * b) * beta ** 2 * e / (2.0 * (2.0 * b + e))
    elif b <= 1:
        S = max(beta ** 2 / 2.0 - alpha, 0.0)
    elif 2.0 * alpha >= beta ** 2:
        S = 0.0
    else:
        return math.inf
    return 2.0 * (delta + max(gamma, 0.0)) + 2.0 * S


def _vola_entry(name, p):
    a, b, al, be, ga, de = (float(p[k]) for k in ("a", "b", "alpha", "beta", "gamma", "delta"))

    def mu(x):
        return de + ga * x - al * x ** a

    def sig(x):
        return be * x ** b

    def mu_jac(x):
        z = x[..., 0]
        pos = z > 0
        zp = np.where(pos, z, 1.0)
        return np.where(pos, ga - al * a * zp ** (a - 1.0), 0.0)[..., None, None]

    def sig_jac(x):
        z = x[..., 0]
        pos = z > 0
        zp = np.where(pos, z, 1.0)
        return np.where(pos, be * b * zp ** (b - 1.0), 0.0)[..., None, None, None]

    base = Model.scalar(mu, sig, domain_member=orthant_member, domain_distance=orthant_distance,
                        one_sided_lipschitz=max(ga, 0.0), name=name)
    model = extend_coefficients(base, "constant", value=de).replace(drift_jacobian=mu_jac, diffusion_jacobian=sig_jac)
    gamma0 = max(1.5 * max(a, 1.0) - 1.0, 0.0)
    gamma1 = max(3.0 * b - 2.0, 0.0)
    lyap = _quad(1, vola_rho(a, b, al, be, ga, de), gamma0, gamma1)
    from .stability import vola_exponents
    p0, q0 = vola_exponents(a, b, al, be)
    return ZooEntry(name, p, model, lyap, extras={"p0": p0, "q0": q0},
                    notes="x > 0: G V = 2x(delta + gamma x - alpha x^a) + beta^2 x^(2b); x <= 0: G V = 2 delta x <= 0")


def _vola_check(p):
    out = _positive(p, "alpha", "beta")
    if not p["a"] >= 1:
        out.append(f"a >= 1 (a = {p['a']})")
    if not p["b"] >= 0.5:
        out.append(f"b >= 1/2 (b = {p['b']})")
    if not p["a"] + 1 >= 2 * p["b"]:
        out.append(f"a+1 >= 2b ({p['a'] + 1:g} < {2 * p['b']:g})")
    if not p["delta"] >= 0:
        out.append(f"delta >= 0 (delta = {p['delta']})")
    if p["b"] == 0.5 and not p["delta"] >= p["beta"] ** 2 / 2:
        out.append(f"delta >= beta^2/2 when b = 1/2 ({p['delta']:g} < {p['beta'] ** 2 / 2:g})")
    return out


_VOLA = {"a": 2.0, "b": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": 0.0, "delta": 1.0}
_register("volatility", _VOLA, "squared volatility family dX = (delta + gamma X - alpha X^a) dt + beta X^b dW",
          lambda p: _vola_entry("volatility", p), _vola_check)


def _preset(name, fixed, free_defaults, extra_check):
    def full(p):
        q = dict(fixed)
        q.update(p)
        return q

    _register(name, free_defaults, _REGISTRY["volatility"].summary + f" with {fixed}",
              lambda p: dataclasses.replace(_vola_entry(name, full(p)), params=p),
              lambda p: _vola_check(full(p)) + extra_check(full(p)))


_preset("cir", {"a": 1.0, "b": 0.5, "gamma": 0.0}, {"alpha": 1.0, "beta": 1.0, "delta": 1.0}, lambda q: [])
_preset("ait_sahalia", {"a": 2.0}, {"b": 1.25, "alpha": 1.0, "beta": 1.0, "gamma": 0.0, "delta": 1.0},
        lambda q: [] if q["b"] < 1.5 else [f"b < 3/2 (b = {q['b']})"])
_preset("lewis_32", {"a": 2.0, "b": 1.5, "delta": 0.0}, {"alpha": 1.0, "beta": 1.0, "gamma": 0.0},
        lambda q: [] if q["gamma"] >= 0 else [f"gamma >= 0 (gamma = {q['gamma']})"])


# --- Langevin ---

def _build_langevin(p):
    d, eps, pot = int(p["d"]), float(p["epsilon"]), p["potential"]
    shift = 1.0 if pot == "double_well" else 0.0
    k = 0.0 if pot == "flat" else 1.0
    s = math.sqrt(2.0 * eps)

    def mu(x):
        return -(k * np.sum(x * x, axis=-1, keepdims=True) - shift) * x

    def mu_jac(x):
        r = k * np.sum(x * x, axis=-1)[..., None, None]
        return -(r - shift) * np.eye(d) - 2.0 * k * x[..., :, None] * x[..., None, :]

    def sig(x):
        return np.broadcast_to(s * np.eye(d), x.shape[:-1] + (d, d)).copy()

    model = Model(d, d, mu, sig, diffusion_jacobian=lambda x: np.zeros(x.shape[:-1] + (d, d, d)),
                  drift_jacobian=mu_jac, one_sided_lipschitz=shift, name="langevin")
    rho = max(2.0 * shift, 2.0 * eps * d)
    return ZooEntry("langevin", p, model, _quad(d, rho, 3.5, 0.0),
                    notes="G V = -2k|x|^4 + 2 shift |x|^2 + 2 eps d, k = 0 for the flat potential")


def _check_langevin(p):
    out = _positive(p, "epsilon", "d")
    if p["d"] != int(p["d"]):
        out.append(f"d integer (d = {p['d']})")
    if p["potential"] not in ("double_well", "quartic", "flat"):
        out.append(f"potential in {{double_well, quartic, flat}} (got {p['potential']!r})")
    return out


_register("langevin", {"d": 2, "epsilon": 0.5, "potential": "double_well"},
          "overdamped Langevin dynamics dX = -grad U(X) dt + sqrt(2 eps) dW", _build_langevin, _check_langevin)
