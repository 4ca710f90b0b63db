"""SDE models, Lyapunov-type functions and generator evaluation.

Every coefficient and derivative function in this package is *batched*: it
accepts an array whose trailing axis is the state dimension ``d`` and maps
over all leading axes.  Shapes:

==================  ==================
drift               ``(..., d)``
diffusion           ``(..., d, m)``
diffusion_jacobian  ``(..., d, m, d)``, entry ``[i, j, k] = d sigma_ij / d x_k``
Lyapunov value      ``(...)``
gradient            ``(..., d)``
hessian             ``(..., d, d)``
third derivative    ``(..., d, d, d)``
==================  ==================
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, CapabilityError, ConfigurationError, EvaluationError

Array = np.ndarray
VecFn = Callable[[Array], Array]

FD_REL_STEP = 1e-5


def _as_state(x) -> Array:
    return np.asarray(x, dtype=float)


def _fd_step(x: Array) -> Array:
    """Scale-aware central-difference step, one per batch element."""
    return FD_REL_STEP * (1.0 + np.linalg.norm(x, axis=-1))


def fd_derivative(f: VecFn, x) -> Array:
    """Central differences of ``f`` along each state coordinate.

    The derivative axis is appended last, so a function with output shape
    ``(..., *s)`` yields ``(..., *s, d)``.
    """
    x = _as_state(x)
    d = x.shape[-1]
    h = _fd_step(x)
    cols = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        step = h[..., None] * e
        fp = np.asarray(f(x + step), dtype=float)
        fm = np.asarray(f(x - step), dtype=float)
        hk = h.reshape(h.shape + (1,) * (fp.ndim - h.ndim))
        cols.append((fp - fm) / (2.0 * hk))
    return np.stack(cols, axis=-1)


def _full_space_member(x: Array) -> Array:
    return np.ones(np.shape(x)[:-1], dtype=bool)


def _full_space_distance(x: Array) -> Array:
    return np.full(np.shape(x)[:-1], np.inf)


def orthant_member(x) -> Array:
    """Membership in the open positive orthant; boundary points are outside."""
    return np.all(_as_state(x) > 0.0, axis=-1)


def orthant_distance(x) -> Array:
    """Distance from ``x`` to the complement of the open positive orthant."""
    return np.maximum(np.min(_as_state(x), axis=-1), 0.0)


@dataclass(frozen=True)
class Model:
    """An SDE ``dX = mu(X) dt + sigma(X) dW`` on an open set ``D``.

    ``drift`` and ``diffusion`` only need to be meaningful on ``D``; the
    schemes always evaluate ``drift_bar``/``diffusion_bar``, which default
    to the raw coefficients when no extension has been installed.
    """

    dim_state: int
    dim_noise: int
    drift: VecFn
    diffusion: VecFn
    domain_member: Optional[VecFn] = None
    domain_distance: Optional[VecFn] = None
    drift_extension: Optional[VecFn] = None
    diffusion_extension: Optional[VecFn] = None
    diffusion_jacobian: Optional[VecFn] = None
    drift_jacobian: Optional[VecFn] = None
    drift_split: Optional[Callable[[Array, Array], Array]] = None
    # declared constants used by the implicit schemes' step-size checks
    one_sided_lipschitz: Optional[float] = None
    split_growth: Optional[float] = None
    name: str = "model"

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_noise < 1:
            raise ArgumentError("dimensions must be positive integers")

    @property
    def full_space(self) -> bool:
        return self.domain_member is None

    def member(self, x) -> Array:
        fn = self.domain_member or _full_space_member
        return np.asarray(fn(_as_state(x)), dtype=bool)

    def distance(self, x) -> Array:
        fn = self.domain_distance or _full_space_distance
        return np.asarray(fn(_as_state(x)), dtype=float)

    def drift_bar(self, x) -> Array:
        fn = self.drift_extension or self.drift
        return np.asarray(fn(_as_state(x)), dtype=float)

    def diffusion_bar(self, x) -> Array:
        fn = self.diffusion_extension or self.diffusion
        return np.asarray(fn(_as_state(x)), dtype=float)

    def sigma_jacobian(self, x, allow_fd: bool = True) -> Array:
        """Jacobian of the extended diffusion, shape ``(..., d, m, d)``."""
        if self.diffusion_jacobian is not None:
            return np.asarray(self.diffusion_jacobian(_as_state(x)), dtype=float)
        if not allow_fd:
            raise CapabilityError(f"{self.name}: no diffusion Jacobian and finite differences disabled")
        return fd_derivative(self.diffusion_bar, x)

    def mu_jacobian(self, x) -> Array:
        if self.drift_jacobian is not None:
            return np.asarray(self.drift_jacobian(_as_state(x)), dtype=float)
        return fd_derivative(self.drift_bar, x)

    def replace(self, **changes) -> "Model":
        return dataclasses.replace(self, **changes)

    @classmethod
    def scalar(cls, drift, diffusion, **kwargs) -> "Model":
        """Build a ``d = m = 1`` model from elementwise scalar functions."""

        def mu(x):
            return np.asarray(drift(x[..., 0]), dtype=float)[..., None] + np.zeros_like(x)

        def sig(x):
            return (np.asarray(diffusion(x[..., 0]), dtype=float) + np.zeros(x.shape[:-1]))[..., None, None]

        return cls(1, 1, mu, sig, **kwargs)


def _masked(inside_fn: VecFn, outside_fn: VecFn, member: VecFn, extra_axes: int) -> VecFn:
    def extended(x):
        x = _as_state(x)
        inside = np.asarray(member(x), dtype=bool)
        with np.errstate(all="ignore"):
            a = np.asarray(inside_fn(x), dtype=float)
            b = np.asarray(outside_fn(x), dtype=float)
        mask = inside.reshape(inside.shape + (1,) * extra_axes)
        return np.where(mask, a, b)

    return extended


def extend_coefficients(model: Model, policy: str = "zero", value=None,
                        drift=None, diffusion=None) -> Model:
    """Install coefficient extensions outside the model's domain.

    ``policy`` is ``"zero"`` (both coefficients vanish outside ``D``),
    ``"constant"`` (drift equals ``value``, diffusion vanishes) or
    ``"custom"`` (caller supplies both outside functions).
    """
    if policy == "custom" and (drift is None or diffusion is None):
        raise ConfigurationError("custom extension policy needs both drift and diffusion functions")
    if policy not in ("zero", "constant", "custom"):
        raise ConfigurationError(f"unknown extension policy {policy!r}")
    if model.full_space:
        return model
    d, m = model.dim_state, model.dim_noise

    def zero_drift(x):
        return np.zeros(np.shape(x)[:-1] + (d,))

    def zero_diffusion(x):
        return np.zeros(np.shape(x)[:-1] + (d, m))

    if policy == "zero":
        out_mu, out_sigma = zero_drift, zero_diffusion
    elif policy == "constant":
        if value is None:
            raise ConfigurationError("constant extension policy needs a value")
        const = np.broadcast_to(np.asarray(value, dtype=float), (d,))

        def out_mu(x):
            return np.broadcast_to(const, np.shape(x)[:-1] + (d,)).copy()

        out_sigma = zero_diffusion
    else:
        out_mu, out_sigma = drift, diffusion
    return model.replace(
        drift_extension=_masked(model.drift, out_mu, model.member, 1),
        diffusion_extension=_masked(model.diffusion, out_sigma, model.member, 2),
    )


@dataclass(frozen=True)
class LyapunovSpec:
    """A Lyapunov-type function ``V >= 1`` with its derivatives and constants.

    Missing derivatives fall back to central finite differences (of the
    value for the gradient, of the gradient for the Hessian, of the Hessian
    for the third derivative).
    """

    value: VecFn
    gradient: Optional[VecFn] = None
    hessian: Optional[VecFn] = None
    third_derivative: Optional[VecFn] = None
    p: float = 3.0
    c: float = 1.0
    gamma0: float = 0.0
    gamma1: float = 0.0
    rho: Optional[float] = None
    q: float = 1.0
    name: str = "V"

    def __call__(self, x) -> Array:
        return np.asarray(self.value(_as_state(x)), dtype=float)

    def grad(self, x) -> Array:
        if self.gradient is not None:
            return np.asarray(self.gradient(_as_state(x)), dtype=float)
        return fd_derivative(self.value, x)

    def hess(self, x) -> Array:
        if self.hessian is not None:
            return np.asarray(self.hessian(_as_state(x)), dtype=float)
        return fd_derivative(self.grad, x)

    def third(self, x) -> Array:
        if self.third_derivative is not None:
            return np.asarray(self.third_derivative(_as_state(x)), dtype=float)
        return fd_derivative(self.hess, x)

    def replace(self, **changes) -> "LyapunovSpec":
        return dataclasses.replace(self, **changes)


def quadratic_lyapunov(d: int, **constants) -> LyapunovSpec:
    """``V(x) = 1 + ||x||^2`` with exact derivatives."""

    def value(x):
        return 1.0 + np.sum(x * x, axis=-1)

    def gradient(x):
        return 2.0 * x

    def hessian(x):
        return np.broadcast_to(2.0 * np.eye(d), x.shape[:-1] + (d, d)).copy()

    def third(x):
        return np.zeros(x.shape[:-1] + (d, d, d))

    return LyapunovSpec(value, gradient, hessian, third, name="1+|x|^2", **constants)


@dataclass(frozen=True)
class GeneratorValue:
    drift_part: Array
    diffusion_part: Array
    value: Array = dataclasses.field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "value", self.drift_part + self.diffusion_part)


def _check_finite(name: str, arr: Array) -> Array:
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(name)
    return arr


def _generator_parts(mu, sigma, grad, hess) -> GeneratorValue:
    drift_part = np.sum(mu * grad, axis=-1)
    diffusion_part = 0.5 * np.einsum("...ik,...ij,...jk->...", sigma, hess, sigma)
    return GeneratorValue(drift_part, diffusion_part)


def eval_generator(model: Model, lyap: LyapunovSpec, x) -> GeneratorValue:
    """``<mu(x), grad V(x)> + 1/2 trace(sigma sigma^* Hess V(x))`` on extended coefficients."""
    return eval_generator_parts(model, lyap, x, x)


def eval_generator_parts(model: Model, lyap: LyapunovSpec, x, y) -> GeneratorValue:
    x = _as_state(x)
    y = _as_state(y)
    mu = _check_finite("drift", model.drift_bar(y))
    sigma = _check_finite("diffusion", model.diffusion_bar(y))
    grad = _check_finite("gradient", lyap.grad(x))
    hess = _check_finite("hessian", lyap.hess(x))
    return _generator_parts(mu, sigma, grad, hess)


def eval_generator_tilde(model: Model, lyap: LyapunovSpec, x, y) -> Array:
    """Generator with derivatives of ``V`` taken at ``x`` and coefficients at ``y``."""
    return eval_generator_parts(model, lyap, x, y).value


@dataclass
class C3pReport:
    points: Array
    ratios: Array  # (n_points, 3): ||V^(i)|| / V^(1 - i/p)
    c: float
    p: float

    @property
    def worst(self) -> Array:
        return np.max(self.ratios, axis=-1)

    @property
    def failures(self) -> list:
        return [int(i) for i in np.flatnonzero(~(self.worst <= self.c))]

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_c3p(lyap: LyapunovSpec, points, c: Optional[float] = None,
                 p: Optional[float] = None, allow_fd: bool = True) -> C3pReport:
    """Check ``||V^(i)(x)|| <= c V(x)^(1 - i/p)`` for ``i = 1, 2, 3`` on ``points``.

    The first derivative uses the Euclidean norm; the second and third use
    the Frobenius norm, an upper bound for the operator norm.
    """
    if not allow_fd and (lyap.gradient is None or lyap.hessian is None or lyap.third_derivative is None):
        raise ConfigurationError("missing Lyapunov derivatives and finite differences disabled")
    c = lyap.c if c is None else c
    p = lyap.p if p is None else p
    pts = np.atleast_2d(_as_state(points))
    v = lyap(pts)
    n1 = np.linalg.norm(lyap.grad(pts), axis=-1)
    n2 = np.sqrt(np.sum(lyap.hess(pts) ** 2, axis=(-2, -1)))
    n3 = np.sqrt(np.sum(lyap.third(pts) ** 2, axis=(-3, -2, -1)))
    ratios = np.stack([n / v ** (1.0 - i / p) for i, n in ((1, n1), (2, n2), (3, n3))], axis=-1)
    return C3pReport(pts, ratios, float(c), float(p))


def power_lyapunov(lyap: LyapunovSpec, q: float) -> LyapunovSpec:
    """Return ``V**q`` with chain-rule derivatives.

    The smoothness exponent becomes ``p*q``; the growth constant is
    recomputed so that ``validate_c3p`` keeps passing.  ``rho`` is dropped:
    a generator bound for ``V`` does not transfer to ``V**q``.
    """
    if not q >= 1.0:
        raise ArgumentError(f"power must be >= 1, got {q}")
    if q == 1.0:
        return lyap
    base = lyap

    def value(x):
        return base(x) ** q

    def gradient(x):
        v = base(x)
        return (q * v ** (q - 1.0))[..., None] * base.grad(x)

    def hessian(x):
        v = base(x)[..., None, None]
        g = base.grad(x)
        gg = g[..., :, None] * g[..., None, :]
        return q * (q - 1.0) * v ** (q - 2.0) * gg + q * v ** (q - 1.0) * base.hess(x)

    third = None
    if base.third_derivative is not None:
        def third(x):
            v = base(x)[..., None, None, None]
            g = base.grad(x)
            H = base.hess(x)
            ggg = g[..., :, None, None] * g[..., None, :, None] * g[..., None, None, :]
            sym = (H[..., :, :, None] * g[..., None, None, :]
                   + H[..., :, None, :] * g[..., None, :, None]
                   + H[..., None, :, :] * g[..., :, None, None])
            return (q * (q - 1.0) * (q - 2.0) * v ** (q - 3.0) * ggg
                    + q * (q - 1.0) * v ** (q - 2.0) * sym
                    + q * v ** (q - 1.0) * base.third(x))

    c = base.c
    c_new = max(q * c,
                q * (q - 1.0) * c ** 2 + q * c,
                abs(q * (q - 1.0) * (q - 2.0)) * c ** 3 + 3.0 * q * (q - 1.0) * c ** 2 + q * c)
    return LyapunovSpec(value, gradient, hessian, third, p=base.p * q, c=c_new,
                        gamma0=base.gamma0, gamma1=base.gamma1, rho=None,
                        q=base.q * q, name=f"({base.name})^{q:g}")
