"""Batch experiments: strong errors, moment sweeps, divergence, Monte Carlo Euler.

Samples are processed in fixed-size batches keyed by ``sample_id``.  Each
batch returns per-sample values; these are concatenated in sample order and
reduced once, so results depend on neither the thread count nor the batch
size.
"""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .consistency import consistency_residuals
from .errors import ArgumentError, ConfigurationError
from .models import ZooEntry, exact_solution, make_model
from .noise import coarsen, is_power_of_two, sample_increment_batch
from .schemes import KINDS, SolverConfig, integrate, make_scheme
from .stability import (alpha_increment_tamed, audit_semi_v_stability, lyapunov_bounds,
                        q_max_increment_tamed, track_rare_events)

OVERFLOW_LEVEL = 1e10
OVERFLOW_CAP = 1e30


@dataclass
class ExperimentConfig:
    model: str
    scheme: str = "increment_tamed"
    T: float = 1.0
    N: list = field(default_factory=lambda: [16])
    M: int = 100
    seed: int = 0
    params: dict = field(default_factory=dict)
    scheme_options: dict = field(default_factory=dict)
    N_fine: Optional[int] = None
    q: list = field(default_factory=lambda: [2.0])
    x0: list = field(default_factory=lambda: [1.0])
    reference: str = "auto"
    output: Optional[str] = None
    format: str = "csv"
    threads: int = 1
    batch_size: int = 500
    # experiment-specific knobs
    alpha: Optional[float] = None
    v: float = 3.0
    t_grid: Optional[list] = None
    control_variate: bool = False
    f: str = "identity"
    compare_scheme: str = "increment_tamed"
    audit_points: int = 16

    def __post_init__(self):
        self.validate()

    def validate(self, need_fine_factor: int = 1) -> None:
        def bad(key, msg):
            raise ConfigurationError(f"{key}: {msg}")

        if self.scheme not in KINDS:
            bad("scheme", f"unknown scheme {self.scheme!r}")
        if not (isinstance(self.T, (int, float)) and self.T > 0 and math.isfinite(self.T)):
            bad("T", f"must be a positive number, got {self.T!r}")
        if not isinstance(self.N, (list, tuple)) or not self.N:
            bad("N", "must be a non-empty list")
        for n in self.N:
            if not is_power_of_two(n):
                bad("N", f"{n!r} is not a power of two, so it cannot divide the dyadic fine grid")
        if not (isinstance(self.M, int) and self.M >= 1):
            bad("M", f"must be a positive integer, got {self.M!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            bad("seed", f"must be a non-negative integer, got {self.seed!r}")
        for q in self.q:
            if not (isinstance(q, (int, float)) and q > 0):
                bad("q", f"moment orders must be positive, got {q!r}")
        if self.N_fine is not None:
            if not is_power_of_two(self.N_fine):
                bad("N_fine", f"must be a power of two, got {self.N_fine!r}")
            if self.N_fine < need_fine_factor * max(self.N):
                bad("N_fine", f"must be at least {need_fine_factor} * max(N) = {need_fine_factor * max(self.N)}")
        if self.reference not in ("auto", "exact", "self"):
            bad("reference", f"must be auto, exact or self, got {self.reference!r}")
        if self.format not in ("csv", "json"):
            bad("format", f"must be csv or json, got {self.format!r}")
        if not (isinstance(self.threads, int) and self.threads >= 1):
            bad("threads", f"must be a positive integer, got {self.threads!r}")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            bad("batch_size", f"must be a positive integer, got {self.batch_size!r}")
        if not isinstance(self.x0, (list, tuple)) or not self.x0:
            bad("x0", "must be a non-empty list")

    def fine(self, factor: int = 1) -> int:
        return self.N_fine if self.N_fine is not None else factor * max(self.N)


@dataclass
class ExperimentResult:
    kind: str
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


# helpers

def _entry(cfg: ExperimentConfig) -> ZooEntry:
    return make_model(cfg.model, cfg.params)


def _scheme(cfg: ExperimentConfig, entry: ZooEntry, kind: Optional[str] = None):
    opts = dict(cfg.scheme_options)
    if "solver" in opts and isinstance(opts["solver"], dict):
        opts["solver"] = SolverConfig(**opts["solver"])
    if (kind or cfg.scheme) == "balanced_implicit" and "c" in opts:
        d = entry.model.dim_state
        opts["c_funcs"] = [_constant_matrix(c, d) for c in opts.pop("c")]
    return make_scheme(kind or cfg.scheme, entry.model, **opts)


def _constant_matrix(c, d):
    mat = np.asarray(c, dtype=float) * (np.eye(d) if np.ndim(c) == 0 else 1.0)
    if mat.shape != (d, d):
        raise ConfigurationError(f"scheme_options.c: balancing entries must be scalars or {d}x{d} matrices")
    return lambda x: np.broadcast_to(mat, np.shape(x)[:-1] + (d, d))


def _x0(cfg: ExperimentConfig, ids, d: int) -> np.ndarray:
    raw = cfg.x0
    if isinstance(raw[0], (list, tuple)):
        pts = np.asarray(raw, dtype=float)
        if pts.shape[1] != d:
            raise ConfigurationError(f"x0: entries must have dimension {d}")
        return pts[np.asarray(ids) % len(pts)]
    pt = np.asarray(raw, dtype=float)
    if pt.size == 1:
        pt = np.full(d, float(pt[0]))
    if pt.shape != (d,):
        raise ConfigurationError(f"x0: expected {d} coordinates, got {pt.size}")
    return np.broadcast_to(pt, (len(ids), d)).copy()


def _batches(M: int, size: int):
    return [list(range(s, min(s + size, M))) for s in range(0, M, size)]


def _run(cfg: ExperimentConfig, N_fine: int, m: int, fn, n_samples: Optional[int] = None):
    """Apply ``fn(ids, fine_increments)`` to every batch; results in batch order."""
    batches = _batches(cfg.M if n_samples is None else n_samples, cfg.batch_size)

    def work(ids):
        return fn(ids, sample_increment_batch(cfg.seed, ids, cfg.T, N_fine, m))

    if cfg.threads == 1:
        return [work(b) for b in batches]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(work, batches))


def _gather(parts, axis=0):
    """Per-sample arrays from all batches, in sample order.

    Reducing the concatenation once (rather than adding batch sums) keeps
    results independent of the batch size as well as the thread count.
    """
    return np.concatenate(parts, axis=axis)


def _metadata(cfg: ExperimentConfig, start: float) -> dict:
    return {"seed": cfg.seed, "model": cfg.model, "scheme": cfg.scheme, "T": cfg.T, "M": cfg.M,
            "version": __version__, "wall_time": time.perf_counter() - start}


def fit_order(N, errors, q: float = 1.0):
    """Least-squares slope of ``log2(err^(1/q))`` against ``log2 N``.

    Returns ``(order, residual)`` with ``order = -slope``; non-finite or
    non-positive rows are skipped.
    """
    N = np.asarray(N, dtype=float)
    e = np.asarray(errors, dtype=float)
    ok = np.isfinite(e) & (e > 0)
    if ok.sum() < 2:
        return math.nan, math.nan
    x, y = np.log2(N[ok]), np.log2(e[ok]) / q
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(-coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def _norms(states):
    with np.errstate(all="ignore"):
        n = np.linalg.norm(states, axis=-1)
    return np.where(np.isnan(n), np.inf, n)


def _reference_kind(cfg, entry):
    if cfg.reference == "exact" and not entry.has_exact:
        raise ConfigurationError(f"reference: model {cfg.model} has no exact solution")
    if cfg.reference == "auto":
        return "exact" if entry.has_exact else "self"
    return cfg.reference


# experiments

def strong_convergence(cfg: ExperimentConfig) -> ExperimentResult:
    start = time.perf_counter()
    entry = _entry(cfg)
    ref_kind = _reference_kind(cfg, entry)
    cfg.validate(need_fine_factor=16 if ref_kind == "self" else 2)
    scheme = _scheme(cfg, entry)
    N_fine = cfg.fine(16)
    qs = [float(q) for q in cfg.q]
    if cfg.scheme == "increment_tamed":
        lyap = entry.lyapunov
        qmax = q_max_increment_tamed(lyap.p, lyap.q, lyap.gamma0, lyap.gamma1)
        for q in qs:
            if q >= qmax:
                warnings.warn(f"q = {q} is not below the admissible bound {qmax:.4g} for this Lyapunov certificate")
    d, m = entry.model.dim_state, entry.model.dim_noise
    ref_scheme = scheme

    def batch(ids, inc):
        x0 = _x0(cfg, ids, d)
        if ref_kind == "exact":
            ref = exact_solution(entry, x0[:, None, :], inc, cfg.T).states
        else:
            ref = integrate(ref_scheme, x0, N_fine, cfg.T, inc).states
        out = {}
        for N in cfg.N:
            path = integrate(scheme, x0, N, cfg.T, coarsen(inc, N_fine // N))
            idx = np.arange(2 * N + 1) * (N_fine // (2 * N))
            times = idx * (cfg.T / N_fine)
            err = _norms(ref[:, idx, :] - path.interpolant(times))
            with np.errstate(all="ignore"):
                out[N] = (np.stack([err ** q for q in qs]), path.overflowed)  # (Q, B, K), (B,)
        return out

    parts = _run(cfg, N_fine, m, batch)
    rows_by_q = {q: [] for q in qs}
    for N in cfg.N:
        powered = _gather([p[N][0] for p in parts], axis=1)
        over = float(_gather([p[N][1] for p in parts]).mean())
        with np.errstate(all="ignore"):
            mean = powered.mean(axis=1)
            var = powered.var(axis=1, ddof=1) if cfg.M > 1 else np.zeros_like(mean)
        for k, q in enumerate(qs):
            j = int(np.nanargmax(np.where(np.isnan(mean[k]), np.inf, mean[k])))
            sup = float(mean[k, j])
            se = float(math.sqrt(var[k, j] / cfg.M)) if math.isfinite(sup) else math.inf
            rows_by_q[q].append([N, q, sup, se, over])
    rows = []
    orders = {}
    for q in qs:
        good = [r for r in rows_by_q[q] if r[4] == 0]
        order, resid = fit_order([r[0] for r in good], [r[2] for r in good], q)
        orders[q] = (order, resid)
        rows += [[r[0], r[1], r[2], r[3], order, r[4]] for r in rows_by_q[q]]
    return ExperimentResult("strong_convergence", ["N", "q", "sup_error", "stderr", "fitted_order", "overflow_frac"],
                            rows, _metadata(cfg, start),
                            {"orders": orders, "reference": ref_kind, "N_fine": N_fine})


def moment_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    N_fine = cfg.fine(1)
    qs = [float(q) for q in cfg.q]
    d, m = entry.model.dim_state, entry.model.dim_noise

    def batch(ids, inc):
        x0 = _x0(cfg, ids, d)
        out = {}
        for N in cfg.N:
            path = integrate(scheme, x0, N, cfg.T, coarsen(inc, N_fine // N))
            nrm = _norms(path.states)
            with np.errstate(all="ignore"):
                out[N] = (np.stack([nrm ** q for q in qs]), path.overflowed)
        return out

    parts = _run(cfg, N_fine, m, batch)
    rows = []
    for q_i, q in enumerate(qs):
        for N in cfg.N:
            with np.errstate(all="ignore"):
                s = _gather([p[N][0] for p in parts], axis=1)[q_i].mean(axis=0)
            over = float(_gather([p[N][1] for p in parts]).mean())
            rows.append([N, q, float(np.max(s)), over])
    return ExperimentResult("moment_sweep", ["N", "q", "sup_moment", "overflow_frac"], rows,
                            _metadata(cfg, start), {"N_fine": N_fine})


def divergence_demo(cfg: ExperimentConfig) -> ExperimentResult:
    """Overflow fraction and capped second moment at ``T`` for two schemes on shared increments."""
    start = time.perf_counter()
    entry = _entry(cfg)
    kinds = [cfg.scheme, cfg.compare_scheme]
    schemes = [_scheme(cfg, entry, k) for k in kinds]
    N_fine = cfg.fine(1)
    d, m = entry.model.dim_state, entry.model.dim_noise

    def batch(ids, inc):
        x0 = _x0(cfg, ids, d)
        out = {}
        for N in cfg.N:
            coarse = coarsen(inc, N_fine // N)
            for k, sch in zip(kinds, schemes):
                yT = _norms(integrate(sch, x0, N, cfg.T, coarse).states[:, -1, :])
                over = ~(yT <= OVERFLOW_LEVEL)
                with np.errstate(all="ignore"):
                    capped = np.minimum(yT ** 2, OVERFLOW_CAP)
                out[(N, k)] = (over, capped)
        return out

    parts = _run(cfg, N_fine, m, batch)
    rows = []
    for k in kinds:
        for N in cfg.N:
            rows.append([N, k, float(_gather([p[(N, k)][0] for p in parts]).mean()),
                         float(_gather([p[(N, k)][1] for p in parts]).mean())])
    return ExperimentResult("divergence_demo", ["N", "scheme", "overflow_frac", "capped_mean"], rows,
                            _metadata(cfg, start), {"N_fine": N_fine})


TEST_FUNCTIONS = {
    "one": lambda x: np.ones(x.shape[:-1]),
    "identity": lambda x: x[..., 0],
    "square_norm": lambda x: np.sum(x * x, axis=-1),
}


def _mc_reference(entry: ZooEntry, fname: str, x0, T: float):
    if entry.name == "linear" and np.ndim(x0) == 1:
        a, b = float(entry.params["a"]), float(entry.params["b"])
        x = float(x0[0])
        return {"one": 1.0, "identity": x * math.exp(a * T),
                "square_norm": x * x * math.exp((2 * a + b * b) * T)}.get(fname)
    if entry.name == "langevin" and entry.params["potential"] == "flat" and np.ndim(x0) == 1:
        eps, d = float(entry.params["epsilon"]), int(entry.params["d"])
        x = np.broadcast_to(np.asarray(x0, dtype=float), (d,))
        return {"one": 1.0, "identity": float(x[0]),
                "square_norm": float(x @ x) + 2.0 * eps * d * T}.get(fname)
    if fname == "one":
        return 1.0
    return None


def mc_euler_estimate(cfg: ExperimentConfig, f: Optional[Callable] = None, reference: Optional[float] = None) -> ExperimentResult:
    """Average of ``f(Y_T)`` over ``N**2`` independent paths with ``N = cfg.N[0]`` steps."""
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    N = int(cfg.N[0])
    n_samples = N * N
    fname = cfg.f if f is None else getattr(f, "__name__", "custom")
    func = TEST_FUNCTIONS[cfg.f] if f is None else f
    d, m = entry.model.dim_state, entry.model.dim_noise

    def batch(ids, inc):
        yT = integrate(scheme, _x0(cfg, ids, d), N, cfg.T, inc).states[:, -1, :]
        vals = np.asarray(func(yT), dtype=float)
        return vals

    vals = np.concatenate(_run(cfg, N, m, batch, n_samples))
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    if reference is None and f is None and not isinstance(cfg.x0[0], (list, tuple)):
        reference = _mc_reference(entry, cfg.f, np.asarray(cfg.x0, dtype=float), cfg.T)
    ref = math.nan if reference is None else float(reference)
    meta = _metadata(cfg, start)
    meta["M"] = n_samples
    return ExperimentResult("mc_euler", ["N", "samples", "f", "estimate", "stderr", "reference"],
                            [[N, n_samples, fname, est, se, ref]], meta)


def _alpha(cfg, entry):
    if cfg.alpha is not None:
        return float(cfg.alpha)
    L = entry.lyapunov
    return alpha_increment_tamed(L.p, L.gamma0, L.gamma1)


def rare_events(cfg: ExperimentConfig) -> ExperimentResult:
    """Empirical ``E[1_{Omega_N} V(Y_n)]`` and exit probabilities next to the theoretical bounds."""
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    lyap = entry.lyapunov
    if lyap.rho is None or not math.isfinite(lyap.rho):
        raise ConfigurationError(f"model: {cfg.model} has no finite certified rho")
    alpha = _alpha(cfg, entry)
    N_fine = cfg.fine(1)
    d, m = entry.model.dim_state, entry.model.dim_noise
    EV0 = float(np.mean(lyap(_x0(cfg, range(cfg.M), d))))

    def batch(ids, inc):
        x0 = _x0(cfg, ids, d)
        out = {}
        for N in cfg.N:
            led = track_rare_events(lyap, integrate(scheme, x0, N, cfg.T, coarsen(inc, N_fine // N)), alpha)
            masked = np.where(led.indicators[:, -1:], led.v_values, 0.0)
            out[N] = (masked, ~led.indicators)
        return out

    parts = _run(cfg, N_fine, m, batch)
    rows = []
    for N in cfg.N:
        masked = _gather([p[N][0] for p in parts])
        mean = masked.mean(axis=0)
        se = masked.std(axis=0, ddof=1) / math.sqrt(cfg.M) if cfg.M > 1 else np.zeros(N + 1)
        ex = _gather([p[N][1] for p in parts]).mean(axis=0)
        b = lyapunov_bounds(lyap.rho, cfg.T, N, alpha, EV0)
        for n in range(N + 1):
            t = n * cfg.T / N
            rows.append([N, n, t, float(mean[n]), float(se[n]), float(ex[n]),
                         math.exp(lyap.rho * t) * EV0, b.rare_bound])
    return ExperimentResult("rare_events", ["N", "n", "t_n", "E_1OmegaV", "stderr", "P_exit", "ev_bound", "rare_bound"],
                            rows, _metadata(cfg, start), {"alpha": alpha, "rho": lyap.rho, "EV0": EV0})


def consistency(cfg: ExperimentConfig) -> ExperimentResult:
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    t_grid = cfg.t_grid or [2.0 ** -k for k in range(3, 11)]
    rep = consistency_residuals(scheme, entry.model, cfg.v, t_grid, cfg.M, seed=cfg.seed,
                                control_variate=cfg.control_variate)
    rows = [[float(a), float(b), float(c), float(d), float(e)]
            for a, b, c, d, e in zip(rep.t, rep.R1, rep.R2, rep.stderr1, rep.stderr2)]
    return ExperimentResult("consistency", ["t", "R1", "R2", "stderr1", "stderr2"], rows,
                            _metadata(cfg, start), {"points": len(rep.points)})


def lyapunov_audit(cfg: ExperimentConfig) -> ExperimentResult:
    """Semi V-stability audit at ``t = T / N`` for each ``N`` on states drawn inside the slab."""
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    lyap = entry.lyapunov
    rho = lyap.rho if lyap.rho is not None else 0.0
    alpha = _alpha(cfg, entry)
    d = entry.model.dim_state

    def sampler(t, rng):
        # uniform box whose half-width matches the slab of a quadratic V
        R = math.sqrt(max(t ** (-alpha) - 1.0, 0.0))
        return rng.uniform(-R, R, (cfg.audit_points, d))

    t_values = [cfg.T / N for N in cfg.N]
    rep = audit_semi_v_stability(scheme, lyap, alpha, rho, t_values, sampler, cfg.M, seed=cfg.seed)
    rows = [[r.t] + [float(v) for v in r.x] + [r.ratio, r.stderr, int(r.flagged)] for r in rep.rows]
    cols = ["t"] + [f"x_{i + 1}" for i in range(d)] + ["ratio", "stderr", "flagged"]
    return ExperimentResult("lyapunov_audit", cols, rows, _metadata(cfg, start),
                            {"skipped": len(rep.skipped), "alpha": alpha, "rho": rho})


def simulate(cfg: ExperimentConfig) -> ExperimentResult:
    """All sample paths on the first grid in ``cfg.N``, long format."""
    start = time.perf_counter()
    entry = _entry(cfg)
    scheme = _scheme(cfg, entry)
    N = int(cfg.N[0])
    N_fine = cfg.fine(1)
    d, m = entry.model.dim_state, entry.model.dim_noise

    def batch(ids, inc):
        return ids, integrate(scheme, _x0(cfg, ids, d), N, cfg.T, coarsen(inc, N_fine // N))

    rows = []
    for ids, path in _run(cfg, N_fine, m, batch):
        times = path.times
        fin = path.finite
        for b, sid in enumerate(ids):
            for n in range(N + 1):
                rows.append([sid, float(times[n])] + [float(v) for v in path.states[b, n]]
                            + ["finite" if fin[b, n] else "overflowed"])
    cols = ["sample", "t"] + [f"x_{i + 1}" for i in range(d)] + ["flag"]
    return ExperimentResult("simulate", cols, rows, _metadata(cfg, start))


# serialization

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "columns", "rows", "metadata"],
    "additionalProperties": False,
    "properties": {
        "kind": {"type": "string"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array",
                                            "items": {"type": ["number", "string", "integer"]}}},
        "metadata": {
            "type": "object",
            "required": ["seed", "model", "scheme", "T", "M", "version"],
            "properties": {
                "seed": {"type": "integer"}, "model": {"type": "string"}, "scheme": {"type": "string"},
                "T": {"type": "number"}, "M": {"type": "integer"}, "version": {"type": "string"},
                "wall_time": {"type": "number"},
            },
        },
    },
}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return float(format(v, ".17g"))
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return str(v)


def write_results(result: ExperimentResult, path, format: str = "csv") -> None:
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(result.columns)
            for row in result.rows:
                w.writerow([_fmt(v) for v in row])
    elif format == "json":
        doc = {"kind": result.kind, "columns": list(result.columns),
               "rows": [[_json_value(v) for v in row] for row in result.rows],
               "metadata": {k: _json_value(v) if not isinstance(v, str) else v
                            for k, v in result.metadata.items()}}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, allow_nan=False)
            fh.write("\n")
    else:
        raise ArgumentError(f"unknown format {format!r}")


def read_csv_results(path) -> tuple:
    """Parse a CSV written by :func:`write_results`; numeric cells become floats."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]

    def conv(s):
        try:
            return float(s)
        except ValueError:
            return s

    return header, [[conv(s) for s in r] for r in body]


EXPERIMENTS = {
    "converge": strong_convergence,
    "moments": moment_sweep,
    "divergence-demo": divergence_demo,
    "mc-euler": mc_euler_estimate,
    "rare-events": rare_events,
    "consistency": consistency,
    "lyapunov-audit": lyapunov_audit,
    "simulate": simulate,
}
