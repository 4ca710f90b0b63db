"""Command-line front end.

Exit codes: 0 success, 1 invalid configuration or parameters, 2 runtime or
I/O failure.
"""
from __future__ import annotations

import argparse
import json
import re
import os
import sys
import warnings
from dataclasses import fields

import jsonschema
import yaml

from . import experiments as ex
from .errors import ArgumentError, CapabilityError, ConfigurationError, ParameterError, SdeError
from .models import list_models, make_model, model_summary, param_schema
from .schemes import KINDS

OUTPUT_ENV = "SDETAME_OUTPUT_DIR"

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tamesde experiment configuration",
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {"type": "string"},
        "params": {"type": "object"},
        "scheme": {"type": "string", "enum": list(KINDS)},
        "scheme_options": {"type": "object"},
        "T": _num,
        "N": {"type": "array", "items": _pos_int, "minItems": 1},
        "N_fine": _pos_int,
        "M": _pos_int,
        "q": {"type": "array", "items": _num, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "x0": {"type": "array", "minItems": 1,
               "items": {"anyOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}},
        "reference": {"enum": ["auto", "exact", "self"]},
        "output": {"type": "string"},
        "format": {"enum": ["csv", "json"]},
        "threads": _pos_int,
        "batch_size": _pos_int,
        "alpha": _num,
        "v": _num,
        "t_grid": {"type": "array", "items": _num, "minItems": 1},
        "control_variate": {"type": "boolean"},
        "f": {"enum": sorted(ex.TEST_FUNCTIONS)},
        "compare_scheme": {"type": "string", "enum": list(KINDS)},
        "audit_points": _pos_int,
    },
}

SUBCOMMANDS = ["simulate", "converge", "moments", "rare-events", "consistency", "lyapunov-audit",
               "mc-euler", "divergence-demo", "list-models", "validate-config"]


def _set_dotted(data: dict, key: str, value) -> None:
    parts = key.split(".")
    cur = data
    for p in parts[:-1]:
        nxt = cur.get(p)
        if nxt is None:
            nxt = cur[p] = {}
        if not isinstance(nxt, dict):
            raise ConfigurationError(f"{key}: {p} is not a mapping")
        cur = nxt
    cur[parts[-1]] = value


def apply_overrides(data: dict, overrides) -> dict:
    data = dict(data)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        if not key:
            raise ConfigurationError(f"override {item!r}: empty key")
        try:
            value = yaml.load(raw, Loader=_Loader)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"override {key}: cannot parse value {raw!r} ({exc})") from None
        _set_dotted(data, key, value)
    return data


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e6`` style floats, as YAML 1.2 does."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def load_config_data(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"config: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config: top level must be a mapping")
    return data


def _key_path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def config_from_data(data: dict) -> ex.ExperimentConfig:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ConfigurationError(f"{_key_path(e)}: {e.message}")
    known = {f.name for f in fields(ex.ExperimentConfig)}
    kwargs = {k: v for k, v in data.items() if k in known}
    for k in ("T", "v", "alpha"):
        if k in kwargs and kwargs[k] is not None:
            kwargs[k] = float(kwargs[k])
    return ex.ExperimentConfig(**kwargs)


def parse_config(path, overrides=()) -> ex.ExperimentConfig:
    cfg = config_from_data(apply_overrides(load_config_data(path), overrides))
    check_config(cfg)
    return cfg


def check_config(cfg: ex.ExperimentConfig) -> None:
    """Build the model and scheme once so bad names and parameters surface early."""
    try:
        entry = make_model(cfg.model, cfg.params)
    except (ArgumentError, ParameterError) as exc:
        raise ConfigurationError(f"model: {exc}") from None
    d = entry.model.dim_state
    try:
        ex._x0(cfg, [0], d)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"x0: {exc}") from None
    for kind in (cfg.scheme, cfg.compare_scheme):
        if kind == "linear_implicit":
            raise ConfigurationError("scheme: linear_implicit needs Python callables; use the library API")
        if kind == "balanced_implicit":
            c = cfg.scheme_options.get("c")
            if not isinstance(c, list) or len(c) != entry.model.dim_noise + 1:
                raise ConfigurationError(f"scheme_options.c: balanced_implicit needs {entry.model.dim_noise + 1} balancing constants")
    try:
        ex._scheme(cfg, entry)
    except (CapabilityError, ArgumentError, TypeError) as exc:
        raise ConfigurationError(f"scheme: {exc}") from None


def _output_path(cfg, args, sub) -> str:
    if args.output:
        return args.output
    if cfg.output:
        return cfg.output
    base = os.environ.get(OUTPUT_ENV, ".")
    return os.path.join(base, f"{sub}.{cfg.format}")


def _summary(sub, result) -> str:
    if sub == "converge":
        orders = ", ".join(f"q={q:g}: {o[0]:.4f}" for q, o in result.extras["orders"].items())
        return f"converge: {len(result.rows)} rows, fitted order {orders}"
    if sub == "mc-euler":
        r = result.rows[0]
        return f"mc-euler: estimate {r[3]:.6g} +- {r[4]:.3g} (reference {r[5]:.6g})"
    return f"{sub}: {len(result.rows)} rows"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tamesde", description="Tamed and implicit SDE schemes: experiments.")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        if name == "list-models":
            sp.add_argument("--schema", action="store_true", help="print default parameters as JSON")
            continue
        sp.add_argument("config", help="YAML configuration file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted keys reach into mappings)")
        if name != "validate-config":
            sp.add_argument("-o", "--output", help="result file path")
            sp.add_argument("--format", choices=["csv", "json"])
            sp.add_argument("--threads", help="worker threads, a positive integer or 'auto'")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _threads(value):
    if value is None:
        return None
    if value == "auto":
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigurationError(f"threads: expected a positive integer or 'auto', got {value!r}") from None
    if n < 1:
        raise ConfigurationError(f"threads: must be positive, got {n}")
    return n


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    sub = args.command
    if sub == "list-models":
        for name in list_models():
            if args.schema:
                print(f"{name}\t{json.dumps(param_schema(name))}\t{model_summary(name)}")
            else:
                print(name)
        return 0
    try:
        overrides = list(args.overrides)
        if sub != "validate-config":
            if args.format:
                overrides.append(f"format={args.format}")
            t = _threads(args.threads)
            if t is not None:
                overrides.append(f"threads={t}")
        cfg = parse_config(args.config, overrides)
    except (ConfigurationError, ParameterError, ArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # never crash on user input
        print(f"error: config: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if sub == "validate-config":
        print("ok")
        return 0
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore")
            result = ex.EXPERIMENTS[sub](cfg)
        path = _output_path(cfg, args, sub)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        ex.write_results(result, path, cfg.format)
    except (ConfigurationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SdeError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"{_summary(sub, result)} -> {path}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
