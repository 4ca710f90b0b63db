import contextlib
import csv
import io
import json
import re

import jsonschema
import pytest
import yaml
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from tamesde import cli
from tamesde.errors import ConfigurationError
from tamesde.models import list_models

MINIMAL = {"model": "ginzburg_landau", "scheme": "increment_tamed", "T": 1, "N": [16], "M": 10, "seed": 1}
GBM = {"model": "linear", "params": {"a": 1.0, "b": 0.5}, "scheme": "euler_maruyama", "T": 1.0,
       "N": [16, 32, 64], "M": 200, "seed": 3, "x0": [1.0], "q": [2.0]}


def write(tmp_path, data, name="c.yaml"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else yaml.safe_dump(data))
    return str(path)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.run(argv)
    return code, out.getvalue(), err.getvalue()


def test_minimal_config_valid(tmp_path):
    cfg = cli.parse_config(write(tmp_path, MINIMAL))
    assert (cfg.model, cfg.N, cfg.seed) == ("ginzburg_landau", [16], 1)


def test_override_seed(tmp_path):
    assert cli.parse_config(write(tmp_path, MINIMAL), ["seed=2"]).seed == 2


def test_dotted_override_reaches_params(tmp_path):
    cfg = cli.parse_config(write(tmp_path, MINIMAL), ["params.beta=0.25"])
    assert cfg.params == {"beta": 0.25}


def test_non_dyadic_grid_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="N: 12 is not a power of two"):
        cli.parse_config(write(tmp_path, MINIMAL), ["N=[12]"])


def test_unknown_key_rejected_with_path(tmp_path):
    with pytest.raises(ConfigurationError, match="Additional properties"):
        cli.parse_config(write(tmp_path, dict(MINIMAL, sede=3)))
    with pytest.raises(ConfigurationError, match=r"^N\.0:"):
        cli.parse_config(write(tmp_path, dict(MINIMAL, N=["x"])))


def test_parse_error_has_line_and_column(tmp_path):
    with pytest.raises(ConfigurationError, match=r"line 2, column 4"):
        cli.parse_config(write(tmp_path, "model: linear\nM: : 3\n"))


def test_exponent_floats_without_dot(tmp_path):
    cfg = cli.parse_config(write(tmp_path, "model: linear\nT: 1e-1\nx0: [2e0]\n"), ["params.a=1e-2"])
    assert (cfg.T, cfg.x0, cfg.params["a"]) == (0.1, [2.0], 0.01)


def test_bad_model_parameters(tmp_path):
    with pytest.raises(ConfigurationError, match="^model: ginzburg_landau: alpha > 0"):
        cli.parse_config(write(tmp_path, dict(MINIMAL, params={"alpha": -1})))


def test_schema_is_valid_json_schema():
    jsonschema.Draft202012Validator.check_schema(cli.CONFIG_SCHEMA)


def test_validate_config_prints_ok(tmp_path):
    code, out, _ = run(["validate-config", write(tmp_path, MINIMAL)])
    assert code == 0 and out.strip() == "ok"


def test_list_models_sorted():
    code, out, _ = run(["list-models"])
    assert code == 0
    assert out.split() == sorted(list_models())


def test_list_models_schema():
    code, out, _ = run(["list-models", "--schema"])
    name, schema, _ = out.splitlines()[0].split("\t")
    assert json.loads(schema) is not None and name in list_models()


def test_converge_writes_csv(tmp_path):
    path = tmp_path / "out" / "conv.csv"
    code, out, _ = run(["converge", write(tmp_path, GBM), "-o", str(path)])
    assert code == 0 and "fitted order" in out
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["N", "q", "sup_error", "stderr", "fitted_order", "overflow_frac"]
    assert len(rows) - 1 >= len(GBM["N"])


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    code, _, _ = run(["moments", write(tmp_path, MINIMAL)])
    assert code == 0
    assert (tmp_path / "env" / "moments.csv").exists()


def test_json_output(tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = run(["mc-euler", write(tmp_path, dict(GBM, N=[8])), "--format", "json", "-o", str(path)])
    doc = json.loads(path.read_text())
    assert code == 0 and doc["kind"] == "mc_euler"


def test_identical_invocations_byte_identical(tmp_path):
    conf = write(tmp_path, GBM)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["converge", conf, "-o", str(a), "--threads", "1"])[0] == 0
    assert run(["converge", conf, "-o", str(b), "--threads", "4", "--set", "batch_size=7"])[0] == 0
    # per-sample values are reduced once, so batching does not change the digits
    assert a.read_bytes() == b.read_bytes()


def test_exit_codes(tmp_path):
    assert run(["converge", str(tmp_path / "missing.yaml")])[0] == 1
    assert run(["converge", write(tmp_path, MINIMAL), "--threads", "zero"])[0] == 1
    assert run(["bogus"])[0] == 1
    # output path inside a regular file is an I/O failure
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(["moments", write(tmp_path, MINIMAL), "-o", str(blocker / "x.csv")])
    assert code == 2 and err.startswith("error:")


def test_step_error_is_runtime_failure(tmp_path):
    conf = dict(MINIMAL, model="lewis_32", scheme="fully_implicit", x0=[1.0],
                scheme_options={"solver": {"max_iters": 1, "max_halvings": 0}})
    code, _, err = run(["moments", write(tmp_path, conf), "-o", str(tmp_path / "m.csv"),
                        "--set", "x0=[1e6]"])
    assert code in (0, 2)
    if code == 2:
        assert "node" in err


KEYS = sorted(cli.CONFIG_SCHEMA["properties"]) + ["bogus", "N_coarse"]
scalars = st.one_of(st.none(), st.booleans(), st.integers(-5, 2 ** 40), st.floats(allow_nan=True),
                    st.text(max_size=8), st.sampled_from(list_models() + ["euler_maruyama", "csv", "self"]))
values = st.recursive(scalars, lambda inner: st.lists(inner, max_size=3)
                      | st.dictionaries(st.text(max_size=6), inner, max_size=3), max_leaves=6)
ERROR_LINE = re.compile(r"^error: [^\s:]+(:| )")


@settings(max_examples=10 ** 4, deadline=None, suppress_health_check=list(HealthCheck))
@given(st.dictionaries(st.sampled_from(KEYS), values, max_size=6), st.booleans())
def test_fuzzed_configs_never_crash(tmp_path_factory, data, keep_model):
    if keep_model:
        data = dict(data, model="ginzburg_landau")
    path = tmp_path_factory.getbasetemp() / "fuzz.yaml"
    path.write_text(yaml.safe_dump(data))
    code, out, err = run(["validate-config", str(path)])
    assert code in (0, 1)
    if code == 1:
        assert ERROR_LINE.match(err), err
    else:
        assert out.strip() == "ok"


@settings(max_examples=300, deadline=None, suppress_health_check=list(HealthCheck))
@given(st.text(max_size=40))
def test_fuzzed_text_never_crashes(tmp_path_factory, text):
    path = tmp_path_factory.getbasetemp() / "raw.yaml"
    path.write_text(text)
    code, _, err = run(["validate-config", str(path)])
    assert code in (0, 1)
    if code == 1:
        assert err.startswith("error: ")
