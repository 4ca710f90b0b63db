import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tamesde.core import (GeneratorValue, LyapunovSpec, Model, eval_generator, eval_generator_tilde,
                          extend_coefficients, fd_derivative, orthant_distance, orthant_member,
                          power_lyapunov, quadratic_lyapunov, validate_c3p)
from tamesde.errors import ArgumentError, ConfigurationError, EvaluationError
from tamesde.models import make_model

finite = st.floats(-50, 50, allow_nan=False)


def scalar(mu, sig, **kw):
    return Model.scalar(mu, sig, **kw)


V1 = quadratic_lyapunov(1)


def test_generator_ou_at_origin():
    g = eval_generator(scalar(lambda x: -x, lambda x: 1.0), V1, [0.0])
    assert g.value == 1.0
    assert g.drift_part == 0.0 and g.diffusion_part == 1.0


def test_generator_cubic_drift():
    g = eval_generator(scalar(lambda x: -x ** 3, lambda x: 1.0), V1, [1.0])
    assert g.value == pytest.approx(-1.0)


def test_generator_lorenz_matches_hand_expansion():
    entry = make_model("lorenz")
    a1, a2, a3 = 10.0, 28.0, 8.0 / 3.0
    beta = np.array([0.5, 0.5, 0.5])
    x = np.random.default_rng(3).normal(size=(200, 3)) * 4
    x1, x2, x3 = x.T
    # cross terms from x1*x3 and x1*x2 cancel
    oracle = (-2 * a1 * x1 ** 2 + 2 * (a1 + a2) * x1 * x2 - 2 * x2 ** 2 - 2 * a3 * x3 ** 2
              + np.sum(beta ** 2 * x ** 2, axis=1))
    g = eval_generator(entry.model, quadratic_lyapunov(3), x)
    np.testing.assert_allclose(g.value, oracle, rtol=1e-10, atol=1e-9)
    assert np.all(g.value <= entry.lyapunov.rho * quadratic_lyapunov(3)(x) + 1e-9)


def test_generator_value_is_sum_of_parts():
    gv = GeneratorValue(np.array([0.1, 1e10]), np.array([0.2, 3.0]))
    np.testing.assert_array_equal(gv.value, gv.drift_part + gv.diffusion_part)


def test_generator_reports_nonfinite_component():
    m = scalar(lambda x: np.where(x > 0, np.inf, x), lambda x: 1.0)
    with pytest.raises(EvaluationError) as info:
        eval_generator(m, V1, [1.0])
    assert "drift" in str(info.value)


def test_tilde_examples():
    lin = scalar(lambda y: y, lambda y: 0.0)
    assert eval_generator_tilde(lin, V1, [1.0], [3.0]) == pytest.approx(6.0)
    mult = scalar(lambda y: 0.0, lambda y: y)
    assert eval_generator_tilde(mult, V1, [7.5], [2.0]) == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3,), elements=finite))
def test_tilde_on_diagonal_is_generator(x):
    entry = make_model("lorenz")
    V = quadratic_lyapunov(3)
    assert eval_generator_tilde(entry.model, V, x, x) == eval_generator(entry.model, V, x).value


def test_generator_closed_form_on_random_points():
    entry = make_model("duffing_van_der_pol")
    model = entry.model
    V = quadratic_lyapunov(model.dim_state)
    x = np.random.default_rng(0).normal(size=(1000, model.dim_state)) * 3
    sig = model.diffusion_bar(x)
    oracle = 2 * np.sum(x * model.drift_bar(x), axis=-1) + np.sum(sig ** 2, axis=(-2, -1))
    np.testing.assert_allclose(eval_generator(model, V, x).value, oracle, rtol=1e-12, atol=1e-12)


def test_c3p_quadratic_passes_with_direct_ratios():
    rep = validate_c3p(V1.replace(p=3.0, c=4.0), [[0.0], [1.0], [10.0]])
    x = np.array([0.0, 1.0, 10.0])
    oracle = np.stack([np.abs(2 * x) / (1 + x ** 2) ** (2 / 3), 2 / (1 + x ** 2) ** (1 / 3), 0 * x], axis=1)
    np.testing.assert_allclose(rep.ratios, oracle, rtol=1e-12, atol=1e-12)
    assert rep.passed


def test_c3p_constant_lift():
    V = LyapunovSpec(lambda x: np.ones(x.shape[:-1]), p=3.0, c=0.0)
    assert validate_c3p(V, np.linspace(-5, 5, 11)[:, None]).passed


def test_c3p_quartic_fails_at_one():
    V = LyapunovSpec(lambda x: 1 + x[..., 0] ** 4, lambda x: 4 * x ** 3, lambda x: 12 * x[..., None] ** 2,
                     lambda x: 24 * x[..., None, None], p=4.0, c=1e-3)
    rep = validate_c3p(V, [[1.0]])
    assert rep.failures == [0]
    assert rep.ratios[0, 0] == pytest.approx(4 / 2 ** 0.75)


def test_c3p_without_derivatives_and_no_fd():
    V = LyapunovSpec(lambda x: 1 + x[..., 0] ** 2)
    with pytest.raises(ConfigurationError):
        validate_c3p(V, [[0.0]], allow_fd=False)


def test_power_identity_and_values():
    assert power_lyapunov(V1, 1) is V1
    V2 = power_lyapunov(V1, 2)
    x = np.array([1.0])
    assert V2(x) == 4.0
    assert V2.grad(x)[0] == 8.0
    assert V2.hess(x)[0, 0] == 16.0
    assert V2.p == 6.0 and V2.q == 2.0


def test_power_rejects_small_exponent():
    with pytest.raises(ArgumentError):
        power_lyapunov(V1, 0.5)


def test_power_preserves_c3p():
    pts = np.linspace(-20, 20, 41)[:, None]
    base = V1.replace(p=3.0, c=4.0)
    assert validate_c3p(base, pts).passed
    assert validate_c3p(power_lyapunov(base, 2.0), pts).passed


@settings(max_examples=40, deadline=None)
@given(arrays(float, (2,), elements=st.floats(-5, 5)), st.floats(1.0, 3.0))
def test_power_derivatives_match_fd(x, q):
    Vq = power_lyapunov(quadratic_lyapunov(2), q)
    np.testing.assert_allclose(Vq.grad(x), fd_derivative(Vq.value, x), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(Vq.hess(x), fd_derivative(Vq.grad, x), rtol=1e-5, atol=1e-5)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (2,), elements=st.floats(-5, 5)))
def test_quadratic_lyapunov_derivatives_match_fd(x):
    V = quadratic_lyapunov(2)
    assert V(x) >= 1
    np.testing.assert_allclose(V.grad(x), fd_derivative(V.value, x), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(V.hess(x), fd_derivative(V.grad, x), rtol=1e-5, atol=1e-6)


def test_extension_is_identity_on_full_space():
    m = make_model("lorenz").model
    ext = extend_coefficients(m, "zero")
    x = np.random.default_rng(1).normal(size=(10, 3))
    np.testing.assert_array_equal(ext.drift_bar(x), m.drift(x))
    np.testing.assert_array_equal(ext.diffusion_bar(x), m.diffusion(x))


def test_sir_zero_extension_outside():
    m = make_model("sir").model
    x = np.array([-1.0, 1.0, 1.0])
    assert np.all(m.drift_bar(x) == 0) and np.all(m.diffusion_bar(x) == 0)


def test_volatility_constant_extension():
    m = make_model("volatility", {"delta": 0.5}).model
    assert m.drift_bar([-2.0])[0] == 0.5
    assert m.diffusion_bar([-2.0])[0, 0] == 0.0
    custom = extend_coefficients(m.replace(drift_extension=None, diffusion_extension=None), "constant", 0.5)
    assert custom.drift_bar([-2.0])[0] == 0.5 and custom.diffusion_bar([-2.0])[0, 0] == 0.0


def test_custom_extension_needs_functions():
    with pytest.raises(ConfigurationError):
        extend_coefficients(make_model("sir").model, "custom")


def test_orthant_boundary_counts_as_outside():
    x = np.array([[1.0, 0.0], [1.0, 2.0], [-1.0, 3.0]])
    np.testing.assert_array_equal(orthant_member(x), [False, True, False])
    np.testing.assert_array_equal(orthant_distance(x), [0.0, 1.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["sir", "brusselator", "volatility", "cir", "lorenz", "psychology", "predator_prey"]),
       st.data())
def test_extensions_defined_everywhere(name, data):
    m = make_model(name).model
    x = data.draw(arrays(float, (m.dim_state,), elements=st.floats(-1e6, 1e6)))
    with np.errstate(all="ignore"):
        mu, sig = m.drift_bar(x), m.diffusion_bar(x)
    assert mu.shape == (m.dim_state,)
    assert sig.shape == (m.dim_state, m.dim_noise)
    if m.member(x):
        np.testing.assert_array_equal(mu, m.drift(x))
