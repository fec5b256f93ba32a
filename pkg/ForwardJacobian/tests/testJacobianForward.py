import logging

import numpy as np
from pytest import mark, raises

from ForwardJacobian.engine.finiteDifference import FDConfig, finite_difference_jacobian
from ForwardJacobian.engine.instrumentation import CountingModel
from ForwardJacobian.engine.jacobianForward import jacobian_at_layer, jacobian_forward, perturbation_response
from ForwardJacobian.exceptions import DimensionError, NonFiniteError, SingularityError
from ForwardJacobian.model.activations import ActivationSpec
from ForwardJacobian.model.layeredModel import (LayerDef, LayeredModel, assemble_model, identity_product,
                                                split_model, truncate_model)
from ForwardJacobian.model.randomModels import (random_linear_model, random_model, random_smooth_model,
                                                single_layer_model)

IDENTITY = ActivationSpec("identity")


def instance_for(model, seed):
    return np.random.default_rng(seed + 1000).uniform(-1, 1, model.feature_dim)


def test_linear_example():
    model = assemble_model(2, [(np.array([[1.0, 2.0], [3.0, 4.0]]), None, IDENTITY), (np.eye(2), None, IDENTITY)])
    for x in ([0.0, 0.0], [5.0, -3.0]):
        np.testing.assert_array_equal(jacobian_forward(model, x).full, [[1, 2], [3, 4]])


def test_logistic_example():
    trace = jacobian_forward(single_layer_model(np.eye(2), "logistic"), [0, 0])
    np.testing.assert_allclose(trace.full, 0.25 * np.eye(2), rtol=0, atol=1e-15)
    assert trace.singular_hits == ()


def test_seeded_model_matches_differences(seeded_model, seeded_instance):
    trace = jacobian_forward(seeded_model, seeded_instance)
    assert trace.full.shape == (3, 4)
    estimate = finite_difference_jacobian(seeded_model, seeded_instance, FDConfig(step=1e-5))
    np.testing.assert_allclose(trace.full, estimate, rtol=0, atol=1e-6)


def test_trace_contents(seeded_model, seeded_instance):
    trace = jacobian_forward(seeded_model, seeded_instance)
    assert trace.depth == 4
    assert [l for l, _ in trace.per_layer] == [1, 2, 3, 4]
    assert [J.shape for _, J in trace.per_layer] == [(4, 4), (5, 4), (5, 4), (3, 4)]
    assert [a.shape for a in trace.activations] == [(4,), (5,), (5,), (3,)]
    assert [z.shape for z in trace.weighted_inputs] == [(5,), (5,), (3,)]


def test_layer_lookup(seeded_model, seeded_instance):
    trace = jacobian_forward(seeded_model, seeded_instance)
    np.testing.assert_array_equal(jacobian_at_layer(trace, 1), np.eye(4))
    np.testing.assert_array_equal(jacobian_at_layer(trace, 4), trace.full)
    prefix = jacobian_forward(truncate_model(seeded_model, 2), seeded_instance).full
    np.testing.assert_allclose(jacobian_at_layer(trace, 2), prefix, rtol=0, atol=1e-12)
    for l in (0, 5):
        with raises(DimensionError):
            jacobian_at_layer(trace, l)


@mark.parametrize("seed", range(200))
def test_agrees_with_central_differences(seed):
    model = random_smooth_model(seed)
    x = instance_for(model, seed)
    exact = jacobian_forward(model, x).full
    estimate = finite_difference_jacobian(model, x, FDConfig(step=1e-5, scheme="central"))
    assert np.max(np.abs(exact - estimate)) <= 1e-5 * (1 + np.max(np.abs(exact)))


@mark.parametrize("seed", range(50))
def test_linear_models_collapse_to_the_weight_product(seed):
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in rng.integers(1, 9, size=int(rng.integers(2, 6)))]
    model = random_linear_model(seed, widths)
    x = rng.normal(size=widths[0])
    np.testing.assert_allclose(jacobian_forward(model, x).full, identity_product(model), rtol=0, atol=1e-12)


@mark.parametrize("seed", range(50))
def test_chain_rule_across_a_split(seed):
    model = random_smooth_model(seed, min_depth=3)
    x = instance_for(model, seed)
    k = int(np.random.default_rng(seed).integers(2, model.depth))
    prefix, suffix = split_model(model, k)
    prefix_trace = jacobian_forward(prefix, x)
    suffix_trace = jacobian_forward(suffix, prefix_trace.activations[-1])
    full = jacobian_forward(model, x).full
    np.testing.assert_allclose(suffix_trace.full @ prefix_trace.full, full, rtol=0, atol=1e-10)


@mark.parametrize("seed", range(20))
def test_every_layer_is_the_truncated_model_jacobian(seed):
    model = random_smooth_model(seed, min_depth=3)
    x = instance_for(model, seed)
    trace = jacobian_forward(model, x)
    np.testing.assert_array_equal(jacobian_at_layer(trace, 1), np.eye(model.feature_dim))
    for l in range(2, model.depth + 1):
        expected = jacobian_forward(truncate_model(model, l), x).full
        np.testing.assert_allclose(jacobian_at_layer(trace, l), expected, rtol=0, atol=1e-12)


@mark.parametrize("m", [1, 4, 16, 64])
def test_evaluation_counts(m):
    counted = CountingModel(random_model(m, [m, 3, 2], ["tanh", "logistic"]))
    x = np.linspace(-0.5, 0.5, m)

    jacobian_forward(counted, x)
    assert counted.weighted_input_calls == 2
    assert counted.model_evaluations == 1

    counted.reset()
    finite_difference_jacobian(counted, x, FDConfig(scheme="forward"))
    assert counted.weighted_input_calls == (m + 1) * 2
    assert counted.model_evaluations == m + 1

    counted.reset()
    finite_difference_jacobian(counted, x, FDConfig(scheme="central"))
    assert counted.model_evaluations == 2 * m


@mark.parametrize("seed", range(20))
def test_softmax_output_columns_sum_to_zero(seed):
    model = random_smooth_model(seed, softmax_last=True)
    full = jacobian_forward(model, instance_for(model, seed)).full
    np.testing.assert_allclose(full.sum(axis=0), 0, atol=1e-10)


def test_folded_affine_layer():
    rng = np.random.default_rng(8)
    W, b = rng.uniform(-1, 1, (3, 2)), rng.uniform(-1, 1, 3)
    model = assemble_model(2, [(W, b, ActivationSpec("tanh"))])
    x = np.array([0.3, 0.6])
    expected = (1 - np.tanh(W @ x + b) ** 2)[:, None] * W
    trace = jacobian_forward(model, x)
    np.testing.assert_allclose(trace.full, expected, rtol=0, atol=1e-12)
    assert trace.full.shape == (3, 2)


def test_folded_deep_model_matches_differences():
    model = random_model(21, [3, 4, 4, 2], ["softplus", "tanh", "softmax"], bias=True)
    x = np.array([0.1, 0.7, -0.3])
    trace = jacobian_forward(model, x)
    assert [J.shape for _, J in trace.per_layer] == [(3, 3), (4, 3), (4, 3), (2, 3)]
    assert [a.shape for a in trace.activations] == [(3,), (4,), (4,), (2,)]
    np.testing.assert_allclose(trace.full, finite_difference_jacobian(model, x), rtol=0, atol=1e-6)


def test_relu_kink_is_recorded(caplog):
    model = single_layer_model([[1.0, -1.0]], "relu")
    with caplog.at_level(logging.WARNING):
        trace = jacobian_forward(model, [1.0, 1.0])
    assert trace.singular_hits == ((2, 1),)
    np.testing.assert_array_equal(trace.full, [[0.0, 0.0]])
    assert "relu_zero_policy" in caplog.text

    right = single_layer_model([[1.0, -1.0]], ActivationSpec("relu", relu_zero_policy="derivative_one"))
    np.testing.assert_array_equal(jacobian_forward(right, [1.0, 1.0]).full, [[1.0, -1.0]])


def test_reject_policy_names_the_layer():
    strict = ActivationSpec("relu", relu_zero_policy="reject")
    model = LayeredModel((LayerDef(np.eye(2), IDENTITY), LayerDef([[1.0, -1.0], [1.0, 1.0]], strict)), 2)
    with raises(SingularityError) as e:
        jacobian_forward(model, [2.0, 2.0])
    assert e.value.layer == 3
    assert e.value.coordinate == 1
    jacobian_forward(model, [2.0, 1.0])


def test_overflow_names_the_layer():
    model = LayeredModel((LayerDef([[1e200]], IDENTITY), LayerDef([[1e200]], ActivationSpec("tanh"))), 1)
    with raises(NonFiniteError) as e:
        jacobian_forward(model, [1.0])
    assert e.value.layer == 3


def test_wrong_instance_length(seeded_model):
    with raises(DimensionError):
        jacobian_forward(seeded_model, [0.1, 0.2])


def test_perturbation_response():
    linear = random_linear_model(4, [3, 4, 2])
    response = perturbation_response(linear, [0.1, 0.2, 0.3], [0.5, -1.0, 2.0])
    assert response.residual_norm < 1e-12

    model = random_model(9, [3, 4, 2], ["tanh", "logistic"])
    x = np.array([0.2, -0.4, 0.6])
    direction = np.array([1.0, -2.0, 0.5])
    trace = jacobian_forward(model, x)
    coarse = perturbation_response(model, x, 1e-2 * direction, trace).residual_norm
    fine = perturbation_response(model, x, 1e-3 * direction, trace).residual_norm
    assert fine < coarse / 20
    with raises(DimensionError):
        perturbation_response(model, x, [1.0])
