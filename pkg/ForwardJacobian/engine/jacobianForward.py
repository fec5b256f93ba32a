"""
One-pass forward propagation of the Jacobian.

Alongside the activations, J^[l] = J_sigma^[l](z^[l]) W^[l] J^[l-1] is carried
from J^[1] = I_m to J^[L] = J_F(x), so every initial part of the model gets its
Jacobian for free.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import DimensionError, NonFiniteError, SingularityError
from ..model.layeredModel import LayeredModel, evaluate, prepare_instance, require_valid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class JacobianTrace:
    """Everything jacobian_forward computed for one instance.

    per_layer holds (l, J^[l]) for l = 1..L, activations a^[1..L],
    weighted_inputs z^[2..L], and singular_hits the (layer, coordinate) pairs,
    both 1-based, where a relu zero policy was applied.
    """
    full: np.ndarray
    per_layer: Tuple[Tuple[int, np.ndarray], ...]
    activations: Tuple[np.ndarray, ...]
    weighted_inputs: Tuple[np.ndarray, ...]
    singular_hits: Tuple[Tuple[int, int], ...]

    @property
    def depth(self) -> int:
        return len(self.per_layer)


@dataclass(frozen=True, eq=False)
class PerturbationResponse:
    """Linearised versus actual output change for a perturbation delta of the instance."""
    delta: np.ndarray
    predicted: np.ndarray
    actual: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.actual - self.predicted

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))


def _finite(values: np.ndarray, what: str, layer: int):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} is not finite", layer=layer)


def jacobian_forward(model: LayeredModel, x) -> JacobianTrace:
    """Jacobian of the model at x, computed in a single forward traversal.

    Args:
        model (LayeredModel): a valid model (or a CountingModel around one)
        x: instance with model.feature_dim entries
    Returns:
        JacobianTrace: J_F(x) plus every a^[l], z^[l] and J^[l]
    Raises:
        SingularityError: a relu layer with the reject policy hit z=0, annotated with the layer
        NonFiniteError: a value overflowed, annotated with the layer
        DimensionError: x has the wrong length
    """
    require_valid(model)
    a = prepare_instance(model, x)
    J = np.eye(len(a))
    activations = [a]
    weighted_inputs = []
    jacobians = [J]
    hits = []

    for l in range(2, model.depth + 1):
        layer = model.layer(l)
        z = model.weighted_input(l, a)
        _finite(z, "weighted input", l)
        try:
            a = layer.apply(z)
            sigma_jacobian = layer.jacobian(z)
        except SingularityError as e:
            raise e.atLayer(l) from e
        except NonFiniteError as e:
            raise NonFiniteError(str(e), layer=l) from e
        _finite(a, "activation", l)

        # both associations are exact, take the one with fewer flops
        W = layer.weights
        if layer.rows <= layer.columns:
            J = sigma_jacobian.left_multiply(W) @ J
            logger.debug("layer %d (%s): (J_sigma W) J", l, layer.activation.kind)
        else:
            J = sigma_jacobian.left_multiply(W @ J)
            logger.debug("layer %d (%s): J_sigma (W J)", l, layer.activation.kind)
        _finite(J, "Jacobian", l)

        hits.extend((l, c) for c in sigma_jacobian.singular_coordinates)
        weighted_inputs.append(z)
        activations.append(a)
        jacobians.append(J)

    if hits:
        logger.warning("singular points resolved by relu_zero_policy at (layer, coordinate) %s", hits)
    return _buildTrace(model, jacobians, activations, weighted_inputs, hits)


def _buildTrace(model, jacobians, activations, weighted_inputs, hits) -> JacobianTrace:
    L = model.depth
    if model.bias_folded:
        # drop the constant input column everywhere and the carried row below layer L
        jacobians = [J[:-1, :-1] if l < L else J[:, :-1] for l, J in enumerate(jacobians, start=1)]
        activations = [a[:-1] if l < L else a for l, a in enumerate(activations, start=1)]
        weighted_inputs = [z[:-1] if l < L else z for l, z in enumerate(weighted_inputs, start=2)]
    return JacobianTrace(full=jacobians[-1],
                         per_layer=tuple(enumerate(jacobians, start=1)),
                         activations=tuple(activations),
                         weighted_inputs=tuple(weighted_inputs),
                         singular_hits=tuple(hits))


def jacobian_at_layer(trace: JacobianTrace, l: int) -> np.ndarray:
    """J^[l], the Jacobian of the model's initial part up to network layer l."""
    if not 1 <= l <= trace.depth:
        raise DimensionError(f"layer {l} out of range 1..{trace.depth}")
    return trace.per_layer[l - 1][1]


def perturbation_response(model: LayeredModel, x, delta, trace: Optional[JacobianTrace] = None) -> PerturbationResponse:
    """Compare J_F(x) delta with F(x + delta) - F(x).

    For a small delta the residual shrinks quadratically on smooth models; a large
    residual means the instance sits where the model is far from linear.
    """
    x = np.asarray(x, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != x.shape:
        raise DimensionError(f"perturbation has shape {delta.shape} but the instance has {x.shape}")
    if trace is None:
        trace = jacobian_forward(model, x)
    predicted = trace.full @ delta
    actual = evaluate(model, x + delta) - trace.activations[-1]
    return PerturbationResponse(delta=delta, predicted=predicted, actual=actual)
