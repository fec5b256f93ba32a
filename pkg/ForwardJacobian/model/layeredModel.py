"""
The layered model y = F(x).

Network layer 1 is the input x = a^[1]; layers 2..L each hold a weight matrix
W^[l] (n^[l] x n^[l-1]) and an activation sigma^[l], with
z^[l] = W^[l] a^[l-1] and a^[l] = sigma^[l](z^[l]). There is no bias term:
biases are folded into an extra weight column fed by a constant-1 input.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DimensionError, InvalidModelError, NonFiniteError
from .activations import ActivationJacobian, ActivationSpec, activation_apply, activation_jacobian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """One failed model constraint. layer is the 1-based position in the layers list (0 = whole model)."""
    layer: int
    constraint: str
    message: str

    def __str__(self):
        if self.layer == 0:
            return f"model: {self.message}"
        return f"layer {self.layer}: {self.message}"


@dataclass(frozen=True, eq=False)
class LayerDef:
    """Weight matrix and activation of one weighted layer.

    passthrough marks a layer whose last row is [0 ... 0 1]: its last output
    coordinate carries the constant-1 input of a bias-folded model through the
    activation untouched.
    """
    weights: np.ndarray
    activation: ActivationSpec
    passthrough: bool = False

    def __post_init__(self):
        try:
            weights = np.array(self.weights, dtype=np.float64)
        except ValueError as e:
            raise DimensionError(f"weights are not a rectangular matrix: {e}")
        if weights.ndim != 2:
            raise DimensionError(f"weights must be a 2-D matrix, got {weights.ndim} dimension(s)")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def columns(self) -> int:
        return self.weights.shape[1]

    @property
    def outputs(self) -> int:
        """Row count without the carried constant."""
        return self.rows - 1 if self.passthrough else self.rows

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self.passthrough:
            return np.append(activation_apply(self.activation, z[:-1]), z[-1])
        return activation_apply(self.activation, z)

    def jacobian(self, z: np.ndarray) -> ActivationJacobian:
        if self.passthrough:
            return activation_jacobian(self.activation, z[:-1]).withPassthrough()
        return activation_jacobian(self.activation, z)


@dataclass(frozen=True, eq=False)
class LayeredModel:
    """Immutable feedforward model F: R^m -> R^n.

    Args:
        layers: LayerDefs for network layers 2..L.
        input_dim (int): m = n^[1], counting the constant-1 coordinate when bias_folded.
        bias_folded (bool): the last input coordinate is the constant 1 introduced by
            fold_bias; callers pass feature vectors without it and every reported
            quantity drops it again.
    """
    layers: Tuple[LayerDef, ...]
    input_dim: int
    bias_folded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def depth(self) -> int:
        """L, the number of network layers including the input layer."""
        return len(self.layers) + 1

    @property
    def feature_dim(self) -> int:
        return self.input_dim - 1 if self.bias_folded else self.input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].rows

    @property
    def widths(self) -> List[int]:
        """n^[1..L] as seen by callers (constant coordinate excluded)."""
        return [self.feature_dim] + [layer.outputs for layer in self.layers]

    @cached_property
    def violations(self) -> List[Violation]:
        return validate_model(self)

    def layer(self, l: int) -> LayerDef:
        """LayerDef of network layer l (2 <= l <= L)."""
        if not 2 <= l <= self.depth:
            raise DimensionError(f"network layer {l} out of range 2..{self.depth}")
        return self.layers[l - 2]

    def weighted_input(self, l: int, a: np.ndarray) -> np.ndarray:
        """z^[l] = W^[l] a^[l-1]."""
        return self.layers[l - 2].weights @ a


def validate_model(model: LayeredModel) -> List[Violation]:
    """List every broken model invariant; an empty list means the model is valid."""
    violations = []
    if not isinstance(model.input_dim, (int, np.integer)) or model.input_dim < 1:
        violations.append(Violation(0, "input_dim", f"input_dim must be a positive integer, got {model.input_dim}"))
    if len(model.layers) == 0:
        violations.append(Violation(0, "non_empty", "a model needs at least one weighted layer"))
        return violations
    if model.bias_folded and model.input_dim < 2:
        violations.append(Violation(0, "bias_folded", "a bias-folded model needs at least one feature besides the constant"))

    expected = model.input_dim
    last = len(model.layers)
    for position, layer in enumerate(model.layers, start=1):
        w = layer.weights
        if w.shape[0] < 1 or w.shape[1] < 1:
            violations.append(Violation(position, "shape", f"weights need at least one row and one column, got {w.shape[0]}x{w.shape[1]}"))
        if not np.all(np.isfinite(w)):
            row, col = np.argwhere(~np.isfinite(w))[0]
            violations.append(Violation(position, "finite", f"weight ({row + 1}, {col + 1}) is not finite"))
        if isinstance(expected, (int, np.integer)) and w.shape[1] != expected:
            violations.append(Violation(position, "chain",
                                        f"weights have {w.shape[1]} columns but the previous layer emits {expected}"))
        expected = w.shape[0]

        if layer.passthrough and not model.bias_folded:
            violations.append(Violation(position, "passthrough", "passthrough row in a model without folded biases"))
        if model.bias_folded and position < last and not layer.passthrough:
            violations.append(Violation(position, "passthrough", "hidden layer of a bias-folded model must carry the constant input"))
        if layer.passthrough and position == last:
            violations.append(Violation(position, "passthrough", "the output layer cannot carry the constant input"))
        if layer.passthrough and w.shape[0] >= 1 and w.shape[1] >= 1:
            unit = np.zeros(w.shape[1])
            unit[-1] = 1.0
            if not np.array_equal(w[-1], unit):
                violations.append(Violation(position, "passthrough", "carried row must be [0 ... 0 1]"))
        if layer.outputs < 1 and w.shape[0] >= 1:
            violations.append(Violation(position, "arity", f"{layer.activation.kind} has no coordinates to act on"))
    return violations


def require_valid(model: LayeredModel):
    violations = model.violations
    if violations:
        raise InvalidModelError(violations)


def fold_bias(weights, bias) -> np.ndarray:
    """Append bias as the last column of weights.

    The caller must feed the matching input a trailing constant 1.

    Example:
        fold_bias([[1, 2]], [3]) -> [[1, 2, 3]]
    """
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weights.ndim != 2 or bias.ndim != 1:
        raise DimensionError(f"expected a matrix and a vector, got {weights.ndim}-D and {bias.ndim}-D")
    if bias.shape[0] != weights.shape[0]:
        raise DimensionError(f"bias has {bias.shape[0]} entries but weights have {weights.shape[0]} rows")
    return np.hstack([weights, bias[:, None]])


def assemble_model(input_dim: int, layers: Sequence[Tuple[np.ndarray, Optional[np.ndarray], ActivationSpec]]) -> LayeredModel:
    """Build the bias-free model from (weights, bias or None, activation) triples.

    Without any bias the layers are used as given. Otherwise every bias is folded
    (missing ones count as zero), the input gains a constant-1 coordinate and each
    hidden layer carries that constant to the next one.
    """
    if all(bias is None for _, bias, _ in layers):
        return LayeredModel(tuple(LayerDef(w, act) for w, _, act in layers), input_dim)

    defs = []
    for position, (weights, bias, activation) in enumerate(layers, start=1):
        weights = np.asarray(weights, dtype=np.float64)
        if bias is None:
            bias = np.zeros(weights.shape[0])
        try:
            augmented = fold_bias(weights, bias)
        except DimensionError as e:
            raise DimensionError(str(e), layer=position)
        carry = position < len(layers)
        if carry:
            unit = np.zeros((1, augmented.shape[1]))
            unit[0, -1] = 1.0
            augmented = np.vstack([augmented, unit])
        defs.append(LayerDef(augmented, activation, passthrough=carry))
    logger.debug("folded biases of %d layer(s) into augmented weights", len(defs))
    return LayeredModel(tuple(defs), input_dim + 1, bias_folded=True)


def disassemble_model(model: LayeredModel) -> List[Tuple[np.ndarray, Optional[np.ndarray], ActivationSpec]]:
    """Inverse of assemble_model: recover (weights, bias, activation) per layer."""
    if not model.bias_folded:
        return [(layer.weights, None, layer.activation) for layer in model.layers]
    out = []
    for layer in model.layers:
        w = layer.weights[:layer.outputs]
        out.append((w[:, :-1], w[:, -1], layer.activation))
    return out


def prepare_instance(model: LayeredModel, x) -> np.ndarray:
    """Check an instance vector and append the constant 1 for bias-folded models."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"instance must be a vector, got shape {x.shape}")
    if x.shape[0] != model.feature_dim:
        raise DimensionError(f"instance has {x.shape[0]} features but the model expects {model.feature_dim}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0]) + 1
        raise NonFiniteError(f"instance feature {bad} is not finite")
    if model.bias_folded:
        return np.append(x, 1.0)
    return x


def strip_constant(model: LayeredModel, l: int, vector: np.ndarray) -> np.ndarray:
    """Drop the carried constant from an activation-shaped vector of network layer l."""
    if model.bias_folded and l < model.depth:
        return vector[:-1]
    return vector


def propagate(model: LayeredModel, x: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Raw pass over a prepared instance: (a^[1..L], z^[2..L]) including any carried constant."""
    activations = [x]
    weighted_inputs = []
    a = x
    for l in range(2, model.depth + 1):
        z = model.weighted_input(l, a)
        if not np.all(np.isfinite(z)):
            raise NonFiniteError("weighted input is not finite", layer=l)
        try:
            a = model.layer(l).apply(z)
        except NonFiniteError as e:
            raise NonFiniteError(str(e), layer=l) from e
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("activation is not finite", layer=l)
        weighted_inputs.append(z)
        activations.append(a)
    return activations, weighted_inputs


def forward(model: LayeredModel, x) -> List[np.ndarray]:
    """Return the activations a^[1..L]; the last one is y = F(x).

    Raises:
        InvalidModelError: the model fails validate_model.
        DimensionError: x does not have feature_dim entries.
        NonFiniteError: x or some layer's value is not finite (with the layer number).
    """
    require_valid(model)
    activations, _ = propagate(model, prepare_instance(model, x))
    return [strip_constant(model, l, a) for l, a in enumerate(activations, start=1)]


def evaluate(model: LayeredModel, x) -> np.ndarray:
    """y = F(x)."""
    return forward(model, x)[-1]


def truncate_model(model: LayeredModel, l: int) -> LayeredModel:
    """The initial part of the model ending at network layer l (2 <= l <= L)."""
    if not 2 <= l <= model.depth:
        raise DimensionError(f"cannot truncate at layer {l}, expected 2..{model.depth}")
    layers = list(model.layers[:l - 1])
    if model.bias_folded and l < model.depth:
        end = layers[-1]
        layers[-1] = LayerDef(end.weights[:-1], end.activation)
    return LayeredModel(tuple(layers), model.input_dim, model.bias_folded)


def split_model(model: LayeredModel, k: int) -> Tuple[LayeredModel, LayeredModel]:
    """Split after network layer k into (layers 2..k, layers k+1..L); 2 <= k <= L-1.

    The suffix takes a^[k] as its input.
    """
    if not 2 <= k <= model.depth - 1:
        raise DimensionError(f"cannot split at layer {k}, expected 2..{model.depth - 1}")
    prefix = truncate_model(model, k)
    suffix_layers = model.layers[k - 1:]
    return prefix, LayeredModel(suffix_layers, model.layers[k - 2].rows, model.bias_folded)


def identity_product(model: LayeredModel) -> np.ndarray:
    """W^[L] ... W^[2]: the Jacobian of the model when every activation is identity."""
    product = model.layers[0].weights
    for layer in model.layers[1:]:
        product = layer.weights @ product
    if model.bias_folded:
        product = product[:, :-1]
    return product


def with_relu_policy(model: LayeredModel, policy: str) -> LayeredModel:
    """Copy of model whose relu/leaky_relu layers all use relu_zero_policy=policy."""
    layers = tuple(LayerDef(layer.weights, layer.activation.withPolicy(policy), layer.passthrough)
                   for layer in model.layers)
    return LayeredModel(layers, model.input_dim, model.bias_folded)
