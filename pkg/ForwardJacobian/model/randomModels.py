import numpy as np
from typing import List, Optional, Sequence, Union

from .activations import ActivationSpec
from .layeredModel import LayerDef, LayeredModel, assemble_model

SMOOTH_KINDS = ["identity", "logistic", "tanh", "softplus"]


def _asSpec(activation: Union[str, ActivationSpec]) -> ActivationSpec:
    if isinstance(activation, ActivationSpec):
        return activation
    return ActivationSpec(activation)


def random_model(seed: int, widths: Sequence[int], activations: Sequence[Union[str, ActivationSpec]],
                 low: float = -1.0, high: float = 1.0, bias: bool = False) -> LayeredModel:
    """Creates a model with weights drawn uniformly from [low, high).

    Args:
        seed (int): seed for numpy's default_rng, the same seed always gives the same model
        widths (Sequence[int]): n^[1], ..., n^[L]
        activations (Sequence): one kind name or ActivationSpec per weighted layer (L-1 of them)
        bias (bool): also draw a bias per layer, which gets folded
    Example:
        random_model(7, [4, 5, 5, 3], ["tanh", "tanh", "softmax"])
    """
    if len(activations) != len(widths) - 1:
        raise ValueError(f"need {len(widths) - 1} activations for widths {list(widths)}, got {len(activations)}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, activation in enumerate(activations):
        weights = rng.uniform(low, high, size=(widths[i + 1], widths[i]))
        b = rng.uniform(low, high, size=widths[i + 1]) if bias else None
        layers.append((weights, b, _asSpec(activation)))
    return assemble_model(widths[0], layers)


def random_smooth_model(seed: int, min_depth: int = 2, max_depth: int = 5, max_width: int = 8,
                        softmax_last: Optional[bool] = None) -> LayeredModel:
    """Random depth (L in [min_depth, max_depth]), widths in 1..max_width and smooth activations.

    softmax_last=None lets the seed decide whether the output layer is softmax.
    """
    rng = np.random.default_rng(seed)
    depth = int(rng.integers(min_depth, max_depth + 1))
    widths = [int(w) for w in rng.integers(1, max_width + 1, size=depth)]
    kinds: List[str] = [SMOOTH_KINDS[int(k)] for k in rng.integers(0, len(SMOOTH_KINDS), size=depth - 1)]
    if softmax_last is None:
        softmax_last = bool(rng.integers(0, 2))
    if softmax_last:
        kinds[-1] = "softmax"
    return random_model(int(rng.integers(0, 2**31)), widths, kinds)


def random_linear_model(seed: int, widths: Sequence[int]) -> LayeredModel:
    return random_model(seed, widths, ["identity"] * (len(widths) - 1))


def single_layer_model(weights, activation: Union[str, ActivationSpec] = "identity") -> LayeredModel:
    """Model with one weighted layer, convenient for small hand-written examples."""
    layer = LayerDef(weights, _asSpec(activation))
    return LayeredModel((layer,), layer.columns)
