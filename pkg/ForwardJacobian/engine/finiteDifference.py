"""
Classical finite-difference Jacobian, the independent baseline for jacobian_forward.

The forward scheme evaluates the model m+1 times, the central scheme 2m times.
"""
import logging
from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import DimensionError, NonFiniteError
from ..model.activations import KINKED_KINDS
from ..model.layeredModel import LayeredModel, prepare_instance, propagate, require_valid
from .jacobianForward import JacobianTrace, jacobian_forward

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-5  # absolute step, not scaled by |x_j|
DEFAULT_FD_SCHEME = "central"
DEFAULT_TOLERANCE = 1e-5  # absolute, on the largest entrywise difference
KINK_MARGIN = 1e-4  # relu pre-activations closer than this to 0 make FD unreliable


class FDConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    step: float = Field(DEFAULT_FD_STEP, gt=0, allow_inf_nan=False)
    scheme: Literal["forward", "central"] = DEFAULT_FD_SCHEME


@dataclass(frozen=True)
class ComparisonResult:
    """Entrywise discrepancy between two same-shape matrices.

    argmax_location is the 1-based (row, column) of max_abs_diff.
    """
    max_abs_diff: float
    max_rel_diff: float
    argmax_location: Tuple[int, int]
    within_tolerance: bool
    tolerance: float

    def asDict(self) -> dict:
        return {"max_abs_diff": self.max_abs_diff,
                "max_rel_diff": self.max_rel_diff,
                "argmax_row": self.argmax_location[0],
                "argmax_col": self.argmax_location[1],
                "within_tolerance": self.within_tolerance,
                "tolerance": self.tolerance}


def _probe(model: LayeredModel, x: np.ndarray, index: int) -> np.ndarray:
    try:
        activations, _ = propagate(model, prepare_instance(model, x))
    except NonFiniteError as e:
        raise NonFiniteError(str(e), probe=index) from e
    y = activations[-1]
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("model output is not finite", probe=index)
    return y


def finite_difference_jacobian(model: LayeredModel, x, cfg: FDConfig = None) -> np.ndarray:
    """Estimate J_F(x) one input coordinate at a time.

    forward: column j = (F(x + h e_j) - F(x)) / h, m+1 evaluations (probe 0 is x itself)
    central: column j = (F(x + h e_j) - F(x - h e_j)) / 2h, 2m evaluations
        (probes 2j-1 and 2j)

    Raises:
        NonFiniteError: some probe produced a non-finite value, with the probe index
    """
    cfg = cfg or FDConfig()
    require_valid(model)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.feature_dim:
        raise DimensionError(f"instance has shape {x.shape} but the model expects {model.feature_dim} features")
    h = cfg.step
    m = x.shape[0]
    columns = []
    if cfg.scheme == "forward":
        base = _probe(model, x, 0)
        for j in range(m):
            shifted = x.copy()
            shifted[j] += h
            columns.append((_probe(model, shifted, j + 1) - base) / h)
    else:
        for j in range(m):
            plus, minus = x.copy(), x.copy()
            plus[j] += h
            minus[j] -= h
            columns.append((_probe(model, plus, 2 * j + 1) - _probe(model, minus, 2 * j + 2)) / (2 * h))
    logger.debug("%s differences with h=%g over %d features", cfg.scheme, h, m)
    return np.column_stack(columns)


def near_kink(model: LayeredModel, x, margin: float = KINK_MARGIN) -> bool:
    """True when some relu/leaky_relu pre-activation at x lies within margin of 0.

    Finite differences and the policy-valued exact Jacobian legitimately disagree
    there, so comparisons skip such points.
    """
    _, weighted_inputs = propagate(model, prepare_instance(model, x))
    for layer, z in zip(model.layers, weighted_inputs):
        if layer.activation.kind not in KINKED_KINDS:
            continue
        active = z[:layer.outputs]
        if np.any(np.abs(active) < margin):
            return True
    return False


def compare_jacobians(a, b, tolerance: float = DEFAULT_TOLERANCE) -> ComparisonResult:
    """max|a - b|, max|a - b| / (1 + |a|) and whether the former is within tolerance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare a {a.shape} matrix with a {b.shape} matrix")
    if a.size == 0:
        return ComparisonResult(0.0, 0.0, (1, 1), True, tolerance)
    diff = np.abs(a - b)
    if not np.all(np.isfinite(diff)):
        # a NaN never compares as within tolerance
        where = np.unravel_index(int(np.argmax(~np.isfinite(diff))), diff.shape)
        return ComparisonResult(float("inf"), float("inf"), _oneBased(where, a.ndim), False, tolerance)
    where = np.unravel_index(int(np.argmax(diff)), diff.shape)
    max_abs = float(diff[where])
    max_rel = float(np.max(diff / (1.0 + np.abs(a))))
    return ComparisonResult(max_abs, max_rel, _oneBased(where, a.ndim), max_abs <= tolerance, tolerance)


def _oneBased(where, ndim) -> Tuple[int, int]:
    if ndim == 1:
        return (1, int(where[0]) + 1)
    return (int(where[0]) + 1, int(where[1]) + 1)


def verify_jacobian(model: LayeredModel, x, cfg: FDConfig = None,
                    tolerance: float = DEFAULT_TOLERANCE) -> Tuple[JacobianTrace, np.ndarray, ComparisonResult]:
    """Run jacobian_forward and the finite-difference oracle on the same instance and compare them."""
    trace = jacobian_forward(model, x)
    estimate = finite_difference_jacobian(model, x, cfg)
    result = compare_jacobians(trace.full, estimate, tolerance)
    logger.info("exact vs %s differences: max |diff| = %.3g at %s",
                (cfg or FDConfig()).scheme, result.max_abs_diff, result.argmax_location)
    return trace, estimate, result
