"""
Activation functions and their exact Jacobian matrices.

Every supported kind comes as a pair: the value map sigma: R^n -> R^n and the
procedure returning sigma's n x n Jacobian at a point z. Elementwise kinds keep
only the diagonal; softmax is the one genuinely multivariate kind.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..exceptions import DimensionError, NonFiniteError, SingularityError

logger = logging.getLogger(__name__)

ACTIVATION_KINDS = ("identity", "logistic", "tanh", "softplus", "relu", "leaky_relu", "softmax")
ELEMENTWISE_KINDS = ("identity", "logistic", "tanh", "softplus", "relu", "leaky_relu")
KINKED_KINDS = ("relu", "leaky_relu")  # not differentiable at z=0
RELU_ZERO_POLICIES = ("derivative_zero", "derivative_one", "reject")

DEFAULT_LEAKY_ALPHA = 0.01  # slope of leaky_relu for z < 0 when the model file gives none
DEFAULT_RELU_ZERO_POLICY = "derivative_zero"
SOFTPLUS_LINEAR_THRESHOLD = 30.0  # above this softplus is evaluated as z + log1p(exp(-z))


@dataclass(frozen=True)
class ActivationSpec:
    """Tagged activation kind for one layer.

    Args:
        kind (str): one of ACTIVATION_KINDS.
        alpha (float, optional): negative-side slope, leaky_relu only.
        relu_zero_policy (str): derivative used at exactly z=0 by relu/leaky_relu,
            one of RELU_ZERO_POLICIES. Ignored by the other kinds.
    """
    kind: str
    alpha: Optional[float] = None
    relu_zero_policy: str = DEFAULT_RELU_ZERO_POLICY

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind '{self.kind}', expected one of {', '.join(ACTIVATION_KINDS)}")
        if self.relu_zero_policy not in RELU_ZERO_POLICIES:
            raise ValueError(f"unknown relu_zero_policy '{self.relu_zero_policy}', "
                             f"expected one of {', '.join(RELU_ZERO_POLICIES)}")
        if self.kind == "leaky_relu":
            alpha = DEFAULT_LEAKY_ALPHA if self.alpha is None else float(self.alpha)
            if not np.isfinite(alpha) or alpha < 0:
                raise ValueError(f"leaky_relu alpha must be finite and >= 0, got {alpha}")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            raise ValueError(f"alpha is only meaningful for leaky_relu, not '{self.kind}'")

    @property
    def elementwise(self) -> bool:
        return self.kind in ELEMENTWISE_KINDS

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha} if self.kind == "leaky_relu" else {}

    def withPolicy(self, policy: str) -> "ActivationSpec":
        """Same activation with another relu_zero_policy (no-op for smooth kinds)."""
        if self.kind not in KINKED_KINDS:
            return self
        return ActivationSpec(self.kind, self.alpha, policy)


@dataclass(frozen=True)
class ActivationJacobian:
    """Jacobian of an activation at one point.

    Elementwise kinds store only `diagonal`; softmax stores `dense`.
    singular_coordinates holds the 1-based coordinates where a relu kink was
    resolved by the zero policy.
    """
    diagonal: Optional[np.ndarray] = None
    dense: Optional[np.ndarray] = None
    singular_coordinates: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def size(self) -> int:
        return len(self.diagonal) if self.diagonal is not None else self.dense.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        return np.diag(self.diagonal)

    @property
    def singular_hit(self) -> bool:
        return len(self.singular_coordinates) > 0

    def left_multiply(self, other: np.ndarray) -> np.ndarray:
        """Return J @ other; a diagonal J is applied as a row scaling."""
        if self.diagonal is not None:
            return self.diagonal[:, None] * other
        return self.dense @ other

    def withPassthrough(self) -> "ActivationJacobian":
        """Extend by one trailing coordinate whose derivative is exactly 1."""
        if self.diagonal is not None:
            return ActivationJacobian(diagonal=np.append(self.diagonal, 1.0),
                                      singular_coordinates=self.singular_coordinates)
        n = self.dense.shape[0]
        dense = np.zeros((n + 1, n + 1))
        dense[:n, :n] = self.dense
        dense[n, n] = 1.0
        return ActivationJacobian(dense=dense, singular_coordinates=self.singular_coordinates)


def _asFiniteVector(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionError(f"activation input must be a vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        bad = int(np.flatnonzero(~np.isfinite(z))[0]) + 1
        raise NonFiniteError(f"non-finite activation input at coordinate {bad}")
    return z


def _logistic(z: np.ndarray) -> np.ndarray:
    # exp(-log(1 + exp(-z))) never overflows
    return np.exp(-np.logaddexp(0.0, -z))


def _softplus(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    big = z > SOFTPLUS_LINEAR_THRESHOLD
    out[big] = z[big] + np.log1p(np.exp(-z[big]))
    out[~big] = np.log1p(np.exp(z[~big]))
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def activation_apply(spec: ActivationSpec, z) -> np.ndarray:
    """Evaluate sigma(z).

    The reject policy never fires here; it only concerns the Jacobian.

    Raises:
        NonFiniteError: z has a NaN or Inf entry.
    """
    z = _asFiniteVector(z)
    kind = spec.kind
    if kind == "identity":
        return z.copy()
    if kind == "logistic":
        return _logistic(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "softplus":
        return _softplus(z)
    if kind == "relu":
        return np.where(z > 0, z, 0.0)
    if kind == "leaky_relu":
        return np.where(z >= 0, z, spec.alpha * z)
    if kind == "softmax":
        if len(z) < 1:
            raise DimensionError("softmax needs at least one coordinate")
        return _softmax(z)
    raise ValueError(f"unknown activation kind '{kind}'")


def _kinkDerivative(spec: ActivationSpec, z: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
    negative_slope = 0.0 if spec.kind == "relu" else spec.alpha
    d = np.where(z > 0, 1.0, negative_slope)
    zeros = np.flatnonzero(z == 0.0)
    if len(zeros) == 0:
        return d, ()
    if spec.relu_zero_policy == "reject":
        raise SingularityError(int(zeros[0]) + 1, kind=spec.kind)
    # left-hand derivative for derivative_zero, right-hand for derivative_one
    d[zeros] = negative_slope if spec.relu_zero_policy == "derivative_zero" else 1.0
    coordinates = tuple(int(i) + 1 for i in zeros)
    logger.debug("%s evaluated at its kink, coordinates %s resolved by %s",
                 spec.kind, coordinates, spec.relu_zero_policy)
    return d, coordinates


def activation_jacobian(spec: ActivationSpec, z) -> ActivationJacobian:
    """Exact Jacobian of sigma at z.

    Elementwise kinds give diag(sigma'(z_i)); softmax gives diag(s) - s s^T
    with s = softmax(z).

    Raises:
        SingularityError: relu/leaky_relu with relu_zero_policy='reject' and
            some z_i exactly 0.
        NonFiniteError: z has a NaN or Inf entry.
    """
    z = _asFiniteVector(z)
    kind = spec.kind
    if kind == "identity":
        return ActivationJacobian(diagonal=np.ones_like(z))
    if kind == "logistic":
        s = _logistic(z)
        return ActivationJacobian(diagonal=s * (1.0 - s))
    if kind == "tanh":
        t = np.tanh(z)
        return ActivationJacobian(diagonal=1.0 - t * t)
    if kind == "softplus":
        return ActivationJacobian(diagonal=_logistic(z))
    if kind in KINKED_KINDS:
        d, coordinates = _kinkDerivative(spec, z)
        return ActivationJacobian(diagonal=d, singular_coordinates=coordinates)
    if kind == "softmax":
        s = _softmax(z)
        return ActivationJacobian(dense=np.diag(s) - np.outer(s, s))
    raise ValueError(f"unknown activation kind '{kind}'")
