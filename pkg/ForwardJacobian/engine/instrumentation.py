import threading

import numpy as np

from ..model.layeredModel import LayeredModel


class CountingModel:
    """Wraps a LayeredModel and counts weighted-input evaluations z^[l] = W^[l] a^[l-1].

    Every operation that accepts a LayeredModel accepts this wrapper too. The
    counter is guarded by a lock so concurrent callers still get an exact total.

    Example:
        counted = CountingModel(model)
        finite_difference_jacobian(counted, x, FDConfig(scheme="forward"))
        counted.model_evaluations  # m + 1
    """

    def __init__(self, model: LayeredModel):
        self.model = model
        self._lock = threading.Lock()
        self.weighted_input_calls = 0

    def __getattr__(self, name):
        # only reached for attributes the wrapper itself does not define
        return getattr(self.model, name)

    def weighted_input(self, l: int, a: np.ndarray) -> np.ndarray:
        with self._lock:
            self.weighted_input_calls += 1
        return self.model.weighted_input(l, a)

    @property
    def model_evaluations(self) -> int:
        """Complete passes through the model (each pass evaluates L-1 weighted inputs)."""
        return self.weighted_input_calls // len(self.model.layers)

    def reset(self):
        with self._lock:
            self.weighted_input_calls = 0
