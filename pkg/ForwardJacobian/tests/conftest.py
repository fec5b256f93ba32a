import json

import numpy as np
import pytest
from hypothesis import settings

from ForwardJacobian.model.randomModels import random_model
from ForwardJacobian.utils.modelFiles import save_model

settings.register_profile("numeric", deadline=None, print_blob=True)
settings.load_profile("numeric")

SEEDED_INSTANCE = [0.1, -0.2, 0.3, -0.4]


@pytest.fixture
def seeded_model():
    """4 -> 5 -> 5 -> 3, tanh / tanh / softmax, weights uniform in [-1, 1) from seed 7."""
    return random_model(7, [4, 5, 5, 3], ["tanh", "tanh", "softmax"])


@pytest.fixture
def seeded_instance():
    return np.array(SEEDED_INSTANCE)


@pytest.fixture
def minimal_document():
    return json.dumps({"input_dim": 2, "layers": [{"weights": [[1, 2]], "activation": {"kind": "identity"}}]})


@pytest.fixture
def model_path(tmp_path):
    """Writes a model to tmp_path and returns the file name."""
    def write(model_or_text, name="model.json"):
        path = tmp_path / name
        text = model_or_text if isinstance(model_or_text, str) else save_model(model_or_text)
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write
