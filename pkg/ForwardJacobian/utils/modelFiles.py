"""
JSON model file format, schema version "1".

    {
      "schema_version": "1",
      "input_dim": 2,
      "layers": [
        {"weights": [[1, 2]], "bias": [0.5],
         "activation": {"kind": "leaky_relu", "alpha": 0.01, "relu_zero_policy": "derivative_zero"}}
      ]
    }

Parsing is strict: unknown or repeated keys are rejected, and so is a value of
the wrong JSON type (a string or boolean where a number belongs, 2.0 for
input_dim). Integers are fine wherever a real is expected. Biases are folded
into the weights at load time.
"""
import json
import logging
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, FiniteFloat, PositiveInt, ValidationError, field_validator

from ..exceptions import ModelFileError
from ..model.activations import DEFAULT_RELU_ZERO_POLICY, KINKED_KINDS, ActivationSpec
from ..model.layeredModel import LayeredModel, assemble_model, disassemble_model, require_valid

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


class ActivationEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)

    kind: str
    alpha: Optional[FiniteFloat] = None
    relu_zero_policy: Optional[str] = None


class LayerEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)

    weights: List[List[FiniteFloat]]
    bias: Optional[List[FiniteFloat]] = None
    activation: ActivationEntry

    @field_validator("weights")
    @classmethod
    def rectangular(cls, weights):
        if not weights or not weights[0]:
            raise ValueError("weights need at least one row and one column")
        widths = {len(row) for row in weights}
        if len(widths) != 1:
            raise ValueError(f"ragged weight rows with lengths {sorted(widths)}")
        return weights


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)

    schema_version: Literal["1"] = SCHEMA_VERSION
    input_dim: PositiveInt
    layers: List[LayerEntry]


def _fieldName(loc) -> str:
    # ('layers', 0, 'weights', 1) -> 'layer 1 weights[1]'
    parts = []
    items = list(loc)
    i = 0
    while i < len(items):
        item = items[i]
        if item == "layers" and i + 1 < len(items) and isinstance(items[i + 1], int):
            parts.append(f"layer {items[i + 1] + 1}")
            i += 2
            continue
        if isinstance(item, int) and parts:
            parts[-1] += f"[{item}]"
        else:
            parts.append(str(item))
        i += 1
    return " ".join(parts) or "document"


def _uniqueKeys(pairs) -> dict:
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise ModelFileError(f"duplicate key '{key}'", field=key)
        obj[key] = value
    return obj


def _activation(entry: ActivationEntry, position: int) -> ActivationSpec:
    try:
        return ActivationSpec(entry.kind, entry.alpha, entry.relu_zero_policy or DEFAULT_RELU_ZERO_POLICY)
    except ValueError as e:
        raise ModelFileError(str(e), field=f"layer {position} activation")


def parse_model_document(text) -> LayeredModel:
    """Parse a model document without checking the layer dimensions.

    Raises:
        ModelFileError: invalid UTF-8, JSON syntax error (with line and column),
            duplicate key, value of the wrong JSON type,
            schema violation (with the offending field) or unknown activation kind
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ModelFileError(f"model file is not UTF-8: {e}")
    try:
        raw = json.loads(text, object_pairs_hook=_uniqueKeys)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"syntax error: {e.msg}", line=e.lineno, column=e.colno)
    try:
        document = ModelDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ModelFileError(first["msg"], field=_fieldName(first["loc"]))

    layers = []
    for position, entry in enumerate(document.layers, start=1):
        weights = np.array(entry.weights, dtype=np.float64)
        bias = None if entry.bias is None else np.array(entry.bias, dtype=np.float64)
        if bias is not None and bias.shape[0] != weights.shape[0]:
            raise ModelFileError(f"bias has {bias.shape[0]} entries but weights have {weights.shape[0]} rows",
                                 field=f"layer {position} bias")
        layers.append((weights, bias, _activation(entry.activation, position)))
    if not layers:
        raise ModelFileError("at least one layer is required", field="layers")
    model = assemble_model(document.input_dim, layers)
    if model.bias_folded:
        logger.debug("model file has biases, folded them into a constant-1 input")
    return model


def load_model(text) -> LayeredModel:
    """Parse and validate a model document.

    Raises:
        ModelFileError: see parse_model_document
        InvalidModelError: the layers do not chain, with each violation's layer
    """
    model = parse_model_document(text)
    require_valid(model)
    return model


def _activationEntry(spec: ActivationSpec) -> dict:
    entry = {"kind": spec.kind}
    if spec.kind == "leaky_relu":
        entry["alpha"] = spec.alpha
    if spec.kind in KINKED_KINDS:
        entry["relu_zero_policy"] = spec.relu_zero_policy
    return entry


def save_model(model: LayeredModel) -> str:
    """Canonical document for a model; load_model(save_model(m)) evaluates identically to m."""
    layers = []
    for weights, bias, activation in disassemble_model(model):
        entry = {"weights": np.asarray(weights).tolist()}
        if bias is not None:
            entry["bias"] = np.asarray(bias).tolist()
        entry["activation"] = _activationEntry(activation)
        layers.append(entry)
    document = {"schema_version": SCHEMA_VERSION, "input_dim": model.feature_dim, "layers": layers}
    return json.dumps(document, indent=2) + "\n"


def read_model_file(path: str, validate: bool = True) -> LayeredModel:
    with open(path, "rb") as file:
        content = file.read()
    return load_model(content) if validate else parse_model_document(content)


def write_model_file(model: LayeredModel, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(save_model(model))
