from typing import Optional, Sequence


class JacobianError(Exception):
    '''Base class for every failure raised by ForwardJacobian'''


class DimensionError(JacobianError):
    '''A vector or matrix does not have the shape the model expects'''

    def __init__(self, message: str, layer: Optional[int] = None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class InvalidModelError(DimensionError):
    '''validate_model reported at least one violation'''

    def __init__(self, violations: Sequence):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"model is invalid: {lines}")


class NonFiniteError(JacobianError):
    '''A NaN or Inf showed up in an input, an intermediate or a probe'''

    def __init__(self, message: str, layer: Optional[int] = None, probe: Optional[int] = None):
        self.layer = layer
        self.probe = probe
        prefix = []
        if probe is not None:
            prefix.append(f"probe {probe}")
        if layer is not None:
            prefix.append(f"layer {layer}")
        if prefix:
            message = ", ".join(prefix) + ": " + message
        super().__init__(message)


class SingularityError(JacobianError):
    '''An activation was differentiated exactly at a kink under the reject policy

    layer is None when the activation was evaluated on its own, outside a model.
    coordinate is 1-based.
    '''

    def __init__(self, coordinate: int, layer: Optional[int] = None, kind: str = "relu"):
        self.coordinate = coordinate
        self.layer = layer
        self.kind = kind
        where = f"coordinate {coordinate}"
        if layer is not None:
            where = f"layer {layer}, " + where
        super().__init__(f"{kind} has a singular point at z=0 ({where}) and relu_zero_policy is 'reject'")

    def atLayer(self, layer: int) -> "SingularityError":
        return SingularityError(self.coordinate, layer=layer, kind=self.kind)


class ModelFileError(JacobianError):
    '''The model document could not be parsed or broke the schema'''

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.field = field
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        elif field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class MatrixFormatError(JacobianError):
    '''A CSV dump contained a token that is not a finite decimal number'''

    def __init__(self, message: str, column: Optional[int] = None, row: Optional[int] = None):
        self.column = column
        self.row = row
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
