"""
Command-line front end.

    python main.py jacobian --model model.json --input "0.1,-0.2,0.3"
    python main.py check --model model.json --input @instance.csv --fd-scheme forward
    python main.py report --model model.json --input @instance.csv --format json --top-k 3

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 I/O or
parse failure, 2 validation failure, 3 singular point under the reject policy,
4 check outside tolerance.
"""
import argparse
import json
import logging
import sys
from typing import Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .engine.finiteDifference import DEFAULT_TOLERANCE, FDConfig, verify_jacobian
from .engine.jacobianForward import jacobian_at_layer, jacobian_forward
from .exceptions import DimensionError, MatrixFormatError, ModelFileError, NonFiniteError, SingularityError
from .explain.sensitivity import build_report, report_to_dict, report_to_frame
from .model.layeredModel import forward, validate_model, with_relu_policy
from .utils.matrixFiles import emit_matrix, format_number, read_instance
from .utils.modelFiles import read_model_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1  # unreadable file, bad syntax or schema, malformed number, bad command line
EXIT_INVALID = 2  # model, instance or --layer fail validation
EXIT_SINGULAR = 3  # relu kink hit with --strict-singularities or a reject policy
EXIT_TOLERANCE = 4  # check: exact and finite-difference Jacobians disagree

SUBCOMMANDS = ("validate", "forward", "jacobian", "check", "report")


class UsageError(Exception):
    '''The command line could not be parsed'''


class CliInvocation(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: Literal["validate", "forward", "jacobian", "check", "report"]
    model_path: str
    input: Optional[str] = None
    layer: Optional[int] = None
    fd_step: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    fd_scheme: Optional[Literal["forward", "central"]] = None
    tolerance: Optional[float] = Field(None, ge=0, allow_inf_nan=False)
    output_format: Literal["csv", "json"] = "csv"
    k: Optional[int] = Field(None, ge=1)
    strict_singularities: bool = False
    verbose: bool = False

    @model_validator(mode="after")
    def flagsMatchSubcommand(self):
        sub = self.subcommand
        if sub == "validate" and self.input is not None:
            raise ValueError("validate takes no --input")
        if sub != "validate" and self.input is None:
            raise ValueError(f"{sub} needs --input")
        if self.layer is not None and sub != "jacobian":
            raise ValueError("--layer only applies to jacobian")
        if (self.fd_step is not None or self.fd_scheme is not None or self.tolerance is not None) and sub != "check":
            raise ValueError("--fd-step, --fd-scheme and --tolerance only apply to check")
        if self.k is not None and sub != "report":
            raise ValueError("--top-k only applies to report")
        return self

    @classmethod
    def fromNamespace(cls, namespace: argparse.Namespace) -> "CliInvocation":
        inputs = namespace.input or []
        if len(inputs) > 1:
            raise UsageError("--input given more than once; pass either an inline CSV or one @FILE")
        return cls(subcommand=namespace.subcommand,
                   model_path=namespace.model,
                   input=inputs[0] if inputs else None,
                   layer=namespace.layer,
                   fd_step=namespace.fd_step,
                   fd_scheme=namespace.fd_scheme,
                   tolerance=namespace.tolerance,
                   output_format=namespace.format,
                   k=namespace.top_k,
                   strict_singularities=namespace.strict_singularities,
                   verbose=namespace.verbose)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def buildParser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ForwardJacobian",
                     description="Exact Jacobians of layered models by one forward pass, "
                                 "checked against finite differences.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--model", required=True, metavar="PATH", help="JSON model file")
    parser.add_argument("--input", action="append", metavar="CSV|@FILE",
                        help="instance as inline CSV or @path to a one-line CSV file")
    parser.add_argument("--layer", type=int, metavar="N", help="jacobian: report J^[N] (1 = input layer)")
    parser.add_argument("--fd-step", type=float, metavar="REAL", help="check: finite-difference step")
    parser.add_argument("--fd-scheme", choices=["forward", "central"], help="check: difference scheme")
    parser.add_argument("--tolerance", type=float, metavar="REAL",
                        help=f"check: largest accepted |difference| (default {DEFAULT_TOLERANCE})")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--top-k", type=int, metavar="N", help="report: keep the N highest ranked indices")
    parser.add_argument("--strict-singularities", action="store_true",
                        help="fail (exit 3) instead of choosing a relu derivative at z=0")
    parser.add_argument("--verbose", action="store_true",
                        help="forward: print every layer's activation; debug diagnostics")
    return parser


def configureLogging(verbose: bool):
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(logging.DEBUG if verbose else logging.WARNING)


def _frameText(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=format_number, lineterminator="\n")


def _jsonText(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _runValidate(invocation: CliInvocation):
    model = read_model_file(invocation.model_path, validate=False)
    violations = validate_model(model)
    if invocation.output_format == "json":
        text = _jsonText({"valid": not violations,
                          "violations": [{"layer": v.layer, "constraint": v.constraint, "message": v.message}
                                         for v in violations]})
    elif violations:
        text = _frameText(pd.DataFrame([{"layer": v.layer, "constraint": v.constraint, "message": v.message}
                                        for v in violations]))
    else:
        text = "OK\n"
    for v in violations:
        logger.warning("%s", v)
    return text, (EXIT_INVALID if violations else EXIT_OK)


def _runForward(invocation: CliInvocation, model, x):
    activations = forward(model, x)
    if invocation.output_format == "json":
        payload = {"output": activations[-1].tolist()}
        if invocation.verbose:
            payload["activations"] = [a.tolist() for a in activations]
        return _jsonText(payload), EXIT_OK
    if not invocation.verbose:
        return emit_matrix(activations[-1]) + "\n", EXIT_OK
    rows = [{"layer": l, "coordinate": i, "value": float(v)}
            for l, a in enumerate(activations, start=1) for i, v in enumerate(a, start=1)]
    return _frameText(pd.DataFrame(rows, columns=["layer", "coordinate", "value"])), EXIT_OK


def _runJacobian(invocation: CliInvocation, model, x):
    trace = jacobian_forward(model, x)
    layer = invocation.layer if invocation.layer is not None else trace.depth
    if not 1 <= layer <= trace.depth:
        raise DimensionError(f"--layer {layer} is out of range 1..{trace.depth}")
    matrix = jacobian_at_layer(trace, layer)
    if invocation.output_format == "json":
        return _jsonText({"layer": layer, "jacobian": matrix.tolist(),
                          "singular_hits": [list(hit) for hit in trace.singular_hits]}), EXIT_OK
    return emit_matrix(matrix) + "\n", EXIT_OK


def _runCheck(invocation: CliInvocation, model, x):
    settings = {}
    if invocation.fd_step is not None:
        settings["step"] = invocation.fd_step
    if invocation.fd_scheme is not None:
        settings["scheme"] = invocation.fd_scheme
    tolerance = DEFAULT_TOLERANCE if invocation.tolerance is None else invocation.tolerance
    _, _, result = verify_jacobian(model, x, FDConfig(**settings), tolerance)
    if invocation.output_format == "json":
        text = _jsonText(result.asDict())
    else:
        text = _frameText(pd.DataFrame([result.asDict()]))
    if not result.within_tolerance:
        logger.warning("max |difference| %s at %s exceeds tolerance %s",
                       format_number(result.max_abs_diff), result.argmax_location, format_number(tolerance))
        return text, EXIT_TOLERANCE
    return text, EXIT_OK


def _runReport(invocation: CliInvocation, model, x):
    trace = jacobian_forward(model, x)
    # probabilities out of a softmax layer share a unit, so rows are comparable
    same_unit = model.layers[-1].activation.kind == "softmax"
    report = build_report(trace.full, same_unit=same_unit, singular_hits=trace.singular_hits)
    if invocation.output_format == "json":
        return _jsonText(report_to_dict(report, invocation.k)), EXIT_OK
    return _frameText(report_to_frame(report, invocation.k)), EXIT_OK


_HANDLERS = {"forward": _runForward, "jacobian": _runJacobian, "check": _runCheck, "report": _runReport}


def run(invocation: CliInvocation, stdout=None) -> int:
    """Execute one invocation, write its data to stdout and return the exit status.

    Nothing is written to stdout unless the subcommand produced its full output.
    """
    stdout = stdout or sys.stdout
    try:
        if invocation.subcommand == "validate":
            text, status = _runValidate(invocation)
        else:
            model = read_model_file(invocation.model_path)
            if invocation.strict_singularities:
                model = with_relu_policy(model, "reject")
            x = read_instance(invocation.input)
            text, status = _HANDLERS[invocation.subcommand](invocation, model, x)
    except OSError as e:
        logger.error("cannot read %s: %s", e.filename or invocation.model_path, e.strerror or e)
        return EXIT_IO
    except (ModelFileError, MatrixFormatError) as e:
        logger.error("%s", e)
        return EXIT_IO
    except SingularityError as e:
        logger.error("%s", e)
        return EXIT_SINGULAR
    except (DimensionError, NonFiniteError) as e:
        logger.error("%s", e)
        return EXIT_INVALID
    stdout.write(text)
    stdout.flush()
    return status


def main(argv=None, stdout=None) -> int:
    try:
        namespace = buildParser().parse_args(argv)
        configureLogging(namespace.verbose)
        invocation = CliInvocation.fromNamespace(namespace)
    except UsageError as e:
        logging.getLogger(__name__).error("%s", e)
        return EXIT_IO
    except ValidationError as e:
        logger.error("invalid invocation: %s", e.errors()[0]["msg"])
        return EXIT_IO
    return run(invocation, stdout)
