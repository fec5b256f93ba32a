from .engine.finiteDifference import FDConfig, ComparisonResult, compare_jacobians, finite_difference_jacobian, verify_jacobian
from .engine.instrumentation import CountingModel
from .engine.jacobianForward import JacobianTrace, jacobian_at_layer, jacobian_forward, perturbation_response
from .explain.sensitivity import SensitivityReport, build_report, top_k
from .model.activations import ActivationSpec, activation_apply, activation_jacobian
from .model.layeredModel import LayerDef, LayeredModel, fold_bias, forward, split_model, truncate_model, validate_model
from .utils.matrixFiles import emit_matrix, parse_matrix, parse_vector
from .utils.modelFiles import load_model, save_model
