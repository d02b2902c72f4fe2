"""Exact derivatives for scalar-valued predictors.

Input derivatives (gradient and pure second derivatives) come from
second-order forward-mode jets; parameter gradients come from reverse-mode
accumulation over a recorded trace. See ``jets``, ``tape``, and ``api``.
"""

from . import activations, jets, tape
from .api import (
    DerivativeReport,
    Jet2,
    ParamGradient,
    check_derivatives,
    eval_jet2,
    grad_params,
    jet_batch,
    predict_jets,
    predict_values,
    value_and_grad,
)
from .jets import JetArray, coordinate_jets
from .tape import Var

__all__ = [
    "activations", "jets", "tape",
    "Jet2", "ParamGradient", "DerivativeReport", "JetArray", "Var",
    "eval_jet2", "grad_params", "value_and_grad", "check_derivatives",
    "jet_batch", "predict_jets", "predict_values", "coordinate_jets",
]
