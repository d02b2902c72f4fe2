"""Registry of elementwise activations with derivative rules up to third order.

Third derivatives never appear in forward evaluation; they are needed when
backpropagating parameter gradients through a hessian-diagonal channel.
relu/leaky_relu take second and third derivative 0 everywhere, including the
kink (subgradient convention).
"""

from __future__ import annotations

import numpy as np

from .. import _kernels_numpy as _codes
from .. import backend
from ..errors import UnsupportedPrimitive

# scalar activations usable in any layer
CODES: dict[str, int] = {
    "linear": _codes.LINEAR,
    "sin": _codes.SIN,
    "cos": _codes.COS,
    "tanh": _codes.TANH,
    "enhanced_tanh": _codes.ENHANCED_TANH,
    "sigmoid": _codes.SIGMOID,
    "exp": _codes.EXP,
    "gelu": _codes.GELU,
    "relu": _codes.RELU,
    "leaky_relu": _codes.LEAKY_RELU,
    "elu": _codes.ELU,
}

# structural first-layer mapping z -> [cos(Wz); sin(Wz)]; has no scalar rule
FOURIER_PAIR = "fourier_pair"

SCALAR_KINDS = tuple(CODES)
ALL_KINDS = SCALAR_KINDS + (FOURIER_PAIR,)

# kinds whose derivatives are discontinuous somewhere (finite-difference
# checks must keep probe points away from the kink)
KINKED = ("relu", "leaky_relu", "elu")


def code_of(name: str) -> int:
    try:
        return CODES[name]
    except KeyError:
        raise UnsupportedPrimitive(
            f"activation {name!r} is not registered (known: {sorted(ALL_KINDS)})"
        ) from None


def derivative(name: str, x, order: int) -> np.ndarray:
    """Evaluate the activation derivative of the given order (0..3) elementwise."""
    if not 0 <= order <= 3:
        raise ValueError("derivative order must be in 0..3")
    return backend.act_eval(code_of(name), np.asarray(x, dtype=np.float64), order)
